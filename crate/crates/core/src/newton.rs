//! Inexact Newton iteration whose linear solves are matrix-free GMRES on
//! finite-difference directional derivatives. The only thing a problem
//! has to provide is its residual.
//!
//! Function evaluations are the unit of cost everywhere in this crate —
//! one evaluation means one integration of the underlying dynamics when
//! the residual wraps a time-stepper — so the outcome records a full
//! per-step account of them alongside the residual norms and inner
//! iteration counts.

use std::cell::Cell;

use crate::error::SolverError;
use crate::krylov::{gmres, FnOperator, Termination};
use crate::linalg::{self, all_finite, axpy, norm, scaled};

/// A nonlinear residual `F: R^n -> R^n` whose zeros are wanted.
pub trait NonlinearSystem {
    fn dim(&self) -> usize;
    fn residual(&self, u: &[f64]) -> Result<Vec<f64>, SolverError>;
}

/// Wraps a closure as a [`NonlinearSystem`].
pub struct FnSystem<F>
where
    F: Fn(&[f64]) -> Result<Vec<f64>, SolverError>,
{
    dim: usize,
    f: F,
}

impl<F> FnSystem<F>
where
    F: Fn(&[f64]) -> Result<Vec<f64>, SolverError>,
{
    pub fn new(dim: usize, f: F) -> Self {
        FnSystem { dim, f }
    }
}

impl<F> NonlinearSystem for FnSystem<F>
where
    F: Fn(&[f64]) -> Result<Vec<f64>, SolverError>,
{
    fn dim(&self) -> usize {
        self.dim
    }

    fn residual(&self, u: &[f64]) -> Result<Vec<f64>, SolverError> {
        (self.f)(u)
    }
}

/// Forward-difference approximation of the Jacobian-vector product
/// `F'(u) v`, reusing an already-computed `F(u)`.
///
/// The step is `sqrt(machine eps) * (1 + ‖u‖) / ‖v‖`, which balances
/// truncation against roundoff for residuals evaluated to full precision.
/// A zero direction short-circuits to zero without evaluating anything.
pub fn dirder(
    sys: &dyn NonlinearSystem,
    u: &[f64],
    v: &[f64],
    f_of_u: &[f64],
) -> Result<Vec<f64>, SolverError> {
    if linalg::norm_inf(v) == 0.0 {
        return Ok(vec![0.0; u.len()]);
    }
    let h = f64::EPSILON.sqrt() * (1.0 + norm(u)) / norm(v);
    let mut probe = u.to_vec();
    axpy(h, v, &mut probe);
    let f1 = sys.residual(&probe)?;
    if !all_finite(&f1) {
        return Err(SolverError::NonFinite(format!(
            "directional derivative probe with step {h:.3e}"
        )));
    }
    Ok(f1.iter().zip(f_of_u).map(|(a, b)| (a - b) / h).collect())
}

/// How tightly each inner solve must match the Newton equation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Forcing {
    /// Fixed relative tolerance for every inner solve.
    Constant { eta: f64 },
    /// Adaptive choice `eta_k = gamma (‖F_k‖ / ‖F_{k-1}‖)^2`, loose far
    /// from the solution and tightening quadratically near it, with a
    /// safeguard that keeps eta from collapsing right after a loose step.
    EisenstatWalker {
        gamma: f64,
        eta_max: f64,
        eta_floor: f64,
    },
}

impl Default for Forcing {
    fn default() -> Self {
        Forcing::EisenstatWalker {
            gamma: 0.9,
            eta_max: 0.9,
            eta_floor: 1e-10,
        }
    }
}

/// Forcing term for the next inner solve, given the residual norms before
/// and after the step just taken and the tolerance that step used.
#[must_use]
pub fn forcing_term(forcing: &Forcing, fnorm: f64, fnorm_prev: f64, eta_prev: f64) -> f64 {
    match *forcing {
        Forcing::Constant { eta } => eta,
        Forcing::EisenstatWalker {
            gamma,
            eta_max,
            eta_floor,
        } => {
            let mut eta = if fnorm_prev > 0.0 {
                gamma * (fnorm / fnorm_prev).powi(2)
            } else {
                eta_max
            };
            let carry = gamma * eta_prev * eta_prev;
            if carry > 0.1 {
                eta = eta.max(carry);
            }
            eta.min(eta_max).max(eta_floor)
        }
    }
}

/// Settings for [`newton_gmres`].
#[derive(Debug, Clone)]
pub struct NewtonConfig {
    /// Absolute residual tolerance.
    pub atol: f64,
    /// Relative tolerance against the initial residual norm.
    pub rtol: f64,
    pub forcing: Forcing,
    /// Newton step budget.
    pub max_outer: usize,
    /// GMRES iteration budget per step.
    pub max_inner: usize,
    /// Halve a step (up to 10 times) while it increases the residual norm.
    pub damping: bool,
}

impl Default for NewtonConfig {
    fn default() -> Self {
        NewtonConfig {
            atol: 1e-12,
            rtol: 1e-12,
            forcing: Forcing::default(),
            max_outer: 40,
            max_inner: 40,
            damping: false,
        }
    }
}

/// A Newton run. The three histories are aligned: entry `k` describes the
/// iterate after `k` steps, with entry 0 the starting point (no inner
/// iterations yet, one function evaluation for the initial residual).
#[derive(Debug, Clone)]
pub struct NewtonOutcome {
    pub solution: Vec<f64>,
    pub converged: bool,
    /// `‖F‖` at each iterate.
    pub f_norms: Vec<f64>,
    /// GMRES iterations spent in each step.
    pub inner_iterations: Vec<usize>,
    /// Running total of residual evaluations after each step.
    pub cumulative_fevals: Vec<usize>,
    /// How each step's inner solve stopped (length = number of steps).
    pub inner_terminations: Vec<Termination>,
}

struct CountingSystem<'a> {
    sys: &'a dyn NonlinearSystem,
    count: Cell<usize>,
}

impl NonlinearSystem for CountingSystem<'_> {
    fn dim(&self) -> usize {
        self.sys.dim()
    }

    fn residual(&self, u: &[f64]) -> Result<Vec<f64>, SolverError> {
        self.count.set(self.count.get() + 1);
        self.sys.residual(u)
    }
}

const MAX_HALVINGS: usize = 10;

/// Solves `F(u) = 0` by inexact Newton with GMRES inner solves.
///
/// Convergence means `‖F‖ <= atol + rtol * ‖F(u0)‖`. Running out of outer
/// steps is not an error — the outcome reports `converged: false` and the
/// caller decides; errors are reserved for evaluations that fail outright.
/// An inner solve that stops on its budget or on a breakdown still yields
/// the best step GMRES found, and the step is taken anyway, damped if
/// requested.
pub fn newton_gmres(
    sys: &dyn NonlinearSystem,
    u0: &[f64],
    cfg: &NewtonConfig,
) -> Result<NewtonOutcome, SolverError> {
    let n = sys.dim();
    if u0.len() != n {
        return Err(SolverError::InvalidInput(format!(
            "newton_gmres: guess length {} vs system dimension {}",
            u0.len(),
            n
        )));
    }
    if cfg.atol < 0.0 || cfg.rtol < 0.0 || cfg.max_outer == 0 || cfg.max_inner == 0 {
        return Err(SolverError::InvalidInput(
            "newton_gmres: tolerances must be nonnegative and budgets positive".into(),
        ));
    }

    let counting = CountingSystem {
        sys,
        count: Cell::new(0),
    };
    let mut u = u0.to_vec();
    let mut f = counting.residual(&u)?;
    if !all_finite(&f) {
        return Err(SolverError::NonFinite("residual at initial guess".into()));
    }
    let mut fnorm = norm(&f);
    let tol = cfg.atol + cfg.rtol * fnorm;

    let mut f_norms = vec![fnorm];
    let mut inner_iterations = vec![0];
    let mut cumulative_fevals = vec![counting.count.get()];
    let mut inner_terminations = Vec::new();

    let mut eta = match cfg.forcing {
        Forcing::Constant { eta } => eta,
        Forcing::EisenstatWalker { eta_max, .. } => eta_max,
    };

    for _ in 0..cfg.max_outer {
        if fnorm <= tol {
            break;
        }

        let rhs = scaled(&f, -1.0);
        let out = {
            let op = FnOperator::new(n, |v: &[f64]| dirder(&counting, &u, v, &f));
            gmres(&op, &rhs, &vec![0.0; n], eta, cfg.max_inner)?
        };

        // Try the full step; under damping, halve while the residual norm
        // refuses to decrease, and fall back to the best trial seen.
        let mut step_scale = 1.0;
        let mut best: Option<(Vec<f64>, Vec<f64>, f64)> = None;
        for attempt in 0..=MAX_HALVINGS {
            let mut u_trial = u.clone();
            axpy(step_scale, &out.solution, &mut u_trial);
            let f_trial = counting.residual(&u_trial)?;
            let fnorm_trial = if all_finite(&f_trial) {
                norm(&f_trial)
            } else {
                f64::INFINITY
            };
            if best.as_ref().is_none_or(|(_, _, b)| fnorm_trial < *b) {
                best = Some((u_trial, f_trial, fnorm_trial));
            }
            if !cfg.damping || fnorm_trial < fnorm || attempt == MAX_HALVINGS {
                break;
            }
            step_scale /= 2.0;
        }
        let (u_new, f_new, fnorm_new) = best.expect("at least one step trial is always evaluated");
        if !fnorm_new.is_finite() {
            return Err(SolverError::NonFinite("residual after Newton step".into()));
        }

        let fnorm_prev = fnorm;
        u = u_new;
        f = f_new;
        fnorm = fnorm_new;

        f_norms.push(fnorm);
        inner_iterations.push(out.iterations);
        cumulative_fevals.push(counting.count.get());
        inner_terminations.push(out.terminated_by);

        eta = forcing_term(&cfg.forcing, fnorm, fnorm_prev, eta);
    }

    Ok(NewtonOutcome {
        solution: u,
        converged: fnorm <= tol,
        f_norms,
        inner_iterations,
        cumulative_fevals,
        inner_terminations,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{norm, sub, DenseMatrix};

    struct Quadratic;

    impl NonlinearSystem for Quadratic {
        fn dim(&self) -> usize {
            1
        }

        fn residual(&self, u: &[f64]) -> Result<Vec<f64>, SolverError> {
            Ok(vec![u[0] * u[0] - 4.0])
        }
    }

    #[test]
    fn dirder_matches_analytic_jacobian() {
        let sys = FnSystem::new(2, |u: &[f64]| Ok(vec![u[0] * u[0], u[1] * u[1]]));
        let u = [1.0, 2.0];
        let f0 = sys.residual(&u).unwrap();
        let jv = dirder(&sys, &u, &[1.0, 0.0], &f0).unwrap();
        assert!((jv[0] - 2.0).abs() < 1e-6);
        assert!(jv[1].abs() < 1e-6);
    }

    #[test]
    fn dirder_zero_direction_costs_nothing() {
        let calls = std::cell::Cell::new(0usize);
        let sys = FnSystem::new(2, |u: &[f64]| {
            calls.set(calls.get() + 1);
            Ok(u.to_vec())
        });
        let jv = dirder(&sys, &[1.0, 1.0], &[0.0, 0.0], &[1.0, 1.0]).unwrap();
        assert_eq!(jv, vec![0.0, 0.0]);
        assert_eq!(calls.get(), 0);
    }

    #[test]
    fn forcing_constant_ignores_progress() {
        let f = Forcing::Constant { eta: 1e-3 };
        assert_eq!(forcing_term(&f, 1.0, 2.0, 0.5), 1e-3);
        assert_eq!(forcing_term(&f, 2.0, 1.0, 0.5), 1e-3);
    }

    #[test]
    fn forcing_eisenstat_walker_tracks_quadratic_progress() {
        let f = Forcing::EisenstatWalker {
            gamma: 0.9,
            eta_max: 0.9,
            eta_floor: 1e-10,
        };
        let eta = forcing_term(&f, 0.1, 1.0, 1e-4);
        assert!((eta - 0.009).abs() < 1e-15);
    }

    #[test]
    fn forcing_eisenstat_walker_caps_and_floors() {
        let f = Forcing::EisenstatWalker {
            gamma: 0.9,
            eta_max: 0.9,
            eta_floor: 1e-10,
        };
        assert_eq!(forcing_term(&f, 5.0, 1.0, 1e-4), 0.9);
        assert_eq!(forcing_term(&f, 1e-9, 1.0, 1e-4), 1e-10);
    }

    #[test]
    fn forcing_safeguard_prevents_premature_tightening() {
        let f = Forcing::EisenstatWalker {
            gamma: 0.9,
            eta_max: 0.9,
            eta_floor: 1e-10,
        };
        // Progress says 0.9e-4 but the previous eta of 0.8 was too loose
        // to trust that: the safeguard holds eta at 0.9 * 0.8^2.
        let eta = forcing_term(&f, 0.01, 1.0, 0.8);
        assert!((eta - 0.9 * 0.64).abs() < 1e-15);
    }

    #[test]
    fn newton_solves_scalar_quadratic() {
        let out = newton_gmres(&Quadratic, &[3.0], &NewtonConfig::default()).unwrap();
        assert!(out.converged);
        assert!((out.solution[0] - 2.0).abs() < 1e-10);
        // Residual norms must be strictly decreasing for this monotone
        // problem.
        for w in out.f_norms.windows(2) {
            assert!(w[1] < w[0]);
        }
    }

    #[test]
    fn newton_history_bookkeeping_is_consistent() {
        let out = newton_gmres(&Quadratic, &[3.0], &NewtonConfig::default()).unwrap();
        let steps = out.f_norms.len() - 1;
        assert_eq!(out.inner_iterations.len(), steps + 1);
        assert_eq!(out.cumulative_fevals.len(), steps + 1);
        assert_eq!(out.inner_terminations.len(), steps);
        assert_eq!(out.inner_iterations[0], 0);
        assert_eq!(out.cumulative_fevals[0], 1);
        // No damping kicks in here, so each step costs its inner
        // iterations plus the single acceptance evaluation.
        for k in 1..=steps {
            assert_eq!(
                out.cumulative_fevals[k] - out.cumulative_fevals[k - 1],
                out.inner_iterations[k] + 1
            );
        }
    }

    #[test]
    fn newton_solves_linear_system_in_one_step() {
        use rand::Rng;
        use rand::SeedableRng;
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(5);
        let n = 10;
        let a = DenseMatrix::from_fn(n, n, |i, j| {
            let base = if i == j { 3.0 } else { 0.0 };
            base + 0.5 * rng.gen_range(-1.0..1.0)
        });
        let x_star: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let b = a.matvec(&x_star);
        let sys = FnSystem::new(n, move |u: &[f64]| Ok(sub(&a.matvec(u), &b)));
        let cfg = NewtonConfig {
            forcing: Forcing::Constant { eta: 1e-13 },
            max_inner: n,
            ..NewtonConfig::default()
        };
        let out = newton_gmres(&sys, &vec![0.0; n], &cfg).unwrap();
        assert!(out.converged);
        assert!(norm(&sub(&out.solution, &x_star)) < 1e-9);
        // A linear residual is solved by a single (tight) Newton step, with
        // perhaps one cleanup step for roundoff.
        assert!(out.f_norms.len() <= 3);
    }

    #[test]
    fn damping_rescues_overshooting_step() {
        // Full Newton on atan from u0 = 3 diverges; halving fixes it.
        let sys = FnSystem::new(1, |u: &[f64]| Ok(vec![u[0].atan()]));
        let cfg = NewtonConfig {
            forcing: Forcing::Constant { eta: 1e-10 },
            damping: true,
            ..NewtonConfig::default()
        };
        let out = newton_gmres(&sys, &[3.0], &cfg).unwrap();
        assert!(out.converged);
        assert!(out.solution[0].abs() < 1e-10);
        let steps = out.f_norms.len() - 1;
        let total_inner: usize = out.inner_iterations.iter().sum();
        let fevals = *out.cumulative_fevals.last().unwrap();
        // At least one halving happened, so the count exceeds the
        // no-damping budget of 1 + inner + 1 per step.
        assert!(fevals > 1 + total_inner + steps);
    }

    #[test]
    fn without_damping_atan_diverges_or_stalls() {
        let sys = FnSystem::new(1, |u: &[f64]| Ok(vec![u[0].atan()]));
        let cfg = NewtonConfig {
            forcing: Forcing::Constant { eta: 1e-10 },
            damping: false,
            max_outer: 8,
            ..NewtonConfig::default()
        };
        // The undamped iteration oscillates with growing amplitude until
        // the probe point overflows the atan's derivative scale; either a
        // NonFinite error or a non-converged outcome is acceptable, but it
        // must not "converge".
        match newton_gmres(&sys, &[3.0], &cfg) {
            Ok(out) => assert!(!out.converged),
            Err(SolverError::NonFinite(_)) => {}
            Err(other) => panic!("unexpected error {other:?}"),
        }
    }

    #[test]
    fn already_converged_guess_takes_no_steps() {
        let out = newton_gmres(&Quadratic, &[2.0], &NewtonConfig::default()).unwrap();
        assert!(out.converged);
        assert_eq!(out.f_norms.len(), 1);
        assert_eq!(*out.cumulative_fevals.last().unwrap(), 1);
    }

    #[test]
    fn budget_exhaustion_reports_not_converged() {
        let cfg = NewtonConfig {
            max_outer: 2,
            ..NewtonConfig::default()
        };
        let sys = FnSystem::new(1, |u: &[f64]| Ok(vec![u[0].exp() - 1e-8]));
        let out = newton_gmres(&sys, &[5.0], &cfg).unwrap();
        assert!(!out.converged);
        assert_eq!(out.f_norms.len(), 3);
    }
}
