//! Time integration and the fixed-point reformulation of steadiness.
//!
//! A steady state of `u' = f(u)` is a fixed point of the time-`T` flow map
//! `Phi_T`, and — the detail everything downstream leans on — it is an
//! *exact* fixed point of both integrators here, not an O(dt^p) one: every
//! RK stage and every trapezoid stage equation evaluates `f` at the steady
//! state itself, where it vanishes. So the residual `u - Phi_T(u)` has the
//! same zeros as `f`, while its Jacobian `I - exp(T f'(u))` squeezes the
//! stiff part of the spectrum into a cluster near 1 that GMRES dispatches
//! in a single iteration.

use crate::error::SolverError;
use crate::linalg::{self, all_finite, axpy, norm, scaled, Tridiagonal};
use crate::newton::NonlinearSystem;

/// Right-hand side `f(u, lambda)` of an autonomous ODE system, typically a
/// spatial discretization of a PDE. `lambda` is the continuation
/// parameter; problems without one ignore it.
pub trait DynamicalProblem {
    fn dim(&self) -> usize;

    fn rhs(&self, u: &[f64], lambda: f64) -> Vec<f64>;

    /// Tridiagonal Jacobian of `rhs` when the problem has one; the
    /// implicit integrator and the exact spectral route need it.
    fn rhs_jacobian(&self, u: &[f64], lambda: f64) -> Option<Tridiagonal> {
        let _ = (u, lambda);
        None
    }
}

/// Which integrator advances the state.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StepMethod {
    Rk4,
    ImplicitTrapezoid,
}

/// A fixed-horizon integration: method, horizon `T`, nominal step `dt`,
/// and the stage tolerance for implicit steps.
#[derive(Debug, Clone, PartialEq)]
pub struct StepperConfig {
    pub method: StepMethod,
    pub horizon: f64,
    pub dt: f64,
    pub newton_tol: f64,
}

impl StepperConfig {
    pub fn rk4(horizon: f64, dt: f64) -> Self {
        StepperConfig {
            method: StepMethod::Rk4,
            horizon,
            dt,
            newton_tol: 1e-15,
        }
    }

    pub fn implicit_trapezoid(horizon: f64, dt: f64) -> Self {
        StepperConfig {
            method: StepMethod::ImplicitTrapezoid,
            horizon,
            dt,
            newton_tol: 1e-15,
        }
    }

    pub fn validate(&self) -> Result<(), SolverError> {
        if !(self.horizon > 0.0 && self.horizon.is_finite()) {
            return Err(SolverError::InvalidInput(format!(
                "integration horizon must be positive, got {}",
                self.horizon
            )));
        }
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return Err(SolverError::InvalidInput(format!(
                "time step must be positive, got {}",
                self.dt
            )));
        }
        if !(self.newton_tol > 0.0) {
            return Err(SolverError::InvalidInput(format!(
                "stage tolerance must be positive, got {}",
                self.newton_tol
            )));
        }
        Ok(())
    }
}

/// Number of equal steps covering `horizon` with step at most `dt`: the
/// ceiling of `horizon / dt`, forgiving one part in 10^9 of roundoff so a
/// horizon meant as an exact multiple of `dt` is not charged an extra
/// step.
#[must_use]
pub fn step_count(horizon: f64, dt: f64) -> usize {
    let ratio = horizon / dt;
    ((ratio - 1e-9 * ratio.max(1.0)).ceil()).max(1.0) as usize
}

/// Classical fourth-order Runge-Kutta over the configured horizon.
///
/// The horizon is covered by `step_count` equal steps. A non-finite state
/// aborts with the step at which it appeared — with a fixed step this
/// means the problem is stiffer than `dt` allows.
pub fn rk4_integrate<P: DynamicalProblem + ?Sized>(
    prob: &P,
    u0: &[f64],
    lambda: f64,
    cfg: &StepperConfig,
) -> Result<Vec<f64>, SolverError> {
    cfg.validate()?;
    let n = prob.dim();
    if u0.len() != n {
        return Err(SolverError::InvalidInput(format!(
            "rk4: state length {} vs problem dimension {}",
            u0.len(),
            n
        )));
    }
    let steps = step_count(cfg.horizon, cfg.dt);
    let h = cfg.horizon / steps as f64;
    let mut u = u0.to_vec();
    for step in 1..=steps {
        let k1 = prob.rhs(&u, lambda);
        let mut stage = u.clone();
        axpy(0.5 * h, &k1, &mut stage);
        let k2 = prob.rhs(&stage, lambda);
        stage.copy_from_slice(&u);
        axpy(0.5 * h, &k2, &mut stage);
        let k3 = prob.rhs(&stage, lambda);
        stage.copy_from_slice(&u);
        axpy(h, &k3, &mut stage);
        let k4 = prob.rhs(&stage, lambda);
        for i in 0..n {
            u[i] += h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
        }
        if !all_finite(&u) {
            return Err(SolverError::NonFinite(format!(
                "rk4 state after step {step} of {steps}"
            )));
        }
    }
    Ok(u)
}

const STAGE_NEWTON_MAX: usize = 20;
const STAGE_HALVINGS_MAX: usize = 20;

/// One trapezoid step `x = u + (h/2)(f(u) + f(x))`, solved by Newton with
/// tridiagonal linear algebra.
fn trapezoid_step<P: DynamicalProblem + ?Sized>(
    prob: &P,
    u: &[f64],
    lambda: f64,
    h: f64,
    tol: f64,
) -> Result<Vec<f64>, SolverError> {
    let f_u = prob.rhs(u, lambda);
    let mut x = u.to_vec();
    axpy(h, &f_u, &mut x);
    // The stage residual is evaluated to roundoff in the terms it sums, so
    // the tolerance scales with the state and the step content. What that
    // roundoff amplifies inside `rhs` (stiff terms cancel against each
    // other before summing to something small) is not knowable here, so a
    // residual that has stopped contracting while already far below the
    // dynamics is accepted as solved to working precision.
    let scale = 1.0 + norm(u) + h * norm(&f_u);
    let mut prev = f64::INFINITY;
    for _ in 0..STAGE_NEWTON_MAX {
        let f_x = prob.rhs(&x, lambda);
        let mut g = vec![0.0; x.len()];
        for i in 0..x.len() {
            g[i] = x[i] - u[i] - 0.5 * h * (f_u[i] + f_x[i]);
        }
        let gnorm = norm(&g);
        if gnorm <= tol * scale {
            return Ok(x);
        }
        if !gnorm.is_finite() {
            break;
        }
        if gnorm >= 0.25 * prev && gnorm <= 1e-9 * scale {
            return Ok(x);
        }
        prev = gnorm;
        let jac = prob.rhs_jacobian(&x, lambda).ok_or_else(|| {
            SolverError::InvalidInput(
                "implicit trapezoid needs a tridiagonal Jacobian from the problem".into(),
            )
        })?;
        let m = Tridiagonal::new(
            scaled(&jac.sub, -0.5 * h),
            jac.diag.iter().map(|d| 1.0 - 0.5 * h * d).collect(),
            scaled(&jac.sup, -0.5 * h),
        )?;
        let delta = linalg::tridiag_solve(&m, &scaled(&g, -1.0))?;
        axpy(1.0, &delta, &mut x);
    }
    Err(SolverError::no_convergence(
        "trapezoid stage",
        format!("step size {h:.3e}"),
    ))
}

/// Implicit trapezoid rule over the configured horizon.
///
/// Marches with steps of at most `dt`; when a stage iteration fails to
/// converge the step is retried at half the size (the next step goes back
/// to `dt`), up to [`STAGE_HALVINGS_MAX`] times before giving up.
pub fn implicit_trapezoid_integrate<P: DynamicalProblem + ?Sized>(
    prob: &P,
    u0: &[f64],
    lambda: f64,
    cfg: &StepperConfig,
) -> Result<Vec<f64>, SolverError> {
    cfg.validate()?;
    let n = prob.dim();
    if u0.len() != n {
        return Err(SolverError::InvalidInput(format!(
            "implicit trapezoid: state length {} vs problem dimension {}",
            u0.len(),
            n
        )));
    }
    let mut u = u0.to_vec();
    let mut t = 0.0;
    while cfg.horizon - t > 1e-12 * cfg.horizon {
        let mut h = cfg.dt.min(cfg.horizon - t);
        let mut halvings = 0;
        loop {
            match trapezoid_step(prob, &u, lambda, h, cfg.newton_tol) {
                Ok(next) => {
                    if !all_finite(&next) {
                        return Err(SolverError::NonFinite(format!(
                            "trapezoid state at t = {t:.6e}"
                        )));
                    }
                    u = next;
                    t += h;
                    break;
                }
                Err(err @ SolverError::NoConvergence { .. }) => {
                    if halvings == STAGE_HALVINGS_MAX {
                        return Err(err);
                    }
                    halvings += 1;
                    h *= 0.5;
                }
                Err(other) => return Err(other),
            }
        }
    }
    Ok(u)
}

/// Advances `u` by the horizon with the configured integrator.
pub fn flow_map<P: DynamicalProblem + ?Sized>(
    prob: &P,
    u: &[f64],
    lambda: f64,
    cfg: &StepperConfig,
) -> Result<Vec<f64>, SolverError> {
    match cfg.method {
        StepMethod::Rk4 => rk4_integrate(prob, u, lambda, cfg),
        StepMethod::ImplicitTrapezoid => implicit_trapezoid_integrate(prob, u, lambda, cfg),
    }
}

/// The steady-state residual `F(u) = u - Phi_T(u)`.
pub fn fixed_point_residual<P: DynamicalProblem + ?Sized>(
    prob: &P,
    u: &[f64],
    lambda: f64,
    cfg: &StepperConfig,
) -> Result<Vec<f64>, SolverError> {
    let phi = flow_map(prob, u, lambda, cfg)?;
    Ok(linalg::sub(u, &phi))
}

/// [`NonlinearSystem`] view of the fixed-point residual at a frozen
/// parameter value, ready for the Newton solver.
pub struct FixedPointSystem<'a, P: ?Sized> {
    prob: &'a P,
    lambda: f64,
    cfg: StepperConfig,
}

impl<'a, P: DynamicalProblem + ?Sized> FixedPointSystem<'a, P> {
    pub fn new(prob: &'a P, lambda: f64, cfg: StepperConfig) -> Self {
        FixedPointSystem { prob, lambda, cfg }
    }

    pub fn config(&self) -> &StepperConfig {
        &self.cfg
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }
}

impl<P: DynamicalProblem + ?Sized> NonlinearSystem for FixedPointSystem<'_, P> {
    fn dim(&self) -> usize {
        self.prob.dim()
    }

    fn residual(&self, u: &[f64]) -> Result<Vec<f64>, SolverError> {
        fixed_point_residual(self.prob, u, self.lambda, &self.cfg)
    }
}
