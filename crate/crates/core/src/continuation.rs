//! Pseudo-arclength continuation of solution branches `F(u, lambda) = 0`.
//!
//! The branch is parameterized by arclength `s` instead of `lambda`, so
//! folds — where the branch turns back in `lambda` and natural stepping
//! dies — are ordinary points. Each step predicts along a secant tangent
//! and corrects with the same matrix-free Newton-GMRES used everywhere
//! else, applied to the system augmented with one arclength constraint
//! row. The augmented Jacobian stays nonsingular through the fold, and its
//! spectrum gains at most one stray pair, so the inner solves cost at most
//! a couple of extra iterations compared to a stand-alone solve.

use crate::error::SolverError;
use crate::linalg::{self, axpy, dot};
use crate::newton::{newton_gmres, NewtonConfig, NewtonOutcome, NonlinearSystem};
use crate::timestepper::{fixed_point_residual, DynamicalProblem, StepperConfig};

/// A residual family `F(u, lambda)` over a scalar parameter.
pub trait ParameterizedSystem {
    fn dim(&self) -> usize;
    fn residual(&self, u: &[f64], lambda: f64) -> Result<Vec<f64>, SolverError>;
}

/// [`NonlinearSystem`] view of a family at a frozen parameter.
pub struct FixedLambda<'a, F: ?Sized> {
    family: &'a F,
    lambda: f64,
}

impl<'a, F: ParameterizedSystem + ?Sized> FixedLambda<'a, F> {
    pub fn new(family: &'a F, lambda: f64) -> Self {
        FixedLambda { family, lambda }
    }
}

impl<F: ParameterizedSystem + ?Sized> NonlinearSystem for FixedLambda<'_, F> {
    fn dim(&self) -> usize {
        self.family.dim()
    }

    fn residual(&self, u: &[f64]) -> Result<Vec<f64>, SolverError> {
        self.family.residual(u, self.lambda)
    }
}

/// Fixed-point residual of a time-stepper as a parameterized family: the
/// bridge from [`DynamicalProblem`] to continuation.
pub struct FixedPointFamily<'a, P: ?Sized> {
    pub prob: &'a P,
    pub cfg: StepperConfig,
}

impl<P: DynamicalProblem + ?Sized> ParameterizedSystem for FixedPointFamily<'_, P> {
    fn dim(&self) -> usize {
        self.prob.dim()
    }

    fn residual(&self, u: &[f64], lambda: f64) -> Result<Vec<f64>, SolverError> {
        fixed_point_residual(self.prob, u, lambda, &self.cfg)
    }
}

/// Condensed account of one corrector solve.
#[derive(Debug, Clone, Default)]
pub struct SolveStats {
    pub converged: bool,
    pub outer_steps: usize,
    /// GMRES iterations per Newton step (entry 0 is the zero placeholder
    /// for the initial iterate).
    pub inner_iterations: Vec<usize>,
    pub total_fevals: usize,
    pub final_f_norm: f64,
}

impl From<&NewtonOutcome> for SolveStats {
    fn from(out: &NewtonOutcome) -> Self {
        SolveStats {
            converged: out.converged,
            outer_steps: out.f_norms.len() - 1,
            inner_iterations: out.inner_iterations.clone(),
            total_fevals: *out.cumulative_fevals.last().unwrap_or(&0),
            final_f_norm: *out.f_norms.last().unwrap_or(&f64::NAN),
        }
    }
}

/// One accepted point on a branch.
#[derive(Debug, Clone)]
pub struct BranchPoint {
    pub u: Vec<f64>,
    pub lambda: f64,
    /// Accumulated arclength along the branch.
    pub s: f64,
    /// Unit tangent, state part.
    pub tangent_u: Vec<f64>,
    /// Unit tangent, parameter part; its sign changes exactly at folds.
    pub tangent_lambda: f64,
    /// Corrector statistics (zeros for the two seed points, which arrive
    /// already solved).
    pub stats: SolveStats,
}

/// Stepping policy for [`continue_branch`].
#[derive(Debug, Clone)]
pub struct BranchConfig {
    /// Arclength step between consecutive points.
    pub ds: f64,
    /// Number of points to append after the two seeds.
    pub n_steps: usize,
    /// Step halvings to try when a corrector fails before truncating.
    pub max_retries: usize,
    /// `+1.0` walks from seed0 towards seed1 and onward, `-1.0` walks the
    /// opposite way.
    pub direction: f64,
}

impl Default for BranchConfig {
    fn default() -> Self {
        BranchConfig {
            ds: 0.01,
            n_steps: 50,
            max_retries: 8,
            direction: 1.0,
        }
    }
}

impl BranchConfig {
    pub fn validate(&self) -> Result<(), SolverError> {
        if !(self.ds > 0.0 && self.ds.is_finite()) {
            return Err(SolverError::InvalidInput(format!(
                "continuation step must be positive, got {}",
                self.ds
            )));
        }
        if self.n_steps == 0 {
            return Err(SolverError::InvalidInput(
                "continuation needs at least one step".into(),
            ));
        }
        if self.direction != 1.0 && self.direction != -1.0 {
            return Err(SolverError::InvalidInput(format!(
                "continuation direction must be +1 or -1, got {}",
                self.direction
            )));
        }
        Ok(())
    }
}

/// A computed branch. `truncated` is set when stepping stopped early
/// because a corrector kept failing even with halved steps.
#[derive(Debug, Clone)]
pub struct Branch {
    pub points: Vec<BranchPoint>,
    pub truncated: bool,
}

/// A solved point handed to [`continue_branch`]: state and parameter.
pub type Seed = (Vec<f64>, f64);

/// A detected fold: the branch turned around in `lambda`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Fold {
    /// Index of the first point past the turn.
    pub index: usize,
    /// Parameter value at the turn, interpolated from the tangents.
    pub lambda: f64,
}

/// Unit secant tangent from `prev` to `curr` in `(u, lambda)` space.
///
/// When `reference` (a previous tangent) is given, the sign is chosen so
/// the new tangent continues in the same direction along the branch.
pub fn secant_tangent(
    prev: (&[f64], f64),
    curr: (&[f64], f64),
    reference: Option<(&[f64], f64)>,
) -> Result<(Vec<f64>, f64), SolverError> {
    let mut du = linalg::sub(curr.0, prev.0);
    let mut dl = curr.1 - prev.1;
    let len = (dot(&du, &du) + dl * dl).sqrt();
    if len == 0.0 {
        return Err(SolverError::InvalidInput(
            "secant tangent of coincident points".into(),
        ));
    }
    for v in &mut du {
        *v /= len;
    }
    dl /= len;
    if let Some((ru, rl)) = reference {
        if dot(&du, ru) + dl * rl < 0.0 {
            for v in &mut du {
                *v = -*v;
            }
            dl = -dl;
        }
    }
    Ok((du, dl))
}

/// The augmented residual: `F(u, lambda)` stacked with the arclength
/// constraint `t_u . (u - u0) + t_lambda (lambda - lambda0) - ds`.
pub fn augmented_residual<F: ParameterizedSystem + ?Sized>(
    family: &F,
    u: &[f64],
    lambda: f64,
    base: &BranchPoint,
    ds: f64,
) -> Result<Vec<f64>, SolverError> {
    let mut r = family.residual(u, lambda)?;
    let du = linalg::sub(u, &base.u);
    let arc = dot(&base.tangent_u, &du) + base.tangent_lambda * (lambda - base.lambda) - ds;
    r.push(arc);
    Ok(r)
}

/// [`NonlinearSystem`] over the stacked unknown `x = (u, lambda)`.
pub struct AugmentedSystem<'a, F: ?Sized> {
    pub family: &'a F,
    pub base: &'a BranchPoint,
    pub ds: f64,
}

impl<F: ParameterizedSystem + ?Sized> NonlinearSystem for AugmentedSystem<'_, F> {
    fn dim(&self) -> usize {
        self.family.dim() + 1
    }

    fn residual(&self, x: &[f64]) -> Result<Vec<f64>, SolverError> {
        let n = self.family.dim();
        augmented_residual(self.family, &x[..n], x[n], self.base, self.ds)
    }
}

/// Follows a branch from two already-solved seed points.
///
/// Each step predicts `(u, lambda) + ds * tangent` and corrects with
/// [`newton_gmres`] on the augmented system. A failing corrector retries
/// at half the step (the next step resumes at full `ds`); when
/// `max_retries` halvings all fail the branch is returned truncated
/// rather than erroring, since everything computed so far is valid.
pub fn continue_branch<F: ParameterizedSystem + ?Sized>(
    family: &F,
    seed0: Seed,
    seed1: Seed,
    cfg: &BranchConfig,
    solver: &NewtonConfig,
) -> Result<Branch, SolverError> {
    cfg.validate()?;
    let n = family.dim();
    if seed0.0.len() != n || seed1.0.len() != n {
        return Err(SolverError::InvalidInput(format!(
            "continuation seeds must have length {n}"
        )));
    }
    let (mut t_u, mut t_l) = secant_tangent((&seed0.0, seed0.1), (&seed1.0, seed1.1), None)?;
    if cfg.direction < 0.0 {
        for v in &mut t_u {
            *v = -*v;
        }
        t_l = -t_l;
    }
    let gap = {
        let du = linalg::sub(&seed1.0, &seed0.0);
        (dot(&du, &du) + (seed1.1 - seed0.1).powi(2)).sqrt()
    };

    let mut points = vec![
        BranchPoint {
            u: seed0.0,
            lambda: seed0.1,
            s: 0.0,
            tangent_u: t_u.clone(),
            tangent_lambda: t_l,
            stats: SolveStats {
                converged: true,
                ..SolveStats::default()
            },
        },
        BranchPoint {
            u: seed1.0,
            lambda: seed1.1,
            s: gap,
            tangent_u: t_u,
            tangent_lambda: t_l,
            stats: SolveStats {
                converged: true,
                ..SolveStats::default()
            },
        },
    ];
    let mut truncated = false;

    for _ in 0..cfg.n_steps {
        let base = points.last().expect("seeded above").clone();
        let mut ds = cfg.ds;
        let mut accepted: Option<(NewtonOutcome, f64)> = None;
        for _ in 0..=cfg.max_retries {
            let mut x0 = base.u.clone();
            axpy(ds, &base.tangent_u, &mut x0);
            x0.push(base.lambda + ds * base.tangent_lambda);
            let aug = AugmentedSystem {
                family,
                base: &base,
                ds,
            };
            let out = newton_gmres(&aug, &x0, solver)?;
            if out.converged {
                accepted = Some((out, ds));
                break;
            }
            ds *= 0.5;
        }
        let Some((out, ds_used)) = accepted else {
            truncated = true;
            break;
        };
        let mut u_new = out.solution.clone();
        let lambda_new = u_new.pop().expect("augmented state is nonempty");
        let (tu_new, tl_new) = secant_tangent(
            (&base.u, base.lambda),
            (&u_new, lambda_new),
            Some((&base.tangent_u, base.tangent_lambda)),
        )?;
        points.push(BranchPoint {
            u: u_new,
            lambda: lambda_new,
            s: base.s + ds_used,
            tangent_u: tu_new,
            tangent_lambda: tl_new,
            stats: SolveStats::from(&out),
        });
    }

    Ok(Branch { points, truncated })
}

/// Scans a branch for sign changes of the tangent's parameter component.
///
/// Each fold is located by linear interpolation of `tangent_lambda`
/// between the bracketing points.
#[must_use]
pub fn detect_folds(branch: &Branch) -> Vec<Fold> {
    let mut folds = Vec::new();
    for (i, pair) in branch.points.windows(2).enumerate() {
        let a = pair[0].tangent_lambda;
        let b = pair[1].tangent_lambda;
        if a * b < 0.0 {
            let frac = a / (a - b);
            let lambda = pair[0].lambda + frac * (pair[1].lambda - pair[0].lambda);
            folds.push(Fold {
                index: i + 1,
                lambda,
            });
        }
    }
    folds
}

/// Bootstraps the two seed points for [`continue_branch`] with natural
/// (fixed-parameter) solves at `lambda0` and `lambda0 + dlambda`, the
/// second seeded from the first.
pub fn natural_seeds<F: ParameterizedSystem + ?Sized>(
    family: &F,
    guess: &[f64],
    lambda0: f64,
    dlambda: f64,
    solver: &NewtonConfig,
) -> Result<(Seed, Seed), SolverError> {
    if dlambda == 0.0 {
        return Err(SolverError::InvalidInput(
            "natural seeds need a nonzero parameter offset".into(),
        ));
    }
    let first = newton_gmres(&FixedLambda::new(family, lambda0), guess, solver)?;
    if !first.converged {
        return Err(SolverError::no_convergence(
            "natural seed solve",
            format!("lambda = {lambda0}"),
        ));
    }
    let lambda1 = lambda0 + dlambda;
    let second = newton_gmres(&FixedLambda::new(family, lambda1), &first.solution, solver)?;
    if !second.converged {
        return Err(SolverError::no_convergence(
            "natural seed solve",
            format!("lambda = {lambda1}"),
        ));
    }
    Ok(((first.solution, lambda0), (second.solution, lambda1)))
}
