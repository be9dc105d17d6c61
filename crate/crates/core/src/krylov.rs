//! Full-memory GMRES for operators that are only available as a
//! matrix-vector routine, plus a checker for the residual-decay bound
//! that makes these solves cheap on time-stepper Jacobians.
//!
//! No restarting: the operators this crate cares about are small compact
//! perturbations of the identity, where GMRES needs a handful of
//! iterations — one per eigenvalue outside the cluster near 1, plus one
//! for the cluster itself — so the basis never grows far.

use crate::error::SolverError;
use crate::linalg::{
    self, all_finite, axpy, mgs_step, norm, scaled, DenseMatrix, GivensLsq, Tridiagonal,
};

/// Something that can apply itself to a vector.
///
/// `apply` is fallible because the interesting operators are built from
/// finite-difference probes of nonlinear residuals, which can leave the
/// model's domain.
pub trait LinearOperator {
    fn dim(&self) -> usize;
    fn apply(&self, v: &[f64]) -> Result<Vec<f64>, SolverError>;
}

impl LinearOperator for DenseMatrix {
    fn dim(&self) -> usize {
        self.rows()
    }

    fn apply(&self, v: &[f64]) -> Result<Vec<f64>, SolverError> {
        Ok(self.matvec(v))
    }
}

impl LinearOperator for Tridiagonal {
    fn dim(&self) -> usize {
        self.order()
    }

    fn apply(&self, v: &[f64]) -> Result<Vec<f64>, SolverError> {
        Ok(self.matvec(v))
    }
}

/// Wraps a closure as a [`LinearOperator`].
pub struct FnOperator<F>
where
    F: Fn(&[f64]) -> Result<Vec<f64>, SolverError>,
{
    dim: usize,
    f: F,
}

impl<F> FnOperator<F>
where
    F: Fn(&[f64]) -> Result<Vec<f64>, SolverError>,
{
    pub fn new(dim: usize, f: F) -> Self {
        FnOperator { dim, f }
    }
}

impl<F> LinearOperator for FnOperator<F>
where
    F: Fn(&[f64]) -> Result<Vec<f64>, SolverError>,
{
    fn dim(&self) -> usize {
        self.dim
    }

    fn apply(&self, v: &[f64]) -> Result<Vec<f64>, SolverError> {
        (self.f)(v)
    }
}

/// Why a GMRES solve stopped.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Termination {
    /// Residual dropped below `eta * ‖r0‖`.
    Tolerance,
    /// The Arnoldi vector vanished: the Krylov space is invariant and the
    /// least-squares iterate is exact in that subspace.
    Breakdown,
    /// Budget exhausted; the returned iterate is the best found.
    MaxIterations,
}

/// A GMRES solve, with the per-iteration residual history that the
/// spectral-cluster analysis feeds on.
#[derive(Debug, Clone)]
pub struct GmresOutcome {
    pub solution: Vec<f64>,
    /// `residual_norms[k]` is `‖b - A x_k‖`; entry 0 is the initial
    /// residual, so the length is always `iterations + 1`.
    pub residual_norms: Vec<f64>,
    pub iterations: usize,
    pub terminated_by: Termination,
    /// Residual norm recomputed from the Arnoldi relation at the returned
    /// iterate, as a cross-check on the Givens recursion.
    pub explicit_residual: f64,
    /// Set when the recomputed residual disagrees with the recursion by
    /// more than `1e-8 * ‖r0‖`, which indicates the basis lost
    /// orthogonality.
    pub residual_mismatch: bool,
}

/// Solves `A x = b` to relative tolerance `eta` with full GMRES.
///
/// Starts from `x0`, runs at most `max_iters` iterations (and never more
/// than the dimension), and records one residual norm per iteration.
/// Modified Gram-Schmidt gets a second sweep whenever a new basis vector
/// loses more than 90% of its norm, and a vanished vector is treated as
/// the lucky breakdown it is.
pub fn gmres(
    op: &dyn LinearOperator,
    b: &[f64],
    x0: &[f64],
    eta: f64,
    max_iters: usize,
) -> Result<GmresOutcome, SolverError> {
    let n = op.dim();
    if b.len() != n || x0.len() != n {
        return Err(SolverError::InvalidInput(format!(
            "gmres: operator dimension {} vs rhs {} and guess {}",
            n,
            b.len(),
            x0.len()
        )));
    }
    if !(eta > 0.0 && eta < 1.0) {
        return Err(SolverError::InvalidInput(format!(
            "gmres: relative tolerance must lie in (0, 1), got {eta}"
        )));
    }
    if !all_finite(b) || !all_finite(x0) {
        return Err(SolverError::NonFinite(
            "gmres right-hand side or guess".into(),
        ));
    }

    let r0 = if x0.iter().all(|&v| v == 0.0) {
        b.to_vec()
    } else {
        let ax0 = op.apply(x0)?;
        linalg::sub(b, &ax0)
    };
    let beta = norm(&r0);
    if beta == 0.0 {
        return Ok(GmresOutcome {
            solution: x0.to_vec(),
            residual_norms: vec![0.0],
            iterations: 0,
            terminated_by: Termination::Tolerance,
            explicit_residual: 0.0,
            residual_mismatch: false,
        });
    }

    let budget = max_iters.min(n).max(1);
    let mut basis: Vec<Vec<f64>> = vec![scaled(&r0, 1.0 / beta)];
    let mut h_cols: Vec<Vec<f64>> = Vec::new();
    let mut lsq = GivensLsq::new(beta);
    let mut residual_norms = vec![beta];
    let mut terminated_by = Termination::MaxIterations;

    for k in 1..=budget {
        let w = op.apply(&basis[k - 1])?;
        if !all_finite(&w) {
            return Err(SolverError::NonFinite(format!(
                "gmres operator output at iteration {k}"
            )));
        }
        let wnorm = norm(&w);
        if wnorm == 0.0 {
            // The operator annihilated this direction outright, so the
            // Krylov space is stuck and the all-zero column would add
            // nothing to the least squares; stop with what the previous
            // columns gave.
            terminated_by = Termination::Breakdown;
            break;
        }
        let step = mgs_step(&w, &basis);
        let breakdown = step.norm <= linalg::LUCKY_BREAKDOWN_REL * wnorm;

        let mut col = step.coeffs.clone();
        col.push(step.norm);
        h_cols.push(col.clone());
        let res = lsq.push_column(col)?;
        residual_norms.push(res);

        if !breakdown {
            basis.push(scaled(&step.remainder, 1.0 / step.norm));
        }

        if res <= eta * beta {
            terminated_by = Termination::Tolerance;
            break;
        }
        if breakdown {
            terminated_by = Termination::Breakdown;
            break;
        }
    }

    let y = lsq.solve()?;
    let mut x = x0.to_vec();
    for (yj, qj) in y.iter().zip(&basis) {
        axpy(*yj, qj, &mut x);
    }

    // Residual via the Arnoldi relation A V_k = V_{k+1} H: the true
    // residual is r0 - V_{k+1} (H y), which costs no extra operator
    // applications but still sees any drift in the basis.
    let k = h_cols.len();
    let mut hy = vec![0.0; k + 1];
    for (j, col) in h_cols.iter().enumerate() {
        for (i, hij) in col.iter().enumerate() {
            hy[i] += hij * y[j];
        }
    }
    let mut r_explicit = r0;
    for (i, q) in basis.iter().enumerate() {
        axpy(-hy[i], q, &mut r_explicit);
    }
    let explicit_residual = norm(&r_explicit);
    let estimated = *residual_norms.last().expect("history is never empty");
    let residual_mismatch = (explicit_residual - estimated).abs() > 1e-8 * beta;

    Ok(GmresOutcome {
        solution: x,
        iterations: residual_norms.len() - 1,
        residual_norms,
        terminated_by,
        explicit_residual,
        residual_mismatch,
    })
}

/// Result of checking a residual history against the low-rank decay bound.
#[derive(Debug, Clone)]
pub struct BoundCheck {
    pub pass: bool,
    /// Largest observed ratio of residual to its allowance; at most 1 when
    /// the history passes.
    pub worst_ratio: f64,
}

/// Residual allowances below this floor are clamped to it, since histories
/// bottom out near machine precision relative to `‖r0‖`.
pub const BOUND_FLOOR: f64 = 1e-13;

/// Checks that a GMRES history decays the way it must when the operator is
/// `I - K + E` with `K` of rank `p` and `‖E‖ = e_norm`: after every block
/// of `p + 1` iterations the residual should have shrunk by another factor
/// of `c_cap * e_norm`, i.e. `‖r_{m(p+1)}‖ ≤ (c_cap * e_norm)^m ‖r0‖`.
#[must_use]
pub fn check_residual_bound(
    residual_norms: &[f64],
    p: usize,
    e_norm: f64,
    c_cap: f64,
) -> BoundCheck {
    let r0 = residual_norms.first().copied().unwrap_or(0.0);
    if r0 == 0.0 {
        return BoundCheck {
            pass: true,
            worst_ratio: 0.0,
        };
    }
    let stride = p + 1;
    let mut worst: f64 = 0.0;
    let mut m = 1;
    while m * stride < residual_norms.len() {
        let observed = residual_norms[m * stride] / r0;
        let allowance = (c_cap * e_norm).powi(m as i32).max(BOUND_FLOOR);
        worst = worst.max(observed / allowance);
        m += 1;
    }
    if m == 1 {
        // History ended before the first checkpoint: the final residual
        // must already satisfy the first block's allowance.
        let observed = residual_norms.last().copied().unwrap_or(0.0) / r0;
        let allowance = (c_cap * e_norm).max(BOUND_FLOOR);
        worst = observed / allowance;
    }
    BoundCheck {
        pass: worst <= 1.0,
        worst_ratio: worst,
    }
}
