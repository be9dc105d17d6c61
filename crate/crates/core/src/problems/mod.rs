//! Benchmark problems: a nonlinear integral equation solved directly, a
//! reaction-diffusion PDE driven through its time-stepper, and a synthetic
//! operator whose structure (identity minus low rank, plus small noise) is
//! known exactly.

mod chafee_infante;
mod heq;
mod synthetic;

pub use chafee_infante::ChafeeInfante;
pub use heq::{HEquation, HEquationFamily};
pub use synthetic::{synthetic_compact, SyntheticInstance, SyntheticOperator, SyntheticSpec};

use crate::error::SolverError;
use crate::linalg::{self, axpy, norm};
use crate::timestepper::DynamicalProblem;

/// Steady state of `rhs(u, lambda) = 0` by plain Newton with the problem's
/// own tridiagonal Jacobian — no time-stepper, no Krylov solver.
///
/// This is the independent route to the states the matrix-free machinery
/// is supposed to find, so it deliberately shares none of that code.
pub fn direct_steady_state<P: DynamicalProblem + ?Sized>(
    prob: &P,
    lambda: f64,
    guess: &[f64],
    tol: f64,
    max_iter: usize,
) -> Result<Vec<f64>, SolverError> {
    let n = prob.dim();
    if guess.len() != n {
        return Err(SolverError::InvalidInput(format!(
            "direct_steady_state: guess length {} vs dimension {}",
            guess.len(),
            n
        )));
    }
    let mut u = guess.to_vec();
    for _ in 0..max_iter {
        let f = prob.rhs(&u, lambda);
        if !linalg::all_finite(&f) {
            return Err(SolverError::NonFinite("steady-state residual".into()));
        }
        if norm(&f) <= tol {
            return Ok(u);
        }
        let jac = prob.rhs_jacobian(&u, lambda).ok_or_else(|| {
            SolverError::InvalidInput("direct_steady_state needs a tridiagonal Jacobian".into())
        })?;
        let delta = linalg::tridiag_solve(&jac, &linalg::scaled(&f, -1.0))?;
        axpy(1.0, &delta, &mut u);
    }
    let f = prob.rhs(&u, lambda);
    if norm(&f) <= tol {
        Ok(u)
    } else {
        Err(SolverError::no_convergence(
            "direct steady-state Newton",
            format!("residual {:.3e} after {max_iter} iterations", norm(&f)),
        ))
    }
}
