//! The Chafee-Infante equation
//!
//! ```text
//! u_t = (1/lambda) u_xx + u - u^3,    x in (0, pi),    u(0) = u(pi) = 0
//! ```
//!
//! on a uniform grid, second-order centered differences, with the boundary
//! values eliminated. As `lambda` grows past `k^2` the trivial state sheds
//! a pair of k-hump steady states, so the problem carries a whole family
//! of coexisting equilibria — stable and unstable — to hunt for. Diffusion
//! makes the linearization stiff: at 201 grid points its most negative
//! eigenvalue is of order `-4 / (lambda h^2)`, thousands of times the slow
//! scales, which is exactly the regime where fixed-point Jacobians of the
//! flow map cluster near 1.

use std::f64::consts::PI;

use crate::error::SolverError;
use crate::linalg::Tridiagonal;
use crate::timestepper::DynamicalProblem;

/// Chafee-Infante on `n_points` grid points including the two boundary
/// points; the unknowns are the `n_points - 2` interior values.
#[derive(Debug, Clone)]
pub struct ChafeeInfante {
    n_points: usize,
}

impl ChafeeInfante {
    pub fn new(n_points: usize) -> Result<Self, SolverError> {
        if n_points < 3 {
            return Err(SolverError::InvalidInput(format!(
                "Chafee-Infante grid needs at least 3 points, got {n_points}"
            )));
        }
        Ok(ChafeeInfante { n_points })
    }

    #[must_use]
    pub fn n_points(&self) -> usize {
        self.n_points
    }

    /// Grid spacing `pi / (n_points - 1)`.
    #[must_use]
    pub fn spacing(&self) -> f64 {
        PI / (self.n_points - 1) as f64
    }

    /// Interior grid coordinates `x_i = i h`, `i = 1..=n_points-2`.
    #[must_use]
    pub fn interior_grid(&self) -> Vec<f64> {
        let h = self.spacing();
        (1..self.n_points - 1).map(|i| i as f64 * h).collect()
    }

    /// `amplitude * sin(mode * x)` sampled on the interior grid — the
    /// natural seed and perturbation shape for this problem.
    #[must_use]
    pub fn sine_profile(&self, mode: u32, amplitude: f64) -> Vec<f64> {
        self.interior_grid()
            .iter()
            .map(|&x| amplitude * (mode as f64 * x).sin())
            .collect()
    }
}

impl DynamicalProblem for ChafeeInfante {
    fn dim(&self) -> usize {
        self.n_points - 2
    }

    fn rhs(&self, u: &[f64], lambda: f64) -> Vec<f64> {
        assert!(
            lambda > 0.0,
            "Chafee-Infante diffusion requires lambda > 0, got {lambda}"
        );
        let m = self.dim();
        assert_eq!(u.len(), m, "state length vs interior dimension");
        let h = self.spacing();
        let inv = 1.0 / (lambda * h * h);
        let mut out = vec![0.0; m];
        for i in 0..m {
            let left = if i > 0 { u[i - 1] } else { 0.0 };
            let right = if i + 1 < m { u[i + 1] } else { 0.0 };
            out[i] = inv * (left - 2.0 * u[i] + right) + u[i] - u[i] * u[i] * u[i];
        }
        out
    }

    fn rhs_jacobian(&self, u: &[f64], lambda: f64) -> Option<Tridiagonal> {
        let m = self.dim();
        let h = self.spacing();
        let inv = 1.0 / (lambda * h * h);
        let diag: Vec<f64> = u.iter().map(|&v| -2.0 * inv + 1.0 - 3.0 * v * v).collect();
        Some(Tridiagonal::new(vec![inv; m - 1], diag, vec![inv; m - 1]).unwrap())
    }
}
