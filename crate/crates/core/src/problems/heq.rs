//! The Chandrasekhar H-equation, discretized by the midpoint rule:
//!
//! ```text
//! F(x)_i = x_i - ( 1 - (c / 2N) * sum_j  mu_i x_j / (mu_i + mu_j) )^(-1)
//! ```
//!
//! with nodes `mu_i = (i - 1/2) / N`. For `0 <= c < 1` there are two real
//! solution branches that merge in a fold at `c = 1`, which makes this the
//! standard small benchmark for Newton-Krylov solvers and for fold-finding
//! continuation. The residual is solved directly — no time-stepper — since
//! evaluating it is already cheap.

use crate::continuation::ParameterizedSystem;
use crate::error::SolverError;
use crate::newton::NonlinearSystem;

/// Midpoint-rule H-equation at a fixed parameter `c`.
#[derive(Debug, Clone)]
pub struct HEquation {
    n_nodes: usize,
    c: f64,
}

impl HEquation {
    /// `n_nodes` quadrature nodes, parameter `0 <= c <= 1`.
    pub fn new(n_nodes: usize, c: f64) -> Result<Self, SolverError> {
        if n_nodes == 0 {
            return Err(SolverError::InvalidInput(
                "H-equation needs at least one node".into(),
            ));
        }
        if !(0.0..=1.0).contains(&c) {
            return Err(SolverError::InvalidInput(format!(
                "H-equation parameter must lie in [0, 1], got {c}"
            )));
        }
        Ok(HEquation { n_nodes, c })
    }

    #[must_use]
    pub fn n_nodes(&self) -> usize {
        self.n_nodes
    }

    #[must_use]
    pub fn c(&self) -> f64 {
        self.c
    }

    /// Midpoint quadrature nodes `(i - 1/2) / N` for `i = 1..=N`.
    #[must_use]
    pub fn nodes(&self) -> Vec<f64> {
        let n = self.n_nodes as f64;
        (0..self.n_nodes).map(|i| (i as f64 + 0.5) / n).collect()
    }
}

pub(crate) fn heq_residual(n_nodes: usize, c: f64, x: &[f64]) -> Result<Vec<f64>, SolverError> {
    if x.len() != n_nodes {
        return Err(SolverError::InvalidInput(format!(
            "H-equation: state length {} vs {} nodes",
            x.len(),
            n_nodes
        )));
    }
    let n = n_nodes as f64;
    let mu: Vec<f64> = (0..n_nodes).map(|i| (i as f64 + 0.5) / n).collect();
    let weight = c / (2.0 * n);
    let mut out = vec![0.0; n_nodes];
    for i in 0..n_nodes {
        let mut s = 0.0;
        for j in 0..n_nodes {
            s += mu[i] * x[j] / (mu[i] + mu[j]);
        }
        let denom = 1.0 - weight * s;
        if denom.abs() < 1e-10 {
            return Err(SolverError::Domain(format!(
                "H-equation denominator vanishes at node {i}"
            )));
        }
        out[i] = x[i] - 1.0 / denom;
    }
    Ok(out)
}

impl NonlinearSystem for HEquation {
    fn dim(&self) -> usize {
        self.n_nodes
    }

    fn residual(&self, x: &[f64]) -> Result<Vec<f64>, SolverError> {
        heq_residual(self.n_nodes, self.c, x)
    }
}

/// The H-equation with `c` as the continuation parameter.
#[derive(Debug, Clone)]
pub struct HEquationFamily {
    pub n_nodes: usize,
}

impl ParameterizedSystem for HEquationFamily {
    fn dim(&self) -> usize {
        self.n_nodes
    }

    fn residual(&self, u: &[f64], lambda: f64) -> Result<Vec<f64>, SolverError> {
        heq_residual(self.n_nodes, lambda, u)
    }
}
