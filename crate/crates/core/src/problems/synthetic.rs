//! Synthetic operators `A = I - K + E` with `K` of known low rank and `E`
//! of prescribed small norm, built reproducibly from a seed. GMRES applied
//! to such an operator must converge in `rank + 1` iterations up to
//! `O(‖E‖)`, so these instances put sharp, falsifiable numbers on the
//! solver while a dense LU of the same matrix provides the exact answer.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::SolverError;
use crate::krylov::LinearOperator;
use crate::linalg::{axpy, dot, mgs_step, norm, scaled, DenseLu, DenseMatrix};

/// Recipe for a synthetic instance.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SyntheticSpec {
    pub dim: usize,
    /// Rank of the compact part `K`.
    pub rank: usize,
    /// Spectral norm to which the dense noise `E` is scaled; zero means no
    /// noise term at all.
    pub e_norm: f64,
    pub seed: u64,
}

/// The operator `v -> v - Q B Q^T v + E v`, applied in factored form.
pub struct SyntheticOperator {
    dim: usize,
    q: Vec<Vec<f64>>,
    b: DenseMatrix,
    e: Option<DenseMatrix>,
}

impl LinearOperator for SyntheticOperator {
    fn dim(&self) -> usize {
        self.dim
    }

    fn apply(&self, v: &[f64]) -> Result<Vec<f64>, SolverError> {
        if v.len() != self.dim {
            return Err(SolverError::InvalidInput(format!(
                "synthetic operator: vector length {} vs dimension {}",
                v.len(),
                self.dim
            )));
        }
        let mut y = v.to_vec();
        if !self.q.is_empty() {
            let qt: Vec<f64> = self.q.iter().map(|col| dot(col, v)).collect();
            let bq = self.b.matvec(&qt);
            for (col, c) in self.q.iter().zip(&bq) {
                axpy(-c, col, &mut y);
            }
        }
        if let Some(e) = &self.e {
            axpy(1.0, &e.matvec(v), &mut y);
        }
        Ok(y)
    }
}

/// A generated instance: the factored operator, its dense form, and an LU
/// factorization for exact solves.
pub struct SyntheticInstance {
    pub operator: SyntheticOperator,
    dense: DenseMatrix,
    lu: DenseLu,
}

impl SyntheticInstance {
    /// Exact solution of `A x = b` through the dense factorization.
    #[must_use]
    pub fn true_solve(&self, b: &[f64]) -> Vec<f64> {
        self.lu.solve(b)
    }

    /// The materialized matrix (for spectral checks in tests).
    #[must_use]
    pub fn dense(&self) -> &DenseMatrix {
        &self.dense
    }
}

fn estimate_spectral_norm(e: &DenseMatrix, rng: &mut ChaCha8Rng) -> f64 {
    // Power iteration on E^T E; the Rayleigh growth ‖E^T E v‖ converges to
    // the largest squared singular value.
    let n = e.cols();
    let mut v: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
    let vn = norm(&v);
    if vn == 0.0 {
        return 0.0;
    }
    v = scaled(&v, 1.0 / vn);
    let mut lam = 0.0;
    for _ in 0..30 {
        let w = e.matvec(&v);
        let z = e.matvec_transpose(&w);
        lam = norm(&z);
        if lam == 0.0 {
            return 0.0;
        }
        v = scaled(&z, 1.0 / lam);
    }
    lam.sqrt()
}

/// Builds the instance described by `spec`, deterministically in the seed.
///
/// `Q` is an orthonormalized Gaussian-free random frame, `B` is scaled so
/// its Frobenius norm (an upper bound on its spectral radius) is 0.9 —
/// keeping `I - K` safely nonsingular — and `E` is scaled to `e_norm` in
/// the spectral norm, estimated by power iteration.
pub fn synthetic_compact(spec: &SyntheticSpec) -> Result<SyntheticInstance, SolverError> {
    if spec.dim == 0 {
        return Err(SolverError::InvalidInput("synthetic dimension 0".into()));
    }
    if spec.rank > spec.dim {
        return Err(SolverError::InvalidInput(format!(
            "synthetic rank {} exceeds dimension {}",
            spec.rank, spec.dim
        )));
    }
    if !(spec.e_norm >= 0.0 && spec.e_norm.is_finite()) {
        return Err(SolverError::InvalidInput(format!(
            "synthetic noise norm must be finite and nonnegative, got {}",
            spec.e_norm
        )));
    }
    let n = spec.dim;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);

    let mut q: Vec<Vec<f64>> = Vec::with_capacity(spec.rank);
    while q.len() < spec.rank {
        let cand: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let step = mgs_step(&cand, &q);
        if step.norm > 1e-8 * norm(&cand) {
            q.push(scaled(&step.remainder, 1.0 / step.norm));
        }
    }

    let mut b = DenseMatrix::from_fn(spec.rank, spec.rank, |_, _| rng.gen_range(-1.0..1.0));
    let bf = b.frobenius();
    if bf > 0.0 {
        b.scale(0.9 / bf);
    }

    let e = if spec.e_norm > 0.0 {
        let mut e = DenseMatrix::from_fn(n, n, |_, _| rng.gen_range(-1.0..1.0));
        let sigma = estimate_spectral_norm(&e, &mut rng);
        if sigma == 0.0 {
            return Err(SolverError::InvalidInput(
                "synthetic noise matrix degenerated to zero".into(),
            ));
        }
        e.scale(spec.e_norm / sigma);
        Some(e)
    } else {
        None
    };

    // K = (Q B) Q^T, assembled column-combination first.
    let qb: Vec<Vec<f64>> = (0..spec.rank)
        .map(|col| {
            let mut out = vec![0.0; n];
            for (a, qa) in q.iter().enumerate() {
                axpy(b[(a, col)], qa, &mut out);
            }
            out
        })
        .collect();
    let dense = DenseMatrix::from_fn(n, n, |i, j| {
        let mut v = if i == j { 1.0 } else { 0.0 };
        for (qb_col, q_col) in qb.iter().zip(&q) {
            v -= qb_col[i] * q_col[j];
        }
        if let Some(e) = &e {
            v += e[(i, j)];
        }
        v
    });
    let lu = dense.lu()?;

    Ok(SyntheticInstance {
        operator: SyntheticOperator { dim: n, q, b, e },
        dense,
        lu,
    })
}
