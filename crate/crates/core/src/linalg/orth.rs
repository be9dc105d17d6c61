//! Orthogonalization pieces of the Arnoldi process: one modified
//! Gram-Schmidt sweep (with a second pass when cancellation eats the
//! vector) and an incrementally-updated Givens least-squares solve for
//! Hessenberg systems.

use crate::error::SolverError;
use crate::linalg::{axpy, dot, norm, DenseMatrix};

/// Result of orthogonalizing a vector against an orthonormal basis.
///
/// The pieces satisfy `v = sum(coeffs[i] * basis[i]) + remainder` with
/// `norm == ‖remainder‖`; the remainder is deliberately not normalized so
/// callers can decide what a negligible one means.
#[derive(Debug, Clone)]
pub struct MgsStep {
    pub coeffs: Vec<f64>,
    pub remainder: Vec<f64>,
    pub norm: f64,
}

/// Modified Gram-Schmidt step against an orthonormal basis.
///
/// When the first sweep removes more than 90% of the vector's norm the
/// projection coefficients are no longer trustworthy, so the sweep runs a
/// second time and folds the corrections into `coeffs`.
#[must_use]
pub fn mgs_step(v: &[f64], basis: &[Vec<f64>]) -> MgsStep {
    let vnorm = norm(v);
    let mut w = v.to_vec();
    let mut coeffs = vec![0.0; basis.len()];
    for (c, q) in coeffs.iter_mut().zip(basis) {
        let h = dot(&w, q);
        axpy(-h, q, &mut w);
        *c = h;
    }
    let mut wnorm = norm(&w);
    if wnorm < 0.1 * vnorm {
        for (c, q) in coeffs.iter_mut().zip(basis) {
            let h = dot(&w, q);
            axpy(-h, q, &mut w);
            *c += h;
        }
        wnorm = norm(&w);
    }
    MgsStep {
        coeffs,
        remainder: w,
        norm: wnorm,
    }
}

fn givens(a: f64, b: f64) -> (f64, f64, f64) {
    if a == 0.0 && b == 0.0 {
        // A dead column: any rotation works, but the swap keeps the
        // rotated right-hand side honest about the unchanged residual.
        (0.0, 1.0, 0.0)
    } else if b == 0.0 {
        (1.0, 0.0, a)
    } else {
        let r = a.hypot(b);
        (a / r, b / r, r)
    }
}

/// Incremental least-squares solve for `min ‖beta e1 - H y‖` where `H`
/// grows one Hessenberg column at a time.
///
/// Each pushed column is rotated by the accumulated Givens rotations plus
/// one new rotation that zeroes its subdiagonal entry; the rotated
/// right-hand side then exposes the current residual norm for free, which
/// is what lets GMRES monitor convergence without forming iterates.
#[derive(Debug, Clone)]
pub struct GivensLsq {
    r_cols: Vec<Vec<f64>>,
    cos: Vec<f64>,
    sin: Vec<f64>,
    rhs: Vec<f64>,
}

impl GivensLsq {
    #[must_use]
    pub fn new(beta: f64) -> Self {
        GivensLsq {
            r_cols: Vec::new(),
            cos: Vec::new(),
            sin: Vec::new(),
            rhs: vec![beta],
        }
    }

    #[must_use]
    pub fn columns(&self) -> usize {
        self.r_cols.len()
    }

    /// Current least-squares residual norm `min_y ‖beta e1 - H y‖`.
    #[must_use]
    pub fn residual_norm(&self) -> f64 {
        self.rhs.last().map_or(0.0, |v| v.abs())
    }

    /// Appends Hessenberg column `j = columns()`, whose nonzero entries are
    /// rows `0..=j+1`, and returns the updated residual norm.
    pub fn push_column(&mut self, mut col: Vec<f64>) -> Result<f64, SolverError> {
        let j = self.r_cols.len();
        if col.len() != j + 2 {
            return Err(SolverError::InvalidInput(format!(
                "Hessenberg column {} must have {} entries, got {}",
                j,
                j + 2,
                col.len()
            )));
        }
        for i in 0..j {
            let (c, s) = (self.cos[i], self.sin[i]);
            let (t0, t1) = (col[i], col[i + 1]);
            col[i] = c * t0 + s * t1;
            col[i + 1] = c * t1 - s * t0;
        }
        let (c, s, r) = givens(col[j], col[j + 1]);
        col[j] = r;
        col.truncate(j + 1);
        self.cos.push(c);
        self.sin.push(s);
        self.rhs.push(0.0);
        let (t0, t1) = (self.rhs[j], self.rhs[j + 1]);
        self.rhs[j] = c * t0 + s * t1;
        self.rhs[j + 1] = c * t1 - s * t0;
        self.r_cols.push(col);
        Ok(self.rhs[j + 1].abs())
    }

    /// Back-substitutes for the least-squares minimizer.
    pub fn solve(&self) -> Result<Vec<f64>, SolverError> {
        let k = self.r_cols.len();
        let scale = self
            .r_cols
            .iter()
            .flatten()
            .fold(0.0_f64, |m, v| m.max(v.abs()))
            .max(f64::MIN_POSITIVE);
        let mut y: Vec<f64> = self.rhs[..k].to_vec();
        for j in (0..k).rev() {
            for i in j + 1..k {
                y[j] -= self.r_cols[i][j] * y[i];
            }
            let d = self.r_cols[j][j];
            if d.abs() <= f64::EPSILON * scale {
                return Err(SolverError::Singular(format!(
                    "Hessenberg least squares at column {j}"
                )));
            }
            y[j] /= d;
        }
        Ok(y)
    }
}

/// One-shot least-squares solve for `min ‖beta e1 - H y‖` with an
/// upper-Hessenberg `H` of shape `(k+1) x k`.
///
/// Returns the minimizer together with the residual norm. Entries below
/// the first subdiagonal must be zero.
pub fn hessenberg_lsq(h: &DenseMatrix, beta: f64) -> Result<(Vec<f64>, f64), SolverError> {
    let k = h.cols();
    if k == 0 || h.rows() != k + 1 {
        return Err(SolverError::InvalidInput(format!(
            "Hessenberg least squares needs shape (k+1) x k, got {}x{}",
            h.rows(),
            h.cols()
        )));
    }
    for j in 0..k {
        for i in j + 2..k + 1 {
            if h[(i, j)] != 0.0 {
                return Err(SolverError::InvalidInput(format!(
                    "entry ({i}, {j}) below the Hessenberg band is nonzero"
                )));
            }
        }
    }
    let mut lsq = GivensLsq::new(beta);
    for j in 0..k {
        let col: Vec<f64> = (0..=j + 1).map(|i| h[(i, j)]).collect();
        lsq.push_column(col)?;
    }
    let y = lsq.solve()?;
    Ok((y, lsq.residual_norm()))
}
