//! Tridiagonal systems. The implicit integrator solves one of these per
//! Newton step per time step, so the solver is the usual O(n) elimination,
//! with row swaps so a zero on the diagonal is harmless.

use crate::error::SolverError;
use crate::linalg::DenseMatrix;

/// Tridiagonal matrix stored as three diagonals.
///
/// `sub[i]` sits at `(i + 1, i)`, `diag[i]` at `(i, i)`, and `sup[i]` at
/// `(i, i + 1)`, so `sub` and `sup` are one shorter than `diag`.
#[derive(Debug, Clone, PartialEq)]
pub struct Tridiagonal {
    pub sub: Vec<f64>,
    pub diag: Vec<f64>,
    pub sup: Vec<f64>,
}

impl Tridiagonal {
    pub fn new(sub: Vec<f64>, diag: Vec<f64>, sup: Vec<f64>) -> Result<Self, SolverError> {
        let n = diag.len();
        if n == 0 {
            return Err(SolverError::InvalidInput("empty tridiagonal matrix".into()));
        }
        if sub.len() + 1 != n || sup.len() + 1 != n {
            return Err(SolverError::InvalidInput(format!(
                "tridiagonal bands must have length {} for order {}, got {} and {}",
                n - 1,
                n,
                sub.len(),
                sup.len()
            )));
        }
        Ok(Tridiagonal { sub, diag, sup })
    }

    #[must_use]
    pub fn order(&self) -> usize {
        self.diag.len()
    }

    /// True when the matrix is symmetric to the last bit.
    #[must_use]
    pub fn is_symmetric(&self) -> bool {
        self.sub == self.sup
    }

    /// Matrix-vector product.
    #[must_use]
    pub fn matvec(&self, x: &[f64]) -> Vec<f64> {
        let n = self.order();
        assert_eq!(x.len(), n, "matvec dimension mismatch");
        let mut y = vec![0.0; n];
        for i in 0..n {
            let mut v = self.diag[i] * x[i];
            if i > 0 {
                v += self.sub[i - 1] * x[i - 1];
            }
            if i + 1 < n {
                v += self.sup[i] * x[i + 1];
            }
            y[i] = v;
        }
        y
    }

    /// Expands to a dense matrix (test oracles, small spectra).
    #[must_use]
    pub fn to_dense(&self) -> DenseMatrix {
        let n = self.order();
        let mut m = DenseMatrix::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = self.diag[i];
            if i + 1 < n {
                m[(i + 1, i)] = self.sub[i];
                m[(i, i + 1)] = self.sup[i];
            }
        }
        m
    }
}

/// Solves `T x = b` by Gaussian elimination with partial pivoting.
///
/// Row swaps introduce fill one place above the superdiagonal, so the
/// working copy carries a second superdiagonal. A pivot that is negligible
/// against the matrix scale fails with [`SolverError::Singular`].
pub fn tridiag_solve(t: &Tridiagonal, b: &[f64]) -> Result<Vec<f64>, SolverError> {
    let n = t.order();
    if b.len() != n {
        return Err(SolverError::InvalidInput(format!(
            "tridiagonal solve: rhs length {} vs order {}",
            b.len(),
            n
        )));
    }
    let scale = t
        .diag
        .iter()
        .chain(&t.sub)
        .chain(&t.sup)
        .fold(0.0_f64, |m, v| m.max(v.abs()))
        .max(f64::MIN_POSITIVE);

    let mut d = t.diag.clone();
    let mut c = t.sup.clone();
    c.push(0.0);
    let mut e = vec![0.0; n]; // second superdiagonal created by swaps
    let mut rhs = b.to_vec();

    for k in 0..n - 1 {
        let below = t.sub[k];
        if d[k].abs() >= below.abs() {
            if d[k].abs() <= f64::EPSILON * scale {
                return Err(SolverError::Singular(format!(
                    "tridiagonal solve at row {k}"
                )));
            }
            let m = below / d[k];
            d[k + 1] -= m * c[k];
            rhs[k + 1] -= m * rhs[k];
        } else {
            // Swap rows k and k+1; the old row k becomes the one eliminated.
            let m = d[k] / below;
            let dk1 = d[k + 1];
            let ck1 = c[k + 1];
            d[k] = below;
            d[k + 1] = c[k] - m * dk1;
            c[k] = dk1;
            e[k] = ck1;
            c[k + 1] = -m * ck1;
            rhs.swap(k, k + 1);
            rhs[k + 1] -= m * rhs[k];
        }
    }
    if d[n - 1].abs() <= f64::EPSILON * scale {
        return Err(SolverError::Singular(format!(
            "tridiagonal solve at row {}",
            n - 1
        )));
    }

    let mut x = rhs;
    x[n - 1] /= d[n - 1];
    for k in (0..n - 1).rev() {
        let mut v = x[k] - c[k] * x[k + 1];
        if k + 2 < n {
            v -= e[k] * x[k + 2];
        }
        x[k] = v / d[k];
    }
    Ok(x)
}
