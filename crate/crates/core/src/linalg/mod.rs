//! Small dense linear algebra: vectors as `&[f64]`, row-major dense
//! matrices, tridiagonal systems, and the orthogonalization steps that
//! back the Krylov solver.
//!
//! Nothing here allocates behind the caller's back beyond the returned
//! vectors, and nothing is parallel; problem sizes in this crate top out
//! around a few thousand unknowns.

mod dense;
mod orth;
mod tridiag;

pub use dense::{DenseLu, DenseMatrix};
pub use orth::{hessenberg_lsq, mgs_step, GivensLsq, MgsStep};
pub use tridiag::{tridiag_solve, Tridiagonal};

/// Relative remainder norm below which orthogonalization has consumed the
/// whole vector: the candidate was (numerically) a linear combination of
/// the basis already.
pub const LUCKY_BREAKDOWN_REL: f64 = 1e-14;

/// Euclidean inner product. Panics on length mismatch in debug builds.
#[must_use]
pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Euclidean norm.
#[must_use]
pub fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

/// Maximum absolute entry; 0 for the empty vector.
#[must_use]
pub fn norm_inf(a: &[f64]) -> f64 {
    a.iter().fold(0.0, |m, x| m.max(x.abs()))
}

/// `y += alpha * x`.
pub fn axpy(alpha: f64, x: &[f64], y: &mut [f64]) {
    debug_assert_eq!(x.len(), y.len());
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += alpha * xi;
    }
}

/// `alpha * x` as a fresh vector.
#[must_use]
pub fn scaled(x: &[f64], alpha: f64) -> Vec<f64> {
    x.iter().map(|v| alpha * v).collect()
}

/// `a + b` as a fresh vector.
#[must_use]
pub fn add(a: &[f64], b: &[f64]) -> Vec<f64> {
    debug_assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(x, y)| x + y).collect()
}

/// `a - b` as a fresh vector.
#[must_use]
pub fn sub(a: &[f64], b: &[f64]) -> Vec<f64> {
    debug_assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(x, y)| x - y).collect()
}

/// True when every entry is finite.
#[must_use]
pub fn all_finite(a: &[f64]) -> bool {
    a.iter().all(|v| v.is_finite())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn dot_and_norms() {
        let a = [3.0, -4.0];
        assert_eq!(dot(&a, &a), 25.0);
        assert_eq!(norm(&a), 5.0);
        assert_eq!(norm_inf(&a), 4.0);
        assert_eq!(norm_inf(&[]), 0.0);
    }

    #[test]
    fn axpy_updates_in_place() {
        let mut y = vec![1.0, 1.0];
        axpy(2.0, &[1.0, -1.0], &mut y);
        assert_eq!(y, vec![3.0, -1.0]);
    }

    #[test]
    fn elementwise_helpers() {
        assert_eq!(add(&[1.0, 2.0], &[3.0, 4.0]), vec![4.0, 6.0]);
        assert_eq!(sub(&[1.0, 2.0], &[3.0, 4.0]), vec![-2.0, -2.0]);
        assert_eq!(scaled(&[1.0, -2.0], -0.5), vec![-0.5, 1.0]);
    }

    #[test]
    fn finiteness_check() {
        assert!(all_finite(&[0.0, 1e300]));
        assert!(!all_finite(&[0.0, f64::NAN]));
        assert!(!all_finite(&[f64::INFINITY]));
    }
}
