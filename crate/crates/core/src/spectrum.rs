//! Spectra of the Jacobians this crate cares about, computed with in-crate
//! eigensolvers and double-checked by independent means.
//!
//! Two routes lead to the spectrum of a fixed-point Jacobian
//! `I - d(Phi_T)/du`:
//!
//! - the *exact map*: when the problem exposes a symmetric tridiagonal
//!   `f'(u*)`, its eigenvalues `sigma_i` map to `1 - exp(sigma_i T)`
//!   analytically, so the only numerics is a tridiagonal eigensolve;
//! - *finite differences of the flow map*: difference the actual
//!   integrator column by column and run a dense eigensolver, which sees
//!   every integrator artifact but costs `dim` integrations.
//!
//! Agreement between the two is itself a meaningful test, and both report
//! through [`SpectrumReport`], which counts eigenvalues escaping the
//! cluster `[0.84, 1]` that dissipation builds around 1.

use num_complex::Complex64;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::SolverError;
use crate::linalg::{DenseMatrix, Tridiagonal};
use crate::newton::NonlinearSystem;
use crate::timestepper::{DynamicalProblem, FixedPointSystem, StepperConfig};

/// Where dissipative fixed-point Jacobians pile up their fast modes.
pub const DEFAULT_CLUSTER: (f64, f64) = (0.84, 1.0);

/// Classification slack for [`cluster_count`]: an eigenvalue is outside
/// an interval only when its real part clears an endpoint by more than
/// this, or its imaginary part exceeds it. Computed spectra of strongly
/// contracted modes land within rounding of 1, which must not read as
/// escaping a cluster that ends there.
pub const IMAG_TOL: f64 = 1e-8;

/// Largest dimension for finite-difference Jacobians.
pub const FD_DIM_MAX: usize = 2000;

/// Largest dimension for the dense eigensolver.
pub const DENSE_DIM_MAX: usize = 500;

/// Computed spectrum, sorted so the interesting eigenvalues come first.
#[derive(Debug, Clone)]
pub struct SpectrumReport {
    /// Eigenvalues ordered by distance from 1, descending: the escapees
    /// lead, the cluster trails.
    pub eigenvalues: Vec<Complex64>,
    /// The interval on the real axis regarded as the cluster.
    pub cluster: (f64, f64),
    /// How many eigenvalues fall outside the cluster.
    pub n_outside: usize,
    /// Flow-map multipliers `exp(sigma_i T)` when the spectrum came from
    /// the exact map route, aligned with `eigenvalues`.
    pub multipliers: Option<Vec<f64>>,
}

impl SpectrumReport {
    #[must_use]
    pub fn new(
        eigenvalues: Vec<Complex64>,
        cluster: (f64, f64),
        multipliers: Option<Vec<f64>>,
    ) -> Self {
        let mut order: Vec<usize> = (0..eigenvalues.len()).collect();
        let key = |z: &Complex64| (Complex64::new(1.0, 0.0) - z).norm();
        order.sort_by(|&a, &b| key(&eigenvalues[b]).total_cmp(&key(&eigenvalues[a])));
        let eigenvalues: Vec<Complex64> = order.iter().map(|&i| eigenvalues[i]).collect();
        let multipliers = multipliers.map(|m| order.iter().map(|&i| m[i]).collect());
        let n_outside = cluster_count(&eigenvalues, cluster);
        SpectrumReport {
            eigenvalues,
            cluster,
            n_outside,
            multipliers,
        }
    }
}

/// Eigenvalues outside the interval: real part beyond `[lo, hi]` by more
/// than [`IMAG_TOL`], or imaginary part beyond it.
#[must_use]
pub fn cluster_count(eigs: &[Complex64], interval: (f64, f64)) -> usize {
    let (lo, hi) = interval;
    eigs.iter()
        .filter(|z| z.re < lo - IMAG_TOL || z.re > hi + IMAG_TOL || z.im.abs() > IMAG_TOL)
        .count()
}

/// Dense Jacobian of a residual by central differences, one column per
/// coordinate.
///
/// Central rather than forward differencing, because the result feeds
/// eigensolvers: the cube-root step keeps residual-evaluation noise (for
/// example the termination slack of an implicit integrator's stage
/// solves) from being amplified into the spectrum.
pub fn fd_jacobian(sys: &dyn NonlinearSystem, u: &[f64]) -> Result<DenseMatrix, SolverError> {
    let n = sys.dim();
    if n > FD_DIM_MAX {
        return Err(SolverError::InvalidInput(format!(
            "finite-difference Jacobian of dimension {n} exceeds the cap of {FD_DIM_MAX}"
        )));
    }
    if u.len() != n {
        return Err(SolverError::InvalidInput(format!(
            "fd_jacobian: state length {} vs dimension {}",
            u.len(),
            n
        )));
    }
    let h = f64::EPSILON.cbrt() * (1.0 + crate::linalg::norm(u));
    let mut jac = DenseMatrix::zeros(n, n);
    let mut up = u.to_vec();
    let mut um = u.to_vec();
    for col in 0..n {
        up[col] = u[col] + h;
        um[col] = u[col] - h;
        let fp = sys.residual(&up)?;
        let fm = sys.residual(&um)?;
        up[col] = u[col];
        um[col] = u[col];
        for row in 0..n {
            let d = (fp[row] - fm[row]) / (2.0 * h);
            if !d.is_finite() {
                return Err(SolverError::NonFinite(format!(
                    "Jacobian entry ({row}, {col})"
                )));
            }
            jac[(row, col)] = d;
        }
    }
    Ok(jac)
}

const QL_SWEEPS_MAX: usize = 50;
const STURM_PROBES: usize = 10;

/// Eigenvalues of a symmetric tridiagonal matrix, ascending.
///
/// Implicit-shift QL; afterwards the result is cross-validated against
/// Sturm-sequence counts of the original matrix at random thresholds, so a
/// wrong spectrum cannot be returned silently.
pub fn symtridiag_eigenvalues(t: &Tridiagonal) -> Result<Vec<f64>, SolverError> {
    if !t.is_symmetric() {
        return Err(SolverError::InvalidInput(
            "symmetric tridiagonal eigensolver on an asymmetric matrix".into(),
        ));
    }
    let n = t.order();
    let mut d = t.diag.clone();
    let mut e = t.sub.clone();
    e.push(0.0);

    for l in 0..n {
        let mut sweeps = 0;
        loop {
            let mut m = l;
            while m + 1 < n {
                let dd = d[m].abs() + d[m + 1].abs();
                if e[m].abs() <= f64::EPSILON * dd {
                    break;
                }
                m += 1;
            }
            if m == l {
                break;
            }
            sweeps += 1;
            if sweeps > QL_SWEEPS_MAX {
                return Err(SolverError::no_convergence(
                    "symmetric tridiagonal eigensolver",
                    format!("eigenvalue {l} after {QL_SWEEPS_MAX} sweeps"),
                ));
            }
            let mut g = (d[l + 1] - d[l]) / (2.0 * e[l]);
            let mut r = g.hypot(1.0);
            g = d[m] - d[l] + e[l] / (g + r.copysign(g));
            let mut s = 1.0;
            let mut c = 1.0;
            let mut p = 0.0;
            let mut early = false;
            for i in (l..m).rev() {
                let mut f = s * e[i];
                let b = c * e[i];
                r = f.hypot(g);
                e[i + 1] = r;
                if r == 0.0 {
                    d[i + 1] -= p;
                    e[m] = 0.0;
                    early = true;
                    break;
                }
                s = f / r;
                c = g / r;
                g = d[i + 1] - p;
                f = (d[i] - g) * s + 2.0 * c * b;
                p = s * f;
                d[i + 1] = g + p;
                g = c * f - b;
            }
            if early {
                continue;
            }
            d[l] -= p;
            e[l] = g;
            e[m] = 0.0;
        }
    }
    d.sort_by(f64::total_cmp);

    sturm_validate(t, &d)?;
    Ok(d)
}

/// Number of eigenvalues of the symmetric tridiagonal matrix strictly
/// below `x`, from the signs of the pivots of `T - x I`.
fn sturm_count_below(t: &Tridiagonal, x: f64) -> usize {
    let n = t.order();
    let mut count = 0;
    let mut q = t.diag[0] - x;
    if q < 0.0 {
        count += 1;
    }
    for i in 1..n {
        let e2 = t.sub[i - 1] * t.sub[i - 1];
        let denom = if q == 0.0 {
            f64::EPSILON * (e2 + f64::MIN_POSITIVE)
        } else {
            q
        };
        q = t.diag[i] - x - e2 / denom;
        if q < 0.0 {
            count += 1;
        }
    }
    count
}

fn sturm_validate(t: &Tridiagonal, sorted_vals: &[f64]) -> Result<(), SolverError> {
    let n = sorted_vals.len();
    if n == 0 {
        return Ok(());
    }
    let min = sorted_vals[0];
    let max = sorted_vals[n - 1];
    let width = (max - min).max(1.0);
    let lo = min - 0.1 * width;
    let hi = max + 0.1 * width;
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed);
    let mut checked = 0;
    let mut draws = 0;
    while checked < STURM_PROBES {
        draws += 1;
        if draws > 100 * STURM_PROBES {
            break;
        }
        let x = rng.gen_range(lo..hi);
        // Stay clear of the eigenvalues themselves, where both counts are
        // legitimately ambiguous at roundoff level.
        if sorted_vals.iter().any(|v| (v - x).abs() < 1e-8 * width) {
            continue;
        }
        let from_list = sorted_vals.partition_point(|&v| v < x);
        let from_sturm = sturm_count_below(t, x);
        if from_list != from_sturm {
            return Err(SolverError::no_convergence(
                "symmetric tridiagonal eigensolver",
                format!(
                    "Sturm count {from_sturm} vs {from_list} computed eigenvalues below {x:.6e}"
                ),
            ));
        }
        checked += 1;
    }
    Ok(())
}

fn hessenberg_reduce(h: &mut DenseMatrix) {
    let n = h.rows();
    if n < 3 {
        return;
    }
    let mut ort = vec![0.0; n];
    for m in 1..n - 1 {
        let mut scale = 0.0;
        for i in m..n {
            scale += h[(i, m - 1)].abs();
        }
        if scale == 0.0 {
            continue;
        }
        let mut sum = 0.0;
        for i in (m..n).rev() {
            ort[i] = h[(i, m - 1)] / scale;
            sum += ort[i] * ort[i];
        }
        let mut g = sum.sqrt();
        if ort[m] > 0.0 {
            g = -g;
        }
        let denom = sum - ort[m] * g;
        ort[m] -= g;

        for j in m..n {
            let mut f = 0.0;
            for i in (m..n).rev() {
                f += ort[i] * h[(i, j)];
            }
            f /= denom;
            for i in m..n {
                h[(i, j)] -= f * ort[i];
            }
        }
        for i in 0..n {
            let mut f = 0.0;
            for j in (m..n).rev() {
                f += ort[j] * h[(i, j)];
            }
            f /= denom;
            for j in m..n {
                h[(i, j)] -= f * ort[j];
            }
        }
        h[(m, m - 1)] = scale * g;
        for i in m + 1..n {
            h[(i, m - 1)] = 0.0;
        }
    }
}

/// Francis double-shift QR on an upper Hessenberg matrix, eigenvalues
/// only, with the usual ad hoc exceptional shift every 10 stalled sweeps
/// and a hard global budget of `30 n`.
fn hqr_eigenvalues(h: &mut DenseMatrix) -> Result<Vec<Complex64>, SolverError> {
    let nn = h.rows();
    let mut eig = vec![Complex64::new(0.0, 0.0); nn];
    if nn == 0 {
        return Ok(eig);
    }
    let eps = f64::EPSILON;
    let mut anorm = 0.0;
    for i in 0..nn {
        for j in i.saturating_sub(1)..nn {
            anorm += h[(i, j)].abs();
        }
    }
    if anorm == 0.0 {
        return Ok(eig);
    }

    let mut en = nn as isize - 1;
    let mut exshift = 0.0;
    let mut iter = 0usize;
    let mut total_iter = 0usize;
    let max_total = 30 * nn;

    while en >= 0 {
        let enu = en as usize;
        let mut l = enu;
        while l > 0 {
            let mut s = h[(l - 1, l - 1)].abs() + h[(l, l)].abs();
            if s == 0.0 {
                s = anorm;
            }
            if h[(l, l - 1)].abs() < eps * s {
                break;
            }
            l -= 1;
        }

        if l == enu {
            eig[enu] = Complex64::new(h[(enu, enu)] + exshift, 0.0);
            en -= 1;
            iter = 0;
        } else if l + 1 == enu {
            let w = h[(enu, enu - 1)] * h[(enu - 1, enu)];
            let p = (h[(enu - 1, enu - 1)] - h[(enu, enu)]) / 2.0;
            let q = p * p + w;
            let zr = q.abs().sqrt();
            let x = h[(enu, enu)] + exshift;
            if q >= 0.0 {
                let z = if p >= 0.0 { p + zr } else { p - zr };
                eig[enu - 1] = Complex64::new(x + z, 0.0);
                eig[enu] = if z != 0.0 {
                    Complex64::new(x - w / z, 0.0)
                } else {
                    eig[enu - 1]
                };
            } else {
                eig[enu - 1] = Complex64::new(x + p, zr);
                eig[enu] = Complex64::new(x + p, -zr);
            }
            en -= 2;
            iter = 0;
        } else {
            let mut x = h[(enu, enu)];
            let mut y = h[(enu - 1, enu - 1)];
            let mut w = h[(enu, enu - 1)] * h[(enu - 1, enu)];

            if iter > 0 && iter.is_multiple_of(10) {
                exshift += x;
                for i in l..=enu {
                    let v = h[(i, i)];
                    h[(i, i)] = v - x;
                }
                let s = h[(enu, enu - 1)].abs() + h[(enu - 1, enu - 2)].abs();
                x = 0.75 * s;
                y = x;
                w = -0.4375 * s * s;
            }
            iter += 1;
            total_iter += 1;
            if total_iter > max_total {
                return Err(SolverError::no_convergence(
                    "dense eigensolver",
                    format!("{total_iter} QR sweeps on dimension {nn}"),
                ));
            }

            let mut m = enu - 2;
            let mut p;
            let mut q;
            let mut r;
            loop {
                let z = h[(m, m)];
                let rr = x - z;
                let ss = y - z;
                p = (rr * ss - w) / h[(m + 1, m)] + h[(m, m + 1)];
                q = h[(m + 1, m + 1)] - z - rr - ss;
                r = h[(m + 2, m + 1)];
                let s = p.abs() + q.abs() + r.abs();
                p /= s;
                q /= s;
                r /= s;
                if m == l {
                    break;
                }
                if h[(m, m - 1)].abs() * (q.abs() + r.abs())
                    < eps
                        * (p.abs() * (h[(m - 1, m - 1)].abs() + z.abs() + h[(m + 1, m + 1)].abs()))
                {
                    break;
                }
                m -= 1;
            }
            for i in m + 2..=enu {
                h[(i, i - 2)] = 0.0;
                if i > m + 2 {
                    h[(i, i - 3)] = 0.0;
                }
            }

            for k in m..enu {
                let notlast = k != enu - 1;
                if k != m {
                    p = h[(k, k - 1)];
                    q = h[(k + 1, k - 1)];
                    r = if notlast { h[(k + 2, k - 1)] } else { 0.0 };
                    x = p.abs() + q.abs() + r.abs();
                    if x == 0.0 {
                        continue;
                    }
                    p /= x;
                    q /= x;
                    r /= x;
                }
                let mut s = (p * p + q * q + r * r).sqrt();
                if p < 0.0 {
                    s = -s;
                }
                if s == 0.0 {
                    continue;
                }
                if k != m {
                    h[(k, k - 1)] = -s * x;
                } else if l != m {
                    h[(k, k - 1)] = -h[(k, k - 1)];
                }
                p += s;
                x = p / s;
                y = q / s;
                let z = r / s;
                q /= p;
                r /= p;

                for j in k..nn {
                    let mut pp = h[(k, j)] + q * h[(k + 1, j)];
                    if notlast {
                        pp += r * h[(k + 2, j)];
                        h[(k + 2, j)] -= pp * z;
                    }
                    h[(k, j)] -= pp * x;
                    h[(k + 1, j)] -= pp * y;
                }
                let upper = enu.min(k + 3);
                for i in 0..=upper {
                    let mut pp = x * h[(i, k)] + y * h[(i, k + 1)];
                    if notlast {
                        pp += z * h[(i, k + 2)];
                        h[(i, k + 2)] -= pp * r;
                    }
                    h[(i, k)] -= pp;
                    h[(i, k + 1)] -= pp * q;
                }
            }
        }
    }
    Ok(eig)
}

type ComplexMat = Vec<Vec<Complex64>>;

fn clu_factor(m: &mut ComplexMat, clamp: f64) -> Vec<usize> {
    let n = m.len();
    let mut perm: Vec<usize> = (0..n).collect();
    for k in 0..n {
        let mut p = k;
        let mut best = m[k][k].norm();
        for i in k + 1..n {
            let v = m[i][k].norm();
            if v > best {
                best = v;
                p = i;
            }
        }
        if p != k {
            m.swap(k, p);
            perm.swap(k, p);
        }
        if m[k][k].norm() < clamp {
            // Inverse iteration wants a solvable system even at an exact
            // eigenvalue; a clamped pivot gives it one with an enormous
            // inverse, which is the signal being measured.
            m[k][k] = Complex64::new(clamp, 0.0);
        }
        let piv = m[k][k];
        for i in k + 1..n {
            let f = m[i][k] / piv;
            m[i][k] = f;
            for j in k + 1..n {
                let sub = f * m[k][j];
                m[i][j] -= sub;
            }
        }
    }
    perm
}

fn clu_solve(m: &ComplexMat, perm: &[usize], b: &[Complex64]) -> Vec<Complex64> {
    let n = m.len();
    let mut x: Vec<Complex64> = perm.iter().map(|&p| b[p]).collect();
    for i in 1..n {
        for j in 0..i {
            let sub = m[i][j] * x[j];
            x[i] -= sub;
        }
    }
    for i in (0..n).rev() {
        for j in i + 1..n {
            let sub = m[i][j] * x[j];
            x[i] -= sub;
        }
        x[i] /= m[i][i];
    }
    x
}

fn clu_solve_adjoint(m: &ComplexMat, perm: &[usize], b: &[Complex64]) -> Vec<Complex64> {
    let n = m.len();
    let mut w = b.to_vec();
    for i in 0..n {
        for j in 0..i {
            let sub = m[j][i].conj() * w[j];
            w[i] -= sub;
        }
        w[i] /= m[i][i].conj();
    }
    for i in (0..n).rev() {
        for j in i + 1..n {
            let sub = m[j][i].conj() * w[j];
            w[i] -= sub;
        }
    }
    let mut z = vec![Complex64::new(0.0, 0.0); n];
    for (i, &pi) in perm.iter().enumerate() {
        z[pi] = w[i];
    }
    z
}

fn cnorm(v: &[Complex64]) -> f64 {
    v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

/// Smallest singular value of `A - mu I`, estimated by a few rounds of
/// inverse power iteration on `(A - mu I)^{-1} (A - mu I)^{-H}` through
/// one complex LU factorization.
fn smallest_singular_estimate(a: &DenseMatrix, mu: Complex64) -> f64 {
    let n = a.rows();
    let mut m: ComplexMat = (0..n)
        .map(|i| {
            (0..n)
                .map(|j| {
                    let mut z = Complex64::new(a[(i, j)], 0.0);
                    if i == j {
                        z -= mu;
                    }
                    z
                })
                .collect()
        })
        .collect();
    let clamp = (f64::EPSILON * a.frobenius() * 1e-2).max(f64::MIN_POSITIVE);
    let perm = clu_factor(&mut m, clamp);

    let mut v: Vec<Complex64> = (0..n)
        .map(|i| {
            let t = i as f64;
            Complex64::new((0.7 * t + 1.0).cos(), (1.3 * t + 2.0).sin())
        })
        .collect();
    let vn = cnorm(&v);
    for z in &mut v {
        *z /= vn;
    }
    let mut growth = 0.0;
    for _ in 0..6 {
        let u1 = clu_solve_adjoint(&m, &perm, &v);
        let u2 = clu_solve(&m, &perm, &u1);
        growth = cnorm(&u2);
        if !growth.is_finite() {
            return 0.0;
        }
        if growth == 0.0 {
            return f64::INFINITY;
        }
        for (vi, ui) in v.iter_mut().zip(&u2) {
            *vi = ui / growth;
        }
    }
    1.0 / growth.sqrt()
}

const RESIDUAL_CHECK_TOL: f64 = 1e-6;
const RESIDUAL_CHECK_SAMPLES: usize = 5;

fn residual_spot_check(a: &DenseMatrix, eigs: &[Complex64]) -> Result<(), SolverError> {
    let n = eigs.len();
    if n == 0 {
        return Ok(());
    }
    let scale = a.frobenius();
    if scale == 0.0 {
        return Ok(());
    }
    let mut indices = vec![0, n / 4, n / 2, (3 * n) / 4, n - 1];
    indices.dedup();
    indices.truncate(RESIDUAL_CHECK_SAMPLES);
    for idx in indices {
        let sigma = smallest_singular_estimate(a, eigs[idx]);
        if sigma > RESIDUAL_CHECK_TOL * scale {
            return Err(SolverError::no_convergence(
                "dense eigensolver",
                format!(
                    "eigenvalue {} + {}i fails its residual check: sigma_min {:.3e} vs scale {:.3e}",
                    eigs[idx].re, eigs[idx].im, sigma, scale
                ),
            ));
        }
    }
    Ok(())
}

/// Eigenvalues of a general real matrix.
///
/// Householder reduction to Hessenberg form followed by Francis
/// double-shift QR; five of the computed eigenvalues, spread across the
/// spectrum, are then verified by inverse iteration on the original
/// matrix so a quietly wrong answer is caught.
pub fn dense_eigenvalues(a: &DenseMatrix) -> Result<Vec<Complex64>, SolverError> {
    if a.rows() != a.cols() {
        return Err(SolverError::InvalidInput(format!(
            "dense eigensolver needs a square matrix, got {}x{}",
            a.rows(),
            a.cols()
        )));
    }
    let n = a.rows();
    if n > DENSE_DIM_MAX {
        return Err(SolverError::InvalidInput(format!(
            "dense eigensolver dimension {n} exceeds the cap of {DENSE_DIM_MAX}"
        )));
    }
    for i in 0..n {
        for j in 0..n {
            if !a[(i, j)].is_finite() {
                return Err(SolverError::NonFinite(format!("matrix entry ({i}, {j})")));
            }
        }
    }
    let mut h = a.clone();
    hessenberg_reduce(&mut h);
    let eigs = hqr_eigenvalues(&mut h)?;
    residual_spot_check(a, &eigs)?;
    Ok(eigs)
}

/// Which route computes a time-stepper spectrum.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SpectrumRoute {
    /// Analytic: eigenvalues of the problem's own Jacobian mapped through
    /// `sigma -> 1 - exp(sigma T)`.
    ExactMap,
    /// Empirical: dense finite-difference Jacobian of the actual
    /// fixed-point residual.
    FdOfPhi,
}

/// Spectrum of the fixed-point Jacobian `I - d(Phi_T)/du` at `u_star`.
pub fn timestepper_spectrum<P: DynamicalProblem + ?Sized>(
    prob: &P,
    u_star: &[f64],
    lambda: f64,
    cfg: &StepperConfig,
    route: SpectrumRoute,
) -> Result<SpectrumReport, SolverError> {
    cfg.validate()?;
    match route {
        SpectrumRoute::ExactMap => {
            let jac = prob.rhs_jacobian(u_star, lambda).ok_or_else(|| {
                SolverError::InvalidInput(
                    "exact-map spectrum needs a tridiagonal Jacobian from the problem".into(),
                )
            })?;
            let sigmas = symtridiag_eigenvalues(&jac)?;
            let multipliers: Vec<f64> = sigmas.iter().map(|s| (s * cfg.horizon).exp()).collect();
            let eigenvalues: Vec<Complex64> = multipliers
                .iter()
                .map(|m| Complex64::new(1.0 - m, 0.0))
                .collect();
            Ok(SpectrumReport::new(
                eigenvalues,
                DEFAULT_CLUSTER,
                Some(multipliers),
            ))
        }
        SpectrumRoute::FdOfPhi => {
            let sys = FixedPointSystem::new(prob, lambda, cfg.clone());
            let jac = fd_jacobian(&sys, u_star)?;
            let eigenvalues = dense_eigenvalues(&jac)?;
            Ok(SpectrumReport::new(eigenvalues, DEFAULT_CLUSTER, None))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::newton::FnSystem;

    fn sorted_real(eigs: &[Complex64]) -> Vec<f64> {
        let mut v: Vec<f64> = eigs.iter().map(|z| z.re).collect();
        v.sort_by(f64::total_cmp);
        v
    }

    #[test]
    fn symtridiag_three_by_three_exact() {
        let t = Tridiagonal::new(vec![1.0, 1.0], vec![2.0, 2.0, 2.0], vec![1.0, 1.0]).unwrap();
        let vals = symtridiag_eigenvalues(&t).unwrap();
        let sqrt2 = 2.0_f64.sqrt();
        assert!((vals[0] - (2.0 - sqrt2)).abs() < 1e-14);
        assert!((vals[1] - 2.0).abs() < 1e-14);
        assert!((vals[2] - (2.0 + sqrt2)).abs() < 1e-14);
    }

    #[test]
    fn symtridiag_laplacian_matches_closed_form() {
        let n = 10;
        let t = Tridiagonal::new(vec![-1.0; n - 1], vec![2.0; n], vec![-1.0; n - 1]).unwrap();
        let vals = symtridiag_eigenvalues(&t).unwrap();
        for (k, v) in vals.iter().enumerate() {
            let exact = 2.0 - 2.0 * ((k + 1) as f64 * std::f64::consts::PI / 11.0).cos();
            assert!((v - exact).abs() < 1e-13, "k = {k}: {v} vs {exact}");
        }
    }

    #[test]
    fn symtridiag_handles_multiple_eigenvalues() {
        let n = 8;
        let t = Tridiagonal::new(vec![0.0; n - 1], vec![3.5; n], vec![0.0; n - 1]).unwrap();
        let vals = symtridiag_eigenvalues(&t).unwrap();
        assert!(vals.iter().all(|&v| (v - 3.5).abs() < 1e-14));
    }

    #[test]
    fn symtridiag_order_one() {
        let t = Tridiagonal::new(vec![], vec![-2.5], vec![]).unwrap();
        assert_eq!(symtridiag_eigenvalues(&t).unwrap(), vec![-2.5]);
    }

    #[test]
    fn symtridiag_rejects_asymmetric_matrix() {
        let t = Tridiagonal::new(vec![1.0], vec![0.0, 0.0], vec![2.0]).unwrap();
        assert!(matches!(
            symtridiag_eigenvalues(&t),
            Err(SolverError::InvalidInput(_))
        ));
    }

    #[test]
    fn sturm_counts_are_exact_on_known_spectrum() {
        let t = Tridiagonal::new(vec![1.0, 1.0], vec![2.0, 2.0, 2.0], vec![1.0, 1.0]).unwrap();
        // Spectrum: 2 - sqrt(2), 2, 2 + sqrt(2).
        assert_eq!(sturm_count_below(&t, 0.0), 0);
        assert_eq!(sturm_count_below(&t, 1.0), 1);
        assert_eq!(sturm_count_below(&t, 2.5), 2);
        assert_eq!(sturm_count_below(&t, 4.0), 3);
    }

    #[test]
    fn dense_rotation_matrix_has_imaginary_pair() {
        let mut a = DenseMatrix::zeros(2, 2);
        a[(0, 1)] = -1.0;
        a[(1, 0)] = 1.0;
        let eigs = dense_eigenvalues(&a).unwrap();
        let mut ims: Vec<f64> = eigs.iter().map(|z| z.im).collect();
        ims.sort_by(f64::total_cmp);
        assert!((ims[0] + 1.0).abs() < 1e-12);
        assert!((ims[1] - 1.0).abs() < 1e-12);
        assert!(eigs.iter().all(|z| z.re.abs() < 1e-12));
    }

    #[test]
    fn dense_companion_matrix_has_cube_roots_of_unity() {
        // Companion of z^3 - 1.
        let mut a = DenseMatrix::zeros(3, 3);
        a[(0, 2)] = 1.0;
        a[(1, 0)] = 1.0;
        a[(2, 1)] = 1.0;
        let eigs = dense_eigenvalues(&a).unwrap();
        for z in &eigs {
            assert!((z.norm() - 1.0).abs() < 1e-12);
        }
        let n_real = eigs.iter().filter(|z| z.im.abs() < 1e-10).count();
        assert_eq!(n_real, 1);
        let real_root = eigs.iter().find(|z| z.im.abs() < 1e-10).unwrap();
        assert!((real_root.re - 1.0).abs() < 1e-12);
    }

    #[test]
    fn dense_matches_symtridiag_on_symmetric_matrix() {
        use rand::Rng;
        use rand::SeedableRng;
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(33);
        let n = 30;
        let sub: Vec<f64> = (0..n - 1).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let diag: Vec<f64> = (0..n).map(|_| rng.gen_range(-2.0..2.0)).collect();
        let t = Tridiagonal::new(sub.clone(), diag, sub).unwrap();
        let from_ql = symtridiag_eigenvalues(&t).unwrap();
        let from_qr = sorted_real(&dense_eigenvalues(&t.to_dense()).unwrap());
        for (a, b) in from_ql.iter().zip(&from_qr) {
            assert!((a - b).abs() < 1e-10, "{a} vs {b}");
        }
    }

    #[test]
    fn dense_recovers_prescribed_spectrum_under_similarity() {
        // A = G D G^{-1} for a fixed shear G: spectrum is exactly D's.
        let n = 12;
        let d_vals: Vec<f64> = (0..n).map(|i| -3.0 + 0.5 * i as f64).collect();
        let mut a = DenseMatrix::zeros(n, n);
        for i in 0..n {
            a[(i, i)] = d_vals[i];
        }
        // Shear rows then unshear: G = I + alpha e_0 e_{n-1}^T.
        let alpha = 0.8;
        for j in 0..n {
            let v = a[(n - 1, j)];
            a[(0, j)] += alpha * v;
        }
        for i in 0..n {
            let v = a[(i, 0)];
            a[(i, n - 1)] -= alpha * v;
        }
        let eigs = sorted_real(&dense_eigenvalues(&a).unwrap());
        for (got, want) in eigs.iter().zip(&d_vals) {
            assert!((got - want).abs() < 1e-10);
        }
    }

    #[test]
    fn dense_jordan_block_stays_near_its_eigenvalue() {
        let mut a = DenseMatrix::identity(2);
        a[(0, 1)] = 1.0;
        let eigs = dense_eigenvalues(&a).unwrap();
        for z in &eigs {
            assert!((z - Complex64::new(1.0, 0.0)).norm() < 1e-6);
        }
    }

    #[test]
    fn dense_dimension_cap_is_enforced() {
        let a = DenseMatrix::zeros(DENSE_DIM_MAX + 1, DENSE_DIM_MAX + 1);
        assert!(matches!(
            dense_eigenvalues(&a),
            Err(SolverError::InvalidInput(_))
        ));
    }

    #[test]
    fn cluster_count_respects_inclusive_endpoints() {
        let eigs = vec![
            Complex64::new(1.0, 0.0),
            Complex64::new(0.84, 0.0),
            Complex64::new(0.5, 0.0),
            Complex64::new(0.9, 1e-3),
            Complex64::new(0.9, 1e-9),
        ];
        assert_eq!(cluster_count(&eigs, (0.84, 1.0)), 2);
    }

    #[test]
    fn report_sorts_by_distance_from_one() {
        let eigs = vec![
            Complex64::new(0.99, 0.0),
            Complex64::new(-4.0, 0.0),
            Complex64::new(0.9, 0.0),
            Complex64::new(2.5, 0.0),
        ];
        let mult = vec![0.01, 5.0, 0.1, -1.5];
        let report = SpectrumReport::new(eigs, DEFAULT_CLUSTER, Some(mult));
        assert_eq!(report.eigenvalues[0], Complex64::new(-4.0, 0.0));
        assert_eq!(report.eigenvalues[1], Complex64::new(2.5, 0.0));
        assert_eq!(report.multipliers.as_ref().unwrap()[0], 5.0);
        assert_eq!(report.n_outside, 2);
    }

    #[test]
    fn fd_jacobian_of_linear_map_is_the_matrix() {
        use rand::Rng;
        use rand::SeedableRng;
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(2);
        let n = 8;
        let a = DenseMatrix::from_fn(n, n, |_, _| rng.gen_range(-1.0..1.0));
        let a2 = a.clone();
        let sys = FnSystem::new(n, move |u: &[f64]| Ok(a2.matvec(u)));
        let u: Vec<f64> = (0..n).map(|i| 0.1 * i as f64).collect();
        let jac = fd_jacobian(&sys, &u).unwrap();
        for i in 0..n {
            for j in 0..n {
                assert!((jac[(i, j)] - a[(i, j)]).abs() < 1e-6);
            }
        }
    }

    #[test]
    fn fd_jacobian_dimension_cap_is_enforced() {
        let sys = FnSystem::new(FD_DIM_MAX + 1, |u: &[f64]| Ok(u.to_vec()));
        let u = vec![0.0; FD_DIM_MAX + 1];
        assert!(matches!(
            fd_jacobian(&sys, &u),
            Err(SolverError::InvalidInput(_))
        ));
    }

    #[test]
    fn exact_map_and_fd_routes_agree_on_chafee_infante() {
        use crate::problems::{direct_steady_state, ChafeeInfante};
        let ci = ChafeeInfante::new(41).unwrap();
        let lambda = 2.1386697;
        let u = direct_steady_state(&ci, lambda, &ci.sine_profile(1, 0.6), 1e-12, 50).unwrap();
        let cfg = StepperConfig::implicit_trapezoid(0.5, 0.5 / 256.0);

        let exact = timestepper_spectrum(&ci, &u, lambda, &cfg, SpectrumRoute::ExactMap).unwrap();
        let fd = timestepper_spectrum(&ci, &u, lambda, &cfg, SpectrumRoute::FdOfPhi).unwrap();

        assert!(exact.multipliers.is_some());
        assert!(fd.multipliers.is_none());
        assert_eq!(exact.eigenvalues.len(), fd.eigenvalues.len());
        for z in &fd.eigenvalues {
            assert!(z.im.abs() < 1e-8);
        }
        let a = sorted_real(&exact.eigenvalues);
        let b = sorted_real(&fd.eigenvalues);
        for (x, y) in a.iter().zip(&b) {
            assert!((x - y).abs() < 1e-4, "{x} vs {y}");
        }
        assert_eq!(exact.n_outside, fd.n_outside);
    }

    #[test]
    fn exact_map_multipliers_follow_the_horizon() {
        use crate::problems::ChafeeInfante;
        let ci = ChafeeInfante::new(21).unwrap();
        let m = 19;
        let u = vec![0.0; m];
        let cfg = StepperConfig::implicit_trapezoid(2.0, 2.0 / 256.0);
        let report = timestepper_spectrum(&ci, &u, 1.5, &cfg, SpectrumRoute::ExactMap).unwrap();
        // At the trivial state of u' = (1/lambda) u_xx + u - u^3 the mode
        // sigma_k = 1 - k^2/lambda, so the slowest multiplier is
        // exp((1 - 1/lambda) T).
        let expected = ((1.0 - 1.0 / 1.5) * 2.0_f64).exp();
        let mults = report.multipliers.unwrap();
        let max_mult = mults.iter().fold(f64::NEG_INFINITY, |m, &v| m.max(v));
        assert!(
            (max_mult - expected).abs() < 1e-2,
            "{max_mult} vs {expected}"
        );
    }
}
