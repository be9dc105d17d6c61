//! Randomized invariants: things that must hold for every input in a
//! family, not just the worked examples in the unit tests. Case counts
//! are kept modest because each case runs a full solver.

use proptest::prelude::*;

use settle_core::continuation::secant_tangent;
use settle_core::krylov::{check_residual_bound, gmres, LinearOperator};
use settle_core::linalg::{dot, mgs_step, norm, sub, tridiag_solve, DenseMatrix, Tridiagonal};
use settle_core::newton::{newton_gmres, FnSystem, Forcing, NewtonConfig};
use settle_core::problems::{synthetic_compact, ChafeeInfante, SyntheticSpec};
use settle_core::spectrum::{
    cluster_count, dense_eigenvalues, symtridiag_eigenvalues, SpectrumReport, DEFAULT_CLUSTER,
};
use settle_core::timestepper::{step_count, DynamicalProblem};

use num_complex::Complex64;

fn diag_dominant_tridiagonal(n: usize, seed: u64) -> Tridiagonal {
    use rand::Rng;
    use rand::SeedableRng;
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    let sub: Vec<f64> = (0..n - 1).map(|_| rng.gen_range(-1.0..1.0)).collect();
    let sup: Vec<f64> = (0..n - 1).map(|_| rng.gen_range(-1.0..1.0)).collect();
    let diag: Vec<f64> = (0..n).map(|_| rng.gen_range(3.0..5.0)).collect();
    Tridiagonal::new(sub, diag, sup).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    /// GMRES residual norms never increase: each iterate minimizes over a
    /// strictly larger Krylov space.
    #[test]
    fn gmres_residuals_are_non_increasing(seed in 0u64..1000, n in 4usize..24) {
        let t = diag_dominant_tridiagonal(n, seed);
        let b: Vec<f64> = (0..n).map(|i| ((i as f64) * 0.7).sin() + 0.1).collect();
        let out = gmres(&t, &b, &vec![0.0; n], 1e-10, n).unwrap();
        for w in out.residual_norms.windows(2) {
            // Allow a whisper of roundoff in the Givens recursion.
            prop_assert!(w[1] <= w[0] * (1.0 + 1e-12),
                "residual rose: {} -> {}", w[0], w[1]);
        }
        prop_assert_eq!(out.iterations + 1, out.residual_norms.len());
        prop_assert!(!out.residual_mismatch,
            "recursion and explicit residual disagree: {} vs {}",
            out.residual_norms.last().unwrap(), out.explicit_residual);
    }

    /// The returned iterate actually solves the system to the advertised
    /// relative tolerance on well-conditioned inputs.
    #[test]
    fn gmres_solution_meets_its_tolerance(seed in 0u64..1000, n in 4usize..24) {
        let t = diag_dominant_tridiagonal(n, seed);
        let b: Vec<f64> = (0..n).map(|i| ((i as f64) * 1.3).cos()).collect();
        let out = gmres(&t, &b, &vec![0.0; n], 1e-8, n).unwrap();
        let r = sub(&b, &t.matvec(&out.solution));
        prop_assert!(norm(&r) <= 1e-8 * norm(&b) * (1.0 + 1e-10));
    }

    /// The factored synthetic operator application is linear, and matches
    /// its own dense materialization.
    #[test]
    fn synthetic_operator_is_linear(seed in 0u64..500) {
        let spec = SyntheticSpec { dim: 30, rank: 4, e_norm: 1e-6, seed };
        let inst = synthetic_compact(&spec).unwrap();
        let x: Vec<f64> = (0..30).map(|i| ((i as f64) * 0.3).sin()).collect();
        let y: Vec<f64> = (0..30).map(|i| ((i as f64) * 0.9).cos()).collect();
        let ax = inst.operator.apply(&x).unwrap();
        let ay = inst.operator.apply(&y).unwrap();
        let xy: Vec<f64> = x.iter().zip(&y).map(|(a, b)| 2.0 * a - 0.5 * b).collect();
        let axy = inst.operator.apply(&xy).unwrap();
        for i in 0..30 {
            let lin = 2.0 * ax[i] - 0.5 * ay[i];
            prop_assert!((axy[i] - lin).abs() <= 1e-10 * (norm(&x) + norm(&y)));
        }
        let dense_ax = inst.dense().matvec(&x);
        for i in 0..30 {
            prop_assert!((ax[i] - dense_ax[i]).abs() <= 1e-12 * (1.0 + norm(&ax)));
        }
    }

    /// One Gram-Schmidt step reconstructs the input and leaves a vector
    /// orthogonal to the basis.
    #[test]
    fn mgs_step_reconstructs_and_orthogonalizes(seed in 0u64..500) {
        use rand::Rng;
        use rand::SeedableRng;
        let n = 12;
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let mut basis: Vec<Vec<f64>> = Vec::new();
        for _ in 0..4 {
            let v: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let step = mgs_step(&v, &basis);
            if step.norm > 1e-8 {
                let q: Vec<f64> = step.remainder.iter().map(|x| x / step.norm).collect();
                basis.push(q);
            }
        }
        let v: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let step = mgs_step(&v, &basis);
        // v = sum coeffs[j] q_j + remainder
        let mut rebuilt = step.remainder.clone();
        for (q, c) in basis.iter().zip(&step.coeffs) {
            for i in 0..n {
                rebuilt[i] += c * q[i];
            }
        }
        prop_assert!(norm(&sub(&rebuilt, &v)) <= 1e-12 * (1.0 + norm(&v)));
        for q in &basis {
            prop_assert!(dot(&step.remainder, q).abs() <= 1e-10 * (1.0 + norm(&v)));
        }
    }

    /// Thomas elimination agrees with dense LU on diagonally dominant
    /// systems.
    #[test]
    fn tridiag_solve_matches_dense_lu(seed in 0u64..500, n in 3usize..20) {
        let t = diag_dominant_tridiagonal(n, seed);
        let b: Vec<f64> = (0..n).map(|i| (i as f64 * 0.37).sin()).collect();
        let x_fast = tridiag_solve(&t, &b).unwrap();
        let x_dense = t.to_dense().lu().unwrap().solve(&b);
        prop_assert!(norm(&sub(&x_fast, &x_dense)) <= 1e-10 * (1.0 + norm(&x_dense)));
    }

    /// Without damping, every Newton step costs exactly its GMRES
    /// iterations (one evaluation each) plus one residual evaluation, so
    /// the running totals are fully determined by the inner counts.
    #[test]
    fn newton_feval_accounting_is_exact(a in 0.5f64..2.0, b in 0.5f64..2.0) {
        let sys = FnSystem::new(2, move |u: &[f64]| {
            Ok(vec![
                u[0] * u[0] + u[1] * u[1] - a,
                u[0] - b * u[1],
            ])
        });
        let cfg = NewtonConfig {
            damping: false,
            forcing: Forcing::Constant { eta: 1e-4 },
            ..NewtonConfig::default()
        };
        let out = newton_gmres(&sys, &[1.0, 1.0], &cfg).unwrap();
        prop_assert!(out.converged);
        prop_assert_eq!(out.f_norms.len(), out.inner_iterations.len());
        prop_assert_eq!(out.f_norms.len(), out.cumulative_fevals.len());
        let mut expected = 1;
        for (k, &inner) in out.inner_iterations.iter().enumerate() {
            if k > 0 {
                expected += inner + 1;
            }
            prop_assert_eq!(out.cumulative_fevals[k], expected);
        }
    }

    /// A converged undamped Newton run has strictly decreasing residual
    /// norms: each accepted step was accepted because it made progress.
    #[test]
    fn converged_newton_history_decreases(a in 0.5f64..2.0) {
        let sys = FnSystem::new(1, move |u: &[f64]| Ok(vec![u[0] * u[0] - a]));
        let cfg = NewtonConfig::default();
        let out = newton_gmres(&sys, &[2.0], &cfg).unwrap();
        prop_assert!(out.converged);
        for w in out.f_norms.windows(2) {
            prop_assert!(w[1] < w[0], "residual stalled: {} -> {}", w[0], w[1]);
        }
    }

    /// Secant tangents come back with unit length in the stacked
    /// `(u, lambda)` metric.
    #[test]
    fn secant_tangent_is_unit_length(
        du in proptest::collection::vec(-3.0f64..3.0, 3),
        dl in -3.0f64..3.0,
    ) {
        let base = vec![0.4, -0.2, 1.0];
        let curr: Vec<f64> = base.iter().zip(&du).map(|(b, d)| b + d).collect();
        prop_assume!(du.iter().any(|v| v.abs() > 1e-9) || dl.abs() > 1e-9);
        let (tu, tl) = secant_tangent((&base, 0.5), (&curr, 0.5 + dl), None).unwrap();
        let len = (dot(&tu, &tu) + tl * tl).sqrt();
        prop_assert!((len - 1.0).abs() <= 1e-12);
    }

    /// The hand-coded tridiagonal Jacobian matches finite differences of
    /// the right-hand side in random directions.
    #[test]
    fn chafee_infante_jacobian_matches_fd_probes(seed in 0u64..200) {
        use rand::Rng;
        use rand::SeedableRng;
        let prob = ChafeeInfante::new(31).unwrap();
        let lambda = 2.0;
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let u: Vec<f64> = (0..prob.dim()).map(|_| rng.gen_range(-0.8..0.8)).collect();
        let v: Vec<f64> = (0..prob.dim()).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let jac = prob.rhs_jacobian(&u, lambda).unwrap();
        let jv = jac.matvec(&v);
        let h = 1e-6;
        let up: Vec<f64> = u.iter().zip(&v).map(|(a, b)| a + h * b).collect();
        let um: Vec<f64> = u.iter().zip(&v).map(|(a, b)| a - h * b).collect();
        let fp = prob.rhs(&up, lambda);
        let fm = prob.rhs(&um, lambda);
        for i in 0..prob.dim() {
            let fd = (fp[i] - fm[i]) / (2.0 * h);
            // The rhs carries 1/h^2 ~ 100 weights, so scale the slack.
            prop_assert!((jv[i] - fd).abs() <= 1e-5 * (1.0 + fd.abs()),
                "row {}: analytic {} vs fd {}", i, jv[i], fd);
        }
    }

    /// Step counting covers the horizon: `count` steps of the implied
    /// size reach `horizon` exactly, and the implied size never exceeds
    /// the requested `dt` by more than roundoff.
    #[test]
    fn step_count_covers_the_horizon(horizon in 0.01f64..10.0, dt in 0.001f64..1.0) {
        let count = step_count(horizon, dt);
        prop_assert!(count >= 1);
        let implied = horizon / count as f64;
        prop_assert!(implied <= dt * (1.0 + 1e-8),
            "implied step {} exceeds requested {}", implied, dt);
        // One step fewer would leave part of the horizon uncovered.
        if count > 1 {
            prop_assert!((count - 1) as f64 * dt < horizon * (1.0 + 1e-9));
        }
    }

    /// The symmetric fast path and the dense Hessenberg path see the same
    /// spectrum.
    #[test]
    fn eigensolvers_agree_on_symmetric_tridiagonals(seed in 0u64..200, n in 3usize..24) {
        use rand::Rng;
        use rand::SeedableRng;
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let off: Vec<f64> = (0..n - 1).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let diag: Vec<f64> = (0..n).map(|_| rng.gen_range(-2.0..2.0)).collect();
        let t = Tridiagonal::new(off.clone(), diag, off).unwrap();
        let fast = symtridiag_eigenvalues(&t).unwrap();
        let mut dense: Vec<f64> = dense_eigenvalues(&t.to_dense())
            .unwrap()
            .into_iter()
            .map(|z| {
                assert!(z.im.abs() < 1e-8, "symmetric matrix grew imaginary parts");
                z.re
            })
            .collect();
        dense.sort_by(f64::total_cmp);
        for (a, b) in fast.iter().zip(&dense) {
            prop_assert!((a - b).abs() <= 1e-8 * (1.0 + a.abs()));
        }
    }

    /// A report's stored count is the count its own eigenvalue list
    /// produces, whatever the input ordering was.
    #[test]
    fn report_count_matches_its_eigenvalues(
        res in proptest::collection::vec(-0.5f64..1.5, 1..30),
    ) {
        let eigs: Vec<Complex64> = res.iter().map(|&r| Complex64::new(r, 0.0)).collect();
        let report = SpectrumReport::new(eigs, DEFAULT_CLUSTER, None);
        prop_assert_eq!(report.n_outside, cluster_count(&report.eigenvalues, DEFAULT_CLUSTER));
        // Sorting put the farthest-from-1 eigenvalues first.
        for w in report.eigenvalues.windows(2) {
            let d0 = (Complex64::new(1.0, 0.0) - w[0]).norm();
            let d1 = (Complex64::new(1.0, 0.0) - w[1]).norm();
            prop_assert!(d0 >= d1);
        }
    }

    /// Histories from compact-plus-noise operators always satisfy the
    /// block decay bound with the theorem's own constants.
    #[test]
    fn synthetic_histories_pass_the_decay_bound(seed in 0u64..100) {
        let spec = SyntheticSpec { dim: 60, rank: 3, e_norm: 1e-8, seed };
        let inst = synthetic_compact(&spec).unwrap();
        let b: Vec<f64> = (0..60).map(|i| ((i as f64) * 0.11).sin() + 0.3).collect();
        let out = gmres(&inst.operator, &b, &vec![0.0; 60], 1e-6, 60).unwrap();
        prop_assert!(out.iterations <= spec.rank + 1,
            "took {} iterations for rank {}", out.iterations, spec.rank);
        let check = check_residual_bound(&out.residual_norms, spec.rank, spec.e_norm, 1e4);
        prop_assert!(check.pass, "worst ratio {}", check.worst_ratio);
    }
}

/// DenseMatrix::matvec against a hand-rolled loop, one deterministic case
/// outside the proptest block as an anchor.
#[test]
fn dense_matvec_reference_case() {
    let a = DenseMatrix::from_fn(3, 3, |i, j| (i * 3 + j) as f64);
    let y = a.matvec(&[1.0, -1.0, 2.0]);
    assert_eq!(y, vec![3.0, 9.0, 15.0]);
}
