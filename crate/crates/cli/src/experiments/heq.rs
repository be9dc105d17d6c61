//! Integral-equation studies: a stand-alone solve near the fold and a
//! pseudo-arclength trace through it, each with its Jacobian spectrum.

use serde_json::json;
use settle_core::continuation::{
    continue_branch, detect_folds, natural_seeds, AugmentedSystem, Branch, BranchConfig,
    BranchPoint, Fold, SolveStats,
};
use settle_core::newton::{newton_gmres, NewtonConfig};
use settle_core::problems::{HEquation, HEquationFamily};
use settle_core::spectrum::{dense_eigenvalues, fd_jacobian, SpectrumReport, DEFAULT_CLUSTER};

use crate::config::ExperimentConfig;
use crate::report::{branch_csv, folds_csv, history_csv, solution_csv, spectrum_json, Emitter};

/// Solution at `c_target` on the branch connected to c = 0.
///
/// Walks c inward halving the remaining gap to `c_target` each solve, so
/// close to the fold the seed never strays further from its branch than
/// the branch is from its fold partner.
fn reference_solution(n: usize, c_target: f64, solver: &NewtonConfig) -> Result<Vec<f64>, String> {
    let mut u = vec![1.0; n];
    let mut gap: f64 = 0.01;
    loop {
        let c = 1.0 - gap.max(1.0 - c_target);
        let eq = HEquation::new(n, c).map_err(|e| e.to_string())?;
        let out = newton_gmres(&eq, &u, solver).map_err(|e| e.to_string())?;
        if !out.converged {
            return Err(format!("reference solve stalled at c = {c}"));
        }
        u = out.solution;
        if c == c_target {
            return Ok(u);
        }
        gap /= 2.0;
    }
}

pub fn solve(cfg: &ExperimentConfig, em: &mut Emitter) -> Result<bool, String> {
    let n = cfg.problem.n_nodes;
    let c = cfg.problem.c;
    let solver = cfg.newton_config();
    let eq = HEquation::new(n, c).map_err(|e| e.to_string())?;
    let amp = cfg.solve.perturb_amplitude.unwrap_or(0.05);

    let guess: Vec<f64> = if amp > 0.0 {
        let base = reference_solution(n, c, &solver)?;
        base.iter()
            .zip(eq.nodes())
            .map(|(u, mu)| u + amp * mu.sin())
            .collect()
    } else {
        vec![1.0; n]
    };

    let out = newton_gmres(&eq, &guess, &solver).map_err(|e| e.to_string())?;
    history_csv(em, &out)?;
    solution_csv(em, "mu", &eq.nodes(), &out.solution)?;

    let jac = fd_jacobian(&eq, &out.solution).map_err(|e| e.to_string())?;
    let eigs = dense_eigenvalues(&jac).map_err(|e| e.to_string())?;
    let report = SpectrumReport::new(eigs, DEFAULT_CLUSTER, None);
    em.json("spectrum.json", &spectrum_json(&report, None, c))?;

    em.fact("converged", json!(out.converged));
    em.fact("outer_steps", json!(out.f_norms.len() - 1));
    em.fact("total_fevals", json!(out.cumulative_fevals.last()));
    em.fact("final_f_norm", json!(out.f_norms.last()));
    em.fact("n_outside", json!(report.n_outside));
    Ok(out.converged)
}

pub fn trace(cfg: &ExperimentConfig, em: &mut Emitter) -> Result<bool, String> {
    let n = cfg.problem.n_nodes;
    let solver = cfg.newton_config();
    let family = HEquationFamily { n_nodes: n };
    let cont = &cfg.continuation;
    let start = cont.start.unwrap_or(0.997);
    let dlambda = cont.dlambda.unwrap_or(cont.ds / 2.0);

    let seeds = natural_seeds(&family, &vec![1.0; n], start, dlambda, &solver)
        .map_err(|e| e.to_string())?;
    let bc = BranchConfig {
        ds: cont.ds,
        n_steps: cont.n_steps,
        max_retries: cont.max_retries,
        direction: cont.direction,
    };
    let branch =
        continue_branch(&family, seeds.0, seeds.1, &bc, &solver).map_err(|e| e.to_string())?;
    branch_csv(em, &branch)?;
    let folds = detect_folds(&branch);
    folds_csv(em, &folds)?;
    augmented_spectrum(cfg, em, &branch, &folds, &solver)?;

    em.fact("points", json!(branch.points.len()));
    em.fact("truncated", json!(branch.truncated));
    em.fact(
        "fold_lambdas",
        json!(folds.iter().map(|f| f.lambda).collect::<Vec<_>>()),
    );
    Ok(!branch.truncated)
}

/// Spectrum of the arclength-augmented system at the configured parameter:
/// the solution re-computed there, with the secant tangent of the nearest
/// branch point on the near side of the first fold, oriented toward
/// decreasing parameter. (Reversing the tangent negates the constraint
/// row and turns the far eigenvalue pair from real to imaginary.)
fn augmented_spectrum(
    cfg: &ExperimentConfig,
    em: &mut Emitter,
    branch: &Branch,
    folds: &[Fold],
    solver: &NewtonConfig,
) -> Result<(), String> {
    let n = cfg.problem.n_nodes;
    let c = cfg.problem.c;
    let cut = folds
        .first()
        .map(|f| f.index)
        .unwrap_or(branch.points.len());
    let nearest = match branch.points[..cut]
        .iter()
        .min_by(|a, b| (a.lambda - c).abs().total_cmp(&(b.lambda - c).abs()))
    {
        Some(point) => point,
        None => return Ok(()),
    };

    let u = reference_solution(n, c, solver)?;
    let orient = if nearest.tangent_lambda > 0.0 {
        -1.0
    } else {
        1.0
    };
    let base = BranchPoint {
        u: u.clone(),
        lambda: c,
        s: 0.0,
        tangent_u: nearest.tangent_u.iter().map(|t| orient * t).collect(),
        tangent_lambda: orient * nearest.tangent_lambda,
        stats: SolveStats::default(),
    };
    let family = HEquationFamily { n_nodes: n };
    let aug = AugmentedSystem {
        family: &family,
        base: &base,
        ds: 0.0,
    };
    let mut x = u;
    x.push(c);
    let jac = fd_jacobian(&aug, &x).map_err(|e| e.to_string())?;
    let eigs = dense_eigenvalues(&jac).map_err(|e| e.to_string())?;
    let report = SpectrumReport::new(eigs, DEFAULT_CLUSTER, None);
    em.json("augmented_spectrum.json", &spectrum_json(&report, None, c))?;
    em.fact("augmented_n_outside", json!(report.n_outside));
    Ok(())
}
