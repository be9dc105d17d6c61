//! Reaction-diffusion studies driven through the time-stepper: fixed-point
//! solves, branch continuation in lambda, and the horizon sweep that
//! watches eigenvalues leave the cluster.

use serde_json::json;
use settle_core::continuation::{
    continue_branch, detect_folds, natural_seeds, BranchConfig, FixedPointFamily,
};
use settle_core::linalg::axpy;
use settle_core::newton::newton_gmres;
use settle_core::problems::{direct_steady_state, ChafeeInfante};
use settle_core::spectrum::{timestepper_spectrum, SpectrumReport, SpectrumRoute};
use settle_core::timestepper::{FixedPointSystem, StepperConfig};

use crate::config::ExperimentConfig;
use crate::report::{
    branch_csv, folds_csv, full, history_csv, solution_csv, spectrum_json, Emitter,
};

/// Tolerance of the direct (tridiagonal-Newton) reference states the
/// experiments hang off; well below every solver tolerance in use.
const REFERENCE_TOL: f64 = 1e-11;
const REFERENCE_ITERS: usize = 80;

/// Multipliers this far above 1 count as growing modes.
const GROWTH_MARGIN: f64 = 1e-9;

fn growing_multipliers(report: &SpectrumReport) -> usize {
    report
        .multipliers
        .as_ref()
        .map(|m| m.iter().filter(|&&x| x > 1.0 + GROWTH_MARGIN).count())
        .unwrap_or(0)
}

pub fn solve(cfg: &ExperimentConfig, em: &mut Emitter) -> Result<bool, String> {
    let prob = ChafeeInfante::new(cfg.problem.n_points).map_err(|e| e.to_string())?;
    let lambda = cfg.problem.lambda;
    let step = cfg.stepper_config().ok_or("stepper: section is missing")?;
    let solver = cfg.newton_config();
    let amp = cfg.solve.perturb_amplitude.unwrap_or(0.1);
    let profile = prob.sine_profile(cfg.solve.guess_mode, cfg.solve.guess_amplitude);

    let start = if amp > 0.0 {
        let mut u = direct_steady_state(&prob, lambda, &profile, REFERENCE_TOL, REFERENCE_ITERS)
            .map_err(|e| e.to_string())?;
        axpy(1.0, &prob.sine_profile(1, amp), &mut u);
        u
    } else {
        profile
    };

    let sys = FixedPointSystem::new(&prob, lambda, step.clone());
    let out = newton_gmres(&sys, &start, &solver).map_err(|e| e.to_string())?;
    history_csv(em, &out)?;
    solution_csv(em, "x", &prob.interior_grid(), &out.solution)?;

    let report = timestepper_spectrum(&prob, &out.solution, lambda, &step, SpectrumRoute::ExactMap)
        .map_err(|e| e.to_string())?;
    em.json(
        "spectrum.json",
        &spectrum_json(&report, Some(step.horizon), lambda),
    )?;

    em.fact("converged", json!(out.converged));
    em.fact("outer_steps", json!(out.f_norms.len() - 1));
    em.fact("total_fevals", json!(out.cumulative_fevals.last()));
    em.fact("final_f_norm", json!(out.f_norms.last()));
    em.fact("last_step_inner", json!(out.inner_iterations.last()));
    em.fact("n_outside", json!(report.n_outside));
    em.fact("growing_multipliers", json!(growing_multipliers(&report)));
    Ok(out.converged)
}

pub fn trace(cfg: &ExperimentConfig, em: &mut Emitter) -> Result<bool, String> {
    let prob = ChafeeInfante::new(cfg.problem.n_points).map_err(|e| e.to_string())?;
    let step = cfg.stepper_config().ok_or("stepper: section is missing")?;
    let solver = cfg.newton_config();
    let cont = &cfg.continuation;
    let lambda0 = cont.start.unwrap_or(cfg.problem.lambda);
    let profile = prob.sine_profile(cfg.solve.guess_mode, cfg.solve.guess_amplitude);

    let u0 = direct_steady_state(&prob, lambda0, &profile, REFERENCE_TOL, REFERENCE_ITERS)
        .map_err(|e| e.to_string())?;
    let family = FixedPointFamily {
        prob: &prob,
        cfg: step,
    };
    let dlambda = cont.dlambda.unwrap_or(cont.ds / 2.0);
    let seeds =
        natural_seeds(&family, &u0, lambda0, dlambda, &solver).map_err(|e| e.to_string())?;
    let bc = BranchConfig {
        ds: cont.ds,
        n_steps: cont.n_steps,
        max_retries: cont.max_retries,
        direction: cont.direction,
    };
    let branch =
        continue_branch(&family, seeds.0, seeds.1, &bc, &solver).map_err(|e| e.to_string())?;
    branch_csv(em, &branch)?;
    folds_csv(em, &detect_folds(&branch))?;

    let max_inner = branch
        .points
        .iter()
        .flat_map(|p| p.stats.inner_iterations.iter().copied())
        .max()
        .unwrap_or(0);
    em.fact("points", json!(branch.points.len()));
    em.fact("truncated", json!(branch.truncated));
    em.fact("max_inner", json!(max_inner));
    Ok(!branch.truncated)
}

pub fn horizon_sweep(cfg: &ExperimentConfig, em: &mut Emitter) -> Result<bool, String> {
    let prob = ChafeeInfante::new(cfg.problem.n_points).map_err(|e| e.to_string())?;
    let lambda = cfg.problem.lambda;
    let solver = cfg.newton_config();
    let amp = cfg.solve.perturb_amplitude.unwrap_or(0.1);
    let profile = prob.sine_profile(cfg.solve.guess_mode, cfg.solve.guess_amplitude);
    let u_star = direct_steady_state(&prob, lambda, &profile, REFERENCE_TOL, REFERENCE_ITERS)
        .map_err(|e| e.to_string())?;

    let mut rows = Vec::new();
    let mut all_converged = true;
    for &horizon in &cfg.sweep.horizons {
        let step = StepperConfig::implicit_trapezoid(horizon, horizon / cfg.sweep.dt_ratio);
        let report = timestepper_spectrum(&prob, &u_star, lambda, &step, SpectrumRoute::ExactMap)
            .map_err(|e| e.to_string())?;

        let mut start = u_star.clone();
        axpy(1.0, &prob.sine_profile(1, amp), &mut start);
        let sys = FixedPointSystem::new(&prob, lambda, step);
        let out = newton_gmres(&sys, &start, &solver).map_err(|e| e.to_string())?;
        all_converged &= out.converged;

        let last_step_fevals = out.inner_iterations.last().map(|i| i + 1).unwrap_or(0);
        rows.push(vec![
            full(horizon),
            report.n_outside.to_string(),
            last_step_fevals.to_string(),
            out.cumulative_fevals
                .last()
                .copied()
                .unwrap_or(0)
                .to_string(),
        ]);
    }
    em.csv(
        "sweep.csv",
        &["T", "n_outside", "last_step_fevals", "total_fevals"],
        &rows,
    )?;
    em.fact("horizons", json!(cfg.sweep.horizons));
    Ok(all_converged)
}
