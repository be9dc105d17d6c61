//! The named studies behind `settle run`.

mod chafee;
mod heq;
mod theorem;

use crate::config::{Experiment, ExperimentConfig};
use crate::report::Emitter;

/// Runs the configured experiment, emitting its files through `em`.
/// `Ok(true)` means every required solve converged (or check passed);
/// `Ok(false)` is a solver failure with the history already written.
pub fn run(cfg: &ExperimentConfig, em: &mut Emitter) -> Result<bool, String> {
    match cfg.experiment {
        Experiment::HeqSolve => heq::solve(cfg, em),
        Experiment::HeqContinue => heq::trace(cfg, em),
        Experiment::CiSolve => chafee::solve(cfg, em),
        Experiment::CiContinue => chafee::trace(cfg, em),
        Experiment::CiHorizonSweep => chafee::horizon_sweep(cfg, em),
        Experiment::GmresTheorem => theorem::run(cfg, em),
    }
}
