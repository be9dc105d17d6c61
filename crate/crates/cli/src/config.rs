//! Experiment configuration: one TOML file per run, dotted-path overrides
//! from the command line, and validation that names the offending field.

use std::path::{Path, PathBuf};

use serde::Deserialize;
use settle_core::newton::{Forcing, NewtonConfig};
use settle_core::timestepper::{StepMethod, StepperConfig};

/// The named studies the binary can run.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Experiment {
    HeqSolve,
    HeqContinue,
    CiSolve,
    CiContinue,
    CiHorizonSweep,
    GmresTheorem,
}

impl Experiment {
    pub fn name(self) -> &'static str {
        match self {
            Experiment::HeqSolve => "heq_solve",
            Experiment::HeqContinue => "heq_continue",
            Experiment::CiSolve => "ci_solve",
            Experiment::CiContinue => "ci_continue",
            Experiment::CiHorizonSweep => "ci_horizon_sweep",
            Experiment::GmresTheorem => "gmres_theorem",
        }
    }

    fn needs_stepper(self) -> bool {
        matches!(self, Experiment::CiSolve | Experiment::CiContinue)
    }

    fn is_continuation(self) -> bool {
        matches!(self, Experiment::HeqContinue | Experiment::CiContinue)
    }
}

/// A full experiment description, as read from TOML.
#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub experiment: Experiment,
    pub output_dir: PathBuf,
    /// Base seed for the randomized synthetic-operator instances.
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub problem: ProblemSection,
    #[serde(default)]
    pub solver: SolverSection,
    #[serde(default)]
    pub solve: SolveSection,
    pub stepper: Option<StepperSection>,
    #[serde(default)]
    pub continuation: ContinuationSection,
    #[serde(default)]
    pub sweep: SweepSection,
    #[serde(default)]
    pub theorem: TheoremSection,
}

/// Which instance of each benchmark problem to build.
#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ProblemSection {
    /// Integral-equation parameter.
    pub c: f64,
    /// Integral-equation grid size.
    pub n_nodes: usize,
    /// Reaction-diffusion bifurcation parameter.
    pub lambda: f64,
    /// Reaction-diffusion grid size, boundaries included.
    pub n_points: usize,
    /// Synthetic-operator dimension.
    pub dim: usize,
    /// Rank of the synthetic operator's slow part.
    pub rank: usize,
    /// Norm of the synthetic operator's noise part.
    pub e_norm: f64,
}

impl Default for ProblemSection {
    fn default() -> Self {
        ProblemSection {
            c: 0.9999179,
            n_nodes: 100,
            lambda: 2.1386697,
            n_points: 201,
            dim: 400,
            rank: 10,
            e_norm: 1e-10,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ForcingKind {
    EisenstatWalker,
    Constant,
}

/// Outer Newton-GMRES settings shared by every experiment.
#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SolverSection {
    pub atol: f64,
    pub rtol: f64,
    pub forcing: ForcingKind,
    /// Inner relative tolerance when `forcing = "constant"`.
    pub eta: f64,
    pub max_outer: usize,
    pub max_inner: usize,
    pub damping: bool,
}

impl Default for SolverSection {
    fn default() -> Self {
        SolverSection {
            atol: 1e-12,
            rtol: 1e-12,
            forcing: ForcingKind::EisenstatWalker,
            eta: 1e-4,
            max_outer: 40,
            max_inner: 40,
            damping: false,
        }
    }
}

/// Initial-guess construction for the single-solve experiments.
#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SolveSection {
    /// Sine mode of the starting profile (reaction-diffusion only).
    pub guess_mode: u32,
    pub guess_amplitude: f64,
    /// Bump added to the converged reference state before re-solving; 0
    /// starts from the bare profile (or from all-ones for the integral
    /// equation). Defaults to 0.05 for the integral equation and 0.1 for
    /// the PDE when absent.
    pub perturb_amplitude: Option<f64>,
}

impl Default for SolveSection {
    fn default() -> Self {
        SolveSection {
            guess_mode: 1,
            guess_amplitude: 0.6,
            perturb_amplitude: None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MethodKind {
    Rk4,
    ImplicitTrapezoid,
}

/// Time-stepper settings for the PDE experiments.
#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StepperSection {
    pub method: MethodKind,
    /// Reporting horizon: the integration time behind one residual.
    pub t_horizon: f64,
    pub dt: f64,
    /// Stage tolerance of the implicit steps.
    #[serde(default = "default_stage_tol")]
    pub newton_tol: f64,
}

fn default_stage_tol() -> f64 {
    1e-15
}

/// Branch-tracing settings.
#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ContinuationSection {
    /// Arclength step between accepted points.
    pub ds: f64,
    /// Points appended after the two seeds.
    pub n_steps: usize,
    /// Step halvings allowed when a corrector fails.
    pub max_retries: usize,
    /// +1.0 walks from the first seed through the second and onward,
    /// -1.0 walks the opposite way.
    pub direction: f64,
    /// Parameter of the first natural-continuation seed; defaults to
    /// 0.997 for the integral equation and to problem.lambda for the PDE.
    pub start: Option<f64>,
    /// Parameter offset between the two seeds; defaults to ds / 2.
    pub dlambda: Option<f64>,
}

impl Default for ContinuationSection {
    fn default() -> Self {
        ContinuationSection {
            ds: 0.01,
            n_steps: 50,
            max_retries: 8,
            direction: 1.0,
            start: None,
            dlambda: None,
        }
    }
}

/// Horizon-sweep settings.
#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SweepSection {
    /// Reporting horizons, swept in the order given.
    pub horizons: Vec<f64>,
    /// Steps per horizon: dt = T / dt_ratio.
    pub dt_ratio: f64,
}

impl Default for SweepSection {
    fn default() -> Self {
        SweepSection {
            horizons: vec![4.0, 2.0, 1.0, 0.5, 0.3, 0.1, 0.07, 0.04, 0.02],
            dt_ratio: 256.0,
        }
    }
}

/// Synthetic-operator study settings.
#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TheoremSection {
    /// Independently seeded instances per run.
    pub trials: usize,
    /// GMRES stop tolerance for the counted runs.
    pub eta: f64,
    /// Slack constant in the residual decay allowance.
    pub c_cap: f64,
}

impl Default for TheoremSection {
    fn default() -> Self {
        TheoremSection {
            trials: 50,
            eta: 1e-6,
            c_cap: 1e4,
        }
    }
}

impl ExperimentConfig {
    pub fn newton_config(&self) -> NewtonConfig {
        let s = &self.solver;
        NewtonConfig {
            atol: s.atol,
            rtol: s.rtol,
            forcing: match s.forcing {
                ForcingKind::EisenstatWalker => Forcing::default(),
                ForcingKind::Constant => Forcing::Constant { eta: s.eta },
            },
            max_outer: s.max_outer,
            max_inner: s.max_inner,
            damping: s.damping,
        }
    }

    pub fn stepper_config(&self) -> Option<StepperConfig> {
        self.stepper.as_ref().map(|s| StepperConfig {
            method: match s.method {
                MethodKind::Rk4 => StepMethod::Rk4,
                MethodKind::ImplicitTrapezoid => StepMethod::ImplicitTrapezoid,
            },
            horizon: s.t_horizon,
            dt: s.dt,
            newton_tol: s.newton_tol,
        })
    }

    /// Every violated invariant, each naming the config field to fix.
    /// An empty list means the config is runnable.
    pub fn validate(&self) -> Vec<String> {
        let mut issues = Vec::new();
        let e = self.experiment;

        if self.output_dir.as_os_str().is_empty() {
            issues.push("output_dir: must not be empty".into());
        }

        let s = &self.solver;
        if !(s.atol > 0.0 && s.atol.is_finite()) {
            issues.push(format!("solver.atol: must be positive, got {}", s.atol));
        }
        if !(s.rtol > 0.0 && s.rtol.is_finite()) {
            issues.push(format!("solver.rtol: must be positive, got {}", s.rtol));
        }
        if s.forcing == ForcingKind::Constant && !(s.eta > 0.0 && s.eta < 1.0) {
            issues.push(format!("solver.eta: must lie in (0, 1), got {}", s.eta));
        }
        if s.max_outer == 0 {
            issues.push("solver.max_outer: must be at least 1".into());
        }
        if s.max_inner == 0 {
            issues.push("solver.max_inner: must be at least 1".into());
        }

        match e {
            Experiment::HeqSolve | Experiment::HeqContinue => {
                if !(0.0..=1.0).contains(&self.problem.c) {
                    issues.push(format!(
                        "problem.c: must lie in [0, 1], got {}",
                        self.problem.c
                    ));
                }
                if self.problem.n_nodes < 2 {
                    issues.push("problem.n_nodes: must be at least 2".into());
                }
                if self.problem.n_nodes > 499 {
                    issues.push(format!(
                        "problem.n_nodes: dense eigensolver is capped at 499 nodes, got {}",
                        self.problem.n_nodes
                    ));
                }
            }
            Experiment::CiSolve | Experiment::CiContinue | Experiment::CiHorizonSweep => {
                if self.problem.n_points < 3 {
                    issues.push("problem.n_points: needs interior points, so at least 3".into());
                }
                if self.solve.guess_mode == 0 {
                    issues.push("solve.guess_mode: must be at least 1".into());
                }
            }
            Experiment::GmresTheorem => {
                let p = &self.problem;
                if p.rank == 0 || p.rank >= p.dim {
                    issues.push(format!(
                        "problem.rank: must lie in [1, dim), got {} with dim {}",
                        p.rank, p.dim
                    ));
                }
                if !(p.e_norm >= 0.0 && p.e_norm.is_finite()) {
                    issues.push(format!(
                        "problem.e_norm: must be non-negative, got {}",
                        p.e_norm
                    ));
                }
                let t = &self.theorem;
                if t.trials == 0 {
                    issues.push("theorem.trials: must be at least 1".into());
                }
                if !(t.eta > 0.0 && t.eta < 1.0) {
                    issues.push(format!("theorem.eta: must lie in (0, 1), got {}", t.eta));
                }
                if !(t.c_cap > 0.0 && t.c_cap.is_finite()) {
                    issues.push(format!("theorem.c_cap: must be positive, got {}", t.c_cap));
                }
            }
        }

        if e.needs_stepper() {
            match &self.stepper {
                None => issues.push(format!("stepper: section is required for {}", e.name())),
                Some(st) => {
                    if !(st.t_horizon > 0.0 && st.t_horizon.is_finite()) {
                        issues.push(format!(
                            "stepper.t_horizon: must be positive, got {}",
                            st.t_horizon
                        ));
                    }
                    if !(st.dt > 0.0 && st.dt.is_finite()) || st.dt > st.t_horizon {
                        issues.push(format!(
                            "stepper.dt: must lie in (0, t_horizon], got {}",
                            st.dt
                        ));
                    }
                    if !(st.newton_tol > 0.0) {
                        issues.push(format!(
                            "stepper.newton_tol: must be positive, got {}",
                            st.newton_tol
                        ));
                    }
                }
            }
        }

        if e.is_continuation() {
            let c = &self.continuation;
            if !(c.ds > 0.0 && c.ds.is_finite()) {
                issues.push(format!("continuation.ds: must be positive, got {}", c.ds));
            }
            if c.n_steps == 0 {
                issues.push("continuation.n_steps: must be at least 1".into());
            }
            if c.direction != 1.0 && c.direction != -1.0 {
                issues.push(format!(
                    "continuation.direction: must be +1.0 or -1.0, got {}",
                    c.direction
                ));
            }
            if c.dlambda == Some(0.0) {
                issues.push("continuation.dlambda: must be nonzero".into());
            }
        }

        if e == Experiment::CiHorizonSweep {
            if self.sweep.horizons.is_empty() {
                issues.push("sweep.horizons: must not be empty".into());
            }
            for (i, t) in self.sweep.horizons.iter().enumerate() {
                if !(*t > 0.0 && t.is_finite()) {
                    issues.push(format!("sweep.horizons[{i}]: must be positive, got {t}"));
                }
            }
            if !(self.sweep.dt_ratio >= 2.0 && self.sweep.dt_ratio.is_finite()) {
                issues.push(format!(
                    "sweep.dt_ratio: must be at least 2, got {}",
                    self.sweep.dt_ratio
                ));
            }
        }

        if let Some(p) = self.solve.perturb_amplitude {
            if !(p >= 0.0 && p.is_finite()) {
                issues.push(format!(
                    "solve.perturb_amplitude: must be non-negative, got {p}"
                ));
            }
        }

        issues
    }
}

/// Reads `path`, applies `key=value` overrides, and deserializes.
pub fn load(path: &Path, overrides: &[String]) -> Result<ExperimentConfig, String> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| format!("cannot read {}: {e}", path.display()))?;
    let mut table: toml::Table = text
        .parse()
        .map_err(|e| format!("{}: {e}", path.display()))?;
    for item in overrides {
        apply_override(&mut table, item)?;
    }
    toml::Value::Table(table)
        .try_into()
        .map_err(|e| format!("{}: {e}", path.display()))
}

/// Sets one `a.b.c=value` override, creating intermediate tables.
fn apply_override(root: &mut toml::Table, item: &str) -> Result<(), String> {
    let (path, raw) = item
        .split_once('=')
        .ok_or_else(|| format!("override '{item}' is not of the form key=value"))?;
    let mut parts: Vec<&str> = path.split('.').collect();
    if parts.iter().any(|p| p.is_empty()) {
        return Err(format!("override '{item}' has an empty path segment"));
    }
    let last = parts.pop().expect("split yields at least one segment");
    let mut node = root;
    for part in parts {
        node = node
            .entry(part.to_string())
            .or_insert_with(|| toml::Value::Table(toml::Table::new()))
            .as_table_mut()
            .ok_or_else(|| format!("override '{item}': '{part}' is not a table"))?;
    }
    node.insert(last.to_string(), parse_scalar(raw));
    Ok(())
}

/// Parses the value side as TOML, falling back to a plain string.
fn parse_scalar(raw: &str) -> toml::Value {
    format!("v = {raw}")
        .parse::<toml::Table>()
        .ok()
        .and_then(|mut t| t.remove("v"))
        .unwrap_or_else(|| toml::Value::String(raw.to_string()))
}
