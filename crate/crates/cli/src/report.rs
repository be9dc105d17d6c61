//! Run artifacts: full-precision CSV, spectrum JSON, and a summary that
//! lists every file written. Each file lands through a temp-and-rename.

use std::fs;
use std::path::{Path, PathBuf};

use serde_json::{json, Map, Value};
use settle_core::continuation::{Branch, Fold};
use settle_core::linalg::{norm, norm_inf};
use settle_core::newton::NewtonOutcome;
use settle_core::spectrum::{SpectrumReport, IMAG_TOL};

/// One float at 17 significant digits: enough to reproduce the bits.
pub fn full(x: f64) -> String {
    format!("{x:.16e}")
}

/// Collects the output files of one run and assembles its summary.
pub struct Emitter {
    dir: PathBuf,
    files: Vec<String>,
    facts: Map<String, Value>,
}

impl Emitter {
    pub fn new(dir: &Path) -> Result<Self, String> {
        fs::create_dir_all(dir).map_err(|e| format!("cannot create {}: {e}", dir.display()))?;
        Ok(Emitter {
            dir: dir.to_path_buf(),
            files: Vec::new(),
            facts: Map::new(),
        })
    }

    fn write_atomic(&self, name: &str, contents: &str) -> Result<(), String> {
        let path = self.dir.join(name);
        let tmp = self.dir.join(format!("{name}.tmp"));
        fs::write(&tmp, contents).map_err(|e| format!("cannot write {}: {e}", tmp.display()))?;
        fs::rename(&tmp, &path).map_err(|e| format!("cannot finish {}: {e}", path.display()))
    }

    /// Writes a CSV file with a header row and records it for the summary.
    pub fn csv(&mut self, name: &str, header: &[&str], rows: &[Vec<String>]) -> Result<(), String> {
        let mut text = header.join(",");
        text.push('\n');
        for row in rows {
            text.push_str(&row.join(","));
            text.push('\n');
        }
        self.write_atomic(name, &text)?;
        self.files.push(name.to_string());
        Ok(())
    }

    /// Writes a JSON file and records it for the summary.
    pub fn json(&mut self, name: &str, value: &Value) -> Result<(), String> {
        let mut text = serde_json::to_string_pretty(value)
            .map_err(|e| format!("cannot encode {name}: {e}"))?;
        text.push('\n');
        self.write_atomic(name, &text)?;
        self.files.push(name.to_string());
        Ok(())
    }

    /// Records one key-value pair for the summary.
    pub fn fact(&mut self, key: &str, value: Value) {
        self.facts.insert(key.to_string(), value);
    }

    /// Writes `summary.json` and returns its path.
    pub fn finish(
        mut self,
        experiment: &str,
        status: &str,
        wall_time_s: f64,
    ) -> Result<PathBuf, String> {
        let mut top = Map::new();
        top.insert("experiment".into(), json!(experiment));
        top.insert("status".into(), json!(status));
        top.insert("files".into(), json!(self.files));
        top.insert("wall_time_s".into(), json!(wall_time_s));
        top.append(&mut self.facts);
        let mut text = serde_json::to_string_pretty(&Value::Object(top))
            .map_err(|e| format!("cannot encode summary: {e}"))?;
        text.push('\n');
        self.write_atomic("summary.json", &text)?;
        Ok(self.dir.join("summary.json"))
    }
}

/// Spectrum report as JSON. Imaginary parts inside the flatten tolerance
/// are reported as exact zeros.
pub fn spectrum_json(report: &SpectrumReport, horizon: Option<f64>, lambda: f64) -> Value {
    let eigenvalues: Vec<[f64; 2]> = report
        .eigenvalues
        .iter()
        .map(|z| {
            let im = if z.im.abs() <= IMAG_TOL { 0.0 } else { z.im };
            [z.re, im]
        })
        .collect();
    json!({
        "eigenvalues": eigenvalues,
        "cluster": [report.cluster.0, report.cluster.1],
        "n_outside": report.n_outside,
        "T": horizon,
        "lambda": lambda,
        "multipliers": report.multipliers,
    })
}

/// Convergence history: running residual evaluations against `‖F‖`.
pub fn history_csv(em: &mut Emitter, out: &NewtonOutcome) -> Result<(), String> {
    let rows: Vec<Vec<String>> = out
        .f_norms
        .iter()
        .zip(&out.cumulative_fevals)
        .map(|(f, n)| vec![n.to_string(), full(*f)])
        .collect();
    em.csv("history.csv", &["fevals", "f_norm"], &rows)
}

/// Grid coordinate and state, one row per node.
pub fn solution_csv(em: &mut Emitter, coord: &str, grid: &[f64], u: &[f64]) -> Result<(), String> {
    let rows: Vec<Vec<String>> = grid
        .iter()
        .zip(u)
        .map(|(x, v)| vec![full(*x), full(*v)])
        .collect();
    em.csv("solution.csv", &[coord, "u"], &rows)
}

/// One row per accepted branch point, with the corrector work behind it.
pub fn branch_csv(em: &mut Emitter, branch: &Branch) -> Result<(), String> {
    let rows: Vec<Vec<String>> = branch
        .points
        .iter()
        .map(|p| {
            vec![
                full(p.s),
                full(p.lambda),
                full(norm(&p.u)),
                full(norm_inf(&p.u)),
                p.stats.outer_steps.to_string(),
                p.stats.inner_iterations.iter().sum::<usize>().to_string(),
                p.stats.total_fevals.to_string(),
            ]
        })
        .collect();
    em.csv(
        "branch.csv",
        &[
            "s",
            "lambda",
            "u_norm2",
            "u_norm_inf",
            "outer",
            "inner",
            "fevals",
        ],
        &rows,
    )
}

/// Detected folds: branch index and interpolated parameter value.
pub fn folds_csv(em: &mut Emitter, folds: &[Fold]) -> Result<(), String> {
    let rows: Vec<Vec<String>> = folds
        .iter()
        .map(|f| vec![f.index.to_string(), full(f.lambda)])
        .collect();
    em.csv("folds.csv", &["index", "lambda"], &rows)
}
