//! Parameter sweeps: independent runs over a grid, optionally in parallel.

use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::config::{Overrides, ScenarioConfig};
use crate::exit::{CliError, ExitCode};
use crate::run::run_scenario;

/// `base` run once per point of the grid `hbar x dim x dt`; an empty list
/// keeps the base value.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepConfig {
    pub base: ScenarioConfig,
    #[serde(default)]
    pub hbar: Vec<f64>,
    #[serde(default)]
    pub dim: Vec<usize>,
    #[serde(default)]
    pub dt: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepResult {
    pub index: usize,
    pub hbar: f64,
    pub dim: usize,
    pub dt: f64,
    pub output_dir: String,
    pub exit_code: i32,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

impl SweepConfig {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::config(format!("{}: {e}", path.display())))?;
        serde_json::from_str(&text).map_err(|e| CliError::config(format!("{}: {e}", path.display())))
    }

    /// One configuration per grid point, each writing to `run_NNN` under
    /// the base output directory.
    pub fn expand(&self) -> Vec<ScenarioConfig> {
        let or = |v: &[f64], d: f64| if v.is_empty() { vec![d] } else { v.to_vec() };
        let hbars = or(&self.hbar, self.base.ctx.hbar);
        let dts = or(&self.dt, self.base.evolution.dt);
        let dims = if self.dim.is_empty() { vec![self.base.ctx.dim] } else { self.dim.clone() };
        let mut out = vec![];
        for &h in &hbars {
            for &n in &dims {
                for &dt in &dts {
                    let mut c = self.base.clone();
                    c.ctx.hbar = h;
                    c.ctx.dim = n;
                    c.evolution.dt = dt;
                    c.output.dir = self.base.output.dir.join(format!("run_{:03}", out.len()));
                    out.push(c);
                }
            }
        }
        out
    }
}

/// Runs every grid point on `jobs` threads and writes `sweep.json` to the
/// base output directory. Returns the per-run results in grid order.
pub fn run_sweep(sweep: &SweepConfig, overrides: &Overrides, jobs: usize) -> Result<Vec<SweepResult>, CliError> {
    let mut sweep = sweep.clone();
    overrides.apply(&mut sweep.base);
    let configs = sweep.expand();
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs.max(1))
        .build()
        .map_err(|e| CliError::new(ExitCode::Runtime, e.to_string()))?;
    let results: Vec<SweepResult> = pool.install(|| {
        configs
            .par_iter()
            .enumerate()
            .map(|(index, c)| {
                let (exit_code, error) = match run_scenario(c) {
                    Ok(o) => (o.exit_code().code(), None),
                    Err(e) => (e.code.code(), Some(e.message)),
                };
                SweepResult {
                    index,
                    hbar: c.ctx.hbar,
                    dim: c.ctx.dim,
                    dt: c.evolution.dt,
                    output_dir: c.output.dir.display().to_string(),
                    exit_code,
                    error,
                }
            })
            .collect()
    });
    std::fs::create_dir_all(&sweep.base.output.dir)?;
    let text = serde_json::to_string_pretty(&results).expect("results serialize");
    std::fs::write(sweep.base.output.dir.join("sweep.json"), text + "\n")?;
    Ok(results)
}
