//! Scenario configuration: JSON files, built-in presets and flag overrides.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use superquant::evolve::{EvolutionSpec, Method, Picture};
use superquant::hilbert::QuantizationContext;
use superquant::lindblad::{derive_params, FokkerPlanckCoeffs};
use superquant::superop::Ordering;
use superquant::symbol::DynOpSymbol;
use superquant::verify::DEFAULT_SEED;

use crate::exit::CliError;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
#[value(rename_all = "snake_case")]
pub enum ScenarioName {
    Harmonic,
    Damped,
    Lorenz,
    Rossler,
    LeipnikNewton,
    FokkerPlanck,
    QuantumLorenz,
    Custom,
}

impl ScenarioName {
    pub fn as_str(&self) -> &'static str {
        match self {
            ScenarioName::Harmonic => "harmonic",
            ScenarioName::Damped => "damped",
            ScenarioName::Lorenz => "lorenz",
            ScenarioName::Rossler => "rossler",
            ScenarioName::LeipnikNewton => "leipnik_newton",
            ScenarioName::FokkerPlanck => "fokker_planck",
            ScenarioName::QuantumLorenz => "quantum_lorenz",
            ScenarioName::Custom => "custom",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ContextConfig {
    pub hbar: f64,
    pub dim: usize,
    /// Auxiliary oscillator scale. When absent, the system's own mass and
    /// frequency if it has a positive frequency, else 1.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub scale_mass: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub scale_omega: Option<f64>,
}

/// Oscillator with friction. `alpha` is `n x n`; `beta` is `n x n x n`
/// row-major or empty.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FrictionConfig {
    pub mass: f64,
    pub omega: f64,
    pub alpha: Vec<Vec<f64>>,
    #[serde(default)]
    pub beta: Vec<f64>,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LorenzParams {
    pub sigma: f64,
    pub r: f64,
    pub b: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InitialState {
    pub q0: Vec<f64>,
    pub p0: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputConfig {
    pub dir: PathBuf,
    #[serde(default = "default_trajectory")]
    pub trajectory: String,
    #[serde(default = "default_classical")]
    pub classical: String,
    #[serde(default = "default_manifest")]
    pub manifest: String,
    #[serde(default = "default_report")]
    pub report: String,
}

fn default_trajectory() -> String {
    "trajectory.csv".into()
}
fn default_classical() -> String {
    "classical.csv".into()
}
fn default_manifest() -> String {
    "manifest.json".into()
}
fn default_report() -> String {
    "verification.json".into()
}

impl OutputConfig {
    pub fn in_dir(dir: impl Into<PathBuf>) -> Self {
        Self {
            dir: dir.into(),
            trajectory: default_trajectory(),
            classical: default_classical(),
            manifest: default_manifest(),
            report: default_report(),
        }
    }

    pub fn trajectory_path(&self) -> PathBuf {
        self.dir.join(&self.trajectory)
    }
    pub fn classical_path(&self) -> PathBuf {
        self.dir.join(&self.classical)
    }
    pub fn manifest_path(&self) -> PathBuf {
        self.dir.join(&self.manifest)
    }
    pub fn report_path(&self) -> PathBuf {
        self.dir.join(&self.report)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    pub name: ScenarioName,
    pub ctx: ContextConfig,
    pub evolution: EvolutionSpec,
    pub initial: InitialState,
    pub output: OutputConfig,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub friction: Option<FrictionConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub fokker_planck: Option<FokkerPlanckCoeffs>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lorenz: Option<LorenzParams>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub custom: Option<DynOpSymbol>,
    /// Subset of `q1..qn, p1..pn`; all of them when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub observables: Option<Vec<String>>,
    #[serde(default)]
    pub ordering: Ordering,
    #[serde(default = "default_seed")]
    pub seed: u64,
    #[serde(default)]
    pub classical_only: bool,
    #[serde(default)]
    pub allow_large: bool,
    #[serde(default)]
    pub verify: bool,
}

fn default_seed() -> u64 {
    DEFAULT_SEED
}

/// Largest per-mode dimension for three-mode quantum runs.
pub const LARGE_DIM_CAP: usize = 8;

impl ScenarioConfig {
    /// Built-in defaults for each scenario.
    pub fn preset(name: ScenarioName) -> Self {
        let tau = 2.0 * std::f64::consts::PI;
        let rk4 = |dt: f64, steps: usize, every: usize| {
            EvolutionSpec::new(dt, steps, Picture::Schroedinger, Method::Rk4).recording_every(every)
        };
        let ctx = |hbar: f64, dim: usize| ContextConfig { hbar, dim, scale_mass: None, scale_omega: None };
        let single = InitialState { q0: vec![1.0], p0: vec![0.0] };
        let three = InitialState { q0: vec![0.0; 3], p0: vec![1.0; 3] };
        let mut c = Self {
            name,
            ctx: ctx(1.0, 40),
            evolution: rk4(tau / 2000.0, 2000, 10),
            initial: single,
            output: OutputConfig::in_dir(format!("out/{}", name.as_str())),
            friction: None,
            fokker_planck: None,
            lorenz: None,
            custom: None,
            observables: None,
            ordering: Ordering::Standard,
            seed: DEFAULT_SEED,
            classical_only: false,
            allow_large: false,
            verify: false,
        };
        match name {
            ScenarioName::Harmonic => {
                c.friction = Some(FrictionConfig { mass: 1.0, omega: 1.0, alpha: vec![vec![0.0]], beta: vec![] });
            }
            ScenarioName::Damped => {
                c.friction = Some(FrictionConfig { mass: 1.0, omega: 1.0, alpha: vec![vec![0.2]], beta: vec![] });
                c.evolution = rk4(0.0125, 2000, 20);
            }
            ScenarioName::Lorenz | ScenarioName::Rossler | ScenarioName::LeipnikNewton => {
                c.ctx = ctx(1.0, LARGE_DIM_CAP);
                c.initial = three;
                c.evolution = rk4(1e-3, 100_000, 100);
            }
            ScenarioName::FokkerPlanck => {
                c.ctx = ctx(1.0, 16);
                c.fokker_planck = Some(FokkerPlanckCoeffs {
                    d_qq: 0.1,
                    d_qp: 0.0,
                    d_pp: 0.1,
                    c_qq: 0.1,
                    c_qp: 1.0,
                    c_pq: -1.0,
                    c_pp: 0.1,
                    h: None,
                });
                c.evolution = rk4(0.005, 4000, 20);
            }
            ScenarioName::QuantumLorenz => {
                c.ctx = ctx(1.0, 12);
                c.lorenz = Some(LorenzParams { sigma: 10.0, r: 28.0, b: 8.0 / 3.0 });
                c.initial = InitialState { q0: vec![1.0, 0.0], p0: vec![1.0, 1.0] };
                c.evolution = rk4(1e-3, 500, 10);
            }
            ScenarioName::Custom => {}
        }
        c
    }

    pub fn modes(&self) -> usize {
        match self.name {
            ScenarioName::Harmonic | ScenarioName::Damped | ScenarioName::FokkerPlanck => 1,
            ScenarioName::Lorenz | ScenarioName::Rossler | ScenarioName::LeipnikNewton => 3,
            ScenarioName::QuantumLorenz => 2,
            ScenarioName::Custom => self.custom.as_ref().map_or(1, |l| l.modes()),
        }
    }

    pub fn context(&self) -> Result<QuantizationContext, CliError> {
        let (m, w) = self.system_scale();
        QuantizationContext::with_scale(
            self.ctx.hbar,
            self.ctx.dim,
            self.modes(),
            self.ctx.scale_mass.unwrap_or(m),
            self.ctx.scale_omega.unwrap_or(w),
        )
        .map_err(|e| CliError::config(format!("ctx: {e}")))
    }

    /// `(m, w)` of an oscillating system, `(1, 1)` otherwise.
    fn system_scale(&self) -> (f64, f64) {
        let (m, w) = match (&self.friction, &self.fokker_planck) {
            (Some(f), _) => (f.mass, f.omega),
            (None, Some(c)) => derive_params(c).map_or((1.0, 0.0), |d| (d.m, d.omega_sq.max(0.0).sqrt())),
            _ => (1.0, 0.0),
        };
        if w > 0.0 && m > 0.0 {
            (m, w)
        } else {
            (1.0, 1.0)
        }
    }

    /// Checks that need more than the schema.
    pub fn validate(&self) -> Result<(), CliError> {
        let err = |field: &str, msg: String| Err(CliError::config(format!("{field}: {msg}")));
        if let Err(e) = self.evolution.validate() {
            return err("evolution", e.to_string());
        }
        let n = self.modes();
        if self.initial.q0.len() != n || self.initial.p0.len() != n {
            return err("initial", format!("q0 and p0 need {n} entries for scenario {}", self.name.as_str()));
        }
        if self.initial.q0.iter().chain(&self.initial.p0).any(|v| !v.is_finite()) {
            return err("initial", "non-finite coordinate".into());
        }
        match self.name {
            ScenarioName::Custom if self.custom.is_none() => {
                return err("custom", "scenario custom needs a dynamical operator literal".into());
            }
            ScenarioName::FokkerPlanck if self.fokker_planck.is_none() => {
                return err("fokker_planck", "missing coefficients".into());
            }
            ScenarioName::FokkerPlanck if self.classical_only => {
                return err("classical_only", "the Fokker-Planck scenario has no classical trajectory".into());
            }
            ScenarioName::QuantumLorenz if self.lorenz.is_none() => {
                return err("lorenz", "missing sigma, r, b".into());
            }
            ScenarioName::Harmonic | ScenarioName::Damped => {
                if let Some(f) = &self.friction {
                    if f.alpha.len() != 1 {
                        return err("friction", "single-mode scenario needs a 1x1 alpha".into());
                    }
                }
            }
            _ => {}
        }
        if let Some(f) = &self.friction {
            if f.alpha.len() != n {
                return err("friction", format!("alpha must be {n}x{n}"));
            }
        }
        if let Some(names) = &self.observables {
            let known = observable_names(n);
            if let Some(bad) = names.iter().find(|o| !known.contains(o)) {
                return err("observables", format!("unknown observable {bad:?}; expected one of {known:?}"));
            }
        }
        if n >= 3 && !self.classical_only {
            if !self.allow_large {
                return err("allow_large", format!("quantum runs with {n} modes need --allow-large"));
            }
            if self.ctx.dim > LARGE_DIM_CAP {
                return err("ctx.dim", format!("{n}-mode quantum runs are limited to dim <= {LARGE_DIM_CAP}"));
            }
        }
        self.context()?;
        Ok(())
    }
}

pub fn observable_names(modes: usize) -> Vec<String> {
    (1..=modes).map(|k| format!("q{k}")).chain((1..=modes).map(|k| format!("p{k}"))).collect()
}

/// Flag values that override a configuration.
#[derive(Clone, Debug, Default)]
pub struct Overrides {
    pub hbar: Option<f64>,
    pub dim: Option<usize>,
    pub dt: Option<f64>,
    pub steps: Option<usize>,
    pub out: Option<PathBuf>,
    pub seed: Option<u64>,
    pub verify: bool,
    pub classical_only: bool,
    pub allow_large: bool,
}

impl Overrides {
    pub fn apply(&self, c: &mut ScenarioConfig) {
        if let Some(v) = self.hbar {
            c.ctx.hbar = v;
        }
        if let Some(v) = self.dim {
            c.ctx.dim = v;
        }
        if let Some(v) = self.dt {
            c.evolution.dt = v;
        }
        if let Some(v) = self.steps {
            c.evolution.steps = v;
        }
        if let Some(v) = &self.out {
            c.output.dir = v.clone();
        }
        if let Some(v) = self.seed {
            c.seed = v;
        }
        c.verify |= self.verify;
        c.classical_only |= self.classical_only;
        c.allow_large |= self.allow_large;
    }
}

fn parse_error(path: &Path, e: serde_json::Error) -> CliError {
    CliError::config(format!("{}: {e}", path.display()))
}

/// Reads a scenario file. Accepted shapes: a full scenario, a run manifest
/// (its `config` is used), or, with `scenario` set to `fokker_planck`, a
/// bare coefficient object laid over the preset.
pub fn load(path: &Path, scenario: Option<ScenarioName>) -> Result<ScenarioConfig, CliError> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::config(format!("{}: {e}", path.display())))?;
    let value: serde_json::Value = serde_json::from_str(&text).map_err(|e| parse_error(path, e))?;
    let obj =
        value.as_object().ok_or_else(|| CliError::config(format!("{}: expected a JSON object", path.display())))?;
    let cfg: ScenarioConfig = if obj.contains_key("manifest_version") {
        let m: crate::run::Manifest = serde_json::from_str(&text).map_err(|e| parse_error(path, e))?;
        m.config
    } else if obj.contains_key("name") {
        serde_json::from_str(&text).map_err(|e| parse_error(path, e))?
    } else if scenario == Some(ScenarioName::FokkerPlanck) {
        let coeffs: FokkerPlanckCoeffs = serde_json::from_str(&text).map_err(|e| parse_error(path, e))?;
        ScenarioConfig { fokker_planck: Some(coeffs), ..ScenarioConfig::preset(ScenarioName::FokkerPlanck) }
    } else {
        return Err(CliError::config(format!("{}: missing field `name`", path.display())));
    };
    if let Some(s) = scenario {
        if s != cfg.name {
            return Err(CliError::config(format!(
                "--scenario {} conflicts with name {:?} in {}",
                s.as_str(),
                cfg.name.as_str(),
                path.display()
            )));
        }
    }
    Ok(cfg)
}

/// A run configuration from an optional file, a scenario name and flags.
pub fn resolve(
    config: Option<&Path>,
    scenario: Option<ScenarioName>,
    overrides: &Overrides,
) -> Result<ScenarioConfig, CliError> {
    let mut cfg = match (config, scenario) {
        (Some(path), s) => load(path, s)?,
        (None, Some(s)) => ScenarioConfig::preset(s),
        (None, None) => return Err(CliError::config("either --scenario or --config is required".into())),
    };
    overrides.apply(&mut cfg);
    cfg.validate()?;
    Ok(cfg)
}
