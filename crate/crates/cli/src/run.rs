//! Executing one scenario: build the system, evolve, write artifacts.

use std::collections::BTreeMap;
use std::fs::{self, File};
use std::io::BufWriter;
use std::time::Instant;

use serde::{Deserialize, Serialize};
use serde_json::{json, Value};
use superquant::evolve::{self, phase_space_observables, Picture, TrajectoryRecord};
use superquant::hilbert::{coherent_state, MatrixOperator, QuantizationContext};
use superquant::lindblad::{
    build_explicit_superop, build_generic_superop, build_lindblad_superop, calibrate_h, solve_lindblad_ops, stated_h,
    FokkerPlanckCoeffs,
};
use superquant::superop::{quantize_dynop_with, Region, SuperOperator};
use superquant::symbol::{
    dynop_friction_oscillator, integrate_classical, leipnik_newton_coefficients, lorenz_coefficients,
    lorenz_type_dynop, rossler_coefficients, write_trajectory_csv, ClassicalState, DynOpSymbol, FrictionCoefficients,
    VectorField,
};
use superquant::verify::{verify_all, VerificationEntry, VerificationReport};

use crate::config::{observable_names, ScenarioConfig, ScenarioName};
use crate::exit::{CliError, ExitCode};

pub const MANIFEST_VERSION: u32 = 1;

/// Everything needed to reproduce a run, plus what it produced.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Manifest {
    pub manifest_version: u32,
    pub tool: String,
    pub config: ScenarioConfig,
    pub derived: BTreeMap<String, Value>,
    pub tolerances: BTreeMap<String, f64>,
    pub outputs: Vec<String>,
    pub flagged: bool,
    pub wall_time_seconds: f64,
}

#[derive(Clone, Debug)]
pub struct RunOutcome {
    pub manifest: Manifest,
    pub trajectory: Option<TrajectoryRecord>,
    pub classical: Option<Vec<ClassicalState>>,
    pub report: Option<VerificationReport>,
}

impl RunOutcome {
    pub fn exit_code(&self) -> ExitCode {
        match &self.report {
            Some(r) if !r.passed() => ExitCode::Verification,
            _ => ExitCode::Ok,
        }
    }
}

enum System {
    Flow(DynOpSymbol),
    FokkerPlanck(FokkerPlanckCoeffs),
}

fn system(cfg: &ScenarioConfig) -> Result<System, CliError> {
    let friction = |preset: FrictionCoefficients| -> Result<System, CliError> {
        let c = match &cfg.friction {
            Some(f) => FrictionCoefficients::new(f.mass, f.omega, f.alpha.clone(), f.beta.clone())?,
            None => preset,
        };
        Ok(System::Flow(dynop_friction_oscillator(&c)?))
    };
    match cfg.name {
        ScenarioName::Harmonic => friction(FrictionCoefficients::harmonic(1, 1.0, 1.0)?),
        ScenarioName::Damped => friction(FrictionCoefficients::new(1.0, 1.0, vec![vec![0.2]], vec![])?),
        ScenarioName::Lorenz => friction(lorenz_coefficients()),
        ScenarioName::Rossler => friction(rossler_coefficients()),
        ScenarioName::LeipnikNewton => friction(leipnik_newton_coefficients()),
        ScenarioName::QuantumLorenz => {
            let p = cfg.lorenz.ok_or_else(|| CliError::config("lorenz: missing sigma, r, b".into()))?;
            Ok(System::Flow(lorenz_type_dynop(p.sigma, p.r, p.b)))
        }
        ScenarioName::Custom => {
            let l = cfg.custom.clone().ok_or_else(|| CliError::config("custom: missing operator".into()))?;
            Ok(System::Flow(l))
        }
        ScenarioName::FokkerPlanck => {
            let c = cfg.fokker_planck.ok_or_else(|| CliError::config("fokker_planck: missing".into()))?;
            c.validate()?;
            Ok(System::FokkerPlanck(c))
        }
    }
}

fn write_with<F>(path: &std::path::Path, f: F) -> Result<(), CliError>
where
    F: FnOnce(BufWriter<File>) -> std::io::Result<()>,
{
    let file = File::create(path).map_err(|e| CliError::new(ExitCode::Runtime, format!("{}: {e}", path.display())))?;
    f(BufWriter::new(file)).map_err(|e| CliError::new(ExitCode::Runtime, format!("{}: {e}", path.display())))
}

/// Only the configured columns, in the configured order.
fn select(rec: &TrajectoryRecord, names: &[String]) -> TrajectoryRecord {
    let idx: Vec<usize> = names.iter().map(|n| rec.names.iter().position(|m| m == n).expect("validated")).collect();
    TrajectoryRecord {
        names: names.to_vec(),
        expectations: rec.expectations.iter().map(|row| idx.iter().map(|&j| row[j]).collect()).collect(),
        ..rec.clone()
    }
}

fn entry(suite: &str, name: &str, residual: f64, tolerance: Option<f64>) -> VerificationEntry {
    VerificationEntry {
        suite: suite.into(),
        name: name.into(),
        residual,
        tolerance,
        pass: tolerance.is_none_or(|t| residual <= t),
        informational: tolerance.is_none(),
    }
}

/// Verification at the run's `hbar` and `dim`; contexts above two modes
/// or 144 states are reduced so that the suites stay cheap.
fn verification_context(ctx: &QuantizationContext) -> Result<QuantizationContext, CliError> {
    let modes = ctx.modes().min(2);
    let dim = if modes == 2 { ctx.dim().min(12) } else { ctx.dim() };
    Ok(QuantizationContext::with_scale(ctx.hbar(), dim, modes, ctx.scale_mass(), ctx.scale_omega())?)
}

/// Runs `cfg` and writes its artifacts. A failed verification still
/// writes everything; the outcome's exit code reports it.
pub fn run_scenario(cfg: &ScenarioConfig) -> Result<RunOutcome, CliError> {
    let start = Instant::now();
    cfg.validate()?;
    let ctx = cfg.context()?;
    let out = &cfg.output;
    fs::create_dir_all(&out.dir)
        .map_err(|e| CliError::new(ExitCode::Runtime, format!("{}: {e}", out.dir.display())))?;

    let mut derived = BTreeMap::new();
    let mut tolerances = BTreeMap::new();
    let mut outputs = vec![];
    let mut extra = vec![];
    let mut trajectory = None;
    let mut classical = None;
    let names = cfg.observables.clone().unwrap_or_else(|| observable_names(ctx.modes()));
    let spec = cfg.evolution;

    match system(cfg)? {
        System::Flow(l) => {
            let field: Option<VectorField> = l.vector_field().ok();
            derived.insert("derivation".into(), json!(field.is_some()));
            if let Some(field) = &field {
                let x0 = ClassicalState::new(cfg.initial.q0.clone(), cfg.initial.p0.clone(), 0.0)?;
                let traj = integrate_classical(|q, p| field.eval(q, p), &x0, spec.dt, spec.steps)?;
                let sampled: Vec<ClassicalState> = traj
                    .iter()
                    .enumerate()
                    .filter(|(i, _)| i % spec.record_every == 0 || *i == spec.steps)
                    .map(|(_, s)| s.clone())
                    .collect();
                write_with(&out.classical_path(), |w| write_trajectory_csv(w, &sampled))?;
                outputs.push(out.classical.clone());
                classical = Some(sampled);
            } else if cfg.classical_only {
                return Err(CliError::config("classical_only: the operator is not a derivation".into()));
            }
            if !cfg.classical_only {
                let rho0 = coherent_state(&ctx, &cfg.initial.q0, &cfg.initial.p0)?;
                let heisenberg = quantize_dynop_with(&l, &ctx, cfg.ordering)?;
                let generator = match spec.picture {
                    Picture::Schroedinger => heisenberg.adjoint(),
                    Picture::Heisenberg => heisenberg,
                };
                let obs = phase_space_observables(&ctx)?;
                let rec = evolve::evolve(&generator, &rho0, &obs, &spec)?;
                if let Some(traj) = &classical {
                    let dev = ehrenfest_deviation(&rec, traj);
                    derived.insert("ehrenfest_max_deviation".into(), json!(dev));
                    let tol = (cfg.name == ScenarioName::Harmonic).then_some(1e-6);
                    if let Some(t) = tol {
                        tolerances.insert("ehrenfest".into(), t);
                    }
                    extra.push(entry("scenario", "Ehrenfest deviation", dev, tol));
                }
                let rec = select(&rec, &names);
                write_with(&out.trajectory_path(), |w| rec.write_csv(w))?;
                outputs.push(out.trajectory.clone());
                trajectory = Some(rec);
            }
        }
        System::FokkerPlanck(c) => {
            let model = solve_lindblad_ops(&c, &ctx)?;
            let l = build_lindblad_superop(&model, &ctx)?;
            let p = model.params;
            derived.insert("mass".into(), json!(p.m));
            derived.insert("omega_sq".into(), json!(p.omega_sq));
            derived.insert("lambda".into(), json!(p.lambda));
            derived.insert("mu".into(), json!(p.mu));
            derived.insert("calibrated_h".into(), json!(calibrate_h(&c, &ctx)?));
            derived.insert("stated_h".into(), json!(stated_h(&c)));
            let coeffs: Vec<Value> =
                model.a.iter().zip(&model.b).map(|(a, b)| json!({"a": [a.re, a.im], "b": [b.re, b.im]})).collect();
            derived.insert("jump_operators".into(), Value::Array(coeffs));
            if cfg.verify {
                let (generic, _) = build_generic_superop(&c, &ctx)?;
                let explicit = build_explicit_superop(&c, &ctx)?;
                tolerances.insert("superoperator_equality".into(), 1e-10);
                tolerances.insert("trace_preservation".into(), 1e-11);
                extra.push(entry(
                    "scenario",
                    "lindblad = generic",
                    l.max_abs_diff(&generic, Region::Full)?,
                    Some(1e-10),
                ));
                extra.push(entry(
                    "scenario",
                    "lindblad = explicit (interior)",
                    l.max_abs_diff(&explicit, Region::Interior)?,
                    Some(1e-10),
                ));
                let rho = coherent_state(&ctx, &cfg.initial.q0, &cfg.initial.p0)?;
                extra.push(entry("scenario", "trace preservation", l.apply(&rho)?.trace().norm(), Some(1e-11)));
            }
            let rho0 = coherent_state(&ctx, &cfg.initial.q0, &cfg.initial.p0)?;
            let generator: SuperOperator = match spec.picture {
                Picture::Schroedinger => l,
                Picture::Heisenberg => l.adjoint(),
            };
            let obs: Vec<(String, MatrixOperator)> = phase_space_observables(&ctx)?;
            let rec = select(&evolve::evolve(&generator, &rho0, &obs, &spec)?, &names);
            write_with(&out.trajectory_path(), |w| rec.write_csv(w))?;
            outputs.push(out.trajectory.clone());
            trajectory = Some(rec);
        }
    }

    let flagged = trajectory.as_ref().is_some_and(|r| r.flagged());
    if let Some(r) = &trajectory {
        derived.insert("trace_flag_step".into(), json!(r.trace_flag_step));
        derived.insert("hermiticity_flag_step".into(), json!(r.hermiticity_flag_step));
    }
    tolerances.insert("trace_flag".into(), evolve::TRACE_FLAG);
    tolerances.insert("hermiticity_flag".into(), evolve::HERMITICITY_FLAG);

    let report = if cfg.verify {
        let vctx = verification_context(&ctx)?;
        let mut report = verify_all(&vctx, cfg.seed)?;
        report.entries.extend(extra);
        derived.insert("verification_dim".into(), json!(vctx.dim()));
        derived.insert("verification_modes".into(), json!(vctx.modes()));
        write_with(&out.report_path(), |mut w| {
            use std::io::Write;
            w.write_all(report.to_json().as_bytes())?;
            w.write_all(b"\n")
        })?;
        outputs.push(out.report.clone());
        Some(report)
    } else {
        None
    };

    outputs.push(out.manifest.clone());
    let manifest = Manifest {
        manifest_version: MANIFEST_VERSION,
        tool: format!("quantize {}", env!("CARGO_PKG_VERSION")),
        config: cfg.clone(),
        derived,
        tolerances,
        outputs,
        flagged,
        wall_time_seconds: start.elapsed().as_secs_f64(),
    };
    let text = serde_json::to_string_pretty(&manifest).expect("manifest serializes");
    fs::write(out.manifest_path(), text + "\n")?;
    Ok(RunOutcome { manifest, trajectory, classical, report })
}

/// Largest gap between the quantum `q_k, p_k` columns and the classical
/// states recorded at the same times.
fn ehrenfest_deviation(rec: &TrajectoryRecord, classical: &[ClassicalState]) -> f64 {
    rec.expectations
        .iter()
        .zip(classical)
        .map(|(row, s)| s.q.iter().chain(&s.p).zip(row).map(|(c, q)| (c - q).abs()).fold(0.0, f64::max))
        .fold(0.0, f64::max)
}
