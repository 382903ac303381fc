//! Time evolution `dX/dt = L X` of operators under a superoperator, with
//! trace, positivity and Hermiticity monitors, and the comparison of
//! quantum expectation values against classical trajectories.

use std::io::Write;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hilbert::{self, build_p, build_q, expectation, MatrixOperator, QuantizationContext};
use crate::linalg::{self, CMatrix};
use crate::superop::{quantize_dynop, SuperOperator};
use crate::symbol::{integrate_classical, ClassicalState, DynOpSymbol};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Picture {
    Heisenberg,
    Schroedinger,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    Rk4,
    /// Dense `exp(dt L)`, computed once.
    Exponential,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EvolutionSpec {
    pub dt: f64,
    pub steps: usize,
    pub picture: Picture,
    pub method: Method,
    #[serde(default = "one")]
    pub record_every: usize,
}

fn one() -> usize {
    1
}

impl EvolutionSpec {
    pub fn new(dt: f64, steps: usize, picture: Picture, method: Method) -> Self {
        Self { dt, steps, picture, method, record_every: 1 }
    }

    pub fn recording_every(self, record_every: usize) -> Self {
        Self { record_every, ..self }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return Err(Error::InvalidArgument(format!("dt must be positive, got {}", self.dt)));
        }
        if self.steps == 0 || self.record_every == 0 {
            return Err(Error::InvalidArgument("steps and record_every must be at least 1".into()));
        }
        Ok(())
    }
}

/// Trace drift beyond which a run is flagged.
pub const TRACE_FLAG: f64 = 1e-6;
/// Hermiticity residual (relative to the max-norm) beyond which a run is
/// flagged.
pub const HERMITICITY_FLAG: f64 = 1e-8;

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryRecord {
    pub names: Vec<String>,
    pub times: Vec<f64>,
    /// One row per recorded time, one column per observable.
    pub expectations: Vec<Vec<f64>>,
    pub trace: Vec<f64>,
    pub min_eigenvalue: Vec<f64>,
    pub hermiticity_residual: Vec<f64>,
    /// First step at which the trace drifted beyond [`TRACE_FLAG`].
    pub trace_flag_step: Option<usize>,
    /// First step at which Hermiticity was lost beyond [`HERMITICITY_FLAG`].
    pub hermiticity_flag_step: Option<usize>,
}

impl TrajectoryRecord {
    pub fn flagged(&self) -> bool {
        self.trace_flag_step.is_some() || self.hermiticity_flag_step.is_some()
    }

    /// Column of the named observable.
    pub fn series(&self, name: &str) -> Option<Vec<f64>> {
        let j = self.names.iter().position(|n| n == name)?;
        Some(self.expectations.iter().map(|row| row[j]).collect())
    }

    /// CSV `t,<obs>...,trace,min_eig,herm_res`.
    pub fn write_csv<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        let mut header = vec!["t".to_string()];
        header.extend(self.names.iter().cloned());
        header.extend(["trace", "min_eig", "herm_res"].map(String::from));
        writeln!(w, "{}", header.join(","))?;
        for (i, t) in self.times.iter().enumerate() {
            let mut row = vec![*t];
            row.extend(&self.expectations[i]);
            row.extend([self.trace[i], self.min_eigenvalue[i], self.hermiticity_residual[i]]);
            let cells: Vec<String> = row.iter().map(|v| format!("{v:.16e}")).collect();
            writeln!(w, "{}", cells.join(","))?;
        }
        Ok(())
    }
}

/// One time step of `dX/dt = L X`.
enum Stepper<'a> {
    Rk4 { l: &'a SuperOperator, dt: f64 },
    Exponential { propagator: CMatrix },
}

impl<'a> Stepper<'a> {
    fn new(l: &'a SuperOperator, spec: &EvolutionSpec) -> Result<Self> {
        Ok(match spec.method {
            Method::Rk4 => Stepper::Rk4 { l, dt: spec.dt },
            Method::Exponential => {
                let m = l.dense()? * Complex64::new(spec.dt, 0.0);
                Stepper::Exponential { propagator: linalg::expm(&m)? }
            }
        })
    }

    fn step(&self, x: &MatrixOperator) -> Result<MatrixOperator> {
        match self {
            Stepper::Rk4 { l, dt } => {
                let c = |v: f64| Complex64::new(v, 0.0);
                let k1 = l.apply(x)?;
                let k2 = l.apply(&(x + &(&k1 * (dt / 2.0))))?;
                let k3 = l.apply(&(x + &(&k2 * (dt / 2.0))))?;
                let k4 = l.apply(&(x + &(&k3 * *dt)))?;
                let incr = &(&(&k1 + &(&k2 * 2.0)) + &(&k3 * 2.0)) + &k4;
                Ok(x + &incr.scale(c(dt / 6.0)))
            }
            Stepper::Exponential { propagator } => {
                let n = x.ctx().total_dim();
                let v = CMatrix::from_column_slice(n * n, 1, x.matrix().as_slice());
                let y = linalg::matmul(propagator, &v);
                MatrixOperator::new(*x.ctx(), CMatrix::from_column_slice(n, n, y.as_slice()))
            }
        }
    }
}

fn is_finite(x: &MatrixOperator) -> bool {
    x.matrix().iter().all(|z| z.re.is_finite() && z.im.is_finite())
}

/// Re `Tr(rho A)` without a Hermiticity check on `A`.
fn pairing(rho: &MatrixOperator, a: &MatrixOperator) -> f64 {
    let (r, m) = (rho.matrix(), a.matrix());
    let n = r.nrows();
    let mut t = Complex64::new(0.0, 0.0);
    for j in 0..n {
        for i in 0..n {
            t += r[(i, j)] * m[(j, i)];
        }
    }
    t.re
}

fn run(
    l: &SuperOperator,
    x0: &MatrixOperator,
    spec: &EvolutionSpec,
    names: Vec<String>,
    measure: impl Fn(&MatrixOperator) -> Result<Vec<f64>>,
) -> Result<TrajectoryRecord> {
    spec.validate()?;
    if x0.ctx() != l.ctx() {
        return Err(Error::ContextMismatch);
    }
    let stepper = Stepper::new(l, spec)?;
    let mut rec = TrajectoryRecord { names, ..Default::default() };
    let trace0 = x0.trace().re;
    let record = |rec: &mut TrajectoryRecord, step: usize, x: &MatrixOperator| -> Result<()> {
        let herm = x.hermiticity_residual();
        let tr = x.trace().re;
        rec.times.push(step as f64 * spec.dt);
        rec.expectations.push(measure(x)?);
        rec.trace.push(tr);
        rec.min_eigenvalue.push(linalg::hermitian_eigenvalues(x.matrix())[0]);
        rec.hermiticity_residual.push(herm);
        if (tr - trace0).abs() > TRACE_FLAG && rec.trace_flag_step.is_none() {
            rec.trace_flag_step = Some(step);
        }
        if herm > HERMITICITY_FLAG * x.max_abs().max(1.0) && rec.hermiticity_flag_step.is_none() {
            rec.hermiticity_flag_step = Some(step);
        }
        Ok(())
    };
    record(&mut rec, 0, x0)?;
    let mut x = x0.clone();
    for step in 1..=spec.steps {
        x = stepper.step(&x)?;
        if !is_finite(&x) {
            return Err(Error::Divergence { step });
        }
        if step % spec.record_every == 0 || step == spec.steps {
            record(&mut rec, step, &x)?;
        }
    }
    Ok(rec)
}

/// `d rho/dt = L rho` with expectation values of the named observables.
pub fn evolve_state(
    l: &SuperOperator,
    rho0: &MatrixOperator,
    observables: &[(String, MatrixOperator)],
    spec: &EvolutionSpec,
) -> Result<TrajectoryRecord> {
    let tr = rho0.trace();
    if (tr.re - 1.0).abs() > 1e-10 || tr.im.abs() > 1e-10 {
        return Err(Error::InvalidArgument(format!("initial state has trace {tr}")));
    }
    let r = rho0.hermiticity_residual();
    if r > hilbert::hermitian_tolerance(rho0.matrix()) {
        return Err(Error::NotHermitian(r));
    }
    for (_, a) in observables {
        let r = a.hermiticity_residual();
        if r > hilbert::hermitian_tolerance(a.matrix()) {
            return Err(Error::NotHermitian(r));
        }
    }
    let names = observables.iter().map(|(n, _)| n.clone()).collect();
    run(l, rho0, spec, names, |rho| observables.iter().map(|(_, a)| expectation(rho, a)).collect())
}

/// `dA/dt = L A`. Each probe state `rho` contributes the column
/// `Tr(rho A_t)`; the monitors describe `A_t` itself.
pub fn evolve_observable(
    l: &SuperOperator,
    a0: &MatrixOperator,
    probes: &[(String, MatrixOperator)],
    spec: &EvolutionSpec,
) -> Result<TrajectoryRecord> {
    let r = a0.hermiticity_residual();
    if r > hilbert::hermitian_tolerance(a0.matrix()) {
        return Err(Error::NotHermitian(r));
    }
    let names = probes.iter().map(|(n, _)| n.clone()).collect();
    run(l, a0, spec, names, |a| Ok(probes.iter().map(|(_, rho)| pairing(rho, a)).collect()))
}

/// Dispatch on `spec.picture`: states evolve under `L`, observables under
/// `L` as given. Observables are probed with `rho0` in the Heisenberg case.
pub fn evolve(
    l: &SuperOperator,
    rho0: &MatrixOperator,
    observables: &[(String, MatrixOperator)],
    spec: &EvolutionSpec,
) -> Result<TrajectoryRecord> {
    match spec.picture {
        Picture::Schroedinger => evolve_state(l, rho0, observables, spec),
        Picture::Heisenberg => {
            // One run per observable; the columns share the time grid.
            let mut merged: Option<TrajectoryRecord> = None;
            for (name, a) in observables {
                let rec = evolve_observable(l, a, &[(name.clone(), rho0.clone())], spec)?;
                merged = Some(match merged {
                    None => rec,
                    Some(mut m) => {
                        m.names.push(name.clone());
                        for (row, extra) in m.expectations.iter_mut().zip(rec.expectations) {
                            row.extend(extra);
                        }
                        m
                    }
                });
            }
            merged.ok_or_else(|| Error::InvalidArgument("no observables to evolve".into()))
        }
    }
}

/// `q1..qn, p1..pn` with their names.
pub fn phase_space_observables(ctx: &QuantizationContext) -> Result<Vec<(String, MatrixOperator)>> {
    let mut out = vec![];
    for k in 0..ctx.modes() {
        out.push((format!("q{}", k + 1), build_q(ctx, k)?));
    }
    for k in 0..ctx.modes() {
        out.push((format!("p{}", k + 1), build_p(ctx, k)?));
    }
    Ok(out)
}

#[derive(Clone, Debug)]
pub struct EhrenfestComparison {
    pub quantum: TrajectoryRecord,
    /// Classical states at the recorded times.
    pub classical: Vec<ClassicalState>,
    /// Largest coordinate deviation at each recorded time.
    pub deviation: Vec<f64>,
    pub max_deviation: f64,
}

/// Quantum expectation values of `q_k`, `p_k` under the quantized `l`
/// against the classical flow of `l` from the same start.
///
/// The state evolves under the adjoint of `quantize_dynop(l)`, so that
/// `Tr(rho_t A) = Tr(rho_0 A_t)` with `A_t` the Heisenberg evolution.
pub fn ehrenfest_compare(
    l_classical: &DynOpSymbol,
    ctx: &QuantizationContext,
    rho0: &MatrixOperator,
    spec: &EvolutionSpec,
) -> Result<EhrenfestComparison> {
    let field = l_classical.vector_field()?;
    let generator = quantize_dynop(l_classical, ctx)?.adjoint();
    ehrenfest_with(&generator, &field, ctx, rho0, spec)
}

/// [`ehrenfest_compare`] with a precomputed Schroedinger-picture generator.
pub fn ehrenfest_with(
    generator: &SuperOperator,
    field: &crate::symbol::VectorField,
    ctx: &QuantizationContext,
    rho0: &MatrixOperator,
    spec: &EvolutionSpec,
) -> Result<EhrenfestComparison> {
    let obs = phase_space_observables(ctx)?;
    let state_spec = EvolutionSpec { picture: Picture::Schroedinger, ..*spec };
    let quantum = evolve_state(generator, rho0, &obs, &state_spec)?;
    let n = ctx.modes();
    let start = &quantum.expectations[0];
    let x0 = ClassicalState::new(start[..n].to_vec(), start[n..].to_vec(), 0.0)?;
    let traj = integrate_classical(|q, p| field.eval(q, p), &x0, spec.dt, spec.steps)?;
    let mut classical = vec![];
    let mut deviation = vec![];
    for (row, t) in quantum.expectations.iter().zip(&quantum.times) {
        let step = (t / spec.dt).round() as usize;
        let s = traj[step].clone();
        let d = s.q.iter().chain(&s.p).zip(row).map(|(c, q)| (c - q).abs()).fold(0.0, f64::max);
        deviation.push(d);
        classical.push(s);
    }
    let max_deviation = deviation.iter().copied().fold(0.0, f64::max);
    Ok(EhrenfestComparison { quantum, classical, deviation, max_deviation })
}
