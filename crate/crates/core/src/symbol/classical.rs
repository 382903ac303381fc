//! Vector fields of first-order dynamical operators and a fixed-step RK4
//! integrator.

use std::io::Write;

use serde::{Deserialize, Serialize};

use super::poly::PolySymbol;
use crate::error::{Error, Result};

/// A point of a classical trajectory.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ClassicalState {
    pub q: Vec<f64>,
    pub p: Vec<f64>,
    pub t: f64,
}

impl ClassicalState {
    pub fn new(q: Vec<f64>, p: Vec<f64>, t: f64) -> Result<Self> {
        if q.len() != p.len() {
            return Err(Error::ModeMismatch { left: q.len(), right: p.len() });
        }
        let s = Self { q, p, t };
        if !s.is_finite() {
            return Err(Error::InvalidArgument("non-finite classical state".into()));
        }
        Ok(s)
    }

    pub fn modes(&self) -> usize {
        self.q.len()
    }

    pub fn is_finite(&self) -> bool {
        self.t.is_finite() && self.q.iter().chain(&self.p).all(|v| v.is_finite())
    }

    /// Euclidean distance in phase space.
    pub fn distance(&self, other: &Self) -> f64 {
        self.q
            .iter()
            .zip(&other.q)
            .chain(self.p.iter().zip(&other.p))
            .map(|(a, b)| (a - b) * (a - b))
            .sum::<f64>()
            .sqrt()
    }
}

/// `dq_k/dt = L q_k`, `dp_k/dt = L p_k` as polynomials.
#[derive(Clone, Debug, PartialEq)]
pub struct VectorField {
    q_rates: Vec<PolySymbol>,
    p_rates: Vec<PolySymbol>,
}

impl VectorField {
    pub fn new(q_rates: Vec<PolySymbol>, p_rates: Vec<PolySymbol>) -> Self {
        assert_eq!(q_rates.len(), p_rates.len(), "one rate per coordinate and momentum");
        Self { q_rates, p_rates }
    }

    pub fn modes(&self) -> usize {
        self.q_rates.len()
    }

    pub fn q_rates(&self) -> &[PolySymbol] {
        &self.q_rates
    }

    pub fn p_rates(&self) -> &[PolySymbol] {
        &self.p_rates
    }

    /// `(dq/dt, dp/dt)` at `(q, p)`.
    pub fn eval(&self, q: &[f64], p: &[f64]) -> (Vec<f64>, Vec<f64>) {
        (self.q_rates.iter().map(|f| f.eval(q, p)).collect(), self.p_rates.iter().map(|f| f.eval(q, p)).collect())
    }
}

fn axpy(x: &[f64], a: f64, y: &[f64]) -> Vec<f64> {
    x.iter().zip(y).map(|(x, y)| x + a * y).collect()
}

/// Fixed-step RK4. Returns `steps + 1` states, the first being `x0`.
pub fn integrate_classical<F>(rhs: F, x0: &ClassicalState, dt: f64, steps: usize) -> Result<Vec<ClassicalState>>
where
    F: Fn(&[f64], &[f64]) -> (Vec<f64>, Vec<f64>),
{
    if !(dt > 0.0 && dt.is_finite()) {
        return Err(Error::InvalidArgument(format!("dt must be positive, got {dt}")));
    }
    if steps == 0 {
        return Err(Error::InvalidArgument("steps must be at least 1".into()));
    }
    if !x0.is_finite() {
        return Err(Error::Divergence { step: 0 });
    }
    let mut out = Vec::with_capacity(steps + 1);
    out.push(x0.clone());
    let (mut q, mut p) = (x0.q.clone(), x0.p.clone());
    for step in 1..=steps {
        let (k1q, k1p) = rhs(&q, &p);
        let (k2q, k2p) = rhs(&axpy(&q, dt / 2.0, &k1q), &axpy(&p, dt / 2.0, &k1p));
        let (k3q, k3p) = rhs(&axpy(&q, dt / 2.0, &k2q), &axpy(&p, dt / 2.0, &k2p));
        let (k4q, k4p) = rhs(&axpy(&q, dt, &k3q), &axpy(&p, dt, &k3p));
        for i in 0..q.len() {
            q[i] += dt / 6.0 * (k1q[i] + 2.0 * k2q[i] + 2.0 * k3q[i] + k4q[i]);
            p[i] += dt / 6.0 * (k1p[i] + 2.0 * k2p[i] + 2.0 * k3p[i] + k4p[i]);
        }
        let s = ClassicalState { q: q.clone(), p: p.clone(), t: x0.t + step as f64 * dt };
        if !s.is_finite() {
            return Err(Error::Divergence { step });
        }
        out.push(s);
    }
    Ok(out)
}

/// CSV with header `t,q1..qn,p1..pn`, 17 significant digits.
pub fn write_trajectory_csv<W: Write>(mut w: W, traj: &[ClassicalState]) -> std::io::Result<()> {
    let n = traj.first().map_or(0, ClassicalState::modes);
    let mut header = vec!["t".to_string()];
    header.extend((1..=n).map(|k| format!("q{k}")));
    header.extend((1..=n).map(|k| format!("p{k}")));
    writeln!(w, "{}", header.join(","))?;
    for s in traj {
        let row: Vec<String> = std::iter::once(&s.t).chain(&s.q).chain(&s.p).map(|v| format!("{v:.16e}")).collect();
        writeln!(w, "{}", row.join(","))?;
    }
    Ok(())
}
