//! The oscillator-with-friction family and the two-mode Lorenz-type system.

use serde::{Deserialize, Serialize};

use super::dynop::DynOpSymbol;
use super::poly::{MultiIndex, PolySymbol};
use crate::error::{Error, Result};

/// Parameters of the n-dimensional oscillator with friction
///
/// ```text
/// dq_k/dt = p_k / m
/// dp_k/dt = -(m w^2 q_k + alpha_km p_m + beta_kms p_m p_s)
/// ```
///
/// `beta` is kept symmetric in its last two indices; only that part enters
/// the equations of motion.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FrictionCoefficients {
    modes: usize,
    mass: f64,
    omega: f64,
    alpha: Vec<Vec<f64>>,
    /// Row-major `n x n x n`.
    beta: Vec<f64>,
}

impl FrictionCoefficients {
    /// `alpha` must be `n x n` and `beta` `n x n x n` row-major (or empty for
    /// no quadratic friction). `beta` is symmetrized in its last two indices.
    pub fn new(mass: f64, omega: f64, alpha: Vec<Vec<f64>>, beta: Vec<f64>) -> Result<Self> {
        let n = alpha.len();
        if n == 0 {
            return Err(Error::InvalidArgument("alpha must have at least one row".into()));
        }
        if alpha.iter().any(|row| row.len() != n) {
            return Err(Error::InvalidArgument(format!("alpha must be {n}x{n}")));
        }
        let beta = if beta.is_empty() { vec![0.0; n * n * n] } else { beta };
        if beta.len() != n * n * n {
            return Err(Error::InvalidArgument(format!("beta must have {} entries, got {}", n * n * n, beta.len())));
        }
        let all = alpha.iter().flatten().chain(&beta).chain([&mass, &omega]);
        if all.into_iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidArgument("non-finite friction coefficient".into()));
        }
        let mut sym = vec![0.0; n * n * n];
        for k in 0..n {
            for m in 0..n {
                for s in 0..n {
                    sym[(k * n + m) * n + s] = 0.5 * (beta[(k * n + m) * n + s] + beta[(k * n + s) * n + m]);
                }
            }
        }
        Ok(Self { modes: n, mass, omega, alpha, beta: sym })
    }

    /// Frictionless oscillator in `modes` dimensions.
    pub fn harmonic(modes: usize, mass: f64, omega: f64) -> Result<Self> {
        Self::new(mass, omega, vec![vec![0.0; modes]; modes], vec![])
    }

    /// Sparse constructor from 1-based index lists, as the coefficient
    /// tables are usually written.
    pub fn from_entries(
        modes: usize,
        mass: f64,
        omega: f64,
        alpha: &[((usize, usize), f64)],
        beta: &[((usize, usize, usize), f64)],
    ) -> Result<Self> {
        let mut a = vec![vec![0.0; modes]; modes];
        for &((k, m), v) in alpha {
            check_index(modes, &[k, m])?;
            a[k - 1][m - 1] = v;
        }
        let mut b = vec![0.0; modes * modes * modes];
        for &((k, m, s), v) in beta {
            check_index(modes, &[k, m, s])?;
            b[((k - 1) * modes + (m - 1)) * modes + (s - 1)] = v;
        }
        Self::new(mass, omega, a, b)
    }

    pub fn modes(&self) -> usize {
        self.modes
    }

    pub fn mass(&self) -> f64 {
        self.mass
    }

    pub fn omega(&self) -> f64 {
        self.omega
    }

    /// `alpha_km`, zero-based.
    pub fn alpha(&self, k: usize, m: usize) -> f64 {
        self.alpha[k][m]
    }

    /// Symmetrized `beta_kms`, zero-based.
    pub fn beta(&self, k: usize, m: usize, s: usize) -> f64 {
        self.beta[(k * self.modes + m) * self.modes + s]
    }

    pub fn alpha_matrix(&self) -> &[Vec<f64>] {
        &self.alpha
    }

    pub fn beta_tensor(&self) -> &[f64] {
        &self.beta
    }

    /// Coefficients restricted to the given zero-based modes: every
    /// coupling to a dropped mode is discarded.
    pub fn restricted(&self, keep: &[usize]) -> Result<Self> {
        if keep.is_empty() || keep.iter().any(|&k| k >= self.modes) {
            return Err(Error::InvalidArgument(format!(
                "mode selection {keep:?} out of range for {} modes",
                self.modes
            )));
        }
        let alpha = keep.iter().map(|&k| keep.iter().map(|&m| self.alpha[k][m]).collect()).collect();
        let mut beta = vec![];
        for &k in keep {
            for &m in keep {
                for &s in keep {
                    beta.push(self.beta(k, m, s));
                }
            }
        }
        Self::new(self.mass, self.omega, alpha, beta)
    }
}

fn check_index(modes: usize, idx: &[usize]) -> Result<()> {
    if idx.iter().any(|&i| i == 0 || i > modes) {
        return Err(Error::InvalidArgument(format!("1-based index {idx:?} out of range for {modes} modes")));
    }
    Ok(())
}

/// Lorenz system in the momenta: `x = p_1, y = p_2, z = p_3`.
pub fn lorenz_coefficients() -> FrictionCoefficients {
    FrictionCoefficients::from_entries(
        3,
        1.0,
        0.0,
        &[((1, 1), 10.0), ((1, 2), -10.0), ((2, 1), -28.0), ((2, 2), 1.0), ((3, 3), 8.0 / 3.0)],
        &[((2, 1, 3), 0.5), ((2, 3, 1), 0.5), ((3, 1, 2), -0.5), ((3, 2, 1), -0.5)],
    )
    .expect("valid table")
}

pub fn rossler_coefficients() -> FrictionCoefficients {
    FrictionCoefficients::from_entries(
        3,
        1.0,
        0.0,
        &[((1, 2), 1.0), ((1, 3), 1.0), ((2, 1), -1.0), ((2, 2), -0.2), ((3, 1), -0.2), ((3, 3), 5.7)],
        &[((3, 1, 3), -0.5), ((3, 3, 1), -0.5)],
    )
    .expect("valid table")
}

pub fn leipnik_newton_coefficients() -> FrictionCoefficients {
    FrictionCoefficients::from_entries(
        3,
        1.0,
        0.0,
        &[((1, 1), 0.4), ((1, 2), -1.0), ((2, 1), 1.0), ((2, 2), 0.4), ((3, 3), -0.175)],
        &[
            ((1, 2, 3), -5.0),
            ((1, 3, 2), -5.0),
            ((2, 1, 3), -2.5),
            ((2, 3, 1), -2.5),
            ((3, 1, 2), 2.5),
            ((3, 2, 1), 2.5),
        ],
    )
    .expect("valid table")
}

/// `p^2/2m + m w^2 q^2/2` summed over modes.
pub fn harmonic_hamiltonian(modes: usize, mass: f64, omega: f64) -> PolySymbol {
    let mut h = PolySymbol::zero(modes);
    for k in 0..modes {
        let q = PolySymbol::q(modes, k);
        let p = PolySymbol::p(modes, k);
        h = &h + &(&(&p * &p) * (0.5 / mass));
        h = &h + &(&(&q * &q) * (0.5 * mass * omega * omega));
    }
    h
}

/// `L = (1/m) p_k d/dq_k - m w^2 q_k d/dp_k - (alpha_km p_m + beta_kms p_m p_s) d/dp_k`.
pub fn dynop_friction_oscillator(c: &FrictionCoefficients) -> Result<DynOpSymbol> {
    if c.mass <= 0.0 {
        return Err(Error::NonPositiveMass(c.mass));
    }
    let n = c.modes;
    let mw2 = c.mass * c.omega * c.omega;
    let mut l = DynOpSymbol::zero(n);
    for k in 0..n {
        l.add_term(&PolySymbol::p(n, k) * (1.0 / c.mass), MultiIndex::unit_q(n, k))?;
        let mut force = &PolySymbol::q(n, k) * (-mw2);
        for m in 0..n {
            force = &force - &(&PolySymbol::p(n, m) * c.alpha(k, m));
            for s in 0..n {
                let b = c.beta(k, m, s);
                if b != 0.0 {
                    force = &force - &(&(&PolySymbol::p(n, m) * &PolySymbol::p(n, s)) * b);
                }
            }
        }
        l.add_term(force, MultiIndex::unit_p(n, k))?;
    }
    Ok(l)
}

/// Two-mode Lorenz-type operator; its flow on `x = q_1, y = p_1, z = p_2`
/// is the Lorenz system.
///
/// ```text
/// L = -s (q1 - p1) d/dq1 + s p2 d/dq2 + (r q1 - p1 - q1 p2) d/dp1 - (b p2 - q1 p1) d/dp2
/// ```
pub fn lorenz_type_dynop(sigma: f64, r: f64, b: f64) -> DynOpSymbol {
    let q1 = PolySymbol::q(2, 0);
    let p1 = PolySymbol::p(2, 0);
    let p2 = PolySymbol::p(2, 1);
    let mut l = DynOpSymbol::zero(2);
    let terms = [
        (&(&p1 - &q1) * sigma, MultiIndex::unit_q(2, 0)),
        (&p2 * sigma, MultiIndex::unit_q(2, 1)),
        (&(&(&q1 * r) - &p1) - &(&q1 * &p2), MultiIndex::unit_p(2, 0)),
        (&(&q1 * &p1) - &(&p2 * b), MultiIndex::unit_p(2, 1)),
    ];
    for (coeff, d) in terms {
        l.add_term(coeff, d).expect("two modes throughout");
    }
    l
}
