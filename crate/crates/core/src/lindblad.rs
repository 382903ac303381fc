//! From a single-mode Fokker-Planck-type Liouville operator to a Markovian
//! master equation.
//!
//! Three constructions of the same superoperator are provided:
//! the Lindblad form with extracted jump operators
//! ([`build_lindblad_superop`]), the explicit double-commutator form
//! ([`build_explicit_superop`]), and generic quantization of the Liouville
//! operator ([`build_generic_superop`]).

use std::sync::Arc;

use nalgebra::{Matrix2, SymmetricEigen};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hilbert::{build_p, build_q, coherent_state, MatrixOperator, QuantizationContext};
use crate::linalg::{I, ONE};
use crate::superop::{quantize_dynop_with, Factor, Ordering, SuperOperator, Term};
use crate::symbol::{DynOpSymbol, MultiIndex, PolySymbol};

/// Coefficients of
///
/// ```text
/// d_qq d2/dq2 + 2 d_qp d2/dqdp + d_pp d2/dp2
///   + c_qq q d/dq + c_qp q d/dp + c_pq p d/dq + c_pp p d/dp + h
/// ```
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FokkerPlanckCoeffs {
    pub d_qq: f64,
    pub d_qp: f64,
    pub d_pp: f64,
    pub c_qq: f64,
    pub c_qp: f64,
    pub c_pq: f64,
    pub c_pp: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub h: Option<f64>,
}

impl FokkerPlanckCoeffs {
    pub fn validate(&self) -> Result<()> {
        let all = [self.d_qq, self.d_qp, self.d_pp, self.c_qq, self.c_qp, self.c_pq, self.c_pp];
        if all.iter().chain(self.h.iter()).any(|v| !v.is_finite()) {
            return Err(Error::InvalidArgument("non-finite Fokker-Planck coefficient".into()));
        }
        if self.d_qq < 0.0 || self.d_pp < 0.0 {
            return Err(Error::InvalidArgument(format!(
                "diffusion coefficients must be non-negative (d_qq = {}, d_pp = {})",
                self.d_qq, self.d_pp
            )));
        }
        Ok(())
    }

    /// Drift coefficients rebuilt from physical parameters.
    pub fn from_params(p: &DerivedParams, d_qq: f64, d_qp: f64, d_pp: f64) -> Self {
        Self {
            d_qq,
            d_qp,
            d_pp,
            c_qq: p.lambda - p.mu,
            c_qp: p.m * p.omega_sq,
            c_pq: -1.0 / p.m,
            c_pp: p.lambda + p.mu,
            h: None,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DerivedParams {
    pub m: f64,
    pub omega_sq: f64,
    pub lambda: f64,
    pub mu: f64,
}

/// `m = -1/c_pq`, `w^2 = -c_qp c_pq`, `lambda = (c_pp + c_qq)/2`,
/// `mu = (c_pp - c_qq)/2`.
pub fn derive_params(c: &FokkerPlanckCoeffs) -> Result<DerivedParams> {
    c.validate()?;
    if c.c_pq == 0.0 {
        return Err(Error::NoKineticTerm);
    }
    Ok(DerivedParams {
        m: -1.0 / c.c_pq,
        omega_sq: -c.c_qp * c.c_pq,
        lambda: 0.5 * (c.c_pp + c.c_qq),
        mu: 0.5 * (c.c_pp - c.c_qq),
    })
}

/// The Liouville operator itself; a missing `h` counts as zero.
pub fn fokker_planck_dynop(c: &FokkerPlanckCoeffs) -> DynOpSymbol {
    let (q, p) = (PolySymbol::q(1, 0), PolySymbol::p(1, 0));
    let one = PolySymbol::constant(1, 1.0);
    let d = |a: u32, b: u32| MultiIndex::new(vec![a], vec![b]).expect("single mode");
    let mut l = DynOpSymbol::zero(1);
    let terms = [
        (&one * c.d_qq, d(2, 0)),
        (&one * (2.0 * c.d_qp), d(1, 1)),
        (&one * c.d_pp, d(0, 2)),
        (&q * c.c_qq, d(1, 0)),
        (&q * c.c_qp, d(0, 1)),
        (&p * c.c_pq, d(1, 0)),
        (&p * c.c_pp, d(0, 1)),
        (&one * c.h.unwrap_or(0.0), d(0, 0)),
    ];
    for (coeff, deriv) in terms {
        l.add_term(coeff, deriv).expect("single mode");
    }
    l
}

/// The value of `h` stated alongside the explicit master equation,
/// `-2 (c_pp + c_qq)`.
pub fn stated_h(c: &FokkerPlanckCoeffs) -> f64 {
    -2.0 * (c.c_pp + c.c_qq)
}

/// `h` for which the quantized Liouville operator is trace preserving:
/// minus `Tr(L0 |0><0|)`, with `L0` quantized at `h = 0`.
pub fn calibrate_h(c: &FokkerPlanckCoeffs, ctx: &QuantizationContext) -> Result<f64> {
    let l0 = fokker_planck_dynop(&FokkerPlanckCoeffs { h: Some(0.0), ..*c });
    let l0 = quantize_dynop_with(&l0, ctx, Ordering::AntiStandard)?;
    let ground = coherent_state(ctx, &[0.0], &[0.0])?;
    Ok(-l0.apply(&ground)?.trace().re)
}

/// Generic route: quantize the Liouville operator (derivatives to the
/// left) with the calibrated `h`. Returns the superoperator and that `h`.
pub fn build_generic_superop(c: &FokkerPlanckCoeffs, ctx: &QuantizationContext) -> Result<(SuperOperator, f64)> {
    c.validate()?;
    check_single_mode(ctx)?;
    let h = calibrate_h(c, ctx)?;
    let l = fokker_planck_dynop(&FokkerPlanckCoeffs { h: Some(h), ..*c });
    Ok((quantize_dynop_with(&l, ctx, Ordering::AntiStandard)?, h))
}

/// Hamiltonian, jump operators and their coefficients.
#[derive(Clone, Debug)]
pub struct LindbladModel {
    pub h: MatrixOperator,
    pub v: Vec<MatrixOperator>,
    pub a: Vec<Complex64>,
    pub b: Vec<Complex64>,
    pub params: DerivedParams,
}

impl LindbladModel {
    /// `K = sum_j c_j c_j^dagger` with `c_j = (a_j, b_j)`: coefficients of
    /// the dissipator in the basis `(p, q)`.
    pub fn kossakowski(&self) -> Matrix2<Complex64> {
        let mut k = Matrix2::zeros();
        for (a, b) in self.a.iter().zip(&self.b) {
            let c = [*a, *b];
            for r in 0..2 {
                for s in 0..2 {
                    k[(r, s)] += c[r] * c[s].conj();
                }
            }
        }
        k
    }
}

/// `G = [[d_qq, -d_qp - i hbar lambda/2], [-d_qp + i hbar lambda/2, d_pp]]`.
pub fn diffusion_matrix(c: &FokkerPlanckCoeffs, lambda: f64, hbar: f64) -> Matrix2<Complex64> {
    let off = Complex64::new(-c.d_qp, -hbar * lambda / 2.0);
    Matrix2::new(Complex64::new(c.d_qq, 0.0), off, off.conj(), Complex64::new(c.d_pp, 0.0))
}

/// Relative slack below zero still accepted as positive semidefinite.
pub const PSD_TOLERANCE: f64 = 1e-12;

/// Jump operators `V_j = a_j p + b_j q` from the eigendecomposition of
/// `G = (hbar/2) sum_j conj(a_j, b_j) (a_j, b_j)^T`.
pub fn solve_lindblad_ops(c: &FokkerPlanckCoeffs, ctx: &QuantizationContext) -> Result<LindbladModel> {
    check_single_mode(ctx)?;
    let params = derive_params(c)?;
    let hbar = ctx.hbar();
    let g = diffusion_matrix(c, params.lambda, hbar);
    let eig = SymmetricEigen::new(g);
    let trace = c.d_qq + c.d_pp;
    let min = eig.eigenvalues.iter().copied().fold(f64::INFINITY, f64::min);
    if min < -PSD_TOLERANCE * trace.max(0.0) {
        return Err(Error::Infeasible { min_eigenvalue: min });
    }
    let (mut a, mut b) = (vec![], vec![]);
    for k in 0..2 {
        let mu = eig.eigenvalues[k].max(0.0);
        let s = (2.0 * mu / hbar).sqrt();
        let v = eig.eigenvectors.column(k);
        a.push(v[0].conj() * s);
        b.push(v[1].conj() * s);
    }
    let (q, p) = (build_q(ctx, 0)?, build_p(ctx, 0)?);
    let v = a.iter().zip(&b).map(|(aj, bj)| &p.scale(*aj) + &q.scale(*bj)).collect();
    let h1 = harmonic_part(&params, &q, &p);
    let h2 = &(&(&p * &q) + &(&q * &p)) * (params.mu / 2.0);
    let h = MatrixOperator::hermitian(*ctx, (&h1 + &h2).into_matrix())?;
    Ok(LindbladModel { h, v, a, b, params })
}

/// `p^2/2m + m w^2 q^2/2`.
fn harmonic_part(params: &DerivedParams, q: &MatrixOperator, p: &MatrixOperator) -> MatrixOperator {
    &(&(p * p) * (0.5 / params.m)) + &(&(q * q) * (0.5 * params.m * params.omega_sq))
}

fn factor(op: &MatrixOperator, label: &str) -> Arc<Factor> {
    Arc::new(Factor::new(label, op.matrix().clone()))
}

/// `-(i/hbar)[H, .] + (1/2hbar) sum_j ([V_j ., V_j^+] + [V_j, . V_j^+])`.
pub fn build_lindblad_superop(model: &LindbladModel, ctx: &QuantizationContext) -> Result<SuperOperator> {
    let hbar = ctx.hbar();
    let id = Arc::new(Factor::identity(ctx.total_dim()));
    let hf = factor(&model.h, "H");
    let mut terms = vec![
        Term { coeff: -I / hbar, left: hf.clone(), right: id.clone() },
        Term { coeff: I / hbar, left: id.clone(), right: hf },
    ];
    for (j, v) in model.v.iter().enumerate() {
        if v.max_abs() == 0.0 {
            continue;
        }
        let vd = v.dagger();
        let vdv = &vd * v;
        let c = Complex64::new(1.0 / hbar, 0.0);
        let nf = factor(&vdv, &format!("V{0}^+V{0}", j + 1));
        terms.push(Term {
            coeff: c,
            left: factor(v, &format!("V{}", j + 1)),
            right: factor(&vd, &format!("V{}^+", j + 1)),
        });
        terms.push(Term { coeff: -c * 0.5, left: nf.clone(), right: id.clone() });
        terms.push(Term { coeff: -c * 0.5, left: id.clone(), right: nf });
    }
    SuperOperator::from_terms(ctx, terms)
}

/// The master equation assembled term by term:
///
/// ```text
/// -(i/hbar)[H1, .] + i(lambda - mu)/hbar [p, q o .] - i(lambda + mu)/hbar [q, p o .]
///   - d_pp/hbar^2 [q,[q, .]] - d_qq/hbar^2 [p,[p, .]] + 2 d_qp/hbar^2 [p,[q, .]]
/// ```
pub fn build_explicit_superop(c: &FokkerPlanckCoeffs, ctx: &QuantizationContext) -> Result<SuperOperator> {
    check_single_mode(ctx)?;
    let params = derive_params(c)?;
    let hbar = ctx.hbar();
    let (q, p) = (build_q(ctx, 0)?, build_p(ctx, 0)?);
    let id = Arc::new(Factor::identity(ctx.total_dim()));
    let (qf, pf) = (factor(&q, "q1"), factor(&p, "p1"));
    let side = |f: &Arc<Factor>, s: f64| {
        SuperOperator::from_terms(
            ctx,
            vec![
                Term { coeff: ONE, left: f.clone(), right: id.clone() },
                Term { coeff: Complex64::new(s, 0.0), left: id.clone(), right: f.clone() },
            ],
        )
    };
    let comm_q = side(&qf, -1.0)?;
    let comm_p = side(&pf, -1.0)?;
    let jordan_q = side(&qf, 1.0)?.scale(Complex64::new(0.5, 0.0));
    let jordan_p = side(&pf, 1.0)?.scale(Complex64::new(0.5, 0.0));
    let hf = factor(&harmonic_part(&params, &q, &p), "H1");
    let hamiltonian = SuperOperator::from_terms(
        ctx,
        vec![
            Term { coeff: -I / hbar, left: hf.clone(), right: id.clone() },
            Term { coeff: I / hbar, left: id.clone(), right: hf },
        ],
    )?;
    let c_ = |x: f64| Complex64::new(x, 0.0);
    let parts = [
        hamiltonian,
        comm_p.compose(&jordan_q)?.scale(I * (params.lambda - params.mu) / hbar),
        comm_q.compose(&jordan_p)?.scale(-I * (params.lambda + params.mu) / hbar),
        comm_q.compose(&comm_q)?.scale(c_(-c.d_pp / (hbar * hbar))),
        comm_p.compose(&comm_p)?.scale(c_(-c.d_qq / (hbar * hbar))),
        comm_p.compose(&comm_q)?.scale(c_(2.0 * c.d_qp / (hbar * hbar))),
    ];
    let mut out = SuperOperator::zero(ctx);
    for s in parts {
        out = out.try_add(&s)?;
    }
    Ok(out)
}

/// Random coefficients with `m, w^2` in `[0.5, 2]`, `lambda, mu` in
/// `[-0.4, 0.4]` and a diffusion matrix that is positive semidefinite with
/// margin, so that [`solve_lindblad_ops`] succeeds.
pub fn random_feasible_coeffs<R: rand::Rng>(hbar: f64, rng: &mut R) -> FokkerPlanckCoeffs {
    let params = DerivedParams {
        m: rng.gen_range(0.5..2.0),
        omega_sq: rng.gen_range(0.5..2.0),
        lambda: rng.gen_range(-0.4..0.4),
        mu: rng.gen_range(-0.4..0.4),
    };
    let d_qq = rng.gen_range(0.1..1.0);
    let d_qp = rng.gen_range(-0.3..0.3);
    let floor = (d_qp * d_qp + (hbar * params.lambda / 2.0).powi(2)) / d_qq;
    let d_pp = floor + rng.gen_range(0.05..0.5);
    FokkerPlanckCoeffs::from_params(&params, d_qq, d_qp, d_pp)
}

/// Like [`random_feasible_coeffs`] with `d_pp` below the positivity bound.
pub fn random_infeasible_coeffs<R: rand::Rng>(hbar: f64, rng: &mut R) -> FokkerPlanckCoeffs {
    let mut c = random_feasible_coeffs(hbar, rng);
    let lambda = 0.5 * (c.c_pp + c.c_qq);
    let floor = (c.d_qp * c.d_qp + (hbar * lambda / 2.0).powi(2)) / c.d_qq;
    c.d_pp = floor * rng.gen_range(0.0..0.5);
    c
}

fn check_single_mode(ctx: &QuantizationContext) -> Result<()> {
    if ctx.modes() != 1 {
        return Err(Error::ModeMismatch { left: 1, right: ctx.modes() });
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::superop::{hamiltonian_superop, Region};

    fn sample() -> FokkerPlanckCoeffs {
        FokkerPlanckCoeffs { d_qq: 0.6, d_qp: 0.1, d_pp: 0.5, c_qq: 0.0, c_qp: 1.0, c_pq: -1.0, c_pp: -0.2, h: None }
    }

    #[test]
    fn zero_coefficients_give_zero_operator() {
        let z =
            FokkerPlanckCoeffs { d_qq: 0.0, d_qp: 0.0, d_pp: 0.0, c_qq: 0.0, c_qp: 0.0, c_pq: 0.0, c_pp: 0.0, h: None };
        assert!(fokker_planck_dynop(&z).is_zero());
    }

    #[test]
    fn action_on_q() {
        let c = FokkerPlanckCoeffs { h: Some(0.25), ..sample() };
        let got = fokker_planck_dynop(&c).apply(&PolySymbol::q(1, 0)).unwrap();
        let expected = &(&PolySymbol::q(1, 0) * (c.c_qq + 0.25)) + &(&PolySymbol::p(1, 0) * c.c_pq);
        assert_eq!(got, expected);
    }

    #[test]
    fn derived_parameters() {
        let p = derive_params(&sample()).unwrap();
        assert_eq!(p, DerivedParams { m: 1.0, omega_sq: 1.0, lambda: -0.1, mu: -0.1 });
        let back = FokkerPlanckCoeffs::from_params(&p, 0.6, 0.1, 0.5);
        assert!((back.c_qq - 0.0).abs() < 1e-15 && (back.c_pp + 0.2).abs() < 1e-15);
        assert_eq!((back.c_qp, back.c_pq), (1.0, -1.0));
        let no_kinetic = FokkerPlanckCoeffs { c_pq: 0.0, ..sample() };
        assert_eq!(derive_params(&no_kinetic).unwrap_err(), Error::NoKineticTerm);
    }

    #[test]
    fn single_pair_case() {
        // d_qq = d_pp = hbar/2, d_qp = 0, lambda = -1.
        let hbar = 0.8;
        let ctx = QuantizationContext::new(hbar, 6, 1).unwrap();
        let c = FokkerPlanckCoeffs {
            d_qq: hbar / 2.0,
            d_qp: 0.0,
            d_pp: hbar / 2.0,
            c_qq: -1.0,
            c_qp: 1.0,
            c_pq: -1.0,
            c_pp: -1.0,
            h: None,
        };
        let m = solve_lindblad_ops(&c, &ctx).unwrap();
        let nonzero = m.a.iter().zip(&m.b).filter(|(a, b)| a.norm() + b.norm() > 1e-12).count();
        assert_eq!(nonzero, 1);
        check_relations(&c, &m, hbar);
    }

    fn check_relations(c: &FokkerPlanckCoeffs, m: &LindbladModel, hbar: f64) {
        let sa: f64 = m.a.iter().map(|a| a.norm_sqr()).sum();
        let sb: f64 = m.b.iter().map(|b| b.norm_sqr()).sum();
        let ab: Complex64 = m.a.iter().zip(&m.b).map(|(a, b)| a.conj() * b).sum();
        assert!((c.d_qq - hbar / 2.0 * sa).abs() < 1e-12);
        assert!((c.d_pp - hbar / 2.0 * sb).abs() < 1e-12);
        assert!((c.d_qp + hbar / 2.0 * ab.re).abs() < 1e-12);
        assert!((m.params.lambda + ab.im).abs() < 1e-12);
    }

    #[test]
    fn infeasible_diffusion_is_rejected() {
        let ctx = QuantizationContext::new(1.0, 4, 1).unwrap();
        let c = FokkerPlanckCoeffs { d_qq: 0.1, d_pp: 0.1, d_qp: 0.0, ..sample() };
        // lambda = -0.1: needs d_qq d_pp >= 0.0025.
        assert!(solve_lindblad_ops(&c, &ctx).is_ok());
        let c = FokkerPlanckCoeffs { d_qq: 0.04, d_pp: 0.04, ..c };
        let err = solve_lindblad_ops(&c, &ctx).unwrap_err();
        assert!(matches!(err, Error::Infeasible { min_eigenvalue } if min_eigenvalue < 0.0));
        assert!(err.to_string().starts_with("unphysical diffusion"));
    }

    #[test]
    fn closed_system_limit() {
        let ctx = QuantizationContext::new(0.5, 7, 1).unwrap();
        let c = FokkerPlanckCoeffs { d_qq: 0.0, d_qp: 0.0, d_pp: 0.0, c_qq: 0.0, c_pp: 0.0, ..sample() };
        let m = solve_lindblad_ops(&c, &ctx).unwrap();
        let l = build_lindblad_superop(&m, &ctx).unwrap();
        let closed = hamiltonian_superop(&m.h).unwrap().scale(-ONE);
        assert!(l.max_abs_diff(&closed, Region::Full).unwrap() < 1e-14);
        let e = build_explicit_superop(&c, &ctx).unwrap();
        assert!(e.max_abs_diff(&closed, Region::Full).unwrap() < 1e-12);
    }

    #[test]
    fn three_routes_agree() {
        let ctx = QuantizationContext::new(0.7, 10, 1).unwrap();
        let c = sample();
        let m = solve_lindblad_ops(&c, &ctx).unwrap();
        check_relations(&c, &m, 0.7);
        let lind = build_lindblad_superop(&m, &ctx).unwrap();
        let expl = build_explicit_superop(&c, &ctx).unwrap();
        let (gen, h) = build_generic_superop(&c, &ctx).unwrap();
        assert!((h - (c.c_qq + c.c_pp)).abs() < 1e-12, "{h}");
        assert!(lind.max_abs_diff(&gen, Region::Full).unwrap() < 1e-10);
        assert!(lind.max_abs_diff(&expl, Region::Interior).unwrap() < 1e-10);
        let k = m.kossakowski();
        let ev = SymmetricEigen::new(k).eigenvalues;
        assert!(ev.iter().all(|&e| e >= -1e-12));
    }
}
