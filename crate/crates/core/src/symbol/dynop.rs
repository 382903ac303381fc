use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};

use super::classical::VectorField;
use super::poly::{MultiIndex, PolySymbol};
use crate::error::{Error, Result};

/// A classical dynamical operator `L = sum_a f_a(q, p) d^a`.
///
/// Each term is a polynomial coefficient multiplied on the left of a mixed
/// partial derivative `d^a = prod_k d^{a_k}/dq_k^{a_k} d^{b_k}/dp_k^{b_k}`;
/// the derivative acts first. Operators written in divergence form must be
/// expanded into this form before construction (see
/// [`DynOpSymbol::anti_standard_terms`] for the reverse direction).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DynOpSymbol {
    modes: usize,
    terms: BTreeMap<MultiIndex, PolySymbol>,
}

impl DynOpSymbol {
    pub fn zero(modes: usize) -> Self {
        assert!(modes >= 1, "mode count must be at least 1");
        Self { modes, terms: BTreeMap::new() }
    }

    /// Multiplication by `a`.
    pub fn multiplication(a: &PolySymbol) -> Self {
        Self::from_term(a.clone(), MultiIndex::zero(a.modes())).expect("consistent modes")
    }

    /// The single term `coeff * d^derivative`.
    pub fn from_term(coeff: PolySymbol, derivative: MultiIndex) -> Result<Self> {
        let mut l = Self::zero(coeff.modes());
        l.add_term(coeff, derivative)?;
        Ok(l)
    }

    pub fn d_dq(modes: usize, k: usize) -> Self {
        Self::from_term(PolySymbol::constant(modes, 1.0), MultiIndex::unit_q(modes, k)).expect("consistent modes")
    }

    pub fn d_dp(modes: usize, k: usize) -> Self {
        Self::from_term(PolySymbol::constant(modes, 1.0), MultiIndex::unit_p(modes, k)).expect("consistent modes")
    }

    pub fn modes(&self) -> usize {
        self.modes
    }

    /// `(derivative, coefficient)` pairs, ordered by derivative multi-index.
    pub fn terms(&self) -> impl Iterator<Item = (&MultiIndex, &PolySymbol)> {
        self.terms.iter()
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn add_term(&mut self, coeff: PolySymbol, derivative: MultiIndex) -> Result<()> {
        if coeff.modes() != self.modes {
            return Err(Error::ModeMismatch { left: self.modes, right: coeff.modes() });
        }
        if derivative.modes() != self.modes {
            return Err(Error::ModeMismatch { left: self.modes, right: derivative.modes() });
        }
        let merged = match self.terms.remove(&derivative) {
            Some(existing) => existing.try_add(&coeff)?,
            None => coeff,
        };
        if !merged.is_zero() {
            self.terms.insert(derivative, merged);
        }
        Ok(())
    }

    pub fn try_add(&self, other: &Self) -> Result<Self> {
        if other.modes != self.modes {
            return Err(Error::ModeMismatch { left: self.modes, right: other.modes });
        }
        let mut out = self.clone();
        for (d, c) in &other.terms {
            out.add_term(c.clone(), d.clone())?;
        }
        Ok(out)
    }

    pub fn scale(&self, c: f64) -> Self {
        let mut out = Self::zero(self.modes);
        for (d, f) in &self.terms {
            out.add_term(f.scale(c), d.clone()).expect("consistent modes");
        }
        out
    }

    /// `L a`: differentiate, multiply by the coefficient, sum over terms.
    pub fn apply(&self, a: &PolySymbol) -> Result<PolySymbol> {
        if a.modes() != self.modes {
            return Err(Error::ModeMismatch { left: self.modes, right: a.modes() });
        }
        let mut out = PolySymbol::zero(self.modes);
        for (d, f) in &self.terms {
            out = out.try_add(&f.try_mul(&a.derivative(d))?)?;
        }
        Ok(out)
    }

    /// `L = -{H, .}`, so that `L a = {a, H}`.
    pub fn from_hamiltonian(h: &PolySymbol) -> Self {
        let n = h.modes();
        let mut l = Self::zero(n);
        for k in 0..n {
            l.add_term(h.d_dp(k), MultiIndex::unit_q(n, k)).expect("consistent modes");
            l.add_term(h.d_dq(k).scale(-1.0), MultiIndex::unit_p(n, k)).expect("consistent modes");
        }
        l
    }

    /// True when every term is first order, i.e. `L` is a vector field.
    pub fn is_derivation(&self) -> bool {
        !self.terms.is_empty() && self.terms.keys().all(|d| d.degree() == 1)
    }

    pub fn vector_field(&self) -> Result<VectorField> {
        if let Some((d, _)) = self.terms.iter().find(|(d, _)| d.degree() != 1) {
            return Err(Error::NotADerivation(format!("term with derivative order {} ({})", d.degree(), d)));
        }
        if self.terms.is_empty() {
            return Err(Error::NotADerivation("zero operator".into()));
        }
        let n = self.modes;
        let rates = |unit: fn(usize, usize) -> PolySymbol| -> Result<Vec<PolySymbol>> {
            (0..n).map(|k| self.apply(&unit(n, k))).collect()
        };
        Ok(VectorField::new(rates(PolySymbol::q)?, rates(PolySymbol::p)?))
    }

    /// Coefficients `g_a` of the same operator written with derivatives on
    /// the left, `L = sum_a d^a o g_a`.
    ///
    /// Uses `f d^a = sum_{b <= a} (-1)^{|b|} C(a, b) d^{a-b} o (d^b f)`.
    pub fn anti_standard_terms(&self) -> BTreeMap<MultiIndex, PolySymbol> {
        let mut out: BTreeMap<MultiIndex, PolySymbol> = BTreeMap::new();
        for (alpha, f) in &self.terms {
            for beta in alpha.lower_set() {
                let sign = if beta.degree() % 2 == 0 { 1.0 } else { -1.0 };
                let g = f.derivative(&beta).scale(sign * alpha.binomial(&beta));
                if g.is_zero() {
                    continue;
                }
                let key = alpha.minus(&beta).expect("beta is in the lower set");
                let merged = match out.remove(&key) {
                    Some(prev) => prev.try_add(&g).expect("consistent modes"),
                    None => g,
                };
                if !merged.is_zero() {
                    out.insert(key, merged);
                }
            }
        }
        out
    }

    /// Longest atom word any term produces when quantized: coefficient
    /// degree plus derivative order.
    pub fn max_word_len(&self) -> usize {
        self.terms
            .iter()
            .flat_map(|(d, f)| f.terms().map(move |(m, _)| (m.degree() + d.degree()) as usize))
            .max()
            .unwrap_or(0)
    }
}

impl fmt::Display for DynOpSymbol {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return f.write_str("0");
        }
        for (i, (d, c)) in self.terms.iter().enumerate() {
            if i > 0 {
                f.write_str(" + ")?;
            }
            write!(f, "({c}) d[{d}]")?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::symbol::poisson_bracket;

    fn q() -> PolySymbol {
        PolySymbol::q(1, 0)
    }
    fn p() -> PolySymbol {
        PolySymbol::p(1, 0)
    }

    #[test]
    fn d_dq_of_q2p() {
        let a = &(&q() * &q()) * &p();
        let r = DynOpSymbol::d_dq(1, 0).apply(&a).unwrap();
        assert_eq!(r, &(&q() * &p()) * 2.0);
    }

    #[test]
    fn multiplication_by_q_on_one() {
        let l = DynOpSymbol::multiplication(&q());
        assert_eq!(l.apply(&PolySymbol::constant(1, 1.0)).unwrap(), q());
    }

    #[test]
    fn free_particle_generator() {
        let m = 2.0;
        let h = &(&p() * &p()) * (0.5 / m);
        let l = DynOpSymbol::from_hamiltonian(&h);
        let expected = DynOpSymbol::from_term(&p() * (1.0 / m), MultiIndex::unit_q(1, 0)).unwrap();
        assert_eq!(l, expected);
    }

    #[test]
    fn harmonic_generator() {
        let (m, w) = (1.5, 0.7);
        let h = &(&(&p() * &p()) * (0.5 / m)) + &(&(&q() * &q()) * (0.5 * m * w * w));
        let l = DynOpSymbol::from_hamiltonian(&h);
        let mut expected = DynOpSymbol::zero(1);
        expected.add_term(&p() * (1.0 / m), MultiIndex::unit_q(1, 0)).unwrap();
        expected.add_term(&q() * (-m * w * w), MultiIndex::unit_p(1, 0)).unwrap();
        for ((d1, c1), (d2, c2)) in l.terms().zip(expected.terms()) {
            assert_eq!(d1, d2);
            for ((i1, v1), (i2, v2)) in c1.terms().zip(c2.terms()) {
                assert_eq!(i1, i2);
                assert!((v1 - v2).abs() < 1e-15);
            }
        }
    }

    #[test]
    fn hamiltonian_generator_is_poisson_bracket() {
        let h = &(&(&q() * &q()) * &q()) + &(&(&p() * &p()) * &q());
        let a = &(&p() * &p()) * &p();
        let l = DynOpSymbol::from_hamiltonian(&h);
        assert_eq!(l.apply(&a).unwrap(), poisson_bracket(&a, &h).unwrap());
    }

    #[test]
    fn zero_coefficients_are_dropped() {
        let mut l = DynOpSymbol::d_dq(1, 0);
        l.add_term(PolySymbol::constant(1, -1.0), MultiIndex::unit_q(1, 0)).unwrap();
        assert!(l.is_zero());
    }

    #[test]
    fn second_order_operator_is_not_a_derivation() {
        let l =
            DynOpSymbol::from_term(PolySymbol::constant(1, 1.0), MultiIndex::new(vec![2], vec![0]).unwrap()).unwrap();
        assert!(matches!(l.vector_field(), Err(Error::NotADerivation(_))));
        let with_constant =
            DynOpSymbol::d_dq(1, 0).try_add(&DynOpSymbol::multiplication(&PolySymbol::constant(1, 0.3))).unwrap();
        assert!(matches!(with_constant.vector_field(), Err(Error::NotADerivation(_))));
    }

    #[test]
    fn anti_standard_form_of_q_d_dq() {
        // q d/dq = d/dq o q - 1
        let l = DynOpSymbol::from_term(q(), MultiIndex::unit_q(1, 0)).unwrap();
        let g = l.anti_standard_terms();
        assert_eq!(g[&MultiIndex::unit_q(1, 0)], q());
        assert_eq!(g[&MultiIndex::zero(1)], PolySymbol::constant(1, -1.0));
    }

    #[test]
    fn anti_standard_form_reproduces_action() {
        // f d^2/dq dp with f = q^2 p^3 - 4 q p
        let f = &(&(&(&q() * &q()) * &p()) * &(&p() * &p())) - &(&(&q() * &p()) * 4.0);
        let l = DynOpSymbol::from_term(f, MultiIndex::new(vec![1], vec![1]).unwrap()).unwrap();
        let a = &(&(&q() * &q()) * &(&p() * &p())) + &(&(&q() * &q()) * &q());
        let direct = l.apply(&a).unwrap();
        let mut via_anti = PolySymbol::zero(1);
        for (d, g) in l.anti_standard_terms() {
            via_anti = &via_anti + &(&g * &a).derivative(&d);
        }
        assert_eq!(direct, via_anti);
    }
}
