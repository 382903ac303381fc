use std::collections::BTreeMap;
use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Exponents of `q_1..q_n` and `p_1..p_n` in a monomial, or derivative
/// orders in a differential operator.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct MultiIndex {
    q: Vec<u32>,
    p: Vec<u32>,
}

impl MultiIndex {
    pub fn new(q: Vec<u32>, p: Vec<u32>) -> Result<Self> {
        if q.len() != p.len() {
            return Err(Error::ModeMismatch { left: q.len(), right: p.len() });
        }
        if q.is_empty() {
            return Err(Error::InvalidArgument("a multi-index needs at least one mode".into()));
        }
        Ok(Self { q, p })
    }

    pub fn zero(modes: usize) -> Self {
        assert!(modes >= 1, "mode count must be at least 1");
        Self { q: vec![0; modes], p: vec![0; modes] }
    }

    pub fn unit_q(modes: usize, k: usize) -> Self {
        let mut m = Self::zero(modes);
        m.q[k] = 1;
        m
    }

    pub fn unit_p(modes: usize, k: usize) -> Self {
        let mut m = Self::zero(modes);
        m.p[k] = 1;
        m
    }

    pub fn modes(&self) -> usize {
        self.q.len()
    }

    pub fn q(&self) -> &[u32] {
        &self.q
    }

    pub fn p(&self) -> &[u32] {
        &self.p
    }

    pub fn degree(&self) -> u32 {
        self.q.iter().chain(&self.p).sum()
    }

    pub fn is_zero(&self) -> bool {
        self.degree() == 0
    }

    /// Component-wise sum (product of monomials).
    pub fn plus(&self, other: &Self) -> Self {
        assert_eq!(self.modes(), other.modes());
        Self {
            q: self.q.iter().zip(&other.q).map(|(a, b)| a + b).collect(),
            p: self.p.iter().zip(&other.p).map(|(a, b)| a + b).collect(),
        }
    }

    /// Component-wise difference, `None` if any component would go negative.
    pub fn minus(&self, other: &Self) -> Option<Self> {
        assert_eq!(self.modes(), other.modes());
        let sub =
            |a: &[u32], b: &[u32]| -> Option<Vec<u32>> { a.iter().zip(b).map(|(x, y)| x.checked_sub(*y)).collect() };
        Some(Self { q: sub(&self.q, &other.q)?, p: sub(&self.p, &other.p)? })
    }

    /// All multi-indices `b` with `b <= self` component-wise.
    pub fn lower_set(&self) -> Vec<Self> {
        let bounds: Vec<u32> = self.q.iter().chain(&self.p).copied().collect();
        let n = self.modes();
        let mut out = vec![];
        let mut cur = vec![0u32; bounds.len()];
        loop {
            out.push(Self { q: cur[..n].to_vec(), p: cur[n..].to_vec() });
            let mut i = 0;
            loop {
                if i == cur.len() {
                    return out;
                }
                if cur[i] < bounds[i] {
                    cur[i] += 1;
                    break;
                }
                cur[i] = 0;
                i += 1;
            }
        }
    }

    /// Product of component-wise binomial coefficients `C(self, b)`.
    pub fn binomial(&self, b: &Self) -> f64 {
        self.q.iter().chain(&self.p).zip(b.q.iter().chain(&b.p)).map(|(n, k)| crate::linalg::binomial(*n, *k)).product()
    }

    fn monomial_value(&self, q: &[f64], p: &[f64]) -> f64 {
        let mut v = 1.0;
        for k in 0..self.modes() {
            v *= q[k].powi(self.q[k] as i32) * p[k].powi(self.p[k] as i32);
        }
        v
    }
}

impl fmt::Display for MultiIndex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut first = true;
        for (name, exps) in [("q", &self.q), ("p", &self.p)] {
            for (k, e) in exps.iter().enumerate() {
                if *e == 0 {
                    continue;
                }
                if !first {
                    f.write_str("*")?;
                }
                first = false;
                write!(f, "{name}{}", k + 1)?;
                if *e > 1 {
                    write!(f, "^{e}")?;
                }
            }
        }
        if first {
            f.write_str("1")?;
        }
        Ok(())
    }
}

/// A real polynomial in `q_1..q_n, p_1..p_n`, stored sparsely.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PolySymbol {
    modes: usize,
    terms: BTreeMap<MultiIndex, f64>,
}

impl PolySymbol {
    pub fn zero(modes: usize) -> Self {
        assert!(modes >= 1, "mode count must be at least 1");
        Self { modes, terms: BTreeMap::new() }
    }

    pub fn constant(modes: usize, c: f64) -> Self {
        Self::monomial(MultiIndex::zero(modes), c)
    }

    pub fn monomial(index: MultiIndex, coeff: f64) -> Self {
        let mut s = Self::zero(index.modes());
        if coeff != 0.0 {
            s.terms.insert(index, coeff);
        }
        s
    }

    /// The coordinate `q_k`.
    pub fn q(modes: usize, k: usize) -> Self {
        Self::monomial(MultiIndex::unit_q(modes, k), 1.0)
    }

    /// The momentum `p_k`.
    pub fn p(modes: usize, k: usize) -> Self {
        Self::monomial(MultiIndex::unit_p(modes, k), 1.0)
    }

    /// Builds a symbol from `(index, coefficient)` pairs, summing repeats.
    pub fn from_terms<I>(modes: usize, terms: I) -> Result<Self>
    where
        I: IntoIterator<Item = (MultiIndex, f64)>,
    {
        let mut s = Self::zero(modes);
        for (idx, c) in terms {
            if idx.modes() != modes {
                return Err(Error::ModeMismatch { left: modes, right: idx.modes() });
            }
            s.add_term(idx, c);
        }
        Ok(s)
    }

    pub fn modes(&self) -> usize {
        self.modes
    }

    pub fn terms(&self) -> impl Iterator<Item = (&MultiIndex, f64)> {
        self.terms.iter().map(|(k, v)| (k, *v))
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn coefficient(&self, index: &MultiIndex) -> f64 {
        self.terms.get(index).copied().unwrap_or(0.0)
    }

    pub fn degree(&self) -> u32 {
        self.terms.keys().map(MultiIndex::degree).max().unwrap_or(0)
    }

    pub(crate) fn add_term(&mut self, index: MultiIndex, coeff: f64) {
        if coeff == 0.0 {
            return;
        }
        let v = self.terms.get(&index).copied().unwrap_or(0.0) + coeff;
        if v == 0.0 {
            self.terms.remove(&index);
        } else {
            self.terms.insert(index, v);
        }
    }

    pub fn scale(&self, c: f64) -> Self {
        let mut out = Self::zero(self.modes);
        for (k, v) in &self.terms {
            out.add_term(k.clone(), v * c);
        }
        out
    }

    pub fn eval(&self, q: &[f64], p: &[f64]) -> f64 {
        assert_eq!(q.len(), self.modes);
        assert_eq!(p.len(), self.modes);
        self.terms.iter().map(|(k, c)| c * k.monomial_value(q, p)).sum()
    }

    /// Applies `prod_k d^{a_k}/dq_k^{a_k} d^{b_k}/dp_k^{b_k}`.
    pub fn derivative(&self, orders: &MultiIndex) -> Self {
        assert_eq!(orders.modes(), self.modes);
        let mut out = Self::zero(self.modes);
        for (idx, c) in &self.terms {
            let Some(rest) = idx.minus(orders) else { continue };
            let mut factor = *c;
            for k in 0..self.modes {
                factor *= falling(idx.q[k], orders.q[k]) * falling(idx.p[k], orders.p[k]);
            }
            out.add_term(rest, factor);
        }
        out
    }

    pub fn d_dq(&self, k: usize) -> Self {
        self.derivative(&MultiIndex::unit_q(self.modes, k))
    }

    pub fn d_dp(&self, k: usize) -> Self {
        self.derivative(&MultiIndex::unit_p(self.modes, k))
    }

    fn check_modes(&self, other: &Self) -> Result<()> {
        if self.modes != other.modes {
            return Err(Error::ModeMismatch { left: self.modes, right: other.modes });
        }
        Ok(())
    }

    pub fn try_add(&self, other: &Self) -> Result<Self> {
        self.check_modes(other)?;
        let mut out = self.clone();
        for (k, v) in &other.terms {
            out.add_term(k.clone(), *v);
        }
        Ok(out)
    }

    pub fn try_mul(&self, other: &Self) -> Result<Self> {
        self.check_modes(other)?;
        let mut out = Self::zero(self.modes);
        for (ka, va) in &self.terms {
            for (kb, vb) in &other.terms {
                out.add_term(ka.plus(kb), va * vb);
            }
        }
        Ok(out)
    }
}

fn falling(n: u32, k: u32) -> f64 {
    (0..k).map(|i| f64::from(n - i)).product()
}

impl fmt::Display for PolySymbol {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return f.write_str("0");
        }
        for (i, (k, c)) in self.terms.iter().enumerate() {
            if i > 0 {
                f.write_str(" + ")?;
            }
            write!(f, "{c}*{k}")?;
        }
        Ok(())
    }
}

// Arithmetic operators panic on a mode-count mismatch, like matrix libraries
// do on shape mismatches. The `try_*` methods report it instead.

impl Add for &PolySymbol {
    type Output = PolySymbol;
    fn add(self, rhs: &PolySymbol) -> PolySymbol {
        self.try_add(rhs).expect("PolySymbol + PolySymbol")
    }
}

impl Sub for &PolySymbol {
    type Output = PolySymbol;
    fn sub(self, rhs: &PolySymbol) -> PolySymbol {
        self.try_add(&rhs.scale(-1.0)).expect("PolySymbol - PolySymbol")
    }
}

impl Mul for &PolySymbol {
    type Output = PolySymbol;
    fn mul(self, rhs: &PolySymbol) -> PolySymbol {
        self.try_mul(rhs).expect("PolySymbol * PolySymbol")
    }
}

impl Mul<f64> for &PolySymbol {
    type Output = PolySymbol;
    fn mul(self, rhs: f64) -> PolySymbol {
        self.scale(rhs)
    }
}

impl Neg for &PolySymbol {
    type Output = PolySymbol;
    fn neg(self) -> PolySymbol {
        self.scale(-1.0)
    }
}

/// `{a, b} = sum_k (da/dq_k db/dp_k - da/dp_k db/dq_k)`.
pub fn poisson_bracket(a: &PolySymbol, b: &PolySymbol) -> Result<PolySymbol> {
    a.check_modes(b)?;
    let mut out = PolySymbol::zero(a.modes);
    for k in 0..a.modes {
        out = out.try_add(&a.d_dq(k).try_mul(&b.d_dp(k))?)?;
        out = out.try_add(&a.d_dp(k).try_mul(&b.d_dq(k))?.scale(-1.0))?;
    }
    Ok(out)
}

/// A polynomial with up to `terms` monomials of total degree at most
/// `max_degree` and small integer coefficients in `[-3, 3]`.
pub fn random_symbol<R: rand::Rng>(modes: usize, max_degree: u32, terms: usize, rng: &mut R) -> PolySymbol {
    let mut s = PolySymbol::zero(modes);
    for _ in 0..terms {
        let mut budget = rng.gen_range(0..=max_degree);
        let (mut q, mut p) = (vec![0; modes], vec![0; modes]);
        while budget > 0 {
            let k = rng.gen_range(0..modes);
            if rng.gen_bool(0.5) {
                q[k] += 1;
            } else {
                p[k] += 1;
            }
            budget -= 1;
        }
        let c = rng.gen_range(-3..=3) as f64;
        s.add_term(MultiIndex { q, p }, c);
    }
    s
}

#[cfg(test)]
mod tests {
    use super::*;

    fn q() -> PolySymbol {
        PolySymbol::q(1, 0)
    }
    fn p() -> PolySymbol {
        PolySymbol::p(1, 0)
    }

    #[test]
    fn canonical_bracket() {
        assert_eq!(poisson_bracket(&q(), &p()).unwrap(), PolySymbol::constant(1, 1.0));
        assert_eq!(poisson_bracket(&p(), &q()).unwrap(), PolySymbol::constant(1, -1.0));
    }

    #[test]
    fn bracket_of_q_squared_with_p() {
        let q2 = &q() * &q();
        assert_eq!(poisson_bracket(&q2, &p()).unwrap(), &q() * 2.0);
    }

    #[test]
    fn self_bracket_vanishes() {
        let h = &(&(&p() * &p()) * 0.5) + &(&(&q() * &q()) * &q());
        assert!(poisson_bracket(&h, &h).unwrap().is_zero());
    }

    #[test]
    fn mode_mismatch_is_reported() {
        let err = poisson_bracket(&PolySymbol::q(1, 0), &PolySymbol::q(2, 0)).unwrap_err();
        assert_eq!(err, Error::ModeMismatch { left: 1, right: 2 });
    }

    #[test]
    fn cancellation_removes_terms() {
        let s = &q() - &q();
        assert!(s.is_zero());
        assert_eq!(s.len(), 0);
    }

    #[test]
    fn derivative_orders() {
        // d^2/dq^2 of q^3 p = 6 q p
        let s = &(&(&q() * &q()) * &q()) * &p();
        let d = s.derivative(&MultiIndex::new(vec![2], vec![0]).unwrap());
        assert_eq!(d, &(&q() * &p()) * 6.0);
        assert!(s.derivative(&MultiIndex::new(vec![0], vec![2]).unwrap()).is_zero());
    }

    #[test]
    fn lower_set_enumerates_box() {
        let m = MultiIndex::new(vec![2, 0], vec![1, 1]).unwrap();
        assert_eq!(m.lower_set().len(), 3 * 2 * 2);
        assert_eq!(m.binomial(&MultiIndex::new(vec![1, 0], vec![1, 0]).unwrap()), 2.0);
    }

    #[test]
    fn display() {
        let s = &(&q() * &p()) * 2.0;
        assert_eq!(s.to_string(), "2*q1*p1");
        assert_eq!(PolySymbol::zero(1).to_string(), "0");
    }
}
