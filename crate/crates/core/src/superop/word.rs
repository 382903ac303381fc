//! Superoperator words and their brute-force symmetrization.

use std::collections::BTreeSet;

use num_complex::Complex64;

use super::quantize::WORD_CAP;
use super::{build_p1, build_p2, build_q1, build_q2, SuperOperator};
use crate::error::{Error, Result};
use crate::hilbert::QuantizationContext;
use crate::linalg::{I, ONE};
use crate::symbol::MultiIndex;

/// Zero-based mode index in each atom.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Atom {
    Q1(usize),
    Q2(usize),
    P1(usize),
    P2(usize),
}

impl Atom {
    pub fn mode(&self) -> usize {
        match *self {
            Atom::Q1(k) | Atom::Q2(k) | Atom::P1(k) | Atom::P2(k) => k,
        }
    }

    pub fn superop(&self, ctx: &QuantizationContext) -> Result<SuperOperator> {
        match *self {
            Atom::Q1(k) => build_q1(ctx, k),
            Atom::Q2(k) => build_q2(ctx, k),
            Atom::P1(k) => build_p1(ctx, k),
            Atom::P2(k) => build_p2(ctx, k),
        }
    }
}

/// `prefactor * A_1 A_2 ... A_m` with atoms applied right to left.
#[derive(Clone, Debug, PartialEq)]
pub struct SuperOpWord {
    pub prefactor: Complex64,
    pub atoms: Vec<Atom>,
}

impl SuperOpWord {
    pub fn new(prefactor: Complex64, atoms: Vec<Atom>) -> Self {
        Self { prefactor, atoms }
    }

    /// Word of `c q^a p^b d^alpha`: `q -> Q1`, `p -> Q2`, `d/dq -> i P1`,
    /// `d/dp -> i P2`, multiplications first.
    pub fn from_monomial(c: f64, mono: &MultiIndex, deriv: &MultiIndex) -> Self {
        let mut atoms = vec![];
        for k in 0..mono.modes() {
            atoms.extend(std::iter::repeat_n(Atom::Q1(k), mono.q()[k] as usize));
            atoms.extend(std::iter::repeat_n(Atom::Q2(k), mono.p()[k] as usize));
        }
        for k in 0..deriv.modes() {
            atoms.extend(std::iter::repeat_n(Atom::P1(k), deriv.q()[k] as usize));
            atoms.extend(std::iter::repeat_n(Atom::P2(k), deriv.p()[k] as usize));
        }
        Self { prefactor: I.powu(deriv.degree()) * c, atoms }
    }

    /// Split into the multiplication atoms and the derivative atoms.
    pub fn split(&self) -> (Self, Self) {
        let (q, p): (Vec<Atom>, Vec<Atom>) = self.atoms.iter().partition(|a| matches!(a, Atom::Q1(_) | Atom::Q2(_)));
        (Self::new(self.prefactor, q), Self::new(ONE, p))
    }

    fn check(&self, ctx: &QuantizationContext) -> Result<()> {
        if let Some(a) = self.atoms.iter().find(|a| a.mode() >= ctx.modes()) {
            return Err(Error::InvalidArgument(format!("atom {a:?} outside {} modes", ctx.modes())));
        }
        Ok(())
    }

    /// The product in the written order.
    pub fn ordered(&self, ctx: &QuantizationContext) -> Result<SuperOperator> {
        self.check(ctx)?;
        let mut acc = SuperOperator::identity(ctx).scale(self.prefactor);
        for a in &self.atoms {
            acc = acc.compose(&a.superop(ctx)?)?;
        }
        Ok(acc)
    }

    /// Average of the products over every distinct arrangement of the atoms.
    pub fn symmetrized(&self, ctx: &QuantizationContext) -> Result<SuperOperator> {
        self.check(ctx)?;
        if self.atoms.len() > WORD_CAP {
            return Err(Error::WordTooLong { len: self.atoms.len(), cap: WORD_CAP });
        }
        let arrangements = distinct_permutations(&self.atoms);
        let w = Complex64::new(1.0 / arrangements.len() as f64, 0.0);
        let mut sum = SuperOperator::zero(ctx);
        for atoms in arrangements {
            sum = sum.try_add(&Self::new(self.prefactor * w, atoms).ordered(ctx)?)?;
        }
        Ok(sum)
    }
}

fn distinct_permutations(atoms: &[Atom]) -> Vec<Vec<Atom>> {
    fn go(rest: &mut Vec<Atom>, prefix: &mut Vec<Atom>, out: &mut Vec<Vec<Atom>>) {
        if rest.is_empty() {
            out.push(prefix.clone());
            return;
        }
        let choices: BTreeSet<Atom> = rest.iter().copied().collect();
        for a in choices {
            let pos = rest.iter().position(|x| *x == a).expect("present");
            rest.remove(pos);
            prefix.push(a);
            go(rest, prefix, out);
            prefix.pop();
            rest.insert(pos, a);
        }
    }
    let mut out = vec![];
    go(&mut atoms.to_vec(), &mut vec![], &mut out);
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn distinct_arrangements_are_counted_once() {
        let p = distinct_permutations(&[Atom::Q1(0), Atom::Q1(0), Atom::P1(0)]);
        assert_eq!(p.len(), 3);
        let p = distinct_permutations(&[Atom::Q1(0), Atom::Q2(0), Atom::P1(0), Atom::P2(0)]);
        assert_eq!(p.len(), 24);
    }

    #[test]
    fn word_from_monomial() {
        let w = SuperOpWord::from_monomial(
            2.0,
            &MultiIndex::new(vec![1, 0], vec![0, 2]).unwrap(),
            &MultiIndex::unit_p(2, 0),
        );
        assert_eq!(w.atoms, vec![Atom::Q1(0), Atom::Q2(1), Atom::Q2(1), Atom::P2(0)]);
        assert_eq!(w.prefactor, Complex64::new(0.0, 2.0));
    }

    #[test]
    fn out_of_range_atom() {
        let ctx = QuantizationContext::new(1.0, 3, 1).unwrap();
        assert!(SuperOpWord::new(ONE, vec![Atom::Q1(1)]).ordered(&ctx).is_err());
    }
}
