//! Superoperators: linear maps on operators.
//!
//! A [`SuperOperator`] is kept as a sum `sum_t c_t L_t X R_t` whenever it is
//! built from left and right multiplications, and as a dense matrix on
//! column-stacked operators otherwise. The dense matrix of a structured
//! superoperator is materialized on demand, subject to [`DENSE_CAP`]:
//!
//! ```text
//! vec(L X R) = (R^T kron L) vec(X)
//! ```
//!
//! Quantization of dynamical operators lives in [`quantize`], the
//! brute-force word symmetrization in [`word`].

mod factor;
pub mod quantize;
pub mod word;

use std::collections::HashMap;
use std::io::Write;
use std::sync::{Arc, OnceLock};

use num_complex::Complex64;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::hilbert::{self, build_p, build_q, MatrixOperator, QuantizationContext};
use crate::linalg::{self, CMatrix, I, ONE, ZERO};

pub use factor::Factor;
pub use quantize::{quantize_dynop, quantize_dynop_with, Ordering, WORD_CAP};
pub use word::{Atom, SuperOpWord};

/// Largest Hilbert dimension `N^n` whose superoperator is materialized
/// densely by [`SuperOperator::dense`].
pub const DENSE_CAP: usize = 64;

/// One `c L X R` term.
#[derive(Clone, Debug)]
pub struct Term {
    pub coeff: Complex64,
    pub left: Arc<Factor>,
    pub right: Arc<Factor>,
}

#[derive(Clone, Debug)]
enum Repr {
    Structured(Vec<Term>),
    Dense,
}

/// Where two superoperators are compared.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Region {
    Full,
    /// Rows and columns `vec(|i><j|)` with both `i` and `j` interior.
    Interior,
}

#[derive(Clone, Debug)]
pub struct SuperOperator {
    ctx: QuantizationContext,
    repr: Repr,
    dense: OnceLock<CMatrix>,
    groups: OnceLock<Vec<(Arc<Factor>, Factor)>>,
}

impl SuperOperator {
    /// Structured superoperator; terms sharing both factors are merged.
    pub fn from_terms(ctx: &QuantizationContext, terms: Vec<Term>) -> Result<Self> {
        let n = ctx.total_dim();
        for t in &terms {
            if t.left.matrix().nrows() != n || t.right.matrix().nrows() != n {
                return Err(Error::ContextMismatch);
            }
        }
        let mut index: HashMap<(u64, u64), usize> = HashMap::new();
        let mut merged: Vec<Term> = vec![];
        for t in terms {
            match index.get(&(t.left.id(), t.right.id())) {
                Some(&i) => merged[i].coeff += t.coeff,
                None => {
                    index.insert((t.left.id(), t.right.id()), merged.len());
                    merged.push(t);
                }
            }
        }
        merged.retain(|t| t.coeff != ZERO);
        Ok(Self::structured(*ctx, merged))
    }

    fn structured(ctx: QuantizationContext, terms: Vec<Term>) -> Self {
        Self { ctx, repr: Repr::Structured(terms), dense: OnceLock::new(), groups: OnceLock::new() }
    }

    /// Dense superoperator from its matrix on column-stacked operators.
    pub fn from_dense(ctx: &QuantizationContext, m: CMatrix) -> Result<Self> {
        let side = ctx.total_dim() * ctx.total_dim();
        if m.shape() != (side, side) {
            return Err(Error::InvalidArgument(format!(
                "superoperator of shape {:?}, expected side {side}",
                m.shape()
            )));
        }
        let dense = OnceLock::new();
        let _ = dense.set(m);
        Ok(Self { ctx: *ctx, repr: Repr::Dense, dense, groups: OnceLock::new() })
    }

    pub fn identity(ctx: &QuantizationContext) -> Self {
        let id = Arc::new(Factor::identity(ctx.total_dim()));
        Self::structured(*ctx, vec![Term { coeff: ONE, left: id.clone(), right: id }])
    }

    pub fn zero(ctx: &QuantizationContext) -> Self {
        Self::structured(*ctx, vec![])
    }

    pub fn ctx(&self) -> &QuantizationContext {
        &self.ctx
    }

    /// The structured terms, if the superoperator has that form.
    pub fn terms(&self) -> Option<&[Term]> {
        match &self.repr {
            Repr::Structured(t) => Some(t),
            Repr::Dense => None,
        }
    }

    pub fn is_structured(&self) -> bool {
        matches!(self.repr, Repr::Structured(_))
    }

    /// Dense matrix, built on first use. Fails above [`DENSE_CAP`].
    pub fn dense(&self) -> Result<&CMatrix> {
        self.dense_with_cap(DENSE_CAP)
    }

    /// Dense matrix with an explicit cap on the Hilbert dimension.
    pub fn dense_with_cap(&self, cap: usize) -> Result<&CMatrix> {
        if let Some(m) = self.dense.get() {
            return Ok(m);
        }
        let n = self.ctx.total_dim();
        if n > cap {
            return Err(Error::TooLarge { dim: n, cap });
        }
        Ok(self.dense.get_or_init(|| self.materialize()))
    }

    fn materialize(&self) -> CMatrix {
        let n = self.ctx.total_dim();
        let mut m = CMatrix::zeros(n * n, n * n);
        let mut block = CMatrix::zeros(n, n);
        let all: Vec<usize> = (0..n).collect();
        for j in 0..n {
            for l in 0..n {
                self.block_into(j, l, ONE, &mut block);
                for k in &all {
                    for i in &all {
                        m[(i + n * j, k + n * l)] = block[(*i, *k)];
                    }
                }
                block.fill(ZERO);
            }
        }
        m
    }

    /// Adds `s` times the `(j, l)` block, the map `|k> <l| -> |i> <j|`
    /// restricted to fixed `j` and `l`, into `buf`.
    fn block_into(&self, j: usize, l: usize, s: Complex64, buf: &mut CMatrix) {
        let n = self.ctx.total_dim();
        match &self.repr {
            Repr::Structured(terms) => {
                for t in terms {
                    let r = t.right.matrix()[(l, j)];
                    if r != ZERO {
                        t.left.accumulate(s * t.coeff * r, buf);
                    }
                }
            }
            Repr::Dense => {
                let m = self.dense.get().expect("dense representation");
                let view = m.view((n * j, n * l), (n, n));
                for (b, v) in buf.iter_mut().zip(view.iter()) {
                    *b += s * v;
                }
            }
        }
    }

    /// Apply to an operator. Structured superoperators use sparse factor
    /// products and never form the dense matrix.
    pub fn apply(&self, x: &MatrixOperator) -> Result<MatrixOperator> {
        if x.ctx() != &self.ctx {
            return Err(Error::ContextMismatch);
        }
        match &self.repr {
            Repr::Structured(_) => {
                let n = self.ctx.total_dim();
                let mut out = CMatrix::zeros(n, n);
                for (left, right) in self.groups() {
                    out += right.right_mul(&left.left_mul(x.matrix()));
                }
                MatrixOperator::new(self.ctx, out)
            }
            Repr::Dense => self.apply_dense(x),
        }
    }

    /// Apply through the dense matrix and `vec`/`unvec`.
    pub fn apply_dense(&self, x: &MatrixOperator) -> Result<MatrixOperator> {
        if x.ctx() != &self.ctx {
            return Err(Error::ContextMismatch);
        }
        let n = self.ctx.total_dim();
        let v = CMatrix::from_column_slice(n * n, 1, x.matrix().as_slice());
        let y = linalg::matmul(self.dense()?, &v);
        MatrixOperator::new(self.ctx, CMatrix::from_column_slice(n, n, y.as_slice()))
    }

    /// Terms grouped by left factor, right factors summed.
    fn groups(&self) -> &[(Arc<Factor>, Factor)] {
        self.groups.get_or_init(|| {
            let Repr::Structured(terms) = &self.repr else { return vec![] };
            let n = self.ctx.total_dim();
            let mut order: Vec<u64> = vec![];
            let mut by_left: HashMap<u64, (Arc<Factor>, CMatrix)> = HashMap::new();
            for t in terms {
                let entry = by_left.entry(t.left.id()).or_insert_with(|| {
                    order.push(t.left.id());
                    (t.left.clone(), CMatrix::zeros(n, n))
                });
                t.right.accumulate(t.coeff, &mut entry.1);
            }
            order
                .into_iter()
                .map(|id| {
                    let (l, r) = by_left.remove(&id).expect("grouped");
                    let label = format!("sum[{}]", l.label());
                    (l, Factor::new(label, r))
                })
                .collect()
        })
    }

    /// `self o other`: apply `other` first.
    pub fn compose(&self, other: &Self) -> Result<Self> {
        self.same_ctx(other)?;
        match (&self.repr, &other.repr) {
            (Repr::Structured(a), Repr::Structured(b)) => {
                let mut cache: HashMap<(u64, u64), Arc<Factor>> = HashMap::new();
                let mut product = |x: &Arc<Factor>, y: &Arc<Factor>| -> Arc<Factor> {
                    if x.is_identity() {
                        return y.clone();
                    }
                    if y.is_identity() {
                        return x.clone();
                    }
                    cache
                        .entry((x.id(), y.id()))
                        .or_insert_with(|| {
                            let label = format!("{}.{}", x.label(), y.label());
                            Arc::new(Factor::new(label, linalg::matmul(x.matrix(), y.matrix())))
                        })
                        .clone()
                };
                let mut terms = vec![];
                for s in a {
                    for t in b {
                        terms.push(Term {
                            coeff: s.coeff * t.coeff,
                            left: product(&s.left, &t.left),
                            right: product(&t.right, &s.right),
                        });
                    }
                }
                Self::from_terms(&self.ctx, terms)
            }
            _ => Self::from_dense(&self.ctx, linalg::matmul(self.dense()?, other.dense()?)),
        }
    }

    pub fn try_add(&self, other: &Self) -> Result<Self> {
        self.same_ctx(other)?;
        match (&self.repr, &other.repr) {
            (Repr::Structured(a), Repr::Structured(b)) => {
                Self::from_terms(&self.ctx, a.iter().chain(b).cloned().collect())
            }
            _ => Self::from_dense(&self.ctx, self.dense()? + other.dense()?),
        }
    }

    pub fn try_sub(&self, other: &Self) -> Result<Self> {
        self.try_add(&other.scale(-ONE))
    }

    pub fn scale(&self, c: Complex64) -> Self {
        match &self.repr {
            Repr::Structured(terms) => {
                Self::structured(self.ctx, terms.iter().map(|t| Term { coeff: t.coeff * c, ..t.clone() }).collect())
            }
            Repr::Dense => Self::from_dense(&self.ctx, self.dense.get().expect("dense") * c).expect("same shape"),
        }
    }

    /// `[self, other] = self o other - other o self`.
    pub fn commutator(&self, other: &Self) -> Result<Self> {
        self.compose(other)?.try_sub(&other.compose(self)?)
    }

    /// Adjoint with respect to `Tr(A^dagger B)`.
    pub fn adjoint(&self) -> Self {
        match &self.repr {
            Repr::Structured(terms) => {
                let mut cache: HashMap<u64, Arc<Factor>> = HashMap::new();
                let mut dag = |f: &Arc<Factor>| -> Arc<Factor> {
                    if f.is_identity() {
                        return f.clone();
                    }
                    cache
                        .entry(f.id())
                        .or_insert_with(|| Arc::new(Factor::new(format!("{}^+", f.label()), f.matrix().adjoint())))
                        .clone()
                };
                let terms = terms
                    .iter()
                    .map(|t| Term { coeff: t.coeff.conj(), left: dag(&t.left), right: dag(&t.right) })
                    .collect();
                Self::from_terms(&self.ctx, terms).expect("same context")
            }
            Repr::Dense => Self::from_dense(&self.ctx, self.dense.get().expect("dense").adjoint()).expect("same shape"),
        }
    }

    /// Max-norm of `self - other` over the given region, computed block by
    /// block without forming either dense matrix.
    pub fn max_abs_diff(&self, other: &Self, region: Region) -> Result<f64> {
        self.same_ctx(other)?;
        let n = self.ctx.total_dim();
        let idx: Vec<usize> = match region {
            Region::Full => (0..n).collect(),
            Region::Interior => self.ctx.interior_indices(),
        };
        let mut block = CMatrix::zeros(n, n);
        let mut worst = 0.0_f64;
        for &j in &idx {
            for &l in &idx {
                self.block_into(j, l, ONE, &mut block);
                other.block_into(j, l, -ONE, &mut block);
                for &k in &idx {
                    for &i in &idx {
                        worst = worst.max(block[(i, k)].norm());
                    }
                }
                block.fill(ZERO);
            }
        }
        Ok(worst)
    }

    /// Largest absolute matrix entry.
    pub fn max_abs(&self) -> Result<f64> {
        self.max_abs_diff(&Self::zero(&self.ctx), Region::Full)
    }

    /// Dense matrix as `i,j,re,im` CSV.
    pub fn write_csv<W: Write>(&self, w: W) -> Result<std::io::Result<()>> {
        Ok(hilbert::write_matrix_csv(w, self.dense()?))
    }

    /// Structured form as a JSON list of `{coeff_re, coeff_im, left_ref,
    /// right_ref}`; `None` for dense superoperators.
    pub fn structured_json(&self) -> Option<serde_json::Value> {
        #[derive(Serialize)]
        struct Entry<'a> {
            coeff_re: f64,
            coeff_im: f64,
            left_ref: &'a str,
            right_ref: &'a str,
        }
        let terms = self.terms()?;
        let entries: Vec<Entry> = terms
            .iter()
            .map(|t| Entry {
                coeff_re: t.coeff.re,
                coeff_im: t.coeff.im,
                left_ref: t.left.label(),
                right_ref: t.right.label(),
            })
            .collect();
        Some(serde_json::to_value(entries).expect("plain data"))
    }

    fn same_ctx(&self, other: &Self) -> Result<()> {
        if self.ctx != other.ctx {
            return Err(Error::ContextMismatch);
        }
        Ok(())
    }
}

fn single(ctx: &QuantizationContext, coeff: Complex64, left: Arc<Factor>, right: Arc<Factor>) -> SuperOperator {
    SuperOperator::structured(*ctx, vec![Term { coeff, left, right }])
}

fn labelled(op: &MatrixOperator, label: &str) -> Arc<Factor> {
    Arc::new(Factor::new(label, op.matrix().clone()))
}

/// `X -> A X`.
pub fn left_mult(a: &MatrixOperator) -> SuperOperator {
    let id = Arc::new(Factor::identity(a.ctx().total_dim()));
    single(a.ctx(), ONE, labelled(a, "A"), id)
}

/// `X -> X A`.
pub fn right_mult(a: &MatrixOperator) -> SuperOperator {
    let id = Arc::new(Factor::identity(a.ctx().total_dim()));
    single(a.ctx(), ONE, id, labelled(a, "A"))
}

/// `c (A^l + s A^r)` with a shared factor.
fn two_sided(a: &MatrixOperator, label: &str, c: Complex64, s: f64) -> SuperOperator {
    let id = Arc::new(Factor::identity(a.ctx().total_dim()));
    let f = labelled(a, label);
    SuperOperator::structured(
        *a.ctx(),
        vec![Term { coeff: c, left: f.clone(), right: id.clone() }, Term { coeff: c * s, left: id, right: f }],
    )
}

/// `P1 = (1/hbar)[p_k, .]`.
pub fn build_p1(ctx: &QuantizationContext, k: usize) -> Result<SuperOperator> {
    let c = Complex64::new(1.0 / ctx.hbar(), 0.0);
    Ok(two_sided(&build_p(ctx, k)?, &format!("p{}", k + 1), c, -1.0))
}

/// `P2 = -(1/hbar)[q_k, .]`.
pub fn build_p2(ctx: &QuantizationContext, k: usize) -> Result<SuperOperator> {
    let c = Complex64::new(-1.0 / ctx.hbar(), 0.0);
    Ok(two_sided(&build_q(ctx, k)?, &format!("q{}", k + 1), c, -1.0))
}

/// `Q1 = q_k o .`, the Jordan multiplication.
pub fn build_q1(ctx: &QuantizationContext, k: usize) -> Result<SuperOperator> {
    Ok(two_sided(&build_q(ctx, k)?, &format!("q{}", k + 1), Complex64::new(0.5, 0.0), 1.0))
}

/// `Q2 = p_k o .`.
pub fn build_q2(ctx: &QuantizationContext, k: usize) -> Result<SuperOperator> {
    Ok(two_sided(&build_p(ctx, k)?, &format!("p{}", k + 1), Complex64::new(0.5, 0.0), 1.0))
}

/// `(i/hbar)(H^l - H^r)`.
pub fn hamiltonian_superop(h: &MatrixOperator) -> Result<SuperOperator> {
    let r = h.hermiticity_residual();
    if r > hilbert::hermitian_tolerance(h.matrix()) {
        return Err(Error::NotHermitian(r));
    }
    Ok(two_sided(h, "H", I / h.ctx().hbar(), -1.0))
}

/// `exp(i (a1.Q1 + a2.Q2 + b1.P1 + b2.P2))`.
///
/// Left and right multiplications commute, so this is `X -> U X V` with
/// `U = exp(i G_l)`, `V = exp(i G_r)` and
/// `G_{l,r} = (a1.q + a2.p)/2 +- (b1.p - b2.q)/hbar`.
pub fn build_weyl_superop_basis(
    a1: &[f64],
    a2: &[f64],
    b1: &[f64],
    b2: &[f64],
    ctx: &QuantizationContext,
) -> Result<SuperOperator> {
    let n = ctx.modes();
    for v in [a1, a2, b1, b2] {
        if v.len() != n {
            return Err(Error::ModeMismatch { left: v.len(), right: n });
        }
        if v.iter().any(|x| !x.is_finite()) {
            return Err(Error::InvalidArgument("non-finite Weyl parameter".into()));
        }
    }
    let mut sym = MatrixOperator::zeros(ctx);
    let mut anti = MatrixOperator::zeros(ctx);
    for k in 0..n {
        let (q, p) = (build_q(ctx, k)?, build_p(ctx, k)?);
        sym = &sym + &(&(&(&q * a1[k]) + &(&p * a2[k])) * 0.5);
        anti = &anti + &(&(&(&p * b1[k]) - &(&q * b2[k])) * (1.0 / ctx.hbar()));
    }
    let u = linalg::expm_hermitian_phase((&sym + &anti).matrix(), 1.0);
    let v = linalg::expm_hermitian_phase((&sym - &anti).matrix(), 1.0);
    Ok(single(ctx, ONE, Arc::new(Factor::new("exp(iGl)", u)), Arc::new(Factor::new("exp(iGr)", v))))
}

/// Adjoint with respect to the Hilbert-Schmidt inner product.
pub fn superop_adjoint(s: &SuperOperator) -> SuperOperator {
    s.adjoint()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hilbert::{commutator, hs_inner, jordan, random_hermitian, random_operator};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn ctx(n: usize) -> QuantizationContext {
        QuantizationContext::new(1.0, n, 1).unwrap()
    }

    #[test]
    fn vectorization_convention_on_two_by_two() {
        let c = ctx(2);
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let (a, b, x) = (random_operator(&c, &mut rng), random_operator(&c, &mut rng), random_operator(&c, &mut rng));
        let s = left_mult(&a).compose(&right_mult(&b)).unwrap();
        let m = s.dense().unwrap();
        // Brute force: (B^T kron A) acting on the stacked columns of X.
        let expected = linalg::kron(&b.matrix().transpose(), a.matrix());
        assert!(linalg::max_abs_diff(m, &expected) < 1e-15);
        let axb = &(&a * &x) * &b;
        let v: Vec<Complex64> = x.matrix().as_slice().to_vec();
        for r in 0..4 {
            let y: Complex64 = (0..4).map(|c| m[(r, c)] * v[c]).sum();
            assert!((y - axb.matrix()[(r % 2, r / 2)]).norm() < 1e-14);
        }
    }

    #[test]
    fn left_and_right_multiplication() {
        let c = ctx(5);
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let (a, x) = (random_operator(&c, &mut rng), random_operator(&c, &mut rng));
        let id = MatrixOperator::identity(&c);
        assert!(left_mult(&a).apply(&id).unwrap().max_abs_diff(&a).unwrap() < 1e-15);
        assert!(left_mult(&a).apply(&x).unwrap().max_abs_diff(&(&a * &x)).unwrap() < 1e-13);
        assert!(right_mult(&a).apply(&x).unwrap().max_abs_diff(&(&x * &a)).unwrap() < 1e-13);
        let b = random_operator(&c, &mut rng);
        let comm = left_mult(&a).commutator(&right_mult(&b)).unwrap();
        assert!(comm.max_abs().unwrap() < 1e-13);
    }

    #[test]
    fn structured_and_dense_paths_agree() {
        let c = ctx(6);
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let s = build_q1(&c, 0).unwrap().compose(&build_p2(&c, 0).unwrap()).unwrap();
        let x = random_operator(&c, &mut rng);
        let d = s.apply(&x).unwrap().max_abs_diff(&s.apply_dense(&x).unwrap()).unwrap();
        assert!(d < 1e-13);
    }

    #[test]
    fn identity_and_dense_cap() {
        let c = ctx(4);
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let x = random_operator(&c, &mut rng);
        assert_eq!(SuperOperator::identity(&c).apply(&x).unwrap(), x);
        let big = QuantizationContext::new(1.0, 9, 2).unwrap();
        assert_eq!(SuperOperator::identity(&big).dense().unwrap_err(), Error::TooLarge { dim: 81, cap: DENSE_CAP });
    }

    #[test]
    fn basis_superoperators_on_identity() {
        let c = ctx(10);
        let id = MatrixOperator::identity(&c);
        let q = build_q(&c, 0).unwrap();
        let p = build_p(&c, 0).unwrap();
        assert_eq!(build_q1(&c, 0).unwrap().apply(&id).unwrap().max_abs_diff(&q).unwrap(), 0.0);
        assert_eq!(build_q2(&c, 0).unwrap().apply(&id).unwrap().max_abs_diff(&p).unwrap(), 0.0);
        assert_eq!(build_p1(&c, 0).unwrap().apply(&id).unwrap().max_abs(), 0.0);
        assert_eq!(build_p2(&c, 0).unwrap().apply(&id).unwrap().max_abs(), 0.0);
    }

    #[test]
    fn p1_on_q_is_minus_i_on_interior() {
        let c = QuantizationContext::new(0.3, 16, 1).unwrap();
        let r = build_p1(&c, 0).unwrap().apply(&build_q(&c, 0).unwrap()).unwrap();
        let target = MatrixOperator::identity(&c).scale(-I);
        assert!(r.interior_max_abs_diff(&target).unwrap() < 1e-12);
        assert!(r.max_abs_diff(&target).unwrap() > 1.0);
    }

    #[test]
    fn leibniz_over_jordan_product() {
        let c = ctx(8);
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let (a, b) = (random_hermitian(&c, &mut rng), random_hermitian(&c, &mut rng));
        for s in [build_p1(&c, 0).unwrap(), build_p2(&c, 0).unwrap()] {
            let lhs = s.apply(&jordan(&a, &b).unwrap()).unwrap();
            let rhs = &jordan(&s.apply(&a).unwrap(), &b).unwrap() + &jordan(&a, &s.apply(&b).unwrap()).unwrap();
            assert!(lhs.max_abs_diff(&rhs).unwrap() < 1e-12 * 10.0);
        }
    }

    #[test]
    fn q_superoperators_are_self_adjoint() {
        let c = ctx(7);
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let (a, b) = (random_operator(&c, &mut rng), random_operator(&c, &mut rng));
        for s in [build_q1(&c, 0).unwrap(), build_q2(&c, 0).unwrap()] {
            let l = hs_inner(&s.apply(&a).unwrap(), &b).unwrap();
            let r = hs_inner(&a, &s.apply(&b).unwrap()).unwrap();
            assert!((l - r).norm() < 1e-12);
            assert!(s.adjoint().max_abs_diff(&s, Region::Full).unwrap() < 1e-15);
        }
    }

    #[test]
    fn adjoint_of_left_mult_and_involution() {
        let c = ctx(4);
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let a = random_operator(&c, &mut rng);
        let s = left_mult(&a);
        assert!(s.adjoint().max_abs_diff(&left_mult(&a.dagger()), Region::Full).unwrap() < 1e-15);
        let t = build_q1(&c, 0).unwrap().compose(&s).unwrap().scale(Complex64::new(0.3, -2.0));
        assert!(t.adjoint().adjoint().max_abs_diff(&t, Region::Full).unwrap() < 1e-14);
        let d = SuperOperator::from_dense(&c, t.dense().unwrap().clone()).unwrap();
        assert!(d.adjoint().max_abs_diff(&t.adjoint(), Region::Full).unwrap() < 1e-14);
    }

    #[test]
    fn hamiltonian_superop_is_scaled_commutator() {
        let c = QuantizationContext::new(0.5, 6, 1).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let (h, x) = (random_hermitian(&c, &mut rng), random_hermitian(&c, &mut rng));
        let s = hamiltonian_superop(&h).unwrap();
        let expected = commutator(&h, &x).unwrap().scale(I / 0.5);
        let y = s.apply(&x).unwrap();
        assert!(y.max_abs_diff(&expected).unwrap() < 1e-12);
        assert!(y.hermiticity_residual() < 1e-12);
        assert_eq!(hamiltonian_superop(&MatrixOperator::identity(&c)).unwrap().max_abs().unwrap(), 0.0);
        let nh = random_operator(&c, &mut rng);
        assert!(matches!(hamiltonian_superop(&nh), Err(Error::NotHermitian(_))));
    }

    #[test]
    fn weyl_superop_basis_matches_dense_exponential() {
        let c = QuantizationContext::new(0.7, 5, 1).unwrap();
        let (a1, a2, b1, b2) = ([0.3], [-0.2], [0.15], [0.4]);
        let v = build_weyl_superop_basis(&a1, &a2, &b1, &b2, &c).unwrap();
        let generator = build_q1(&c, 0)
            .unwrap()
            .scale(Complex64::new(a1[0], 0.0))
            .try_add(&build_q2(&c, 0).unwrap().scale(Complex64::new(a2[0], 0.0)))
            .unwrap()
            .try_add(&build_p1(&c, 0).unwrap().scale(Complex64::new(b1[0], 0.0)))
            .unwrap()
            .try_add(&build_p2(&c, 0).unwrap().scale(Complex64::new(b2[0], 0.0)))
            .unwrap();
        let oracle = linalg::expm(&(generator.dense().unwrap() * I)).unwrap();
        assert!(linalg::max_abs_diff(v.dense().unwrap(), &oracle) < 1e-10);
        let zero = build_weyl_superop_basis(&[0.0], &[0.0], &[0.0], &[0.0], &c).unwrap();
        assert!(zero.max_abs_diff(&SuperOperator::identity(&c), Region::Full).unwrap() < 1e-15);
    }

    #[test]
    fn interior_comparison_ignores_boundary() {
        let c = ctx(8);
        let ccr = build_q1(&c, 0).unwrap().commutator(&build_p1(&c, 0).unwrap()).unwrap();
        let target = SuperOperator::identity(&c).scale(I);
        assert!(ccr.max_abs_diff(&target, Region::Interior).unwrap() < 1e-12);
        assert!(ccr.max_abs_diff(&target, Region::Full).unwrap() > 0.5);
    }

    #[test]
    fn structured_json_lists_terms() {
        let c = ctx(3);
        let j = build_p1(&c, 0).unwrap().structured_json().unwrap();
        let arr = j.as_array().unwrap();
        assert_eq!(arr.len(), 2);
        assert_eq!(arr[0]["left_ref"], "p1");
        assert_eq!(arr[1]["coeff_re"], -1.0);
    }
}
