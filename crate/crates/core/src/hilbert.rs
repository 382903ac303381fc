//! Operators on the truncated Hilbert space.
//!
//! Each mode is represented in the Fock basis of an auxiliary oscillator
//! with mass `m~` and frequency `w~`, cut off after `dim` levels. Multi-mode
//! spaces are tensor products with mode 0 as the slowest index.
//!
//! Truncation breaks `[q, p] = i hbar` on the highest level. Identities that
//! depend on it are compared on the *interior*: basis states whose level in
//! every mode is below `dim - guard_band()`.

use std::collections::HashMap;
use std::io::Write;
use std::ops::{Add, Mul, Neg, Sub};

use num_complex::Complex64;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{self, CMatrix, I, ONE, ZERO};
use crate::symbol::{MultiIndex, PolySymbol};

/// `hbar`, truncation, mode count and the auxiliary oscillator scale.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct QuantizationContext {
    hbar: f64,
    dim: usize,
    modes: usize,
    scale_mass: f64,
    scale_omega: f64,
}

impl QuantizationContext {
    /// Unit auxiliary scale.
    pub fn new(hbar: f64, dim: usize, modes: usize) -> Result<Self> {
        Self::with_scale(hbar, dim, modes, 1.0, 1.0)
    }

    pub fn with_scale(hbar: f64, dim: usize, modes: usize, scale_mass: f64, scale_omega: f64) -> Result<Self> {
        let positive = |v: f64| v > 0.0 && v.is_finite();
        if !positive(hbar) {
            return Err(Error::InvalidArgument(format!("hbar must be positive, got {hbar}")));
        }
        if !positive(scale_mass) || !positive(scale_omega) {
            return Err(Error::InvalidArgument(format!(
                "auxiliary scale must be positive, got m={scale_mass}, w={scale_omega}"
            )));
        }
        if dim < 2 {
            return Err(Error::InvalidArgument(format!("dim must be at least 2, got {dim}")));
        }
        if modes == 0 {
            return Err(Error::InvalidArgument("at least one mode is required".into()));
        }
        let total = dim.checked_pow(modes as u32);
        if total.is_none_or(|t| t > 1 << 20) {
            return Err(Error::InvalidArgument(format!("Hilbert space {dim}^{modes} is too large")));
        }
        Ok(Self { hbar, dim, modes, scale_mass, scale_omega })
    }

    pub fn hbar(&self) -> f64 {
        self.hbar
    }

    /// Levels kept per mode.
    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn modes(&self) -> usize {
        self.modes
    }

    pub fn scale_mass(&self) -> f64 {
        self.scale_mass
    }

    pub fn scale_omega(&self) -> f64 {
        self.scale_omega
    }

    /// `dim^modes`.
    pub fn total_dim(&self) -> usize {
        self.dim.pow(self.modes as u32)
    }

    /// `ceil(dim / 8)`.
    pub fn guard_band(&self) -> usize {
        self.dim.div_ceil(8)
    }

    /// Zero-point spread of `q`: `sqrt(hbar / 2 m~ w~)`.
    pub fn q_scale(&self) -> f64 {
        (self.hbar / (2.0 * self.scale_mass * self.scale_omega)).sqrt()
    }

    /// Zero-point spread of `p`: `sqrt(hbar m~ w~ / 2)`.
    pub fn p_scale(&self) -> f64 {
        (self.hbar * self.scale_mass * self.scale_omega / 2.0).sqrt()
    }

    /// Same context with a different `hbar`.
    pub fn with_hbar(&self, hbar: f64) -> Result<Self> {
        Self::with_scale(hbar, self.dim, self.modes, self.scale_mass, self.scale_omega)
    }

    /// Same context with a different truncation.
    pub fn with_dim(&self, dim: usize) -> Result<Self> {
        Self::with_scale(self.hbar, dim, self.modes, self.scale_mass, self.scale_omega)
    }

    /// Per-mode Fock levels of a basis index.
    pub fn levels(&self, mut index: usize) -> Vec<usize> {
        let mut out = vec![0; self.modes];
        for slot in out.iter_mut().rev() {
            *slot = index % self.dim;
            index /= self.dim;
        }
        out
    }

    /// Basis indices of the interior subspace, ascending.
    pub fn interior_indices(&self) -> Vec<usize> {
        let cut = self.dim.saturating_sub(self.guard_band());
        (0..self.total_dim()).filter(|&i| self.levels(i).iter().all(|&l| l < cut)).collect()
    }

    fn check_mode(&self, k: usize) -> Result<()> {
        if k >= self.modes {
            return Err(Error::InvalidArgument(format!("mode {k} out of range for {} modes", self.modes)));
        }
        Ok(())
    }
}

/// Parameters `(a, b)` of a Weyl operator `exp((i/hbar)(a q + b p))`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WeylBasisParams {
    pub a: Vec<f64>,
    pub b: Vec<f64>,
}

impl WeylBasisParams {
    pub fn new(a: Vec<f64>, b: Vec<f64>) -> Result<Self> {
        if a.len() != b.len() {
            return Err(Error::ModeMismatch { left: a.len(), right: b.len() });
        }
        if a.iter().chain(&b).any(|v| !v.is_finite()) {
            return Err(Error::InvalidArgument("non-finite Weyl parameter".into()));
        }
        Ok(Self { a, b })
    }
}

/// A dense operator tied to the context it was built in.
#[derive(Clone, Debug, PartialEq)]
pub struct MatrixOperator {
    ctx: QuantizationContext,
    m: CMatrix,
}

impl MatrixOperator {
    pub fn new(ctx: QuantizationContext, m: CMatrix) -> Result<Self> {
        let n = ctx.total_dim();
        if m.shape() != (n, n) {
            return Err(Error::InvalidArgument(format!(
                "operator of shape {:?} in a space of dimension {n}",
                m.shape()
            )));
        }
        Ok(Self { ctx, m })
    }

    /// Like [`MatrixOperator::new`], additionally verifying Hermiticity.
    pub fn hermitian(ctx: QuantizationContext, m: CMatrix) -> Result<Self> {
        let op = Self::new(ctx, m)?;
        let r = op.hermiticity_residual();
        if r > hermitian_tolerance(&op.m) {
            return Err(Error::NotHermitian(r));
        }
        Ok(op)
    }

    pub fn identity(ctx: &QuantizationContext) -> Self {
        Self { ctx: *ctx, m: linalg::identity(ctx.total_dim()) }
    }

    pub fn zeros(ctx: &QuantizationContext) -> Self {
        let n = ctx.total_dim();
        Self { ctx: *ctx, m: CMatrix::zeros(n, n) }
    }

    pub fn ctx(&self) -> &QuantizationContext {
        &self.ctx
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.m
    }

    pub fn into_matrix(self) -> CMatrix {
        self.m
    }

    pub fn dagger(&self) -> Self {
        Self { ctx: self.ctx, m: self.m.adjoint() }
    }

    pub fn scale(&self, c: Complex64) -> Self {
        Self { ctx: self.ctx, m: &self.m * c }
    }

    pub fn try_add(&self, other: &Self) -> Result<Self> {
        self.same_ctx(other)?;
        Ok(Self { ctx: self.ctx, m: &self.m + &other.m })
    }

    pub fn try_sub(&self, other: &Self) -> Result<Self> {
        self.same_ctx(other)?;
        Ok(Self { ctx: self.ctx, m: &self.m - &other.m })
    }

    /// Operator product `self * other`.
    pub fn try_mul(&self, other: &Self) -> Result<Self> {
        self.same_ctx(other)?;
        Ok(Self { ctx: self.ctx, m: linalg::matmul(&self.m, &other.m) })
    }

    pub fn trace(&self) -> Complex64 {
        linalg::trace(&self.m)
    }

    pub fn max_abs(&self) -> f64 {
        linalg::max_abs(&self.m)
    }

    pub fn hermiticity_residual(&self) -> f64 {
        linalg::hermiticity_residual(&self.m)
    }

    pub fn max_abs_diff(&self, other: &Self) -> Result<f64> {
        self.same_ctx(other)?;
        Ok(linalg::max_abs_diff(&self.m, &other.m))
    }

    /// Max-norm difference restricted to interior rows and columns.
    pub fn interior_max_abs_diff(&self, other: &Self) -> Result<f64> {
        self.same_ctx(other)?;
        let idx = self.ctx.interior_indices();
        let mut r = 0.0_f64;
        for &j in &idx {
            for &i in &idx {
                r = r.max((self.m[(i, j)] - other.m[(i, j)]).norm());
            }
        }
        Ok(r)
    }

    /// The block of `self` on the interior subspace.
    pub fn interior_block(&self) -> CMatrix {
        let idx = self.ctx.interior_indices();
        CMatrix::from_fn(idx.len(), idx.len(), |i, j| self.m[(idx[i], idx[j])])
    }

    /// Leading `ctx.dim()` levels of every mode of an operator built in a
    /// larger truncation.
    pub fn truncate_to(&self, ctx: &QuantizationContext) -> Result<Self> {
        if ctx.modes != self.ctx.modes || ctx.dim > self.ctx.dim {
            return Err(Error::ContextMismatch);
        }
        let (big, small) = (self.ctx, *ctx);
        let map = |i: usize| small.levels(i).iter().fold(0, |acc, &l| acc * big.dim + l);
        let idx: Vec<usize> = (0..small.total_dim()).map(map).collect();
        Ok(Self { ctx: small, m: CMatrix::from_fn(idx.len(), idx.len(), |i, j| self.m[(idx[i], idx[j])]) })
    }

    /// Row-major `i,j,re,im` lines, 0-based.
    pub fn write_csv<W: Write>(&self, w: W) -> std::io::Result<()> {
        write_matrix_csv(w, &self.m)
    }

    fn same_ctx(&self, other: &Self) -> Result<()> {
        if self.ctx != other.ctx {
            return Err(Error::ContextMismatch);
        }
        Ok(())
    }
}

/// Row-major `i,j,re,im` CSV of a complex matrix, with header.
pub fn write_matrix_csv<W: Write>(mut w: W, m: &CMatrix) -> std::io::Result<()> {
    writeln!(w, "i,j,re,im")?;
    for i in 0..m.nrows() {
        for j in 0..m.ncols() {
            let z = m[(i, j)];
            writeln!(w, "{i},{j},{:.16e},{:.16e}", z.re, z.im)?;
        }
    }
    Ok(())
}

/// Default Hermiticity tolerance: `1e-10` scaled by the max-norm when above one.
pub fn hermitian_tolerance(m: &CMatrix) -> f64 {
    1e-10 * linalg::max_abs(m).max(1.0)
}

impl Add for &MatrixOperator {
    type Output = MatrixOperator;
    fn add(self, rhs: Self) -> MatrixOperator {
        self.try_add(rhs).expect("operators from different contexts")
    }
}

impl Sub for &MatrixOperator {
    type Output = MatrixOperator;
    fn sub(self, rhs: Self) -> MatrixOperator {
        self.try_sub(rhs).expect("operators from different contexts")
    }
}

impl Mul for &MatrixOperator {
    type Output = MatrixOperator;
    fn mul(self, rhs: Self) -> MatrixOperator {
        self.try_mul(rhs).expect("operators from different contexts")
    }
}

impl Mul<f64> for &MatrixOperator {
    type Output = MatrixOperator;
    fn mul(self, rhs: f64) -> MatrixOperator {
        self.scale(Complex64::new(rhs, 0.0))
    }
}

impl Mul<Complex64> for &MatrixOperator {
    type Output = MatrixOperator;
    fn mul(self, rhs: Complex64) -> MatrixOperator {
        self.scale(rhs)
    }
}

impl Neg for &MatrixOperator {
    type Output = MatrixOperator;
    fn neg(self) -> MatrixOperator {
        self.scale(-ONE)
    }
}

/// Lowering operator on one mode, `a|n> = sqrt(n)|n-1>`.
fn lowering(dim: usize) -> CMatrix {
    let mut a = CMatrix::zeros(dim, dim);
    for n in 1..dim {
        a[(n - 1, n)] = Complex64::new((n as f64).sqrt(), 0.0);
    }
    a
}

fn single_q(ctx: &QuantizationContext) -> CMatrix {
    let a = lowering(ctx.dim);
    (&a + a.adjoint()) * Complex64::new(ctx.q_scale(), 0.0)
}

fn single_p(ctx: &QuantizationContext) -> CMatrix {
    let a = lowering(ctx.dim);
    (a.adjoint() - &a) * Complex64::new(0.0, ctx.p_scale())
}

/// `I x .. x op x .. x I` with `op` on mode `k`.
fn embed(ctx: &QuantizationContext, k: usize, op: &CMatrix) -> CMatrix {
    let before = linalg::identity(ctx.dim.pow(k as u32));
    let after = linalg::identity(ctx.dim.pow((ctx.modes - k - 1) as u32));
    linalg::kron(&linalg::kron(&before, op), &after)
}

/// `q_k = sqrt(hbar / 2 m~ w~) (a_k + a_k^dagger)`, zero-based `k`.
pub fn build_q(ctx: &QuantizationContext, k: usize) -> Result<MatrixOperator> {
    ctx.check_mode(k)?;
    MatrixOperator::new(*ctx, embed(ctx, k, &single_q(ctx)))
}

/// `p_k = i sqrt(hbar m~ w~ / 2) (a_k^dagger - a_k)`, zero-based `k`.
pub fn build_p(ctx: &QuantizationContext, k: usize) -> Result<MatrixOperator> {
    ctx.check_mode(k)?;
    MatrixOperator::new(*ctx, embed(ctx, k, &single_p(ctx)))
}

/// Symmetrized single-mode products `S(a, b)`: the average of all
/// arrangements of `a` factors `q` and `b` factors `p`.
pub(crate) struct McCoyTable {
    q: CMatrix,
    p: CMatrix,
    sums: HashMap<(u32, u32), CMatrix>,
}

impl McCoyTable {
    pub(crate) fn new(ctx: &QuantizationContext) -> Self {
        Self { q: single_q(ctx), p: single_p(ctx), sums: HashMap::new() }
    }

    /// Sum over all words; `T(a,b) = q T(a-1,b) + p T(a,b-1)`.
    fn word_sum(&mut self, a: u32, b: u32) -> CMatrix {
        if let Some(m) = self.sums.get(&(a, b)) {
            return m.clone();
        }
        let n = self.q.nrows();
        let m = if a == 0 && b == 0 {
            linalg::identity(n)
        } else {
            let mut acc = CMatrix::zeros(n, n);
            if a > 0 {
                acc += linalg::matmul(&self.q.clone(), &self.word_sum(a - 1, b));
            }
            if b > 0 {
                acc += linalg::matmul(&self.p.clone(), &self.word_sum(a, b - 1));
            }
            acc
        };
        self.sums.insert((a, b), m.clone());
        m
    }

    pub(crate) fn symmetrized(&mut self, a: u32, b: u32) -> CMatrix {
        self.word_sum(a, b) * Complex64::new(1.0 / linalg::binomial(a + b, a), 0.0)
    }
}

/// Weyl-ordered operator of a monomial on each mode, before the tensor
/// product.
fn mccoy_factors(tables: &mut [McCoyTable], index: &MultiIndex) -> Vec<CMatrix> {
    tables.iter_mut().enumerate().map(|(k, t)| t.symmetrized(index.q()[k], index.p()[k])).collect()
}

pub(crate) fn kron_all(factors: &[CMatrix]) -> CMatrix {
    let mut it = factors.iter();
    let first = it.next().expect("at least one mode").clone();
    it.fold(first, |acc, f| linalg::kron(&acc, f))
}

/// Weyl quantization of a monomial's exponents with unit coefficient.
pub fn weyl_monomial(ctx: &QuantizationContext, index: &MultiIndex) -> Result<MatrixOperator> {
    if index.modes() != ctx.modes {
        return Err(Error::ModeMismatch { left: index.modes(), right: ctx.modes });
    }
    let mut tables: Vec<McCoyTable> = (0..ctx.modes).map(|_| McCoyTable::new(ctx)).collect();
    MatrixOperator::new(*ctx, kron_all(&mccoy_factors(&mut tables, index)))
}

/// Weyl quantization of a polynomial symbol: every monomial becomes the
/// symmetrized average of all orderings of its `q` and `p` factors.
pub fn weyl_quantize(sym: &PolySymbol, ctx: &QuantizationContext) -> Result<MatrixOperator> {
    if sym.modes() != ctx.modes {
        return Err(Error::ModeMismatch { left: sym.modes(), right: ctx.modes });
    }
    let mut tables: Vec<McCoyTable> = (0..ctx.modes).map(|_| McCoyTable::new(ctx)).collect();
    let n = ctx.total_dim();
    let mut out = CMatrix::zeros(n, n);
    for (index, c) in sym.terms() {
        out += kron_all(&mccoy_factors(&mut tables, index)) * Complex64::new(c, 0.0);
    }
    MatrixOperator::new(*ctx, out)
}

/// Which factor kind [`weyl_quantize_peeled`] strips first.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PeelOrder {
    QFirst,
    PFirst,
}

/// Weyl quantization through `pi(q_k A) = q_k o pi(A)` and
/// `pi(p_k A) = p_k o pi(A)`, peeling factors in the given order.
///
/// The products are formed with `deg(sym)` extra levels per mode and then
/// cut back, so the matrix elements equal those of the untruncated operator.
pub fn weyl_quantize_peeled(sym: &PolySymbol, ctx: &QuantizationContext, order: PeelOrder) -> Result<MatrixOperator> {
    if sym.modes() != ctx.modes {
        return Err(Error::ModeMismatch { left: sym.modes(), right: ctx.modes });
    }
    let big = ctx.with_dim(ctx.dim + sym.degree() as usize)?;
    let qs: Vec<MatrixOperator> = (0..ctx.modes).map(|k| build_q(&big, k)).collect::<Result<_>>()?;
    let ps: Vec<MatrixOperator> = (0..ctx.modes).map(|k| build_p(&big, k)).collect::<Result<_>>()?;
    let mut out = MatrixOperator::zeros(&big);
    for (index, c) in sym.terms() {
        let mut peels: Vec<&MatrixOperator> = vec![];
        let q_peels = (0..ctx.modes).flat_map(|k| std::iter::repeat_n(&qs[k], index.q()[k] as usize));
        let p_peels = (0..ctx.modes).flat_map(|k| std::iter::repeat_n(&ps[k], index.p()[k] as usize));
        match order {
            PeelOrder::QFirst => peels.extend(q_peels.chain(p_peels)),
            PeelOrder::PFirst => peels.extend(p_peels.chain(q_peels)),
        }
        let mut acc = MatrixOperator::identity(&big);
        for x in peels.into_iter().rev() {
            acc = jordan(x, &acc)?;
        }
        out = &out + &(&acc * c);
    }
    out.truncate_to(ctx)
}

/// `exp((i/hbar)(a.q + b.p))`.
pub fn build_weyl_operator(params: &WeylBasisParams, ctx: &QuantizationContext) -> Result<MatrixOperator> {
    if params.a.len() != ctx.modes {
        return Err(Error::ModeMismatch { left: params.a.len(), right: ctx.modes });
    }
    let mut g = MatrixOperator::zeros(ctx);
    for k in 0..ctx.modes {
        g = &g + &(&build_q(ctx, k)? * params.a[k]);
        g = &g + &(&build_p(ctx, k)? * params.b[k]);
    }
    MatrixOperator::new(*ctx, linalg::expm_hermitian_phase(g.matrix(), 1.0 / ctx.hbar))
}

/// `AB - BA`.
pub fn commutator(a: &MatrixOperator, b: &MatrixOperator) -> Result<MatrixOperator> {
    Ok(&a.try_mul(b)? - &b.try_mul(a)?)
}

/// `(AB + BA) / 2`.
pub fn jordan(a: &MatrixOperator, b: &MatrixOperator) -> Result<MatrixOperator> {
    Ok(&(&a.try_mul(b)? + &b.try_mul(a)?) * 0.5)
}

/// `Tr(A^dagger B)`.
pub fn hs_inner(a: &MatrixOperator, b: &MatrixOperator) -> Result<Complex64> {
    a.same_ctx(b)?;
    Ok(a.m.iter().zip(b.m.iter()).map(|(x, y)| x.conj() * y).sum())
}

/// Largest accepted norm lost to truncation when building a coherent state.
pub const COHERENT_LOSS_TOLERANCE: f64 = 1e-6;

/// Product coherent state `|alpha><alpha|` centred on `(q0, p0)`,
/// renormalized after truncation.
pub fn coherent_state(ctx: &QuantizationContext, q0: &[f64], p0: &[f64]) -> Result<MatrixOperator> {
    if q0.len() != ctx.modes || p0.len() != ctx.modes {
        return Err(Error::ModeMismatch { left: q0.len().max(p0.len()), right: ctx.modes });
    }
    if q0.iter().chain(p0).any(|v| !v.is_finite()) {
        return Err(Error::InvalidArgument("non-finite coherent-state centre".into()));
    }
    let mut psi = CMatrix::from_element(1, 1, ONE);
    let mut kept = 1.0;
    for k in 0..ctx.modes {
        let alpha = Complex64::new(q0[k] / (2.0 * ctx.q_scale()), p0[k] / (2.0 * ctx.p_scale()));
        let mut c = Complex64::new((-alpha.norm_sqr() / 2.0).exp(), 0.0);
        let mut v = CMatrix::zeros(ctx.dim, 1);
        for n in 0..ctx.dim {
            if n > 0 {
                c = c * alpha / (n as f64).sqrt();
            }
            v[(n, 0)] = c;
        }
        kept *= v.iter().map(|z| z.norm_sqr()).sum::<f64>();
        psi = linalg::kron(&psi, &v);
    }
    let loss = 1.0 - kept;
    if loss > COHERENT_LOSS_TOLERANCE {
        return Err(Error::TruncationLoss { loss, tolerance: COHERENT_LOSS_TOLERANCE });
    }
    let psi = psi * Complex64::new(1.0 / kept.sqrt(), 0.0);
    MatrixOperator::new(*ctx, &psi * psi.adjoint())
}

/// `Re Tr(rho A)` for Hermitian `A`.
pub fn expectation(rho: &MatrixOperator, a: &MatrixOperator) -> Result<f64> {
    rho.same_ctx(a)?;
    let r = a.hermiticity_residual();
    if r > hermitian_tolerance(&a.m) {
        return Err(Error::NotHermitian(r));
    }
    let n = rho.m.nrows();
    let mut t = ZERO;
    for i in 0..n {
        for j in 0..n {
            t += rho.m[(i, j)] * a.m[(j, i)];
        }
    }
    debug_assert!(t.im.abs() <= 1e-10 * rho.max_abs().max(1.0) * a.max_abs().max(1.0) * n as f64);
    Ok(t.re)
}

/// Random Hermitian operator with entries of order one.
pub fn random_hermitian<R: Rng>(ctx: &QuantizationContext, rng: &mut R) -> MatrixOperator {
    let n = ctx.total_dim();
    let m = CMatrix::from_fn(n, n, |_, _| Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)));
    let h = (&m + m.adjoint()) * Complex64::new(0.5, 0.0);
    MatrixOperator { ctx: *ctx, m: h }
}

/// Random operator with complex entries of order one.
pub fn random_operator<R: Rng>(ctx: &QuantizationContext, rng: &mut R) -> MatrixOperator {
    let n = ctx.total_dim();
    let m = CMatrix::from_fn(n, n, |_, _| Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)));
    MatrixOperator { ctx: *ctx, m }
}

/// Random density operator `B B^dagger / Tr(B B^dagger)`.
pub fn random_density<R: Rng>(ctx: &QuantizationContext, rng: &mut R) -> MatrixOperator {
    let b = random_operator(ctx, rng);
    let m = linalg::matmul(&b.m, &b.m.adjoint());
    let t = linalg::trace(&m).re;
    MatrixOperator { ctx: *ctx, m: m * Complex64::new(1.0 / t, 0.0) }
}

/// `i hbar` times the identity, as the truncated CCR should produce.
pub fn ccr_target(ctx: &QuantizationContext) -> MatrixOperator {
    MatrixOperator::identity(ctx).scale(I * ctx.hbar)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn ctx(n: usize) -> QuantizationContext {
        QuantizationContext::new(1.0, n, 1).unwrap()
    }

    fn q() -> PolySymbol {
        PolySymbol::q(1, 0)
    }
    fn p() -> PolySymbol {
        PolySymbol::p(1, 0)
    }

    #[test]
    fn context_validation() {
        assert!(QuantizationContext::new(0.0, 4, 1).is_err());
        assert!(QuantizationContext::new(1.0, 1, 1).is_err());
        assert!(QuantizationContext::new(1.0, 4, 0).is_err());
        assert!(QuantizationContext::with_scale(1.0, 4, 1, -1.0, 1.0).is_err());
        let c = QuantizationContext::new(1.0, 16, 2).unwrap();
        assert_eq!(c.total_dim(), 256);
        assert_eq!(c.guard_band(), 2);
        assert_eq!(c.levels(17), vec![1, 1]);
        assert_eq!(c.interior_indices().len(), 14 * 14);
    }

    #[test]
    fn ccr_holds_except_at_the_top_level() {
        let c = QuantizationContext::new(0.7, 8, 1).unwrap();
        let comm = commutator(&build_q(&c, 0).unwrap(), &build_p(&c, 0).unwrap()).unwrap();
        for i in 0..8 {
            for j in 0..8 {
                let expected = if i == j && i < 7 {
                    I * 0.7
                } else if i == j {
                    I * 0.7 * (1.0 - 8.0)
                } else {
                    ZERO
                };
                assert!((comm.matrix()[(i, j)] - expected).norm() < 1e-14, "({i},{j})");
            }
        }
    }

    #[test]
    fn q_and_p_are_hermitian() {
        let c = ctx(12);
        assert!(build_q(&c, 0).unwrap().hermiticity_residual() <= 1e-14);
        assert!(build_p(&c, 0).unwrap().hermiticity_residual() <= 1e-14);
    }

    #[test]
    fn different_modes_commute() {
        let c = QuantizationContext::new(1.0, 5, 2).unwrap();
        let q1 = build_q(&c, 0).unwrap();
        let q2 = build_q(&c, 1).unwrap();
        let p2 = build_p(&c, 1).unwrap();
        assert_eq!(commutator(&q1, &q2).unwrap().max_abs(), 0.0);
        assert_eq!(commutator(&q1, &p2).unwrap().max_abs(), 0.0);
        assert!(build_q(&c, 2).is_err());
    }

    #[test]
    fn qp_quantizes_to_jordan_product() {
        let c = ctx(10);
        let w = weyl_quantize(&(&q() * &p()), &c).unwrap();
        let j = jordan(&build_q(&c, 0).unwrap(), &build_p(&c, 0).unwrap()).unwrap();
        assert!(w.max_abs_diff(&j).unwrap() < 1e-13);
    }

    #[test]
    fn constant_quantizes_to_identity() {
        let c = ctx(6);
        let w = weyl_quantize(&PolySymbol::constant(1, 1.0), &c).unwrap();
        assert_eq!(w, MatrixOperator::identity(&c));
    }

    #[test]
    fn q2p_is_the_three_term_average() {
        let c = ctx(9);
        let (qh, ph) = (build_q(&c, 0).unwrap(), build_p(&c, 0).unwrap());
        let oracle = &(&(&(&(&qh * &qh) * &ph) + &(&(&qh * &ph) * &qh)) + &(&(&ph * &qh) * &qh)) * (1.0 / 3.0);
        let w = weyl_quantize(&(&(&q() * &q()) * &p()), &c).unwrap();
        assert!(w.max_abs_diff(&oracle).unwrap() <= 1e-12);
    }

    #[test]
    fn peeling_orders_agree() {
        let c = ctx(8);
        let sym = &(&(&(&q() * &q()) * &p()) * &(&p() * &p())) + &(&q() * 2.0);
        let a = weyl_quantize_peeled(&sym, &c, PeelOrder::QFirst).unwrap();
        let b = weyl_quantize_peeled(&sym, &c, PeelOrder::PFirst).unwrap();
        let mccoy = weyl_quantize(&sym, &c).unwrap();
        assert!(a.max_abs_diff(&b).unwrap() <= 1e-12);
        // Truncation defects of the degree-5 McCoy products reach at most
        // three levels below the cut.
        for i in 0..5 {
            for j in 0..5 {
                assert!((a.matrix()[(i, j)] - mccoy.matrix()[(i, j)]).norm() <= 1e-12);
            }
        }
        assert!(a.max_abs_diff(&mccoy).unwrap() > 1e-3);
    }

    #[test]
    fn weyl_operator_at_origin_is_identity_and_unitary_elsewhere() {
        let c = ctx(20);
        let w0 = build_weyl_operator(&WeylBasisParams::new(vec![0.0], vec![0.0]).unwrap(), &c).unwrap();
        assert!(w0.max_abs_diff(&MatrixOperator::identity(&c)).unwrap() < 1e-14);
        let w = build_weyl_operator(&WeylBasisParams::new(vec![0.4], vec![-0.3]).unwrap(), &c).unwrap();
        let u = &w.dagger() * &w;
        assert!(u.max_abs_diff(&MatrixOperator::identity(&c)).unwrap() < 1e-10);
    }

    #[test]
    fn jordan_associator() {
        let c = ctx(6);
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let (a, b, d) =
            (random_hermitian(&c, &mut rng), random_hermitian(&c, &mut rng), random_hermitian(&c, &mut rng));
        let lhs = &jordan(&jordan(&a, &b).unwrap(), &d).unwrap() - &jordan(&a, &jordan(&b, &d).unwrap()).unwrap();
        let rhs = &commutator(&b, &commutator(&a, &d).unwrap()).unwrap() * 0.25;
        assert!(lhs.max_abs_diff(&rhs).unwrap() < 1e-12 * 8.0);
    }

    #[test]
    fn hs_inner_basics() {
        let c = ctx(7);
        let id = MatrixOperator::identity(&c);
        assert_eq!(hs_inner(&id, &id).unwrap(), Complex64::new(7.0, 0.0));
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let (a, b) = (random_operator(&c, &mut rng), random_operator(&c, &mut rng));
        assert!((hs_inner(&a, &b).unwrap() - hs_inner(&b, &a).unwrap().conj()).norm() < 1e-13);
    }

    #[test]
    fn hs_inner_of_q_and_p_vanishes() {
        // q is real symmetric and p imaginary antisymmetric, so Tr(q p) = 0.
        let c = ctx(11);
        let v = hs_inner(&build_q(&c, 0).unwrap(), &build_p(&c, 0).unwrap()).unwrap();
        assert!(v.norm() < 1e-14, "{v}");
    }

    #[test]
    fn ground_state_moments() {
        let c = QuantizationContext::with_scale(0.5, 12, 1, 2.0, 3.0).unwrap();
        let rho = coherent_state(&c, &[0.0], &[0.0]).unwrap();
        let mut g = MatrixOperator::zeros(&c);
        g.m[(0, 0)] = ONE;
        assert!(rho.max_abs_diff(&g).unwrap() < 1e-15);
        let q = build_q(&c, 0).unwrap();
        assert!(expectation(&rho, &MatrixOperator::identity(&c)).unwrap() - 1.0 < 1e-15);
        assert!(expectation(&rho, &q).unwrap().abs() < 1e-15);
        let q2 = expectation(&rho, &(&q * &q)).unwrap();
        assert!((q2 - 0.5 / (2.0 * 2.0 * 3.0)).abs() < 1e-14);
    }

    #[test]
    fn coherent_state_properties() {
        let c = ctx(40);
        let rho = coherent_state(&c, &[1.0], &[-0.5]).unwrap();
        assert!((rho.trace().re - 1.0).abs() < 1e-14);
        assert!(rho.hermiticity_residual() < 1e-15);
        assert!(linalg::hermitian_eigenvalues(rho.matrix())[0] >= -1e-12);
        assert!((expectation(&rho, &build_q(&c, 0).unwrap()).unwrap() - 1.0).abs() < 1e-6);
        assert!((expectation(&rho, &build_p(&c, 0).unwrap()).unwrap() + 0.5).abs() < 1e-6);
    }

    #[test]
    fn coherent_state_reports_truncation_loss() {
        let err = coherent_state(&ctx(6), &[4.0], &[0.0]).unwrap_err();
        assert!(matches!(err, Error::TruncationLoss { .. }));
        assert!(err.to_string().contains("increase dim"));
    }

    #[test]
    fn expectation_rejects_non_hermitian() {
        let c = ctx(4);
        let rho = coherent_state(&c, &[0.0], &[0.0]).unwrap();
        let mut a = MatrixOperator::zeros(&c);
        a.m[(0, 1)] = ONE;
        assert!(matches!(expectation(&rho, &a), Err(Error::NotHermitian(_))));
    }

    #[test]
    fn context_mismatch_is_reported() {
        let a = MatrixOperator::identity(&ctx(4));
        let b = MatrixOperator::identity(&QuantizationContext::new(2.0, 4, 1).unwrap());
        assert_eq!(commutator(&a, &b).unwrap_err(), Error::ContextMismatch);
    }

    #[test]
    fn csv_dump() {
        let c = ctx(2);
        let mut buf = Vec::new();
        build_p(&c, 0).unwrap().write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines.len(), 5);
        assert_eq!(lines[0], "i,j,re,im");
        assert!(lines[3].starts_with("1,0,0.0000000000000000e0,"));
    }

    /// `weyl({A, H})` against `(-i/hbar)[A, H]` on the low levels.
    fn bracket_gap(a: &PolySymbol, h: &PolySymbol, hbar: f64) -> f64 {
        let c = QuantizationContext::new(hbar, 32, 1).unwrap();
        let pb = weyl_quantize(&crate::symbol::poisson_bracket(a, h).unwrap(), &c).unwrap();
        let comm = commutator(&weyl_quantize(a, &c).unwrap(), &weyl_quantize(h, &c).unwrap())
            .unwrap()
            .scale(Complex64::new(0.0, -1.0 / hbar));
        let d = (&pb - &comm).into_matrix();
        d.view((0, 0), (16, 16)).iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    #[test]
    fn poisson_and_commutator_agree_for_quadratics() {
        let a = &(&q() * &p()) + &(&p() * &p());
        let h = &(&q() * &q()) * 0.5;
        assert!(bracket_gap(&a, &h, 0.3) <= 1e-12);
    }

    #[test]
    fn moyal_correction_scales_as_hbar_squared() {
        let cube = |x: PolySymbol| &(&x * &x) * &x;
        let hbars = [0.1, 0.05, 0.025];
        let gaps: Vec<f64> = hbars.iter().map(|&h| bracket_gap(&cube(p()), &cube(q()), h)).collect();
        for (g, h) in gaps.iter().zip(hbars) {
            assert!((g - 1.5 * h * h).abs() <= 1e-9, "{g} at hbar {h}");
        }
        let slope = (gaps[0] / gaps[2]).ln() / (hbars[0] / hbars[2]).ln();
        assert!((slope - 2.0).abs() <= 0.1, "{slope}");
        // The third-order correction needs a cubic on both sides.
        assert!(bracket_gap(&(&p() * &p()), &cube(q()), 0.1) <= 1e-10);
    }
}
