//! Weyl quantization of dynamical operators.
//!
//! Each monomial `c q^a p^b d^alpha` becomes a word in the atoms
//!
//! ```text
//! q_k -> Q1(k) = (q^l + q^r)/2        d/dq_k -> i P1(k) = (i/hbar)(p^l - p^r)
//! p_k -> Q2(k) = (p^l + p^r)/2        d/dp_k -> i P2(k) = -(i/hbar)(q^l - q^r)
//! ```
//!
//! and the word is ordered according to [`Ordering`].
//!
//! Every atom is `w_l y^l + w_r y^r` with `y` one of `q_k`, `p_k`. The
//! average over all orderings of such a word equals
//! `sum_S (prod_S w_l)(prod_!S w_r) W(S)^l W(!S)^r`, where `S` runs over the
//! atoms sent to the left and `W(S)` is the Weyl-symmetrized product of
//! their `y`. The identity only uses that left and right multiplications
//! commute, so it holds at any truncation and no permutation is ever
//! enumerated here. [`super::word`] provides the brute-force version.

use std::collections::HashMap;
use std::sync::Arc;

use num_complex::Complex64;

use super::factor::Factor;
use super::{SuperOperator, Term};
use crate::error::{Error, Result};
use crate::hilbert::{kron_all, McCoyTable, QuantizationContext};
use crate::linalg::{self, binomial, CMatrix};
use crate::symbol::{DynOpSymbol, MultiIndex, PolySymbol};

/// Longest atom word accepted by [`quantize_dynop_with`].
pub const WORD_CAP: usize = 8;

/// How the atoms of a quantized monomial are ordered.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Ordering {
    /// `Sym(Q atoms) o Sym(P atoms)`: multiplications act after derivatives,
    /// as the operator is written (`f(q, p) d^alpha`).
    #[default]
    Standard,
    /// The operator is first rewritten as `sum d^alpha o g_alpha(q, p)`,
    /// then quantized as `Sym(P atoms) o Sym(Q atoms)`.
    AntiStandard,
    /// All atoms of a monomial symmetrized together.
    Symmetric,
}

/// `(q count, p count)` of a single-mode Weyl-symmetrized product.
type Mono = (u32, u32);

/// Per mode, an ordered product of symmetrized single-mode monomials.
type FactorKey = Vec<Vec<Mono>>;

#[derive(Clone, Copy)]
enum Var {
    Q,
    P,
}

/// `count` identical atoms `w_l y^l + w_r y^r` on one mode.
#[derive(Clone, Copy)]
struct AtomGroup {
    var: Var,
    count: u32,
    wl: f64,
    wr: f64,
}

/// Splits of a mode's atom groups into left and right parts.
fn expand_mode(groups: &[AtomGroup]) -> Vec<(Mono, Mono, f64)> {
    let mut out = vec![((0, 0), (0, 0), 1.0)];
    for g in groups {
        let mut next = vec![];
        for &(left, right, w) in &out {
            for j in 0..=g.count {
                let weight = w * binomial(g.count, j) * g.wl.powi(j as i32) * g.wr.powi((g.count - j) as i32);
                let (dl, dr) = match g.var {
                    Var::Q => ((j, 0), (g.count - j, 0)),
                    Var::P => ((0, j), (0, g.count - j)),
                };
                next.push(((left.0 + dl.0, left.1 + dl.1), (right.0 + dr.0, right.1 + dr.1), weight));
            }
        }
        out = next;
    }
    out
}

/// Atom groups of the multiplicative part `q^a p^b` on mode `k`.
fn q_groups(mono: &MultiIndex, k: usize) -> Vec<AtomGroup> {
    vec![
        AtomGroup { var: Var::Q, count: mono.q()[k], wl: 0.5, wr: 0.5 },
        AtomGroup { var: Var::P, count: mono.p()[k], wl: 0.5, wr: 0.5 },
    ]
}

/// Atom groups of the derivative part on mode `k`, without the factors `i`.
fn p_groups(deriv: &MultiIndex, k: usize, hbar: f64) -> Vec<AtomGroup> {
    vec![
        AtomGroup { var: Var::P, count: deriv.q()[k], wl: 1.0 / hbar, wr: -1.0 / hbar },
        AtomGroup { var: Var::Q, count: deriv.p()[k], wl: -1.0 / hbar, wr: 1.0 / hbar },
    ]
}

/// Accumulates the quantized monomial `c mono d^deriv` into `acc`.
fn add_word(
    acc: &mut HashMap<(FactorKey, FactorKey), Complex64>,
    c: f64,
    mono: &MultiIndex,
    deriv: &MultiIndex,
    ordering: Ordering,
    hbar: f64,
) {
    let modes = mono.modes();
    let i_pow = Complex64::new(0.0, 1.0).powu(deriv.degree());
    // Per mode: list of (left sequence, right sequence, weight).
    let per_mode: Vec<Vec<(Vec<Mono>, Vec<Mono>, f64)>> = (0..modes)
        .map(|k| {
            let qs = q_groups(mono, k);
            let ps = p_groups(deriv, k, hbar);
            match ordering {
                Ordering::Symmetric => {
                    let all: Vec<AtomGroup> = qs.into_iter().chain(ps).collect();
                    expand_mode(&all).into_iter().map(|(l, r, w)| (vec![l], vec![r], w)).collect()
                }
                Ordering::Standard | Ordering::AntiStandard => {
                    let eq = expand_mode(&qs);
                    let ep = expand_mode(&ps);
                    let mut v = vec![];
                    for &(ql, qr, wq) in &eq {
                        for &(pl, pr, wp) in &ep {
                            let (l, r) = if ordering == Ordering::Standard {
                                (vec![ql, pl], vec![pr, qr])
                            } else {
                                (vec![pl, ql], vec![qr, pr])
                            };
                            v.push((l, r, wq * wp));
                        }
                    }
                    v
                }
            }
        })
        .collect();
    let mut combos: Vec<(FactorKey, FactorKey, f64)> = vec![(vec![], vec![], 1.0)];
    for mode in per_mode {
        let mut next = Vec::with_capacity(combos.len() * mode.len());
        for (lk, rk, w) in &combos {
            for (l, r, wm) in &mode {
                if *wm == 0.0 {
                    continue;
                }
                let mut lk = lk.clone();
                let mut rk = rk.clone();
                lk.push(normalize(l));
                rk.push(normalize(r));
                next.push((lk, rk, w * wm));
            }
        }
        combos = next;
    }
    for (lk, rk, w) in combos {
        *acc.entry((lk, rk)).or_default() += i_pow * (c * w);
    }
}

fn normalize(seq: &[Mono]) -> Vec<Mono> {
    seq.iter().copied().filter(|m| *m != (0, 0)).collect()
}

fn key_label(key: &FactorKey) -> String {
    let mut parts = vec![];
    for (k, seq) in key.iter().enumerate() {
        for &(a, b) in seq {
            let mut s = String::new();
            if a > 0 {
                s.push_str(&format!("q{}", k + 1));
                if a > 1 {
                    s.push_str(&format!("^{a}"));
                }
            }
            if b > 0 {
                if !s.is_empty() {
                    s.push('*');
                }
                s.push_str(&format!("p{}", k + 1));
                if b > 1 {
                    s.push_str(&format!("^{b}"));
                }
            }
            parts.push(format!("W({s})"));
        }
    }
    if parts.is_empty() {
        "I".into()
    } else {
        parts.join(".")
    }
}

struct FactorCache {
    tables: Vec<McCoyTable>,
    factors: HashMap<FactorKey, Arc<Factor>>,
}

impl FactorCache {
    fn new(ctx: &QuantizationContext) -> Self {
        Self { tables: (0..ctx.modes()).map(|_| McCoyTable::new(ctx)).collect(), factors: HashMap::new() }
    }

    fn get(&mut self, key: &FactorKey) -> Arc<Factor> {
        if let Some(f) = self.factors.get(key) {
            return f.clone();
        }
        let per_mode: Vec<CMatrix> = key
            .iter()
            .zip(self.tables.iter_mut())
            .map(|(seq, table)| {
                let n = table.symmetrized(0, 0).nrows();
                seq.iter().fold(linalg::identity(n), |acc, &(a, b)| {
                    if acc == linalg::identity(n) {
                        table.symmetrized(a, b)
                    } else {
                        linalg::matmul(&acc, &table.symmetrized(a, b))
                    }
                })
            })
            .collect();
        let f = Arc::new(Factor::new(key_label(key), kron_all(&per_mode)));
        self.factors.insert(key.clone(), f.clone());
        f
    }
}

/// Quantization with the default [`Ordering::Standard`].
pub fn quantize_dynop(l: &DynOpSymbol, ctx: &QuantizationContext) -> Result<SuperOperator> {
    quantize_dynop_with(l, ctx, Ordering::Standard)
}

/// Substitutes the atoms into every monomial of `l` and orders each word
/// by `ordering`.
pub fn quantize_dynop_with(l: &DynOpSymbol, ctx: &QuantizationContext, ordering: Ordering) -> Result<SuperOperator> {
    if l.modes() != ctx.modes() {
        return Err(Error::ModeMismatch { left: l.modes(), right: ctx.modes() });
    }
    let terms: Vec<(MultiIndex, PolySymbol)> = match ordering {
        Ordering::AntiStandard => l.anti_standard_terms().into_iter().collect(),
        _ => l.terms().map(|(d, c)| (d.clone(), c.clone())).collect(),
    };
    let mut acc: HashMap<(FactorKey, FactorKey), Complex64> = HashMap::new();
    for (deriv, coeff) in &terms {
        for (mono, c) in coeff.terms() {
            let len = (mono.degree() + deriv.degree()) as usize;
            if len > WORD_CAP {
                return Err(Error::WordTooLong { len, cap: WORD_CAP });
            }
            add_word(&mut acc, c, mono, deriv, ordering, ctx.hbar());
        }
    }
    let mut entries: Vec<((FactorKey, FactorKey), Complex64)> = acc.into_iter().collect();
    entries.sort_by(|a, b| a.0.cmp(&b.0));
    let mut cache = FactorCache::new(ctx);
    let mut out = vec![];
    for ((lk, rk), c) in entries {
        if c.norm() == 0.0 {
            continue;
        }
        out.push(Term { coeff: c, left: cache.get(&lk), right: cache.get(&rk) });
    }
    SuperOperator::from_terms(ctx, out)
}
