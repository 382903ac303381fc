use num_complex::Complex64;
use proptest::prelude::*;
use superquant::hilbert::{weyl_quantize, weyl_quantize_peeled, MatrixOperator, PeelOrder, QuantizationContext};
use superquant::superop::{quantize_dynop, quantize_dynop_with, Ordering, Region, SuperOpWord};
use superquant::symbol::{poisson_bracket, DynOpSymbol, MultiIndex, PolySymbol};

/// Two-mode polynomial of total degree at most `max_degree` with small
/// integer coefficients, so that symbolic identities hold exactly.
fn poly(max_degree: u32) -> impl Strategy<Value = PolySymbol> {
    prop::collection::vec(((0u32..=2, 0u32..=2, 0u32..=2, 0u32..=2), -3i32..=3), 0..5).prop_map(move |terms| {
        let kept = terms
            .into_iter()
            .filter(|((a, b, c, d), _)| a + b + c + d <= max_degree)
            .map(|((a, b, c, d), k)| (MultiIndex::new(vec![a, c], vec![b, d]).unwrap(), k as f64));
        PolySymbol::from_terms(2, kept).unwrap()
    })
}

fn single_mode_poly(max_degree: u32) -> impl Strategy<Value = PolySymbol> {
    prop::collection::vec(((0u32..=4, 0u32..=4), -3i32..=3), 1..5).prop_map(move |terms| {
        let kept = terms
            .into_iter()
            .filter(|((a, b), _)| a + b <= max_degree)
            .map(|((a, b), k)| (MultiIndex::new(vec![a], vec![b]).unwrap(), k as f64));
        PolySymbol::from_terms(1, kept).unwrap()
    })
}

fn pb(a: &PolySymbol, b: &PolySymbol) -> PolySymbol {
    poisson_bracket(a, b).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn poisson_bracket_is_bilinear(a in poly(4), b in poly(4), c in poly(4), k in -3i32..=3) {
        let k = k as f64;
        prop_assert_eq!(pb(&(&a + &(&b * k)), &c), &pb(&a, &c) + &(&pb(&b, &c) * k));
        prop_assert_eq!(pb(&c, &(&a + &(&b * k))), &pb(&c, &a) + &(&pb(&c, &b) * k));
    }

    #[test]
    fn poisson_bracket_is_antisymmetric(a in poly(4), b in poly(4)) {
        prop_assert_eq!(pb(&a, &b), -&pb(&b, &a));
    }

    #[test]
    fn jacobi_identity(a in poly(3), b in poly(3), c in poly(3)) {
        let s = &(&pb(&a, &pb(&b, &c)) + &pb(&b, &pb(&c, &a))) + &pb(&c, &pb(&a, &b));
        prop_assert!(s.is_zero(), "{s:?}");
    }

    #[test]
    fn leibniz_rule(a in poly(4), b in poly(4), c in poly(4)) {
        prop_assert_eq!(pb(&(&a * &b), &c), &(&a * &pb(&b, &c)) + &(&pb(&a, &c) * &b));
    }

    #[test]
    fn dynop_apply_is_linear(f in poly(2), g in poly(2), a in poly(3), b in poly(3), k in -3i32..=3) {
        let k = k as f64;
        let l1 = DynOpSymbol::from_term(f, MultiIndex::new(vec![1, 0], vec![0, 1]).unwrap()).unwrap();
        let l2 = DynOpSymbol::from_term(g, MultiIndex::unit_p(2, 0)).unwrap();
        let sum = l1.try_add(&l2.scale(k)).unwrap();
        prop_assert_eq!(sum.apply(&a).unwrap(), &l1.apply(&a).unwrap() + &(&l2.apply(&a).unwrap() * k));
        let ab = &a + &(&b * k);
        prop_assert_eq!(l1.apply(&ab).unwrap(), &l1.apply(&a).unwrap() + &(&l1.apply(&b).unwrap() * k));
    }

    #[test]
    fn hamiltonian_vector_field(h in poly(4), pts in prop::collection::vec(-2.0f64..2.0, 4)) {
        let l = DynOpSymbol::from_hamiltonian(&h);
        prop_assume!(l.is_derivation());
        let field = l.vector_field().unwrap();
        let (q, p) = (&pts[..2], &pts[2..]);
        let (dq, dp) = field.eval(q, p);
        for k in 0..2 {
            let want_q = h.d_dp(k).eval(q, p);
            let want_p = -h.d_dq(k).eval(q, p);
            prop_assert!((dq[k] - want_q).abs() <= 1e-12 * want_q.abs().max(1.0));
            prop_assert!((dp[k] - want_p).abs() <= 1e-12 * want_p.abs().max(1.0));
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn peeling_order_does_not_matter(a in single_mode_poly(5), hbar in 0.2f64..2.0) {
        let ctx = QuantizationContext::new(hbar, 10, 1).unwrap();
        let x = weyl_quantize_peeled(&a, &ctx, PeelOrder::QFirst).unwrap();
        let y = weyl_quantize_peeled(&a, &ctx, PeelOrder::PFirst).unwrap();
        prop_assert!(x.max_abs_diff(&y).unwrap() <= 1e-10 * x.max_abs().max(1.0));
    }

    #[test]
    fn multiplication_operators_reduce_to_weyl(a in poly(4), hbar in 0.2f64..2.0) {
        let ctx = QuantizationContext::new(hbar, 4, 2).unwrap();
        let w = weyl_quantize(&a, &ctx).unwrap();
        let via = quantize_dynop(&DynOpSymbol::multiplication(&a), &ctx)
            .unwrap()
            .apply(&MatrixOperator::identity(&ctx))
            .unwrap();
        prop_assert!(via.max_abs_diff(&w).unwrap() <= 1e-12 * w.max_abs().max(1.0));
    }

    /// The closed-form subset sum against explicit averaging over every
    /// distinct arrangement of the atoms.
    #[test]
    fn ordering_matches_brute_force_symmetrization(
        (qa, pa, qb, pb_) in (0u32..=2, 0u32..=2, 0u32..=1, 0u32..=1),
        (da, db) in (0u32..=2, 0u32..=1),
        c in -3i32..=3,
    ) {
        prop_assume!(c != 0);
        prop_assume!(qa + pa + qb + pb_ + da + db <= 5);
        let ctx = QuantizationContext::new(0.7, 3, 2).unwrap();
        let mono = MultiIndex::new(vec![qa, qb], vec![pa, pb_]).unwrap();
        let deriv = MultiIndex::new(vec![da, 0], vec![0, db]).unwrap();
        let l = DynOpSymbol::from_term(PolySymbol::monomial(mono.clone(), c as f64), deriv.clone()).unwrap();
        let word = SuperOpWord::from_monomial(c as f64, &mono, &deriv);

        let sym = quantize_dynop_with(&l, &ctx, Ordering::Symmetric).unwrap();
        let oracle = word.symmetrized(&ctx).unwrap();
        let scale = oracle.max_abs().unwrap().max(1.0);
        prop_assert!(sym.max_abs_diff(&oracle, Region::Full).unwrap() <= 1e-10 * scale);

        let (qw, pw) = word.split();
        let oracle = qw.symmetrized(&ctx).unwrap().compose(&pw.symmetrized(&ctx).unwrap()).unwrap();
        let std = quantize_dynop_with(&l, &ctx, Ordering::Standard).unwrap();
        let scale = oracle.max_abs().unwrap().max(1.0);
        prop_assert!(std.max_abs_diff(&oracle, Region::Full).unwrap() <= 1e-10 * scale);
    }

    #[test]
    fn quantization_is_linear(a in poly(2), b in poly(2), k in -3i32..=3) {
        let ctx = QuantizationContext::new(1.0, 3, 2).unwrap();
        let d = MultiIndex::new(vec![1, 0], vec![0, 1]).unwrap();
        let la = DynOpSymbol::from_term(a, d.clone()).unwrap();
        let lb = DynOpSymbol::from_term(b, MultiIndex::unit_q(2, 1)).unwrap();
        let k = k as f64;
        let sum = quantize_dynop(&la.try_add(&lb.scale(k)).unwrap(), &ctx).unwrap();
        let parts = quantize_dynop(&la, &ctx)
            .unwrap()
            .try_add(&quantize_dynop(&lb, &ctx).unwrap().scale(Complex64::new(k, 0.0)))
            .unwrap();
        prop_assert!(sum.max_abs_diff(&parts, Region::Full).unwrap() <= 1e-10 * parts.max_abs().unwrap().max(1.0));
    }
}
