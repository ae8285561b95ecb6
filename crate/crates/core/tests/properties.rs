use proptest::prelude::*;

use seqlab::density::{f_density, natural_density};
use seqlab::matrix::{apply_row, transform_prefix, SummabilityMatrix};
use seqlab::membership::{
    block_residuals, exceedance_ratios, fstat_membership_block, pointwise_scores, w_membership, SpaceParams, Verdict,
};
use seqlab::modulus::{builtin_unbounded, Modulus};
use seqlab::orlicz::{
    luxemburg_norm, make_orlicz_family, modular, ntheta_norm, orlicz_norm, OrliczFamily, OrliczFn,
};
use seqlab::sequence::{IndexSet, LacunaryScheme, SequencePrefix};
use seqlab::witnesses::{
    cauchy_limit_construction, converge_off_witness, extract_witness_set, gen_thm36_instance, gen_thm37_instance,
};

fn index_set() -> impl Strategy<Value = IndexSet> {
    prop_oneof![
        Just(IndexSet::evens()),
        Just(IndexSet::odds()),
        Just(IndexSet::squares()),
        Just(IndexSet::all()),
        (1usize..50, 1usize..20).prop_map(|(a, d)| IndexSet::arith(a, d).unwrap()),
        proptest::collection::btree_set(1usize..5000, 0..200)
            .prop_map(|s| IndexSet::from_list(s.into_iter().collect()).unwrap()),
    ]
}

fn prefix(len: impl Into<proptest::collection::SizeRange>) -> impl Strategy<Value = SequencePrefix> {
    proptest::collection::vec(-50.0f64..50.0, len).prop_map(|v| SequencePrefix::new(v, "p").unwrap())
}

fn nonzero_prefix() -> impl Strategy<Value = SequencePrefix> {
    prefix(1..40).prop_filter("nonzero", |x| x.values().iter().any(|&v| v != 0.0))
}

fn scheme() -> impl Strategy<Value = LacunaryScheme> {
    prop_oneof![
        (6usize..11).prop_map(|r| LacunaryScheme::powers2(r).unwrap()),
        (1.3f64..3.0, 6usize..11).prop_map(|(q, r)| LacunaryScheme::geometric(q, r).unwrap()),
        proptest::collection::btree_set(1usize..2000, 6..12)
            .prop_map(|s| LacunaryScheme::from_cuts(&s.into_iter().collect::<Vec<_>>()).unwrap()),
    ]
}

fn uniform_family() -> impl Strategy<Value = OrliczFamily> {
    prop_oneof![
        Just(make_orlicz_family("linear").unwrap()),
        Just(make_orlicz_family("explog").unwrap()),
        (1.0f64..4.0).prop_map(|p| OrliczFamily::uniform(OrliczFn::poly(p).unwrap())),
    ]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn counts_partition_prefix(set in index_set(), n in 1usize..5000) {
        prop_assert_eq!(set.count(n) + set.count_complement(n), n);
    }

    #[test]
    fn block_lengths_sum_to_last_cut(s in scheme()) {
        prop_assert_eq!(s.lengths().iter().sum::<usize>(), s.end());
    }

    #[test]
    fn block_of_inverts_enumeration(s in scheme()) {
        for r in 1..=s.blocks() {
            for i in s.block(r) {
                prop_assert_eq!(s.block_of(i).unwrap(), r);
            }
        }
    }

    #[test]
    fn builtin_moduli_subadditive_and_monotone(x in 0.0f64..1e6, y in 0.0f64..1e6) {
        for f in builtin_unbounded() {
            let rhs = f.eval(x) + f.eval(y);
            prop_assert!(f.eval(x + y) <= rhs + 1e-12 * (1.0 + rhs), "{} at ({x}, {y})", f.name());
            let (lo, hi) = if x <= y { (x, y) } else { (y, x) };
            prop_assert!(f.eval(lo) <= f.eval(hi) + 1e-12);
        }
        prop_assert!(Modulus::bounded().eval(x) <= 1.0);
    }

    #[test]
    fn identity_f_density_matches_natural(set in index_set(), n in 100usize..20_000) {
        let fd = f_density(&set, &Modulus::identity(), n, 1e-2).unwrap();
        let nd = natural_density(&set, n, 1e-2).unwrap();
        prop_assert_eq!(fd.ratios, nd.ratios);
    }

    #[test]
    fn f_of_prefix_counts_is_monotone(set in index_set(), n in 2usize..3000) {
        let counts = set.prefix_counts(n);
        for f in builtin_unbounded() {
            prop_assert!(counts.windows(2).all(|w| f.eval(w[0] as f64) <= f.eval(w[1] as f64)));
        }
    }

    #[test]
    fn row_transform_is_linear(
        x in prefix(64),
        y in prefix(64),
        a in -3.0f64..3.0,
        b in -3.0f64..3.0,
        i in 1usize..=64,
        weights in proptest::collection::vec(0.1f64..5.0, 64),
    ) {
        let combo = SequencePrefix::new(
            x.values().iter().zip(y.values()).map(|(u, v)| a * u + b * v).collect(),
            "combo",
        ).unwrap();
        for m in [SummabilityMatrix::identity(), SummabilityMatrix::cesaro(), SummabilityMatrix::riesz(weights.clone()).unwrap()] {
            let lhs = apply_row(&m, &combo, i).unwrap();
            let rhs = a * apply_row(&m, &x, i).unwrap() + b * apply_row(&m, &y, i).unwrap();
            let scale = 1.0 + lhs.abs().max(rhs.abs()) + x.sup_abs().max(y.sup_abs()) * (a.abs() + b.abs());
            prop_assert!((lhs - rhs).abs() <= 1e-9 * scale, "{}: {lhs} vs {rhs}", m.label());
        }
    }

    #[test]
    fn identity_transform_is_exact(x in prefix(1..200)) {
        let t = transform_prefix(&SummabilityMatrix::identity(), &x, x.len()).unwrap();
        prop_assert_eq!(t.values(), x.values());
    }

    #[test]
    fn cesaro_tracks_convergent_prefix(l in -10.0f64..10.0, n in 10usize..3000) {
        let x = SequencePrefix::from_fn(n, "l+1/k", |k| l + 1.0 / k as f64).unwrap();
        let t = transform_prefix(&SummabilityMatrix::cesaro(), &x, n).unwrap();
        for (k, &v) in t.values().iter().enumerate() {
            let i = (k + 1) as f64;
            prop_assert!((v - l).abs() <= (1.0 + i.ln()) / i + 1e-12);
        }
    }

    #[test]
    fn modular_decreases_in_norm_parameter(fam in uniform_family(), x in nonzero_prefix(), k1 in 0.5f64..10.0, dk in 0.01f64..10.0) {
        let at = |k: f64| modular(&fam, &SequencePrefix::new(x.values().iter().map(|v| v / k).collect(), "x/k").unwrap());
        match (at(k1), at(k1 + dk)) {
            (Ok(a), Ok(b)) => prop_assert!(a >= b),
            // overflow at the smaller k only
            (Err(_), _) => {}
            (Ok(_), Err(e)) => prop_assert!(false, "overflow at larger k: {e}"),
        }
    }

    #[test]
    fn luxemburg_bracket_and_ordering(x in nonzero_prefix(), p in 1.0f64..4.0) {
        let fam = OrliczFamily::uniform(OrliczFn::poly(p).unwrap());
        let tol = 1e-9;
        let lux = luxemburg_norm(&fam, &x, tol).unwrap();
        let scaled = SequencePrefix::new(
            x.values().iter().map(|v| v / (lux.value * (1.0 + 10.0 * tol))).collect(),
            "scaled",
        ).unwrap();
        prop_assert!(modular(&fam, &scaled).unwrap() <= 1.0);
        let orl = orlicz_norm(&fam, &x, tol).unwrap();
        prop_assert!(lux.value <= orl.value + tol * (1.0 + orl.value), "{} > {}", lux.value, orl.value);
    }

    #[test]
    fn luxemburg_is_homogeneous(x in nonzero_prefix(), a in -20.0f64..20.0, p in 1.0f64..3.0) {
        prop_assume!(a.abs() > 1e-3);
        let fam = OrliczFamily::uniform(OrliczFn::poly(p).unwrap());
        let tol = 1e-10;
        let base = luxemburg_norm(&fam, &x, tol).unwrap().value;
        let ax = SequencePrefix::new(x.values().iter().map(|v| a * v).collect(), "ax").unwrap();
        let scaled = luxemburg_norm(&fam, &ax, tol).unwrap().value;
        prop_assert!((scaled - a.abs() * base).abs() <= 10.0 * tol * (1.0 + scaled));
    }

    #[test]
    fn ntheta_vanishes_only_at_zero(s in scheme(), mask in proptest::collection::vec(any::<bool>(), 2048)) {
        let x = SequencePrefix::from_fn(s.end(), "mask", |i| if mask[i % mask.len()] { 1.0 } else { 0.0 }).unwrap();
        let any_on = x.values().iter().any(|&v| v != 0.0);
        prop_assert_eq!(ntheta_norm(&x, &s).unwrap() == 0.0, !any_on);
    }

    #[test]
    fn residuals_dominate_eps_times_ratios(x in prefix(256), fam in uniform_family(), eps in 0.01f64..5.0, l in -5.0f64..5.0) {
        let p = SpaceParams { eps, limit: l, family: fam, ..SpaceParams::new(LacunaryScheme::powers2(8).unwrap(), make_orlicz_family("linear").unwrap()) };
        let t = match block_residuals(&x, &p) {
            Ok(t) => t,
            Err(_) => return Ok(()), // explog overflow on large deviations
        };
        let c = exceedance_ratios(&x, &p).unwrap();
        for (tr, cr) in t.iter().zip(&c) {
            prop_assert!(*tr >= eps * cr * (1.0 - 1e-12));
        }
    }

    #[test]
    fn exceedance_ratios_monotone_in_eps(x in prefix(256), e1 in 0.01f64..5.0, de in 0.0f64..5.0) {
        let base = SpaceParams::new(LacunaryScheme::powers2(8).unwrap(), make_orlicz_family("poly:2").unwrap());
        let c1 = exceedance_ratios(&x, &SpaceParams { eps: e1, ..base.clone() }).unwrap();
        let c2 = exceedance_ratios(&x, &SpaceParams { eps: e1 + de, ..base }).unwrap();
        prop_assert!(c1.iter().zip(&c2).all(|(a, b)| a >= b));
    }

    #[test]
    fn ratio_bounded_by_counting(x in prefix(256), alpha in 0.1f64..=1.0) {
        let p = SpaceParams { alpha, ..SpaceParams::new(LacunaryScheme::powers2(8).unwrap(), make_orlicz_family("linear").unwrap()) };
        let c = exceedance_ratios(&x, &p).unwrap();
        let t = block_residuals(&x, &p).unwrap();
        for r in 1..=8 {
            let h = p.scheme.h(r) as f64;
            prop_assert!(c[r - 1] >= 0.0 && c[r - 1] <= h.powf(1.0 - alpha) * (1.0 + 1e-12));
            prop_assert!(t[r - 1] >= 0.0);
        }
    }

    #[test]
    fn verdicts_ignore_terms_past_last_cut(x in prefix(300), extra in prefix(1..100)) {
        let p = SpaceParams::new(LacunaryScheme::powers2(8).unwrap(), make_orlicz_family("poly:2").unwrap());
        let mut longer = x.values().to_vec();
        longer.extend_from_slice(extra.values());
        let y = SequencePrefix::new(longer, "y").unwrap();
        prop_assert_eq!(w_membership(&x, &p, 0.01).unwrap(), w_membership(&y, &p, 0.01).unwrap());
        prop_assert_eq!(fstat_membership_block(&x, &p, 0.01).unwrap(), fstat_membership_block(&y, &p, 0.01).unwrap());
    }

    #[test]
    fn linear_scores_reduce_to_deviation(x in prefix(1..500), l in -50.0f64..50.0) {
        let p = SpaceParams::new(LacunaryScheme::powers2(6).unwrap(), make_orlicz_family("linear").unwrap()).with_limit(l);
        let s = pointwise_scores(&x, &p).unwrap();
        for (si, xi) in s.values().iter().zip(x.values()) {
            prop_assert_eq!(si.to_bits(), (xi - l).abs().to_bits());
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn thm36_instances_split_the_spaces(nu in 0.05f64..4.0, rho in 0.5f64..2.0, blocks in 8usize..=12) {
        let g = gen_thm36_instance(nu, rho, blocks).unwrap();
        prop_assert_eq!(w_membership(&g.sequence, &g.params, 1e-2).unwrap().verdict, Verdict::Member);
        prop_assert_eq!(fstat_membership_block(&g.sequence, &g.params, 1e-2).unwrap().verdict, Verdict::NonMember);
    }

    #[test]
    fn thm37_instances_split_the_spaces(p in 1.0f64..3.0, rho in 0.5f64..2.0, blocks in 10usize..=13) {
        let scheme = LacunaryScheme::powers2(blocks).unwrap();
        let g = gen_thm37_instance(&OrliczFn::poly(p).unwrap(), &scheme, rho, 1.0).unwrap();
        prop_assert_eq!(fstat_membership_block(&g.sequence, &g.params, 1e-2).unwrap().verdict, Verdict::Member);
        prop_assert_eq!(w_membership(&g.sequence, &g.params, 1e-2).unwrap().verdict, Verdict::NonMember);
    }

    #[test]
    fn witness_round_trip(a in 1usize..30, d in 3usize..40, base in -5.0f64..5.0, delta in 0.5f64..3.0, sparse in any::<bool>()) {
        let n = 20_000;
        let set = if sparse { IndexSet::squares() } else { IndexSet::arith(a, d * d).unwrap() };
        let x = SequencePrefix::from_fn(n, "spikes", |i| if set.contains(i) { base + delta } else { base }).unwrap();
        let p = SpaceParams::new(LacunaryScheme::powers2(10).unwrap(), make_orlicz_family("linear").unwrap()).with_limit(base);
        let depth = 4;
        if let Ok(w) = extract_witness_set(&x, &p, &Modulus::identity(), depth, 1e-2) {
            let off = converge_off_witness(&x, &p, &w.set, 1.0 / depth as f64).unwrap();
            prop_assert!(off.passed, "{off:?}");
            prop_assert!(w.thresholds.windows(2).all(|t| t[0] < t[1]));
        }
    }

    #[test]
    fn cauchy_width_bounded(l in -5.0f64..5.0, k in 1usize..12) {
        let x = SequencePrefix::from_fn(5000, "l+1/i", |i| l + 1.0 / i as f64).unwrap();
        let p = SpaceParams::new(LacunaryScheme::powers2(6).unwrap(), make_orlicz_family("linear").unwrap());
        let c = cauchy_limit_construction(&x, &p, &Modulus::identity(), k, 1e-2).unwrap();
        prop_assert!(c.width <= 2.0 / k as f64 + 1e-12);
        prop_assert!((c.limit - l).abs() <= 2.0 / k as f64);
    }
}
