use prophet_core::corpus::{singleton_corpus, xos_fuzz_corpus};
use prophet_core::instance::{CappedSet, MatroidSpec};
use prophet_core::policy::simulate;
use prophet_core::xos::{parse_xos, prophet_stats, serialize_xos, singleton_from_scalar, xos_simulate, SharedItemModel};
use prophet_core::{solve_exante, PricePlan, XosInstanceF64, XosPlan, XosValuation};
use proptest::prelude::*;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(1000))]

    // the supporting prices of S never overprice a subset of S
    #[test]
    fn supporting_prices_underprice_subsets(
        clauses in prop::collection::vec(prop::collection::vec(0.0f64..10.0, 4), 1..4),
        s in 0u32..16,
        j in 0u32..16,
    ) {
        let v = XosValuation::new(clauses, 4).unwrap();
        let j = j & s;
        let prices = v.supporting_prices(s);
        let u: f64 = (0..4).filter(|i| j >> i & 1 == 1).map(|i| prices[i]).sum();
        prop_assert!(u <= v.value(j) + 1e-12);
        let full: f64 = (0..4).filter(|i| s >> i & 1 == 1).map(|i| prices[i]).sum();
        prop_assert!((full - v.value(s)).abs() <= 1e-12);
    }
}

#[test]
fn allocation_rows_sum_to_one() {
    for x in xos_fuzz_corpus::<f64>(5, 30).unwrap() {
        let stats = prophet_stats(&x).unwrap();
        for row in stats.x_star.iter().flatten() {
            assert!((row.iter().sum::<f64>() - 1.0).abs() <= 1e-12);
        }
        assert!((stats.opt_from_marginals(&x) - stats.opt).abs() <= 1e-9);
    }
}

#[test]
fn singleton_simulation_matches_scalar() {
    for inst in singleton_corpus(8, 6).unwrap() {
        let plan = PricePlan::new(&inst, &solve_exante(&inst).unwrap()).unwrap();
        let a = simulate(&plan, inst.valuations(), 20_000, 3, 2).unwrap();
        let x = singleton_from_scalar(&inst).unwrap();
        let b = xos_simulate(&x, &XosPlan::new(&x).unwrap(), 20_000, 3, 2).unwrap();
        let joint = 3.0 * (a.std.powi(2) / a.samples as f64 + b.std.powi(2) / b.samples as f64).sqrt();
        assert!((a.mean - b.mean).abs() <= joint + 1e-9, "{} vs {} in {}", a.mean, b.mean, inst.metadata());
    }
}

#[test]
fn round_trip_is_canonical() {
    for x in xos_fuzz_corpus::<f64>(9, 10).unwrap() {
        let text = serialize_xos(&x);
        let back: XosInstanceF64 = parse_xos(&text).unwrap();
        assert_eq!(back, x);
        assert_eq!(serialize_xos(&back), text);
    }
}

#[test]
fn clique_copies_respect_laminar_capacity() {
    let add = |w: Vec<f64>| vec![(1.0, XosValuation::additive(w))];
    let model = SharedItemModel {
        items: 3,
        access: vec![vec![0, 1], vec![1, 2], vec![0, 2]],
        dists: vec![add(vec![4.0, 1.0]), add(vec![3.0, 2.0]), add(vec![1.0, 5.0])],
        matroid: MatroidSpec::Laminar { sets: vec![CappedSet::new(vec![0, 1, 2], 2)] },
        edges: vec![],
    };
    let (x, origin) = model.to_xos().unwrap();
    assert_eq!(origin, vec![0, 1, 1, 2, 0, 2]);
    // best: item 1 to agent 1 (4) and item 3 to agent 3 (5)
    assert_eq!(prophet_stats(&x).unwrap().opt, 9.0);
}
