use proptest::prelude::*;

use secretary_core::offline_opt::{opt_general, opt_general_with_budget, opt_matching, opt_split};
use secretary_core::{BundleValuation, Error, ItemSet};

fn xos_oracles(n: usize, m: usize) -> impl Strategy<Value = Vec<BundleValuation>> {
    prop::collection::vec(
        prop::collection::vec(prop::collection::vec(0u8..5, m), 1..3).prop_map(|cs| {
            BundleValuation::Xos {
                clauses: cs
                    .into_iter()
                    .map(|c| c.into_iter().map(f64::from).collect())
                    .collect(),
            }
        }),
        n,
    )
}

/// Exhaustive search over item-to-agent-or-nobody assignments.
fn brute_force(oracles: &[BundleValuation], items: &[usize]) -> f64 {
    use secretary_core::WeightOracle;
    let n = oracles.len();
    let mut best = 0.0f64;
    for code in 0..(n + 1).pow(items.len() as u32) {
        let mut bundles = vec![ItemSet::new(); n];
        let mut c = code;
        for &j in items {
            let owner = c % (n + 1);
            c /= n + 1;
            if owner < n {
                bundles[owner].insert(j);
            }
        }
        best = best.max(oracles.iter().zip(&bundles).map(|(o, b)| o.value(b)).sum());
    }
    best
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(96))]

    #[test]
    fn general_matches_brute_force(oracles in xos_oracles(3, 4), mask in 0u64..16) {
        let items: Vec<usize> = (0..4).filter(|j| mask >> j & 1 == 1).collect();
        let set: ItemSet = items.iter().copied().collect();
        let alloc = opt_general(&[0, 1, 2], &oracles, &set).unwrap();
        prop_assert!(alloc.is_consistent(&set));
        prop_assert!((alloc.value - brute_force(&oracles, &items)).abs() < 1e-9);
    }

    #[test]
    fn monotone_in_agents_and_items(oracles in xos_oracles(4, 4), mask in 0u64..16, extra in 0usize..4) {
        let small: ItemSet = (0..4).filter(|j| mask >> j & 1 == 1).collect();
        let big = small.union(&ItemSet::singleton(extra));
        let few = opt_general(&[0, 1, 2], &oracles[..3], &small).unwrap().value;
        let more_agents = opt_general(&[0, 1, 2, 3], &oracles, &small).unwrap().value;
        let more_items = opt_general(&[0, 1, 2], &oracles[..3], &big).unwrap().value;
        prop_assert!(more_agents >= few - 1e-12);
        prop_assert!(more_items >= few - 1e-12);
    }

    #[test]
    fn matching_equals_general_on_unit_demand(w in prop::collection::vec(prop::collection::vec(0u8..6, 4), 1..5)) {
        let rows: Vec<Vec<f64>> = w.iter().map(|r| r.iter().map(|&x| f64::from(x) / 2.0).collect()).collect();
        let agents: Vec<usize> = (0..rows.len()).collect();
        let refs: Vec<&[f64]> = rows.iter().map(Vec::as_slice).collect();
        let oracles: Vec<BundleValuation> = rows.iter().map(|r| BundleValuation::UnitDemand { weights: r.clone() }).collect();
        let items = ItemSet::full(4);
        let a = opt_matching(&agents, &refs, &items).unwrap();
        let b = opt_general(&agents, &oracles, &items).unwrap();
        prop_assert_eq!(a.value, b.value);
        prop_assert!(a.is_consistent(&items));
        prop_assert!(a.bundles.values().all(|b| b.len() == 1));
    }
}

#[test]
fn split_examples() {
    let oracles = [
        BundleValuation::additive(vec![5.0, 1.0]),
        BundleValuation::additive(vec![1.0, 5.0]),
    ];
    let alloc = opt_general(&[0, 1], &oracles, &ItemSet::full(2)).unwrap();
    assert_eq!(opt_split(&alloc, 0).unwrap(), (5.0, 5.0));
    let lone = opt_general(&[0], &oracles[..1], &ItemSet::full(2)).unwrap();
    assert_eq!(opt_split(&lone, 0).unwrap(), (6.0, 0.0));
    let zero = [
        BundleValuation::additive(vec![0.0, 0.0]),
        oracles[1].clone(),
    ];
    let alloc = opt_general(&[0, 1], &zero, &ItemSet::full(2)).unwrap();
    assert_eq!(opt_split(&alloc, 0).unwrap(), (0.0, 6.0));
    assert!(matches!(opt_split(&alloc, 7), Err(Error::UnknownAgent(7))));
}

#[test]
fn budget_error_reports_count() {
    let oracles = vec![BundleValuation::additive(vec![1.0; 3]); 4];
    match opt_general_with_budget(&[0, 1, 2, 3], &oracles, &ItemSet::full(3), 100) {
        Err(Error::Capability {
            required, limit, ..
        }) => assert_eq!((required, limit), (125, 100)),
        other => panic!("{other:?}"),
    }
}

#[test]
fn matching_scales_to_hundreds() {
    let n = 200;
    let rows: Vec<Vec<f64>> = (0..n)
        .map(|i| {
            (0..n)
                .map(|j| {
                    if j == (i * 7 + 3) % n {
                        1.0
                    } else {
                        0.49 * ((i * 31 + j * 17) % 97) as f64 / 97.0
                    }
                })
                .collect()
        })
        .collect();
    let refs: Vec<&[f64]> = rows.iter().map(Vec::as_slice).collect();
    let agents: Vec<usize> = (0..n).collect();
    let alloc = opt_matching(&agents, &refs, &ItemSet::full(n)).unwrap();
    assert!(alloc.is_consistent(&ItemSet::full(n)));
    // the hidden permutation i ↦ 7i+3 (mod 200) is the unique optimum
    assert_eq!(alloc.value, n as f64);
    assert!((0..n).all(|i| alloc.bundle(i) == ItemSet::singleton((i * 7 + 3) % n)));
}
