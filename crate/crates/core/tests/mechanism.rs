use itertools::Itertools;
use proptest::prelude::*;

use secretary_core::harness::{generate_instance, Family, GeneratorParams};
use secretary_core::mechanism::{
    agent_utility, check_epic, check_random_sampling_bound, deviation_grid, run_mechanism,
    second_sample_size,
};
use secretary_core::sampling::trial_rng;
use secretary_core::secretary::{
    run_blackbox_framework, sample_size_half, ArrivalOrder, EstimationMode, Rei19,
};
use secretary_core::valuations::Clause;
use secretary_core::{Instance, ItemSet, SignalProfile, SignalWeight, ValuationSpec};

/// Agent `i` values item `j` at `own[i][j]·s_i + others[i][j]·Σ_{k≠i} s_k`.
fn separable(own: &[[f64; 2]], others: &[[f64; 2]], signals: Vec<f64>) -> Instance {
    let n = own.len();
    let agents = (0..n)
        .map(|i| {
            let part = |coef: f64, mine: bool| {
                let c = (0..n)
                    .map(|k| if (k == i) == mine { coef } else { 0.0 })
                    .collect();
                SignalWeight::linear(c, 0.0)
            };
            ValuationSpec::Separable {
                own: (0..2)
                    .map(|j| (j, part(own[i][j], true)))
                    .collect::<Clause>(),
                others: (0..2)
                    .map(|j| (j, part(others[i][j], false)))
                    .collect::<Clause>(),
            }
        })
        .collect();
    Instance::new(2, SignalProfile::new(signals).unwrap(), agents).unwrap()
}

/// Max-weight matching of `agents` to `items` by enumeration.
fn brute_matching(
    w: &dyn Fn(usize, usize) -> f64,
    agents: &[usize],
    items: &[usize],
) -> (f64, Vec<Option<usize>>) {
    let mut best = (0.0, vec![None; agents.len()]);
    let choices: Vec<Vec<Option<usize>>> = agents
        .iter()
        .map(|_| {
            std::iter::once(None)
                .chain(items.iter().copied().map(Some))
                .collect()
        })
        .collect();
    for pick in choices.into_iter().multi_cartesian_product() {
        let used: Vec<usize> = pick.iter().flatten().copied().collect();
        if used.iter().unique().count() != used.len() {
            continue;
        }
        let v: f64 = agents
            .iter()
            .zip(&pick)
            .map(|(&a, p)| p.map_or(0.0, |j| w(a, j)))
            .sum();
        if v > best.0 + 1e-12 {
            best = (v, pick);
        }
    }
    best
}

#[test]
fn four_agent_ledger_recomputed_by_hand() {
    let own = [[1.0, 0.5], [0.5, 2.0], [2.0, 1.0], [1.5, 0.5]];
    let others = [[0.2, 0.1], [0.3, 0.0], [0.5, 0.25], [0.1, 0.4]];
    let s = vec![1.0, 2.0, 1.5, 3.0];
    let inst = separable(&own, &others, s.clone());
    let order = ArrivalOrder::new(vec![1, 3, 0, 2]).unwrap();
    let out = run_mechanism(&inst, &order, &inst.signals).unwrap();

    // k1 = 2 (agents 1, 3 sampled), k2 = 0, residual arrivals 0 then 2
    assert_eq!(second_sample_size(4), 0);
    let sample = [1usize, 3];
    let sample_sum: f64 = sample.iter().map(|&a| s[a]).sum();
    let proxy = |i: usize, j: usize| own[i][j] * s[i] + others[i][j] * sample_sum;
    let mut available = vec![0usize, 1];
    let residual = [0usize, 2];
    assert_eq!(out.prices.len(), 2);
    for (r, &agent) in residual.iter().enumerate() {
        let rec = &out.prices[r];
        assert_eq!((rec.t, rec.agent), (3 + r, agent));
        let (prev, _) = brute_matching(&proxy, &residual[..r], &available);
        let (step, pick) = brute_matching(&proxy, &residual[..=r], &available);
        let item = pick[r];
        let own_value = item.map_or(0.0, |j| proxy(agent, j));
        assert!((rec.opt_prev - prev).abs() < 1e-12);
        assert!((rec.opt_minus - (step - own_value)).abs() < 1e-12);
        assert_eq!(rec.item, item);
        let others_all: f64 = (0..4).filter(|&k| k != agent).map(|k| s[k]).sum();
        let (g_full, g_sample) = item.map_or((0.0, 0.0), |j| {
            (others[agent][j] * others_all, others[agent][j] * sample_sum)
        });
        assert!((rec.g_full - g_full).abs() < 1e-12 && (rec.g_sample - g_sample).abs() < 1e-12);
        let price = if item.is_some() {
            prev - (step - own_value) + g_full - g_sample
        } else {
            0.0
        };
        assert!((rec.price - price).abs() < 1e-12);
        let value = item.map_or(0.0, |j| {
            own[agent][j] * s[agent] + others[agent][j] * others_all
        });
        assert!((agent_utility(&out, &inst, agent).unwrap() - (value - price)).abs() < 1e-12);
        assert!((out.utilities[&agent] - (value - price)).abs() < 1e-12);
        if let Some(j) = item {
            available.retain(|&x| x != j);
        }
    }
    assert!(!out.bundles.is_empty());
    for a in sample {
        assert_eq!((out.payments[&a], out.utilities[&a]), (0.0, 0.0));
    }

    let mut csv = Vec::new();
    out.write_price_ledger(&mut csv).unwrap();
    let text = String::from_utf8(csv).unwrap();
    assert!(text.starts_with("t,agent,item,opt_prev,opt_minus,g_full,g_sample,price\n"));
    assert_eq!(text.lines().count(), 3);
}

#[test]
fn private_values_are_truthful() {
    let n = 6;
    for seed in 0..100 {
        let mut inst =
            generate_instance(&GeneratorParams::new(n, 3, Family::SeparableCapped), seed).unwrap();
        for spec in &mut inst.agents {
            if let ValuationSpec::Separable { others, .. } = spec {
                for w in others.values_mut() {
                    *w = SignalWeight::constant(n, 0.0);
                }
            }
        }
        let order = ArrivalOrder::random(n, &mut trial_rng(seed, 0));
        for &agent in &order.as_slice()[sample_size_half(n) + second_sample_size(n)..] {
            let r = check_epic(
                &inst,
                &order,
                agent,
                &deviation_grid(inst.signals.get(agent), 11),
                1,
            )
            .unwrap();
            assert!(r.passed(), "seed {seed}: {r:?}");
        }
    }
}

#[test]
fn epic_report_json_shape() {
    let inst = generate_instance(&GeneratorParams::new(6, 2, Family::SeparableLinear), 5).unwrap();
    let order = ArrivalOrder::identity(6);
    let r = check_epic(&inst, &order, 5, &deviation_grid(inst.signals.get(5), 5), 1).unwrap();
    let v = serde_json::to_value(&r).unwrap();
    for key in [
        "agent",
        "truth_utility",
        "best_deviation",
        "best_utility",
        "violation",
    ] {
        assert!(v.get(key).is_some(), "{key}");
    }
    assert!(check_epic(&inst, &order, 9, &[1.0], 0).is_err());
    assert!(check_epic(&inst, &order, 5, &[-1.0], 0).is_err());
}

#[test]
fn sampling_bound_closed_forms() {
    // one agent values item 0 at 2·s_0, the rest value nothing
    let own = [
        [2.0, 0.0],
        [0.0, 0.0],
        [0.0, 0.0],
        [0.0, 0.0],
        [0.0, 0.0],
        [0.0, 0.0],
    ];
    let inst = separable(&own, &[[0.0; 2]; 6], vec![1.5, 1.0, 1.0, 1.0, 1.0, 1.0]);
    let b = check_random_sampling_bound(&inst, EstimationMode::Exact).unwrap();
    // Pr[0 ∉ Â] = 1/2, and its proxy value is 2·1.5
    assert!((b.lhs - 0.5 * 3.0).abs() < 1e-12);
    assert!((b.rhs - 0.75).abs() < 1e-12 && b.pass);

    // signal-independent: E over 3-subsets of OPT on the complement
    let w = [
        [3.0, 1.0],
        [2.0, 2.5],
        [1.0, 0.5],
        [0.5, 4.0],
        [2.0, 2.0],
        [1.0, 1.0],
    ];
    let inst = separable(&w, &[[0.0; 2]; 6], vec![1.0; 6]);
    let b = check_random_sampling_bound(&inst, EstimationMode::Exact).unwrap();
    let value = |i: usize, j: usize| w[i][j];
    let subsets: Vec<Vec<usize>> = (0..6).combinations(3).collect();
    let expected: f64 = subsets
        .iter()
        .map(|s| {
            let rest: Vec<usize> = (0..6).filter(|i| !s.contains(i)).collect();
            brute_matching(&value, &rest, &[0, 1]).0
        })
        .sum::<f64>()
        / subsets.len() as f64;
    assert!((b.lhs - expected).abs() < 1e-12);
    assert!((b.rhs - brute_matching(&value, &[0, 1, 2, 3, 4, 5], &[0, 1]).0 / 4.0).abs() < 1e-12);
    let mc = check_random_sampling_bound(
        &inst,
        EstimationMode::MonteCarlo {
            trials: 3000,
            seed: 1,
        },
    )
    .unwrap();
    assert!((mc.lhs - expected).abs() < 0.1);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(40))]

    #[test]
    fn mechanism_allocation_equals_framework(seed in 0u64..10_000, n in 3usize..9, order_seed in 0u64..100) {
        let inst = generate_instance(&GeneratorParams::new(n, 3, Family::SeparableCapped), seed).unwrap();
        let order = ArrivalOrder::random(n, &mut trial_rng(order_seed, 0));
        let mech = run_mechanism(&inst, &order, &inst.signals).unwrap();
        let k2 = second_sample_size(n);
        let frame = run_blackbox_framework(&inst, &order, &Rei19 { sample: Some(k2) }).unwrap();
        prop_assert_eq!(&mech.bundles, &frame.bundles);
        prop_assert_eq!(mech.welfare, frame.welfare);
        for (i, u) in &mech.utilities {
            prop_assert!(*u >= -1e-9, "agent {} utility {}", i, u);
            let b = mech.bundles.get(i).cloned().unwrap_or_default();
            prop_assert!(mech.payments[i].is_finite());
            if b.is_empty() {
                prop_assert_eq!(mech.payments[i], 0.0);
            }
            prop_assert!(b.len() <= 1);
        }
        let mut seen = ItemSet::new();
        for b in mech.bundles.values() {
            prop_assert!(b.is_disjoint(&seen));
            seen = seen.union(b);
        }
    }
}
