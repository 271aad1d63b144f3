//! Truthful online matching with separable interdependent valuations, and
//! audit tools for its incentive and sampling guarantees.

use std::collections::BTreeMap;
use std::f64::consts::E;
use std::io::Write;

use itertools::Itertools;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::items::ItemSet;
use crate::offline_opt::opt_auto;
use crate::offline_opt::opt_matching;
use crate::sampling::{random_permutation, trial_rng};
use crate::secretary::{
    proxy_instance, sample_size_half, unit_demand_rows, ArrivalOrder, EstimationMode, StepRecord,
};
use crate::valuations::{Instance, SignalProfile, TOL};

/// Largest `n` for which [`check_random_sampling_bound`] enumerates subsets.
pub const MAX_EXACT_SAMPLING_AGENTS: usize = 12;

/// `⌊n/(2e)⌋`, the second sample counted from the original `n`.
pub fn second_sample_size(n: usize) -> usize {
    (n as f64 / (2.0 * E)).floor() as usize
}

/// Price computation for one post-sample arrival.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PriceRecord {
    pub t: usize,
    pub agent: usize,
    pub item: Option<usize>,
    /// `OPT(Â^{t-1}, w; J^t)`.
    pub opt_prev: f64,
    /// `OPT_{-i_t}(Â^t, w; J^t)`.
    pub opt_minus: f64,
    /// `g_{i_t}(B^t, s_{[n]-i_t})` at the reports.
    pub g_full: f64,
    /// `g_{i_t}(B^t, s_Â)` at the reports.
    pub g_sample: f64,
    /// Charged price; 0 when nothing was allocated.
    pub price: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MechanismOutcome {
    /// Nonempty bundles only; each holds one item.
    pub bundles: BTreeMap<usize, ItemSet>,
    /// Every agent, 0 for those not charged.
    pub payments: BTreeMap<usize, f64>,
    /// Every agent, at the true signals.
    pub utilities: BTreeMap<usize, f64>,
    pub prices: Vec<PriceRecord>,
    pub steps: Vec<StepRecord>,
    /// Welfare at the true signals.
    pub welfare: f64,
}

impl MechanismOutcome {
    pub fn bundle(&self, agent: usize) -> ItemSet {
        self.bundles.get(&agent).cloned().unwrap_or_default()
    }

    /// One CSV row per post-sample step.
    pub fn write_price_ledger(&self, out: impl Write) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        for p in &self.prices {
            w.serialize(p)?;
        }
        w.flush().map_err(csv::Error::from)?;
        Ok(())
    }
}

fn validate_mechanism_input(
    inst: &Instance,
    order: &ArrivalOrder,
    reports: &SignalProfile,
) -> Result<()> {
    if inst.n < 3 {
        return invalid(format!("the mechanism needs n >= 3, got {}", inst.n));
    }
    if order.len() != inst.n || reports.len() != inst.n {
        return invalid(format!(
            "order ({}) and reports ({}) must both cover n = {} agents",
            order.len(),
            reports.len(),
            inst.n
        ));
    }
    if let Some(i) = inst.agents.iter().position(|a| !a.is_separable()) {
        return invalid(format!("agent {i} is not separable unit-demand"));
    }
    Ok(())
}

/// Runs the mechanism on `reports` for a fixed `order`. Proxies, allocations
/// and prices only see the reports; utilities and welfare use the true signals.
pub fn run_mechanism(
    inst: &Instance,
    order: &ArrivalOrder,
    reports: &SignalProfile,
) -> Result<MechanismOutcome> {
    validate_mechanism_input(inst, order, reports)?;
    let n = inst.n;
    let k1 = sample_size_half(n);
    let k2 = second_sample_size(n);
    let residual = proxy_instance(inst, order, k1, reports);
    let rows = unit_demand_rows(&residual.oracles)?;
    let suffix = &order.as_slice()[k1..];
    let all = inst.all_items();

    let mut steps: Vec<StepRecord> = order.as_slice()[..k1]
        .iter()
        .enumerate()
        .map(|(idx, &agent)| StepRecord {
            t: idx + 1,
            agent,
            sample: true,
            available: all.clone(),
            allocated: ItemSet::new(),
        })
        .collect();
    let mut available = all.clone();
    // (step, agent, bundle, opt_prev, opt_minus) until payments can be finalized
    let mut pending = Vec::new();
    for (r, &agent) in suffix.iter().enumerate() {
        let t = k1 + r + 1;
        let mut allocated = ItemSet::new();
        if r >= k2 {
            let arrived: Vec<usize> = (0..=r).collect();
            let step = opt_matching(&arrived, &rows[..=r], &available)?;
            let prev = opt_matching(&arrived[..r], &rows[..r], &available)?;
            allocated = step.bundle(r);
            let (_, opt_minus) = step.split(r)?;
            pending.push((t, agent, allocated.clone(), prev.value, opt_minus));
        }
        steps.push(StepRecord {
            t,
            agent,
            sample: r < k2,
            available: available.clone(),
            allocated: allocated.clone(),
        });
        available = available.difference(&allocated);
    }

    let mut in_sample = vec![false; n];
    for &a in &order.as_slice()[..k1] {
        in_sample[a] = true;
    }
    let sample_reports = reports.masked_by(|a| in_sample[a]);
    let mut payments: BTreeMap<usize, f64> = (0..n).map(|i| (i, 0.0)).collect();
    let mut bundles = BTreeMap::new();
    let mut prices = Vec::with_capacity(pending.len());
    for (t, agent, bundle, opt_prev, opt_minus) in pending {
        let spec = &inst.agents[agent];
        let g = |s: &SignalProfile| spec.separable_parts(&bundle, s).map_or(0.0, |(_, g)| g);
        let g_full = g(reports);
        let g_sample = g(&sample_reports);
        let price = if bundle.is_empty() {
            0.0
        } else {
            opt_prev - opt_minus + g_full - g_sample
        };
        payments.insert(agent, price);
        prices.push(PriceRecord {
            t,
            agent,
            item: bundle.max_item(),
            opt_prev,
            opt_minus,
            g_full,
            g_sample,
            price,
        });
        if !bundle.is_empty() {
            bundles.insert(agent, bundle);
        }
    }
    let utilities = (0..n)
        .map(|i| {
            let b = bundles.get(&i).cloned().unwrap_or_default();
            (i, inst.agents[i].value(&b, &inst.signals) - payments[&i])
        })
        .collect();
    let welfare = inst.welfare(&bundles);
    Ok(MechanismOutcome {
        bundles,
        payments,
        utilities,
        prices,
        steps,
        welfare,
    })
}

/// `v_i(bundle_i, s_true) - payment_i`.
pub fn agent_utility(outcome: &MechanismOutcome, inst: &Instance, agent: usize) -> Result<f64> {
    if agent >= inst.n {
        return Err(Error::UnknownAgent(agent));
    }
    let payment = outcome.payments.get(&agent).copied().unwrap_or(0.0);
    Ok(inst.agents[agent].value(&outcome.bundle(agent), &inst.signals) - payment)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpicReport {
    pub agent: usize,
    pub truth_utility: f64,
    pub best_deviation: f64,
    pub best_utility: f64,
    /// `max(0, best_utility - truth_utility)`.
    pub violation: f64,
}

impl EpicReport {
    pub fn passed(&self) -> bool {
        self.violation <= TOL
    }
}

/// `points` evenly spaced reports on `[0, 2·s]`, or `[0, 1]` when `s = 0`.
pub fn deviation_grid(true_signal: f64, points: usize) -> Vec<f64> {
    let hi = if true_signal > 0.0 {
        2.0 * true_signal
    } else {
        1.0
    };
    match points {
        0 => vec![],
        1 => vec![true_signal],
        _ => (0..points)
            .map(|k| hi * k as f64 / (points - 1) as f64)
            .collect(),
    }
}

fn deviation_utility(
    inst: &Instance,
    order: &ArrivalOrder,
    agent: usize,
    report: f64,
) -> Result<f64> {
    let reports = inst.signals.with(agent, report)?;
    let out = run_mechanism(inst, order, &reports)?;
    agent_utility(&out, inst, agent)
}

/// Compares `agent`'s truthful utility with every report in `grid`, then
/// refines `refine_rounds` times on an 11-point grid around the best report
/// found so far. Everyone else reports truthfully; `order` is fixed.
pub fn check_epic(
    inst: &Instance,
    order: &ArrivalOrder,
    agent: usize,
    grid: &[f64],
    refine_rounds: usize,
) -> Result<EpicReport> {
    if agent >= inst.n {
        return Err(Error::UnknownAgent(agent));
    }
    if let Some(x) = grid.iter().find(|x| !x.is_finite() || **x < 0.0) {
        return invalid(format!("deviation {x} is not a finite nonnegative signal"));
    }
    let truth = deviation_utility(inst, order, agent, inst.signals.get(agent))?;
    let evaluate = |reports: &[f64]| -> Result<Vec<(f64, f64)>> {
        reports
            .par_iter()
            .map(|&r| deviation_utility(inst, order, agent, r).map(|u| (r, u)))
            .collect()
    };
    let mut tried = evaluate(grid)?;
    let best_of = |tried: &[(f64, f64)]| {
        tried
            .iter()
            .copied()
            .fold(None, |acc: Option<(f64, f64)>, x| match acc {
                Some(a) if a.1 >= x.1 => Some(a),
                _ => Some(x),
            })
    };
    let mut sorted: Vec<f64> = grid.to_vec();
    sorted.sort_by(f64::total_cmp);
    sorted.dedup();
    for _ in 0..refine_rounds {
        let Some((center, _)) = best_of(&tried) else {
            break;
        };
        let pos = sorted.partition_point(|x| *x < center);
        let lo = if pos == 0 { center } else { sorted[pos - 1] };
        let hi = sorted.get(pos + 1).copied().unwrap_or(center);
        if hi <= lo {
            break;
        }
        let fresh: Vec<f64> = (0..=10).map(|k| lo + (hi - lo) * k as f64 / 10.0).collect();
        tried.extend(evaluate(&fresh)?);
        sorted.extend(fresh);
        sorted.sort_by(f64::total_cmp);
        sorted.dedup();
    }
    let (best_deviation, best_utility) =
        best_of(&tried).unwrap_or((inst.signals.get(agent), truth));
    Ok(EpicReport {
        agent,
        truth_utility: truth,
        best_deviation,
        best_utility,
        violation: (best_utility - truth).max(0.0),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SamplingBound {
    /// `E_Â[OPT([n] ∖ Â, w, [m])]` with `w_i = v_i(·, s_{Â ∪ {i}})`.
    pub lhs: f64,
    /// `OPT / 4`.
    pub rhs: f64,
    pub pass: bool,
    pub samples: u64,
}

/// `OPT([n] ∖ Â, w, [m])` for the sample `Â` given as a membership mask.
pub fn proxy_optimum(inst: &Instance, in_sample: &[bool]) -> Result<f64> {
    let rest: Vec<usize> = (0..inst.n).filter(|&i| !in_sample[i]).collect();
    let oracles: Vec<_> = rest
        .iter()
        .map(|&i| {
            let s = inst.signals.masked_by(|a| in_sample[a] || a == i);
            inst.agents[i].freeze(&s, inst.m)
        })
        .collect();
    let local: Vec<usize> = (0..rest.len()).collect();
    Ok(opt_auto(&local, &oracles, &inst.all_items())?.value)
}

/// Compares the expected proxy optimum over a uniformly random `⌊n/2⌋`-subset
/// `Â` with a quarter of the full optimum.
pub fn check_random_sampling_bound(inst: &Instance, mode: EstimationMode) -> Result<SamplingBound> {
    let n = inst.n;
    let half = n / 2;
    let agents: Vec<usize> = (0..n).collect();
    let opt = opt_auto(
        &agents,
        &inst.freeze_at(&agents, &inst.signals),
        &inst.all_items(),
    )?
    .value;
    let mask_of = |sample: &[usize]| {
        let mut m = vec![false; n];
        for &a in sample {
            m[a] = true;
        }
        m
    };
    let (total, samples) = match mode {
        EstimationMode::Exact => {
            if n > MAX_EXACT_SAMPLING_AGENTS {
                return Err(Error::Capability {
                    what: "exact sampling bound (all n/2-subsets)",
                    required: n as u128,
                    limit: MAX_EXACT_SAMPLING_AGENTS as u128,
                });
            }
            let subsets: Vec<Vec<usize>> = (0..n).combinations(half).collect();
            let values = subsets
                .par_iter()
                .map(|s| proxy_optimum(inst, &mask_of(s)))
                .collect::<Result<Vec<_>>>()?;
            (values.iter().sum::<f64>(), subsets.len() as u64)
        }
        EstimationMode::MonteCarlo { trials, seed } => {
            if trials == 0 {
                return invalid("trials must be >= 1");
            }
            let values = (0..trials)
                .into_par_iter()
                .map(|trial| {
                    let perm = random_permutation(n, &mut trial_rng(seed, trial));
                    proxy_optimum(inst, &mask_of(&perm[..half]))
                })
                .collect::<Result<Vec<_>>>()?;
            (values.iter().sum::<f64>(), trials)
        }
    };
    let lhs = total / samples as f64;
    let rhs = opt / 4.0;
    Ok(SamplingBound {
        lhs,
        rhs,
        pass: lhs >= rhs - TOL,
        samples,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::valuations::{Clause, SignalWeight, ValuationSpec};

    fn private_values(weights: &[&[f64]], signals: Vec<f64>) -> Instance {
        let n = weights.len();
        let agents = weights
            .iter()
            .enumerate()
            .map(|(i, row)| {
                let own: Clause = row
                    .iter()
                    .enumerate()
                    .map(|(j, &w)| {
                        let mut c = vec![0.0; n];
                        c[i] = w;
                        (j, SignalWeight::linear(c, 0.0))
                    })
                    .collect();
                ValuationSpec::Separable {
                    own,
                    others: Clause::new(),
                }
            })
            .collect();
        Instance::new(
            weights[0].len(),
            SignalProfile::new(signals).unwrap(),
            agents,
        )
        .unwrap()
    }

    #[test]
    fn second_sample() {
        assert_eq!(second_sample_size(6), 1);
        assert_eq!(second_sample_size(5), 0);
        assert_eq!(second_sample_size(11), 2);
    }

    #[test]
    fn rejects_non_separable_and_small_n() {
        let sep = private_values(&[&[1.0], &[1.0]], vec![1.0, 1.0]);
        assert!(run_mechanism(&sep, &ArrivalOrder::identity(2), &sep.signals).is_err());
        let ud = Instance::new(
            1,
            SignalProfile::zeros(3),
            vec![
                ValuationSpec::UnitDemand {
                    weights: [(0, SignalWeight::constant(3, 1.0))].into_iter().collect()
                };
                3
            ],
        )
        .unwrap();
        assert!(run_mechanism(&ud, &ArrivalOrder::identity(3), &ud.signals).is_err());
    }

    #[test]
    fn private_value_prices_are_opt_differences() {
        let inst = private_values(
            &[
                &[1.0, 2.0],
                &[3.0, 1.0],
                &[2.0, 2.0],
                &[1.0, 4.0],
                &[5.0, 1.0],
                &[2.0, 3.0],
            ],
            vec![1.0; 6],
        );
        let out = run_mechanism(&inst, &ArrivalOrder::identity(6), &inst.signals).unwrap();
        for p in &out.prices {
            assert_eq!((p.g_full, p.g_sample), (0.0, 0.0));
            if p.item.is_some() {
                assert!((p.price - (p.opt_prev - p.opt_minus)).abs() < 1e-12);
            } else {
                assert_eq!(p.price, 0.0);
                assert!((p.opt_prev - p.opt_minus).abs() < 1e-9);
            }
        }
        for i in 0..3 {
            assert_eq!(out.payments[&i], 0.0);
            assert_eq!(out.utilities[&i], 0.0);
        }
    }

    #[test]
    fn grid_shapes() {
        assert_eq!(deviation_grid(1.0, 3), vec![0.0, 1.0, 2.0]);
        assert_eq!(deviation_grid(0.0, 2), vec![0.0, 1.0]);
        assert_eq!(deviation_grid(0.7, 1), vec![0.7]);
    }

    #[test]
    fn single_point_grid_at_truth_passes() {
        let inst = private_values(&[&[1.0], &[3.0], &[2.0], &[5.0]], vec![0.5, 1.0, 2.0, 1.5]);
        let order = ArrivalOrder::new(vec![3, 1, 0, 2]).unwrap();
        let r = check_epic(&inst, &order, 2, &[2.0], 0).unwrap();
        assert_eq!(r.violation, 0.0);
        assert_eq!(r.best_deviation, 2.0);
    }

    #[test]
    fn sampling_bound_zero_instance() {
        let inst = private_values(&[&[0.0], &[0.0], &[0.0]], vec![1.0; 3]);
        let b = check_random_sampling_bound(&inst, EstimationMode::Exact).unwrap();
        assert_eq!((b.lhs, b.rhs, b.pass), (0.0, 0.0, true));
    }
}
