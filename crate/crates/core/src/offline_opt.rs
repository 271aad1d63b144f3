//! Exact offline optimum `OPT(A, w; J)`: a subset dynamic program for general
//! (XOS) weight oracles and a Hungarian solver for unit-demand weights.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::items::ItemSet;

/// Default cap on `(|A|+1)^|J|`, the number of item-to-agent assignments.
pub const DEFAULT_BUDGET: u128 = 10_000_000;

// Relative slack under which two welfare values count as tied.
const TIE_EPS: f64 = 1e-12;

/// A set function over bundles, `w_i: 2^J → R≥0`, with `w_i(∅) = 0`.
pub trait WeightOracle: Sync {
    fn value(&self, bundle: &ItemSet) -> f64;

    /// Values of every subset of `items`: entry `mask` is the value of
    /// `{items[b] : bit b of mask}`.
    fn subset_values(&self, items: &[usize]) -> Vec<f64> {
        (0..1usize << items.len())
            .map(|mask| {
                let bundle = items
                    .iter()
                    .enumerate()
                    .filter(|(b, _)| mask >> b & 1 == 1)
                    .map(|(_, &j)| j)
                    .collect();
                self.value(&bundle)
            })
            .collect()
    }

    /// Per-item weights (indexed by item id) when the oracle is unit-demand.
    fn unit_demand_weights(&self) -> Option<&[f64]> {
        None
    }
}

impl<T: WeightOracle + ?Sized> WeightOracle for &T {
    fn value(&self, bundle: &ItemSet) -> f64 {
        (**self).value(bundle)
    }
    fn subset_values(&self, items: &[usize]) -> Vec<f64> {
        (**self).subset_values(items)
    }
    fn unit_demand_weights(&self) -> Option<&[f64]> {
        (**self).unit_demand_weights()
    }
}

impl<T: WeightOracle + ?Sized> WeightOracle for Box<T> {
    fn value(&self, bundle: &ItemSet) -> f64 {
        (**self).value(bundle)
    }
    fn subset_values(&self, items: &[usize]) -> Vec<f64> {
        (**self).subset_values(items)
    }
    fn unit_demand_weights(&self) -> Option<&[f64]> {
        (**self).unit_demand_weights()
    }
}

/// A valuation at fixed signals, as dense per-item tables.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum BundleValuation {
    /// `max_c Σ_{j∈X} clauses[c][j]`.
    Xos { clauses: Vec<Vec<f64>> },
    /// `max_{j∈X} weights[j]`.
    UnitDemand { weights: Vec<f64> },
}

impl BundleValuation {
    pub fn additive(weights: Vec<f64>) -> Self {
        Self::Xos {
            clauses: vec![weights],
        }
    }
}

fn dense(w: &[f64], j: usize) -> f64 {
    w.get(j).copied().unwrap_or(0.0)
}

impl WeightOracle for BundleValuation {
    fn value(&self, bundle: &ItemSet) -> f64 {
        match self {
            Self::Xos { clauses } => clauses
                .iter()
                .map(|c| bundle.iter().map(|j| dense(c, j)).sum::<f64>())
                .fold(0.0, f64::max),
            Self::UnitDemand { weights } => {
                bundle.iter().map(|j| dense(weights, j)).fold(0.0, f64::max)
            }
        }
    }

    fn subset_values(&self, items: &[usize]) -> Vec<f64> {
        let size = 1usize << items.len();
        match self {
            Self::Xos { clauses } => {
                let mut best = vec![0.0f64; size];
                let mut sums = vec![0.0f64; size];
                for c in clauses {
                    for mask in 1..size {
                        let low = mask.trailing_zeros() as usize;
                        sums[mask] = sums[mask & (mask - 1)] + dense(c, items[low]);
                        best[mask] = best[mask].max(sums[mask]);
                    }
                }
                best
            }
            Self::UnitDemand { weights } => {
                let mut v = vec![0.0f64; size];
                for mask in 1..size {
                    let low = mask.trailing_zeros() as usize;
                    v[mask] = v[mask & (mask - 1)].max(dense(weights, items[low]));
                }
                v
            }
        }
    }

    fn unit_demand_weights(&self) -> Option<&[f64]> {
        match self {
            Self::UnitDemand { weights } => Some(weights),
            Self::Xos { .. } => None,
        }
    }
}

/// An allocation of items to a set of agents.
///
/// `bundles` and `per_agent_value` only list agents that received something.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Allocation {
    pub agents: Vec<usize>,
    pub bundles: BTreeMap<usize, ItemSet>,
    pub per_agent_value: BTreeMap<usize, f64>,
    pub value: f64,
}

impl Allocation {
    pub fn empty(agents: &[usize]) -> Self {
        Self {
            agents: agents.to_vec(),
            bundles: BTreeMap::new(),
            per_agent_value: BTreeMap::new(),
            value: 0.0,
        }
    }

    pub fn bundle(&self, agent: usize) -> ItemSet {
        self.bundles.get(&agent).cloned().unwrap_or_default()
    }

    pub fn agent_value(&self, agent: usize) -> f64 {
        self.per_agent_value.get(&agent).copied().unwrap_or(0.0)
    }

    /// `(OPT_i, OPT_{-i})`.
    pub fn split(&self, agent: usize) -> Result<(f64, f64)> {
        if !self.agents.contains(&agent) {
            return Err(Error::UnknownAgent(agent));
        }
        let own = self.agent_value(agent);
        Ok((own, self.value - own))
    }

    /// Bundles pairwise disjoint, inside `items`, owned by known agents, and
    /// `value` equal to the per-agent sum.
    pub fn is_consistent(&self, items: &ItemSet) -> bool {
        let mut seen = ItemSet::new();
        for (agent, b) in &self.bundles {
            if !self.agents.contains(agent) || !b.is_subset(items) || !b.is_disjoint(&seen) {
                return false;
            }
            seen = seen.union(b);
        }
        let sum: f64 = self.per_agent_value.values().sum();
        (sum - self.value).abs() <= 1e-9 * self.value.abs().max(1.0)
    }
}

/// `(OPT_i, OPT_{-i})` of an allocation.
pub fn opt_split(alloc: &Allocation, agent: usize) -> Result<(f64, f64)> {
    alloc.split(agent)
}

fn assignment_count(agents: usize, items: usize) -> u128 {
    (agents as u128 + 1)
        .checked_pow(items as u32)
        .unwrap_or(u128::MAX)
}

fn ties(candidate: f64, target: f64) -> bool {
    candidate >= target - TIE_EPS * target.abs().max(1.0)
}

/// Exact welfare-maximizing allocation of `items` to `agents` (oracle `k`
/// belongs to `agents[k]`); items may stay unallocated.
///
/// Among (near-)maximizers the result is the lexicographically smallest
/// vector of per-agent bundles, agents in the order given and each bundle
/// compared by its bitmask over `items`. Deterministic.
pub fn opt_general<O: WeightOracle>(
    agents: &[usize],
    oracles: &[O],
    items: &ItemSet,
) -> Result<Allocation> {
    opt_general_with_budget(agents, oracles, items, DEFAULT_BUDGET)
}

pub fn opt_general_with_budget<O: WeightOracle>(
    agents: &[usize],
    oracles: &[O],
    items: &ItemSet,
    budget: u128,
) -> Result<Allocation> {
    if agents.len() != oracles.len() {
        return invalid(format!(
            "{} agents but {} oracles",
            agents.len(),
            oracles.len()
        ));
    }
    let items_vec = items.to_vec();
    let (a, q) = (agents.len(), items_vec.len());
    if a == 0 || q == 0 {
        return Ok(Allocation::empty(agents));
    }
    let count = assignment_count(a, q);
    if count > budget || q >= usize::BITS as usize - 1 {
        return Err(Error::Capability {
            what: "exhaustive allocation search ((|A|+1)^|J| assignments)",
            required: count,
            limit: budget,
        });
    }
    let full = (1usize << q) - 1;
    let tables: Vec<Vec<f64>> = oracles
        .iter()
        .map(|o| o.subset_values(&items_vec))
        .collect();

    // rest[k][mask]: best welfare of agents k.. on items `mask`; rest[a] ≡ 0.
    let mut rest: Vec<Vec<f64>> = vec![Vec::new(); a + 1];
    rest[a] = vec![0.0; full + 1];
    for k in (1..a).rev() {
        let table = &tables[k];
        let next = &rest[k + 1];
        let mut cur = vec![0.0f64; full + 1];
        if k == a - 1 {
            // max over submasks, by superset-sum style relaxation
            cur.copy_from_slice(table);
            for b in 0..q {
                for mask in 0..=full {
                    if mask >> b & 1 == 1 {
                        cur[mask] = cur[mask].max(cur[mask ^ (1 << b)]);
                    }
                }
            }
        } else {
            for (mask, slot) in cur.iter_mut().enumerate() {
                let mut best = next[mask];
                let mut sub = mask;
                while sub != 0 {
                    best = best.max(table[sub] + next[mask ^ sub]);
                    sub = (sub - 1) & mask;
                }
                *slot = best;
            }
        }
        rest[k] = cur;
    }

    // Greedy lexicographic reconstruction: agent by agent, smallest mask that
    // still completes to an optimum.
    let mut bundles = BTreeMap::new();
    let mut per_agent_value = BTreeMap::new();
    let mut remaining = full;
    for k in 0..a {
        let table = &tables[k];
        let next = &rest[k + 1];
        let mut target = f64::NEG_INFINITY;
        let mut sub = remaining;
        loop {
            target = target.max(table[sub] + next[remaining ^ sub]);
            if sub == 0 {
                break;
            }
            sub = (sub - 1) & remaining;
        }
        // ascending submask enumeration
        let mut sub = 0usize;
        let chosen = loop {
            if ties(table[sub] + next[remaining ^ sub], target) {
                break sub;
            }
            sub = sub.wrapping_sub(remaining) & remaining;
        };
        if chosen != 0 {
            let bundle: ItemSet = (0..q)
                .filter(|b| chosen >> b & 1 == 1)
                .map(|b| items_vec[b])
                .collect();
            bundles.insert(agents[k], bundle);
            per_agent_value.insert(agents[k], table[chosen]);
        }
        remaining ^= chosen;
    }
    let value = per_agent_value.values().sum();
    Ok(Allocation {
        agents: agents.to_vec(),
        bundles,
        per_agent_value,
        value,
    })
}

/// Maximum-weight bipartite matching of `agents` to `items`; `weights[k][j]`
/// is agent `agents[k]`'s weight for item `j`. Zero-weight pairs are never
/// matched. Hungarian algorithm, `O(|A|² (|A|+|J|))`.
pub fn opt_matching(agents: &[usize], weights: &[&[f64]], items: &ItemSet) -> Result<Allocation> {
    if agents.len() != weights.len() {
        return invalid(format!(
            "{} agents but {} weight rows",
            agents.len(),
            weights.len()
        ));
    }
    for (k, row) in weights.iter().enumerate() {
        if let Some(j) = items.iter().find(|&j| {
            let w = dense(row, j);
            !w.is_finite() || w < 0.0
        }) {
            return invalid(format!(
                "agent {} weight for item {j} is {}",
                agents[k],
                dense(row, j)
            ));
        }
    }
    let cols = items.to_vec();
    let (rows, q) = (agents.len(), cols.len());
    if rows == 0 || q == 0 {
        return Ok(Allocation::empty(agents));
    }
    // Square-ish min-cost assignment: rows = agents, columns = items plus one
    // zero-weight dummy per agent so that every agent can stay unmatched.
    let width = q + rows;
    let cost = |r: usize, c: usize| -> f64 {
        if c < q {
            -dense(weights[r], cols[c])
        } else {
            0.0
        }
    };
    // 1-based potentials/matching as in the classical O(n^2 m) formulation.
    let mut u = vec![0.0f64; rows + 1];
    let mut v = vec![0.0f64; width + 1];
    let mut owner = vec![0usize; width + 1];
    let mut way = vec![0usize; width + 1];
    for r in 1..=rows {
        owner[0] = r;
        let mut c0 = 0usize;
        let mut minv = vec![f64::INFINITY; width + 1];
        let mut used = vec![false; width + 1];
        loop {
            used[c0] = true;
            let r0 = owner[c0];
            let mut delta = f64::INFINITY;
            let mut c1 = 0usize;
            for c in 1..=width {
                if used[c] {
                    continue;
                }
                let cur = cost(r0 - 1, c - 1) - u[r0] - v[c];
                if cur < minv[c] {
                    minv[c] = cur;
                    way[c] = c0;
                }
                if minv[c] < delta {
                    delta = minv[c];
                    c1 = c;
                }
            }
            for c in 0..=width {
                if used[c] {
                    u[owner[c]] += delta;
                    v[c] -= delta;
                } else {
                    minv[c] -= delta;
                }
            }
            c0 = c1;
            if owner[c0] == 0 {
                break;
            }
        }
        loop {
            let c1 = way[c0];
            owner[c0] = owner[c1];
            c0 = c1;
            if c0 == 0 {
                break;
            }
        }
    }
    let mut bundles = BTreeMap::new();
    let mut per_agent_value = BTreeMap::new();
    for c in 1..=q {
        let r = owner[c];
        if r == 0 {
            continue;
        }
        let w = dense(weights[r - 1], cols[c - 1]);
        if w > 0.0 {
            bundles.insert(agents[r - 1], ItemSet::singleton(cols[c - 1]));
            per_agent_value.insert(agents[r - 1], w);
        }
    }
    let value = per_agent_value.values().sum();
    Ok(Allocation {
        agents: agents.to_vec(),
        bundles,
        per_agent_value,
        value,
    })
}

/// Exact optimum with the fastest applicable solver: matching when every
/// oracle is unit-demand, the subset program otherwise.
pub fn opt_auto<O: WeightOracle>(
    agents: &[usize],
    oracles: &[O],
    items: &ItemSet,
) -> Result<Allocation> {
    let rows: Option<Vec<&[f64]>> = oracles.iter().map(|o| o.unit_demand_weights()).collect();
    match rows {
        Some(rows) => opt_matching(agents, &rows, items),
        None => opt_general(agents, oracles, items),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn additive(w: &[f64]) -> BundleValuation {
        BundleValuation::additive(w.to_vec())
    }

    #[test]
    fn single_agent_takes_everything() {
        let alloc = opt_general(&[3], &[additive(&[1.0, 2.0, 0.5])], &ItemSet::full(3)).unwrap();
        assert_eq!(alloc.bundle(3), ItemSet::full(3));
        assert_eq!(alloc.value, 3.5);
    }

    #[test]
    fn two_by_two_additive() {
        let oracles = [additive(&[5.0, 1.0]), additive(&[1.0, 5.0])];
        let alloc = opt_general(&[1, 2], &oracles, &ItemSet::full(2)).unwrap();
        assert_eq!(alloc.value, 10.0);
        assert_eq!(alloc.bundle(1), ItemSet::from([0]));
        assert_eq!(alloc.bundle(2), ItemSet::from([1]));
        assert_eq!(opt_split(&alloc, 1).unwrap(), (5.0, 5.0));
        assert!(alloc.is_consistent(&ItemSet::full(2)));
    }

    #[test]
    fn empty_inputs() {
        let none: [BundleValuation; 0] = [];
        let alloc = opt_general(&[], &none, &ItemSet::full(3)).unwrap();
        assert_eq!(alloc.value, 0.0);
        assert!(alloc.bundles.is_empty());
        let alloc = opt_general(&[0], &[additive(&[1.0])], &ItemSet::new()).unwrap();
        assert_eq!(alloc.value, 0.0);
    }

    #[test]
    fn split_edge_cases() {
        let alloc = opt_general(
            &[0, 1],
            &[additive(&[0.0]), additive(&[2.0])],
            &ItemSet::full(1),
        )
        .unwrap();
        assert_eq!(alloc.split(0).unwrap(), (0.0, 2.0));
        assert_eq!(alloc.split(1).unwrap(), (2.0, 0.0));
        assert!(matches!(alloc.split(7), Err(Error::UnknownAgent(7))));
    }

    #[test]
    fn ties_prefer_leaving_items_with_earlier_agents_empty() {
        // both agents value item 0 at 1: agent 0 takes the empty bundle
        let alloc = opt_general(
            &[0, 1],
            &[additive(&[1.0]), additive(&[1.0])],
            &ItemSet::full(1),
        )
        .unwrap();
        assert_eq!(alloc.bundle(0), ItemSet::new());
        assert_eq!(alloc.bundle(1), ItemSet::from([0]));
    }

    #[test]
    fn budget_error_names_the_count() {
        let oracles = vec![additive(&[1.0; 8]); 9];
        let agents: Vec<usize> = (0..9).collect();
        match opt_general_with_budget(&agents, &oracles, &ItemSet::full(8), 1000) {
            Err(Error::Capability {
                required, limit, ..
            }) => {
                assert_eq!(required, 10u128.pow(8));
                assert_eq!(limit, 1000);
            }
            other => panic!("expected capability error, got {other:?}"),
        }
    }

    #[test]
    fn matching_examples() {
        let diag: Vec<Vec<f64>> = (0..3)
            .map(|i| (0..3).map(|j| (i == j) as u8 as f64).collect())
            .collect();
        let rows: Vec<&[f64]> = diag.iter().map(|r| r.as_slice()).collect();
        let alloc = opt_matching(&[0, 1, 2], &rows, &ItemSet::full(3)).unwrap();
        assert_eq!(alloc.value, 3.0);
        for i in 0..3 {
            assert_eq!(alloc.bundle(i), ItemSet::singleton(i));
        }

        let w = [[5.0, 4.0], [4.0, 1.0]];
        let rows: Vec<&[f64]> = w.iter().map(|r| r.as_slice()).collect();
        let alloc = opt_matching(&[0, 1], &rows, &ItemSet::full(2)).unwrap();
        assert_eq!(alloc.value, 8.0);
        assert_eq!(alloc.bundle(0), ItemSet::singleton(1));
        assert_eq!(alloc.bundle(1), ItemSet::singleton(0));

        let zeros = [[0.0; 4]; 3];
        let rows: Vec<&[f64]> = zeros.iter().map(|r| r.as_slice()).collect();
        let alloc = opt_matching(&[0, 1, 2], &rows, &ItemSet::full(4)).unwrap();
        assert_eq!(alloc.value, 0.0);
        assert!(alloc.bundles.is_empty());
    }

    #[test]
    fn matching_respects_item_subset_and_rejects_negative() {
        let w = [[5.0, 4.0, 9.0]];
        let rows: Vec<&[f64]> = w.iter().map(|r| r.as_slice()).collect();
        let alloc = opt_matching(&[0], &rows, &ItemSet::from([0, 1])).unwrap();
        assert_eq!(alloc.bundle(0), ItemSet::singleton(0));
        let bad = [[-1.0]];
        let rows: Vec<&[f64]> = bad.iter().map(|r| r.as_slice()).collect();
        assert!(opt_matching(&[0], &rows, &ItemSet::full(1)).is_err());
    }

    #[test]
    fn matching_more_agents_than_items() {
        let w = [[1.0, 2.0], [3.0, 1.0], [2.5, 2.5]];
        let rows: Vec<&[f64]> = w.iter().map(|r| r.as_slice()).collect();
        let alloc = opt_matching(&[0, 1, 2], &rows, &ItemSet::full(2)).unwrap();
        assert_eq!(alloc.value, 5.5);
        assert!(alloc.is_consistent(&ItemSet::full(2)));
    }
}
