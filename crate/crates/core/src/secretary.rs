//! Online allocation with agents arriving in random order.
//!
//! [`run_sample_then_greedy`] observes the first `k` agents and then, at each
//! step `t`, solves the offline problem over *all* items for the agents seen
//! so far (signals of later agents masked to zero) and hands the arriving
//! agent whatever of its optimal bundle is still available. With
//! `k = ⌊n/e⌋` this is the `2e`-competitive rule for valuations subadditive
//! over signals; with `k = ⌊n/2⌋` the `4`-competitive rule for valuations XOS
//! over signals.
//!
//! [`run_blackbox_framework`] separates interdependence from the online
//! problem: half the agents are skipped and only their signals are used to
//! build fixed proxy valuations for the rest, on which any classical online
//! algorithm (an [`OnlineAlgorithm`]) then runs. [`rei19_allocation`] is the
//! matching subroutine that optimizes over *available* items at each step.

use std::collections::{BTreeMap, HashMap};
use std::f64::consts::E;
use std::io::Write;
use std::sync::{Arc, RwLock};

use itertools::Itertools;
use num_rational::Ratio;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::items::ItemSet;
use crate::lp::{Cmp, LinearProgram};
use crate::offline_opt::{opt_auto, opt_matching, Allocation, BundleValuation, WeightOracle};
use crate::sampling::{random_permutation, trial_rng};
use crate::valuations::{Instance, SignalProfile, TOL};

/// Largest `n` for which exact order enumeration is attempted.
pub const MAX_EXACT_AGENTS: usize = 7;

/// Default slack constant `c` for [`alpha_sum_check`].
pub const DEFAULT_ALPHA_SLACK: f64 = 5.0;

/// `⌊n/e⌋`.
pub fn sample_size_e(n: usize) -> usize {
    (n as f64 / E).floor() as usize
}

/// `⌊n/2⌋`.
pub fn sample_size_half(n: usize) -> usize {
    n / 2
}

/// A permutation of `0..n`; entry `t` is the agent arriving at step `t + 1`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "Vec<usize>", into = "Vec<usize>")]
pub struct ArrivalOrder(Vec<usize>);

impl ArrivalOrder {
    pub fn new(order: Vec<usize>) -> Result<Self> {
        let mut seen = vec![false; order.len()];
        for &a in &order {
            if a >= order.len() || std::mem::replace(&mut seen[a], true) {
                return invalid(format!(
                    "{order:?} is not a permutation of 0..{}",
                    order.len()
                ));
            }
        }
        Ok(Self(order))
    }

    pub fn identity(n: usize) -> Self {
        Self((0..n).collect())
    }

    pub fn random(n: usize, rng: &mut impl rand::Rng) -> Self {
        Self(random_permutation(n, rng))
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn as_slice(&self) -> &[usize] {
        &self.0
    }
}

impl TryFrom<Vec<usize>> for ArrivalOrder {
    type Error = Error;
    fn try_from(v: Vec<usize>) -> Result<Self> {
        Self::new(v)
    }
}

impl From<ArrivalOrder> for Vec<usize> {
    fn from(o: ArrivalOrder) -> Self {
        o.0
    }
}

/// Which items the per-step optimum is computed over.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StepOptimum {
    /// All `m` items, availability ignored (sample-then-greedy).
    AllItems,
    /// Only the items still available (matching subroutine).
    AvailableItems,
    /// Nothing is ever allocated.
    None,
}

/// One arrival.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StepRecord {
    /// 1-based step.
    pub t: usize,
    pub agent: usize,
    pub sample: bool,
    /// `J^t`, items available when the agent arrives.
    pub available: ItemSet,
    /// `B^t`.
    pub allocated: ItemSet,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunResult {
    /// Nonempty bundles only.
    pub bundles: BTreeMap<usize, ItemSet>,
    /// Social welfare at the true, unmasked signals.
    pub welfare: f64,
    pub variant: StepOptimum,
    pub trace: Vec<StepRecord>,
}

impl RunResult {
    pub fn bundle(&self, agent: usize) -> ItemSet {
        self.bundles.get(&agent).cloned().unwrap_or_default()
    }

    /// One JSON object per step.
    pub fn write_trace_jsonl(&self, mut out: impl Write) -> std::io::Result<()> {
        for step in &self.trace {
            serde_json::to_writer(&mut out, step)?;
            writeln!(out)?;
        }
        Ok(())
    }

    /// Bundles disjoint and inside `items`; trace follows `J^{t+1} = J^t ∖ B^t`.
    pub fn is_consistent(&self, items: &ItemSet) -> bool {
        let mut seen = ItemSet::new();
        for b in self.bundles.values() {
            if !b.is_subset(items) || !b.is_disjoint(&seen) {
                return false;
            }
            seen = seen.union(b);
        }
        self.trace.windows(2).all(|w| {
            w[1].available == w[0].available.difference(&w[0].allocated)
                && w[0].allocated.is_subset(&w[0].available)
        })
    }
}

fn finish(
    bundles: BTreeMap<usize, ItemSet>,
    welfare: f64,
    variant: StepOptimum,
    trace: Vec<StepRecord>,
) -> RunResult {
    RunResult {
        bundles: bundles.into_iter().filter(|(_, b)| !b.is_empty()).collect(),
        welfare,
        variant,
        trace,
    }
}

/// Memoized step optima `OPT(A, v(·, s_A); [m])`, keyed by the arrived set.
///
/// The step optimum depends on the set of arrived agents only, so repeated
/// runs over many orders of one instance share at most `2^n` solves.
#[derive(Debug)]
pub struct StepOptima<'a> {
    inst: &'a Instance,
    all: ItemSet,
    cache: Option<RwLock<HashMap<u64, Arc<Allocation>>>>,
}

impl<'a> StepOptima<'a> {
    /// Caches when `n ≤ 64`.
    pub fn new(inst: &'a Instance) -> Self {
        Self {
            inst,
            all: inst.all_items(),
            cache: (inst.n <= 64).then(|| RwLock::new(HashMap::new())),
        }
    }

    pub fn instance(&self) -> &'a Instance {
        self.inst
    }

    fn solve(&self, arrived: &[bool]) -> Result<Allocation> {
        // OPT(A^t) must depend on the set A^t only, so agents go in id order.
        let agents: Vec<usize> = (0..self.inst.n).filter(|&i| arrived[i]).collect();
        let masked = self.inst.signals.masked_by(|i| arrived[i]);
        opt_auto(&agents, &self.inst.freeze_at(&agents, &masked), &self.all)
    }

    /// Optimum for the arrived set given as a membership mask.
    pub fn get(&self, arrived: &[bool]) -> Result<Arc<Allocation>> {
        let Some(cache) = &self.cache else {
            return Ok(Arc::new(self.solve(arrived)?));
        };
        let key = arrived
            .iter()
            .rev()
            .fold(0u64, |acc, &b| acc << 1 | u64::from(b));
        if let Some(hit) = cache.read().expect("cache poisoned").get(&key) {
            return Ok(Arc::clone(hit));
        }
        let alloc = Arc::new(self.solve(arrived)?);
        cache
            .write()
            .expect("cache poisoned")
            .insert(key, Arc::clone(&alloc));
        Ok(alloc)
    }

    /// Sample-then-greedy over `arrivals` (a full order or a prefix).
    fn steps(
        &self,
        arrivals: &[usize],
        k: usize,
    ) -> Result<(BTreeMap<usize, ItemSet>, Vec<StepRecord>, ItemSet)> {
        let mut available = self.all.clone();
        let mut bundles = BTreeMap::new();
        let mut trace = Vec::with_capacity(arrivals.len());
        let mut arrived = vec![false; self.inst.n];
        for (idx, &agent) in arrivals.iter().enumerate() {
            let t = idx + 1;
            arrived[agent] = true;
            let allocated = if t > k {
                self.get(&arrived)?.bundle(agent).intersection(&available)
            } else {
                ItemSet::new()
            };
            trace.push(StepRecord {
                t,
                agent,
                sample: t <= k,
                available: available.clone(),
                allocated: allocated.clone(),
            });
            available = available.difference(&allocated);
            bundles.insert(agent, allocated);
        }
        Ok((bundles, trace, available))
    }

    /// Same as [`run_sample_then_greedy`], reusing cached step optima.
    pub fn run(&self, order: &ArrivalOrder, k: usize) -> Result<RunResult> {
        let n = self.inst.n;
        if order.len() != n {
            return invalid(format!(
                "order has {} agents, instance has {n}",
                order.len()
            ));
        }
        if k >= n.max(1) {
            return invalid(format!("sample size {k} must be below n = {n}"));
        }
        let (bundles, trace, _) = self.steps(order.as_slice(), k)?;
        let welfare = self.inst.welfare(&bundles);
        Ok(finish(bundles, welfare, StepOptimum::AllItems, trace))
    }
}

/// Sample-then-greedy with sample size `k` (`0 ≤ k < n`).
pub fn run_sample_then_greedy(
    inst: &Instance,
    order: &ArrivalOrder,
    k: usize,
) -> Result<RunResult> {
    StepOptima {
        cache: None,
        ..StepOptima::new(inst)
    }
    .run(order, k)
}

/// Sample-then-greedy with `k = ⌊n/e⌋`.
pub fn run_alg1(inst: &Instance, order: &ArrivalOrder) -> Result<RunResult> {
    run_sample_then_greedy(inst, order, sample_size_e(inst.n))
}

/// Sample-then-greedy with `k = ⌊n/2⌋`.
pub fn run_alg2(inst: &Instance, order: &ArrivalOrder) -> Result<RunResult> {
    run_sample_then_greedy(inst, order, sample_size_half(inst.n))
}

/// An instance without interdependence: fixed weight oracles, agents `0..n`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StaticInstance {
    pub m: usize,
    pub oracles: Vec<BundleValuation>,
}

impl StaticInstance {
    /// Unit-demand instance from a weight matrix (`weights[i][j]`).
    pub fn from_weights(weights: Vec<Vec<f64>>) -> Result<Self> {
        let m = weights.first().map_or(0, Vec::len);
        if weights.iter().any(|r| r.len() != m) {
            return invalid("weight matrix is ragged");
        }
        if weights.iter().flatten().any(|w| !w.is_finite() || *w < 0.0) {
            return invalid("weights must be finite and >= 0");
        }
        Ok(Self {
            m,
            oracles: weights
                .into_iter()
                .map(|weights| BundleValuation::UnitDemand { weights })
                .collect(),
        })
    }

    pub fn n(&self) -> usize {
        self.oracles.len()
    }

    pub fn welfare<'a>(&self, bundles: impl IntoIterator<Item = (&'a usize, &'a ItemSet)>) -> f64 {
        bundles
            .into_iter()
            .map(|(&i, b)| self.oracles[i].value(b))
            .sum()
    }

    /// Offline optimum over all agents and items.
    pub fn optimum(&self) -> Result<f64> {
        let agents: Vec<usize> = (0..self.n()).collect();
        Ok(opt_auto(&agents, &self.oracles, &ItemSet::full(self.m))?.value)
    }
}

/// A classical online algorithm for instances without interdependence.
pub trait OnlineAlgorithm: Sync {
    fn name(&self) -> &str;
    fn run(&self, inst: &StaticInstance, order: &ArrivalOrder) -> Result<RunResult>;
}

/// Allocates nothing.
#[derive(Debug, Clone, Copy, Default)]
pub struct AllocateNothing;

impl OnlineAlgorithm for AllocateNothing {
    fn name(&self) -> &str {
        "nothing"
    }

    fn run(&self, inst: &StaticInstance, order: &ArrivalOrder) -> Result<RunResult> {
        let all = ItemSet::full(inst.m);
        let trace = order
            .as_slice()
            .iter()
            .enumerate()
            .map(|(idx, &agent)| StepRecord {
                t: idx + 1,
                agent,
                sample: false,
                available: all.clone(),
                allocated: ItemSet::new(),
            })
            .collect();
        Ok(finish(BTreeMap::new(), 0.0, StepOptimum::None, trace))
    }
}

/// The available-items matching subroutine as an [`OnlineAlgorithm`].
#[derive(Debug, Clone, Copy, Default)]
pub struct Rei19 {
    /// Sample size; `None` means `⌊n'/e⌋` of the instance it runs on.
    pub sample: Option<usize>,
}

impl OnlineAlgorithm for Rei19 {
    fn name(&self) -> &str {
        "rei19"
    }

    fn run(&self, inst: &StaticInstance, order: &ArrivalOrder) -> Result<RunResult> {
        let k = self.sample.unwrap_or_else(|| sample_size_e(inst.n()));
        rei19_allocation(inst, order, k)
    }
}

pub(crate) fn unit_demand_rows(oracles: &[BundleValuation]) -> Result<Vec<&[f64]>> {
    oracles
        .iter()
        .enumerate()
        .map(|(i, o)| {
            o.unit_demand_weights()
                .ok_or_else(|| Error::InvalidInput(format!("agent {i} is not unit-demand")))
        })
        .collect()
}

/// Sample `k` agents, then at each step match the agents seen so far to the
/// *available* items and give the arriving agent its matched item, if any.
/// Welfare is measured with the instance's own weights.
pub fn rei19_allocation(
    inst: &StaticInstance,
    order: &ArrivalOrder,
    k: usize,
) -> Result<RunResult> {
    let n = inst.n();
    if order.len() != n {
        return invalid(format!(
            "order has {} agents, instance has {n}",
            order.len()
        ));
    }
    let rows = unit_demand_rows(&inst.oracles)?;
    let mut available = ItemSet::full(inst.m);
    let mut arrived_flags = vec![false; n];
    let mut bundles = BTreeMap::new();
    let mut trace = Vec::with_capacity(n);
    for (idx, &agent) in order.as_slice().iter().enumerate() {
        let t = idx + 1;
        arrived_flags[agent] = true;
        let mut allocated = ItemSet::new();
        if t > k {
            let arrived: Vec<usize> = (0..n).filter(|&i| arrived_flags[i]).collect();
            let arrived_rows: Vec<&[f64]> = arrived.iter().map(|&i| rows[i]).collect();
            allocated = opt_matching(&arrived, &arrived_rows, &available)?.bundle(agent);
        }
        trace.push(StepRecord {
            t,
            agent,
            sample: t <= k,
            available: available.clone(),
            allocated: allocated.clone(),
        });
        available = available.difference(&allocated);
        bundles.insert(agent, allocated);
    }
    let bundles: BTreeMap<usize, ItemSet> =
        bundles.into_iter().filter(|(_, b)| !b.is_empty()).collect();
    let welfare = inst.welfare(&bundles);
    Ok(finish(bundles, welfare, StepOptimum::AvailableItems, trace))
}

/// Residual instance of the proxy framework: agents `order[k1..]` (residual
/// index `r` is `order[k1 + r]`) valued at `v_i(·, s_{Â ∪ {i}})`.
pub(crate) fn proxy_instance(
    inst: &Instance,
    order: &ArrivalOrder,
    k1: usize,
    signals: &SignalProfile,
) -> StaticInstance {
    let mut in_sample = vec![false; inst.n];
    for &a in &order.as_slice()[..k1] {
        in_sample[a] = true;
    }
    let oracles = order.as_slice()[k1..]
        .iter()
        .map(|&i| {
            let proxy_signals = signals.masked_by(|a| in_sample[a] || a == i);
            inst.agents[i].freeze(&proxy_signals, inst.m)
        })
        .collect();
    StaticInstance { m: inst.m, oracles }
}

/// Skip the first `⌊n/2⌋` agents, build proxy valuations from their signals,
/// and run `blackbox` on the remaining agents. Welfare is scored at the true
/// signals.
pub fn run_blackbox_framework(
    inst: &Instance,
    order: &ArrivalOrder,
    blackbox: &dyn OnlineAlgorithm,
) -> Result<RunResult> {
    let n = inst.n;
    if n < 2 {
        return invalid("the proxy framework needs n >= 2");
    }
    if order.len() != n {
        return invalid(format!(
            "order has {} agents, instance has {n}",
            order.len()
        ));
    }
    let k1 = sample_size_half(n);
    let residual = proxy_instance(inst, order, k1, &inst.signals);
    let suffix = &order.as_slice()[k1..];
    let inner = blackbox.run(&residual, &ArrivalOrder::identity(n - k1))?;

    let all = inst.all_items();
    let mut seen = ItemSet::new();
    let mut bundles = BTreeMap::new();
    for (&r, b) in &inner.bundles {
        if r >= suffix.len() {
            return Err(Error::ContractViolation(format!(
                "{} allocated to unknown residual agent {r}",
                blackbox.name()
            )));
        }
        if !b.is_subset(&all) || !b.is_disjoint(&seen) {
            return Err(Error::ContractViolation(format!(
                "{} allocated unavailable items {b:?} to residual agent {r}",
                blackbox.name()
            )));
        }
        seen = seen.union(b);
        bundles.insert(suffix[r], b.clone());
    }
    let mut trace: Vec<StepRecord> = order.as_slice()[..k1]
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
    trace.extend(inner.trace.into_iter().map(|s| StepRecord {
        t: s.t + k1,
        agent: suffix[s.agent],
        ..s
    }));
    let welfare = inst.welfare(&bundles);
    Ok(finish(bundles, welfare, inner.variant, trace))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EstimationMode {
    /// Enumerate every order (or ordered prefix) exactly.
    Exact,
    MonteCarlo {
        trials: u64,
        seed: u64,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SurvivalEstimate {
    pub probability: f64,
    /// `(numerator, denominator)` in lowest terms, exact mode only.
    pub exact: Option<(u64, u64)>,
    pub trials: u64,
}

impl SurvivalEstimate {
    pub fn ratio(&self) -> Option<Ratio<u64>> {
        self.exact.map(|(a, b)| Ratio::new(a, b))
    }
}

/// `Pr[item ∈ J^{t+1}]` under sample-then-greedy with sample size `k`, over a
/// uniformly random order.
///
/// Exact mode enumerates every ordered `t`-prefix (the first `t` steps only
/// depend on it), which weights orders uniformly like enumerating all `n!`.
pub fn survival_probability(
    inst: &Instance,
    item: usize,
    t: usize,
    k: usize,
    mode: EstimationMode,
) -> Result<SurvivalEstimate> {
    let n = inst.n;
    if item >= inst.m {
        return invalid(format!("item {item} out of range for m = {}", inst.m));
    }
    if t > n {
        return invalid(format!("step {t} exceeds n = {n}"));
    }
    let optima = StepOptima::new(inst);
    let survives = |prefix: &[usize]| -> Result<bool> {
        let (_, _, remaining) = optima.steps(prefix, k)?;
        Ok(remaining.contains(item))
    };
    match mode {
        EstimationMode::Exact => {
            if n > MAX_EXACT_AGENTS {
                return Err(Error::Capability {
                    what: "exact survival probability (n! orders)",
                    required: n as u128,
                    limit: MAX_EXACT_AGENTS as u128,
                });
            }
            let prefixes: Vec<Vec<usize>> = (0..n).permutations(t).collect();
            let hits = prefixes
                .par_iter()
                .map(|p| survives(p).map(u64::from))
                .collect::<Result<Vec<_>>>()?
                .into_iter()
                .sum::<u64>();
            let total = prefixes.len() as u64;
            let r = Ratio::new(hits, total);
            Ok(SurvivalEstimate {
                probability: hits as f64 / total as f64,
                exact: Some((*r.numer(), *r.denom())),
                trials: total,
            })
        }
        EstimationMode::MonteCarlo { trials, seed } => {
            if trials == 0 {
                return invalid("trials must be >= 1");
            }
            let hits = (0..trials)
                .into_par_iter()
                .map(|trial| {
                    let order = random_permutation(n, &mut trial_rng(seed, trial));
                    survives(&order[..t]).map(u64::from)
                })
                .collect::<Result<Vec<_>>>()?
                .into_iter()
                .sum::<u64>();
            Ok(SurvivalEstimate {
                probability: hits as f64 / trials as f64,
                exact: None,
                trials,
            })
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AlphaSum {
    /// `Σ_{t=⌈n/e⌉}^{n} α_t / (t-1)`.
    pub lhs: f64,
    /// `α_n / 2`.
    pub rhs: f64,
    /// `rhs · (1 - c/n)`, what `lhs` has to reach.
    pub threshold: f64,
    pub pass: bool,
}

/// Finite-`n` check of the harmonic-sum inequality for nondecreasing,
/// subadditive-in-index sequences (`alpha[t-1]` is `α_t`): passes iff
/// `lhs ≥ (α_n/2)(1 - c/n)`.
pub fn alpha_sum_check(alpha: &[f64], slack_c: f64) -> Result<AlphaSum> {
    let n = alpha.len();
    if n < 3 {
        return invalid(format!(
            "sequence length {n} < 3; the sum would divide by t-1 = 0"
        ));
    }
    if let Some(t) = alpha.iter().position(|a| !a.is_finite() || *a < 0.0) {
        return invalid(format!(
            "alpha_{} = {} is not a finite nonnegative number",
            t + 1,
            alpha[t]
        ));
    }
    if let Some(t) = (1..n).find(|&t| alpha[t] < alpha[t - 1] - TOL) {
        return invalid(format!(
            "alpha_{} < alpha_{}: sequence must be nondecreasing",
            t + 1,
            t
        ));
    }
    let a_n = alpha[n - 1];
    if let Some(t) = (1..n).find(|&t| a_n > alpha[t - 1] + alpha[n - t - 1] + TOL) {
        return invalid(format!(
            "alpha_n > alpha_{t} + alpha_{}: subadditivity fails at t = {t}",
            n - t
        ));
    }
    let start = (n as f64 / E).ceil() as usize;
    let lhs: f64 = (start.max(2)..=n)
        .map(|t| alpha[t - 1] / (t - 1) as f64)
        .sum();
    let rhs = a_n / 2.0;
    let threshold = rhs * (1.0 - slack_c / n as f64);
    Ok(AlphaSum {
        lhs,
        rhs,
        threshold,
        pass: lhs >= threshold - TOL,
    })
}

/// A valid sequence with `α_n = 1` minimizing the left-hand side of
/// [`alpha_sum_check`], found by linear programming. Its `lhs` is the exact
/// finite-`n` worst case, against which the slack constant is calibrated.
pub fn alpha_worst_case(n: usize) -> Result<Vec<f64>> {
    if n < 3 {
        return invalid(format!("sequence length {n} < 3"));
    }
    let start = ((n as f64 / E).ceil() as usize).max(2);
    // variables x[t-1] = α_t for t = 1..n-1; α_n = 1 is a constant
    let objective = (1..n)
        .map(|t| {
            if t >= start {
                1.0 / (t - 1) as f64
            } else {
                0.0
            }
        })
        .collect();
    let mut lp = LinearProgram::minimize(objective);
    for t in 1..n - 1 {
        lp.constrain(vec![(t, 1.0), (t - 1, -1.0)], Cmp::Ge, 0.0);
    }
    lp.constrain(vec![(n - 2, 1.0)], Cmp::Le, 1.0);
    for t in 1..=n / 2 {
        let row = if t == n - t {
            vec![(t - 1, 2.0)]
        } else {
            vec![(t - 1, 1.0), (n - t - 1, 1.0)]
        };
        lp.constrain(row, Cmp::Ge, 1.0);
    }
    let sol = lp
        .solve()?
        .ok_or_else(|| Error::Lp("worst-case sequence LP infeasible".into()))?;
    let mut alpha: Vec<f64> = sol.x.iter().map(|x| x.clamp(0.0, 1.0)).collect();
    for t in 1..alpha.len() {
        alpha[t] = alpha[t].max(alpha[t - 1]);
    }
    alpha.push(1.0);
    Ok(alpha)
}

/// `α_t(i)` for `t = 1..=n`: the expected value of agent `i` for its bundle in
/// the full-information optimum, at signals `s_A` for a uniformly random
/// `A ∋ i` of size `t`. Computed by exact subset enumeration.
pub fn alpha_profile(inst: &Instance, agent: usize) -> Result<Vec<f64>> {
    let n = inst.n;
    if agent >= n {
        return invalid(format!("agent {agent} out of range for n = {n}"));
    }
    if n > 16 {
        return Err(Error::Capability {
            what: "alpha profile (2^n subsets)",
            required: n as u128,
            limit: 16,
        });
    }
    let agents: Vec<usize> = (0..n).collect();
    let oracles = inst.freeze_at(&agents, &inst.signals);
    let bundle = opt_auto(&agents, &oracles, &inst.all_items())?.bundle(agent);
    let mut sums = vec![0.0; n + 1];
    let mut counts = vec![0u64; n + 1];
    for bits in 0..1u64 << n {
        if bits >> agent & 1 == 0 {
            continue;
        }
        let size = bits.count_ones() as usize;
        sums[size] += inst.agents[agent].value(&bundle, &inst.signals.masked_bits(bits));
        counts[size] += 1;
    }
    Ok((1..=n).map(|t| sums[t] / counts[t] as f64).collect())
}
