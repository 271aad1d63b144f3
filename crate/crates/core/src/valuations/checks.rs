//! Exact and sampled checkers for the structural properties of valuations:
//! monotonicity, subadditivity and XOS over signals, XOS over items.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use super::{SignalProfile, ValuationSpec, TOL};
use crate::error::{Error, Result};
use crate::items::ItemSet;
use crate::lp::{Cmp, LinearProgram};

pub const MAX_SUBADDITIVE_AGENTS: usize = 14;
pub const MAX_XOS_SIGNAL_AGENTS: usize = 10;
pub const MAX_XOS_ITEMS: usize = 6;

/// Anything that can be evaluated as `v(X, s)`.
pub trait Valuation: Sync {
    fn value(&self, bundle: &ItemSet, s: &SignalProfile) -> f64;
}

impl Valuation for ValuationSpec {
    fn value(&self, bundle: &ItemSet, s: &SignalProfile) -> f64 {
        ValuationSpec::value(self, bundle, s)
    }
}

/// Wraps a closure so hand-built (possibly ill-behaved) valuations can be checked.
pub struct FnValuation<F>(pub F);

impl<F> Valuation for FnValuation<F>
where
    F: Fn(&ItemSet, &SignalProfile) -> f64 + Sync,
{
    fn value(&self, bundle: &ItemSet, s: &SignalProfile) -> f64 {
        (self.0)(bundle, s)
    }
}

/// Outcome of a property check: either it holds, or here is a counterexample.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub enum Check<W> {
    Pass,
    Witness(W),
}

impl<W> Check<W> {
    pub fn passed(&self) -> bool {
        matches!(self, Check::Pass)
    }

    pub fn witness(&self) -> Option<&W> {
        match self {
            Check::Pass => None,
            Check::Witness(w) => Some(w),
        }
    }
}

/// `v(smaller) > v(larger)` although `smaller ≤ larger` in both bundle and signals.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MonotoneWitness {
    pub small_bundle: ItemSet,
    pub small_signals: SignalProfile,
    pub large_bundle: ItemSet,
    pub large_signals: SignalProfile,
    pub small_value: f64,
    pub large_value: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SubadditiveWitness {
    /// The agent split `X`.
    pub split: Vec<usize>,
    pub whole: f64,
    pub part: f64,
    pub rest: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct XosSignalsWitness {
    /// Minimum inclusion probability the distribution guarantees.
    pub p: f64,
    /// Smallest `E[v(s_X)]` over distributions with every marginal `≥ p`.
    pub minimum: f64,
    /// `p · v(s)`.
    pub required: f64,
    /// Support of a minimizing distribution: (agent subset, probability).
    pub distribution: Vec<(Vec<usize>, f64)>,
}

/// An item set with no supporting additive function.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct XosItemsWitness {
    pub set: ItemSet,
    pub value: f64,
}

fn bits_to_vec(bits: u64, n: usize) -> Vec<usize> {
    (0..n).filter(|i| bits >> i & 1 == 1).collect()
}

fn local_set(items: &[usize], mask: u64) -> ItemSet {
    items
        .iter()
        .enumerate()
        .filter(|(b, _)| mask >> b & 1 == 1)
        .map(|(_, &j)| j)
        .collect()
}

/// Checks `v(X, s) ≤ v(Y, s')` for `X ⊆ Y ⊆ [m]` and `s ≤ s'`.
///
/// When `2^m · 2^n ≤ budget` this walks every cover relation of the lattice
/// (bundles × masked copies of `s`), which by transitivity covers all pairs.
/// Otherwise it draws `budget` random comparable pairs from `seed`.
pub fn check_monotone(
    v: &impl Valuation,
    n: usize,
    m: usize,
    s: &SignalProfile,
    budget: u64,
    seed: u64,
) -> Check<MonotoneWitness> {
    let exhaustive = n + m < 63 && (1u64 << (n + m)) <= budget;
    let violated = |xb: &ItemSet, xs: &SignalProfile, yb: &ItemSet, ys: &SignalProfile| {
        let (lo, hi) = (v.value(xb, xs), v.value(yb, ys));
        (lo > hi + TOL).then(|| MonotoneWitness {
            small_bundle: xb.clone(),
            small_signals: xs.clone(),
            large_bundle: yb.clone(),
            large_signals: ys.clone(),
            small_value: lo,
            large_value: hi,
        })
    };
    let all_items: Vec<usize> = (0..m).collect();
    if exhaustive {
        for agents in 0..1u64 << n {
            let sa = s.masked_bits(agents);
            for bundle in 0..1u64 << m {
                let x = local_set(&all_items, bundle);
                for j in (0..m).filter(|j| bundle >> j & 1 == 0) {
                    if let Some(w) = violated(&x, &sa, &local_set(&all_items, bundle | 1 << j), &sa)
                    {
                        return Check::Witness(w);
                    }
                }
                for k in (0..n).filter(|k| agents >> k & 1 == 0) {
                    if let Some(w) = violated(&x, &sa, &x, &s.masked_bits(agents | 1 << k)) {
                        return Check::Witness(w);
                    }
                }
            }
        }
        return Check::Pass;
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for _ in 0..budget {
        let x: ItemSet = (0..m).filter(|_| rng.random_bool(0.5)).collect();
        let y: ItemSet = x.union(&(0..m).filter(|_| rng.random_bool(0.5)).collect());
        let hi: Vec<f64> = s
            .values()
            .iter()
            .map(|&a| a * 2.0 * rng.random::<f64>())
            .collect();
        let lo: Vec<f64> = hi.iter().map(|&a| a * rng.random::<f64>()).collect();
        let (lo, hi) = (SignalProfile(lo), SignalProfile(hi));
        if let Some(w) = violated(&x, &lo, &y, &hi) {
            return Check::Witness(w);
        }
    }
    Check::Pass
}

/// Checks `v(s) ≤ v(s_X) + v(s_{[n]∖X})` for every `X ⊆ [n]` and returns the
/// first violating split in bitmask order.
pub fn check_subadditive_over_signals_fn(
    v: impl Fn(&SignalProfile) -> f64,
    s: &SignalProfile,
) -> Result<Check<SubadditiveWitness>> {
    let n = s.len();
    if n > MAX_SUBADDITIVE_AGENTS {
        return Err(Error::Capability {
            what: "exhaustive subadditivity check (use check_monotone-style sampling)",
            required: n as u128,
            limit: MAX_SUBADDITIVE_AGENTS as u128,
        });
    }
    let whole = v(s);
    let full = (1u64 << n) - 1;
    for x in 0..=full {
        let part = v(&s.masked_bits(x));
        let rest = v(&s.masked_bits(full ^ x));
        if whole > part + rest + TOL {
            return Ok(Check::Witness(SubadditiveWitness {
                split: bits_to_vec(x, n),
                whole,
                part,
                rest,
            }));
        }
    }
    Ok(Check::Pass)
}

/// [`check_subadditive_over_signals_fn`] on `v(bundle, ·)`.
pub fn check_subadditive_over_signals(
    v: &impl Valuation,
    bundle: &ItemSet,
    s: &SignalProfile,
) -> Result<Check<SubadditiveWitness>> {
    check_subadditive_over_signals_fn(|p| v.value(bundle, p), s)
}

/// `{0, 1/steps, …, 1}`.
pub fn probability_grid(steps: usize) -> Vec<f64> {
    (0..=steps).map(|k| k as f64 / steps as f64).collect()
}

/// XOS over signals, one LP per marginal level `p` in `grid`: minimize
/// `E_{X~A}[v(s_X)]` over distributions `A` on `2^[n]` with `Pr[i ∈ X] ≥ p`
/// for every `i`, and require the minimum to reach `p · v(s)`.
pub fn check_xos_over_signals_fn(
    v: impl Fn(&SignalProfile) -> f64,
    s: &SignalProfile,
    grid: &[f64],
) -> Result<Check<XosSignalsWitness>> {
    let n = s.len();
    if n > MAX_XOS_SIGNAL_AGENTS {
        return Err(Error::Capability {
            what: "XOS-over-signals LP (2^n variables)",
            required: n as u128,
            limit: MAX_XOS_SIGNAL_AGENTS as u128,
        });
    }
    let whole = v(s);
    let values: Vec<f64> = (0..1u64 << n).map(|x| v(&s.masked_bits(x))).collect();
    for &p in grid {
        let mut lp = LinearProgram::minimize(values.clone());
        lp.constrain((0..values.len()).map(|x| (x, 1.0)).collect(), Cmp::Eq, 1.0);
        for i in 0..n {
            let row = (0..values.len())
                .filter(|x| x >> i & 1 == 1)
                .map(|x| (x, 1.0))
                .collect();
            lp.constrain(row, Cmp::Ge, p);
        }
        let sol = lp
            .solve()?
            .ok_or_else(|| Error::Lp(format!("marginal level {p} infeasible")))?;
        let required = p * whole;
        if sol.objective < required - TOL {
            let distribution = sol
                .x
                .iter()
                .enumerate()
                .filter(|(_, &q)| q > 1e-12)
                .map(|(x, &q)| (bits_to_vec(x as u64, n), q))
                .collect();
            return Ok(Check::Witness(XosSignalsWitness {
                p,
                minimum: sol.objective,
                required,
                distribution,
            }));
        }
    }
    Ok(Check::Pass)
}

/// [`check_xos_over_signals_fn`] on `v(bundle, ·)`.
pub fn check_xos_over_signals(
    v: &impl Valuation,
    bundle: &ItemSet,
    s: &SignalProfile,
    grid: &[f64],
) -> Result<Check<XosSignalsWitness>> {
    check_xos_over_signals_fn(|p| v.value(bundle, p), s, grid)
}

/// XOS over items for a set function: every nonempty `S ⊆ set` must admit an
/// additive `a ≥ 0` with `a(S) ≥ v(S)` and `a(T) ≤ v(T)` for all `T ⊆ S`.
pub fn check_xos_over_items_fn(
    v: impl Fn(&ItemSet) -> f64,
    set: &ItemSet,
) -> Result<Check<XosItemsWitness>> {
    let items = set.to_vec();
    let k = items.len();
    if k > MAX_XOS_ITEMS {
        return Err(Error::Capability {
            what: "XOS-over-items LP (all subsets of S)",
            required: k as u128,
            limit: MAX_XOS_ITEMS as u128,
        });
    }
    let values: Vec<f64> = (0..1u64 << k).map(|x| v(&local_set(&items, x))).collect();
    for sub in 1..1u64 << k {
        let vars: Vec<usize> = (0..k).filter(|b| sub >> b & 1 == 1).collect();
        let row_of = |t: u64| -> Vec<(usize, f64)> {
            vars.iter()
                .enumerate()
                .filter(|(_, &b)| t >> b & 1 == 1)
                .map(|(var, _)| (var, 1.0))
                .collect()
        };
        let mut lp = LinearProgram::minimize(vec![0.0; vars.len()]);
        lp.constrain(row_of(sub), Cmp::Ge, values[sub as usize] - TOL);
        // proper nonempty subsets of `sub`
        let mut t = (sub - 1) & sub;
        while t != 0 {
            lp.constrain(row_of(t), Cmp::Le, values[t as usize] + TOL);
            t = (t - 1) & sub;
        }
        if lp.solve()?.is_none() {
            return Ok(Check::Witness(XosItemsWitness {
                set: local_set(&items, sub),
                value: values[sub as usize],
            }));
        }
    }
    Ok(Check::Pass)
}

/// [`check_xos_over_items_fn`] on `v(·, s)`.
pub fn check_xos_over_items(
    v: &impl Valuation,
    s: &SignalProfile,
    set: &ItemSet,
) -> Result<Check<XosItemsWitness>> {
    check_xos_over_items_fn(|b| v.value(b, s), set)
}
