//! Interdependent valuations `v_i(X, s)`: signal profiles, signal-dependent
//! item weights, and the valuation families used throughout the crate.
//!
//! Every item weight is a [`SignalWeight`], a capped affine function of the
//! signal profile with nonnegative coefficients. Uncapped weights make a
//! valuation XOS over signals; capped ones make it subadditive over signals.

mod checks;

use std::collections::BTreeMap;
use std::path::Path;

use std::ops::{Deref, DerefMut};

use serde::de::Error as _;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

pub use checks::{
    check_monotone, check_subadditive_over_signals, check_subadditive_over_signals_fn,
    check_xos_over_items, check_xos_over_items_fn, check_xos_over_signals,
    check_xos_over_signals_fn, probability_grid, Check, FnValuation, MonotoneWitness,
    SubadditiveWitness, Valuation, XosItemsWitness, XosSignalsWitness, MAX_SUBADDITIVE_AGENTS,
    MAX_XOS_ITEMS, MAX_XOS_SIGNAL_AGENTS,
};

use crate::error::{invalid, Error, Result};
use crate::items::ItemSet;
use crate::offline_opt::BundleValuation;

/// Absolute tolerance for value comparisons.
pub const TOL: f64 = 1e-9;

/// One nonnegative signal per agent, indexed by agent id.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct SignalProfile(Vec<f64>);

impl SignalProfile {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if let Some((i, v)) = values
            .iter()
            .enumerate()
            .find(|(_, v)| !v.is_finite() || **v < 0.0)
        {
            return invalid(format!(
                "signal {i} is {v}; signals must be finite and >= 0"
            ));
        }
        Ok(Self(values))
    }

    pub fn zeros(n: usize) -> Self {
        Self(vec![0.0; n])
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn get(&self, agent: usize) -> f64 {
        self.0[agent]
    }

    pub fn values(&self) -> &[f64] {
        &self.0
    }

    /// Copy with agent `agent`'s signal replaced.
    pub fn with(&self, agent: usize, value: f64) -> Result<Self> {
        if agent >= self.len() {
            return invalid(format!(
                "agent {agent} out of range for {} signals",
                self.len()
            ));
        }
        let mut v = self.0.clone();
        v[agent] = value;
        Self::new(v)
    }

    /// Keeps the signals of agents for which `keep` holds and zeroes the rest.
    pub fn masked_by(&self, keep: impl Fn(usize) -> bool) -> Self {
        Self(
            self.0
                .iter()
                .enumerate()
                .map(|(i, &v)| if keep(i) { v } else { 0.0 })
                .collect(),
        )
    }

    /// Masks by an agent bitmask (bit `i` set keeps agent `i`); requires `n <= 64`.
    pub(crate) fn masked_bits(&self, bits: u64) -> Self {
        self.masked_by(|i| bits >> i & 1 == 1)
    }
}

/// `s_A`: the profile with every signal outside `agents` replaced by 0.
pub fn mask_signals(s: &SignalProfile, agents: &[usize]) -> Result<SignalProfile> {
    let mut keep = vec![false; s.len()];
    for &a in agents {
        if a >= s.len() {
            return invalid(format!("agent {a} out of range for {} signals", s.len()));
        }
        keep[a] = true;
    }
    Ok(s.masked_by(|i| keep[i]))
}

/// `w(s) = min(cap, const + Σ_k coeffs[k]·s[k])`; no cap means no clamping.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SignalWeight {
    pub coeffs: Vec<f64>,
    #[serde(rename = "const", default)]
    pub constant: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cap: Option<f64>,
}

impl SignalWeight {
    /// A weight that ignores signals.
    pub fn constant(n: usize, value: f64) -> Self {
        Self {
            coeffs: vec![0.0; n],
            constant: value,
            cap: None,
        }
    }

    pub fn linear(coeffs: Vec<f64>, constant: f64) -> Self {
        Self {
            coeffs,
            constant,
            cap: None,
        }
    }

    pub fn capped(coeffs: Vec<f64>, constant: f64, cap: f64) -> Self {
        Self {
            coeffs,
            constant,
            cap: Some(cap),
        }
    }

    pub fn eval(&self, s: &SignalProfile) -> f64 {
        let raw = self.constant
            + self
                .coeffs
                .iter()
                .zip(s.values())
                .map(|(a, x)| a * x)
                .sum::<f64>();
        match self.cap {
            Some(c) => raw.min(c),
            None => raw,
        }
    }

    pub fn is_capped(&self) -> bool {
        self.cap.is_some()
    }

    fn validate(&self, n: usize, ctx: &dyn Fn() -> String) -> Result<()> {
        if self.coeffs.len() != n {
            return invalid(format!(
                "{}: {} coefficients, expected {n}",
                ctx(),
                self.coeffs.len()
            ));
        }
        let bad = |v: f64| !v.is_finite() || v < 0.0;
        if let Some(k) = self.coeffs.iter().position(|&a| bad(a)) {
            return invalid(format!("{}: coefficient {k} is {}", ctx(), self.coeffs[k]));
        }
        if bad(self.constant) {
            return invalid(format!("{}: constant is {}", ctx(), self.constant));
        }
        if let Some(c) = self.cap.filter(|&c| bad(c)) {
            return invalid(format!("{}: cap is {c}", ctx()));
        }
        Ok(())
    }
}

/// Item id → weight. Items missing from the map weigh 0.
///
/// Serialized as a JSON object keyed by decimal item ids.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Clause(BTreeMap<usize, SignalWeight>);

impl Clause {
    pub fn new() -> Self {
        Self::default()
    }
}

impl Deref for Clause {
    type Target = BTreeMap<usize, SignalWeight>;
    fn deref(&self) -> &Self::Target {
        &self.0
    }
}

impl DerefMut for Clause {
    fn deref_mut(&mut self) -> &mut Self::Target {
        &mut self.0
    }
}

impl FromIterator<(usize, SignalWeight)> for Clause {
    fn from_iter<I: IntoIterator<Item = (usize, SignalWeight)>>(iter: I) -> Self {
        Self(iter.into_iter().collect())
    }
}

impl<'a> IntoIterator for &'a Clause {
    type Item = (&'a usize, &'a SignalWeight);
    type IntoIter = std::collections::btree_map::Iter<'a, usize, SignalWeight>;
    fn into_iter(self) -> Self::IntoIter {
        self.0.iter()
    }
}

impl Serialize for Clause {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        serializer.collect_map(self.0.iter().map(|(j, w)| (j.to_string(), w)))
    }
}

impl<'de> Deserialize<'de> for Clause {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        // Keys arrive as strings; internally tagged enums buffer them, so
        // parse explicitly rather than relying on integer-key coercion.
        BTreeMap::<String, SignalWeight>::deserialize(deserializer)?
            .into_iter()
            .map(|(k, w)| {
                k.parse::<usize>()
                    .map(|j| (j, w))
                    .map_err(|_| D::Error::custom(format!("item key {k:?} is not an item id")))
            })
            .collect()
    }
}

/// Constructive representation of one agent's `v_i(X, s)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum ValuationSpec {
    /// Maximum over additive clauses.
    Xos { clauses: Vec<Clause> },
    /// Value of the best single item in the bundle.
    UnitDemand { weights: Clause },
    /// Unit-demand with per-item value `f_j(s_i) + g_j(s_{-i})`; `own` may only
    /// read the agent's own signal and `others` must ignore it.
    Separable { own: Clause, others: Clause },
}

impl ValuationSpec {
    /// `v(X, s)`.
    pub fn value(&self, bundle: &ItemSet, s: &SignalProfile) -> f64 {
        match self {
            Self::Xos { clauses } => clauses
                .iter()
                .map(|c| {
                    bundle
                        .iter()
                        .filter_map(|j| c.get(&j))
                        .map(|w| w.eval(s))
                        .sum::<f64>()
                })
                .fold(0.0, f64::max),
            Self::UnitDemand { weights } => bundle
                .iter()
                .filter_map(|j| weights.get(&j))
                .map(|w| w.eval(s))
                .fold(0.0, f64::max),
            Self::Separable { .. } => self
                .separable_argmax(bundle, s)
                .map_or(0.0, |(_, f, g)| f + g),
        }
    }

    /// Best item of a separable spec with its `(f, g)` parts; lowest id wins ties.
    fn separable_argmax(&self, bundle: &ItemSet, s: &SignalProfile) -> Option<(usize, f64, f64)> {
        let Self::Separable { own, others } = self else {
            return None;
        };
        let part = |c: &Clause, j: usize| c.get(&j).map_or(0.0, |w| w.eval(s));
        bundle
            .iter()
            .map(|j| (j, part(own, j), part(others, j)))
            .fold(None, |best, cur| match best {
                Some((_, f, g)) if f + g >= cur.1 + cur.2 => best,
                _ => Some(cur),
            })
    }

    /// `(f_i(X, s_i), g_i(X, s_{-i}))` for a separable spec, taken at the item
    /// realizing `v(X, s)`. Exact separability holds on bundles of size ≤ 1,
    /// which is every bundle a matching hands out. `None` for other families.
    pub fn separable_parts(&self, bundle: &ItemSet, s: &SignalProfile) -> Option<(f64, f64)> {
        match self {
            Self::Separable { .. } => Some(
                self.separable_argmax(bundle, s)
                    .map_or((0.0, 0.0), |(_, f, g)| (f, g)),
            ),
            _ => None,
        }
    }

    pub fn is_unit_demand(&self) -> bool {
        matches!(self, Self::UnitDemand { .. } | Self::Separable { .. })
    }

    pub fn is_separable(&self) -> bool {
        matches!(self, Self::Separable { .. })
    }

    /// Every weight is uncapped.
    pub fn is_linear(&self) -> bool {
        self.weights().all(|w| !w.is_capped())
    }

    fn weights(&self) -> Box<dyn Iterator<Item = &SignalWeight> + '_> {
        match self {
            Self::Xos { clauses } => Box::new(clauses.iter().flat_map(|c| c.values())),
            Self::UnitDemand { weights } => Box::new(weights.values()),
            Self::Separable { own, others } => Box::new(own.values().chain(others.values())),
        }
    }

    /// The set function `v(·, s)` at a fixed profile, with dense per-item tables.
    pub fn freeze(&self, s: &SignalProfile, m: usize) -> BundleValuation {
        let dense = |c: &Clause| {
            let mut w = vec![0.0; m];
            for (&j, sw) in c {
                w[j] = sw.eval(s);
            }
            w
        };
        match self {
            Self::Xos { clauses } => BundleValuation::Xos {
                clauses: clauses.iter().map(dense).collect(),
            },
            Self::UnitDemand { weights } => BundleValuation::UnitDemand {
                weights: dense(weights),
            },
            Self::Separable { own, others } => {
                let (f, g) = (dense(own), dense(others));
                BundleValuation::UnitDemand {
                    weights: f.iter().zip(&g).map(|(a, b)| a + b).collect(),
                }
            }
        }
    }

    fn validate(&self, agent: usize, n: usize, m: usize) -> Result<()> {
        let check_clause = |c: &Clause, what: &str| -> Result<()> {
            for (&j, w) in c {
                if j >= m {
                    return invalid(format!("agent {agent} {what}: item {j} >= m = {m}"));
                }
                w.validate(n, &|| format!("agent {agent} {what} item {j}"))?;
            }
            Ok(())
        };
        match self {
            Self::Xos { clauses } => {
                if clauses.is_empty() {
                    return invalid(format!("agent {agent}: xos spec needs at least one clause"));
                }
                for (c, clause) in clauses.iter().enumerate() {
                    check_clause(clause, &format!("clause {c}"))?;
                }
            }
            Self::UnitDemand { weights } => check_clause(weights, "weights")?,
            Self::Separable { own, others } => {
                check_clause(own, "own part")?;
                check_clause(others, "others part")?;
                for (&j, w) in own {
                    if w.coeffs
                        .iter()
                        .enumerate()
                        .any(|(k, &a)| k != agent && a != 0.0)
                    {
                        return invalid(format!(
                            "agent {agent} own part item {j} reads another agent's signal"
                        ));
                    }
                }
                for (&j, w) in others {
                    if w.coeffs[agent] != 0.0 {
                        return invalid(format!(
                            "agent {agent} others part item {j} reads the agent's own signal"
                        ));
                    }
                }
            }
        }
        Ok(())
    }
}

/// `v(X, s)` for a spec.
pub fn eval_valuation(spec: &ValuationSpec, bundle: &ItemSet, s: &SignalProfile) -> f64 {
    spec.value(bundle, s)
}

/// The full problem input: agents, items, valuations and true signals.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Instance {
    pub n: usize,
    pub m: usize,
    pub signals: SignalProfile,
    pub agents: Vec<ValuationSpec>,
}

impl Instance {
    pub fn new(m: usize, signals: SignalProfile, agents: Vec<ValuationSpec>) -> Result<Self> {
        let inst = Self {
            n: agents.len(),
            m,
            signals,
            agents,
        };
        inst.validate()?;
        Ok(inst)
    }

    pub fn validate(&self) -> Result<()> {
        if self.agents.len() != self.n {
            return invalid(format!(
                "{} agent specs for n = {}",
                self.agents.len(),
                self.n
            ));
        }
        if self.signals.len() != self.n {
            return invalid(format!("{} signals for n = {}", self.signals.len(), self.n));
        }
        // Deserialization bypasses SignalProfile::new.
        SignalProfile::new(self.signals.values().to_vec())?;
        for (i, spec) in self.agents.iter().enumerate() {
            spec.validate(i, self.n, self.m)?;
        }
        Ok(())
    }

    pub fn all_items(&self) -> ItemSet {
        ItemSet::full(self.m)
    }

    /// Social welfare of `bundles` at the true signals.
    pub fn welfare<'a>(&self, bundles: impl IntoIterator<Item = (&'a usize, &'a ItemSet)>) -> f64 {
        bundles
            .into_iter()
            .map(|(&i, b)| self.agents[i].value(b, &self.signals))
            .sum()
    }

    /// Frozen valuations of `agents` at profile `s`, in the order given.
    pub fn freeze_at(&self, agents: &[usize], s: &SignalProfile) -> Vec<BundleValuation> {
        agents
            .iter()
            .map(|&i| self.agents[i].freeze(s, self.m))
            .collect()
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let inst: Self = serde_json::from_str(text)?;
        inst.validate()?;
        Ok(inst)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|source| Error::Io {
            path: path.to_owned(),
            source,
        })?;
        Self::from_json(&text)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let text = serde_json::to_string_pretty(self)?;
        std::fs::write(path, text + "\n").map_err(|source| Error::Io {
            path: path.to_owned(),
            source,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn s(v: &[f64]) -> SignalProfile {
        SignalProfile::new(v.to_vec()).unwrap()
    }

    #[test]
    fn masking() {
        let p = s(&[3.0, 5.0, 2.0]);
        assert_eq!(mask_signals(&p, &[0, 1, 2]).unwrap(), p);
        assert_eq!(mask_signals(&p, &[]).unwrap(), s(&[0.0, 0.0, 0.0]));
        assert_eq!(mask_signals(&p, &[1]).unwrap(), s(&[0.0, 5.0, 0.0]));
        assert!(matches!(
            mask_signals(&p, &[3]),
            Err(Error::InvalidInput(_))
        ));
    }

    #[test]
    fn rejects_bad_signals() {
        assert!(SignalProfile::new(vec![1.0, -0.5]).is_err());
        assert!(SignalProfile::new(vec![f64::NAN]).is_err());
        assert!(SignalProfile::new(vec![f64::INFINITY]).is_err());
    }

    #[test]
    fn single_clause_is_additive() {
        let clause: Clause = [
            (1, SignalWeight::constant(2, 2.0)),
            (2, SignalWeight::constant(2, 3.0)),
        ]
        .into_iter()
        .collect();
        let spec = ValuationSpec::Xos {
            clauses: vec![clause],
        };
        assert_eq!(spec.value(&ItemSet::from([1, 2]), &s(&[0.4, 0.9])), 5.0);
    }

    #[test]
    fn unit_demand_takes_best_item() {
        let weights: Clause = [
            (1, SignalWeight::linear(vec![1.0, 0.0], 0.0)),
            (2, SignalWeight::linear(vec![0.0, 2.0], 0.0)),
        ]
        .into_iter()
        .collect();
        let spec = ValuationSpec::UnitDemand { weights };
        assert_eq!(spec.value(&ItemSet::from([1, 2]), &s(&[4.0, 1.0])), 4.0);
    }

    #[test]
    fn empty_bundle_is_zero() {
        let w = SignalWeight::linear(vec![1.0, 1.0], 7.0);
        let one: Clause = [(0, w)].into_iter().collect();
        let specs = [
            ValuationSpec::Xos {
                clauses: vec![one.clone()],
            },
            ValuationSpec::UnitDemand {
                weights: one.clone(),
            },
            ValuationSpec::Separable {
                own: one.clone(),
                others: Clause::new(),
            },
        ];
        for spec in &specs {
            assert_eq!(spec.value(&ItemSet::new(), &s(&[1.0, 2.0])), 0.0);
        }
    }

    #[test]
    fn capped_weight_clamps() {
        let w = SignalWeight::capped(vec![1.0, 1.0], 0.5, 2.0);
        assert_eq!(w.eval(&s(&[0.25, 0.5])), 1.25);
        assert_eq!(w.eval(&s(&[3.0, 3.0])), 2.0);
    }

    #[test]
    fn separable_parts_split_the_value() {
        let own: Clause = [(0, SignalWeight::linear(vec![2.0, 0.0], 1.0))]
            .into_iter()
            .collect();
        let others: Clause = [(0, SignalWeight::capped(vec![0.0, 1.0], 0.0, 0.5))]
            .into_iter()
            .collect();
        let spec = ValuationSpec::Separable { own, others };
        let p = s(&[1.0, 4.0]);
        let b = ItemSet::singleton(0);
        assert_eq!(spec.separable_parts(&b, &p), Some((3.0, 0.5)));
        assert_eq!(spec.value(&b, &p), 3.5);
        assert_eq!(spec.separable_parts(&ItemSet::new(), &p), Some((0.0, 0.0)));
    }

    #[test]
    fn validation_catches_shape_errors() {
        let sig = s(&[1.0, 1.0]);
        let bad_item = ValuationSpec::UnitDemand {
            weights: [(5, SignalWeight::constant(2, 1.0))].into_iter().collect(),
        };
        assert!(Instance::new(3, sig.clone(), vec![bad_item.clone(), bad_item]).is_err());
        let no_clauses = ValuationSpec::Xos { clauses: vec![] };
        assert!(Instance::new(3, sig.clone(), vec![no_clauses.clone(), no_clauses]).is_err());
        let leaky_own = ValuationSpec::Separable {
            own: [(0, SignalWeight::linear(vec![1.0, 1.0], 0.0))]
                .into_iter()
                .collect(),
            others: Clause::new(),
        };
        let ok = ValuationSpec::UnitDemand {
            weights: Clause::new(),
        };
        assert!(Instance::new(1, sig.clone(), vec![leaky_own, ok.clone()]).is_err());
        let negative = ValuationSpec::UnitDemand {
            weights: [(0, SignalWeight::constant(2, -1.0))].into_iter().collect(),
        };
        assert!(Instance::new(1, sig, vec![negative, ok]).is_err());
    }

    #[test]
    fn json_format() {
        let text = r#"{
            "n": 2, "m": 2, "signals": [0.5, 1.0],
            "agents": [
                {"type": "xos", "clauses": [{"0": {"coeffs": [1, 0], "const": 0.5}}]},
                {"type": "separable",
                 "own": {"1": {"coeffs": [0, 2], "const": 0}},
                 "others": {"1": {"coeffs": [1, 0], "const": 0, "cap": 0.25}}}
            ]
        }"#;
        let inst = Instance::from_json(text).unwrap();
        assert_eq!(
            inst.agents[0].value(&ItemSet::from([0, 1]), &inst.signals),
            1.0
        );
        assert_eq!(
            inst.agents[1].value(&ItemSet::from([1]), &inst.signals),
            2.25
        );
        let again = Instance::from_json(&serde_json::to_string(&inst).unwrap()).unwrap();
        assert_eq!(again, inst);

        let negative = text.replace("[0.5, 1.0]", "[-0.5, 1.0]");
        assert!(Instance::from_json(&negative).is_err());
        let nan = text.replace("[0.5, 1.0]", "[NaN, 1.0]");
        assert!(Instance::from_json(&nan).is_err());
    }
}
