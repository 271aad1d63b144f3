use std::fmt;
use std::str::FromStr;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::secretary::StaticInstance;
use crate::valuations::{Clause, Instance, SignalProfile, SignalWeight, ValuationSpec};

/// Valuation families the generator can emit.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Family {
    /// XOS over items, uncapped affine weights: XOS over signals.
    XosLinear,
    /// XOS over items, capped affine weights: subadditive over signals.
    XosCapped,
    /// Unit-demand, uncapped affine weights.
    UnitDemandLinear,
    /// Separable unit-demand, uncapped parts.
    SeparableLinear,
    /// Separable unit-demand, capped parts: subadditive over signals.
    SeparableCapped,
    /// One additive clause with weights bounded away from 0.
    AdditivePositive,
}

impl Family {
    pub const ALL: [Family; 6] = [
        Family::XosLinear,
        Family::XosCapped,
        Family::UnitDemandLinear,
        Family::SeparableLinear,
        Family::SeparableCapped,
        Family::AdditivePositive,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Family::XosLinear => "xos_linear",
            Family::XosCapped => "xos_capped",
            Family::UnitDemandLinear => "unit_demand_linear",
            Family::SeparableLinear => "separable_linear",
            Family::SeparableCapped => "separable_capped",
            Family::AdditivePositive => "additive_positive",
        }
    }

    pub fn is_separable(self) -> bool {
        matches!(self, Family::SeparableLinear | Family::SeparableCapped)
    }

    pub fn is_capped(self) -> bool {
        matches!(self, Family::XosCapped | Family::SeparableCapped)
    }
}

impl fmt::Display for Family {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Family {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        Family::ALL
            .into_iter()
            .find(|f| f.name() == s)
            .ok_or_else(|| Error::InvalidInput(format!("unknown family {s:?}")))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GeneratorParams {
    pub n: usize,
    pub m: usize,
    pub family: Family,
    /// Clauses per XOS agent.
    #[serde(default = "default_clauses")]
    pub clauses: usize,
    /// Signals are i.i.d. uniform on `[0, signal_max]`.
    #[serde(default = "default_signal_max")]
    pub signal_max: f64,
}

fn default_clauses() -> usize {
    3
}

fn default_signal_max() -> f64 {
    1.0
}

impl GeneratorParams {
    pub fn new(n: usize, m: usize, family: Family) -> Self {
        Self {
            n,
            m,
            family,
            clauses: default_clauses(),
            signal_max: default_signal_max(),
        }
    }

    fn validate(&self) -> Result<()> {
        if self.n == 0 || self.m == 0 {
            return invalid(format!(
                "need n, m >= 1 (got n = {}, m = {})",
                self.n, self.m
            ));
        }
        if self.family.is_separable() && self.n < 2 {
            return invalid("separable families need n >= 2");
        }
        if matches!(self.family, Family::XosLinear | Family::XosCapped) && self.clauses == 0 {
            return invalid("XOS families need at least one clause");
        }
        if !(self.signal_max.is_finite() && self.signal_max >= 0.0) {
            return invalid("signal_max must be finite and >= 0");
        }
        Ok(())
    }
}

struct Draw<'a> {
    rng: &'a mut ChaCha8Rng,
    n: usize,
    signal_max: f64,
    capped: bool,
}

impl Draw<'_> {
    /// Affine weight with U[0,1] coefficients on the agents `keep` admits.
    fn weight(&mut self, constant: f64, keep: impl Fn(usize) -> bool) -> SignalWeight {
        let coeffs: Vec<f64> = (0..self.n)
            .map(|k| {
                if keep(k) {
                    self.rng.random::<f64>()
                } else {
                    0.0
                }
            })
            .collect();
        if !self.capped {
            return SignalWeight::linear(coeffs, constant);
        }
        let expected = constant + 0.5 * self.signal_max * coeffs.iter().sum::<f64>();
        let cap = self.rng.random_range(0.5..=1.5) * expected;
        SignalWeight::capped(coeffs, constant, cap)
    }
}

/// Deterministic in `(params, seed)`.
pub fn generate_instance(params: &GeneratorParams, seed: u64) -> Result<Instance> {
    params.validate()?;
    let GeneratorParams {
        n,
        m,
        family,
        clauses,
        signal_max,
    } = *params;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let signals: Vec<f64> = (0..n).map(|_| rng.random::<f64>() * signal_max).collect();
    let mut d = Draw {
        rng: &mut rng,
        n,
        signal_max,
        capped: family.is_capped(),
    };
    let agents = (0..n)
        .map(|i| match family {
            Family::XosLinear | Family::XosCapped => ValuationSpec::Xos {
                clauses: (0..clauses)
                    .map(|_| {
                        (0..m)
                            .map(|j| {
                                let c = d.rng.random::<f64>();
                                (j, d.weight(c, |_| true))
                            })
                            .collect::<Clause>()
                    })
                    .collect(),
            },
            Family::UnitDemandLinear => ValuationSpec::UnitDemand {
                weights: (0..m)
                    .map(|j| {
                        let c = d.rng.random::<f64>();
                        (j, d.weight(c, |_| true))
                    })
                    .collect(),
            },
            Family::SeparableLinear | Family::SeparableCapped => {
                let mut own = Clause::new();
                let mut others = Clause::new();
                for j in 0..m {
                    let c = d.rng.random::<f64>();
                    own.insert(j, d.weight(c, |k| k == i));
                    others.insert(j, d.weight(0.0, |k| k != i));
                }
                ValuationSpec::Separable { own, others }
            }
            Family::AdditivePositive => ValuationSpec::Xos {
                clauses: vec![(0..m)
                    .map(|j| {
                        let c = d.rng.random_range(0.1..=1.0);
                        (j, d.weight(c, |_| true))
                    })
                    .collect()],
            },
        })
        .collect();
    Instance::new(m, SignalProfile::new(signals)?, agents)
}

/// Unit-demand instance without interdependence, weights i.i.d. U[0,1].
pub fn random_weight_matrix(n: usize, m: usize, seed: u64) -> Result<StaticInstance> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let weights = (0..n)
        .map(|_| (0..m).map(|_| rng.random::<f64>()).collect())
        .collect();
    StaticInstance::from_weights(weights)
}
