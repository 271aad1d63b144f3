use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;

use itertools::Itertools;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::GeneratorParams;
use crate::error::{invalid, Error, Result};
use crate::mechanism::run_mechanism;
use crate::offline_opt::opt_auto;
use crate::sampling::{random_permutation, trial_rng};
use crate::secretary::{
    run_blackbox_framework, sample_size_e, sample_size_half, ArrivalOrder, OnlineAlgorithm, Rei19,
    StaticInstance, StepOptima, MAX_EXACT_AGENTS,
};
use crate::valuations::Instance;

/// Default Monte Carlo trial count.
pub const DEFAULT_TRIALS: u64 = 10_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AlgorithmChoice {
    /// Sample-then-greedy, `k = ⌊n/e⌋`.
    Alg1,
    /// Sample-then-greedy, `k = ⌊n/2⌋`.
    Alg2,
    /// Proxy framework with the matching subroutine as black box.
    Framework,
    /// Matching subroutine on the instance frozen at the true signals.
    Rei19,
    /// Truthful mechanism, everyone reporting truthfully.
    Mechanism,
}

impl AlgorithmChoice {
    pub const ALL: [AlgorithmChoice; 5] = [
        AlgorithmChoice::Alg1,
        AlgorithmChoice::Alg2,
        AlgorithmChoice::Framework,
        AlgorithmChoice::Rei19,
        AlgorithmChoice::Mechanism,
    ];

    pub fn name(self) -> &'static str {
        match self {
            AlgorithmChoice::Alg1 => "alg1",
            AlgorithmChoice::Alg2 => "alg2",
            AlgorithmChoice::Framework => "framework",
            AlgorithmChoice::Rei19 => "rei19",
            AlgorithmChoice::Mechanism => "mechanism",
        }
    }
}

impl fmt::Display for AlgorithmChoice {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for AlgorithmChoice {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|a| a.name() == s)
            .ok_or_else(|| Error::InvalidInput(format!("unknown algorithm {s:?}")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    MonteCarlo,
    /// Average over all `n!` orders.
    ExactOrders,
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Mode::MonteCarlo => "monte_carlo",
            Mode::ExactOrders => "exact_orders",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InstanceSource {
    File(PathBuf),
    Generated { params: GeneratorParams, seed: u64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub source: Option<InstanceSource>,
    pub algorithm: AlgorithmChoice,
    pub trials: u64,
    pub seed: u64,
    pub mode: Mode,
}

impl ExperimentConfig {
    pub fn monte_carlo(algorithm: AlgorithmChoice, trials: u64, seed: u64) -> Self {
        Self {
            source: None,
            algorithm,
            trials,
            seed,
            mode: Mode::MonteCarlo,
        }
    }

    pub fn exact(algorithm: AlgorithmChoice) -> Self {
        Self {
            source: None,
            algorithm,
            trials: 1,
            seed: 0,
            mode: Mode::ExactOrders,
        }
    }

    pub fn validate(&self, n: usize) -> Result<()> {
        if self.trials == 0 {
            return invalid("trials must be >= 1");
        }
        if self.mode == Mode::ExactOrders && n > MAX_EXACT_AGENTS {
            return Err(Error::Capability {
                what: "exact-orders mode (n! orders)",
                required: n as u128,
                limit: MAX_EXACT_AGENTS as u128,
            });
        }
        Ok(())
    }
}

/// Summary of `ALG / OPT` over orders.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RatioStats {
    pub mean: f64,
    pub std_error: f64,
    pub ci95_half_width: f64,
    pub min: f64,
    pub max: f64,
    /// Orders evaluated (`n!` in exact mode).
    pub trials: u64,
    /// `OPT([n])` at the true signals.
    pub opt_value: f64,
}

impl RatioStats {
    /// Normal-approximation statistics; `exact` zeroes the sampling error.
    pub fn from_ratios(ratios: &[f64], opt_value: f64, exact: bool) -> Self {
        let k = ratios.len() as f64;
        let mean = ratios.iter().sum::<f64>() / k;
        let std_error = if exact || ratios.len() < 2 {
            0.0
        } else {
            let var = ratios.iter().map(|r| (r - mean).powi(2)).sum::<f64>() / (k - 1.0);
            (var / k).sqrt()
        };
        Self {
            mean,
            std_error,
            ci95_half_width: 1.96 * std_error,
            min: ratios.iter().copied().fold(f64::INFINITY, f64::min),
            max: ratios.iter().copied().fold(f64::NEG_INFINITY, f64::max),
            trials: ratios.len() as u64,
            opt_value,
        }
    }
}

/// `welfare(order)` for every order the mode prescribes, in a fixed sequence.
pub fn collect_over_orders(
    n: usize,
    mode: Mode,
    trials: u64,
    seed: u64,
    welfare: impl Fn(&ArrivalOrder) -> Result<f64> + Sync,
) -> Result<Vec<f64>> {
    match mode {
        Mode::ExactOrders => {
            if n > MAX_EXACT_AGENTS {
                return Err(Error::Capability {
                    what: "exact-orders mode (n! orders)",
                    required: n as u128,
                    limit: MAX_EXACT_AGENTS as u128,
                });
            }
            let orders: Vec<Vec<usize>> = (0..n).permutations(n).collect();
            orders
                .into_par_iter()
                .map(|o| welfare(&ArrivalOrder::new(o)?))
                .collect()
        }
        Mode::MonteCarlo => (0..trials)
            .into_par_iter()
            .map(|trial| {
                let order = ArrivalOrder::new(random_permutation(n, &mut trial_rng(seed, trial)))?;
                welfare(&order)
            })
            .collect(),
    }
}

fn ratio(welfare: f64, opt: f64) -> f64 {
    if opt > 0.0 {
        welfare / opt
    } else {
        1.0
    }
}

/// Competitive-ratio statistics of the configured algorithm on `inst`.
pub fn estimate_ratio(inst: &Instance, config: &ExperimentConfig) -> Result<RatioStats> {
    config.validate(inst.n)?;
    let agents: Vec<usize> = (0..inst.n).collect();
    let opt = opt_auto(
        &agents,
        &inst.freeze_at(&agents, &inst.signals),
        &inst.all_items(),
    )?
    .value;
    let optima = StepOptima::new(inst);
    let frozen = StaticInstance {
        m: inst.m,
        oracles: inst.freeze_at(&agents, &inst.signals),
    };
    let welfare = |order: &ArrivalOrder| -> Result<f64> {
        Ok(match config.algorithm {
            AlgorithmChoice::Alg1 => optima.run(order, sample_size_e(inst.n))?.welfare,
            AlgorithmChoice::Alg2 => optima.run(order, sample_size_half(inst.n))?.welfare,
            AlgorithmChoice::Framework => {
                run_blackbox_framework(inst, order, &Rei19::default())?.welfare
            }
            AlgorithmChoice::Rei19 => Rei19::default().run(&frozen, order)?.welfare,
            AlgorithmChoice::Mechanism => run_mechanism(inst, order, &inst.signals)?.welfare,
        })
    };
    let ratios: Vec<f64> =
        collect_over_orders(inst.n, config.mode, config.trials, config.seed, welfare)?
            .into_iter()
            .map(|w| ratio(w, opt))
            .collect();
    Ok(RatioStats::from_ratios(
        &ratios,
        opt,
        config.mode == Mode::ExactOrders,
    ))
}

/// Same statistics for a classical online algorithm on a fixed-weight instance.
pub fn estimate_static_ratio(
    inst: &StaticInstance,
    alg: &dyn OnlineAlgorithm,
    mode: Mode,
    trials: u64,
    seed: u64,
) -> Result<RatioStats> {
    if trials == 0 {
        return invalid("trials must be >= 1");
    }
    let opt = inst.optimum()?;
    let ratios: Vec<f64> = collect_over_orders(inst.n(), mode, trials, seed, |o| {
        Ok(alg.run(inst, o)?.welfare)
    })?
    .into_iter()
    .map(|w| ratio(w, opt))
    .collect();
    Ok(RatioStats::from_ratios(
        &ratios,
        opt,
        mode == Mode::ExactOrders,
    ))
}
