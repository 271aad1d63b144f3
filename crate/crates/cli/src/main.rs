//! `secretary`: generate instances, run online allocation experiments, and
//! audit truthfulness and structural properties.
//!
//! Exit codes: 0 all checks pass, 2 a verified property is violated,
//! 1 usage, input or capability error.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use secretary_core::harness::{
    estimate_ratio, export_report, generate_instance, AlgorithmChoice, ExperimentConfig, Family,
    GeneratorParams, InstanceSource, Mode, Report, ReportFormat, ReportRow, DEFAULT_TRIALS,
};
use secretary_core::mechanism::{
    check_epic, check_random_sampling_bound, deviation_grid, run_mechanism, second_sample_size,
    MAX_EXACT_SAMPLING_AGENTS,
};
use secretary_core::sampling::trial_rng;
use secretary_core::secretary::{
    alpha_profile, alpha_sum_check, sample_size_e, sample_size_half, survival_probability,
    ArrivalOrder, EstimationMode, DEFAULT_ALPHA_SLACK, MAX_EXACT_AGENTS,
};
use secretary_core::valuations::{
    check_monotone, check_subadditive_over_signals, check_xos_over_items, check_xos_over_signals,
    probability_grid, MAX_SUBADDITIVE_AGENTS, MAX_XOS_ITEMS, MAX_XOS_SIGNAL_AGENTS, TOL,
};
use secretary_core::{Error, Instance};

const VIOLATION: u8 = 2;

#[derive(Parser)]
#[command(
    name = "secretary",
    version,
    about = "Online allocation with interdependent valuations"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Write a random instance as JSON.
    Generate(GenerateArgs),
    /// Estimate an algorithm's ALG/OPT ratio over arrival orders.
    Run(RunArgs),
    /// Audit the mechanism's incentive compatibility on random orders.
    Audit(AuditArgs),
    /// Run the structural and probabilistic checkers on an instance.
    Check(CheckArgs),
}

#[derive(Args)]
struct GenerateArgs {
    #[arg(long)]
    n: usize,
    #[arg(long)]
    m: usize,
    /// xos_linear, xos_capped, unit_demand_linear, separable_linear, separable_capped, additive_positive
    #[arg(long)]
    family: Family,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Clauses per XOS agent.
    #[arg(long, default_value_t = 3)]
    clauses: usize,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct RunArgs {
    #[arg(long)]
    instance: PathBuf,
    /// alg1, alg2, framework, rei19, mechanism
    #[arg(long)]
    alg: AlgorithmChoice,
    #[arg(long, default_value_t = DEFAULT_TRIALS)]
    trials: u64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Average over all n! orders instead of sampling.
    #[arg(long)]
    exact: bool,
    #[arg(long)]
    report: Option<PathBuf>,
    #[arg(long, default_value = "json")]
    format: ReportFormat,
}

#[derive(Args)]
struct AuditArgs {
    #[arg(long)]
    instance: PathBuf,
    #[arg(long, default_value_t = 21)]
    grid_points: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Random arrival orders to audit.
    #[arg(long, default_value_t = 20)]
    orders: u64,
    /// Refinement passes around the best deviation.
    #[arg(long, default_value_t = 2)]
    refine: usize,
}

#[derive(Args)]
struct CheckArgs {
    #[arg(long)]
    instance: PathBuf,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Monte Carlo trials where exact enumeration is out of reach.
    #[arg(long, default_value_t = 2000)]
    trials: u64,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(1)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    let result = match cli.command {
        Command::Generate(a) => generate(a),
        Command::Run(a) => run(a),
        Command::Audit(a) => audit(a),
        Command::Check(a) => check(a),
    };
    match result {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}

fn generate(a: GenerateArgs) -> Result<u8, Error> {
    let params = GeneratorParams {
        clauses: a.clauses,
        ..GeneratorParams::new(a.n, a.m, a.family)
    };
    generate_instance(&params, a.seed)?.save(&a.out)?;
    println!(
        "wrote {} (n = {}, m = {}, family {})",
        a.out.display(),
        a.n,
        a.m,
        a.family
    );
    Ok(0)
}

fn run(a: RunArgs) -> Result<u8, Error> {
    let inst = Instance::load(&a.instance)?;
    let config = ExperimentConfig {
        source: Some(InstanceSource::File(a.instance.clone())),
        algorithm: a.alg,
        trials: a.trials,
        seed: a.seed,
        mode: if a.exact {
            Mode::ExactOrders
        } else {
            Mode::MonteCarlo
        },
    };
    let stats = estimate_ratio(&inst, &config)?;
    println!(
        "{} on {}: mean ALG/OPT {:.6} ± {:.6} (95%), min {:.6}, max {:.6}, {} orders, OPT {:.6}",
        a.alg,
        a.instance.display(),
        stats.mean,
        stats.ci95_half_width,
        stats.min,
        stats.max,
        stats.trials,
        stats.opt_value
    );
    let code = if stats.max > 1.0 + TOL {
        println!("FAIL ratio above 1: the online allocation beat the offline optimum");
        VIOLATION
    } else {
        0
    };
    if let Some(path) = &a.report {
        let row = ReportRow {
            instance: a.instance.display().to_string(),
            stats,
        };
        export_report(&Report::new(config, vec![row]), path, a.format)?;
        println!("report written to {}", path.display());
    }
    Ok(code)
}

fn audit(a: AuditArgs) -> Result<u8, Error> {
    let inst = Instance::load(&a.instance)?;
    let n = inst.n;
    let skip = sample_size_half(n) + second_sample_size(n);
    let (mut audits, mut violations, mut ir_fails) = (0u64, 0u64, 0u64);
    for o in 0..a.orders {
        let order = ArrivalOrder::random(n, &mut trial_rng(a.seed, o));
        let truthful = run_mechanism(&inst, &order, &inst.signals)?;
        for (agent, u) in &truthful.utilities {
            if *u < -TOL {
                ir_fails += 1;
                println!(
                    "FAIL negative truthful utility: order {:?}, agent {agent}, utility {u}",
                    order.as_slice()
                );
            }
        }
        for &agent in &order.as_slice()[skip.min(n)..] {
            let grid = deviation_grid(inst.signals.get(agent), a.grid_points);
            let report = check_epic(&inst, &order, agent, &grid, a.refine)?;
            audits += 1;
            if !report.passed() {
                violations += 1;
                println!(
                    "FAIL order {:?}: {}",
                    order.as_slice(),
                    serde_json::to_string(&report).map_err(Error::from)?
                );
            }
        }
    }
    println!(
        "{} audits over {} orders: {violations} incentive violations, {ir_fails} negative utilities",
        audits, a.orders
    );
    Ok(if violations + ir_fails > 0 {
        VIOLATION
    } else {
        0
    })
}

struct Tally {
    fails: u32,
}

impl Tally {
    fn pass(&self, name: &str, detail: impl AsRef<str>) {
        println!("PASS {name}: {}", detail.as_ref());
    }

    fn fail(&mut self, name: &str, detail: impl AsRef<str>) {
        self.fails += 1;
        println!("FAIL {name}: {}", detail.as_ref());
    }

    fn skip(&self, name: &str, detail: impl AsRef<str>) {
        println!("SKIP {name}: {}", detail.as_ref());
    }

    fn record(&mut self, name: &str, ok: bool, detail: impl AsRef<str>) {
        if ok {
            self.pass(name, detail)
        } else {
            self.fail(name, detail)
        }
    }
}

fn json<T: serde::Serialize>(value: &T) -> String {
    serde_json::to_string(value).unwrap_or_else(|e| format!("<unserializable: {e}>"))
}

fn check(a: CheckArgs) -> Result<u8, Error> {
    let inst = Instance::load(&a.instance)?;
    let (n, m) = (inst.n, inst.m);
    let all = inst.all_items();
    let mut t = Tally { fails: 0 };
    let grid = probability_grid(10);
    let mut subadditive = true;

    for (i, spec) in inst.agents.iter().enumerate() {
        let mono = check_monotone(spec, n, m, &inst.signals, 1 << 16, a.seed);
        match mono.witness() {
            None => t.pass(&format!("agent {i} monotone"), "no violating pair"),
            Some(w) => t.fail(&format!("agent {i} monotone"), json(w)),
        }
        if n <= MAX_SUBADDITIVE_AGENTS {
            let r = check_subadditive_over_signals(spec, &all, &inst.signals)?;
            subadditive &= r.passed();
            match r.witness() {
                None => t.pass(
                    &format!("agent {i} subadditive over signals"),
                    "every split",
                ),
                Some(w) => t.fail(&format!("agent {i} subadditive over signals"), json(w)),
            }
        } else {
            subadditive = false;
            t.skip(
                &format!("agent {i} subadditive over signals"),
                format!("n > {MAX_SUBADDITIVE_AGENTS}"),
            );
        }
        if n <= MAX_XOS_SIGNAL_AGENTS {
            // a failure only says this valuation is not XOS over signals, which capped families need not be
            let r = check_xos_over_signals(spec, &all, &inst.signals, &grid)?;
            match r.witness() {
                None => t.pass(&format!("agent {i} XOS over signals"), "every grid level"),
                Some(w) if spec.is_linear() => {
                    t.fail(&format!("agent {i} XOS over signals"), json(w))
                }
                Some(w) => t.skip(
                    &format!("agent {i} XOS over signals"),
                    format!("capped weights, not XOS: {}", json(w)),
                ),
            }
        }
        if m <= MAX_XOS_ITEMS {
            let r = check_xos_over_items(spec, &inst.signals, &all)?;
            match r.witness() {
                None => t.pass(
                    &format!("agent {i} XOS over items"),
                    "every subset has a supporting clause",
                ),
                Some(w) => t.fail(&format!("agent {i} XOS over items"), json(w)),
            }
        }
    }

    // item survival under sample-then-greedy with k = ⌊n/e⌋
    let k = sample_size_e(n);
    let mode = if n <= MAX_EXACT_AGENTS {
        EstimationMode::Exact
    } else {
        EstimationMode::MonteCarlo {
            trials: a.trials,
            seed: a.seed,
        }
    };
    let slack = if n <= MAX_EXACT_AGENTS {
        TOL
    } else {
        3.0 / (a.trials as f64).sqrt()
    };
    let mut worst: Option<(usize, usize, f64)> = None;
    for item in 0..m {
        for step in k.max(1)..=n {
            let p = survival_probability(&inst, item, step, k, mode)?.probability;
            let gap = p - k as f64 / step as f64;
            if worst.is_none_or(|w| gap < w.2) {
                worst = Some((item, step, gap));
            }
        }
    }
    if let Some((item, step, gap)) = worst {
        t.record(
            "item survival >= k/t",
            gap >= -slack,
            format!("k = {k}; smallest margin {gap:.3e} at item {item}, t = {step}"),
        );
    }

    // random-sampling proxy bound
    if !subadditive {
        t.skip(
            "random-sampling proxy bound",
            "needs valuations subadditive over signals",
        );
    } else {
        let mode = if n <= MAX_EXACT_SAMPLING_AGENTS {
            EstimationMode::Exact
        } else {
            EstimationMode::MonteCarlo {
                trials: a.trials,
                seed: a.seed,
            }
        };
        let b = check_random_sampling_bound(&inst, mode)?;
        t.record(
            "random-sampling proxy bound",
            b.pass,
            format!(
                "E[OPT(proxy)] = {:.6} vs OPT/4 = {:.6} over {} samples",
                b.lhs, b.rhs, b.samples
            ),
        );
    }

    // harmonic-sum inequality on each agent's masked-value profile
    if n < 3 {
        t.skip("harmonic sum", "needs n >= 3");
    } else {
        for i in 0..n {
            let name = format!("agent {i} harmonic sum");
            match alpha_profile(&inst, i)
                .and_then(|alpha| alpha_sum_check(&alpha, DEFAULT_ALPHA_SLACK))
            {
                Ok(r) => t.record(
                    &name,
                    r.pass,
                    format!("lhs {:.6} vs threshold {:.6}", r.lhs, r.threshold),
                ),
                Err(Error::InvalidInput(msg)) => t.skip(&name, msg),
                Err(e @ Error::Capability { .. }) => t.skip(&name, e.to_string()),
                Err(e) => return Err(e),
            }
        }
    }

    println!("{} failing checks", t.fails);
    Ok(if t.fails > 0 { VIOLATION } else { 0 })
}
