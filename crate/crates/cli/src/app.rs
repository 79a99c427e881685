//! Argument parsing and the five subcommands.

use std::path::PathBuf;

use anyhow::{anyhow, bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use linsel_core::design::accept_best as accept_best_solution;
use linsel_core::sim::misspecified_reference_bounds;
use linsel_core::{
    complexity_report, compute_iota_star, misspec_profile, r_d, reference_bounds, rho_design,
    run_batch, AlgorithmSpec, BatchConfig, BudgetQuery, Instance, Noise, RoundingRule,
};
use serde::Serialize;

use crate::config::{ExperimentConfig, InstanceSpec};
use crate::output::{num, opt_int, opt_num, render_trace, Header, Sink, Table};
use crate::suites::{run_suite, SuiteOptions, SuiteReport, SUITES};

#[derive(Debug, Parser)]
#[command(
    name = "linsel",
    version,
    about = "Model selection for pure-exploration linear bandits"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Complexity measures for every truncation d = 1..D.
    Complexity(Common),
    /// Solve one experimental design.
    Design(DesignArgs),
    /// Misspecification profile: Chebyshev fits, gamma(d) and d*(eps).
    Misspec(MisspecArgs),
    /// Run a Monte Carlo batch of one algorithm.
    Run(RunArgs),
    /// Run property suites; exits nonzero on any violation.
    Validate(ValidateArgs),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Generator {
    Hard,
    Unverifiable,
    Random,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum RuleArg {
    Quadratic,
    Linear,
}

fn parse_noise(s: &str) -> Result<Noise, String> {
    match s {
        "gaussian" => Ok(Noise::Gaussian),
        "none" => Ok(Noise::None),
        _ => match s.strip_prefix("bounded:") {
            Some(b) => b
                .parse()
                .map(|b| Noise::Bounded { b })
                .map_err(|e| format!("bad bound in {s:?}: {e}")),
            None => Err(format!("expected gaussian, none or bounded:<b>, got {s:?}")),
        },
    }
}

/// Flags shared by every subcommand. Each one overrides the config file.
#[derive(Clone, Debug, Default, Args)]
pub struct Common {
    /// Experiment config (JSON).
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub trials: Option<u64>,
    /// Output directory; without it the JSON report goes to stdout.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Write per-trial traces as JSON lines.
    #[arg(long)]
    pub trace: bool,
    #[arg(long)]
    pub zeta: Option<f64>,
    #[arg(long)]
    pub delta: Option<f64>,
    /// Accuracy level for the misspecified measures.
    #[arg(long)]
    pub eps: Option<f64>,
    /// gaussian, none or bounded:<b>.
    #[arg(long, value_parser = parse_noise)]
    pub noise: Option<Noise>,
    #[arg(long, value_enum)]
    pub rounding: Option<RuleArg>,
    /// Collapse repeated fixed-budget candidates before validation.
    #[arg(long)]
    pub dedup: bool,
    #[arg(long)]
    pub tol: Option<f64>,
    #[arg(long)]
    pub max_iter: Option<usize>,
    #[arg(long)]
    pub pull_cap: Option<u64>,
    /// Instance JSON file.
    #[arg(long, conflicts_with = "generator")]
    pub instance: Option<PathBuf>,
    #[arg(long, value_enum)]
    pub generator: Option<Generator>,
    #[arg(long)]
    pub d_star: Option<usize>,
    /// Gap of the second-best arm in the hard instance.
    #[arg(long)]
    pub gap: Option<f64>,
    #[arg(long)]
    pub extra_arm: bool,
    #[arg(long)]
    pub dim: Option<usize>,
    #[arg(long)]
    pub arms: Option<usize>,
    /// Seed of the random instance generator.
    #[arg(long)]
    pub instance_seed: Option<u64>,
}

impl Common {
    /// Config file (or defaults) with every given flag applied.
    pub fn resolve(&self) -> Result<ExperimentConfig> {
        let mut cfg = match &self.config {
            Some(p) => ExperimentConfig::load(p)?,
            None => ExperimentConfig::default(),
        };
        if let Some(v) = self.seed {
            cfg.seed = v;
        }
        if let Some(v) = self.trials {
            cfg.trials = v;
        }
        if let Some(v) = &self.out {
            cfg.out = Some(v.clone());
        }
        cfg.trace |= self.trace;
        cfg.dedup_candidates |= self.dedup;
        if let Some(v) = self.zeta {
            cfg.zeta = v;
        }
        if let Some(v) = self.delta {
            cfg.delta = v;
        }
        if let Some(v) = self.eps {
            cfg.eps = Some(v);
        }
        if let Some(v) = self.noise {
            cfg.noise = v;
        }
        if let Some(v) = self.rounding {
            cfg.rounding = match v {
                RuleArg::Quadratic => RoundingRule::Quadratic,
                RuleArg::Linear => RoundingRule::Linear,
            };
        }
        if let Some(v) = self.tol {
            cfg.solver.tol = v;
        }
        if let Some(v) = self.max_iter {
            cfg.solver.max_iter = v;
        }
        if let Some(v) = self.pull_cap {
            cfg.pull_cap = Some(v);
        }
        if let Some(spec) = self.instance_spec(&cfg.instance)? {
            cfg.instance = spec;
        }
        cfg.validate()?;
        Ok(cfg)
    }

    fn instance_spec(&self, base: &InstanceSpec) -> Result<Option<InstanceSpec>> {
        if let Some(path) = &self.instance {
            return Ok(Some(InstanceSpec::File { path: path.clone() }));
        }
        let Some(generator) = self.generator else {
            if self.d_star.is_some()
                || self.gap.is_some()
                || self.dim.is_some()
                || self.arms.is_some()
            {
                bail!("instance parameters need --generator");
            }
            return Ok(None);
        };
        let need = |v: Option<usize>, flag: &str| {
            v.ok_or_else(|| anyhow!("--generator {generator:?} needs --{flag}"))
        };
        Ok(Some(match generator {
            Generator::Hard => InstanceSpec::Hard {
                d_star: need(self.d_star, "d-star")?,
                eps: self
                    .gap
                    .ok_or_else(|| anyhow!("--generator hard needs --gap"))?,
                extra_arm: self.extra_arm,
            },
            Generator::Unverifiable => InstanceSpec::Unverifiable {
                dim: need(self.dim, "dim")?,
            },
            Generator::Random => {
                let seed = match base {
                    InstanceSpec::Random { seed, .. } => *seed,
                    _ => 0,
                };
                InstanceSpec::Random {
                    seed: self.instance_seed.unwrap_or(seed),
                    arms: need(self.arms, "arms")?,
                    dim: need(self.dim, "dim")?,
                    d_star: need(self.d_star, "d-star")?,
                }
            }
        }))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Objective {
    /// `iota*_d`: all target pairs.
    Iota,
    /// `rho*_d(eps)`: gap-weighted directions from `z*`.
    Rho,
}

#[derive(Debug, Args)]
pub struct DesignArgs {
    #[command(flatten)]
    pub common: Common,
    /// Truncation; defaults to the ambient dimension.
    #[arg(long)]
    pub d: Option<usize>,
    #[arg(long, value_enum, default_value = "rho")]
    pub objective: Objective,
}

#[derive(Debug, Args)]
pub struct MisspecArgs {
    #[command(flatten)]
    pub common: Common,
    /// Accuracy levels at which to report d*(eps).
    #[arg(long, value_delimiter = ',')]
    pub levels: Vec<f64>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
#[value(rename_all = "snake_case")]
pub enum AlgoName {
    GemsC,
    GemsB,
    GemsM,
    MasterFc,
    MasterFb,
    MasterMis,
    OracleStatic,
}

impl AlgoName {
    fn key(self) -> &'static str {
        match self {
            AlgoName::GemsC => "gems_c",
            AlgoName::GemsB => "gems_b",
            AlgoName::GemsM => "gems_m",
            AlgoName::MasterFc => "master_fc",
            AlgoName::MasterFb => "master_fb",
            AlgoName::MasterMis => "master_mis",
            AlgoName::OracleStatic => "oracle_static",
        }
    }
}

/// Algorithm parameters. Omitted budgets default to the well-budgeted
/// configuration computed from the instance.
#[derive(Clone, Debug, Default, Args)]
pub struct AlgoParams {
    /// Rounds of elimination.
    #[arg(long)]
    pub n: Option<u32>,
    /// Selection budget B.
    #[arg(long)]
    pub budget: Option<f64>,
    /// Total budget T.
    #[arg(long)]
    pub total: Option<f64>,
    #[arg(long)]
    pub max_ell: Option<u32>,
    /// Pulls for oracle_static.
    #[arg(long)]
    pub samples: Option<u64>,
    /// Truncation for oracle_static.
    #[arg(long)]
    pub d: Option<usize>,
}

#[derive(Debug, Args)]
pub struct RunArgs {
    #[command(flatten)]
    pub common: Common,
    #[arg(long, value_enum)]
    pub algo: Option<AlgoName>,
    #[command(flatten)]
    pub params: AlgoParams,
}

#[derive(Debug, Args)]
pub struct ValidateArgs {
    /// Suites to run; all of them when omitted.
    pub suites: Vec<String>,
    #[command(flatten)]
    pub common: Common,
}

pub fn run(cli: Cli) -> Result<bool> {
    match cli.command {
        Command::Complexity(c) => cmd_complexity(&c).map(|_| true),
        Command::Design(a) => cmd_design(&a).map(|_| true),
        Command::Misspec(a) => cmd_misspec(&a).map(|_| true),
        Command::Run(a) => cmd_run(&a).map(|_| true),
        Command::Validate(a) => cmd_validate(&a),
    }
}

struct Prepared {
    cfg: ExperimentConfig,
    inst: Instance,
    sink: Sink,
}

fn prepare(common: &Common) -> Result<Prepared> {
    let cfg = common.resolve()?;
    let inst = cfg.instance.build().context("building instance")?;
    let sink = Sink::new(cfg.out.as_deref())?;
    Ok(Prepared { cfg, inst, sink })
}

fn header(command: &str, cfg: &ExperimentConfig) -> Header {
    Header::new(command, cfg.hash(), cfg.seed)
}

#[derive(Serialize)]
struct InstanceSummary {
    dim: usize,
    arms: usize,
    targets: usize,
    best_target: usize,
    min_gap: Option<f64>,
    intrinsic_dim: Option<usize>,
    linear: bool,
}

fn summarize(inst: &Instance) -> InstanceSummary {
    InstanceSummary {
        dim: inst.dim(),
        arms: inst.geometry().num_arms(),
        targets: inst.geometry().num_targets(),
        best_target: inst.best_target(),
        min_gap: inst.min_gap(),
        intrinsic_dim: inst.intrinsic_dim(),
        linear: inst.is_linear(),
    }
}

pub fn cmd_complexity(common: &Common) -> Result<()> {
    let p = prepare(common)?;
    let report = complexity_report(&p.inst, p.cfg.delta, p.cfg.eps, &p.cfg.solver)?;
    let mut table = Table::new(vec![
        "d",
        "iota_star",
        "rho_star",
        "rho_star_eps",
        "rho_tilde_eps",
        "gamma_tilde",
        "lower_bound_samples",
        "static_lower_bound_samples",
    ]);
    for r in &report.records {
        table.push(vec![
            r.d.to_string(),
            num(r.iota_star),
            num(r.rho_star),
            opt_num(r.rho_star_eps),
            opt_num(r.rho_tilde_eps),
            num(r.gamma_tilde),
            num(r.lower_bound_samples),
            num(r.static_lower_bound_samples),
        ]);
    }
    #[derive(Serialize)]
    struct Doc<'a> {
        config: &'a ExperimentConfig,
        instance: InstanceSummary,
        complexity: &'a linsel_core::ComplexityReport,
    }
    let doc = Doc {
        config: &p.cfg,
        instance: summarize(&p.inst),
        complexity: &report,
    };
    p.sink.report(
        "complexity",
        &header("complexity", &p.cfg),
        &doc,
        Some(&table),
    )
}

pub fn cmd_design(args: &DesignArgs) -> Result<()> {
    let p = prepare(&args.common)?;
    let d = args.d.unwrap_or(p.inst.dim());
    let result = match args.objective {
        Objective::Iota => compute_iota_star(&p.inst, d, &p.cfg.solver),
        Objective::Rho => rho_design(&p.inst, d, p.cfg.eps.unwrap_or(0.0), &p.cfg.solver),
    };
    let converged = result.is_ok();
    let sol = accept_best_solution(result)?;
    let mut table = Table::new(vec!["arm", "weight"]);
    for (i, w) in sol.design.weights().iter().enumerate() {
        table.push(vec![i.to_string(), num(*w)]);
    }
    #[derive(Serialize)]
    struct Doc<'a> {
        config: &'a ExperimentConfig,
        d: usize,
        objective: &'static str,
        converged: bool,
        value: f64,
        iterations: usize,
        relative_gap: f64,
        weights: &'a [f64],
    }
    let doc = Doc {
        config: &p.cfg,
        d,
        objective: match args.objective {
            Objective::Iota => "iota",
            Objective::Rho => "rho",
        },
        converged,
        value: sol.value,
        iterations: sol.iterations,
        relative_gap: sol.relative_gap,
        weights: sol.design.weights(),
    };
    p.sink
        .report("design", &header("design", &p.cfg), &doc, Some(&table))
}

pub fn cmd_misspec(args: &MisspecArgs) -> Result<()> {
    let p = prepare(&args.common)?;
    let mut levels = args.levels.clone();
    if levels.is_empty() {
        levels.push(p.cfg.eps.unwrap_or(0.1));
    }
    if let Some(bad) = levels.iter().find(|e| !(**e > 0.0)) {
        bail!("accuracy level {bad} must be positive");
    }
    let profile = misspec_profile(&p.inst, p.cfg.zeta, &levels, &p.cfg.solver)?;
    let mut table = Table::new(vec!["d", "gamma_tilde", "gamma", "gamma_bound", "theta"]);
    for r in &profile.records {
        let theta: Vec<String> = r.theta.iter().map(|t| num(*t)).collect();
        table.push(vec![
            r.d.to_string(),
            num(r.gamma_tilde),
            num(r.gamma),
            num(r.bound),
            theta.join(";"),
        ]);
    }
    #[derive(Serialize)]
    struct Doc<'a> {
        config: &'a ExperimentConfig,
        instance: InstanceSummary,
        profile: &'a linsel_core::MisspecProfile,
    }
    let doc = Doc {
        config: &p.cfg,
        instance: summarize(&p.inst),
        profile: &profile,
    };
    p.sink
        .report("misspec", &header("misspec", &p.cfg), &doc, Some(&table))
}

/// Parameters taken from the config when it names the same algorithm.
fn base_params(spec: Option<&AlgorithmSpec>) -> (Option<f64>, AlgoParams) {
    let mut p = AlgoParams::default();
    let mut delta = None;
    match spec {
        Some(&AlgorithmSpec::GemsC {
            delta: dl,
            n,
            budget,
        }) => {
            delta = Some(dl);
            p.n = Some(n);
            p.budget = Some(budget);
        }
        Some(&AlgorithmSpec::GemsB { total, n, budget }) => {
            p.total = Some(total);
            p.n = Some(n);
            p.budget = Some(budget);
        }
        Some(&AlgorithmSpec::GemsM {
            delta: dl,
            n,
            budget,
            ..
        }) => {
            delta = Some(dl);
            p.n = Some(n);
            p.budget = Some(budget);
        }
        Some(&AlgorithmSpec::MasterFc { delta: dl, max_ell }) => {
            delta = Some(dl);
            p.max_ell = Some(max_ell);
        }
        Some(&AlgorithmSpec::MasterFb { total }) => p.total = Some(total),
        Some(&AlgorithmSpec::MasterMis {
            delta: dl, max_ell, ..
        }) => {
            delta = Some(dl);
            p.max_ell = Some(max_ell);
        }
        Some(&AlgorithmSpec::OracleStatic { samples, d }) => {
            p.samples = Some(samples);
            p.d = d;
        }
        None => {}
    }
    (delta, p)
}

/// `(rho*_{d*}, r_{d*}, ceil(log2(2 / Delta_min)))` for default budgets.
fn linear_defaults(inst: &Instance, cfg: &ExperimentConfig) -> Result<(f64, f64, u32)> {
    let d_star = inst
        .intrinsic_dim()
        .ok_or_else(|| anyhow!("default budgets need a linear instance; pass --budget and --n"))?;
    let rho = accept_best_solution(rho_design(inst, d_star, 0.0, &cfg.solver))?.value;
    let r = r_d(d_star, cfg.zeta, cfg.rounding)?;
    let gap = inst
        .min_gap()
        .ok_or_else(|| anyhow!("instance has a single target"))?;
    Ok((rho, r, (2.0 / gap).log2().ceil() as u32))
}

/// The algorithm to run: `--algo` with its flags, falling back to the
/// config's parameters for the same algorithm, then to defaults.
pub fn resolve_algorithm(
    algo: Option<AlgoName>,
    flags: &AlgoParams,
    cfg: &ExperimentConfig,
    inst: &Instance,
) -> Result<AlgorithmSpec> {
    let configured = cfg.algorithm.as_ref();
    let name = match (algo, configured) {
        (Some(a), _) => a,
        (None, Some(spec)) => match spec.name() {
            "gems_c" => AlgoName::GemsC,
            "gems_b" => AlgoName::GemsB,
            "gems_m" => AlgoName::GemsM,
            "master_fc" => AlgoName::MasterFc,
            "master_fb" => AlgoName::MasterFb,
            "master_mis" => AlgoName::MasterMis,
            _ => AlgoName::OracleStatic,
        },
        (None, None) => bail!("no algorithm: pass --algo or set \"algorithm\" in the config"),
    };
    let same = configured.filter(|s| s.name() == name.key());
    let (base_delta, base) = base_params(same);
    let delta = base_delta.unwrap_or(cfg.delta);
    let n = flags.n.or(base.n);
    let budget = flags.budget.or(base.budget);
    let total = flags.total.or(base.total).unwrap_or(65536.0);
    let max_ell = flags.max_ell.or(base.max_ell);
    let eps = cfg.eps.unwrap_or(0.1);
    Ok(match name {
        AlgoName::GemsC => {
            let (n, budget) = match (n, budget) {
                (Some(n), Some(b)) => (n, b),
                _ => {
                    let (rho, r, n0) = linear_defaults(inst, cfg)?;
                    (n.unwrap_or(n0), budget.unwrap_or((64.0 * rho).max(r)))
                }
            };
            AlgorithmSpec::GemsC { delta, n, budget }
        }
        AlgoName::GemsB => {
            let (n, budget) = match (n, budget) {
                (Some(n), Some(b)) => (n, b),
                _ => {
                    let (rho, _, n0) = linear_defaults(inst, cfg)?;
                    (n.unwrap_or(n0), budget.unwrap_or(64.0 * rho))
                }
            };
            AlgorithmSpec::GemsB { total, n, budget }
        }
        AlgoName::GemsM => {
            let n = n.unwrap_or((2.0 / eps).log2().ceil() as u32);
            let budget = match budget {
                Some(b) => b,
                None => {
                    let d = linsel_core::compute_d_star(inst, eps, cfg.zeta, &cfg.solver)?;
                    let rho = accept_best_solution(rho_design(inst, d, eps, &cfg.solver))?.value;
                    (64.0 * rho).max(r_d(d, cfg.zeta, cfg.rounding)?)
                }
            };
            AlgorithmSpec::GemsM {
                delta,
                n,
                budget,
                eps,
            }
        }
        AlgoName::MasterFc => AlgorithmSpec::MasterFc {
            delta,
            max_ell: max_ell.unwrap_or(10),
        },
        AlgoName::MasterFb => AlgorithmSpec::MasterFb { total },
        AlgoName::MasterMis => AlgorithmSpec::MasterMis {
            delta,
            eps,
            max_ell: max_ell.unwrap_or(8),
        },
        AlgoName::OracleStatic => {
            let d = flags.d.or(base.d);
            let samples = match flags.samples.or(base.samples) {
                Some(s) => s,
                None => {
                    let d = d
                        .or(inst.intrinsic_dim())
                        .ok_or_else(|| anyhow!("oracle_static needs --d on this instance"))?;
                    r_d(d, cfg.zeta, cfg.rounding)?.ceil() as u64
                }
            };
            AlgorithmSpec::OracleStatic { samples, d }
        }
    })
}

pub fn cmd_run(args: &RunArgs) -> Result<()> {
    let mut p = prepare(&args.common)?;
    let algorithm = resolve_algorithm(args.algo, &args.params, &p.cfg, &p.inst)?;
    p.cfg.algorithm = Some(algorithm);
    let batch = BatchConfig {
        algorithm,
        trials: p.cfg.trials,
        seed: p.cfg.seed,
        noise: p.cfg.noise,
        settings: p.cfg.settings(),
        solver: p.cfg.solver,
        trace: p.cfg.trace,
        pull_cap: p.cfg.pull_cap,
    };
    log::info!("running {} x {}", algorithm.name(), batch.trials);
    let report = run_batch(&p.inst, &batch)?;

    let query = match algorithm {
        AlgorithmSpec::GemsB { total, n, .. } => BudgetQuery {
            total: Some(total),
            n: Some(n),
        },
        AlgorithmSpec::MasterFb { total } => BudgetQuery {
            total: Some(total),
            n: None,
        },
        _ => BudgetQuery::default(),
    };
    let bounds = match algorithm {
        AlgorithmSpec::GemsM { eps, .. } | AlgorithmSpec::MasterMis { eps, .. } => {
            misspecified_reference_bounds(
                &p.inst,
                p.cfg.delta,
                eps,
                p.cfg.zeta,
                query,
                &p.cfg.solver,
            )
            .ok()
        }
        _ if p.inst.is_linear() && p.inst.intrinsic_dim().is_some() => Some(reference_bounds(
            &p.inst,
            p.cfg.delta,
            query,
            &p.cfg.solver,
        )?),
        _ => None,
    };

    let hdr = header("run", &p.cfg);
    let mut table = Table::new(vec![
        "trial",
        "recommendation",
        "success",
        "samples_used",
        "first_correct_at",
        "error",
    ]);
    for o in &report.outcomes {
        table.push(vec![
            o.trial.to_string(),
            opt_int(o.recommendation),
            o.success.to_string(),
            o.samples_used.to_string(),
            opt_int(o.first_correct_at),
            o.error
                .as_deref()
                .map(|e| format!("\"{}\"", e.replace('"', "'")))
                .unwrap_or_default(),
        ]);
    }
    if p.cfg.trace {
        let text = render_trace(
            &hdr,
            report
                .outcomes
                .iter()
                .filter_map(|o| o.trace.as_deref().map(|t| (o.trial, t))),
        )?;
        p.sink.trace(&text)?;
    }
    #[derive(Serialize)]
    struct Doc<'a> {
        config: &'a ExperimentConfig,
        instance: InstanceSummary,
        batch: &'a linsel_core::BatchReport,
        reference_bounds: Option<linsel_core::ReferenceBounds>,
    }
    let doc = Doc {
        config: &p.cfg,
        instance: summarize(&p.inst),
        batch: &report,
        reference_bounds: bounds,
    };
    p.sink.report("run", &hdr, &doc, Some(&table))
}

pub fn cmd_validate(args: &ValidateArgs) -> Result<bool> {
    let names: Vec<String> = if args.suites.is_empty() {
        SUITES.iter().map(|s| s.to_string()).collect()
    } else {
        args.suites.clone()
    };
    if let Some(bad) = names.iter().find(|n| !SUITES.contains(&n.as_str())) {
        return Err(UsageError(format!(
            "unknown suite {bad:?}; expected one of {}",
            SUITES.join(", ")
        ))
        .into());
    }
    let cfg = args.common.resolve()?;
    let opts = SuiteOptions {
        seed: cfg.seed,
        trials: args.common.trials.unwrap_or(200),
        zeta: cfg.zeta,
        delta: cfg.delta,
        solver: cfg.solver,
    };
    let sink = Sink::new(cfg.out.as_deref())?;
    let mut reports: Vec<SuiteReport> = Vec::new();
    for name in &names {
        log::info!("suite {name}");
        let report = run_suite(name, &opts).expect("name checked")?;
        for c in report.failures() {
            eprintln!("FAIL {name} / {}: {}", c.name, c.detail);
        }
        eprintln!(
            "{} {name}: {}/{} checks",
            if report.passed { "PASS" } else { "FAIL" },
            report.checks.iter().filter(|c| c.passed).count(),
            report.checks.len()
        );
        reports.push(report);
    }
    let mut table = Table::new(vec!["suite", "check", "passed", "detail"]);
    for r in &reports {
        for c in &r.checks {
            table.push(vec![
                r.suite.clone(),
                format!("\"{}\"", c.name),
                c.passed.to_string(),
                format!("\"{}\"", c.detail.replace('"', "'")),
            ]);
        }
    }
    let hdr = Header::new("validate", cfg.hash(), opts.seed);
    sink.report("validate", &hdr, &reports, Some(&table))?;
    Ok(reports.iter().all(|r| r.passed))
}

/// Bad command-line usage, reported with exit status 2.
#[derive(Debug)]
pub struct UsageError(pub String);

impl std::fmt::Display for UsageError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for UsageError {}
