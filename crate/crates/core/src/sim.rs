//! Seeded Monte Carlo batches and reference bounds.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::design::{accept_best, rho_design, IotaOracle, SolverConfig};
use crate::env::{trial_rng, Environment, Noise, Stream};
use crate::error::{Error, Result};
use crate::gems::{self, SamplingContext, Settings, TraceEvent};
use crate::instance::Instance;
use crate::misspec;

/// An algorithm and its parameters, tagged by `name` in configs.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "name", rename_all = "snake_case", deny_unknown_fields)]
pub enum AlgorithmSpec {
    GemsC {
        delta: f64,
        n: u32,
        budget: f64,
    },
    GemsB {
        total: f64,
        n: u32,
        budget: f64,
    },
    GemsM {
        delta: f64,
        n: u32,
        budget: f64,
        eps: f64,
    },
    MasterFc {
        delta: f64,
        max_ell: u32,
    },
    MasterFb {
        total: f64,
    },
    MasterMis {
        delta: f64,
        eps: f64,
        max_ell: u32,
    },
    OracleStatic {
        samples: u64,
        /// Defaults to the instance's intrinsic dimension.
        #[serde(default)]
        d: Option<usize>,
    },
}

impl AlgorithmSpec {
    pub fn name(&self) -> &'static str {
        match self {
            AlgorithmSpec::GemsC { .. } => "gems_c",
            AlgorithmSpec::GemsB { .. } => "gems_b",
            AlgorithmSpec::GemsM { .. } => "gems_m",
            AlgorithmSpec::MasterFc { .. } => "master_fc",
            AlgorithmSpec::MasterFb { .. } => "master_fb",
            AlgorithmSpec::MasterMis { .. } => "master_mis",
            AlgorithmSpec::OracleStatic { .. } => "oracle_static",
        }
    }

    /// Whether recommending `z` counts as a success.
    ///
    /// Subroutines succeed at the accuracy their guarantees state
    /// (`Delta < 2^(1-n)` for GEMS-c/b, `eps` for GEMS-m); the
    /// misspecified master at `2 eps`; everything else must find `z*`.
    pub fn is_success(&self, inst: &Instance, z: usize) -> bool {
        let gap = inst.gap(z);
        match *self {
            AlgorithmSpec::GemsC { n, .. } | AlgorithmSpec::GemsB { n, .. } => {
                gap < 2f64.powi(1 - n as i32)
            }
            AlgorithmSpec::GemsM { eps, .. } => gap <= eps,
            AlgorithmSpec::MasterMis { eps, .. } => gap <= 2.0 * eps,
            _ => z == inst.best_target(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BatchConfig {
    pub algorithm: AlgorithmSpec,
    pub trials: u64,
    pub seed: u64,
    #[serde(default)]
    pub noise: Noise,
    #[serde(default)]
    pub settings: Settings,
    #[serde(default)]
    pub solver: SolverConfig,
    #[serde(default)]
    pub trace: bool,
    /// Abort a trial after this many pulls.
    #[serde(default)]
    pub pull_cap: Option<u64>,
}

/// Result of a single trial.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrialOutcome {
    pub trial: u64,
    pub recommendation: Option<usize>,
    /// Surviving set, for GEMS-c.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub surviving: Option<Vec<usize>>,
    pub success: bool,
    pub samples_used: u64,
    /// Pull count of the first emission in the final all-successful suffix.
    pub first_correct_at: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
    #[serde(skip)]
    pub trace: Option<Vec<TraceEvent>>,
}

/// First pull count after which every emission is a success.
pub fn first_correct_at(emissions: &[(u64, usize)], ok: impl Fn(usize) -> bool) -> Option<u64> {
    let mut start = None;
    for &(pulls, z) in emissions {
        if ok(z) {
            start.get_or_insert(pulls);
        } else {
            start = None;
        }
    }
    start
}

/// Run trial `trial` of `cfg`.
pub fn run_trial(
    inst: &Instance,
    oracle: &IotaOracle<'_>,
    cfg: &BatchConfig,
    trial: u64,
) -> TrialOutcome {
    let mut env = Environment::new(
        inst,
        cfg.noise,
        trial_rng(cfg.seed, trial, Stream::Environment),
    );
    if let Some(cap) = cfg.pull_cap {
        env = env.with_cap(cap);
    }
    let mut ctx = SamplingContext::new(
        env,
        trial_rng(cfg.seed, trial, Stream::Algorithm),
        cfg.trace,
    );
    let s = &cfg.settings;
    let mut surviving = None;
    let result: Result<usize> = match cfg.algorithm {
        AlgorithmSpec::GemsC { delta, n, budget } => {
            gems::gems_c(&mut ctx, oracle, s, delta, n, budget).map(|set| {
                let first = set[0];
                surviving = Some(set);
                first
            })
        }
        AlgorithmSpec::GemsB { total, n, budget } => {
            gems::gems_b(&mut ctx, oracle, s, total, n, budget)
        }
        AlgorithmSpec::GemsM {
            delta, n, budget, ..
        } => gems::gems_m(&mut ctx, oracle, s, delta, n, budget).map(|set| set[0]),
        AlgorithmSpec::MasterFc { delta, max_ell } => {
            gems::master_fixed_confidence(&mut ctx, oracle, s, delta, max_ell)
        }
        AlgorithmSpec::MasterFb { total } => gems::master_fixed_budget(&mut ctx, oracle, s, total),
        AlgorithmSpec::MasterMis {
            delta,
            eps,
            max_ell,
        } => gems::master_misspecified(&mut ctx, oracle, s, delta, eps, max_ell),
        AlgorithmSpec::OracleStatic { samples, d } => match d.or(inst.intrinsic_dim()) {
            Some(d) => gems::oracle_static(&mut ctx, s, &cfg.solver, samples, d),
            None => Err(Error::MissingIntrinsicDim),
        },
    };
    if let Ok(z) = result {
        if ctx.emissions().last().map(|e| e.1) != Some(z) {
            let size = surviving.as_ref().map_or(1, Vec::len);
            ctx.emit(z, size);
        }
    }
    let samples_used = ctx.pulls();
    let ok = |z: usize| cfg.algorithm.is_success(inst, z);
    let success = match (&result, &surviving) {
        (Ok(_), Some(set)) => set.iter().all(|&z| ok(z)),
        (Ok(z), None) => ok(*z),
        (Err(_), _) => false,
    };
    let first = if result.is_ok() {
        first_correct_at(ctx.emissions(), ok)
    } else {
        None
    };
    TrialOutcome {
        trial,
        recommendation: result.as_ref().ok().copied(),
        surviving,
        success,
        samples_used,
        first_correct_at: first,
        error: result.err().map(|e| e.to_string()),
        trace: ctx.into_trace(),
    }
}

/// Wilson score interval at 95% for `k` successes out of `n`.
pub fn wilson_interval(k: u64, n: u64) -> (f64, f64) {
    if n == 0 {
        return (0.0, 1.0);
    }
    const Z: f64 = 1.959_963_984_540_054;
    let n = n as f64;
    let p = k as f64 / n;
    let z2 = Z * Z;
    let denom = 1.0 + z2 / n;
    let centre = (p + z2 / (2.0 * n)) / denom;
    let half = Z * (p * (1.0 - p) / n + z2 / (4.0 * n * n)).sqrt() / denom;
    // The interval endpoints are exactly 0 and 1 at the extremes.
    let lo = if k == 0 {
        0.0
    } else {
        (centre - half).max(0.0)
    };
    let hi = if k as f64 == n {
        1.0
    } else {
        (centre + half).min(1.0)
    };
    (lo, hi)
}

/// Nearest-rank quantile of sorted data.
fn quantile(sorted: &[u64], q: f64) -> u64 {
    if sorted.is_empty() {
        return 0;
    }
    let rank = ((q * sorted.len() as f64).ceil() as usize).clamp(1, sorted.len());
    sorted[rank - 1]
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BatchReport {
    pub algorithm: String,
    pub trials: u64,
    /// Trials that ended in an error; they count as failures.
    pub errored: u64,
    pub failures: u64,
    pub error_rate: f64,
    pub error_ci: (f64, f64),
    pub mean_samples: f64,
    pub median_samples: u64,
    pub p90_samples: u64,
    pub max_samples: u64,
    pub mean_first_correct_at: Option<f64>,
    pub outcomes: Vec<TrialOutcome>,
}

impl BatchReport {
    fn aggregate(algorithm: &str, outcomes: Vec<TrialOutcome>) -> Self {
        let trials = outcomes.len() as u64;
        let errored = outcomes.iter().filter(|o| o.error.is_some()).count() as u64;
        let failures = outcomes.iter().filter(|o| !o.success).count() as u64;
        let mut samples: Vec<u64> = outcomes.iter().map(|o| o.samples_used).collect();
        samples.sort_unstable();
        let mean_samples = if trials > 0 {
            samples.iter().map(|&s| s as f64).sum::<f64>() / trials as f64
        } else {
            0.0
        };
        let firsts: Vec<f64> = outcomes
            .iter()
            .filter_map(|o| o.first_correct_at.map(|v| v as f64))
            .collect();
        let mean_first_correct_at =
            (!firsts.is_empty()).then(|| firsts.iter().sum::<f64>() / firsts.len() as f64);
        Self {
            algorithm: algorithm.to_string(),
            trials,
            errored,
            failures,
            error_rate: if trials > 0 {
                failures as f64 / trials as f64
            } else {
                0.0
            },
            error_ci: wilson_interval(failures, trials),
            mean_samples,
            median_samples: quantile(&samples, 0.5),
            p90_samples: quantile(&samples, 0.9),
            max_samples: samples.last().copied().unwrap_or(0),
            mean_first_correct_at,
            outcomes,
        }
    }
}

/// Run every trial of `cfg` in parallel; results are in trial order and do
/// not depend on scheduling.
pub fn run_batch(inst: &Instance, cfg: &BatchConfig) -> Result<BatchReport> {
    cfg.settings.validate()?;
    cfg.noise.validate()?;
    if cfg.trials == 0 {
        return Err(Error::InvalidArgument("trials must be at least 1".into()));
    }
    let oracle = IotaOracle::new(inst.geometry(), cfg.solver);
    let outcomes: Vec<TrialOutcome> = (0..cfg.trials)
        .into_par_iter()
        .map(|t| run_trial(inst, &oracle, cfg, t))
        .collect();
    Ok(BatchReport::aggregate(cfg.algorithm.name(), outcomes))
}

/// Theoretical reference values at the computed `rho*_{d*}`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReferenceBounds {
    pub d_star: usize,
    pub rho_star: f64,
    /// Lower bound on the expected stopping time of a delta-correct method.
    pub lower_bound_samples: f64,
    /// Samples after which a non-interactive oracle still errs w.p. >= delta.
    pub static_lower_bound_samples: f64,
    /// Fixed-budget subroutine error bound at `(T, n)`.
    pub subroutine_error: Option<f64>,
    /// Fixed-budget master error bound at `T`.
    pub master_error: Option<f64>,
}

/// Which budgets to evaluate the fixed-budget formulas at.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct BudgetQuery {
    pub total: Option<f64>,
    pub n: Option<u32>,
}

fn subroutine_bound(n: u32, targets: usize, total: f64, rho: f64, constant: f64) -> f64 {
    let n = n as f64;
    (n * (targets as f64).powi(2) * (-total / (constant * n * rho)).exp()).min(1.0)
}

fn master_bound(scale_gap: f64, targets: usize, total: f64, rho: f64, constant: f64) -> f64 {
    let l = (4.0 / scale_gap).log2();
    let lt = total.log2().powi(2);
    let first = l * (targets as f64).powi(2) * (-total / (constant * l * rho)).exp();
    let second = 2.0 * lt * (-total / (8.0 * lt / scale_gap.powi(2))).exp();
    (first + second).min(1.0)
}

/// Reference values for a linear instance with known intrinsic dimension.
pub fn reference_bounds(
    inst: &Instance,
    delta: f64,
    query: BudgetQuery,
    cfg: &SolverConfig,
) -> Result<ReferenceBounds> {
    let d_star = inst.intrinsic_dim().ok_or(Error::MissingIntrinsicDim)?;
    if !(delta > 0.0 && delta < 1.0) {
        return Err(Error::InvalidArgument(format!(
            "delta = {delta} outside (0, 1)"
        )));
    }
    let rho = accept_best(rho_design(inst, d_star, 0.0, cfg))?.value;
    let targets = inst.geometry().num_targets();
    let min_gap = inst.min_gap();
    Ok(ReferenceBounds {
        d_star,
        rho_star: rho,
        lower_bound_samples: rho * (1.0 / (2.4 * delta)).ln(),
        static_lower_bound_samples: 0.5 * rho * (1.0 / delta).ln(),
        subroutine_error: match (query.total, query.n) {
            (Some(t), Some(n)) => Some(subroutine_bound(n, targets, t, rho, 640.0)),
            _ => None,
        },
        master_error: match (query.total, min_gap) {
            (Some(t), Some(g)) => Some(master_bound(g, targets, t, rho, 640.0)),
            _ => None,
        },
    })
}

/// Reference values at accuracy `eps`, using `d*(eps)` and `rho*_{d*(eps)}(eps)`.
pub fn misspecified_reference_bounds(
    inst: &Instance,
    delta: f64,
    eps: f64,
    zeta: f64,
    query: BudgetQuery,
    cfg: &SolverConfig,
) -> Result<ReferenceBounds> {
    if !(delta > 0.0 && delta < 1.0) {
        return Err(Error::InvalidArgument(format!(
            "delta = {delta} outside (0, 1)"
        )));
    }
    let d_star = misspec::compute_d_star(inst, eps, zeta, cfg)?;
    let rho = accept_best(rho_design(inst, d_star, eps, cfg))?.value;
    let targets = inst.geometry().num_targets();
    Ok(ReferenceBounds {
        d_star,
        rho_star: rho,
        lower_bound_samples: rho * (1.0 / (2.4 * delta)).ln(),
        static_lower_bound_samples: 0.5 * rho * (1.0 / delta).ln(),
        subroutine_error: match (query.total, query.n) {
            (Some(t), Some(n)) => Some(subroutine_bound(n, targets, t, rho, 2560.0)),
            _ => None,
        },
        master_error: query
            .total
            .map(|t| master_bound(eps, targets, t, rho, 2560.0)),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::instance::Arm;

    fn two_arm() -> Instance {
        let arms = vec![Arm::basis(0, 2), Arm::basis(1, 2)];
        Instance::linear(arms, None, vec![1.0, 0.5], None).unwrap()
    }

    #[test]
    fn wilson_examples() {
        let (lo, hi) = wilson_interval(0, 100);
        assert_eq!(lo, 0.0);
        assert!((hi - 0.036).abs() < 1e-3);
        let (lo, hi) = wilson_interval(50, 100);
        assert!((lo - 0.4038).abs() < 1e-3 && (hi - 0.5962).abs() < 1e-3);
    }

    #[test]
    fn first_correct_suffix() {
        let e = [(0, 1), (10, 0), (20, 1), (30, 0), (40, 0)];
        assert_eq!(first_correct_at(&e, |z| z == 0), Some(30));
        assert_eq!(first_correct_at(&e, |z| z == 1), None);
    }

    #[test]
    fn reference_arithmetic() {
        let inst = two_arm();
        let r =
            reference_bounds(&inst, 0.1, BudgetQuery::default(), &SolverConfig::default()).unwrap();
        // rho* = 16 up to solver tolerance
        assert!((r.rho_star - 16.0).abs() < 0.16);
        let scale = r.rho_star / 16.0;
        assert!((r.lower_bound_samples / scale - 22.835).abs() < 0.01);
        assert!((r.static_lower_bound_samples / scale - 18.421).abs() < 0.01);
        let half = reference_bounds(
            &inst,
            1.0 / 2.4,
            BudgetQuery::default(),
            &SolverConfig::default(),
        )
        .unwrap();
        assert!(half.lower_bound_samples.abs() < 1e-12);
    }

    #[test]
    fn noiseless_oracle_is_always_right() {
        let inst = two_arm();
        let cfg = BatchConfig {
            algorithm: AlgorithmSpec::OracleStatic {
                samples: 40,
                d: None,
            },
            trials: 8,
            seed: 3,
            noise: Noise::None,
            settings: Settings::default(),
            solver: SolverConfig::default(),
            trace: false,
            pull_cap: None,
        };
        let r = run_batch(&inst, &cfg).unwrap();
        assert_eq!(r.failures, 0);
        assert!(r.outcomes.iter().all(|o| o.samples_used == 40));
    }

    #[test]
    fn spec_is_tagged_by_name() {
        let s: AlgorithmSpec =
            serde_json::from_str(r#"{"name":"master_fb","total":1024.0}"#).unwrap();
        assert_eq!(s, AlgorithmSpec::MasterFb { total: 1024.0 });
        assert!(
            serde_json::from_str::<AlgorithmSpec>(r#"{"name":"master_fb","total":1.0,"x":1}"#)
                .is_err()
        );
    }
}
