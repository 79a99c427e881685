use nalgebra::DVector;

use super::{least_squares, opt_dim, Estimate, SamplingContext, Settings};
use crate::design::IotaOracle;
use crate::error::{Error, Result};
use crate::instance::TruncatedView;
use crate::rounding::round_design;

/// How a pair `(z', z)` earns the elimination of `z`.
#[derive(Clone, Copy)]
enum Rule {
    /// `<theta, y> >= ||y||_{A^-1} sqrt(2 log(|S|^2 / delta_k))`
    Confidence { log_term: f64 },
    /// `<theta, y> >= 2^-k`
    Dyadic { level: f64 },
}

/// Targets in `active` not dominated by another active target.
fn survivors(view: &TruncatedView<'_>, est: &Estimate, active: &[usize], rule: Rule) -> Vec<usize> {
    let pts: Vec<DVector<f64>> = active.iter().map(|&z| view.target(z)).collect();
    let beaten = |i: usize| {
        pts.iter().enumerate().any(|(j, pj)| {
            if j == i {
                return false;
            }
            let y = pj - &pts[i];
            if y.norm_squared() == 0.0 {
                return false;
            }
            let (gain, norm_sq) = est.score(&y);
            if !norm_sq.is_finite() {
                return false;
            }
            match rule {
                Rule::Confidence { log_term } => gain >= (norm_sq * 2.0 * log_term).sqrt(),
                Rule::Dyadic { level } => gain >= level,
            }
        })
    };
    active
        .iter()
        .enumerate()
        .filter(|&(i, _)| !beaten(i))
        .map(|(_, &z)| z)
        .collect()
}

fn check_confidence_args(delta: f64, n: u32, budget: f64) -> Result<()> {
    if !(delta > 0.0 && delta < 1.0) {
        return Err(Error::InvalidArgument(format!(
            "delta = {delta} outside (0, 1)"
        )));
    }
    if n == 0 {
        return Err(Error::InvalidArgument("n must be at least 1".into()));
    }
    if !(budget > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "budget {budget} must be positive"
        )));
    }
    Ok(())
}

/// Fixed-confidence elimination shared by GEMS-c and GEMS-m.
#[allow(clippy::too_many_arguments)]
fn confidence_elimination(
    ctx: &mut SamplingContext<'_>,
    oracle: &IotaOracle<'_>,
    settings: &Settings,
    delta: f64,
    n: u32,
    budget: f64,
    inflation: f64,
    dyadic: bool,
) -> Result<Vec<usize>> {
    check_confidence_args(delta, n, budget)?;
    let inst = ctx.instance();
    let geometry = inst.geometry();
    let dim = geometry.dim();
    let mut active: Vec<usize> = (0..geometry.num_targets()).collect();
    for k in 1..=n {
        if active.len() <= 1 {
            break;
        }
        let scale = 4f64.powi(k as i32);
        let g = |d: usize| -> Result<f64> {
            let r = settings.r_d(d);
            if r > budget {
                return Ok(r);
            }
            Ok((scale * oracle.iota(&active, d)?.value).max(r))
        };
        let Some(d_k) = opt_dim(budget, dim, g)? else {
            return Ok(active);
        };
        let cost = g(d_k)?;
        let delta_k = delta / (k as f64).powi(2);
        let log_term = ((active.len() as f64).powi(2) / delta_k).ln();
        let n_k = (cost * inflation * (1.0 + settings.zeta) * log_term).ceil() as u64;
        let view = geometry.view(d_k)?;
        let design = oracle.iota(&active, d_k)?;
        let dirs = view.target_directions(&active);
        let alloc = round_design(
            &design.design,
            n_k,
            &view,
            &dirs,
            settings.zeta,
            settings.rule,
        )?;
        let sums = ctx.pull_allocation(&alloc)?;
        ctx.log_iteration(k, d_k, n_k, active.len());
        let est = least_squares(&view, &alloc.counts, &sums);
        let rule = if dyadic {
            Rule::Dyadic {
                level: 0.5f64.powi(k as i32),
            }
        } else {
            Rule::Confidence { log_term }
        };
        active = survivors(&view, &est, &active, rule);
    }
    Ok(active)
}

/// Fixed-confidence elimination with model selection, `n` rounds under
/// selection budget `budget`. Returns the surviving targets; a round whose
/// budget admits no dimension ends the run with the current set.
pub fn gems_c(
    ctx: &mut SamplingContext<'_>,
    oracle: &IotaOracle<'_>,
    settings: &Settings,
    delta: f64,
    n: u32,
    budget: f64,
) -> Result<Vec<usize>> {
    confidence_elimination(ctx, oracle, settings, delta, n, budget, 2.0, false)
}

/// Misspecification-robust variant: sample counts inflated by `8 (1 + zeta)`
/// and the fixed threshold `2^-k`.
pub fn gems_m(
    ctx: &mut SamplingContext<'_>,
    oracle: &IotaOracle<'_>,
    settings: &Settings,
    delta: f64,
    n: u32,
    budget: f64,
) -> Result<Vec<usize>> {
    confidence_elimination(ctx, oracle, settings, delta, n, budget, 8.0, true)
}

/// Fixed-budget elimination: `n` rounds of exactly `floor(T / n)` pulls.
/// Returns the first surviving target; an unaffordable round returns the
/// first active target at once.
pub fn gems_b(
    ctx: &mut SamplingContext<'_>,
    oracle: &IotaOracle<'_>,
    settings: &Settings,
    total: f64,
    n: u32,
    budget: f64,
) -> Result<usize> {
    if n == 0 {
        return Err(Error::InvalidArgument("n must be at least 1".into()));
    }
    if !(total > 0.0) || !(budget > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "budgets must be positive: T = {total}, B = {budget}"
        )));
    }
    let inst = ctx.instance();
    let geometry = inst.geometry();
    let per_round = (total / n as f64).floor();
    let mut active: Vec<usize> = (0..geometry.num_targets()).collect();
    let Some(d_cap) = opt_dim(per_round, geometry.dim(), |d| Ok(settings.r_d(d)))? else {
        return Ok(active[0]);
    };
    for k in 1..=n {
        if active.len() <= 1 {
            break;
        }
        let scale = 4f64.powi(k as i32);
        let g = |d: usize| -> Result<f64> { Ok(scale * oracle.iota(&active, d)?.value) };
        let Some(d_k) = opt_dim(budget, d_cap, g)? else {
            return Ok(active[0]);
        };
        let view = geometry.view(d_k)?;
        let design = oracle.iota(&active, d_k)?;
        let dirs = view.target_directions(&active);
        let n_k = per_round as u64;
        let alloc = round_design(
            &design.design,
            n_k,
            &view,
            &dirs,
            settings.zeta,
            settings.rule,
        )?;
        let sums = ctx.pull_allocation(&alloc)?;
        ctx.log_iteration(k, d_k, n_k, active.len());
        let est = least_squares(&view, &alloc.counts, &sums);
        active = survivors(
            &view,
            &est,
            &active,
            Rule::Dyadic {
                level: 0.5f64.powi(k as i32),
            },
        );
    }
    Ok(active[0])
}
