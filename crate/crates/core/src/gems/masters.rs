use super::{floor_w, gems_b, gems_c, gems_m, EventKind, SamplingContext, Settings, TraceEvent};
use crate::design::IotaOracle;
use crate::error::{Error, Result};

/// Pull each candidate `per` times and return the best empirical mean,
/// ties to the earliest slot.
fn validate(ctx: &mut SamplingContext<'_>, candidates: &[usize], per: u64) -> Result<usize> {
    let geometry = ctx.instance().geometry();
    let mut best = candidates[0];
    let mut best_mean = f64::NEG_INFINITY;
    for &z in candidates {
        let arm = geometry.target_arm(z).ok_or_else(|| {
            Error::InvalidInstance(format!("target {z} is not an arm and cannot be validated"))
        })?;
        let mut sum = 0.0;
        for _ in 0..per {
            sum += ctx.pull(arm)?;
        }
        let mean = if per > 0 { sum / per as f64 } else { 0.0 };
        if mean > best_mean {
            best = z;
            best_mean = mean;
        }
    }
    let pulls_total = ctx.pulls();
    ctx.log(TraceEvent {
        event: EventKind::Validation,
        k: None,
        d_k: None,
        n_k: Some(per * candidates.len() as u64),
        active_size: candidates.len(),
        pulls_total,
        target: Some(best),
    });
    Ok(best)
}

fn require_targets_in_arms(ctx: &SamplingContext<'_>) -> Result<()> {
    if ctx.instance().geometry().targets_in_arms() {
        Ok(())
    } else {
        Err(Error::InvalidInstance(
            "validation needs every target to be an arm".into(),
        ))
    }
}

fn check_ell(max_ell: u32) -> Result<()> {
    if max_ell == 0 || max_ell > 30 {
        return Err(Error::InvalidArgument(format!(
            "max_ell = {max_ell} outside [1, 30]"
        )));
    }
    Ok(())
}

fn dedup_in_order(candidates: &mut Vec<usize>) {
    let mut seen = std::collections::HashSet::new();
    candidates.retain(|z| seen.insert(*z));
}

/// Anytime fixed-confidence strategy, run for `max_ell` outer rounds.
///
/// Round `l` tries `(B, n) = (2^(l-i), 2^i)` for `i = 1..=l` at confidence
/// `delta / (2 l^3)` and adopts the first singleton. The recommendation is
/// emitted after every subroutine call, starting from a random target.
pub fn master_fixed_confidence(
    ctx: &mut SamplingContext<'_>,
    oracle: &IotaOracle<'_>,
    settings: &Settings,
    delta: f64,
    max_ell: u32,
) -> Result<usize> {
    check_ell(max_ell)?;
    let num_targets = ctx.instance().geometry().num_targets();
    let mut rec = ctx.random_target();
    ctx.emit(rec, num_targets);
    for ell in 1..=max_ell {
        let delta_l = delta / (2.0 * (ell as f64).powi(3));
        for i in 1..=ell {
            let budget = (1u64 << (ell - i)) as f64;
            let set = gems_c(ctx, oracle, settings, delta_l, 1 << i, budget)?;
            if set.len() == 1 {
                rec = set[0];
            }
            ctx.emit(rec, set.len());
            if set.len() == 1 {
                break;
            }
        }
    }
    Ok(rec)
}

/// Fixed-budget strategy with selection and validation, using at most `2T`
/// pulls: `T` across the `(B_i, n_j)` grid and `T` for validation.
pub fn master_fixed_budget(
    ctx: &mut SamplingContext<'_>,
    oracle: &IotaOracle<'_>,
    settings: &Settings,
    total: f64,
) -> Result<usize> {
    require_targets_in_arms(ctx)?;
    let p = floor_w(total);
    if p == 0 {
        return Err(Error::BudgetTooSmall(format!(
            "T = {total} gives floor(W(T)) = 0"
        )));
    }
    let t1 = total / p as f64;
    let mut candidates = Vec::new();
    for i in 1..=p {
        let budget = (i as f64).exp2();
        let q = floor_w(t1 / budget);
        if q == 0 {
            continue;
        }
        let t2 = t1 / q as f64;
        for j in 1..=q {
            let n = 1u32 << j.min(31);
            candidates.push(gems_b(ctx, oracle, settings, t2, n, budget)?);
        }
    }
    if settings.dedup_candidates {
        dedup_in_order(&mut candidates);
    }
    if candidates.is_empty() {
        candidates = (0..ctx.instance().geometry().num_targets()).collect();
    }
    let per = (total / candidates.len() as f64).floor() as u64;
    let rec = validate(ctx, &candidates, per)?;
    ctx.emit(rec, candidates.len());
    Ok(rec)
}

/// Anytime strategy for misspecified rewards: each round collects one
/// candidate per `(B, n)` configuration at confidence `delta / (4 l^3)` and
/// validates them with `ceil(8 log(2 / delta_l) / eps^2)` pulls each.
pub fn master_misspecified(
    ctx: &mut SamplingContext<'_>,
    oracle: &IotaOracle<'_>,
    settings: &Settings,
    delta: f64,
    eps: f64,
    max_ell: u32,
) -> Result<usize> {
    check_ell(max_ell)?;
    require_targets_in_arms(ctx)?;
    if !(eps > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "eps = {eps} must be positive"
        )));
    }
    let num_targets = ctx.instance().geometry().num_targets();
    let mut rec = ctx.random_target();
    ctx.emit(rec, num_targets);
    for ell in 1..=max_ell {
        let delta_l = delta / (4.0 * (ell as f64).powi(3));
        let mut candidates = Vec::with_capacity(ell as usize);
        for i in 1..=ell {
            let budget = (1u64 << (ell - i)) as f64;
            let set = gems_m(ctx, oracle, settings, delta_l, 1 << i, budget)?;
            candidates.push(set[0]);
        }
        if settings.dedup_candidates {
            dedup_in_order(&mut candidates);
        }
        let per = (8.0 * (2.0 / delta_l).ln() / (eps * eps)).ceil() as u64;
        rec = validate(ctx, &candidates, per)?;
        ctx.emit(rec, candidates.len());
    }
    Ok(rec)
}
