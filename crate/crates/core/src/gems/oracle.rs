use super::{least_squares, recommend, SamplingContext, Settings};
use crate::design::{accept_best, rho_design, SolverConfig};
use crate::error::Result;
use crate::instance::TruncatedView;
use crate::rounding::{round_design, round_unchecked};

/// Least-squares recommendation over all targets from a fixed allocation.
pub fn static_recommendation(view: &TruncatedView<'_>, counts: &[u64], sums: &[f64]) -> usize {
    let est = least_squares(view, counts, sums);
    let all: Vec<usize> = (0..view.geometry().num_targets()).collect();
    recommend(view, &est.theta, &all)
}

/// Non-adaptive baseline that knows the gaps: sample `n` pulls from the
/// rounded design attaining `rho*_d`, then recommend the least-squares argmax.
/// Below the rounding floor the allocation is apportioned without the
/// guarantee check.
pub fn oracle_static(
    ctx: &mut SamplingContext<'_>,
    settings: &Settings,
    solver: &SolverConfig,
    n: u64,
    d: usize,
) -> Result<usize> {
    let inst = ctx.instance();
    let view = inst.geometry().view(d)?;
    let design = accept_best(rho_design(inst, d, 0.0, solver))?.design;
    let alloc = if n as f64 >= settings.r_d(d) {
        let all: Vec<usize> = (0..inst.geometry().num_targets()).collect();
        let dirs = view.target_directions(&all);
        round_design(&design, n, &view, &dirs, settings.zeta, settings.rule)?
    } else {
        round_unchecked(&design, n, &view, settings.zeta)?
    };
    let sums = ctx.pull_allocation(&alloc)?;
    let rec = static_recommendation(&view, &alloc.counts, &sums);
    ctx.emit(rec, 1);
    Ok(rec)
}
