//! Gap elimination with model selection.
//!
//! Three elimination subroutines (fixed confidence, fixed budget,
//! misspecified) share one shape: pick the largest dimension whose design
//! cost fits the budget, sample a rounded design for the active targets,
//! fit least squares in that truncation and drop dominated targets. The
//! masters run the subroutines over doubling grids of budgets and
//! iteration counts.

mod masters;
mod oracle;
mod subroutines;

pub use masters::{master_fixed_budget, master_fixed_confidence, master_misspecified};
pub use oracle::{oracle_static, static_recommendation};
pub use subroutines::{gems_b, gems_c, gems_m};

use nalgebra::DVector;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::env::Environment;
use crate::error::{Error, Result};
use crate::instance::{Instance, TruncatedView};
use crate::linalg::{self, PseudoInverse};
use crate::rounding::{Allocation, RoundingRule};

/// Approximation settings shared by every algorithm.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Settings {
    pub zeta: f64,
    pub rule: RoundingRule,
    /// Collapse repeated pre-selection candidates before validation.
    pub dedup_candidates: bool,
}

impl Default for Settings {
    fn default() -> Self {
        Self {
            zeta: 0.25,
            rule: RoundingRule::Quadratic,
            dedup_candidates: false,
        }
    }
}

impl Settings {
    pub fn validate(&self) -> Result<()> {
        if !(self.zeta > 0.0 && self.zeta.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "zeta = {} must be positive",
                self.zeta
            )));
        }
        Ok(())
    }

    pub fn r_d(&self, d: usize) -> f64 {
        crate::rounding::r_d(d, self.zeta, self.rule).expect("settings are validated")
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EventKind {
    Iteration,
    Recommendation,
    Validation,
}

/// One line of a trial trace.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TraceEvent {
    pub event: EventKind,
    pub k: Option<u32>,
    pub d_k: Option<usize>,
    #[serde(rename = "N_k")]
    pub n_k: Option<u64>,
    pub active_size: usize,
    pub pulls_total: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub target: Option<usize>,
}

/// Environment handle plus the algorithm's own randomness and trace.
pub struct SamplingContext<'a> {
    env: Environment<'a>,
    rng: ChaCha8Rng,
    trace: Option<Vec<TraceEvent>>,
    /// `(pulls so far, recommendation)` for each emitted recommendation.
    emissions: Vec<(u64, usize)>,
}

impl<'a> SamplingContext<'a> {
    pub fn new(env: Environment<'a>, rng: ChaCha8Rng, tracing: bool) -> Self {
        Self {
            env,
            rng,
            trace: tracing.then(Vec::new),
            emissions: Vec::new(),
        }
    }

    pub fn instance(&self) -> &'a Instance {
        self.env.instance()
    }

    pub fn pulls(&self) -> u64 {
        self.env.pulls()
    }

    pub fn pull(&mut self, arm: usize) -> Result<f64> {
        self.env.pull(arm)
    }

    pub fn pull_allocation(&mut self, alloc: &Allocation) -> Result<Vec<f64>> {
        self.env.pull_many(&alloc.counts)
    }

    pub fn random_target(&mut self) -> usize {
        self.rng
            .random_range(0..self.instance().geometry().num_targets())
    }

    pub(crate) fn log(&mut self, event: TraceEvent) {
        if let Some(t) = self.trace.as_mut() {
            t.push(event);
        }
    }

    pub(crate) fn log_iteration(&mut self, k: u32, d_k: usize, n_k: u64, active_size: usize) {
        let pulls_total = self.pulls();
        self.log(TraceEvent {
            event: EventKind::Iteration,
            k: Some(k),
            d_k: Some(d_k),
            n_k: Some(n_k),
            active_size,
            pulls_total,
            target: None,
        });
    }

    /// Publish the current recommendation.
    pub fn emit(&mut self, target: usize, active_size: usize) {
        let pulls_total = self.pulls();
        self.emissions.push((pulls_total, target));
        self.log(TraceEvent {
            event: EventKind::Recommendation,
            k: None,
            d_k: None,
            n_k: None,
            active_size,
            pulls_total,
            target: Some(target),
        });
    }

    pub fn emissions(&self) -> &[(u64, usize)] {
        &self.emissions
    }

    pub fn trace(&self) -> Option<&[TraceEvent]> {
        self.trace.as_deref()
    }

    pub fn into_trace(self) -> Option<Vec<TraceEvent>> {
        self.trace
    }
}

/// Largest `d` in `[1, d_cap]` with `g(d) <= budget`, scanning down from
/// `d_cap`. `g` need not be monotone.
pub fn opt_dim(
    budget: f64,
    d_cap: usize,
    mut g: impl FnMut(usize) -> Result<f64>,
) -> Result<Option<usize>> {
    for d in (1..=d_cap).rev() {
        if g(d)? <= budget {
            return Ok(Some(d));
        }
    }
    Ok(None)
}

/// Positive root of `p 2^p = t`, by bisection to `1e-12`.
pub fn w_of(t: f64) -> Result<f64> {
    if !(t > 0.0 && t.is_finite()) {
        return Err(Error::InvalidArgument(format!("W(T) needs T > 0, got {t}")));
    }
    let f = |p: f64| p * p.exp2();
    let mut hi = 1.0;
    while f(hi) < t {
        hi *= 2.0;
    }
    let mut lo = 0.0;
    while hi - lo > 1e-12 {
        let mid = 0.5 * (lo + hi);
        if f(mid) < t {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// `floor(W(t))` computed exactly: the largest integer `p` with `p 2^p <= t`.
pub fn floor_w(t: f64) -> u64 {
    let mut p = 0u64;
    while p < 1000 && ((p + 1) as f64) * ((p + 1) as f64).exp2() <= t {
        p += 1;
    }
    p
}

/// Least-squares fit from per-arm pull counts and reward sums.
pub struct Estimate {
    pub theta: DVector<f64>,
    pub pinv: PseudoInverse,
}

impl Estimate {
    /// `<theta, y>` and `||y||^2_{A^+}` (infinite off the range of `A`).
    pub fn score(&self, y: &DVector<f64>) -> (f64, f64) {
        (self.theta.dot(y), self.pinv.norm_sq(y))
    }
}

/// `theta = A^+ b` with `A = sum_i c_i x_i x_i^T` and `b = sum_i x_i s_i`.
pub fn least_squares(view: &TruncatedView<'_>, counts: &[u64], sums: &[f64]) -> Estimate {
    let x = view.arm_matrix();
    let w: Vec<f64> = counts.iter().map(|&c| c as f64).collect();
    let a = linalg::weighted_gram(&x, &w);
    let b = x.tr_mul(&DVector::from_column_slice(sums));
    let pinv = PseudoInverse::new(&a);
    if pinv.rank() < view.dim() {
        log::debug!(
            "rank-deficient sample matrix: rank {} in dimension {}",
            pinv.rank(),
            view.dim()
        );
    }
    Estimate {
        theta: pinv.apply(&b),
        pinv,
    }
}

/// `argmax_{z in candidates} <theta, psi_d(z)>`, ties to the first candidate.
pub fn recommend(view: &TruncatedView<'_>, theta: &DVector<f64>, candidates: &[usize]) -> usize {
    let mut best = candidates[0];
    let mut best_val = f64::NEG_INFINITY;
    for &z in candidates {
        let v = theta.dot(&view.target(z));
        if v > best_val {
            best = z;
            best_val = v;
        }
    }
    best
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn opt_dim_examples() {
        let sq = |d: usize| Ok((d * d) as f64);
        assert_eq!(opt_dim(10.0, 5, sq).unwrap(), Some(3));
        assert_eq!(opt_dim(0.5, 5, sq).unwrap(), None);
        let r = |d: usize| crate::rounding::r_d(d, 0.25, RoundingRule::Quadratic);
        assert_eq!(opt_dim(56.0, 10, r).unwrap(), Some(3));
    }

    #[test]
    fn opt_dim_non_monotone() {
        let g = |d: usize| Ok(if d == 4 { 1.0 } else { 100.0 });
        assert_eq!(opt_dim(2.0, 6, g).unwrap(), Some(4));
    }

    #[test]
    fn w_examples() {
        assert!((w_of(8.0).unwrap() - 2.0).abs() < 1e-10);
        assert!((w_of(24.0).unwrap() - 3.0).abs() < 1e-10);
        let w10 = w_of(10.0).unwrap();
        assert!(w10 > 2.0 && w10 < 3.0);
        assert_eq!(floor_w(8.0), 2);
        assert_eq!(floor_w(10.0), 2);
        assert_eq!(floor_w(24.0), 3);
        assert_eq!(floor_w(1.9), 0);
        assert!(w_of(0.0).is_err());
    }
}
