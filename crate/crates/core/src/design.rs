//! Min-max experimental design over the arm simplex.
//!
//! Every complexity measure in the crate reduces to one problem:
//!
//! ```text
//! inf_{lambda in simplex}  max_{y in W}  y^T A_d(lambda)^+ y,
//!     A_d(lambda) = sum_x lambda_x psi_d(x) psi_d(x)^T
//! ```
//!
//! for a finite direction set `W` (possibly gap-rescaled). It is solved by
//! away-step Frank-Wolfe on a log-sum-exp smoothing of the max, with
//! the temperature raised in stages. When the smoothing is sharp the
//! linearization reduces to the usual one along the maximizing direction,
//! `d f / d lambda_x = -(y*^T A^-1 psi_d(x))^2`.
//!
//! Stopping uses a primal-dual certificate. For any mixture `mu` over
//! directions, `g(lambda) = sum_y mu_y ||y||^2_{A(lambda)^-1}` is convex and
//! lower-bounds the max, so `g(lambda) - FWgap_mu(lambda)` is a lower bound on
//! the optimum. The solver stops once the best upper and lower bounds agree to
//! `tol` relative.

use std::collections::HashMap;
use std::sync::{Arc, RwLock};

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::instance::{Geometry, Instance, TruncatedView};
use crate::linalg::{self, PseudoInverse};

/// A probability vector over the action set.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Design {
    weights: Vec<f64>,
}

impl Design {
    pub fn new(weights: Vec<f64>) -> Result<Self> {
        if weights.is_empty() {
            return Err(Error::InvalidArgument("empty design".into()));
        }
        if weights.iter().any(|w| !w.is_finite() || *w < 0.0) {
            return Err(Error::InvalidArgument(format!(
                "design has negative or non-finite weights: {weights:?}"
            )));
        }
        let total: f64 = weights.iter().sum();
        if (total - 1.0).abs() > 1e-9 {
            return Err(Error::InvalidArgument(format!(
                "design weights sum to {total}"
            )));
        }
        Ok(Self { weights })
    }

    pub fn uniform(n: usize) -> Self {
        Self {
            weights: vec![1.0 / n as f64; n],
        }
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    /// `A_d(lambda)` in the given truncation.
    pub fn matrix(&self, view: &TruncatedView<'_>) -> DMatrix<f64> {
        linalg::weighted_gram(&view.arm_matrix(), &self.weights)
    }
}

/// Solver output: the design, its attained value and convergence data.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DesignSolution {
    pub design: Design,
    /// `max_y ||y||^2_{A(lambda)^+}` at the returned design.
    pub value: f64,
    pub iterations: usize,
    /// `(value - lower_bound) / value` at termination.
    pub relative_gap: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SolverConfig {
    /// Relative primal-dual gap at which to stop.
    pub tol: f64,
    pub max_iter: usize,
    /// Exact line search with away steps. When false, plain Frank-Wolfe
    /// with step `2 / (t + 2)`.
    pub line_search: bool,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            tol: 1e-2,
            max_iter: 10_000,
            line_search: true,
        }
    }
}

/// `y^T A_d(lambda)^+ y`, or `+inf` when `y` is outside the range of
/// `A_d(lambda)`.
pub fn weighted_norm_sq(y: &DVector<f64>, design: &Design, view: &TruncatedView<'_>) -> f64 {
    PseudoInverse::new(&design.matrix(view)).norm_sq(y)
}

/// `max_y ||y||^2` over a direction set at a fixed design (0 for an empty set).
pub fn design_value(directions: &[DVector<f64>], design: &Design, view: &TruncatedView<'_>) -> f64 {
    let pinv = PseudoInverse::new(&design.matrix(view));
    directions
        .iter()
        .map(|y| pinv.norm_sq(y))
        .fold(0.0, f64::max)
}

/// Ridge added inside the solver loop, relative to the mean diagonal of A.
const RIDGE: f64 = 1e-10;
/// Initial smoothing sharpness; the smoothing error is `log(m) / beta0`
/// relative to the current objective scale.
const BETA_START: f64 = 8.0;
const BETA_GROWTH: f64 = 4.0;
const BETA_MAX: f64 = 1e7;
const LINE_SEARCH_STEPS: usize = 60;

struct Evaluation {
    /// `||y_j||^2` for each direction.
    values: Vec<f64>,
    /// `G[x, j] = psi(x)^T A^-1 y_j`.
    cross: DMatrix<f64>,
    /// `||A^-1 y_j||^2`, for the ridge correction of the lower bound.
    solved_sq: Vec<f64>,
    ridge: f64,
    max: f64,
}

fn evaluate(x: &DMatrix<f64>, ys: &DMatrix<f64>, lambda: &[f64]) -> Evaluation {
    let d = x.ncols();
    let mut a = linalg::weighted_gram(x, lambda);
    let scale = (a.trace() / d as f64).max(f64::MIN_POSITIVE);
    let mut ridge = RIDGE * scale;
    let chol = loop {
        let mut ar = a.clone();
        for i in 0..d {
            ar[(i, i)] += ridge;
        }
        if let Some(c) = ar.cholesky() {
            break c;
        }
        ridge *= 100.0;
        if ridge > scale {
            // Only reachable for a zero design matrix.
            for i in 0..d {
                a[(i, i)] += scale;
            }
        }
    };
    let w = chol.solve(ys);
    let values: Vec<f64> = (0..ys.ncols())
        .map(|j| ys.column(j).dot(&w.column(j)).max(0.0))
        .collect();
    let solved_sq = (0..ys.ncols())
        .map(|j| w.column(j).norm_squared())
        .collect();
    let cross = x * &w;
    let max = values.iter().cloned().fold(0.0, f64::max);
    Evaluation {
        values,
        cross,
        solved_sq,
        ridge,
        max,
    }
}

/// Softmax weights `mu_j ~ exp(beta (v_j - max))`.
fn softmax(values: &[f64], max: f64, beta: f64) -> Vec<f64> {
    if !beta.is_finite() {
        return values
            .iter()
            .map(|&v| if v == max { 1.0 } else { 0.0 })
            .collect::<Vec<_>>()
            .normalized();
    }
    values
        .iter()
        .map(|&v| (beta * (v - max)).exp())
        .collect::<Vec<_>>()
        .normalized()
}

trait Normalized {
    fn normalized(self) -> Self;
}

impl Normalized for Vec<f64> {
    fn normalized(mut self) -> Self {
        let s: f64 = self.iter().sum();
        self.iter_mut().for_each(|v| *v /= s);
        self
    }
}

fn smoothed(values: impl Iterator<Item = f64> + Clone, beta: f64) -> f64 {
    let max = values.clone().fold(f64::NEG_INFINITY, f64::max);
    if !max.is_finite() || !beta.is_finite() {
        return max;
    }
    let s: f64 = values.map(|v| (beta * (v - max)).exp()).sum();
    max + s.ln() / beta
}

/// Minimize a convex function on `[0, hi]` by golden-section search.
fn golden_section(f: impl Fn(f64) -> f64, hi: f64) -> f64 {
    const INV_PHI: f64 = 0.618_033_988_749_894_8;
    let (mut a, mut b) = (0.0, hi);
    let mut c = b - INV_PHI * (b - a);
    let mut d = a + INV_PHI * (b - a);
    let (mut fc, mut fd) = (f(c), f(d));
    for _ in 0..LINE_SEARCH_STEPS {
        if fc <= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - INV_PHI * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + INV_PHI * (b - a);
            fd = f(d);
        }
    }
    let mid = 0.5 * (a + b);
    // The far endpoint is worth checking for drop steps.
    if f(hi) <= f(mid) {
        hi
    } else {
        mid
    }
}

/// Solve `inf_lambda max_{y in directions} ||y||^2_{A_d(lambda)^+}`.
///
/// Zero directions impose no constraint and are ignored; an empty (or
/// all-zero) direction set returns the uniform design with value 0.
/// On hitting `max_iter` the best design so far is returned inside
/// [`Error::NotConverged`].
pub fn solve_design(
    directions: &[DVector<f64>],
    view: &TruncatedView<'_>,
    cfg: &SolverConfig,
) -> Result<DesignSolution> {
    let d = view.dim();
    if let Some(bad) = directions.iter().find(|y| y.len() != d) {
        return Err(Error::InvalidArgument(format!(
            "direction of length {} in a {d}-dimensional view",
            bad.len()
        )));
    }
    if cfg.tol <= 0.0 {
        return Err(Error::InvalidArgument(format!(
            "solver tolerance {}",
            cfg.tol
        )));
    }
    let n = view.num_arms();
    let ys_vec: Vec<DVector<f64>> = directions
        .iter()
        .filter(|y| y.norm_squared() > 0.0)
        .cloned()
        .collect();
    if ys_vec.is_empty() {
        return Ok(DesignSolution {
            design: Design::uniform(n),
            value: 0.0,
            iterations: 0,
            relative_gap: 0.0,
        });
    }
    let x = view.arm_matrix();
    let ys = linalg::columns_to_matrix(&ys_vec, d);
    let m = ys.ncols();
    let log_m = (m as f64).ln();

    let mut lambda = vec![1.0 / n as f64; n];
    let mut best_lambda = lambda.clone();
    let mut best_ub = f64::INFINITY;
    let mut best_lb = 0.0_f64;
    let mut beta0 = BETA_START;
    let mut scale = f64::NAN;

    let finish = |lambda: Vec<f64>, iterations: usize, lb: f64| -> DesignSolution {
        let design = Design { weights: lambda };
        let value = design_value(&ys_vec, &design, view);
        let relative_gap = if value > 0.0 {
            ((value - lb) / value).max(0.0)
        } else {
            0.0
        };
        DesignSolution {
            design,
            value,
            iterations,
            relative_gap,
        }
    };

    for it in 0..cfg.max_iter {
        let ev = evaluate(&x, &ys, &lambda);
        if ev.max < best_ub {
            best_ub = ev.max;
            best_lambda.clone_from(&lambda);
        }
        if scale.is_nan() {
            scale = ev.max;
        }
        let beta = if m == 1 { f64::INFINITY } else { beta0 / scale };
        let mu = softmax(&ev.values, ev.max, beta);
        let mean: f64 = mu.iter().zip(&ev.values).map(|(a, b)| a * b).sum();
        let ridge_corr: f64 = ev.ridge
            * mu.iter()
                .zip(&ev.solved_sq)
                .map(|(a, b)| a * b)
                .sum::<f64>();
        // q_x = sum_j mu_j G[x, j]^2 is minus the smoothed gradient.
        let q: Vec<f64> = (0..n)
            .map(|i| (0..m).map(|j| mu[j] * ev.cross[(i, j)].powi(2)).sum())
            .collect();
        let (s, q_max) =
            q.iter()
                .cloned()
                .enumerate()
                .fold(
                    (0, f64::NEG_INFINITY),
                    |acc, (i, v)| if v > acc.1 { (i, v) } else { acc },
                );
        let inner: f64 = lambda.iter().zip(&q).map(|(l, q)| l * q).sum();
        let lb = mean - ridge_corr + inner - q_max;
        best_lb = best_lb.max(lb);
        if best_ub - best_lb <= cfg.tol * best_ub {
            return Ok(finish(best_lambda, it, best_lb));
        }

        let fw_gap = q_max - inner;
        if m > 1 && fw_gap <= scale * log_m / beta0 && beta0 < BETA_MAX {
            beta0 *= BETA_GROWTH;
            scale = best_ub;
            continue;
        }

        if !cfg.line_search {
            let step = 2.0 / (it as f64 + 2.0);
            lambda.iter_mut().for_each(|l| *l *= 1.0 - step);
            lambda[s] += step;
            continue;
        }

        let (a, q_min) = lambda
            .iter()
            .zip(&q)
            .enumerate()
            .filter(|(_, (l, _))| **l > 0.0)
            .fold(
                (s, f64::INFINITY),
                |acc, (i, (_, &qi))| if qi < acc.1 { (i, qi) } else { acc },
            );
        let away_gap = inner - q_min;
        let away = away_gap > fw_gap && lambda[a] < 1.0;
        let vertex = if away { a } else { s };
        let gamma_max = if away {
            lambda[a] / (1.0 - lambda[a])
        } else {
            1.0
        };
        // A(gamma) = alpha A + sign * gamma x x^T, updated with Sherman-Morrison.
        let xv = x.row(vertex).transpose();
        let a_now = {
            let mut a = linalg::weighted_gram(&x, &lambda);
            for i in 0..d {
                a[(i, i)] += ev.ridge;
            }
            a
        };
        let c = match a_now.cholesky() {
            Some(ch) => xv.dot(&ch.solve(&xv)),
            None => f64::INFINITY,
        };
        let cross_v: Vec<f64> = (0..m).map(|j| ev.cross[(vertex, j)]).collect();
        let values = &ev.values;
        let objective = |gamma: f64| -> f64 {
            let (alpha, b) = if away {
                (1.0 + gamma, -gamma)
            } else {
                (1.0 - gamma, gamma)
            };
            if alpha <= 0.0 {
                return f64::INFINITY;
            }
            let r = b / alpha;
            let denom = 1.0 + r * c;
            if denom <= 1e-12 {
                return f64::INFINITY;
            }
            let vals = values
                .iter()
                .zip(&cross_v)
                .map(|(&v, &g)| ((v - r * g * g / denom) / alpha).max(0.0));
            if beta.is_finite() {
                smoothed(vals, beta)
            } else {
                vals.fold(0.0, f64::max)
            }
        };
        let gamma = golden_section(objective, gamma_max);
        if gamma <= 0.0 {
            // No progress along the chosen direction: sharpen the smoothing.
            if m > 1 && beta0 < BETA_MAX {
                beta0 *= BETA_GROWTH;
                scale = best_ub;
                continue;
            }
            break;
        }
        if away {
            lambda.iter_mut().for_each(|l| *l *= 1.0 + gamma);
            if gamma >= gamma_max {
                lambda[a] = 0.0;
            } else {
                lambda[a] -= gamma;
            }
        } else {
            lambda.iter_mut().for_each(|l| *l *= 1.0 - gamma);
            lambda[s] += gamma;
        }
        lambda.iter_mut().for_each(|l| {
            if *l < 0.0 {
                *l = 0.0
            }
        });
        let total: f64 = lambda.iter().sum();
        lambda.iter_mut().for_each(|l| *l /= total);
    }

    let sol = finish(best_lambda, cfg.max_iter, best_lb);
    if sol.relative_gap <= cfg.tol {
        return Ok(sol);
    }
    let relative_gap = sol.relative_gap;
    Err(Error::NotConverged {
        best: Box::new(sol),
        iterations: cfg.max_iter,
        relative_gap,
    })
}

/// Turn [`Error::NotConverged`] into its best-so-far solution.
pub fn accept_best(result: Result<DesignSolution>) -> Result<DesignSolution> {
    match result {
        Err(Error::NotConverged {
            best, relative_gap, ..
        }) => {
            log::debug!("design solver stopped early at relative gap {relative_gap:.3e}");
            Ok(*best)
        }
        other => other,
    }
}

/// Like [`solve_design`] but accepts the best-so-far design on
/// non-convergence.
pub fn solve_design_lenient(
    directions: &[DVector<f64>],
    view: &TruncatedView<'_>,
    cfg: &SolverConfig,
) -> Result<DesignSolution> {
    accept_best(solve_design(directions, view, cfg))
}

/// `iota(Y(psi_d(S)))` over all pairwise differences of the targets in `set`.
/// Zero when `|S| <= 1`.
pub fn compute_iota(
    geometry: &Geometry,
    set: &[usize],
    d: usize,
    cfg: &SolverConfig,
) -> Result<DesignSolution> {
    let view = geometry.view(d)?;
    let dirs = view.target_directions(set);
    solve_design(&dirs, &view, cfg)
}

/// Directions `psi_d(z*) - psi_d(z)` for `z != z*`, each divided by `scale(z)`.
fn best_directions(
    inst: &Instance,
    view: &TruncatedView<'_>,
    scale: impl Fn(usize, &DVector<f64>) -> f64,
) -> Vec<DVector<f64>> {
    let best = inst.best_target();
    let zs = view.target(best);
    (0..inst.geometry().num_targets())
        .filter(|&t| t != best)
        .map(|t| {
            let y = &zs - view.target(t);
            let s = scale(t, &y);
            y / s
        })
        .collect()
}

/// `iota*_d`: the design value over `Y*(psi_d(Z))`.
pub fn compute_iota_star(inst: &Instance, d: usize, cfg: &SolverConfig) -> Result<DesignSolution> {
    let view = inst.geometry().view(d)?;
    let dirs = best_directions(inst, &view, |_, _| 1.0);
    solve_design(&dirs, &view, cfg)
}

/// Design attaining `rho*_d(eps)`; `eps = 0` gives `rho*_d`.
pub fn rho_design(
    inst: &Instance,
    d: usize,
    eps: f64,
    cfg: &SolverConfig,
) -> Result<DesignSolution> {
    if !(eps >= 0.0) {
        return Err(Error::InvalidArgument(format!("eps = {eps} < 0")));
    }
    let view = inst.geometry().view(d)?;
    let dirs = best_directions(inst, &view, |t, _| inst.gap(t).max(eps));
    solve_design(&dirs, &view, cfg)
}

/// `rho*_d(eps) = inf_lambda sup_{z != z*} ||psi_d(z*) - psi_d(z)||^2 / max(Delta_z, eps)^2`.
pub fn compute_rho(inst: &Instance, d: usize, eps: f64, cfg: &SolverConfig) -> Result<f64> {
    Ok(rho_design(inst, d, eps, cfg)?.value)
}

/// `rho~*_d(eps)`, with gaps of the linear surrogate `theta_d` in the
/// denominators. A surrogate gap that is not positive at `eps = 0` makes the
/// value infinite.
pub fn compute_rho_tilde(
    inst: &Instance,
    d: usize,
    eps: f64,
    theta_d: &[f64],
    cfg: &SolverConfig,
) -> Result<f64> {
    if theta_d.len() != d {
        return Err(Error::InvalidArgument(format!(
            "surrogate parameter has length {}, expected {d}",
            theta_d.len()
        )));
    }
    if !(eps >= 0.0) {
        return Err(Error::InvalidArgument(format!("eps = {eps} < 0")));
    }
    let view = inst.geometry().view(d)?;
    let theta = DVector::from_column_slice(theta_d);
    let denominator = |y: &DVector<f64>| theta.dot(y).max(eps);
    let best = inst.best_target();
    let zs = view.target(best);
    let nonpositive = (0..inst.geometry().num_targets())
        .filter(|&t| t != best)
        .any(|t| !(denominator(&(&zs - view.target(t))) > 0.0));
    if nonpositive {
        return Ok(f64::INFINITY);
    }
    let dirs = best_directions(inst, &view, |_, y| denominator(y));
    Ok(solve_design(&dirs, &view, cfg)?.value)
}

/// Complexity measures in one truncation.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ComplexityRecord {
    pub d: usize,
    pub iota_star: f64,
    pub rho_star: f64,
    /// `rho*_d(eps)`, when `eps` was given.
    pub rho_star_eps: Option<f64>,
    /// `rho~*_d(eps)` at the Chebyshev surrogate, when `eps` was given.
    pub rho_tilde_eps: Option<f64>,
    pub gamma_tilde: f64,
    /// `rho*_d log(1 / (2.4 delta))`.
    pub lower_bound_samples: f64,
    /// `rho*_d log(1 / delta) / 2`.
    pub static_lower_bound_samples: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ComplexityReport {
    pub delta: f64,
    pub eps: Option<f64>,
    pub records: Vec<ComplexityRecord>,
}

/// Every complexity measure for `d = 1..=D`. Non-converged solves report
/// their best design.
pub fn complexity_report(
    inst: &Instance,
    delta: f64,
    eps: Option<f64>,
    cfg: &SolverConfig,
) -> Result<ComplexityReport> {
    if !(delta > 0.0 && delta < 1.0) {
        return Err(Error::InvalidArgument(format!(
            "delta = {delta} outside (0, 1)"
        )));
    }
    let mut records = Vec::with_capacity(inst.dim());
    for d in 1..=inst.dim() {
        let iota_star = accept_best(compute_iota_star(inst, d, cfg))?.value;
        let rho_star = accept_best(rho_design(inst, d, 0.0, cfg))?.value;
        let fit = crate::misspec::chebyshev_fit(inst, d)?;
        let (rho_star_eps, rho_tilde_eps) = match eps {
            Some(e) => (
                Some(accept_best(rho_design(inst, d, e, cfg))?.value),
                Some(lenient_value(compute_rho_tilde(
                    inst, d, e, &fit.theta, cfg,
                ))?),
            ),
            None => (None, None),
        };
        records.push(ComplexityRecord {
            d,
            iota_star,
            rho_star,
            rho_star_eps,
            rho_tilde_eps,
            gamma_tilde: fit.gamma_tilde,
            lower_bound_samples: rho_star * (1.0 / (2.4 * delta)).ln(),
            static_lower_bound_samples: 0.5 * rho_star * (1.0 / delta).ln(),
        });
    }
    Ok(ComplexityReport {
        delta,
        eps,
        records,
    })
}

fn lenient_value(r: Result<f64>) -> Result<f64> {
    match r {
        Err(Error::NotConverged { best, .. }) => Ok(best.value),
        other => other,
    }
}

type DesignCache = RwLock<HashMap<(Vec<usize>, usize), Arc<DesignSolution>>>;

/// Memoized `iota(Y(psi_d(S)))` for one geometry.
///
/// The solver is deterministic, so cache hits never change results; the
/// cache is shared across the trials of a batch.
pub struct IotaOracle<'a> {
    geometry: &'a Geometry,
    cfg: SolverConfig,
    cache: DesignCache,
}

impl<'a> IotaOracle<'a> {
    pub fn new(geometry: &'a Geometry, cfg: SolverConfig) -> Self {
        Self {
            geometry,
            cfg,
            cache: RwLock::new(HashMap::new()),
        }
    }

    pub fn geometry(&self) -> &'a Geometry {
        self.geometry
    }

    pub fn config(&self) -> &SolverConfig {
        &self.cfg
    }

    /// `set` must be sorted.
    pub fn iota(&self, set: &[usize], d: usize) -> Result<Arc<DesignSolution>> {
        let key = (set.to_vec(), d);
        if let Some(hit) = self.cache.read().expect("poisoned cache").get(&key) {
            return Ok(Arc::clone(hit));
        }
        let view = self.geometry.view(d)?;
        let dirs = view.target_directions(set);
        let sol = Arc::new(solve_design_lenient(&dirs, &view, &self.cfg)?);
        self.cache
            .write()
            .expect("poisoned cache")
            .insert(key, Arc::clone(&sol));
        Ok(sol)
    }
}
