//! Misspecification diagnostics: the best uniform linear fit in each
//! truncation, the achievable-optimality level `gamma(d)` and `d*(eps)`.
//!
//! These use the true reward table and oracle gaps. Learners never call them.

use std::collections::BTreeMap;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::design::{IotaOracle, SolverConfig};
use crate::error::{Error, Result};
use crate::instance::{stratum, Instance};
use crate::lp;

/// Cap on `n` in the `gamma(d)` search.
pub const N_MAX: u32 = 60;

/// Fit residuals below `RESIDUAL_FLOOR * max |h|` are round-off and reported as 0.
pub const RESIDUAL_FLOOR: f64 = 1e-12;

/// Chebyshev fit `min_theta max_x |h(x) - <theta, psi_d(x)>|` over arms and targets.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ChebyshevFit {
    pub theta: Vec<f64>,
    pub gamma_tilde: f64,
}

/// Truncated points of arms and of targets that are not arms, with rewards.
fn fit_points(inst: &Instance, d: usize) -> Result<(DMatrix<f64>, Vec<f64>)> {
    let g = inst.geometry();
    let view = g.view(d)?;
    let mut rows = Vec::new();
    let mut h = Vec::new();
    for i in 0..g.num_arms() {
        rows.push(view.arm(i));
        h.push(inst.arm_reward(i));
    }
    for t in 0..g.num_targets() {
        if g.target_arm(t).is_none() {
            rows.push(view.target(t));
            h.push(inst.target_reward(t));
        }
    }
    Ok((crate::linalg::rows_to_matrix(&rows, d), h))
}

/// Max absolute residual of `theta` on all arms and targets.
pub fn max_residual(inst: &Instance, theta: &[f64]) -> Result<f64> {
    let (x, h) = fit_points(inst, theta.len())?;
    let pred = &x * DVector::from_column_slice(theta);
    Ok(h.iter()
        .zip(pred.iter())
        .map(|(a, b)| (a - b).abs())
        .fold(0.0, f64::max))
}

/// Solve the fit as `max u` over `theta = theta+ - theta-`, `t = T0 - u`:
///
/// ```text
///  X theta+ - X theta- + u <= h + T0
/// -X theta+ + X theta- + u <= T0 - h
///                        u <= T0
/// ```
///
/// with `T0 = max |h|`, so every right-hand side is non-negative.
pub fn chebyshev_fit(inst: &Instance, d: usize) -> Result<ChebyshevFit> {
    if d == 0 {
        return Err(Error::InvalidArgument("fit needs d >= 1".into()));
    }
    let (x, h) = fit_points(inst, d)?;
    let m = x.nrows();
    let t0 = h.iter().fold(0.0_f64, |s, v| s.max(v.abs()));
    let nvar = 2 * d + 1;
    let mut a = DMatrix::zeros(2 * m + 1, nvar);
    let mut b = Vec::with_capacity(2 * m + 1);
    for i in 0..m {
        for j in 0..d {
            a[(i, j)] = x[(i, j)];
            a[(i, d + j)] = -x[(i, j)];
            a[(m + i, j)] = -x[(i, j)];
            a[(m + i, d + j)] = x[(i, j)];
        }
        a[(i, 2 * d)] = 1.0;
        a[(m + i, 2 * d)] = 1.0;
        b.push(h[i] + t0);
    }
    for &hi in &h {
        b.push(t0 - hi);
    }
    a[(2 * m, 2 * d)] = 1.0;
    b.push(t0);
    let mut c = vec![0.0; nvar];
    c[2 * d] = 1.0;
    let sol = lp::maximize(&a, &b, &c)?;
    let theta: Vec<f64> = (0..d).map(|j| sol.x[j] - sol.x[d + j]).collect();
    let mut gamma_tilde = max_residual(inst, &theta)?;
    if gamma_tilde <= RESIDUAL_FLOOR * t0.max(1.0) {
        gamma_tilde = 0.0;
    }
    Ok(ChebyshevFit { theta, gamma_tilde })
}

/// `(2 + sqrt((1 + zeta) iota(S_k))) gamma~ <= 2^-k / 2`.
fn round_condition(
    inst: &Instance,
    oracle: &IotaOracle<'_>,
    d: usize,
    k: u32,
    gamma_tilde: f64,
    zeta: f64,
) -> Result<bool> {
    let s = stratum(inst, k)?;
    let iota = oracle.iota(&s, d)?.value;
    Ok((2.0 + ((1.0 + zeta) * iota).sqrt()) * gamma_tilde <= 0.5 * 0.5f64.powi(k as i32))
}

fn gamma_with(
    inst: &Instance,
    oracle: &IotaOracle<'_>,
    d: usize,
    gamma_tilde: f64,
    zeta: f64,
) -> Result<f64> {
    let mut n = 0;
    for k in 1..=N_MAX {
        if !round_condition(inst, oracle, d, k, gamma_tilde, zeta)? {
            break;
        }
        n = k;
    }
    Ok(2.0 * 0.5f64.powi(n as i32))
}

/// `gamma(d) = min { 2 * 2^-n : the round condition holds for all k <= n }`, `n <= 60`.
pub fn compute_gamma(inst: &Instance, d: usize, zeta: f64, cfg: &SolverConfig) -> Result<f64> {
    let fit = chebyshev_fit(inst, d)?;
    let oracle = IotaOracle::new(inst.geometry(), *cfg);
    gamma_with(inst, &oracle, d, fit.gamma_tilde, zeta)
}

/// Upper bound `(16 + 16 sqrt((1 + zeta) d)) gamma~(d)`.
pub fn gamma_bound(d: usize, zeta: f64, gamma_tilde: f64) -> f64 {
    (16.0 + 16.0 * ((1.0 + zeta) * d as f64).sqrt()) * gamma_tilde
}

/// Smallest `d` such that `gamma(d') <= eps` for every `d' >= d`.
pub fn d_star_from_gammas(gammas: &[f64], eps: f64) -> Result<usize> {
    if !(eps > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "eps = {eps} must be positive"
        )));
    }
    let dim = gammas.len();
    let mut best = None;
    for d in (1..=dim).rev() {
        if gammas[d - 1] <= eps {
            best = Some(d);
        } else {
            break;
        }
    }
    best.ok_or(Error::EpsilonUnreachable { eps, dim })
}

pub fn compute_d_star(inst: &Instance, eps: f64, zeta: f64, cfg: &SolverConfig) -> Result<usize> {
    let profile = misspec_profile(inst, zeta, &[], cfg)?;
    d_star_from_gammas(&profile.gammas(), eps)
}

/// When `gamma(d) <= eps`, replay the round condition for every
/// `k <= ceil(log2(2 / eps))`. Vacuously true otherwise.
pub fn check_round_number(
    inst: &Instance,
    d: usize,
    eps: f64,
    zeta: f64,
    cfg: &SolverConfig,
) -> Result<bool> {
    if !(eps > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "eps = {eps} must be positive"
        )));
    }
    let fit = chebyshev_fit(inst, d)?;
    let oracle = IotaOracle::new(inst.geometry(), *cfg);
    if gamma_with(inst, &oracle, d, fit.gamma_tilde, zeta)? > eps {
        return Ok(true);
    }
    let k_max = (2.0 / eps).log2().ceil().max(1.0) as u32;
    for k in 1..=k_max {
        if !round_condition(inst, &oracle, d, k, fit.gamma_tilde, zeta)? {
            return Ok(false);
        }
    }
    Ok(true)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DimensionRecord {
    pub d: usize,
    pub gamma_tilde: f64,
    pub theta: Vec<f64>,
    pub gamma: f64,
    pub bound: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MisspecProfile {
    pub records: Vec<DimensionRecord>,
    /// `d*(eps)` for each requested `eps`, keyed by its decimal rendering;
    /// `None` when unreachable.
    pub d_star: BTreeMap<String, Option<usize>>,
}

impl MisspecProfile {
    pub fn gammas(&self) -> Vec<f64> {
        self.records.iter().map(|r| r.gamma).collect()
    }
}

/// Per-dimension fits and `gamma(d)` for `d = 1..=D`, plus `d*(eps)`.
pub fn misspec_profile(
    inst: &Instance,
    zeta: f64,
    eps_list: &[f64],
    cfg: &SolverConfig,
) -> Result<MisspecProfile> {
    let oracle = IotaOracle::new(inst.geometry(), *cfg);
    let mut records = Vec::with_capacity(inst.dim());
    for d in 1..=inst.dim() {
        let fit = chebyshev_fit(inst, d)?;
        let gamma = gamma_with(inst, &oracle, d, fit.gamma_tilde, zeta)?;
        records.push(DimensionRecord {
            d,
            gamma_tilde: fit.gamma_tilde,
            bound: gamma_bound(d, zeta, fit.gamma_tilde),
            theta: fit.theta,
            gamma,
        });
    }
    let gammas: Vec<f64> = records.iter().map(|r| r.gamma).collect();
    let mut d_star = BTreeMap::new();
    for &eps in eps_list {
        let v = match d_star_from_gammas(&gammas, eps) {
            Ok(d) => Some(d),
            Err(Error::EpsilonUnreachable { .. }) => None,
            Err(e) => return Err(e),
        };
        d_star.insert(format!("{eps}"), v);
    }
    Ok(MisspecProfile { records, d_star })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::instance::{make_hard_instance, make_misspecified_instance, Arm, RewardTable};

    fn two_arm() -> Instance {
        let arms = vec![Arm::basis(0, 2), Arm::basis(1, 2)];
        make_misspecified_instance(
            arms,
            None,
            RewardTable {
                arms: vec![1.0, 0.3],
                targets: None,
            },
            true,
        )
        .unwrap()
    }

    #[test]
    fn two_arm_fit() {
        let inst = two_arm();
        let f1 = chebyshev_fit(&inst, 1).unwrap();
        assert!((f1.gamma_tilde - 0.3).abs() < 1e-9);
        // Any theta_1 in [0.7, 1.3] is optimal.
        assert!(f1.theta[0] >= 0.7 - 1e-9 && f1.theta[0] <= 1.3 + 1e-9);
        let f2 = chebyshev_fit(&inst, 2).unwrap();
        assert!(f2.gamma_tilde < 1e-9, "{f2:?}");
    }

    #[test]
    fn two_arm_gamma_and_d_star() {
        let inst = two_arm();
        let cfg = SolverConfig::default();
        assert_eq!(compute_gamma(&inst, 1, 0.25, &cfg).unwrap(), 2.0);
        assert!(compute_gamma(&inst, 2, 0.25, &cfg).unwrap() <= 2.0 * 0.5f64.powi(60));
        assert_eq!(compute_d_star(&inst, 0.1, 0.25, &cfg).unwrap(), 2);
        assert_eq!(compute_d_star(&inst, 3.0, 0.25, &cfg).unwrap(), 1);
    }

    #[test]
    fn linear_instance_fits_exactly() {
        let inst = make_hard_instance(3, 0.1, false).unwrap();
        let fit = chebyshev_fit(&inst, 3).unwrap();
        assert!(fit.gamma_tilde < 1e-9);
        let theta = inst.theta().unwrap();
        for (a, b) in fit.theta.iter().zip(theta) {
            assert!((a - b).abs() < 1e-9);
        }
        assert!(check_round_number(&inst, 3, 0.05, 0.25, &SolverConfig::default()).unwrap());
    }

    #[test]
    fn unreachable_eps() {
        assert!(matches!(
            d_star_from_gammas(&[2.0, 1.0], 0.5),
            Err(Error::EpsilonUnreachable { .. })
        ));
        assert_eq!(d_star_from_gammas(&[0.1, 1.0, 0.1], 0.5).unwrap(), 3);
    }
}
