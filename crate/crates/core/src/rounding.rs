//! Integer allocations from continuous designs.
//!
//! The pipeline is: drop numerically-zero weights, mix singular designs with
//! the uniform design, reduce the support to at most `d(d+1)/2 + 1` points
//! without changing the design matrix, then apportion with the efficient
//! (Pukelsheim) rule. With `p` support points the efficient apportionment
//! has `m_i >= (N - p) w_i`, so the sample matrix dominates `(N - p) A(lambda)`
//! and the `(1 + zeta)` guarantee holds once `N >= r_d(zeta)`.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use serde::{Deserialize, Serialize};

use crate::design::Design;
use crate::error::{Error, Result};
use crate::instance::TruncatedView;
use crate::linalg::{self, PseudoInverse};

/// Weights below this are merged into the largest weight before rounding.
pub const MIN_WEIGHT: f64 = 1e-9;

/// Which sample floor `r_d(zeta)` to use.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RoundingRule {
    /// `(d^2 + d + 2) / zeta`
    #[default]
    Quadratic,
    /// `180 d / zeta^2`
    Linear,
}

/// Minimum number of samples for which rounding is guaranteed.
pub fn r_d(d: usize, zeta: f64, rule: RoundingRule) -> Result<f64> {
    if d == 0 {
        return Err(Error::InvalidArgument("r_d needs d >= 1".into()));
    }
    if !(zeta > 0.0) || !zeta.is_finite() {
        return Err(Error::InvalidArgument(format!(
            "zeta = {zeta} must be positive"
        )));
    }
    let d = d as f64;
    Ok(match rule {
        RoundingRule::Quadratic => (d * d + d + 2.0) / zeta,
        RoundingRule::Linear => 180.0 * d / (zeta * zeta),
    })
}

/// Pull counts over the action set.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Allocation {
    pub counts: Vec<u64>,
    pub total: u64,
}

impl Allocation {
    pub fn new(counts: Vec<u64>) -> Self {
        let total = counts.iter().sum();
        Self { counts, total }
    }

    /// `sum_i counts_i psi_d(x_i) psi_d(x_i)^T`.
    pub fn matrix(&self, view: &TruncatedView<'_>) -> DMatrix<f64> {
        let w: Vec<f64> = self.counts.iter().map(|&c| c as f64).collect();
        linalg::weighted_gram(&view.arm_matrix(), &w)
    }

    /// `max_y ||y||^2` under the sample matrix.
    pub fn value(&self, directions: &[DVector<f64>], view: &TruncatedView<'_>) -> f64 {
        let pinv = PseudoInverse::new(&self.matrix(view));
        directions
            .iter()
            .map(|y| pinv.norm_sq(y))
            .fold(0.0, f64::max)
    }
}

/// Efficient apportionment of `n` units to `weights`. Zero weights get zero
/// counts; ties go to the lowest index.
pub fn apportion(weights: &[f64], n: u64) -> Result<Vec<u64>> {
    let support: Vec<usize> = (0..weights.len()).filter(|&i| weights[i] > 0.0).collect();
    if support.is_empty() {
        return Err(Error::InvalidArgument(
            "apportioning an all-zero design".into(),
        ));
    }
    let p = support.len() as f64;
    let base = (n as f64 - p / 2.0).max(0.0);
    let mut m = vec![0u64; weights.len()];
    for &i in &support {
        m[i] = (base * weights[i]).ceil() as u64;
    }
    let mut total: u64 = m.iter().sum();
    while total < n {
        let j = *support
            .iter()
            .min_by(|&&a, &&b| {
                (m[a] as f64 / weights[a])
                    .partial_cmp(&(m[b] as f64 / weights[b]))
                    .unwrap()
                    .then(a.cmp(&b))
            })
            .unwrap();
        m[j] += 1;
        total += 1;
    }
    while total > n {
        let k = *support
            .iter()
            .filter(|&&i| m[i] > 0)
            .max_by(|&&a, &&b| {
                ((m[a] - 1) as f64 / weights[a])
                    .partial_cmp(&((m[b] - 1) as f64 / weights[b]))
                    .unwrap()
                    .then(b.cmp(&a))
            })
            .unwrap();
        m[k] -= 1;
        total -= 1;
    }
    Ok(m)
}

/// Merge weights below [`MIN_WEIGHT`] into the largest one.
fn drop_tiny(weights: &[f64]) -> Vec<f64> {
    let mut w = weights.to_vec();
    let largest = (0..w.len())
        .max_by(|&a, &b| w[a].partial_cmp(&w[b]).unwrap().then(b.cmp(&a)))
        .unwrap();
    let mut moved = 0.0;
    for (i, v) in w.iter_mut().enumerate() {
        if i != largest && *v < MIN_WEIGHT {
            moved += *v;
            *v = 0.0;
        }
    }
    w[largest] += moved;
    w
}

/// Maximum support size needed to represent any design matrix in dimension `d`.
pub fn support_bound(d: usize) -> usize {
    d * (d + 1) / 2 + 1
}

/// Move weight along null vectors of `[vec(x x^T); 1]` until at most
/// `d(d+1)/2 + 1` points remain. The design matrix is unchanged.
pub fn reduce_support(view: &TruncatedView<'_>, weights: &[f64]) -> Vec<f64> {
    let d = view.dim();
    let bound = support_bound(d);
    let mut w = weights.to_vec();
    let rows = d * (d + 1) / 2 + 1;
    loop {
        let support: Vec<usize> = (0..w.len()).filter(|&i| w[i] > 0.0).collect();
        if support.len() <= bound {
            return w;
        }
        let m = DMatrix::from_fn(rows, support.len(), |r, c| {
            if r + 1 == rows {
                return 1.0;
            }
            let x = view.arm(support[c]);
            let (i, j) = sym_index(r, d);
            x[i] * x[j]
        });
        let eig = SymmetricEigen::new(m.tr_mul(&m));
        let idx = eig
            .eigenvalues
            .iter()
            .enumerate()
            .min_by(|a, b| a.1.partial_cmp(b.1).unwrap())
            .map(|(i, _)| i)
            .unwrap();
        let mut v: Vec<f64> = eig.eigenvectors.column(idx).iter().cloned().collect();
        if v.iter().all(|&c| c <= 0.0) {
            v.iter_mut().for_each(|c| *c = -*c);
        }
        // Largest step keeping all weights non-negative.
        let (hit, t) = support
            .iter()
            .zip(&v)
            .filter(|(_, &c)| c > 0.0)
            .map(|(&i, &c)| (i, w[i] / c))
            .min_by(|a, b| a.1.partial_cmp(&b.1).unwrap())
            .expect("null vector has a positive entry");
        for (&i, &c) in support.iter().zip(&v) {
            w[i] = (w[i] - t * c).max(0.0);
        }
        w[hit] = 0.0;
        let total: f64 = w.iter().sum();
        w.iter_mut().for_each(|x| *x /= total);
    }
}

/// Row `r` of the upper-triangular vectorization of a `d x d` symmetric matrix.
fn sym_index(r: usize, d: usize) -> (usize, usize) {
    let mut r = r;
    for i in 0..d {
        let len = d - i;
        if r < len {
            return (i, i + r);
        }
        r -= len;
    }
    unreachable!("index outside the symmetric vectorization")
}

/// Prepared weights: tiny weights dropped, singular designs mixed with the
/// uniform design at `zeta / 4`, support reduced.
fn prepare(design: &Design, view: &TruncatedView<'_>, zeta: f64) -> Vec<f64> {
    let mut w = drop_tiny(design.weights());
    let d = view.dim();
    let x = view.arm_matrix();
    if linalg::rank(&linalg::weighted_gram(&x, &w)) < d && linalg::rank(&x) == d {
        let mix = zeta / 4.0;
        let n = w.len() as f64;
        w.iter_mut().for_each(|v| *v = (1.0 - mix) * *v + mix / n);
    }
    reduce_support(view, &w)
}

/// Round without the floor precondition or the post-check.
pub fn round_unchecked(
    design: &Design,
    n: u64,
    view: &TruncatedView<'_>,
    zeta: f64,
) -> Result<Allocation> {
    if design.len() != view.num_arms() {
        return Err(Error::InvalidArgument(format!(
            "design over {} arms for {} arms",
            design.len(),
            view.num_arms()
        )));
    }
    let w = prepare(design, view, zeta);
    Ok(Allocation::new(apportion(&w, n)?))
}

/// Round `design` to `n` samples and verify
/// `max_y ||y||^2_{(sum x x^T)^+} <= (1 + zeta) max_y ||y||^2_{A(lambda)^+} / n`.
pub fn round_design(
    design: &Design,
    n: u64,
    view: &TruncatedView<'_>,
    directions: &[DVector<f64>],
    zeta: f64,
    rule: RoundingRule,
) -> Result<Allocation> {
    let d = view.dim();
    let floor = r_d(d, zeta, rule)?;
    if (n as f64) < floor {
        return Err(Error::BelowRoundingFloor {
            dim: d,
            floor,
            requested: n,
        });
    }
    let alloc = round_unchecked(design, n, view, zeta)?;
    let continuous = crate::design::design_value(directions, design, view);
    if continuous.is_finite() {
        let bound = (1.0 + zeta) * continuous / n as f64;
        let achieved = alloc.value(directions, view);
        if achieved > bound * (1.0 + 1e-9) {
            return Err(Error::RoundingGuarantee {
                achieved,
                bound,
                total: n,
                dim: d,
            });
        }
    }
    Ok(alloc)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::instance::{Arm, Geometry};

    fn basis(n: usize) -> Geometry {
        let arms: Vec<Arm> = (0..n).map(|i| Arm::basis(i, n)).collect();
        Geometry::new(arms.clone(), arms).unwrap()
    }

    #[test]
    fn floor_values() {
        assert_eq!(r_d(3, 0.25, RoundingRule::Quadratic).unwrap(), 56.0);
        assert_eq!(r_d(1, 0.25, RoundingRule::Quadratic).unwrap(), 16.0);
        assert_eq!(r_d(3, 0.25, RoundingRule::Linear).unwrap(), 8640.0);
        assert!(r_d(3, 0.0, RoundingRule::Quadratic).is_err());
        assert!(r_d(0, 0.1, RoundingRule::Quadratic).is_err());
    }

    #[test]
    fn apportion_examples() {
        assert_eq!(apportion(&[0.5, 0.5], 4).unwrap(), vec![2, 2]);
        assert_eq!(apportion(&[0.5, 0.5], 5).unwrap(), vec![3, 2]);
        assert_eq!(apportion(&[0.0, 1.0], 3).unwrap(), vec![0, 3]);
        assert_eq!(
            apportion(&[0.2, 0.3, 0.5], 1).unwrap().iter().sum::<u64>(),
            1
        );
    }

    #[test]
    fn two_arm_rounding() {
        let g = basis(2);
        let view = g.view(2).unwrap();
        let dirs = view.target_directions(&[0, 1]);
        let half = Design::uniform(2);
        let a = round_design(&half, 64, &view, &dirs, 0.25, RoundingRule::Quadratic).unwrap();
        assert_eq!(a.counts, vec![32, 32]);
        assert!(round_design(&half, 10, &view, &dirs, 0.25, RoundingRule::Quadratic).is_err());
    }

    #[test]
    fn support_reduction_preserves_matrix() {
        // Seven arms in R^2 need at most four support points.
        let arms: Vec<Arm> = (0..7)
            .map(|i| {
                let t = i as f64 * 0.45;
                Arm::new(vec![t.cos(), t.sin()]).unwrap()
            })
            .collect();
        let g = Geometry::new(arms.clone(), arms).unwrap();
        let view = g.view(2).unwrap();
        let w = vec![1.0 / 7.0; 7];
        let reduced = reduce_support(&view, &w);
        assert!(reduced.iter().filter(|&&v| v > 0.0).count() <= 4);
        let before = linalg::weighted_gram(&view.arm_matrix(), &w);
        let after = linalg::weighted_gram(&view.arm_matrix(), &reduced);
        assert!((before - after).norm() < 1e-10);
    }

    #[test]
    fn singular_design_gets_mixed() {
        let g = basis(2);
        let view = g.view(2).unwrap();
        let corner = Design::new(vec![1.0, 0.0]).unwrap();
        let a = round_unchecked(&corner, 100, &view, 0.2).unwrap();
        assert!(a.counts[1] >= 1);
        assert_eq!(a.total, 100);
    }

    #[test]
    fn sym_index_covers_upper_triangle() {
        let idx: Vec<_> = (0..6).map(|r| sym_index(r, 3)).collect();
        assert_eq!(idx, vec![(0, 0), (0, 1), (0, 2), (1, 1), (1, 2), (2, 2)]);
    }
}
