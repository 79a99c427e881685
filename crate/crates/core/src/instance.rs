//! Transductive linear-bandit instances.
//!
//! An [`Instance`] pairs a [`Geometry`] (the action set, the target set and
//! the ambient dimension, which is all a learner may see) with the reward
//! table and gaps, which only the simulator and diagnostics consult.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg;

/// Two targets whose rewards differ by less than this are treated as tied.
pub const TIE_TOL: f64 = 1e-9;

/// Slack allowed on the `max gap <= 2` requirement.
const MAX_GAP: f64 = 2.0 + 1e-12;

/// A feature vector in `R^D`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct Arm {
    coords: Vec<f64>,
}

impl TryFrom<Vec<f64>> for Arm {
    type Error = Error;

    fn try_from(coords: Vec<f64>) -> Result<Self> {
        Arm::new(coords)
    }
}

impl From<Arm> for Vec<f64> {
    fn from(arm: Arm) -> Self {
        arm.coords
    }
}

impl Arm {
    pub fn new(coords: Vec<f64>) -> Result<Self> {
        if coords.is_empty() {
            return Err(Error::InvalidArgument("arm has no coordinates".into()));
        }
        if coords.iter().any(|c| !c.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "arm has non-finite coordinates: {coords:?}"
            )));
        }
        Ok(Self { coords })
    }

    /// Canonical basis vector `e_i` (0-based `i`) in `R^dim`.
    pub fn basis(i: usize, dim: usize) -> Self {
        let mut coords = vec![0.0; dim];
        coords[i] = 1.0;
        Self { coords }
    }

    pub fn coords(&self) -> &[f64] {
        &self.coords
    }

    pub fn dim(&self) -> usize {
        self.coords.len()
    }

    pub fn dot(&self, theta: &[f64]) -> f64 {
        self.coords.iter().zip(theta).map(|(a, b)| a * b).sum()
    }

    /// First `d` coordinates.
    pub fn truncate(&self, d: usize) -> Result<DVector<f64>> {
        truncate(self, d)
    }
}

/// `psi_d(x)`: the prefix of `x` of length `d`.
pub fn truncate(x: &Arm, d: usize) -> Result<DVector<f64>> {
    if d == 0 || d > x.dim() {
        return Err(Error::InvalidArgument(format!(
            "truncation dimension {d} outside [1, {}]",
            x.dim()
        )));
    }
    Ok(DVector::from_column_slice(&x.coords[..d]))
}

/// All differences `psi_d(z) - psi_d(z')` over unordered pairs of `set`,
/// keeping one representative of each `+-y` pair.
///
/// Pairs are visited in index order `(i, j)` with `i < j` and `z_i - z_j` is
/// the representative kept.
pub fn directions(set: &[&Arm], d: usize) -> Result<Vec<DVector<f64>>> {
    let truncated = set
        .iter()
        .map(|x| truncate(x, d))
        .collect::<Result<Vec<_>>>()?;
    Ok(pairwise_directions(&truncated))
}

pub(crate) fn pairwise_directions(points: &[DVector<f64>]) -> Vec<DVector<f64>> {
    let mut out: Vec<DVector<f64>> = Vec::new();
    for i in 0..points.len() {
        for j in i + 1..points.len() {
            let y = &points[i] - &points[j];
            if !out.iter().any(|o| same_up_to_sign(o, &y)) {
                out.push(y);
            }
        }
    }
    out
}

fn same_up_to_sign(a: &DVector<f64>, b: &DVector<f64>) -> bool {
    a.iter().zip(b.iter()).all(|(x, y)| x == y) || a.iter().zip(b.iter()).all(|(x, y)| *x == -*y)
}

/// Everything a learner is allowed to observe: arms, targets and `D`.
#[derive(Clone, Debug, PartialEq)]
pub struct Geometry {
    dim: usize,
    arms: Vec<Arm>,
    targets: Vec<Arm>,
    /// Index into `arms` of each target whose coordinates coincide with an arm.
    target_arm: Vec<Option<usize>>,
}

impl Geometry {
    pub fn new(arms: Vec<Arm>, targets: Vec<Arm>) -> Result<Self> {
        if arms.is_empty() {
            return Err(Error::InvalidInstance("empty action set".into()));
        }
        if targets.is_empty() {
            return Err(Error::InvalidInstance("empty target set".into()));
        }
        let dim = arms[0].dim();
        if let Some(bad) = arms.iter().chain(&targets).find(|a| a.dim() != dim) {
            return Err(Error::InvalidInstance(format!(
                "arm of length {} in a {dim}-dimensional instance",
                bad.dim()
            )));
        }
        let rows = DMatrix::from_fn(arms.len(), dim, |r, c| arms[r].coords[c]);
        let rank = linalg::rank(&rows);
        if rank != dim {
            return Err(Error::InvalidInstance(format!(
                "action set spans a {rank}-dimensional subspace of R^{dim}"
            )));
        }
        let target_arm = targets
            .iter()
            .map(|z| arms.iter().position(|x| x == z))
            .collect();
        Ok(Self {
            dim,
            arms,
            targets,
            target_arm,
        })
    }

    /// Ambient dimension `D`.
    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn arms(&self) -> &[Arm] {
        &self.arms
    }

    pub fn targets(&self) -> &[Arm] {
        &self.targets
    }

    pub fn num_arms(&self) -> usize {
        self.arms.len()
    }

    pub fn num_targets(&self) -> usize {
        self.targets.len()
    }

    /// Arm index coinciding with target `t`, if any.
    pub fn target_arm(&self, t: usize) -> Option<usize> {
        self.target_arm[t]
    }

    /// Whether every target is also an action (`Z subset X`).
    pub fn targets_in_arms(&self) -> bool {
        self.target_arm.iter().all(Option::is_some)
    }

    pub fn view(&self, dim: usize) -> Result<TruncatedView<'_>> {
        TruncatedView::new(self, dim)
    }
}

/// The instance seen through `psi_d`.
#[derive(Clone, Copy, Debug)]
pub struct TruncatedView<'a> {
    geometry: &'a Geometry,
    dim: usize,
}

impl<'a> TruncatedView<'a> {
    pub fn new(geometry: &'a Geometry, dim: usize) -> Result<Self> {
        if dim == 0 || dim > geometry.dim() {
            return Err(Error::InvalidArgument(format!(
                "truncation dimension {dim} outside [1, {}]",
                geometry.dim()
            )));
        }
        Ok(Self { geometry, dim })
    }

    pub fn geometry(&self) -> &'a Geometry {
        self.geometry
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn num_arms(&self) -> usize {
        self.geometry.num_arms()
    }

    pub fn arm(&self, i: usize) -> DVector<f64> {
        DVector::from_column_slice(&self.geometry.arms[i].coords[..self.dim])
    }

    pub fn target(&self, i: usize) -> DVector<f64> {
        DVector::from_column_slice(&self.geometry.targets[i].coords[..self.dim])
    }

    /// Truncated arms stacked as rows (`|X| x d`).
    pub fn arm_matrix(&self) -> DMatrix<f64> {
        DMatrix::from_fn(self.num_arms(), self.dim, |r, c| {
            self.geometry.arms[r].coords[c]
        })
    }

    /// `Y(psi_d(S))` for a set of target indices.
    pub fn target_directions(&self, targets: &[usize]) -> Vec<DVector<f64>> {
        let pts: Vec<_> = targets.iter().map(|&t| self.target(t)).collect();
        pairwise_directions(&pts)
    }
}

/// A bandit instance: geometry plus the reward table.
#[derive(Clone, Debug)]
pub struct Instance {
    geometry: Geometry,
    arm_rewards: Vec<f64>,
    target_rewards: Vec<f64>,
    theta: Option<Vec<f64>>,
    intrinsic_dim: Option<usize>,
    best: usize,
    gaps: Vec<f64>,
}

/// Reward table for [`make_misspecified_instance`].
#[derive(Clone, Debug, PartialEq)]
pub struct RewardTable {
    pub arms: Vec<f64>,
    /// `None` when the targets are the arms.
    pub targets: Option<Vec<f64>>,
}

impl Instance {
    /// Exactly linear instance `h(x) = <theta, x>`. `targets = None` means
    /// `Z = X`. When `intrinsic_dim` is `None` it is inferred as the support
    /// length of `theta`.
    pub fn linear(
        arms: Vec<Arm>,
        targets: Option<Vec<Arm>>,
        theta: Vec<f64>,
        intrinsic_dim: Option<usize>,
    ) -> Result<Self> {
        let targets = targets.unwrap_or_else(|| arms.clone());
        let geometry = Geometry::new(arms, targets)?;
        if theta.len() != geometry.dim() {
            return Err(Error::InvalidInstance(format!(
                "theta has length {}, expected {}",
                theta.len(),
                geometry.dim()
            )));
        }
        if theta.iter().any(|t| !t.is_finite()) {
            return Err(Error::InvalidInstance(
                "theta has non-finite entries".into(),
            ));
        }
        let support = theta.iter().rposition(|&t| t != 0.0).map_or(1, |p| p + 1);
        let d_star = match intrinsic_dim {
            Some(d) if d == 0 || d > geometry.dim() => {
                return Err(Error::InvalidInstance(format!(
                    "intrinsic dimension {d} outside [1, {}]",
                    geometry.dim()
                )))
            }
            Some(d) if d < support => {
                return Err(Error::InvalidInstance(format!(
                    "theta has non-zero entries beyond intrinsic dimension {d}"
                )))
            }
            Some(d) => d,
            None => support,
        };
        let arm_rewards = geometry.arms().iter().map(|x| x.dot(&theta)).collect();
        let target_rewards = geometry.targets().iter().map(|z| z.dot(&theta)).collect();
        Self::assemble(
            geometry,
            arm_rewards,
            target_rewards,
            Some(theta),
            Some(d_star),
        )
    }

    /// Instance with an arbitrary reward table; `true_theta` is absent.
    pub fn from_rewards(
        arms: Vec<Arm>,
        targets: Option<Vec<Arm>>,
        rewards: RewardTable,
    ) -> Result<Self> {
        let same = targets.is_none();
        let targets = targets.unwrap_or_else(|| arms.clone());
        let geometry = Geometry::new(arms, targets)?;
        if rewards.arms.len() != geometry.num_arms() {
            return Err(Error::InvalidArgument(format!(
                "reward table covers {} of {} arms",
                rewards.arms.len(),
                geometry.num_arms()
            )));
        }
        let target_rewards = match (rewards.targets, same) {
            (Some(t), _) => {
                if t.len() != geometry.num_targets() {
                    return Err(Error::InvalidArgument(format!(
                        "reward table covers {} of {} targets",
                        t.len(),
                        geometry.num_targets()
                    )));
                }
                t
            }
            (None, true) => rewards.arms.clone(),
            (None, false) => {
                return Err(Error::InvalidArgument(
                    "reward table has no entries for the targets".into(),
                ))
            }
        };
        for (t, &reward) in target_rewards.iter().enumerate() {
            if let Some(a) = geometry.target_arm(t) {
                if (rewards.arms[a] - reward).abs() > 1e-12 {
                    return Err(Error::InvalidArgument(format!(
                        "target {t} coincides with arm {a} but has a different reward"
                    )));
                }
            }
        }
        Self::assemble(geometry, rewards.arms, target_rewards, None, None)
    }

    fn assemble(
        geometry: Geometry,
        arm_rewards: Vec<f64>,
        target_rewards: Vec<f64>,
        theta: Option<Vec<f64>>,
        intrinsic_dim: Option<usize>,
    ) -> Result<Self> {
        if arm_rewards
            .iter()
            .chain(&target_rewards)
            .any(|r| !r.is_finite())
        {
            return Err(Error::InvalidInstance("non-finite reward".into()));
        }
        let mut best = 0;
        for (i, &r) in target_rewards.iter().enumerate() {
            if r > target_rewards[best] {
                best = i;
            }
        }
        let top = target_rewards[best];
        if let Some(tie) = target_rewards
            .iter()
            .enumerate()
            .position(|(i, &r)| i != best && top - r < TIE_TOL)
        {
            return Err(Error::InvalidInstance(format!(
                "targets {best} and {tie} both maximize the reward"
            )));
        }
        let gaps: Vec<f64> = target_rewards.iter().map(|r| top - r).collect();
        let max_gap = gaps.iter().cloned().fold(0.0, f64::max);
        if max_gap > MAX_GAP {
            return Err(Error::InvalidInstance(format!(
                "maximum gap {max_gap} exceeds 2"
            )));
        }
        Ok(Self {
            geometry,
            arm_rewards,
            target_rewards,
            theta,
            intrinsic_dim,
            best,
            gaps,
        })
    }

    pub fn geometry(&self) -> &Geometry {
        &self.geometry
    }

    pub fn dim(&self) -> usize {
        self.geometry.dim()
    }

    pub fn arm_reward(&self, i: usize) -> f64 {
        self.arm_rewards[i]
    }

    pub fn target_reward(&self, i: usize) -> f64 {
        self.target_rewards[i]
    }

    pub fn arm_rewards(&self) -> &[f64] {
        &self.arm_rewards
    }

    pub fn target_rewards(&self) -> &[f64] {
        &self.target_rewards
    }

    pub fn theta(&self) -> Option<&[f64]> {
        self.theta.as_deref()
    }

    pub fn is_linear(&self) -> bool {
        self.theta.is_some()
    }

    pub fn intrinsic_dim(&self) -> Option<usize> {
        self.intrinsic_dim
    }

    /// Index of `z*` in the target set.
    pub fn best_target(&self) -> usize {
        self.best
    }

    pub fn gap(&self, t: usize) -> f64 {
        self.gaps[t]
    }

    pub fn gaps(&self) -> &[f64] {
        &self.gaps
    }

    /// `Delta_min`, the smallest positive gap. `None` for a single target.
    pub fn min_gap(&self) -> Option<f64> {
        self.gaps
            .iter()
            .enumerate()
            .filter(|&(i, _)| i != self.best)
            .map(|(_, &g)| g)
            .reduce(f64::min)
    }

    /// Whether `span{z* - z} = R^D`. Reported, never enforced.
    pub fn gap_directions_span(&self) -> bool {
        let zs = &self.geometry.targets()[self.best];
        let rows: Vec<DVector<f64>> = self
            .geometry
            .targets()
            .iter()
            .map(|z| {
                DVector::from_iterator(
                    self.dim(),
                    zs.coords().iter().zip(z.coords()).map(|(a, b)| a - b),
                )
            })
            .collect();
        linalg::rank(&linalg::rows_to_matrix(&rows, self.dim())) == self.dim()
    }

    pub fn to_json(&self) -> InstanceJson {
        let g = &self.geometry;
        let same = g.arms() == g.targets();
        InstanceJson {
            dim: g.dim(),
            arms: g.arms().iter().map(|a| a.coords().to_vec()).collect(),
            targets: (!same).then(|| g.targets().iter().map(|a| a.coords().to_vec()).collect()),
            targets_are_arms: same.then_some(true),
            rewards: match self.theta {
                Some(_) => None,
                None if same => Some(self.arm_rewards.clone()),
                None => Some(
                    self.arm_rewards
                        .iter()
                        .chain(&self.target_rewards)
                        .copied()
                        .collect(),
                ),
            },
            theta: self.theta.clone(),
            intrinsic_dim: self.intrinsic_dim,
        }
    }
}

/// `S_k = { z : Delta_z < 4 * 2^-k }`, as target indices.
pub fn stratum(inst: &Instance, k: u32) -> Result<Vec<usize>> {
    if k == 0 {
        return Err(Error::InvalidArgument("stratum index starts at 1".into()));
    }
    let threshold = 4.0 * 2f64.powi(-(k as i32));
    Ok(inst
        .gaps()
        .iter()
        .enumerate()
        .filter(|&(_, &g)| g < threshold)
        .map(|(i, _)| i)
        .collect())
}

/// The model-selection hard instance: `e_1, ..., e_{d*}` plus
/// `(1 - eps) e_{d*} + e_{d*+1}` in `R^{d*+1}`, rewards `h(x) = x_{d*}`.
/// With `extra_arm`, `e_D / 2` is appended so the gap directions span `R^D`.
pub fn make_hard_instance(d_star: usize, eps: f64, extra_arm: bool) -> Result<Instance> {
    if d_star < 2 {
        return Err(Error::InvalidArgument(format!("d_star = {d_star} < 2")));
    }
    if !(eps > 0.0 && eps <= 0.5) {
        return Err(Error::InvalidArgument(format!(
            "eps = {eps} outside (0, 1/2]"
        )));
    }
    let dim = d_star + 1;
    let mut arms: Vec<Arm> = (0..d_star).map(|i| Arm::basis(i, dim)).collect();
    let mut last = vec![0.0; dim];
    last[d_star - 1] = 1.0 - eps;
    last[d_star] = 1.0;
    arms.push(Arm::new(last)?);
    if extra_arm {
        let mut x0 = vec![0.0; dim];
        x0[dim - 1] = 0.5;
        arms.push(Arm::new(x0)?);
    }
    let mut theta = vec![0.0; dim];
    theta[d_star - 1] = 1.0;
    Instance::linear(arms, None, theta, Some(d_star))
}

/// Canonical basis in `R^D` with `theta* = [1, 0, ..., 0, 2]`: every
/// truncation below `D` recommends `e_1`.
pub fn make_unverifiable_instance(dim: usize) -> Result<Instance> {
    if dim < 2 {
        return Err(Error::InvalidArgument(format!("dimension {dim} < 2")));
    }
    let arms: Vec<Arm> = (0..dim).map(|i| Arm::basis(i, dim)).collect();
    let mut theta = vec![0.0; dim];
    theta[0] = 1.0;
    theta[dim - 1] = 2.0;
    Instance::linear(arms, None, theta, Some(dim))
}

/// Instance from an explicit reward table, with no linear structure assumed.
/// `require_targets_in_arms` enforces `Z subset X` for fixed-budget use.
pub fn make_misspecified_instance(
    arms: Vec<Arm>,
    targets: Option<Vec<Arm>>,
    rewards: RewardTable,
    require_targets_in_arms: bool,
) -> Result<Instance> {
    let inst = Instance::from_rewards(arms, targets, rewards)?;
    if require_targets_in_arms && !inst.geometry().targets_in_arms() {
        return Err(Error::InvalidArgument(
            "target set must be a subset of the action set".into(),
        ));
    }
    Ok(inst)
}

/// On-disk instance description.
///
/// `rewards` lists the arm rewards followed by the target rewards (only the
/// arm rewards when `targets_are_arms`). Exactly one of `rewards` and
/// `theta` must be present.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InstanceJson {
    pub dim: usize,
    pub arms: Vec<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub targets: Option<Vec<Vec<f64>>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub targets_are_arms: Option<bool>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rewards: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub theta: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub intrinsic_dim: Option<usize>,
}

impl InstanceJson {
    pub fn build(&self) -> Result<Instance> {
        let to_arms = |rows: &[Vec<f64>]| -> Result<Vec<Arm>> {
            rows.iter().cloned().map(Arm::new).collect()
        };
        let arms = to_arms(&self.arms)?;
        if arms.iter().any(|a| a.dim() != self.dim) {
            return Err(Error::InvalidInstance(format!(
                "arm length does not match dim = {}",
                self.dim
            )));
        }
        let targets = match (&self.targets, self.targets_are_arms) {
            (Some(_), Some(true)) => {
                return Err(Error::InvalidInstance(
                    "both targets and targets_are_arms given".into(),
                ))
            }
            (Some(t), _) => Some(to_arms(t)?),
            (None, Some(true)) => None,
            (None, _) => {
                return Err(Error::InvalidInstance(
                    "either targets or targets_are_arms = true is required".into(),
                ))
            }
        };
        match (&self.rewards, &self.theta) {
            (Some(_), Some(_)) => Err(Error::InvalidInstance(
                "rewards and theta are mutually exclusive".into(),
            )),
            (None, None) => Err(Error::InvalidInstance(
                "one of rewards or theta is required".into(),
            )),
            (None, Some(theta)) => {
                Instance::linear(arms, targets, theta.clone(), self.intrinsic_dim)
            }
            (Some(r), None) => {
                let n = arms.len();
                let table = match &targets {
                    None => RewardTable {
                        arms: r.clone(),
                        targets: None,
                    },
                    Some(t) => {
                        if r.len() != n + t.len() {
                            return Err(Error::InvalidArgument(format!(
                                "rewards has {} entries, expected {}",
                                r.len(),
                                n + t.len()
                            )));
                        }
                        RewardTable {
                            arms: r[..n].to_vec(),
                            targets: Some(r[n..].to_vec()),
                        }
                    }
                };
                let mut inst = Instance::from_rewards(arms, targets, table)?;
                inst.intrinsic_dim = self.intrinsic_dim;
                Ok(inst)
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn v(x: &[f64]) -> Arm {
        Arm::new(x.to_vec()).unwrap()
    }

    #[test]
    fn truncate_examples() {
        let x = v(&[1.0, 0.0, 2.0]);
        assert_eq!(truncate(&x, 2).unwrap().as_slice(), &[1.0, 0.0]);
        assert_eq!(truncate(&x, 3).unwrap().as_slice(), &[1.0, 0.0, 2.0]);
        let y = v(&[0.5, -1.0, 3.0, 4.0]);
        assert_eq!(truncate(&y, 1).unwrap().as_slice(), &[0.5]);
        assert!(truncate(&x, 0).is_err());
        assert!(truncate(&x, 4).is_err());
    }

    fn contains_up_to_sign(set: &[DVector<f64>], y: &[f64]) -> bool {
        let y = DVector::from_column_slice(y);
        set.iter().any(|s| same_up_to_sign(s, &y))
    }

    #[test]
    fn directions_examples() {
        let e = |i, d| Arm::basis(i, d);
        let two = [e(0, 2), e(1, 2)];
        let dirs = directions(&two.iter().collect::<Vec<_>>(), 2).unwrap();
        assert_eq!(dirs.len(), 1);
        assert!(contains_up_to_sign(&dirs, &[1.0, -1.0]));

        let one = [e(0, 2)];
        assert!(directions(&one.iter().collect::<Vec<_>>(), 2)
            .unwrap()
            .is_empty());

        let three = [e(0, 3), e(1, 3), e(2, 3)];
        let dirs = directions(&three.iter().collect::<Vec<_>>(), 2).unwrap();
        assert_eq!(dirs.len(), 3);
        for y in [[1.0, -1.0], [1.0, 0.0], [0.0, -1.0]] {
            assert!(contains_up_to_sign(&dirs, &y), "missing {y:?}");
        }
    }

    #[test]
    fn directions_dedupe_sign() {
        // z1 - z2 and z3 - z4 coincide after truncation; z2 - z1 never appears.
        let pts = [
            v(&[1.0, 0.0]),
            v(&[0.0, 0.0]),
            v(&[2.0, 5.0]),
            v(&[1.0, 5.0]),
        ];
        let dirs = directions(&pts.iter().collect::<Vec<_>>(), 1).unwrap();
        // 1-d differences: 1, -1, 0, -2, -1, 1 -> {1, 0, 2} up to sign
        assert_eq!(dirs.len(), 3);
    }

    fn gap_instance() -> Instance {
        // single-coordinate rewards 1, 0, 0.6 -> gaps 0, 1, 0.4
        let arms = vec![v(&[1.0, 0.0]), v(&[0.0, 1.0]), v(&[0.6, 0.0])];
        Instance::linear(arms, None, vec![1.0, 0.0], None).unwrap()
    }

    #[test]
    fn stratum_examples() {
        let inst = gap_instance();
        assert_eq!(stratum(&inst, 1).unwrap(), vec![0, 1, 2]);
        assert_eq!(stratum(&inst, 3).unwrap(), vec![0, 2]);
        assert_eq!(stratum(&inst, 6).unwrap(), vec![0]);
        assert!(stratum(&inst, 0).is_err());
    }

    #[test]
    fn hard_instance_gaps() {
        let inst = make_hard_instance(3, 0.1, false).unwrap();
        assert_eq!(inst.dim(), 4);
        assert_eq!(inst.best_target(), 2);
        assert_eq!(inst.target_reward(2), 1.0);
        assert!((inst.target_reward(3) - 0.9).abs() < 1e-15);
        let mut gaps = inst.gaps().to_vec();
        gaps.sort_by(f64::total_cmp);
        assert_eq!(gaps[0], 0.0);
        assert!((gaps[1] - 0.1).abs() < 1e-15);
        assert_eq!(&gaps[2..], &[1.0, 1.0]);
        assert_eq!(inst.intrinsic_dim(), Some(3));
        assert!(!inst.gap_directions_span());

        let with_x0 = make_hard_instance(3, 0.1, true).unwrap();
        assert_eq!(with_x0.geometry().num_arms(), 5);
        assert_eq!(with_x0.gap(4), 1.0);
        assert!(with_x0.gap_directions_span());

        assert!(make_hard_instance(1, 0.1, false).is_err());
        assert!(make_hard_instance(3, 0.6, false).is_err());
        assert!(make_hard_instance(3, 0.0, false).is_err());
    }

    #[test]
    fn unverifiable_instance_rewards() {
        let inst = make_unverifiable_instance(3).unwrap();
        assert_eq!(inst.target_rewards(), &[1.0, 0.0, 2.0]);
        assert_eq!(inst.best_target(), 2);
        let two = make_unverifiable_instance(2).unwrap();
        assert_eq!(two.target_rewards(), &[1.0, 2.0]);
        assert_eq!(two.gap(0), 1.0);
    }

    #[test]
    fn misspecified_instance_construction() {
        let arms = vec![Arm::basis(0, 2), Arm::basis(1, 2)];
        let inst = make_misspecified_instance(
            arms.clone(),
            None,
            RewardTable {
                arms: vec![1.0, 0.3],
                targets: None,
            },
            true,
        )
        .unwrap();
        assert!((inst.min_gap().unwrap() - 0.7).abs() < 1e-15);
        assert!(!inst.is_linear());

        let missing = make_misspecified_instance(
            arms,
            None,
            RewardTable {
                arms: vec![1.0],
                targets: None,
            },
            false,
        );
        assert!(matches!(missing, Err(Error::InvalidArgument(_))));
    }

    #[test]
    fn hard_instance_table_roundtrip() {
        let hard = make_hard_instance(3, 0.1, true).unwrap();
        let arms = hard.geometry().arms().to_vec();
        let again = make_misspecified_instance(
            arms,
            None,
            RewardTable {
                arms: hard.arm_rewards().to_vec(),
                targets: None,
            },
            true,
        )
        .unwrap();
        assert_eq!(again.gaps(), hard.gaps());
        assert_eq!(again.best_target(), hard.best_target());
    }

    #[test]
    fn construction_rejects_bad_instances() {
        let basis = vec![Arm::basis(0, 2), Arm::basis(1, 2)];
        // tie
        assert!(Instance::linear(basis.clone(), None, vec![1.0, 1.0], None).is_err());
        // gap > 2
        assert!(Instance::linear(basis.clone(), None, vec![1.0, -1.5], None).is_err());
        // rank deficient
        let flat = vec![v(&[1.0, 0.0]), v(&[2.0, 0.0])];
        assert!(Instance::linear(flat, None, vec![1.0, 0.0], None).is_err());
        // theta support beyond declared d*
        assert!(Instance::linear(basis.clone(), None, vec![1.0, 0.5], Some(1)).is_err());
        // inferred d*
        let inst = Instance::linear(basis, None, vec![1.0, 0.0], None).unwrap();
        assert_eq!(inst.intrinsic_dim(), Some(1));
    }

    #[test]
    fn json_schema_roundtrip() {
        let src =
            r#"{"dim": 2, "arms": [[1,0],[0,1]], "targets_are_arms": true, "theta": [1, 0.5]}"#;
        let spec: InstanceJson = serde_json::from_str(src).unwrap();
        let inst = spec.build().unwrap();
        assert_eq!(inst.target_rewards(), &[1.0, 0.5]);
        assert_eq!(inst.to_json().build().unwrap().gaps(), inst.gaps());

        let explicit =
            r#"{"dim": 2, "arms": [[1,0],[0,1]], "targets": [[1,1]], "rewards": [1, 0.3, 1.3]}"#;
        let inst: Instance = serde_json::from_str::<InstanceJson>(explicit)
            .unwrap()
            .build()
            .unwrap();
        assert_eq!(inst.geometry().num_targets(), 1);
        assert!(!inst.geometry().targets_in_arms());

        let unknown = r#"{"dim": 2, "arms": [[1,0],[0,1]], "targets_are_arms": true, "theta": [1, 0], "oops": 1}"#;
        assert!(serde_json::from_str::<InstanceJson>(unknown).is_err());
    }
}
