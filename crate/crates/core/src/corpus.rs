//! Seeded random instances and designs for property checks and benchmarks.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::design::Design;
use crate::instance::{make_misspecified_instance, Arm, Instance, RewardTable};
use crate::linalg;

/// Gaps below this are resampled so designs stay well conditioned.
pub const MIN_GAP: f64 = 0.05;

fn random_arms(rng: &mut impl Rng, num_arms: usize, dim: usize) -> Vec<Arm> {
    loop {
        let arms: Vec<Arm> = (0..num_arms)
            .map(|_| {
                Arm::new((0..dim).map(|_| rng.random_range(-1.0..1.0)).collect())
                    .expect("finite coordinates")
            })
            .collect();
        let rows: Vec<_> = arms
            .iter()
            .map(|a| nalgebra::DVector::from_column_slice(a.coords()))
            .collect();
        if linalg::rank(&linalg::rows_to_matrix(&rows, dim)) == dim {
            return arms;
        }
    }
}

/// Spread of `values` and the gap between the two largest entries.
fn gap_profile(values: &[f64]) -> (f64, f64) {
    let mut sorted = values.to_vec();
    sorted.sort_by(|a, b| b.total_cmp(a));
    let spread = sorted[0] - sorted[sorted.len() - 1];
    let second = if sorted.len() > 1 {
        sorted[0] - sorted[1]
    } else {
        f64::INFINITY
    };
    (spread, second)
}

/// Exactly linear instance with `Z = X`, `num_arms` arms in `R^dim` and
/// `theta*` supported on the first `d_star` coordinates. Gaps lie in
/// `[MIN_GAP, 2]` and the maximizer is unique.
pub fn random_linear_instance(
    rng: &mut impl Rng,
    num_arms: usize,
    dim: usize,
    d_star: usize,
) -> Instance {
    assert!(num_arms >= dim && d_star >= 1 && d_star <= dim);
    loop {
        let arms = random_arms(rng, num_arms, dim);
        let mut theta = vec![0.0f64; dim];
        for t in theta.iter_mut().take(d_star) {
            *t = rng.random_range(-1.0..1.0);
        }
        if theta[d_star - 1].abs() < 0.1 {
            continue;
        }
        let rewards: Vec<f64> = arms.iter().map(|a| a.dot(&theta)).collect();
        let (spread, _) = gap_profile(&rewards);
        if spread == 0.0 {
            continue;
        }
        let scale = rng.random_range(0.5..1.5) / spread;
        theta.iter_mut().for_each(|t| *t *= scale);
        let rewards: Vec<f64> = rewards.iter().map(|r| r * scale).collect();
        if gap_profile(&rewards).1 < MIN_GAP {
            continue;
        }
        if let Ok(inst) = Instance::linear(arms, None, theta, Some(d_star)) {
            return inst;
        }
    }
}

/// Instance with `Z = X` whose rewards are linear in the first `d_core`
/// coordinates, plus a linear tail of size `tail` on the remaining
/// coordinates and unstructured noise of size at most `jitter`.
pub fn random_misspecified_instance(
    rng: &mut impl Rng,
    num_arms: usize,
    dim: usize,
    d_core: usize,
    tail: f64,
    jitter: f64,
) -> Instance {
    assert!(num_arms >= dim && d_core >= 1 && d_core <= dim);
    loop {
        let arms = random_arms(rng, num_arms, dim);
        let mut theta = vec![0.0f64; dim];
        for (i, t) in theta.iter_mut().enumerate() {
            *t = if i < d_core {
                rng.random_range(-1.0..1.0)
            } else {
                tail * rng.random_range(-1.0..1.0)
            };
        }
        let base: Vec<f64> = arms.iter().map(|a| a.dot(&theta)).collect();
        let (spread, _) = gap_profile(&base);
        if spread == 0.0 {
            continue;
        }
        let scale = rng.random_range(0.5..1.5) / spread;
        let rewards: Vec<f64> = base
            .iter()
            .map(|r| r * scale + jitter * rng.random_range(-1.0..1.0))
            .collect();
        let (spread, second) = gap_profile(&rewards);
        if second < MIN_GAP || spread > 2.0 {
            continue;
        }
        let table = RewardTable {
            arms: rewards,
            targets: None,
        };
        if let Ok(inst) = make_misspecified_instance(arms, None, table, true) {
            return inst;
        }
    }
}

/// `count` linear instances with `D` in `2..=4`, `d*` in `1..=D` and up to
/// `D + 3` arms.
pub fn linear_corpus(seed: u64, count: usize) -> Vec<Instance> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count)
        .map(|_| {
            let dim = rng.random_range(2..=4);
            let d_star = rng.random_range(1..=dim);
            let arms = rng.random_range(dim..=dim + 3);
            random_linear_instance(&mut rng, arms, dim, d_star)
        })
        .collect()
}

/// `count` small linear instances with at most four arms in at most three
/// dimensions, for brute-force grid comparisons.
pub fn small_corpus(seed: u64, count: usize) -> Vec<Instance> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count)
        .map(|_| {
            let dim = rng.random_range(2..=3);
            let arms = rng.random_range(dim..=4);
            let d_star = rng.random_range(1..=dim);
            random_linear_instance(&mut rng, arms, dim, d_star)
        })
        .collect()
}

/// `count` misspecified instances in `R^4` with five or six arms. Half carry
/// only a tail (exactly linear in `R^4`), half also carry jitter.
pub fn misspecified_corpus(seed: u64, count: usize) -> Vec<Instance> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count)
        .map(|i| {
            let arms = rng.random_range(5..=6);
            let d_core = rng.random_range(1..=3);
            let tail = rng.random_range(0.005..0.05);
            let jitter = if i % 2 == 0 { 0.0 } else { 5e-4 };
            random_misspecified_instance(&mut rng, arms, 4, d_core, tail, jitter)
        })
        .collect()
}

/// Random design over `n` arms; roughly a third of the weights are zero.
pub fn random_design(rng: &mut impl Rng, n: usize) -> Design {
    loop {
        let w: Vec<f64> = (0..n)
            .map(|_| {
                if rng.random_bool(0.33) {
                    0.0
                } else {
                    -(1.0 - rng.random::<f64>()).ln()
                }
            })
            .collect();
        let total: f64 = w.iter().sum();
        if total > 0.0 {
            let w = w.into_iter().map(|v| v / total).collect();
            return Design::new(w).expect("normalized");
        }
    }
}
