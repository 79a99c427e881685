//! Noisy reward environments with counter-based random streams.
//!
//! Each trial owns two ChaCha streams derived from `(seed, trial)`: one for
//! the environment's noise and one for the algorithm's own coin flips. A
//! trial's draws therefore do not depend on which other trials ran or in what
//! order.

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use statrs::function::erf::erf_inv;

use crate::error::{Error, Result};
use crate::instance::Instance;

/// Additive observation noise.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum Noise {
    /// Standard normal.
    #[default]
    Gaussian,
    None,
    /// Uniform on `[-b, b]`; 1-sub-Gaussian for `b <= 1`.
    Bounded {
        b: f64,
    },
}

impl Noise {
    pub fn validate(&self) -> Result<()> {
        match *self {
            Noise::Bounded { b } if !(b >= 0.0 && b.is_finite()) => Err(Error::InvalidArgument(
                format!("bounded noise needs a finite b >= 0, got {b}"),
            )),
            _ => Ok(()),
        }
    }
}

/// Which of a trial's two streams to open.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Stream {
    Environment,
    Algorithm,
}

/// The generator for stream `which` of trial `trial`.
pub fn trial_rng(seed: u64, trial: u64, which: Stream) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let id = 2 * trial + if which == Stream::Algorithm { 1 } else { 0 };
    rng.set_stream(id);
    rng
}

/// Uniform on the open interval `(0, 1)` from the top 53 bits.
pub fn open_unit(rng: &mut impl RngCore) -> f64 {
    ((rng.next_u64() >> 11) as f64 + 0.5) * (1.0 / (1u64 << 53) as f64)
}

/// Standard normal by inverting the CDF.
pub fn standard_normal(rng: &mut impl RngCore) -> f64 {
    std::f64::consts::SQRT_2 * erf_inv(2.0 * open_unit(rng) - 1.0)
}

/// Reward oracle for one trial. Every pull increments the counter by one.
pub struct Environment<'a> {
    instance: &'a Instance,
    noise: Noise,
    rng: ChaCha8Rng,
    pulls: u64,
    cap: Option<u64>,
}

impl<'a> Environment<'a> {
    pub fn new(instance: &'a Instance, noise: Noise, rng: ChaCha8Rng) -> Self {
        Self {
            instance,
            noise,
            rng,
            pulls: 0,
            cap: None,
        }
    }

    /// Fail with [`Error::Exhausted`] once `cap` pulls have been made.
    pub fn with_cap(mut self, cap: u64) -> Self {
        self.cap = Some(cap);
        self
    }

    pub fn instance(&self) -> &'a Instance {
        self.instance
    }

    pub fn pulls(&self) -> u64 {
        self.pulls
    }

    fn draw(&mut self) -> f64 {
        match self.noise {
            Noise::None => 0.0,
            Noise::Gaussian => standard_normal(&mut self.rng),
            Noise::Bounded { b } => b * (2.0 * open_unit(&mut self.rng) - 1.0),
        }
    }

    pub fn pull(&mut self, arm: usize) -> Result<f64> {
        if arm >= self.instance.geometry().num_arms() {
            return Err(Error::InvalidArgument(format!("no arm {arm}")));
        }
        if let Some(cap) = self.cap {
            if self.pulls >= cap {
                return Err(Error::Exhausted(self.pulls));
            }
        }
        self.pulls += 1;
        Ok(self.instance.arm_reward(arm) + self.draw())
    }

    /// Pull arm `i` `counts[i]` times, in arm order; returns per-arm reward sums.
    pub fn pull_many(&mut self, counts: &[u64]) -> Result<Vec<f64>> {
        if counts.len() != self.instance.geometry().num_arms() {
            return Err(Error::InvalidArgument(format!(
                "allocation over {} arms for {} arms",
                counts.len(),
                self.instance.geometry().num_arms()
            )));
        }
        let mut sums = vec![0.0; counts.len()];
        for (arm, &c) in counts.iter().enumerate() {
            for _ in 0..c {
                sums[arm] += self.pull(arm)?;
            }
        }
        Ok(sums)
    }
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
    fn noiseless_pulls_are_exact() {
        let inst = two_arm();
        let mut env = Environment::new(&inst, Noise::None, trial_rng(1, 0, Stream::Environment));
        assert_eq!(env.pull(0).unwrap(), 1.0);
        assert_eq!(env.pull_many(&[2, 3]).unwrap(), vec![2.0, 1.5]);
        assert_eq!(env.pulls(), 6);
    }

    #[test]
    fn cap_is_enforced() {
        let inst = two_arm();
        let mut env =
            Environment::new(&inst, Noise::Gaussian, trial_rng(1, 0, Stream::Environment))
                .with_cap(2);
        env.pull(0).unwrap();
        env.pull(1).unwrap();
        assert!(matches!(env.pull(0), Err(Error::Exhausted(2))));
    }

    #[test]
    fn streams_are_independent_of_order() {
        let a: Vec<u64> = {
            let mut r = trial_rng(9, 3, Stream::Environment);
            (0..4).map(|_| r.next_u64()).collect()
        };
        let _ = trial_rng(9, 2, Stream::Environment).next_u64();
        let b: Vec<u64> = {
            let mut r = trial_rng(9, 3, Stream::Environment);
            (0..4).map(|_| r.next_u64()).collect()
        };
        assert_eq!(a, b);
        assert_ne!(
            trial_rng(9, 3, Stream::Algorithm).next_u64(),
            trial_rng(9, 3, Stream::Environment).next_u64()
        );
    }

    #[test]
    fn gaussian_moments() {
        let mut r = trial_rng(5, 0, Stream::Environment);
        let n = 100_000;
        let xs: Vec<f64> = (0..n).map(|_| standard_normal(&mut r)).collect();
        let mean = xs.iter().sum::<f64>() / n as f64;
        let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n as f64;
        assert!(mean.abs() < 0.02);
        assert!((var - 1.0).abs() < 0.02);
    }

    #[test]
    fn bounded_noise_stays_in_range() {
        let inst = two_arm();
        let mut env = Environment::new(
            &inst,
            Noise::Bounded { b: 0.5 },
            trial_rng(2, 0, Stream::Environment),
        );
        for _ in 0..1000 {
            let y = env.pull(1).unwrap();
            assert!((0.0..=1.0).contains(&y));
        }
        assert!(Noise::Bounded { b: -1.0 }.validate().is_err());
    }
}
