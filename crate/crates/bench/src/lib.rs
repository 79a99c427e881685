//! Fixed inputs shared by the benchmarks.

use linsel_core::{
    make_hard_instance, AlgorithmSpec, BatchConfig, Instance, Noise, Settings, SolverConfig,
};
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Hard instance with an irrelevant trailing coordinate.
pub fn hard(d_star: usize) -> Instance {
    make_hard_instance(d_star, 0.1, true).expect("valid hard instance")
}

pub fn batch(algorithm: AlgorithmSpec, trials: u64) -> BatchConfig {
    BatchConfig {
        algorithm,
        trials,
        seed: 1,
        noise: Noise::Gaussian,
        settings: Settings::default(),
        solver: SolverConfig::default(),
        trace: false,
        pull_cap: None,
    }
}
