use linsel_core::corpus::{random_design, random_linear_instance, random_misspecified_instance};
use linsel_core::design::design_value;
use linsel_core::env::{trial_rng, Stream};
use linsel_core::misspec::max_residual;
use linsel_core::*;
use nalgebra::{DMatrix, DVector};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

const ZETA: f64 = 0.25;

fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn cfg() -> SolverConfig {
    SolverConfig::default()
}

/// A certified value lies within `1 / (1 - tol)` of the optimum.
fn slack() -> f64 {
    1.0 / (1.0 - cfg().tol)
}

/// `max_y y^T (sum_i c_i x_i x_i^T)^+ y`, built without library helpers.
fn allocation_value(view: &TruncatedView<'_>, counts: &[u64], dirs: &[DVector<f64>]) -> f64 {
    let d = view.dim();
    let mut m = DMatrix::zeros(d, d);
    for (i, &c) in counts.iter().enumerate() {
        let x = view.arm(i);
        m += (c as f64) * &x * x.transpose();
    }
    let pinv = m.clone().pseudo_inverse(1e-12).unwrap();
    dirs.iter()
        .map(|y| {
            let r = &m * (&pinv * y) - y;
            if r.norm() > 1e-8 * y.norm().max(1.0) {
                f64::INFINITY
            } else {
                y.dot(&(&pinv * y))
            }
        })
        .fold(0.0, f64::max)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn rounding_meets_its_guarantee(seed in any::<u64>(), extra in 0u64..400) {
        let mut r = rng(seed);
        let inst = random_linear_instance(&mut r, 5, 3, 3);
        let view = inst.geometry().view(3).unwrap();
        let design = random_design(&mut r, 5);
        let all: Vec<usize> = (0..5).collect();
        let dirs = view.target_directions(&all);
        let n = r_d(3, ZETA, RoundingRule::Quadratic).unwrap().ceil() as u64 + extra;
        let alloc = round_design(&design, n, &view, &dirs, ZETA, RoundingRule::Quadratic).unwrap();
        prop_assert_eq!(alloc.counts.iter().sum::<u64>(), n);
        let f = design_value(&dirs, &design, &view);
        let achieved = allocation_value(&view, &alloc.counts, &dirs);
        prop_assert!(achieved <= (1.0 + ZETA) * f / n as f64 * (1.0 + 1e-9), "{achieved} vs {f}/{n}");
        let again = round_design(&design, n, &view, &dirs, ZETA, RoundingRule::Quadratic).unwrap();
        prop_assert_eq!(alloc.counts, again.counts);
    }

    #[test]
    fn misspecification_levels_behave(seed in any::<u64>(), d_core in 1usize..=3, jitter in prop::sample::select(vec![0.0, 5e-4, 0.05])) {
        let mut r = rng(seed);
        let inst = random_misspecified_instance(&mut r, 6, 4, d_core, 0.03, jitter);
        let profile = misspec_profile(&inst, ZETA, &[0.1], &cfg()).unwrap();
        let mut prev = f64::INFINITY;
        for rec in &profile.records {
            prop_assert!(rec.gamma_tilde <= prev + 1e-9);
            prev = rec.gamma_tilde;
            let res = max_residual(&inst, &rec.theta).unwrap();
            prop_assert!((res - rec.gamma_tilde).abs() <= 1e-7, "residual {res} vs {}", rec.gamma_tilde);
            let floor = 2.0 * 2f64.powi(-60);
            prop_assert!(rec.gamma <= rec.bound.max(floor), "gamma {} > bound {}", rec.gamma, rec.bound);
            prop_assert!(rec.gamma <= 2.0);
        }
        for rec in &profile.records {
            let eps = rec.gamma_tilde.max(0.05);
            let rho = compute_rho(&inst, rec.d, eps, &cfg()).unwrap();
            let tilde = compute_rho_tilde(&inst, rec.d, eps, &rec.theta, &cfg()).unwrap();
            prop_assert!(rho <= 9.0 * tilde * slack(), "d = {}: {rho} > 9 * {tilde}", rec.d);
        }
        if let Some(d) = profile.d_star["0.1"] {
            prop_assert!(check_round_number(&inst, d, 0.1, ZETA, &cfg()).unwrap());
        }
    }

    #[test]
    fn design_values_obey_structural_bounds(seed in any::<u64>(), dim in 2usize..=4, extra in 0usize..=3) {
        let mut r = rng(seed);
        let d_star = 1 + (seed as usize % dim);
        let inst = random_linear_instance(&mut r, dim + extra, dim, d_star);
        let c = cfg();
        let all: Vec<usize> = (0..inst.geometry().num_targets()).collect();
        for d in 1..=dim {
            let iota = compute_iota(inst.geometry(), &all, d, &c).unwrap().value;
            prop_assert!(iota <= 4.0 * d as f64 * slack(), "iota {iota} at d = {d}");
        }
        let k_max = (4.0 / inst.min_gap().unwrap()).log2().ceil() as u32;
        for d in d_star..=dim {
            let rho = compute_rho(&inst, d, 0.0, &c).unwrap();
            for k in 1..=k_max {
                let s = stratum(&inst, k).unwrap();
                prop_assert!(s.contains(&inst.best_target()));
                if s.len() < 2 {
                    continue;
                }
                let iota = compute_iota(inst.geometry(), &s, d, &c).unwrap().value;
                prop_assert!(4f64.powi(k as i32) * iota <= 64.0 * rho * slack());
            }
        }
        let rho_full = compute_rho(&inst, dim, 0.0, &c).unwrap();
        let c1 = inst.geometry().arms().iter().map(|x| x.coords().iter().map(|v| v * v).sum::<f64>()).fold(0.0, f64::max);
        let best = inst.geometry().targets()[inst.best_target()].coords();
        let c2 = inst.geometry().targets().iter().enumerate()
            .filter(|&(i, _)| i != inst.best_target())
            .map(|(_, z)| z.coords().iter().zip(best).map(|(a, b)| (a - b).powi(2)).sum::<f64>())
            .fold(f64::INFINITY, f64::min);
        let dmin = inst.min_gap().unwrap();
        prop_assert!(c2 / (c1 * dmin * dmin) <= rho_full * slack());
    }

    #[test]
    fn opt_dim_picks_the_largest_affordable_dimension(costs in prop::collection::vec(0.0f64..100.0, 1..8), budget in 0.0f64..100.0) {
        let got = opt_dim(budget, costs.len(), |d| Ok(costs[d - 1])).unwrap();
        let want = (1..=costs.len()).rev().find(|&d| costs[d - 1] <= budget);
        prop_assert_eq!(got, want);
    }
}

fn context<'a>(inst: &'a Instance, noise: Noise, trial: u64) -> SamplingContext<'a> {
    let env = Environment::new(inst, noise, trial_rng(5, trial, Stream::Environment));
    SamplingContext::new(env, trial_rng(5, trial, Stream::Algorithm), true)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn elimination_is_monotone_and_pulls_are_accounted(seed in any::<u64>()) {
        let mut r = rng(seed);
        let inst = random_linear_instance(&mut r, 5, 3, 2);
        let settings = Settings::default();
        let oracle = IotaOracle::new(inst.geometry(), SolverConfig::default());
        let rho = compute_rho(&inst, 2, 0.0, &SolverConfig::default()).unwrap();
        let budget = (64.0 * rho).max(settings.r_d(2));
        let n = (2.0 / inst.min_gap().unwrap()).log2().ceil() as u32;

        let mut ctx = context(&inst, Noise::Gaussian, seed % 1000);
        let set = gems_c(&mut ctx, &oracle, &settings, 0.1, n, budget).unwrap();
        prop_assert!(!set.is_empty());
        let trace = ctx.trace().unwrap().to_vec();
        let mut sizes = vec![inst.geometry().num_targets()];
        let mut pulled = 0;
        for ev in trace.iter().filter(|e| e.event == EventKind::Iteration) {
            prop_assert!(ev.active_size <= *sizes.last().unwrap());
            sizes.push(ev.active_size);
            pulled += ev.n_k.unwrap();
            prop_assert_eq!(ev.pulls_total, pulled);
        }
        prop_assert!(set.len() <= *sizes.last().unwrap());
        prop_assert_eq!(ctx.pulls(), pulled);

        let total = 20_000.0;
        let mut ctx = context(&inst, Noise::Gaussian, seed % 1000);
        gems_b(&mut ctx, &oracle, &settings, total, n, 64.0 * rho).unwrap();
        let per = (total / n as f64).floor() as u64;
        prop_assert!(ctx.pulls() <= n as u64 * per);
        prop_assert_eq!(ctx.pulls() % per, 0);
    }

    #[test]
    fn noiseless_elimination_is_exact(seed in any::<u64>(), d_star in 1usize..=3) {
        let mut r = rng(seed);
        let inst = random_linear_instance(&mut r, 5, 3, d_star);
        let theta = inst.theta().unwrap().to_vec();
        let view = inst.geometry().view(3).unwrap();
        let counts = vec![3u64, 1, 2, 1, 4];
        let sums: Vec<f64> = counts.iter().enumerate().map(|(i, &c)| c as f64 * inst.arm_reward(i)).collect();
        let est = linsel_core::gems::least_squares(&view, &counts, &sums);
        for (a, b) in est.theta.iter().zip(&theta) {
            prop_assert!((a - b).abs() <= 1e-8);
        }

        let settings = Settings::default();
        let oracle = IotaOracle::new(inst.geometry(), SolverConfig::default());
        let mut ctx = context(&inst, Noise::None, 0);
        let set = gems_c(&mut ctx, &oracle, &settings, 0.1, 6, 1e6).unwrap();
        for ev in ctx.trace().unwrap().iter().filter(|e| e.event == EventKind::Iteration) {
            prop_assert!(ev.d_k.unwrap() >= d_star);
        }
        prop_assert!(set.contains(&inst.best_target()));
    }
}

#[test]
fn batches_are_reproducible_and_order_independent() {
    let inst = random_linear_instance(&mut rng(9), 4, 2, 2);
    let cfg = |trials| BatchConfig {
        algorithm: AlgorithmSpec::MasterFc {
            delta: 0.1,
            max_ell: 8,
        },
        trials,
        seed: 17,
        noise: Noise::Gaussian,
        settings: Settings::default(),
        solver: SolverConfig::default(),
        trace: true,
        pull_cap: None,
    };
    let a = run_batch(&inst, &cfg(12)).unwrap();
    let b = run_batch(&inst, &cfg(12)).unwrap();
    assert_eq!(
        serde_json::to_string(&a).unwrap(),
        serde_json::to_string(&b).unwrap()
    );
    assert_eq!(a.outcomes, b.outcomes);
    let short = run_batch(&inst, &cfg(5)).unwrap();
    assert_eq!(&a.outcomes[..5], &short.outcomes[..]);
}

#[test]
fn noiseless_runs_are_deterministic_across_seeds() {
    let inst = random_linear_instance(&mut rng(10), 4, 3, 2);
    let run = |seed| {
        let cfg = BatchConfig {
            algorithm: AlgorithmSpec::OracleStatic {
                samples: 200,
                d: None,
            },
            trials: 3,
            seed,
            noise: Noise::None,
            settings: Settings::default(),
            solver: SolverConfig::default(),
            trace: false,
            pull_cap: None,
        };
        run_batch(&inst, &cfg).unwrap()
    };
    let a = run(1);
    let b = run(2);
    assert_eq!(a.error_rate, 0.0);
    let recs = |r: &BatchReport| {
        r.outcomes
            .iter()
            .map(|o| o.recommendation)
            .collect::<Vec<_>>()
    };
    assert_eq!(recs(&a), recs(&b));
}
