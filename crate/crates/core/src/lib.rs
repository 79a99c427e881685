//! Model selection for pure-exploration linear bandits.
//!
//! The crate computes min-max experimental designs and the complexity
//! measures built on them, rounds designs to integer allocations, runs the
//! GEMS elimination algorithms and their doubling masters against simulated
//! environments, and aggregates seeded Monte Carlo batches.
//!
//! Features are nested: truncating an arm to its first `d` coordinates gives
//! the `d`-dimensional model, and the intrinsic dimension `d*` is the smallest
//! truncation in which rewards are exactly linear.

// `!(x > 0.0)` is used deliberately so NaN fails validation.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod corpus;
pub mod design;
pub mod env;
pub mod error;
pub mod gems;
pub mod instance;
pub mod linalg;
pub mod lp;
pub mod misspec;
pub mod rounding;
pub mod sim;

pub use design::{
    complexity_report, compute_iota, compute_iota_star, compute_rho, compute_rho_tilde, rho_design,
    solve_design, weighted_norm_sq, ComplexityRecord, ComplexityReport, Design, DesignSolution,
    IotaOracle, SolverConfig,
};
pub use env::{Environment, Noise};
pub use error::{Error, Result};
pub use gems::{
    gems_b, gems_c, gems_m, master_fixed_budget, master_fixed_confidence, master_misspecified,
    opt_dim, oracle_static, w_of, EventKind, SamplingContext, Settings, TraceEvent,
};
pub use instance::{
    make_hard_instance, make_misspecified_instance, make_unverifiable_instance, stratum, truncate,
    Arm, Geometry, Instance, InstanceJson, RewardTable, TruncatedView,
};
pub use misspec::{
    chebyshev_fit, check_round_number, compute_d_star, compute_gamma, misspec_profile,
    ChebyshevFit, MisspecProfile,
};
pub use rounding::{r_d, round_design, Allocation, RoundingRule};
pub use sim::{
    reference_bounds, run_batch, AlgorithmSpec, BatchConfig, BatchReport, BudgetQuery,
    ReferenceBounds, TrialOutcome,
};
