//! Learning-centric power allocation (LCPA) for multi-user uplink edge learning.
//!
//! An edge node with `N` receive antennas collects training data from `K`
//! users over a shared uplink. Each user feeds a different classifier, and
//! each classifier's error follows an inverse power law in its training-set
//! size. Instead of maximizing throughput, the allocators here split a total
//! transmit-power budget to minimize the worst weighted modeled error.
//!
//! Modules, bottom up:
//!
//! * [`channel`]: seeded Rayleigh channel draws, MRC composite gains, rates
//!   and sample counts.
//! * [`error_model`]: the `a * v^-b` error model and its brute-force
//!   least-squares fit.
//! * [`simplex`]: projection onto the power simplex and the projected
//!   subgradient minimizer shared by the iterative solvers.
//! * [`mm_solver`]: majorization-minimization allocator for the general
//!   interference case.
//! * [`asymptotic`]: closed-form allocator for orthogonal (large-array) channels.
//! * [`baselines`]: max-min rate, sum-rate, water-filling and uniform split.
//! * [`oracle`]: exhaustive 1-D grid searches used to cross-check the solvers
//!   at `K = 2`.
//! * [`harness`]: experiment configuration, Monte-Carlo sweeps and CSV output.

// `!(x > 0.0)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod asymptotic;
pub mod baselines;
pub mod channel;
pub mod config;
pub mod error_model;
pub mod harness;
pub mod mm_solver;
pub mod oracle;
pub mod par;
pub mod simplex;

mod error;

pub use asymptotic::{power_at_level, solve_asymptotic, ErrorLevelSolution};
pub use baselines::{max_min_fairness, sum_rate_max, uniform, water_filling};
pub use channel::{
    draw_channels, gains_from_channels, rate, sample_count, ChannelRealization, GainMatrix, SampleMode, SystemConfig,
};
pub use error::{Error, Result};
pub use error_model::{extrapolate, fit, model_error, FitGridSpec, FitPoint, FitResult, LearningTask};
pub use harness::{emit_csv, run_experiment, ExperimentRow, ExperimentSpec, Scheme, SweepAxis};
pub use mm_solver::{phi, solve_lcpa, solve_subproblem, surrogate_phi, MmOptions, PowerAllocation, SurrogateState};
pub use par::Execution;
