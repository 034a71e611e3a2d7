//! Noise-level estimation for functions evaluated at arbitrary points.
//!
//! Noisy function values at `m + 1` points are treated as samples along a
//! curve through those points. Their differencing table yields an estimate
//! of the noise standard deviation ([`diff_engine`]). The curve itself is
//! built in [`curve`], and [`select`] chooses which previously evaluated
//! points to reuse. [`harness`] runs seeded Monte-Carlo experiments on the
//! synthetic functions in [`models`] and summarizes them with [`stats`].

pub mod curve;
pub mod diff_engine;
pub mod error;
pub mod harness;
pub mod models;
pub mod select;
pub mod stats;

pub use curve::{derivative_bound, divided_differences, newton_curve, DerivativeBound, NewtonCurve};
pub use diff_engine::{
    build_table, estimate_noise, gamma, optimal_fd_interval, DifferenceTable, EstimateStatus, HeuristicOptions,
    NoiseEstimate, PointSet,
};
pub use error::{Error, Result};
pub use harness::{run_experiment, ExperimentConfig, ExperimentKind, ExperimentRun};
pub use models::{GroundTruth, NoiseModel, NoisyFunctionSpec, SeededRng};
pub use select::{brute_force_selection, solve_selection, SelectionProblem, SelectionSolution, SlotAssignment};
pub use stats::{ecdf, ks_two_sample, Ecdf, KsResult};
