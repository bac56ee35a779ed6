//! Simulation laboratory for stochastic multi-armed bandits.
//!
//! The crate is organised around the life of an experiment:
//!
//! - [`env`]: arm reward models, bandit instances and environment-class statistics.
//! - [`policies`]: the generic index loop and the concrete policies (UCB-tau,
//!   UCB-infinity, explore-then-commit, greedy, epsilon-greedy, Thompson sampling).
//! - [`tuning`]: the exploration-mass threshold `beta_a(tau)` and the rules that map
//!   prior knowledge about the environment class to exploration masses.
//! - [`sim`]: seeded episodes and Monte-Carlo repetition batches.
//! - [`metrics`]: T-regret, discounted regret, regret-at-risk and growth diagnostics.
//! - [`bounds`]: closed-form theoretical curves and numeric lemma validators.
//! - [`harness`]: configuration files, grid expansion, CSV output and validation suites.

pub mod bounds;
pub mod env;
pub mod error;
pub mod harness;
pub mod metrics;
pub mod policies;
pub mod rng;
pub mod sim;
pub mod tuning;

pub use env::{ArmModel, ClassSpec, EnvironmentSpec, RewardFamily};
pub use error::{Error, Result};
pub use policies::{PolicyConfig, PolicyState, Tau, TieBreak};
pub use metrics::RegretSummary;
pub use sim::{ExecutionMode, RunSpec, Trajectory};
pub use tuning::TuningRule;
