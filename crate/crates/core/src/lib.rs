//! Replay engine for headline A/B tests treated as multi-armed bandit
//! problems.
//!
//! The library ingests an archive of A/B test results, converts each test
//! into a Bernoulli bandit instance whose arm means are the empirical
//! click-through rates, and replays a roster of allocation policies against
//! those instances: explore-then-commit, UCB, prior-assisted two-bound UCB,
//! Thompson sampling (with and without prior pseudo-samples), best-arm
//! identification, and contextual variants on synthetic environments.
//! Per-arm CTR priors come from a pluggable oracle: imported prediction
//! files, an accuracy-calibrated synthetic oracle, or a no-information
//! uniform oracle.
//!
//! Everything is deterministic given a master seed: random streams are
//! derived per (test, policy, replication) by counter-based hashing, so
//! results are independent of scheduling and worker count.

pub mod bai;
pub mod contextual;
pub mod domain;
pub mod error;
pub mod ingest;
pub mod oracle;
pub mod policy;
pub mod report;
pub mod rng;
pub mod sim;
pub mod synth;

pub use domain::{ArmId, ExperimentSpec, HorizonPlan, PriorPrediction, PriorSource, RunRecord};
pub use error::Error;
pub use rng::RngStream;
