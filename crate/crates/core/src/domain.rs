//! Shared domain types and the metric definitions every other module
//! consumes.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// One headline variant within a test: the unit a policy chooses each period.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct ArmId {
    pub test_id: String,
    pub package_id: String,
}

impl ArmId {
    pub fn new(test_id: impl Into<String>, package_id: impl Into<String>) -> Self {
        ArmId { test_id: test_id.into(), package_id: package_id.into() }
    }
}

/// One arm of an experiment with its empirical click-through rate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Arm {
    pub id: ArmId,
    pub headline: String,
    pub impressions: u64,
    pub clicks: u64,
    /// Exactly `clicks / impressions`.
    pub true_ctr: f64,
}

/// One A/B test as a bandit instance: arm identifiers plus per-arm empirical
/// CTRs used as the ground-truth Bernoulli means during replay.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentSpec {
    pub test_id: String,
    pub arms: Vec<Arm>,
}

impl ExperimentSpec {
    /// Number of arms K.
    pub fn k(&self) -> usize {
        self.arms.len()
    }

    /// Per-arm true CTRs in arm order.
    pub fn true_ctrs(&self) -> Vec<f64> {
        self.arms.iter().map(|a| a.true_ctr).collect()
    }

    /// Highest true CTR across arms.
    pub fn best_ctr(&self) -> f64 {
        self.arms.iter().map(|a| a.true_ctr).fold(f64::NEG_INFINITY, f64::max)
    }
}

/// Where a per-arm CTR prediction came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PriorSource {
    File,
    Synthetic,
    Uniform,
}

/// Per-arm predicted CTR from an oracle standing in for a trained predictor.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PriorPrediction {
    pub arm: ArmId,
    pub predicted_ctr: f64,
    pub source: PriorSource,
}

/// Horizon scaling for one test: `horizon = tau * K` exactly.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct HorizonPlan {
    pub tau: u64,
    pub horizon: u64,
}

impl HorizonPlan {
    pub fn new(tau: u64, k: usize) -> Self {
        HorizonPlan { tau, horizon: tau * k as u64 }
    }
}

/// Outcome of one simulated test under one policy.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub test_id: String,
    pub policy_id: String,
    pub seed: u64,
    pub tau: u64,
    pub total_clicks: u64,
    pub per_arm_pulls: Vec<u64>,
    /// `total_clicks / horizon` where `horizon = tau * K`.
    pub avg_clicks_per_period: f64,
}

impl RunRecord {
    /// Horizon the record was generated over.
    pub fn horizon(&self) -> u64 {
        self.per_arm_pulls.iter().sum()
    }

    /// The paper-style normalization `total_clicks / tau`, which weighs all
    /// tests equally regardless of K. Ratios between policies are identical
    /// under either normalization.
    pub fn clicks_per_tau(&self) -> f64 {
        self.total_clicks as f64 / self.tau as f64
    }
}

/// Expected-value cumulative regret of a run: `T*mu_star - sum_t mu_{a_t}`,
/// using the true CTR of each pulled arm rather than realized clicks so the
/// diagnostic carries no simulation noise.
pub fn regret(spec: &ExperimentSpec, record: &RunRecord) -> Result<f64> {
    if spec.test_id != record.test_id {
        return Err(Error::Sim(format!(
            "regret: record for test '{}' does not match spec '{}'",
            record.test_id, spec.test_id
        )));
    }
    if record.per_arm_pulls.len() != spec.k() {
        return Err(Error::Sim(format!(
            "regret: record has {} arms, spec has {}",
            record.per_arm_pulls.len(),
            spec.k()
        )));
    }
    let horizon = record.horizon() as f64;
    let collected: f64 = record
        .per_arm_pulls
        .iter()
        .zip(&spec.arms)
        .map(|(&pulls, arm)| pulls as f64 * arm.true_ctr)
        .sum();
    Ok(horizon * spec.best_ctr() - collected)
}

/// Average clicks per period: `total_clicks / horizon`.
pub fn avg_clicks_per_period(total_clicks: u64, horizon: u64) -> Result<f64> {
    if horizon == 0 {
        return Err(Error::Sim("avg_clicks_per_period: zero horizon".into()));
    }
    Ok(total_clicks as f64 / horizon as f64)
}

#[cfg(test)]
pub(crate) fn spec_from_ctrs(test_id: &str, ctrs: &[f64]) -> ExperimentSpec {
    // Test helper: a spec whose CTRs are rational with denominator 10^6.
    let arms = ctrs
        .iter()
        .enumerate()
        .map(|(i, &ctr)| {
            let impressions = 1_000_000u64;
            let clicks = (ctr * impressions as f64).round() as u64;
            Arm {
                id: ArmId::new(test_id, format!("p{i}")),
                headline: format!("{test_id} headline {i}"),
                impressions,
                clicks,
                true_ctr: clicks as f64 / impressions as f64,
            }
        })
        .collect();
    ExperimentSpec { test_id: test_id.into(), arms }
}
