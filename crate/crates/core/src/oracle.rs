//! Per-arm CTR prediction oracles.
//!
//! Three sources stand in for a trained CTR predictor: exact values imported
//! from a prediction file, a synthetic oracle that perturbs the true CTRs
//! with Gaussian noise calibrated to hit a target top-1 accuracy, and a
//! uniform no-information oracle that predicts the dataset-wide mean CTR for
//! every arm.
//!
//! The noise model is additive Gaussian on the CTR scale with clamping to
//! [0, 1]; only top-1 accuracy is being matched, so the magnitude error
//! distribution is a modeling choice, not a measured one.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::domain::{ArmId, ExperimentSpec, PriorPrediction, PriorSource};
use crate::error::{Error, Result};
use crate::policy;
use crate::rng::RngStream;

/// Declarative oracle configuration, as stored in manifests and emitted by
/// calibration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum OracleConfig {
    /// Exact predictions from a file (schema: `test_id,package_id,predicted_ctr`).
    File { predictions: PathBuf },
    /// True CTR plus clamped Gaussian noise; `noise_sigma` is resolved by
    /// calibration against `target_accuracy`.
    Synthetic {
        #[serde(skip_serializing_if = "Option::is_none")]
        target_accuracy: Option<f64>,
        #[serde(skip_serializing_if = "Option::is_none")]
        noise_sigma: Option<f64>,
        calibration_seed: u64,
    },
    /// Dataset-wide mean CTR for every arm.
    Uniform,
}

impl OracleConfig {
    /// Seed that parameterizes prediction streams; zero for sources without
    /// randomness.
    pub fn seed(&self) -> u64 {
        match self {
            OracleConfig::Synthetic { calibration_seed, .. } => *calibration_seed,
            _ => 0,
        }
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        toml::from_str(&text).map_err(|e| Error::Config(format!("oracle config {path:?}: {e}")))
    }

    pub fn store(&self, path: &Path) -> Result<()> {
        let text = toml::to_string(self)
            .map_err(|e| Error::Config(format!("serialize oracle config: {e}")))?;
        std::fs::write(path, text).map_err(|e| Error::io(path, e))
    }
}

/// An oracle with every input it needs in memory.
#[derive(Debug, Clone)]
pub enum Oracle {
    File { predictions: BTreeMap<ArmId, f64> },
    Synthetic { noise_sigma: f64, calibration_seed: u64 },
    Uniform { mean_ctr: f64 },
}

impl Oracle {
    /// Resolve a configuration against the dataset it will predict for.
    /// The dataset is needed for the uniform oracle's mean.
    pub fn resolve(config: &OracleConfig, dataset: &[ExperimentSpec]) -> Result<Oracle> {
        Ok(match config {
            OracleConfig::File { predictions } => {
                Oracle::File { predictions: load_predictions(predictions)? }
            }
            OracleConfig::Synthetic { noise_sigma, calibration_seed, .. } => {
                let sigma = noise_sigma.ok_or_else(|| {
                    Error::Oracle("synthetic oracle has no noise_sigma; calibrate first".into())
                })?;
                if !(sigma >= 0.0) {
                    return Err(Error::Oracle(format!("noise_sigma must be >= 0, got {sigma}")));
                }
                Oracle::Synthetic { noise_sigma: sigma, calibration_seed: *calibration_seed }
            }
            OracleConfig::Uniform => Oracle::Uniform { mean_ctr: dataset_mean_ctr(dataset) },
        })
    }

    pub fn source(&self) -> PriorSource {
        match self {
            Oracle::File { .. } => PriorSource::File,
            Oracle::Synthetic { .. } => PriorSource::Synthetic,
            Oracle::Uniform { .. } => PriorSource::Uniform,
        }
    }

    /// Stream that feeds prediction noise for one test. Predictions are a
    /// property of the test and the oracle, never of the policy consuming
    /// them, so every policy sees identical priors.
    pub fn prediction_stream(&self, test_id: &str) -> RngStream {
        let seed = match self {
            Oracle::Synthetic { calibration_seed, .. } => *calibration_seed,
            _ => 0,
        };
        RngStream::derive(seed, test_id, "oracle", 0)
    }
}

/// Pooled clicks over pooled impressions across the dataset.
pub fn dataset_mean_ctr(dataset: &[ExperimentSpec]) -> f64 {
    let mut clicks = 0u64;
    let mut impressions = 0u64;
    for spec in dataset {
        for arm in &spec.arms {
            clicks += arm.clicks;
            impressions += arm.impressions;
        }
    }
    if impressions == 0 { 0.0 } else { clicks as f64 / impressions as f64 }
}

/// Produce one prediction per arm, in arm order.
pub fn predict(
    spec: &ExperimentSpec,
    oracle: &Oracle,
    stream: &mut RngStream,
) -> Result<Vec<PriorPrediction>> {
    let source = oracle.source();
    spec.arms
        .iter()
        .map(|arm| {
            let predicted_ctr = match oracle {
                Oracle::File { predictions } => *predictions.get(&arm.id).ok_or_else(|| {
                    Error::Oracle(format!(
                        "prediction file has no entry for test {} package {}",
                        arm.id.test_id, arm.id.package_id
                    ))
                })?,
                Oracle::Synthetic { noise_sigma, .. } => {
                    let noise: f64 = Normal::new(0.0, *noise_sigma)
                        .expect("sigma >= 0")
                        .sample(stream);
                    (arm.true_ctr + noise).clamp(0.0, 1.0)
                }
                Oracle::Uniform { mean_ctr } => *mean_ctr,
            };
            Ok(PriorPrediction { arm: arm.id.clone(), predicted_ctr, source })
        })
        .collect()
}

/// Convenience: predicted CTRs only, in arm order.
pub fn predict_ctrs(spec: &ExperimentSpec, oracle: &Oracle) -> Result<Vec<f64>> {
    let mut stream = oracle.prediction_stream(&spec.test_id);
    Ok(predict(spec, oracle, &mut stream)?.into_iter().map(|p| p.predicted_ctr).collect())
}

/// Top-1 accuracy of the synthetic oracle at `sigma` over `specs`: the
/// fraction of tests where the predicted champion is the true champion.
/// Ties on either side resolve by a seeded uniform choice, the same rule the
/// policy engine uses.
pub fn measure_accuracy(specs: &[ExperimentSpec], sigma: f64, seed: u64) -> f64 {
    if specs.is_empty() {
        return 0.0;
    }
    let oracle = Oracle::Synthetic { noise_sigma: sigma, calibration_seed: seed };
    let hits: usize = specs
        .iter()
        .filter(|spec| {
            let predicted = predict_ctrs(spec, &oracle).expect("synthetic oracle cannot miss");
            let mut ties = RngStream::derive(seed, &spec.test_id, "oracle-tie", 0);
            let champ_pred = policy::argmax_seeded(&predicted, &mut ties);
            let champ_true = policy::argmax_seeded(&spec.true_ctrs(), &mut ties);
            champ_pred == champ_true
        })
        .count();
    hits as f64 / specs.len() as f64
}

/// Result of a calibration run.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Calibration {
    pub noise_sigma: f64,
    pub measured_accuracy: f64,
    pub iterations: u32,
}

const CALIBRATION_TOLERANCE: f64 = 0.005;
const CALIBRATION_MAX_ITERATIONS: u32 = 40;

/// Bisect `sigma` in [0, 1] until the measured accuracy is within half a
/// point of `target_accuracy`, or return the best bracketing value after 40
/// iterations. Errors if the target sits outside the reachable band.
pub fn calibrate(specs: &[ExperimentSpec], target_accuracy: f64, seed: u64) -> Result<Calibration> {
    if specs.is_empty() {
        return Err(Error::Oracle("calibrate: empty tune fold".into()));
    }
    if !(0.0 < target_accuracy && target_accuracy <= 1.0) {
        return Err(Error::Oracle(format!(
            "target accuracy must be in (0, 1], got {target_accuracy}"
        )));
    }
    let ceiling = measure_accuracy(specs, 0.0, seed);
    let floor = measure_accuracy(specs, 1.0, seed);
    if target_accuracy > ceiling + CALIBRATION_TOLERANCE {
        return Err(Error::Oracle(format!(
            "target accuracy {target_accuracy:.4} exceeds the zero-noise ceiling {ceiling:.4}"
        )));
    }
    if target_accuracy < floor - CALIBRATION_TOLERANCE {
        return Err(Error::Oracle(format!(
            "target accuracy {target_accuracy:.4} is below the measured floor {floor:.4}"
        )));
    }

    let mut lo = 0.0f64;
    let mut hi = 1.0f64;
    let mut best = Calibration { noise_sigma: 0.0, measured_accuracy: ceiling, iterations: 0 };
    for iteration in 1..=CALIBRATION_MAX_ITERATIONS {
        let mid = 0.5 * (lo + hi);
        let accuracy = measure_accuracy(specs, mid, seed);
        if (accuracy - target_accuracy).abs() < (best.measured_accuracy - target_accuracy).abs() {
            best = Calibration { noise_sigma: mid, measured_accuracy: accuracy, iterations: iteration };
        }
        if (accuracy - target_accuracy).abs() <= CALIBRATION_TOLERANCE {
            return Ok(Calibration {
                noise_sigma: mid,
                measured_accuracy: accuracy,
                iterations: iteration,
            });
        }
        if accuracy > target_accuracy {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(best)
}

/// Load a prediction file: `test_id,package_id,predicted_ctr`.
pub fn load_predictions(path: &Path) -> Result<BTreeMap<ArmId, f64>> {
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    let mut reader = csv::Reader::from_reader(file);
    let headers = reader
        .headers()
        .map_err(|e| Error::Oracle(format!("{path:?}: cannot read header: {e}")))?;
    if headers.iter().collect::<Vec<_>>() != ["test_id", "package_id", "predicted_ctr"] {
        return Err(Error::Oracle(format!(
            "{path:?}: expected header test_id,package_id,predicted_ctr"
        )));
    }
    let mut map = BTreeMap::new();
    for (i, record) in reader.records().enumerate() {
        let line = i + 2;
        let record =
            record.map_err(|e| Error::Oracle(format!("{path:?} line {line}: {e}")))?;
        let test_id = record.get(0).unwrap_or("").to_string();
        let package_id = record.get(1).unwrap_or("").to_string();
        let value: f64 = record
            .get(2)
            .unwrap_or("")
            .parse()
            .map_err(|_| Error::Oracle(format!("{path:?} line {line}: non-numeric prediction")))?;
        if !(0.0..=1.0).contains(&value) {
            return Err(Error::Oracle(format!(
                "{path:?} line {line}: predicted_ctr {value} outside [0, 1]"
            )));
        }
        let arm = ArmId { test_id, package_id };
        if map.insert(arm.clone(), value).is_some() {
            return Err(Error::Oracle(format!(
                "{path:?} line {line}: duplicate prediction for test {} package {}",
                arm.test_id, arm.package_id
            )));
        }
    }
    Ok(map)
}

/// Write predictions in the file-oracle schema at full precision; loading
/// the result reproduces the exact same values.
pub fn store_predictions(path: &Path, predictions: &BTreeMap<ArmId, f64>) -> Result<()> {
    let mut out = String::from("test_id,package_id,predicted_ctr\n");
    for (arm, value) in predictions {
        out.push_str(&format!("{},{},{}\n", arm.test_id, arm.package_id, value));
    }
    std::fs::write(path, out).map_err(|e| Error::io(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domain::spec_from_ctrs;
    use proptest::prelude::*;

    fn fold(n: usize, seed: u64) -> Vec<ExperimentSpec> {
        // Distinct CTR patterns per test so the zero-noise champion is unique.
        let mut stream = RngStream::derive(seed, "oracle-tests", "fold", 0);
        (0..n)
            .map(|i| {
                let k = 2 + stream.next_index(4);
                let ctrs: Vec<f64> =
                    (0..k).map(|_| 0.002 + 0.03 * stream.next_f64()).collect();
                spec_from_ctrs(&format!("t{i:04}"), &ctrs)
            })
            .collect()
    }

    #[test]
    fn zero_noise_predicts_true_ctrs() {
        let spec = spec_from_ctrs("t", &[0.01, 0.02, 0.03]);
        let oracle = Oracle::Synthetic { noise_sigma: 0.0, calibration_seed: 5 };
        let preds = predict_ctrs(&spec, &oracle).unwrap();
        assert_eq!(preds, spec.true_ctrs());
        assert_eq!(measure_accuracy(&fold(50, 1), 0.0, 3), 1.0);
    }

    #[test]
    fn uniform_oracle_ties_every_arm() {
        let dataset = fold(10, 2);
        let oracle =
            Oracle::resolve(&OracleConfig::Uniform, &dataset).unwrap();
        let preds = predict_ctrs(&dataset[0], &oracle).unwrap();
        assert!(preds.windows(2).all(|w| w[0] == w[1]));
        assert_eq!(preds[0], dataset_mean_ctr(&dataset));
    }

    #[test]
    fn predictions_are_bit_reproducible() {
        let spec = spec_from_ctrs("t", &[0.01, 0.02]);
        let oracle = Oracle::Synthetic { noise_sigma: 0.01, calibration_seed: 5 };
        let a = predict_ctrs(&spec, &oracle).unwrap();
        let b = predict_ctrs(&spec, &oracle).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn predictions_stay_in_unit_interval() {
        let spec = spec_from_ctrs("t", &[0.001, 0.999]);
        let oracle = Oracle::Synthetic { noise_sigma: 5.0, calibration_seed: 5 };
        for rep in 0..20u64 {
            let mut stream = RngStream::derive(9, "t", "clamp", rep);
            for p in predict(&spec, &oracle, &mut stream).unwrap() {
                assert!((0.0..=1.0).contains(&p.predicted_ctr));
            }
        }
    }

    #[test]
    fn file_oracle_missing_arm_names_it() {
        let spec = spec_from_ctrs("t77", &[0.01, 0.02]);
        let mut map = BTreeMap::new();
        map.insert(ArmId::new("t77", "p0"), 0.5);
        let oracle = Oracle::File { predictions: map };
        let err = predict_ctrs(&spec, &oracle).unwrap_err();
        let message = err.to_string();
        assert!(message.contains("t77") && message.contains("p1"), "{message}");
    }

    #[test]
    fn calibrate_near_perfect_target_needs_little_noise() {
        let specs = fold(300, 7);
        let cal = calibrate(&specs, 0.98, 11).unwrap();
        assert!(cal.noise_sigma < 0.01, "sigma {}", cal.noise_sigma);
        assert!((cal.measured_accuracy - 0.98).abs() <= 0.005);
    }

    #[test]
    fn calibrate_hits_interior_target() {
        let specs = fold(300, 7);
        let cal = calibrate(&specs, 0.4686, 11).unwrap();
        assert!(cal.noise_sigma > 0.0);
        assert!((cal.measured_accuracy - 0.4686).abs() <= 0.005);
        // Measuring again at the calibrated sigma reproduces the accuracy.
        assert_eq!(measure_accuracy(&specs, cal.noise_sigma, 11), cal.measured_accuracy);
    }

    #[test]
    fn calibrate_rejects_target_below_floor() {
        let specs = fold(300, 7);
        let err = calibrate(&specs, 0.01, 11).unwrap_err();
        assert!(err.to_string().contains("floor"), "{err}");
    }

    #[test]
    fn calibrate_rejects_target_above_one() {
        assert!(calibrate(&fold(10, 7), 1.1, 11).is_err());
    }

    #[test]
    fn accuracy_is_monotone_in_sigma_up_to_noise() {
        let specs = fold(200, 13);
        let sigmas: Vec<f64> = (0..20).map(|i| i as f64 * 0.002).collect();
        let accs: Vec<f64> =
            sigmas.iter().map(|&s| measure_accuracy(&specs, s, 17)).collect();
        for i in 0..accs.len() {
            for j in i + 1..accs.len() {
                assert!(
                    accs[j] <= accs[i] + 0.05,
                    "accuracy rose from {} (sigma {}) to {} (sigma {})",
                    accs[i],
                    sigmas[i],
                    accs[j],
                    sigmas[j]
                );
            }
        }
    }

    #[test]
    fn load_predictions_validates() {
        let dir = tempfile::tempdir().unwrap();
        let ok = dir.path().join("ok.csv");
        std::fs::write(&ok, "test_id,package_id,predicted_ctr\nt1,p1,0.02\n").unwrap();
        let map = load_predictions(&ok).unwrap();
        assert_eq!(map.len(), 1);
        assert_eq!(map[&ArmId::new("t1", "p1")], 0.02);

        let dup = dir.path().join("dup.csv");
        std::fs::write(&dup, "test_id,package_id,predicted_ctr\nt1,p1,0.02\nt1,p1,0.03\n")
            .unwrap();
        let err = load_predictions(&dup).unwrap_err().to_string();
        assert!(err.contains("duplicate prediction"), "{err}");

        let range = dir.path().join("range.csv");
        std::fs::write(&range, "test_id,package_id,predicted_ctr\nt1,p1,1.5\n").unwrap();
        let err = load_predictions(&range).unwrap_err().to_string();
        assert!(err.contains("line 2"), "{err}");
    }

    proptest! {
        #[test]
        fn store_then_load_is_identity(values in proptest::collection::btree_map(
            (0u32..50, 0u32..8),
            0.0f64..=1.0,
            1..40,
        )) {
            let dir = tempfile::tempdir().unwrap();
            let path = dir.path().join("preds.csv");
            let map: BTreeMap<ArmId, f64> = values
                .into_iter()
                .map(|((t, p), v)| (ArmId::new(format!("t{t}"), format!("p{p}")), v))
                .collect();
            store_predictions(&path, &map).unwrap();
            let reread = load_predictions(&path).unwrap();
            prop_assert_eq!(map, reread);
        }
    }
}
