use ndarray::Array2;
use serde::{Deserialize, Serialize};

use super::logistic::{logistic_fit, LogisticConfig, LogisticFit};
use super::scaler::FeatureScaler;
use crate::cohortsim::InteractionRecord;
use crate::error::{Error, Result};

pub const EARLY_WARNING_FEATURES: [&str; 8] = [
    "response_time",
    "attempts",
    "hint",
    "turn",
    "prior_knowledge",
    "programming_experience",
    "motivation",
    "difficulty",
];

/// One row per interaction, columns in [`EARLY_WARNING_FEATURES`] order.
pub fn early_warning_features(records: &[InteractionRecord]) -> Array2<f64> {
    Array2::from_shape_fn((records.len(), EARLY_WARNING_FEATURES.len()), |(i, j)| {
        let r = &records[i];
        match j {
            0 => r.raw.response_time,
            1 => r.raw.attempts as f64,
            2 => r.hint(),
            3 => r.turn as f64,
            4 => r.raw.prior_knowledge,
            5 => r.raw.programming_experience,
            6 => r.raw.motivation,
            _ => r.raw.difficulty,
        }
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RiskScore {
    pub student_id: u32,
    pub turn: u32,
    pub p_correct: f64,
    /// `1 - p_correct`.
    pub risk: f64,
}

/// Interaction-level logistic model of correctness on standardized
/// behavioural and baseline features.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EarlyWarningFit {
    pub scaler: FeatureScaler,
    pub fit: LogisticFit,
    /// Training accuracy at the 0.5 threshold.
    pub accuracy: f64,
    pub n_records: usize,
    pub n_correct: usize,
}

impl EarlyWarningFit {
    pub fn risk_scores(&self, records: &[InteractionRecord]) -> Result<Vec<RiskScore>> {
        let z = self.scaler.transform(&early_warning_features(records))?;
        let p = self.fit.predict_proba(&z)?;
        Ok(records
            .iter()
            .zip(p)
            .map(|(r, p)| RiskScore {
                student_id: r.student_id,
                turn: r.turn,
                p_correct: p,
                risk: 1.0 - p,
            })
            .collect())
    }
}

pub fn early_warning_fit(
    records: &[InteractionRecord],
    cfg: &LogisticConfig,
) -> Result<EarlyWarningFit> {
    if records.is_empty() {
        return Err(Error::InsufficientData(
            "early-warning model needs a nonempty log".into(),
        ));
    }
    let y: Vec<bool> = records.iter().map(|r| r.correct()).collect();
    let (scaler, z) = FeatureScaler::fit_transform(&early_warning_features(records))?;
    let names: Vec<String> = EARLY_WARNING_FEATURES
        .iter()
        .map(|s| s.to_string())
        .collect();
    let fit = logistic_fit(&z, &y, &names, cfg)?;
    Ok(EarlyWarningFit {
        scaler,
        accuracy: fit.train_accuracy,
        fit,
        n_records: records.len(),
        n_correct: y.iter().filter(|&&c| c).count(),
    })
}
