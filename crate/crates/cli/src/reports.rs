//! RQ1 (early signals) and RQ2 (temporal dynamics) analyses.

use serde::{Deserialize, Serialize};
use tutor_core::analytics::{
    by_student, early_features, question_type_rt, temporal_feature_names, temporal_features,
    turn_aggregates, EarlyFeatures, QuestionTypeRt, TemporalFeatures, TurnAggregate,
    EARLY_FEATURE_NAMES,
};
use tutor_core::cohortsim::InteractionRecord;
use tutor_core::models::{
    linear_fit, logistic_fit, matrix_from_rows, FeatureScaler, LinearFit, LogisticConfig,
    LogisticFit, Scaled,
};
use tutor_core::Result;

pub const METRICS_LABEL: &str = "training metrics, simulator-dependent";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FinalOutcome {
    pub student_id: u32,
    pub turn: u32,
    pub correct: bool,
    pub trust: f64,
}

/// Correctness and trust at each student's last turn.
pub fn final_outcomes(records: &[InteractionRecord]) -> Vec<FinalOutcome> {
    by_student(records)
        .into_values()
        .map(|rows| {
            let r = rows.last().expect("groups are nonempty");
            FinalOutcome {
                student_id: r.student_id,
                turn: r.turn,
                correct: r.correct(),
                trust: r.outcomes.trust,
            }
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OutcomeModels {
    pub correctness: Scaled<LogisticFit>,
    pub trust: Scaled<LinearFit>,
}

fn fit_outcome_models(
    rows: Vec<Vec<f64>>,
    names: &[String],
    finals: &[FinalOutcome],
    logistic: &LogisticConfig,
    ridge: f64,
) -> Result<OutcomeModels> {
    let (scaler, z) = FeatureScaler::fit_transform(&matrix_from_rows(&rows)?)?;
    let y: Vec<bool> = finals.iter().map(|f| f.correct).collect();
    let t: Vec<f64> = finals.iter().map(|f| f.trust).collect();
    Ok(OutcomeModels {
        correctness: Scaled {
            scaler: scaler.clone(),
            model: logistic_fit(&z, &y, names, logistic)?,
        },
        trust: Scaled {
            scaler,
            model: linear_fit(&z, &t, names, ridge)?,
        },
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Rq1Report {
    pub metrics: String,
    pub window: u32,
    pub leakage_note: String,
    pub feature_names: Vec<String>,
    pub turn_aggregates: Vec<TurnAggregate>,
    pub features: Vec<EarlyFeatures>,
    pub final_outcomes: Vec<FinalOutcome>,
    pub models: OutcomeModels,
}

pub fn run_rq1(
    records: &[InteractionRecord],
    window: u32,
    logistic: &LogisticConfig,
    ridge: f64,
) -> Result<Rq1Report> {
    let features = early_features(records, window)?;
    let finals = final_outcomes(records);
    let names: Vec<String> = EARLY_FEATURE_NAMES.map(String::from).to_vec();
    let rows = features.iter().map(|f| f.vector()).collect();
    Ok(Rq1Report {
        metrics: METRICS_LABEL.into(),
        window,
        leakage_note:
            "early mean trust is a predictor of final trust; both are readings of the same \
                       trust trajectory"
                .into(),
        models: fit_outcome_models(rows, &names, &finals, logistic, ridge)?,
        feature_names: names,
        turn_aggregates: turn_aggregates(records)?,
        features,
        final_outcomes: finals,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Rq2Report {
    pub metrics: String,
    pub window: u32,
    pub leakage_note: String,
    pub feature_names: Vec<String>,
    pub features: Vec<TemporalFeatures>,
    pub final_outcomes: Vec<FinalOutcome>,
    pub models: OutcomeModels,
    pub question_type_rt: Vec<QuestionTypeRt>,
}

pub fn run_rq2(
    records: &[InteractionRecord],
    window: u32,
    logistic: &LogisticConfig,
    ridge: f64,
) -> Result<Rq2Report> {
    let features = temporal_features(records, window)?;
    let finals = final_outcomes(records);
    let names = temporal_feature_names();
    let rows = features.iter().map(|f| f.vector()).collect();
    Ok(Rq2Report {
        metrics: METRICS_LABEL.into(),
        window,
        leakage_note:
            "the late window contains the final turn, so deltas, slopes and trust variability \
                       partly contain the prediction targets"
                .into(),
        models: fit_outcome_models(rows, &names, &finals, logistic, ridge)?,
        feature_names: names,
        features,
        final_outcomes: finals,
        question_type_rt: question_type_rt(records)?,
    })
}
