//! Latent learner profiles: cluster student aggregates, describe each
//! cluster, and relate profiles to the feedback students responded to.

use std::collections::BTreeMap;

use ndarray::Array2;
use serde::{Deserialize, Serialize};

use crate::analytics::{
    responsiveness, responsiveness_alt, student_aggregates, temporal_features,
    ResponsivenessMatrix, StudentAggregate, STUDENT_FEATURE_NAMES,
};
use crate::cohortsim::InteractionRecord;
use crate::domain::Action;
use crate::error::{Error, Result};
use crate::models::{
    early_warning_features, kmeans, linear_fit, matrix_from_rows, multinomial_fit, pca2,
    FeatureScaler, KMeansConfig, KMeansFit, LinearFit, MultinomialConfig, MultinomialFit, Pca2,
    DEFAULT_RIDGE, EARLY_WARNING_FEATURES,
};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Rq3Config {
    pub k: usize,
    /// Trust weight in the alternative responsiveness score.
    pub lambda: f64,
    /// Window size for the late-minus-early deltas.
    pub window: u32,
    pub kmeans: KMeansConfig,
    pub multinomial: MultinomialConfig,
    pub ridge: f64,
    /// Also fit the interaction-level feedback classifier.
    pub interaction_level: bool,
}

impl Default for Rq3Config {
    fn default() -> Self {
        Self {
            k: 4,
            lambda: 0.5,
            window: 3,
            kmeans: KMeansConfig::default(),
            multinomial: MultinomialConfig::default(),
            ridge: DEFAULT_RIDGE,
            interaction_level: false,
        }
    }
}

impl Rq3Config {
    pub fn with_seed(mut self, seed: u64) -> Self {
        self.kmeans.seed = seed;
        self
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeedbackAssociation {
    pub profile_id: usize,
    /// Received-action counts in canonical action order.
    pub counts: [usize; Action::COUNT],
    pub frequencies: [f64; Action::COUNT],
    /// Most frequent action (earliest canonical action on ties); `None` for
    /// a profile without records.
    pub mode: Option<Action>,
    pub mode_frequency: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProfileSummary {
    pub profile_id: usize,
    pub size: usize,
    pub student_ids: Vec<u32>,
    /// Raw-unit means in [`STUDENT_FEATURE_NAMES`] order.
    pub means: Vec<f64>,
    pub dominant_feedback: Option<Action>,
    pub dominant_frequency: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RadarTable {
    pub feature_names: Vec<String>,
    pub profile_ids: Vec<usize>,
    /// One row per profile, each value in `[0, 1]`.
    pub values: Vec<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AltResponsiveness {
    pub student_id: u32,
    pub delta_correctness: f64,
    pub delta_trust: f64,
    pub score: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PcaExport {
    pub feature_names: Vec<String>,
    pub fit: Pca2,
    pub student_ids: Vec<u32>,
    pub turns: Vec<u32>,
    pub actions: Vec<Action>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InteractionLevelFit {
    pub scaler: FeatureScaler,
    pub fit: MultinomialFit,
    pub majority_baseline: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RQ3Report {
    pub metrics: String,
    pub config: Rq3Config,
    pub feature_names: Vec<String>,
    pub aggregates: Vec<StudentAggregate>,
    pub scaler: FeatureScaler,
    /// Cluster ids already renumbered to profile ids.
    pub kmeans: KMeansFit,
    pub profiles: Vec<ProfileSummary>,
    pub associations: Vec<FeedbackAssociation>,
    pub responsiveness: ResponsivenessMatrix,
    pub best_feedback_model: MultinomialFit,
    pub majority_baseline: f64,
    pub best_score_model: LinearFit,
    /// `None` when some student has fewer than `2 * window` turns.
    pub alt_responsiveness: Option<Vec<AltResponsiveness>>,
    /// `None` for a single profile.
    pub radar: Option<RadarTable>,
    pub pca: PcaExport,
    pub interaction_level: Option<InteractionLevelFit>,
}

fn majority_share(labels: &[usize]) -> f64 {
    let mut counts = BTreeMap::new();
    labels
        .iter()
        .for_each(|&l| *counts.entry(l).or_insert(0usize) += 1);
    counts.values().copied().max().unwrap_or(0) as f64 / labels.len().max(1) as f64
}

/// Received-action distribution per profile. `assignments` maps student id
/// to profile id in `0..k`.
pub fn profile_feedback_association(
    records: &[InteractionRecord],
    assignments: &BTreeMap<u32, usize>,
    k: usize,
) -> Result<Vec<FeedbackAssociation>> {
    let mut counts = vec![[0usize; Action::COUNT]; k];
    for r in records {
        let p = *assignments
            .get(&r.student_id)
            .ok_or_else(|| Error::Data(format!("student {} has no profile", r.student_id)))?;
        if p >= k {
            return Err(Error::Config(format!(
                "profile {p} out of range for k = {k}"
            )));
        }
        counts[p][r.action.index()] += 1;
    }
    Ok(counts
        .into_iter()
        .enumerate()
        .map(|(profile_id, counts)| {
            let total: usize = counts.iter().sum();
            let mut frequencies = [0.0; Action::COUNT];
            if total > 0 {
                for (f, &c) in frequencies.iter_mut().zip(&counts) {
                    *f = c as f64 / total as f64;
                }
            }
            let mode =
                (total > 0).then(|| Action::ALL[crate::policy::argmax(&counts.map(|c| c as f64))]);
            FeedbackAssociation {
                profile_id,
                counts,
                mode,
                mode_frequency: mode.map_or(0.0, |a| frequencies[a.index()]),
                frequencies,
            }
        })
        .collect())
}

/// Per-feature min-max normalization across profiles; constant features
/// map to 0.5.
pub fn radar_table(summaries: &[ProfileSummary]) -> Result<RadarTable> {
    if summaries.len() < 2 {
        return Err(Error::InsufficientData(
            "radar comparison needs at least 2 profiles".into(),
        ));
    }
    let p = summaries[0].means.len();
    if summaries.iter().any(|s| s.means.len() != p) {
        return Err(Error::Config(
            "profiles have different feature counts".into(),
        ));
    }
    let mut values = vec![vec![0.0; p]; summaries.len()];
    for j in 0..p {
        let col: Vec<f64> = summaries.iter().map(|s| s.means[j]).collect();
        let lo = col.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = col.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        for (row, v) in values.iter_mut().zip(&col) {
            row[j] = if hi > lo {
                ((v - lo) / (hi - lo)).clamp(0.0, 1.0)
            } else {
                0.5
            };
        }
    }
    let feature_names = if p == STUDENT_FEATURE_NAMES.len() {
        STUDENT_FEATURE_NAMES.map(String::from).to_vec()
    } else {
        (0..p).map(|j| format!("feature_{j}")).collect()
    };
    Ok(RadarTable {
        feature_names,
        profile_ids: summaries.iter().map(|s| s.profile_id).collect(),
        values,
    })
}

/// Renumbers clusters by descending mean correctness rate (ties keep the
/// lower cluster index; empty clusters go last).
fn relabel(fit: KMeansFit, aggregates: &[StudentAggregate]) -> KMeansFit {
    let k = fit.k;
    let mut sum = vec![0.0; k];
    for (a, &c) in aggregates.iter().zip(&fit.assignments) {
        sum[c] += a.correctness_rate;
    }
    let key = |c: usize| {
        if fit.sizes[c] > 0 {
            sum[c] / fit.sizes[c] as f64
        } else {
            f64::NEG_INFINITY
        }
    };
    let mut order: Vec<usize> = (0..k).collect();
    order.sort_by(|&a, &b| key(b).total_cmp(&key(a)).then(a.cmp(&b)));
    let mut new_id = vec![0; k];
    for (new, &old) in order.iter().enumerate() {
        new_id[old] = new;
    }
    KMeansFit {
        centroids: fit.centroids.select(ndarray::Axis(0), &order),
        assignments: fit.assignments.iter().map(|&c| new_id[c]).collect(),
        sizes: order.iter().map(|&c| fit.sizes[c]).collect(),
        ..fit
    }
}

fn summarize(
    fit: &KMeansFit,
    aggregates: &[StudentAggregate],
    scaler: &FeatureScaler,
    associations: &[FeedbackAssociation],
) -> Vec<ProfileSummary> {
    (0..fit.k)
        .map(|c| {
            let members: Vec<&StudentAggregate> = aggregates
                .iter()
                .zip(&fit.assignments)
                .filter(|(_, &a)| a == c)
                .map(|(s, _)| s)
                .collect();
            let means = if members.is_empty() {
                // empty cluster: report its centroid in raw units
                (0..scaler.dim())
                    .map(|j| fit.centroids[[c, j]] * scaler.sds[j] + scaler.means[j])
                    .collect()
            } else {
                let n = members.len() as f64;
                let mut m = vec![0.0; STUDENT_FEATURE_NAMES.len()];
                for s in &members {
                    m.iter_mut()
                        .zip(s.vector())
                        .for_each(|(acc, v)| *acc += v / n);
                }
                m
            };
            ProfileSummary {
                profile_id: c,
                size: members.len(),
                student_ids: members.iter().map(|s| s.student_id).collect(),
                means,
                dominant_feedback: associations[c].mode,
                dominant_frequency: associations[c].mode_frequency,
            }
        })
        .collect()
}

fn pca_export(records: &[InteractionRecord]) -> Result<PcaExport> {
    let base = early_warning_features(records);
    let extra = Array2::from_shape_fn((records.len(), 2), |(i, j)| {
        if j == 0 {
            records[i].outcomes.correctness
        } else {
            records[i].outcomes.trust
        }
    });
    let x = ndarray::concatenate![ndarray::Axis(1), base, extra];
    let (_, z) = FeatureScaler::fit_transform(&x)?;
    let mut names: Vec<String> = EARLY_WARNING_FEATURES.map(String::from).to_vec();
    names.extend(["correctness".to_string(), "trust".to_string()]);
    Ok(PcaExport {
        feature_names: names,
        fit: pca2(&z)?,
        student_ids: records.iter().map(|r| r.student_id).collect(),
        turns: records.iter().map(|r| r.turn).collect(),
        actions: records.iter().map(|r| r.action).collect(),
    })
}

fn action_names() -> Vec<String> {
    Action::ALL.iter().map(|a| a.name().to_string()).collect()
}

pub fn run_rq3(records: &[InteractionRecord], cfg: &Rq3Config) -> Result<RQ3Report> {
    let aggregates = student_aggregates(records)?;
    if aggregates.len() < cfg.k {
        return Err(Error::InsufficientData(format!(
            "{} students cannot form {} profiles",
            aggregates.len(),
            cfg.k
        )));
    }
    let rows: Vec<Vec<f64>> = aggregates.iter().map(|a| a.vector()).collect();
    let (scaler, z) = FeatureScaler::fit_transform(&matrix_from_rows(&rows)?)?;
    let fit = relabel(kmeans(&z, cfg.k, &cfg.kmeans)?, &aggregates);

    let profile_of: BTreeMap<u32, usize> = aggregates
        .iter()
        .zip(&fit.assignments)
        .map(|(a, &c)| (a.student_id, c))
        .collect();
    let associations = profile_feedback_association(records, &profile_of, cfg.k)?;
    let profiles = summarize(&fit, &aggregates, &scaler, &associations);

    let resp = responsiveness(records)?;
    let feature_names: Vec<String> = STUDENT_FEATURE_NAMES.map(String::from).to_vec();
    let labels: Vec<usize> = resp
        .students
        .iter()
        .map(|s| s.best_feedback.index())
        .collect();
    let best_feedback_model = multinomial_fit(
        &z,
        &labels,
        &action_names(),
        &feature_names,
        &cfg.multinomial,
    )?;
    let scores: Vec<f64> = resp.students.iter().map(|s| s.best_score).collect();
    let best_score_model = linear_fit(&z, &scores, &feature_names, cfg.ridge)?;

    let alt_responsiveness = match temporal_features(records, cfg.window) {
        Ok(t) => Some(
            t.iter()
                .map(|f| {
                    Ok(AltResponsiveness {
                        student_id: f.student_id,
                        delta_correctness: f.delta.correctness,
                        delta_trust: f.delta.trust,
                        score: responsiveness_alt(f.delta.correctness, f.delta.trust, cfg.lambda)?,
                    })
                })
                .collect::<Result<Vec<_>>>()?,
        ),
        Err(Error::Data(_)) => None,
        Err(e) => return Err(e),
    };
    let radar = if cfg.k >= 2 {
        Some(radar_table(&profiles)?)
    } else {
        None
    };

    let interaction_level = if cfg.interaction_level {
        let (sc, x) = FeatureScaler::fit_transform(&early_warning_features(records))?;
        let y: Vec<usize> = records.iter().map(|r| r.action.index()).collect();
        let names: Vec<String> = EARLY_WARNING_FEATURES.map(String::from).to_vec();
        Some(InteractionLevelFit {
            scaler: sc,
            fit: multinomial_fit(&x, &y, &action_names(), &names, &cfg.multinomial)?,
            majority_baseline: majority_share(&y),
        })
    } else {
        None
    };

    Ok(RQ3Report {
        metrics: "training".into(),
        config: *cfg,
        feature_names,
        majority_baseline: majority_share(&labels),
        aggregates,
        scaler,
        kmeans: fit,
        profiles,
        associations,
        responsiveness: resp,
        best_feedback_model,
        best_score_model,
        alt_responsiveness,
        radar,
        pca: pca_export(records)?,
        interaction_level,
    })
}
