//! Feature engineering over interaction logs: per-turn aggregates, early-window
//! features, temporal slope/delta features, student-level aggregates and
//! feedback responsiveness scores.
//!
//! All functions sort their input by `(student_id, turn)` before reducing,
//! so results do not depend on record order.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::cohortsim::InteractionRecord;
use crate::domain::{Action, QuestionType};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TurnAggregate {
    pub turn: u32,
    pub mean_rt: f64,
    pub hint_rate: f64,
    pub mean_attempts: f64,
    pub correctness_rate: f64,
    pub mean_trust: f64,
    pub n: usize,
}

fn mean(v: &[f64]) -> f64 {
    v.iter().sum::<f64>() / v.len() as f64
}

/// Sample standard deviation; 0 for fewer than two values.
pub fn sample_sd(v: &[f64]) -> f64 {
    if v.len() < 2 {
        return 0.0;
    }
    let mu = mean(v);
    (v.iter().map(|x| (x - mu).powi(2)).sum::<f64>() / (v.len() as f64 - 1.0)).sqrt()
}

/// Least-squares slope of `ys` against `xs`.
pub fn ols_slope_xy(xs: &[f64], ys: &[f64]) -> Result<f64> {
    if xs.len() != ys.len() {
        return Err(Error::Config("x and y lengths differ".into()));
    }
    if xs.len() < 2 {
        return Err(Error::InsufficientData(format!(
            "slope needs at least 2 points, got {}",
            xs.len()
        )));
    }
    let mx = mean(xs);
    let my = mean(ys);
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    if sxx == 0.0 {
        return Err(Error::InsufficientData(
            "slope needs at least two distinct x values".into(),
        ));
    }
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    Ok(sxy / sxx)
}

/// Least-squares slope of `values` against turn index `1..=n`.
pub fn ols_slope(values: &[f64]) -> Result<f64> {
    let xs: Vec<f64> = (1..=values.len()).map(|t| t as f64).collect();
    ols_slope_xy(&xs, values)
}

fn sorted(records: &[InteractionRecord]) -> Vec<&InteractionRecord> {
    let mut v: Vec<&InteractionRecord> = records.iter().collect();
    v.sort_by_key(|r| (r.student_id, r.turn));
    v
}

/// Records grouped by student, each group turn-ascending.
pub fn by_student(records: &[InteractionRecord]) -> BTreeMap<u32, Vec<&InteractionRecord>> {
    let mut out: BTreeMap<u32, Vec<&InteractionRecord>> = BTreeMap::new();
    for r in sorted(records) {
        out.entry(r.student_id).or_default().push(r);
    }
    out
}

fn nonempty(records: &[InteractionRecord]) -> Result<()> {
    if records.is_empty() {
        Err(Error::InsufficientData("interaction log is empty".into()))
    } else {
        Ok(())
    }
}

/// Column extractors shared by the feature builders.
fn col(rows: &[&InteractionRecord], f: impl Fn(&InteractionRecord) -> f64) -> Vec<f64> {
    rows.iter().map(|r| f(r)).collect()
}

fn rt(r: &InteractionRecord) -> f64 {
    r.raw.response_time
}
fn attempts(r: &InteractionRecord) -> f64 {
    f64::from(r.raw.attempts)
}
fn hint(r: &InteractionRecord) -> f64 {
    r.hint()
}
fn correctness(r: &InteractionRecord) -> f64 {
    r.outcomes.correctness
}
fn trust(r: &InteractionRecord) -> f64 {
    r.outcomes.trust
}
fn turn_x(r: &InteractionRecord) -> f64 {
    f64::from(r.turn)
}

pub fn turn_aggregates(records: &[InteractionRecord]) -> Result<Vec<TurnAggregate>> {
    nonempty(records)?;
    let mut by_turn: BTreeMap<u32, Vec<&InteractionRecord>> = BTreeMap::new();
    for r in sorted(records) {
        by_turn.entry(r.turn).or_default().push(r);
    }
    Ok(by_turn
        .into_iter()
        .map(|(turn, rows)| TurnAggregate {
            turn,
            mean_rt: mean(&col(&rows, rt)),
            hint_rate: mean(&col(&rows, hint)),
            mean_attempts: mean(&col(&rows, attempts)),
            correctness_rate: mean(&col(&rows, correctness)),
            mean_trust: mean(&col(&rows, trust)),
            n: rows.len(),
        })
        .collect())
}

/// Feature names of [`EarlyFeatures::vector`], in order.
pub const EARLY_FEATURE_NAMES: [&str; 10] = [
    "prior_knowledge",
    "programming_experience",
    "motivation",
    "early_mean_rt",
    "early_mean_attempts",
    "early_hint_rate",
    "early_correctness_rate",
    "early_mean_trust",
    "early_rt_slope",
    "early_hint_slope",
];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EarlyFeatures {
    pub student_id: u32,
    pub pk: f64,
    pub pe: f64,
    pub m: f64,
    pub mean_rt: f64,
    pub mean_attempts: f64,
    pub hint_rate: f64,
    pub correctness_rate: f64,
    pub mean_trust: f64,
    pub rt_slope: f64,
    pub hint_slope: f64,
}

impl EarlyFeatures {
    pub fn vector(&self) -> Vec<f64> {
        vec![
            self.pk,
            self.pe,
            self.m,
            self.mean_rt,
            self.mean_attempts,
            self.hint_rate,
            self.correctness_rate,
            self.mean_trust,
            self.rt_slope,
            self.hint_slope,
        ]
    }
}

fn window_slope(rows: &[&InteractionRecord], f: fn(&InteractionRecord) -> f64) -> Result<f64> {
    if rows.len() < 2 {
        return Ok(0.0);
    }
    ols_slope_xy(&col(rows, turn_x), &col(rows, f))
}

/// Early-window features from turns `1..=k`. A window of one turn has zero slopes.
pub fn early_features(records: &[InteractionRecord], k: u32) -> Result<Vec<EarlyFeatures>> {
    nonempty(records)?;
    if k < 1 {
        return Err(Error::Config("early window must be >= 1 turn".into()));
    }
    let groups = by_student(records);
    let short: Vec<u32> = groups
        .iter()
        .filter(|(_, rows)| rows.iter().filter(|r| r.turn <= k).count() < k as usize)
        .map(|(&id, _)| id)
        .collect();
    if !short.is_empty() {
        return Err(Error::Data(format!(
            "students with fewer than {k} early turns: {short:?}"
        )));
    }
    groups
        .into_iter()
        .map(|(id, rows)| {
            let w: Vec<&InteractionRecord> = rows.into_iter().filter(|r| r.turn <= k).collect();
            Ok(EarlyFeatures {
                student_id: id,
                pk: w[0].raw.prior_knowledge,
                pe: w[0].raw.programming_experience,
                m: w[0].raw.motivation,
                mean_rt: mean(&col(&w, rt)),
                mean_attempts: mean(&col(&w, attempts)),
                hint_rate: mean(&col(&w, hint)),
                correctness_rate: mean(&col(&w, correctness)),
                mean_trust: mean(&col(&w, trust)),
                rt_slope: window_slope(&w, rt)?,
                hint_slope: window_slope(&w, hint)?,
            })
        })
        .collect()
}

/// Five behavioural series in a fixed order: rt, attempts, hint, correctness, trust.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Behaviour {
    pub rt: f64,
    pub attempts: f64,
    pub hint: f64,
    pub correctness: f64,
    pub trust: f64,
}

const BEHAVIOUR: [(&str, fn(&InteractionRecord) -> f64); 5] = [
    ("rt", rt),
    ("attempts", attempts),
    ("hint", hint),
    ("correctness", correctness),
    ("trust", trust),
];

impl Behaviour {
    fn from_fn(mut f: impl FnMut(fn(&InteractionRecord) -> f64) -> Result<f64>) -> Result<Self> {
        Ok(Self {
            rt: f(rt)?,
            attempts: f(attempts)?,
            hint: f(hint)?,
            correctness: f(correctness)?,
            trust: f(trust)?,
        })
    }

    pub fn values(&self) -> [f64; 5] {
        [
            self.rt,
            self.attempts,
            self.hint,
            self.correctness,
            self.trust,
        ]
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TemporalFeatures {
    pub student_id: u32,
    pub pk: f64,
    pub pe: f64,
    pub m: f64,
    pub early: Behaviour,
    pub slope: Behaviour,
    /// Late-window mean minus early-window mean.
    pub delta: Behaviour,
    pub trust_variability: f64,
}

pub fn temporal_feature_names() -> Vec<String> {
    let mut names = vec![
        "prior_knowledge".to_string(),
        "programming_experience".into(),
        "motivation".into(),
    ];
    for prefix in ["early_mean", "slope", "delta"] {
        names.extend(BEHAVIOUR.iter().map(|(n, _)| format!("{prefix}_{n}")));
    }
    names.push("trust_variability".into());
    names
}

impl TemporalFeatures {
    pub fn vector(&self) -> Vec<f64> {
        let mut v = vec![self.pk, self.pe, self.m];
        v.extend(self.early.values());
        v.extend(self.slope.values());
        v.extend(self.delta.values());
        v.push(self.trust_variability);
        v
    }
}

/// Early means over the first `k` turns, slopes over all turns, late-minus-early
/// deltas with the last `k` turns as the late window, and trust variability.
pub fn temporal_features(records: &[InteractionRecord], k: u32) -> Result<Vec<TemporalFeatures>> {
    nonempty(records)?;
    if k < 1 {
        return Err(Error::Config("window must be >= 1 turn".into()));
    }
    let k = k as usize;
    let groups = by_student(records);
    let short: Vec<u32> = groups
        .iter()
        .filter(|(_, r)| r.len() < 2 * k)
        .map(|(&id, _)| id)
        .collect();
    if !short.is_empty() {
        return Err(Error::Data(format!(
            "students with fewer than {} turns: {short:?}",
            2 * k
        )));
    }
    groups
        .into_iter()
        .map(|(id, rows)| {
            let early = &rows[..k];
            let late = &rows[rows.len() - k..];
            let early_means = Behaviour::from_fn(|f| Ok(mean(&col(early, f))))?;
            let late_means = Behaviour::from_fn(|f| Ok(mean(&col(late, f))))?;
            let slope = Behaviour::from_fn(|f| ols_slope_xy(&col(&rows, turn_x), &col(&rows, f)))?;
            let e = early_means.values();
            let l = late_means.values();
            let delta = Behaviour {
                rt: l[0] - e[0],
                attempts: l[1] - e[1],
                hint: l[2] - e[2],
                correctness: l[3] - e[3],
                trust: l[4] - e[4],
            };
            Ok(TemporalFeatures {
                student_id: id,
                pk: rows[0].raw.prior_knowledge,
                pe: rows[0].raw.programming_experience,
                m: rows[0].raw.motivation,
                early: early_means,
                slope,
                delta,
                trust_variability: sample_sd(&col(&rows, trust)),
            })
        })
        .collect()
}

pub const STUDENT_FEATURE_NAMES: [&str; 16] = [
    "prior_knowledge",
    "programming_experience",
    "motivation",
    "mean_rt",
    "mean_attempts",
    "hint_rate",
    "correctness_rate",
    "mean_trust",
    "mean_satisfaction",
    "mean_reward",
    "mean_improvement",
    "slope_rt",
    "slope_attempts",
    "slope_hint",
    "slope_correctness",
    "slope_trust",
];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StudentAggregate {
    pub student_id: u32,
    pub n_turns: usize,
    pub pk: f64,
    pub pe: f64,
    pub m: f64,
    pub mean_rt: f64,
    pub mean_attempts: f64,
    pub hint_rate: f64,
    pub correctness_rate: f64,
    pub mean_trust: f64,
    pub mean_satisfaction: f64,
    pub mean_reward: f64,
    pub mean_improvement: f64,
    pub slope: Behaviour,
    /// False when the student has a single turn and slopes were set to 0.
    pub slopes_defined: bool,
}

impl StudentAggregate {
    pub fn vector(&self) -> Vec<f64> {
        let mut v = vec![
            self.pk,
            self.pe,
            self.m,
            self.mean_rt,
            self.mean_attempts,
            self.hint_rate,
            self.correctness_rate,
            self.mean_trust,
            self.mean_satisfaction,
            self.mean_reward,
            self.mean_improvement,
        ];
        v.extend(self.slope.values());
        v
    }
}

pub fn student_aggregates(records: &[InteractionRecord]) -> Result<Vec<StudentAggregate>> {
    nonempty(records)?;
    by_student(records)
        .into_iter()
        .map(|(id, rows)| {
            let slopes_defined = rows.len() >= 2;
            let slope = if slopes_defined {
                Behaviour::from_fn(|f| ols_slope_xy(&col(&rows, turn_x), &col(&rows, f)))?
            } else {
                Behaviour {
                    rt: 0.0,
                    attempts: 0.0,
                    hint: 0.0,
                    correctness: 0.0,
                    trust: 0.0,
                }
            };
            Ok(StudentAggregate {
                student_id: id,
                n_turns: rows.len(),
                pk: rows[0].raw.prior_knowledge,
                pe: rows[0].raw.programming_experience,
                m: rows[0].raw.motivation,
                mean_rt: mean(&col(&rows, rt)),
                mean_attempts: mean(&col(&rows, attempts)),
                hint_rate: mean(&col(&rows, hint)),
                correctness_rate: mean(&col(&rows, correctness)),
                mean_trust: mean(&col(&rows, trust)),
                mean_satisfaction: mean(&col(&rows, |r| r.outcomes.satisfaction)),
                mean_reward: mean(&col(&rows, |r| r.reward)),
                mean_improvement: mean(&col(&rows, |r| r.outcomes.improvement)),
                slope,
                slopes_defined,
            })
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ActionResponse {
    pub action: Action,
    pub count: usize,
    pub mean_reward: f64,
    /// Mean reward under this action minus the student's overall mean reward.
    pub score: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StudentResponsiveness {
    pub student_id: u32,
    pub overall_mean_reward: f64,
    /// Only actions the student actually received, in canonical order.
    pub per_action: Vec<ActionResponse>,
    pub best_feedback: Action,
    pub best_score: f64,
}

impl StudentResponsiveness {
    pub fn score(&self, action: Action) -> Option<f64> {
        self.per_action
            .iter()
            .find(|a| a.action == action)
            .map(|a| a.score)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResponsivenessMatrix {
    pub students: Vec<StudentResponsiveness>,
}

pub fn responsiveness(records: &[InteractionRecord]) -> Result<ResponsivenessMatrix> {
    nonempty(records)?;
    let students = by_student(records)
        .into_iter()
        .map(|(id, rows)| {
            let overall = mean(&col(&rows, |r| r.reward));
            let mut per_action = Vec::new();
            for a in Action::ALL {
                let rewards: Vec<f64> = rows
                    .iter()
                    .filter(|r| r.action == a)
                    .map(|r| r.reward)
                    .collect();
                if rewards.is_empty() {
                    continue;
                }
                let m = mean(&rewards);
                per_action.push(ActionResponse {
                    action: a,
                    count: rewards.len(),
                    mean_reward: m,
                    score: m - overall,
                });
            }
            // strict comparison keeps the earliest canonical action on ties
            let best = per_action
                .iter()
                .fold(None::<&ActionResponse>, |best, a| match best {
                    Some(b) if b.score >= a.score => Some(b),
                    _ => Some(a),
                })
                .expect("every student has at least one record");
            StudentResponsiveness {
                student_id: id,
                overall_mean_reward: overall,
                best_feedback: best.action,
                best_score: best.score,
                per_action,
            }
        })
        .collect();
    Ok(ResponsivenessMatrix { students })
}

/// Alternative responsiveness: `delta_correctness + lambda * delta_trust`.
pub fn responsiveness_alt(delta_correctness: f64, delta_trust: f64, lambda: f64) -> Result<f64> {
    if !(lambda >= 0.0) {
        return Err(Error::Config(format!("lambda must be >= 0, got {lambda}")));
    }
    Ok(delta_correctness + lambda * delta_trust)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QuestionTypeRt {
    pub question_type: QuestionType,
    pub turn: u32,
    pub mean_rt: f64,
    pub n: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlotData {
    /// Per-turn averages of rt, hints, attempts, correctness and trust.
    pub turn_series: Vec<TurnAggregate>,
    /// Mean rt per (question type, turn) cell that has records.
    pub question_type_rt: Vec<QuestionTypeRt>,
    /// Raw (turn, rt) samples for ridgeline binning.
    pub rt_samples: Vec<(u32, f64)>,
    /// (rt, trust, turn) triples for the phase map.
    pub phase_points: Vec<(f64, f64, u32)>,
}

pub fn question_type_rt(records: &[InteractionRecord]) -> Result<Vec<QuestionTypeRt>> {
    nonempty(records)?;
    let mut cells: BTreeMap<(QuestionType, u32), Vec<f64>> = BTreeMap::new();
    for r in sorted(records) {
        cells
            .entry((r.raw.question_type, r.turn))
            .or_default()
            .push(r.raw.response_time);
    }
    Ok(cells
        .into_iter()
        .map(|((question_type, turn), v)| QuestionTypeRt {
            question_type,
            turn,
            mean_rt: mean(&v),
            n: v.len(),
        })
        .collect())
}

pub fn export_plotdata(records: &[InteractionRecord]) -> Result<PlotData> {
    nonempty(records)?;
    let rows = sorted(records);
    Ok(PlotData {
        turn_series: turn_aggregates(records)?,
        question_type_rt: question_type_rt(records)?,
        rt_samples: rows.iter().map(|r| (r.turn, r.raw.response_time)).collect(),
        phase_points: rows
            .iter()
            .map(|r| (r.raw.response_time, r.outcomes.trust, r.turn))
            .collect(),
    })
}

#[cfg(test)]
pub(crate) mod tests {
    use super::*;
    use crate::cohortsim::compute_reward;
    use crate::domain::{LearnerStateRaw, OutcomeVector};

    pub(crate) struct Rec {
        pub student: u32,
        pub turn: u32,
        pub rt: f64,
        pub hint: bool,
        pub correct: bool,
        pub trust: f64,
        pub action: Action,
    }

    impl Default for Rec {
        fn default() -> Self {
            Self {
                student: 1,
                turn: 1,
                rt: 20.0,
                hint: false,
                correct: false,
                trust: 0.5,
                action: Action::Example,
            }
        }
    }

    pub(crate) fn record(r: Rec) -> InteractionRecord {
        let raw = LearnerStateRaw::new(
            0.4,
            0.5,
            0.6,
            0.5,
            r.rt,
            1,
            r.hint,
            r.turn,
            QuestionType::Concept,
        )
        .unwrap();
        let outcomes = OutcomeVector {
            correctness: if r.correct { 1.0 } else { 0.0 },
            quiz_score: 0.5,
            completion: 0.5,
            improvement: 0.1,
            usefulness: 0.5,
            satisfaction: 0.5,
            trust: r.trust,
        };
        InteractionRecord {
            student_id: r.student,
            turn: r.turn,
            raw,
            action: r.action,
            response_text: String::new(),
            reward: compute_reward(&outcomes),
            outcomes,
        }
    }

    fn with_reward(mut rec: InteractionRecord, reward: f64) -> InteractionRecord {
        rec.reward = reward;
        rec
    }

    #[test]
    fn turn_means_by_hand() {
        let recs = vec![
            record(Rec {
                student: 1,
                rt: 10.0,
                hint: false,
                ..Default::default()
            }),
            record(Rec {
                student: 2,
                rt: 20.0,
                hint: true,
                ..Default::default()
            }),
            record(Rec {
                student: 3,
                rt: 20.0,
                hint: true,
                ..Default::default()
            }),
            record(Rec {
                student: 4,
                rt: 30.0,
                hint: true,
                ..Default::default()
            }),
        ];
        let agg = turn_aggregates(&recs[..2]).unwrap();
        assert_eq!(agg[0].mean_rt, 15.0);
        let agg = turn_aggregates(&recs).unwrap();
        assert_eq!(agg[0].hint_rate, 0.75);
        assert_eq!(agg[0].n, 4);

        let single = turn_aggregates(&recs[..1]).unwrap();
        assert_eq!(single[0].mean_rt, 10.0);
        assert_eq!(single[0].mean_trust, 0.5);
        assert!(turn_aggregates(&[]).is_err());
    }

    #[test]
    fn slope_cases() {
        assert!((ols_slope(&[2.0, 4.0, 6.0]).unwrap() - 2.0).abs() < 1e-15);
        assert_eq!(ols_slope(&[3.0; 5]).unwrap(), 0.0);
        assert!(matches!(ols_slope(&[1.0]), Err(Error::InsufficientData(_))));
    }

    fn student_series(hints: &[bool], rts: &[f64], trusts: &[f64]) -> Vec<InteractionRecord> {
        hints
            .iter()
            .zip(rts)
            .zip(trusts)
            .enumerate()
            .map(|(i, ((&h, &rt), &t))| {
                record(Rec {
                    turn: i as u32 + 1,
                    hint: h,
                    rt,
                    trust: t,
                    ..Default::default()
                })
            })
            .collect()
    }

    #[test]
    fn early_window_by_hand() {
        let recs = student_series(&[true, false, false, true], &[12.0; 4], &[0.5; 4]);
        let f = &early_features(&recs, 3).unwrap()[0];
        assert!((f.hint_rate - 1.0 / 3.0).abs() < 1e-15);
        assert!((f.hint_slope + 0.5).abs() < 1e-15);
        assert_eq!(f.rt_slope, 0.0);
        assert!(matches!(early_features(&recs[..2], 3), Err(Error::Data(_))));
    }

    #[test]
    fn full_window_early_means_equal_student_means() {
        let recs = student_series(
            &[true, false, true, false, false, false],
            &[30.0, 25.0, 27.0, 20.0, 14.0, 11.0],
            &[0.4, 0.45, 0.5, 0.5, 0.6, 0.62],
        );
        let e = &early_features(&recs, 6).unwrap()[0];
        let s = &student_aggregates(&recs).unwrap()[0];
        assert_eq!(e.mean_rt, s.mean_rt);
        assert_eq!(e.hint_rate, s.hint_rate);
        assert_eq!(e.mean_trust, s.mean_trust);
        assert_eq!(e.correctness_rate, s.correctness_rate);
        assert_eq!(e.rt_slope, s.slope.rt);
    }

    #[test]
    fn temporal_delta_and_variability() {
        let trusts = [0.5, 0.5, 0.5, 0.7, 0.7, 0.7, 0.7, 0.7];
        let recs = student_series(&[false; 8], &[20.0; 8], &trusts);
        let f = &temporal_features(&recs, 3).unwrap()[0];
        assert!((f.delta.trust - 0.2).abs() < 1e-12);
        assert_eq!(f.delta.rt, 0.0);
        assert_eq!(f.vector().len(), temporal_feature_names().len());

        let flat = student_series(
            &[true, false, true, true, false, true],
            &[9.0; 6],
            &[0.3; 6],
        );
        let f = &temporal_features(&flat, 3).unwrap()[0];
        assert_eq!(f.delta.values(), [0.0; 5]);
        assert_eq!(f.trust_variability, 0.0);
        assert!(matches!(
            temporal_features(&flat[..5], 3),
            Err(Error::Data(_))
        ));
    }

    #[test]
    fn student_aggregate_cases() {
        let mut recs = vec![
            with_reward(
                record(Rec {
                    student: 1,
                    turn: 1,
                    ..Default::default()
                }),
                0.2,
            ),
            with_reward(
                record(Rec {
                    student: 1,
                    turn: 2,
                    ..Default::default()
                }),
                0.4,
            ),
        ];
        let s = student_aggregates(&recs).unwrap();
        assert!((s[0].mean_reward - 0.3).abs() < 1e-15);
        recs.push(record(Rec {
            student: 9,
            turn: 1,
            ..Default::default()
        }));
        let s = student_aggregates(&recs).unwrap();
        assert_eq!(s.len(), 2);
        assert!(!s[1].slopes_defined);
        assert_eq!(s[1].slope.values(), [0.0; 5]);
        assert_eq!(s[0].vector().len(), STUDENT_FEATURE_NAMES.len());
    }

    #[test]
    fn responsiveness_by_hand() {
        let recs = vec![
            with_reward(
                record(Rec {
                    turn: 1,
                    action: Action::Hint,
                    ..Default::default()
                }),
                0.8,
            ),
            with_reward(
                record(Rec {
                    turn: 2,
                    action: Action::Hint,
                    ..Default::default()
                }),
                0.6,
            ),
            with_reward(
                record(Rec {
                    turn: 3,
                    action: Action::Example,
                    ..Default::default()
                }),
                0.4,
            ),
        ];
        let m = responsiveness(&recs).unwrap();
        let s = &m.students[0];
        assert!((s.overall_mean_reward - 0.6).abs() < 1e-12);
        assert!((s.score(Action::Hint).unwrap() - 0.1).abs() < 1e-12);
        assert!((s.score(Action::Example).unwrap() + 0.2).abs() < 1e-12);
        assert_eq!(s.score(Action::Answer), None);
        assert_eq!(s.best_feedback, Action::Hint);

        let single = responsiveness(&recs[..2]).unwrap();
        assert!(single.students[0].best_score.abs() < 1e-12);
        assert_eq!(single.students[0].best_feedback, Action::Hint);
    }

    #[test]
    fn responsiveness_ties_use_canonical_order() {
        let recs = vec![
            with_reward(
                record(Rec {
                    turn: 1,
                    action: Action::CodeSnippet,
                    ..Default::default()
                }),
                0.5,
            ),
            with_reward(
                record(Rec {
                    turn: 2,
                    action: Action::Answer,
                    ..Default::default()
                }),
                0.5,
            ),
        ];
        assert_eq!(
            responsiveness(&recs).unwrap().students[0].best_feedback,
            Action::Answer
        );
    }

    #[test]
    fn alt_responsiveness() {
        assert!((responsiveness_alt(0.2, 0.1, 0.5).unwrap() - 0.25).abs() < 1e-15);
        assert_eq!(responsiveness_alt(0.3, 0.9, 0.0).unwrap(), 0.3);
        assert_eq!(responsiveness_alt(0.0, 0.0, 0.5).unwrap(), 0.0);
        assert!(responsiveness_alt(0.0, 0.0, -1.0).is_err());
    }

    #[test]
    fn aggregates_ignore_record_order() {
        let mut recs = Vec::new();
        for s in 1..=3 {
            for t in 1..=6 {
                recs.push(with_reward(
                    record(Rec {
                        student: s,
                        turn: t,
                        rt: f64::from(s * 7 + t * 3 % 5) + 0.123,
                        hint: (s + t) % 3 == 0,
                        correct: (s * t) % 2 == 0,
                        trust: 0.3 + 0.05 * f64::from(t) + 0.01 * f64::from(s),
                        action: Action::ALL[((s + t) % 6) as usize],
                    }),
                    0.1 * f64::from((s * t) % 7),
                ));
            }
        }
        let mut shuffled = recs.clone();
        shuffled.reverse();
        shuffled.swap(0, 7);
        assert_eq!(
            turn_aggregates(&recs).unwrap(),
            turn_aggregates(&shuffled).unwrap()
        );
        assert_eq!(
            student_aggregates(&recs).unwrap(),
            student_aggregates(&shuffled).unwrap()
        );
        assert_eq!(
            temporal_features(&recs, 3).unwrap(),
            temporal_features(&shuffled, 3).unwrap()
        );
        assert_eq!(
            responsiveness(&recs).unwrap(),
            responsiveness(&shuffled).unwrap()
        );

        let plot = export_plotdata(&recs).unwrap();
        assert_eq!(plot.turn_series.len(), 6);
        assert_eq!(plot.rt_samples.len(), recs.len());
        assert!(plot.question_type_rt.len() <= 6 * 6);
        assert!(export_plotdata(&[]).is_err());
    }
}
