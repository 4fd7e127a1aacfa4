//! Warm-start data: synthetic learner states with Bernoulli correctness,
//! bounded-Gaussian performance outcomes and rule-based action labels.

use rand::Rng;
use rand_distr::{Distribution, Exp, Normal};
use serde::{Deserialize, Serialize};

use crate::domain::{Action, LearnerStateRaw, QuestionType};
use crate::error::{Error, Result};
use crate::rng::{self, SimRng};

pub const P_CORRECT_MIN: f64 = 0.05;
pub const P_CORRECT_MAX: f64 = 0.95;

/// Probability of a correct response:
/// `clip(0.55 + 0.25 pk + 0.10 pe + 0.05 m - 0.20 d - 0.10 (a - 1) - 0.05 h, 0.05, 0.95)`.
pub fn correct_prob(pk: f64, pe: f64, m: f64, d: f64, attempts: u8, hint: bool) -> f64 {
    let h = if hint { 1.0 } else { 0.0 };
    let p = 0.55 + 0.25 * pk + 0.10 * pe + 0.05 * m
        - 0.20 * d
        - 0.10 * (f64::from(attempts) - 1.0)
        - 0.05 * h;
    p.clamp(P_CORRECT_MIN, P_CORRECT_MAX)
}

/// Rule-based tutoring action. Rules are checked in order; the first match wins.
pub fn heuristic_label(raw: &LearnerStateRaw, correct: bool) -> Action {
    if raw.attempts >= 3 && !correct {
        Action::Answer
    } else if raw.hint_requested && !correct {
        Action::Hint
    } else if raw.question_type == QuestionType::Debug {
        Action::CodeSnippet
    } else if raw.question_type == QuestionType::Analysis {
        Action::Explanation
    } else if raw.response_time < 10.0 && !correct {
        Action::QuizTip
    } else {
        Action::Example
    }
}

/// Draws `Normal(mean, sd)` and clips it to `[lo, hi]`.
pub fn bounded_gaussian(mean: f64, sd: f64, lo: f64, hi: f64, rng: &mut SimRng) -> Result<f64> {
    if !(sd > 0.0 && sd.is_finite()) {
        return Err(Error::Config(format!(
            "bounded gaussian needs sd > 0, got {sd}"
        )));
    }
    if !(lo < hi) {
        return Err(Error::Config(format!(
            "bounded gaussian needs lo < hi, got [{lo}, {hi}]"
        )));
    }
    let normal = Normal::new(mean, sd).map_err(|e| Error::Config(e.to_string()))?;
    Ok(normal.sample(rng).clamp(lo, hi))
}

/// A bounded Gaussian whose mean is `base + p_weight * p_correct`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OutcomeGaussian {
    pub base: f64,
    pub p_weight: f64,
    pub sd: f64,
    pub lo: f64,
    pub hi: f64,
}

impl OutcomeGaussian {
    fn draw(&self, p_correct: f64, rng: &mut SimRng) -> Result<f64> {
        bounded_gaussian(
            self.base + self.p_weight * p_correct,
            self.sd,
            self.lo,
            self.hi,
            rng,
        )
    }

    fn validate(&self, name: &str) -> Result<()> {
        if !(self.sd > 0.0) || !(self.lo < self.hi) {
            return Err(Error::Config(format!("invalid {name} gaussian: {self:?}")));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GaussianParams {
    pub quiz_score: OutcomeGaussian,
    pub completion: OutcomeGaussian,
    pub improvement: OutcomeGaussian,
}

impl Default for GaussianParams {
    fn default() -> Self {
        Self {
            quiz_score: OutcomeGaussian {
                base: 0.4,
                p_weight: 0.4,
                sd: 0.12,
                lo: 0.0,
                hi: 1.0,
            },
            completion: OutcomeGaussian {
                base: 0.6,
                p_weight: 0.0,
                sd: 0.15,
                lo: 0.0,
                hi: 1.0,
            },
            improvement: OutcomeGaussian {
                base: 0.3,
                p_weight: 0.2,
                sd: 0.1,
                lo: 0.0,
                hi: 1.0,
            },
        }
    }
}

/// Covariate distributions for warm-start states.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CovariateSampling {
    pub difficulty_lo: f64,
    pub difficulty_hi: f64,
    /// rt = offset + Exp(mean), capped.
    pub rt_offset: f64,
    pub rt_exp_mean: f64,
    pub rt_cap: f64,
    pub hint_rate: f64,
    pub max_turn: u32,
}

impl Default for CovariateSampling {
    fn default() -> Self {
        Self {
            difficulty_lo: 0.1,
            difficulty_hi: 0.95,
            rt_offset: 5.0,
            rt_exp_mean: 20.0,
            rt_cap: 120.0,
            hint_rate: 0.35,
            max_turn: 9,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WarmStartConfig {
    pub n: usize,
    pub seed: u64,
    pub gaussian_params: GaussianParams,
    pub covariates: CovariateSampling,
}

impl Default for WarmStartConfig {
    fn default() -> Self {
        Self {
            n: 2500,
            seed: 42,
            gaussian_params: GaussianParams::default(),
            covariates: CovariateSampling::default(),
        }
    }
}

impl WarmStartConfig {
    pub fn validate(&self) -> Result<()> {
        let g = &self.gaussian_params;
        g.quiz_score.validate("quiz_score")?;
        g.completion.validate("completion")?;
        g.improvement.validate("improvement")?;
        let c = &self.covariates;
        if !(0.0 <= c.difficulty_lo && c.difficulty_lo < c.difficulty_hi && c.difficulty_hi <= 1.0)
        {
            return Err(Error::Config(
                "difficulty range must satisfy 0 <= lo < hi <= 1".into(),
            ));
        }
        if !(c.rt_offset >= 1.0 && c.rt_exp_mean > 0.0 && c.rt_cap >= c.rt_offset) {
            return Err(Error::Config(
                "response-time sampling needs offset >= 1, mean > 0, cap >= offset".into(),
            ));
        }
        if !(0.0..=1.0).contains(&c.hint_rate) {
            return Err(Error::Config("hint_rate must lie in [0, 1]".into()));
        }
        if c.max_turn < 1 {
            return Err(Error::Config("max_turn must be >= 1".into()));
        }
        Ok(())
    }
}

/// The four performance outcomes the warm-start set carries. Perceived
/// usefulness, satisfaction and trust only exist once the tutor is deployed.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PerformanceOutcomes {
    pub correct: bool,
    pub quiz_score: f64,
    pub completion: f64,
    pub improvement: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WarmStartRecord {
    pub raw: LearnerStateRaw,
    pub outcomes: PerformanceOutcomes,
    pub label: Action,
    pub p_correct: f64,
}

fn sample_record(cfg: &WarmStartConfig, rng: &mut SimRng) -> Result<WarmStartRecord> {
    let c = &cfg.covariates;
    let pk: f64 = rng.random();
    let pe: f64 = rng.random();
    let m: f64 = rng.random();
    let d = rng.random_range(c.difficulty_lo..c.difficulty_hi);
    let exp = Exp::new(1.0 / c.rt_exp_mean).map_err(|e| Error::Config(e.to_string()))?;
    let rt = (c.rt_offset + exp.sample(rng)).min(c.rt_cap);
    let attempts: u8 = rng.random_range(1..=3);
    let hint = rng.random_bool(c.hint_rate);
    let turn = rng.random_range(1..=c.max_turn);
    let qt = QuestionType::ALL[rng.random_range(0..QuestionType::COUNT)];
    let raw = LearnerStateRaw::new(pk, pe, m, d, rt, attempts, hint, turn, qt)?;

    let p = correct_prob(pk, pe, m, d, attempts, hint);
    let correct = rng.random_bool(p);
    let g = &cfg.gaussian_params;
    let outcomes = PerformanceOutcomes {
        correct,
        quiz_score: g.quiz_score.draw(p, rng)?,
        completion: g.completion.draw(p, rng)?,
        improvement: g.improvement.draw(p, rng)?,
    };
    Ok(WarmStartRecord {
        raw,
        outcomes,
        label: heuristic_label(&raw, correct),
        p_correct: p,
    })
}

/// Generates `cfg.n` labeled warm-start records from a single seeded stream.
pub fn gen_warm_start(cfg: &WarmStartConfig) -> Result<Vec<WarmStartRecord>> {
    cfg.validate()?;
    let mut rng = rng::stream(cfg.seed, rng::TAG_WARM_START, 0);
    (0..cfg.n).map(|_| sample_record(cfg, &mut rng)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::SeedableRng;

    fn state(attempts: u8, hint: bool, qt: QuestionType, rt: f64) -> LearnerStateRaw {
        LearnerStateRaw::new(0.5, 0.5, 0.5, 0.5, rt, attempts, hint, 1, qt).unwrap()
    }

    #[test]
    fn correct_prob_table() {
        assert!((correct_prob(0.0, 0.0, 0.0, 0.0, 1, false) - 0.55).abs() < 1e-12);
        assert!((correct_prob(1.0, 1.0, 1.0, 0.0, 1, false) - 0.95).abs() < 1e-12);
        assert!((correct_prob(0.0, 0.0, 0.0, 1.0, 3, true) - 0.10).abs() < 1e-12);
    }

    #[test]
    fn heuristic_rules_in_priority_order() {
        assert_eq!(
            heuristic_label(&state(3, false, QuestionType::Debug, 50.0), false),
            Action::Answer
        );
        assert_eq!(
            heuristic_label(&state(1, true, QuestionType::Concept, 50.0), false),
            Action::Hint
        );
        assert_eq!(
            heuristic_label(&state(1, false, QuestionType::Application, 50.0), true),
            Action::Example
        );
        assert_eq!(
            heuristic_label(&state(1, false, QuestionType::Concept, 5.0), false),
            Action::QuizTip
        );
        assert_eq!(
            heuristic_label(&state(3, true, QuestionType::Debug, 5.0), true),
            Action::CodeSnippet
        );
        assert_eq!(
            heuristic_label(&state(1, false, QuestionType::Analysis, 5.0), false),
            Action::Explanation
        );
        // rt threshold is strict
        assert_eq!(
            heuristic_label(&state(1, false, QuestionType::Concept, 10.0), false),
            Action::Example
        );
    }

    #[test]
    fn bounded_gaussian_behaviour() {
        let mut rng = SimRng::seed_from_u64(1);
        let v = bounded_gaussian(0.5, 1e-300, 0.0, 1.0, &mut rng).unwrap();
        assert!((v - 0.5).abs() < 1e-12);
        for _ in 0..1000 {
            assert!(bounded_gaussian(2.0, 0.1, 0.0, 1.0, &mut rng).unwrap() <= 1.0);
        }
        let n = 10_000;
        let mean = (0..n)
            .map(|_| bounded_gaussian(0.5, 0.1, 0.0, 1.0, &mut rng).unwrap())
            .sum::<f64>()
            / n as f64;
        assert!((mean - 0.5).abs() < 0.01, "{mean}");
        assert!(matches!(
            bounded_gaussian(0.5, 0.0, 0.0, 1.0, &mut rng),
            Err(Error::Config(_))
        ));
        assert!(matches!(
            bounded_gaussian(0.5, 0.1, 1.0, 1.0, &mut rng),
            Err(Error::Config(_))
        ));
    }

    #[test]
    fn empty_and_deterministic_generation() {
        let empty = gen_warm_start(&WarmStartConfig {
            n: 0,
            ..Default::default()
        })
        .unwrap();
        assert!(empty.is_empty());
        let cfg = WarmStartConfig {
            n: 200,
            ..Default::default()
        };
        assert_eq!(gen_warm_start(&cfg).unwrap(), gen_warm_start(&cfg).unwrap());
        let other = WarmStartConfig { seed: 7, ..cfg };
        assert_ne!(
            gen_warm_start(&cfg).unwrap(),
            gen_warm_start(&other).unwrap()
        );
    }

    #[test]
    fn default_set_properties() {
        let recs = gen_warm_start(&WarmStartConfig::default()).unwrap();
        assert_eq!(recs.len(), 2500);
        let mean_p = recs.iter().map(|r| r.p_correct).sum::<f64>() / 2500.0;
        let rate = recs.iter().filter(|r| r.outcomes.correct).count() as f64 / 2500.0;
        assert!(
            (rate - mean_p).abs() < 0.03,
            "rate {rate} vs mean p {mean_p}"
        );

        let mut seen = [0usize; Action::COUNT];
        for r in &recs {
            assert!((P_CORRECT_MIN..=P_CORRECT_MAX).contains(&r.p_correct));
            assert_eq!(r.label, heuristic_label(&r.raw, r.outcomes.correct));
            seen[r.label.index()] += 1;
            r.raw.validate().unwrap();
        }
        assert!(seen.iter().filter(|&&c| c > 0).count() >= 5, "{seen:?}");
    }

    fn fraction() -> impl Strategy<Value = f64> {
        0.0..=1.0f64
    }

    proptest! {
        #[test]
        fn correct_prob_is_monotone(pk in fraction(), pe in fraction(), m in fraction(), d in fraction(),
                                    a in 1u8..=3, h in any::<bool>(), eps in 0.0..0.2f64) {
            let base = correct_prob(pk, pe, m, d, a, h);
            prop_assert!(correct_prob((pk + eps).min(1.0), pe, m, d, a, h) >= base);
            prop_assert!(correct_prob(pk, (pe + eps).min(1.0), m, d, a, h) >= base);
            prop_assert!(correct_prob(pk, pe, (m + eps).min(1.0), d, a, h) >= base);
            prop_assert!(correct_prob(pk, pe, m, (d + eps).min(1.0), a, h) <= base);
            prop_assert!(correct_prob(pk, pe, m, d, (a + 1).min(3), h) <= base);
            prop_assert!(correct_prob(pk, pe, m, d, a, true) <= base);
            prop_assert!((P_CORRECT_MIN..=P_CORRECT_MAX).contains(&base));
        }
    }
}
