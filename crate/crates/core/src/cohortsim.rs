//! Tutor-agent deployment over a simulated cohort.
//!
//! Each student gets an independent random stream. Per turn the simulator
//! draws the task and the learner's behaviour, encodes the state, samples a
//! feedback action from the policy, then draws outcomes and computes the
//! composite reward. Trust carries over from one turn to the next.

use rand::Rng;
use rand_distr::{Binomial, Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::datagen::{correct_prob, heuristic_label, P_CORRECT_MAX, P_CORRECT_MIN};
use crate::domain::{Action, LearnerStateRaw, OutcomeVector, QuestionType};
use crate::error::{Error, Result};
use crate::policy::{action_probs, sample_action, PolicyModel};
use crate::rng::{self, SimRng};

pub const REWARD_WEIGHTS: RewardWeights = RewardWeights {
    performance: 0.45,
    improvement: 0.20,
    trust: 0.20,
    satisfaction: 0.15,
};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RewardWeights {
    pub performance: f64,
    pub improvement: f64,
    pub trust: f64,
    pub satisfaction: f64,
}

/// Composite reward `clip(0.45 (0.5 y + 0.5 q) + 0.20 i + 0.20 t + 0.15 s, 0, 1)`.
pub fn compute_reward(o: &OutcomeVector) -> f64 {
    reward_unclipped(o).clamp(0.0, 1.0)
}

pub fn reward_unclipped(o: &OutcomeVector) -> f64 {
    let w = REWARD_WEIGHTS;
    w.performance * (0.5 * o.correctness + 0.5 * o.quiz_score)
        + w.improvement * o.improvement
        + w.trust * o.trust
        + w.satisfaction * o.satisfaction
}

/// Templated tutor message for an action, parameterized by task and turn.
pub fn response_template(action: Action, raw: &LearnerStateRaw) -> String {
    let q = raw.question_type;
    let t = raw.turn;
    match action {
        Action::Hint => format!(
            "Hint (turn {t}): for this {q} task, look again at the step where your result first diverges from what you expect."
        ),
        Action::Answer => format!(
            "Answer (turn {t}): here is a complete worked solution to the {q} task, with each step annotated."
        ),
        Action::Explanation => format!(
            "Explanation (turn {t}): the {q} task hinges on one underlying idea; here is why it behaves the way it does."
        ),
        Action::Example => format!(
            "Example (turn {t}): a similar {q} problem, solved end to end, so you can compare it with your approach."
        ),
        Action::QuizTip => format!(
            "Quiz tip (turn {t}): before resubmitting this {q} task, answer a short check question about your assumptions."
        ),
        Action::CodeSnippet => format!(
            "Code snippet (turn {t}): a short fragment relevant to the {q} task that you can adapt in your own code."
        ),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StudentProfile {
    pub id: u32,
    pub prior_knowledge: f64,
    pub programming_experience: f64,
    pub motivation: f64,
}

/// Constants of the generative learner model. Every field feeds exactly one
/// draw in [`simulate_turn`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Dynamics {
    pub difficulty_lo: f64,
    pub difficulty_hi: f64,
    /// mastery_t = clip(pk + rate (t - 1) (0.5 + m / 2), 0, 1)
    pub mastery_rate: f64,
    pub rt_base: f64,
    pub rt_pe_weight: f64,
    pub rt_decay: f64,
    pub rt_log_sd: f64,
    pub hint_base: f64,
    pub hint_mastery_weight: f64,
    pub hint_turn_weight: f64,
    pub hint_min: f64,
    pub hint_max: f64,
    pub attempts_base: f64,
    pub attempts_mastery_weight: f64,
    pub match_bonus: f64,
    pub trust_init_base: f64,
    pub trust_init_motivation: f64,
    pub trust_init_sd: f64,
    pub trust_gain_correct: f64,
    pub trust_loss_incorrect: f64,
    pub trust_gain_match: f64,
    pub trust_step_sd: f64,
    pub quiz_base: f64,
    pub quiz_mastery: f64,
    pub quiz_sd: f64,
    pub completion_base: f64,
    pub completion_mastery: f64,
    pub completion_sd: f64,
    pub improvement_sd: f64,
    pub perception_base: f64,
    pub perception_trust: f64,
    pub perception_sd: f64,
}

impl Default for Dynamics {
    fn default() -> Self {
        Self {
            difficulty_lo: 0.2,
            difficulty_hi: 0.9,
            mastery_rate: 0.05,
            rt_base: 30.0,
            rt_pe_weight: 0.3,
            rt_decay: 0.08,
            rt_log_sd: 0.25,
            hint_base: 0.5,
            hint_mastery_weight: 0.4,
            hint_turn_weight: 0.03,
            hint_min: 0.02,
            hint_max: 0.95,
            attempts_base: 0.6,
            attempts_mastery_weight: 0.5,
            match_bonus: 0.05,
            trust_init_base: 0.4,
            trust_init_motivation: 0.3,
            trust_init_sd: 0.05,
            trust_gain_correct: 0.04,
            trust_loss_incorrect: 0.02,
            trust_gain_match: 0.02,
            trust_step_sd: 0.01,
            quiz_base: 0.4,
            quiz_mastery: 0.4,
            quiz_sd: 0.1,
            completion_base: 0.5,
            completion_mastery: 0.3,
            completion_sd: 0.1,
            improvement_sd: 0.05,
            perception_base: 0.45,
            perception_trust: 0.35,
            perception_sd: 0.1,
        }
    }
}

impl Dynamics {
    pub fn validate(&self) -> Result<()> {
        let sds = [
            self.rt_log_sd,
            self.trust_init_sd,
            self.trust_step_sd,
            self.quiz_sd,
            self.completion_sd,
            self.improvement_sd,
            self.perception_sd,
        ];
        if sds.iter().any(|s| !(*s >= 0.0 && s.is_finite())) {
            return Err(Error::Config(
                "noise standard deviations must be finite and >= 0".into(),
            ));
        }
        if !(0.0 <= self.difficulty_lo
            && self.difficulty_lo < self.difficulty_hi
            && self.difficulty_hi <= 1.0)
        {
            return Err(Error::Config(
                "difficulty range must satisfy 0 <= lo < hi <= 1".into(),
            ));
        }
        if !(0.0 <= self.hint_min && self.hint_min <= self.hint_max && self.hint_max <= 1.0) {
            return Err(Error::Config(
                "hint probability bounds must satisfy 0 <= min <= max <= 1".into(),
            ));
        }
        if !(self.rt_base > 0.0) {
            return Err(Error::Config("rt_base must be > 0".into()));
        }
        Ok(())
    }

    pub fn mastery(&self, pk: f64, m: f64, turn: u32) -> f64 {
        let t = f64::from(turn) - 1.0;
        (pk + self.mastery_rate * t * (0.5 + m / 2.0)).clamp(0.0, 1.0)
    }

    /// Correctness probability: the warm-start formula with prior knowledge
    /// replaced by mastery, plus a bonus when the tutor's action matches the
    /// rule-based label.
    #[allow(clippy::too_many_arguments)]
    pub fn correct_probability(
        &self,
        mastery: f64,
        pe: f64,
        m: f64,
        d: f64,
        attempts: u8,
        hint: bool,
        matched: bool,
    ) -> f64 {
        let p = correct_prob(mastery, pe, m, d, attempts, hint).clamp(P_CORRECT_MIN, P_CORRECT_MAX);
        let bonus = if matched { self.match_bonus } else { 0.0 };
        (p + bonus).clamp(0.0, 1.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SimConfig {
    pub n_students: usize,
    pub n_turns: u32,
    pub seed: u64,
    pub dynamics: Dynamics,
}

impl Default for SimConfig {
    fn default() -> Self {
        Self {
            n_students: 40,
            n_turns: 8,
            seed: 42,
            dynamics: Dynamics::default(),
        }
    }
}

impl SimConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n_students < 1 || self.n_turns < 1 {
            return Err(Error::Config("n_students and n_turns must be >= 1".into()));
        }
        self.dynamics.validate()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InteractionRecord {
    pub student_id: u32,
    pub turn: u32,
    pub raw: LearnerStateRaw,
    pub action: Action,
    pub response_text: String,
    pub outcomes: OutcomeVector,
    pub reward: f64,
}

impl InteractionRecord {
    pub fn correct(&self) -> bool {
        self.outcomes.correctness >= 0.5
    }

    pub fn hint(&self) -> f64 {
        if self.raw.hint_requested {
            1.0
        } else {
            0.0
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CohortLog {
    /// Student-major, turn-ascending.
    pub records: Vec<InteractionRecord>,
    pub config: SimConfig,
    pub seed: u64,
}

fn gauss(rng: &mut SimRng, mean: f64, sd: f64) -> f64 {
    if sd == 0.0 {
        return mean;
    }
    Normal::new(mean, sd).expect("validated sd").sample(rng)
}

pub fn draw_profile(id: u32, rng: &mut SimRng) -> StudentProfile {
    StudentProfile {
        id,
        prior_knowledge: rng.random(),
        programming_experience: rng.random(),
        motivation: rng.random(),
    }
}

/// One tutoring turn. `prev_trust` is `None` on the student's first turn.
pub fn simulate_turn(
    student: &StudentProfile,
    turn: u32,
    prev_trust: Option<f64>,
    policy: &PolicyModel,
    dynamics: &Dynamics,
    rng: &mut SimRng,
) -> Result<InteractionRecord> {
    if turn < 1 {
        return Err(Error::Config("turn must be >= 1".into()));
    }
    let dy = dynamics;
    let (pk, pe, m) = (
        student.prior_knowledge,
        student.programming_experience,
        student.motivation,
    );
    let tm1 = f64::from(turn) - 1.0;
    let mastery = dy.mastery(pk, m, turn);

    let question_type = QuestionType::ALL[rng.random_range(0..QuestionType::COUNT)];
    let difficulty = rng.random_range(dy.difficulty_lo..dy.difficulty_hi);
    let rt_noise = gauss(rng, 0.0, dy.rt_log_sd).exp();
    let response_time = (dy.rt_base
        * (1.0 - dy.rt_pe_weight * pe)
        * (1.0 + difficulty)
        * (-dy.rt_decay * tm1).exp()
        * rt_noise)
        .max(1.0);
    let p_hint = (dy.hint_base - dy.hint_mastery_weight * mastery - dy.hint_turn_weight * tm1)
        .clamp(dy.hint_min, dy.hint_max);
    let hint_requested = rng.random_bool(p_hint);
    let p_retry = (dy.attempts_base - dy.attempts_mastery_weight * mastery).clamp(0.0, 1.0);
    let extra = Binomial::new(2, p_retry)
        .map_err(|e| Error::Config(e.to_string()))?
        .sample(rng);
    let attempts = 1 + extra as u8;

    let raw = LearnerStateRaw::new(
        pk,
        pe,
        m,
        difficulty,
        response_time,
        attempts,
        hint_requested,
        turn,
        question_type,
    )?;
    let x = policy.encode(&raw)?;
    let probs = action_probs(policy, &x, policy.temperature)?;
    let action = sample_action(&probs, rng)?;
    let matched = action == heuristic_label(&raw, false);

    let p_correct = dy.correct_probability(
        mastery,
        pe,
        m,
        difficulty,
        attempts,
        hint_requested,
        matched,
    );
    let correct = rng.random_bool(p_correct);
    let y = if correct { 1.0 } else { 0.0 };

    let trust = match prev_trust {
        None => {
            (dy.trust_init_base + dy.trust_init_motivation * m + gauss(rng, 0.0, dy.trust_init_sd))
                .clamp(0.0, 1.0)
        }
        Some(prev) => {
            let step = dy.trust_gain_correct * y - dy.trust_loss_incorrect * (1.0 - y)
                + if matched { dy.trust_gain_match } else { 0.0 }
                + gauss(rng, 0.0, dy.trust_step_sd);
            (prev + step).clamp(0.0, 1.0)
        }
    };

    let outcomes = OutcomeVector {
        correctness: y,
        quiz_score: gauss(rng, dy.quiz_base + dy.quiz_mastery * mastery, dy.quiz_sd)
            .clamp(0.0, 1.0),
        completion: gauss(
            rng,
            dy.completion_base + dy.completion_mastery * mastery,
            dy.completion_sd,
        )
        .clamp(0.0, 1.0),
        improvement: (mastery - pk + gauss(rng, 0.0, dy.improvement_sd)).clamp(0.0, 1.0),
        usefulness: gauss(
            rng,
            dy.perception_base + dy.perception_trust * trust,
            dy.perception_sd,
        )
        .clamp(0.0, 1.0),
        satisfaction: gauss(
            rng,
            dy.perception_base + dy.perception_trust * trust,
            dy.perception_sd,
        )
        .clamp(0.0, 1.0),
        trust,
    };

    Ok(InteractionRecord {
        student_id: student.id,
        turn,
        raw,
        action,
        response_text: response_template(action, &raw),
        outcomes,
        reward: compute_reward(&outcomes),
    })
}

/// Full trajectory for one student from its own sub-stream.
pub fn simulate_student(
    index: usize,
    cfg: &SimConfig,
    policy: &PolicyModel,
) -> Result<Vec<InteractionRecord>> {
    let mut rng = rng::stream(cfg.seed, rng::TAG_STUDENT, index as u64);
    let id = u32::try_from(index + 1).map_err(|_| Error::Config("too many students".into()))?;
    let profile = draw_profile(id, &mut rng);
    let mut trust = None;
    let mut out = Vec::with_capacity(cfg.n_turns as usize);
    for turn in 1..=cfg.n_turns {
        let rec = simulate_turn(&profile, turn, trust, policy, &cfg.dynamics, &mut rng)?;
        trust = Some(rec.outcomes.trust);
        out.push(rec);
    }
    Ok(out)
}

pub fn run_cohort(cfg: &SimConfig, policy: &PolicyModel) -> Result<CohortLog> {
    cfg.validate()?;
    policy.validate()?;
    let mut records = Vec::with_capacity(cfg.n_students * cfg.n_turns as usize);
    for i in 0..cfg.n_students {
        records.extend(simulate_student(i, cfg, policy)?);
    }
    Ok(CohortLog {
        records,
        config: *cfg,
        seed: cfg.seed,
    })
}
