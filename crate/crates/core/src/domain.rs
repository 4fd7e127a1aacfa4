//! Shared vocabulary: question types, tutoring actions, the raw learner state
//! observed at each turn, its 14-dimensional encoding, and the outcome vector.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::policy::Standardizer;

/// Number of numeric state features (pk, pe, m, d, rt, a, h, turn).
pub const NUM_NUMERIC: usize = 8;
/// Encoded state width: numeric features followed by the question-type one-hot.
pub const STATE_DIM: usize = NUM_NUMERIC + QuestionType::COUNT;

pub const NUMERIC_FEATURE_NAMES: [&str; NUM_NUMERIC] = [
    "pk",
    "pe",
    "m",
    "difficulty",
    "response_time",
    "attempts",
    "hint",
    "turn",
];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum QuestionType {
    Concept,
    Debug,
    Application,
    Analysis,
    Design,
    Optimization,
}

impl QuestionType {
    pub const COUNT: usize = 6;
    pub const ALL: [QuestionType; 6] = [
        QuestionType::Concept,
        QuestionType::Debug,
        QuestionType::Application,
        QuestionType::Analysis,
        QuestionType::Design,
        QuestionType::Optimization,
    ];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn from_index(i: usize) -> Option<Self> {
        Self::ALL.get(i).copied()
    }

    pub fn name(self) -> &'static str {
        match self {
            QuestionType::Concept => "concept",
            QuestionType::Debug => "debug",
            QuestionType::Application => "application",
            QuestionType::Analysis => "analysis",
            QuestionType::Design => "design",
            QuestionType::Optimization => "optimization",
        }
    }
}

impl fmt::Display for QuestionType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for QuestionType {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|q| q.name() == s)
            .ok_or_else(|| Error::Data(format!("unknown question type `{s}`")))
    }
}

/// Tutoring feedback type. The declaration order is the class index order
/// used by the policy network and every serialized model.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Action {
    Hint,
    Answer,
    Explanation,
    Example,
    QuizTip,
    CodeSnippet,
}

impl Action {
    pub const COUNT: usize = 6;
    pub const ALL: [Action; 6] = [
        Action::Hint,
        Action::Answer,
        Action::Explanation,
        Action::Example,
        Action::QuizTip,
        Action::CodeSnippet,
    ];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn from_index(i: usize) -> Option<Self> {
        Self::ALL.get(i).copied()
    }

    pub fn name(self) -> &'static str {
        match self {
            Action::Hint => "hint",
            Action::Answer => "answer",
            Action::Explanation => "explanation",
            Action::Example => "example",
            Action::QuizTip => "quiz_tip",
            Action::CodeSnippet => "code_snippet",
        }
    }
}

impl fmt::Display for Action {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Action {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|a| a.name() == s)
            .ok_or_else(|| Error::Data(format!("unknown action `{s}`")))
    }
}

/// One turn's observation before encoding.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LearnerStateRaw {
    pub prior_knowledge: f64,
    pub programming_experience: f64,
    pub motivation: f64,
    pub difficulty: f64,
    /// Seconds, at least 1.
    pub response_time: f64,
    /// 1, 2 or 3.
    pub attempts: u8,
    pub hint_requested: bool,
    pub turn: u32,
    pub question_type: QuestionType,
}

fn check_fraction(name: &str, v: f64) -> Result<()> {
    if (0.0..=1.0).contains(&v) {
        Ok(())
    } else {
        Err(Error::Data(format!("{name} = {v} is outside [0, 1]")))
    }
}

impl LearnerStateRaw {
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        prior_knowledge: f64,
        programming_experience: f64,
        motivation: f64,
        difficulty: f64,
        response_time: f64,
        attempts: u8,
        hint_requested: bool,
        turn: u32,
        question_type: QuestionType,
    ) -> Result<Self> {
        let raw = Self {
            prior_knowledge,
            programming_experience,
            motivation,
            difficulty,
            response_time,
            attempts,
            hint_requested,
            turn,
            question_type,
        };
        raw.validate()?;
        Ok(raw)
    }

    pub fn validate(&self) -> Result<()> {
        check_fraction("prior_knowledge", self.prior_knowledge)?;
        check_fraction("programming_experience", self.programming_experience)?;
        check_fraction("motivation", self.motivation)?;
        check_fraction("difficulty", self.difficulty)?;
        if !(self.response_time >= 1.0 && self.response_time.is_finite()) {
            return Err(Error::Data(format!(
                "response_time = {} must be a finite value >= 1",
                self.response_time
            )));
        }
        if !(1..=3).contains(&self.attempts) {
            return Err(Error::Data(format!(
                "attempts = {} is not in {{1,2,3}}",
                self.attempts
            )));
        }
        if self.turn < 1 {
            return Err(Error::Data("turn must be >= 1".into()));
        }
        Ok(())
    }

    /// Numeric features in canonical order (pk, pe, m, d, rt, a, h, turn).
    pub fn numeric(&self) -> [f64; NUM_NUMERIC] {
        [
            self.prior_knowledge,
            self.programming_experience,
            self.motivation,
            self.difficulty,
            self.response_time,
            f64::from(self.attempts),
            if self.hint_requested { 1.0 } else { 0.0 },
            f64::from(self.turn),
        ]
    }
}

/// Encoded policy input: 8 standardized numerics then a 6-slot one-hot.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StateVector(pub [f64; STATE_DIM]);

impl StateVector {
    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }
}

pub fn one_hot(q: QuestionType) -> [f64; QuestionType::COUNT] {
    let mut v = [0.0; QuestionType::COUNT];
    v[q.index()] = 1.0;
    v
}

pub fn encode_state(raw: &LearnerStateRaw, std: &Standardizer) -> Result<StateVector> {
    let z = std.transform(&raw.numeric())?;
    let mut out = [0.0; STATE_DIM];
    out[..NUM_NUMERIC].copy_from_slice(&z);
    out[NUM_NUMERIC..].copy_from_slice(&one_hot(raw.question_type));
    Ok(StateVector(out))
}

/// Seven per-turn outcomes. Correctness is stored as a real so that invalid
/// values read from files can be reported rather than silently coerced.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OutcomeVector {
    pub correctness: f64,
    pub quiz_score: f64,
    pub completion: f64,
    pub improvement: f64,
    pub usefulness: f64,
    pub satisfaction: f64,
    pub trust: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Violation {
    pub field: &'static str,
    pub value: f64,
    pub reason: &'static str,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} = {} ({})", self.field, self.value, self.reason)
    }
}

pub fn validate_outcomes(o: &OutcomeVector) -> std::result::Result<(), Vec<Violation>> {
    let mut violations = Vec::new();
    if o.correctness != 0.0 && o.correctness != 1.0 {
        violations.push(Violation {
            field: "correctness",
            value: o.correctness,
            reason: "must be 0 or 1",
        });
    }
    let fractions = [
        ("quiz_score", o.quiz_score),
        ("completion", o.completion),
        ("improvement", o.improvement),
        ("usefulness", o.usefulness),
        ("satisfaction", o.satisfaction),
        ("trust", o.trust),
    ];
    for (field, value) in fractions {
        if !(0.0..=1.0).contains(&value) {
            violations.push(Violation {
                field,
                value,
                reason: "outside [0, 1]",
            });
        }
    }
    if violations.is_empty() {
        Ok(())
    } else {
        Err(violations)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn raw(q: QuestionType) -> LearnerStateRaw {
        LearnerStateRaw::new(0.3, 0.6, 0.9, 0.5, 25.0, 2, true, 4, q).unwrap()
    }

    #[test]
    fn one_hot_endpoints() {
        assert_eq!(
            one_hot(QuestionType::Concept),
            [1.0, 0.0, 0.0, 0.0, 0.0, 0.0]
        );
        assert_eq!(
            one_hot(QuestionType::Optimization),
            [0.0, 0.0, 0.0, 0.0, 0.0, 1.0]
        );
        for q in QuestionType::ALL {
            assert_eq!(one_hot(q).iter().sum::<f64>(), 1.0);
        }
    }

    #[test]
    fn identity_standardizer_copies_numeric_fields() {
        let r = raw(QuestionType::Debug);
        let v = encode_state(&r, &Standardizer::identity()).unwrap();
        assert_eq!(&v.0[..8], &r.numeric());
        assert_eq!(&v.0[8..], &[0.0, 1.0, 0.0, 0.0, 0.0, 0.0]);
    }

    #[test]
    fn value_at_mean_standardizes_to_zero() {
        let r = raw(QuestionType::Concept);
        let mut std = Standardizer::identity();
        std.means[4] = 25.0;
        std.sds[4] = 7.0;
        let v = encode_state(&r, &std).unwrap();
        assert_eq!(v.0[4], 0.0);
    }

    #[test]
    fn hand_computed_standardization() {
        let r = raw(QuestionType::Design);
        let means = vec![0.5, 0.5, 0.5, 0.5, 20.0, 2.0, 0.35, 5.0];
        let sds = vec![0.25, 0.5, 0.2, 0.1, 10.0, 0.8, 0.5, 2.5];
        let std = Standardizer { means, sds };
        let v = encode_state(&r, &std).unwrap();
        // (x - mu) / sigma evaluated by hand
        let expected = [-0.8, 0.2, 2.0, 0.0, 0.5, 0.0, 1.3, -0.4];
        for (a, b) in v.0[..8].iter().zip(expected) {
            assert!((a - b).abs() < 1e-12, "{a} vs {b}");
        }
        assert_eq!(v.0[8 + QuestionType::Design.index()], 1.0);
    }

    #[test]
    fn mismatched_standardizer_is_config_error() {
        let std = Standardizer {
            means: vec![0.0; 7],
            sds: vec![1.0; 7],
        };
        assert!(matches!(
            encode_state(&raw(QuestionType::Concept), &std),
            Err(Error::Config(_))
        ));
    }

    #[test]
    fn question_type_does_not_touch_numeric_prefix() {
        let std = Standardizer {
            means: vec![0.1; 8],
            sds: vec![2.0; 8],
        };
        let a = encode_state(&raw(QuestionType::Concept), &std).unwrap();
        let b = encode_state(&raw(QuestionType::Analysis), &std).unwrap();
        assert_eq!(a.0[..8], b.0[..8]);
        assert_ne!(a.0[8..], b.0[8..]);
    }

    #[test]
    fn raw_validation_rejects_out_of_range() {
        assert!(
            LearnerStateRaw::new(1.2, 0.0, 0.0, 0.0, 5.0, 1, false, 1, QuestionType::Concept)
                .is_err()
        );
        assert!(
            LearnerStateRaw::new(0.2, 0.0, 0.0, 0.0, 0.5, 1, false, 1, QuestionType::Concept)
                .is_err()
        );
        assert!(
            LearnerStateRaw::new(0.2, 0.0, 0.0, 0.0, 5.0, 4, false, 1, QuestionType::Concept)
                .is_err()
        );
        assert!(
            LearnerStateRaw::new(0.2, 0.0, 0.0, 0.0, 5.0, 1, false, 0, QuestionType::Concept)
                .is_err()
        );
        // turns beyond 9 are accepted
        assert!(
            LearnerStateRaw::new(0.2, 0.0, 0.0, 0.0, 5.0, 1, false, 12, QuestionType::Concept)
                .is_ok()
        );
    }

    #[test]
    fn outcome_validation() {
        let zero = OutcomeVector {
            correctness: 0.0,
            quiz_score: 0.0,
            completion: 0.0,
            improvement: 0.0,
            usefulness: 0.0,
            satisfaction: 0.0,
            trust: 0.0,
        };
        assert!(validate_outcomes(&zero).is_ok());

        let bad_trust = OutcomeVector { trust: 1.2, ..zero };
        let v = validate_outcomes(&bad_trust).unwrap_err();
        assert_eq!(v.len(), 1);
        assert_eq!(v[0].field, "trust");

        let half = OutcomeVector {
            correctness: 0.5,
            ..zero
        };
        assert_eq!(
            validate_outcomes(&half).unwrap_err()[0].field,
            "correctness"
        );
    }

    #[test]
    fn names_round_trip() {
        for a in Action::ALL {
            assert_eq!(a.name().parse::<Action>().unwrap(), a);
            assert_eq!(Action::from_index(a.index()), Some(a));
        }
        for q in QuestionType::ALL {
            assert_eq!(q.name().parse::<QuestionType>().unwrap(), q);
        }
        assert!("teleport".parse::<Action>().is_err());
    }
}
