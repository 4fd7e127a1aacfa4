//! Feedback-selection policy: a two-hidden-layer ReLU network over the
//! encoded learner state, trained with cross-entropy and Adam on warm-start
//! labels, and queried through a temperature-scaled softmax.

mod network;
mod standardizer;
mod train;

pub use network::{
    cross_entropy, forward_batch, forward_one, loss_and_grad, softmax_rows, Activations, Params,
    PARAM_NAMES,
};
pub use standardizer::{fit_standardizer, Standardizer};
pub use train::{stratified_split, train_policy, TrainConfig, TrainReport};

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::domain::{encode_state, Action, LearnerStateRaw, QuestionType, StateVector};
use crate::error::{Error, Result};
use crate::rng::SimRng;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PolicyModel {
    pub hidden_sizes: (usize, usize),
    pub temperature: f64,
    pub standardizer: Standardizer,
    #[serde(flatten)]
    pub params: Params,
    pub action_order: Vec<Action>,
    pub question_order: Vec<QuestionType>,
    pub seed: u64,
    pub config: TrainConfig,
}

impl PolicyModel {
    pub fn new(params: Params, standardizer: Standardizer, config: TrainConfig) -> Result<Self> {
        let model = Self {
            hidden_sizes: params.hidden_sizes(),
            temperature: config.temperature,
            standardizer,
            params,
            action_order: Action::ALL.to_vec(),
            question_order: QuestionType::ALL.to_vec(),
            seed: config.seed,
            config,
        };
        model.validate()?;
        Ok(model)
    }

    /// Checks shapes, temperature and that the serialized class orders match
    /// this build's canonical orders.
    pub fn validate(&self) -> Result<()> {
        self.params.check_shapes()?;
        if self.params.hidden_sizes() != self.hidden_sizes {
            return Err(Error::Config(
                "hidden_sizes disagree with weight shapes".into(),
            ));
        }
        if !(self.temperature > 0.0) {
            return Err(Error::Config(format!(
                "temperature must be > 0, got {}",
                self.temperature
            )));
        }
        if self.action_order != Action::ALL || self.question_order != QuestionType::ALL {
            return Err(Error::Config(
                "model was saved with a different class ordering".into(),
            ));
        }
        Ok(())
    }

    pub fn encode(&self, raw: &LearnerStateRaw) -> Result<StateVector> {
        encode_state(raw, &self.standardizer)
    }

    pub fn with_temperature(mut self, temperature: f64) -> Result<Self> {
        if !(temperature > 0.0) {
            return Err(Error::Config(format!(
                "temperature must be > 0, got {temperature}"
            )));
        }
        self.temperature = temperature;
        Ok(self)
    }

    /// Most probable action (temperature does not change the argmax).
    pub fn greedy_action(&self, x: &StateVector) -> Result<Action> {
        let z = forward(self, x)?;
        Ok(Action::ALL[argmax(&z)])
    }
}

pub(crate) fn argmax(v: &[f64]) -> usize {
    let mut best = 0;
    for (i, &x) in v.iter().enumerate() {
        if x > v[best] {
            best = i;
        }
    }
    best
}

/// Output logits `z = W3 relu(W2 relu(W1 x + b1) + b2) + b3`.
pub fn forward(model: &PolicyModel, x: &StateVector) -> Result<[f64; Action::COUNT]> {
    let act = network::forward_one(&model.params, x.as_slice())?;
    let mut out = [0.0; Action::COUNT];
    if act.logits.len() != Action::COUNT {
        return Err(Error::Config(format!(
            "network emits {} logits",
            act.logits.len()
        )));
    }
    out.iter_mut()
        .zip(act.logits.iter())
        .for_each(|(o, &v)| *o = v);
    Ok(out)
}

/// `softmax(z / T)` with max subtraction.
pub fn softmax_with_temperature(
    logits: &[f64; Action::COUNT],
    temperature: f64,
) -> Result<[f64; Action::COUNT]> {
    if !(temperature > 0.0) {
        return Err(Error::Config(format!(
            "temperature must be > 0, got {temperature}"
        )));
    }
    let max = logits.iter().fold(f64::NEG_INFINITY, |a, &b| a.max(b));
    let mut p = [0.0; Action::COUNT];
    for (pi, &z) in p.iter_mut().zip(logits) {
        *pi = ((z - max) / temperature).exp();
    }
    let sum: f64 = p.iter().sum();
    p.iter_mut().for_each(|v| *v /= sum);
    Ok(p)
}

pub fn action_probs(
    model: &PolicyModel,
    x: &StateVector,
    temperature: f64,
) -> Result<[f64; Action::COUNT]> {
    softmax_with_temperature(&forward(model, x)?, temperature)
}

/// Inverse-CDF categorical draw over the canonical action order.
pub fn sample_action(probs: &[f64; Action::COUNT], rng: &mut SimRng) -> Result<Action> {
    let sum: f64 = probs.iter().sum();
    if probs.iter().any(|p| !(p.is_finite() && *p >= 0.0)) || (sum - 1.0).abs() > 1e-6 {
        return Err(Error::Data(format!(
            "not a probability distribution: {probs:?}"
        )));
    }
    let u: f64 = rng.random::<f64>() * sum;
    let mut cum = 0.0;
    let mut last_positive = 0;
    for (i, &p) in probs.iter().enumerate() {
        if p > 0.0 {
            last_positive = i;
            cum += p;
            if u < cum {
                return Ok(Action::ALL[i]);
            }
        }
    }
    Ok(Action::ALL[last_positive])
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::SeedableRng;

    #[test]
    fn equal_logits_are_uniform() {
        let p = softmax_with_temperature(&[0.4; 6], 1.0).unwrap();
        assert!(p.iter().all(|&v| (v - 1.0 / 6.0).abs() < 1e-15));
    }

    #[test]
    fn huge_temperature_is_near_uniform() {
        let z = [3.0, -2.0, 0.5, 7.0, 1.0, -4.0];
        let p = softmax_with_temperature(&z, 1e6).unwrap();
        assert!(p.iter().all(|&v| (v - 1.0 / 6.0).abs() < 1e-4));
        assert!((p.iter().sum::<f64>() - 1.0).abs() < 1e-9);
    }

    #[test]
    fn nonpositive_temperature_rejected() {
        assert!(matches!(
            softmax_with_temperature(&[0.0; 6], 0.0),
            Err(Error::Config(_))
        ));
        assert!(matches!(
            softmax_with_temperature(&[0.0; 6], -1.0),
            Err(Error::Config(_))
        ));
    }

    #[test]
    fn degenerate_distribution_always_samples_its_action() {
        let mut rng = SimRng::seed_from_u64(9);
        let probs = [0.0, 1.0, 0.0, 0.0, 0.0, 0.0];
        for _ in 0..1000 {
            assert_eq!(sample_action(&probs, &mut rng).unwrap(), Action::Answer);
        }
    }

    #[test]
    fn uniform_sampling_frequencies() {
        let mut rng = SimRng::seed_from_u64(11);
        let mut counts = [0usize; 6];
        let n = 60_000;
        for _ in 0..n {
            counts[sample_action(&[1.0 / 6.0; 6], &mut rng).unwrap().index()] += 1;
        }
        for c in counts {
            assert!((c as f64 / n as f64 - 1.0 / 6.0).abs() < 0.01, "{counts:?}");
        }
    }

    #[test]
    fn sampling_is_deterministic_and_validates() {
        let probs = [0.1, 0.2, 0.3, 0.1, 0.2, 0.1];
        let a = sample_action(&probs, &mut SimRng::seed_from_u64(5)).unwrap();
        let b = sample_action(&probs, &mut SimRng::seed_from_u64(5)).unwrap();
        assert_eq!(a, b);
        let mut rng = SimRng::seed_from_u64(5);
        assert!(matches!(
            sample_action(&[0.5; 6], &mut rng),
            Err(Error::Data(_))
        ));
        assert!(matches!(
            sample_action(&[1.2, -0.2, 0.0, 0.0, 0.0, 0.0], &mut rng),
            Err(Error::Data(_))
        ));
    }

    proptest! {
        #[test]
        fn temperature_preserves_argmax(z in proptest::array::uniform6(-20.0..20.0f64)) {
            for t in [0.1, 1.0, 10.0] {
                let p = softmax_with_temperature(&z, t).unwrap();
                prop_assert_eq!(argmax(&p), argmax(&z));
                prop_assert!((p.iter().sum::<f64>() - 1.0).abs() < 1e-9);
            }
        }
    }
}
