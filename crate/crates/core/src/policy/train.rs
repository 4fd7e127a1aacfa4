use ndarray::{Array2, Axis};
use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use super::network::{self, Params};
use super::{PolicyModel, Standardizer};
use crate::datagen::WarmStartRecord;
use crate::domain::{encode_state, Action, STATE_DIM};
use crate::error::{Error, Result};
use crate::rng::{self, SimRng};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub hidden_sizes: (usize, usize),
    pub learning_rate: f64,
    pub epochs: usize,
    pub batch_size: usize,
    pub split_fraction: f64,
    pub seed: u64,
    pub temperature: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            hidden_sizes: (64, 32),
            learning_rate: 1e-3,
            epochs: 200,
            batch_size: 64,
            split_fraction: 0.8,
            seed: 42,
            temperature: 1.0,
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.split_fraction > 0.0 && self.split_fraction < 1.0) {
            return Err(Error::Config(format!(
                "split_fraction must lie in (0, 1), got {}",
                self.split_fraction
            )));
        }
        if !(self.learning_rate > 0.0) {
            return Err(Error::Config("learning_rate must be > 0".into()));
        }
        if !(self.temperature > 0.0) {
            return Err(Error::Config("temperature must be > 0".into()));
        }
        if self.batch_size == 0 || self.hidden_sizes.0 == 0 || self.hidden_sizes.1 == 0 {
            return Err(Error::Config(
                "batch_size and hidden sizes must be >= 1".into(),
            ));
        }
        if !(0.0..1.0).contains(&self.beta1)
            || !(0.0..1.0).contains(&self.beta2)
            || !(self.epsilon > 0.0)
        {
            return Err(Error::Config(
                "Adam needs beta1, beta2 in [0, 1) and epsilon > 0".into(),
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainReport {
    /// Mean cross-entropy over the full training split after each epoch.
    pub train_loss_per_epoch: Vec<f64>,
    pub train_accuracy: f64,
    pub validation_accuracy: f64,
    pub train_class_counts: [usize; Action::COUNT],
    pub validation_class_counts: [usize; Action::COUNT],
}

/// Per-label shuffled split. Each class contributes `floor(fraction * n)`
/// members to train and the rest to validation, except that a class with at
/// least two members always keeps one for validation and a singleton class
/// goes to train. Output order follows class order, then shuffled order.
pub fn stratified_split<T: Clone>(
    records: &[T],
    labels: &[usize],
    fraction: f64,
    seed: u64,
) -> Result<(Vec<T>, Vec<T>)> {
    if records.is_empty() {
        return Err(Error::InsufficientData("cannot split an empty set".into()));
    }
    if records.len() != labels.len() {
        return Err(Error::Config("one label per record required".into()));
    }
    if !(fraction > 0.0 && fraction < 1.0) {
        return Err(Error::Config(format!(
            "split fraction must lie in (0, 1), got {fraction}"
        )));
    }
    let n_classes = labels.iter().max().map_or(0, |m| m + 1);
    let mut by_class: Vec<Vec<usize>> = vec![Vec::new(); n_classes];
    for (i, &y) in labels.iter().enumerate() {
        by_class[y].push(i);
    }
    let mut rng = rng::stream(seed, rng::TAG_SPLIT, 0);
    let mut train = Vec::new();
    let mut valid = Vec::new();
    for members in by_class.iter_mut().filter(|m| !m.is_empty()) {
        members.shuffle(&mut rng);
        let n = members.len();
        let mut n_train = (fraction * n as f64).floor() as usize;
        if n == 1 {
            n_train = 1;
        } else if n_train >= n {
            n_train = n - 1;
        }
        train.extend(members[..n_train].iter().map(|&i| records[i].clone()));
        valid.extend(members[n_train..].iter().map(|&i| records[i].clone()));
    }
    Ok((train, valid))
}

struct Adam {
    m: Params,
    v: Params,
    t: i32,
}

impl Adam {
    fn new(p: &Params) -> Self {
        Self {
            m: p.zeros_like(),
            v: p.zeros_like(),
            t: 0,
        }
    }

    fn step(&mut self, params: &mut Params, grad: &Params, cfg: &TrainConfig) {
        self.t += 1;
        let bc1 = 1.0 - cfg.beta1.powi(self.t);
        let bc2 = 1.0 - cfg.beta2.powi(self.t);
        let grads = grad.tensors();
        let ms = self.m.tensors_mut();
        let vs = self.v.tensors_mut();
        let ps = params.tensors_mut();
        for (((p, g), m), v) in ps.into_iter().zip(grads).zip(ms).zip(vs) {
            for i in 0..p.len() {
                m[i] = cfg.beta1 * m[i] + (1.0 - cfg.beta1) * g[i];
                v[i] = cfg.beta2 * v[i] + (1.0 - cfg.beta2) * g[i] * g[i];
                let m_hat = m[i] / bc1;
                let v_hat = v[i] / bc2;
                p[i] -= cfg.learning_rate * m_hat / (v_hat.sqrt() + cfg.epsilon);
            }
        }
    }
}

fn encode_all(
    records: &[WarmStartRecord],
    std: &Standardizer,
) -> Result<(Array2<f64>, Vec<usize>)> {
    let mut x = Array2::zeros((records.len(), STATE_DIM));
    for (mut row, r) in x.rows_mut().into_iter().zip(records) {
        let v = encode_state(&r.raw, std)?;
        row.iter_mut().zip(v.0).for_each(|(o, val)| *o = val);
    }
    Ok((x, records.iter().map(|r| r.label.index()).collect()))
}

fn accuracy(params: &Params, x: &Array2<f64>, y: &[usize]) -> f64 {
    if y.is_empty() {
        return 0.0;
    }
    let logits = network::forward_batch(params, x.view());
    let hits = logits
        .rows()
        .into_iter()
        .zip(y)
        .filter(|(row, &label)| super::argmax(row.as_slice().expect("row-major")) == label)
        .count();
    hits as f64 / y.len() as f64
}

fn class_counts(records: &[WarmStartRecord]) -> [usize; Action::COUNT] {
    let mut c = [0; Action::COUNT];
    records.iter().for_each(|r| c[r.label.index()] += 1);
    c
}

/// Stratified split, standardizer fit on the training split, then minibatch
/// Adam on mean cross-entropy. Batches are reshuffled every epoch.
pub fn train_policy(
    records: &[WarmStartRecord],
    cfg: &TrainConfig,
) -> Result<(PolicyModel, TrainReport)> {
    cfg.validate()?;
    let labels: Vec<usize> = records.iter().map(|r| r.label.index()).collect();
    let n_classes = class_counts(records).iter().filter(|&&c| c > 0).count();
    if n_classes < 2 {
        return Err(Error::Training(format!(
            "need at least 2 action classes, found {n_classes}"
        )));
    }
    let (train, valid) = stratified_split(records, &labels, cfg.split_fraction, cfg.seed)?;
    let raws: Vec<_> = train.iter().map(|r| r.raw).collect();
    let standardizer = Standardizer::fit(&raws)?;
    let (x_train, y_train) = encode_all(&train, &standardizer)?;
    let (x_valid, y_valid) = encode_all(&valid, &standardizer)?;

    let mut init_rng = rng::stream(cfg.seed, rng::TAG_INIT, 0);
    let mut params = Params::he_uniform(cfg.hidden_sizes.0, cfg.hidden_sizes.1, &mut init_rng);
    let mut adam = Adam::new(&params);
    let mut shuffle_rng: SimRng = rng::stream(cfg.seed, rng::TAG_SHUFFLE, 0);
    let mut order: Vec<usize> = (0..y_train.len()).collect();
    let mut losses = Vec::with_capacity(cfg.epochs);

    for _ in 0..cfg.epochs {
        order.shuffle(&mut shuffle_rng);
        for batch in order.chunks(cfg.batch_size) {
            let xb = x_train.select(Axis(0), batch);
            let yb: Vec<usize> = batch.iter().map(|&i| y_train[i]).collect();
            let (_, grad) = network::loss_and_grad(&params, xb.view(), &yb);
            adam.step(&mut params, &grad, cfg);
        }
        let logits = network::forward_batch(&params, x_train.view());
        losses.push(network::cross_entropy(&logits, &y_train));
    }

    let report = TrainReport {
        train_loss_per_epoch: losses,
        train_accuracy: accuracy(&params, &x_train, &y_train),
        validation_accuracy: accuracy(&params, &x_valid, &y_valid),
        train_class_counts: class_counts(&train),
        validation_class_counts: class_counts(&valid),
    };
    let model = PolicyModel::new(params, standardizer, *cfg)?;
    Ok((model, report))
}
