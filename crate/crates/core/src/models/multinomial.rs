use ndarray::{Array1, Array2, Axis};
use serde::{Deserialize, Serialize};

use super::check_rows;
use crate::error::{Error, Result};
use crate::nested;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MultinomialConfig {
    pub step: f64,
    pub max_iter: usize,
    pub tol: f64,
    pub l2: f64,
}

impl Default for MultinomialConfig {
    fn default() -> Self {
        Self {
            step: 0.1,
            max_iter: 5000,
            tol: 1e-6,
            l2: 1e-4,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassMetrics {
    pub class: usize,
    pub name: String,
    pub support: usize,
    pub predicted: usize,
    pub recall: f64,
    /// 0 with `precision_defined = false` when the class is never predicted.
    pub precision: f64,
    pub precision_defined: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MultinomialFit {
    /// Class ids present in the training labels, ascending.
    pub classes: Vec<usize>,
    pub class_names: Vec<String>,
    /// One row of coefficients per class.
    #[serde(with = "nested::matrix")]
    pub weights: Array2<f64>,
    pub intercepts: Vec<f64>,
    pub feature_names: Vec<String>,
    pub train_accuracy: f64,
    pub per_class: Vec<ClassMetrics>,
    pub iterations: usize,
    pub converged: bool,
    #[serde(skip)]
    pub loss_history: Vec<f64>,
    pub config: MultinomialConfig,
}

fn scores(w: &Array2<f64>, b: &Array1<f64>, x: &Array2<f64>) -> Array2<f64> {
    x.dot(&w.t()) + b
}

/// Mean cross-entropy plus `l2 / 2 * |W|^2` and its gradient. `y` holds
/// positions into the class list (`0..w.nrows()`).
pub fn multinomial_loss_and_grad(
    w: &Array2<f64>,
    b: &Array1<f64>,
    x: &Array2<f64>,
    y: &[usize],
    l2: f64,
) -> (f64, Array2<f64>, Array1<f64>) {
    let n = y.len() as f64;
    let mut probs = scores(w, b, x);
    let mut loss = 0.0;
    for (mut row, &yi) in probs.rows_mut().into_iter().zip(y) {
        let max = row.fold(f64::NEG_INFINITY, |a, &v| a.max(v));
        let lse = max + row.iter().map(|v| (v - max).exp()).sum::<f64>().ln();
        loss += lse - row[yi];
        row.mapv_inplace(|v| (v - lse).exp());
        row[yi] -= 1.0;
    }
    loss = loss / n + 0.5 * l2 * w.iter().map(|v| v * v).sum::<f64>();
    let gw = probs.t().dot(x) / n + l2 * w;
    let gb = probs.sum_axis(Axis(0)) / n;
    (loss, gw, gb)
}

impl MultinomialFit {
    /// Predicted class ids (ties resolve to the lower class id).
    pub fn predict(&self, x: &Array2<f64>) -> Result<Vec<usize>> {
        if x.ncols() != self.weights.ncols() {
            return Err(Error::Config(format!(
                "model has {} features, input has {}",
                self.weights.ncols(),
                x.ncols()
            )));
        }
        let b = Array1::from(self.intercepts.clone());
        let s = scores(&self.weights, &b, x);
        Ok(s.rows()
            .into_iter()
            .map(|row| {
                let mut best = 0;
                for (i, &v) in row.iter().enumerate() {
                    if v > row[best] {
                        best = i;
                    }
                }
                self.classes[best]
            })
            .collect())
    }
}

/// Per-class recall/precision for the given class list.
pub fn class_metrics(
    classes: &[usize],
    names: &[String],
    truth: &[usize],
    pred: &[usize],
) -> Vec<ClassMetrics> {
    classes
        .iter()
        .zip(names)
        .map(|(&c, name)| {
            let support = truth.iter().filter(|&&t| t == c).count();
            let predicted = pred.iter().filter(|&&p| p == c).count();
            let hits = truth
                .iter()
                .zip(pred)
                .filter(|(&t, &p)| t == c && p == c)
                .count();
            ClassMetrics {
                class: c,
                name: name.clone(),
                support,
                predicted,
                recall: if support > 0 {
                    hits as f64 / support as f64
                } else {
                    0.0
                },
                precision: if predicted > 0 {
                    hits as f64 / predicted as f64
                } else {
                    0.0
                },
                precision_defined: predicted > 0,
            }
        })
        .collect()
}

/// Softmax regression by full-batch gradient descent. `labels` are class
/// ids; `label_names[id]` names each id.
pub fn multinomial_fit(
    x: &Array2<f64>,
    labels: &[usize],
    label_names: &[String],
    feature_names: &[String],
    cfg: &MultinomialConfig,
) -> Result<MultinomialFit> {
    check_rows(x, labels.len())?;
    if feature_names.len() != x.ncols() {
        return Err(Error::Config("one name per feature required".into()));
    }
    if labels.iter().any(|&l| l >= label_names.len()) {
        return Err(Error::Config("label id without a name".into()));
    }
    let mut classes: Vec<usize> = labels.to_vec();
    classes.sort_unstable();
    classes.dedup();
    if classes.len() < 2 {
        return Err(Error::DegenerateFit(
            "multinomial regression needs at least 2 classes".into(),
        ));
    }
    let pos: Vec<usize> = labels
        .iter()
        .map(|l| classes.binary_search(l).expect("present"))
        .collect();
    let mut w = Array2::<f64>::zeros((classes.len(), x.ncols()));
    let mut b = Array1::<f64>::zeros(classes.len());
    let mut history = Vec::new();
    let mut converged = false;
    let mut iterations = 0;
    for it in 0..cfg.max_iter {
        let (_, gw, gb) = multinomial_loss_and_grad(&w, &b, x, &pos, cfg.l2);
        let norm = gw
            .iter()
            .chain(gb.iter())
            .fold(0.0f64, |m, v| m.max(v.abs()));
        if norm < cfg.tol {
            converged = true;
            break;
        }
        w.scaled_add(-cfg.step, &gw);
        b.scaled_add(-cfg.step, &gb);
        iterations = it + 1;
        history.push(multinomial_loss_and_grad(&w, &b, x, &pos, cfg.l2).0);
    }
    let class_names: Vec<String> = classes.iter().map(|&c| label_names[c].clone()).collect();
    let mut fit = MultinomialFit {
        classes,
        class_names,
        weights: w,
        intercepts: b.to_vec(),
        feature_names: feature_names.to_vec(),
        train_accuracy: 0.0,
        per_class: Vec::new(),
        iterations,
        converged,
        loss_history: history,
        config: *cfg,
    };
    let pred = fit.predict(x)?;
    fit.train_accuracy =
        pred.iter().zip(labels).filter(|(p, l)| p == l).count() as f64 / labels.len() as f64;
    fit.per_class = class_metrics(&fit.classes, &fit.class_names, labels, &pred);
    Ok(fit)
}
