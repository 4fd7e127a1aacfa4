use ndarray::{Array1, Array2};
use serde::{Deserialize, Serialize};

use super::check_rows;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LogisticConfig {
    pub step: f64,
    pub max_iter: usize,
    /// Stop once the max-norm of the gradient falls below this.
    pub tol: f64,
    /// L2 strength on the coefficients (intercept unpenalized).
    pub l2: f64,
}

impl Default for LogisticConfig {
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
pub struct LogisticFit {
    pub intercept: f64,
    pub coefficients: Vec<f64>,
    pub feature_names: Vec<String>,
    pub train_accuracy: f64,
    pub iterations: usize,
    pub converged: bool,
    pub final_grad_norm: f64,
    /// Penalized mean negative log-likelihood after each iteration.
    #[serde(skip)]
    pub loss_history: Vec<f64>,
    pub config: LogisticConfig,
}

fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

/// `log(1 + exp(z))` without overflow.
fn softplus(z: f64) -> f64 {
    if z > 0.0 {
        z + (-z).exp().ln_1p()
    } else {
        z.exp().ln_1p()
    }
}

/// Unpenalized log-likelihood `sum y z - log(1 + e^z)` of labels under `(b0, beta)`.
pub fn log_likelihood(intercept: f64, coefficients: &[f64], x: &Array2<f64>, y: &[bool]) -> f64 {
    let beta = Array1::from(coefficients.to_vec());
    let z = x.dot(&beta) + intercept;
    z.iter()
        .zip(y)
        .map(|(&zi, &yi)| if yi { zi - softplus(zi) } else { -softplus(zi) })
        .sum()
}

fn penalized_loss(b0: f64, beta: &Array1<f64>, x: &Array2<f64>, y: &[bool], l2: f64) -> f64 {
    let n = y.len() as f64;
    -log_likelihood(b0, beta.as_slice().expect("contiguous"), x, y) / n + 0.5 * l2 * beta.dot(beta)
}

impl LogisticFit {
    pub fn predict_proba(&self, x: &Array2<f64>) -> Result<Vec<f64>> {
        if x.ncols() != self.coefficients.len() {
            return Err(Error::Config(format!(
                "model has {} features, input has {}",
                self.coefficients.len(),
                x.ncols()
            )));
        }
        let beta = Array1::from(self.coefficients.clone());
        Ok((x.dot(&beta) + self.intercept).mapv(sigmoid).to_vec())
    }

    /// Fraction of rows where `p >= 0.5` agrees with the label.
    pub fn accuracy(&self, x: &Array2<f64>, y: &[bool]) -> Result<f64> {
        let p = self.predict_proba(x)?;
        if p.len() != y.len() {
            return Err(Error::Config("one label per row required".into()));
        }
        let hits = p
            .iter()
            .zip(y)
            .filter(|(&pi, &yi)| (pi >= 0.5) == yi)
            .count();
        Ok(hits as f64 / y.len().max(1) as f64)
    }
}

/// Full-batch gradient descent on the L2-penalized mean negative log-likelihood.
pub fn logistic_fit(
    x: &Array2<f64>,
    y: &[bool],
    feature_names: &[String],
    cfg: &LogisticConfig,
) -> Result<LogisticFit> {
    check_rows(x, y.len())?;
    if feature_names.len() != x.ncols() {
        return Err(Error::Config("one name per feature required".into()));
    }
    let positives = y.iter().filter(|&&v| v).count();
    if positives == 0 || positives == y.len() {
        return Err(Error::DegenerateFit(
            "logistic regression needs both classes".into(),
        ));
    }
    let n = y.len() as f64;
    let target = Array1::from_iter(y.iter().map(|&v| if v { 1.0 } else { 0.0 }));
    let mut b0 = 0.0;
    let mut beta = Array1::<f64>::zeros(x.ncols());
    let mut history = Vec::new();
    let mut converged = false;
    let mut grad_norm = f64::INFINITY;
    let mut iterations = 0;
    for it in 0..cfg.max_iter {
        let residual = (x.dot(&beta) + b0).mapv(sigmoid) - &target;
        let g0 = residual.sum() / n;
        let g = x.t().dot(&residual) / n + cfg.l2 * &beta;
        grad_norm = g.iter().fold(g0.abs(), |m, v| m.max(v.abs()));
        if grad_norm < cfg.tol {
            converged = true;
            break;
        }
        b0 -= cfg.step * g0;
        beta.scaled_add(-cfg.step, &g);
        iterations = it + 1;
        history.push(penalized_loss(b0, &beta, x, y, cfg.l2));
    }
    let mut fit = LogisticFit {
        intercept: b0,
        coefficients: beta.to_vec(),
        feature_names: feature_names.to_vec(),
        train_accuracy: 0.0,
        iterations,
        converged,
        final_grad_norm: grad_norm,
        loss_history: history,
        config: *cfg,
    };
    fit.train_accuracy = fit.accuracy(x, y)?;
    Ok(fit)
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    fn names(p: usize) -> Vec<String> {
        (0..p).map(|i| format!("x{i}")).collect()
    }

    #[test]
    fn separable_line() {
        let x = array![[-2.0], [-1.5], [-1.0], [-0.5], [0.5], [1.0], [1.5], [2.0]];
        let y = [false, false, false, false, true, true, true, true];
        let fit = logistic_fit(&x, &y, &names(1), &LogisticConfig::default()).unwrap();
        assert_eq!(fit.train_accuracy, 1.0);
        assert!(fit.coefficients[0] > 0.0);
    }

    #[test]
    fn uninformative_features_give_coin_flip() {
        let x = Array2::zeros((6, 2));
        let y = [true, false, true, false, true, false];
        let fit = logistic_fit(&x, &y, &names(2), &LogisticConfig::default()).unwrap();
        assert!(fit.coefficients.iter().all(|b| b.abs() < 1e-12));
        assert!(fit.intercept.abs() < 1e-9);
        assert!(fit
            .predict_proba(&x)
            .unwrap()
            .iter()
            .all(|p| (p - 0.5).abs() < 1e-9));
        assert_eq!(fit.train_accuracy, 0.5);
    }

    #[test]
    fn zero_model_and_hand_sigmoid() {
        let fit = LogisticFit {
            intercept: 0.0,
            coefficients: vec![0.0, 0.0],
            feature_names: names(2),
            train_accuracy: 0.0,
            iterations: 0,
            converged: true,
            final_grad_norm: 0.0,
            loss_history: vec![],
            config: LogisticConfig::default(),
        };
        let p = fit.predict_proba(&array![[3.0, -7.0], [0.1, 0.2]]).unwrap();
        assert_eq!(p, vec![0.5, 0.5]);

        let fit = LogisticFit {
            intercept: -0.3,
            coefficients: vec![1.2, 0.5],
            ..fit
        };
        let p = fit.predict_proba(&array![[0.4, -1.0]]).unwrap()[0];
        let z: f64 = -0.3 + 1.2 * 0.4 + 0.5 * -1.0;
        assert!((p - 1.0 / (1.0 + (-z).exp())).abs() < 1e-12);
        assert!(matches!(
            fit.predict_proba(&array![[1.0]]),
            Err(Error::Config(_))
        ));
    }

    #[test]
    fn monotone_in_positive_coefficient() {
        let x = array![
            [-1.0, 0.3],
            [0.2, -0.4],
            [1.0, 1.0],
            [0.5, 0.0],
            [-0.7, 0.8],
            [0.9, -0.2]
        ];
        let y = [false, false, true, true, false, true];
        let fit = logistic_fit(&x, &y, &names(2), &LogisticConfig::default()).unwrap();
        assert!(fit.coefficients[0] > 0.0);
        let probe = array![[-1.0, 0.1], [0.0, 0.1], [1.0, 0.1]];
        let p = fit.predict_proba(&probe).unwrap();
        assert!(p[0] < p[1] && p[1] < p[2]);
    }

    #[test]
    fn single_class_is_degenerate() {
        let x = array![[1.0], [2.0]];
        assert!(matches!(
            logistic_fit(&x, &[true, true], &names(1), &LogisticConfig::default()),
            Err(Error::DegenerateFit(_))
        ));
    }

    #[test]
    fn loss_is_nonincreasing() {
        let x = array![
            [0.2, -1.1],
            [1.3, 0.4],
            [-0.8, 0.9],
            [0.5, 0.5],
            [-1.2, -0.3],
            [0.9, -0.7],
            [0.0, 1.5],
            [-0.4, -1.4]
        ];
        let y = [true, true, false, true, false, true, false, false];
        let fit = logistic_fit(&x, &y, &names(2), &LogisticConfig::default()).unwrap();
        for w in fit.loss_history.windows(2) {
            assert!(w[1] <= w[0] + 1e-9);
        }
    }
}
