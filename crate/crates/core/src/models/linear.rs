use ndarray::{Array1, Array2, Axis};
use serde::{Deserialize, Serialize};

use super::{check_rows, linalg};
use crate::error::{Error, Result};

pub const DEFAULT_RIDGE: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinearFit {
    pub intercept: f64,
    pub coefficients: Vec<f64>,
    pub feature_names: Vec<String>,
    pub rmse: f64,
    pub r2: f64,
    /// False when the target had zero variance and `r2` was set to 0.
    pub r2_defined: bool,
    pub ridge: f64,
}

impl LinearFit {
    pub fn predict(&self, x: &Array2<f64>) -> Result<Vec<f64>> {
        if x.ncols() != self.coefficients.len() {
            return Err(Error::Config(format!(
                "model has {} features, input has {}",
                self.coefficients.len(),
                x.ncols()
            )));
        }
        Ok((x.dot(&Array1::from(self.coefficients.clone())) + self.intercept).to_vec())
    }
}

/// `(rmse, r2, r2_defined)` of predictions against targets.
pub fn regression_metrics(y: &[f64], pred: &[f64]) -> (f64, f64, bool) {
    let n = y.len() as f64;
    let sse: f64 = y.iter().zip(pred).map(|(a, b)| (a - b).powi(2)).sum();
    let mean = y.iter().sum::<f64>() / n;
    let sst: f64 = y.iter().map(|v| (v - mean).powi(2)).sum();
    let rmse = (sse / n).sqrt();
    if sst > 0.0 {
        (rmse, 1.0 - sse / sst, true)
    } else {
        (rmse, 0.0, false)
    }
}

/// Ridge least squares with an unpenalized intercept, solved through the
/// centered normal equations `(Xc' Xc + ridge I) beta = Xc' yc`.
pub fn linear_fit(
    x: &Array2<f64>,
    y: &[f64],
    feature_names: &[String],
    ridge: f64,
) -> Result<LinearFit> {
    check_rows(x, y.len())?;
    if feature_names.len() != x.ncols() {
        return Err(Error::Config("one name per feature required".into()));
    }
    if !(ridge >= 0.0) {
        return Err(Error::Config(format!(
            "ridge strength must be >= 0, got {ridge}"
        )));
    }
    let n = x.nrows();
    let p = x.ncols();
    if n < 2 {
        return Err(Error::InsufficientData(format!(
            "linear fit needs at least 2 rows, got {n}"
        )));
    }
    if ridge == 0.0 && n < p + 1 {
        return Err(Error::RankDeficient(format!(
            "{n} rows cannot determine {} parameters without ridge",
            p + 1
        )));
    }
    let x_mean = x.mean_axis(Axis(0)).expect("n > 0");
    let y_arr = Array1::from(y.to_vec());
    let y_mean = y_arr.mean().expect("n > 0");
    let xc = x - &x_mean;
    let yc = &y_arr - y_mean;
    let mut gram = xc.t().dot(&xc);
    for i in 0..p {
        gram[[i, i]] += ridge;
    }
    let rhs = xc.t().dot(&yc);
    let beta = if p == 0 {
        Array1::zeros(0)
    } else {
        linalg::solve(&gram, &rhs)?
    };
    let intercept = y_mean - x_mean.dot(&beta);

    let mut fit = LinearFit {
        intercept,
        coefficients: beta.to_vec(),
        feature_names: feature_names.to_vec(),
        rmse: 0.0,
        r2: 0.0,
        r2_defined: false,
        ridge,
    };
    let pred = fit.predict(x)?;
    (fit.rmse, fit.r2, fit.r2_defined) = regression_metrics(y, &pred);
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
    fn noiseless_line() {
        let x = array![[0.0], [1.0], [2.0], [3.5], [-1.0]];
        let y: Vec<f64> = x.column(0).iter().map(|v| 2.0 * v + 1.0).collect();
        let fit = linear_fit(&x, &y, &names(1), 0.0).unwrap();
        assert!((fit.intercept - 1.0).abs() < 1e-12);
        assert!((fit.coefficients[0] - 2.0).abs() < 1e-12);
        assert!(fit.rmse < 1e-12);
        assert!((fit.r2 - 1.0).abs() < 1e-12);
    }

    #[test]
    fn constant_target_has_zero_r2() {
        let x = array![[0.0], [1.0], [2.0]];
        let fit = linear_fit(&x, &[3.0, 3.0, 3.0], &names(1), 0.0).unwrap();
        assert_eq!(fit.r2, 0.0);
        assert!(!fit.r2_defined);
    }

    #[test]
    fn too_few_rows_without_ridge() {
        let x = array![[0.0, 1.0], [1.0, 0.0]];
        assert!(matches!(
            linear_fit(&x, &[1.0, 2.0], &names(2), 0.0),
            Err(Error::RankDeficient(_))
        ));
        assert!(linear_fit(&x, &[1.0, 2.0], &names(2), 1e-3).is_ok());
        let dup = array![[0.0, 0.0], [1.0, 1.0], [2.0, 2.0], [3.0, 3.0]];
        assert!(matches!(
            linear_fit(&dup, &[0.0, 1.0, 2.0, 4.0], &names(2), 0.0),
            Err(Error::RankDeficient(_))
        ));
    }

    #[test]
    fn residuals_orthogonal_to_features() {
        let x = array![
            [0.3, 1.2],
            [1.1, -0.4],
            [2.2, 0.8],
            [-0.7, 0.1],
            [1.6, 1.9],
            [0.2, -1.3]
        ];
        let y = [1.0, 0.4, 2.5, -0.3, 2.9, -0.8];
        let fit = linear_fit(&x, &y, &names(2), 0.0).unwrap();
        let pred = fit.predict(&x).unwrap();
        let resid: Vec<f64> = y.iter().zip(&pred).map(|(a, b)| a - b).collect();
        for col in x.columns() {
            let dot: f64 = col.iter().zip(&resid).map(|(a, b)| a * b).sum();
            assert!(dot.abs() < 1e-8);
        }
        assert!(resid.iter().sum::<f64>().abs() < 1e-8);
    }
}
