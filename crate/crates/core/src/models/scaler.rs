use ndarray::{Array2, Axis};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Column standardizer for estimator inputs: `(x - mean) / sd` with the
/// sample standard deviation; zero-spread columns keep `sd = 1`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureScaler {
    pub means: Vec<f64>,
    pub sds: Vec<f64>,
}

impl FeatureScaler {
    pub fn fit(x: &Array2<f64>) -> Result<Self> {
        let n = x.nrows();
        if n == 0 {
            return Err(Error::InsufficientData(
                "cannot standardize an empty matrix".into(),
            ));
        }
        let means: Vec<f64> = x.mean_axis(Axis(0)).expect("n > 0").to_vec();
        let sds = x
            .columns()
            .into_iter()
            .zip(&means)
            .map(|(c, mu)| {
                if n < 2 {
                    return 1.0;
                }
                let var = c.iter().map(|v| (v - mu).powi(2)).sum::<f64>() / (n as f64 - 1.0);
                let sd = var.sqrt();
                if sd > 1e-12 * mu.abs().max(1.0) {
                    sd
                } else {
                    1.0
                }
            })
            .collect();
        Ok(Self { means, sds })
    }

    pub fn dim(&self) -> usize {
        self.means.len()
    }

    pub fn transform(&self, x: &Array2<f64>) -> Result<Array2<f64>> {
        if x.ncols() != self.dim() {
            return Err(Error::Config(format!(
                "scaler fitted on {} columns, got {}",
                self.dim(),
                x.ncols()
            )));
        }
        let mut out = x.clone();
        for (j, mut col) in out.columns_mut().into_iter().enumerate() {
            let (mu, sd) = (self.means[j], self.sds[j]);
            col.mapv_inplace(|v| (v - mu) / sd);
        }
        Ok(out)
    }

    pub fn fit_transform(x: &Array2<f64>) -> Result<(Self, Array2<f64>)> {
        let s = Self::fit(x)?;
        let z = s.transform(x)?;
        Ok((s, z))
    }
}

/// A fitted model together with the scaler its inputs went through.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Scaled<M> {
    pub scaler: FeatureScaler,
    pub model: M,
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    #[test]
    fn standardizes_columns_and_handles_constants() {
        let x = array![[1.0, 5.0], [2.0, 5.0], [3.0, 5.0], [6.0, 5.0]];
        let (s, z) = FeatureScaler::fit_transform(&x).unwrap();
        assert_eq!(s.sds[1], 1.0);
        let col0 = z.column(0);
        let mean = col0.sum() / 4.0;
        let var = col0.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / 3.0;
        assert!(mean.abs() < 1e-12);
        assert!((var - 1.0).abs() < 1e-12);
        assert!(z.column(1).iter().all(|&v| v == 0.0));
        assert!(s.transform(&array![[1.0]]).is_err());
    }
}
