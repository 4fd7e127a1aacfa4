use serde::{Deserialize, Serialize};

use crate::domain::{LearnerStateRaw, NUM_NUMERIC};
use crate::error::{Error, Result};

/// Per-column mean / sample standard deviation over the 8 numeric state
/// features. Columns with no spread get `sd = 1`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Standardizer {
    pub means: Vec<f64>,
    pub sds: Vec<f64>,
}

/// Spread below this (relative to the column scale) counts as zero variance.
const ZERO_VARIANCE_REL: f64 = 1e-12;

impl Standardizer {
    pub fn identity() -> Self {
        Self {
            means: vec![0.0; NUM_NUMERIC],
            sds: vec![1.0; NUM_NUMERIC],
        }
    }

    pub fn fit(rows: &[LearnerStateRaw]) -> Result<Self> {
        if rows.len() < 2 {
            return Err(Error::InsufficientData(format!(
                "standardizer needs at least 2 rows, got {}",
                rows.len()
            )));
        }
        let n = rows.len() as f64;
        let mut means = vec![0.0; NUM_NUMERIC];
        for r in rows {
            for (acc, v) in means.iter_mut().zip(r.numeric()) {
                *acc += v;
            }
        }
        means.iter_mut().for_each(|m| *m /= n);
        let mut sds = vec![0.0; NUM_NUMERIC];
        for r in rows {
            for ((acc, v), mu) in sds.iter_mut().zip(r.numeric()).zip(&means) {
                *acc += (v - mu).powi(2);
            }
        }
        for (sd, mu) in sds.iter_mut().zip(&means) {
            *sd = (*sd / (n - 1.0)).sqrt();
            if !(*sd > ZERO_VARIANCE_REL * mu.abs().max(1.0)) {
                *sd = 1.0;
            }
        }
        Ok(Self { means, sds })
    }

    pub fn transform(&self, x: &[f64; NUM_NUMERIC]) -> Result<[f64; NUM_NUMERIC]> {
        if self.means.len() != NUM_NUMERIC || self.sds.len() != NUM_NUMERIC {
            return Err(Error::Config(format!(
                "standardizer has {}/{} columns, expected {NUM_NUMERIC}",
                self.means.len(),
                self.sds.len()
            )));
        }
        let mut out = [0.0; NUM_NUMERIC];
        for (i, o) in out.iter_mut().enumerate() {
            *o = (x[i] - self.means[i]) / self.sds[i];
        }
        Ok(out)
    }
}

/// Same as [`Standardizer::fit`].
pub fn fit_standardizer(rows: &[LearnerStateRaw]) -> Result<Standardizer> {
    Standardizer::fit(rows)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domain::QuestionType;

    fn row(pk: f64, rt: f64, h: bool) -> LearnerStateRaw {
        LearnerStateRaw::new(pk, 0.2, 0.3, 0.4, rt, 2, h, 3, QuestionType::Concept).unwrap()
    }

    #[test]
    fn identical_rows_get_unit_sd_and_zero_output() {
        let rows = vec![row(0.1, 12.0, true); 5];
        let s = Standardizer::fit(&rows).unwrap();
        assert!(s.sds.iter().all(|&v| v == 1.0));
        let z = s.transform(&rows[0].numeric()).unwrap();
        assert!(z.iter().all(|v| v.abs() < 1e-12), "{z:?}");
    }

    #[test]
    fn two_point_column() {
        let rows = vec![row(0.0, 10.0, false), row(1.0, 10.0, true)];
        let s = Standardizer::fit(&rows).unwrap();
        // brute force: mean 0.5; sample variance ((0-0.5)^2 + (1-0.5)^2) / (2-1) = 0.5
        let sd = (((0.0f64 - 0.5).powi(2) + (1.0f64 - 0.5).powi(2)) / 1.0).sqrt();
        assert_eq!(s.means[0], 0.5);
        assert!((s.sds[0] - sd).abs() < 1e-15);
        assert!((s.sds[6] - sd).abs() < 1e-15);
    }

    #[test]
    fn transformed_columns_are_standard() {
        let rows: Vec<_> = (0..50)
            .map(|i| row(f64::from(i) / 49.0, 5.0 + f64::from(i * i % 17), i % 3 == 0))
            .collect();
        let s = Standardizer::fit(&rows).unwrap();
        let z: Vec<_> = rows
            .iter()
            .map(|r| s.transform(&r.numeric()).unwrap())
            .collect();
        for col in [0, 4, 6] {
            let mean = z.iter().map(|v| v[col]).sum::<f64>() / 50.0;
            let var = z.iter().map(|v| (v[col] - mean).powi(2)).sum::<f64>() / 49.0;
            assert!(mean.abs() < 1e-9);
            assert!((var.sqrt() - 1.0).abs() < 1e-9);
        }
    }

    #[test]
    fn too_few_rows() {
        assert!(matches!(
            Standardizer::fit(&[row(0.1, 5.0, false)]),
            Err(Error::InsufficientData(_))
        ));
    }
}
