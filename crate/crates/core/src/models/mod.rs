//! Classical estimators for the three analyses and the early-warning model.
//!
//! Estimators take an `n × p` feature matrix. Callers that want
//! standardized inputs fit a [`FeatureScaler`] and keep it next to the fit
//! (see [`Scaled`]), so prediction-time inputs go through the same transform.

mod early_warning;
mod kmeans;
mod linalg;
mod linear;
mod logistic;
mod multinomial;
mod pca;
mod scaler;

pub use early_warning::{
    early_warning_features, early_warning_fit, EarlyWarningFit, RiskScore, EARLY_WARNING_FEATURES,
};
pub use kmeans::{assign, cluster_means, kmeans, KMeansConfig, KMeansFit};
pub use linalg::{solve, symmetric_eigen};
pub use linear::{linear_fit, LinearFit, DEFAULT_RIDGE};
pub use logistic::{log_likelihood, logistic_fit, LogisticConfig, LogisticFit};
pub use multinomial::{
    class_metrics, multinomial_fit, multinomial_loss_and_grad, ClassMetrics, MultinomialConfig,
    MultinomialFit,
};
pub use pca::{pca2, Pca2};
pub use scaler::{FeatureScaler, Scaled};

use ndarray::Array2;

use crate::error::{Error, Result};

/// Builds an `n × p` matrix from row vectors.
pub fn matrix_from_rows(rows: &[Vec<f64>]) -> Result<Array2<f64>> {
    crate::nested::from_rows(rows).map_err(Error::Config)
}

pub(crate) fn check_rows(x: &Array2<f64>, n: usize) -> Result<()> {
    if x.nrows() != n {
        return Err(Error::Config(format!(
            "feature matrix has {} rows but {} targets",
            x.nrows(),
            n
        )));
    }
    if x.iter().any(|v| !v.is_finite()) {
        return Err(Error::Data(
            "feature matrix contains non-finite values".into(),
        ));
    }
    Ok(())
}
