use ndarray::{Array2, Axis};
use serde::{Deserialize, Serialize};

use super::linalg::symmetric_eigen;
use crate::error::{Error, Result};
use crate::nested;

/// Top-two principal components of a (standardized) matrix.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Pca2 {
    /// `2 × p`, one unit-norm component per row.
    #[serde(with = "nested::matrix")]
    pub components: Array2<f64>,
    /// Covariance eigenvalues for the two components (sample, `n - 1`).
    pub explained_variance: [f64; 2],
    pub explained_ratio: [f64; 2],
    pub means: Vec<f64>,
    /// `n × 2` scores of the centered rows.
    #[serde(with = "nested::matrix")]
    pub projection: Array2<f64>,
}

impl Pca2 {
    pub fn transform(&self, x: &Array2<f64>) -> Result<Array2<f64>> {
        if x.ncols() != self.means.len() {
            return Err(Error::Config(format!(
                "PCA fitted on {} columns, got {}",
                self.means.len(),
                x.ncols()
            )));
        }
        let mut c = x.clone();
        for (j, mut col) in c.columns_mut().into_iter().enumerate() {
            col -= self.means[j];
        }
        Ok(c.dot(&self.components.t()))
    }
}

/// Eigen-decomposition of the sample covariance. Each component's sign is
/// chosen so that its largest-magnitude loading is positive.
pub fn pca2(x: &Array2<f64>) -> Result<Pca2> {
    let (n, p) = x.dim();
    if n < 3 {
        return Err(Error::InsufficientData(format!(
            "PCA needs at least 3 rows, got {n}"
        )));
    }
    if p < 2 {
        return Err(Error::Config(
            "PCA projection needs at least 2 columns".into(),
        ));
    }
    if x.iter().any(|v| !v.is_finite()) {
        return Err(Error::Data(
            "feature matrix contains non-finite values".into(),
        ));
    }
    let means = x.mean_axis(Axis(0)).expect("n > 0");
    let centered = x - &means;
    let cov = centered.t().dot(&centered) / (n as f64 - 1.0);
    let (values, vectors) = symmetric_eigen(&cov)?;
    let mut components = Array2::zeros((2, p));
    for c in 0..2 {
        let mut v = vectors.column(c).to_owned();
        let lead = v
            .iter()
            .fold(0.0f64, |m, &a| if a.abs() > m.abs() { a } else { m });
        if lead < 0.0 {
            v.mapv_inplace(|a| -a);
        }
        components.row_mut(c).assign(&v);
    }
    let total: f64 = values.iter().map(|v| v.max(0.0)).sum();
    let ev = [values[0].max(0.0), values[1].max(0.0)];
    let ratio = if total > 0.0 {
        [ev[0] / total, ev[1] / total]
    } else {
        [0.0, 0.0]
    };
    let projection = centered.dot(&components.t());
    Ok(Pca2 {
        components,
        explained_variance: ev,
        explained_ratio: ratio,
        means: means.to_vec(),
        projection,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn points_on_a_line_have_one_component() {
        let x = Array2::from_shape_fn((6, 2), |(i, j)| {
            if j == 0 {
                i as f64
            } else {
                3.0 * i as f64 - 1.0
            }
        });
        let fit = pca2(&x).unwrap();
        assert!((fit.explained_ratio[0] - 1.0).abs() < 1e-9);
        assert!(fit.explained_ratio[1].abs() < 1e-9);
    }

    #[test]
    fn planar_data_distances_preserved() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let (u, v) = (array![1.0, 2.0, 0.0, -1.0], array![0.0, 1.0, 1.0, 1.0]);
        let rows: Vec<_> = (0..8)
            .map(|_| {
                let (a, b): (f64, f64) = (rng.random_range(-2.0..2.0), rng.random_range(-2.0..2.0));
                &u * a + &v * b
            })
            .collect();
        let x = Array2::from_shape_fn((8, 4), |(i, j)| rows[i][j]);
        let fit = pca2(&x).unwrap();
        for i in 0..8 {
            for j in 0..8 {
                let d_orig = (&x.row(i) - &x.row(j)).mapv(|a| a * a).sum().sqrt();
                let d_proj = (&fit.projection.row(i) - &fit.projection.row(j))
                    .mapv(|a| a * a)
                    .sum()
                    .sqrt();
                assert!((d_orig - d_proj).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn components_orthonormal_with_sign_convention() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let x = Array2::from_shape_fn((30, 5), |(_, j)| {
            rng.random_range(-1.0..1.0) * (j + 1) as f64
        });
        let fit = pca2(&x).unwrap();
        let c = &fit.components;
        assert!((c.row(0).dot(&c.row(0)) - 1.0).abs() < 1e-10);
        assert!((c.row(1).dot(&c.row(1)) - 1.0).abs() < 1e-10);
        assert!(c.row(0).dot(&c.row(1)).abs() < 1e-10);
        for row in c.rows() {
            let lead = row
                .iter()
                .fold(0.0f64, |m, &a| if a.abs() > m.abs() { a } else { m });
            assert!(lead > 0.0);
        }
        assert!(fit.explained_variance[0] >= fit.explained_variance[1]);
        let again = fit.transform(&x).unwrap();
        assert!((again - &fit.projection).iter().all(|d| d.abs() < 1e-12));
    }

    #[test]
    fn too_few_rows() {
        assert!(matches!(
            pca2(&array![[1.0, 2.0], [3.0, 4.0]]),
            Err(Error::InsufficientData(_))
        ));
    }
}
