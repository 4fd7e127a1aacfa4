use ndarray::{Array2, ArrayView1, Axis};
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::nested;
use crate::rng::{stream, SimRng, TAG_KMEANS};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KMeansConfig {
    pub restarts: usize,
    pub max_iter: usize,
    /// Converged once assignments are stable and no centroid moved more than this.
    pub tol: f64,
    pub seed: u64,
}

impl Default for KMeansConfig {
    fn default() -> Self {
        Self {
            restarts: 10,
            max_iter: 300,
            tol: 1e-6,
            seed: 42,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KMeansFit {
    pub k: usize,
    #[serde(with = "nested::matrix")]
    pub centroids: Array2<f64>,
    pub assignments: Vec<usize>,
    pub wcss: f64,
    pub iterations: usize,
    pub converged: bool,
    pub sizes: Vec<usize>,
    /// WCSS after each assignment step of the winning restart.
    pub wcss_history: Vec<f64>,
    pub best_restart: usize,
    pub config: KMeansConfig,
}

fn sq_dist(a: ArrayView1<f64>, b: ArrayView1<f64>) -> f64 {
    a.iter().zip(b.iter()).map(|(x, y)| (x - y).powi(2)).sum()
}

/// Nearest centroid per row (lowest index on ties) and the resulting WCSS.
pub fn assign(x: &Array2<f64>, centroids: &Array2<f64>) -> (Vec<usize>, f64) {
    let mut wcss = 0.0;
    let labels = x
        .rows()
        .into_iter()
        .map(|row| {
            let mut best = (0, f64::INFINITY);
            for (c, centroid) in centroids.rows().into_iter().enumerate() {
                let d = sq_dist(row, centroid);
                if d < best.1 {
                    best = (c, d);
                }
            }
            wcss += best.1;
            best.0
        })
        .collect();
    (labels, wcss)
}

fn plus_plus(x: &Array2<f64>, k: usize, rng: &mut SimRng) -> Array2<f64> {
    let n = x.nrows();
    let mut centroids = Array2::zeros((k, x.ncols()));
    centroids.row_mut(0).assign(&x.row(rng.random_range(0..n)));
    let mut d2: Vec<f64> = x
        .rows()
        .into_iter()
        .map(|r| sq_dist(r, centroids.row(0)))
        .collect();
    for c in 1..k {
        let total: f64 = d2.iter().sum();
        let pick = if total > 0.0 {
            let u = rng.random::<f64>() * total;
            let mut cum = 0.0;
            let mut pick = n - 1;
            for (i, &d) in d2.iter().enumerate() {
                cum += d;
                if d > 0.0 && u < cum {
                    pick = i;
                    break;
                }
            }
            pick
        } else {
            rng.random_range(0..n)
        };
        centroids.row_mut(c).assign(&x.row(pick));
        for (i, row) in x.rows().into_iter().enumerate() {
            d2[i] = d2[i].min(sq_dist(row, centroids.row(c)));
        }
    }
    centroids
}

struct Run {
    centroids: Array2<f64>,
    assignments: Vec<usize>,
    wcss: f64,
    iterations: usize,
    converged: bool,
    history: Vec<f64>,
}

fn lloyd(x: &Array2<f64>, mut centroids: Array2<f64>, cfg: &KMeansConfig) -> Run {
    let k = centroids.nrows();
    let (mut labels, mut wcss) = assign(x, &centroids);
    let mut history = vec![wcss];
    let mut iterations = 0;
    let mut converged = false;
    while iterations < cfg.max_iter {
        iterations += 1;
        let mut sums = Array2::<f64>::zeros(centroids.dim());
        let mut counts = vec![0usize; k];
        for (row, &c) in x.rows().into_iter().zip(&labels) {
            sums.row_mut(c).scaled_add(1.0, &row);
            counts[c] += 1;
        }
        let mut movement = 0.0f64;
        for c in 0..k {
            // an emptied cluster keeps its previous centroid
            if counts[c] > 0 {
                let new = sums.row(c).mapv(|v| v / counts[c] as f64);
                movement = movement.max(sq_dist(new.view(), centroids.row(c)).sqrt());
                centroids.row_mut(c).assign(&new);
            }
        }
        let (next, next_wcss) = assign(x, &centroids);
        history.push(next_wcss);
        let stable = next == labels;
        labels = next;
        wcss = next_wcss;
        if stable && movement <= cfg.tol {
            converged = true;
            break;
        }
    }
    Run {
        centroids,
        assignments: labels,
        wcss,
        iterations,
        converged,
        history,
    }
}

/// Lloyd's algorithm from k-means++ seeds, best of `cfg.restarts` by WCSS
/// (ties to the lowest restart). Restart `r` draws from its own stream.
pub fn kmeans(x: &Array2<f64>, k: usize, cfg: &KMeansConfig) -> Result<KMeansFit> {
    if k == 0 {
        return Err(Error::Config("k must be at least 1".into()));
    }
    if x.nrows() < k {
        return Err(Error::Config(format!(
            "{} rows cannot form {k} clusters",
            x.nrows()
        )));
    }
    if cfg.restarts == 0 {
        return Err(Error::Config("at least one restart required".into()));
    }
    if x.iter().any(|v| !v.is_finite()) {
        return Err(Error::Data(
            "feature matrix contains non-finite values".into(),
        ));
    }
    let mut best: Option<(usize, Run)> = None;
    for r in 0..cfg.restarts {
        let mut rng = stream(cfg.seed, TAG_KMEANS, r as u64);
        let run = lloyd(x, plus_plus(x, k, &mut rng), cfg);
        if best.as_ref().is_none_or(|(_, b)| run.wcss < b.wcss) {
            best = Some((r, run));
        }
    }
    let (best_restart, run) = best.expect("restarts > 0");
    let mut sizes = vec![0; k];
    run.assignments.iter().for_each(|&c| sizes[c] += 1);
    Ok(KMeansFit {
        k,
        centroids: run.centroids,
        assignments: run.assignments,
        wcss: run.wcss,
        iterations: run.iterations,
        converged: run.converged,
        sizes,
        wcss_history: run.history,
        best_restart,
        config: *cfg,
    })
}

/// Centroid of each cluster under `labels` (zero rows for empty clusters).
pub fn cluster_means(x: &Array2<f64>, labels: &[usize], k: usize) -> Array2<f64> {
    let mut out = Array2::zeros((k, x.ncols()));
    for c in 0..k {
        let rows: Vec<usize> = (0..labels.len()).filter(|&i| labels[i] == c).collect();
        if !rows.is_empty() {
            out.row_mut(c).assign(
                &x.select(Axis(0), &rows)
                    .mean_axis(Axis(0))
                    .expect("nonempty"),
            );
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::matrix_from_rows;
    use ndarray::array;
    use rand::SeedableRng;

    fn blobs(seed: u64) -> (Array2<f64>, Vec<usize>) {
        let mut rng = SimRng::seed_from_u64(seed);
        let mut rows = Vec::new();
        let mut truth = Vec::new();
        for (c, centre) in [[-10.0, 0.0, 3.0], [10.0, 2.0, -3.0]].iter().enumerate() {
            for _ in 0..25 {
                rows.push(
                    centre
                        .iter()
                        .map(|m| m + rng.random_range(-1.0..1.0))
                        .collect(),
                );
                truth.push(c);
            }
        }
        (matrix_from_rows(&rows).unwrap(), truth)
    }

    #[test]
    fn two_points_two_clusters() {
        let x = array![[0.0, 1.0], [5.0, -2.0]];
        let fit = kmeans(&x, 2, &KMeansConfig::default()).unwrap();
        assert_eq!(fit.wcss, 0.0);
        assert_ne!(fit.assignments[0], fit.assignments[1]);
        assert_eq!(fit.sizes, vec![1, 1]);
    }

    #[test]
    fn separated_blobs_recovered() {
        let (x, truth) = blobs(4);
        let fit = kmeans(&x, 2, &KMeansConfig::default()).unwrap();
        let flip = fit.assignments[0] != truth[0];
        for (a, t) in fit.assignments.iter().zip(&truth) {
            assert_eq!(*a, if flip { 1 - t } else { *t });
        }
    }

    #[test]
    fn single_cluster_is_column_mean() {
        let (x, _) = blobs(5);
        let fit = kmeans(&x, 1, &KMeansConfig::default()).unwrap();
        let n = x.nrows() as f64;
        let mut total = 0.0;
        for j in 0..x.ncols() {
            let col: Vec<f64> = x.column(j).to_vec();
            let mean = col.iter().sum::<f64>() / n;
            assert!((fit.centroids[[0, j]] - mean).abs() < 1e-12);
            // population variance times n
            total += col.iter().map(|v| (v - mean).powi(2)).sum::<f64>();
        }
        assert!((fit.wcss - total).abs() < 1e-9 * total);
    }

    #[test]
    fn wcss_monotone_and_fixed_point() {
        let (x, _) = blobs(6);
        for k in 2..6 {
            let fit = kmeans(&x, k, &KMeansConfig::default()).unwrap();
            for w in fit.wcss_history.windows(2) {
                assert!(w[1] <= w[0] + 1e-9);
            }
            let (again, wcss) = assign(&x, &fit.centroids);
            assert_eq!(again, fit.assignments);
            assert!((wcss - fit.wcss).abs() < 1e-12);
            let means = cluster_means(&x, &fit.assignments, k);
            for c in 0..k {
                if fit.sizes[c] > 0 {
                    for j in 0..x.ncols() {
                        assert!((means[[c, j]] - fit.centroids[[c, j]]).abs() < 1e-12);
                    }
                }
            }
        }
    }

    #[test]
    fn deterministic_and_guards() {
        let (x, _) = blobs(7);
        let cfg = KMeansConfig::default();
        assert_eq!(kmeans(&x, 3, &cfg).unwrap(), kmeans(&x, 3, &cfg).unwrap());
        let tiny = array![[1.0], [2.0]];
        assert!(matches!(kmeans(&tiny, 3, &cfg), Err(Error::Config(_))));
    }

    #[test]
    fn duplicate_points_do_not_break_seeding() {
        let x = Array2::<f64>::ones((6, 2));
        let fit = kmeans(&x, 3, &KMeansConfig::default()).unwrap();
        assert_eq!(fit.wcss, 0.0);
        assert_eq!(fit.sizes.iter().sum::<usize>(), 6);
    }
}
