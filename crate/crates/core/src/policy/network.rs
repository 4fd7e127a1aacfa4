//! Two-hidden-layer ReLU network: forward pass, batched loss and backprop.

use ndarray::{Array1, Array2, ArrayView2, Axis};
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::domain::{Action, STATE_DIM};
use crate::error::{Error, Result};
use crate::nested;
use crate::rng::SimRng;

/// Weights and biases. Weight matrices are `out × in`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Params {
    #[serde(rename = "W1", with = "nested::matrix")]
    pub w1: Array2<f64>,
    #[serde(with = "nested::vector")]
    pub b1: Array1<f64>,
    #[serde(rename = "W2", with = "nested::matrix")]
    pub w2: Array2<f64>,
    #[serde(with = "nested::vector")]
    pub b2: Array1<f64>,
    #[serde(rename = "W3", with = "nested::matrix")]
    pub w3: Array2<f64>,
    #[serde(with = "nested::vector")]
    pub b3: Array1<f64>,
}

pub const PARAM_NAMES: [&str; 6] = ["W1", "b1", "W2", "b2", "W3", "b3"];

impl Params {
    pub fn zeros(input: usize, h1: usize, h2: usize, output: usize) -> Self {
        Self {
            w1: Array2::zeros((h1, input)),
            b1: Array1::zeros(h1),
            w2: Array2::zeros((h2, h1)),
            b2: Array1::zeros(h2),
            w3: Array2::zeros((output, h2)),
            b3: Array1::zeros(output),
        }
    }

    /// He-uniform weights, `U(-sqrt(6 / fan_in), sqrt(6 / fan_in))`; zero biases.
    pub fn he_uniform(h1: usize, h2: usize, rng: &mut SimRng) -> Self {
        let mut p = Self::zeros(STATE_DIM, h1, h2, Action::COUNT);
        for w in [&mut p.w1, &mut p.w2, &mut p.w3] {
            let bound = (6.0 / w.ncols() as f64).sqrt();
            w.iter_mut()
                .for_each(|v| *v = rng.random_range(-bound..bound));
        }
        p
    }

    pub fn zeros_like(&self) -> Self {
        Self::zeros(
            self.w1.ncols(),
            self.w1.nrows(),
            self.w2.nrows(),
            self.w3.nrows(),
        )
    }

    pub fn hidden_sizes(&self) -> (usize, usize) {
        (self.w1.nrows(), self.w2.nrows())
    }

    /// Flat views of every tensor in [`PARAM_NAMES`] order.
    pub fn tensors(&self) -> [&[f64]; 6] {
        [
            self.w1.as_slice().expect("standard layout"),
            self.b1.as_slice().expect("standard layout"),
            self.w2.as_slice().expect("standard layout"),
            self.b2.as_slice().expect("standard layout"),
            self.w3.as_slice().expect("standard layout"),
            self.b3.as_slice().expect("standard layout"),
        ]
    }

    pub fn tensors_mut(&mut self) -> [&mut [f64]; 6] {
        [
            self.w1.as_slice_mut().expect("standard layout"),
            self.b1.as_slice_mut().expect("standard layout"),
            self.w2.as_slice_mut().expect("standard layout"),
            self.b2.as_slice_mut().expect("standard layout"),
            self.w3.as_slice_mut().expect("standard layout"),
            self.b3.as_slice_mut().expect("standard layout"),
        ]
    }

    pub fn check_shapes(&self) -> Result<()> {
        let (h1, h2) = self.hidden_sizes();
        let ok = self.w1.ncols() == STATE_DIM
            && self.b1.len() == h1
            && self.w2.ncols() == h1
            && self.b2.len() == h2
            && self.w3.ncols() == h2
            && self.w3.nrows() == Action::COUNT
            && self.b3.len() == Action::COUNT;
        if ok {
            Ok(())
        } else {
            Err(Error::Config(format!(
                "inconsistent network shapes: W1 {:?}, W2 {:?}, W3 {:?}",
                self.w1.dim(),
                self.w2.dim(),
                self.w3.dim()
            )))
        }
    }
}

fn relu(v: f64) -> f64 {
    v.max(0.0)
}

/// Hidden activations and logits for one input.
pub struct Activations {
    pub h1: Array1<f64>,
    pub h2: Array1<f64>,
    pub logits: Array1<f64>,
}

pub fn forward_one(p: &Params, x: &[f64]) -> Result<Activations> {
    if x.len() != p.w1.ncols() {
        return Err(Error::Config(format!(
            "input has {} features, network expects {}",
            x.len(),
            p.w1.ncols()
        )));
    }
    let x = ndarray::ArrayView1::from(x);
    let h1 = (p.w1.dot(&x) + &p.b1).mapv(relu);
    let h2 = (p.w2.dot(&h1) + &p.b2).mapv(relu);
    let logits = p.w3.dot(&h2) + &p.b3;
    Ok(Activations { h1, h2, logits })
}

/// Batched logits, one row per input row.
pub fn forward_batch(p: &Params, x: ArrayView2<f64>) -> Array2<f64> {
    let h1 = (x.dot(&p.w1.t()) + &p.b1).mapv(relu);
    let h2 = (h1.dot(&p.w2.t()) + &p.b2).mapv(relu);
    h2.dot(&p.w3.t()) + &p.b3
}

/// Row-wise softmax with max subtraction.
pub fn softmax_rows(logits: &Array2<f64>) -> Array2<f64> {
    let mut out = logits.clone();
    for mut row in out.rows_mut() {
        let max = row.fold(f64::NEG_INFINITY, |a, &b| a.max(b));
        row.mapv_inplace(|v| (v - max).exp());
        let sum = row.sum();
        row.mapv_inplace(|v| v / sum);
    }
    out
}

/// Mean of `-log softmax(logits)[label]` over the batch.
pub fn cross_entropy(logits: &Array2<f64>, labels: &[usize]) -> f64 {
    assert_eq!(logits.nrows(), labels.len(), "one label per logit row");
    if labels.is_empty() {
        return 0.0;
    }
    let total: f64 = logits
        .rows()
        .into_iter()
        .zip(labels)
        .map(|(row, &y)| {
            let max = row.fold(f64::NEG_INFINITY, |a, &b| a.max(b));
            let lse = max + row.iter().map(|v| (v - max).exp()).sum::<f64>().ln();
            lse - row[y]
        })
        .sum();
    total / labels.len() as f64
}

/// Mean cross-entropy over the batch and its gradient for every parameter.
pub fn loss_and_grad(p: &Params, x: ArrayView2<f64>, labels: &[usize]) -> (f64, Params) {
    let n = x.nrows() as f64;
    let z1 = x.dot(&p.w1.t()) + &p.b1;
    let h1 = z1.mapv(relu);
    let z2 = h1.dot(&p.w2.t()) + &p.b2;
    let h2 = z2.mapv(relu);
    let logits = h2.dot(&p.w3.t()) + &p.b3;
    let loss = cross_entropy(&logits, labels);

    let mut d3 = softmax_rows(&logits);
    for (mut row, &y) in d3.rows_mut().into_iter().zip(labels) {
        row[y] -= 1.0;
    }
    d3.mapv_inplace(|v| v / n);

    let gw3 = d3.t().dot(&h2);
    let gb3 = d3.sum_axis(Axis(0));
    let mut d2 = d3.dot(&p.w3);
    ndarray::Zip::from(&mut d2).and(&z2).for_each(|g, &z| {
        if z <= 0.0 {
            *g = 0.0;
        }
    });
    let gw2 = d2.t().dot(&h1);
    let gb2 = d2.sum_axis(Axis(0));
    let mut d1 = d2.dot(&p.w2);
    ndarray::Zip::from(&mut d1).and(&z1).for_each(|g, &z| {
        if z <= 0.0 {
            *g = 0.0;
        }
    });
    let gw1 = d1.t().dot(&x);
    let gb1 = d1.sum_axis(Axis(0));

    let grad = Params {
        w1: gw1,
        b1: gb1,
        w2: gw2,
        b2: gb2,
        w3: gw3,
        b3: gb3,
    };
    (loss, grad)
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;
    use rand::SeedableRng;

    #[test]
    fn zero_network_gives_zero_logits() {
        let p = Params::zeros(STATE_DIM, 4, 3, 6);
        let a = forward_one(&p, &[0.7; STATE_DIM]).unwrap();
        assert!(a.logits.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn relu_layers_are_nonnegative() {
        let mut rng = SimRng::seed_from_u64(3);
        let mut p = Params::he_uniform(16, 8, &mut rng);
        p.b1.iter_mut()
            .for_each(|b| *b = rng.random_range(-1.0..1.0));
        for _ in 0..100 {
            let x: Vec<f64> = (0..STATE_DIM)
                .map(|_| rng.random_range(-3.0..3.0))
                .collect();
            let a = forward_one(&p, &x).unwrap();
            assert!(a.h1.iter().chain(a.h2.iter()).all(|&v| v >= 0.0));
        }
        p.w1.fill(0.0);
        let a = forward_one(&p, &[5.0; STATE_DIM]).unwrap();
        assert!(a.h1.iter().all(|&v| v >= 0.0));
    }

    #[test]
    fn hand_computed_tiny_network() {
        // 14 inputs, h1 = h2 = 2, 6 outputs; only the first two inputs are used.
        let mut p = Params::zeros(STATE_DIM, 2, 2, 6);
        p.w1[[0, 0]] = 1.0;
        p.w1[[0, 1]] = -2.0;
        p.w1[[1, 0]] = 0.5;
        p.w1[[1, 1]] = 0.25;
        p.b1 = array![0.1, -0.2];
        p.w2 = array![[1.0, -1.0], [2.0, 0.5]];
        p.b2 = array![0.0, -0.3];
        for k in 0..6 {
            p.w3[[k, 0]] = k as f64;
            p.w3[[k, 1]] = 1.0 - k as f64;
            p.b3[k] = 0.01 * k as f64;
        }
        let mut x = [0.0; STATE_DIM];
        x[0] = 0.8;
        x[1] = 0.3;
        // h1 = relu([0.8 - 0.6 + 0.1, 0.4 + 0.075 - 0.2]) = [0.3, 0.275]
        // h2 = relu([0.3 - 0.275, 0.6 + 0.1375 - 0.3]) = [0.025, 0.4375]
        // z_k = k*0.025 + (1-k)*0.4375 + 0.01k
        let a = forward_one(&p, &x).unwrap();
        for k in 0..6 {
            let kf = k as f64;
            let expect = kf * 0.025 + (1.0 - kf) * 0.4375 + 0.01 * kf;
            assert!(
                (a.logits[k] - expect).abs() < 1e-12,
                "{k}: {} vs {expect}",
                a.logits[k]
            );
        }
    }

    #[test]
    fn wrong_input_width_is_config_error() {
        let p = Params::zeros(STATE_DIM, 2, 2, 6);
        assert!(matches!(forward_one(&p, &[0.0; 3]), Err(Error::Config(_))));
    }

    #[test]
    fn cross_entropy_values() {
        let uniform = Array2::<f64>::zeros((3, 6));
        assert!((cross_entropy(&uniform, &[0, 3, 5]) - 6f64.ln()).abs() < 1e-12);

        let mut confident = Array2::<f64>::zeros((1, 6));
        confident[[0, 2]] = 800.0;
        let l = cross_entropy(&confident, &[2]);
        assert!((0.0..1e-12).contains(&l));

        let a = array![[0.3, -1.0, 2.0, 0.0, 0.5, 0.1]];
        let b = array![[1.0, 1.0, -2.0, 0.4, 0.0, 3.0]];
        let both = ndarray::concatenate![Axis(0), a, b];
        let mean = (cross_entropy(&a, &[1]) + cross_entropy(&b, &[4])) / 2.0;
        assert!((cross_entropy(&both, &[1, 4]) - mean).abs() < 1e-12);
    }
}
