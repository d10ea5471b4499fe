//! Fully connected ReLU network with a sigmoid output, trained on binary
//! cross-entropy with Adam.

use ndarray::{Array1, Array2, ArrayView2, Axis};
use rand::seq::SliceRandom;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::sigmoid;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct MlpParams {
    pub hidden: Vec<usize>,
    pub learning_rate: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
    pub batch_size: usize,
    pub epochs: usize,
}

impl Default for MlpParams {
    fn default() -> Self {
        Self {
            hidden: vec![32, 32, 32],
            learning_rate: 1e-3,
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
            batch_size: 16,
            epochs: 50,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Dense {
    /// `fan_in × fan_out`
    pub weights: Array2<f64>,
    pub bias: Array1<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Mlp {
    pub layers: Vec<Dense>,
}

struct Moments {
    m_w: Array2<f64>,
    v_w: Array2<f64>,
    m_b: Array1<f64>,
    v_b: Array1<f64>,
}

fn glorot(fan_in: usize, fan_out: usize, rng: &mut ChaCha8Rng) -> Array2<f64> {
    let limit = (6.0 / (fan_in + fan_out) as f64).sqrt();
    Array2::from_shape_simple_fn((fan_in, fan_out), || rng.random_range(-limit..limit))
}

impl Mlp {
    pub fn fit(x: ArrayView2<'_, f64>, y: &[u8], params: &MlpParams, rng: &mut ChaCha8Rng) -> Self {
        let mut sizes = vec![x.ncols()];
        sizes.extend(&params.hidden);
        sizes.push(1);
        let mut layers: Vec<Dense> = sizes
            .windows(2)
            .map(|w| Dense {
                weights: glorot(w[0], w[1], rng),
                bias: Array1::zeros(w[1]),
            })
            .collect();
        let mut moments: Vec<Moments> = layers
            .iter()
            .map(|l| Moments {
                m_w: Array2::zeros(l.weights.raw_dim()),
                v_w: Array2::zeros(l.weights.raw_dim()),
                m_b: Array1::zeros(l.bias.len()),
                v_b: Array1::zeros(l.bias.len()),
            })
            .collect();

        let n = y.len();
        let batch = params.batch_size.max(1);
        let mut order: Vec<usize> = (0..n).collect();
        let mut step = 0i32;
        for _ in 0..params.epochs {
            order.shuffle(rng);
            for chunk in order.chunks(batch) {
                step += 1;
                let xb = x.select(Axis(0), chunk);
                let yb: Array1<f64> = chunk.iter().map(|&i| f64::from(y[i])).collect();
                let grads = backprop(&layers, &xb, &yb);
                let bc1 = 1.0 - params.beta1.powi(step);
                let bc2 = 1.0 - params.beta2.powi(step);
                let lr = params.learning_rate * bc2.sqrt() / bc1;
                for ((layer, mom), (gw, gb)) in layers.iter_mut().zip(&mut moments).zip(grads) {
                    adam(&mut layer.weights, &mut mom.m_w, &mut mom.v_w, &gw, params, lr);
                    adam(&mut layer.bias, &mut mom.m_b, &mut mom.v_b, &gb, params, lr);
                }
            }
        }
        Self { layers }
    }

    /// Pre-sigmoid output for every row.
    fn logits(&self, x: ArrayView2<'_, f64>) -> Array1<f64> {
        let mut h = x.to_owned();
        let last = self.layers.len() - 1;
        for (i, layer) in self.layers.iter().enumerate() {
            h = h.dot(&layer.weights) + &layer.bias;
            if i < last {
                h.mapv_inplace(|v| v.max(0.0));
            }
        }
        h.column(0).to_owned()
    }

    pub fn score_batch(&self, x: ArrayView2<'_, f64>) -> Vec<f64> {
        self.logits(x).mapv(sigmoid).to_vec()
    }
}

fn adam<D: ndarray::Dimension>(
    param: &mut ndarray::Array<f64, D>,
    m: &mut ndarray::Array<f64, D>,
    v: &mut ndarray::Array<f64, D>,
    g: &ndarray::Array<f64, D>,
    p: &MlpParams,
    lr: f64,
) {
    ndarray::Zip::from(param).and(m).and(v).and(g).for_each(|w, m, v, &g| {
        *m = p.beta1 * *m + (1.0 - p.beta1) * g;
        *v = p.beta2 * *v + (1.0 - p.beta2) * g * g;
        *w -= lr * *m / (v.sqrt() + p.epsilon);
    });
}

/// Gradients of the mean binary cross-entropy of one batch.
fn backprop(layers: &[Dense], x: &Array2<f64>, y: &Array1<f64>) -> Vec<(Array2<f64>, Array1<f64>)> {
    let last = layers.len() - 1;
    // activations[i] is the input of layer i
    let mut activations = Vec::with_capacity(layers.len() + 1);
    activations.push(x.clone());
    for (i, layer) in layers.iter().enumerate() {
        let mut z = activations[i].dot(&layer.weights) + &layer.bias;
        if i < last {
            z.mapv_inplace(|v| v.max(0.0));
        }
        activations.push(z);
    }
    let batch = y.len() as f64;
    let probs = activations[layers.len()].column(0).mapv(sigmoid);
    // d(BCE)/d(logit) = p − y
    let mut delta = (probs - y).insert_axis(Axis(1)) / batch;

    let mut grads = Vec::with_capacity(layers.len());
    for i in (0..layers.len()).rev() {
        let input = &activations[i];
        let gw = input.t().dot(&delta);
        let gb = delta.sum_axis(Axis(0));
        if i > 0 {
            let mut back = delta.dot(&layers[i].weights.t());
            // ReLU derivative of the previous layer's output.
            ndarray::Zip::from(&mut back).and(input).for_each(|d, &a| {
                if a <= 0.0 {
                    *d = 0.0;
                }
            });
            delta = back;
        }
        grads.push((gw, gb));
    }
    grads.reverse();
    grads
}
