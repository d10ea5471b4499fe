//! Linear SVM trained with the Pegasos stochastic sub-gradient method.

use ndarray::{Array1, ArrayView2};
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SvmParams {
    /// Soft-margin penalty; the regularizer is λ = 1/(C·n).
    pub c: f64,
    pub epochs: usize,
}

impl Default for SvmParams {
    fn default() -> Self {
        Self { c: 1.0, epochs: 50 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinearSvm {
    pub weights: Array1<f64>,
    pub intercept: f64,
}

impl LinearSvm {
    pub fn fit(x: ArrayView2<'_, f64>, y: &[u8], params: &SvmParams, rng: &mut ChaCha8Rng) -> Self {
        let n = y.len();
        let lambda = 1.0 / (params.c * n as f64);
        let mut w = Array1::<f64>::zeros(x.ncols());
        let mut b = 0.0;
        let mut t = 0u64;
        for _ in 0..params.epochs {
            for _ in 0..n {
                t += 1;
                let i = rng.random_range(0..n);
                let target = if y[i] == 1 { 1.0 } else { -1.0 };
                let eta = 1.0 / (lambda * t as f64);
                let margin = target * (w.dot(&x.row(i)) + b);
                w *= 1.0 - eta * lambda;
                if margin < 1.0 {
                    w.scaled_add(eta * target, &x.row(i));
                    b += eta * target * 0.01;
                }
            }
        }
        Self {
            weights: w,
            intercept: b,
        }
    }

    pub fn score_batch(&self, x: ArrayView2<'_, f64>) -> Vec<f64> {
        (x.dot(&self.weights) + self.intercept)
            .mapv(|m| super::sigmoid(2.0 * m))
            .to_vec()
    }
}
