use ndarray::{Array1, ArrayView2};
use serde::{Deserialize, Serialize};

use super::sigmoid;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct LogisticParams {
    /// L2 penalty λ on the weights (not the intercept); the objective is
    /// mean log-loss + λ/(2n)·‖w‖².
    pub l2: f64,
    /// Stop once the gradient norm falls below this.
    pub tol: f64,
    pub max_epochs: usize,
}

impl Default for LogisticParams {
    fn default() -> Self {
        Self {
            l2: 1.0,
            tol: 1e-6,
            max_epochs: 1000,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LogisticRegression {
    pub weights: Array1<f64>,
    pub intercept: f64,
    pub epochs: usize,
}

/// Largest eigenvalue of `[X 1]ᵀ[X 1] / n` by power iteration.
fn curvature_bound(x: ArrayView2<'_, f64>) -> f64 {
    let n = x.nrows() as f64;
    let d = x.ncols();
    let mut v = Array1::from_elem(d + 1, 1.0 / ((d + 1) as f64).sqrt());
    let mut lambda = 0.0;
    for _ in 0..50 {
        let xv = x.dot(&v.slice(ndarray::s![..d])) + v[d];
        let mut next = Array1::zeros(d + 1);
        next.slice_mut(ndarray::s![..d]).assign(&x.t().dot(&xv));
        next[d] = xv.sum();
        next /= n;
        let norm = next.dot(&next).sqrt();
        if norm == 0.0 {
            return 0.0;
        }
        lambda = norm;
        v = next / norm;
    }
    lambda
}

impl LogisticRegression {
    /// Nesterov-accelerated gradient descent with step `1/L`, where `L`
    /// bounds the curvature of the objective. Momentum restarts whenever it
    /// points uphill.
    pub fn fit(x: ArrayView2<'_, f64>, y: &[u8], params: &LogisticParams) -> Self {
        let n = x.nrows() as f64;
        let targets: Array1<f64> = y.iter().map(|&l| f64::from(l)).collect();
        let reg = params.l2 / n;
        // Power iteration slightly underestimates; pad the bound.
        let lipschitz = 0.25 * curvature_bound(x) * 1.05 + reg;
        let step = if lipschitz > 0.0 { 1.0 / lipschitz } else { 1.0 };
        // Row-major copy of Xᵀ keeps both products in the gradient contiguous.
        let xt = x.t().as_standard_layout().into_owned();
        let gradient = |w: &Array1<f64>, b: f64| {
            let residual = (x.dot(w) + b).mapv(sigmoid) - &targets;
            (xt.dot(&residual) / n + w * reg, residual.sum() / n)
        };

        let mut w = Array1::<f64>::zeros(x.ncols());
        let mut b = 0.0;
        // Look-ahead point and momentum coefficient.
        let (mut v, mut c) = (w.clone(), b);
        let mut momentum = 1.0f64;
        let mut epochs = 0;
        while epochs < params.max_epochs {
            let (gv, gc) = gradient(&v, c);
            if (gv.dot(&gv) + gc * gc).sqrt() < params.tol {
                w = v;
                b = c;
                break;
            }
            let w_next = &v - &(&gv * step);
            let b_next = c - step * gc;
            let next_momentum = 0.5 * (1.0 + (1.0 + 4.0 * momentum * momentum).sqrt());
            let beta = (momentum - 1.0) / next_momentum;
            let dw = &w_next - &w;
            let db = b_next - b;
            if gv.dot(&dw) + gc * db > 0.0 {
                momentum = 1.0;
                v = w_next.clone();
                c = b_next;
            } else {
                momentum = next_momentum;
                v = &w_next + &(dw * beta);
                c = b_next + beta * db;
            }
            w = w_next;
            b = b_next;
            epochs += 1;
        }
        Self {
            weights: w,
            intercept: b,
            epochs,
        }
    }

    pub fn score_batch(&self, x: ArrayView2<'_, f64>) -> Vec<f64> {
        (x.dot(&self.weights) + self.intercept).mapv(sigmoid).to_vec()
    }
}
