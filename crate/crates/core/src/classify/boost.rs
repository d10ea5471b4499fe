//! Discrete AdaBoost over decision stumps.

use ndarray::{ArrayView1, ArrayView2};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct BoostParams {
    pub n_estimators: usize,
}

impl Default for BoostParams {
    fn default() -> Self {
        Self { n_estimators: 50 }
    }
}

/// Predicts `polarity` when `x[feature] > threshold`, otherwise `-polarity`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Stump {
    pub feature: u32,
    pub threshold: f64,
    pub polarity: f64,
    pub alpha: f64,
}

impl Stump {
    fn vote(&self, x: ArrayView1<'_, f64>) -> f64 {
        if x[self.feature as usize] > self.threshold {
            self.polarity
        } else {
            -self.polarity
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AdaBoost {
    pub stumps: Vec<Stump>,
}

fn best_stump(x: ArrayView2<'_, f64>, targets: &[f64], weights: &[f64]) -> Option<(Stump, f64)> {
    let n = targets.len();
    let total_pos: f64 = (0..n).filter(|&i| targets[i] > 0.0).map(|i| weights[i]).sum();
    let total_neg: f64 = weights.iter().sum::<f64>() - total_pos;
    let mut best: Option<(Stump, f64)> = None;
    let mut order: Vec<(f64, usize)> = Vec::with_capacity(n);
    for f in 0..x.ncols() {
        let col = x.column(f);
        order.clear();
        order.extend(col.iter().copied().zip(0..n));
        order.sort_unstable_by(|a, b| a.0.total_cmp(&b.0));
        if order[0].0 == order[n - 1].0 {
            continue;
        }
        // Weighted mass at or below the threshold, by class.
        let (mut pos_le, mut neg_le) = (0.0, 0.0);
        for k in 0..n - 1 {
            let i = order[k].1;
            if targets[i] > 0.0 {
                pos_le += weights[i];
            } else {
                neg_le += weights[i];
            }
            if order[k].0 == order[k + 1].0 {
                continue;
            }
            // polarity +1 errs on positives at/below and negatives above.
            let err_plus = pos_le + (total_neg - neg_le);
            let err_minus = neg_le + (total_pos - pos_le);
            let (err, polarity) = if err_plus <= err_minus {
                (err_plus, 1.0)
            } else {
                (err_minus, -1.0)
            };
            if best.as_ref().is_none_or(|(_, e)| err < *e) {
                best = Some((
                    Stump {
                        feature: f as u32,
                        threshold: 0.5 * (order[k].0 + order[k + 1].0),
                        polarity,
                        alpha: 0.0,
                    },
                    err,
                ));
            }
        }
    }
    best
}

impl AdaBoost {
    pub fn fit(x: ArrayView2<'_, f64>, y: &[u8], params: &BoostParams) -> Self {
        let n = y.len();
        let targets: Vec<f64> = y.iter().map(|&l| if l == 1 { 1.0 } else { -1.0 }).collect();
        let mut weights = vec![1.0 / n as f64; n];
        let mut stumps = Vec::new();
        for _ in 0..params.n_estimators {
            let Some((mut stump, err)) = best_stump(x, &targets, &weights) else {
                break;
            };
            let err = err.clamp(1e-10, 1.0);
            if err >= 0.5 {
                break;
            }
            stump.alpha = 0.5 * ((1.0 - err) / err).ln();
            let mut total = 0.0;
            for i in 0..n {
                weights[i] *= (-stump.alpha * targets[i] * stump.vote(x.row(i))).exp();
                total += weights[i];
            }
            weights.iter_mut().for_each(|w| *w /= total);
            let perfect = err <= 1e-10;
            stumps.push(stump);
            if perfect {
                break;
            }
        }
        Self { stumps }
    }

    /// Logistic transform of the normalized margin Σαh/Σα.
    pub fn score(&self, x: ArrayView1<'_, f64>) -> f64 {
        let total: f64 = self.stumps.iter().map(|s| s.alpha).sum();
        if total == 0.0 {
            return 0.5;
        }
        let margin: f64 = self.stumps.iter().map(|s| s.alpha * s.vote(x)).sum::<f64>() / total;
        super::sigmoid(4.0 * margin)
    }
}
