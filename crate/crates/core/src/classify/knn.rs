use ndarray::{Array1, Array2, ArrayView2, Axis};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct KnnParams {
    pub k: usize,
}

impl Default for KnnParams {
    fn default() -> Self {
        Self { k: 5 }
    }
}

/// Euclidean k-nearest neighbours; the score is the positive fraction among
/// the k nearest training points (ties in distance go to the lower index).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KNearest {
    pub k: usize,
    pub points: Array2<f64>,
    pub labels: Vec<u8>,
}

impl KNearest {
    pub fn fit(x: ArrayView2<'_, f64>, y: &[u8], params: &KnnParams) -> Result<Self> {
        if params.k == 0 || params.k > y.len() {
            return Err(Error::InvalidParameter(format!(
                "k = {} must be in 1..={}",
                params.k,
                y.len()
            )));
        }
        Ok(Self {
            k: params.k,
            points: x.to_owned(),
            labels: y.to_vec(),
        })
    }

    pub fn score_batch(&self, x: ArrayView2<'_, f64>) -> Vec<f64> {
        let norms: Array1<f64> = self.points.map_axis(Axis(1), |r| r.dot(&r));
        // ‖q − p‖² = ‖q‖² − 2 q·p + ‖p‖²; the ‖q‖² term is constant per query.
        let cross = x.dot(&self.points.t());
        let mut order: Vec<(f64, usize)> = Vec::with_capacity(self.labels.len());
        cross
            .rows()
            .into_iter()
            .map(|row| {
                order.clear();
                order.extend(row.iter().zip(&norms).enumerate().map(|(j, (&c, &n))| (n - 2.0 * c, j)));
                let k = self.k;
                order.select_nth_unstable_by(k - 1, |a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
                let positives = order[..k].iter().filter(|&&(_, j)| self.labels[j] == 1).count();
                positives as f64 / k as f64
            })
            .collect()
    }
}
