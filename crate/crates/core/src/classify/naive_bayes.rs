use ndarray::{Array1, ArrayView2, Axis};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct NaiveBayesParams {
    /// Lower bound on every per-class feature variance.
    pub var_floor: f64,
}

impl Default for NaiveBayesParams {
    fn default() -> Self {
        Self { var_floor: 1e-9 }
    }
}

/// Gaussian naive Bayes for two classes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GaussianNb {
    pub log_prior: [f64; 2],
    pub means: [Array1<f64>; 2],
    pub variances: [Array1<f64>; 2],
}

impl GaussianNb {
    pub fn fit(x: ArrayView2<'_, f64>, y: &[u8], params: &NaiveBayesParams) -> Self {
        let n = y.len() as f64;
        let fit_class = |class: u8| {
            let rows: Vec<usize> = (0..y.len()).filter(|&i| y[i] == class).collect();
            let sub = x.select(Axis(0), &rows);
            let mean = sub.mean_axis(Axis(0)).expect("non-empty class");
            let var = sub.var_axis(Axis(0), 0.0).mapv(|v| v.max(params.var_floor));
            ((rows.len() as f64 / n).ln(), mean, var)
        };
        let (p0, m0, v0) = fit_class(0);
        let (p1, m1, v1) = fit_class(1);
        Self {
            log_prior: [p0, p1],
            means: [m0, m1],
            variances: [v0, v1],
        }
    }

    fn log_joint(&self, class: usize, row: ndarray::ArrayView1<'_, f64>) -> f64 {
        let mean = &self.means[class];
        let var = &self.variances[class];
        let mut ll = self.log_prior[class];
        for ((&xi, &m), &v) in row.iter().zip(mean).zip(var) {
            let d = xi - m;
            ll -= 0.5 * ((2.0 * std::f64::consts::PI * v).ln() + d * d / v);
        }
        ll
    }

    pub fn score_batch(&self, x: ArrayView2<'_, f64>) -> Vec<f64> {
        x.rows()
            .into_iter()
            .map(|row| {
                let l0 = self.log_joint(0, row);
                let l1 = self.log_joint(1, row);
                super::sigmoid(l1 - l0)
            })
            .collect()
    }
}
