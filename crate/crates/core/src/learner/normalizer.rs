use ndarray::{Array1, Array2, ArrayView2, Axis};

const STD_EPS: f64 = 1e-2;
const CLIP: f64 = 10.0;

/// Running per-feature mean and variance of observations.
#[derive(Clone, Debug, PartialEq)]
pub struct RunningNormalizer {
    pub mean: Array1<f64>,
    pub var: Array1<f64>,
    pub count: f64,
    pub enabled: bool,
}

impl RunningNormalizer {
    pub fn new(dim: usize, enabled: bool) -> Self {
        RunningNormalizer {
            mean: Array1::zeros(dim),
            var: Array1::ones(dim),
            count: 0.0,
            enabled,
        }
    }

    pub fn dim(&self) -> usize {
        self.mean.len()
    }

    /// Merge the statistics of a batch (rows are samples).
    pub fn update(&mut self, batch: ArrayView2<f64>) {
        if !self.enabled || batch.nrows() == 0 {
            return;
        }
        let n = batch.nrows() as f64;
        let b_mean = batch.mean_axis(Axis(0)).expect("non-empty batch");
        let b_var = batch.var_axis(Axis(0), 0.0);
        if self.count == 0.0 {
            self.mean = b_mean;
            self.var = b_var;
            self.count = n;
            return;
        }
        let total = self.count + n;
        let delta = &b_mean - &self.mean;
        self.mean = &self.mean + &delta * (n / total);
        let m2 = &self.var * self.count + &b_var * n + delta.mapv(|d| d * d) * (self.count * n / total);
        self.var = m2 / total;
        self.count = total;
    }

    pub fn normalize(&self, batch: ArrayView2<f64>) -> Array2<f64> {
        let mut out = batch.to_owned();
        if self.enabled {
            let std = self.var.mapv(|v| v.sqrt() + STD_EPS);
            for mut row in out.rows_mut() {
                for ((x, m), s) in row.iter_mut().zip(&self.mean).zip(&std) {
                    *x = ((*x - m) / s).clamp(-CLIP, CLIP);
                }
            }
        }
        out
    }
}
