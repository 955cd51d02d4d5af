use ndarray::{Array1, Array2, ArrayView2, Axis};
use rand::Rng;

use crate::error::{Error, Result};

/// Affine layer `y = x W + b` with `W` stored input-major.
#[derive(Clone, Debug, PartialEq)]
pub struct Dense {
    pub w: Array2<f64>,
    pub b: Array1<f64>,
}

impl Dense {
    pub fn zeros(input: usize, output: usize) -> Self {
        Dense {
            w: Array2::zeros((input, output)),
            b: Array1::zeros(output),
        }
    }

    pub fn input_dim(&self) -> usize {
        self.w.nrows()
    }

    pub fn output_dim(&self) -> usize {
        self.w.ncols()
    }
}

/// Multi-layer perceptron with tanh hidden activations and a linear output.
#[derive(Clone, Debug, PartialEq)]
pub struct Mlp {
    pub layers: Vec<Dense>,
}

/// Inputs of every layer, kept for backpropagation.
#[derive(Clone, Debug)]
pub struct MlpCache {
    inputs: Vec<Array2<f64>>,
}

impl Mlp {
    pub fn zeros(sizes: &[usize]) -> Self {
        assert!(sizes.len() >= 2, "need at least input and output size");
        Mlp {
            layers: sizes.windows(2).map(|w| Dense::zeros(w[0], w[1])).collect(),
        }
    }

    /// Uniform `±1/sqrt(fan_in)` initialization; the output layer is scaled
    /// by `output_scale`.
    pub fn new<R: Rng + ?Sized>(sizes: &[usize], output_scale: f64, rng: &mut R) -> Self {
        let mut net = Self::zeros(sizes);
        let n = net.layers.len();
        for (k, layer) in net.layers.iter_mut().enumerate() {
            let bound = 1.0 / (layer.input_dim() as f64).sqrt();
            let scale = if k + 1 == n { output_scale } else { 1.0 };
            layer.w.mapv_inplace(|_| scale * rng.random_range(-bound..bound));
            layer.b.mapv_inplace(|_| scale * rng.random_range(-bound..bound));
        }
        net
    }

    pub fn input_dim(&self) -> usize {
        self.layers[0].input_dim()
    }

    pub fn output_dim(&self) -> usize {
        self.layers[self.layers.len() - 1].output_dim()
    }

    pub fn sizes(&self) -> Vec<usize> {
        let mut s = vec![self.input_dim()];
        s.extend(self.layers.iter().map(Dense::output_dim));
        s
    }

    fn check(&self, x: &ArrayView2<f64>) -> Result<()> {
        if x.ncols() != self.input_dim() {
            return Err(Error::Shape(format!("network input has {} columns, expected {}", x.ncols(), self.input_dim())));
        }
        Ok(())
    }

    /// Batched forward pass, one sample per row.
    pub fn forward(&self, x: ArrayView2<f64>) -> Result<Array2<f64>> {
        self.check(&x)?;
        let n = self.layers.len();
        let mut h = x.to_owned();
        for (k, layer) in self.layers.iter().enumerate() {
            h = h.dot(&layer.w) + &layer.b;
            if k + 1 < n {
                h.mapv_inplace(f64::tanh);
            }
        }
        Ok(h)
    }

    pub fn forward_cached(&self, x: ArrayView2<f64>) -> Result<(Array2<f64>, MlpCache)> {
        self.check(&x)?;
        let n = self.layers.len();
        let mut inputs = Vec::with_capacity(n);
        let mut h = x.to_owned();
        for (k, layer) in self.layers.iter().enumerate() {
            let mut next = h.dot(&layer.w) + &layer.b;
            if k + 1 < n {
                next.mapv_inplace(f64::tanh);
            }
            inputs.push(h);
            h = next;
        }
        Ok((h, MlpCache { inputs }))
    }

    /// Parameter gradients for `d loss / d output = grad_out`, summed over
    /// the batch.
    pub fn backward(&self, cache: &MlpCache, grad_out: ArrayView2<f64>) -> Mlp {
        let mut grads = Vec::with_capacity(self.layers.len());
        let mut g = grad_out.to_owned();
        for (k, layer) in self.layers.iter().enumerate().rev() {
            let input = &cache.inputs[k];
            grads.push(Dense {
                w: input.t().dot(&g),
                b: g.sum_axis(Axis(0)),
            });
            if k > 0 {
                let mut back = g.dot(&layer.w.t());
                back.zip_mut_with(input, |d, &a| *d *= 1.0 - a * a);
                g = back;
            }
        }
        grads.reverse();
        Mlp { layers: grads }
    }

    pub fn num_params(&self) -> usize {
        self.layers.iter().map(|l| l.w.len() + l.b.len()).sum()
    }

    pub fn write_flat(&self, out: &mut Vec<f64>) {
        for l in &self.layers {
            out.extend(l.w.iter());
            out.extend(l.b.iter());
        }
    }

    /// Overwrite the parameters from `flat`, returning the number consumed.
    pub fn read_flat(&mut self, flat: &[f64]) -> usize {
        let mut k = 0;
        for l in &mut self.layers {
            for v in l.w.iter_mut().chain(l.b.iter_mut()) {
                *v = flat[k];
                k += 1;
            }
        }
        k
    }

    pub fn is_finite(&self) -> bool {
        self.layers.iter().all(|l| l.w.iter().chain(l.b.iter()).all(|v| v.is_finite()))
    }
}
