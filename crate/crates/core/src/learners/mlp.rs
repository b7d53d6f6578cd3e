//! Fully connected network: ReLU hidden layers, one sigmoid output unit,
//! weighted cross-entropy with an L2 penalty, trained full-batch with Adam.

use ndarray::{Array1, Array2, Axis};
use rand::Rng;

use crate::codec::{TextReader, TextWriter};
use crate::error::{Error, Result};
use crate::matrix::Matrix;
use crate::seed::rng;

#[derive(Clone, Debug, PartialEq)]
pub struct MlpConfig {
    pub learning_rate: f64,
    pub max_epochs: usize,
    /// Training stops once the loss has not improved by `tol` for `patience` epochs.
    pub tol: f64,
    pub patience: usize,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
}

impl Default for MlpConfig {
    fn default() -> Self {
        MlpConfig {
            learning_rate: 0.01,
            max_epochs: 500,
            tol: 1e-4,
            patience: 10,
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct MlpModel {
    pub weights: Vec<Array2<f64>>,
    pub biases: Vec<Array1<f64>>,
    pub epochs: usize,
}

fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

fn to_array(x: &Matrix) -> Array2<f64> {
    Array2::from_shape_vec((x.nrows(), x.ncols()), x.as_slice().to_vec()).unwrap_or_else(|_| Array2::zeros((0, 0)))
}

impl MlpModel {
    fn init(n_in: usize, hidden: &[usize], seed: u64) -> MlpModel {
        let mut r = rng(seed);
        let mut sizes = vec![n_in];
        sizes.extend_from_slice(hidden);
        sizes.push(1);
        let mut weights = Vec::new();
        let mut biases = Vec::new();
        for pair in sizes.windows(2) {
            let (fan_in, fan_out) = (pair[0], pair[1]);
            let bound = (6.0 / (fan_in + fan_out) as f64).sqrt();
            weights.push(Array2::from_shape_fn((fan_in, fan_out), |_| r.gen_range(-bound..bound)));
            biases.push(Array1::from_shape_fn(fan_out, |_| r.gen_range(-bound..bound)));
        }
        MlpModel {
            weights,
            biases,
            epochs: 0,
        }
    }

    pub fn fit(
        x: &Matrix,
        y: &[u8],
        sample_weights: &[f64],
        alpha: f64,
        hidden: &[usize],
        seed: u64,
        cfg: &MlpConfig,
    ) -> MlpModel {
        let mut model = MlpModel::init(x.ncols(), hidden, seed);
        let xa = to_array(x);
        let ya: Array1<f64> = y.iter().map(|&l| f64::from(l)).collect();
        let sw = Array1::from(sample_weights.to_vec());
        let mut m_w: Vec<Array2<f64>> = model.weights.iter().map(|w| Array2::zeros(w.raw_dim())).collect();
        let mut v_w = m_w.clone();
        let mut m_b: Vec<Array1<f64>> = model.biases.iter().map(|b| Array1::zeros(b.raw_dim())).collect();
        let mut v_b = m_b.clone();
        let mut best = f64::INFINITY;
        let mut stale = 0;
        for epoch in 1..=cfg.max_epochs {
            let (loss, gw, gb) = model.loss_and_grads(&xa, &ya, &sw, alpha);
            model.epochs = epoch;
            if loss > best - cfg.tol {
                stale += 1;
            } else {
                stale = 0;
            }
            best = best.min(loss);
            if stale > cfg.patience {
                break;
            }
            let t = epoch as i32;
            let step = cfg.learning_rate * (1.0 - cfg.beta2.powi(t)).sqrt() / (1.0 - cfg.beta1.powi(t));
            for l in 0..model.weights.len() {
                m_w[l].zip_mut_with(&gw[l], |m, g| *m = cfg.beta1 * *m + (1.0 - cfg.beta1) * g);
                v_w[l].zip_mut_with(&gw[l], |v, g| *v = cfg.beta2 * *v + (1.0 - cfg.beta2) * g * g);
                m_b[l].zip_mut_with(&gb[l], |m, g| *m = cfg.beta1 * *m + (1.0 - cfg.beta1) * g);
                v_b[l].zip_mut_with(&gb[l], |v, g| *v = cfg.beta2 * *v + (1.0 - cfg.beta2) * g * g);
                ndarray::Zip::from(&mut model.weights[l])
                    .and(&m_w[l])
                    .and(&v_w[l])
                    .for_each(|w, &m, &v| *w -= step * m / (v.sqrt() + cfg.epsilon));
                ndarray::Zip::from(&mut model.biases[l])
                    .and(&m_b[l])
                    .and(&v_b[l])
                    .for_each(|b, &m, &v| *b -= step * m / (v.sqrt() + cfg.epsilon));
            }
        }
        model
    }

    /// Per-layer activations; the last entry holds output probabilities.
    fn forward(&self, x: &Array2<f64>) -> Vec<Array2<f64>> {
        let mut acts = vec![x.clone()];
        let last = self.weights.len() - 1;
        for (l, (w, b)) in self.weights.iter().zip(&self.biases).enumerate() {
            let mut z = acts[l].dot(w);
            z += b;
            if l == last {
                z.mapv_inplace(sigmoid);
            } else {
                z.mapv_inplace(|v| v.max(0.0));
            }
            acts.push(z);
        }
        acts
    }

    /// Loss `sum_i s_i bce_i / n + alpha |W|^2 / (2n)` and its gradients.
    #[allow(clippy::type_complexity)]
    fn loss_and_grads(
        &self,
        x: &Array2<f64>,
        y: &Array1<f64>,
        sw: &Array1<f64>,
        alpha: f64,
    ) -> (f64, Vec<Array2<f64>>, Vec<Array1<f64>>) {
        let n = x.nrows() as f64;
        let acts = self.forward(x);
        let out = acts[acts.len() - 1].column(0).to_owned();
        let eps = 1e-15;
        let mut loss = 0.0;
        for i in 0..y.len() {
            let p = out[i].clamp(eps, 1.0 - eps);
            loss -= sw[i] * (y[i] * p.ln() + (1.0 - y[i]) * (1.0 - p).ln());
        }
        let sq: f64 = self.weights.iter().map(|w| w.iter().map(|v| v * v).sum::<f64>()).sum();
        loss = loss / n + 0.5 * alpha * sq / n;

        let n_layers = self.weights.len();
        let mut gw = vec![Array2::zeros((0, 0)); n_layers];
        let mut gb = vec![Array1::zeros(0); n_layers];
        let mut delta: Array2<f64> = ((&out - y) * sw / n).insert_axis(Axis(1));
        for l in (0..n_layers).rev() {
            let mut g = acts[l].t().dot(&delta);
            g.scaled_add(alpha / n, &self.weights[l]);
            gw[l] = g;
            gb[l] = delta.sum_axis(Axis(0));
            if l > 0 {
                let mut prev = delta.dot(&self.weights[l].t());
                prev.zip_mut_with(&acts[l], |d, &a| {
                    if a <= 0.0 {
                        *d = 0.0;
                    }
                });
                delta = prev;
            }
        }
        (loss, gw, gb)
    }

    /// Loss and gradient over all parameters, flattened layer by layer
    /// (weights row-major, then biases).
    pub fn loss_and_gradient(&self, x: &Matrix, y: &[u8], sample_weights: &[f64], alpha: f64) -> (f64, Vec<f64>) {
        let ya: Array1<f64> = y.iter().map(|&l| f64::from(l)).collect();
        let (loss, gw, gb) = self.loss_and_grads(&to_array(x), &ya, &Array1::from(sample_weights.to_vec()), alpha);
        let mut flat = Vec::new();
        for (w, b) in gw.iter().zip(&gb) {
            flat.extend(w.iter());
            flat.extend(b.iter());
        }
        (loss, flat)
    }

    pub fn parameters(&self) -> Vec<f64> {
        let mut flat = Vec::new();
        for (w, b) in self.weights.iter().zip(&self.biases) {
            flat.extend(w.iter());
            flat.extend(b.iter());
        }
        flat
    }

    pub fn set_parameters(&mut self, flat: &[f64]) {
        let mut it = flat.iter();
        for (w, b) in self.weights.iter_mut().zip(self.biases.iter_mut()) {
            w.iter_mut().chain(b.iter_mut()).for_each(|v| *v = *it.next().unwrap_or(v));
        }
    }

    /// Untrained network with the given shape, for gradient checks.
    pub fn initialized(n_in: usize, hidden: &[usize], seed: u64) -> MlpModel {
        MlpModel::init(n_in, hidden, seed)
    }

    pub fn n_features(&self) -> usize {
        self.weights[0].nrows()
    }

    pub fn scores(&self, x: &Matrix) -> Vec<f64> {
        let acts = self.forward(&to_array(x));
        acts[acts.len() - 1].column(0).to_vec()
    }

    pub(crate) fn write(&self, w: &mut TextWriter) {
        w.line("mlp", [self.weights.len(), self.epochs]);
        for (wt, b) in self.weights.iter().zip(&self.biases) {
            w.line("layer", [wt.nrows(), wt.ncols()]);
            w.line("w", wt.iter());
            w.line("b", b.iter());
        }
    }

    pub(crate) fn read(r: &mut TextReader<'_>) -> Result<Self> {
        let head: Vec<usize> = r.parsed("mlp")?;
        let [n_layers, epochs] = head[..] else {
            return Err(Error::ModelFormat("`mlp` needs two values".into()));
        };
        let mut weights = Vec::new();
        let mut biases = Vec::new();
        for _ in 0..n_layers {
            let shape: Vec<usize> = r.parsed("layer")?;
            let [rows, cols] = shape[..] else {
                return Err(Error::ModelFormat("`layer` needs two values".into()));
            };
            let w: Vec<f64> = r.parsed("w")?;
            let b: Vec<f64> = r.parsed("b")?;
            let w = Array2::from_shape_vec((rows, cols), w).map_err(|e| Error::ModelFormat(e.to_string()))?;
            if b.len() != cols || weights.last().is_some_and(|p: &Array2<f64>| p.ncols() != rows) {
                return Err(Error::ModelFormat("inconsistent layer shapes".into()));
            }
            weights.push(w);
            biases.push(Array1::from(b));
        }
        if weights.is_empty() || weights[weights.len() - 1].ncols() != 1 {
            return Err(Error::ModelFormat("network must end in one output unit".into()));
        }
        Ok(MlpModel {
            weights,
            biases,
            epochs,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::seed;

    #[test]
    fn backprop_matches_central_differences() {
        let mut r = seed::rng(3);
        let rows: Vec<Vec<f64>> = (0..5).map(|_| (0..4).map(|_| r.gen_range(-1.0..1.0)).collect()).collect();
        let x = Matrix::from_rows(&rows).unwrap();
        let y = [0, 1, 1, 0, 1];
        let sw = [1.0, 2.0, 1.0, 0.5, 1.0];
        for hidden in [vec![3], vec![4, 3]] {
            let mut m = MlpModel::initialized(4, &hidden, 11);
            let (_, grad) = m.loss_and_gradient(&x, &y, &sw, 0.3);
            let theta = m.parameters();
            let h = 1e-6;
            for k in 0..theta.len() {
                let mut tp = theta.clone();
                tp[k] += h;
                m.set_parameters(&tp);
                let lp = m.loss_and_gradient(&x, &y, &sw, 0.3).0;
                tp[k] -= 2.0 * h;
                m.set_parameters(&tp);
                let lm = m.loss_and_gradient(&x, &y, &sw, 0.3).0;
                m.set_parameters(&theta);
                let fd = (lp - lm) / (2.0 * h);
                let rel = (fd - grad[k]).abs() / fd.abs().max(grad[k].abs()).max(1e-8);
                assert!(rel < 1e-4, "param {k}: fd {fd} bp {}", grad[k]);
            }
        }
    }

    #[test]
    fn early_stopping_bounds_epochs() {
        let x = Matrix::from_rows(&[vec![-1.0], vec![1.0], vec![-2.0], vec![2.0]]).unwrap();
        let m = MlpModel::fit(&x, &[0, 1, 0, 1], &[1.0; 4], 1e-4, &[5], 1, &MlpConfig::default());
        assert!(m.epochs <= 500);
        let s = m.scores(&x);
        assert!(s[0] < 0.5 && s[1] > 0.5);
    }
}
