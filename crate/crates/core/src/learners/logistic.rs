//! Penalized logistic regression by proximal Newton: an outer IRLS loop
//! whose quadratic subproblem is solved by cyclic coordinate descent, with a
//! backtracking line search on the full objective.
//!
//! Objective: `R(w) + C * sum_i s_i * logloss(y_i, w.x_i + b)` where `R` is
//! `|w|_1` or `|w|^2 / 2`. The intercept `b` is not penalized.

use crate::codec::{TextReader, TextWriter};
use crate::error::{Error, Result};
use crate::learners::Penalty;
use crate::matrix::Matrix;

pub const LOGISTIC_TOL: f64 = 1e-6;
pub const LOGISTIC_MAX_ITER: usize = 1000;
const INNER_MAX_PASSES: usize = 200;
const LINE_SEARCH_SIGMA: f64 = 0.01;
const MAX_BACKTRACK: usize = 40;

#[derive(Clone, Debug, PartialEq)]
pub struct LogisticModel {
    pub coef: Vec<f64>,
    pub intercept: f64,
    pub converged: bool,
    pub n_iter: usize,
}

fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

/// `log(1 + exp(z))` without overflow.
fn softplus(z: f64) -> f64 {
    if z > 0.0 {
        z + (-z).exp().ln_1p()
    } else {
        z.exp().ln_1p()
    }
}

fn soft_threshold(v: f64, t: f64) -> f64 {
    if v > t {
        v - t
    } else if v < -t {
        v + t
    } else {
        0.0
    }
}

struct Problem<'a> {
    x: &'a Matrix,
    y: &'a [u8],
    s: &'a [f64],
    c: f64,
    penalty: Penalty,
}

impl Problem<'_> {
    fn penalty_value(&self, w: &[f64]) -> f64 {
        match self.penalty {
            Penalty::L1 => w.iter().map(|v| v.abs()).sum(),
            Penalty::L2 => 0.5 * w.iter().map(|v| v * v).sum::<f64>(),
        }
    }

    fn loss(&self, margins: &[f64]) -> f64 {
        margins
            .iter()
            .zip(self.y)
            .zip(self.s)
            .map(|((&z, &y), &s)| s * (softplus(z) - f64::from(y) * z))
            .sum::<f64>()
            * self.c
    }

    fn margins(&self, w: &[f64], b: f64) -> Vec<f64> {
        self.x
            .rows_iter()
            .map(|r| r.iter().zip(w).map(|(a, c)| a * c).sum::<f64>() + b)
            .collect()
    }
}

/// Fits the model; `sample_weights` already include class weights.
pub fn fit_logistic(x: &Matrix, y: &[u8], sample_weights: &[f64], c: f64, penalty: Penalty) -> LogisticModel {
    let p = x.ncols();
    let n = x.nrows();
    let prob = Problem {
        x,
        y,
        s: sample_weights,
        c,
        penalty,
    };
    // column-major copy for coordinate sweeps
    let cols: Vec<Vec<f64>> = (0..p).map(|j| x.column(j)).collect();

    let mut w = vec![0.0; p];
    let total: f64 = sample_weights.iter().sum();
    let pos: f64 = y.iter().zip(sample_weights).filter(|(&l, _)| l == 1).map(|(_, s)| s).sum();
    let mut b = if pos > 0.0 && pos < total {
        (pos / (total - pos)).ln()
    } else {
        0.0
    };
    let mut margins = prob.margins(&w, b);
    let mut objective = prob.loss(&margins) + prob.penalty_value(&w);

    let mut converged = false;
    let mut iter = 0;
    let mut h = vec![0.0; n];
    let mut g = vec![0.0; n];
    let mut z = vec![0.0; n];
    let mut d = vec![0.0; p];
    while iter < LOGISTIC_MAX_ITER {
        iter += 1;
        for i in 0..n {
            let pi = sigmoid(margins[i]);
            let si = c * sample_weights[i];
            g[i] = si * (pi - f64::from(y[i]));
            h[i] = (si * pi * (1.0 - pi)).max(1e-12 * si.max(1e-300));
        }
        let grad: Vec<f64> = cols.iter().map(|col| col.iter().zip(&g).map(|(a, b)| a * b).sum()).collect();
        let grad_b: f64 = g.iter().sum();
        let diag: Vec<f64> = cols
            .iter()
            .map(|col| col.iter().zip(&h).map(|(a, b)| a * a * b).sum())
            .collect();
        let diag_b: f64 = h.iter().sum();

        // Minimize the quadratic model in the step (d, db); z = X d + db.
        d.iter_mut().for_each(|v| *v = 0.0);
        z.iter_mut().for_each(|v| *v = 0.0);
        let mut db = 0.0;
        for _ in 0..INNER_MAX_PASSES {
            let mut max_change: f64 = 0.0;
            for j in 0..p {
                let col = &cols[j];
                let hz: f64 = col.iter().zip(&h).zip(&z).map(|((a, hh), zz)| a * hh * zz).sum();
                let slope = grad[j] + hz;
                let old = d[j];
                let new = match penalty {
                    Penalty::L1 => {
                        if diag[j] <= 0.0 {
                            -w[j]
                        } else {
                            // minimize diag/2 t^2 + (slope - diag*old) t + |w + t|
                            let lin = slope - diag[j] * old;
                            soft_threshold(w[j] - lin / diag[j], 1.0 / diag[j]) - w[j]
                        }
                    }
                    Penalty::L2 => old - (slope + w[j] + old) / (diag[j] + 1.0),
                };
                let delta = new - old;
                if delta != 0.0 {
                    d[j] = new;
                    for (zi, a) in z.iter_mut().zip(col) {
                        *zi += delta * a;
                    }
                    max_change = max_change.max(delta.abs() * diag[j].max(1.0).sqrt());
                }
            }
            // intercept coordinate
            let hz: f64 = h.iter().zip(&z).map(|(a, b)| a * b).sum();
            let delta = -(grad_b + hz) / diag_b;
            if delta.is_finite() && delta != 0.0 {
                db += delta;
                z.iter_mut().for_each(|zi| *zi += delta);
                max_change = max_change.max(delta.abs() * diag_b.max(1.0).sqrt());
            }
            if max_change < 1e-9 {
                break;
            }
        }

        let wd: Vec<f64> = w.iter().zip(&d).map(|(a, b)| a + b).collect();
        let smooth_dir: f64 = grad.iter().zip(&d).map(|(a, b)| a * b).sum::<f64>() + grad_b * db;
        let decrease = smooth_dir + prob.penalty_value(&wd) - prob.penalty_value(&w);
        if decrease > -1e-14 * (1.0 + objective.abs()) {
            converged = true;
            break;
        }
        let mut t = 1.0;
        let mut accepted = false;
        for _ in 0..MAX_BACKTRACK {
            let cand_w: Vec<f64> = w.iter().zip(&d).map(|(a, b)| a + t * b).collect();
            let cand_b = b + t * db;
            let cand_m: Vec<f64> = margins.iter().zip(&z).map(|(m, zz)| m + t * zz).collect();
            let cand_obj = prob.loss(&cand_m) + prob.penalty_value(&cand_w);
            if cand_obj <= objective + LINE_SEARCH_SIGMA * t * decrease {
                let step = d.iter().map(|v| (t * v).abs()).fold((t * db).abs(), f64::max);
                let scale = w.iter().map(|v| v.abs()).fold(b.abs(), f64::max);
                w = cand_w;
                b = cand_b;
                margins = cand_m;
                let rel = (objective - cand_obj).abs() / objective.abs().max(1e-300);
                objective = cand_obj;
                accepted = true;
                if step <= LOGISTIC_TOL * (1.0 + scale) || rel <= LOGISTIC_TOL * 1e-3 {
                    converged = true;
                }
                break;
            }
            t *= 0.5;
        }
        if !accepted || converged {
            converged = converged || !accepted && decrease.abs() < 1e-10 * (1.0 + objective.abs());
            break;
        }
    }
    LogisticModel {
        coef: w,
        intercept: b,
        converged,
        n_iter: iter,
    }
}

impl LogisticModel {
    pub fn decision(&self, x: &Matrix) -> Vec<f64> {
        x.rows_iter()
            .map(|r| r.iter().zip(&self.coef).map(|(a, c)| a * c).sum::<f64>() + self.intercept)
            .collect()
    }

    pub fn scores(&self, x: &Matrix) -> Vec<f64> {
        self.decision(x).into_iter().map(sigmoid).collect()
    }

    pub(crate) fn write(&self, w: &mut TextWriter) {
        w.line("coef", &self.coef);
        w.value("intercept", self.intercept);
        w.line("fit", [u8::from(self.converged) as usize, self.n_iter]);
    }

    pub(crate) fn read(r: &mut TextReader<'_>) -> Result<Self> {
        let coef = r.parsed("coef")?;
        let intercept = r.one("intercept")?;
        let fit: Vec<usize> = r.parsed("fit")?;
        let [conv, n_iter] = fit[..] else {
            return Err(Error::ModelFormat("`fit` needs two values".into()));
        };
        Ok(LogisticModel {
            coef,
            intercept,
            converged: conv == 1,
            n_iter,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::seed;
    use rand::Rng;

    fn noisy(n: usize, p: usize, seed_value: u64) -> (Matrix, Vec<u8>) {
        let mut rng = seed::rng(seed_value);
        let mut rows = Vec::new();
        let mut y = Vec::new();
        for _ in 0..n {
            let r: Vec<f64> = (0..p).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let s = 2.0 * r[0] - r[1] + rng.gen_range(-1.0..1.0);
            y.push(u8::from(s > 0.0));
            rows.push(r);
        }
        (Matrix::from_rows(&rows).unwrap(), y)
    }

    /// Smooth-part gradient `C * X^T s (p - y)` and its intercept component.
    fn loss_gradient(m: &LogisticModel, x: &Matrix, y: &[u8], s: &[f64], c: f64) -> (Vec<f64>, f64) {
        let p = m.scores(x);
        let r: Vec<f64> = (0..y.len()).map(|i| c * s[i] * (p[i] - f64::from(y[i]))).collect();
        let g = (0..x.ncols()).map(|j| (0..y.len()).map(|i| x.get(i, j) * r[i]).sum()).collect();
        (g, r.iter().sum())
    }

    #[test]
    fn l2_stationarity() {
        let (x, y) = noisy(80, 4, 3);
        let s = vec![1.0; 80];
        for c in [0.01, 1.0, 30.0] {
            let m = fit_logistic(&x, &y, &s, c, Penalty::L2);
            assert!(m.converged);
            let (g, gb) = loss_gradient(&m, &x, &y, &s, c);
            for j in 0..4 {
                assert!((g[j] + m.coef[j]).abs() < 1e-5, "C={c} j={j}");
            }
            assert!(gb.abs() < 1e-5);
        }
    }

    #[test]
    fn l1_subgradient_optimality() {
        let (x, y) = noisy(80, 6, 5);
        let s: Vec<f64> = (0..80).map(|i| if i % 3 == 0 { 2.0 } else { 1.0 }).collect();
        for c in [0.05, 0.5, 5.0] {
            let m = fit_logistic(&x, &y, &s, c, Penalty::L1);
            assert!(m.converged);
            let (g, gb) = loss_gradient(&m, &x, &y, &s, c);
            assert!(gb.abs() < 1e-5);
            for j in 0..6 {
                if m.coef[j] == 0.0 {
                    assert!(g[j].abs() <= 1.0 + 1e-5, "C={c} j={j} g={}", g[j]);
                } else {
                    assert!((g[j] + m.coef[j].signum()).abs() < 1e-5, "C={c} j={j}");
                }
            }
        }
    }

    #[test]
    fn tiny_c_zeroes_l1_coefficients() {
        let (x, y) = noisy(50, 3, 7);
        let m = fit_logistic(&x, &y, &vec![1.0; 50], 1e-5, Penalty::L1);
        assert!(m.coef.iter().all(|&c| c == 0.0));
        let pos = y.iter().filter(|&&l| l == 1).count() as f64;
        assert!((m.intercept - (pos / (50.0 - pos)).ln()).abs() < 1e-9);
    }

    #[test]
    fn separable_data_stays_finite() {
        let x = Matrix::from_rows(&[vec![-1.0], vec![-0.5], vec![0.5], vec![1.0]]).unwrap();
        let m = fit_logistic(&x, &[0, 0, 1, 1], &[1.0; 4], 30.0, Penalty::L2);
        assert!(m.coef[0].is_finite() && m.coef[0] > 0.0);
    }
}
