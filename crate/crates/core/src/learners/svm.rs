//! C-SVM with an RBF kernel, trained by sequential minimal optimization
//! using second-order working-set selection.

use crate::codec::{TextReader, TextWriter};
use crate::error::{Error, Result};
use crate::matrix::Matrix;

/// Stopping tolerance on the maximal KKT violation.
pub const SMO_TOL: f64 = 1e-3;
const TAU: f64 = 1e-12;

fn rbf(a: &[f64], b: &[f64], gamma: f64) -> f64 {
    let d2: f64 = a.iter().zip(b).map(|(u, v)| (u - v) * (u - v)).sum();
    (-gamma * d2).exp()
}

struct KernelRows<'a> {
    x: &'a Matrix,
    gamma: f64,
    rows: Vec<Option<Vec<f64>>>,
}

impl KernelRows<'_> {
    fn row(&mut self, i: usize) -> &[f64] {
        if self.rows[i].is_none() {
            let xi = self.x.row(i);
            let r = self.x.rows_iter().map(|xj| rbf(xi, xj, self.gamma)).collect();
            self.rows[i] = Some(r);
        }
        self.rows[i].as_deref().unwrap_or(&[])
    }
}

#[derive(Clone, Debug)]
pub struct SmoSolution {
    pub alpha: Vec<f64>,
    pub rho: f64,
    pub iterations: usize,
    pub converged: bool,
    /// Dual objective `e'a - a'Qa/2` after each update, when requested.
    pub dual_trace: Vec<f64>,
}

/// Solves the dual with per-row upper bounds `upper[i]` (C times row weight).
pub fn smo_solve(x: &Matrix, y: &[u8], upper: &[f64], gamma: f64, eps: f64, trace: bool) -> SmoSolution {
    let n = x.nrows();
    let ys: Vec<f64> = y.iter().map(|&l| if l == 1 { 1.0 } else { -1.0 }).collect();
    let mut cache = KernelRows {
        x,
        gamma,
        rows: vec![None; n],
    };
    let mut alpha = vec![0.0; n];
    let mut grad = vec![-1.0; n];
    let max_iter = (100 * n).max(10_000_000);
    let mut iterations = 0;
    let mut converged = false;
    let mut dual_trace = Vec::new();
    let is_upper = |a: f64, c: f64| a >= c;
    let is_lower = |a: f64| a <= 0.0;

    while iterations < max_iter {
        // i: maximal violator from the "up" set
        let mut gmax = f64::NEG_INFINITY;
        let mut i_sel = None;
        for t in 0..n {
            let in_up = if ys[t] > 0.0 { !is_upper(alpha[t], upper[t]) } else { !is_lower(alpha[t]) };
            if in_up && -ys[t] * grad[t] >= gmax {
                gmax = -ys[t] * grad[t];
                i_sel = Some(t);
            }
        }
        let mut gmin = f64::INFINITY;
        let mut j_sel = None;
        let mut best_obj = f64::INFINITY;
        if let Some(i) = i_sel {
            let ki: Vec<f64> = cache.row(i).to_vec();
            for t in 0..n {
                let in_low = if ys[t] > 0.0 { !is_lower(alpha[t]) } else { !is_upper(alpha[t], upper[t]) };
                if !in_low {
                    continue;
                }
                let v = -ys[t] * grad[t];
                gmin = gmin.min(v);
                let b = gmax - v;
                if b > 0.0 {
                    // Q_ii + Q_tt - 2 y_i y_t Q_it with Q = yy'K reduces to K terms
                    let a = 2.0 - 2.0 * ki[t];
                    let a = if a > 0.0 { a } else { TAU };
                    let obj = -(b * b) / a;
                    if obj <= best_obj {
                        best_obj = obj;
                        j_sel = Some(t);
                    }
                }
            }
        }
        let (Some(i), Some(j)) = (i_sel, j_sel) else {
            converged = true;
            break;
        };
        if gmax - gmin < eps {
            converged = true;
            break;
        }
        iterations += 1;

        let ki: Vec<f64> = cache.row(i).to_vec();
        let kj: Vec<f64> = cache.row(j).to_vec();
        let (ci, cj) = (upper[i], upper[j]);
        let (old_ai, old_aj) = (alpha[i], alpha[j]);
        let qij = ys[i] * ys[j] * ki[j];
        if ys[i] != ys[j] {
            let mut quad = 2.0 + 2.0 * qij;
            if quad <= 0.0 {
                quad = TAU;
            }
            let delta = (-grad[i] - grad[j]) / quad;
            let diff = alpha[i] - alpha[j];
            alpha[i] += delta;
            alpha[j] += delta;
            if diff > 0.0 {
                if alpha[j] < 0.0 {
                    alpha[j] = 0.0;
                    alpha[i] = diff;
                }
            } else if alpha[i] < 0.0 {
                alpha[i] = 0.0;
                alpha[j] = -diff;
            }
            if diff > ci - cj {
                if alpha[i] > ci {
                    alpha[i] = ci;
                    alpha[j] = ci - diff;
                }
            } else if alpha[j] > cj {
                alpha[j] = cj;
                alpha[i] = cj + diff;
            }
        } else {
            let mut quad = 2.0 - 2.0 * qij;
            if quad <= 0.0 {
                quad = TAU;
            }
            let delta = (grad[i] - grad[j]) / quad;
            let sum = alpha[i] + alpha[j];
            alpha[i] -= delta;
            alpha[j] += delta;
            if sum > ci {
                if alpha[i] > ci {
                    alpha[i] = ci;
                    alpha[j] = sum - ci;
                }
            } else if alpha[j] < 0.0 {
                alpha[j] = 0.0;
                alpha[i] = sum;
            }
            if sum > cj {
                if alpha[j] > cj {
                    alpha[j] = cj;
                    alpha[i] = sum - cj;
                }
            } else if alpha[i] < 0.0 {
                alpha[i] = 0.0;
                alpha[j] = sum;
            }
        }
        let (dai, daj) = (alpha[i] - old_ai, alpha[j] - old_aj);
        for t in 0..n {
            grad[t] += ys[t] * (ys[i] * ki[t] * dai + ys[j] * kj[t] * daj);
        }
        if trace {
            let f: f64 = alpha.iter().zip(&grad).map(|(a, g)| a * (g - 1.0)).sum::<f64>() * 0.5;
            dual_trace.push(-f);
        }
    }

    // rho: average over free variables, else midpoint of the feasible interval
    let mut ub = f64::INFINITY;
    let mut lb = f64::NEG_INFINITY;
    let mut sum_free = 0.0;
    let mut n_free = 0usize;
    for t in 0..n {
        let yg = ys[t] * grad[t];
        if is_upper(alpha[t], upper[t]) {
            if ys[t] < 0.0 {
                ub = ub.min(yg);
            } else {
                lb = lb.max(yg);
            }
        } else if is_lower(alpha[t]) {
            if ys[t] > 0.0 {
                ub = ub.min(yg);
            } else {
                lb = lb.max(yg);
            }
        } else {
            n_free += 1;
            sum_free += yg;
        }
    }
    let rho = if n_free > 0 { sum_free / n_free as f64 } else { (ub + lb) / 2.0 };
    SmoSolution {
        alpha,
        rho,
        iterations,
        converged,
        dual_trace,
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SvmModel {
    pub gamma: f64,
    pub rho: f64,
    /// Support vectors with their `alpha_i * y_i` coefficients.
    pub support: Matrix,
    pub dual_coef: Vec<f64>,
    pub converged: bool,
}

impl SvmModel {
    /// `weights` scale the box constraint per row: `C_i = C * weights[i]`.
    pub fn fit(x: &Matrix, y: &[u8], weights: &[f64], c: f64, gamma: f64) -> Result<SvmModel> {
        let upper: Vec<f64> = weights.iter().map(|w| c * w).collect();
        let sol = smo_solve(x, y, &upper, gamma, SMO_TOL, false);
        let mut support = Matrix::zeros(0, x.ncols());
        let mut dual_coef = Vec::new();
        for (i, &a) in sol.alpha.iter().enumerate() {
            if a > 0.0 {
                support.push_row(x.row(i))?;
                dual_coef.push(if y[i] == 1 { a } else { -a });
            }
        }
        Ok(SvmModel {
            gamma,
            rho: sol.rho,
            support,
            dual_coef,
            converged: sol.converged,
        })
    }

    pub fn n_features(&self) -> usize {
        self.support.ncols()
    }

    pub fn decision_values(&self, x: &Matrix) -> Vec<f64> {
        x.rows_iter()
            .map(|q| {
                self.support
                    .rows_iter()
                    .zip(&self.dual_coef)
                    .map(|(s, c)| c * rbf(s, q, self.gamma))
                    .sum::<f64>()
                    - self.rho
            })
            .collect()
    }

    pub(crate) fn write(&self, w: &mut TextWriter) {
        w.line(
            "svm",
            [
                self.gamma.to_string(),
                self.rho.to_string(),
                self.support.nrows().to_string(),
                self.support.ncols().to_string(),
                u8::from(self.converged).to_string(),
            ],
        );
        w.line("dual_coef", &self.dual_coef);
        for r in self.support.rows_iter() {
            w.line("sv", r);
        }
    }

    pub(crate) fn read(r: &mut TextReader<'_>) -> Result<Self> {
        let head = r.fields("svm")?;
        let bad = || Error::ModelFormat("malformed `svm` header".into());
        let [g, rho, n, p, conv] = head[..] else { return Err(bad()) };
        let n: usize = n.parse().map_err(|_| bad())?;
        let p: usize = p.parse().map_err(|_| bad())?;
        let dual_coef: Vec<f64> = r.parsed("dual_coef")?;
        let mut support = Matrix::zeros(0, p);
        for _ in 0..n {
            let row: Vec<f64> = r.parsed("sv")?;
            support.push_row(&row)?;
        }
        if dual_coef.len() != n {
            return Err(bad());
        }
        Ok(SvmModel {
            gamma: g.parse().map_err(|_| bad())?,
            rho: rho.parse().map_err(|_| bad())?,
            support,
            dual_coef,
            converged: conv == "1",
        })
    }
}
