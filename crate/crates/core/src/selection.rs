//! Optional pipeline steps: feature selectors (univariate ranking, L1
//! logistic regression, recursive elimination with a random forest) and the
//! SMOTE oversampler.

use std::fmt;
use std::str::FromStr;

use rand::Rng;
use statrs::distribution::{ChiSquared, ContinuousCDF};

use crate::data::FeatureKind;
use crate::error::{Error, Result};
use crate::learners::{
    balanced_class_weights, fit_logistic, fmt_real, Criterion, ForestModel, Penalty,
};
use crate::matrix::Matrix;
use crate::seed::{derive_seed, rng};
use crate::stats;

pub const COMBINE_PERCENTILES: [u32; 6] = [5, 10, 20, 30, 40, 50];
pub const LASSO_C_GRID: [f64; 6] = [5.0, 10.0, 20.0, 30.0, 40.0, 50.0];
pub const RFE_STEP: f64 = 0.1;
pub const RFE_TARGETS: [f64; 3] = [0.4, 0.6, 0.8];
pub const RFE_ESTIMATORS: usize = 100;
pub const SMOTE_NEIGHBORS: [usize; 3] = [3, 4, 5];
/// Coefficients at or below this magnitude count as eliminated.
pub const LASSO_ZERO: f64 = 1e-8;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum SelectorMethod {
    None,
    CombineFs,
    LassoFs,
    RfeRfFs,
}

impl SelectorMethod {
    pub const ALL: [SelectorMethod; 4] = [
        SelectorMethod::None,
        SelectorMethod::CombineFs,
        SelectorMethod::LassoFs,
        SelectorMethod::RfeRfFs,
    ];

    pub fn name(self) -> &'static str {
        match self {
            SelectorMethod::None => "none",
            SelectorMethod::CombineFs => "combine_fs",
            SelectorMethod::LassoFs => "lasso_fs",
            SelectorMethod::RfeRfFs => "rfe_rf_fs",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum SamplerMethod {
    None,
    Smote,
}

impl SamplerMethod {
    pub const ALL: [SamplerMethod; 2] = [SamplerMethod::None, SamplerMethod::Smote];

    pub fn name(self) -> &'static str {
        match self {
            SamplerMethod::None => "none",
            SamplerMethod::Smote => "smote",
        }
    }
}

impl fmt::Display for SelectorMethod {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl fmt::Display for SamplerMethod {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for SelectorMethod {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        SelectorMethod::ALL
            .into_iter()
            .find(|m| m.name() == s)
            .ok_or_else(|| Error::InvalidInput(format!("unknown selector `{s}`")))
    }
}

impl FromStr for SamplerMethod {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        SamplerMethod::ALL
            .into_iter()
            .find(|m| m.name() == s)
            .ok_or_else(|| Error::InvalidInput(format!("unknown sampler `{s}`")))
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum SelectorSpec {
    None,
    CombineFs { percentile: u32 },
    LassoFs { c: f64 },
    RfeRfFs { step: f64, target: f64 },
}

impl SelectorSpec {
    pub fn method(&self) -> SelectorMethod {
        match self {
            SelectorSpec::None => SelectorMethod::None,
            SelectorSpec::CombineFs { .. } => SelectorMethod::CombineFs,
            SelectorSpec::LassoFs { .. } => SelectorMethod::LassoFs,
            SelectorSpec::RfeRfFs { .. } => SelectorMethod::RfeRfFs,
        }
    }

    pub fn grid(method: SelectorMethod) -> Vec<SelectorSpec> {
        match method {
            SelectorMethod::None => vec![SelectorSpec::None],
            SelectorMethod::CombineFs => COMBINE_PERCENTILES
                .iter()
                .map(|&percentile| SelectorSpec::CombineFs { percentile })
                .collect(),
            SelectorMethod::LassoFs => LASSO_C_GRID.iter().map(|&c| SelectorSpec::LassoFs { c }).collect(),
            SelectorMethod::RfeRfFs => RFE_TARGETS
                .iter()
                .map(|&target| SelectorSpec::RfeRfFs { step: RFE_STEP, target })
                .collect(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        let ok = match self {
            SelectorSpec::None => true,
            SelectorSpec::CombineFs { percentile } => (1..=100).contains(percentile),
            SelectorSpec::LassoFs { c } => *c > 0.0 && c.is_finite(),
            SelectorSpec::RfeRfFs { step, target } => *step > 0.0 && *step <= 1.0 && *target > 0.0 && *target <= 1.0,
        };
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidInput(format!("invalid selector hyperparameters {self}")))
        }
    }

    pub fn named_values(&self) -> Vec<(&'static str, String)> {
        match self {
            SelectorSpec::None => Vec::new(),
            SelectorSpec::CombineFs { percentile } => vec![("percentile", percentile.to_string())],
            SelectorSpec::LassoFs { c } => vec![("C", fmt_real(*c))],
            SelectorSpec::RfeRfFs { step, target } => {
                vec![("step", fmt_real(*step)), ("n_features_to_select", fmt_real(*target))]
            }
        }
    }
}

impl fmt::Display for SelectorSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write_spec(f, self.method().name(), &self.named_values())
    }
}

fn write_spec(f: &mut fmt::Formatter<'_>, name: &str, values: &[(&'static str, String)]) -> fmt::Result {
    f.write_str(name)?;
    if !values.is_empty() {
        let inner: Vec<String> = values.iter().map(|(k, v)| format!("{k}={v}")).collect();
        write!(f, "({})", inner.join(","))?;
    }
    Ok(())
}

#[derive(Clone, Debug, PartialEq)]
pub enum SamplerSpec {
    None,
    Smote { k: usize },
}

impl SamplerSpec {
    pub fn method(&self) -> SamplerMethod {
        match self {
            SamplerSpec::None => SamplerMethod::None,
            SamplerSpec::Smote { .. } => SamplerMethod::Smote,
        }
    }

    pub fn grid(method: SamplerMethod) -> Vec<SamplerSpec> {
        match method {
            SamplerMethod::None => vec![SamplerSpec::None],
            SamplerMethod::Smote => SMOTE_NEIGHBORS.iter().map(|&k| SamplerSpec::Smote { k }).collect(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            SamplerSpec::Smote { k: 0 } => Err(Error::InvalidInput("SMOTE needs n_neighbors >= 1".into())),
            _ => Ok(()),
        }
    }

    pub fn named_values(&self) -> Vec<(&'static str, String)> {
        match self {
            SamplerSpec::None => Vec::new(),
            SamplerSpec::Smote { k } => vec![("n_neighbors", k.to_string())],
        }
    }
}

impl fmt::Display for SamplerSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write_spec(f, self.method().name(), &self.named_values())
    }
}

/// A feature mask plus any fallback the selector had to take.
#[derive(Clone, Debug, PartialEq)]
pub struct Selection {
    pub mask: Vec<bool>,
    pub warning: Option<String>,
}

/// `ceil(fraction * p)`, at least one.
fn keep_count(fraction: f64, p: usize) -> usize {
    ((fraction * p as f64 - 1e-9).ceil() as usize).clamp(1, p.max(1))
}

/// Chi-square score of a nonnegative feature against the label:
/// class-wise feature sums compared with their share under independence.
fn chi2_score(x: &[f64], y: &[u8]) -> (f64, f64) {
    let min = x.iter().copied().fold(f64::INFINITY, f64::min);
    let shift = if min < 0.0 { -min } else { 0.0 };
    let n = y.len() as f64;
    let mut observed = [0.0; 2];
    let mut count = [0.0; 2];
    for (&v, &l) in x.iter().zip(y) {
        observed[usize::from(l)] += v + shift;
        count[usize::from(l)] += 1.0;
    }
    let total = observed[0] + observed[1];
    let mut chi = 0.0;
    for c in 0..2 {
        let expected = total * count[c] / n;
        if expected > 0.0 {
            chi += (observed[c] - expected).powi(2) / expected;
        }
    }
    if total <= 0.0 {
        return (0.0, 1.0);
    }
    let p = ChiSquared::new(1.0).map_or(1.0, |d| d.sf(chi));
    (chi, p)
}

/// Per-feature (statistic, p): ANOVA F for numeric, chi-square for categorical.
pub fn univariate_scores(x: &Matrix, y: &[u8], kinds: &[FeatureKind]) -> Result<Vec<(f64, f64)>> {
    x.ensure_width(kinds.len())?;
    Ok((0..x.ncols())
        .map(|j| {
            let col = x.column(j);
            if kinds[j].is_categorical() {
                chi2_score(&col, y)
            } else {
                match stats::anova_f(&col, y) {
                    Ok(r) if r.p_value.is_finite() => (r.statistic, r.p_value),
                    _ => (0.0, 1.0),
                }
            }
        })
        .collect())
}

/// Keeps the `ceil(percentile% of p)` features with the smallest p-values.
/// Expects imputed, unstandardized values so categorical codes stay nonnegative.
pub fn combine_fs(x: &Matrix, y: &[u8], kinds: &[FeatureKind], percentile: u32) -> Result<Vec<bool>> {
    let scores = univariate_scores(x, y, kinds)?;
    let p = scores.len();
    let k = keep_count(f64::from(percentile) / 100.0, p);
    let mut order: Vec<usize> = (0..p).collect();
    order.sort_by(|&a, &b| {
        scores[a]
            .1
            .total_cmp(&scores[b].1)
            .then(scores[b].0.total_cmp(&scores[a].0))
            .then(a.cmp(&b))
    });
    let mut mask = vec![false; p];
    for &j in &order[..k] {
        mask[j] = true;
    }
    Ok(mask)
}

/// Features with nonzero L1-logistic coefficients at inverse strength `c`.
pub fn lasso_fs(x: &Matrix, y: &[u8], c: f64) -> Selection {
    let p = x.ncols();
    let model = fit_logistic(x, y, &vec![1.0; y.len()], c, Penalty::L1);
    if !model.converged {
        return Selection {
            mask: vec![true; p],
            warning: Some(format!("lasso_fs did not converge at C={c}; keeping all features")),
        };
    }
    let mut mask: Vec<bool> = model.coef.iter().map(|v| v.abs() > LASSO_ZERO).collect();
    let mut warning = None;
    if !mask.iter().any(|&m| m) && p > 0 {
        // the feature that would enter the path first
        let pos = y.iter().filter(|&&l| l == 1).count() as f64 / y.len() as f64;
        let score = |j: usize| -> f64 {
            (0..x.nrows())
                .map(|i| x.get(i, j) * (f64::from(y[i]) - pos))
                .sum::<f64>()
                .abs()
        };
        let best = (0..p).fold(0, |b, j| if score(j) > score(b) { j } else { b });
        mask[best] = true;
        warning = Some(format!("lasso_fs eliminated every feature at C={c}; kept the strongest one"));
    }
    Selection { mask, warning }
}

/// Recursive elimination driven by random-forest importances. Removes the
/// `ceil(step * current)` least important features per round until
/// `ceil(target * p)` remain.
pub fn rfe_rf_fs(x: &Matrix, y: &[u8], step: f64, target: f64, seed: u64) -> Result<Vec<bool>> {
    Ok(rfe_rf_masks(x, y, step, &[target], seed)?.remove(0))
}

/// One elimination path shared by several targets; equal to calling
/// [`rfe_rf_fs`] once per target.
pub fn rfe_rf_masks(x: &Matrix, y: &[u8], step: f64, targets: &[f64], seed: u64) -> Result<Vec<Vec<bool>>> {
    let p = x.ncols();
    if !(step > 0.0 && step <= 1.0) {
        return Err(Error::InvalidInput(format!("RFE step {step} outside (0, 1]")));
    }
    let wanted: Vec<usize> = targets
        .iter()
        .map(|&t| {
            if !(t > 0.0 && t <= 1.0) {
                Err(Error::InvalidInput(format!("RFE target fraction {t} outside (0, 1]")))
            } else {
                Ok(keep_count(t, p))
            }
        })
        .collect::<Result<_>>()?;
    let weights = {
        let cw = balanced_class_weights(y);
        y.iter().map(|&l| cw[usize::from(l)]).collect::<Vec<_>>()
    };
    let mut out: Vec<Option<Vec<bool>>> = vec![None; targets.len()];
    let mut active: Vec<usize> = (0..p).collect();
    let mask_of = |cols: &[usize]| {
        let mut m = vec![false; p];
        cols.iter().for_each(|&j| m[j] = true);
        m
    };
    let mut round = 0u64;
    loop {
        for (slot, &w) in out.iter_mut().zip(&wanted) {
            if slot.is_none() && active.len() == w {
                *slot = Some(mask_of(&active));
            }
        }
        if out.iter().all(Option::is_some) {
            break;
        }
        let forest = ForestModel::fit(
            &x.select_columns(&mask_of(&active)),
            y,
            &weights,
            RFE_ESTIMATORS,
            Criterion::Gini,
            None,
            derive_seed(seed, &[round]),
        );
        // least important first; ties remove the earlier column
        let mut order: Vec<usize> = (0..active.len()).collect();
        order.sort_by(|&a, &b| forest.importances[a].total_cmp(&forest.importances[b]).then(a.cmp(&b)));
        let without = |k: usize| -> Vec<usize> {
            let mut drop = vec![false; active.len()];
            order[..k].iter().for_each(|&i| drop[i] = true);
            active.iter().zip(&drop).filter(|(_, &d)| !d).map(|(&j, _)| j).collect()
        };
        let per_round = ((step * active.len() as f64).ceil() as usize).max(1);
        // targets this round overshoots stop early with a clamped removal
        for (slot, &w) in out.iter_mut().zip(&wanted) {
            if slot.is_none() && w + per_round > active.len() {
                *slot = Some(mask_of(&without(active.len() - w)));
            }
        }
        if out.iter().all(Option::is_some) {
            break;
        }
        active = without(per_round);
        round += 1;
    }
    Ok(out.into_iter().map(|m| m.unwrap_or_else(|| vec![true; p])).collect())
}

#[derive(Clone, Debug, PartialEq)]
pub struct SmoteOutcome {
    pub x: Matrix,
    pub y: Vec<u8>,
    pub n_synthetic: usize,
    pub warning: Option<String>,
}

/// Oversamples the minority label up to the majority count. Synthetic rows
/// are appended after the original rows.
pub fn smote(x: &Matrix, y: &[u8], k: usize, seed: u64) -> Result<SmoteOutcome> {
    if k == 0 {
        return Err(Error::InvalidInput("SMOTE needs n_neighbors >= 1".into()));
    }
    let pos = y.iter().filter(|&&l| l == 1).count();
    let neg = y.len() - pos;
    let unchanged = |warning| SmoteOutcome {
        x: x.clone(),
        y: y.to_vec(),
        n_synthetic: 0,
        warning,
    };
    if pos == neg {
        return Ok(unchanged(None));
    }
    let minority_label = u8::from(pos < neg);
    let minority: Vec<usize> = (0..y.len()).filter(|&i| y[i] == minority_label).collect();
    if minority.len() <= k {
        return Ok(unchanged(Some(format!(
            "SMOTE skipped: {} minority rows do not exceed n_neighbors={k}",
            minority.len()
        ))));
    }
    let need = pos.max(neg) - minority.len();
    // k nearest minority neighbours of each minority row, excluding itself
    let neighbours: Vec<Vec<usize>> = minority
        .iter()
        .map(|&i| {
            let mut d: Vec<(f64, usize)> = minority
                .iter()
                .filter(|&&j| j != i)
                .map(|&j| {
                    let d2: f64 = x.row(i).iter().zip(x.row(j)).map(|(a, b)| (a - b) * (a - b)).sum();
                    (d2, j)
                })
                .collect();
            d.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
            d.into_iter().take(k).map(|(_, j)| j).collect()
        })
        .collect();
    let mut r = rng(seed);
    let mut out = x.clone();
    let mut labels = y.to_vec();
    for _ in 0..need {
        let a = r.gen_range(0..minority.len());
        let b = neighbours[a][r.gen_range(0..k)];
        let u: f64 = r.gen();
        let row: Vec<f64> = x
            .row(minority[a])
            .iter()
            .zip(x.row(b))
            .map(|(xa, xb)| xa + u * (xb - xa))
            .collect();
        out.push_row(&row)?;
        labels.push(minority_label);
    }
    Ok(SmoteOutcome {
        x: out,
        y: labels,
        n_synthetic: need,
        warning: None,
    })
}
