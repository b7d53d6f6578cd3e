//! Dataset-level cleaning (rare categories, redundancy pruning, descriptive
//! tests) and the fit/apply transforms every pipeline starts with.
//!
//! Dataset-level filters compute their statistics on a mean/mode imputed view
//! of the full labeled dataset but leave missing cells in place; in-fold
//! imputation happens inside each pipeline.

use std::collections::BTreeMap;

use crate::data::{Dataset, FeatureKind};
use crate::error::{Error, Result};
use crate::matrix::Matrix;
use crate::stats::{self, TestResult};

#[derive(Clone, Debug, PartialEq)]
pub struct PreprocessConfig {
    pub rare_category_ratio: f64,
    pub nmi_threshold: f64,
    pub correlation_threshold: f64,
    pub alpha: f64,
    /// Continuity correction for 2x2 chi-square tables.
    pub yates: bool,
}

impl Default for PreprocessConfig {
    fn default() -> Self {
        PreprocessConfig {
            rare_category_ratio: 0.10,
            nmi_threshold: 0.5,
            correlation_threshold: 0.8,
            alpha: stats::DEFAULT_ALPHA,
            yates: false,
        }
    }
}

impl PreprocessConfig {
    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("rare_category_ratio", self.rare_category_ratio),
            ("nmi_threshold", self.nmi_threshold),
            ("correlation_threshold", self.correlation_threshold),
            ("alpha", self.alpha),
        ] {
            if !(v > 0.0 && v < 1.0) {
                return Err(Error::Config(format!("{name} = {v} must lie in (0, 1)")));
            }
        }
        Ok(())
    }
}

/// A stateful in-pipeline step, fitted on training rows only.
#[derive(Clone, Debug, PartialEq)]
pub enum FittedTransform {
    /// Per-feature fill value: mode for categorical, mean for numeric.
    Impute { fill: Vec<f64> },
    VarianceFilter { keep: Vec<bool> },
    /// Per-feature mean and population standard deviation.
    Standardize { mean: Vec<f64>, sd: Vec<f64> },
}

impl FittedTransform {
    pub fn name(&self) -> &'static str {
        match self {
            FittedTransform::Impute { .. } => "impute",
            FittedTransform::VarianceFilter { .. } => "variance_filter",
            FittedTransform::Standardize { .. } => "standardize",
        }
    }

    pub fn input_width(&self) -> usize {
        match self {
            FittedTransform::Impute { fill } => fill.len(),
            FittedTransform::VarianceFilter { keep } => keep.len(),
            FittedTransform::Standardize { mean, .. } => mean.len(),
        }
    }

    pub fn output_width(&self) -> usize {
        match self {
            FittedTransform::VarianceFilter { keep } => keep.iter().filter(|&&k| k).count(),
            other => other.input_width(),
        }
    }

    pub fn apply(&self, x: &Matrix) -> Result<Matrix> {
        x.ensure_width(self.input_width())?;
        Ok(match self {
            FittedTransform::Impute { fill } => {
                let mut out = x.clone();
                for i in 0..out.nrows() {
                    for (v, f) in out.row_mut(i).iter_mut().zip(fill) {
                        if v.is_nan() {
                            *v = *f;
                        }
                    }
                }
                out
            }
            FittedTransform::VarianceFilter { keep } => x.select_columns(keep),
            FittedTransform::Standardize { mean, sd } => {
                let mut out = x.clone();
                for i in 0..out.nrows() {
                    for ((v, m), s) in out.row_mut(i).iter_mut().zip(mean).zip(sd) {
                        *v = if *s > 0.0 { (*v - m) / s } else { 0.0 };
                    }
                }
                out
            }
        })
    }
}

pub fn apply_transform(t: &FittedTransform, x: &Matrix) -> Result<Matrix> {
    t.apply(x)
}

fn observed(x: &Matrix, j: usize) -> impl Iterator<Item = f64> + '_ {
    (0..x.nrows()).map(move |i| x.get(i, j)).filter(|v| !v.is_nan())
}

/// Most frequent value; ties go to the smallest value.
fn mode(values: impl Iterator<Item = f64>) -> Option<f64> {
    let mut counts: BTreeMap<i64, usize> = BTreeMap::new();
    for v in values {
        *counts.entry(v.round() as i64).or_default() += 1;
    }
    let mut best: Option<(i64, usize)> = None;
    for (v, c) in counts {
        if best.is_none_or(|(_, bc)| c > bc) {
            best = Some((v, c));
        }
    }
    best.map(|(v, _)| v as f64)
}

pub fn fit_impute(x: &Matrix, kinds: &[FeatureKind]) -> Result<FittedTransform> {
    if kinds.len() != x.ncols() {
        return Err(Error::WidthMismatch {
            expected: kinds.len(),
            actual: x.ncols(),
        });
    }
    let fill = kinds
        .iter()
        .enumerate()
        .map(|(j, kind)| {
            let v = if kind.is_categorical() {
                mode(observed(x, j))
            } else {
                let vals: Vec<f64> = observed(x, j).collect();
                (!vals.is_empty()).then(|| stats::mean(&vals))
            };
            v.ok_or_else(|| Error::Degenerate(format!("feature {j} is entirely missing")))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(FittedTransform::Impute { fill })
}

/// Drops features whose observed values are all equal.
pub fn fit_variance_filter(x: &Matrix) -> Result<FittedTransform> {
    let keep: Vec<bool> = (0..x.ncols())
        .map(|j| {
            let mut it = observed(x, j);
            match it.next() {
                None => false,
                Some(first) => it.any(|v| v != first),
            }
        })
        .collect();
    if !keep.iter().any(|&k| k) {
        return Err(Error::Degenerate("no features remain after variance filtering".into()));
    }
    Ok(FittedTransform::VarianceFilter { keep })
}

pub fn fit_standardize(x: &Matrix) -> Result<FittedTransform> {
    let mut mean = Vec::with_capacity(x.ncols());
    let mut sd = Vec::with_capacity(x.ncols());
    for j in 0..x.ncols() {
        let col: Vec<f64> = observed(x, j).collect();
        if col.is_empty() {
            mean.push(0.0);
            sd.push(0.0);
        } else {
            mean.push(stats::mean(&col));
            sd.push(stats::population_sd(&col));
        }
    }
    Ok(FittedTransform::Standardize { mean, sd })
}

/// One feature removed by a dataset-level filter.
#[derive(Clone, Debug, PartialEq)]
pub struct Removal {
    pub feature: String,
    pub filter: &'static str,
    /// Smallest category share, NMI or |rho| depending on the filter.
    pub score: f64,
    /// Association p-value with the label, where the filter uses one.
    pub p_value: Option<f64>,
    pub kept_partner: Option<String>,
}

#[derive(Clone, Debug)]
pub struct FilterOutcome {
    pub dataset: Dataset,
    pub removals: Vec<Removal>,
}

fn imputed_column(d: &Dataset, j: usize) -> Option<Vec<f64>> {
    let col = d.column(j);
    let obs: Vec<f64> = col.iter().flatten().copied().collect();
    if obs.is_empty() {
        return None;
    }
    let fill = if d.schema()[j].kind.is_categorical() {
        mode(obs.iter().copied())?
    } else {
        stats::mean(&obs)
    };
    Some(col.into_iter().map(|v| v.unwrap_or(fill)).collect())
}

fn drop_removed(d: &Dataset, removals: &[Removal]) -> Dataset {
    let keep: Vec<usize> = (0..d.n_features())
        .filter(|&j| !removals.iter().any(|r| r.feature == d.schema()[j].name))
        .collect();
    d.select_features(&keep)
}

/// Removes features with no observed value at all.
pub fn all_missing_filter(d: &Dataset) -> FilterOutcome {
    let removals: Vec<Removal> = (0..d.n_features())
        .filter(|&j| d.rows().iter().all(|r| r[j].is_none()))
        .map(|j| Removal {
            feature: d.schema()[j].name.clone(),
            filter: "all_missing",
            score: 1.0,
            p_value: None,
            kept_partner: None,
        })
        .collect();
    FilterOutcome {
        dataset: drop_removed(d, &removals),
        removals,
    }
}

/// Removes categorical features with an observed category held by at most
/// `ceil(rare_category_ratio * n)` rows.
pub fn rare_category_filter(d: &Dataset, cfg: &PreprocessConfig) -> FilterOutcome {
    let n = d.n_rows();
    let threshold = (cfg.rare_category_ratio * n as f64).ceil() as usize;
    let mut removals = Vec::new();
    for (j, f) in d.schema().iter().enumerate() {
        if !f.kind.is_categorical() {
            continue;
        }
        let Some(col) = imputed_column(d, j) else { continue };
        let mut counts: BTreeMap<i64, usize> = BTreeMap::new();
        for v in col {
            *counts.entry(v as i64).or_default() += 1;
        }
        let min = counts.values().copied().min().unwrap_or(0);
        if min > 0 && min <= threshold {
            removals.push(Removal {
                feature: f.name.clone(),
                filter: "rare_category",
                score: min as f64 / n as f64,
                p_value: None,
                kept_partner: None,
            });
        }
    }
    FilterOutcome {
        dataset: drop_removed(d, &removals),
        removals,
    }
}

/// Category-by-label contingency table over the observed categories.
pub(crate) fn label_contingency(values: &[f64], labels: &[u8]) -> Vec<Vec<f64>> {
    let mut table: BTreeMap<i64, [f64; 2]> = BTreeMap::new();
    for (&v, &l) in values.iter().zip(labels) {
        table.entry(v.round() as i64).or_insert([0.0; 2])[usize::from(l)] += 1.0;
    }
    table.into_values().map(|r| r.to_vec()).collect()
}

fn chi_square_vs_labels(values: &[f64], labels: &[u8], yates: bool) -> Result<TestResult> {
    stats::chi_square_with(&label_contingency(values, labels), yates)
}

fn split_by_label(values: &[f64], labels: &[u8]) -> (Vec<f64>, Vec<f64>) {
    let mut pos = Vec::new();
    let mut neg = Vec::new();
    for (&v, &l) in values.iter().zip(labels) {
        if l == 1 {
            pos.push(v);
        } else {
            neg.push(v);
        }
    }
    (pos, neg)
}

fn mann_whitney_vs_labels(values: &[f64], labels: &[u8]) -> Result<TestResult> {
    let (pos, neg) = split_by_label(values, labels);
    stats::mann_whitney_u(&pos, &neg)
}

/// Pairwise redundancy pruning shared by the NMI and Spearman filters.
///
/// Pairs above `threshold` are visited in descending association order; the
/// member with the larger label p-value is dropped (ties drop the later
/// feature).
fn prune_pairs(
    d: &Dataset,
    members: &[usize],
    columns: &BTreeMap<usize, Vec<f64>>,
    threshold: f64,
    filter: &'static str,
    association: impl Fn(&[f64], &[f64]) -> Option<f64>,
    label_p: impl Fn(&[f64]) -> f64,
) -> FilterOutcome {
    let mut pairs = Vec::new();
    for (a, &i) in members.iter().enumerate() {
        for &j in &members[a + 1..] {
            if let Some(s) = association(&columns[&i], &columns[&j]) {
                if s > threshold {
                    pairs.push((s, i, j));
                }
            }
        }
    }
    pairs.sort_by(|a, b| b.0.total_cmp(&a.0).then(a.1.cmp(&b.1)).then(a.2.cmp(&b.2)));
    let p: BTreeMap<usize, f64> = members.iter().map(|&j| (j, label_p(&columns[&j]))).collect();
    let mut removed = vec![false; d.n_features()];
    let mut removals = Vec::new();
    for (score, i, j) in pairs {
        if removed[i] || removed[j] {
            continue;
        }
        let (drop, keep) = if p[&j] >= p[&i] { (j, i) } else { (i, j) };
        removed[drop] = true;
        removals.push(Removal {
            feature: d.schema()[drop].name.clone(),
            filter,
            score,
            p_value: Some(p[&drop]),
            kept_partner: Some(d.schema()[keep].name.clone()),
        });
    }
    FilterOutcome {
        dataset: drop_removed(d, &removals),
        removals,
    }
}

/// Prunes categorical pairs whose normalized mutual information exceeds the
/// threshold, keeping the member more associated with the label (chi-square).
pub fn nmi_redundancy_filter(d: &Dataset, cfg: &PreprocessConfig) -> Result<FilterOutcome> {
    let labels = d.require_labels()?.to_vec();
    let members: Vec<usize> = (0..d.n_features())
        .filter(|&j| d.schema()[j].kind.is_categorical())
        .collect();
    let columns: BTreeMap<usize, Vec<f64>> = members
        .iter()
        .filter_map(|&j| imputed_column(d, j).map(|c| (j, c)))
        .collect();
    let members: Vec<usize> = members.into_iter().filter(|j| columns.contains_key(j)).collect();
    let as_codes = |v: &[f64]| v.iter().map(|x| x.round() as i64).collect::<Vec<_>>();
    Ok(prune_pairs(
        d,
        &members,
        &columns,
        cfg.nmi_threshold,
        "nmi_redundancy",
        |a, b| stats::normalized_mutual_information(&as_codes(a), &as_codes(b)).ok(),
        |c| chi_square_vs_labels(c, &labels, cfg.yates).map_or(1.0, |r| r.p_value),
    ))
}

/// Prunes numeric pairs with |Spearman rho| above the threshold, keeping the
/// member more associated with the label (Mann-Whitney).
pub fn correlation_redundancy_filter(d: &Dataset, cfg: &PreprocessConfig) -> Result<FilterOutcome> {
    let labels = d.require_labels()?.to_vec();
    if d.n_rows() < 3 {
        return Err(Error::InvalidInput("correlation filter needs at least 3 rows".into()));
    }
    let members: Vec<usize> = (0..d.n_features())
        .filter(|&j| !d.schema()[j].kind.is_categorical())
        .collect();
    let columns: BTreeMap<usize, Vec<f64>> = members
        .iter()
        .filter_map(|&j| imputed_column(d, j).map(|c| (j, c)))
        .collect();
    let members: Vec<usize> = members.into_iter().filter(|j| columns.contains_key(j)).collect();
    Ok(prune_pairs(
        d,
        &members,
        &columns,
        cfg.correlation_threshold,
        "correlation_redundancy",
        |a, b| stats::spearman(a, b).ok().map(|r| r.statistic.abs()),
        |c| mann_whitney_vs_labels(c, &labels).map_or(1.0, |r| r.p_value),
    ))
}

/// Full dataset cleaning: empty columns, rare categories, NMI redundancy,
/// then correlation redundancy.
pub fn clean_dataset(d: &Dataset, cfg: &PreprocessConfig) -> Result<FilterOutcome> {
    let mut removals = Vec::new();
    let step = all_missing_filter(d);
    removals.extend(step.removals);
    let step = rare_category_filter(&step.dataset, cfg);
    removals.extend(step.removals);
    let step = nmi_redundancy_filter(&step.dataset, cfg)?;
    removals.extend(step.removals);
    let step = correlation_redundancy_filter(&step.dataset, cfg)?;
    removals.extend(step.removals);
    Ok(FilterOutcome {
        dataset: step.dataset,
        removals,
    })
}

/// One line of the descriptive table.
#[derive(Clone, Debug, PartialEq)]
pub struct DescribeRow {
    pub feature: String,
    pub kind: FeatureKind,
    /// `None` when the test is undefined (e.g. a single observed category).
    pub test: Option<TestResult>,
    pub significant: bool,
    pub missing_count: usize,
    pub missing_ratio: f64,
}

/// Mann-Whitney (numeric) or chi-square (categorical) test of every feature
/// against the label, over observed values.
pub fn describe_dataset(d: &Dataset, cfg: &PreprocessConfig) -> Result<Vec<DescribeRow>> {
    let labels = d.require_labels()?;
    let n = d.n_rows();
    Ok(d
        .schema()
        .iter()
        .enumerate()
        .map(|(j, f)| {
            let col = d.column(j);
            let missing_count = col.iter().filter(|v| v.is_none()).count();
            let (values, labs): (Vec<f64>, Vec<u8>) = col
                .iter()
                .zip(labels)
                .filter_map(|(v, &l)| v.map(|v| (v, l)))
                .unzip();
            let test = if f.kind.is_categorical() {
                chi_square_vs_labels(&values, &labs, cfg.yates).ok()
            } else {
                mann_whitney_vs_labels(&values, &labs).ok()
            };
            let significant = test.as_ref().is_some_and(|t| t.p_value < cfg.alpha);
            DescribeRow {
                feature: f.name.clone(),
                kind: f.kind,
                test,
                significant,
                missing_count,
                missing_ratio: if n == 0 { 0.0 } else { missing_count as f64 / n as f64 },
            }
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::{FeatureSchema, Timepoint};

    const NAN: f64 = f64::NAN;

    fn m(rows: &[&[f64]]) -> Matrix {
        Matrix::from_rows(rows).unwrap()
    }

    fn bin(name: &str) -> FeatureSchema {
        FeatureSchema::categorical(name, FeatureKind::Binary, ["no", "yes"], Timepoint::T0)
    }

    fn num(name: &str) -> FeatureSchema {
        FeatureSchema::numeric(name, Timepoint::T0)
    }

    fn dataset(schema: Vec<FeatureSchema>, cols: Vec<Vec<f64>>, labels: Vec<u8>) -> Dataset {
        let n = labels.len();
        let rows = (0..n).map(|i| cols.iter().map(|c| Some(c[i])).collect()).collect();
        Dataset::new(schema, rows, (0..n).map(|i| format!("r{i}")).collect(), Some(labels)).unwrap()
    }

    #[test]
    fn impute_mean_and_mode() {
        let x = m(&[&[2.0, 0.0], &[NAN, 0.0], &[4.0, 1.0], &[3.0, NAN]]);
        let t = fit_impute(&x, &[FeatureKind::Numeric, FeatureKind::Binary]).unwrap();
        assert_eq!(t, FittedTransform::Impute { fill: vec![3.0, 0.0] });
        let out = t.apply(&x).unwrap();
        assert_eq!(out.row(1), &[3.0, 0.0]);
        assert_eq!(out.row(3), &[3.0, 0.0]);
    }

    #[test]
    fn impute_mode_tie_takes_smallest_code() {
        let x = m(&[&[1.0], &[0.0], &[1.0], &[0.0], &[NAN]]);
        let t = fit_impute(&x, &[FeatureKind::Binary]).unwrap();
        assert_eq!(t, FittedTransform::Impute { fill: vec![0.0] });
    }

    #[test]
    fn impute_errors_on_empty_feature_and_is_identity_on_complete_rows() {
        let x = m(&[&[NAN], &[NAN]]);
        assert!(fit_impute(&x, &[FeatureKind::Numeric]).is_err());
        let full = m(&[&[1.0, 2.0], &[3.0, 4.0]]);
        let t = fit_impute(&full, &[FeatureKind::Numeric; 2]).unwrap();
        assert_eq!(t.apply(&full).unwrap(), full);
    }

    #[test]
    fn variance_filter_rules() {
        let x = m(&[&[7.0, 7.0, 1.0], &[7.0, 7.0001, 2.0]]);
        let t = fit_variance_filter(&x).unwrap();
        assert_eq!(t, FittedTransform::VarianceFilter { keep: vec![false, true, true] });
        assert_eq!(t.apply(&x).unwrap().ncols(), 2);
        let constant = m(&[&[1.0, 2.0], &[1.0, 2.0]]);
        assert!(fit_variance_filter(&constant).is_err());
    }

    #[test]
    fn standardize_train_and_held_out() {
        let x = m(&[&[1.0, 5.0], &[2.0, 5.0], &[3.0, 5.0]]);
        let t = fit_standardize(&x).unwrap();
        let z = t.apply(&x).unwrap();
        let col = z.column(0);
        assert!(stats::mean(&col).abs() < 1e-9);
        assert!((stats::population_sd(&col) - 1.0).abs() < 1e-9);
        assert_eq!(z.column(1), vec![0.0; 3]);
        let held = t.apply(&m(&[&[10.0, 1.0]])).unwrap();
        assert!(held.get(0, 0) > 0.0);
        assert!(t.apply(&m(&[&[1.0]])).is_err());
    }

    #[test]
    fn refit_on_transformed_train_is_idempotent() {
        let x = m(&[&[1.0, 0.0], &[4.0, 1.0], &[9.0, 1.0], &[2.0, 0.0]]);
        let t = fit_standardize(&x).unwrap();
        let z = t.apply(&x).unwrap();
        let t2 = fit_standardize(&z).unwrap();
        let z2 = t2.apply(&z).unwrap();
        for (a, b) in z.as_slice().iter().zip(z2.as_slice()) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn rare_categories_removed_at_ten_percent() {
        let n = 42;
        let rare: Vec<f64> = (0..n).map(|i| if i < 4 { 1.0 } else { 0.0 }).collect();
        let balanced: Vec<f64> = (0..n).map(|i| (i % 2) as f64).collect();
        let numeric: Vec<f64> = (0..n).map(|i| if i < 1 { 100.0 } else { i as f64 }).collect();
        let labels: Vec<u8> = (0..n).map(|i| u8::from(i < 24)).collect();
        let d = dataset(vec![bin("rare"), bin("balanced"), num("x")], vec![rare, balanced, numeric], labels);
        let out = rare_category_filter(&d, &PreprocessConfig::default());
        assert_eq!(out.removals.len(), 1);
        assert_eq!(out.removals[0].feature, "rare");
        assert_eq!(out.dataset.feature_names(), vec!["balanced", "x"]);

        let cfg = PreprocessConfig {
            rare_category_ratio: 0.0,
            ..Default::default()
        };
        assert!(rare_category_filter(&d, &cfg).removals.is_empty());
    }

    #[test]
    fn duplicated_categorical_removed_once() {
        let n = 40;
        let a: Vec<f64> = (0..n).map(|i| ((i * 7) % 3 == 0) as u8 as f64).collect();
        let labels: Vec<u8> = (0..n).map(|i| u8::from(i % 3 == 0)).collect();
        let other: Vec<f64> = (0..n).map(|i| (i % 2) as f64).collect();
        let d = dataset(vec![bin("a"), bin("a_copy"), bin("other")], vec![a.clone(), a, other], labels);
        let out = nmi_redundancy_filter(&d, &PreprocessConfig::default()).unwrap();
        assert_eq!(out.removals.len(), 1);
        assert_eq!(out.removals[0].feature, "a_copy");
        assert_eq!(out.removals[0].kept_partner.as_deref(), Some("a"));
        let again = nmi_redundancy_filter(&out.dataset, &PreprocessConfig::default()).unwrap();
        assert!(again.removals.is_empty());
    }

    #[test]
    fn correlated_numeric_pair_keeps_more_significant_member() {
        let n = 30;
        let labels: Vec<u8> = (0..n).map(|i| u8::from(i >= 15)).collect();
        let x: Vec<f64> = (0..n).map(|i| i as f64).collect();
        // monotone in x but with label-wise shuffled order inside groups
        let y: Vec<f64> = (0..n).map(|i| (i as f64) * 2.0).collect();
        let noise: Vec<f64> = (0..n).map(|i| ((i * 17) % 11) as f64).collect();
        let d = dataset(vec![num("x"), num("y"), num("noise")], vec![x, y, noise], labels);
        let out = correlation_redundancy_filter(&d, &PreprocessConfig::default()).unwrap();
        assert_eq!(out.removals.len(), 1);
        assert_eq!(out.removals[0].filter, "correlation_redundancy");
        assert!((out.removals[0].score - 1.0).abs() < 1e-12);
        assert_eq!(out.dataset.n_features(), 2);
    }

    #[test]
    fn uncorrelated_columns_untouched() {
        let n = 40;
        let labels: Vec<u8> = (0..n).map(|i| u8::from(i % 2 == 0)).collect();
        let a: Vec<f64> = (0..n).map(|i| ((i * 13) % 17) as f64).collect();
        let b: Vec<f64> = (0..n).map(|i| ((i * 7) % 5) as f64).collect();
        let rho = stats::spearman(&a, &b).unwrap().statistic.abs();
        assert!(rho < 0.8);
        let d = dataset(vec![num("a"), num("b")], vec![a, b], labels);
        assert!(correlation_redundancy_filter(&d, &PreprocessConfig::default())
            .unwrap()
            .removals
            .is_empty());
    }

    #[test]
    fn describe_flags_label_copy() {
        let n = 30;
        let labels: Vec<u8> = (0..n).map(|i| u8::from(i % 2 == 0)).collect();
        let copy: Vec<f64> = labels.iter().map(|&l| f64::from(l)).collect();
        let numeric: Vec<f64> = labels.iter().enumerate().map(|(i, &l)| f64::from(l) * 10.0 + i as f64 / 100.0).collect();
        let d = dataset(vec![bin("copy"), num("num")], vec![copy, numeric], labels);
        let rows = describe_dataset(&d, &PreprocessConfig::default()).unwrap();
        assert!(rows.iter().all(|r| r.significant));
        assert!(rows[0].test.as_ref().unwrap().p_value < 1e-5);
        assert_eq!(rows[0].missing_count, 0);
    }
}
