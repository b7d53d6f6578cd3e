//! Metrics, stratified fold construction, inner hyperparameter selection,
//! outer cross-validation, ranking, paired comparison, ROC and learning curves.
//!
//! Standard deviations use the population denominator throughout.

use rand::seq::SliceRandom;
use rayon::prelude::*;

use crate::data::{label_indices, stratified_split, FeatureKind};
use crate::error::{Error, Result};
use crate::learners::{self, Algorithm, LearnerParams, LearnerSpec};
use crate::matrix::Matrix;
use crate::pipeline::{
    fit_pipeline, prepare, sample_rows, select_grid, step_seeds, Assignment, Family, FittedPipeline, Metric, Prepared,
};
use crate::seed::{derive_seed, rng, step};
use crate::selection::{SamplerMethod, SamplerSpec, Selection, SelectorMethod, SelectorSpec};
use crate::stats::{self, TestResult};

#[derive(Clone, Debug, PartialEq)]
pub struct MetricSet {
    pub precision_weighted: f64,
    pub recall_weighted: f64,
    pub f1_weighted: f64,
    /// Absent when scores were not supplied or only one label is present.
    pub auc: Option<f64>,
    /// `confusion[true_label][predicted_label]`.
    pub confusion: [[usize; 2]; 2],
    /// Some present label had an undefined precision, recall or f1 (scored 0).
    pub zero_division: bool,
}

impl MetricSet {
    pub fn get(&self, metric: Metric) -> f64 {
        match metric {
            Metric::F1Weighted => self.f1_weighted,
            Metric::PrecisionWeighted => self.precision_weighted,
        }
    }

    pub fn n(&self) -> usize {
        self.confusion.iter().flatten().sum()
    }
}

fn ratio(num: usize, den: usize, undefined: &mut bool) -> f64 {
    if den == 0 {
        *undefined = true;
        0.0
    } else {
        num as f64 / den as f64
    }
}

/// Support-weighted precision, recall and f1 with 0/0 scored as 0.
pub fn weighted_metrics(y_true: &[u8], y_pred: &[u8], scores: Option<&[f64]>) -> Result<MetricSet> {
    if y_true.len() != y_pred.len() || scores.is_some_and(|s| s.len() != y_true.len()) {
        return Err(Error::InvalidInput("metric inputs differ in length".into()));
    }
    if y_true.is_empty() {
        return Err(Error::InvalidInput("metrics need at least one row".into()));
    }
    if y_true.iter().chain(y_pred).any(|&l| l > 1) {
        return Err(Error::InvalidInput("labels must be 0 or 1".into()));
    }
    let mut confusion = [[0usize; 2]; 2];
    for (&t, &p) in y_true.iter().zip(y_pred) {
        confusion[usize::from(t)][usize::from(p)] += 1;
    }
    let n = y_true.len();
    let mut zero_division = false;
    let (mut prec, mut rec, mut f1) = (0.0, 0.0, 0.0);
    for c in 0..2 {
        let tp = confusion[c][c];
        let support = confusion[c][0] + confusion[c][1];
        let predicted = confusion[0][c] + confusion[1][c];
        if support == 0 && predicted == 0 {
            continue;
        }
        let mut undefined = false;
        let p = ratio(tp, predicted, &mut undefined);
        let r = ratio(tp, support, &mut undefined);
        let f = ratio(2 * tp, 2 * tp + (predicted - tp) + (support - tp), &mut undefined);
        zero_division |= undefined;
        let s = support as f64;
        prec += s * p;
        rec += s * r;
        f1 += s * f;
    }
    Ok(MetricSet {
        precision_weighted: prec / n as f64,
        recall_weighted: rec / n as f64,
        f1_weighted: f1 / n as f64,
        auc: scores.and_then(|s| auc(y_true, s)),
        confusion,
        zero_division,
    })
}

/// Probability that a random positive outscores a random negative, ties
/// counting one half. `None` unless both labels are present.
pub fn auc(y_true: &[u8], scores: &[f64]) -> Option<f64> {
    let pos = y_true.iter().filter(|&&l| l == 1).count();
    let neg = y_true.len() - pos;
    if pos == 0 || neg == 0 {
        return None;
    }
    let ranks = stats::average_ranks(scores);
    let rank_sum: f64 = ranks.iter().zip(y_true).filter(|(_, &l)| l == 1).map(|(r, _)| r).sum();
    Some((rank_sum - (pos * (pos + 1)) as f64 / 2.0) / (pos * neg) as f64)
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RocPoint {
    /// Rows scoring at or above this value are called positive.
    pub threshold: f64,
    pub fpr: f64,
    pub tpr: f64,
}

/// Threshold sweep over the distinct scores, from (0, 0) to (1, 1).
pub fn roc_curve(y_true: &[u8], scores: &[f64]) -> Result<Vec<RocPoint>> {
    if y_true.len() != scores.len() {
        return Err(Error::InvalidInput("labels and scores differ in length".into()));
    }
    let pos = y_true.iter().filter(|&&l| l == 1).count();
    let neg = y_true.len() - pos;
    if pos == 0 || neg == 0 {
        return Err(Error::Degenerate("ROC curve needs both labels".into()));
    }
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[b].total_cmp(&scores[a]));
    let mut points = vec![RocPoint {
        threshold: f64::INFINITY,
        fpr: 0.0,
        tpr: 0.0,
    }];
    let (mut tp, mut fp) = (0usize, 0usize);
    let mut i = 0;
    while i < order.len() {
        let t = scores[order[i]];
        while i < order.len() && scores[order[i]] == t {
            if y_true[order[i]] == 1 {
                tp += 1;
            } else {
                fp += 1;
            }
            i += 1;
        }
        points.push(RocPoint {
            threshold: t,
            fpr: fp as f64 / neg as f64,
            tpr: tp as f64 / pos as f64,
        });
    }
    Ok(points)
}

pub fn trapezoid_area(points: &[RocPoint]) -> f64 {
    points
        .windows(2)
        .map(|w| (w[1].fpr - w[0].fpr) * (w[1].tpr + w[0].tpr) / 2.0)
        .sum()
}

/// `k` disjoint folds. Each label's rows are shuffled, the label lists are
/// concatenated, and rows are dealt round-robin, so fold sizes and per-label
/// counts differ by at most one.
pub fn stratified_kfold(labels: &[u8], k: usize, seed: u64) -> Result<Vec<Vec<usize>>> {
    if k < 2 || k > labels.len() {
        return Err(Error::InvalidInput(format!("k={k} folds for {} rows", labels.len())));
    }
    if labels.iter().any(|&l| l > 1) {
        return Err(Error::InvalidInput("labels must be 0 or 1".into()));
    }
    let mut by_label = label_indices(labels);
    if by_label.iter().any(Vec::is_empty) {
        return Err(Error::Degenerate("stratified folds need both labels".into()));
    }
    let mut r = rng(seed);
    let mut folds = vec![Vec::new(); k];
    let mut pos = 0;
    for idx in by_label.iter_mut() {
        idx.shuffle(&mut r);
        for &i in idx.iter() {
            folds[pos % k].push(i);
            pos += 1;
        }
    }
    folds.iter_mut().for_each(|f| f.sort_unstable());
    Ok(folds)
}

fn complement(n: usize, fold: &[usize]) -> Vec<usize> {
    let mut hold = vec![false; n];
    fold.iter().for_each(|&i| hold[i] = true);
    (0..n).filter(|&i| !hold[i]).collect()
}

pub fn mean_sd(values: &[f64]) -> (f64, f64) {
    (stats::mean(values), stats::population_sd(values))
}

/// How the inner loop splits training rows into fit and validation parts.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum InnerScheme {
    /// Repeated stratified splits holding out `test_ratio` of the rows.
    Resample { repeats: usize, test_ratio: f64 },
    KFold { k: usize },
}

impl Default for InnerScheme {
    fn default() -> Self {
        InnerScheme::Resample {
            repeats: 10,
            test_ratio: 0.3,
        }
    }
}

/// (fit rows, validation rows) pairs.
pub fn inner_splits(labels: &[u8], scheme: InnerScheme, seed: u64) -> Result<Vec<(Vec<usize>, Vec<usize>)>> {
    match scheme {
        InnerScheme::Resample { repeats, test_ratio } => {
            if repeats == 0 {
                return Err(Error::Config("inner resamples must be at least 1".into()));
            }
            (0..repeats)
                .map(|r| {
                    let s = stratified_split(labels, test_ratio, derive_seed(seed, &[step::INNER, r as u64]))?;
                    Ok((s.train_rows, s.test_rows))
                })
                .collect()
        }
        InnerScheme::KFold { k } => Ok(stratified_kfold(labels, k, derive_seed(seed, &[step::INNER]))?
            .into_iter()
            .map(|f| (complement(labels.len(), &f), f))
            .collect()),
    }
}

fn split_fit_seed(seed: u64, tag: u64, index: usize) -> u64 {
    derive_seed(seed, &[tag, index as u64, step::MODEL])
}

/// Training rows for a search or evaluation.
#[derive(Clone, Copy, Debug)]
pub struct SearchData<'a> {
    /// Raw feature rows, NaN for missing.
    pub x: &'a Matrix,
    pub y: &'a [u8],
    pub kinds: &'a [FeatureKind],
}

impl SearchData<'_> {
    fn rows(&self, idx: &[usize]) -> (Matrix, Vec<u8>) {
        (self.x.select_rows(idx), idx.iter().map(|&i| self.y[i]).collect())
    }
}

/// Winner of the inner search for one family.
#[derive(Clone, Debug, PartialEq)]
pub struct InnerSelection {
    pub family: Family,
    pub assignment: Assignment,
    pub assignment_index: usize,
    /// Learning-metric mean and sd over the validation splits.
    pub mean: f64,
    pub sd: f64,
    pub split_scores: Vec<f64>,
    pub n_cells: usize,
    /// Cells with at least one failed fit (failed fits score 0).
    pub failed_cells: usize,
    pub warnings: Vec<String>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
struct Group {
    sampler: SamplerMethod,
    selector: SelectorMethod,
    classifier: Algorithm,
}

impl Group {
    fn of(f: &Family) -> Group {
        Group {
            sampler: f.sampler,
            selector: f.selector,
            classifier: f.classifier,
        }
    }
}

/// Fitted preprocessing for one validation split plus transformed validation rows.
struct SplitPrep {
    prep: Prepared,
    fit_y: Vec<u8>,
    val_std: Matrix,
    val_y: Vec<u8>,
    seeds: (u64, u64, u64),
}

type CellOutcome = Option<MetricSet>;

fn evaluate_cells(
    sp: &SplitPrep,
    selection: &Selection,
    sampler: &SamplerSpec,
    learners_grid: &[LearnerParams],
) -> (Vec<CellOutcome>, Option<String>) {
    let fit_x = sp.prep.std_view.select_columns(&selection.mask);
    let val_x = sp.val_std.select_columns(&selection.mask);
    let Ok((xs, ys, _, warn)) = sample_rows(&fit_x, &sp.fit_y, sampler, sp.seeds.1) else {
        return (vec![None; learners_grid.len()], None);
    };
    let out = learners_grid
        .iter()
        .map(|params| {
            let spec = LearnerSpec {
                params: params.clone(),
                seed: sp.seeds.2,
            };
            let model = learners::train(&spec, &xs, &ys, None).ok()?;
            let scores = model.predict_scores(&val_x).ok()?;
            let t = model.threshold();
            let pred: Vec<u8> = scores.iter().map(|&s| u8::from(s > t)).collect();
            weighted_metrics(&sp.val_y, &pred, Some(&scores)).ok()
        })
        .collect();
    (out, warn)
}

/// Inner search for several families at once. Preprocessing, selection and
/// sampling are fitted once per split and shared by every family using them,
/// and families differing only in learning metric share all model fits.
/// Each cell equals a standalone [`fit_pipeline`] with the split's seed.
pub fn inner_select_many(
    families: &[Family],
    data: SearchData<'_>,
    scheme: InnerScheme,
    seed: u64,
) -> Vec<Result<InnerSelection>> {
    let splits = match inner_splits(data.y, scheme, seed) {
        Ok(s) => s,
        Err(e) => return families.iter().map(|_| Err(Error::InvalidInput(e.to_string()))).collect(),
    };
    let preps: Vec<Option<SplitPrep>> = splits
        .par_iter()
        .enumerate()
        .map(|(r, (fit, val))| {
            let (fx, fy) = data.rows(fit);
            let (vx, vy) = data.rows(val);
            let prep = prepare(&fx, data.kinds).ok()?;
            let val_std = prep.standardize.apply(&prep.variance.apply(&prep.impute.apply(&vx).ok()?).ok()?).ok()?;
            Some(SplitPrep {
                prep,
                fit_y: fy,
                val_std,
                val_y: vy,
                seeds: step_seeds(split_fit_seed(seed, step::INNER, r)),
            })
        })
        .collect();

    let mut groups: Vec<Group> = families.iter().map(Group::of).collect();
    groups.sort();
    groups.dedup();
    let mut selectors: Vec<SelectorMethod> = groups.iter().map(|g| g.selector).collect();
    selectors.sort();
    selectors.dedup();

    // selections[(split, selector method)] -> one Selection per selector spec
    let sel_tasks: Vec<(usize, SelectorMethod)> = (0..splits.len())
        .flat_map(|r| selectors.iter().map(move |&m| (r, m)))
        .collect();
    let selections: Vec<Option<Vec<Selection>>> = sel_tasks
        .par_iter()
        .map(|&(r, m)| {
            let sp = preps[r].as_ref()?;
            select_grid(&sp.prep, &sp.fit_y, &SelectorSpec::grid(m), sp.seeds.0).ok()
        })
        .collect();
    let selection_of = |r: usize, m: SelectorMethod| {
        let pos = sel_tasks.iter().position(|&t| t == (r, m)).unwrap_or(0);
        selections[pos].as_ref()
    };

    struct CellTask {
        group: usize,
        split: usize,
        sampler_idx: usize,
        selector_idx: usize,
    }
    let mut tasks = Vec::new();
    for (gi, g) in groups.iter().enumerate() {
        for r in 0..splits.len() {
            for si in 0..SamplerSpec::grid(g.sampler).len() {
                for fi in 0..SelectorSpec::grid(g.selector).len() {
                    tasks.push(CellTask {
                        group: gi,
                        split: r,
                        sampler_idx: si,
                        selector_idx: fi,
                    });
                }
            }
        }
    }
    let learner_grids: Vec<Vec<LearnerParams>> = groups.iter().map(|g| LearnerParams::grid(g.classifier)).collect();
    let outcomes: Vec<(Vec<CellOutcome>, Vec<String>)> = tasks
        .par_iter()
        .map(|t| {
            let g = groups[t.group];
            let grid = &learner_grids[t.group];
            let (Some(sp), Some(sels)) = (preps[t.split].as_ref(), selection_of(t.split, g.selector)) else {
                return (vec![None; grid.len()], Vec::new());
            };
            let selection = &sels[t.selector_idx];
            let sampler = &SamplerSpec::grid(g.sampler)[t.sampler_idx];
            let (cells, warn) = evaluate_cells(sp, selection, sampler, grid);
            let warnings = selection.warning.iter().cloned().chain(warn).collect();
            (cells, warnings)
        })
        .collect();

    // cells[group][assignment][split]
    let mut cells: Vec<Vec<Vec<CellOutcome>>> = groups
        .iter()
        .zip(&learner_grids)
        .map(|(g, grid)| {
            let n = SamplerSpec::grid(g.sampler).len() * SelectorSpec::grid(g.selector).len() * grid.len();
            vec![vec![None; splits.len()]; n]
        })
        .collect();
    let mut warnings: Vec<Vec<String>> = vec![Vec::new(); groups.len()];
    for (t, (outs, warns)) in tasks.iter().zip(outcomes) {
        let g = groups[t.group];
        let n_learn = learner_grids[t.group].len();
        let n_sel = SelectorSpec::grid(g.selector).len();
        let base = (t.sampler_idx * n_sel + t.selector_idx) * n_learn;
        for (li, o) in outs.into_iter().enumerate() {
            cells[t.group][base + li][t.split] = o;
        }
        for w in warns {
            if !warnings[t.group].contains(&w) {
                warnings[t.group].push(w);
            }
        }
    }

    families
        .iter()
        .map(|family| {
            let gi = groups.binary_search(&Group::of(family)).map_err(|_| Error::InvalidInput("unknown group".into()))?;
            let assignments = family.assignments();
            let mut best: Option<(usize, f64, f64, Vec<f64>)> = None;
            let mut failed_cells = 0;
            let mut any_success = false;
            for (ai, per_split) in cells[gi].iter().enumerate() {
                let scores: Vec<f64> = per_split.iter().map(|o| o.as_ref().map_or(0.0, |m| m.get(family.metric))).collect();
                if per_split.iter().any(Option::is_none) {
                    failed_cells += 1;
                }
                any_success |= per_split.iter().any(Option::is_some);
                let (m, s) = mean_sd(&scores);
                let better = match &best {
                    None => true,
                    Some((_, bm, bs, _)) => m > *bm || (m == *bm && s < *bs),
                };
                if better {
                    best = Some((ai, m, s, scores));
                }
            }
            let Some((ai, mean, sd, split_scores)) = best.filter(|_| any_success) else {
                return Err(Error::Degenerate(format!("{family}: every inner fit failed")));
            };
            Ok(InnerSelection {
                family: *family,
                assignment: assignments[ai].clone(),
                assignment_index: ai,
                mean,
                sd,
                split_scores,
                n_cells: assignments.len(),
                failed_cells,
                warnings: warnings[gi].clone(),
            })
        })
        .collect()
}

pub fn inner_select(family: &Family, data: SearchData<'_>, scheme: InnerScheme, seed: u64) -> Result<InnerSelection> {
    inner_select_many(std::slice::from_ref(family), data, scheme, seed).remove(0)
}

/// Outer cross-validation result of one chosen assignment.
#[derive(Clone, Debug, PartialEq)]
pub struct CvResult {
    pub family: Family,
    pub assignment: Assignment,
    pub folds: Vec<MetricSet>,
    pub f1: (f64, f64),
    pub precision: (f64, f64),
    pub recall: (f64, f64),
    /// Held-out row indices per fold.
    pub fold_rows: Vec<Vec<usize>>,
    /// Out-of-fold score per training row.
    pub oof_scores: Vec<f64>,
}

impl CvResult {
    pub fn fold_f1(&self) -> Vec<f64> {
        self.folds.iter().map(|m| m.f1_weighted).collect()
    }
}

/// Outer folds shared by every family so paired comparisons line up.
pub fn outer_folds(labels: &[u8], k: usize, seed: u64) -> Result<Vec<Vec<usize>>> {
    stratified_kfold(labels, k, derive_seed(seed, &[step::OUTER]))
}

/// Refits the assignment on each outer training part and scores the held-out fold.
pub fn outer_evaluate(
    family: &Family,
    assignment: &Assignment,
    data: SearchData<'_>,
    folds: &[Vec<usize>],
    seed: u64,
) -> Result<CvResult> {
    let n = data.y.len();
    let per_fold: Vec<Result<(MetricSet, Vec<f64>)>> = folds
        .par_iter()
        .enumerate()
        .map(|(f, hold)| {
            let (tx, ty) = data.rows(&complement(n, hold));
            let (vx, vy) = data.rows(hold);
            let p = fit_pipeline(assignment, data.kinds, &tx, &ty, split_fit_seed(seed, step::OUTER, f))?;
            let pred = p.predict(&vx)?;
            Ok((weighted_metrics(&vy, &pred.labels, Some(&pred.scores))?, pred.scores))
        })
        .collect();
    let mut metrics = Vec::with_capacity(folds.len());
    let mut oof = vec![f64::NAN; n];
    for (fold, r) in folds.iter().zip(per_fold) {
        let (m, scores) = r?;
        for (&i, s) in fold.iter().zip(scores) {
            oof[i] = s;
        }
        metrics.push(m);
    }
    let pick = |f: fn(&MetricSet) -> f64| mean_sd(&metrics.iter().map(f).collect::<Vec<_>>());
    Ok(CvResult {
        family: *family,
        assignment: assignment.clone(),
        f1: pick(|m| m.f1_weighted),
        precision: pick(|m| m.precision_weighted),
        recall: pick(|m| m.recall_weighted),
        folds: metrics,
        fold_rows: folds.to_vec(),
        oof_scores: oof,
    })
}

/// Indices of `results` from best to worst: outer f1 mean descending, then
/// sd ascending, then input order.
pub fn rank_pipelines(results: &[CvResult]) -> Vec<usize> {
    let mut order: Vec<usize> = (0..results.len()).collect();
    order.sort_by(|&a, &b| {
        results[b]
            .f1
            .0
            .total_cmp(&results[a].f1.0)
            .then(results[a].f1.1.total_cmp(&results[b].f1.1))
            .then(a.cmp(&b))
    });
    order
}

#[derive(Clone, Debug, PartialEq)]
pub struct Comparison {
    /// Mean and sd of the fold-wise `b - a` f1 difference.
    pub difference: (f64, f64),
    /// Paired t-test on `a - b`.
    pub test: TestResult,
}

pub fn compare_pipelines(a: &CvResult, b: &CvResult) -> Result<Comparison> {
    if a.fold_rows != b.fold_rows {
        return Err(Error::InvalidInput("pipelines were not evaluated on identical folds".into()));
    }
    let fa = a.fold_f1();
    let fb = b.fold_f1();
    let diff: Vec<f64> = fb.iter().zip(&fa).map(|(x, y)| x - y).collect();
    Ok(Comparison {
        difference: mean_sd(&diff),
        test: stats::paired_ttest_cv(&fa, &fb)?,
    })
}

pub fn test_evaluate(p: &FittedPipeline, x_test: &Matrix, y_test: &[u8]) -> Result<MetricSet> {
    let pred = p.predict(x_test)?;
    weighted_metrics(y_test, &pred.labels, Some(&pred.scores))
}

/// Final fit on every training row.
pub fn fit_final(assignment: &Assignment, data: SearchData<'_>, seed: u64) -> Result<FittedPipeline> {
    fit_pipeline(assignment, data.kinds, data.x, data.y, derive_seed(seed, &[step::FINAL]))
}

pub const DEFAULT_CURVE_FRACTIONS: [f64; 8] = [0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9, 1.0];

#[derive(Clone, Debug, PartialEq)]
pub struct CurvePoint {
    pub fraction: f64,
    pub mean_train_rows: f64,
    pub train: (f64, f64),
    pub validation: (f64, f64),
}

/// For each fraction, subsamples every outer training part (stratified),
/// fits, and records f1 on the subsample and on the held-out fold. At
/// fraction 1.0 the fits coincide with [`outer_evaluate`].
pub fn learning_curve(
    assignment: &Assignment,
    data: SearchData<'_>,
    folds: &[Vec<usize>],
    fractions: &[f64],
    seed: u64,
) -> Result<Vec<CurvePoint>> {
    if fractions.windows(2).any(|w| w[0] >= w[1]) || fractions.iter().any(|&f| !(f > 0.0 && f <= 1.0)) {
        return Err(Error::InvalidInput("fractions must ascend within (0, 1]".into()));
    }
    let n = data.y.len();
    fractions
        .iter()
        .enumerate()
        .map(|(fi, &fraction)| {
            let per_fold: Vec<Result<(f64, f64, usize)>> = folds
                .par_iter()
                .enumerate()
                .map(|(f, hold)| {
                    let train = complement(n, hold);
                    let sub: Vec<usize> = if fraction < 1.0 {
                        let ty: Vec<u8> = train.iter().map(|&i| data.y[i]).collect();
                        let s = stratified_split(
                            &ty,
                            1.0 - fraction,
                            derive_seed(seed, &[step::LEARNING_CURVE, f as u64, fi as u64]),
                        )?;
                        s.train_rows.iter().map(|&i| train[i]).collect()
                    } else {
                        train
                    };
                    let (tx, ty) = data.rows(&sub);
                    let pos = ty.iter().filter(|&&l| l == 1).count();
                    if pos == 0 || pos == ty.len() {
                        return Err(Error::Degenerate(format!(
                            "training fraction {fraction} leaves a single label"
                        )));
                    }
                    let p = fit_pipeline(assignment, data.kinds, &tx, &ty, split_fit_seed(seed, step::OUTER, f))?;
                    let train_f1 = test_evaluate(&p, &tx, &ty)?.f1_weighted;
                    let (vx, vy) = data.rows(hold);
                    let val_f1 = test_evaluate(&p, &vx, &vy)?.f1_weighted;
                    Ok((train_f1, val_f1, sub.len()))
                })
                .collect();
            let per_fold = per_fold.into_iter().collect::<Result<Vec<_>>>()?;
            let tr: Vec<f64> = per_fold.iter().map(|r| r.0).collect();
            let va: Vec<f64> = per_fold.iter().map(|r| r.1).collect();
            Ok(CurvePoint {
                fraction,
                mean_train_rows: per_fold.iter().map(|r| r.2 as f64).sum::<f64>() / per_fold.len() as f64,
                train: mean_sd(&tr),
                validation: mean_sd(&va),
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::learners::{ClassWeight, KnnWeights, Penalty};
    use crate::seed;
    use rand::Rng;

    #[test]
    fn hand_examples() {
        let m = weighted_metrics(&[1, 1, 0], &[1, 0, 0], None).unwrap();
        assert!((m.f1_weighted - 2.0 / 3.0).abs() < 1e-12);
        let perfect = weighted_metrics(&[0, 1, 1, 0], &[0, 1, 1, 0], Some(&[0.1, 0.9, 0.8, 0.2])).unwrap();
        assert_eq!(
            (perfect.precision_weighted, perfect.recall_weighted, perfect.f1_weighted, perfect.auc),
            (1.0, 1.0, 1.0, Some(1.0))
        );
        assert_eq!(auc(&[1, 0, 1], &[0.9, 0.8, 0.7]), Some(0.5));
        assert!(weighted_metrics(&[1], &[1, 0], None).is_err());
    }

    #[test]
    fn zero_division_flagged() {
        let m = weighted_metrics(&[1, 0, 1], &[0, 0, 0], None).unwrap();
        assert!(m.zero_division);
        assert_eq!(m.confusion, [[1, 0], [2, 0]]);
    }

    #[test]
    fn roc_edges() {
        let sep = roc_curve(&[0, 0, 1, 1], &[0.1, 0.2, 0.8, 0.9]).unwrap();
        let path: Vec<(f64, f64)> = sep.iter().map(|p| (p.fpr, p.tpr)).collect();
        assert_eq!(path, vec![(0.0, 0.0), (0.0, 0.5), (0.0, 1.0), (0.5, 1.0), (1.0, 1.0)]);
        assert_eq!(trapezoid_area(&sep), 1.0);
        let rev = roc_curve(&[1, 1, 0, 0], &[0.1, 0.2, 0.8, 0.9]).unwrap();
        assert_eq!(trapezoid_area(&rev), 0.0);
        assert!(roc_curve(&[1, 1], &[0.1, 0.2]).is_err());
    }

    #[test]
    fn kfold_29_rows() {
        let labels: Vec<u8> = (0..29).map(|i| u8::from(i < 17)).collect();
        let folds = stratified_kfold(&labels, 10, 5).unwrap();
        let mut all: Vec<usize> = folds.concat();
        all.sort_unstable();
        assert_eq!(all, (0..29).collect::<Vec<_>>());
        for f in &folds {
            assert!(f.len() == 2 || f.len() == 3);
            let pos = f.iter().filter(|&&i| labels[i] == 1).count();
            assert!(pos >= 1 && pos < f.len());
        }
        assert_eq!(folds, stratified_kfold(&labels, 10, 5).unwrap());
        let loo = stratified_kfold(&labels, 29, 1).unwrap();
        assert!(loo.iter().all(|f| f.len() == 1));
    }

    #[test]
    fn inner_resample_composition() {
        let labels: Vec<u8> = (0..29).map(|i| u8::from(i < 17)).collect();
        for (fit, val) in inner_splits(&labels, InnerScheme::default(), 3).unwrap() {
            assert_eq!(fit.len(), 20);
            assert_eq!(fit.iter().filter(|&&i| labels[i] == 1).count(), 12);
            assert_eq!(val.len(), 9);
            assert_eq!(val.iter().filter(|&&i| labels[i] == 1).count(), 5);
        }
    }

    fn data(n: usize, s: u64) -> (Matrix, Vec<u8>) {
        let mut r = seed::rng(s);
        let mut rows = Vec::new();
        let mut y = Vec::new();
        for i in 0..n {
            let l = u8::from(i % 5 < 3);
            let sig = if l == 1 { 1.0 } else { -1.0 };
            rows.push(vec![sig + r.gen_range(-1.2..1.2), r.gen_range(-1.0..1.0), r.gen_range(-1.0..1.0)]);
            y.push(l);
        }
        (Matrix::from_rows(&rows).unwrap(), y)
    }

    const KINDS: [FeatureKind; 3] = [FeatureKind::Numeric; 3];

    #[test]
    fn engine_cells_equal_standalone_fits() {
        let (x, y) = data(29, 1);
        let d = SearchData { x: &x, y: &y, kinds: &KINDS };
        let family = Family {
            sampler: SamplerMethod::Smote,
            selector: SelectorMethod::LassoFs,
            metric: Metric::PrecisionWeighted,
            classifier: Algorithm::KNN,
        };
        let sel = inner_select(&family, d, InnerScheme::default(), 17).unwrap();
        let splits = inner_splits(&y, InnerScheme::default(), 17).unwrap();
        let mut direct = Vec::new();
        for (r, (fit, val)) in splits.iter().enumerate() {
            let (fx, fy) = d.rows(fit);
            let (vx, vy) = d.rows(val);
            let p = fit_pipeline(&sel.assignment, &KINDS, &fx, &fy, split_fit_seed(17, step::INNER, r)).unwrap();
            let pred = p.predict(&vx).unwrap();
            direct.push(weighted_metrics(&vy, &pred.labels, None).unwrap().precision_weighted);
        }
        assert_eq!(direct, sel.split_scores);
    }

    #[test]
    fn metric_families_share_fits() {
        let (x, y) = data(29, 2);
        let d = SearchData { x: &x, y: &y, kinds: &KINDS };
        let mk = |metric| Family {
            sampler: SamplerMethod::None,
            selector: SelectorMethod::None,
            metric,
            classifier: Algorithm::LR,
        };
        let both = inner_select_many(&[mk(Metric::F1Weighted), mk(Metric::PrecisionWeighted)], d, InnerScheme::default(), 4);
        let alone = inner_select(&mk(Metric::PrecisionWeighted), d, InnerScheme::default(), 4).unwrap();
        assert_eq!(both[1].as_ref().unwrap(), &alone);
    }

    #[test]
    fn leaking_feature_wins_inner_search() {
        let (mut x, y) = data(29, 3);
        // column 2 copies the label only for half the rows -> noisy; column 0 is perfect for k=1
        for i in 0..29 {
            x.set(i, 0, f64::from(y[i]) * 10.0);
        }
        let d = SearchData { x: &x, y: &y, kinds: &KINDS };
        let family = Family {
            sampler: SamplerMethod::None,
            selector: SelectorMethod::CombineFs,
            metric: Metric::F1Weighted,
            classifier: Algorithm::KNN,
        };
        let sel = inner_select(&family, d, InnerScheme::default(), 5).unwrap();
        assert!((sel.mean - 1.0).abs() < 1e-12);
        assert!(matches!(sel.assignment.selector, SelectorSpec::CombineFs { percentile: 5 }));
    }

    #[test]
    fn single_assignment_family_and_outer_determinism() {
        let (x, y) = data(29, 4);
        let d = SearchData { x: &x, y: &y, kinds: &KINDS };
        let family = Family {
            sampler: SamplerMethod::None,
            selector: SelectorMethod::None,
            metric: Metric::F1Weighted,
            classifier: Algorithm::LR,
        };
        let a = Assignment {
            sampler: SamplerSpec::None,
            selector: SelectorSpec::None,
            learner: LearnerParams::Logistic {
                c: 1.0,
                penalty: Penalty::L2,
                class_weight: ClassWeight::Unweighted,
            },
        };
        let folds = outer_folds(&y, 10, 8).unwrap();
        let r1 = outer_evaluate(&family, &a, d, &folds, 8).unwrap();
        let r2 = outer_evaluate(&family, &a, d, &folds, 8).unwrap();
        assert_eq!(r1, r2);
        assert_eq!(r1.folds.len(), 10);
        assert!(r1.oof_scores.iter().all(|s| s.is_finite()));
        let cmp = compare_pipelines(&r1, &r2).unwrap();
        assert_eq!(cmp.difference, (0.0, 0.0));
        assert_eq!(cmp.test.p_value, 1.0);
    }

    #[test]
    fn constant_majority_baseline() {
        // k-NN with k = n votes the training majority everywhere
        let (x, y) = data(30, 5);
        let d = SearchData { x: &x, y: &y, kinds: &KINDS };
        let family = Family {
            sampler: SamplerMethod::None,
            selector: SelectorMethod::None,
            metric: Metric::F1Weighted,
            classifier: Algorithm::KNN,
        };
        let a = Assignment {
            sampler: SamplerSpec::None,
            selector: SelectorSpec::None,
            learner: LearnerParams::Knn {
                k: 1000,
                weights: KnnWeights::Uniform,
            },
        };
        let folds = outer_folds(&y, 10, 1).unwrap();
        let r = outer_evaluate(&family, &a, d, &folds, 1).unwrap();
        // predicting the positive label everywhere gives f1 = pi * 2pi / (1 + pi) per fold
        let expected: Vec<f64> = folds
            .iter()
            .map(|f| {
                let pi = f.iter().filter(|&&i| y[i] == 1).count() as f64 / f.len() as f64;
                pi * (2.0 * pi / (1.0 + pi))
            })
            .collect();
        for (got, want) in r.fold_f1().iter().zip(&expected) {
            assert!((got - want).abs() < 1e-12);
        }
    }

    #[test]
    fn ranking_rules() {
        let (x, y) = data(20, 6);
        let d = SearchData { x: &x, y: &y, kinds: &KINDS };
        let family = Family {
            sampler: SamplerMethod::None,
            selector: SelectorMethod::None,
            metric: Metric::F1Weighted,
            classifier: Algorithm::KNN,
        };
        let a = Assignment {
            sampler: SamplerSpec::None,
            selector: SelectorSpec::None,
            learner: LearnerParams::Knn {
                k: 3,
                weights: KnnWeights::Uniform,
            },
        };
        let base = outer_evaluate(&family, &a, d, &outer_folds(&y, 5, 1).unwrap(), 1).unwrap();
        let with = |m: f64, s: f64| CvResult {
            f1: (m, s),
            ..base.clone()
        };
        let rs = vec![with(0.73, 0.18), with(0.87, 0.15), with(0.82, 0.06), with(0.87, 0.10)];
        assert_eq!(rank_pipelines(&rs), vec![3, 1, 2, 0]);
        assert_eq!(rank_pipelines(&rs[..1]), vec![0]);
    }

    #[test]
    fn learning_curve_end_matches_outer() {
        let (x, y) = data(29, 7);
        let d = SearchData { x: &x, y: &y, kinds: &KINDS };
        let family = Family {
            sampler: SamplerMethod::None,
            selector: SelectorMethod::None,
            metric: Metric::F1Weighted,
            classifier: Algorithm::LR,
        };
        let a = Assignment {
            sampler: SamplerSpec::None,
            selector: SelectorSpec::None,
            learner: LearnerParams::Logistic {
                c: 1.0,
                penalty: Penalty::L2,
                class_weight: ClassWeight::Unweighted,
            },
        };
        let folds = outer_folds(&y, 10, 2).unwrap();
        let curve = learning_curve(&a, d, &folds, &[0.4, 0.7, 1.0], 2).unwrap();
        assert_eq!(curve.len(), 3);
        let outer = outer_evaluate(&family, &a, d, &folds, 2).unwrap();
        assert_eq!(curve[2].validation, outer.f1);
        assert!(learning_curve(&a, d, &folds, &[0.7, 0.4], 2).is_err());
    }
}
