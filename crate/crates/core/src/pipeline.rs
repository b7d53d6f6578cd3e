//! Pipeline families, their hyperparameter grids, and fitting in the fixed
//! order impute -> variance filter -> standardize -> select -> sample -> model.

use std::fmt;
use std::str::FromStr;

use crate::codec::{TextReader, TextWriter};
use crate::data::FeatureKind;
use crate::error::{Error, Result};
use crate::learners::{self, Algorithm, LearnerParams, LearnerSpec, TrainedModel};
use crate::matrix::Matrix;
use crate::preprocess::{fit_impute, fit_standardize, fit_variance_filter, FittedTransform};
use crate::seed::{derive_seed, step};
use crate::selection::{
    combine_fs, lasso_fs, rfe_rf_masks, smote, SamplerMethod, SamplerSpec, Selection, SelectorMethod, SelectorSpec,
};

/// The score optimized during inner hyperparameter selection.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Metric {
    F1Weighted,
    PrecisionWeighted,
}

impl Metric {
    pub const ALL: [Metric; 2] = [Metric::F1Weighted, Metric::PrecisionWeighted];

    pub fn name(self) -> &'static str {
        match self {
            Metric::F1Weighted => "f1_weighted",
            Metric::PrecisionWeighted => "precision_weighted",
        }
    }
}

impl fmt::Display for Metric {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Metric {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        Metric::ALL
            .into_iter()
            .find(|m| m.name() == s)
            .ok_or_else(|| Error::InvalidInput(format!("unknown metric `{s}`")))
    }
}

/// One slot choice per step; expands into a hyperparameter grid.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Family {
    pub sampler: SamplerMethod,
    pub selector: SelectorMethod,
    pub metric: Metric,
    pub classifier: Algorithm,
}

impl Family {
    /// Every (sampler, selector, learner) cell, in lexicographic grid order.
    pub fn assignments(&self) -> Vec<Assignment> {
        let learners = LearnerParams::grid(self.classifier);
        let mut out = Vec::new();
        for sampler in SamplerSpec::grid(self.sampler) {
            for selector in SelectorSpec::grid(self.selector) {
                for learner in &learners {
                    out.push(Assignment {
                        sampler: sampler.clone(),
                        selector: selector.clone(),
                        learner: learner.clone(),
                    });
                }
            }
        }
        out
    }

    pub fn id(&self) -> String {
        self.to_string()
    }
}

impl fmt::Display for Family {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}:{}:{}", self.sampler, self.selector, self.metric, self.classifier)
    }
}

impl FromStr for Family {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        let parts: Vec<&str> = s.split(':').collect();
        let [sm, fs, metric, cls] = parts[..] else {
            return Err(Error::InvalidInput(format!("family `{s}` is not sampler:selector:metric:classifier")));
        };
        Ok(Family {
            sampler: sm.parse()?,
            selector: fs.parse()?,
            metric: metric.parse()?,
            classifier: cls.parse()?,
        })
    }
}

/// All 80 families: 2 samplers x 4 selectors x 2 metrics x 5 classifiers.
pub fn enumerate_grid() -> Vec<Family> {
    let mut out = Vec::with_capacity(80);
    for sampler in SamplerMethod::ALL {
        for selector in SelectorMethod::ALL {
            for metric in Metric::ALL {
                for classifier in Algorithm::ALL {
                    out.push(Family {
                        sampler,
                        selector,
                        metric,
                        classifier,
                    });
                }
            }
        }
    }
    out
}

#[derive(Clone, Debug, PartialEq, Eq)]
struct Pattern {
    exclude: bool,
    parts: [Option<String>; 4],
}

/// Family filter: comma-separated `sampler:selector:metric:classifier`
/// patterns where `*` matches anything and a leading `!` excludes.
/// A family passes if it matches some include pattern (or there are none)
/// and no exclude pattern. `all` keeps everything; `reduced` drops the
/// families pairing RFE-with-RF selection with an RF classifier.
#[derive(Clone, Debug, PartialEq, Eq, Default)]
pub struct FamilyFilter {
    patterns: Vec<Pattern>,
}

pub const REDUCED_EXCLUSION: &str = "!*:rfe_rf_fs:*:RF";

impl FamilyFilter {
    pub fn all() -> FamilyFilter {
        FamilyFilter::default()
    }

    pub fn parse(text: &str) -> Result<FamilyFilter> {
        let mut patterns = Vec::new();
        for raw in text.split(',').map(str::trim).filter(|s| !s.is_empty()) {
            match raw {
                "all" => continue,
                "reduced" => {
                    patterns.extend(FamilyFilter::parse(REDUCED_EXCLUSION)?.patterns);
                    continue;
                }
                _ => {}
            }
            let (exclude, body) = match raw.strip_prefix('!') {
                Some(b) => (true, b),
                None => (false, raw),
            };
            let fields: Vec<&str> = body.split(':').collect();
            if fields.len() != 4 {
                return Err(Error::Config(format!("grid pattern `{raw}` needs four `:`-separated fields")));
            }
            let mut parts: [Option<String>; 4] = Default::default();
            for (slot, (i, f)) in parts.iter_mut().zip(fields.iter().enumerate()) {
                if *f == "*" {
                    continue;
                }
                let known = match i {
                    0 => f.parse::<SamplerMethod>().is_ok(),
                    1 => f.parse::<SelectorMethod>().is_ok(),
                    2 => f.parse::<Metric>().is_ok(),
                    _ => f.parse::<Algorithm>().is_ok(),
                };
                if !known {
                    return Err(Error::Config(format!("grid pattern `{raw}`: unknown value `{f}`")));
                }
                *slot = Some((*f).to_string());
            }
            patterns.push(Pattern { exclude, parts });
        }
        Ok(FamilyFilter { patterns })
    }

    fn matches(p: &Pattern, f: &Family) -> bool {
        let values = [
            f.sampler.name().to_string(),
            f.selector.name().to_string(),
            f.metric.name().to_string(),
            f.classifier.name().to_string(),
        ];
        p.parts.iter().zip(&values).all(|(want, have)| {
            want.as_ref().is_none_or(|w| {
                w == have || w.parse::<Algorithm>().ok().is_some_and(|a| a.name() == have)
            })
        })
    }

    pub fn accepts(&self, f: &Family) -> bool {
        let includes: Vec<&Pattern> = self.patterns.iter().filter(|p| !p.exclude).collect();
        let included = includes.is_empty() || includes.iter().any(|p| Self::matches(p, f));
        included && !self.patterns.iter().any(|p| p.exclude && Self::matches(p, f))
    }

    pub fn apply(&self, families: &[Family]) -> Vec<Family> {
        families.iter().copied().filter(|f| self.accepts(f)).collect()
    }
}

/// One hyperparameter cell of a family.
#[derive(Clone, Debug, PartialEq)]
pub struct Assignment {
    pub sampler: SamplerSpec,
    pub selector: SelectorSpec,
    pub learner: LearnerParams,
}

impl Assignment {
    /// Bracketed hyperparameter values: selector values, then the first two
    /// classifier values, sampler values, and the remaining classifier values,
    /// e.g. `[1, 250, gini, 4, None, None]` for lasso, SMOTE and a forest.
    pub fn params_list(&self) -> String {
        let values = |pairs: Vec<(&'static str, String)>| pairs.into_iter().map(|(_, v)| v).collect::<Vec<_>>();
        let learner = values(self.learner.named_values());
        let split = learner.len().min(2);
        let mut v = values(self.selector.named_values());
        v.extend_from_slice(&learner[..split]);
        v.extend(values(self.sampler.named_values()));
        v.extend_from_slice(&learner[split..]);
        format!("[{}]", v.join(", "))
    }
}

impl fmt::Display for Assignment {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let learner: Vec<String> = self
            .learner
            .named_values()
            .into_iter()
            .map(|(k, v)| format!("{k}={v}"))
            .collect();
        write!(
            f,
            "{} | {} | {}({})",
            self.sampler,
            self.selector,
            self.learner.algorithm(),
            learner.join(",")
        )
    }
}

/// Imputation, variance filtering and standardization fitted on one set of
/// training rows, with both the unstandardized and standardized views.
#[derive(Clone, Debug)]
pub struct Prepared {
    pub impute: FittedTransform,
    pub variance: FittedTransform,
    pub standardize: FittedTransform,
    /// Imputed and filtered, not standardized; used by univariate selection.
    pub raw_view: Matrix,
    pub std_view: Matrix,
    pub kinds: Vec<FeatureKind>,
}

pub fn prepare(x: &Matrix, kinds: &[FeatureKind]) -> Result<Prepared> {
    let impute = fit_impute(x, kinds).map_err(|e| e.in_step("impute"))?;
    let imputed = impute.apply(x)?;
    let variance = fit_variance_filter(&imputed).map_err(|e| e.in_step("variance_filter"))?;
    let raw_view = variance.apply(&imputed)?;
    let kept_kinds = match &variance {
        FittedTransform::VarianceFilter { keep } => kinds
            .iter()
            .zip(keep)
            .filter(|(_, &k)| k)
            .map(|(&kind, _)| kind)
            .collect(),
        _ => kinds.to_vec(),
    };
    let standardize = fit_standardize(&raw_view).map_err(|e| e.in_step("standardize"))?;
    let std_view = standardize.apply(&raw_view)?;
    Ok(Prepared {
        impute,
        variance,
        standardize,
        raw_view,
        std_view,
        kinds: kept_kinds,
    })
}

/// Runs one selector on prepared training rows. `seed` is the selection
/// stream of the fit.
pub fn select_features(prep: &Prepared, y: &[u8], spec: &SelectorSpec, seed: u64) -> Result<Selection> {
    spec.validate()?;
    let p = prep.std_view.ncols();
    let plain = |mask| Selection { mask, warning: None };
    let sel = match spec {
        SelectorSpec::None => plain(vec![true; p]),
        SelectorSpec::CombineFs { percentile } => plain(combine_fs(&prep.raw_view, y, &prep.kinds, *percentile)?),
        SelectorSpec::LassoFs { c } => lasso_fs(&prep.std_view, y, *c),
        SelectorSpec::RfeRfFs { step, target } => plain(rfe_rf_masks(&prep.std_view, y, *step, &[*target], seed)?.remove(0)),
    };
    Ok(sel)
}

/// All selector cells of one method on the same prepared rows; RFE targets
/// share one elimination path.
pub fn select_grid(prep: &Prepared, y: &[u8], specs: &[SelectorSpec], seed: u64) -> Result<Vec<Selection>> {
    let rfe: Vec<(f64, f64)> = specs
        .iter()
        .filter_map(|s| match s {
            SelectorSpec::RfeRfFs { step, target } => Some((*step, *target)),
            _ => None,
        })
        .collect();
    if rfe.len() == specs.len() && !rfe.is_empty() && rfe.iter().all(|r| r.0 == rfe[0].0) {
        let targets: Vec<f64> = rfe.iter().map(|r| r.1).collect();
        let masks = rfe_rf_masks(&prep.std_view, y, rfe[0].0, &targets, seed).map_err(|e| e.in_step("select"))?;
        return Ok(masks.into_iter().map(|mask| Selection { mask, warning: None }).collect());
    }
    specs
        .iter()
        .map(|s| select_features(prep, y, s, seed).map_err(|e| e.in_step("select")))
        .collect()
}

/// Training rows after the optional sampler; the sampler never sees other rows.
pub fn sample_rows(x: &Matrix, y: &[u8], spec: &SamplerSpec, seed: u64) -> Result<(Matrix, Vec<u8>, usize, Option<String>)> {
    spec.validate()?;
    match spec {
        SamplerSpec::None => Ok((x.clone(), y.to_vec(), 0, None)),
        SamplerSpec::Smote { k } => {
            let out = smote(x, y, *k, seed).map_err(|e| e.in_step("sample"))?;
            Ok((out.x, out.y, out.n_synthetic, out.warning))
        }
    }
}

/// Per-fit child seeds.
pub fn step_seeds(seed: u64) -> (u64, u64, u64) {
    (
        derive_seed(seed, &[step::SELECT]),
        derive_seed(seed, &[step::SAMPLE]),
        derive_seed(seed, &[step::MODEL]),
    )
}

#[derive(Clone, Debug, PartialEq)]
pub struct FittedPipeline {
    pub assignment: Assignment,
    /// Impute, variance filter, standardize.
    pub transforms: Vec<FittedTransform>,
    pub mask: Vec<bool>,
    pub n_synthetic: usize,
    pub warnings: Vec<String>,
    pub model: TrainedModel,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Prediction {
    pub labels: Vec<u8>,
    pub scores: Vec<f64>,
}

/// Fits every step on the given training rows only.
pub fn fit_pipeline(
    assignment: &Assignment,
    kinds: &[FeatureKind],
    x: &Matrix,
    y: &[u8],
    seed: u64,
) -> Result<FittedPipeline> {
    if x.nrows() != y.len() {
        return Err(Error::InvalidInput(format!("{} rows but {} labels", x.nrows(), y.len())));
    }
    let (select_seed, sample_seed, model_seed) = step_seeds(seed);
    let prep = prepare(x, kinds)?;
    let selection = select_grid(&prep, y, std::slice::from_ref(&assignment.selector), select_seed)?.remove(0);
    let selected = prep.std_view.select_columns(&selection.mask);
    let (xs, ys, n_synthetic, sample_warning) = sample_rows(&selected, y, &assignment.sampler, sample_seed)?;
    let model = learners::train(
        &LearnerSpec {
            params: assignment.learner.clone(),
            seed: model_seed,
        },
        &xs,
        &ys,
        None,
    )
    .map_err(|e| e.in_step("model"))?;
    Ok(FittedPipeline {
        assignment: assignment.clone(),
        transforms: vec![prep.impute, prep.variance, prep.standardize],
        mask: selection.mask,
        n_synthetic,
        warnings: selection.warning.into_iter().chain(sample_warning).collect(),
        model,
    })
}

impl FittedPipeline {
    pub fn input_width(&self) -> usize {
        self.transforms.first().map_or(0, FittedTransform::input_width)
    }

    /// Raw rows through the fitted transforms and mask.
    pub fn transform(&self, x: &Matrix) -> Result<Matrix> {
        let mut cur = x.clone();
        for t in &self.transforms {
            cur = t.apply(&cur)?;
        }
        cur.ensure_width(self.mask.len())?;
        Ok(cur.select_columns(&self.mask))
    }

    pub fn predict(&self, x: &Matrix) -> Result<Prediction> {
        if x.nrows() == 0 {
            return Ok(Prediction {
                labels: Vec::new(),
                scores: Vec::new(),
            });
        }
        let z = self.transform(x)?;
        let scores = self.model.predict_scores(&z)?;
        let t = self.model.threshold();
        Ok(Prediction {
            labels: scores.iter().map(|&s| u8::from(s > t)).collect(),
            scores,
        })
    }

    /// Per-feature weights over the pre-transform columns, zero where a
    /// feature was filtered or not selected.
    pub fn feature_weights(&self) -> Result<Vec<f64>> {
        let inner = self.model.extract_weights()?;
        let keep_var = match self.transforms.get(1) {
            Some(FittedTransform::VarianceFilter { keep }) => keep.clone(),
            _ => vec![true; self.mask.len()],
        };
        let mut out = vec![0.0; keep_var.len()];
        let mut sel_iter = self.mask.iter();
        let mut w_iter = inner.iter();
        for (j, &k) in keep_var.iter().enumerate() {
            if k && *sel_iter.next().unwrap_or(&false) {
                out[j] = *w_iter.next().unwrap_or(&0.0);
            }
        }
        Ok(out)
    }

    /// Which pre-transform columns reach the model.
    pub fn selected_features(&self) -> Vec<bool> {
        let keep_var = match self.transforms.get(1) {
            Some(FittedTransform::VarianceFilter { keep }) => keep.clone(),
            _ => vec![true; self.mask.len()],
        };
        let mut sel = self.mask.iter();
        keep_var.iter().map(|&k| k && *sel.next().unwrap_or(&false)).collect()
    }

    pub fn to_text(&self) -> String {
        let mut w = TextWriter::new();
        w.line(PIPELINE_MAGIC, [PIPELINE_VERSION]);
        write_sampler(&mut w, &self.assignment.sampler);
        write_selector(&mut w, &self.assignment.selector);
        self.assignment.learner.write(&mut w);
        for t in &self.transforms {
            write_transform(&mut w, t);
        }
        w.line("mask", self.mask.iter().map(|&m| u8::from(m)));
        w.value("synthetic", self.n_synthetic);
        self.model.write(&mut w);
        w.finish()
    }

    pub fn from_text(text: &str) -> Result<FittedPipeline> {
        let mut r = TextReader::new(text);
        let v: u32 = r.one(PIPELINE_MAGIC)?;
        if v != PIPELINE_VERSION {
            return Err(Error::ModelFormat(format!("unsupported pipeline version {v}")));
        }
        let sampler = read_sampler(&mut r)?;
        let selector = read_selector(&mut r)?;
        let learner = LearnerParams::read(&mut r)?;
        let transforms = vec![read_transform(&mut r)?, read_transform(&mut r)?, read_transform(&mut r)?];
        let mask: Vec<u8> = r.parsed("mask")?;
        let n_synthetic = r.one("synthetic")?;
        let model = TrainedModel::read(&mut r)?;
        Ok(FittedPipeline {
            assignment: Assignment {
                sampler,
                selector,
                learner,
            },
            transforms,
            mask: mask.into_iter().map(|m| m == 1).collect(),
            n_synthetic,
            warnings: Vec::new(),
            model,
        })
    }
}

const PIPELINE_MAGIC: &str = "pipegrid-pipeline";
const PIPELINE_VERSION: u32 = 1;

fn write_sampler(w: &mut TextWriter, s: &SamplerSpec) {
    match s {
        SamplerSpec::None => w.value("sampler", "none"),
        SamplerSpec::Smote { k } => w.line("sampler", ["smote".to_string(), k.to_string()]),
    }
}

fn read_sampler(r: &mut TextReader<'_>) -> Result<SamplerSpec> {
    let f = r.fields("sampler")?;
    let bad = || Error::ModelFormat("malformed sampler".into());
    match f[..] {
        ["none"] => Ok(SamplerSpec::None),
        ["smote", k] => Ok(SamplerSpec::Smote {
            k: k.parse().map_err(|_| bad())?,
        }),
        _ => Err(bad()),
    }
}

fn write_selector(w: &mut TextWriter, s: &SelectorSpec) {
    let mut fields = vec![s.method().name().to_string()];
    fields.extend(s.named_values().into_iter().map(|(_, v)| v));
    w.line("selector", fields);
}

fn read_selector(r: &mut TextReader<'_>) -> Result<SelectorSpec> {
    let f = r.fields("selector")?;
    let bad = || Error::ModelFormat("malformed selector".into());
    let num = |s: &str| s.parse::<f64>().map_err(|_| bad());
    let spec = match f[..] {
        ["none"] => SelectorSpec::None,
        ["combine_fs", p] => SelectorSpec::CombineFs {
            percentile: p.parse().map_err(|_| bad())?,
        },
        ["lasso_fs", c] => SelectorSpec::LassoFs { c: num(c)? },
        ["rfe_rf_fs", s, t] => SelectorSpec::RfeRfFs {
            step: num(s)?,
            target: num(t)?,
        },
        _ => return Err(bad()),
    };
    spec.validate().map_err(|_| bad())?;
    Ok(spec)
}

fn write_transform(w: &mut TextWriter, t: &FittedTransform) {
    w.value("transform", t.name());
    match t {
        FittedTransform::Impute { fill } => w.line("fill", fill),
        FittedTransform::VarianceFilter { keep } => w.line("keep", keep.iter().map(|&k| u8::from(k))),
        FittedTransform::Standardize { mean, sd } => {
            w.line("mean", mean);
            w.line("sd", sd);
        }
    }
}

fn read_transform(r: &mut TextReader<'_>) -> Result<FittedTransform> {
    Ok(match r.word("transform")? {
        "impute" => FittedTransform::Impute { fill: r.parsed("fill")? },
        "variance_filter" => FittedTransform::VarianceFilter {
            keep: r.parsed::<u8>("keep")?.into_iter().map(|k| k == 1).collect(),
        },
        "standardize" => FittedTransform::Standardize {
            mean: r.parsed("mean")?,
            sd: r.parsed("sd")?,
        },
        other => return Err(Error::ModelFormat(format!("unknown transform `{other}`"))),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::learners::{ClassWeight, Criterion, Penalty};
    use crate::seed;
    use rand::Rng;

    #[test]
    fn grid_has_80_families_and_76_after_exclusion() {
        let all = enumerate_grid();
        assert_eq!(all.len(), 80);
        let kept = FamilyFilter::parse("reduced").unwrap().apply(&all);
        assert_eq!(kept.len(), 76);
        assert!(kept
            .iter()
            .all(|f| !(f.selector == SelectorMethod::RfeRfFs && f.classifier == Algorithm::RF)));
        let ids: std::collections::BTreeSet<String> = all.iter().map(Family::id).collect();
        assert_eq!(ids.len(), 80);
    }

    #[test]
    fn family_ids_round_trip() {
        for f in enumerate_grid() {
            assert_eq!(f.id().parse::<Family>().unwrap(), f);
        }
    }

    #[test]
    fn filter_include_and_exclude() {
        let all = enumerate_grid();
        let f = FamilyFilter::parse("none:*:f1_weighted:LR,!*:lasso_fs:*:*").unwrap();
        let kept = f.apply(&all);
        assert_eq!(kept.len(), 3);
        assert!(FamilyFilter::parse("x:y").is_err());
        assert!(FamilyFilter::parse("bogus:*:*:*").is_err());
        assert_eq!(FamilyFilter::all().apply(&all).len(), 80);
    }

    #[test]
    fn assignment_counts_follow_grids() {
        let lr = Family {
            sampler: SamplerMethod::None,
            selector: SelectorMethod::None,
            metric: Metric::F1Weighted,
            classifier: Algorithm::LR,
        };
        assert_eq!(lr.assignments().len(), 56);
        let big = Family {
            sampler: SamplerMethod::Smote,
            selector: SelectorMethod::CombineFs,
            metric: Metric::F1Weighted,
            classifier: Algorithm::SVM,
        };
        assert_eq!(big.assignments().len(), 3 * 6 * 108);
    }

    #[test]
    fn params_list_format() {
        let a = Assignment {
            sampler: SamplerSpec::None,
            selector: SelectorSpec::None,
            learner: LearnerParams::Svm {
                c: 30.0,
                gamma: 0.001,
                class_weight: ClassWeight::Balanced,
            },
        };
        assert_eq!(a.params_list(), "[0.001, balanced, 30]");
        let lr = Assignment {
            learner: LearnerParams::Logistic {
                c: 5.0,
                penalty: Penalty::L2,
                class_weight: ClassWeight::Unweighted,
            },
            ..a.clone()
        };
        assert_eq!(lr.params_list(), "[None, 5, l2]");
        let smote_lr = Assignment {
            sampler: SamplerSpec::Smote { k: 4 },
            learner: LearnerParams::Logistic {
                c: 15.0,
                penalty: Penalty::L2,
                class_weight: ClassWeight::Unweighted,
            },
            ..a.clone()
        };
        assert_eq!(smote_lr.params_list(), "[None, 15, 4, l2]");
        let rf = Assignment {
            sampler: SamplerSpec::Smote { k: 4 },
            selector: SelectorSpec::LassoFs { c: 1.0 },
            learner: LearnerParams::Forest {
                n_estimators: 250,
                criterion: Criterion::Gini,
                max_depth: None,
                class_weight: ClassWeight::Unweighted,
            },
        };
        assert_eq!(rf.params_list(), "[1, 250, gini, 4, None, None]");
        let svm = Assignment {
            sampler: SamplerSpec::Smote { k: 4 },
            learner: LearnerParams::Svm {
                c: 15.0,
                gamma: 0.001,
                class_weight: ClassWeight::Unweighted,
            },
            ..a
        };
        assert_eq!(svm.params_list(), "[0.001, None, 4, 15]");
    }

    fn data(n: usize, s: u64) -> (Matrix, Vec<u8>, Vec<FeatureKind>) {
        let mut r = seed::rng(s);
        let mut rows = Vec::new();
        let mut y = Vec::new();
        for i in 0..n {
            let l = u8::from(i % 3 != 0);
            let sig = if l == 1 { 1.0 } else { -1.0 };
            let mut row = vec![
                sig + r.gen_range(-0.8..0.8),
                r.gen_range(-1.0..1.0),
                f64::from(r.gen_range(0..3u8)),
                5.0,
            ];
            if i % 7 == 0 {
                row[1] = f64::NAN;
            }
            rows.push(row);
            y.push(l);
        }
        let kinds = vec![
            FeatureKind::Numeric,
            FeatureKind::Numeric,
            FeatureKind::Ordinal,
            FeatureKind::Numeric,
        ];
        (Matrix::from_rows(&rows).unwrap(), y, kinds)
    }

    fn rf_smote_lasso() -> Assignment {
        Assignment {
            sampler: SamplerSpec::Smote { k: 3 },
            selector: SelectorSpec::LassoFs { c: 5.0 },
            learner: LearnerParams::Forest {
                n_estimators: 20,
                criterion: Criterion::Gini,
                max_depth: None,
                class_weight: ClassWeight::Unweighted,
            },
        }
    }

    #[test]
    fn fit_is_deterministic_and_serializes() {
        let (x, y, kinds) = data(30, 1);
        let a = rf_smote_lasso();
        let p1 = fit_pipeline(&a, &kinds, &x, &y, 42).unwrap();
        let p2 = fit_pipeline(&a, &kinds, &x, &y, 42).unwrap();
        assert_eq!(p1.to_text(), p2.to_text());
        // 20 positives vs 10 negatives -> 10 synthetic negatives
        assert_eq!(p1.n_synthetic, 10);
        let back = FittedPipeline::from_text(&p1.to_text()).unwrap();
        assert_eq!(back.predict(&x).unwrap(), p1.predict(&x).unwrap());
        // constant column 3 removed by the variance filter
        assert!(!p1.selected_features()[3]);
    }

    #[test]
    fn identity_steps_reduce_to_preprocessing_and_model() {
        let (x, y, kinds) = data(24, 2);
        let a = Assignment {
            sampler: SamplerSpec::None,
            selector: SelectorSpec::None,
            learner: LearnerParams::Knn {
                k: 1,
                weights: crate::learners::KnnWeights::Uniform,
            },
        };
        let p = fit_pipeline(&a, &kinds, &x, &y, 0).unwrap();
        assert_eq!(p.mask, vec![true; 3]);
        assert_eq!(p.n_synthetic, 0);
        let pred = p.predict(&x).unwrap();
        assert_eq!(pred.labels, y);
        let one = p.predict(&x.select_rows(&[0])).unwrap();
        assert_eq!(one.labels.len(), 1);
        assert_eq!(one.scores.len(), 1);
        let mut missing = x.select_rows(&[5]);
        missing.set(0, 0, f64::NAN);
        assert_eq!(p.predict(&missing).unwrap().labels.len(), 1);
        assert!(p.predict(&Matrix::zeros(1, 2)).is_err());
    }

    #[test]
    fn held_out_rows_never_change_the_fit() {
        let (x, y, kinds) = data(36, 3);
        let train: Vec<usize> = (0..26).collect();
        let a = rf_smote_lasso();
        let base = fit_pipeline(&a, &kinds, &x.select_rows(&train), &y[..26], 9).unwrap();
        let mut perturbed = x.clone();
        for i in 26..36 {
            for j in 0..4 {
                perturbed.set(i, j, 1e6 * (i + j) as f64);
            }
        }
        let again = fit_pipeline(&a, &kinds, &perturbed.select_rows(&train), &y[..26], 9).unwrap();
        assert_eq!(base.to_text(), again.to_text());
    }

    #[test]
    fn step_errors_name_the_step() {
        let x = Matrix::from_rows(&[vec![1.0], vec![1.0], vec![1.0], vec![1.0]]).unwrap();
        let a = rf_smote_lasso();
        let err = fit_pipeline(&a, &[FeatureKind::Numeric], &x, &[0, 1, 0, 1], 0).unwrap_err();
        assert!(err.to_string().starts_with("variance_filter"), "{err}");
    }
}
