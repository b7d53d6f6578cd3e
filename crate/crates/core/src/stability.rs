//! Stability-based feature ranking for pipelines with interpretable weights.

use rayon::prelude::*;

use crate::data::stratified_split;
use crate::error::{Error, Result};
use crate::evaluation::SearchData;
use crate::pipeline::{fit_pipeline, Assignment};
use crate::seed::{derive_seed, step};

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct StabilityConfig {
    pub n_runs: usize,
    pub subsample_fraction: f64,
    pub weight_threshold: f64,
    pub seed: u64,
}

impl Default for StabilityConfig {
    fn default() -> Self {
        StabilityConfig {
            n_runs: 100,
            subsample_fraction: 0.7,
            weight_threshold: 0.4,
            seed: 0,
        }
    }
}

impl StabilityConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n_runs == 0 {
            return Err(Error::Config("stability needs at least one run".into()));
        }
        if !(self.subsample_fraction > 0.0 && self.subsample_fraction < 1.0) {
            return Err(Error::Config("subsample fraction must lie in (0, 1)".into()));
        }
        if !(self.weight_threshold > 0.0 && self.weight_threshold < 1.0) {
            return Err(Error::Config("weight threshold must lie in (0, 1)".into()));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct FeatureStability {
    pub feature: String,
    pub selection_count: usize,
    pub stability: f64,
    /// Mean over runs of the max-normalized absolute weight (0 when dropped).
    pub mean_weight: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct StabilityReport {
    pub n_runs: usize,
    /// Sorted by stability, then mean weight, both descending, then name.
    pub features: Vec<FeatureStability>,
}

/// Refits the assignment (no re-tuning) on `n_runs` stratified subsamples and
/// counts how often each feature keeps a normalized weight above threshold.
pub fn stability_run(
    assignment: &Assignment,
    data: SearchData<'_>,
    names: &[String],
    cfg: &StabilityConfig,
) -> Result<StabilityReport> {
    cfg.validate()?;
    let algorithm = assignment.learner.algorithm();
    if !algorithm.is_descriptive() {
        return Err(Error::NonDescriptive(algorithm.name()));
    }
    if names.len() != data.x.ncols() {
        return Err(Error::WidthMismatch {
            expected: data.x.ncols(),
            actual: names.len(),
        });
    }
    let runs: Vec<Result<Vec<f64>>> = (0..cfg.n_runs)
        .into_par_iter()
        .map(|r| {
            let run_seed = derive_seed(cfg.seed, &[step::STABILITY, r as u64]);
            let split = stratified_split(data.y, 1.0 - cfg.subsample_fraction, run_seed)?;
            let x = data.x.select_rows(&split.train_rows);
            let y: Vec<u8> = split.train_rows.iter().map(|&i| data.y[i]).collect();
            let p = fit_pipeline(assignment, data.kinds, &x, &y, derive_seed(run_seed, &[step::MODEL]))?;
            let mask = p.selected_features();
            let w = p.feature_weights()?;
            let top = w.iter().fold(0.0f64, |m, v| m.max(v.abs()));
            Ok(w.iter()
                .zip(&mask)
                .map(|(v, &keep)| if keep && top > 0.0 { v.abs() / top } else { 0.0 })
                .collect())
        })
        .collect();
    let mut counts = vec![0usize; names.len()];
    let mut sums = vec![0.0; names.len()];
    for run in runs {
        for (j, w) in run?.into_iter().enumerate() {
            if w > cfg.weight_threshold {
                counts[j] += 1;
            }
            sums[j] += w;
        }
    }
    let n = cfg.n_runs as f64;
    let mut features: Vec<FeatureStability> = names
        .iter()
        .enumerate()
        .map(|(j, name)| FeatureStability {
            feature: name.clone(),
            selection_count: counts[j],
            stability: counts[j] as f64 / n,
            mean_weight: sums[j] / n,
        })
        .collect();
    features.sort_by(|a, b| {
        b.stability
            .total_cmp(&a.stability)
            .then(b.mean_weight.total_cmp(&a.mean_weight))
            .then(a.feature.cmp(&b.feature))
    });
    Ok(StabilityReport {
        n_runs: cfg.n_runs,
        features,
    })
}

#[derive(Clone, Debug, PartialEq)]
pub struct RankedFeature {
    pub rank: usize,
    pub feature: String,
    pub stability: f64,
    pub weight: f64,
}

pub fn render_feature_ranking(report: &StabilityReport, top_k: usize) -> Vec<RankedFeature> {
    report
        .features
        .iter()
        .take(top_k)
        .enumerate()
        .map(|(i, f)| RankedFeature {
            rank: i + 1,
            feature: f.feature.clone(),
            stability: f.stability,
            weight: f.mean_weight,
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::FeatureKind;
    use crate::learners::{ClassWeight, LearnerParams, Penalty};
    use crate::selection::{SamplerSpec, SelectorSpec};
    use crate::synth::{generate, SyntheticSpec};

    fn lasso_lr() -> Assignment {
        Assignment {
            sampler: SamplerSpec::None,
            selector: SelectorSpec::LassoFs { c: 1.0 },
            learner: LearnerParams::Logistic {
                c: 1.0,
                penalty: Penalty::L2,
                class_weight: ClassWeight::Unweighted,
            },
        }
    }

    fn run(spec: &SyntheticSpec, a: &Assignment, n_runs: usize) -> (StabilityReport, Vec<String>) {
        let s = generate(spec).unwrap();
        let x = s.dataset.feature_matrix();
        let kinds: Vec<FeatureKind> = s.dataset.kinds();
        let d = SearchData {
            x: &x,
            y: s.dataset.labels().unwrap(),
            kinds: &kinds,
        };
        let cfg = StabilityConfig {
            n_runs,
            seed: 3,
            ..StabilityConfig::default()
        };
        (stability_run(a, d, &s.dataset.feature_names(), &cfg).unwrap(), s.informative)
    }

    #[test]
    fn single_signal_is_stable() {
        let spec = SyntheticSpec {
            n_rows: 60,
            n_numeric: 10,
            n_categorical: 0,
            n_informative: 1,
            noise: 0.3,
            ..SyntheticSpec::default()
        };
        let (rep, informative) = run(&spec, &lasso_lr(), 30);
        assert_eq!(rep.features[0].feature, informative[0]);
        assert!(rep.features[0].stability >= 0.9);
        assert!(rep.features[1..].iter().all(|f| f.stability <= 0.3));
        let total: usize = rep.features.iter().map(|f| f.selection_count).sum();
        assert!(total <= 30 * 10);
        let (again, _) = run(&spec, &lasso_lr(), 30);
        assert_eq!(rep, again);
    }

    #[test]
    fn non_descriptive_refused() {
        let spec = SyntheticSpec {
            n_numeric: 4,
            n_categorical: 0,
            n_informative: 1,
            ..SyntheticSpec::default()
        };
        let s = generate(&spec).unwrap();
        let x = s.dataset.feature_matrix();
        let kinds = s.dataset.kinds();
        let d = SearchData {
            x: &x,
            y: s.dataset.labels().unwrap(),
            kinds: &kinds,
        };
        let a = Assignment {
            learner: LearnerParams::Svm {
                c: 1.0,
                gamma: 0.1,
                class_weight: ClassWeight::Unweighted,
            },
            ..lasso_lr()
        };
        let err = stability_run(&a, d, &s.dataset.feature_names(), &StabilityConfig::default()).unwrap_err();
        assert!(matches!(err, Error::NonDescriptive("SVM")));
    }

    #[test]
    fn ranking_order_and_truncation() {
        let f = |name: &str, s: f64, w: f64| FeatureStability {
            feature: name.into(),
            selection_count: (s * 10.0) as usize,
            stability: s,
            mean_weight: w,
        };
        let rep = StabilityReport {
            n_runs: 10,
            features: vec![f("a", 0.9, 0.5), f("b", 0.5, 0.7), f("c", 0.5, 0.2)],
        };
        let top = render_feature_ranking(&rep, 2);
        assert_eq!(top.len(), 2);
        assert_eq!((top[1].rank, top[1].feature.as_str()), (2, "b"));
        assert!(render_feature_ranking(&StabilityReport { n_runs: 1, features: vec![] }, 10).is_empty());
    }

    #[test]
    fn bad_config_rejected() {
        for cfg in [
            StabilityConfig { n_runs: 0, ..StabilityConfig::default() },
            StabilityConfig { subsample_fraction: 1.0, ..StabilityConfig::default() },
            StabilityConfig { weight_threshold: 0.0, ..StabilityConfig::default() },
        ] {
            assert!(cfg.validate().is_err());
        }
    }
}
