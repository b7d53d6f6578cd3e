//! The five classifiers behind one train / predict / score contract.
//!
//! Scores are monotone in the confidence of the positive label: sigmoid
//! probabilities for LR and NN, positive vote fractions for RF and k-NN, and
//! raw decision values for the SVM.

mod forest;
mod knn;
mod logistic;
mod mlp;
mod svm;

use std::fmt;
use std::str::FromStr;

pub use forest::{DecisionTree, ForestModel, TreeNode};
pub use knn::KnnModel;
pub use logistic::{fit_logistic, LogisticModel, LOGISTIC_MAX_ITER, LOGISTIC_TOL};
pub use mlp::{MlpConfig, MlpModel};
pub use svm::{smo_solve, SmoSolution, SvmModel, SMO_TOL};

use crate::codec::{TextReader, TextWriter};
use crate::error::{Error, Result};
use crate::matrix::Matrix;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Algorithm {
    LR,
    KNN,
    RF,
    SVM,
    NN,
}

impl Algorithm {
    pub const ALL: [Algorithm; 5] = [Algorithm::LR, Algorithm::KNN, Algorithm::RF, Algorithm::SVM, Algorithm::NN];

    /// LR and RF expose per-feature weights.
    pub fn is_descriptive(self) -> bool {
        matches!(self, Algorithm::LR | Algorithm::RF)
    }

    pub fn name(self) -> &'static str {
        match self {
            Algorithm::LR => "LR",
            Algorithm::KNN => "KNN",
            Algorithm::RF => "RF",
            Algorithm::SVM => "SVM",
            Algorithm::NN => "NN",
        }
    }
}

impl fmt::Display for Algorithm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Algorithm {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "LR" => Ok(Algorithm::LR),
            "KNN" | "k-NN" => Ok(Algorithm::KNN),
            "RF" => Ok(Algorithm::RF),
            "SVM" => Ok(Algorithm::SVM),
            "NN" => Ok(Algorithm::NN),
            other => Err(Error::InvalidInput(format!("unknown classifier `{other}`"))),
        }
    }
}

macro_rules! word_enum {
    ($name:ident { $($variant:ident => $text:literal),+ $(,)? }) => {
        #[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
        pub enum $name { $($variant),+ }

        impl fmt::Display for $name {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                f.write_str(match self { $($name::$variant => $text),+ })
            }
        }

        impl FromStr for $name {
            type Err = Error;
            fn from_str(s: &str) -> Result<Self> {
                match s {
                    $($text => Ok($name::$variant),)+
                    other => Err(Error::InvalidInput(format!(concat!("unknown ", stringify!($name), " `{}`"), other))),
                }
            }
        }
    };
}

word_enum!(ClassWeight { Unweighted => "None", Balanced => "balanced" });
word_enum!(Penalty { L1 => "l1", L2 => "l2" });
word_enum!(Criterion { Gini => "gini", Entropy => "entropy" });
word_enum!(KnnWeights { Uniform => "uniform", Distance => "distance" });

/// Hyperparameters for one classifier.
#[derive(Clone, Debug, PartialEq)]
pub enum LearnerParams {
    Logistic {
        c: f64,
        penalty: Penalty,
        class_weight: ClassWeight,
    },
    Knn {
        k: usize,
        weights: KnnWeights,
    },
    Forest {
        n_estimators: usize,
        criterion: Criterion,
        /// `None` grows trees until leaves are pure.
        max_depth: Option<usize>,
        class_weight: ClassWeight,
    },
    Svm {
        c: f64,
        gamma: f64,
        class_weight: ClassWeight,
    },
    Mlp {
        alpha: f64,
        hidden: Vec<usize>,
    },
}

pub const LR_C_GRID: [f64; 14] = [0.00001, 0.0001, 0.0005, 0.001, 0.005, 0.01, 0.05, 0.1, 0.5, 1.0, 5.0, 10.0, 15.0, 30.0];
pub const KNN_K_GRID: [usize; 6] = [1, 3, 5, 7, 9, 11];
pub const RF_ESTIMATORS_GRID: [usize; 5] = [100, 150, 200, 250, 500];
pub const RF_DEPTH_GRID: [Option<usize>; 3] = [None, Some(4), Some(6)];
pub const SVM_C_GRID: [f64; 9] = [0.01, 0.1, 0.5, 1.0, 5.0, 10.0, 15.0, 30.0, 50.0];
pub const SVM_GAMMA_GRID: [f64; 6] = [0.0001, 0.001, 0.01, 0.1, 1.0, 5.0];
/// The published alpha list repeats 1e-5 (as `1e-5` and `0.00001`); it appears once here.
pub const NN_ALPHA_GRID: [f64; 9] = [0.00001, 0.0001, 0.001, 0.01, 0.1, 1.0, 3.0, 5.0, 10.0];
pub const NN_HIDDEN_GRID: [&[usize]; 12] = [
    &[30],
    &[50],
    &[70],
    &[100],
    &[150],
    &[30, 30],
    &[50, 50],
    &[70, 70],
    &[100, 100],
    &[30, 30, 30],
    &[50, 50, 50],
    &[70, 70, 70],
];
const CLASS_WEIGHTS: [ClassWeight; 2] = [ClassWeight::Unweighted, ClassWeight::Balanced];

impl LearnerParams {
    pub fn algorithm(&self) -> Algorithm {
        match self {
            LearnerParams::Logistic { .. } => Algorithm::LR,
            LearnerParams::Knn { .. } => Algorithm::KNN,
            LearnerParams::Forest { .. } => Algorithm::RF,
            LearnerParams::Svm { .. } => Algorithm::SVM,
            LearnerParams::Mlp { .. } => Algorithm::NN,
        }
    }

    /// The full hyperparameter grid searched for an algorithm.
    pub fn grid(algorithm: Algorithm) -> Vec<LearnerParams> {
        let mut out = Vec::new();
        match algorithm {
            Algorithm::LR => {
                for &c in &LR_C_GRID {
                    for class_weight in CLASS_WEIGHTS {
                        for penalty in [Penalty::L1, Penalty::L2] {
                            out.push(LearnerParams::Logistic { c, penalty, class_weight });
                        }
                    }
                }
            }
            Algorithm::KNN => {
                for &k in &KNN_K_GRID {
                    for weights in [KnnWeights::Uniform, KnnWeights::Distance] {
                        out.push(LearnerParams::Knn { k, weights });
                    }
                }
            }
            Algorithm::RF => {
                for &n_estimators in &RF_ESTIMATORS_GRID {
                    for criterion in [Criterion::Entropy, Criterion::Gini] {
                        for &max_depth in &RF_DEPTH_GRID {
                            for class_weight in CLASS_WEIGHTS {
                                out.push(LearnerParams::Forest {
                                    n_estimators,
                                    criterion,
                                    max_depth,
                                    class_weight,
                                });
                            }
                        }
                    }
                }
            }
            Algorithm::SVM => {
                for &c in &SVM_C_GRID {
                    for &gamma in &SVM_GAMMA_GRID {
                        for class_weight in CLASS_WEIGHTS {
                            out.push(LearnerParams::Svm { c, gamma, class_weight });
                        }
                    }
                }
            }
            Algorithm::NN => {
                for &alpha in &NN_ALPHA_GRID {
                    for hidden in NN_HIDDEN_GRID {
                        out.push(LearnerParams::Mlp {
                            alpha,
                            hidden: hidden.to_vec(),
                        });
                    }
                }
            }
        }
        out
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidInput(m));
        match self {
            LearnerParams::Logistic { c, .. } | LearnerParams::Svm { c, .. } if !(*c > 0.0 && c.is_finite()) => {
                bad(format!("C must be positive, got {c}"))
            }
            LearnerParams::Svm { gamma, .. } if !(*gamma > 0.0 && gamma.is_finite()) => {
                bad(format!("gamma must be positive, got {gamma}"))
            }
            LearnerParams::Knn { k: 0, .. } => bad("k-NN needs k >= 1".into()),
            LearnerParams::Forest { n_estimators: 0, .. } => bad("random forest needs at least one tree".into()),
            LearnerParams::Forest { max_depth: Some(0), .. } => bad("max_depth must be positive".into()),
            LearnerParams::Mlp { alpha, hidden } => {
                if !(*alpha >= 0.0 && alpha.is_finite()) {
                    bad(format!("alpha must be non-negative, got {alpha}"))
                } else if hidden.is_empty() || hidden.contains(&0) {
                    bad("hidden layers must be non-empty and positive".into())
                } else {
                    Ok(())
                }
            }
            _ => Ok(()),
        }
    }

    /// Named values in report order.
    pub fn named_values(&self) -> Vec<(&'static str, String)> {
        let depth = |d: &Option<usize>| d.map_or("None".to_string(), |d| d.to_string());
        match self {
            LearnerParams::Logistic { c, penalty, class_weight } => vec![
                ("class_weight", class_weight.to_string()),
                ("C", fmt_real(*c)),
                ("penalty", penalty.to_string()),
            ],
            LearnerParams::Knn { k, weights } => vec![("n_neighbors", k.to_string()), ("weights", weights.to_string())],
            LearnerParams::Forest {
                n_estimators,
                criterion,
                max_depth,
                class_weight,
            } => vec![
                ("n_estimators", n_estimators.to_string()),
                ("criterion", criterion.to_string()),
                ("max_depth", depth(max_depth)),
                ("class_weight", class_weight.to_string()),
            ],
            LearnerParams::Svm { c, gamma, class_weight } => vec![
                ("gamma", fmt_real(*gamma)),
                ("class_weight", class_weight.to_string()),
                ("C", fmt_real(*c)),
            ],
            LearnerParams::Mlp { alpha, hidden } => vec![
                ("alpha", fmt_real(*alpha)),
                (
                    "hidden_layer_sizes",
                    format!("({},)", hidden.iter().map(ToString::to_string).collect::<Vec<_>>().join(",")),
                ),
            ],
        }
    }

    pub(crate) fn write(&self, w: &mut TextWriter) {
        w.value("algorithm", self.algorithm());
        for (k, v) in self.named_values() {
            w.line("param", [k, v.as_str()]);
        }
    }

    pub(crate) fn read(r: &mut TextReader<'_>) -> Result<LearnerParams> {
        let algorithm: Algorithm = r.word("algorithm")?.parse()?;
        let mut values = std::collections::HashMap::new();
        while r.peek_key() == Some("param") {
            let f = r.fields("param")?;
            let [k, v] = f.as_slice() else {
                return Err(Error::ModelFormat("param needs a name and a value".into()));
            };
            values.insert(*k, *v);
        }
        let get = |k: &str| {
            values
                .get(k)
                .copied()
                .ok_or_else(|| Error::ModelFormat(format!("missing param `{k}`")))
        };
        let real = |k: &str| -> Result<f64> {
            get(k)?.parse().map_err(|_| Error::ModelFormat(format!("param `{k}` is not a number")))
        };
        let count = |k: &str| -> Result<usize> {
            get(k)?.parse().map_err(|_| Error::ModelFormat(format!("param `{k}` is not a count")))
        };
        let params = match algorithm {
            Algorithm::LR => LearnerParams::Logistic {
                c: real("C")?,
                penalty: get("penalty")?.parse()?,
                class_weight: get("class_weight")?.parse()?,
            },
            Algorithm::KNN => LearnerParams::Knn {
                k: count("n_neighbors")?,
                weights: get("weights")?.parse()?,
            },
            Algorithm::RF => LearnerParams::Forest {
                n_estimators: count("n_estimators")?,
                criterion: get("criterion")?.parse()?,
                max_depth: match get("max_depth")? {
                    "None" => None,
                    d => Some(d.parse().map_err(|_| Error::ModelFormat("bad max_depth".into()))?),
                },
                class_weight: get("class_weight")?.parse()?,
            },
            Algorithm::SVM => LearnerParams::Svm {
                c: real("C")?,
                gamma: real("gamma")?,
                class_weight: get("class_weight")?.parse()?,
            },
            Algorithm::NN => {
                let h = get("hidden_layer_sizes")?;
                let hidden = h
                    .trim_start_matches('(')
                    .trim_end_matches(')')
                    .split(',')
                    .filter(|s| !s.is_empty())
                    .map(|s| s.parse().map_err(|_| Error::ModelFormat(format!("bad layer size `{s}`"))))
                    .collect::<Result<Vec<usize>>>()?;
                LearnerParams::Mlp {
                    alpha: real("alpha")?,
                    hidden,
                }
            }
        };
        params.validate()?;
        Ok(params)
    }
}

/// Shortest round-trip decimal.
pub(crate) fn fmt_real(v: f64) -> String {
    format!("{v}")
}

#[derive(Clone, Debug, PartialEq)]
pub struct LearnerSpec {
    pub params: LearnerParams,
    pub seed: u64,
}

/// Per-label weights `n / (2 n_c)`.
pub fn balanced_class_weights(y: &[u8]) -> [f64; 2] {
    let n = y.len() as f64;
    let pos = y.iter().filter(|&&l| l == 1).count() as f64;
    let neg = n - pos;
    [n / (2.0 * neg), n / (2.0 * pos)]
}

fn effective_weights(y: &[u8], class_weight: ClassWeight, sample_weights: Option<&[f64]>) -> Vec<f64> {
    let cw = match class_weight {
        ClassWeight::Unweighted => [1.0, 1.0],
        ClassWeight::Balanced => balanced_class_weights(y),
    };
    y.iter()
        .enumerate()
        .map(|(i, &l)| cw[usize::from(l)] * sample_weights.map_or(1.0, |s| s[i]))
        .collect()
}

#[derive(Clone, Debug, PartialEq)]
pub enum TrainedModel {
    Logistic(LogisticModel),
    Knn(KnnModel),
    Forest(ForestModel),
    Svm(SvmModel),
    Mlp(MlpModel),
}

/// Trains a classifier; deterministic given `spec.seed`.
pub fn train(spec: &LearnerSpec, x: &Matrix, y: &[u8], sample_weights: Option<&[f64]>) -> Result<TrainedModel> {
    spec.params.validate()?;
    if x.nrows() != y.len() {
        return Err(Error::InvalidInput(format!("{} rows but {} labels", x.nrows(), y.len())));
    }
    if let Some(w) = sample_weights {
        if w.len() != y.len() || w.iter().any(|v| !(*v >= 0.0 && v.is_finite())) {
            return Err(Error::InvalidInput("sample weights must be non-negative, one per row".into()));
        }
    }
    if y.iter().any(|&l| l > 1) {
        return Err(Error::InvalidInput("labels must be 0 or 1".into()));
    }
    let pos = y.iter().filter(|&&l| l == 1).count();
    if pos == 0 || pos == y.len() {
        return Err(Error::Degenerate("training set holds a single label".into()));
    }
    if x.ncols() == 0 {
        return Err(Error::Degenerate("training set has no features".into()));
    }
    if x.as_slice().iter().any(|v| !v.is_finite()) {
        return Err(Error::InvalidInput("training rows contain missing or non-finite values".into()));
    }
    Ok(match &spec.params {
        LearnerParams::Logistic { c, penalty, class_weight } => {
            let w = effective_weights(y, *class_weight, sample_weights);
            TrainedModel::Logistic(fit_logistic(x, y, &w, *c, *penalty))
        }
        LearnerParams::Knn { k, weights } => TrainedModel::Knn(KnnModel::fit(x, y, *k, *weights)),
        LearnerParams::Forest {
            n_estimators,
            criterion,
            max_depth,
            class_weight,
        } => {
            let w = effective_weights(y, *class_weight, sample_weights);
            TrainedModel::Forest(ForestModel::fit(x, y, &w, *n_estimators, *criterion, *max_depth, spec.seed))
        }
        LearnerParams::Svm { c, gamma, class_weight } => {
            let w = effective_weights(y, *class_weight, sample_weights);
            TrainedModel::Svm(SvmModel::fit(x, y, &w, *c, *gamma)?)
        }
        LearnerParams::Mlp { alpha, hidden } => {
            let w = sample_weights.map_or_else(|| vec![1.0; y.len()], <[f64]>::to_vec);
            TrainedModel::Mlp(MlpModel::fit(x, y, &w, *alpha, hidden, spec.seed, &MlpConfig::default()))
        }
    })
}

const MODEL_MAGIC: &str = "pipegrid-model";
const MODEL_VERSION: u32 = 1;

impl TrainedModel {
    pub fn algorithm(&self) -> Algorithm {
        match self {
            TrainedModel::Logistic(_) => Algorithm::LR,
            TrainedModel::Knn(_) => Algorithm::KNN,
            TrainedModel::Forest(_) => Algorithm::RF,
            TrainedModel::Svm(_) => Algorithm::SVM,
            TrainedModel::Mlp(_) => Algorithm::NN,
        }
    }

    pub fn n_features(&self) -> usize {
        match self {
            TrainedModel::Logistic(m) => m.coef.len(),
            TrainedModel::Knn(m) => m.n_features(),
            TrainedModel::Forest(m) => m.n_features,
            TrainedModel::Svm(m) => m.n_features(),
            TrainedModel::Mlp(m) => m.n_features(),
        }
    }

    pub fn predict_scores(&self, x: &Matrix) -> Result<Vec<f64>> {
        if x.nrows() == 0 {
            return Ok(Vec::new());
        }
        x.ensure_width(self.n_features())?;
        Ok(match self {
            TrainedModel::Logistic(m) => m.scores(x),
            TrainedModel::Knn(m) => m.scores(x),
            TrainedModel::Forest(m) => m.scores(x),
            TrainedModel::Svm(m) => m.decision_values(x),
            TrainedModel::Mlp(m) => m.scores(x),
        })
    }

    /// Decision threshold on [`predict_scores`](Self::predict_scores).
    pub fn threshold(&self) -> f64 {
        match self {
            TrainedModel::Svm(_) => 0.0,
            _ => 0.5,
        }
    }

    pub fn predict(&self, x: &Matrix) -> Result<Vec<u8>> {
        let t = self.threshold();
        Ok(self.predict_scores(x)?.into_iter().map(|s| u8::from(s > t)).collect())
    }

    /// Absolute LR coefficients or RF impurity importances, normalized to
    /// sum to one when not all zero.
    pub fn extract_weights(&self) -> Result<Vec<f64>> {
        let raw: Vec<f64> = match self {
            TrainedModel::Logistic(m) => m.coef.iter().map(|c| c.abs()).collect(),
            TrainedModel::Forest(m) => m.importances.clone(),
            other => return Err(Error::NonDescriptive(other.algorithm().name())),
        };
        let total: f64 = raw.iter().sum();
        Ok(if total > 0.0 {
            raw.into_iter().map(|v| v / total).collect()
        } else {
            raw
        })
    }

    pub(crate) fn write(&self, w: &mut TextWriter) {
        w.value("model", self.algorithm());
        match self {
            TrainedModel::Logistic(m) => m.write(w),
            TrainedModel::Knn(m) => m.write(w),
            TrainedModel::Forest(m) => m.write(w),
            TrainedModel::Svm(m) => m.write(w),
            TrainedModel::Mlp(m) => m.write(w),
        }
    }

    pub(crate) fn read(r: &mut TextReader<'_>) -> Result<TrainedModel> {
        let algorithm: Algorithm = r.word("model")?.parse()?;
        Ok(match algorithm {
            Algorithm::LR => TrainedModel::Logistic(LogisticModel::read(r)?),
            Algorithm::KNN => TrainedModel::Knn(KnnModel::read(r)?),
            Algorithm::RF => TrainedModel::Forest(ForestModel::read(r)?),
            Algorithm::SVM => TrainedModel::Svm(SvmModel::read(r)?),
            Algorithm::NN => TrainedModel::Mlp(MlpModel::read(r)?),
        })
    }

    /// Versioned flat-text serialization.
    pub fn to_text(&self) -> String {
        let mut w = TextWriter::new();
        w.line(MODEL_MAGIC, [MODEL_VERSION]);
        self.write(&mut w);
        w.finish()
    }

    pub fn from_text(text: &str) -> Result<TrainedModel> {
        let mut r = TextReader::new(text);
        let v: u32 = r.one(MODEL_MAGIC)?;
        if v != MODEL_VERSION {
            return Err(Error::ModelFormat(format!("unsupported model version {v}")));
        }
        TrainedModel::read(&mut r)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::seed;
    use rand::Rng;

    fn grid_sizes() -> Vec<(Algorithm, usize)> {
        Algorithm::ALL.iter().map(|&a| (a, LearnerParams::grid(a).len())).collect()
    }

    #[test]
    fn grid_cardinalities() {
        assert_eq!(
            grid_sizes(),
            vec![
                (Algorithm::LR, 14 * 2 * 2),
                (Algorithm::KNN, 6 * 2),
                (Algorithm::RF, 5 * 2 * 3 * 2),
                (Algorithm::SVM, 9 * 6 * 2),
                (Algorithm::NN, 9 * 12),
            ]
        );
    }

    /// 200 rows, two features, label = sign of a linear score with a margin.
    pub(crate) fn separable(n: usize, seed_value: u64) -> (Matrix, Vec<u8>) {
        let mut rng = seed::rng(seed_value);
        let mut rows = Vec::new();
        let mut y = Vec::new();
        while rows.len() < n {
            let a: f64 = rng.gen_range(-2.0..2.0);
            let b: f64 = rng.gen_range(-2.0..2.0);
            let s = a + 0.5 * b;
            if s.abs() < 0.3 {
                continue;
            }
            rows.push(vec![a, b]);
            y.push(u8::from(s > 0.0));
        }
        (Matrix::from_rows(&rows).unwrap(), y)
    }

    fn accuracy(m: &TrainedModel, x: &Matrix, y: &[u8]) -> f64 {
        let p = m.predict(x).unwrap();
        p.iter().zip(y).filter(|(a, b)| a == b).count() as f64 / y.len() as f64
    }

    fn default_params(a: Algorithm) -> LearnerParams {
        match a {
            Algorithm::LR => LearnerParams::Logistic {
                c: 1.0,
                penalty: Penalty::L2,
                class_weight: ClassWeight::Unweighted,
            },
            Algorithm::KNN => LearnerParams::Knn {
                k: 5,
                weights: KnnWeights::Uniform,
            },
            Algorithm::RF => LearnerParams::Forest {
                n_estimators: 100,
                criterion: Criterion::Gini,
                max_depth: None,
                class_weight: ClassWeight::Unweighted,
            },
            Algorithm::SVM => LearnerParams::Svm {
                c: 10.0,
                gamma: 0.5,
                class_weight: ClassWeight::Unweighted,
            },
            Algorithm::NN => LearnerParams::Mlp {
                alpha: 1e-4,
                hidden: vec![30],
            },
        }
    }

    #[test]
    fn every_algorithm_learns_separable_data() {
        let (x, y) = separable(200, 1);
        for a in Algorithm::ALL {
            let spec = LearnerSpec { params: default_params(a), seed: 3 };
            let m = train(&spec, &x, &y, None).unwrap();
            let acc = accuracy(&m, &x, &y);
            assert!(acc >= 0.95, "{a}: {acc}");
        }
    }

    #[test]
    fn deterministic_given_seed() {
        let (x, y) = separable(60, 2);
        for a in Algorithm::ALL {
            let spec = LearnerSpec { params: default_params(a), seed: 9 };
            let m1 = train(&spec, &x, &y, None).unwrap();
            let m2 = train(&spec, &x, &y, None).unwrap();
            assert_eq!(m1.predict_scores(&x).unwrap(), m2.predict_scores(&x).unwrap(), "{a}");
        }
    }

    #[test]
    fn serialization_round_trip_preserves_scores() {
        let (x, y) = separable(50, 4);
        for a in Algorithm::ALL {
            let spec = LearnerSpec { params: default_params(a), seed: 5 };
            let m = train(&spec, &x, &y, None).unwrap();
            let back = TrainedModel::from_text(&m.to_text()).unwrap();
            assert_eq!(back.predict_scores(&x).unwrap(), m.predict_scores(&x).unwrap(), "{a}");
        }
    }

    #[test]
    fn params_round_trip() {
        for a in Algorithm::ALL {
            for p in LearnerParams::grid(a) {
                let mut w = TextWriter::new();
                p.write(&mut w);
                let text = w.finish();
                assert_eq!(LearnerParams::read(&mut TextReader::new(&text)).unwrap(), p);
            }
        }
    }

    #[test]
    fn rejects_single_label_and_width_mismatch() {
        let x = Matrix::from_rows(&[vec![1.0], vec![2.0]]).unwrap();
        let spec = LearnerSpec { params: default_params(Algorithm::LR), seed: 0 };
        assert!(matches!(train(&spec, &x, &[1, 1], None), Err(Error::Degenerate(_))));
        let m = train(&spec, &x, &[0, 1], None).unwrap();
        let wide = Matrix::from_rows(&[vec![1.0, 2.0]]).unwrap();
        assert!(m.predict(&wide).is_err());
        assert!(m.predict(&Matrix::zeros(0, 0)).unwrap().is_empty());
    }

    #[test]
    fn invalid_hyperparameter_rejected() {
        let x = Matrix::from_rows(&[vec![1.0], vec![2.0]]).unwrap();
        let spec = LearnerSpec {
            params: LearnerParams::Svm {
                c: -1.0,
                gamma: 1.0,
                class_weight: ClassWeight::Unweighted,
            },
            seed: 0,
        };
        assert!(train(&spec, &x, &[0, 1], None).is_err());
    }

    #[test]
    fn lr_on_sign_of_one_feature() {
        let x = Matrix::from_rows(&[vec![-3.0], vec![-2.0], vec![-1.0], vec![1.0], vec![2.0], vec![3.0]]).unwrap();
        let y = [0, 0, 0, 1, 1, 1];
        let spec = LearnerSpec { params: default_params(Algorithm::LR), seed: 0 };
        let m = train(&spec, &x, &y, None).unwrap();
        let test = Matrix::from_rows(&[vec![-0.5], vec![0.5], vec![-10.0], vec![10.0]]).unwrap();
        assert_eq!(m.predict(&test).unwrap(), vec![0, 1, 0, 1]);
        assert_eq!(m.predict(&x).unwrap(), y.to_vec());
        assert!(m.predict_scores(&test).unwrap().iter().all(|&s| s > 0.0 && s < 1.0));
    }

    #[test]
    fn balanced_weights_raise_minority_recall() {
        // 90/10 skew with overlapping classes
        let mut rng = seed::rng(12);
        let mut rows = Vec::new();
        let mut y = Vec::new();
        for i in 0..200 {
            let label = u8::from(i % 10 == 0);
            let centre = if label == 1 { 1.0 } else { -0.3 };
            rows.push(vec![centre + rng.gen_range(-1.5..1.5), rng.gen_range(-1.0..1.0)]);
            y.push(label);
        }
        let x = Matrix::from_rows(&rows).unwrap();
        let recall = |cw| {
            let spec = LearnerSpec {
                params: LearnerParams::Logistic {
                    c: 1.0,
                    penalty: Penalty::L2,
                    class_weight: cw,
                },
                seed: 0,
            };
            let p = train(&spec, &x, &y, None).unwrap().predict(&x).unwrap();
            let tp = p.iter().zip(&y).filter(|(&a, &b)| a == 1 && b == 1).count();
            tp as f64 / 20.0
        };
        assert!(recall(ClassWeight::Balanced) >= recall(ClassWeight::Unweighted));
        assert!(recall(ClassWeight::Balanced) > 0.5);
    }

    #[test]
    fn weights_only_for_descriptive_models() {
        let (x, y) = separable(40, 8);
        for a in Algorithm::ALL {
            let spec = LearnerSpec { params: default_params(a), seed: 1 };
            let m = train(&spec, &x, &y, None).unwrap();
            let w = m.extract_weights();
            if a.is_descriptive() {
                let w = w.unwrap();
                assert!((w.iter().sum::<f64>() - 1.0).abs() < 1e-12);
            } else {
                assert!(matches!(w, Err(Error::NonDescriptive(_))));
            }
        }
    }

    #[test]
    fn single_informative_feature_dominates_weights() {
        let mut rng = seed::rng(21);
        let mut rows = Vec::new();
        let mut y = Vec::new();
        for i in 0..120 {
            let label = u8::from(i % 2 == 0);
            let mut r: Vec<f64> = (0..6).map(|_| rng.gen_range(-1.0..1.0)).collect();
            r[3] = if label == 1 { 1.0 } else { -1.0 } + rng.gen_range(-0.5..0.5);
            rows.push(r);
            y.push(label);
        }
        let x = Matrix::from_rows(&rows).unwrap();
        for a in [Algorithm::LR, Algorithm::RF] {
            let m = train(&LearnerSpec { params: default_params(a), seed: 2 }, &x, &y, None).unwrap();
            let w = m.extract_weights().unwrap();
            let top = (0..6).max_by(|&i, &j| w[i].total_cmp(&w[j])).unwrap();
            assert_eq!(top, 3, "{a}: {w:?}");
            assert!(w[3] > 0.5, "{a}: {w:?}");
        }
    }
}
