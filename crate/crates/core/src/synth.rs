//! Seeded synthetic cohorts with known informative features.

use rand::seq::SliceRandom;
use rand::Rng;
use rand_distr::StandardNormal;

use crate::data::{Dataset, FeatureKind, FeatureSchema, Schema, Timepoint};
use crate::error::{Error, Result};
use crate::seed::{derive_seed, rng, step};

#[derive(Clone, Debug, PartialEq)]
pub struct SyntheticSpec {
    pub n_rows: usize,
    pub n_numeric: usize,
    pub n_categorical: usize,
    pub n_informative: usize,
    /// Share of positive rows; the count is rounded.
    pub positive_fraction: f64,
    /// 0 makes every informative feature separate the labels exactly.
    pub noise: f64,
    /// Class-mean gap of informative numerics is `2 * signal`.
    pub signal: f64,
    pub missing_ratio: f64,
    pub seed: u64,
}

impl Default for SyntheticSpec {
    /// Shaped like the baseline cohort: 42 rows, 77 features, 24 positive.
    fn default() -> Self {
        SyntheticSpec {
            n_rows: 42,
            n_numeric: 60,
            n_categorical: 17,
            n_informative: 5,
            positive_fraction: 24.0 / 42.0,
            noise: 1.0,
            signal: 1.0,
            missing_ratio: 0.0,
            seed: 0,
        }
    }
}

impl SyntheticSpec {
    pub fn n_features(&self) -> usize {
        self.n_numeric + self.n_categorical
    }

    pub fn n_positive(&self) -> usize {
        (self.positive_fraction * self.n_rows as f64).round() as usize
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_features() == 0 {
            return Err(Error::Config("synthetic data needs at least one feature".into()));
        }
        if self.n_informative > self.n_features() {
            return Err(Error::Config(format!(
                "{} informative features requested but only {} exist",
                self.n_informative,
                self.n_features()
            )));
        }
        let pos = self.n_positive();
        if !(0.0..=1.0).contains(&self.positive_fraction) || pos == 0 || pos == self.n_rows {
            return Err(Error::Config(format!(
                "positive fraction {} gives {pos} of {} rows positive; both labels are needed",
                self.positive_fraction, self.n_rows
            )));
        }
        if !(self.noise >= 0.0 && self.noise.is_finite()) || !self.signal.is_finite() {
            return Err(Error::Config("noise must be finite and non-negative".into()));
        }
        if !(0.0..1.0).contains(&self.missing_ratio) {
            return Err(Error::Config("missing ratio must lie in [0, 1)".into()));
        }
        Ok(())
    }
}

#[derive(Clone, Debug)]
pub struct SyntheticData {
    pub dataset: Dataset,
    pub schema: Schema,
    /// Names of the features that carry label signal, in column order.
    pub informative: Vec<String>,
}

/// Numerics come first (`num_01`, ...), then categoricals (`cat_01`, ...),
/// alternating binary and 4-level ordinal. Informative columns are chosen by
/// seeded shuffle.
pub fn generate(spec: &SyntheticSpec) -> Result<SyntheticData> {
    spec.validate()?;
    let mut r = rng(derive_seed(spec.seed, &[step::SYNTH]));
    let p = spec.n_features();
    let mut features = Vec::with_capacity(p);
    let width = p.to_string().len().max(2);
    for j in 0..spec.n_numeric {
        features.push(FeatureSchema::numeric(format!("num_{:0width$}", j + 1), Timepoint::T0));
    }
    for j in 0..spec.n_categorical {
        let name = format!("cat_{:0width$}", j + 1);
        features.push(if j % 2 == 0 {
            FeatureSchema::categorical(name, FeatureKind::Binary, ["no", "yes"], Timepoint::T0)
        } else {
            FeatureSchema::categorical(name, FeatureKind::Ordinal, ["l0", "l1", "l2", "l3"], Timepoint::T0)
        });
    }

    let mut order: Vec<usize> = (0..p).collect();
    order.shuffle(&mut r);
    let mut informative_idx: Vec<usize> = order[..spec.n_informative].to_vec();
    informative_idx.sort_unstable();
    let mut is_informative = vec![false; p];
    informative_idx.iter().for_each(|&j| is_informative[j] = true);

    let n_pos = spec.n_positive();
    let mut labels: Vec<u8> = (0..spec.n_rows).map(|i| u8::from(i < n_pos)).collect();
    labels.shuffle(&mut r);

    let keep_target = 1.0 / (1.0 + spec.noise);
    let mut rows = Vec::with_capacity(spec.n_rows);
    for &l in &labels {
        let sign = if l == 1 { 1.0 } else { -1.0 };
        let row: Vec<Option<f64>> = features
            .iter()
            .enumerate()
            .map(|(j, f)| {
                let z: f64 = r.sample(StandardNormal);
                let levels = f.categories.len();
                let value = match (f.kind, is_informative[j]) {
                    (FeatureKind::Numeric, true) => sign * spec.signal + spec.noise * z,
                    (FeatureKind::Numeric, false) => z,
                    (_, true) => {
                        if r.gen::<f64>() < keep_target {
                            if l == 1 {
                                (levels - 1) as f64
                            } else {
                                0.0
                            }
                        } else {
                            r.gen_range(0..levels) as f64
                        }
                    }
                    (_, false) => r.gen_range(0..levels) as f64,
                };
                let missing = spec.missing_ratio > 0.0 && r.gen::<f64>() < spec.missing_ratio;
                (!missing).then_some(value)
            })
            .collect();
        rows.push(row);
    }
    let ids_width = spec.n_rows.to_string().len().max(3);
    let row_ids = (0..spec.n_rows).map(|i| format!("r{:0ids_width$}", i + 1)).collect();
    let schema = Schema::new(features.clone())?;
    Ok(SyntheticData {
        dataset: Dataset::new(features, rows, row_ids, Some(labels))?,
        informative: informative_idx.iter().map(|&j| schema.features()[j].name.clone()).collect(),
        schema,
    })
}

/// Labels permuted by seed, for chance-level baselines.
pub fn shuffled_labels(labels: &[u8], seed: u64) -> Vec<u8> {
    let mut out = labels.to_vec();
    out.shuffle(&mut rng(derive_seed(seed, &[step::SYNTH, 1])));
    out
}
