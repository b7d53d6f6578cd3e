//! Experiment configuration: TOML sections of flat key-value pairs.
//!
//! ```toml
//! [data]
//! schema = "schema.txt"      # paths are relative to the config file
//! clean = false              # run the cleaning filters before `run`
//!
//! [datasets]                 # one entry per time-point, reported in name order
//! D0 = "d0.csv"
//! D1 = "d1.csv"
//!
//! [split]
//! seed = 42                  # required here or on the command line
//! test_ratio = 0.3
//! outer_folds = 10
//!
//! [inner]
//! scheme = "resample"        # or "kfold"
//! repeats = 10
//! validation_ratio = 0.3
//! folds = 10
//!
//! [preprocess]
//! rare_category_ratio = 0.1
//! nmi_threshold = 0.5
//! correlation_threshold = 0.8
//! alpha = 0.05
//! yates = false
//!
//! [grid]
//! families = "all"           # "reduced", or patterns like "!*:rfe_rf_fs:*:RF"
//!
//! [stability]
//! n_runs = 100
//! subsample_fraction = 0.7
//! weight_threshold = 0.4
//! top_k = 10
//!
//! [report]
//! curve_fractions = [0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9, 1.0]
//! compare_top = 3
//!
//! [output]
//! dir = "out"                # PIPEGRID_OUT overrides, --out overrides both
//! ```

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::Deserialize;
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::evaluation::{InnerScheme, DEFAULT_CURVE_FRACTIONS};
use crate::pipeline::FamilyFilter;
use crate::preprocess::PreprocessConfig;
use crate::stability::StabilityConfig;

pub const OUTPUT_ENV: &str = "PIPEGRID_OUT";

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    #[serde(default)]
    data: RawData,
    #[serde(default)]
    datasets: BTreeMap<String, PathBuf>,
    #[serde(default)]
    split: RawSplit,
    #[serde(default)]
    inner: RawInner,
    #[serde(default)]
    preprocess: RawPreprocess,
    #[serde(default)]
    grid: RawGrid,
    #[serde(default)]
    stability: RawStability,
    #[serde(default)]
    report: RawReport,
    #[serde(default)]
    output: RawOutput,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawData {
    schema: Option<PathBuf>,
    #[serde(default)]
    clean: bool,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawSplit {
    seed: Option<u64>,
    test_ratio: Option<f64>,
    outer_folds: Option<usize>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawInner {
    scheme: Option<String>,
    repeats: Option<usize>,
    validation_ratio: Option<f64>,
    folds: Option<usize>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawPreprocess {
    rare_category_ratio: Option<f64>,
    nmi_threshold: Option<f64>,
    correlation_threshold: Option<f64>,
    alpha: Option<f64>,
    yates: Option<bool>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawGrid {
    families: Option<String>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawStability {
    n_runs: Option<usize>,
    subsample_fraction: Option<f64>,
    weight_threshold: Option<f64>,
    top_k: Option<usize>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawReport {
    curve_fractions: Option<Vec<f64>>,
    compare_top: Option<usize>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawOutput {
    dir: Option<PathBuf>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ExperimentConfig {
    pub schema: PathBuf,
    /// (name, csv path) in name order.
    pub datasets: Vec<(String, PathBuf)>,
    pub clean: bool,
    pub seed: Option<u64>,
    pub test_ratio: f64,
    pub outer_folds: usize,
    pub inner: InnerScheme,
    pub preprocess: PreprocessConfig,
    pub grid: String,
    pub stability: StabilityConfig,
    pub top_k: usize,
    pub curve_fractions: Vec<f64>,
    /// Within-dataset comparisons pit the best family against ranks 2..=compare_top.
    pub compare_top: usize,
    pub output_dir: PathBuf,
}

/// Command-line values that take precedence over the file.
#[derive(Clone, Debug, Default)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub out: Option<PathBuf>,
    pub grid: Option<String>,
    pub top_k: Option<usize>,
}

impl ExperimentConfig {
    /// Parses TOML text; relative paths resolve against `base_dir`.
    pub fn parse(text: &str, base_dir: &Path) -> Result<Self> {
        let raw: RawConfig = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        let resolve = |p: PathBuf| if p.is_absolute() { p } else { base_dir.join(p) };
        let inner = match raw.inner.scheme.as_deref().unwrap_or("resample") {
            "resample" => InnerScheme::Resample {
                repeats: raw.inner.repeats.unwrap_or(10),
                test_ratio: raw.inner.validation_ratio.unwrap_or(0.3),
            },
            "kfold" => InnerScheme::KFold {
                k: raw.inner.folds.unwrap_or(10),
            },
            other => return Err(Error::Config(format!("inner.scheme `{other}` is not `resample` or `kfold`"))),
        };
        let defaults = PreprocessConfig::default();
        let p = raw.preprocess;
        let sdefaults = StabilityConfig::default();
        let cfg = ExperimentConfig {
            schema: resolve(raw.data.schema.ok_or_else(|| Error::Config("data.schema is required".into()))?),
            datasets: raw.datasets.into_iter().map(|(k, v)| (k, resolve(v))).collect(),
            clean: raw.data.clean,
            seed: raw.split.seed,
            test_ratio: raw.split.test_ratio.unwrap_or(0.3),
            outer_folds: raw.split.outer_folds.unwrap_or(10),
            inner,
            preprocess: PreprocessConfig {
                rare_category_ratio: p.rare_category_ratio.unwrap_or(defaults.rare_category_ratio),
                nmi_threshold: p.nmi_threshold.unwrap_or(defaults.nmi_threshold),
                correlation_threshold: p.correlation_threshold.unwrap_or(defaults.correlation_threshold),
                alpha: p.alpha.unwrap_or(defaults.alpha),
                yates: p.yates.unwrap_or(defaults.yates),
            },
            grid: raw.grid.families.unwrap_or_else(|| "all".into()),
            stability: StabilityConfig {
                n_runs: raw.stability.n_runs.unwrap_or(sdefaults.n_runs),
                subsample_fraction: raw.stability.subsample_fraction.unwrap_or(sdefaults.subsample_fraction),
                weight_threshold: raw.stability.weight_threshold.unwrap_or(sdefaults.weight_threshold),
                seed: 0,
            },
            top_k: raw.stability.top_k.unwrap_or(10),
            curve_fractions: raw.report.curve_fractions.unwrap_or_else(|| DEFAULT_CURVE_FRACTIONS.to_vec()),
            compare_top: raw.report.compare_top.unwrap_or(3),
            output_dir: resolve(raw.output.dir.unwrap_or_else(|| "out".into())),
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn read(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        let base = path.parent().unwrap_or(Path::new("."));
        Self::parse(&text, base)
    }

    /// Applies the output-directory environment override, then command-line values.
    pub fn apply(&mut self, o: &Overrides, env_out: Option<PathBuf>) -> Result<()> {
        if let Some(dir) = env_out {
            self.output_dir = dir;
        }
        if let Some(dir) = &o.out {
            self.output_dir = dir.clone();
        }
        if o.seed.is_some() {
            self.seed = o.seed;
        }
        if let Some(g) = &o.grid {
            self.grid = g.clone();
        }
        if let Some(k) = o.top_k {
            self.top_k = k;
        }
        self.validate()
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.test_ratio > 0.0 && self.test_ratio < 1.0) {
            return Err(Error::Config(format!("split.test_ratio = {} must lie in (0, 1)", self.test_ratio)));
        }
        if self.outer_folds < 2 {
            return Err(Error::Config("split.outer_folds must be at least 2".into()));
        }
        match self.inner {
            InnerScheme::Resample { repeats, test_ratio } => {
                if repeats == 0 || !(test_ratio > 0.0 && test_ratio < 1.0) {
                    return Err(Error::Config("inner resampling needs repeats >= 1 and a ratio in (0, 1)".into()));
                }
            }
            InnerScheme::KFold { k } if k < 2 => return Err(Error::Config("inner.folds must be at least 2".into())),
            InnerScheme::KFold { .. } => {}
        }
        self.preprocess.validate()?;
        StabilityConfig { seed: 0, ..self.stability }.validate()?;
        FamilyFilter::parse(&self.grid)?;
        if self.curve_fractions.is_empty()
            || self.curve_fractions.windows(2).any(|w| w[0] >= w[1])
            || self.curve_fractions.iter().any(|&f| !(f > 0.0 && f <= 1.0))
        {
            return Err(Error::Config("report.curve_fractions must ascend within (0, 1]".into()));
        }
        if self.top_k == 0 {
            return Err(Error::Config("stability.top_k must be at least 1".into()));
        }
        Ok(())
    }

    pub fn require_seed(&self) -> Result<u64> {
        self.seed
            .ok_or_else(|| Error::Config("a seed is required (split.seed or --seed)".into()))
    }

    pub fn require_datasets(&self) -> Result<()> {
        if self.datasets.is_empty() {
            return Err(Error::Config("no [datasets] entries".into()));
        }
        for (name, path) in &self.datasets {
            if !path.is_file() {
                return Err(Error::Config(format!("dataset {name}: {} does not exist", path.display())));
            }
        }
        if !self.schema.is_file() {
            return Err(Error::Config(format!("schema {} does not exist", self.schema.display())));
        }
        Ok(())
    }

    /// Stable text of every setting that can change results; the output
    /// directory is left out.
    pub fn canonical_text(&self) -> String {
        let mut s = String::new();
        s.push_str(&format!("schema={}\n", self.schema.display()));
        for (name, path) in &self.datasets {
            s.push_str(&format!("dataset.{name}={}\n", path.display()));
        }
        s.push_str(&format!("clean={}\nseed={:?}\n", self.clean, self.seed));
        s.push_str(&format!("test_ratio={}\nouter_folds={}\n", self.test_ratio, self.outer_folds));
        s.push_str(&format!("inner={:?}\npreprocess={:?}\n", self.inner, self.preprocess));
        s.push_str(&format!("grid={}\n", self.grid));
        s.push_str(&format!(
            "stability={},{},{}\ntop_k={}\n",
            self.stability.n_runs, self.stability.subsample_fraction, self.stability.weight_threshold, self.top_k
        ));
        s.push_str(&format!("curve_fractions={:?}\ncompare_top={}\n", self.curve_fractions, self.compare_top));
        s
    }

    pub fn hash(&self) -> String {
        let digest = Sha256::digest(self.canonical_text().as_bytes());
        digest.iter().map(|b| format!("{b:02x}")).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = "[data]\nschema = \"s.txt\"\n[datasets]\nD1 = \"b.csv\"\nD0 = \"/abs/a.csv\"\n";

    #[test]
    fn defaults_and_paths() {
        let c = ExperimentConfig::parse(MINIMAL, Path::new("/base")).unwrap();
        assert_eq!(c.schema, PathBuf::from("/base/s.txt"));
        assert_eq!(
            c.datasets,
            vec![("D0".into(), PathBuf::from("/abs/a.csv")), ("D1".into(), PathBuf::from("/base/b.csv"))]
        );
        assert_eq!((c.test_ratio, c.outer_folds, c.top_k), (0.3, 10, 10));
        assert_eq!(c.inner, InnerScheme::default());
        assert_eq!(c.grid, "all");
        assert!(c.require_seed().is_err());
    }

    #[test]
    fn overrides_take_precedence() {
        let mut c = ExperimentConfig::parse(&format!("{MINIMAL}[split]\nseed = 1\n[output]\ndir = \"o\""), Path::new("/b")).unwrap();
        c.apply(&Overrides::default(), Some("/env".into())).unwrap();
        assert_eq!(c.output_dir, PathBuf::from("/env"));
        let o = Overrides {
            seed: Some(9),
            out: Some("/cli".into()),
            grid: Some("reduced".into()),
            top_k: Some(5),
        };
        c.apply(&o, Some("/env".into())).unwrap();
        assert_eq!((c.output_dir.clone(), c.seed, c.grid.as_str(), c.top_k), (PathBuf::from("/cli"), Some(9), "reduced", 5));
    }

    #[test]
    fn bad_configs() {
        let bad = |extra: &str| ExperimentConfig::parse(&format!("{MINIMAL}{extra}"), Path::new(".")).is_err();
        assert!(bad("[split]\ntest_ratio = 1.5\n"));
        assert!(bad("[split]\nunknown = 1\n"));
        assert!(bad("[inner]\nscheme = \"loo\"\n"));
        assert!(bad("[grid]\nfamilies = \"x:y\"\n"));
        assert!(bad("[report]\ncurve_fractions = [0.5, 0.4]\n"));
        assert!(ExperimentConfig::parse("[datasets]\nD0 = \"a\"\n", Path::new(".")).is_err());
    }

    #[test]
    fn hash_tracks_settings_not_output() {
        let a = ExperimentConfig::parse(MINIMAL, Path::new("/b")).unwrap();
        let mut b = a.clone();
        b.output_dir = "/elsewhere".into();
        assert_eq!(a.hash(), b.hash());
        b.seed = Some(3);
        assert_ne!(a.hash(), b.hash());
        assert_eq!(a.hash().len(), 64);
    }
}
