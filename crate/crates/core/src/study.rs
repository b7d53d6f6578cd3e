//! End-to-end commands: describe, preprocess, run, stability and synth.
//!
//! Every command writes under the configured output directory and is
//! deterministic given the config and seed. Parallel work runs on the
//! current rayon pool; its size never changes the output.

use std::path::{Path, PathBuf};
use std::time::Instant;

use rayon::prelude::*;

use crate::config::ExperimentConfig;
use crate::data::{load_dataset, stratified_split, Dataset, FeatureKind, Schema};
use crate::error::{Error, Result};
use crate::evaluation::{
    compare_pipelines, fit_final, inner_select_many, learning_curve, outer_evaluate, outer_folds, rank_pipelines,
    roc_curve, test_evaluate, CvResult, InnerSelection, SearchData,
};
use crate::learners::Algorithm;
use crate::matrix::Matrix;
use crate::pipeline::{enumerate_grid, Family, FamilyFilter, FittedPipeline};
use crate::preprocess::{clean_dataset, describe_dataset, Removal};
use crate::report::{self, Table};
use crate::seed::{derive_seed, step};
use crate::stability::{render_feature_ranking, stability_run, StabilityConfig};
use crate::synth::{generate, SyntheticSpec};

pub const PIPELINES_FILE: &str = "pipelines.csv";
pub const COMPARISONS_FILE: &str = "comparisons.csv";
pub const FAMILIES_FILE: &str = "families.csv";
pub const DESCRIPTIVE_FILE: &str = "descriptive.csv";
pub const FAILURES_FILE: &str = "failures.csv";
pub const ROC_FILE: &str = "roc.csv";
pub const CURVE_FILE: &str = "learning_curve.csv";
pub const REMOVALS_FILE: &str = "removals.csv";
pub const MANIFEST_FILE: &str = "manifest.json";
pub const MODELS_DIR: &str = "models";

/// Learners in the interpretable (weight-exposing) and opaque report rows.
const DESCRIPTIVE: [Algorithm; 2] = [Algorithm::LR, Algorithm::RF];
const NON_DESCRIPTIVE: [Algorithm; 2] = [Algorithm::SVM, Algorithm::NN];

/// Pipeline id suffix: trailing digits of the dataset name, else the name.
pub fn dataset_suffix(name: &str) -> &str {
    let digits = name.trim_start_matches(|c: char| !c.is_ascii_digit());
    if !digits.is_empty() && digits.chars().all(|c| c.is_ascii_digit()) {
        digits
    } else {
        name
    }
}

pub fn pipeline_id(dataset: &str) -> String {
    format!("p{}", dataset_suffix(dataset))
}

/// Loaded dataset, optionally cleaned, with its removal ledger.
pub fn load_input(cfg: &ExperimentConfig, name: &str, path: &Path) -> Result<(Dataset, Vec<Removal>)> {
    let inner = || -> Result<(Dataset, Vec<Removal>)> {
        let schema = Schema::read(&cfg.schema)?;
        let (ds, _) = load_dataset(path, &schema)?;
        ds.require_labels()?;
        if cfg.clean {
            let out = clean_dataset(&ds, &cfg.preprocess)?;
            Ok((out.dataset, out.removals))
        } else {
            Ok((ds, Vec::new()))
        }
    };
    inner().map_err(|e| e.in_dataset(name))
}

/// Training part of the fixed stratified split.
pub struct TrainingData {
    pub dataset: Dataset,
    pub x: Matrix,
    pub y: Vec<u8>,
    pub kinds: Vec<FeatureKind>,
}

impl TrainingData {
    fn new(dataset: Dataset) -> Result<Self> {
        let x = dataset.feature_matrix();
        let y = dataset.require_labels()?.to_vec();
        let kinds = dataset.kinds();
        Ok(TrainingData { dataset, x, y, kinds })
    }

    pub fn search(&self) -> SearchData<'_> {
        SearchData {
            x: &self.x,
            y: &self.y,
            kinds: &self.kinds,
        }
    }
}

pub fn split_dataset(ds: &Dataset, cfg: &ExperimentConfig, seed: u64) -> Result<(TrainingData, TrainingData)> {
    let split = stratified_split(ds.require_labels()?, cfg.test_ratio, derive_seed(seed, &[step::SPLIT]))?;
    Ok((
        TrainingData::new(ds.select_rows(&split.train_rows))?,
        TrainingData::new(ds.select_rows(&split.test_rows))?,
    ))
}

pub fn cmd_describe(cfg: &ExperimentConfig) -> Result<Vec<PathBuf>> {
    cfg.require_datasets()?;
    let mut written = Vec::new();
    for (name, path) in &cfg.datasets {
        let schema = Schema::read(&cfg.schema).map_err(|e| e.in_dataset(name))?;
        let (ds, _) = load_dataset(path, &schema).map_err(|e| e.in_dataset(name))?;
        let rows = describe_dataset(&ds, &cfg.preprocess).map_err(|e| e.in_dataset(name))?;
        let out = cfg.output_dir.join("describe").join(format!("{name}.csv"));
        report::describe_table(&rows).write(&out)?;
        written.push(out);
    }
    Ok(written)
}

/// Writes `cleaned/<name>.csv` per dataset and one removal ledger.
pub fn cmd_preprocess(cfg: &ExperimentConfig) -> Result<Vec<PathBuf>> {
    cfg.require_datasets()?;
    let schema = Schema::read(&cfg.schema)?;
    let mut ledger = Table::new(&report::REMOVALS_HEADER);
    let mut written = Vec::new();
    for (name, path) in &cfg.datasets {
        let (ds, _) = load_dataset(path, &schema).map_err(|e| e.in_dataset(name))?;
        let out = clean_dataset(&ds, &cfg.preprocess).map_err(|e| e.in_dataset(name))?;
        for r in &out.removals {
            ledger.push(report::removal_row(name, r));
        }
        let file = cfg.output_dir.join("cleaned").join(format!("{name}.csv"));
        std::fs::create_dir_all(file.parent().unwrap_or(Path::new("."))).map_err(|e| Error::io(&file, e))?;
        let f = std::fs::File::create(&file).map_err(|e| Error::io(&file, e))?;
        out.dataset.write_csv(std::io::BufWriter::new(f))?;
        written.push(file);
    }
    let path = cfg.output_dir.join(REMOVALS_FILE);
    ledger.write(&path)?;
    written.push(path);
    Ok(written)
}

#[derive(Clone, Debug, PartialEq)]
pub struct Failure {
    pub dataset: String,
    pub family: String,
    pub stage: &'static str,
    pub message: String,
}

#[derive(Clone, Debug)]
pub struct BestPipeline {
    pub id: String,
    pub dataset: String,
    pub cv: CvResult,
    pub test_f1: f64,
}

#[derive(Clone, Debug)]
pub struct RunSummary {
    pub output_dir: PathBuf,
    pub families: usize,
    pub evaluated: usize,
    pub failures: Vec<Failure>,
    pub best: Vec<BestPipeline>,
    pub notes: Vec<String>,
    pub wall_seconds: f64,
}

impl RunSummary {
    pub fn is_partial(&self) -> bool {
        !self.failures.is_empty()
    }
}

struct DatasetOutcome {
    name: String,
    train_ids: Vec<String>,
    ranked: Vec<(InnerSelection, CvResult)>,
    best: Option<BestPipeline>,
    descriptive: Vec<(String, &'static str, CvResult, f64)>,
    failures: Vec<Failure>,
    notes: Vec<String>,
    pipeline_rows: Vec<Vec<String>>,
    roc_rows: Vec<Vec<String>>,
    curve_rows: Vec<Vec<String>>,
    models: Vec<(String, String)>,
}

fn run_dataset(
    cfg: &ExperimentConfig,
    name: &str,
    path: &Path,
    families: &[Family],
    seed: u64,
    removals: &mut Vec<Vec<String>>,
) -> Result<DatasetOutcome> {
    let (ds, rem) = load_input(cfg, name, path)?;
    removals.extend(rem.iter().map(|r| report::removal_row(name, r)));
    let (train, test) = split_dataset(&ds, cfg, seed).map_err(|e| e.in_dataset(name))?;
    let folds = outer_folds(&train.y, cfg.outer_folds, seed).map_err(|e| e.in_dataset(name))?;
    let id = pipeline_id(name);
    let mut out = DatasetOutcome {
        name: name.to_string(),
        train_ids: train.dataset.row_ids().to_vec(),
        ranked: Vec::new(),
        best: None,
        descriptive: Vec::new(),
        failures: Vec::new(),
        notes: Vec::new(),
        pipeline_rows: Vec::new(),
        roc_rows: Vec::new(),
        curve_rows: Vec::new(),
        models: Vec::new(),
    };
    let fail = |family: &Family, stage, e: Error| Failure {
        dataset: name.to_string(),
        family: family.id(),
        stage,
        message: e.to_string(),
    };

    let selections = inner_select_many(families, train.search(), cfg.inner, seed);
    let evaluated: Vec<Result<(InnerSelection, CvResult), Failure>> = selections
        .into_par_iter()
        .zip(families.par_iter())
        .map(|(sel, family)| {
            let sel = sel.map_err(|e| fail(family, "inner", e))?;
            let cv = outer_evaluate(family, &sel.assignment, train.search(), &folds, seed)
                .map_err(|e| fail(family, "outer", e))?;
            Ok((sel, cv))
        })
        .collect();
    let mut results = Vec::new();
    for r in evaluated {
        match r {
            Ok(v) => results.push(v),
            Err(f) => out.failures.push(f),
        }
    }
    let cvs: Vec<CvResult> = results.iter().map(|(_, cv)| cv.clone()).collect();
    let order = rank_pipelines(&cvs);
    out.ranked = order.iter().map(|&i| results[i].clone()).collect();

    let finalize = |cv: &CvResult| -> Result<(FittedPipeline, crate::evaluation::MetricSet)> {
        let fitted = fit_final(&cv.assignment, train.search(), seed)?;
        let metrics = test_evaluate(&fitted, &test.x, &test.y)?;
        Ok((fitted, metrics))
    };

    if let Some((_, cv)) = out.ranked.first().cloned() {
        match finalize(&cv) {
            Ok((fitted, metrics)) => {
                out.pipeline_rows.push(report::pipeline_row(&id, name, &cv, &metrics));
                out.models.push((format!("{name}.model"), fitted.to_text()));
                match roc_curve(&train.y, &cv.oof_scores) {
                    Ok(points) => out.roc_rows.extend(report::roc_rows(&id, name, "cv", &points)),
                    Err(e) => out.notes.push(format!("{id}: cv ROC skipped: {e}")),
                }
                match fitted.predict(&test.x).and_then(|p| roc_curve(&test.y, &p.scores)) {
                    Ok(points) => out.roc_rows.extend(report::roc_rows(&id, name, "test", &points)),
                    Err(e) => out.notes.push(format!("{id}: test ROC skipped: {e}")),
                }
                match learning_curve(&cv.assignment, train.search(), &folds, &cfg.curve_fractions, seed) {
                    Ok(points) => out.curve_rows.extend(report::curve_rows(&id, name, &points)),
                    Err(e) => out.notes.push(format!("{id}: learning curve skipped: {e}")),
                }
                out.best = Some(BestPipeline {
                    id: id.clone(),
                    dataset: name.to_string(),
                    cv: cv.clone(),
                    test_f1: metrics.f1_weighted,
                });
            }
            Err(e) => out.failures.push(fail(&cv.family, "final", e)),
        }
    }

    for (suffix, kind, group) in [("d", "descriptive", DESCRIPTIVE), ("n", "non-descriptive", NON_DESCRIPTIVE)] {
        let Some((_, cv)) = out.ranked.iter().find(|(_, cv)| group.contains(&cv.family.classifier)).cloned() else {
            continue;
        };
        match finalize(&cv) {
            Ok((fitted, metrics)) => {
                out.models.push((format!("{name}-{kind}.model"), fitted.to_text()));
                out.descriptive.push((format!("{id}{suffix}"), kind, cv, metrics.f1_weighted));
            }
            Err(e) => out.failures.push(fail(&cv.family, "final", e)),
        }
    }
    Ok(out)
}

/// The full study: per dataset split, inner selection for every family,
/// outer cross-validation, ranking, refit and test evaluation of the best
/// pipelines, and comparison tables. Family failures are quarantined to the
/// failures report.
pub fn cmd_run(cfg: &ExperimentConfig) -> Result<RunSummary> {
    let started = Instant::now();
    cfg.require_datasets()?;
    let seed = cfg.require_seed()?;
    let families = FamilyFilter::parse(&cfg.grid)?.apply(&enumerate_grid());
    if families.is_empty() {
        return Err(Error::Config(format!("grid filter `{}` selects no family", cfg.grid)));
    }

    let mut removals = Vec::new();
    let mut outcomes = Vec::new();
    for (name, path) in &cfg.datasets {
        outcomes.push(run_dataset(cfg, name, path, &families, seed, &mut removals)?);
    }

    let mut pipelines = Table::new(&report::PIPELINES_HEADER);
    let mut family_table = Table::new(&report::FAMILIES_HEADER);
    let mut descriptive = Table::new(&report::DESCRIPTIVE_HEADER);
    let mut failures_table = Table::new(&report::FAILURES_HEADER);
    let mut roc = Table::new(&report::ROC_HEADER);
    let mut curve = Table::new(&report::CURVE_HEADER);
    let mut comparisons = Table::new(&report::COMPARISONS_HEADER);
    let mut failures = Vec::new();
    let mut notes = Vec::new();
    let mut best = Vec::new();

    for o in &outcomes {
        pipelines.rows.extend(o.pipeline_rows.iter().cloned());
        for (rank, (sel, cv)) in o.ranked.iter().enumerate() {
            family_table.push(report::family_row(&o.name, rank + 1, sel, cv));
        }
        for (id, kind, cv, test_f1) in &o.descriptive {
            let f = &cv.family;
            descriptive.push(vec![
                id.clone(),
                o.name.clone(),
                kind.to_string(),
                f.sampler.name().into(),
                f.selector.name().into(),
                f.metric.name().into(),
                f.classifier.name().into(),
                cv.assignment.params_list(),
                report::pm(cv.f1),
                report::two(*test_f1),
                f.id(),
            ]);
        }
        roc.rows.extend(o.roc_rows.iter().cloned());
        curve.rows.extend(o.curve_rows.iter().cloned());
        for f in &o.failures {
            failures_table.push(vec![f.dataset.clone(), f.family.clone(), f.stage.into(), f.message.clone()]);
        }
        failures.extend(o.failures.iter().cloned());
        notes.extend(o.notes.iter().cloned());
        best.extend(o.best.clone());
    }

    let mut pairs: Vec<(String, &CvResult, &CvResult)> = Vec::new();
    for i in 0..outcomes.len() {
        for j in i + 1..outcomes.len() {
            let (a, b) = (&outcomes[i], &outcomes[j]);
            let (Some(ba), Some(bb)) = (&a.best, &b.best) else { continue };
            if a.train_ids != b.train_ids {
                notes.push(format!("{} vs {}: training rows differ, comparison skipped", ba.id, bb.id));
                continue;
            }
            pairs.push((format!("{} vs {}", ba.id, bb.id), &ba.cv, &bb.cv));
        }
    }
    for o in &outcomes {
        let id = pipeline_id(&o.name);
        if let Some((_, top)) = o.ranked.first() {
            for (r, (_, other)) in o.ranked.iter().enumerate().skip(1).take(cfg.compare_top.saturating_sub(1)) {
                pairs.push((format!("{id} vs {id}.{}", r + 1), top, other));
            }
        }
        if let [(da, _, a, _), (db, _, b, _)] = o.descriptive.as_slice() {
            pairs.push((format!("{da} vs {db}"), a, b));
        }
    }
    for (label, a, b) in pairs {
        match compare_pipelines(a, b) {
            Ok(c) => comparisons.push(report::comparison_row(&label, &c)),
            Err(e) => notes.push(format!("{label}: comparison skipped: {e}")),
        }
    }

    let dir = &cfg.output_dir;
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    pipelines.write(&dir.join(PIPELINES_FILE))?;
    comparisons.write(&dir.join(COMPARISONS_FILE))?;
    family_table.write(&dir.join(FAMILIES_FILE))?;
    descriptive.write(&dir.join(DESCRIPTIVE_FILE))?;
    failures_table.write(&dir.join(FAILURES_FILE))?;
    roc.write(&dir.join(ROC_FILE))?;
    curve.write(&dir.join(CURVE_FILE))?;
    let mut removal_table = Table::new(&report::REMOVALS_HEADER);
    removal_table.rows = removals;
    removal_table.write(&dir.join(REMOVALS_FILE))?;
    let models = dir.join(MODELS_DIR);
    std::fs::create_dir_all(&models).map_err(|e| Error::io(&models, e))?;
    for o in &outcomes {
        for (file, text) in &o.models {
            let p = models.join(file);
            std::fs::write(&p, text).map_err(|e| Error::io(&p, e))?;
        }
    }

    let summary = RunSummary {
        output_dir: dir.clone(),
        families: families.len() * outcomes.len(),
        evaluated: outcomes.iter().map(|o| o.ranked.len()).sum(),
        failures,
        best,
        notes,
        wall_seconds: started.elapsed().as_secs_f64(),
    };
    write_manifest(cfg, seed, &summary)?;
    Ok(summary)
}

fn write_manifest(cfg: &ExperimentConfig, seed: u64, s: &RunSummary) -> Result<()> {
    let manifest = serde_json::json!({
        "tool": "pipegrid",
        "version": env!("CARGO_PKG_VERSION"),
        "config_sha256": cfg.hash(),
        "seed": seed,
        "grid": cfg.grid,
        "datasets": cfg.datasets.iter().map(|(n, _)| n.clone()).collect::<Vec<_>>(),
        "families": s.families,
        "evaluated": s.evaluated,
        "failures": s.failures.len(),
        "threads": rayon::current_num_threads(),
        "wall_seconds": s.wall_seconds,
        "notes": s.notes,
    });
    let path = cfg.output_dir.join(MANIFEST_FILE);
    let text = serde_json::to_string_pretty(&manifest).map_err(|e| Error::InvalidInput(e.to_string()))?;
    std::fs::write(&path, text + "\n").map_err(|e| Error::io(&path, e))
}

/// Stability ranking of saved run pipelines. With no id, ranks every
/// dataset's best descriptive pipeline (`p<suffix>d`).
pub fn cmd_stability(cfg: &ExperimentConfig, pipeline: Option<&str>) -> Result<Vec<PathBuf>> {
    cfg.require_datasets()?;
    let seed = cfg.require_seed()?;
    let targets: Vec<(String, String, String)> = match pipeline {
        None => cfg
            .datasets
            .iter()
            .map(|(n, _)| (n.clone(), format!("{}d", pipeline_id(n)), format!("{n}-descriptive.model")))
            .collect(),
        Some(id) => {
            let found = cfg.datasets.iter().find_map(|(n, _)| {
                let base = pipeline_id(n);
                match id.strip_prefix(&base) {
                    Some("") => Some((n.clone(), id.to_string(), format!("{n}.model"))),
                    Some("d") => Some((n.clone(), id.to_string(), format!("{n}-descriptive.model"))),
                    Some("n") => Some((n.clone(), id.to_string(), format!("{n}-non-descriptive.model"))),
                    _ => None,
                }
            });
            vec![found.ok_or_else(|| Error::Config(format!("unknown pipeline id `{id}`")))?]
        }
    };
    let mut written = Vec::new();
    for (name, id, model_file) in targets {
        let model_path = cfg.output_dir.join(MODELS_DIR).join(&model_file);
        let text = std::fs::read_to_string(&model_path).map_err(|e| Error::io(&model_path, e).in_dataset(&name))?;
        let fitted = FittedPipeline::from_text(&text).map_err(|e| e.in_dataset(&name))?;
        let algorithm = fitted.assignment.learner.algorithm();
        if !algorithm.is_descriptive() {
            return Err(Error::Config(format!(
                "pipeline {id} uses {algorithm}, which has no feature weights; stability needs an LR or RF pipeline (try {}d)",
                pipeline_id(&name)
            )));
        }
        let path = cfg
            .datasets
            .iter()
            .find(|(n, _)| *n == name)
            .map(|(_, p)| p.clone())
            .ok_or_else(|| Error::Config(format!("dataset {name} missing")))?;
        let (ds, _) = load_input(cfg, &name, &path)?;
        let (train, _) = split_dataset(&ds, cfg, seed).map_err(|e| e.in_dataset(&name))?;
        let scfg = StabilityConfig {
            seed: derive_seed(seed, &[step::STABILITY]),
            ..cfg.stability
        };
        let rep = stability_run(&fitted.assignment, train.search(), &train.dataset.feature_names(), &scfg)
            .map_err(|e| e.in_dataset(&name))?;
        let ranking = render_feature_ranking(&rep, cfg.top_k);
        let counts: Vec<usize> = rep.features.iter().map(|f| f.selection_count).collect();
        let out = cfg.output_dir.join("stability").join(format!("{id}.csv"));
        report::stability_table(&ranking, &counts).write(&out)?;
        written.push(out);
    }
    Ok(written)
}

/// Writes `<stem>.csv`, `<stem>.schema.txt` and `<stem>.informative.txt`.
pub fn cmd_synth(spec: &SyntheticSpec, out_dir: &Path, stem: &str) -> Result<Vec<PathBuf>> {
    let data = generate(spec)?;
    std::fs::create_dir_all(out_dir).map_err(|e| Error::io(out_dir, e))?;
    let csv_path = out_dir.join(format!("{stem}.csv"));
    let mut bytes = Vec::new();
    data.dataset.write_csv(&mut bytes)?;
    std::fs::write(&csv_path, bytes).map_err(|e| Error::io(&csv_path, e))?;
    let schema_path = out_dir.join(format!("{stem}.schema.txt"));
    std::fs::write(&schema_path, data.schema.to_text()).map_err(|e| Error::io(&schema_path, e))?;
    let info_path = out_dir.join(format!("{stem}.informative.txt"));
    let mut info = data.informative.join("\n");
    info.push('\n');
    std::fs::write(&info_path, info).map_err(|e| Error::io(&info_path, e))?;
    Ok(vec![csv_path, schema_path, info_path])
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ids_from_names() {
        assert_eq!(pipeline_id("D3"), "p3");
        assert_eq!(pipeline_id("D10"), "p10");
        assert_eq!(pipeline_id("baseline"), "pbaseline");
        assert_eq!(pipeline_id("t1x"), "pt1x");
    }
}
