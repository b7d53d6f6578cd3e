//! CSV report tables with fixed headers and deterministic number formatting.

use std::path::Path;

use crate::error::{Error, Result};
use crate::evaluation::{Comparison, CurvePoint, CvResult, InnerSelection, MetricSet, RocPoint};
use crate::preprocess::{DescribeRow, Removal};
use crate::stability::RankedFeature;

pub const PIPELINES_HEADER: [&str; 13] = [
    "id", "ds", "sm", "fs", "metric", "cls", "params", "cv_prec", "cv_rec", "cv_f1", "test_prec", "test_rec", "test_f1",
];
pub const COMPARISONS_HEADER: [&str; 4] = ["pipelines", "difference", "statistic", "p_value"];
pub const FAMILIES_HEADER: [&str; 20] = [
    "ds",
    "rank",
    "family",
    "sm",
    "fs",
    "metric",
    "cls",
    "params",
    "assignment",
    "inner_mean",
    "inner_sd",
    "cv_prec_mean",
    "cv_prec_sd",
    "cv_rec_mean",
    "cv_rec_sd",
    "cv_f1_mean",
    "cv_f1_sd",
    "cv_auc_mean",
    "failed_cells",
    "warnings",
];
pub const DESCRIPTIVE_HEADER: [&str; 11] =
    ["id", "ds", "kind", "sm", "fs", "metric", "cls", "params", "cv_f1", "test_f1", "family"];
pub const FAILURES_HEADER: [&str; 4] = ["ds", "family", "stage", "message"];
pub const ROC_HEADER: [&str; 6] = ["id", "ds", "source", "threshold", "fpr", "tpr"];
pub const CURVE_HEADER: [&str; 8] =
    ["id", "ds", "fraction", "train_rows", "train_f1_mean", "train_f1_sd", "val_f1_mean", "val_f1_sd"];
pub const STABILITY_HEADER: [&str; 5] = ["rank", "feature", "stability_score", "mean_weight", "selection_count"];
pub const DESCRIBE_HEADER: [&str; 8] =
    ["feature", "kind", "test", "statistic", "p_value", "significant", "missing_count", "missing_ratio"];
pub const REMOVALS_HEADER: [&str; 6] = ["ds", "feature", "filter", "score", "p", "kept_partner"];

#[derive(Clone, Debug, PartialEq)]
pub struct Table {
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new(header: &[&str]) -> Table {
        Table {
            header: header.iter().map(|h| h.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<String>) {
        debug_assert_eq!(row.len(), self.header.len());
        self.rows.push(row);
    }

    pub fn to_bytes(&self) -> Result<Vec<u8>> {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(&self.header)?;
        for r in &self.rows {
            w.write_record(r)?;
        }
        w.into_inner().map_err(|e| Error::InvalidInput(e.to_string()))
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        if let Some(dir) = path.parent() {
            std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        }
        std::fs::write(path, self.to_bytes()?).map_err(|e| Error::io(path, e))
    }

    pub fn read(path: &Path) -> Result<Table> {
        let mut r = csv::Reader::from_path(path)?;
        let header = r.headers()?.iter().map(String::from).collect();
        let rows = r
            .records()
            .map(|rec| rec.map(|rec| rec.iter().map(String::from).collect()))
            .collect::<Result<Vec<Vec<String>>, csv::Error>>()?;
        Ok(Table { header, rows })
    }

    pub fn column(&self, name: &str) -> Option<usize> {
        self.header.iter().position(|h| h == name)
    }
}

pub fn num(v: f64) -> String {
    format!("{v}")
}

/// Two-decimal `mean+/-sd`, as in the performance tables.
pub fn pm(mean_sd: (f64, f64)) -> String {
    format!("{:.2}+/-{:.2}", mean_sd.0, mean_sd.1)
}

pub fn two(v: f64) -> String {
    format!("{v:.2}")
}

pub fn pipeline_row(id: &str, ds: &str, cv: &CvResult, test: &MetricSet) -> Vec<String> {
    let f = &cv.family;
    vec![
        id.into(),
        ds.into(),
        f.sampler.name().into(),
        f.selector.name().into(),
        f.metric.name().into(),
        f.classifier.name().into(),
        cv.assignment.params_list(),
        pm(cv.precision),
        pm(cv.recall),
        pm(cv.f1),
        two(test.precision_weighted),
        two(test.recall_weighted),
        two(test.f1_weighted),
    ]
}

pub fn comparison_row(label: &str, c: &Comparison) -> Vec<String> {
    vec![
        label.into(),
        format!("{:.2} +/- {:.2}", c.difference.0, c.difference.1),
        format!("{:.4}", c.test.statistic),
        format!("{:.4}", c.test.p_value),
    ]
}

pub fn family_row(ds: &str, rank: usize, sel: &InnerSelection, cv: &CvResult) -> Vec<String> {
    let f = &cv.family;
    let aucs: Vec<f64> = cv.folds.iter().filter_map(|m| m.auc).collect();
    let auc = if aucs.len() == cv.folds.len() {
        num(aucs.iter().sum::<f64>() / aucs.len() as f64)
    } else {
        String::new()
    };
    vec![
        ds.into(),
        rank.to_string(),
        f.id(),
        f.sampler.name().into(),
        f.selector.name().into(),
        f.metric.name().into(),
        f.classifier.name().into(),
        cv.assignment.params_list(),
        cv.assignment.to_string(),
        num(sel.mean),
        num(sel.sd),
        num(cv.precision.0),
        num(cv.precision.1),
        num(cv.recall.0),
        num(cv.recall.1),
        num(cv.f1.0),
        num(cv.f1.1),
        auc,
        sel.failed_cells.to_string(),
        sel.warnings.join("; "),
    ]
}

pub fn roc_rows(id: &str, ds: &str, source: &str, points: &[RocPoint]) -> Vec<Vec<String>> {
    points
        .iter()
        .map(|p| {
            vec![
                id.into(),
                ds.into(),
                source.into(),
                if p.threshold.is_infinite() { "inf".into() } else { num(p.threshold) },
                num(p.fpr),
                num(p.tpr),
            ]
        })
        .collect()
}

pub fn curve_rows(id: &str, ds: &str, points: &[CurvePoint]) -> Vec<Vec<String>> {
    points
        .iter()
        .map(|p| {
            vec![
                id.into(),
                ds.into(),
                num(p.fraction),
                num(p.mean_train_rows),
                num(p.train.0),
                num(p.train.1),
                num(p.validation.0),
                num(p.validation.1),
            ]
        })
        .collect()
}

pub fn stability_table(ranking: &[RankedFeature], counts: &[usize]) -> Table {
    let mut t = Table::new(&STABILITY_HEADER);
    for (r, c) in ranking.iter().zip(counts) {
        t.push(vec![r.rank.to_string(), r.feature.clone(), num(r.stability), num(r.weight), c.to_string()]);
    }
    t
}

pub fn describe_table(rows: &[DescribeRow]) -> Table {
    let mut t = Table::new(&DESCRIBE_HEADER);
    for r in rows {
        let (test, stat, p) = match &r.test {
            Some(tr) => (tr.method.to_string(), num(tr.statistic), num(tr.p_value)),
            None => (String::new(), String::new(), String::new()),
        };
        t.push(vec![
            r.feature.clone(),
            r.kind.to_string(),
            test,
            stat,
            p,
            r.significant.to_string(),
            r.missing_count.to_string(),
            num(r.missing_ratio),
        ]);
    }
    t
}

pub fn removal_row(ds: &str, r: &Removal) -> Vec<String> {
    vec![
        ds.into(),
        r.feature.clone(),
        r.filter.into(),
        num(r.score),
        r.p_value.map(num).unwrap_or_default(),
        r.kept_partner.clone().unwrap_or_default(),
    ]
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn formats() {
        assert_eq!(pm((0.7349, 0.1812)), "0.73+/-0.18");
        assert_eq!(two(0.755), "0.76");
        assert_eq!(num(0.1), "0.1");
    }

    #[test]
    fn table_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let mut t = Table::new(&COMPARISONS_HEADER);
        t.push(vec!["p0 vs p1".into(), "0.09 +/- 0.15".into(), "-1.7100".into(), "0.1201".into()]);
        let path = dir.path().join("sub/c.csv");
        t.write(&path).unwrap();
        assert_eq!(Table::read(&path).unwrap(), t);
        assert_eq!(t.column("p_value"), Some(3));
    }
}
