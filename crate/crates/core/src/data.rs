//! Dataset model: feature schemas, CSV ingestion, categorical encoding,
//! compliance labels and stratified splitting.
//!
//! # Schema file grammar
//!
//! One feature per line, `;`-separated `key=value` fields. Blank lines and
//! lines starting with `#` are ignored.
//!
//! ```text
//! name=age; kind=numeric; timepoint=T0
//! name=smoker; kind=binary; categories=no|yes; timepoint=T0
//! name=severity; kind=ordinal; categories=none|mild|severe; timepoint=T0
//! ```
//!
//! `kind` is one of `numeric`, `binary`, `ordinal`; `categories` lists the
//! category texts in encoding order (`|`-separated) and is required for
//! non-numeric kinds; `timepoint` is `T0`, `T1` or `T3`.
//!
//! # Dataset CSV
//!
//! Comma-separated, header row, UTF-8. Every header must name a schema feature
//! except the reserved columns `id` (row identifier), `label` (0/1 outcome)
//! and `hours_m6` (average nightly hours at month six, from which the label is
//! derived). Empty cells and `NA` are missing values.

use std::collections::{HashMap, HashSet};
use std::fmt;
use std::io::{Read, Write};
use std::path::Path;
use std::str::FromStr;

use rand::seq::SliceRandom;

use crate::error::{Error, Result};
use crate::matrix::Matrix;
use crate::seed;

pub const ID_COLUMN: &str = "id";
pub const LABEL_COLUMN: &str = "label";
pub const HOURS_COLUMN: &str = "hours_m6";

/// Average nightly use above which a patient counts as compliant.
pub const COMPLIANCE_HOURS: f64 = 4.0;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum FeatureKind {
    Numeric,
    Binary,
    Ordinal,
}

impl FeatureKind {
    pub fn is_categorical(self) -> bool {
        !matches!(self, FeatureKind::Numeric)
    }
}

impl fmt::Display for FeatureKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            FeatureKind::Numeric => "numeric",
            FeatureKind::Binary => "binary",
            FeatureKind::Ordinal => "ordinal",
        })
    }
}

impl FromStr for FeatureKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "numeric" => Ok(FeatureKind::Numeric),
            "binary" => Ok(FeatureKind::Binary),
            "ordinal" | "ordered-categorical" => Ok(FeatureKind::Ordinal),
            other => Err(Error::Schema(format!("unknown feature kind `{other}`"))),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Timepoint {
    T0,
    T1,
    T3,
}

impl fmt::Display for Timepoint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Timepoint::T0 => "T0",
            Timepoint::T1 => "T1",
            Timepoint::T3 => "T3",
        })
    }
}

impl FromStr for Timepoint {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "T0" => Ok(Timepoint::T0),
            "T1" => Ok(Timepoint::T1),
            "T3" => Ok(Timepoint::T3),
            other => Err(Error::Schema(format!("unknown timepoint `{other}`"))),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct FeatureSchema {
    pub name: String,
    pub kind: FeatureKind,
    pub categories: Vec<String>,
    pub timepoint: Timepoint,
}

impl FeatureSchema {
    pub fn numeric(name: impl Into<String>, timepoint: Timepoint) -> Self {
        FeatureSchema {
            name: name.into(),
            kind: FeatureKind::Numeric,
            categories: Vec::new(),
            timepoint,
        }
    }

    pub fn categorical<S: Into<String>>(
        name: impl Into<String>,
        kind: FeatureKind,
        categories: impl IntoIterator<Item = S>,
        timepoint: Timepoint,
    ) -> Self {
        FeatureSchema {
            name: name.into(),
            kind,
            categories: categories.into_iter().map(Into::into).collect(),
            timepoint,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.name.is_empty() {
            return Err(Error::Schema("feature with empty name".into()));
        }
        let n = self.categories.len();
        match self.kind {
            FeatureKind::Numeric if n != 0 => {
                return Err(Error::Schema(format!(
                    "numeric feature `{}` must not declare categories",
                    self.name
                )))
            }
            FeatureKind::Binary if n != 2 => {
                return Err(Error::Schema(format!(
                    "binary feature `{}` needs exactly 2 categories, has {n}",
                    self.name
                )))
            }
            FeatureKind::Ordinal if n < 3 => {
                return Err(Error::Schema(format!(
                    "ordinal feature `{}` needs at least 3 categories, has {n}",
                    self.name
                )))
            }
            _ => {}
        }
        let mut seen = HashSet::new();
        for c in &self.categories {
            if !seen.insert(c.as_str()) {
                return Err(Error::Schema(format!(
                    "feature `{}` repeats category `{c}`",
                    self.name
                )));
            }
        }
        Ok(())
    }

    /// Encoded value of a category text.
    pub fn encode(&self, text: &str) -> Option<usize> {
        self.categories.iter().position(|c| c == text)
    }

    /// Category text of an encoded value.
    pub fn decode(&self, code: f64) -> Option<&str> {
        if code < 0.0 || code.fract() != 0.0 {
            return None;
        }
        self.categories.get(code as usize).map(String::as_str)
    }

    fn to_line(&self) -> String {
        let mut line = format!("name={}; kind={}", self.name, self.kind);
        if self.kind.is_categorical() {
            line.push_str("; categories=");
            line.push_str(&self.categories.join("|"));
        }
        line.push_str(&format!("; timepoint={}", self.timepoint));
        line
    }
}

/// An ordered, validated list of feature descriptions.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Schema {
    features: Vec<FeatureSchema>,
}

impl Schema {
    pub fn new(features: Vec<FeatureSchema>) -> Result<Self> {
        let mut names = HashSet::new();
        for f in &features {
            f.validate()?;
            if !names.insert(f.name.as_str()) {
                return Err(Error::Schema(format!("duplicate feature name `{}`", f.name)));
            }
            if [ID_COLUMN, LABEL_COLUMN, HOURS_COLUMN].contains(&f.name.as_str()) {
                return Err(Error::Schema(format!("`{}` is a reserved column name", f.name)));
            }
        }
        Ok(Schema { features })
    }

    pub fn parse(text: &str) -> Result<Self> {
        let mut features = Vec::new();
        for (lineno, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let mut fields: HashMap<&str, &str> = HashMap::new();
            for part in line.split(';') {
                let part = part.trim();
                if part.is_empty() {
                    continue;
                }
                let (k, v) = part.split_once('=').ok_or_else(|| {
                    Error::Schema(format!("line {}: expected key=value, got `{part}`", lineno + 1))
                })?;
                if fields.insert(k.trim(), v.trim()).is_some() {
                    return Err(Error::Schema(format!("line {}: repeated key `{}`", lineno + 1, k.trim())));
                }
            }
            let get = |k: &str| {
                fields
                    .get(k)
                    .copied()
                    .ok_or_else(|| Error::Schema(format!("line {}: missing `{k}`", lineno + 1)))
            };
            let kind: FeatureKind = get("kind")?.parse()?;
            let categories = match fields.get("categories") {
                Some(c) if !c.is_empty() => c.split('|').map(|s| s.trim().to_string()).collect(),
                _ => Vec::new(),
            };
            if let Some(k) = fields.keys().find(|k| !["name", "kind", "categories", "timepoint"].contains(k)) {
                return Err(Error::Schema(format!("line {}: unknown key `{k}`", lineno + 1)));
            }
            features.push(FeatureSchema {
                name: get("name")?.to_string(),
                kind,
                categories,
                timepoint: get("timepoint")?.parse()?,
            });
        }
        Schema::new(features)
    }

    pub fn read(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Schema::parse(&text)
    }

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for f in &self.features {
            out.push_str(&f.to_line());
            out.push('\n');
        }
        out
    }

    pub fn features(&self) -> &[FeatureSchema] {
        &self.features
    }

    pub fn get(&self, name: &str) -> Option<&FeatureSchema> {
        self.features.iter().find(|f| f.name == name)
    }

    pub fn len(&self) -> usize {
        self.features.len()
    }

    pub fn is_empty(&self) -> bool {
        self.features.is_empty()
    }
}

/// A cell as read from CSV, before categorical encoding.
#[derive(Clone, Debug, PartialEq)]
pub enum RawCell {
    Missing,
    Number(f64),
    Category(String),
}

/// A row dropped at load time because its outcome was unavailable.
#[derive(Clone, Debug, PartialEq)]
pub struct ExcludedRow {
    pub row_id: String,
    pub reason: String,
}

/// Validated CSV contents with categorical text kept as text.
#[derive(Clone, Debug)]
pub struct RawDataset {
    pub schema: Vec<FeatureSchema>,
    pub cells: Vec<Vec<RawCell>>,
    pub row_ids: Vec<String>,
    pub labels: Option<Vec<u8>>,
    pub excluded: Vec<ExcludedRow>,
}

fn is_missing(cell: &str) -> bool {
    cell.is_empty() || cell == "NA"
}

/// Outcome of thresholding month-six usage.
#[derive(Clone, Debug, PartialEq)]
pub struct LabelDerivation {
    /// `None` where the month-six value was missing.
    pub labels: Vec<Option<u8>>,
    pub unlabeled: Vec<usize>,
}

/// Label 1 iff average nightly hours exceed four; missing values leave the
/// row unlabeled.
pub fn derive_labels(hours: &[Option<f64>]) -> Result<LabelDerivation> {
    let mut labels = Vec::with_capacity(hours.len());
    let mut unlabeled = Vec::new();
    for (i, h) in hours.iter().enumerate() {
        match h {
            None => {
                labels.push(None);
                unlabeled.push(i);
            }
            Some(h) if !h.is_finite() || *h < 0.0 => {
                return Err(Error::InvalidInput(format!(
                    "row {i}: nightly hours must be a non-negative number, got {h}"
                )))
            }
            Some(h) => labels.push(Some(u8::from(*h > COMPLIANCE_HOURS))),
        }
    }
    Ok(LabelDerivation { labels, unlabeled })
}

/// Reads a dataset CSV against a schema file.
pub fn load_csv(csv_path: impl AsRef<Path>, schema_path: impl AsRef<Path>) -> Result<RawDataset> {
    let schema = Schema::read(schema_path)?;
    read_csv_file(csv_path, &schema)
}

pub fn read_csv_file(csv_path: impl AsRef<Path>, schema: &Schema) -> Result<RawDataset> {
    let path = csv_path.as_ref();
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    read_csv(file, schema, &path.display().to_string())
}

/// Parses dataset CSV from any reader; `origin` names the source in errors.
pub fn read_csv<R: Read>(reader: R, schema: &Schema, origin: &str) -> Result<RawDataset> {
    let mut rdr = csv::ReaderBuilder::new().has_headers(true).from_reader(reader);
    let headers: Vec<String> = rdr.headers()?.iter().map(|h| h.trim().to_string()).collect();

    enum Col {
        Id,
        Label,
        Hours,
        Feature(usize),
    }
    let mut columns = Vec::with_capacity(headers.len());
    let mut feature_schema = Vec::new();
    let mut seen = HashSet::new();
    for h in &headers {
        if !seen.insert(h.clone()) {
            return Err(Error::InvalidInput(format!("{origin}: duplicate column `{h}`")));
        }
        columns.push(match h.as_str() {
            ID_COLUMN => Col::Id,
            LABEL_COLUMN => Col::Label,
            HOURS_COLUMN => Col::Hours,
            name => {
                let f = schema.get(name).ok_or_else(|| Error::UnknownColumn {
                    path: origin.to_string(),
                    column: name.to_string(),
                })?;
                feature_schema.push(f.clone());
                Col::Feature(feature_schema.len() - 1)
            }
        });
    }
    let has_label = headers.iter().any(|h| h == LABEL_COLUMN);
    let has_hours = headers.iter().any(|h| h == HOURS_COLUMN);
    if has_label && has_hours {
        return Err(Error::InvalidInput(format!(
            "{origin}: give either `{LABEL_COLUMN}` or `{HOURS_COLUMN}`, not both"
        )));
    }

    let mut cells = Vec::new();
    let mut row_ids = Vec::new();
    let mut labels = Vec::new();
    let mut hours = Vec::new();
    for (r, record) in rdr.records().enumerate() {
        let record = record?;
        let rowno = r + 1;
        let cell_err = |column: &str, message: String| Error::Cell {
            path: origin.to_string(),
            row: rowno,
            column: column.to_string(),
            message,
        };
        let mut row = vec![RawCell::Missing; feature_schema.len()];
        let mut id = format!("r{rowno}");
        let mut label = None;
        let mut hour = None;
        for (c, col) in columns.iter().enumerate() {
            let text = record.get(c).unwrap_or("").trim();
            match col {
                Col::Id => {
                    if !text.is_empty() {
                        id = text.to_string();
                    }
                }
                Col::Label => {
                    label = match text {
                        "0" => Some(0u8),
                        "1" => Some(1u8),
                        t if is_missing(t) => None,
                        t => return Err(cell_err(LABEL_COLUMN, format!("label must be 0 or 1, got `{t}`"))),
                    }
                }
                Col::Hours => {
                    hour = if is_missing(text) {
                        None
                    } else {
                        Some(text.parse::<f64>().map_err(|_| {
                            cell_err(HOURS_COLUMN, format!("cannot parse `{text}` as a number"))
                        })?)
                    }
                }
                Col::Feature(j) => {
                    let f = &feature_schema[*j];
                    if is_missing(text) {
                        continue;
                    }
                    row[*j] = match f.kind {
                        FeatureKind::Numeric => {
                            let v: f64 = text.parse().map_err(|_| {
                                cell_err(&f.name, format!("cannot parse `{text}` as a number"))
                            })?;
                            if !v.is_finite() {
                                return Err(cell_err(&f.name, format!("non-finite value `{text}`")));
                            }
                            RawCell::Number(v)
                        }
                        _ => {
                            if f.encode(text).is_none() {
                                return Err(cell_err(
                                    &f.name,
                                    format!("`{text}` is not one of [{}]", f.categories.join(", ")),
                                ));
                            }
                            RawCell::Category(text.to_string())
                        }
                    };
                }
            }
        }
        cells.push(row);
        row_ids.push(id);
        labels.push(label);
        hours.push(hour);
    }

    let mut ids = HashSet::new();
    for id in &row_ids {
        if !ids.insert(id) {
            return Err(Error::InvalidInput(format!("{origin}: duplicate row id `{id}`")));
        }
    }

    let outcome = if has_hours {
        Some(derive_labels(&hours)?.labels)
    } else if has_label {
        Some(labels)
    } else {
        None
    };

    let mut excluded = Vec::new();
    let labels = match outcome {
        None => None,
        Some(outcome) => {
            let mut keep_cells = Vec::new();
            let mut keep_ids = Vec::new();
            let mut keep_labels = Vec::new();
            for ((row, id), label) in cells.into_iter().zip(row_ids).zip(outcome) {
                match label {
                    Some(l) => {
                        keep_cells.push(row);
                        keep_ids.push(id);
                        keep_labels.push(l);
                    }
                    None => excluded.push(ExcludedRow {
                        row_id: id,
                        reason: "missing outcome".into(),
                    }),
                }
            }
            cells = keep_cells;
            row_ids = keep_ids;
            Some(keep_labels)
        }
    };

    Ok(RawDataset {
        schema: feature_schema,
        cells,
        row_ids,
        labels,
        excluded,
    })
}

/// Encoded dataset: every cell is numeric or missing.
#[derive(Clone, Debug, PartialEq)]
pub struct Dataset {
    schema: Vec<FeatureSchema>,
    rows: Vec<Vec<Option<f64>>>,
    row_ids: Vec<String>,
    labels: Option<Vec<u8>>,
}

/// Maps categorical text to ordinal codes in declared category order.
pub fn encode_categoricals(raw: &RawDataset) -> Result<Dataset> {
    let rows = raw
        .cells
        .iter()
        .enumerate()
        .map(|(r, row)| {
            row.iter()
                .zip(&raw.schema)
                .map(|(cell, f)| match cell {
                    RawCell::Missing => Ok(None),
                    RawCell::Number(v) => Ok(Some(*v)),
                    RawCell::Category(t) => f.encode(t).map(|c| Some(c as f64)).ok_or_else(|| Error::Cell {
                        path: "<memory>".into(),
                        row: r + 1,
                        column: f.name.clone(),
                        message: format!("`{t}` is not a declared category"),
                    }),
                })
                .collect::<Result<Vec<_>>>()
        })
        .collect::<Result<Vec<_>>>()?;
    Dataset::new(raw.schema.clone(), rows, raw.row_ids.clone(), raw.labels.clone())
}

/// Loads and encodes in one step.
pub fn load_dataset(csv_path: impl AsRef<Path>, schema: &Schema) -> Result<(Dataset, Vec<ExcludedRow>)> {
    let raw = read_csv_file(csv_path, schema)?;
    let ds = encode_categoricals(&raw)?;
    Ok((ds, raw.excluded))
}

impl Dataset {
    pub fn new(
        schema: Vec<FeatureSchema>,
        rows: Vec<Vec<Option<f64>>>,
        row_ids: Vec<String>,
        labels: Option<Vec<u8>>,
    ) -> Result<Self> {
        Schema::new(schema.clone())?;
        if rows.len() != row_ids.len() {
            return Err(Error::InvalidInput(format!(
                "{} rows but {} row ids",
                rows.len(),
                row_ids.len()
            )));
        }
        if let Some(l) = &labels {
            if l.len() != rows.len() {
                return Err(Error::InvalidInput(format!("{} rows but {} labels", rows.len(), l.len())));
            }
            if l.iter().any(|&v| v > 1) {
                return Err(Error::InvalidInput("labels must be 0 or 1".into()));
            }
        }
        let mut ids = HashSet::new();
        for id in &row_ids {
            if !ids.insert(id) {
                return Err(Error::InvalidInput(format!("duplicate row id `{id}`")));
            }
        }
        for (r, row) in rows.iter().enumerate() {
            if row.len() != schema.len() {
                return Err(Error::InvalidInput(format!(
                    "row {r} has {} cells, schema has {} features",
                    row.len(),
                    schema.len()
                )));
            }
            for (v, f) in row.iter().zip(&schema) {
                let Some(v) = v else { continue };
                let ok = match f.kind {
                    FeatureKind::Numeric => v.is_finite(),
                    _ => f.decode(*v).is_some(),
                };
                if !ok {
                    return Err(Error::InvalidInput(format!(
                        "row {r}, feature `{}`: invalid encoded value {v}",
                        f.name
                    )));
                }
            }
        }
        Ok(Dataset {
            schema,
            rows,
            row_ids,
            labels,
        })
    }

    pub fn schema(&self) -> &[FeatureSchema] {
        &self.schema
    }

    pub fn rows(&self) -> &[Vec<Option<f64>>] {
        &self.rows
    }

    pub fn row_ids(&self) -> &[String] {
        &self.row_ids
    }

    pub fn labels(&self) -> Option<&[u8]> {
        self.labels.as_deref()
    }

    pub fn require_labels(&self) -> Result<&[u8]> {
        self.labels()
            .ok_or_else(|| Error::InvalidInput("dataset has no labels".into()))
    }

    pub fn n_rows(&self) -> usize {
        self.rows.len()
    }

    pub fn n_features(&self) -> usize {
        self.schema.len()
    }

    pub fn feature_names(&self) -> Vec<String> {
        self.schema.iter().map(|f| f.name.clone()).collect()
    }

    pub fn kinds(&self) -> Vec<FeatureKind> {
        self.schema.iter().map(|f| f.kind).collect()
    }

    pub fn column(&self, j: usize) -> Vec<Option<f64>> {
        self.rows.iter().map(|r| r[j]).collect()
    }

    /// Feature matrix with `NaN` in missing cells.
    pub fn feature_matrix(&self) -> Matrix {
        let data = self
            .rows
            .iter()
            .flat_map(|r| r.iter().map(|v| v.unwrap_or(f64::NAN)))
            .collect();
        Matrix::from_vec(self.rows.len(), self.schema.len(), data).expect("rows validated at construction")
    }

    pub fn select_features(&self, keep: &[usize]) -> Dataset {
        Dataset {
            schema: keep.iter().map(|&j| self.schema[j].clone()).collect(),
            rows: self.rows.iter().map(|r| keep.iter().map(|&j| r[j]).collect()).collect(),
            row_ids: self.row_ids.clone(),
            labels: self.labels.clone(),
        }
    }

    pub fn select_rows(&self, idx: &[usize]) -> Dataset {
        Dataset {
            schema: self.schema.clone(),
            rows: idx.iter().map(|&i| self.rows[i].clone()).collect(),
            row_ids: idx.iter().map(|&i| self.row_ids[i].clone()).collect(),
            labels: self.labels.as_ref().map(|l| idx.iter().map(|&i| l[i]).collect()),
        }
    }

    pub fn with_labels(mut self, labels: Vec<u8>) -> Result<Dataset> {
        if labels.len() != self.rows.len() {
            return Err(Error::InvalidInput("label count differs from row count".into()));
        }
        self.labels = Some(labels);
        Ok(self)
    }

    pub fn stratified_split(&self, test_ratio: f64, seed: u64) -> Result<SplitIndex> {
        stratified_split(self.require_labels()?, test_ratio, seed)
    }

    /// Writes the dataset as CSV with categorical codes decoded back to text.
    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        let mut header = vec![ID_COLUMN.to_string()];
        header.extend(self.feature_names());
        if self.labels.is_some() {
            header.push(LABEL_COLUMN.to_string());
        }
        w.write_record(&header)?;
        for (r, row) in self.rows.iter().enumerate() {
            let mut rec = vec![self.row_ids[r].clone()];
            for (v, f) in row.iter().zip(&self.schema) {
                rec.push(match (v, f.kind) {
                    (None, _) => String::new(),
                    (Some(v), FeatureKind::Numeric) => format!("{v}"),
                    (Some(v), _) => f.decode(*v).unwrap_or_default().to_string(),
                });
            }
            if let Some(l) = &self.labels {
                rec.push(l[r].to_string());
            }
            w.write_record(&rec)?;
        }
        w.flush().map_err(|e| Error::io("<csv writer>", e))?;
        Ok(())
    }
}

/// Row indices of a train/test partition.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SplitIndex {
    pub train_rows: Vec<usize>,
    pub test_rows: Vec<usize>,
    pub seed: u64,
}

/// Per-label test counts by largest-remainder allocation of
/// `round(test_ratio * n)` rows; remainder ties go to the smaller label value.
pub fn stratified_test_counts(counts: [usize; 2], test_ratio: f64) -> [usize; 2] {
    let n: usize = counts.iter().sum();
    let total = (test_ratio * n as f64).round() as usize;
    let quotas = counts.map(|c| test_ratio * c as f64);
    let mut alloc = quotas.map(|q| q.floor() as usize);
    let mut remaining = total.saturating_sub(alloc.iter().sum());
    let mut order = [0usize, 1];
    order.sort_by(|&a, &b| {
        let fa = quotas[a] - quotas[a].floor();
        let fb = quotas[b] - quotas[b].floor();
        fb.partial_cmp(&fa).unwrap().then(a.cmp(&b))
    });
    while remaining > 0 {
        let before = remaining;
        for &l in &order {
            if remaining > 0 && alloc[l] < counts[l] {
                alloc[l] += 1;
                remaining -= 1;
            }
        }
        if remaining == before {
            break;
        }
    }
    alloc
}

pub(crate) fn label_indices(labels: &[u8]) -> [Vec<usize>; 2] {
    let mut by_label = [Vec::new(), Vec::new()];
    for (i, &l) in labels.iter().enumerate() {
        by_label[usize::from(l)].push(i);
    }
    by_label
}

/// Seeded stratified train/test partition of row indices.
pub fn stratified_split(labels: &[u8], test_ratio: f64, seed: u64) -> Result<SplitIndex> {
    if !(test_ratio > 0.0 && test_ratio < 1.0) {
        return Err(Error::InvalidInput(format!("test ratio {test_ratio} outside (0, 1)")));
    }
    if labels.iter().any(|&l| l > 1) {
        return Err(Error::InvalidInput("labels must be 0 or 1".into()));
    }
    let mut by_label = label_indices(labels);
    for (l, idx) in by_label.iter().enumerate() {
        if idx.is_empty() {
            return Err(Error::Degenerate(format!("label {l} has no rows")));
        }
    }
    let quota = stratified_test_counts([by_label[0].len(), by_label[1].len()], test_ratio);
    let mut rng = seed::rng(seed);
    let mut train_rows = Vec::new();
    let mut test_rows = Vec::new();
    for (l, idx) in by_label.iter_mut().enumerate() {
        idx.shuffle(&mut rng);
        test_rows.extend_from_slice(&idx[..quota[l]]);
        train_rows.extend_from_slice(&idx[quota[l]..]);
    }
    train_rows.sort_unstable();
    test_rows.sort_unstable();
    Ok(SplitIndex {
        train_rows,
        test_rows,
        seed,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn schema() -> Schema {
        Schema::parse(
            "# test schema\n\
             name=age; kind=numeric; timepoint=T0\n\
             name=smoker; kind=binary; categories=no|yes; timepoint=T0\n\
             name=severity; kind=ordinal; categories=none|mild|severe; timepoint=T1\n",
        )
        .unwrap()
    }

    fn labels(pos: usize, neg: usize) -> Vec<u8> {
        let mut v = vec![1u8; pos];
        v.extend(std::iter::repeat(0u8).take(neg));
        v
    }

    #[test]
    fn schema_round_trips_through_text() {
        let s = schema();
        assert_eq!(Schema::parse(&s.to_text()).unwrap(), s);
    }

    #[test]
    fn schema_rejects_bad_category_counts() {
        assert!(Schema::parse("name=a; kind=binary; categories=x|y|z; timepoint=T0").is_err());
        assert!(Schema::parse("name=a; kind=ordinal; categories=x|y; timepoint=T0").is_err());
        assert!(Schema::parse("name=a; kind=binary; categories=x|x; timepoint=T0").is_err());
        assert!(Schema::parse("name=a; kind=numeric; timepoint=T0\nname=a; kind=numeric; timepoint=T0").is_err());
    }

    #[test]
    fn load_and_encode() {
        let csv = "id,age,smoker,severity,label\n\
                   a,5.44,yes,severe,1\n\
                   b,,no,NA,0\n";
        let raw = read_csv(csv.as_bytes(), &schema(), "t.csv").unwrap();
        assert_eq!(raw.cells[1][0], RawCell::Missing);
        let ds = encode_categoricals(&raw).unwrap();
        assert_eq!(ds.rows()[0], vec![Some(5.44), Some(1.0), Some(2.0)]);
        assert_eq!(ds.rows()[1], vec![None, Some(0.0), None]);
        assert_eq!(ds.labels(), Some(&[1u8, 0][..]));
    }

    #[test]
    fn schema_violation_names_row_and_column() {
        let csv = "age,smoker\n1,maybe\n";
        let err = read_csv(csv.as_bytes(), &schema(), "t.csv").unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("row 1") && msg.contains("smoker"), "{msg}");
    }

    #[test]
    fn unknown_column_and_bad_number() {
        let err = read_csv("age,weight\n1,2\n".as_bytes(), &schema(), "t.csv").unwrap_err();
        assert!(matches!(err, Error::UnknownColumn { .. }));
        let err = read_csv("age\nabc\n".as_bytes(), &schema(), "t.csv").unwrap_err();
        assert!(matches!(err, Error::Cell { .. }));
    }

    #[test]
    fn hours_column_derives_labels_and_excludes_missing() {
        let csv = "id,age,hours_m6\na,1,5.07\nb,2,4.0\nc,3,\nd,4,0.0\n";
        let raw = read_csv(csv.as_bytes(), &schema(), "t.csv").unwrap();
        assert_eq!(raw.labels, Some(vec![1, 0, 0]));
        assert_eq!(raw.row_ids, vec!["a", "b", "d"]);
        assert_eq!(raw.excluded.len(), 1);
        assert_eq!(raw.excluded[0].row_id, "c");
    }

    #[test]
    fn derive_labels_threshold() {
        let d = derive_labels(&[Some(5.07), Some(4.0), Some(0.0), None, Some(4.0001)]).unwrap();
        assert_eq!(d.labels, vec![Some(1), Some(0), Some(0), None, Some(1)]);
        assert_eq!(d.unlabeled, vec![3]);
        assert!(derive_labels(&[Some(-1.0)]).is_err());
    }

    #[test]
    fn forty_two_row_split_matches_protocol_counts() {
        let y = labels(24, 18);
        let s = stratified_split(&y, 0.30, 11).unwrap();
        assert_eq!(s.train_rows.len(), 29);
        assert_eq!(s.test_rows.len(), 13);
        let pos_test = s.test_rows.iter().filter(|&&i| y[i] == 1).count();
        assert_eq!(pos_test, 7);
        let pos_train = s.train_rows.iter().filter(|&&i| y[i] == 1).count();
        assert_eq!(pos_train, 17);
    }

    #[test]
    fn inner_validation_split_counts() {
        // 29 training rows (17/12) resampled 70/30.
        assert_eq!(stratified_test_counts([12, 17], 0.30), [4, 5]);
    }

    #[test]
    fn balanced_half_split() {
        let y = labels(5, 5);
        let s = stratified_split(&y, 0.5, 3).unwrap();
        assert_eq!(s.test_rows.len(), 5);
        assert_eq!(s.train_rows.len(), 5);
        let pos = s.test_rows.iter().filter(|&&i| y[i] == 1).count();
        assert!(pos == 2 || pos == 3);
    }

    #[test]
    fn split_is_deterministic_and_errors_on_single_label() {
        let y = labels(17, 12);
        assert_eq!(stratified_split(&y, 0.3, 5).unwrap(), stratified_split(&y, 0.3, 5).unwrap());
        assert!(stratified_split(&labels(4, 0), 0.3, 5).is_err());
        assert!(stratified_split(&y, 1.0, 5).is_err());
    }

    #[test]
    fn csv_round_trip() {
        let csv = "id,age,smoker,severity,label\na,5.44,yes,severe,1\nb,,no,mild,0\n";
        let ds = encode_categoricals(&read_csv(csv.as_bytes(), &schema(), "t").unwrap()).unwrap();
        let mut buf = Vec::new();
        ds.write_csv(&mut buf).unwrap();
        let back = encode_categoricals(&read_csv(&buf[..], &schema(), "t").unwrap()).unwrap();
        assert_eq!(back, ds);
    }

    proptest! {
        #[test]
        fn encode_decode_round_trip(cats in proptest::collection::hash_set("[a-z]{1,6}", 3..8), pick in 0usize..100) {
            let cats: Vec<String> = cats.into_iter().collect();
            let f = FeatureSchema::categorical("f", FeatureKind::Ordinal, cats.clone(), Timepoint::T0);
            let text = &cats[pick % cats.len()];
            let code = f.encode(text).unwrap();
            prop_assert_eq!(f.decode(code as f64), Some(text.as_str()));
        }

        #[test]
        fn split_fractions_within_one_row(pos in 1usize..60, neg in 1usize..60, ratio in 0.05f64..0.95, seed in any::<u64>()) {
            let y = labels(pos, neg);
            let s = stratified_split(&y, ratio, seed).unwrap();
            let mut all: Vec<usize> = s.train_rows.iter().chain(&s.test_rows).copied().collect();
            all.sort_unstable();
            prop_assert_eq!(all, (0..y.len()).collect::<Vec<_>>());
            for (label, count) in [(1u8, pos), (0u8, neg)] {
                let train = s.train_rows.iter().filter(|&&i| y[i] == label).count();
                let frac = train as f64 / count as f64;
                prop_assert!((frac - (1.0 - ratio)).abs() <= 1.0 / count as f64 + 1e-12);
            }
        }
    }
}
