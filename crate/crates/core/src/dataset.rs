//! CSV ingestion, seeded train/test splits and subset filtering.

use std::fmt;
use std::path::Path;

use nalgebra::DMatrix;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LabelTransform {
    #[default]
    None,
    NaturalLog,
    /// 1 when the raw label is positive, else 0.
    Binarize,
}

impl LabelTransform {
    fn apply(self, raw: f64) -> f64 {
        match self {
            LabelTransform::None => raw,
            LabelTransform::NaturalLog => raw.ln(),
            LabelTransform::Binarize => {
                if raw > 0.0 {
                    1.0
                } else {
                    0.0
                }
            }
        }
    }
}

/// Where the weight trait comes from.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum TraitSource {
    /// The (transformed) label.
    Label,
    /// A raw CSV column.
    Column(String),
}

impl Serialize for TraitSource {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            TraitSource::Label => s.serialize_str("label"),
            TraitSource::Column(c) => s.serialize_str(c),
        }
    }
}

impl<'de> Deserialize<'de> for TraitSource {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        Ok(TraitSource::parse(&s))
    }
}

impl TraitSource {
    /// `"label"` selects the label; anything else names a column.
    pub fn parse(s: &str) -> Self {
        if s == "label" {
            TraitSource::Label
        } else {
            TraitSource::Column(s.to_string())
        }
    }
}

fn default_delimiter() -> char {
    ','
}

fn default_missing() -> String {
    "?".into()
}

/// Column layout of a CSV file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CsvSchema {
    pub features: Vec<String>,
    pub label: String,
    #[serde(default)]
    pub label_transform: LabelTransform,
    #[serde(rename = "trait")]
    pub trait_source: TraitSource,
    #[serde(default = "default_missing")]
    pub missing: String,
    #[serde(default = "default_delimiter")]
    pub delimiter: char,
}

/// Feature matrix, labels and weight trait for one set of rows.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    columns: Vec<String>,
    features: DMatrix<f64>,
    labels: Vec<f64>,
    traits: Vec<f64>,
    dropped_rows: usize,
}

impl Dataset {
    pub fn new(
        columns: Vec<String>,
        features: DMatrix<f64>,
        labels: Vec<f64>,
        traits: Vec<f64>,
    ) -> Result<Self> {
        let n = labels.len();
        if n == 0 {
            return Err(Error::Empty("dataset"));
        }
        if features.nrows() != n {
            return Err(Error::LengthMismatch {
                what: "feature rows",
                expected: n,
                got: features.nrows(),
            });
        }
        if features.ncols() != columns.len() {
            return Err(Error::LengthMismatch {
                what: "feature columns",
                expected: columns.len(),
                got: features.ncols(),
            });
        }
        if traits.len() != n {
            return Err(Error::LengthMismatch {
                what: "traits",
                expected: n,
                got: traits.len(),
            });
        }
        crate::error::check_finite(features.as_slice(), "features")?;
        crate::error::check_finite(&labels, "labels")?;
        crate::error::check_finite(&traits, "traits")?;
        Ok(Self {
            columns,
            features,
            labels,
            traits,
            dropped_rows: 0,
        })
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn columns(&self) -> &[String] {
        &self.columns
    }

    pub fn features(&self) -> &DMatrix<f64> {
        &self.features
    }

    pub fn labels(&self) -> &[f64] {
        &self.labels
    }

    pub fn traits(&self) -> &[f64] {
        &self.traits
    }

    /// Rows discarded at load time because a used cell held the missing marker.
    pub fn dropped_rows(&self) -> usize {
        self.dropped_rows
    }

    pub fn feature(&self, name: &str) -> Result<Vec<f64>> {
        let j = self
            .columns
            .iter()
            .position(|c| c == name)
            .ok_or_else(|| Error::MissingColumn(name.to_string()))?;
        Ok(self.features.column(j).iter().copied().collect())
    }

    /// Rows at `indices`, in that order.
    pub fn select(&self, indices: &[usize]) -> Dataset {
        Dataset {
            columns: self.columns.clone(),
            features: self.features.select_rows(indices),
            labels: indices.iter().map(|&i| self.labels[i]).collect(),
            traits: indices.iter().map(|&i| self.traits[i]).collect(),
            dropped_rows: 0,
        }
    }

    fn column_values(&self, column: &SubsetColumn) -> Result<Vec<f64>> {
        match column {
            SubsetColumn::Label => Ok(self.labels.clone()),
            SubsetColumn::Trait => Ok(self.traits.clone()),
            SubsetColumn::Feature(name) => self.feature(name),
        }
    }

    /// Indices of rows that satisfy `rule`, in order.
    pub fn matching(&self, rule: &SubsetRule) -> Result<Vec<usize>> {
        let values = self.column_values(&rule.column)?;
        Ok(values
            .iter()
            .enumerate()
            .filter(|(_, &v)| rule.op.holds(v, rule.threshold))
            .map(|(i, _)| i)
            .collect())
    }
}

/// Read a CSV file into a [`Dataset`].
pub fn load_csv(path: impl AsRef<Path>, schema: &CsvSchema) -> Result<Dataset> {
    let file = std::fs::File::open(path.as_ref())?;
    read_csv(file, schema)
}

/// Like [`load_csv`] but from any reader.
pub fn read_csv<R: std::io::Read>(reader: R, schema: &CsvSchema) -> Result<Dataset> {
    if !schema.delimiter.is_ascii() {
        return Err(Error::InvalidArgument(format!(
            "delimiter must be ASCII, got {:?}",
            schema.delimiter
        )));
    }
    let mut rdr = csv::ReaderBuilder::new()
        .delimiter(schema.delimiter as u8)
        .trim(csv::Trim::All)
        .from_reader(reader);
    let header = rdr.headers()?.clone();
    let find = |name: &str| {
        header
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| Error::MissingColumn(name.to_string()))
    };
    let feature_idx = schema
        .features
        .iter()
        .map(|f| find(f))
        .collect::<Result<Vec<_>>>()?;
    let label_idx = find(&schema.label)?;
    let trait_idx = match &schema.trait_source {
        TraitSource::Label => None,
        TraitSource::Column(c) => Some(find(c)?),
    };

    let p = feature_idx.len();
    let mut feats = Vec::new();
    let mut labels = Vec::new();
    let mut traits = Vec::new();
    let mut dropped = 0;
    let mut row_buf = Vec::with_capacity(p);
    for (r, record) in rdr.records().enumerate() {
        let record = record?;
        let row = r + 1;
        let used = feature_idx
            .iter()
            .chain(std::iter::once(&label_idx))
            .chain(trait_idx.iter());
        let mut missing = false;
        for &c in used {
            if record.get(c).unwrap_or("") == schema.missing {
                missing = true;
                break;
            }
        }
        if missing {
            dropped += 1;
            continue;
        }
        let cell = |c: usize| -> Result<f64> {
            let raw = record.get(c).unwrap_or("");
            raw.parse::<f64>()
                .ok()
                .filter(|v| v.is_finite())
                .ok_or_else(|| Error::BadCell {
                    row,
                    column: header[c].to_string(),
                    value: raw.to_string(),
                })
        };
        row_buf.clear();
        for &c in &feature_idx {
            row_buf.push(cell(c)?);
        }
        let raw_label = cell(label_idx)?;
        let label = schema.label_transform.apply(raw_label);
        if !label.is_finite() {
            return Err(Error::InvalidArgument(format!(
                "row {row}: label {raw_label} is invalid under {:?}",
                schema.label_transform
            )));
        }
        let t = match trait_idx {
            Some(c) => cell(c)?,
            None => label,
        };
        feats.extend_from_slice(&row_buf);
        labels.push(label);
        traits.push(t);
    }
    if labels.is_empty() {
        return Err(Error::Empty("usable rows"));
    }
    let features = DMatrix::from_row_slice(labels.len(), p, &feats);
    let mut ds = Dataset::new(schema.features.clone(), features, labels, traits)?;
    ds.dropped_rows = dropped;
    Ok(ds)
}

/// Split rows into `(train, test)` with a seeded shuffle. The test part holds
/// `round(n * test_fraction)` rows.
pub fn train_test_split(ds: &Dataset, test_fraction: f64, seed: u64) -> Result<(Dataset, Dataset)> {
    let (train, test) = split_indices(ds.len(), test_fraction, seed)?;
    Ok((ds.select(&train), ds.select(&test)))
}

/// Index form of [`train_test_split`].
pub fn split_indices(n: usize, test_fraction: f64, seed: u64) -> Result<(Vec<usize>, Vec<usize>)> {
    if !(test_fraction > 0.0 && test_fraction < 1.0) {
        return Err(Error::InvalidArgument(format!(
            "test fraction must lie in (0, 1), got {test_fraction}"
        )));
    }
    let n_test = (n as f64 * test_fraction).round() as usize;
    if n_test == 0 || n_test >= n {
        return Err(Error::InvalidArgument(format!(
            "test fraction {test_fraction} leaves an empty part for {n} rows"
        )));
    }
    let mut idx: Vec<usize> = (0..n).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    idx.shuffle(&mut rng);
    let train = idx.split_off(n_test);
    Ok((train, idx))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Comparator {
    #[serde(rename = "<")]
    Lt,
    #[serde(rename = ">")]
    Gt,
    #[serde(rename = "<=")]
    Le,
    #[serde(rename = ">=")]
    Ge,
}

impl Comparator {
    pub fn holds(self, value: f64, threshold: f64) -> bool {
        match self {
            Comparator::Lt => value < threshold,
            Comparator::Gt => value > threshold,
            Comparator::Le => value <= threshold,
            Comparator::Ge => value >= threshold,
        }
    }

    pub fn negate(self) -> Self {
        match self {
            Comparator::Lt => Comparator::Ge,
            Comparator::Gt => Comparator::Le,
            Comparator::Le => Comparator::Gt,
            Comparator::Ge => Comparator::Lt,
        }
    }

    pub fn symbol(self) -> &'static str {
        match self {
            Comparator::Lt => "<",
            Comparator::Gt => ">",
            Comparator::Le => "<=",
            Comparator::Ge => ">=",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum SubsetColumn {
    Label,
    Trait,
    Feature(String),
}

impl Serialize for SubsetColumn {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(match self {
            SubsetColumn::Label => "label",
            SubsetColumn::Trait => "trait",
            SubsetColumn::Feature(name) => name,
        })
    }
}

impl<'de> Deserialize<'de> for SubsetColumn {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        Ok(match s.as_str() {
            "label" => SubsetColumn::Label,
            "trait" => SubsetColumn::Trait,
            _ => SubsetColumn::Feature(s),
        })
    }
}

/// Row filter such as `label > 2` or `age < 60`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SubsetRule {
    pub column: SubsetColumn,
    pub op: Comparator,
    pub threshold: f64,
}

impl SubsetRule {
    pub fn new(column: SubsetColumn, op: Comparator, threshold: f64) -> Result<Self> {
        if !threshold.is_finite() {
            return Err(Error::InvalidArgument(format!(
                "subset threshold must be finite, got {threshold}"
            )));
        }
        Ok(Self {
            column,
            op,
            threshold,
        })
    }

    pub fn negated(&self) -> Self {
        Self {
            op: self.op.negate(),
            ..self.clone()
        }
    }
}

impl fmt::Display for SubsetRule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let col = match &self.column {
            SubsetColumn::Label => "label",
            SubsetColumn::Trait => "trait",
            SubsetColumn::Feature(name) => name,
        };
        write!(f, "{col} {} {}", self.op.symbol(), self.threshold)
    }
}

/// Rows of `ds` that satisfy `rule`, order preserved. Errors when none do.
pub fn apply_subset(ds: &Dataset, rule: &SubsetRule) -> Result<Dataset> {
    let idx = ds.matching(rule)?;
    if idx.is_empty() {
        return Err(Error::EmptySubset(rule.to_string()));
    }
    Ok(ds.select(&idx))
}
