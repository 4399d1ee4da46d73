//! Dataset schema and run configuration files (TOML).
//!
//! Relative paths inside a file are resolved against that file's directory.

use std::path::{Path, PathBuf};

use cwb::{
    CsvSchema, ExperimentOptions, LabelTransform, LinearOptions, LogisticOptions, ModelKind,
    Scheme, SubsetRule, TargetDecl, TraitSource, WeightOptions,
};
use serde::{Deserialize, Serialize};

use crate::CliError;

fn default_missing() -> String {
    "?".into()
}

fn default_delimiter() -> char {
    ','
}

/// Describes one dataset: where its CSV lives, how to read it, and the
/// default evaluation subset and target for it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DatasetSchema {
    pub id: String,
    pub path: PathBuf,
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
    pub subset: Option<SubsetRule>,
    pub target: Option<TargetDecl>,
}

impl DatasetSchema {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(|e| {
            CliError::Validation(format!("cannot read schema {}: {e}", path.display()))
        })?;
        let mut schema: DatasetSchema = toml::from_str(&text).map_err(|e| {
            CliError::Validation(format!("invalid schema {}: {e}", path.display()))
        })?;
        schema.path = resolve(path, &schema.path);
        Ok(schema)
    }

    pub fn csv(&self) -> CsvSchema {
        CsvSchema {
            features: self.features.clone(),
            label: self.label.clone(),
            label_transform: self.label_transform,
            trait_source: self.trait_source.clone(),
            missing: self.missing.clone(),
            delimiter: self.delimiter,
        }
    }
}

fn default_schemes() -> Vec<Scheme> {
    Scheme::ALL.to_vec()
}

fn default_seeds() -> Vec<u64> {
    (0..5).collect()
}

fn default_test_fraction() -> f64 {
    0.2
}

fn default_bins() -> usize {
    cwb::weights::DEFAULT_BINS
}

fn default_histogram_bins() -> usize {
    30
}

/// A reproduction run: one dataset, one model, several schemes and seeds.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub schema: PathBuf,
    pub model: ModelKind,
    #[serde(default = "default_schemes")]
    pub schemes: Vec<Scheme>,
    #[serde(default = "default_seeds")]
    pub seeds: Vec<u64>,
    #[serde(default = "default_test_fraction")]
    pub test_fraction: f64,
    #[serde(default = "default_bins")]
    pub bins: usize,
    #[serde(default = "default_histogram_bins")]
    pub histogram_bins: usize,
    /// Overrides the schema's target.
    pub target: Option<TargetDecl>,
    /// Overrides the schema's subset rule.
    pub subset: Option<SubsetRule>,
    #[serde(default)]
    pub weights: WeightOptions,
    #[serde(default)]
    pub linear: LinearOptions,
    #[serde(default)]
    pub logistic: LogisticOptions,
    pub out: Option<PathBuf>,
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(|e| {
            CliError::Validation(format!("cannot read config {}: {e}", path.display()))
        })?;
        let mut cfg: RunConfig = toml::from_str(&text).map_err(|e| {
            CliError::Validation(format!("invalid config {}: {e}", path.display()))
        })?;
        cfg.schema = resolve(path, &cfg.schema);
        cfg.out = cfg.out.map(|o| resolve(path, &o));
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<(), CliError> {
        if !self.schema.is_file() {
            return Err(CliError::Validation(format!(
                "schema file {} does not exist",
                self.schema.display()
            )));
        }
        if self.seeds.is_empty() {
            return Err(CliError::Validation("seeds must not be empty".into()));
        }
        if self.schemes.is_empty() {
            return Err(CliError::Validation("schemes must not be empty".into()));
        }
        if !(self.test_fraction > 0.0 && self.test_fraction < 1.0) {
            return Err(CliError::Validation(format!(
                "test_fraction must lie in (0, 1), got {}",
                self.test_fraction
            )));
        }
        if self.bins == 0 || self.histogram_bins == 0 {
            return Err(CliError::Validation("bin counts must be >= 1".into()));
        }
        self.weights.validate()?;
        Ok(())
    }

    pub fn experiment_options(&self) -> ExperimentOptions {
        ExperimentOptions {
            test_fraction: self.test_fraction,
            bins: self.bins,
            weights: self.weights,
            linear: self.linear,
            logistic: self.logistic,
        }
    }
}

fn resolve(file: &Path, rel: &Path) -> PathBuf {
    if rel.is_absolute() {
        rel.to_path_buf()
    } else {
        file.parent().unwrap_or(Path::new(".")).join(rel)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn run_config_defaults() {
        let cfg: RunConfig = toml::from_str(
            r#"
            schema = "x.toml"
            model = "linear"
            "#,
        )
        .unwrap();
        assert_eq!(cfg.seeds, vec![0, 1, 2, 3, 4]);
        assert_eq!(cfg.schemes, Scheme::ALL.to_vec());
        assert_eq!(cfg.test_fraction, 0.2);
        assert_eq!(cfg.bins, 10);
        assert!(cfg.weights.normalize);
        assert_eq!(cfg.weights.floor, 1e-12);
    }

    #[test]
    fn schema_parses_target_and_subset() {
        let s: DatasetSchema = toml::from_str(
            r#"
            id = "heart"
            path = "heart.csv"
            features = ["age", "sex"]
            label = "num"
            label_transform = "binarize"
            trait = "age"
            subset = { column = "age", op = "<", threshold = 60 }
            target = { kind = "uniform", a = 29, b = 77 }
            "#,
        )
        .unwrap();
        assert_eq!(s.trait_source, TraitSource::Column("age".into()));
        assert_eq!(s.subset.unwrap().to_string(), "age < 60");
        assert_eq!(s.target.unwrap(), TargetDecl::Uniform { a: 29.0, b: 77.0 });
        assert_eq!(s.delimiter, ',');
    }

    #[test]
    fn unknown_keys_rejected() {
        assert!(toml::from_str::<RunConfig>("schema = \"x\"\nmodel = \"linear\"\nsedes = [1]\n").is_err());
    }
}
