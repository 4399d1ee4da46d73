//! Continuous weight balancing.
//!
//! Reweights a dataset so that a continuous trait (a label, a feature, or
//! metadata) follows a chosen target distribution. The source density of the
//! trait is estimated with a Gaussian KDE (Scott's-rule bandwidth), and each
//! sample gets `w_i = f_T(t_i) / f_S(t_i)`.
//!
//! ```
//! use cwb::{continuous_weights, DensityModel, TargetSpec, WeightOptions};
//!
//! let ages = vec![34.0, 41.0, 52.0, 57.0, 58.0, 61.0, 63.0, 66.0];
//! let source = DensityModel::fit(ages.clone(), None)?;
//! let target = TargetSpec::uniform(29.0, 77.0)?;
//! let w = continuous_weights(&ages, &source, &target, &WeightOptions::default())?;
//! assert!((w.mean() - 1.0).abs() < 1e-9);
//! # Ok::<(), cwb::Error>(())
//! ```
//!
//! Batch evaluation runs on rayon when the `parallel` feature is enabled (the
//! default); see [`Execution`].

pub mod dataset;
pub mod density;
pub mod error;
pub mod exec;
pub mod experiment;
pub mod metrics;
pub mod models;
pub mod target;
pub mod weights;

pub use dataset::{
    apply_subset, load_csv, read_csv, train_test_split, Comparator, CsvSchema, Dataset,
    LabelTransform, SubsetColumn, SubsetRule, TraitSource,
};
pub use density::{scotts_bandwidth, DensityModel};
pub use error::{Error, Result};
pub use exec::Execution;
pub use experiment::{run_experiment, EvalReport, Experiment, ExperimentOptions, Metric, ModelKind};
pub use metrics::{auroc, r2_score};
pub use models::{
    fit_weighted_linear, fit_weighted_logistic, LinearModel, LinearOptions, LogisticModel,
    LogisticOptions,
};
pub use target::{TargetDecl, TargetSpec};
pub use weights::{
    continuous_weights, discrete_weights, histogram_export, weighted_ks, HistogramRow, Scheme,
    WeightOptions, WeightVector,
};
