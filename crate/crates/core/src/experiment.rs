//! One evaluation run: split, weigh the training rows, fit, score a test subset.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::dataset::{split_indices, Dataset, SubsetRule};
use crate::density::DensityModel;
use crate::error::{Error, Result};
use crate::exec::Execution;
use crate::metrics::{auroc, r2_score};
use crate::models::{fit_weighted_linear, fit_weighted_logistic, LinearOptions, LogisticOptions};
use crate::target::TargetSpec;
use crate::weights::{
    continuous_weights_with, discrete_weights, Scheme, WeightOptions, WeightVector, DEFAULT_BINS,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ModelKind {
    Linear,
    Logistic,
}

impl ModelKind {
    pub fn metric(self) -> Metric {
        match self {
            ModelKind::Linear => Metric::R2,
            ModelKind::Logistic => Metric::Auroc,
        }
    }
}

impl fmt::Display for ModelKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ModelKind::Linear => "linear",
            ModelKind::Logistic => "logistic",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Metric {
    R2,
    #[serde(rename = "AUROC")]
    Auroc,
}

impl fmt::Display for Metric {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Metric::R2 => "R2",
            Metric::Auroc => "AUROC",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentOptions {
    pub test_fraction: f64,
    pub bins: usize,
    pub weights: WeightOptions,
    pub linear: LinearOptions,
    pub logistic: LogisticOptions,
}

impl Default for ExperimentOptions {
    fn default() -> Self {
        Self {
            test_fraction: 0.2,
            bins: DEFAULT_BINS,
            weights: WeightOptions::default(),
            linear: LinearOptions::default(),
            logistic: LogisticOptions::default(),
        }
    }
}

/// Result of one (dataset, model, scheme, seed) run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub dataset_id: String,
    pub model_kind: ModelKind,
    pub scheme: Scheme,
    pub seed: u64,
    pub metric: Metric,
    pub value: f64,
    pub subset: String,
    pub n_train: usize,
    pub n_eval: usize,
}

impl EvalReport {
    /// One JSON object, no trailing newline.
    pub fn to_json_line(&self) -> String {
        serde_json::to_string(self).expect("report serialization is infallible")
    }
}

/// Training weights for a scheme. The KDE is fit on `traits` only.
pub fn scheme_weights(
    traits: &[f64],
    scheme: Scheme,
    target: &TargetSpec,
    options: &ExperimentOptions,
    exec: Execution,
) -> Result<WeightVector> {
    match scheme {
        Scheme::None => Ok(WeightVector::uniform(traits.len())),
        Scheme::Discrete => discrete_weights(traits, options.bins),
        Scheme::Continuous => {
            let source = DensityModel::fit(traits.to_vec(), None)?;
            continuous_weights_with(traits, &source, target, &options.weights, exec)
        }
    }
}

#[derive(Debug, Clone)]
pub struct Experiment<'a> {
    pub dataset_id: &'a str,
    pub model: ModelKind,
    pub scheme: Scheme,
    pub target: &'a TargetSpec,
    pub subset: &'a SubsetRule,
    pub seed: u64,
    pub options: ExperimentOptions,
}

/// Split, weigh the training part, fit the model, and score it on the part
/// of the test split selected by the subset rule.
pub fn run_experiment(ds: &Dataset, exp: &Experiment<'_>) -> Result<EvalReport> {
    run_experiment_with(ds, exp, Execution::default())
}

pub fn run_experiment_with(ds: &Dataset, exp: &Experiment<'_>, exec: Execution) -> Result<EvalReport> {
    let (train_idx, test_idx) = split_indices(ds.len(), exp.options.test_fraction, exp.seed)?;
    let train = ds.select(&train_idx);
    let test = ds.select(&test_idx);
    let eval_rows = test.matching(exp.subset)?;
    if eval_rows.is_empty() {
        return Err(Error::EmptySubset(exp.subset.to_string()));
    }
    let eval = test.select(&eval_rows);

    let weights = scheme_weights(train.traits(), exp.scheme, exp.target, &exp.options, exec)?;
    let value = match exp.model {
        ModelKind::Linear => {
            let model =
                fit_weighted_linear(train.features(), train.labels(), weights.as_slice(), &exp.options.linear)?;
            r2_score(eval.labels(), &model.predict(eval.features())?)?
        }
        ModelKind::Logistic => {
            let model = fit_weighted_logistic(
                train.features(),
                train.labels(),
                weights.as_slice(),
                &exp.options.logistic,
            )?;
            auroc(eval.labels(), &model.decision_function(eval.features())?)?
        }
    };
    Ok(EvalReport {
        dataset_id: exp.dataset_id.to_string(),
        model_kind: exp.model,
        scheme: exp.scheme,
        seed: exp.seed,
        metric: exp.model.metric(),
        value,
        subset: exp.subset.to_string(),
        n_train: train.len(),
        n_eval: eval.len(),
    })
}

/// Median of a non-empty sample (mean of the middle pair for even sizes).
pub fn median(values: &[f64]) -> Option<f64> {
    if values.is_empty() {
        return None;
    }
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let m = v.len() / 2;
    Some(if v.len() % 2 == 1 {
        v[m]
    } else {
        0.5 * (v[m - 1] + v[m])
    })
}
