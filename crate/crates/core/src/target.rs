//! Target trait distributions.

use serde::{Deserialize, Serialize};

use crate::density::{std_normal_cdf, std_normal_pdf, DensityModel};
use crate::error::{Error, Result};

/// The distribution the trait should follow after reweighting.
///
/// Serialized with a `kind` tag, e.g. `{"kind":"normal","mu":3,"sigma":1}` or
/// `{"kind":"uniform","a":29,"b":77}`. Empirical targets carry their reference
/// sample (and optionally a bandwidth; Scott's rule otherwise).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawTarget", into = "RawTarget")]
pub enum TargetSpec {
    Normal { mu: f64, sigma: f64 },
    /// Closed support `[a, b]`.
    Uniform { a: f64, b: f64 },
    Empirical(DensityModel),
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
enum RawTarget {
    Normal {
        mu: f64,
        sigma: f64,
    },
    Uniform {
        a: f64,
        b: f64,
    },
    Empirical {
        reference: Vec<f64>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        bandwidth: Option<f64>,
    },
}

impl TryFrom<RawTarget> for TargetSpec {
    type Error = Error;

    fn try_from(raw: RawTarget) -> Result<Self> {
        match raw {
            RawTarget::Normal { mu, sigma } => TargetSpec::normal(mu, sigma),
            RawTarget::Uniform { a, b } => TargetSpec::uniform(a, b),
            RawTarget::Empirical {
                reference,
                bandwidth,
            } => TargetSpec::empirical(reference, bandwidth),
        }
    }
}

impl From<TargetSpec> for RawTarget {
    fn from(spec: TargetSpec) -> Self {
        match spec {
            TargetSpec::Normal { mu, sigma } => RawTarget::Normal { mu, sigma },
            TargetSpec::Uniform { a, b } => RawTarget::Uniform { a, b },
            TargetSpec::Empirical(model) => RawTarget::Empirical {
                bandwidth: Some(model.bandwidth()),
                reference: model.samples().to_vec(),
            },
        }
    }
}

impl TargetSpec {
    pub fn normal(mu: f64, sigma: f64) -> Result<Self> {
        if !mu.is_finite() {
            return Err(Error::InvalidArgument(format!("normal mu must be finite, got {mu}")));
        }
        if !(sigma > 0.0 && sigma.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "normal sigma must be positive, got {sigma}"
            )));
        }
        Ok(TargetSpec::Normal { mu, sigma })
    }

    pub fn uniform(a: f64, b: f64) -> Result<Self> {
        if !(a.is_finite() && b.is_finite()) {
            return Err(Error::InvalidArgument("uniform bounds must be finite".into()));
        }
        if a >= b {
            return Err(Error::InvalidArgument(format!(
                "uniform bounds need a < b, got a = {a}, b = {b}"
            )));
        }
        Ok(TargetSpec::Uniform { a, b })
    }

    pub fn empirical(reference: Vec<f64>, bandwidth: Option<f64>) -> Result<Self> {
        if reference.is_empty() {
            return Err(Error::InvalidArgument(
                "empirical target needs a non-empty reference sample".into(),
            ));
        }
        Ok(TargetSpec::Empirical(DensityModel::fit(reference, bandwidth)?))
    }

    /// Parse and validate a JSON target description.
    pub fn parse(text: &str) -> Result<Self> {
        let raw: RawTarget = serde_json::from_str(text)?;
        raw.try_into()
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("target serialization is infallible")
    }

    /// Density at `x`.
    pub fn pdf(&self, x: f64) -> Result<f64> {
        if !x.is_finite() {
            return Err(Error::InvalidArgument(format!(
                "target query must be finite, got {x}"
            )));
        }
        Ok(self.pdf_unchecked(x))
    }

    pub(crate) fn pdf_unchecked(&self, x: f64) -> f64 {
        match self {
            TargetSpec::Normal { mu, sigma } => std_normal_pdf((x - mu) / sigma) / sigma,
            TargetSpec::Uniform { a, b } => {
                if *a <= x && x <= *b {
                    1.0 / (b - a)
                } else {
                    0.0
                }
            }
            TargetSpec::Empirical(model) => model.pdf_unchecked(x),
        }
    }

    /// Cumulative distribution at `x`.
    pub fn cdf(&self, x: f64) -> f64 {
        match self {
            TargetSpec::Normal { mu, sigma } => std_normal_cdf((x - mu) / sigma),
            TargetSpec::Uniform { a, b } => ((x - a) / (b - a)).clamp(0.0, 1.0),
            TargetSpec::Empirical(model) => model.cdf(x),
        }
    }

    pub fn describe(&self) -> String {
        match self {
            TargetSpec::Normal { mu, sigma } => format!("normal({mu}, {sigma})"),
            TargetSpec::Uniform { a, b } => format!("uniform({a}, {b})"),
            TargetSpec::Empirical(m) => {
                format!("empirical(n = {}, h = {})", m.len(), m.bandwidth())
            }
        }
    }
}

/// A target as written in config files: empirical targets name a CSV column
/// instead of embedding the reference sample.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
pub enum TargetDecl {
    Normal {
        mu: f64,
        sigma: f64,
    },
    Uniform {
        a: f64,
        b: f64,
    },
    Empirical {
        reference_column: String,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        bandwidth: Option<f64>,
    },
}

impl TargetDecl {
    /// Build the target, fetching empirical reference data through `column`.
    pub fn resolve<F>(&self, column: F) -> Result<TargetSpec>
    where
        F: FnOnce(&str) -> Result<Vec<f64>>,
    {
        match self {
            TargetDecl::Normal { mu, sigma } => TargetSpec::normal(*mu, *sigma),
            TargetDecl::Uniform { a, b } => TargetSpec::uniform(*a, *b),
            TargetDecl::Empirical {
                reference_column,
                bandwidth,
            } => TargetSpec::empirical(column(reference_column)?, *bandwidth),
        }
    }

    /// Parse and validate the parametric parts of a JSON declaration.
    pub fn parse(text: &str) -> Result<Self> {
        let decl: TargetDecl = serde_json::from_str(text)?;
        match &decl {
            TargetDecl::Normal { mu, sigma } => {
                TargetSpec::normal(*mu, *sigma)?;
            }
            TargetDecl::Uniform { a, b } => {
                TargetSpec::uniform(*a, *b)?;
            }
            TargetDecl::Empirical { bandwidth, .. } => {
                if let Some(h) = bandwidth {
                    if !(*h > 0.0 && h.is_finite()) {
                        return Err(Error::InvalidArgument(format!(
                            "bandwidth must be positive and finite, got {h}"
                        )));
                    }
                }
            }
        }
        Ok(decl)
    }
}
