use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use super::{prepare, solve_spd, Standardizer};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LinearOptions {
    /// L2 penalty on standardized slopes (the intercept is never penalized).
    pub ridge: f64,
    /// Relative diagonal jitter used only when the normal equations fail to factor.
    pub jitter: f64,
}

impl Default for LinearOptions {
    fn default() -> Self {
        Self {
            ridge: 0.0,
            jitter: 1e-8,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinearModel {
    pub coefficients: Vec<f64>,
    pub intercept: f64,
    pub standardizer: Standardizer,
}

impl LinearModel {
    pub fn predict(&self, x: &DMatrix<f64>) -> Result<Vec<f64>> {
        if x.ncols() != self.coefficients.len() {
            return Err(Error::LengthMismatch {
                what: "feature columns",
                expected: self.coefficients.len(),
                got: x.ncols(),
            });
        }
        Ok(x.row_iter()
            .map(|row| {
                self.intercept
                    + row
                        .iter()
                        .zip(&self.coefficients)
                        .map(|(v, c)| v * c)
                        .sum::<f64>()
            })
            .collect())
    }
}

/// Weighted least squares: minimizes `sum w_i (y_i - yhat_i)^2 + ridge |beta|^2`
/// over standardized features via a Cholesky solve of the normal equations.
pub fn fit_weighted_linear(
    x: &DMatrix<f64>,
    y: &[f64],
    w: &[f64],
    options: &LinearOptions,
) -> Result<LinearModel> {
    if !(options.ridge >= 0.0 && options.ridge.is_finite()) {
        return Err(Error::InvalidArgument(format!(
            "ridge must be nonnegative, got {}",
            options.ridge
        )));
    }
    let prep = prepare(x, y, w)?;
    let std = Standardizer::fit(x, &prep.rows);
    let a = std.design(x, &prep.rows);
    let k = a.ncols();

    // A' W A and A' W y without materializing W
    let mut weighted = a.clone();
    for (r, &wr) in prep.weights.iter().enumerate() {
        weighted.row_mut(r).scale_mut(wr);
    }
    let mut normal = weighted.transpose() * &a;
    for j in 1..k {
        normal[(j, j)] += options.ridge;
    }
    let yv = DVector::from_iterator(prep.rows.len(), prep.rows.iter().map(|&i| y[i]));
    let rhs = weighted.transpose() * yv;
    let params = solve_spd(normal, &rhs, options.jitter)?;
    let (coefficients, intercept) = std.unscale(&params);
    Ok(LinearModel {
        coefficients,
        intercept,
        standardizer: std,
    })
}
