//! Weighted linear and logistic regression.
//!
//! Both fits standardize features with the unweighted mean and standard
//! deviation of the positive-weight training rows, and rescale the weights to
//! mean one over those rows before solving. Coefficients are reported on the
//! original feature scale.

mod linear;
mod logistic;

pub use linear::{fit_weighted_linear, LinearModel, LinearOptions};
pub use logistic::{fit_weighted_logistic, LogisticModel, LogisticObjective, LogisticOptions};

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{check_finite, Error, Result};

/// Per-feature shift and scale learned from training rows.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Standardizer {
    pub shift: Vec<f64>,
    pub scale: Vec<f64>,
}

impl Standardizer {
    fn fit(x: &DMatrix<f64>, rows: &[usize]) -> Self {
        let m = rows.len() as f64;
        let (shift, scale) = (0..x.ncols())
            .map(|j| {
                let mean = rows.iter().map(|&i| x[(i, j)]).sum::<f64>() / m;
                let var = rows.iter().map(|&i| (x[(i, j)] - mean).powi(2)).sum::<f64>() / m;
                let sd = var.sqrt();
                // constant columns keep unit scale
                (mean, if sd > 1e-12 * mean.abs().max(1.0) { sd } else { 1.0 })
            })
            .unzip();
        Self { shift, scale }
    }

    /// `[1, (x - shift) / scale]` for each selected row.
    fn design(&self, x: &DMatrix<f64>, rows: &[usize]) -> DMatrix<f64> {
        let p = x.ncols();
        DMatrix::from_fn(rows.len(), p + 1, |r, c| {
            if c == 0 {
                1.0
            } else {
                (x[(rows[r], c - 1)] - self.shift[c - 1]) / self.scale[c - 1]
            }
        })
    }

    /// Map standardized-space parameters `[b0, b1..]` back to raw features.
    fn unscale(&self, params: &DVector<f64>) -> (Vec<f64>, f64) {
        let coefs: Vec<f64> = self
            .scale
            .iter()
            .enumerate()
            .map(|(j, s)| params[j + 1] / s)
            .collect();
        let intercept = params[0]
            - coefs
                .iter()
                .zip(&self.shift)
                .map(|(c, m)| c * m)
                .sum::<f64>();
        (coefs, intercept)
    }
}

/// Validated inputs shared by both fits: positive-weight rows and their
/// weights rescaled to mean one.
struct Prepared {
    rows: Vec<usize>,
    weights: Vec<f64>,
}

fn prepare(x: &DMatrix<f64>, y: &[f64], w: &[f64]) -> Result<Prepared> {
    let n = x.nrows();
    if y.len() != n {
        return Err(Error::LengthMismatch {
            what: "targets",
            expected: n,
            got: y.len(),
        });
    }
    if w.len() != n {
        return Err(Error::LengthMismatch {
            what: "weights",
            expected: n,
            got: w.len(),
        });
    }
    check_finite(x.as_slice(), "features")?;
    check_finite(y, "targets")?;
    check_finite(w, "weights")?;
    if let Some(i) = w.iter().position(|&v| v < 0.0) {
        return Err(Error::InvalidArgument(format!("weight {i} is negative")));
    }
    let rows: Vec<usize> = (0..n).filter(|&i| w[i] > 0.0).collect();
    if rows.len() < x.ncols() + 1 {
        return Err(Error::InvalidArgument(format!(
            "need at least {} positive-weight rows for {} features, got {}",
            x.ncols() + 1,
            x.ncols(),
            rows.len()
        )));
    }
    let mean = rows.iter().map(|&i| w[i]).sum::<f64>() / rows.len() as f64;
    let weights = rows.iter().map(|&i| w[i] / mean).collect();
    Ok(Prepared { rows, weights })
}

/// Solve the symmetric positive definite system `m z = rhs`, retrying once
/// with a relative diagonal jitter.
fn solve_spd(mut m: DMatrix<f64>, rhs: &DVector<f64>, jitter: f64) -> Result<DVector<f64>> {
    if let Some(chol) = m.clone().cholesky() {
        let z = chol.solve(rhs);
        if z.iter().all(|v| v.is_finite()) {
            return Ok(z);
        }
    }
    let k = m.nrows();
    let scale = (m.trace() / k as f64).abs().max(1.0);
    for i in 0..k {
        m[(i, i)] += jitter * scale;
    }
    let z = m.cholesky().ok_or(Error::Singular)?.solve(rhs);
    if z.iter().all(|v| v.is_finite()) {
        Ok(z)
    } else {
        Err(Error::Singular)
    }
}
