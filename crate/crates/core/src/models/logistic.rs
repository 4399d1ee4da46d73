use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use super::{prepare, solve_spd, Standardizer};
use crate::error::{check_finite, Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LogisticOptions {
    /// L2 penalty `(l2 / 2) |beta|^2` on standardized slopes.
    pub l2: f64,
    /// Stop once the gradient's max-norm is at or below this.
    pub tolerance: f64,
    pub max_iterations: usize,
    pub jitter: f64,
}

impl Default for LogisticOptions {
    fn default() -> Self {
        Self {
            l2: 1e-4,
            tolerance: 1e-8,
            max_iterations: 500,
            jitter: 1e-8,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LogisticModel {
    pub coefficients: Vec<f64>,
    pub intercept: f64,
    pub standardizer: Standardizer,
    pub iterations: usize,
    pub gradient_norm: f64,
    pub hit_max_iterations: bool,
}

impl LogisticModel {
    /// Linear predictor `intercept + x . beta`.
    pub fn decision_function(&self, x: &DMatrix<f64>) -> Result<Vec<f64>> {
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

    pub fn predict_proba(&self, x: &DMatrix<f64>) -> Result<Vec<f64>> {
        Ok(self.decision_function(x)?.into_iter().map(sigmoid).collect())
    }
}

fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

/// `ln(1 + e^z)`
fn softplus(z: f64) -> f64 {
    if z > 0.0 {
        z + (-z).exp().ln_1p()
    } else {
        z.exp().ln_1p()
    }
}

/// Penalized weighted log-likelihood over a design matrix whose first column
/// is the (unpenalized) intercept.
#[derive(Debug, Clone)]
pub struct LogisticObjective {
    design: DMatrix<f64>,
    y: DVector<f64>,
    w: DVector<f64>,
    l2: f64,
}

impl LogisticObjective {
    /// `x` is used as is (no standardization); an intercept column is prepended.
    pub fn new(x: &DMatrix<f64>, y: &[f64], w: &[f64], l2: f64) -> Result<Self> {
        if y.len() != x.nrows() || w.len() != x.nrows() {
            return Err(Error::LengthMismatch {
                what: "targets/weights",
                expected: x.nrows(),
                got: y.len().min(w.len()),
            });
        }
        check_finite(x.as_slice(), "features")?;
        let design = x.clone().insert_column(0, 1.0);
        Ok(Self {
            design,
            y: DVector::from_column_slice(y),
            w: DVector::from_column_slice(w),
            l2,
        })
    }

    pub fn dim(&self) -> usize {
        self.design.ncols()
    }

    fn penalty(&self, beta: &DVector<f64>) -> f64 {
        0.5 * self.l2 * beta.rows(1, beta.len() - 1).norm_squared()
    }

    /// `sum w_i [y_i z_i - ln(1 + e^z_i)] - (l2/2) |beta_{1..}|^2`
    pub fn value(&self, beta: &DVector<f64>) -> f64 {
        let z = &self.design * beta;
        let ll: f64 = z
            .iter()
            .zip(self.y.iter().zip(self.w.iter()))
            .map(|(&zi, (&yi, &wi))| wi * (yi * zi - softplus(zi)))
            .sum();
        ll - self.penalty(beta)
    }

    pub fn gradient(&self, beta: &DVector<f64>) -> DVector<f64> {
        let z = &self.design * beta;
        let resid = DVector::from_iterator(
            z.len(),
            z.iter()
                .zip(self.y.iter().zip(self.w.iter()))
                .map(|(&zi, (&yi, &wi))| wi * (yi - sigmoid(zi))),
        );
        let mut g = self.design.transpose() * resid;
        for j in 1..g.len() {
            g[j] -= self.l2 * beta[j];
        }
        g
    }

    /// Negative Hessian (positive semidefinite).
    fn curvature(&self, beta: &DVector<f64>) -> DMatrix<f64> {
        let z = &self.design * beta;
        let mut scaled = self.design.clone();
        for (r, (&zi, &wi)) in z.iter().zip(self.w.iter()).enumerate() {
            let p = sigmoid(zi);
            scaled.row_mut(r).scale_mut(wi * p * (1.0 - p));
        }
        let mut h = self.design.transpose() * scaled;
        for j in 1..h.nrows() {
            h[(j, j)] += self.l2;
        }
        h
    }
}

/// Weighted logistic regression fitted by damped Newton iterations.
pub fn fit_weighted_logistic(
    x: &DMatrix<f64>,
    y: &[f64],
    w: &[f64],
    options: &LogisticOptions,
) -> Result<LogisticModel> {
    if !(options.l2 >= 0.0 && options.l2.is_finite()) {
        return Err(Error::InvalidArgument(format!(
            "l2 must be nonnegative, got {}",
            options.l2
        )));
    }
    if let Some(i) = y.iter().position(|&v| v != 0.0 && v != 1.0) {
        return Err(Error::InvalidArgument(format!(
            "logistic labels must be 0 or 1, row {i} has {}",
            y[i]
        )));
    }
    let prep = prepare(x, y, w)?;
    let positives = prep.rows.iter().filter(|&&i| y[i] == 1.0).count();
    if positives == 0 || positives == prep.rows.len() {
        return Err(Error::InvalidArgument(
            "logistic fit needs both classes among positive-weight rows".into(),
        ));
    }
    let std = Standardizer::fit(x, &prep.rows);
    let z = std.design(x, &prep.rows).remove_column(0);
    let ys: Vec<f64> = prep.rows.iter().map(|&i| y[i]).collect();
    let objective = LogisticObjective::new(&z, &ys, &prep.weights, options.l2)?;

    let mut beta = DVector::zeros(objective.dim());
    // start the intercept at the weighted log-odds
    let wsum: f64 = prep.weights.iter().sum();
    let wpos: f64 = prep
        .rows
        .iter()
        .zip(&prep.weights)
        .filter(|(&i, _)| y[i] == 1.0)
        .map(|(_, w)| w)
        .sum();
    beta[0] = (wpos / (wsum - wpos)).ln();

    let mut value = objective.value(&beta);
    let mut grad = objective.gradient(&beta);
    let mut iterations = 0;
    while grad.amax() > options.tolerance && iterations < options.max_iterations {
        iterations += 1;
        let step = solve_spd(objective.curvature(&beta), &grad, options.jitter)?;
        let mut t = 1.0;
        let mut accepted = false;
        for _ in 0..60 {
            let trial = &beta + &step * t;
            let v = objective.value(&trial);
            if v.is_finite() && v >= value {
                beta = trial;
                value = v;
                accepted = true;
                break;
            }
            t *= 0.5;
        }
        grad = objective.gradient(&beta);
        if !accepted {
            break;
        }
    }
    if beta.iter().any(|v| !v.is_finite()) {
        return Err(Error::Numerical("logistic coefficients diverged".into()));
    }
    let (coefficients, intercept) = std.unscale(&beta);
    let gradient_norm = grad.amax();
    Ok(LogisticModel {
        coefficients,
        intercept,
        standardizer: std,
        iterations,
        gradient_norm,
        hit_max_iterations: gradient_norm > options.tolerance,
    })
}
