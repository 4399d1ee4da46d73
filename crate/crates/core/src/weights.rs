//! Sample weights: continuous density-ratio weights, the discrete binning
//! baseline, and diagnostics for how well a weighted sample matches a target.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::density::DensityModel;
use crate::error::{check_finite, Error, Result};
use crate::exec::{self, Execution};
use crate::target::TargetSpec;

/// Default lower bound on the source density in the weight denominator.
pub const DEFAULT_FLOOR: f64 = 1e-12;

/// Default number of equal-width bins for the discrete baseline.
pub const DEFAULT_BINS: usize = 10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Scheme {
    /// All weights one.
    #[serde(alias = "uniform")]
    None,
    Discrete,
    Continuous,
}

impl Scheme {
    pub const ALL: [Scheme; 3] = [Scheme::None, Scheme::Discrete, Scheme::Continuous];

    pub fn as_str(self) -> &'static str {
        match self {
            Scheme::None => "none",
            Scheme::Discrete => "discrete",
            Scheme::Continuous => "continuous",
        }
    }
}

impl fmt::Display for Scheme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Scheme {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "none" | "uniform" => Ok(Scheme::None),
            "discrete" => Ok(Scheme::Discrete),
            "continuous" => Ok(Scheme::Continuous),
            other => Err(Error::InvalidArgument(format!("unknown weighting scheme `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct WeightOptions {
    pub floor: f64,
    pub clip: Option<f64>,
    pub normalize: bool,
}

impl Default for WeightOptions {
    fn default() -> Self {
        Self {
            floor: DEFAULT_FLOOR,
            clip: None,
            normalize: true,
        }
    }
}

impl WeightOptions {
    pub fn validate(&self) -> Result<()> {
        if !(self.floor > 0.0 && self.floor.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "floor must be positive and finite, got {}",
                self.floor
            )));
        }
        if let Some(c) = self.clip {
            if !(c > 0.0 && c.is_finite()) {
                return Err(Error::InvalidArgument(format!(
                    "clip must be positive and finite, got {c}"
                )));
            }
        }
        Ok(())
    }
}

/// Per-sample nonnegative weights plus how they were produced.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WeightVector {
    weights: Vec<f64>,
    scheme: Scheme,
    normalized: bool,
    clip_limit: Option<f64>,
}

impl WeightVector {
    /// `n` weights of one.
    pub fn uniform(n: usize) -> Self {
        Self {
            weights: vec![1.0; n],
            scheme: Scheme::None,
            normalized: true,
            clip_limit: None,
        }
    }

    /// Wrap caller-supplied weights. They must be finite and nonnegative.
    pub fn from_raw(weights: Vec<f64>, scheme: Scheme) -> Result<Self> {
        check_finite(&weights, "weights")?;
        if let Some(i) = weights.iter().position(|&w| w < 0.0) {
            return Err(Error::InvalidArgument(format!(
                "weight {i} is negative ({})",
                weights[i]
            )));
        }
        Ok(Self {
            weights,
            scheme,
            normalized: false,
            clip_limit: None,
        })
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.weights
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.weights
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    pub fn scheme(&self) -> Scheme {
        self.scheme
    }

    pub fn is_normalized(&self) -> bool {
        self.normalized
    }

    pub fn clip_limit(&self) -> Option<f64> {
        self.clip_limit
    }

    pub fn total(&self) -> f64 {
        self.weights.iter().sum()
    }

    pub fn mean(&self) -> f64 {
        self.total() / self.weights.len() as f64
    }

    pub fn min(&self) -> f64 {
        self.weights.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn max(&self) -> f64 {
        self.weights.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    /// Rescale by one common factor so the mean weight is one.
    pub fn normalize(&mut self) -> Result<()> {
        let total = self.total();
        if !(total > 0.0) {
            return Err(Error::InvalidArgument(
                "cannot normalize weights with zero total".into(),
            ));
        }
        let n = self.weights.len() as f64;
        for w in &mut self.weights {
            *w = *w / total * n;
        }
        self.normalized = true;
        Ok(())
    }

    /// Cap every weight at `limit`.
    pub fn clip(&mut self, limit: f64) {
        for w in &mut self.weights {
            if *w > limit {
                *w = limit;
            }
        }
        self.clip_limit = Some(limit);
        self.normalized = false;
    }

    /// Kish effective sample size `(sum w)^2 / sum w^2`.
    pub fn effective_sample_size(&self) -> f64 {
        let s: f64 = self.total();
        let s2: f64 = self.weights.iter().map(|w| w * w).sum();
        if s2 > 0.0 {
            s * s / s2
        } else {
            0.0
        }
    }
}

/// `target / max(source, floor)`.
#[inline]
pub fn density_ratio(target: f64, source: f64, floor: f64) -> f64 {
    target / source.max(floor)
}

/// Density-ratio weights `f_T(t_i) / f_S(t_i)` with the source density floored,
/// optionally clipped, then optionally normalized to mean one.
pub fn continuous_weights(
    traits: &[f64],
    source: &DensityModel,
    target: &TargetSpec,
    options: &WeightOptions,
) -> Result<WeightVector> {
    continuous_weights_with(traits, source, target, options, Execution::default())
}

pub fn continuous_weights_with(
    traits: &[f64],
    source: &DensityModel,
    target: &TargetSpec,
    options: &WeightOptions,
    exec: Execution,
) -> Result<WeightVector> {
    if traits.is_empty() {
        return Err(Error::Empty("traits"));
    }
    check_finite(traits, "traits")?;
    options.validate()?;
    let floor = options.floor;
    let raw = exec::map(traits, exec, |&t| {
        density_ratio(target.pdf_unchecked(t), source.pdf_unchecked(t), floor)
    });
    if let Some(i) = raw.iter().position(|w| !w.is_finite()) {
        return Err(Error::Numerical(format!(
            "weight {i} is not finite after flooring"
        )));
    }
    let mut wv = WeightVector {
        weights: raw,
        scheme: Scheme::Continuous,
        normalized: false,
        clip_limit: None,
    };
    if let Some(limit) = options.clip {
        wv.clip(limit);
    }
    if options.normalize {
        wv.normalize()?;
    }
    Ok(wv)
}

/// Equal-width bins over the observed range of a trait.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Binning {
    lo: f64,
    hi: f64,
    bins: usize,
}

impl Binning {
    pub fn over(traits: &[f64], bins: usize) -> Result<Self> {
        if bins == 0 {
            return Err(Error::InvalidArgument("bin count must be >= 1".into()));
        }
        if traits.is_empty() {
            return Err(Error::Empty("traits"));
        }
        check_finite(traits, "traits")?;
        let (lo, hi) = traits
            .iter()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &t| {
                (lo.min(t), hi.max(t))
            });
        Ok(Self { lo, hi, bins })
    }

    pub fn bins(&self) -> usize {
        self.bins
    }

    /// True when every trait was identical; everything lands in bin 0.
    pub fn is_degenerate(&self) -> bool {
        self.hi <= self.lo
    }

    /// Bin of `t`; the last bin is closed on the right. Values outside the
    /// range clamp to the edge bins.
    pub fn index(&self, t: f64) -> usize {
        if self.is_degenerate() {
            return 0;
        }
        let pos = (t - self.lo) / (self.hi - self.lo) * self.bins as f64;
        if pos <= 0.0 {
            0
        } else {
            (pos as usize).min(self.bins - 1)
        }
    }

    pub fn edges(&self, bin: usize) -> (f64, f64) {
        if self.is_degenerate() {
            return (self.lo, self.hi);
        }
        let width = (self.hi - self.lo) / self.bins as f64;
        let left = self.lo + width * bin as f64;
        let right = if bin + 1 == self.bins {
            self.hi
        } else {
            self.lo + width * (bin + 1) as f64
        };
        (left, right)
    }

    pub fn counts(&self, traits: &[f64]) -> Vec<usize> {
        let mut counts = vec![0usize; self.bins];
        for &t in traits {
            counts[self.index(t)] += 1;
        }
        counts
    }
}

/// Discrete baseline: each non-empty equal-width bin gets the same total
/// weight. A point in bin `b` weighs `N / (B_nonempty * n_b)`, so the mean
/// weight is one.
pub fn discrete_weights(traits: &[f64], bins: usize) -> Result<WeightVector> {
    let binning = Binning::over(traits, bins)?;
    let counts = binning.counts(traits);
    let nonempty = counts.iter().filter(|&&c| c > 0).count() as f64;
    let n = traits.len() as f64;
    let weights = traits
        .iter()
        .map(|&t| n / (nonempty * counts[binning.index(t)] as f64))
        .collect();
    Ok(WeightVector {
        weights,
        scheme: Scheme::Discrete,
        normalized: true,
        clip_limit: None,
    })
}

fn check_weighted_input(traits: &[f64], weights: &WeightVector) -> Result<f64> {
    if traits.is_empty() {
        return Err(Error::Empty("traits"));
    }
    if traits.len() != weights.len() {
        return Err(Error::LengthMismatch {
            what: "weights",
            expected: traits.len(),
            got: weights.len(),
        });
    }
    check_finite(traits, "traits")?;
    let total = weights.total();
    if !(total > 0.0) {
        return Err(Error::InvalidArgument("total weight must be positive".into()));
    }
    Ok(total)
}

/// Largest gap between the weighted empirical CDF and the target CDF,
/// checked on both sides of every jump.
pub fn weighted_ks(traits: &[f64], weights: &WeightVector, target: &TargetSpec) -> Result<f64> {
    let total = check_weighted_input(traits, weights)?;
    let w = weights.as_slice();
    let mut order: Vec<usize> = (0..traits.len()).collect();
    order.sort_by(|&i, &j| traits[i].total_cmp(&traits[j]));

    let mut d: f64 = 0.0;
    let mut below = 0.0;
    let mut k = 0;
    while k < order.len() {
        let t = traits[order[k]];
        let mut mass = 0.0;
        while k < order.len() && traits[order[k]] == t {
            mass += w[order[k]];
            k += 1;
        }
        let f = target.cdf(t);
        let left = below / total;
        below += mass;
        let right = if k == order.len() { 1.0 } else { below / total };
        d = d.max((left - f).abs()).max((right - f).abs());
    }
    Ok(d.clamp(0.0, 1.0))
}

/// One row of a reweighted histogram.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HistogramRow {
    pub bin_left: f64,
    pub bin_right: f64,
    pub unweighted_count: usize,
    pub weighted_mass: f64,
    pub target_pdf_at_center: f64,
}

/// Unweighted counts, weighted mass and the target density per equal-width bin.
pub fn histogram_export(
    traits: &[f64],
    weights: &WeightVector,
    target: &TargetSpec,
    bins: usize,
) -> Result<Vec<HistogramRow>> {
    check_weighted_input(traits, weights)?;
    let binning = Binning::over(traits, bins)?;
    let mut counts = vec![0usize; bins];
    let mut mass = vec![0.0f64; bins];
    for (&t, &w) in traits.iter().zip(weights.as_slice()) {
        let b = binning.index(t);
        counts[b] += 1;
        mass[b] += w;
    }
    Ok((0..bins)
        .map(|b| {
            let (bin_left, bin_right) = binning.edges(b);
            HistogramRow {
                bin_left,
                bin_right,
                unweighted_count: counts[b],
                weighted_mass: mass[b],
                target_pdf_at_center: target.pdf_unchecked(0.5 * (bin_left + bin_right)),
            }
        })
        .collect())
}
