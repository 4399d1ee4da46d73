//! Univariate Gaussian kernel density estimation.
//!
//! The estimate at `x` is `(1/(n h)) * sum_i phi((x - x_i) / h)` with `phi` the
//! standard normal density. Every query sums over all samples in storage
//! order, so evaluation is exact and bitwise reproducible.

use serde::{Deserialize, Serialize};

use crate::error::{check_finite, Error, Result};
use crate::exec::{self, Execution};

/// `1 / sqrt(2 pi)`
pub const INV_SQRT_2PI: f64 = 0.398_942_280_401_432_7;

#[inline]
pub(crate) fn std_normal_pdf(u: f64) -> f64 {
    INV_SQRT_2PI * (-0.5 * u * u).exp()
}

#[inline]
pub(crate) fn std_normal_cdf(u: f64) -> f64 {
    0.5 * libm::erfc(-u / std::f64::consts::SQRT_2)
}

/// Scott's rule bandwidth `n^(-1/(d+4))`.
///
/// Only the sample count and dimensionality enter; the data's spread is not
/// used, so the result is in whatever units the trait is measured in.
pub fn scotts_bandwidth(n: usize, d: usize) -> Result<f64> {
    if n == 0 {
        return Err(Error::InvalidArgument("sample count must be >= 1".into()));
    }
    if d == 0 {
        return Err(Error::InvalidArgument("dimensionality must be >= 1".into()));
    }
    Ok((n as f64).powf(-1.0 / (d as f64 + 4.0)))
}

/// A fitted Gaussian KDE over a single trait.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawDensity")]
pub struct DensityModel {
    samples: Vec<f64>,
    bandwidth: f64,
}

#[derive(Deserialize)]
struct RawDensity {
    samples: Vec<f64>,
    bandwidth: Option<f64>,
}

impl TryFrom<RawDensity> for DensityModel {
    type Error = Error;

    fn try_from(raw: RawDensity) -> Result<Self> {
        DensityModel::fit(raw.samples, raw.bandwidth)
    }
}

impl DensityModel {
    /// Fit a KDE. Without an explicit bandwidth, Scott's rule with `d = 1` is used.
    pub fn fit(samples: impl Into<Vec<f64>>, bandwidth: Option<f64>) -> Result<Self> {
        let samples = samples.into();
        if samples.is_empty() {
            return Err(Error::Empty("KDE samples"));
        }
        check_finite(&samples, "KDE samples")?;
        let bandwidth = match bandwidth {
            Some(h) if h > 0.0 && h.is_finite() => h,
            Some(h) => {
                return Err(Error::InvalidArgument(format!(
                    "bandwidth must be positive and finite, got {h}"
                )))
            }
            None => scotts_bandwidth(samples.len(), 1)?,
        };
        Ok(Self { samples, bandwidth })
    }

    pub fn samples(&self) -> &[f64] {
        &self.samples
    }

    pub fn bandwidth(&self) -> f64 {
        self.bandwidth
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    /// Upper bound on the density: the value of a single kernel at its centre.
    pub fn peak_bound(&self) -> f64 {
        INV_SQRT_2PI / self.bandwidth
    }

    /// Smallest and largest sample.
    pub fn range(&self) -> (f64, f64) {
        self.samples
            .iter()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &s| {
                (lo.min(s), hi.max(s))
            })
    }

    /// Density at `x`.
    pub fn pdf(&self, x: f64) -> Result<f64> {
        if !x.is_finite() {
            return Err(Error::InvalidArgument(format!(
                "density query must be finite, got {x}"
            )));
        }
        Ok(self.pdf_unchecked(x))
    }

    // Terms with |u| beyond ~38.6 underflow to exactly zero; that is the
    // only tail handling.
    #[inline]
    pub(crate) fn pdf_unchecked(&self, x: f64) -> f64 {
        let h = self.bandwidth;
        let mut acc = 0.0;
        for &s in &self.samples {
            acc += std_normal_pdf((x - s) / h);
        }
        acc / (self.samples.len() as f64 * h)
    }

    /// Cumulative distribution: the mean of `Phi((x - x_i) / h)`.
    pub fn cdf(&self, x: f64) -> f64 {
        let h = self.bandwidth;
        let acc: f64 = self.samples.iter().map(|&s| std_normal_cdf((x - s) / h)).sum();
        (acc / self.samples.len() as f64).clamp(0.0, 1.0)
    }

    /// Densities at every query point, in order.
    pub fn pdf_batch(&self, xs: &[f64]) -> Result<Vec<f64>> {
        self.pdf_batch_with(xs, Execution::default())
    }

    pub fn pdf_batch_with(&self, xs: &[f64], exec: Execution) -> Result<Vec<f64>> {
        check_finite(xs, "density queries")?;
        Ok(exec::map(xs, exec, |&x| self.pdf_unchecked(x)))
    }

    /// An evenly spaced grid over `[min - pad*h, max + pad*h]` with `points` nodes.
    pub fn grid(&self, points: usize, pad: f64) -> Result<Vec<f64>> {
        if points < 2 {
            return Err(Error::InvalidArgument(format!(
                "grid needs at least 2 points, got {points}"
            )));
        }
        let (lo, hi) = self.range();
        let lo = lo - pad * self.bandwidth;
        let hi = hi + pad * self.bandwidth;
        let step = (hi - lo) / (points - 1) as f64;
        Ok((0..points)
            .map(|i| if i + 1 == points { hi } else { lo + step * i as f64 })
            .collect())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    fn simpson(f: impl Fn(f64) -> f64, lo: f64, hi: f64, nodes: usize) -> f64 {
        assert!(nodes % 2 == 1);
        let step = (hi - lo) / (nodes - 1) as f64;
        let mut acc = f(lo) + f(hi);
        for i in 1..nodes - 1 {
            let w = if i % 2 == 1 { 4.0 } else { 2.0 };
            acc += w * f(lo + step * i as f64);
        }
        acc * step / 3.0
    }

    #[test]
    fn scott_values() {
        assert_eq!(scotts_bandwidth(1, 1).unwrap(), 1.0);
        // exp/ln route instead of powf
        let oracle = |n: f64| (-(n.ln()) / 5.0).exp();
        assert_relative_eq!(scotts_bandwidth(100, 1).unwrap(), oracle(100.0), epsilon = 1e-12);
        assert_relative_eq!(scotts_bandwidth(100, 1).unwrap(), 0.398_107_170_553_497_2, epsilon = 1e-12);
        assert_relative_eq!(scotts_bandwidth(20640, 1).unwrap(), oracle(20640.0), epsilon = 1e-12);
        assert!((scotts_bandwidth(20640, 1).unwrap() - 0.1371).abs() < 5e-5);
    }

    #[test]
    fn scott_rejects_zero() {
        assert!(scotts_bandwidth(0, 1).is_err());
        assert!(scotts_bandwidth(5, 0).is_err());
    }

    #[test]
    fn scott_strictly_decreasing() {
        for d in 1..4 {
            for n in 1..2000 {
                assert!(scotts_bandwidth(n + 1, d).unwrap() < scotts_bandwidth(n, d).unwrap());
            }
        }
    }

    #[test]
    fn fit_bandwidths() {
        assert_eq!(DensityModel::fit(vec![5.0], None).unwrap().bandwidth(), 1.0);
        let zeros = DensityModel::fit(vec![0.0; 100], None).unwrap();
        assert_relative_eq!(zeros.bandwidth(), 0.398_107_170_553_497_2, epsilon = 1e-12);
        assert_eq!(zeros.len(), 100);
        let m = DensityModel::fit(vec![1.0, 2.0, 3.0], Some(0.5)).unwrap();
        assert_eq!(m.bandwidth(), 0.5);
    }

    #[test]
    fn fit_errors() {
        assert!(matches!(DensityModel::fit(Vec::<f64>::new(), None), Err(Error::Empty(_))));
        assert!(matches!(
            DensityModel::fit(vec![1.0, f64::NAN], None),
            Err(Error::NonFinite { index: 1, .. })
        ));
        assert!(DensityModel::fit(vec![1.0], Some(0.0)).is_err());
        assert!(DensityModel::fit(vec![1.0], Some(-1.0)).is_err());
        assert!(DensityModel::fit(vec![1.0], Some(f64::INFINITY)).is_err());
    }

    #[test]
    fn pdf_hand_values() {
        let one = DensityModel::fit(vec![0.0], Some(1.0)).unwrap();
        let phi0 = 1.0 / (2.0 * std::f64::consts::PI).sqrt();
        assert_relative_eq!(one.pdf(0.0).unwrap(), phi0, epsilon = 1e-15);
        assert!((one.pdf(0.0).unwrap() - 0.398_942_3).abs() < 1e-7);

        let two = DensityModel::fit(vec![-1.0, 1.0], Some(1.0)).unwrap();
        let phi1 = (-0.5f64).exp() * phi0;
        assert_relative_eq!(two.pdf(0.0).unwrap(), phi1, epsilon = 1e-15);
        assert!((two.pdf(0.0).unwrap() - 0.241_970_7).abs() < 1e-7);

        let far = one.pdf(50.0).unwrap();
        assert!(far >= 0.0 && far < 1e-300);
        assert!(one.pdf(f64::NAN).is_err());
    }

    #[test]
    fn batch_matches_scalar() {
        let m = DensityModel::fit(vec![0.0], Some(1.0)).unwrap();
        assert!(m.pdf_batch(&[]).unwrap().is_empty());
        let b = m.pdf_batch(&[0.0, 0.0]).unwrap();
        assert_eq!(b, vec![m.pdf(0.0).unwrap(); 2]);
        assert!(m.pdf_batch(&[0.0, f64::INFINITY]).is_err());
    }

    #[test]
    fn all_identical_samples_are_a_proper_bump() {
        let m = DensityModel::fit(vec![3.0; 50], None).unwrap();
        let h = m.bandwidth();
        let mass = simpson(|x| m.pdf_unchecked(x), 3.0 - 10.0 * h, 3.0 + 10.0 * h, 10_001);
        assert!((mass - 1.0).abs() < 1e-6);
        assert_relative_eq!(m.pdf(3.0).unwrap(), m.peak_bound(), epsilon = 1e-15);
    }

    #[test]
    fn cdf_limits() {
        let m = DensityModel::fit(vec![-1.0, 0.5, 2.0], Some(0.3)).unwrap();
        assert!(m.cdf(-100.0) < 1e-12);
        assert!((m.cdf(100.0) - 1.0).abs() < 1e-12);
        // symmetric pair around 0 gives cdf(0) = 1/2
        let s = DensityModel::fit(vec![-1.0, 1.0], Some(0.7)).unwrap();
        assert!((s.cdf(0.0) - 0.5).abs() < 1e-15);
    }

    #[test]
    fn serde_round_trip_validates() {
        let m = DensityModel::fit(vec![1.0, 2.0], Some(0.25)).unwrap();
        let text = serde_json::to_string(&m).unwrap();
        assert_eq!(serde_json::from_str::<DensityModel>(&text).unwrap(), m);
        let auto: DensityModel = serde_json::from_str(r#"{"samples":[4.0]}"#).unwrap();
        assert_eq!(auto.bandwidth(), 1.0);
        assert!(serde_json::from_str::<DensityModel>(r#"{"samples":[]}"#).is_err());
    }

    fn samples_strategy() -> impl Strategy<Value = Vec<f64>> {
        prop::collection::vec(-50.0f64..50.0, 1..40)
    }

    proptest! {
        #[test]
        fn nonnegative_and_bounded(samples in samples_strategy(), h in 0.05f64..5.0) {
            let m = DensityModel::fit(samples, Some(h)).unwrap();
            let grid = m.grid(1000, 10.0).unwrap();
            for x in grid {
                let p = m.pdf(x).unwrap();
                prop_assert!(p >= 0.0);
                prop_assert!(p <= m.peak_bound() + 1e-12);
            }
        }

        #[test]
        fn integrates_to_one(samples in samples_strategy(), h in 0.2f64..5.0) {
            let m = DensityModel::fit(samples, Some(h)).unwrap();
            let (lo, hi) = m.range();
            let mass = simpson(|x| m.pdf_unchecked(x), lo - 10.0 * h, hi + 10.0 * h, 10_001);
            prop_assert!((mass - 1.0).abs() < 1e-6, "mass {}", mass);
        }

        #[test]
        fn translation_equivariant(samples in samples_strategy(), c in -100.0f64..100.0, x in -60.0f64..60.0) {
            let base = DensityModel::fit(samples.clone(), None).unwrap();
            let shifted = DensityModel::fit(samples.iter().map(|s| s + c).collect::<Vec<_>>(), None).unwrap();
            prop_assert_eq!(base.bandwidth(), shifted.bandwidth());
            let a = base.pdf(x).unwrap();
            let b = shifted.pdf(x + c).unwrap();
            prop_assert!((a - b).abs() <= 1e-12);
        }

        #[test]
        fn batch_equals_scalar_map(samples in samples_strategy(), xs in prop::collection::vec(-80.0f64..80.0, 0..50)) {
            let m = DensityModel::fit(samples, None).unwrap();
            let scalar: Vec<f64> = xs.iter().map(|&x| m.pdf(x).unwrap()).collect();
            prop_assert_eq!(&m.pdf_batch_with(&xs, Execution::Sequential).unwrap(), &scalar);
            prop_assert_eq!(&m.pdf_batch_with(&xs, Execution::Parallel).unwrap(), &scalar);
        }
    }
}
