//! Sample statistics, autocorrelation diagnostics and weighted averages.

#[allow(unused_imports)]
use num_traits::Float;
use alloc::vec::Vec;


use crate::error::{Error, Result};

/// Mean and standard error of the mean (sample standard deviation / √n).
pub fn mean_se(xs: &[f64]) -> (f64, f64) {
    let n = xs.len();
    if n == 0 {
        return (f64::NAN, f64::NAN);
    }
    let mean = xs.iter().sum::<f64>() / n as f64;
    if n < 2 {
        return (mean, f64::NAN);
    }
    let ss: f64 = xs.iter().map(|x| (x - mean) * (x - mean)).sum();
    (mean, (ss / (n - 1) as f64 / n as f64).sqrt())
}

pub fn variance(xs: &[f64]) -> f64 {
    let (_, se) = mean_se(xs);
    se * se * xs.len() as f64
}

/// Integrated autocorrelation time and effective sample size of a series.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Autocorrelation {
    /// `½ + Σ_{k≥1} ρ_k`, i.e. 0.5 for an uncorrelated series.
    pub iact: f64,
    /// `len / (2·iact)`.
    pub ess: f64,
    /// Set for a constant series, in which case `iact = len/2`.
    pub degenerate: bool,
}

/// Geyer's initial-positive-sequence estimate of the integrated
/// autocorrelation time.
pub fn effective_sample_size(series: &[f64]) -> Result<Autocorrelation> {
    if series.len() < 100 {
        return Err(Error::Parameter("series needs at least 100 entries"));
    }
    if series.iter().any(|x| !x.is_finite()) {
        return Err(Error::Parameter("series must be finite"));
    }
    Ok(autocorrelation(series))
}

/// Same estimate without the length precondition; short series get the
/// degenerate sentinel.
pub(crate) fn autocorrelation(series: &[f64]) -> Autocorrelation {
    let n = series.len();
    let sentinel = Autocorrelation { iact: n as f64 / 2.0, ess: 1.0, degenerate: true };
    if n < 4 {
        return sentinel;
    }
    let mean = series.iter().sum::<f64>() / n as f64;
    let centered: Vec<f64> = series.iter().map(|x| x - mean).collect();
    let autocov = |lag: usize| -> f64 {
        centered[..n - lag].iter().zip(&centered[lag..]).map(|(a, b)| a * b).sum::<f64>() / n as f64
    };
    let c0 = autocov(0);
    if !(c0 > 0.0) || c0 <= f64::EPSILON * f64::EPSILON * mean * mean {
        return sentinel;
    }
    // Pair sums Γ_m = ρ_{2m} + ρ_{2m+1}, kept while positive and forced
    // monotone non-increasing.
    let mut tau = 0.0;
    let mut prev_pair = f64::INFINITY;
    let mut m = 0;
    while 2 * m + 1 < n {
        let pair = (autocov(2 * m) + autocov(2 * m + 1)) / c0;
        if pair <= 0.0 {
            break;
        }
        let pair = pair.min(prev_pair);
        tau += pair;
        prev_pair = pair;
        m += 1;
    }
    // τ = 1 + 2Σρ_k = 2ΣΓ_m − 1; iact = τ/2.
    let iact = (tau - 0.5).max(0.5);
    Autocorrelation { iact, ess: n as f64 / (2.0 * iact), degenerate: false }
}

/// Self-normalized weighted mean of `values` with log-weights `log_w`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WeightedRatio {
    pub value: f64,
    /// Delta-method standard error of the ratio estimator.
    pub std_error: f64,
    /// Kish effective sample size `(Σw)² / Σw²`.
    pub weight_ess: f64,
}

pub fn weighted_ratio(log_w: &[f64], values: &[f64]) -> WeightedRatio {
    let max = log_w.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let w: Vec<f64> = log_w.iter().map(|l| (l - max).exp()).collect();
    let sw: f64 = w.iter().sum();
    let sw2: f64 = w.iter().map(|x| x * x).sum();
    let value = w.iter().zip(values).map(|(w, v)| w * v).sum::<f64>() / sw;
    let var = w.iter().zip(values).map(|(w, v)| w * w * (v - value) * (v - value)).sum::<f64>() / (sw * sw);
    WeightedRatio { value, std_error: var.sqrt(), weight_ess: sw * sw / sw2 }
}

/// Plain mean of `exp(log_w)` evaluated with a common scale `exp(max)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExpMean {
    pub log_scale: f64,
    /// Mean and standard error of `exp(log_w − log_scale)`.
    pub scaled_mean: f64,
    pub scaled_se: f64,
    pub weight_ess: f64,
}

impl ExpMean {
    pub fn log_value(&self) -> f64 {
        self.log_scale + self.scaled_mean.ln()
    }
}

pub fn exp_mean(log_w: &[f64]) -> ExpMean {
    let log_scale = log_w.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let w: Vec<f64> = log_w.iter().map(|l| (l - log_scale).exp()).collect();
    let (scaled_mean, scaled_se) = mean_se(&w);
    let sw: f64 = w.iter().sum();
    let sw2: f64 = w.iter().map(|x| x * x).sum();
    ExpMean { log_scale, scaled_mean, scaled_se, weight_ess: sw * sw / sw2 }
}

/// Standard normal upper tail `1 − Φ(x)`.
pub fn normal_tail(x: f64) -> f64 {
    0.5 * libm::erfc(x / core::f64::consts::SQRT_2)
}
