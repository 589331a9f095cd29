//! Sample statistics over microsecond durations: summaries, equal-width
//! histograms, and maximum-likelihood exponential and uniform fits scored by
//! the Kolmogorov–Smirnov statistic.

use serde::{Deserialize, Serialize};

use crate::error::StatsError;

pub const DEFAULT_BINS: usize = 20;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SampleSummary {
    pub count: usize,
    pub sum_us: u64,
    pub min_us: u64,
    /// Worst case.
    pub max_us: u64,
    pub mean_us: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Histogram {
    /// `counts.len() + 1` ascending edges, in microseconds.
    pub edges_us: Vec<f64>,
    pub counts: Vec<u64>,
}

impl Histogram {
    pub fn total(&self) -> u64 {
        self.counts.iter().sum()
    }

    /// `(lower, upper, count)` per bin.
    pub fn bins(&self) -> impl Iterator<Item = (f64, f64, u64)> + '_ {
        self.counts.iter().enumerate().map(|(i, &c)| (self.edges_us[i], self.edges_us[i + 1], c))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ExponentialFit {
    pub rate_per_us: f64,
    pub log_likelihood: f64,
    pub ks: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct UniformFit {
    pub lower_us: u64,
    pub upper_us: u64,
    pub ks: f64,
}

pub fn summarize(samples: &[u64]) -> Result<SampleSummary, StatsError> {
    let (&first, rest) = samples.split_first().ok_or(StatsError::EmptySample)?;
    let (mut min, mut max, mut sum) = (first, first, first);
    for &x in rest {
        min = min.min(x);
        max = max.max(x);
        sum += x;
    }
    Ok(SampleSummary { count: samples.len(), sum_us: sum, min_us: min, max_us: max, mean_us: sum as f64 / samples.len() as f64 })
}

/// Equal-width bins over `[min, max]`; the maximum lands in the last bin.
///
/// When every sample is equal there is no range to divide, so the result is
/// a single bin `[min, min + 1)` holding everything.
pub fn histogram(samples: &[u64], bins: usize) -> Result<Histogram, StatsError> {
    if bins == 0 {
        return Err(StatsError::ZeroBins);
    }
    let summary = summarize(samples)?;
    let (min, max) = (summary.min_us, summary.max_us);
    if min == max {
        return Ok(Histogram { edges_us: vec![min as f64, min as f64 + 1.0], counts: vec![samples.len() as u64] });
    }
    let width = (max - min) as f64 / bins as f64;
    let edges_us = (0..=bins)
        .map(|i| if i == bins { max as f64 } else { min as f64 + width * i as f64 })
        .collect();
    let mut counts = vec![0u64; bins];
    for &x in samples {
        let idx = (((x - min) as f64 / width).floor() as usize).min(bins - 1);
        counts[idx] += 1;
    }
    Ok(Histogram { edges_us, counts })
}

/// Largest gap between the empirical CDF of `samples` and `cdf`.
///
/// For sorted samples x₁..xₙ this is the maximum over i of
/// `max(|i/n − F(xᵢ)|, |(i−1)/n − F(xᵢ)|)`.
pub fn ks_statistic(samples: &[f64], cdf: impl Fn(f64) -> f64) -> Result<f64, StatsError> {
    if samples.is_empty() {
        return Err(StatsError::EmptySample);
    }
    let mut sorted = samples.to_vec();
    sorted.sort_by(f64::total_cmp);
    let n = sorted.len() as f64;
    let d = sorted.iter().enumerate().fold(0.0f64, |d, (i, &x)| {
        let f = cdf(x);
        let above = ((i + 1) as f64 / n - f).abs();
        let below = (i as f64 / n - f).abs();
        d.max(above).max(below)
    });
    Ok(d.clamp(0.0, 1.0))
}

fn as_f64(samples: &[u64]) -> Vec<f64> {
    samples.iter().map(|&x| x as f64).collect()
}

/// Maximum-likelihood exponential fit: `rate = n / Σx = 1 / mean`.
pub fn fit_exponential(samples: &[u64]) -> Result<ExponentialFit, StatsError> {
    if samples.is_empty() {
        return Err(StatsError::EmptySample);
    }
    if let Some(&bad) = samples.iter().find(|&&x| x == 0) {
        return Err(StatsError::NonPositiveSample(bad));
    }
    let n = samples.len() as f64;
    let sum: u64 = samples.iter().sum();
    let rate = n / sum as f64;
    let log_likelihood = n * rate.ln() - rate * sum as f64;
    let ks = ks_statistic(&as_f64(samples), |x| 1.0 - (-rate * x).exp())?;
    Ok(ExponentialFit { rate_per_us: rate, log_likelihood, ks })
}

/// Maximum-likelihood uniform fit: the support is `[min, max]`.
pub fn fit_uniform(samples: &[u64]) -> Result<UniformFit, StatsError> {
    let summary = summarize(samples)?;
    let (lower, upper) = (summary.min_us, summary.max_us);
    let ks = if lower == upper {
        0.0
    } else {
        let span = (upper - lower) as f64;
        ks_statistic(&as_f64(samples), |x| ((x - lower as f64) / span).clamp(0.0, 1.0))?
    };
    Ok(UniformFit { lower_us: lower, upper_us: upper, ks })
}
