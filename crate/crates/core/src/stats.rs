//! Ensemble observables: intensity correlation g², localization level λ,
//! bootstrap uncertainty and amplitude-law classification.

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::RandomStream;

/// Default number of bootstrap resamples.
pub const DEFAULT_REPEATS: usize = 1000;

/// Tolerance on `Σ I = 1` for stored records.
pub const RECORD_SUM_TOLERANCE: f64 = 1e-9;

/// Tolerance on `Σ I = 1` accepted by [`localization_level`].
pub const LAMBDA_SUM_TOLERANCE: f64 = 1e-6;

/// Minimum sample count for amplitude-law classification.
pub const MIN_CLASSIFY_SAMPLES: usize = 50;

/// One disorder realization's output, normalized to unit total intensity.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnsembleRecord {
    pub realization_seed: u64,
    pub n_sites: usize,
    pub excited_site: usize,
    pub couplings: Vec<f64>,
    pub normalized_intensities: Vec<f64>,
}

impl EnsembleRecord {
    /// Build a record from raw output intensities, normalizing them.
    pub fn new(realization_seed: u64, couplings: Vec<f64>, intensities: &[f64], excited_site: usize) -> Result<Self> {
        let normalized_intensities = normalize(intensities)?;
        let record = EnsembleRecord {
            realization_seed,
            n_sites: normalized_intensities.len(),
            excited_site,
            couplings,
            normalized_intensities,
        };
        record.validate()?;
        Ok(record)
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.n_sites;
        if self.normalized_intensities.len() != n {
            return Err(Error::InvalidSamples(format!(
                "record {} has {} intensities for {n} sites",
                self.realization_seed,
                self.normalized_intensities.len()
            )));
        }
        if !self.couplings.is_empty() && self.couplings.len() != n {
            return Err(Error::InvalidSamples(format!(
                "record {} has {} couplings for {n} sites",
                self.realization_seed,
                self.couplings.len()
            )));
        }
        if self.excited_site >= n {
            return Err(Error::InvalidSamples(format!("excited site {} out of range", self.excited_site)));
        }
        if self.normalized_intensities.iter().any(|x| !(x.is_finite() && *x >= 0.0)) {
            return Err(Error::InvalidSamples("intensities must be finite and nonnegative".into()));
        }
        let sum: f64 = self.normalized_intensities.iter().sum();
        if (sum - 1.0).abs() > RECORD_SUM_TOLERANCE {
            return Err(Error::Unnormalized { sum });
        }
        Ok(())
    }

    pub fn excited_intensity(&self) -> f64 {
        self.normalized_intensities[self.excited_site]
    }
}

/// Scale a nonnegative vector to unit sum.
pub fn normalize(intensities: &[f64]) -> Result<Vec<f64>> {
    if intensities.iter().any(|x| !(x.is_finite() && *x >= 0.0)) {
        return Err(Error::InvalidSamples("intensities must be finite and nonnegative".into()));
    }
    let total: f64 = intensities.iter().sum();
    if total <= 0.0 {
        return Err(Error::InvalidSamples("total intensity is zero".into()));
    }
    Ok(intensities.iter().map(|x| x / total).collect())
}

/// `⟨I²⟩ / ⟨I⟩²` over the sample set.
pub fn g2(samples: &[f64]) -> Result<f64> {
    if samples.len() < 2 {
        return Err(Error::InvalidSamples(format!("g2 needs at least 2 samples, got {}", samples.len())));
    }
    let mut s1 = 0.0;
    let mut s2 = 0.0;
    for &x in samples {
        if !(x.is_finite() && x >= 0.0) {
            return Err(Error::InvalidSamples(format!("negative or non-finite intensity {x}")));
        }
        s1 += x;
        s2 += x * x;
    }
    if s1 == 0.0 {
        return Err(Error::InvalidSamples("all samples are zero".into()));
    }
    let n = samples.len() as f64;
    Ok((s2 / n) / (s1 / n).powi(2))
}

/// Excited-site intensities of every record.
pub fn excited_samples(ensemble: &[EnsembleRecord]) -> Vec<f64> {
    ensemble.iter().map(EnsembleRecord::excited_intensity).collect()
}

/// g² at every site, in site order. All records must share a site count.
pub fn per_site_g2(ensemble: &[EnsembleRecord]) -> Result<Vec<f64>> {
    let n = common_site_count(ensemble)?;
    (0..n)
        .map(|site| {
            let samples: Vec<f64> = ensemble.iter().map(|r| r.normalized_intensities[site]).collect();
            g2(&samples)
        })
        .collect()
}

fn common_site_count(ensemble: &[EnsembleRecord]) -> Result<usize> {
    let first = ensemble.first().ok_or_else(|| Error::InvalidSamples("ensemble is empty".into()))?;
    if ensemble.iter().any(|r| r.n_sites != first.n_sites) {
        return Err(Error::InvalidSamples("records have differing site counts".into()));
    }
    Ok(first.n_sites)
}

/// Site-wise ensemble average of the normalized intensities.
pub fn mean_intensities(ensemble: &[EnsembleRecord]) -> Result<Vec<f64>> {
    let n = common_site_count(ensemble)?;
    let mut mean = vec![0.0; n];
    for r in ensemble {
        for (m, x) in mean.iter_mut().zip(&r.normalized_intensities) {
            *m += x;
        }
    }
    let count = ensemble.len() as f64;
    mean.iter_mut().for_each(|m| *m /= count);
    Ok(mean)
}

/// `λ = ½ Σ |I_i − 1/N|`.
pub fn localization_level(mean_intensities: &[f64]) -> Result<f64> {
    if mean_intensities.is_empty() {
        return Err(Error::InvalidSamples("empty intensity vector".into()));
    }
    let sum: f64 = mean_intensities.iter().sum();
    if sum.is_nan() || (sum - 1.0).abs() > LAMBDA_SUM_TOLERANCE {
        return Err(Error::Unnormalized { sum });
    }
    let uniform = 1.0 / mean_intensities.len() as f64;
    Ok(0.5 * mean_intensities.iter().map(|i| (i - uniform).abs()).sum::<f64>())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BootstrapReport {
    pub g2_mean: f64,
    pub g2_std: f64,
    pub resample_size: usize,
    pub repeats: usize,
}

/// Resample the excited-site intensities with replacement `repeats` times,
/// `resample_size` draws each, and summarize g² across the resamples.
/// Repeat `m` draws from `stream.split(m)`.
pub fn bootstrap_g2(
    ensemble: &[EnsembleRecord],
    resample_size: usize,
    repeats: usize,
    stream: &RandomStream,
) -> Result<BootstrapReport> {
    if ensemble.is_empty() {
        return Err(Error::InvalidSamples("ensemble is empty".into()));
    }
    if resample_size < 2 || repeats < 2 {
        return Err(Error::InvalidParameter(format!(
            "bootstrap needs resample_size >= 2 and repeats >= 2, got {resample_size} and {repeats}"
        )));
    }
    bootstrap_samples(&excited_samples(ensemble), resample_size, repeats, stream)
}

/// [`bootstrap_g2`] on a bare sample vector.
pub fn bootstrap_samples(
    samples: &[f64],
    resample_size: usize,
    repeats: usize,
    stream: &RandomStream,
) -> Result<BootstrapReport> {
    if samples.is_empty() {
        return Err(Error::InvalidSamples("no samples".into()));
    }
    if resample_size < 2 || repeats < 2 {
        return Err(Error::InvalidParameter(format!(
            "bootstrap needs resample_size >= 2 and repeats >= 2, got {resample_size} and {repeats}"
        )));
    }
    let values: Vec<f64> = (0..repeats)
        .into_par_iter()
        .map(|m| {
            let mut rng = stream.split(m as u64).rng();
            let mut s1 = 0.0;
            let mut s2 = 0.0;
            for _ in 0..resample_size {
                let x = samples[rng.random_range(0..samples.len())];
                s1 += x;
                s2 += x * x;
            }
            if s1 == 0.0 {
                return Err(Error::InvalidSamples("resample drew only zero intensities".into()));
            }
            let n = resample_size as f64;
            Ok((s2 / n) / (s1 / n).powi(2))
        })
        .collect::<Result<_>>()?;
    let (g2_mean, g2_std) = mean_std(&values);
    Ok(BootstrapReport { g2_mean, g2_std, resample_size, repeats })
}

/// Mean and sample standard deviation (n − 1 denominator; 0 for one value).
pub fn mean_std(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    if values.len() < 2 {
        return (mean, 0.0);
    }
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, var.sqrt())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum AmplitudeLaw {
    RayleighLike,
    GaussianLike,
}

impl std::fmt::Display for AmplitudeLaw {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            AmplitudeLaw::RayleighLike => "rayleigh-like",
            AmplitudeLaw::GaussianLike => "gaussian-like",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AmplitudeClassification {
    pub label: AmplitudeLaw,
    /// Total log-likelihood of the Rayleigh fit minus that of the half-normal fit.
    pub log_likelihood_ratio: f64,
    pub rayleigh_sigma: f64,
    pub half_normal_sigma: f64,
}

/// Maximum-likelihood Rayleigh vs half-normal discrimination for
/// nonnegative amplitudes `|ψ|`.
pub fn classify_amplitude_distribution(amplitudes: &[f64]) -> Result<AmplitudeClassification> {
    if amplitudes.len() < MIN_CLASSIFY_SAMPLES {
        return Err(Error::InvalidSamples(format!(
            "need at least {MIN_CLASSIFY_SAMPLES} amplitudes, got {}",
            amplitudes.len()
        )));
    }
    if amplitudes.iter().any(|a| !(a.is_finite() && *a >= 0.0)) {
        return Err(Error::InvalidSamples("amplitudes must be finite and nonnegative".into()));
    }
    let first = amplitudes[0];
    if amplitudes.iter().all(|&a| a == first) {
        return Err(Error::Degenerate("all amplitudes are equal".into()));
    }
    let n = amplitudes.len() as f64;
    let sum_sq: f64 = amplitudes.iter().map(|a| a * a).sum();
    let sum_ln: f64 = amplitudes.iter().map(|a| a.ln()).sum();

    // Rayleigh: p(a) = a/σ² exp(−a²/2σ²), σ̂² = Σa²/2n.
    let var_r = sum_sq / (2.0 * n);
    let ll_rayleigh = sum_ln - n * var_r.ln() - sum_sq / (2.0 * var_r);
    // Half-normal: p(a) = √(2/π)/σ exp(−a²/2σ²), σ̂² = Σa²/n.
    let var_h = sum_sq / n;
    let ll_half = n * (0.5 * (2.0 / std::f64::consts::PI).ln() - 0.5 * var_h.ln()) - sum_sq / (2.0 * var_h);

    let ratio = ll_rayleigh - ll_half;
    let label = if ratio > 0.0 { AmplitudeLaw::RayleighLike } else { AmplitudeLaw::GaussianLike };
    Ok(AmplitudeClassification {
        label,
        log_likelihood_ratio: ratio,
        rayleigh_sigma: var_r.sqrt(),
        half_normal_sigma: var_h.sqrt(),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Histogram {
    /// `bins + 1` ascending edges.
    pub edges: Vec<f64>,
    pub counts: Vec<usize>,
}

impl Histogram {
    pub fn total(&self) -> usize {
        self.counts.iter().sum()
    }

    /// Probability density per bin, `count / (n · width)`.
    pub fn density(&self) -> Vec<f64> {
        let n = self.total() as f64;
        self.counts.iter().zip(self.edges.windows(2)).map(|(&c, e)| c as f64 / (n * (e[1] - e[0]))).collect()
    }
}

/// Fixed-width histogram with half-open bins `[lo, hi)`, the last bin closed.
/// Without an explicit range the sample extremes are used; a zero-width
/// sample range is widened by ±0.5 so the data lands in one bin.
pub fn histogram(samples: &[f64], bins: usize, range: Option<(f64, f64)>) -> Result<Histogram> {
    if bins == 0 {
        return Err(Error::InvalidParameter("histogram needs at least one bin".into()));
    }
    if samples.iter().any(|x| !x.is_finite()) {
        return Err(Error::InvalidSamples("non-finite sample".into()));
    }
    let (lo, hi) = match range {
        Some(r) => r,
        None => {
            if samples.is_empty() {
                return Err(Error::InvalidParameter("empty range: no samples and no explicit range".into()));
            }
            let lo = samples.iter().copied().fold(f64::INFINITY, f64::min);
            let hi = samples.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            if lo == hi {
                (lo - 0.5, hi + 0.5)
            } else {
                (lo, hi)
            }
        }
    };
    if !(lo.is_finite() && hi.is_finite() && lo < hi) {
        return Err(Error::InvalidParameter(format!("empty histogram range [{lo}, {hi}]")));
    }
    let width = (hi - lo) / bins as f64;
    let edges: Vec<f64> = (0..=bins).map(|k| if k == bins { hi } else { lo + width * k as f64 }).collect();
    let mut counts = vec![0usize; bins];
    for &x in samples {
        if x < lo || x > hi {
            return Err(Error::InvalidSamples(format!("sample {x} outside histogram range [{lo}, {hi}]")));
        }
        let mut k = (((x - lo) / width) as usize).min(bins - 1);
        // Guard float rounding at bin edges.
        while k > 0 && x < edges[k] {
            k -= 1;
        }
        while k + 1 < bins && x >= edges[k + 1] {
            k += 1;
        }
        counts[k] += 1;
    }
    Ok(Histogram { edges, counts })
}
