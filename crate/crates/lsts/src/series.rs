//! Core data types, synthetic generators, CSV ingestion, and evaluation
//! metrics.

use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha12Rng;
use rand_distr::StandardNormal;
use serde::Serialize;

use crate::{Error, Result};

/// A univariate series in time order, optionally carrying an age/time axis.
#[derive(Debug, Clone)]
pub struct TimeSeries {
    pub values: Vec<f64>,
    /// Strictly monotone time stamps, when the data source provides them.
    pub ages: Option<Vec<f64>>,
    pub label: String,
}

impl TimeSeries {
    pub fn new(values: Vec<f64>, ages: Option<Vec<f64>>, label: impl Into<String>) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::InsufficientData { needed: 1, got: 0 });
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::Degenerate("series contains NaN or Inf".into()));
        }
        if let Some(a) = &ages {
            if a.len() != values.len() {
                return Err(Error::InvalidParameter(format!(
                    "ages length {} does not match values length {}",
                    a.len(),
                    values.len()
                )));
            }
            let increasing = a.windows(2).all(|w| w[1] > w[0]);
            let decreasing = a.windows(2).all(|w| w[1] < w[0]);
            if !(increasing || decreasing) {
                return Err(Error::Degenerate("ages are not strictly monotone".into()));
            }
        }
        Ok(Self { values, ages, label: label.into() })
    }

    pub fn from_values(values: Vec<f64>, label: impl Into<String>) -> Result<Self> {
        Self::new(values, None, label)
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum GeneratorKind {
    /// Sinusoid trend plus an AR(5) noise process.
    Ar5Sine,
    /// Amplified sinusoid trend plus a threshold AR(1) noise process.
    Tar1Sine,
}

/// Configuration for the two simulation designs.
///
/// Realization streams are keyed by `(seed, realization)`, so batches can be
/// generated in any order, or in parallel, without changing the draws.
#[derive(Debug, Clone)]
pub struct GeneratorSpec {
    pub kind: GeneratorKind,
    pub n: usize,
    pub seed: u64,
    pub trend_amplitude: f64,
    /// Innovation standard deviation.
    pub tau: f64,
    /// AR coefficients for `Ar5Sine`.
    pub ar_coeffs: Vec<f64>,
    /// Threshold recursion parameters for `Tar1Sine`:
    /// `W_t = 1 + alpha*W_{t-1} + e_t` when `W_{t-1} <= r`, else
    /// `W_t = -1 + beta*W_{t-1} + gamma*e_t`.
    pub tar_alpha: f64,
    pub tar_beta: f64,
    pub tar_r: f64,
    pub tar_gamma: f64,
    /// Steps discarded before sampling so W starts near its stationary law.
    pub burn_in: usize,
}

impl GeneratorSpec {
    pub fn ar5_sine(n: usize, seed: u64) -> Self {
        Self {
            kind: GeneratorKind::Ar5Sine,
            n,
            seed,
            trend_amplitude: 1.0,
            tau: 0.14,
            ar_coeffs: vec![0.5, 0.1, 0.1, 0.1, 0.1],
            tar_alpha: 0.5,
            tar_beta: -0.6,
            tar_r: 0.6,
            tar_gamma: 1.0,
            burn_in: 500,
        }
    }

    pub fn tar1_sine(n: usize, seed: u64) -> Self {
        Self {
            kind: GeneratorKind::Tar1Sine,
            n,
            seed,
            trend_amplitude: 5.0,
            tau: 0.4,
            ar_coeffs: Vec::new(),
            tar_alpha: 0.5,
            tar_beta: -0.6,
            tar_r: 0.6,
            tar_gamma: 1.0,
            burn_in: 500,
        }
    }

    fn validate(&self) -> Result<()> {
        if self.n < 50 {
            return Err(Error::InsufficientData { needed: 50, got: self.n });
        }
        if !(self.tau >= 0.0 && self.tau.is_finite()) {
            return Err(Error::InvalidParameter(format!("tau must be >= 0, got {}", self.tau)));
        }
        if self.kind == GeneratorKind::Ar5Sine {
            if self.ar_coeffs.is_empty() {
                return Err(Error::InvalidParameter("AR design needs coefficients".into()));
            }
            if !ar_is_causal(&self.ar_coeffs) {
                return Err(Error::NonCausal);
            }
        }
        Ok(())
    }
}

/// Causality test via the step-down (Schur-Cohn) recursion: the filter is
/// causal iff every reflection coefficient has modulus < 1.
fn ar_is_causal(phi: &[f64]) -> bool {
    let mut a = phi.to_vec();
    while let Some(&kappa) = a.last() {
        if !(kappa.abs() < 1.0) {
            return false;
        }
        let p = a.len();
        if p == 1 {
            break;
        }
        let denom = 1.0 - kappa * kappa;
        let prev: Vec<f64> = (0..p - 1).map(|j| (a[j] + kappa * a[p - 2 - j]) / denom).collect();
        a = prev;
    }
    true
}

/// Draw one realization of the configured design.
///
/// `Y_t = amplitude * sin(2*pi*a_t) + W_t` with `a_t = (t-1)/n`.
pub fn generate(spec: &GeneratorSpec, realization: u64) -> Result<TimeSeries> {
    spec.validate()?;
    let mut rng = ChaCha12Rng::seed_from_u64(spec.seed);
    rng.set_stream(realization);
    let w = match spec.kind {
        GeneratorKind::Ar5Sine => gen_ar(spec, &mut rng),
        GeneratorKind::Tar1Sine => gen_tar(spec, &mut rng),
    };
    let n = spec.n as f64;
    let values: Vec<f64> = w
        .iter()
        .enumerate()
        .map(|(i, wt)| {
            let a = i as f64 / n;
            spec.trend_amplitude * (2.0 * std::f64::consts::PI * a).sin() + wt
        })
        .collect();
    TimeSeries::new(values, None, format!("{:?}-r{}", spec.kind, realization))
}

fn gen_ar(spec: &GeneratorSpec, rng: &mut ChaCha12Rng) -> Vec<f64> {
    let p = spec.ar_coeffs.len();
    let mut hist = vec![0.0; p];
    let mut out = Vec::with_capacity(spec.n);
    for step in 0..spec.burn_in + spec.n {
        let e: f64 = rng.sample::<f64, _>(StandardNormal) * spec.tau;
        let mut w = e;
        for (i, phi) in spec.ar_coeffs.iter().enumerate() {
            w += phi * hist[i];
        }
        hist.rotate_right(1);
        hist[0] = w;
        if step >= spec.burn_in {
            out.push(w);
        }
    }
    out
}

fn gen_tar(spec: &GeneratorSpec, rng: &mut ChaCha12Rng) -> Vec<f64> {
    let mut w = 0.0;
    let mut out = Vec::with_capacity(spec.n);
    for step in 0..spec.burn_in + spec.n {
        let e: f64 = rng.sample::<f64, _>(StandardNormal) * spec.tau;
        w = if w <= spec.tar_r {
            1.0 + spec.tar_alpha * w + e
        } else {
            -1.0 + spec.tar_beta * w + spec.tar_gamma * e
        };
        if step >= spec.burn_in {
            out.push(w);
        }
    }
    out
}

/// Aggregated scores for a batch of one-step-ahead predictions.
#[derive(Debug, Clone, Serialize)]
pub struct EvalMetrics {
    pub bias: f64,
    pub mse: f64,
    /// Fraction of truths covered by their interval, when intervals were made.
    pub cvr: Option<f64>,
    pub mean_length: Option<f64>,
    pub sd_length: Option<f64>,
    pub n_realizations: usize,
}

pub fn score(
    predictions: &[f64],
    truths: &[f64],
    intervals: Option<&[(f64, f64)]>,
) -> Result<EvalMetrics> {
    if predictions.is_empty() {
        return Err(Error::InsufficientData { needed: 1, got: 0 });
    }
    if predictions.len() != truths.len() {
        return Err(Error::InvalidParameter(format!(
            "{} predictions vs {} truths",
            predictions.len(),
            truths.len()
        )));
    }
    let n = predictions.len() as f64;
    let bias = predictions.iter().zip(truths).map(|(p, t)| p - t).sum::<f64>() / n;
    let mse = predictions.iter().zip(truths).map(|(p, t)| (p - t) * (p - t)).sum::<f64>() / n;
    let (mut cvr, mut mean_length, mut sd_length) = (None, None, None);
    if let Some(iv) = intervals {
        if iv.len() != truths.len() {
            return Err(Error::InvalidParameter(format!(
                "{} intervals vs {} truths",
                iv.len(),
                truths.len()
            )));
        }
        let covered = iv.iter().zip(truths).filter(|((lo, hi), t)| lo <= t && *t <= hi).count();
        cvr = Some(covered as f64 / n);
        let lengths: Vec<f64> = iv.iter().map(|(lo, hi)| hi - lo).collect();
        mean_length = Some(crate::stats::mean(&lengths));
        sd_length = Some(crate::stats::sd(&lengths));
    }
    Ok(EvalMetrics { bias, mse, cvr, mean_length, sd_length, n_realizations: predictions.len() })
}

/// Parse comma- or whitespace-delimited text with one (value) or two
/// (age, value) numeric columns. Lines starting with '#' are skipped, as are
/// non-numeric header lines before the first data row. A file whose age
/// column strictly decreases is reversed so the index increases with the age
/// axis.
pub fn parse_csv(text: &str) -> Result<TimeSeries> {
    let mut ages: Vec<f64> = Vec::new();
    let mut values: Vec<f64> = Vec::new();
    let mut columns: Option<usize> = None;
    for (idx, raw) in text.lines().enumerate() {
        let line_no = idx + 1;
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let tokens: Vec<&str> = if line.contains(',') {
            line.split(',').map(str::trim).filter(|t| !t.is_empty()).collect()
        } else {
            line.split_whitespace().collect()
        };
        let parsed: Option<Vec<f64>> = tokens.iter().map(|t| t.parse::<f64>().ok()).collect();
        let Some(nums) = parsed else {
            if columns.is_none() && tokens.iter().all(|t| t.parse::<f64>().is_err()) {
                // Header line before any data.
                continue;
            }
            return Err(Error::Parse { line: line_no, message: format!("non-numeric row: {line:?}") });
        };
        match columns {
            None => {
                if !(nums.len() == 1 || nums.len() == 2) {
                    return Err(Error::Parse {
                        line: line_no,
                        message: format!("expected 1 or 2 columns, got {}", nums.len()),
                    });
                }
                columns = Some(nums.len());
            }
            Some(c) if c != nums.len() => {
                return Err(Error::Parse {
                    line: line_no,
                    message: format!("expected {c} columns, got {}", nums.len()),
                });
            }
            _ => {}
        }
        if nums.len() == 2 {
            ages.push(nums[0]);
            values.push(nums[1]);
        } else {
            values.push(nums[0]);
        }
    }
    if values.len() < 2 {
        return Err(Error::InsufficientData { needed: 2, got: values.len() });
    }
    if ages.is_empty() {
        return TimeSeries::new(values, None, "csv");
    }
    let decreasing = ages.windows(2).all(|w| w[1] < w[0]);
    if decreasing {
        ages.reverse();
        values.reverse();
    }
    TimeSeries::new(values, Some(ages), "csv")
}

pub fn ingest_csv(path: impl AsRef<Path>) -> Result<TimeSeries> {
    let text = std::fs::read_to_string(&path)?;
    let mut series = parse_csv(&text)?;
    if let Some(name) = path.as_ref().file_stem().and_then(|s| s.to_str()) {
        series.label = name.to_string();
    }
    Ok(series)
}

/// Render the series back to CSV with round-trip-exact number formatting.
pub fn emit_csv(series: &TimeSeries) -> String {
    let mut out = String::new();
    match &series.ages {
        Some(ages) => {
            for (a, v) in ages.iter().zip(&series.values) {
                out.push_str(&format!("{a},{v}\n"));
            }
        }
        None => {
            for v in &series.values {
                out.push_str(&format!("{v}\n"));
            }
        }
    }
    out
}

pub fn write_csv(series: &TimeSeries, path: impl AsRef<Path>) -> Result<()> {
    std::fs::write(path, emit_csv(series))?;
    Ok(())
}
