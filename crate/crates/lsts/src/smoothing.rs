//! One-sided kernel estimation of trend and scale, and the fitted vs.
//! predictive residuals used by the model-based predictor.

use serde::Serialize;

use crate::series::TimeSeries;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum KernelFamily {
    Epanechnikov,
    Triangular,
    Uniform,
}

/// Kernel with compact support on [-1, 1] and a bandwidth in time-index
/// units. Window membership is |t - t_i| <= b.
#[derive(Debug, Clone, Copy)]
pub struct KernelSpec {
    pub family: KernelFamily,
    pub bandwidth_b: f64,
}

impl KernelSpec {
    pub fn new(family: KernelFamily, bandwidth_b: f64) -> Result<Self> {
        if !(bandwidth_b >= 2.0 && bandwidth_b.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "bandwidth must be >= 2, got {bandwidth_b}"
            )));
        }
        Ok(Self { family, bandwidth_b })
    }

    pub fn epanechnikov(bandwidth_b: f64) -> Result<Self> {
        Self::new(KernelFamily::Epanechnikov, bandwidth_b)
    }

    pub(crate) fn k(&self, u: f64) -> f64 {
        let a = u.abs();
        if a > 1.0 {
            return 0.0;
        }
        match self.family {
            KernelFamily::Epanechnikov => 0.75 * (1.0 - a * a),
            KernelFamily::Triangular => 1.0 - a,
            KernelFamily::Uniform => 0.5,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum FitMode {
    NwRegular,
    NwPredictive,
    LlRegular,
    LlPredictive,
}

impl FitMode {
    /// Predictive (delete-one) modes exclude the current observation from
    /// every window.
    pub fn is_predictive(self) -> bool {
        matches!(self, FitMode::NwPredictive | FitMode::LlPredictive)
    }

    pub fn is_local_linear(self) -> bool {
        matches!(self, FitMode::LlRegular | FitMode::LlPredictive)
    }
}

/// One-sided trend/scale fit over t = 1..n+1.
///
/// Estimates at t <= b use the shrinking head window (the same formula with
/// fewer points); they exist so bootstrap pseudo-series can be rebuilt over
/// the full index range. Residuals are only formed for t >= floor(b)+1, where
/// the window is fully grown.
#[derive(Debug, Clone)]
pub struct TrendFit {
    pub mode: FitMode,
    pub heteroscedastic: bool,
    pub kernel: KernelSpec,
    /// `mu_hat[i]` estimates μ at time t = i+1, for i = 0..=n (slot n is the
    /// boundary point t = n+1).
    pub mu_hat: Vec<f64>,
    pub sigma_hat: Vec<f64>,
    /// Residuals for series positions `resid_start..n-1` (times b+1..n).
    pub residuals: Vec<f64>,
    /// 0-based series position of the first residual (= floor(b)).
    pub resid_start: usize,
    pub sigma_floor: f64,
}

impl TrendFit {
    /// μ̂ at 1-based time t in 1..=n+1.
    pub fn mu_at(&self, t: usize) -> f64 {
        self.mu_hat[t - 1]
    }

    pub fn sigma_at(&self, t: usize) -> f64 {
        self.sigma_hat[t - 1]
    }

    /// Residual at 1-based time t, if that index has one.
    pub fn residual_at(&self, t: usize) -> Option<f64> {
        (t - 1).checked_sub(self.resid_start).and_then(|j| self.residuals.get(j).copied())
    }
}

/// Boundary extrapolation: the pair (μ̂(n+1), σ̂(n+1)). Regular and
/// predictive windows coincide there.
pub fn extrapolate(fit: &TrendFit) -> (f64, f64) {
    (*fit.mu_hat.last().unwrap(), *fit.sigma_hat.last().unwrap())
}

pub fn fit_trend(
    series: &TimeSeries,
    kernel: KernelSpec,
    mode: FitMode,
    heteroscedastic: bool,
) -> Result<TrendFit> {
    fit_trend_values(&series.values, kernel, mode, heteroscedastic)
}

pub fn fit_trend_values(
    values: &[f64],
    kernel: KernelSpec,
    mode: FitMode,
    heteroscedastic: bool,
) -> Result<TrendFit> {
    let n = values.len();
    let b = kernel.bandwidth_b;
    if (n as f64) <= b + 2.0 {
        return Err(Error::InsufficientData { needed: b as usize + 3, got: n });
    }
    let scale = crate::stats::sd(values);
    let sigma_floor = 1e-6 * if scale > 0.0 { scale } else { 1.0 };

    let mut mu_hat = Vec::with_capacity(n + 1);
    let mut sigma_hat = Vec::with_capacity(n + 1);
    for i_eval in 0..=n {
        let (mu, m2) = local_moments(values, kernel, mode, i_eval);
        mu_hat.push(mu);
        if heteroscedastic {
            sigma_hat.push((m2 - mu * mu).max(sigma_floor * sigma_floor).sqrt());
        } else {
            sigma_hat.push(1.0);
        }
    }

    let resid_start = b.floor() as usize;
    let residuals: Vec<f64> = (resid_start..n)
        .map(|i| (values[i] - mu_hat[i]) / sigma_hat[i])
        .collect();
    if residuals.iter().any(|w| !w.is_finite()) {
        return Err(Error::Degenerate("non-finite residual after trend fit".into()));
    }
    Ok(TrendFit {
        mode,
        heteroscedastic,
        kernel,
        mu_hat,
        sigma_hat,
        residuals,
        resid_start,
        sigma_floor,
    })
}

/// One-sided window of source positions for evaluation slot `i_eval`
/// (time t = i_eval+1). Predictive windows exclude position i_eval itself.
/// A window that would be empty (head of the series in predictive mode)
/// falls back to the first min(3, n) observations.
pub(crate) fn window_bounds(i_eval: usize, predictive: bool, b: f64, n: usize) -> (usize, usize) {
    let offset = usize::from(predictive);
    if i_eval < offset {
        return (0, usize::min(2, n - 1));
    }
    let hi = usize::min(i_eval - offset, n - 1);
    let lo = (i_eval as f64 - b).ceil().max(0.0) as usize;
    (usize::min(lo, hi), hi)
}

/// First two weighted local moments (μ̂, M̂) at one evaluation slot.
fn local_moments(values: &[f64], kernel: KernelSpec, mode: FitMode, i_eval: usize) -> (f64, f64) {
    let n = values.len();
    let b = kernel.bandwidth_b;
    let (lo, hi) = window_bounds(i_eval, mode.is_predictive(), b, n);
    if mode.is_local_linear() {
        // Local-linear weights w_j = K_j (s_2 - d_j s_1). The printed
        // denominator guard n^{-2} doubles as the rank-deficiency threshold:
        // below it (or with < 3 positive-weight points) we use the NW ratio,
        // keeping affine reproduction exact elsewhere.
        let mut s1 = 0.0;
        let mut s2 = 0.0;
        let mut positive = 0usize;
        for j in lo..=hi {
            let d = i_eval as f64 - j as f64;
            let k = kernel.k(d / b);
            if k > 0.0 {
                positive += 1;
            }
            s1 += k * d;
            s2 += k * d * d;
        }
        if positive >= 3 {
            let mut sw = 0.0;
            let mut swy = 0.0;
            let mut swy2 = 0.0;
            for j in lo..=hi {
                let d = i_eval as f64 - j as f64;
                let k = kernel.k(d / b);
                let w = k * (s2 - d * s1);
                sw += w;
                swy += w * values[j];
                swy2 += w * values[j] * values[j];
            }
            if sw > 1.0 / (n as f64 * n as f64) {
                return (swy / sw, swy2 / sw);
            }
        }
    }
    // Nadaraya-Watson ratio (also the local-linear fallback).
    let mut sk = 0.0;
    let mut sky = 0.0;
    let mut sky2 = 0.0;
    for j in lo..=hi {
        let d = i_eval as f64 - j as f64;
        let k = kernel.k(d / b);
        sk += k;
        sky += k * values[j];
        sky2 += k * values[j] * values[j];
    }
    (sky / sk, sky2 / sk)
}
