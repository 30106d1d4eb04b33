//! Sample autocovariance, Yule-Walker AR fitting with AIC order selection,
//! the AR-type best linear predictor, and the AR-implied autocovariance
//! extension.

use crate::{Error, Result};

/// Autocovariances γ_0..γ_K with the divisor-n convention.
#[derive(Debug, Clone)]
pub struct AutocovSeq {
    pub gamma: Vec<f64>,
    /// Length of the series the sequence was computed from.
    pub n_source: usize,
}

impl AutocovSeq {
    /// A degenerate sequence (constant input) has no usable variance.
    pub fn is_degenerate(&self) -> bool {
        !(self.gamma[0] > 0.0)
    }

    pub fn max_lag(&self) -> usize {
        self.gamma.len() - 1
    }
}

/// γ̆_k = n^{-1} Σ_{t=1}^{n-k} x_t x_{t+k} on the mean-centered series;
/// zero for k ≥ n.
pub fn sample_autocov(x: &[f64], max_lag: usize) -> Result<AutocovSeq> {
    let n = x.len();
    if n < 2 {
        return Err(Error::InsufficientData { needed: 2, got: n });
    }
    let m = crate::stats::mean(x);
    let c: Vec<f64> = x.iter().map(|v| v - m).collect();
    let mut gamma = vec![0.0; max_lag + 1];
    for (k, g) in gamma.iter_mut().enumerate() {
        if k >= n {
            break;
        }
        let mut s = 0.0;
        for t in 0..n - k {
            s += c[t] * c[t + k];
        }
        *g = s / n as f64;
    }
    Ok(AutocovSeq { gamma, n_source: n })
}

/// Intermediate state of the Levinson-Durbin recursion, advanced one order at
/// a time. Shared by the AR fit here and the Toeplitz routines in
/// `covariance`.
#[derive(Debug, Clone)]
pub(crate) struct Levinson {
    /// φ^{(k)} for the current order k (first k entries valid).
    pub phi: Vec<f64>,
    /// Innovation variances v_0..v_k so far.
    pub v: Vec<f64>,
    /// Reflection coefficients κ_1..κ_k so far.
    pub kappa: Vec<f64>,
}

impl Levinson {
    pub fn new(gamma0: f64) -> Self {
        Self { phi: Vec::new(), v: vec![gamma0], kappa: Vec::new() }
    }

    pub fn order(&self) -> usize {
        self.kappa.len()
    }

    /// Advance from order k-1 to k using γ_k. Returns the new innovation
    /// variance (non-positive means the sequence stopped being PD here).
    pub fn step(&mut self, gamma: &[f64]) -> f64 {
        let k = self.order() + 1;
        let v_prev = *self.v.last().unwrap();
        let mut acc = gamma[k];
        for (j, ph) in self.phi.iter().enumerate() {
            acc -= ph * gamma[k - 1 - j];
        }
        let kappa = acc / v_prev;
        reflect_update(&mut self.phi, kappa);
        let v = v_prev * (1.0 - kappa * kappa);
        self.v.push(v);
        self.kappa.push(kappa);
        v
    }
}

/// In-place order bump of Yule-Walker coefficients:
/// φ^{(k)}_j = φ^{(k-1)}_j − κ·φ^{(k-1)}_{k−j}, then φ^{(k)}_k = κ.
pub(crate) fn reflect_update(phi: &mut Vec<f64>, kappa: f64) {
    let k = phi.len() + 1;
    let half = (k - 1) / 2;
    for j in 0..half {
        let a = phi[j];
        let b = phi[k - 2 - j];
        phi[j] = a - kappa * b;
        phi[k - 2 - j] = b - kappa * a;
    }
    if k >= 2 && (k - 1) % 2 == 1 {
        phi[half] -= kappa * phi[half];
    }
    phi.push(kappa);
}

/// Run the recursion to the requested order. `None` if the sequence fails
/// positive definiteness before reaching it.
pub(crate) fn levinson_to_order(gamma: &[f64], order: usize) -> Option<Levinson> {
    if !(gamma[0] > 0.0) {
        return None;
    }
    let mut state = Levinson::new(gamma[0]);
    for _ in 0..order {
        if state.step(gamma) <= 0.0 {
            return None;
        }
    }
    Some(state)
}

/// Yule-Walker AR fit with AIC order selection.
#[derive(Debug, Clone)]
pub struct ARFit {
    pub order_p: usize,
    pub phi: Vec<f64>,
    /// Innovation variance τ̂².
    pub tau2: f64,
    /// Residuals V̌ at positions p..len-1 of the input vector.
    pub residuals_v: Vec<f64>,
    /// Position in the input vector of the first residual (= order_p).
    pub resid_offset: usize,
    pub aic: f64,
}

/// Default AIC search ceiling.
pub fn default_p_max(n: usize) -> usize {
    usize::min((10.0 * (n as f64).log10()) as usize, n / 4)
}

/// Fit AR(p), p in 0..=p_max, by Yule-Walker, selecting p by
/// AIC(p) = n·ln(τ̂²_p) + 2p.
pub fn fit_ar_yw(x: &[f64], p_max: usize) -> Result<ARFit> {
    let n = x.len();
    if n <= p_max + 10 {
        return Err(Error::InsufficientData { needed: p_max + 11, got: n });
    }
    let acov = sample_autocov(x, p_max)?;
    if acov.is_degenerate() {
        return Err(Error::Degenerate("zero empirical variance".into()));
    }
    let g = &acov.gamma;
    let nf = n as f64;
    let mut state = Levinson::new(g[0]);
    let mut best_p = 0usize;
    let mut best_aic = nf * g[0].ln();
    for p in 1..=p_max {
        let v = state.step(g);
        if v <= 0.0 {
            break;
        }
        let aic = nf * v.ln() + 2.0 * p as f64;
        if aic < best_aic {
            best_aic = aic;
            best_p = p;
        }
    }
    let fitted = levinson_to_order(g, best_p).ok_or(Error::NotPositiveDefinite)?;
    let phi = fitted.phi.clone();
    let tau2 = *fitted.v.last().unwrap();
    if !(tau2 > 0.0) {
        return Err(Error::Degenerate("non-positive innovation variance".into()));
    }
    let residuals_v: Vec<f64> = (best_p..n)
        .map(|t| {
            let mut v = x[t];
            for (j, ph) in phi.iter().enumerate() {
                v -= ph * x[t - 1 - j];
            }
            v
        })
        .collect();
    Ok(ARFit { order_p: best_p, phi, tau2, residuals_v, resid_offset: best_p, aic: best_aic })
}

/// Ē(W_{n+1} | W) = φ_1·W_n + φ_2·W_{n-1} + …; `recent` is in time order and
/// at least p long.
pub fn ar_predict(fit: &ARFit, recent: &[f64]) -> f64 {
    let m = recent.len();
    assert!(m >= fit.order_p, "need at least p={} recent values, got {m}", fit.order_p);
    fit.phi.iter().enumerate().map(|(j, ph)| ph * recent[m - 1 - j]).sum()
}

/// Extend autocovariances beyond lag p with the AR difference equation
/// γ_k = Σ_i φ_i γ_{k-i}; lags 0..=p are copied from `gamma_head`.
pub fn ar_autocov_extend(fit: &ARFit, gamma_head: &AutocovSeq, max_lag: usize) -> AutocovSeq {
    let p = fit.order_p;
    assert!(gamma_head.gamma.len() > p, "need head autocovariances up to lag p");
    let mut gamma = Vec::with_capacity(max_lag + 1);
    gamma.extend_from_slice(&gamma_head.gamma[..=p.min(max_lag)]);
    for k in gamma.len()..=max_lag {
        let mut g = 0.0;
        for (j, ph) in fit.phi.iter().enumerate() {
            g += ph * gamma[k - 1 - j];
        }
        gamma.push(g);
    }
    AutocovSeq { gamma, n_source: gamma_head.n_source }
}
