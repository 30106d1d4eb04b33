//! The invertible transform at the heart of the model-free route:
//! uniformize each observation through its estimated time-varying marginal,
//! Gaussianize with the normal quantile function, and whiten with the
//! Cholesky factor of the estimated covariance of the Gaussianized series.
//! The inverse map and the one-step-ahead predictive function g are built
//! from the same state.

use serde::Serialize;

use crate::covariance::{default_band_l, flat_top_taper, pd_correct, ToeplitzCovariance};
use crate::dist_estimation::{
    estimate_cdf, quantile_inverse, DistKind, DistributionEstimate, TMode,
};
use crate::linear_prediction::{
    ar_autocov_extend, default_p_max, fit_ar_yw, sample_autocov, AutocovSeq,
};
use crate::smoothing::KernelSpec;
use crate::stats::{norm_cdf, norm_quantile};
use crate::{Error, Result};

/// How the covariance of the Gaussianized series is estimated: banded
/// flat-top tapering of the sample autocovariance, or the autocovariance
/// implied by a causal AR fit.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum CovKind {
    FlatTop,
    ArImplied,
}

#[derive(Debug, Clone)]
pub struct MfConfig {
    pub dist_kind: DistKind,
    pub t_mode: TMode,
    pub kernel: KernelSpec,
    /// Secondary bandwidth for smooth marginal estimators.
    pub h0: f64,
    pub cov_kind: CovKind,
    /// Taper band override; None applies the empirical band rule.
    pub band_l: Option<f64>,
}

/// Clamp bounds keeping the uniformized values away from 0 and 1 so the
/// normal quantile stays finite: [1/(4n), 1 - 1/(4n)].
pub fn u_clamp_bounds(n: usize) -> (f64, f64) {
    let c = 1.0 / (4.0 * n as f64);
    (c, 1.0 - c)
}

/// The fitted transform: everything needed to map new innovation vectors
/// back to the data scale and to evaluate the predictive function.
/// Immutable once built.
#[derive(Debug, Clone)]
pub struct MfState {
    pub config: MfConfig,
    pub values: Vec<f64>,
    /// Uniformized series, clamped inside (0,1).
    pub u: Vec<f64>,
    /// Gaussianized series Z_t = Φ^{-1}(U_t).
    pub z: Vec<f64>,
    /// Whitened innovations ε = C^{-1} Z.
    pub eps: Vec<f64>,
    /// Covariance of Z (dim n), the leading block of `cov_ext`.
    pub cov: ToeplitzCovariance,
    /// Covariance extended to dim n+1 for the prediction step.
    pub cov_ext: ToeplitzCovariance,
    /// Marginal estimates at t = 1..n, in order.
    pub dists: Vec<DistributionEstimate>,
    /// Marginal estimate at the boundary t = n+1.
    pub dist_np1: DistributionEstimate,
    /// Last Cholesky row (c_1, .., c_{n+1}) of `cov_ext`.
    pub c_row: Vec<f64>,
    /// Fixed linear-prediction term ξ = Σ_{i≤n} c_i ε_i.
    pub xi: f64,
}

/// Build the dim-n and dim-(n+1) covariances of the Gaussianized series.
/// The dim-n matrix is taken as the leading principal block of the extended
/// one so the two share shrinkage and reflection coefficients exactly.
fn build_cov(z: &[f64], config: &MfConfig) -> Result<(ToeplitzCovariance, ToeplitzCovariance)> {
    let n = z.len();
    let acov = sample_autocov(z, n - 1)?;
    if acov.is_degenerate() {
        // a (near-)constant Gaussianized series carries no correlation
        // information; treat it as white so bootstrap resamples of flat
        // stretches stay usable
        let mut g = vec![0.0; n + 1];
        g[0] = 1.0;
        let ext = pd_correct(
            &AutocovSeq {
                gamma: g,
                n_source: n,
            },
            n + 1,
        )?;
        return Ok((ext.leading_principal(n), ext));
    }
    let ext = match config.cov_kind {
        CovKind::FlatTop => {
            let l = config.band_l.unwrap_or_else(|| default_band_l(&acov));
            if !(l > 0.0) {
                return Err(Error::InvalidParameter(format!("taper band must be positive, got {l}")));
            }
            let tapered = flat_top_taper(&acov, l);
            let cov0 = pd_correct(&tapered, n)?;
            // the sample autocovariance at lag n is zero by construction, so
            // the tapered extension appends a zero
            let mut ext = cov0.extend_to_np1(None)?;
            ext.band_l = l;
            ext
        }
        CovKind::ArImplied => {
            let fit = fit_ar_yw(z, default_p_max(n))?;
            let implied = ar_autocov_extend(&fit, &acov, n);
            let seq_n = AutocovSeq {
                gamma: implied.gamma[..n].to_vec(),
                n_source: n,
            };
            let cov0 = pd_correct(&seq_n, n)?;
            cov0.extend_to_np1(Some(implied.gamma[n]))?
        }
    };
    let cov = ext.leading_principal(n);
    Ok((cov, ext))
}

/// Fit the composite transform H_n: Y ↦ ε on the observed series.
pub fn forward(values: &[f64], config: &MfConfig) -> Result<MfState> {
    let n = values.len();
    let b = config.kernel.bandwidth_b;
    if (n as f64) <= b + 5.0 {
        return Err(Error::InsufficientData {
            needed: b as usize + 6,
            got: n,
        });
    }
    let (c_lo, c_hi) = u_clamp_bounds(n);
    let mut u = Vec::with_capacity(n);
    let mut z = Vec::with_capacity(n);
    let mut dists = Vec::with_capacity(n);
    for t in 1..=n {
        let est = estimate_cdf(
            values,
            t,
            config.dist_kind,
            config.t_mode,
            config.kernel,
            config.h0,
        )?;
        let ut = est.cdf(values[t - 1]).clamp(c_lo, c_hi);
        u.push(ut);
        z.push(norm_quantile(ut));
        dists.push(est);
    }
    let dist_np1 = estimate_cdf(
        values,
        n + 1,
        config.dist_kind,
        config.t_mode,
        config.kernel,
        config.h0,
    )?;
    let (cov, cov_ext) = build_cov(&z, config)?;
    from_parts(config.clone(), values.to_vec(), u, z, cov, cov_ext, dists, dist_np1)
}

/// Assemble the state from prepared stages; computes ε, the extended
/// Cholesky row, and ξ.
#[allow(clippy::too_many_arguments)]
pub(crate) fn from_parts(
    config: MfConfig,
    values: Vec<f64>,
    u: Vec<f64>,
    z: Vec<f64>,
    cov: ToeplitzCovariance,
    cov_ext: ToeplitzCovariance,
    dists: Vec<DistributionEstimate>,
    dist_np1: DistributionEstimate,
) -> Result<MfState> {
    let n = values.len();
    if cov.dim != n || cov_ext.dim != n + 1 {
        return Err(Error::InvalidParameter(
            "covariance dimensions must be n and n+1".into(),
        ));
    }
    let eps = cov.whiten_solve(&z);
    if eps.iter().any(|e| !e.is_finite()) {
        return Err(Error::Degenerate("whitening produced non-finite innovations".into()));
    }
    let c_row = cov_ext.cholesky_last_row();
    let xi = c_row[..n].iter().zip(eps.iter()).map(|(c, e)| c * e).sum();
    Ok(MfState {
        config,
        values,
        u,
        z,
        eps,
        cov,
        cov_ext,
        dists,
        dist_np1,
        c_row,
        xi,
    })
}

impl MfState {
    pub fn n(&self) -> usize {
        self.values.len()
    }

    /// Cholesky diagonal entry scaling the future innovation; strictly
    /// positive.
    pub fn c_np1(&self) -> f64 {
        *self.c_row.last().unwrap()
    }

    /// The predictive function g(x) = D̂_{n+1}^{-1}(Φ(ξ + c_{n+1} x)),
    /// nondecreasing in x.
    pub fn g(&self, x: f64) -> f64 {
        quantile_inverse(&self.dist_np1, norm_cdf(self.xi + self.c_np1() * x))
    }

    /// Map an innovation vector back to the data scale through the fitted
    /// transform: Z = Cε, U = Φ(Z), Y_t = D̂_t^{-1}(U_t).
    pub fn inverse(&self, eps_vector: &[f64]) -> Vec<f64> {
        assert_eq!(eps_vector.len(), self.n());
        let z = self.cov.unwhiten(eps_vector);
        z.iter()
            .enumerate()
            .map(|(i, zt)| quantile_inverse(&self.dists[i], norm_cdf(*zt)))
            .collect()
    }

    /// Apply the fitted transform to an arbitrary same-length series (not
    /// necessarily the one it was estimated on) and return its innovations.
    /// Used to condition re-estimated transforms on the original data.
    pub fn transform_series(&self, values: &[f64]) -> Vec<f64> {
        let n = self.n();
        assert_eq!(values.len(), n);
        let (c_lo, c_hi) = u_clamp_bounds(n);
        let z: Vec<f64> = values
            .iter()
            .enumerate()
            .map(|(i, y)| norm_quantile(self.dists[i].cdf(*y).clamp(c_lo, c_hi)))
            .collect();
        self.cov.whiten_solve(&z)
    }

    /// The ξ term of the predictive function recomputed against a different
    /// innovation vector: Σ_{i≤n} c_i ε_i.
    pub fn xi_from(&self, eps_vector: &[f64]) -> f64 {
        let n = self.n();
        assert_eq!(eps_vector.len(), n);
        self.c_row[..n]
            .iter()
            .zip(eps_vector.iter())
            .map(|(c, e)| c * e)
            .sum()
    }

    /// One-step-ahead value from a full innovation vector and a future
    /// innovation: Z_{n+1} = Σ c_i ε_i + c_{n+1}·ε_future, mapped through
    /// Φ and the boundary marginal's inverse.
    pub fn inverse_next(&self, eps_future: f64, eps_vector: &[f64]) -> f64 {
        let n = self.n();
        assert_eq!(eps_vector.len(), n);
        let mut z_next = self.c_row[n] * eps_future;
        for (c, e) in self.c_row[..n].iter().zip(eps_vector.iter()) {
            z_next += c * e;
        }
        quantile_inverse(&self.dist_np1, norm_cdf(z_next))
    }
}
