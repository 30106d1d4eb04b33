//! One-sided time-varying marginal CDF estimators and their quantile
//! inverses.
//!
//! Four local families are provided: the kernel-weighted empirical CDF
//! (step), its smoothed version, the Hansen-truncated local linear variants,
//! and the monotone local linear estimator that clips the possibly
//! sign-changing local linear density at zero and renormalizes. A global
//! (non-local) empirical variant covers the stationary case.

use serde::Serialize;

use crate::smoothing::{window_bounds, KernelSpec};
use crate::stats::{norm_cdf, norm_pdf, sd};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum DistKind {
    LcStep,
    LcSmooth,
    LlhStep,
    LlhSmooth,
    Llm,
}

impl DistKind {
    /// Kinds whose CDF is continuous in y (needs the secondary bandwidth h0).
    pub fn is_smooth(self) -> bool {
        !matches!(self, DistKind::LcStep | DistKind::LlhStep)
    }

    /// Step kinds put all mass on observed values, so their quantile inverse
    /// returns observed values and discrete data stay discrete.
    pub fn is_step(self) -> bool {
        matches!(self, DistKind::LcStep | DistKind::LlhStep)
    }
}

/// Which observations enter the window at time t: the fitted window includes
/// Y_t itself, the predictive one stops at t-1.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum TMode {
    Fitted,
    Predictive,
}

/// An estimated marginal CDF at one time index, immutable once built.
///
/// Step and smooth kinds store the window points (sorted) with normalized
/// nonnegative weights; the monotone local linear kind stores its CDF on an
/// explicit support grid.
#[derive(Debug, Clone)]
pub struct DistributionEstimate {
    pub kind: DistKind,
    /// 1-based evaluation time, up to n+1 (the one-step-ahead boundary).
    pub t_eval: usize,
    pub t_mode: TMode,
    pub bandwidth_b: f64,
    pub h0: f64,
    /// Window values sorted ascending (empty for LLM).
    points: Vec<f64>,
    /// Normalized weights parallel to `points`.
    weights: Vec<f64>,
    /// Prefix sums of `weights` (step kinds; empty otherwise).
    cum_weights: Vec<f64>,
    /// Equispaced support grid (LLM only).
    pub support_grid: Vec<f64>,
    /// CDF values on `support_grid`, nondecreasing from 0 to 1 (LLM only).
    pub cdf_grid: Vec<f64>,
}

/// Number of grid points for the monotone local linear estimator.
const LLM_GRID: usize = 512;

/// One-sided window for a distribution estimate at 1-based time t, with the
/// short head windows widened to at least min(3, n) points so every index of
/// the series can be uniformized.
fn dist_window(t: usize, t_mode: TMode, b: f64, n: usize) -> (usize, usize) {
    let (lo, mut hi) = window_bounds(t - 1, t_mode == TMode::Predictive, b, n);
    hi = hi.max(usize::min(2, n - 1));
    (usize::min(lo, hi), hi)
}

/// Estimate the marginal CDF of Y_t from the one-sided window before t.
/// `t` may be n+1 for the one-step-ahead boundary. Smooth kinds and LLM
/// require h0 > 0.
pub fn estimate_cdf(
    values: &[f64],
    t: usize,
    kind: DistKind,
    t_mode: TMode,
    kernel: KernelSpec,
    h0: f64,
) -> Result<DistributionEstimate> {
    let n = values.len();
    if n == 0 {
        return Err(Error::InsufficientData { needed: 1, got: 0 });
    }
    if t == 0 || t > n + 1 {
        return Err(Error::InvalidParameter(format!(
            "evaluation time {t} outside 1..={}",
            n + 1
        )));
    }
    if kind.is_smooth() && !(h0 > 0.0 && h0.is_finite()) {
        return Err(Error::InvalidParameter(format!(
            "secondary bandwidth h0 must be positive, got {h0}"
        )));
    }
    let b = kernel.bandwidth_b;
    let (lo, hi) = dist_window(t, t_mode, b, n);
    let window: Vec<f64> = values[lo..=hi].to_vec();
    let dist: Vec<f64> = (lo..=hi).map(|j| t as f64 - (j + 1) as f64).collect();
    let kern: Vec<f64> = dist.iter().map(|d| kernel.k(d / b)).collect();

    if let DistKind::Llm = kind {
        return build_llm(kind, t, t_mode, b, h0, &window, &dist, &kern);
    }

    let raw = match kind {
        DistKind::LcStep | DistKind::LcSmooth => kern.clone(),
        DistKind::LlhStep | DistKind::LlhSmooth => hansen_weights(&dist, &kern, b)
            .unwrap_or_else(|| kern.clone()),
        DistKind::Llm => unreachable!(),
    };
    let total: f64 = raw.iter().sum();
    if !(total > 0.0) {
        return Err(Error::Degenerate(format!(
            "all distribution weights vanished at t={t}"
        )));
    }

    let mut pw: Vec<(f64, f64)> = window.iter().zip(raw.iter()).map(|(&y, &w)| (y, w / total)).collect();
    pw.sort_by(|a, b| a.0.total_cmp(&b.0));
    let points: Vec<f64> = pw.iter().map(|p| p.0).collect();
    let weights: Vec<f64> = pw.iter().map(|p| p.1).collect();
    let cum_weights = if kind.is_step() {
        let mut acc = 0.0;
        weights
            .iter()
            .map(|w| {
                acc += w;
                acc
            })
            .collect()
    } else {
        Vec::new()
    };
    Ok(DistributionEstimate {
        kind,
        t_eval: t,
        t_mode,
        bandwidth_b: b,
        h0,
        points,
        weights,
        cum_weights,
        support_grid: Vec::new(),
        cdf_grid: Vec::new(),
    })
}

/// Hansen-truncated local linear weights: w_i^◇ = w_i(1 − β̂ d_i) clipped at
/// zero, with w_i = K(d_i/b)/b and β̂ = Σw_i d_i / Σw_i d_i². Returns None
/// when the truncation leaves nothing (caller falls back to local constant).
fn hansen_weights(dist: &[f64], kern: &[f64], b: f64) -> Option<Vec<f64>> {
    let mut s1 = 0.0;
    let mut s2 = 0.0;
    for (d, k) in dist.iter().zip(kern.iter()) {
        let w = k / b;
        s1 += w * d;
        s2 += w * d * d;
    }
    let beta = if s2 > 0.0 { s1 / s2 } else { 0.0 };
    let adj: Vec<f64> = dist
        .iter()
        .zip(kern.iter())
        .map(|(d, k)| {
            let w = k / b;
            if beta * d > 1.0 {
                0.0
            } else {
                w * (1.0 - beta * d)
            }
        })
        .collect();
    if adj.iter().sum::<f64>() > 0.0 {
        Some(adj)
    } else {
        None
    }
}

/// Monotone local linear estimator: local linear density of the smoothed
/// indicators, clipped at zero, renormalized on an equispaced grid, and
/// integrated by the trapezoid rule.
#[allow(clippy::too_many_arguments)]
fn build_llm(
    kind: DistKind,
    t: usize,
    t_mode: TMode,
    b: f64,
    h0: f64,
    window: &[f64],
    dist: &[f64],
    kern: &[f64],
) -> Result<DistributionEstimate> {
    // local linear weights w_j = (K_j/b)(s2 − d_j s1); fall back to the plain
    // kernel weights when the window cannot support a linear fit
    let positive = kern.iter().filter(|k| **k > 0.0).count();
    let weights: Vec<f64> = if positive >= 3 {
        let mut s1 = 0.0;
        let mut s2 = 0.0;
        for (d, k) in dist.iter().zip(kern.iter()) {
            s1 += k / b * d;
            s2 += k / b * d * d;
        }
        dist.iter()
            .zip(kern.iter())
            .map(|(d, k)| k / b * (s2 - d * s1))
            .collect()
    } else {
        kern.to_vec()
    };

    let wsum: f64 = weights.iter().sum();
    if wsum == 0.0 {
        return Err(Error::Degenerate(format!(
            "local linear weights sum to zero at t={t}"
        )));
    }
    let lo_y = window.iter().cloned().fold(f64::INFINITY, f64::min);
    let hi_y = window.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let sigma_w = sd(window);
    let pad = (4.0 * h0 * sigma_w).max(4.0 * h0).max(1e-8);
    let (a, z) = (lo_y - pad, hi_y + pad);
    let step = (z - a) / (LLM_GRID - 1) as f64;

    let mut density: Vec<f64> = (0..LLM_GRID)
        .map(|g| {
            let y = a + step * g as f64;
            let mut acc = 0.0;
            for (w, yy) in weights.iter().zip(window.iter()) {
                acc += w * norm_pdf((y - yy) / h0) / h0;
            }
            (acc / wsum).max(0.0)
        })
        .collect();

    // trapezoid mass, then renormalize the density so the CDF tops out at 1
    let mut mass = 0.0;
    for g in 1..LLM_GRID {
        mass += 0.5 * (density[g - 1] + density[g]) * step;
    }
    if !(mass > 0.0) {
        return Err(Error::Degenerate(format!(
            "monotone local linear density has no positive mass at t={t}"
        )));
    }
    for d in &mut density {
        *d /= mass;
    }
    let mut cdf_grid = Vec::with_capacity(LLM_GRID);
    let mut acc = 0.0;
    cdf_grid.push(0.0);
    for g in 1..LLM_GRID {
        acc += 0.5 * (density[g - 1] + density[g]) * step;
        cdf_grid.push(acc.min(1.0));
    }
    let support_grid: Vec<f64> = (0..LLM_GRID).map(|g| a + step * g as f64).collect();
    Ok(DistributionEstimate {
        kind,
        t_eval: t,
        t_mode,
        bandwidth_b: b,
        h0,
        points: Vec::new(),
        weights: Vec::new(),
        cum_weights: Vec::new(),
        support_grid,
        cdf_grid,
    })
}

/// The plain (non-local) empirical CDF over all observations, optionally
/// smoothed with bandwidth h0.
pub fn global_empirical(values: &[f64], smooth: bool, h0: f64) -> Result<DistributionEstimate> {
    let n = values.len();
    if n < 2 {
        return Err(Error::InsufficientData { needed: 2, got: n });
    }
    let kind = if smooth { DistKind::LcSmooth } else { DistKind::LcStep };
    if smooth && !(h0 > 0.0 && h0.is_finite()) {
        return Err(Error::InvalidParameter(format!(
            "secondary bandwidth h0 must be positive, got {h0}"
        )));
    }
    let mut points = values.to_vec();
    points.sort_by(f64::total_cmp);
    let w = 1.0 / n as f64;
    let weights = vec![w; n];
    let cum_weights = if smooth {
        Vec::new()
    } else {
        (1..=n).map(|i| i as f64 * w).collect()
    };
    Ok(DistributionEstimate {
        kind,
        t_eval: n,
        t_mode: TMode::Fitted,
        bandwidth_b: n as f64,
        h0,
        points,
        weights,
        cum_weights,
        support_grid: Vec::new(),
        cdf_grid: Vec::new(),
    })
}

impl DistributionEstimate {
    /// Evaluate the CDF at y; always in [0, 1].
    pub fn cdf(&self, y: f64) -> f64 {
        match self.kind {
            DistKind::LcStep | DistKind::LlhStep => {
                // mass at points ≤ y
                let idx = self.points.partition_point(|p| *p <= y);
                if idx == 0 {
                    0.0
                } else {
                    self.cum_weights[idx - 1].min(1.0)
                }
            }
            DistKind::LcSmooth | DistKind::LlhSmooth => {
                let mut acc = 0.0;
                for (p, w) in self.points.iter().zip(self.weights.iter()) {
                    acc += w * norm_cdf((y - p) / self.h0);
                }
                acc.clamp(0.0, 1.0)
            }
            DistKind::Llm => {
                let grid = &self.support_grid;
                if y <= grid[0] {
                    return 0.0;
                }
                if y >= *grid.last().unwrap() {
                    return 1.0;
                }
                let step = grid[1] - grid[0];
                let pos = (y - grid[0]) / step;
                let i = (pos.floor() as usize).min(grid.len() - 2);
                let frac = pos - i as f64;
                (self.cdf_grid[i] + frac * (self.cdf_grid[i + 1] - self.cdf_grid[i]))
                    .clamp(0.0, 1.0)
            }
        }
    }

    /// Smallest and largest values carrying mass (grid ends for LLM).
    pub fn support_range(&self) -> (f64, f64) {
        if self.kind == DistKind::Llm {
            (self.support_grid[0], *self.support_grid.last().unwrap())
        } else {
            (*self.points.first().unwrap(), *self.points.last().unwrap())
        }
    }

    /// Distinct support points of a step-kind estimate, if their count stays
    /// within `cap`; None for smooth kinds or richer alphabets.
    pub fn discrete_support(&self, cap: usize) -> Option<Vec<f64>> {
        if !self.kind.is_step() {
            return None;
        }
        let mut distinct: Vec<f64> = Vec::new();
        for p in &self.points {
            if distinct.last().map_or(true, |l| *l != *p) {
                distinct.push(*p);
            }
            if distinct.len() > cap {
                return None;
            }
        }
        Some(distinct)
    }

    /// Probability mass on the exact value y (step kinds).
    pub fn point_mass(&self, y: f64) -> f64 {
        let mut acc = 0.0;
        for (p, w) in self.points.iter().zip(self.weights.iter()) {
            if *p == y {
                acc += w;
            }
        }
        acc
    }
}

/// Generalized inverse D^{-1}(β) = inf{y : D(y) ≥ β}.
///
/// Step kinds walk the sorted support; smooth kinds bisect over an interval
/// padded by 8·h0 beyond the window range; LLM interpolates its CDF grid.
pub fn quantile_inverse(est: &DistributionEstimate, beta: f64) -> f64 {
    let beta = beta.clamp(0.0, 1.0);
    match est.kind {
        DistKind::LcStep | DistKind::LlhStep => {
            // tolerance shields against roundoff in the normalized prefix sums
            let target = beta - 1e-12;
            let idx = est.cum_weights.partition_point(|c| *c < target);
            est.points[idx.min(est.points.len() - 1)]
        }
        DistKind::LcSmooth | DistKind::LlhSmooth => {
            let (p_lo, p_hi) = est.support_range();
            let mut lo = p_lo - 8.0 * est.h0;
            let mut hi = p_hi + 8.0 * est.h0;
            if est.cdf(lo) >= beta {
                return lo;
            }
            if est.cdf(hi) < beta {
                return hi;
            }
            for _ in 0..60 {
                let mid = 0.5 * (lo + hi);
                if est.cdf(mid) >= beta {
                    hi = mid;
                } else {
                    lo = mid;
                }
            }
            0.5 * (lo + hi)
        }
        DistKind::Llm => {
            let idx = est.cdf_grid.partition_point(|c| *c < beta);
            if idx == 0 {
                return est.support_grid[0];
            }
            if idx >= est.cdf_grid.len() {
                return *est.support_grid.last().unwrap();
            }
            let (c0, c1) = (est.cdf_grid[idx - 1], est.cdf_grid[idx]);
            let (g0, g1) = (est.support_grid[idx - 1], est.support_grid[idx]);
            if c1 > c0 {
                g0 + (beta - c0) / (c1 - c0) * (g1 - g0)
            } else {
                g0
            }
        }
    }
}
