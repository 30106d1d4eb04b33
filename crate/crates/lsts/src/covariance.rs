//! Banded/tapered Toeplitz autocovariance matrices with a positive-definite
//! correction, plus the triangular operations the whitening transform needs:
//! solving C·ε = z, multiplying by C, and reading off single Cholesky rows.
//!
//! The factorization is never materialized unless asked for: all per-vector
//! operations run off the Levinson reflection coefficients of the (corrected)
//! autocovariance, which costs O(dim²) time and O(dim) memory.

use crate::linear_prediction::{reflect_update, AutocovSeq, Levinson};
use crate::{Error, Result};

/// Relative floor for innovation variances when certifying positive
/// definiteness: every Levinson pivot must stay above γ_0 · this.
const PD_PIVOT_REL: f64 = 1e-10;

/// Trapezoidal taper weight: 1 on [0,1], linear down to 0 on (1,2], 0 after.
fn trapezoid(x: f64) -> f64 {
    let x = x.abs();
    if x <= 1.0 {
        1.0
    } else if x <= 2.0 {
        2.0 - x
    } else {
        0.0
    }
}

/// Apply the flat-top taper with band `band_l` to a sample autocovariance:
/// lag s is scaled by the trapezoid weight at s/band_l, so lags ≤ band_l are
/// kept as-is and lags > 2·band_l vanish.
pub fn flat_top_taper(gamma: &AutocovSeq, band_l: f64) -> AutocovSeq {
    assert!(band_l > 0.0, "taper band must be positive");
    let tapered = gamma
        .gamma
        .iter()
        .enumerate()
        .map(|(s, g)| g * trapezoid(s as f64 / band_l))
        .collect();
    AutocovSeq {
        gamma: tapered,
        n_source: gamma.n_source,
    }
}

/// Empirical band rule: the smallest k ≥ 1 such that the next five
/// autocorrelations |γ_j|/γ_0, j = k+1..k+5, all fall below the threshold
/// 1.96·sqrt(log10(n)/n). Falls back to the largest searchable k when the
/// sequence never settles.
pub fn default_band_l(gamma: &AutocovSeq) -> f64 {
    let g0 = gamma.gamma[0];
    if g0 <= 0.0 {
        return 1.0;
    }
    let n = gamma.n_source.max(2) as f64;
    let thresh = 1.96 * (n.log10() / n).sqrt();
    let max_lag = gamma.max_lag();
    if max_lag < 6 {
        return 1.0;
    }
    let k_hi = max_lag - 5;
    for k in 1..=k_hi {
        let quiet = (k + 1..=k + 5).all(|j| (gamma.gamma[j] / g0).abs() < thresh);
        if quiet {
            return k as f64;
        }
    }
    k_hi as f64
}

/// A dim×dim symmetric Toeplitz matrix Γ with first row `gamma`, stored along
/// with its Levinson recursion output (reflection coefficients and innovation
/// variances), which certifies positive definiteness and drives the
/// triangular solves.
#[derive(Debug, Clone)]
pub struct ToeplitzCovariance {
    /// First row after any PD shrinkage: γ*_0 .. γ*_{dim-1}.
    gamma: Vec<f64>,
    pub dim: usize,
    /// Taper band used upstream (bookkeeping only; dim-1 means "untapered").
    pub band_l: f64,
    /// Off-diagonal shrinkage factor s applied to reach positive definiteness:
    /// γ*_k = (1-s)·γ_k for k ≥ 1. Zero when the input was already PD.
    pub pd_shrink: f64,
    /// Reflection coefficients κ_1..κ_{dim-1} of the corrected sequence.
    kappa: Vec<f64>,
    /// Innovation variances v_0..v_{dim-1}; all > PD_PIVOT_REL·γ*_0.
    v: Vec<f64>,
}

/// Run Levinson on `gamma` (length dim) and return (kappa, v) if every pivot
/// stays above the PD floor.
fn try_levinson(gamma: &[f64]) -> Option<(Vec<f64>, Vec<f64>)> {
    let g0 = gamma[0];
    let floor = PD_PIVOT_REL * g0;
    if !(g0 > 0.0) {
        return None;
    }
    let mut lev = Levinson::new(g0);
    for _ in 1..gamma.len() {
        if lev.step(gamma) <= floor {
            return None;
        }
    }
    Some((lev.kappa, lev.v))
}

/// Shrink the off-diagonal lags of `gamma` toward zero (i.e. the matrix
/// toward γ_0·I) just enough to make the dim×dim Toeplitz matrix positive
/// definite, scanning s ∈ {0, 0.05, .., 1} and keeping the smallest s that
/// passes. The input is zero-padded or truncated to `dim` lags first.
pub fn pd_correct(gamma: &AutocovSeq, dim: usize) -> Result<ToeplitzCovariance> {
    assert!(dim >= 1);
    let g0 = gamma.gamma[0];
    if !(g0 > 0.0) || !g0.is_finite() {
        return Err(Error::Degenerate(
            "autocovariance at lag 0 must be positive and finite".into(),
        ));
    }
    let mut base = vec![0.0; dim];
    for (k, slot) in base.iter_mut().enumerate() {
        *slot = gamma.gamma.get(k).copied().unwrap_or(0.0);
    }
    for step in 0..=20u32 {
        let s = f64::from(step) * 0.05;
        let cand: Vec<f64> = base
            .iter()
            .enumerate()
            .map(|(k, g)| if k == 0 { *g } else { (1.0 - s) * g })
            .collect();
        if let Some((kappa, v)) = try_levinson(&cand) {
            return Ok(ToeplitzCovariance {
                gamma: cand,
                dim,
                band_l: (dim.max(2) - 1) as f64,
                pd_shrink: s,
                kappa,
                v,
            });
        }
    }
    // s = 1 leaves γ_0·I with every pivot equal to γ_0 > 0, so this is
    // unreachable for finite input.
    Err(Error::NotPositiveDefinite)
}

/// Replays the Yule-Walker coefficient vectors φ^{(0)}, φ^{(1)}, .. from
/// stored reflection coefficients, one order per `advance` call.
struct PhiReplay<'a> {
    kappa: &'a [f64],
    phi: Vec<f64>,
}

impl<'a> PhiReplay<'a> {
    fn new(kappa: &'a [f64]) -> Self {
        PhiReplay {
            kappa,
            phi: Vec::with_capacity(kappa.len()),
        }
    }

    /// Coefficients of the current order (initially order 0: empty).
    fn phi(&self) -> &[f64] {
        &self.phi
    }

    fn advance(&mut self) {
        let k = self.phi.len();
        reflect_update(&mut self.phi, self.kappa[k]);
    }
}

impl ToeplitzCovariance {
    /// Corrected first row γ*_0 .. γ*_{dim-1}.
    pub fn gamma(&self) -> &[f64] {
        &self.gamma
    }

    /// Innovation variances of the corrected sequence, v_0..v_{dim-1}.
    pub fn innovation_variances(&self) -> &[f64] {
        &self.v
    }

    /// The top-left dim2×dim2 block, which is again Toeplitz and shares the
    /// leading reflection coefficients, so no recomputation is needed.
    pub fn leading_principal(&self, dim2: usize) -> ToeplitzCovariance {
        assert!(dim2 >= 1 && dim2 <= self.dim);
        ToeplitzCovariance {
            gamma: self.gamma[..dim2].to_vec(),
            dim: dim2,
            band_l: self.band_l,
            pd_shrink: self.pd_shrink,
            kappa: self.kappa[..dim2 - 1].to_vec(),
            v: self.v[..dim2].to_vec(),
        }
    }

    /// Solve C·ε = z for ε, where C is the lower Cholesky factor of Γ.
    /// Runs the innovations filter: ε_t = (z_t − φ^{(t-1)}·z_past)/√v_{t-1}.
    pub fn whiten_solve(&self, z: &[f64]) -> Vec<f64> {
        assert_eq!(z.len(), self.dim, "whiten_solve input length must be dim");
        let mut eps = Vec::with_capacity(self.dim);
        let mut replay = PhiReplay::new(&self.kappa);
        for t in 0..self.dim {
            let phi = replay.phi();
            let mut pred = 0.0;
            for (j, ph) in phi.iter().enumerate() {
                pred += ph * z[t - 1 - j];
            }
            eps.push((z[t] - pred) / self.v[t].sqrt());
            if t + 1 < self.dim {
                replay.advance();
            }
        }
        eps
    }

    /// Multiply ε by the lower Cholesky factor: the inverse of
    /// `whiten_solve`, run as the forward innovations recursion.
    pub fn unwhiten(&self, eps: &[f64]) -> Vec<f64> {
        assert_eq!(eps.len(), self.dim, "unwhiten input length must be dim");
        let mut z = Vec::with_capacity(self.dim);
        let mut replay = PhiReplay::new(&self.kappa);
        for t in 0..self.dim {
            let phi = replay.phi();
            let mut pred = 0.0;
            for (j, ph) in phi.iter().enumerate() {
                pred += ph * z[t - 1 - j];
            }
            z.push(pred + self.v[t].sqrt() * eps[t]);
            if t + 1 < self.dim {
                replay.advance();
            }
        }
        z
    }

    /// Last row (ℓ_1, .., ℓ_dim) of the lower Cholesky factor of Γ, computed
    /// in O(dim²) without forming the factor:
    /// ℓ_s·√v_{s-1} = γ_{dim-s} − Σ_j φ^{(s-1)}_j γ_{dim-s+j}  for s < dim,
    /// and ℓ_dim = √v_{dim-1}.
    pub fn cholesky_last_row(&self) -> Vec<f64> {
        let dim = self.dim;
        let mut row = Vec::with_capacity(dim);
        let mut replay = PhiReplay::new(&self.kappa);
        for s in 1..=dim {
            if s == dim {
                row.push(self.v[dim - 1].sqrt());
                break;
            }
            let phi = replay.phi();
            let mut acc = self.gamma[dim - s];
            for (j, ph) in phi.iter().enumerate() {
                acc -= ph * self.gamma[dim - s + j + 1];
            }
            row.push(acc / self.v[s - 1].sqrt());
            replay.advance();
        }
        row
    }

    /// Append lag dim to the first row (zero under the taper, or an
    /// AR-implied value) and re-certify positive definiteness; in the rare
    /// case the appended lag breaks it, the whole row is re-shrunk and the
    /// combined shrinkage recorded.
    pub fn extend_to_np1(&self, next_gamma: Option<f64>) -> Result<ToeplitzCovariance> {
        let appended = next_gamma.unwrap_or(0.0);
        let mut cand = self.gamma.clone();
        cand.push(appended);
        if let Some((kappa, v)) = try_levinson(&cand) {
            return Ok(ToeplitzCovariance {
                gamma: cand,
                dim: self.dim + 1,
                band_l: self.band_l,
                pd_shrink: self.pd_shrink,
                kappa,
                v,
            });
        }
        let seq = AutocovSeq {
            gamma: cand,
            n_source: self.dim + 1,
        };
        let mut fixed = pd_correct(&seq, self.dim + 1)?;
        fixed.band_l = self.band_l;
        fixed.pd_shrink = 1.0 - (1.0 - self.pd_shrink) * (1.0 - fixed.pd_shrink);
        Ok(fixed)
    }

    /// Full lower Cholesky factor as dense rows. O(dim³); meant for small
    /// dimensions and for cross-checking the streaming operations.
    pub fn dense_cholesky(&self) -> Vec<Vec<f64>> {
        let dim = self.dim;
        let mut c = vec![vec![0.0; dim]; dim];
        for i in 0..dim {
            for j in 0..=i {
                let mut acc = self.gamma[i - j];
                for k in 0..j {
                    acc -= c[i][k] * c[j][k];
                }
                if i == j {
                    c[i][j] = acc.max(0.0).sqrt();
                } else {
                    c[i][j] = acc / c[j][j];
                }
            }
        }
        c
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linear_prediction::{ar_autocov_extend, fit_ar_yw, sample_autocov};
    use rand::Rng;
    use rand::SeedableRng;
    use rand_chacha::ChaCha12Rng;
    use rand_distr::StandardNormal;

    fn seq(gamma: Vec<f64>, n: usize) -> AutocovSeq {
        AutocovSeq {
            gamma,
            n_source: n,
        }
    }

    /// AR(1) autocovariance γ_k = ρ^k / (1 - ρ²) up to max_lag.
    fn ar1_gamma(rho: f64, max_lag: usize) -> Vec<f64> {
        let g0 = 1.0 / (1.0 - rho * rho);
        (0..=max_lag).map(|k| g0 * rho.powi(k as i32)).collect()
    }

    #[test]
    fn trapezoid_regions() {
        assert_eq!(trapezoid(0.5), 1.0);
        assert_eq!(trapezoid(1.0), 1.0);
        assert!((trapezoid(1.5) - 0.5).abs() < 1e-15);
        assert_eq!(trapezoid(2.01), 0.0);
        assert_eq!(trapezoid(-0.5), 1.0);
    }

    #[test]
    fn taper_scales_lags_by_band() {
        // band 2: lag 1 → x=0.5 kept, lag 3 → x=1.5 halved, lag 5 → x=2.5 zeroed
        let g = seq(vec![4.0, 1.0, 1.0, 1.0, 1.0, 1.0], 100);
        let t = flat_top_taper(&g, 2.0);
        assert_eq!(t.gamma[0], 4.0);
        assert_eq!(t.gamma[1], 1.0);
        assert_eq!(t.gamma[2], 1.0);
        assert!((t.gamma[3] - 0.5).abs() < 1e-15);
        assert_eq!(t.gamma[5], 0.0);
    }

    #[test]
    fn taper_with_wide_band_is_identity() {
        let g = seq(vec![2.0, 1.5, -0.3, 0.2, 0.1], 50);
        let t = flat_top_taper(&g, 4.0); // band ≥ max lag
        for (a, b) in g.gamma.iter().zip(t.gamma.iter()) {
            assert_eq!(a, b);
        }
    }

    #[test]
    fn band_rule_finds_cutoff_of_truncated_sequence() {
        // autocorrelation dies after lag 3; rule should return small k
        let n = 1000;
        let mut g = vec![0.0; 40];
        g[0] = 1.0;
        g[1] = 0.6;
        g[2] = 0.3;
        g[3] = 0.15;
        let l = default_band_l(&seq(g, n));
        assert!(l >= 1.0 && l <= 4.0, "band {l}");
    }

    #[test]
    fn pd_correct_keeps_already_pd_input() {
        let cov = pd_correct(&seq(ar1_gamma(0.7, 199), 200), 200).unwrap();
        assert_eq!(cov.pd_shrink, 0.0);
        assert_eq!(cov.dim, 200);
        assert_eq!(cov.gamma()[1], ar1_gamma(0.7, 199)[1]);
    }

    #[test]
    fn pd_correct_shrinks_singular_input() {
        // all-ones: rank-one Toeplitz matrix, needs strictly positive shrink
        let cov = pd_correct(&seq(vec![1.0; 5], 5), 5).unwrap();
        assert!(cov.pd_shrink > 0.0);
        // independent PD check: dense Cholesky reconstructs Γ*
        let c = cov.dense_cholesky();
        for i in 0..5 {
            assert!(c[i][i] > 0.0);
            for j in 0..5 {
                let mut acc = 0.0;
                for k in 0..5 {
                    acc += c[i][k] * c[j][k];
                }
                let want = cov.gamma()[(i as isize - j as isize).unsigned_abs()];
                assert!((acc - want).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn pd_correct_rejects_nonpositive_variance() {
        assert!(pd_correct(&seq(vec![0.0, 0.0], 10), 2).is_err());
        assert!(pd_correct(&seq(vec![-1.0], 10), 1).is_err());
    }

    #[test]
    fn last_row_of_identity() {
        let mut g = vec![0.0; 6];
        g[0] = 1.0;
        let cov = pd_correct(&seq(g, 10), 6).unwrap();
        let row = cov.cholesky_last_row();
        assert_eq!(row.len(), 6);
        for l in &row[..5] {
            assert_eq!(*l, 0.0);
        }
        assert!((row[5] - 1.0).abs() < 1e-15);
    }

    #[test]
    fn last_row_of_two_by_two() {
        let rho = 0.37;
        let cov = pd_correct(&seq(vec![1.0, rho], 10), 2).unwrap();
        let row = cov.cholesky_last_row();
        assert!((row[0] - rho).abs() < 1e-14);
        assert!((row[1] - (1.0 - rho * rho).sqrt()).abs() < 1e-14);
    }

    #[test]
    fn last_row_matches_dense_factor() {
        // random PD sequence via MA coefficients: γ_k = Σ_j θ_j θ_{j+k}
        let mut rng = ChaCha12Rng::seed_from_u64(42);
        let q = 30usize;
        let theta: Vec<f64> = (0..q).map(|_| rng.gen_range(0.2..1.0)).collect();
        let gamma: Vec<f64> = (0..q)
            .map(|k| (0..q - k).map(|j| theta[j] * theta[j + k]).sum())
            .collect();
        let cov = pd_correct(&seq(gamma, 100), 30).unwrap();
        assert_eq!(cov.pd_shrink, 0.0);
        let dense = cov.dense_cholesky();
        // dense factor reconstructs Γ
        for i in 0..30 {
            for j in 0..30 {
                let mut acc = 0.0;
                for k in 0..30 {
                    acc += dense[i][k] * dense[j][k];
                }
                let want = cov.gamma()[(i as isize - j as isize).unsigned_abs()];
                assert!((acc - want).abs() < 1e-9, "({i},{j})");
            }
        }
        // streaming last row agrees with it
        let row = cov.cholesky_last_row();
        for (a, b) in row.iter().zip(dense[29].iter()) {
            assert!((a - b).abs() < 1e-9);
        }
    }

    #[test]
    fn whiten_is_identity_under_identity_covariance() {
        let mut g = vec![0.0; 8];
        g[0] = 1.0;
        let cov = pd_correct(&seq(g, 20), 8).unwrap();
        let z = vec![0.3, -1.2, 0.0, 2.5, -0.7, 0.1, 0.9, -0.4];
        let eps = cov.whiten_solve(&z);
        for (a, b) in z.iter().zip(eps.iter()) {
            assert!((a - b).abs() < 1e-14);
        }
    }

    #[test]
    fn whiten_and_unwhiten_invert_each_other() {
        let cov = pd_correct(&seq(ar1_gamma(0.6, 49), 200), 50).unwrap();
        let mut rng = ChaCha12Rng::seed_from_u64(7);
        let z: Vec<f64> = (0..50).map(|_| rng.sample::<f64, _>(StandardNormal)).collect();
        let eps = cov.whiten_solve(&z);
        let back = cov.unwhiten(&eps);
        for (a, b) in z.iter().zip(back.iter()) {
            assert!((a - b).abs() < 1e-10);
        }
        // and the solve really satisfies C·ε = z against the dense factor
        let dense = cov.dense_cholesky();
        for i in 0..50 {
            let mut acc = 0.0;
            for k in 0..=i {
                acc += dense[i][k] * eps[k];
            }
            assert!((acc - z[i]).abs() < 1e-10, "row {i}");
        }
    }

    #[test]
    fn whitening_true_ar1_covariance_flattens_autocorrelation() {
        // simulate Gaussian AR(1), whiten with the exact Γ, check ε is white
        let rho = 0.7;
        let n = 2000usize;
        let mut rng = ChaCha12Rng::seed_from_u64(11);
        let mut y = Vec::with_capacity(n);
        let mut prev: f64 = rng.sample::<f64, _>(StandardNormal);
        prev /= (1.0f64 - rho * rho).sqrt();
        for _ in 0..n {
            let e: f64 = rng.sample(StandardNormal);
            let cur = rho * prev + e;
            y.push(cur);
            prev = cur;
        }
        let cov = pd_correct(&seq(ar1_gamma(rho, n - 1), n), n).unwrap();
        let eps = cov.whiten_solve(&y);
        let acf = sample_autocov(&eps, 5).unwrap();
        let bound = 2.0 / (n as f64).sqrt();
        for k in 1..=5 {
            let r = acf.gamma[k] / acf.gamma[0];
            assert!(r.abs() < bound, "lag {k}: {r} vs {bound}");
        }
    }

    #[test]
    fn extend_identity_stays_identity() {
        let mut g = vec![0.0; 5];
        g[0] = 1.0;
        let cov = pd_correct(&seq(g, 10), 5).unwrap();
        let ext = cov.extend_to_np1(None).unwrap();
        assert_eq!(ext.dim, 6);
        assert_eq!(ext.pd_shrink, 0.0);
        let row = ext.cholesky_last_row();
        for l in &row[..5] {
            assert_eq!(*l, 0.0);
        }
        assert!((row[5] - 1.0).abs() < 1e-15);
    }

    #[test]
    fn extend_with_ar_value_matches_ar_autocov_recursion() {
        // fit an AR model, extend its implied autocovariance both ways
        let mut rng = ChaCha12Rng::seed_from_u64(3);
        let n = 400usize;
        let mut y = vec![0.0; n];
        for t in 0..n {
            let e: f64 = rng.sample(StandardNormal);
            y[t] = if t == 0 { e } else { 0.5 * y[t - 1] + e };
        }
        let fit = fit_ar_yw(&y, crate::linear_prediction::default_p_max(n)).unwrap();
        let acov = sample_autocov(&y, n - 1).unwrap();
        let extended = ar_autocov_extend(&fit, &acov, n);
        let cov = pd_correct(&seq(extended.gamma[..n].to_vec(), n), n).unwrap();
        let ext = cov.extend_to_np1(Some(extended.gamma[n])).unwrap();
        assert_eq!(ext.dim, n + 1);
        assert_eq!(ext.gamma()[n], extended.gamma[n]);
        // the extension is still PD with no extra shrink on this smooth path
        assert_eq!(ext.pd_shrink, cov.pd_shrink);
    }

    #[test]
    fn leading_principal_is_prefix() {
        let cov = pd_correct(&seq(ar1_gamma(0.5, 39), 100), 40).unwrap();
        let sub = cov.leading_principal(25);
        assert_eq!(sub.dim, 25);
        // whitening a vector through the block matches truncated recursion
        let mut rng = ChaCha12Rng::seed_from_u64(5);
        let z: Vec<f64> = (0..40).map(|_| rng.sample::<f64, _>(StandardNormal)).collect();
        let full = cov.whiten_solve(&z);
        let part = sub.whiten_solve(&z[..25]);
        for (a, b) in full[..25].iter().zip(part.iter()) {
            assert!((a - b).abs() < 1e-12);
        }
    }
}
