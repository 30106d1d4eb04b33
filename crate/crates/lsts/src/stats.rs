//! Standard normal helpers used across the pipeline.

use statrs::distribution::{Continuous, ContinuousCDF, Normal};

fn standard() -> Normal {
    Normal::new(0.0, 1.0).expect("standard normal parameters are valid")
}

/// Standard normal density.
pub(crate) fn norm_pdf(x: f64) -> f64 {
    standard().pdf(x)
}

/// Standard normal distribution function.
pub(crate) fn norm_cdf(x: f64) -> f64 {
    standard().cdf(x)
}

/// Standard normal quantile function. `p` must lie strictly inside (0, 1).
/// One Newton step sharpens the library inverse to near machine precision,
/// which step-function quantile inversion downstream relies on.
pub(crate) fn norm_quantile(p: f64) -> f64 {
    let mut x = standard().inverse_cdf(p);
    let d = norm_pdf(x);
    if d > 0.0 {
        x -= (norm_cdf(x) - p) / d;
    }
    x
}

/// Sample mean.
pub(crate) fn mean(x: &[f64]) -> f64 {
    x.iter().sum::<f64>() / x.len() as f64
}

/// Sample standard deviation with denominator `n - 1` (0 for length < 2).
pub(crate) fn sd(x: &[f64]) -> f64 {
    if x.len() < 2 {
        return 0.0;
    }
    let m = mean(x);
    (x.iter().map(|v| (v - m) * (v - m)).sum::<f64>() / (x.len() - 1) as f64).sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn quantile_inverts_cdf() {
        for &x in &[-3.2, -1.0, -0.1, 0.0, 0.7, 2.5] {
            let p = norm_cdf(x);
            assert!((norm_quantile(p) - x).abs() < 1e-12);
        }
        // and the opposite composition, which uniformization round-trips need
        for &p in &[1e-4, 0.2, 0.5, 0.77, 1.0 - 1e-4] {
            assert!((norm_cdf(norm_quantile(p)) - p).abs() < 1e-14);
        }
    }

    #[test]
    fn pdf_peak_at_zero() {
        assert!((norm_pdf(0.0) - 0.3989422804014327).abs() < 1e-12);
    }
}
