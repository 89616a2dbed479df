//! Gauss–Hermite quadrature against normal weights.
//!
//! Convolutions with normal components reduce to expectations
//! `E[f(S)]` for `S ~ N(mean, var)`; the integrands are smooth, so a fixed
//! 64-node Hermite rule is accurate far beyond the tolerances used here.

use std::num::NonZeroUsize;
use std::sync::LazyLock;

use gauss_quad::hermite::GaussHermite;

/// Number of Hermite nodes used throughout.
pub const GH_NODES: usize = 64;

static RULE: LazyLock<GaussHermite> =
    LazyLock::new(|| GaussHermite::new(NonZeroUsize::new(GH_NODES).unwrap()));

/// Expectation `E[f(S)]` for `S ~ N(mean, variance)`.
///
/// `variance = 0` degenerates to a point evaluation.
pub fn normal_expectation(mean: f64, variance: f64, f: impl Fn(f64) -> f64) -> f64 {
    if variance <= 0.0 {
        return f(mean);
    }
    let spread = (2.0 * variance).sqrt();
    RULE.integrate(|t| f(mean + spread * t)) / std::f64::consts::PI.sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dist::std_normal_cdf;

    #[test]
    fn moments_of_the_normal_law() {
        let mean = normal_expectation(1.5, 4.0, |s| s);
        let second = normal_expectation(1.5, 4.0, |s| s * s);
        assert!((mean - 1.5).abs() < 1e-12);
        assert!((second - (4.0 + 2.25)).abs() < 1e-11);
    }

    #[test]
    fn normal_convolution_of_cdfs() {
        // E[Φ(ξ − S)] for S ~ N(m, v) equals the N(m, 1 + v) c.d.f. at ξ.
        let (m, v) = (0.3, 0.49);
        for xi in [-2.0, -0.5, 0.0, 1.0, 2.5] {
            let got = normal_expectation(m, v, |s| std_normal_cdf(xi - s));
            let want = std_normal_cdf((xi - m) / (1.0 + v).sqrt());
            assert!((got - want).abs() < 1e-12, "xi={xi}");
        }
    }

    #[test]
    fn zero_variance_is_point_evaluation() {
        assert_eq!(normal_expectation(2.0, 0.0, |s| s * s), 4.0);
    }
}
