//! Small numeric and distribution helpers shared across modules: binomial
//! coefficients, error-function based normal quantities, and truncated
//! weight sequences for the standard lattice families.

use crate::seq::RightLateralSeq;

/// Binomial coefficient by the multiplicative recurrence, in `f64`.
///
/// Every intermediate value is itself a binomial coefficient, so the result
/// is exact as long as it stays below 2⁵³; in particular exact for all
/// `n ≤ 45`, the documented reliable range of the Neumann-sum weights.
pub fn binomial(n: u64, k: u64) -> f64 {
    if k > n {
        return 0.0;
    }
    let k = k.min(n - k);
    let mut r = 1.0f64;
    for i in 1..=k {
        r = r * (n - k + i) as f64 / i as f64;
    }
    r
}

/// `n!` in `f64` (exact up to `n = 18`, then IEEE-rounded).
pub fn factorial(n: u64) -> f64 {
    (1..=n).fold(1.0, |acc, i| acc * i as f64)
}

/// Gauss error function.
pub fn erf(x: f64) -> f64 {
    libm::erf(x)
}

/// Standard normal distribution function `Φ`.
pub fn std_normal_cdf(x: f64) -> f64 {
    0.5 * (1.0 + libm::erf(x / std::f64::consts::SQRT_2))
}

/// Normal distribution function with the given mean and standard deviation.
pub fn normal_cdf(x: f64, mean: f64, sd: f64) -> f64 {
    std_normal_cdf((x - mean) / sd)
}

/// Normal density.
pub fn normal_pdf(x: f64, mean: f64, sd: f64) -> f64 {
    let z = (x - mean) / sd;
    (-0.5 * z * z).exp() / (sd * (2.0 * std::f64::consts::PI).sqrt())
}

/// Laplace distribution function with location `loc` and scale `b`.
pub fn laplace_cdf(x: f64, loc: f64, b: f64) -> f64 {
    let z = (x - loc) / b;
    if z <= 0.0 {
        0.5 * z.exp()
    } else {
        1.0 - 0.5 * (-z).exp()
    }
}

/// Exponential distribution function with the given rate, supported on
/// `[0, ∞)`.
pub fn exponential_cdf(x: f64, rate: f64) -> f64 {
    if x <= 0.0 {
        0.0
    } else {
        1.0 - (-rate * x).exp()
    }
}

/// Poisson weights truncated where the remaining tail mass drops below
/// `tail_tol`; the dropped mass is recorded on the sequence.
pub fn poisson_weights(lambda: f64, tail_tol: f64) -> RightLateralSeq<f64> {
    assert!(lambda > 0.0, "Poisson rate must be positive");
    let mut coeffs = Vec::new();
    let mut term = (-lambda).exp();
    let mut cum = 0.0;
    let mut z = 0u64;
    loop {
        coeffs.push(term);
        cum += term;
        if 1.0 - cum < tail_tol && z as f64 > lambda {
            break;
        }
        z += 1;
        term *= lambda / z as f64;
        if z > 10_000 {
            break;
        }
    }
    RightLateralSeq::with_tail_mass(0, coeffs, (1.0 - cum).max(0.0))
}

/// Geometric weights `p(1−p)^z` truncated at tail mass `tail_tol`.
pub fn geometric_weights(p: f64, tail_tol: f64) -> RightLateralSeq<f64> {
    assert!(p > 0.0 && p <= 1.0, "geometric parameter must be in (0,1]");
    let mut coeffs = Vec::new();
    let mut term = p;
    let mut tail = 1.0;
    while tail > tail_tol && coeffs.len() < 100_000 {
        coeffs.push(term);
        tail -= term;
        term *= 1.0 - p;
    }
    RightLateralSeq::with_tail_mass(0, coeffs, tail.max(0.0))
}

/// Negative-binomial weights (number of failures before the `r`-th success)
/// truncated at tail mass `tail_tol`.
pub fn negative_binomial_weights(r: f64, p: f64, tail_tol: f64) -> RightLateralSeq<f64> {
    assert!(r > 0.0 && p > 0.0 && p <= 1.0, "invalid negative binomial");
    let mut coeffs = Vec::new();
    let mut term = p.powf(r);
    let mut tail = 1.0;
    let mut z = 0u64;
    while tail > tail_tol && coeffs.len() < 100_000 {
        coeffs.push(term);
        tail -= term;
        term *= (r + z as f64) * (1.0 - p) / (z as f64 + 1.0);
        z += 1;
    }
    RightLateralSeq::with_tail_mass(0, coeffs, tail.max(0.0))
}
