//! Neumann partial sums of the convolution complement and the
//! deconvolution function/density they induce.
//!
//! For a transforming measure `η` and error law `μ_ε`, the complement
//! `π_{η∗μ_ε} = δ₀ − η∗μ_ε` drives the partial sum
//! `Π{η}(·,m) = Σ_{ℓ≤m} π^{∗ℓ}`, and the m-th Picard iterate of the
//! deconvolution problem is `𝔉{η}(ξ,m) = (F_η ∗ F_Y ∗ F_{Π{η}}(·,m))(ξ)`.
//!
//! Powers are accumulated by direct convolution of mixtures. Coincident
//! components merge as they arise, so for normal noise the sum collapses to
//! one normal component per convolution order (the per-order weights are
//! the alternating binomial sums), and for lattice noise everything stays
//! on the lattice where the scaled canonical `η` makes the powers cancel
//! exactly.

use crate::deconv::{EmpiricalSample, LatticeNoise};
use crate::error::DeconvError;
use crate::measure::{Component, SignedMixture};
use crate::quad::normal_expectation;
use crate::Result;

/// Largest supported truncation index; binomial weights lose integer
/// exactness beyond this and the alternating sums degrade.
pub const MAX_TRUNCATION: usize = 45;

/// Error law for the general-setup approximation.
#[derive(Debug, Clone)]
pub enum NoiseModel {
    /// Discrete law on `{z₀ + t·z}`.
    Lattice(LatticeNoise),
    /// Normal law `N(c_ε, σ_ε²)`.
    Normal {
        /// Mean `c_ε`.
        center: f64,
        /// Standard deviation `σ_ε > 0`.
        sd: f64,
    },
}

impl NoiseModel {
    /// The error law as a signed mixture.
    pub fn as_mixture(&self) -> SignedMixture {
        match self {
            NoiseModel::Lattice(noise) => {
                let terms = noise
                    .pmf()
                    .coeffs()
                    .iter()
                    .enumerate()
                    .map(|(z, &w)| {
                        (
                            w,
                            Component::Dirac {
                                location: noise.location(z as i64),
                            },
                        )
                    })
                    .collect();
                SignedMixture::new(terms)
            }
            NoiseModel::Normal { center, sd } => SignedMixture::normal(*center, sd * sd),
        }
    }

    /// Canonical transforming measure: `δ₀` for normal noise,
    /// `λ_{z₀} δ_{−z₀}` (with `λ_{z₀} = 1/F_ε{z₀}`) for lattice noise.
    pub fn default_eta(&self) -> SignedMixture {
        match self {
            NoiseModel::Lattice(noise) => {
                SignedMixture::scaled_dirac(1.0 / noise.mass_at_z0(), -noise.z0())
            }
            NoiseModel::Normal { .. } => SignedMixture::dirac(0.0),
        }
    }
}

/// Convolution complement `π_μ = δ₀ − μ`, merged.
pub fn pi_of(mu: &SignedMixture) -> SignedMixture {
    SignedMixture::dirac(0.0).add(&mu.scaled(-1.0)).merged()
}

fn check_truncation(m: usize) -> Result<()> {
    if m > MAX_TRUNCATION {
        return Err(DeconvError::TruncationIndex {
            m,
            max: MAX_TRUNCATION,
        });
    }
    Ok(())
}

/// Neumann partial sum `Π{η}(·, m) = Σ_{ℓ=0}^{m} π_{η∗μ_ε}^{∗ℓ}`.
pub fn neumann_sum(
    eta: &SignedMixture,
    noise: &NoiseModel,
    m: usize,
) -> Result<SignedMixture> {
    check_truncation(m)?;
    if !eta.is_atomic() {
        return Err(DeconvError::invalid(
            "Neumann sums are built for atomic transforming measures",
        ));
    }
    let base = eta.convolve(&noise.as_mixture());
    let pi = pi_of(&base);
    let mut acc = SignedMixture::dirac(0.0);
    let mut cur = SignedMixture::dirac(0.0);
    for _ in 1..=m {
        cur = cur.convolve(&pi);
        acc = acc.add(&cur);
    }
    Ok(acc.merged())
}

/// Contiguity coefficients `a_{m,ℓ}` relating the Neumann sums of
/// `δ₀ − ν` and `δ₀ − ν/ν₀`:
/// `a_{m,ℓ} = (ν₀^ℓ/ℓ!) Σ_{n=0}^{m−ℓ} ((n+ℓ)!/n!) (1−ν₀)^n`.
///
/// Each lies in `[0, 1/ν₀]` and increases to `1/ν₀` as `m → ∞`.
pub fn contiguity_coeffs(nu0: f64, m: usize) -> Result<Vec<f64>> {
    if !(nu0 > 0.0 && nu0 <= 1.0) {
        return Err(DeconvError::invalid("ν₀ must lie in (0, 1]"));
    }
    let mut out = Vec::with_capacity(m + 1);
    for l in 0..=m {
        // term_n = C(n+ℓ, ℓ) ν₀^ℓ (1−ν₀)^n, accumulated over n ≤ m−ℓ.
        let mut term = nu0.powi(l as i32);
        let mut acc = 0.0;
        for n in 0..=(m - l) {
            acc += term;
            term *= (n + l + 1) as f64 / (n + 1) as f64 * (1.0 - nu0);
        }
        out.push(acc);
    }
    Ok(out)
}

/// Observed distribution function for [`deconv_fn`]: either the analytic
/// c.d.f. of `Y` or an empirical sample (the plug-in estimator).
pub enum ObservedDf<'a> {
    /// Analytic c.d.f. of `Y`.
    Analytic(&'a dyn Fn(f64) -> f64),
    /// Blurred observations.
    Empirical(&'a EmpiricalSample),
}

/// Deconvolution function `𝔉{η}(ξ, m) = (F_η ∗ F_Y ∗ F_{Π{η}}(·,m))(ξ)`.
///
/// With an empirical sample the Stieltjes integral over `F_Y` becomes the
/// sample average, which is the unbiased plug-in estimator of `𝔉{η}(·,m)`.
pub fn deconv_fn(
    eta: &SignedMixture,
    noise: &NoiseModel,
    fy: ObservedDf<'_>,
    xi: f64,
    m: usize,
) -> Result<f64> {
    let pi_sum = neumann_sum(eta, noise, m)?;
    let mixed = eta.convolve(&pi_sum);
    Ok(match fy {
        ObservedDf::Analytic(f) => crate::measure::stieltjes_with_cdf(&mixed, f, xi),
        ObservedDf::Empirical(s) => crate::measure::stieltjes_with_sample(&mixed, s, xi),
    })
}

/// Deconvolution density `𝔣{η}(ξ, m) = S_{η∗Π{η}(·,m)}{f_Y}(ξ)`.
///
/// Needs the analytic density of `Y`; there is no unbiased empirical
/// variant.
pub fn deconv_density(
    eta: &SignedMixture,
    noise: &NoiseModel,
    fy_density: impl Fn(f64) -> f64,
    xi: f64,
    m: usize,
) -> Result<f64> {
    let pi_sum = neumann_sum(eta, noise, m)?;
    let mixed = eta.convolve(&pi_sum);
    let mut acc = 0.0;
    for (c, comp) in mixed.terms() {
        acc += match comp {
            Component::Dirac { location } => c * fy_density(xi - location),
            Component::Normal { mean, variance } => {
                c * normal_expectation(*mean, *variance, |s| fy_density(xi - s))
            }
        };
    }
    Ok(acc)
}

/// Smallest truncation index with exact finite representation for lattice
/// noise and a target vanishing below `xi0`: `m₀ = ⌊(ξ − ξ₀)/t⌋`, clamped
/// at 0 (where the deconvolution function vanishes anyway).
pub fn finite_rep_check(noise: &LatticeNoise, xi: f64, xi0: f64) -> usize {
    let m0 = ((xi - xi0) / noise.span()).floor();
    if m0 < 0.0 {
        0
    } else {
        m0 as usize
    }
}
