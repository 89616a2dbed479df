//! Characteristic functions as an independent validation channel.
//!
//! The Fourier–Stieltjes transform of the deconvolution iterate has the
//! closed geometric form `Φ_η Φ_Y Σ_{ℓ≤m} (1 − Φ_η Φ_ε)^ℓ`, which provides
//! a cross-check for the Neumann-sum machinery and a pointwise convergence
//! predicate `|1 − Φ_η Φ_ε| < 1`. The predicate is diagnostic only: there
//! is no implication between convergence of the transform and convergence
//! of the deconvolution function itself, so it never gates the
//! distribution-domain computations.

use std::sync::Arc;

use num_complex::Complex64;

use crate::deconv::{EmpiricalSample, LatticeNoise};
use crate::measure::{Component, SignedMixture};

/// Zero guard: below this `|Φ_η Φ_ε|` the closed form is replaced by the
/// direct geometric sum (whose value the case split sets to 0 in the
/// limit).
pub const CF_ZERO_GUARD: f64 = 1e-12;

/// A characteristic function `t ↦ Φ(t)`.
#[derive(Clone)]
pub struct CharFn {
    eval: Arc<dyn Fn(f64) -> Complex64 + Send + Sync>,
}

impl CharFn {
    /// Wraps an evaluator.
    pub fn new(f: impl Fn(f64) -> Complex64 + Send + Sync + 'static) -> Self {
        CharFn { eval: Arc::new(f) }
    }

    /// Evaluates `Φ(t)`.
    pub fn eval(&self, t: f64) -> Complex64 {
        (self.eval)(t)
    }

    /// Constant 1 (characteristic function of `δ₀`).
    pub fn one() -> Self {
        CharFn::new(|_| Complex64::new(1.0, 0.0))
    }

    /// C.f. of a signed mixture: Dirac atoms map to `c·e^{itx}`, normal
    /// components to `c·e^{itm − vt²/2}`.
    pub fn of_mixture(mu: &SignedMixture) -> Self {
        let terms: Vec<(f64, Component)> = mu.terms().to_vec();
        CharFn::new(move |t| {
            let mut acc = Complex64::new(0.0, 0.0);
            for (c, comp) in &terms {
                acc += match comp {
                    Component::Dirac { location } => {
                        *c * (Complex64::new(0.0, t * location)).exp()
                    }
                    Component::Normal { mean, variance } => {
                        *c * (Complex64::new(-0.5 * variance * t * t, t * mean)).exp()
                    }
                };
            }
            acc
        })
    }

    /// C.f. of a lattice noise law (truncated sum over its atoms).
    pub fn of_lattice(noise: &LatticeNoise) -> Self {
        let locs: Vec<(f64, f64)> = noise
            .pmf()
            .coeffs()
            .iter()
            .enumerate()
            .map(|(z, &w)| (noise.location(z as i64), w))
            .collect();
        CharFn::new(move |t| {
            locs.iter()
                .map(|&(x, w)| w * Complex64::new(0.0, t * x).exp())
                .sum()
        })
    }

    /// C.f. of `N(c, σ²)`.
    pub fn of_normal(center: f64, sd: f64) -> Self {
        let var = sd * sd;
        CharFn::new(move |t| Complex64::new(-0.5 * var * t * t, t * center).exp())
    }

    /// Exact Poisson c.f. `exp{λ(e^{it} − 1)}`.
    pub fn of_poisson(lambda: f64) -> Self {
        CharFn::new(move |t| ((Complex64::new(0.0, t).exp() - 1.0) * lambda).exp())
    }

    /// Empirical c.f. `(1/n) Σ e^{itYₖ}`.
    pub fn of_sample(sample: &EmpiricalSample) -> Self {
        let obs = sample.obs().to_vec();
        CharFn::new(move |t| {
            let n = obs.len() as f64;
            obs.iter()
                .map(|&y| Complex64::new(0.0, t * y).exp())
                .sum::<Complex64>()
                / n
        })
    }

    /// Product `Φ·Ψ` (c.f. of the convolution).
    pub fn product(&self, other: &CharFn) -> CharFn {
        let a = self.clone();
        let b = other.clone();
        CharFn::new(move |t| a.eval(t) * b.eval(t))
    }
}

/// Closed geometric form of the transform of the deconvolution iterate:
/// `Φ_η(t) Φ_Y(t) Σ_{ℓ=0}^{m} (1 − Φ_η(t)Φ_ε(t))^ℓ`.
///
/// Uses `Φ_Y/Φ_ε · (1 − (1−w)^{m+1})` with `w = Φ_ηΦ_ε` away from the
/// zero set and the direct sum inside the guard band.
pub fn cf_deconv_closed(
    phi_eta: &CharFn,
    phi_eps: &CharFn,
    phi_y: &CharFn,
    t: f64,
    m: usize,
) -> Complex64 {
    let eta = phi_eta.eval(t);
    let eps = phi_eps.eval(t);
    let y = phi_y.eval(t);
    let w = eta * eps;
    if w.norm() > CF_ZERO_GUARD {
        let one = Complex64::new(1.0, 0.0);
        y / eps * (one - (one - w).powu(m as u32 + 1))
    } else {
        let one = Complex64::new(1.0, 0.0);
        let mut sum = Complex64::new(0.0, 0.0);
        let mut pw = one;
        for _ in 0..=m {
            sum += pw;
            pw *= one - w;
        }
        eta * y * sum
    }
}

/// Pointwise convergence predicate `|1 − Φ_η(t)Φ_ε(t)| < 1` on a grid.
///
/// Diagnostic output only.
pub fn convergence_region(phi_eta: &CharFn, phi_eps: &CharFn, tgrid: &[f64]) -> Vec<bool> {
    tgrid
        .iter()
        .map(|&t| {
            let w = phi_eta.eval(t) * phi_eps.eval(t);
            (Complex64::new(1.0, 0.0) - w).norm() < 1.0
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::neumann::{neumann_sum, NoiseModel};
    use rand::prelude::*;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn cf_at_zero_is_total_mass() {
        let noise = LatticeNoise::poisson(1.3, 0.0, 1.0).unwrap();
        assert!((CharFn::of_lattice(&noise).eval(0.0).re - 1.0).abs() < 1e-9);
        assert!((CharFn::of_normal(0.4, 1.1).eval(0.0).re - 1.0).abs() < 1e-15);
        let mix = SignedMixture::scaled_dirac(0.7, 1.0)
            .add(&SignedMixture::normal(0.0, 1.0).scaled(0.3));
        assert!((CharFn::of_mixture(&mix).eval(0.0).re - 1.0).abs() < 1e-15);
    }

    #[test]
    fn conjugate_symmetry() {
        let noise = LatticeNoise::geometric(0.35, 0.0, 1.0).unwrap();
        let cf = CharFn::of_lattice(&noise);
        for t in [0.3, 1.1, 4.2] {
            let a = cf.eval(t);
            let b = cf.eval(-t).conj();
            assert!((a - b).norm() < 1e-12);
        }
    }

    #[test]
    fn modulus_bounded_by_total_variation() {
        let mix = SignedMixture::new(vec![
            (0.9, Component::Dirac { location: -1.0 }),
            (-0.4, Component::Dirac { location: 0.5 }),
            (
                0.3,
                Component::Normal {
                    mean: 1.0,
                    variance: 0.6,
                },
            ),
        ]);
        let cf = CharFn::of_mixture(&mix);
        let tv = mix.tv_norm();
        assert!((cf.eval(0.0).re - mix.total_mass()).abs() < 1e-14);
        for k in -30..=30 {
            let t = k as f64 * 0.3;
            assert!(cf.eval(t).norm() <= tv + 1e-12);
        }
    }

    #[test]
    fn poisson_divergence_point() {
        let cf = CharFn::of_poisson(2.0);
        let gap = (Complex64::new(1.0, 0.0) - cf.eval(5.0)).norm();
        assert!((gap - 1.10).abs() < 0.01, "gap = {gap}");
        // Truncated lattice evaluation agrees with the closed form.
        let lattice = CharFn::of_lattice(&LatticeNoise::poisson(2.0, 0.0, 1.0).unwrap());
        assert!((lattice.eval(5.0) - cf.eval(5.0)).norm() < 1e-9);
    }

    #[test]
    fn product_rule_on_random_mixtures() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let a = SignedMixture::new(vec![
            (0.4, Component::Dirac { location: 0.0 }),
            (0.6, Component::Dirac { location: 2.0 }),
        ]);
        let b = SignedMixture::normal(0.5, 0.7);
        let conv = a.convolve(&b);
        let lhs = CharFn::of_mixture(&conv);
        let rhs = CharFn::of_mixture(&a).product(&CharFn::of_mixture(&b));
        for _ in 0..20 {
            let t = rng.gen_range(-5.0..5.0);
            assert!((lhs.eval(t) - rhs.eval(t)).norm() < 1e-12);
        }
    }

    #[test]
    fn closed_form_matches_direct_sum() {
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        let eta = CharFn::one();
        let eps = CharFn::of_normal(0.2, 0.9);
        let y = CharFn::of_normal(0.2, (1.0f64 + 0.81).sqrt());
        for _ in 0..40 {
            let t = rng.gen_range(-3.0..3.0);
            let m = rng.gen_range(0..=30usize);
            let closed = cf_deconv_closed(&eta, &eps, &y, t, m);
            // Direct truncated geometric sum.
            let w = eta.eval(t) * eps.eval(t);
            let mut sum = Complex64::new(0.0, 0.0);
            let mut pw = Complex64::new(1.0, 0.0);
            for _ in 0..=m {
                sum += pw;
                pw *= Complex64::new(1.0, 0.0) - w;
            }
            let direct = eta.eval(t) * y.eval(t) * sum;
            assert!(
                (closed - direct).norm() <= 1e-9 * direct.norm().max(1.0),
                "t={t} m={m}"
            );
        }
    }

    #[test]
    fn closed_form_at_zero_telescopes_to_one() {
        let eta = CharFn::one();
        let eps = CharFn::of_poisson(1.0);
        let y = CharFn::of_poisson(2.5); // X ⊕ ε both Poisson-like
        for m in [0usize, 3, 11] {
            let v = cf_deconv_closed(&eta, &eps, &y, 0.0, m);
            assert!((v - Complex64::new(1.0, 0.0)).norm() < 1e-12);
        }
    }

    #[test]
    fn neumann_mixture_transform_matches_closed_form() {
        // Φ of η ∗ μ_Y ∗ Π{η}(·,m) against the geometric identity.
        let sd = 0.7;
        let noise = NoiseModel::Normal { center: 0.0, sd };
        let eta = SignedMixture::dirac(0.0);
        let mu_y = SignedMixture::normal(0.0, 1.0 + sd * sd);
        let phi_eta = CharFn::one();
        let phi_eps = CharFn::of_normal(0.0, sd);
        let phi_y = CharFn::of_mixture(&mu_y);
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for m in [0usize, 1, 5, 12, 20] {
            let pi_m = neumann_sum(&eta, &noise, m).unwrap();
            let mixture = eta.convolve(&mu_y).convolve(&pi_m);
            let phi_mix = CharFn::of_mixture(&mixture);
            for _ in 0..20 {
                let t = rng.gen_range(-5.0..5.0);
                let want = cf_deconv_closed(&phi_eta, &phi_eps, &phi_y, t, m);
                assert!(
                    (phi_mix.eval(t) - want).norm() < 1e-8,
                    "m={m} t={t}"
                );
            }
        }
    }

    #[test]
    fn convergence_region_examples() {
        let eta = CharFn::one();
        // Centered normal noise: true everywhere (boundary t = 0 included).
        let eps = CharFn::of_normal(0.0, 1.0);
        let grid: Vec<f64> = (-10..=10).map(|k| k as f64 * 0.5).collect();
        assert!(convergence_region(&eta, &eps, &grid).iter().all(|&b| b));

        // Poisson(2) fails at t = 5.
        let eps = CharFn::of_poisson(2.0);
        let flags = convergence_region(&eta, &eps, &[0.0, 5.0]);
        assert_eq!(flags, vec![true, false]);

        // Degenerate noise: identically true.
        let eps = CharFn::one();
        assert!(convergence_region(&eta, &eps, &grid).iter().all(|&b| b));
    }

    #[test]
    fn ecf_approaches_model_cf() {
        // Soft envelope: sup_t |Φ_Y(t,n) − Φ_Y(t)| < 3/√n for most seeds.
        let n = 10_000usize;
        let sd_y = 1.25f64.sqrt();
        let phi = CharFn::of_normal(0.0, sd_y);
        let mut passes = 0;
        for seed in 0..5u64 {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let obs: Vec<f64> = (0..n)
                .map(|_| sd_y * rng.sample::<f64, _>(rand_distr::StandardNormal))
                .collect();
            let sample = EmpiricalSample::new(obs).unwrap();
            let ecf = CharFn::of_sample(&sample);
            let mut sup = 0.0f64;
            let mut t = -3.0;
            while t <= 3.0 {
                sup = sup.max((ecf.eval(t) - phi.eval(t)).norm());
                t += 0.25;
            }
            if sup < 3.0 / (n as f64).sqrt() {
                passes += 1;
            }
        }
        assert!(passes >= 3, "only {passes}/5 seeds inside the envelope");
    }
}
