//! Distribution families: analytic forms and sampling.

use deconv_core::deconv::LatticeNoise;
use deconv_core::dist::{
    exponential_cdf, laplace_cdf, negative_binomial_weights, normal_cdf, poisson_weights,
};
use deconv_core::{DeconvError, RealSeq};
use rand::Rng;
use rand_distr::Distribution;
use serde::{Deserialize, Serialize};

fn default_span() -> f64 {
    1.0
}

/// A target or noise distribution.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(tag = "family", rename_all = "snake_case", deny_unknown_fields)]
pub enum DistSpec {
    /// Poisson with rate `lambda` on ℕ₀.
    Poisson { lambda: f64 },
    /// Bernoulli on `{0, 1}` with success probability `p`.
    Bernoulli { p: f64 },
    /// Geometric on ℕ₀ (failures before first success).
    Geometric { p: f64 },
    /// Flat law on `{0, …, k}`.
    DiscreteUniform { k: usize },
    /// Negative binomial on ℕ₀ (failures before the `r`-th success).
    NegativeBinomial { r: f64, p: f64 },
    /// Normal with the given mean and standard deviation.
    Normal { mean: f64, sd: f64 },
    /// Laplace with location and scale.
    Laplace { loc: f64, scale: f64 },
    /// Exponential on `[0, ∞)` with the given rate.
    Exponential { rate: f64 },
    /// User-supplied lattice pmf on `{x0 + span·z}`.
    Lattice {
        pmf: Vec<f64>,
        #[serde(default)]
        x0: f64,
        #[serde(default = "default_span")]
        span: f64,
    },
}

impl DistSpec {
    /// Parameter validation with a human-readable message.
    pub fn validate(&self) -> Result<(), DeconvError> {
        let bad = |msg: String| Err(DeconvError::InvalidParameter(msg));
        match self {
            DistSpec::Poisson { lambda } if !(lambda > &0.0) => {
                bad(format!("Poisson rate must be positive, got {lambda}"))
            }
            DistSpec::Bernoulli { p } if !(0.0..1.0).contains(p) => {
                bad(format!("Bernoulli p must be in [0,1), got {p}"))
            }
            DistSpec::Geometric { p } if !(p > &0.0 && p <= &1.0) => {
                bad(format!("geometric p must be in (0,1], got {p}"))
            }
            DistSpec::NegativeBinomial { r, p } if !(r > &0.0 && p > &0.0 && p <= &1.0) => {
                bad(format!("negative binomial needs r > 0 and p in (0,1], got r={r} p={p}"))
            }
            DistSpec::Normal { sd, .. } if !(sd > &0.0) => {
                bad(format!("normal sd must be positive, got {sd}"))
            }
            DistSpec::Laplace { scale, .. } if !(scale > &0.0) => {
                bad(format!("Laplace scale must be positive, got {scale}"))
            }
            DistSpec::Exponential { rate } if !(rate > &0.0) => {
                bad(format!("exponential rate must be positive, got {rate}"))
            }
            DistSpec::Lattice { pmf, span, .. } => {
                LatticeNoise::new(0.0, *span, RealSeq::new(0, pmf.clone())).map(|_| ())
            }
            _ => Ok(()),
        }
    }

    /// True for purely discrete lattice families.
    pub fn is_lattice(&self) -> bool {
        matches!(
            self,
            DistSpec::Poisson { .. }
                | DistSpec::Bernoulli { .. }
                | DistSpec::Geometric { .. }
                | DistSpec::DiscreteUniform { .. }
                | DistSpec::NegativeBinomial { .. }
                | DistSpec::Lattice { .. }
        )
    }

    /// True when the support is bounded to the left.
    pub fn is_left_bounded(&self) -> bool {
        !matches!(self, DistSpec::Normal { .. } | DistSpec::Laplace { .. })
    }

    /// Left extremity of the support, when bounded.
    pub fn left_extremity(&self) -> Option<f64> {
        match self {
            DistSpec::Exponential { .. } => Some(0.0),
            DistSpec::Lattice { x0, .. } => Some(*x0),
            s if s.is_lattice() => Some(0.0),
            _ => None,
        }
    }

    /// Lattice representation for discrete families.
    pub fn lattice_noise(&self) -> Option<LatticeNoise> {
        let (x0, span, pmf) = match self {
            DistSpec::Poisson { lambda } => (0.0, 1.0, poisson_weights(*lambda, 1e-12)),
            DistSpec::Bernoulli { p } => (0.0, 1.0, RealSeq::new(0, vec![1.0 - p, *p])),
            DistSpec::Geometric { p } => {
                (0.0, 1.0, deconv_core::dist::geometric_weights(*p, 1e-12))
            }
            DistSpec::DiscreteUniform { k } => {
                let w = 1.0 / (*k as f64 + 1.0);
                (0.0, 1.0, RealSeq::new(0, vec![w; k + 1]))
            }
            DistSpec::NegativeBinomial { r, p } => {
                (0.0, 1.0, negative_binomial_weights(*r, *p, 1e-12))
            }
            DistSpec::Lattice { pmf, x0, span } => {
                (*x0, *span, RealSeq::new(0, pmf.clone()))
            }
            _ => return None,
        };
        LatticeNoise::new(x0, span, pmf).ok()
    }

    /// Analytic distribution function.
    pub fn cdf(&self, x: f64) -> f64 {
        match self {
            DistSpec::Normal { mean, sd } => normal_cdf(x, *mean, *sd),
            DistSpec::Laplace { loc, scale } => laplace_cdf(x, *loc, *scale),
            DistSpec::Exponential { rate } => exponential_cdf(x, *rate),
            _ => {
                let noise = self.lattice_noise().expect("lattice family");
                let mut acc = 0.0;
                for (z, &w) in noise.pmf().coeffs().iter().enumerate() {
                    if noise.location(z as i64) <= x + 1e-12 {
                        acc += w;
                    } else {
                        break;
                    }
                }
                acc
            }
        }
    }

    /// Analytic density for absolutely continuous families.
    pub fn pdf(&self, x: f64) -> Option<f64> {
        match self {
            DistSpec::Normal { mean, sd } => Some(deconv_core::dist::normal_pdf(x, *mean, *sd)),
            DistSpec::Laplace { loc, scale } => {
                Some((-((x - loc).abs() / scale)).exp() / (2.0 * scale))
            }
            DistSpec::Exponential { rate } => {
                Some(if x < 0.0 { 0.0 } else { rate * (-rate * x).exp() })
            }
            _ => None,
        }
    }

    /// Draws one observation.
    ///
    /// Parameters must satisfy [`Self::validate`]; the scenario loader
    /// enforces this before any sampling happens.
    pub fn sample(&self, rng: &mut impl Rng) -> f64 {
        match self {
            DistSpec::Poisson { lambda } => {
                rand_distr::Poisson::new(*lambda).unwrap().sample(rng)
            }
            DistSpec::Bernoulli { p } => {
                if rng.gen_bool(*p) {
                    1.0
                } else {
                    0.0
                }
            }
            DistSpec::Geometric { p } => {
                rand_distr::Geometric::new(*p).unwrap().sample(rng) as f64
            }
            DistSpec::DiscreteUniform { k } => rng.gen_range(0..=*k) as f64,
            DistSpec::NegativeBinomial { r, p } => {
                // Gamma–Poisson mixture: λ ~ Gamma(r, (1−p)/p), X|λ ~ Poisson(λ).
                let scale = (1.0 - p) / p;
                if scale == 0.0 {
                    return 0.0;
                }
                let lambda: f64 = rand_distr::Gamma::new(*r, scale).unwrap().sample(rng);
                if lambda <= 0.0 {
                    0.0
                } else {
                    rand_distr::Poisson::new(lambda).unwrap().sample(rng)
                }
            }
            DistSpec::Normal { mean, sd } => {
                rand_distr::Normal::new(*mean, *sd).unwrap().sample(rng)
            }
            DistSpec::Laplace { loc, scale } => {
                let u: f64 = rng.gen_range(-0.5..0.5);
                loc - scale * u.signum() * (1.0 - 2.0 * u.abs()).ln()
            }
            DistSpec::Exponential { rate } => rand_distr::Exp::new(*rate).unwrap().sample(rng),
            DistSpec::Lattice { pmf, x0, span } => {
                let mut u: f64 = rng.gen_range(0.0..1.0);
                for (z, &w) in pmf.iter().enumerate() {
                    if u < w {
                        return x0 + span * z as f64;
                    }
                    u -= w;
                }
                x0 + span * (pmf.len() - 1) as f64
            }
        }
    }
}
