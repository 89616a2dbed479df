//! Finite signed mixtures of Dirac atoms and normal laws.
//!
//! These carry the complement measure `π_μ = δ₀ − μ`, its convolution
//! powers and the Neumann partial sums; coefficients are real and may be
//! negative. Coincident Dirac atoms are merged with an absolute location
//! tolerance, since lattice locations are produced by floating arithmetic.

use crate::dist::{normal_cdf, std_normal_cdf};

/// Absolute location tolerance when merging coincident atoms.
pub const ATOM_MERGE_TOL: f64 = 1e-12;
/// Coefficients below this magnitude are dropped after merging.
const COEFF_DROP_TOL: f64 = 1e-15;

/// One mixture component.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Component {
    /// Point mass at `location`.
    Dirac {
        /// Atom location.
        location: f64,
    },
    /// Normal law with the given mean and variance (`variance > 0`).
    Normal {
        /// Mean.
        mean: f64,
        /// Variance.
        variance: f64,
    },
}

/// Finite signed measure as a list of weighted components.
///
/// A `Normal` with variance 0 is normalized to the Dirac at its mean.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct SignedMixture {
    terms: Vec<(f64, Component)>,
}

impl SignedMixture {
    /// Mixture from raw terms.
    pub fn new(terms: Vec<(f64, Component)>) -> Self {
        let terms = terms
            .into_iter()
            .map(|(c, comp)| match comp {
                Component::Normal { mean, variance } if variance <= 0.0 => {
                    (c, Component::Dirac { location: mean })
                }
                other => (c, other),
            })
            .collect();
        SignedMixture { terms }
    }

    /// The zero measure.
    pub fn zero() -> Self {
        SignedMixture::default()
    }

    /// Unit mass at `location`.
    pub fn dirac(location: f64) -> Self {
        SignedMixture::new(vec![(1.0, Component::Dirac { location })])
    }

    /// Scaled point mass.
    pub fn scaled_dirac(coeff: f64, location: f64) -> Self {
        SignedMixture::new(vec![(coeff, Component::Dirac { location })])
    }

    /// Unit-mass normal law.
    pub fn normal(mean: f64, variance: f64) -> Self {
        SignedMixture::new(vec![(1.0, Component::Normal { mean, variance })])
    }

    /// Component terms.
    pub fn terms(&self) -> &[(f64, Component)] {
        &self.terms
    }

    /// True when every component is a Dirac atom.
    pub fn is_atomic(&self) -> bool {
        self.terms
            .iter()
            .all(|(_, c)| matches!(c, Component::Dirac { .. }))
    }

    /// Signed total mass `μ(ℝ)`.
    pub fn total_mass(&self) -> f64 {
        self.terms.iter().map(|(c, _)| c).sum()
    }

    /// Sum of coefficient magnitudes after merging.
    ///
    /// Equals the total variation `|μ|(ℝ)` when the merged components are
    /// pairwise singular — in particular for purely atomic mixtures; it is
    /// only an upper bound when distinct normal components overlap.
    pub fn tv_norm(&self) -> f64 {
        self.merged().terms.iter().map(|(c, _)| c.abs()).sum()
    }

    /// `μ((−∞, a])`.
    pub fn mass_below(&self, a: f64) -> f64 {
        self.terms
            .iter()
            .map(|(c, comp)| match comp {
                Component::Dirac { location } => {
                    if *location <= a + ATOM_MERGE_TOL {
                        *c
                    } else {
                        0.0
                    }
                }
                Component::Normal { mean, variance } => {
                    c * normal_cdf(a, *mean, variance.sqrt())
                }
            })
            .sum()
    }

    /// Distribution function `F_μ(ξ) = μ((−∞, ξ])`.
    pub fn cdf(&self, xi: f64) -> f64 {
        self.mass_below(xi)
    }

    /// Density of the absolutely continuous part plus nothing for atoms.
    pub fn density_at(&self, xi: f64) -> f64 {
        self.terms
            .iter()
            .map(|(c, comp)| match comp {
                Component::Dirac { .. } => 0.0,
                Component::Normal { mean, variance } => {
                    c * crate::dist::normal_pdf(xi, *mean, variance.sqrt())
                }
            })
            .sum()
    }

    /// Adds the terms of `other`.
    pub fn add(&self, other: &Self) -> Self {
        let mut terms = self.terms.clone();
        terms.extend(other.terms.iter().cloned());
        SignedMixture { terms }
    }

    /// Multiplies all coefficients by `factor`.
    pub fn scaled(&self, factor: f64) -> Self {
        SignedMixture {
            terms: self
                .terms
                .iter()
                .map(|(c, comp)| (c * factor, *comp))
                .collect(),
        }
    }

    /// Convolution: Dirac atoms shift, normal laws add their parameters.
    pub fn convolve(&self, other: &Self) -> Self {
        let mut terms = Vec::with_capacity(self.terms.len() * other.terms.len());
        for (ca, a) in &self.terms {
            for (cb, b) in &other.terms {
                let comp = match (a, b) {
                    (Component::Dirac { location: la }, Component::Dirac { location: lb }) => {
                        Component::Dirac { location: la + lb }
                    }
                    (
                        Component::Dirac { location },
                        Component::Normal { mean, variance },
                    )
                    | (
                        Component::Normal { mean, variance },
                        Component::Dirac { location },
                    ) => Component::Normal {
                        mean: mean + location,
                        variance: *variance,
                    },
                    (
                        Component::Normal {
                            mean: m1,
                            variance: v1,
                        },
                        Component::Normal {
                            mean: m2,
                            variance: v2,
                        },
                    ) => Component::Normal {
                        mean: m1 + m2,
                        variance: v1 + v2,
                    },
                };
                terms.push((ca * cb, comp));
            }
        }
        SignedMixture { terms }.merged()
    }

    /// Convolution power `μ^{∗k}` (`k = 0` is `δ₀`).
    pub fn power(&self, k: u32) -> Self {
        let mut acc = SignedMixture::dirac(0.0);
        for _ in 0..k {
            acc = acc.convolve(self);
        }
        acc
    }

    /// Canonical form: coincident components merged, negligible terms
    /// dropped, atoms before normals, locations ascending.
    pub fn merged(&self) -> Self {
        let mut atoms: Vec<(f64, f64)> = Vec::new(); // (location, coeff)
        let mut normals: Vec<(f64, f64, f64)> = Vec::new(); // (mean, variance, coeff)
        for (c, comp) in &self.terms {
            match comp {
                Component::Dirac { location } => atoms.push((*location, *c)),
                Component::Normal { mean, variance } => normals.push((*mean, *variance, *c)),
            }
        }
        atoms.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
        normals.sort_by(|a, b| (a.0, a.1).partial_cmp(&(b.0, b.1)).unwrap());

        let mut terms: Vec<(f64, Component)> = Vec::new();
        let mut it = atoms.into_iter();
        if let Some((mut loc, mut coeff)) = it.next() {
            for (l, c) in it {
                if l - loc <= ATOM_MERGE_TOL {
                    coeff += c;
                } else {
                    if coeff.abs() > COEFF_DROP_TOL {
                        terms.push((coeff, Component::Dirac { location: loc }));
                    }
                    loc = l;
                    coeff = c;
                }
            }
            if coeff.abs() > COEFF_DROP_TOL {
                terms.push((coeff, Component::Dirac { location: loc }));
            }
        }
        let mut it = normals.into_iter();
        if let Some((mut mean, mut var, mut coeff)) = it.next() {
            for (m, v, c) in it {
                if m - mean <= ATOM_MERGE_TOL && (v - var).abs() <= ATOM_MERGE_TOL {
                    coeff += c;
                } else {
                    if coeff.abs() > COEFF_DROP_TOL {
                        terms.push((
                            coeff,
                            Component::Normal {
                                mean,
                                variance: var,
                            },
                        ));
                    }
                    mean = m;
                    var = v;
                    coeff = c;
                }
            }
            if coeff.abs() > COEFF_DROP_TOL {
                terms.push((
                    coeff,
                    Component::Normal {
                        mean,
                        variance: var,
                    },
                ));
            }
        }
        SignedMixture { terms }
    }
}

/// Stieltjes convolution of an analytic d.f. with the mixture:
/// `(F ∗ F_μ)(ξ) = Σ_j c_j (F ∗ F_{comp_j})(ξ)`.
///
/// Dirac components shift the argument; normal components integrate `F`
/// against the normal law by Gauss–Hermite quadrature.
pub fn stieltjes_with_cdf(mixture: &SignedMixture, f: impl Fn(f64) -> f64, xi: f64) -> f64 {
    mixture
        .terms()
        .iter()
        .map(|(c, comp)| match comp {
            Component::Dirac { location } => c * f(xi - location),
            Component::Normal { mean, variance } => {
                c * crate::quad::normal_expectation(*mean, *variance, |s| f(xi - s))
            }
        })
        .sum()
}

/// As [`stieltjes_with_cdf`] for an empirical distribution function: normal
/// components evaluate their c.d.f. at the observations (the plug-in form),
/// Dirac components evaluate the e.d.f. directly.
pub fn stieltjes_with_sample(
    mixture: &SignedMixture,
    sample: &crate::deconv::EmpiricalSample,
    xi: f64,
) -> f64 {
    let n = sample.n() as f64;
    mixture
        .terms()
        .iter()
        .map(|(c, comp)| match comp {
            Component::Dirac { location } => c * sample.edf(xi - location),
            Component::Normal { mean, variance } => {
                let sd = variance.sqrt();
                let mut acc = 0.0;
                for &y in sample.obs() {
                    acc += std_normal_cdf((xi - mean - y) / sd);
                }
                c * acc / n
            }
        })
        .sum()
}
