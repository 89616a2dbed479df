//! Total-variation analysis of the convolution complement and the
//! sufficient invertibility condition for the convolution operator.
//!
//! The operator norm of `T_{η∗μ_ε}` on finite signed measures equals the
//! total variation `|π_{η∗μ_ε}|(ℝ)`. For non-negative purely atomic `η`
//! the Jordan decomposition of `π` is explicit and the norm reduces to the
//! atom overlap `(F_η ∗ F_ε){0}`; continuous ingredients force the norm to
//! at least 1, so the Neumann criterion can never hold there.

use crate::error::DeconvError;
use crate::measure::{Component, SignedMixture, ATOM_MERGE_TOL};
use crate::neumann::NoiseModel;
use crate::Result;

/// Jordan-decomposition branch taken by [`tv_of_pi`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum JordanCase {
    /// Overlap below 1: positive Dirac part and non-positive rest are
    /// mutually singular.
    Split,
    /// Overlap at least 1: `π` is purely non-positive.
    Nonpositive,
    /// Continuous noise or non-atomic `η`: only the lower bound
    /// `|π|(ℝ) ≥ 1` applies and the sufficient condition is void.
    ContinuousLowerBound,
}

/// Outcome of the operator-norm computation.
#[derive(Debug, Clone)]
pub struct TvReport {
    /// `|π_{η∗μ_ε}|(ℝ)`; in the continuous branch this is the exact value
    /// `1 + η(ℝ)` when `η∗μ_ε` is continuous and an upper bound otherwise.
    pub tv: f64,
    /// Atom overlap `(F_η ∗ F_ε){0}`.
    pub atom_overlap: f64,
    /// Whether `η(ℝ) < 2·min{(F_η∗F_ε){0}, 1}` holds.
    pub invertible_sufficient: bool,
    /// Branch taken.
    pub jordan_case: JordanCase,
}

fn eta_mass_checked(eta: &SignedMixture) -> Result<f64> {
    if eta.terms().iter().any(|(c, _)| *c < 0.0) {
        return Err(DeconvError::invalid(
            "transforming measure must be non-negative",
        ));
    }
    Ok(eta.total_mass())
}

/// Atom overlap `(F_η ∗ F_ε){0} = Σ_z F_ε{z} F_η{−z}` for atomic `η` and
/// lattice noise.
fn atom_overlap(eta: &SignedMixture, noise: &crate::deconv::LatticeNoise) -> f64 {
    let mut overlap = 0.0;
    for (c, comp) in eta.merged().terms() {
        let Component::Dirac { location } = comp else {
            continue;
        };
        // Need an ε-atom at −location: z = (−location − z₀)/t.
        let zf = (-location - noise.z0()) / noise.span();
        let z = zf.round();
        if (zf - z).abs() * noise.span() <= ATOM_MERGE_TOL && z >= 0.0 {
            overlap += c * noise.pmf().value_at(z as i64);
        }
    }
    overlap
}

/// Total variation of `π_{η∗μ_ε} = δ₀ − η∗μ_ε` for non-negative `η` via
/// the explicit Jordan decomposition.
pub fn tv_of_pi(eta: &SignedMixture, noise: &NoiseModel) -> Result<TvReport> {
    let eta_mass = eta_mass_checked(eta)?;
    match noise {
        NoiseModel::Lattice(lattice) if eta.is_atomic() => {
            let overlap = atom_overlap(eta, lattice);
            let (tv, jordan_case) = if overlap < 1.0 {
                (1.0 + eta_mass - 2.0 * overlap, JordanCase::Split)
            } else {
                (eta_mass - 1.0, JordanCase::Nonpositive)
            };
            Ok(TvReport {
                tv,
                atom_overlap: overlap,
                invertible_sufficient: eta_mass < 2.0 * overlap.min(1.0),
                jordan_case,
            })
        }
        _ => Ok(TvReport {
            tv: 1.0 + eta_mass,
            atom_overlap: 0.0,
            invertible_sufficient: false,
            jordan_case: JordanCase::ContinuousLowerBound,
        }),
    }
}

/// Sufficient invertibility condition `η(ℝ) < 2·min{(F_η∗F_ε){0}, 1}` for
/// non-negative `η`. True implies the Neumann partial sums are
/// TV-convergent with geometric increments.
pub fn invertibility_check(eta: &SignedMixture, noise: &NoiseModel) -> Result<bool> {
    Ok(tv_of_pi(eta, noise)?.invertible_sufficient)
}
