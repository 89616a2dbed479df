//! Transform-free deconvolution of distribution functions in the additive
//! errors-in-variables model `Y = X + ε`.
//!
//! Instead of Fourier inversion or matrix algorithms, everything here works
//! directly in the domain of distribution functions and signed measures:
//!
//! * [`seq`] — algebra of right-lateral sequences: discrete convolution,
//!   convolution powers, binomial transforms and the step distribution
//!   functions they induce.
//! * [`inverse`] — inverse sequences `γ` (single-index noise) and `β`
//!   (index-dependent noise) obtained as finite Neumann sums of convolution
//!   powers, plus closed forms for the classic noise families.
//! * [`deconv`] — exact discrete deconvolution, pointwise distribution
//!   function deconvolution with a divergence diagnostic, and the unbiased
//!   plug-in estimators built from blurred samples.
//! * [`measure`] / [`neumann`] — finite signed mixtures of Dirac atoms and
//!   normal laws, Neumann partial sums of the convolution-complement
//!   operator, and the deconvolution function/density they induce.
//! * [`operator`] — total-variation norms of the complement measure and the
//!   sufficient invertibility condition for the convolution operator.
//! * [`fourier`] — characteristic functions used as an independent oracle
//!   for the Neumann-sum computations.
//!
//! The sequence layer is generic over the coefficient type (see [`scalar`]);
//! the crate-root aliases fix the defaults used throughout: complex `f64`
//! for the general algebra and plain `f64` for the probabilistic layer.

pub mod deconv;
pub mod dist;
pub mod error;
pub mod fourier;
pub mod inverse;
pub mod measure;
pub mod neumann;
pub mod operator;
pub mod quad;
pub mod scalar;
pub mod seq;

pub use error::DeconvError;
pub use scalar::Scalar;

/// Default coefficient type of the sequence algebra.
pub type Coeff = num_complex::Complex64;
/// Right-lateral sequence with complex coefficients.
pub type ComplexSeq = seq::RightLateralSeq<Coeff>;
/// Right-lateral sequence with real coefficients (probabilistic layer).
pub type RealSeq = seq::RightLateralSeq<f64>;
/// Step distribution function with real weights.
pub type RealStepDf = seq::StepDf<f64>;

/// Convenience result alias used across the crate.
pub type Result<T> = std::result::Result<T, DeconvError>;
