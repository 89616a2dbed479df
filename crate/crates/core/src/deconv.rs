//! Discrete deconvolution of probability mass and distribution functions,
//! plus the unbiased plug-in estimators driven by a blurred sample.
//!
//! Three layers, mirroring the underlying theory:
//!
//! * exact sequence deconvolution ([`deconv_general`], [`deconv_single`]);
//! * pointwise distribution-function deconvolution through the step d.f. of
//!   the inverse sequence ([`deconv_df_pointwise`], [`cor3_df_deconv`]),
//!   with a divergence diagnostic for the non-right-lateral case;
//! * probability-layer wrappers for lattice targets with countable or
//!   continuous noise ([`cor1_pmf_deconv`], [`cor2_pmf_deconv`]) and the
//!   sample-based estimators ([`plugin_estimator`]).

use crate::error::DeconvError;
use crate::inverse::{beta, gamma, DoubleSeq, GammaTable};
use crate::scalar::Scalar;
use crate::seq::RightLateralSeq;
use crate::{RealSeq, Result};

/// Discrete error law on the lattice `{z₀ + t·z : z ∈ ℕ₀}`.
///
/// `pmf` holds the atom masses `F_ε{z₀ + t·z}`; the first one must be
/// positive and the total mass must be 1 up to the recorded truncation.
#[derive(Debug, Clone)]
pub struct LatticeNoise {
    z0: f64,
    span: f64,
    pmf: RealSeq,
}

impl LatticeNoise {
    /// Lattice noise from explicit atom weights.
    pub fn new(z0: f64, span: f64, pmf: RealSeq) -> Result<Self> {
        if !(span > 0.0) {
            return Err(DeconvError::invalid("lattice span must be positive"));
        }
        if pmf.offset() != 0 || pmf.is_empty() {
            return Err(DeconvError::invalid(
                "lattice pmf must start at index 0 and be nonempty",
            ));
        }
        if pmf.coeffs().iter().any(|&w| w < 0.0) {
            return Err(DeconvError::invalid("lattice pmf must be non-negative"));
        }
        if pmf.value_at(0) <= 0.0 {
            return Err(DeconvError::invalid("lattice pmf needs mass at z₀"));
        }
        let total: f64 = pmf.coeffs().iter().sum::<f64>() + pmf.tail_mass();
        if (total - 1.0).abs() > 1e-6 {
            return Err(DeconvError::invalid(format!(
                "lattice pmf mass {total} is not 1 within truncation tolerance"
            )));
        }
        Ok(LatticeNoise { z0, span, pmf })
    }

    /// Degenerate noise `ε ≡ z₀`.
    pub fn degenerate(z0: f64) -> Self {
        LatticeNoise {
            z0,
            span: 1.0,
            pmf: RealSeq::new(0, vec![1.0]),
        }
    }

    /// Bernoulli noise on `{z₀, z₀ + span}` with success probability `p`.
    pub fn bernoulli(p: f64, z0: f64, span: f64) -> Result<Self> {
        if !(0.0..1.0).contains(&p) {
            return Err(DeconvError::invalid("Bernoulli p must be in [0, 1)"));
        }
        LatticeNoise::new(z0, span, RealSeq::new(0, vec![1.0 - p, p]))
    }

    /// Poisson noise with rate `λ`, truncated at tail mass `1e−12`.
    pub fn poisson(lambda: f64, z0: f64, span: f64) -> Result<Self> {
        LatticeNoise::new(z0, span, crate::dist::poisson_weights(lambda, 1e-12))
    }

    /// Geometric noise with success probability `p`, truncated at `1e−12`.
    pub fn geometric(p: f64, z0: f64, span: f64) -> Result<Self> {
        LatticeNoise::new(z0, span, crate::dist::geometric_weights(p, 1e-12))
    }

    /// Flat noise on `{z₀, …, z₀ + K·span}`.
    pub fn uniform(k: usize, z0: f64, span: f64) -> Result<Self> {
        let w = 1.0 / (k as f64 + 1.0);
        LatticeNoise::new(z0, span, RealSeq::new(0, vec![w; k + 1]))
    }

    /// Left extremity of the support.
    pub fn z0(&self) -> f64 {
        self.z0
    }

    /// Lattice span.
    pub fn span(&self) -> f64 {
        self.span
    }

    /// Atom weights `F_ε{z₀ + t·z}` indexed by `z`.
    pub fn pmf(&self) -> &RealSeq {
        &self.pmf
    }

    /// Mass at the left extremity, `F_ε{z₀}`.
    pub fn mass_at_z0(&self) -> f64 {
        self.pmf.value_at(0)
    }

    /// Atom location `z₀ + t·z`.
    pub fn location(&self, z: i64) -> f64 {
        self.z0 + self.span * z as f64
    }

    /// Inverse sequence `γ{ü_{ε,+}}` of the normalized weights.
    pub fn gamma(&self, zmax: usize) -> GammaTable<f64> {
        // pmf(0) > 0 is a construction invariant, so this cannot fail.
        gamma(&self.pmf, zmax).expect("validated pmf")
    }
}

/// Strictly increasing support grid `ξ₀ < ξ₁ < …`, optionally equidistant.
#[derive(Debug, Clone)]
pub struct SupportGrid {
    points: Vec<f64>,
    span: Option<f64>,
}

impl SupportGrid {
    /// Grid from explicit points; detects an equidistant span if present.
    pub fn new(points: Vec<f64>) -> Result<Self> {
        if points.is_empty() {
            return Err(DeconvError::invalid("support grid must be nonempty"));
        }
        if points.windows(2).any(|w| !(w[0] < w[1])) {
            return Err(DeconvError::invalid(
                "support grid must be strictly increasing",
            ));
        }
        let span = if points.len() >= 2 {
            let s = points[1] - points[0];
            let equi = points
                .windows(2)
                .all(|w| ((w[1] - w[0]) - s).abs() <= 1e-9 * s.max(1.0));
            equi.then_some(s)
        } else {
            None
        };
        Ok(SupportGrid { points, span })
    }

    /// Equidistant grid `ξ_ℓ = ξ₀ + s·ℓ`.
    pub fn equidistant(xi0: f64, span: f64, len: usize) -> Result<Self> {
        if !(span > 0.0) || len == 0 {
            return Err(DeconvError::invalid("grid needs positive span and length"));
        }
        Ok(SupportGrid {
            points: (0..len).map(|l| xi0 + span * l as f64).collect(),
            span: Some(span),
        })
    }

    /// Grid points.
    pub fn points(&self) -> &[f64] {
        &self.points
    }

    /// Left extremity `ξ₀`.
    pub fn xi0(&self) -> f64 {
        self.points[0]
    }

    /// Span when the grid is equidistant.
    pub fn span(&self) -> Option<f64> {
        self.span
    }

    /// Number of grid points.
    pub fn len(&self) -> usize {
        self.points.len()
    }

    /// True when the grid has no points (constructors forbid this).
    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// Default probe points `ζ_ℓ = ξ_{ℓ+1}`, extended past the last grid
    /// point by the trailing gap.
    pub fn default_probes(&self) -> Vec<f64> {
        let n = self.points.len();
        let mut probes = Vec::with_capacity(n);
        for l in 0..n {
            if l + 1 < n {
                probes.push(self.points[l + 1]);
            } else {
                let gap = if n >= 2 {
                    self.points[n - 1] - self.points[n - 2]
                } else {
                    1.0
                };
                probes.push(self.points[n - 1] + gap);
            }
        }
        probes
    }
}

/// Sorted i.i.d. observations with their empirical distribution function.
#[derive(Debug, Clone)]
pub struct EmpiricalSample {
    obs: Vec<f64>,
}

impl EmpiricalSample {
    /// Sample from observations (sorted internally).
    pub fn new(mut obs: Vec<f64>) -> Result<Self> {
        if obs.is_empty() {
            return Err(DeconvError::EmptySample);
        }
        if obs.iter().any(|y| !y.is_finite()) {
            return Err(DeconvError::invalid("observations must be finite"));
        }
        obs.sort_by(|a, b| a.partial_cmp(b).unwrap());
        Ok(EmpiricalSample { obs })
    }

    /// Sample size `n`.
    pub fn n(&self) -> usize {
        self.obs.len()
    }

    /// Sorted observations.
    pub fn obs(&self) -> &[f64] {
        &self.obs
    }

    /// Smallest observation.
    pub fn min(&self) -> f64 {
        self.obs[0]
    }

    /// Empirical distribution function `F(ξ, n) = #{Yₖ ≤ ξ}/n`.
    pub fn edf(&self, xi: f64) -> f64 {
        let k = self.obs.partition_point(|&y| y <= xi);
        k as f64 / self.obs.len() as f64
    }
}

/// General discrete deconvolution: recovers `q|_𝕃` from
/// `r(ℓ) = (q ∗ p(ℓ,·))(ℓ)` via `q(ℓ) = (r̈ ∗ β{p̈₊}(ℓ,·))(ℓ)`.
///
/// Returns `q(0..=lmax)` with `lmax` the smaller of the double-sequence cap
/// and the last index of `r`.
pub fn deconv_general<T: Scalar>(
    r: &RightLateralSeq<T>,
    p: &DoubleSeq<T>,
) -> Result<RightLateralSeq<T>> {
    let Some(r_last) = r.last_index() else {
        return Ok(RightLateralSeq::empty());
    };
    let lmax = p.lmax().min(r_last).max(0) as usize;
    let b = beta(p, lmax)?;
    let mut out = Vec::with_capacity(lmax + 1);
    for l in 0..=lmax as i64 {
        let mut acc = T::zero();
        for z in 0..=l {
            let p0 = p.value(l - z, 0);
            if p0.is_zero() {
                return Err(DeconvError::SingularLeading { index: l - z });
            }
            // r̈(ℓ−z) = r(ℓ−z)/p(ℓ−z, 0)
            acc += r.value_at(l - z) / p0 * b.at(l, z);
        }
        out.push(acc);
    }
    Ok(RightLateralSeq::new(0, out))
}

/// Single-index deconvolution `q(ℓ) = (r̈ ∗ γ{ü₊})(ℓ)` with `r̈ = r/u(0)`.
pub fn deconv_single<T: Scalar>(
    r: &RightLateralSeq<T>,
    u: &RightLateralSeq<T>,
) -> Result<RightLateralSeq<T>> {
    let Some(r_last) = r.last_index() else {
        return Ok(RightLateralSeq::empty());
    };
    let lmax = r_last.max(0) as usize;
    let g = gamma(u, lmax)?;
    let u0 = u.value_at(0);
    let mut out = Vec::with_capacity(lmax + 1);
    for l in 0..=lmax as i64 {
        let mut acc = T::zero();
        for z in 0..=l {
            acc += r.value_at(l - z) * g.at(z);
        }
        out.push(acc / u0.clone());
    }
    Ok(RightLateralSeq::new(0, out))
}

/// Stopping rule for the monotone mode of [`deconv_df_pointwise`].
#[derive(Debug, Clone, Copy)]
pub struct MonotoneGuard {
    /// Terms below this magnitude count towards the stop condition.
    pub tol: f64,
    /// Hard cap on accumulated terms.
    pub max_terms: usize,
}

impl Default for MonotoneGuard {
    fn default() -> Self {
        MonotoneGuard {
            tol: 1e-10,
            max_terms: 10_000,
        }
    }
}

/// Evaluation mode for [`deconv_df_pointwise`].
#[derive(Debug, Clone, Copy)]
pub enum DfMode {
    /// `R` derives from a target vanishing below `xi0`: the convolution is
    /// an exact finite sum.
    RightLateral {
        /// Left extremity of the target function.
        xi0: f64,
    },
    /// Non-decreasing target with summability assumed by the caller; terms
    /// are accumulated under a divergence watch.
    Monotone(MonotoneGuard),
}

const CONSECUTIVE_SMALL_TO_STOP: usize = 5;
const OSC_MEDIAN_WINDOW: usize = 10;
const OSC_WINDOW_LEN: usize = 10;
const OSC_GROWING_WINDOWS: usize = 3;

/// Pointwise d.f. deconvolution `u(0)⁻¹ (R ∗ Θ{γ{ü₊}})(ξ)`.
///
/// In monotone mode the partial sums are watched for growing oscillation
/// (running deviation from the median of the recent partial sums, maximized
/// over windows); sustained growth aborts with a divergence diagnostic
/// rather than returning a meaningless value.
pub fn deconv_df_pointwise(
    r_fn: impl Fn(f64) -> f64,
    u: &RealSeq,
    xi: f64,
    mode: DfMode,
) -> Result<f64> {
    let u0 = leading(u)?;
    match mode {
        DfMode::RightLateral { xi0 } => {
            let n = (xi - xi0).floor();
            if n < 0.0 {
                return Ok(0.0);
            }
            let n = n as usize;
            let g = gamma(u, n)?;
            let mut acc = 0.0;
            for z in 0..=n {
                acc += g.at(z as i64) * r_fn(xi - z as f64);
            }
            Ok(acc / u0)
        }
        DfMode::Monotone(guard) => {
            let mut gamma_values = vec![1.0f64];
            let mut sum = 0.0;
            let mut small_streak = 0usize;
            let mut recent = std::collections::VecDeque::with_capacity(OSC_MEDIAN_WINDOW);
            let mut window_max = 0.0f64;
            let mut window_fill = 0usize;
            let mut window_maxes: Vec<f64> = Vec::new();

            for z in 0..guard.max_terms {
                if z > 0 {
                    extend_gamma(u, u0, &mut gamma_values);
                }
                let term = gamma_values[z] * r_fn(xi - z as f64);
                sum += term;

                if !term.is_finite() || !sum.is_finite() {
                    return Err(DeconvError::Divergence {
                        terms: z + 1,
                        oscillation: f64::INFINITY,
                        last_partial: sum,
                    });
                }

                if term.abs() < guard.tol {
                    small_streak += 1;
                    if small_streak >= CONSECUTIVE_SMALL_TO_STOP {
                        return Ok(sum / u0);
                    }
                } else {
                    small_streak = 0;
                }

                if recent.len() == OSC_MEDIAN_WINDOW {
                    recent.pop_front();
                }
                recent.push_back(sum);
                let dev = (sum - median(recent.make_contiguous())).abs();
                window_max = window_max.max(dev);
                window_fill += 1;
                if window_fill == OSC_WINDOW_LEN {
                    window_maxes.push(window_max);
                    window_fill = 0;
                    window_max = 0.0;
                    let k = window_maxes.len();
                    if k >= OSC_GROWING_WINDOWS {
                        let tail = &window_maxes[k - OSC_GROWING_WINDOWS..];
                        let growing = tail.windows(2).all(|w| w[0] < w[1]);
                        if growing && tail[OSC_GROWING_WINDOWS - 1] > 10.0 * guard.tol {
                            return Err(DeconvError::Divergence {
                                terms: z + 1,
                                oscillation: tail[OSC_GROWING_WINDOWS - 1],
                                last_partial: sum,
                            });
                        }
                    }
                }
            }
            Ok(sum / u0)
        }
    }
}

/// Partial sums `S_T = Σ_{z=0}^{T} γ(z) R(ξ−z)` for `T = 0..=t_max`.
///
/// Diagnostic companion to [`deconv_df_pointwise`]; note the `u(0)⁻¹`
/// prefactor is not applied.
pub fn df_partial_sum_trace(
    r_fn: impl Fn(f64) -> f64,
    u: &RealSeq,
    xi: f64,
    t_max: usize,
) -> Result<Vec<f64>> {
    let g = gamma(u, t_max)?;
    let mut out = Vec::with_capacity(t_max + 1);
    let mut acc = 0.0;
    for z in 0..=t_max {
        acc += g.at(z as i64) * r_fn(xi - z as f64);
        out.push(acc);
    }
    Ok(out)
}

fn leading(u: &RealSeq) -> Result<f64> {
    if u.offset() != 0 {
        return Err(DeconvError::invalid("noise sequence must start at index 0"));
    }
    let u0 = u.value_at(0);
    if u0 == 0.0 {
        return Err(DeconvError::SingularLeading { index: 0 });
    }
    Ok(u0)
}

fn extend_gamma(u: &RealSeq, u0: f64, values: &mut Vec<f64>) {
    let z = values.len() as i64;
    let len = u.len() as i64;
    let k_lo = (z - (len - 1)).max(0);
    let mut acc = 0.0;
    for k in k_lo..z {
        acc += u.value_at(z - k) * values[k as usize];
    }
    values.push(-acc / u0);
}

fn median(xs: &[f64]) -> f64 {
    let mut v = xs.to_vec();
    v.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

/// Lattice-target deconvolution with countable left-bounded noise: recovers
/// the atom masses `p_X(ℓ) = F_X{ξ_ℓ}` from the atoms of `F_Y`.
///
/// `eps_pmf_at` and `fy_atom_at` evaluate the atom masses of `F_ε` and
/// `F_Y` at real locations; `z0` is the left extremity of the noise.
pub fn cor1_pmf_deconv(
    grid: &SupportGrid,
    eps_pmf_at: impl Fn(f64) -> f64,
    z0: f64,
    fy_atom_at: impl Fn(f64) -> f64,
) -> Result<RealSeq> {
    let f0 = eps_pmf_at(z0);
    if f0 <= 0.0 {
        return Err(DeconvError::invalid(
            "noise must have positive mass at its left extremity",
        ));
    }
    let pts = grid.points().to_vec();
    let lmax = pts.len() - 1;
    let r = RealSeq::new(
        0,
        pts.iter().map(|&xi| fy_atom_at(z0 + xi)).collect(),
    );

    if grid.span().is_some() {
        // Equidistant grids reduce to single-index noise.
        let xi0 = grid.xi0();
        let u = RealSeq::new(
            0,
            pts.iter().map(|&xi| eps_pmf_at(z0 + (xi - xi0))).collect(),
        );
        return deconv_single(&r, &u);
    }

    let rows: Vec<Vec<f64>> = (0..=lmax)
        .map(|l| (0..=l).map(|z| eps_pmf_at(z0 + pts[l] - pts[l - z])).collect())
        .collect();
    deconv_general(&r, &DoubleSeq::from_rows(rows))
}

/// Lattice-target deconvolution with arbitrary left-bounded noise given by
/// its distribution function, probed strictly between grid points.
///
/// `probes` supplies `ζ_ℓ` with `ξ_ℓ < ζ_ℓ ≤ ξ_{ℓ+1}`; `None` uses
/// `ζ_ℓ = ξ_{ℓ+1}`. Requires `F_ε(z₀) = 0` and positive `F_ε` at every
/// probe offset.
pub fn cor2_pmf_deconv(
    grid: &SupportGrid,
    probes: Option<&[f64]>,
    feps_cdf: impl Fn(f64) -> f64,
    z0: f64,
    fy_cdf: impl Fn(f64) -> f64,
) -> Result<RealSeq> {
    if feps_cdf(z0).abs() > 1e-12 {
        return Err(DeconvError::invalid(
            "noise distribution function must vanish at its left extremity z₀",
        ));
    }
    let pts = grid.points().to_vec();
    let lmax = pts.len() - 1;
    let zetas: Vec<f64> = match probes {
        Some(z) => z.to_vec(),
        None => grid.default_probes(),
    };
    if zetas.len() != pts.len() {
        return Err(DeconvError::invalid("one probe point per grid point"));
    }
    for l in 0..=lmax {
        if !(pts[l] < zetas[l]) || (l < lmax && !(zetas[l] <= pts[l + 1])) {
            return Err(DeconvError::ProbeConstraint {
                index: l,
                detail: format!("need ξ_ℓ < ζ_ℓ ≤ ξ_(ℓ+1), got ζ = {}", zetas[l]),
            });
        }
        if feps_cdf(z0 + zetas[l] - pts[l]) <= 0.0 {
            return Err(DeconvError::ProbeConstraint {
                index: l,
                detail: "F_ε vanishes at the probe offset".into(),
            });
        }
    }

    let r = RealSeq::new(
        0,
        zetas.iter().map(|&zeta| fy_cdf(z0 + zeta)).collect(),
    );
    let rows: Vec<Vec<f64>> = (0..=lmax)
        .map(|l| {
            (0..=l)
                .map(|z| feps_cdf(z0 + zetas[l] - pts[l - z]))
                .collect()
        })
        .collect();
    deconv_general(&r, &DoubleSeq::from_rows(rows))
}

/// Target-side knowledge for [`cor3_df_deconv`].
#[derive(Debug, Clone, Copy)]
pub enum Cor3Mode {
    /// `F_X` vanishes below `x_min`: exact finite evaluation.
    RightLateralTarget {
        /// Left extremity of the target support.
        x_min: f64,
    },
    /// General non-decreasing target under the summability assumption.
    Monotone(MonotoneGuard),
}

/// Distribution-function deconvolution with equidistant lattice noise:
/// `F_X(ξ) = F_ε{z₀}⁻¹ (P_Y ∗ Θ{γ{ü_{ε,+}}})(ξ/t)` with
/// `P_Y(x) = F_Y(z₀ + t·x)`.
pub fn cor3_df_deconv(
    noise: &LatticeNoise,
    fy: impl Fn(f64) -> f64,
    xi: f64,
    mode: Cor3Mode,
) -> Result<f64> {
    let t = noise.span();
    let z0 = noise.z0();
    let r_fn = |x: f64| fy(z0 + t * x);
    let df_mode = match mode {
        Cor3Mode::RightLateralTarget { x_min } => DfMode::RightLateral { xi0: x_min / t },
        Cor3Mode::Monotone(g) => DfMode::Monotone(g),
    };
    deconv_df_pointwise(r_fn, noise.pmf(), xi / t, df_mode)
}

/// Plug-in estimator variants for the standard study setups.
pub enum PluginVariant<'a> {
    /// Lattice target and lattice noise; jumps at `{Y_i + t·z}`.
    Fig1 {
        /// Error law.
        noise: &'a LatticeNoise,
    },
    /// Lattice target on `{ξ₀ + s·ℓ}` with continuous noise of d.f.
    /// `eps_cdf`, probed at offset `σ ∈ (0, s]`.
    Fig2 {
        /// Noise distribution function.
        eps_cdf: &'a dyn Fn(f64) -> f64,
        /// Left extremity of the noise support.
        z0: f64,
        /// Target grid origin.
        xi0: f64,
        /// Target grid span.
        span: f64,
        /// Probe offset.
        sigma: f64,
    },
    /// Arbitrary left-bounded target with lattice noise (same sum as Fig1,
    /// derived from the d.f. identity instead of the atom identity).
    Fig3 {
        /// Error law.
        noise: &'a LatticeNoise,
    },
}

/// Evaluates the unbiased plug-in estimator `𝔉_n` on a grid of points.
pub fn plugin_estimator(
    sample: &EmpiricalSample,
    grid: &[f64],
    variant: PluginVariant<'_>,
) -> Result<Vec<f64>> {
    if grid.is_empty() {
        return Ok(Vec::new());
    }
    match variant {
        PluginVariant::Fig1 { noise } | PluginVariant::Fig3 { noise } => {
            let t = noise.span();
            let z0 = noise.z0();
            let n = sample.n() as f64;
            let f0 = noise.mass_at_z0();
            let grid_max = grid.iter().cloned().fold(f64::MIN, f64::max);
            let zmax = ((grid_max - sample.min() + z0) / t).floor().max(0.0) as usize;
            let theta = prefix_table(&noise.gamma(zmax));
            let values = grid
                .iter()
                .map(|&xi| {
                    let mut acc = 0.0;
                    for &y in sample.obs() {
                        acc += theta_lookup(&theta, ((xi - y + z0) / t).floor());
                    }
                    acc / (n * f0)
                })
                .collect();
            Ok(values)
        }
        PluginVariant::Fig2 {
            eps_cdf,
            z0,
            xi0,
            span,
            sigma,
        } => {
            if !(sigma > 0.0 && sigma <= span) {
                return Err(DeconvError::invalid("probe offset must satisfy 0 < σ ≤ s"));
            }
            let f_sigma = eps_cdf(z0 + sigma);
            if f_sigma <= 0.0 {
                return Err(DeconvError::invalid("F_ε must be positive at z₀ + σ"));
            }
            let n = sample.n() as f64;
            let grid_max = grid.iter().cloned().fold(f64::MIN, f64::max);
            let l_hi = ((grid_max - xi0) / span).floor().max(0.0) as i64;
            let w_min = (sample.min() - z0 - xi0 - sigma) / span;
            let zmax = ((l_hi as f64 - w_min).floor().max(0.0)) as usize;
            // Probe weights u(z) = F_ε(z₀ + σ + s·z); u(0) > 0 checked above.
            let u = RealSeq::new(
                0,
                (0..=zmax as i64)
                    .map(|z| eps_cdf(z0 + sigma + span * z as f64))
                    .collect(),
            );
            let theta = prefix_table(&gamma(&u, zmax)?);
            let values = grid
                .iter()
                .map(|&xi| {
                    let l_top = ((xi - xi0) / span).floor();
                    if l_top < 0.0 {
                        return 0.0;
                    }
                    let mut acc = 0.0;
                    for &y in sample.obs() {
                        let w = (y - z0 - xi0 - sigma) / span;
                        for l in 0..=(l_top as i64) {
                            acc += theta_lookup(&theta, (l as f64 - w).floor());
                        }
                    }
                    acc / (n * f_sigma)
                })
                .collect();
            Ok(values)
        }
    }
}

fn prefix_table(g: &GammaTable<f64>) -> Vec<f64> {
    let mut acc = 0.0;
    g.values()
        .iter()
        .map(|v| {
            acc += v;
            acc
        })
        .collect()
}

fn theta_lookup(prefix: &[f64], m: f64) -> f64 {
    if m < 0.0 || prefix.is_empty() {
        0.0
    } else {
        let idx = (m as usize).min(prefix.len() - 1);
        prefix[idx]
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dist::{exponential_cdf, laplace_cdf, poisson_weights};
    use crate::seq::{conv, seq_approx_eq};
    use rand::prelude::*;
    use rand_chacha::ChaCha8Rng;

    fn fseq(coeffs: &[f64]) -> RealSeq {
        RealSeq::new(0, coeffs.to_vec())
    }

    #[test]
    fn deconv_general_with_dirac_noise_returns_r() {
        let r = fseq(&[0.4, 0.3, 0.2, 0.1]);
        let p = DoubleSeq::from_fn(3, |_, z| if z == 0 { 1.0 } else { 0.0 });
        let q = deconv_general(&r, &p).unwrap();
        assert!(seq_approx_eq(&q, &r, 1e-14, 1e-12));
    }

    #[test]
    fn deconv_general_round_trip_random_triangular() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..10 {
            let lmax = 8usize;
            let q: Vec<f64> = (0..=lmax).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let rows: Vec<Vec<f64>> = (0..=lmax)
                .map(|l| {
                    let mut row: Vec<f64> =
                        (0..=l).map(|_| rng.gen_range(-0.5..0.5)).collect();
                    row[0] = 1.0 + rng.gen_range(0.0..1.0);
                    row
                })
                .collect();
            // r(ℓ) = Σ_z q(ℓ−z) p(ℓ,z)
            let r: Vec<f64> = (0..=lmax)
                .map(|l| (0..=l).map(|z| q[l - z] * rows[l][z]).sum())
                .collect();
            let p = DoubleSeq::from_rows(rows);
            let got = deconv_general(&fseq(&r), &p).unwrap();
            assert!(seq_approx_eq(&got, &fseq(&q), 1e-11, 1e-10));
        }
    }

    #[test]
    fn deconv_general_recovers_degenerate_target() {
        let lmax = 6usize;
        let rows: Vec<Vec<f64>> = (0..=lmax)
            .map(|l| {
                (0..=l)
                    .map(|z| if z == 0 { 0.7 } else { 0.3 / z as f64 })
                    .collect()
            })
            .collect();
        // q = δ₀ means r(ℓ) = p(ℓ, ℓ).
        let r: Vec<f64> = (0..=lmax).map(|l| rows[l][l]).collect();
        let p = DoubleSeq::from_rows(rows);
        let got = deconv_general(&fseq(&r), &p).unwrap();
        let mut want = vec![0.0; lmax + 1];
        want[0] = 1.0;
        assert!(seq_approx_eq(&got, &fseq(&want), 1e-12, 1e-12));
    }

    #[test]
    fn deconv_single_round_trips() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let q: Vec<f64> = (0..10).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let q = fseq(&q);

        let bern = fseq(&[0.7, 0.3]);
        let pois = poisson_weights(1.0, 1e-14);
        for u in [&bern, &pois] {
            let r = conv(u, &q);
            let got = deconv_single(&r, u).unwrap();
            assert!(seq_approx_eq(&got, &q, 1e-12, 1e-12));
        }
    }

    #[test]
    fn deconv_single_of_noise_itself_is_dirac() {
        let u = fseq(&[0.5, 0.25, 0.25]);
        let got = deconv_single(&u, &u).unwrap();
        assert!((got.value_at(0) - 1.0).abs() < 1e-14);
        for l in 1..=2 {
            assert!(got.value_at(l).abs() < 1e-14);
        }
    }

    #[test]
    fn df_pointwise_with_dirac_noise_is_identity() {
        let q = |xi: f64| if xi >= 0.0 { 1.0 } else { 0.0 };
        let u = fseq(&[1.0]);
        for xi in [-1.5, -0.2, 0.0, 0.4, 3.7] {
            let got =
                deconv_df_pointwise(q, &u, xi, DfMode::RightLateral { xi0: 0.0 }).unwrap();
            assert_eq!(got, q(xi));
        }
    }

    #[test]
    fn df_pointwise_lower_tail_is_zero() {
        let u = fseq(&[0.6, 0.4]);
        let got =
            deconv_df_pointwise(|_| 1.0, &u, -3.2, DfMode::RightLateral { xi0: 0.0 }).unwrap();
        assert_eq!(got, 0.0);
    }

    /// Laplace target and Bernoulli noise: the convergence threshold
    /// `b = log(p/(1−p)) − 1/σ` separates the two monotone-mode outcomes.
    #[test]
    fn laplace_bernoulli_divergence_threshold() {
        let sigma = 2.0f64;
        let xi = -1.0;

        // p = 0.7 puts b > 0: the diagnostic must fire.
        let u = fseq(&[0.3, 0.7]);
        let fy = move |x: f64| {
            let kappa = 0.7 * (-1.0 / sigma).exp() + 0.3;
            if x <= 0.0 {
                0.5 * kappa * (x / sigma).exp()
            } else {
                0.7 * laplace_cdf(x - 1.0, 0.0, sigma) + 0.3 * laplace_cdf(x, 0.0, sigma)
            }
        };
        let out = deconv_df_pointwise(fy, &u, xi, DfMode::Monotone(MonotoneGuard::default()));
        assert!(matches!(out, Err(DeconvError::Divergence { .. })), "{out:?}");

        // p = 0.3 puts b < 0: converges to F_X(ξ) = ½ exp(ξ/σ).
        let u = fseq(&[0.7, 0.3]);
        let fy = move |x: f64| {
            0.3 * laplace_cdf(x - 1.0, 0.0, sigma) + 0.7 * laplace_cdf(x, 0.0, sigma)
        };
        let got =
            deconv_df_pointwise(fy, &u, xi, DfMode::Monotone(MonotoneGuard::default())).unwrap();
        let want = 0.5 * (xi / sigma).exp();
        assert!((got - want).abs() < 1e-6, "{got} vs {want}");
    }

    #[test]
    fn monotone_mode_flags_boundary_oscillation() {
        // Exactly at the threshold (b = 0) the partial sums alternate
        // between two accumulation points and never settle; the watch
        // flags the sustained oscillation instead of returning one of
        // the two values.
        let sigma = 2.0f64;
        let ratio = (1.0f64 / sigma).exp();
        let p = ratio / (1.0 + ratio);
        let u = fseq(&[1.0 - p, p]);
        let kappa = p * (-1.0 / sigma).exp() + 1.0 - p;
        let fy = move |x: f64| 0.5 * kappa * (x / sigma).exp();
        let out = deconv_df_pointwise(fy, &u, -1.0, DfMode::Monotone(MonotoneGuard::default()));
        assert!(matches!(out, Err(DeconvError::Divergence { .. })), "{out:?}");
    }

    #[test]
    fn partial_sum_trace_matches_geometric_formula() {
        let (p, sigma, xi) = (0.7f64, 2.0f64, -0.5f64);
        let kappa = p * (-1.0 / sigma).exp() + 1.0 - p;
        let b = (p / (1.0 - p)).ln() - 1.0 / sigma;
        let u = fseq(&[1.0 - p, p]);
        // Unnormalized exponential tail profile: R(x) = κ e^{x/σ}.
        let r_fn = move |x: f64| kappa * (x / sigma).exp();
        let trace = df_partial_sum_trace(r_fn, &u, xi, 50).unwrap();
        for (t, got) in trace.iter().enumerate() {
            let want = kappa * (xi / sigma).exp() * (1.0 - (-b.exp()).powi(t as i32 + 1))
                / (1.0 + b.exp());
            assert!((got - want).abs() < 1e-9 * want.abs().max(1.0), "T={t}");
        }
    }

    #[test]
    fn cor1_recovers_lattice_target_under_poisson_noise() {
        let px = fseq(&[0.25, 0.25, 0.3, 0.2]);
        let pe = poisson_weights(0.8, 1e-15);
        let py = conv(&px, &pe);
        let grid = SupportGrid::equidistant(0.0, 1.0, 4).unwrap();
        let got = cor1_pmf_deconv(
            &grid,
            |loc| {
                let z = loc.round() as i64;
                pe.value_at(z)
            },
            0.0,
            |loc| py.value_at(loc.round() as i64),
        )
        .unwrap();
        assert!(seq_approx_eq(&got, &px, 1e-11, 1e-10));
    }

    #[test]
    fn cor1_nonequidistant_grid_matches_forward_model() {
        // Grid {0, 1, 2.5}: noise atoms looked up at grid differences.
        let grid = SupportGrid::new(vec![0.0, 1.0, 2.5]).unwrap();
        assert!(grid.span().is_none());
        let px = [0.5, 0.3, 0.2];
        // Noise with atoms at offsets 0, 1, 1.5, 2.5 from z₀ = 0.
        let atoms: &[(f64, f64)] = &[(0.0, 0.4), (1.0, 0.3), (1.5, 0.2), (2.5, 0.1)];
        let eps_at = |loc: f64| {
            atoms
                .iter()
                .find(|(a, _)| (a - loc).abs() < 1e-9)
                .map_or(0.0, |(_, w)| *w)
        };
        // F_Y{ξ_ℓ} = Σ_i F_X{ξ_i} F_ε{ξ_ℓ − ξ_i}
        let pts = grid.points().to_vec();
        let fy_at = move |loc: f64| -> f64 {
            pts.iter()
                .enumerate()
                .map(|(i, &xi)| px[i] * eps_at(loc - xi))
                .sum()
        };
        let got = cor1_pmf_deconv(&grid, eps_at, 0.0, fy_at).unwrap();
        assert!(seq_approx_eq(&got, &fseq(&px), 1e-12, 1e-12));
    }

    #[test]
    fn cor1_with_shifted_noise_support() {
        // Noise left extremity at z₀ = −1.
        let px = [0.4, 0.6];
        let eps_at = |loc: f64| {
            if (loc + 1.0).abs() < 1e-9 {
                0.7
            } else if loc.abs() < 1e-9 {
                0.3
            } else {
                0.0
            }
        };
        let fy_at = move |loc: f64| -> f64 {
            (0..2).map(|x| px[x] * eps_at(loc - x as f64)).sum()
        };
        let grid = SupportGrid::equidistant(0.0, 1.0, 2).unwrap();
        let got = cor1_pmf_deconv(&grid, eps_at, -1.0, fy_at).unwrap();
        assert!(seq_approx_eq(&got, &fseq(&px), 1e-12, 1e-12));
    }

    #[test]
    fn cor1_degenerate_noise_reads_off_fy() {
        let grid = SupportGrid::equidistant(0.0, 1.0, 3).unwrap();
        let fy = [0.3, 0.45, 0.25];
        let got = cor1_pmf_deconv(
            &grid,
            |loc| if loc.abs() < 1e-12 { 1.0 } else { 0.0 },
            0.0,
            move |loc| {
                let z = loc.round() as usize;
                fy.get(z).copied().unwrap_or(0.0)
            },
        )
        .unwrap();
        assert!(seq_approx_eq(&got, &fseq(&fy), 1e-13, 1e-13));
    }

    #[test]
    fn cor2_recovers_lattice_target_under_exponential_noise() {
        let px = [0.4, 0.3, 0.2, 0.1];
        let rate = 1.0;
        let feps = move |x: f64| exponential_cdf(x, rate);
        let fy = move |x: f64| -> f64 {
            px.iter()
                .enumerate()
                .map(|(i, &m)| m * exponential_cdf(x - i as f64, rate))
                .sum()
        };
        let grid = SupportGrid::equidistant(0.0, 1.0, 4).unwrap();
        let got = cor2_pmf_deconv(&grid, None, feps, 0.0, fy).unwrap();
        assert!(seq_approx_eq(&got, &fseq(&px), 1e-10, 1e-10));
    }

    #[test]
    fn cor2_with_fractional_probe_offset() {
        // Probes strictly inside the grid cells: ζ_ℓ = ξ_ℓ + ½.
        let px = [0.35, 0.4, 0.25];
        let rate = 1.3;
        let feps = move |x: f64| exponential_cdf(x, rate);
        let fy = move |x: f64| -> f64 {
            px.iter()
                .enumerate()
                .map(|(i, &m)| m * exponential_cdf(x - i as f64, rate))
                .sum()
        };
        let grid = SupportGrid::equidistant(0.0, 1.0, 3).unwrap();
        let probes = vec![0.5, 1.5, 2.5];
        let got = cor2_pmf_deconv(&grid, Some(&probes), feps, 0.0, fy).unwrap();
        assert!(seq_approx_eq(&got, &fseq(&px), 1e-11, 1e-10));

        // The sample estimator with the same offset agrees with the
        // partial sums of the e.d.f.-driven recovery.
        let sample = EmpiricalSample::new(vec![0.4, 0.9, 1.3, 2.8, 3.1]).unwrap();
        let fy_edf = {
            let s = sample.clone();
            move |x: f64| s.edf(x)
        };
        let pmf = cor2_pmf_deconv(&grid, Some(&probes), feps, 0.0, fy_edf).unwrap();
        let want: Vec<f64> = {
            let mut acc = 0.0;
            (0..3).map(|l| {
                acc += pmf.value_at(l);
                acc
            })
            .collect()
        };
        let est = plugin_estimator(
            &sample,
            &[0.0, 1.0, 2.0],
            PluginVariant::Fig2 {
                eps_cdf: &feps,
                z0: 0.0,
                xi0: 0.0,
                span: 1.0,
                sigma: 0.5,
            },
        )
        .unwrap();
        for l in 0..3 {
            assert!((est[l] - want[l]).abs() < 1e-10, "l={l}");
        }
    }

    #[test]
    fn cor2_rejects_noise_with_mass_at_z0() {
        let grid = SupportGrid::equidistant(0.0, 1.0, 3).unwrap();
        let out = cor2_pmf_deconv(&grid, None, |x| if x >= 0.0 { 0.5 } else { 0.0 }, 0.0, |_| 0.0);
        assert!(out.is_err());
    }

    #[test]
    fn cor2_names_offending_probe() {
        let grid = SupportGrid::equidistant(0.0, 1.0, 3).unwrap();
        let bad_probes = vec![1.0, 0.9, 3.5]; // ξ₁ < ζ₁ violated
        let out = cor2_pmf_deconv(
            &grid,
            Some(&bad_probes),
            |x| exponential_cdf(x, 1.0),
            0.0,
            |_| 0.0,
        );
        match out {
            Err(DeconvError::ProbeConstraint { index, .. }) => assert_eq!(index, 1),
            other => panic!("expected probe error, got {other:?}"),
        }
    }

    #[test]
    fn cor3_degenerate_noise_shifts_fy() {
        let noise = LatticeNoise::degenerate(0.5);
        let fx = |x: f64| exponential_cdf(x, 1.3);
        let fy = move |x: f64| fx(x - 0.5);
        for xi in [0.25, 0.5, 1.0, 2.0] {
            let got = cor3_df_deconv(
                &noise,
                fy,
                xi,
                Cor3Mode::RightLateralTarget { x_min: 0.0 },
            )
            .unwrap();
            assert!((got - fx(xi)).abs() < 1e-12, "xi={xi}");
        }
    }

    #[test]
    fn cor3_recovers_exponential_target_under_bernoulli_noise() {
        let noise = LatticeNoise::bernoulli(0.3, 0.0, 1.0).unwrap();
        let fx = |x: f64| exponential_cdf(x, 1.0);
        let fy = move |x: f64| 0.7 * fx(x) + 0.3 * fx(x - 1.0);
        for xi in [0.5, 1.0, 2.0] {
            let got = cor3_df_deconv(
                &noise,
                fy,
                xi,
                Cor3Mode::RightLateralTarget { x_min: 0.0 },
            )
            .unwrap();
            assert!((got - fx(xi)).abs() < 1e-8, "xi={xi}: {got} vs {}", fx(xi));
        }
    }

    #[test]
    fn cor3_two_term_geometric_inverse() {
        // Geometric noise has a two-term inverse sequence, so the full sum
        // collapses to F_X(ξ) = λ(F_Y(ξ) − (1−u)F_Y(ξ−1)).
        let u = 0.45;
        let noise = LatticeNoise::geometric(u, 0.0, 1.0).unwrap();
        let pe = noise.pmf().clone();
        let px = fseq(&[0.5, 0.3, 0.2]);
        let py = conv(&px, &pe);
        let py_theta = crate::seq::StepDf::new(py);
        let fy = move |x: f64| crate::seq::theta_eval(&py_theta, x);
        let px_theta = crate::seq::StepDf::new(px.clone());
        for xi in [0.0, 1.0, 2.0, 4.5] {
            let got = cor3_df_deconv(
                &noise,
                &fy,
                xi,
                Cor3Mode::RightLateralTarget { x_min: 0.0 },
            )
            .unwrap();
            let want = crate::seq::theta_eval(&px_theta, xi);
            let two_term = (fy(xi) - (1.0 - u) * fy(xi - 1.0)) / u;
            assert!((got - want).abs() < 1e-9, "xi={xi}");
            assert!((got - two_term).abs() < 1e-9, "xi={xi}");
        }
    }

    #[test]
    fn plugin_single_observation_fig1() {
        let noise = LatticeNoise::poisson(1.0, 0.0, 1.0).unwrap();
        let sample = EmpiricalSample::new(vec![2.0]).unwrap();
        let grid = [0.0, 1.0, 2.0, 3.0, 4.5];
        let got = plugin_estimator(&sample, &grid, PluginVariant::Fig1 { noise: &noise }).unwrap();
        let zmax = 3usize;
        let g = noise.gamma(zmax);
        let f0 = noise.mass_at_z0();
        for (i, &xi) in grid.iter().enumerate() {
            let m = (xi - 2.0).floor() as i64;
            let mut want = 0.0;
            for z in 0..=m.max(-1) {
                want += g.at(z);
            }
            want /= f0;
            assert!((got[i] - want).abs() < 1e-12, "xi={xi}");
        }
    }

    #[test]
    fn plugin_estimator_is_linear_in_pooling() {
        let noise = LatticeNoise::bernoulli(0.25, 0.0, 1.0).unwrap();
        let a = vec![0.0, 1.0, 3.0];
        let b = vec![2.0, 2.0, 4.0, 5.0];
        let grid = [0.0, 1.5, 3.0, 5.0];
        let pooled = EmpiricalSample::new(a.iter().chain(&b).cloned().collect()).unwrap();
        let ea = plugin_estimator(
            &EmpiricalSample::new(a.clone()).unwrap(),
            &grid,
            PluginVariant::Fig1 { noise: &noise },
        )
        .unwrap();
        let eb = plugin_estimator(
            &EmpiricalSample::new(b.clone()).unwrap(),
            &grid,
            PluginVariant::Fig1 { noise: &noise },
        )
        .unwrap();
        let ep = plugin_estimator(&pooled, &grid, PluginVariant::Fig1 { noise: &noise }).unwrap();
        let (na, nb) = (a.len() as f64, b.len() as f64);
        for i in 0..grid.len() {
            let want = (na * ea[i] + nb * eb[i]) / (na + nb);
            assert!((ep[i] - want).abs() < 1e-12);
        }
    }

    #[test]
    fn plugin_fig1_steps_only_at_shifted_lattice_points() {
        let noise = LatticeNoise::bernoulli(0.4, 0.0, 1.0).unwrap();
        let sample = EmpiricalSample::new(vec![0.25, 1.5]).unwrap();
        // Jump locations are {Y_i + z}, so values are constant on
        // [1.5, 2.25) and jump at 2.25.
        let f = |xi: f64| {
            plugin_estimator(&sample, &[xi], PluginVariant::Fig1 { noise: &noise }).unwrap()[0]
        };
        assert_eq!(f(1.5), f(2.2));
        assert_ne!(f(2.2), f(2.25));
    }

    #[test]
    fn plugin_fig2_matches_cor2_on_exact_edf_inputs() {
        // The estimator's double sum is the Θ-convolution with the e.d.f.
        // plugged in, so at grid points it equals the partial sums of the
        // cor2 output computed from the e.d.f. itself.
        let rate = 0.9;
        let feps = move |x: f64| exponential_cdf(x, rate);
        let sample = EmpiricalSample::new(vec![0.3, 0.8, 1.7, 2.2, 3.9, 4.1]).unwrap();
        let grid_pts = SupportGrid::equidistant(0.0, 1.0, 5).unwrap();
        let fy_edf = {
            let s = sample.clone();
            move |x: f64| s.edf(x)
        };
        let pmf = cor2_pmf_deconv(&grid_pts, None, feps, 0.0, fy_edf).unwrap();
        let want: Vec<f64> = {
            let mut acc = 0.0;
            (0..5)
                .map(|l| {
                    acc += pmf.value_at(l);
                    acc
                })
                .collect()
        };
        let got = plugin_estimator(
            &sample,
            &[0.0, 1.0, 2.0, 3.0, 4.0],
            PluginVariant::Fig2 {
                eps_cdf: &feps,
                z0: 0.0,
                xi0: 0.0,
                span: 1.0,
                sigma: 1.0,
            },
        )
        .unwrap();
        for l in 0..5 {
            assert!((got[l] - want[l]).abs() < 1e-10, "l={l}");
        }
    }

    #[test]
    fn empirical_sample_edf_counts() {
        let s = EmpiricalSample::new(vec![3.0, 1.0, 2.0]).unwrap();
        assert_eq!(s.n(), 3);
        assert_eq!(s.edf(0.5), 0.0);
        assert_eq!(s.edf(1.0), 1.0 / 3.0);
        assert_eq!(s.edf(2.5), 2.0 / 3.0);
        assert_eq!(s.edf(9.0), 1.0);
        assert!(EmpiricalSample::new(vec![]).is_err());
    }

    #[test]
    fn lattice_noise_validation() {
        assert!(LatticeNoise::new(0.0, 1.0, fseq(&[0.0, 1.0])).is_err());
        assert!(LatticeNoise::new(0.0, 0.0, fseq(&[1.0])).is_err());
        assert!(LatticeNoise::new(0.0, 1.0, fseq(&[0.5, 0.2])).is_err());
        assert!(LatticeNoise::new(0.0, 1.0, fseq(&[0.5, 0.5])).is_ok());
    }

    #[test]
    fn support_grid_validation_and_probes() {
        assert!(SupportGrid::new(vec![0.0, 0.0]).is_err());
        let g = SupportGrid::new(vec![0.0, 1.0, 2.0]).unwrap();
        assert_eq!(g.span(), Some(1.0));
        assert_eq!(g.default_probes(), vec![1.0, 2.0, 3.0]);
    }
}
