//! Scenario configuration: what to simulate, which estimator to apply, and
//! the validation wiring between the two.

use deconv_core::DeconvError;
use serde::{Deserialize, Serialize};

use crate::sample::DistSpec;

/// Transforming measure for the Neumann estimator: a scaled Dirac atom.
#[derive(Debug, Clone, Copy, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct EtaSpec {
    /// Coefficient (must be non-negative for the operator diagnostics).
    pub coeff: f64,
    /// Atom location.
    pub location: f64,
}

/// Which estimator the scenario runs.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum EstimatorSpec {
    /// Lattice target, countable lattice noise: atom-level deconvolution.
    Cor1,
    /// Lattice target, continuous left-bounded noise probed at offset
    /// `sigma` (defaults to the target span).
    Cor2 {
        #[serde(default)]
        sigma: Option<f64>,
    },
    /// Distribution-function deconvolution with lattice noise.
    Cor3,
    /// Neumann-sum plug-in with truncation index `m`; `eta` defaults to
    /// the canonical choice for the noise.
    Neumann {
        m: usize,
        #[serde(default)]
        eta: Option<EtaSpec>,
    },
}

/// Evaluation grid `{min, min+step, …} ∩ [min, max]`.
#[derive(Debug, Clone, Copy, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct GridSpec {
    pub min: f64,
    pub max: f64,
    pub step: f64,
}

impl GridSpec {
    /// Materializes the grid points.
    pub fn points(&self) -> Vec<f64> {
        let mut out = Vec::new();
        let mut k = 0usize;
        loop {
            let x = self.min + self.step * k as f64;
            if x > self.max + 1e-12 {
                break;
            }
            out.push(x);
            k += 1;
        }
        out
    }
}

/// A full simulation scenario.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    pub target: DistSpec,
    pub noise: DistSpec,
    pub estimator: EstimatorSpec,
    pub n: usize,
    pub replications: usize,
    pub seed: u64,
    pub grid: GridSpec,
    /// Attach every per-replication estimator curve to the result frame
    /// (JSON output only; the CSV format carries aggregates).
    #[serde(default)]
    pub keep_replications: bool,
}

impl Scenario {
    /// Validates family parameters and estimator/family compatibility.
    pub fn validate(&self) -> Result<(), DeconvError> {
        self.target.validate()?;
        self.noise.validate()?;
        let invalid = |msg: String| Err(DeconvError::InvalidParameter(msg));
        if self.n == 0 {
            return invalid("sample size n must be at least 1".into());
        }
        if self.replications == 0 {
            return invalid("replications must be at least 1".into());
        }
        if !(self.grid.step > 0.0) || self.grid.min > self.grid.max {
            return invalid("grid needs step > 0 and min ≤ max".into());
        }
        match &self.estimator {
            EstimatorSpec::Cor1 => {
                if !self.target.is_lattice() {
                    return invalid(
                        "cor1 recovers atom masses: the target must be a lattice family".into(),
                    );
                }
                if !self.noise.is_lattice() {
                    return invalid(
                        "cor1 needs countable left-bounded noise with an atom at its left \
                         extremity; use cor2 for continuous noise"
                            .into(),
                    );
                }
            }
            EstimatorSpec::Cor2 { sigma } => {
                if !self.target.is_lattice() {
                    return invalid("cor2 recovers atom masses of a lattice target".into());
                }
                if self.noise.is_lattice() || !self.noise.is_left_bounded() {
                    return invalid(
                        "cor2 needs continuous left-bounded noise (F_ε(z₀) = 0), e.g. \
                         exponential; use cor1 for lattice noise"
                            .into(),
                    );
                }
                let (_, span) = self.target_grid_geometry();
                if let Some(s) = sigma {
                    if !(s > &0.0 && *s <= span) {
                        return invalid(format!(
                            "cor2 probe offset must satisfy 0 < σ ≤ s = {span}, got {s}"
                        ));
                    }
                }
            }
            EstimatorSpec::Cor3 => {
                if !self.noise.is_lattice() {
                    return invalid(
                        "cor3 needs noise supported on a left-bounded equidistant lattice".into(),
                    );
                }
            }
            EstimatorSpec::Neumann { m, eta } => {
                if *m > deconv_core::neumann::MAX_TRUNCATION {
                    return invalid(format!(
                        "truncation index m = {m} exceeds the supported maximum {}",
                        deconv_core::neumann::MAX_TRUNCATION
                    ));
                }
                if let Some(e) = eta {
                    if e.coeff < 0.0 {
                        return invalid("eta coefficient must be non-negative".into());
                    }
                }
                if !self.noise.is_lattice() && !matches!(self.noise, DistSpec::Normal { .. }) {
                    return invalid(
                        "the Neumann estimator supports lattice or normal noise".into(),
                    );
                }
            }
        }
        Ok(())
    }

    /// Target grid origin and span used by the lattice estimators.
    pub fn target_grid_geometry(&self) -> (f64, f64) {
        match &self.target {
            DistSpec::Lattice { x0, span, .. } => (*x0, *span),
            _ => (0.0, 1.0),
        }
    }
}
