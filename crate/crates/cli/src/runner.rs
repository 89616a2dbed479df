//! Scenario execution: per-replication sampling, estimator evaluation and
//! order-insensitive aggregation.

use deconv_core::deconv::{plugin_estimator, EmpiricalSample, PluginVariant};
use deconv_core::measure::SignedMixture;
use deconv_core::neumann::{deconv_fn, NoiseModel, ObservedDf};
use deconv_core::seq::conv;
use deconv_core::Result;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::sample::DistSpec;
use crate::scenario::{EstimatorSpec, Scenario};

/// One grid row of the aggregated output.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResultRow {
    /// Grid point.
    pub xi: f64,
    /// True target d.f. at `xi`, when analytically available.
    pub fx_true: Option<f64>,
    /// True blurred d.f. at `xi`, when analytically available.
    pub fy_true: Option<f64>,
    /// Monte Carlo mean of the estimator.
    pub est_mean: f64,
    /// Monte Carlo standard deviation across replications.
    pub est_sd: f64,
}

/// Aggregated scenario output, grid-ordered.
///
/// `replication_curves` (one estimator curve per replication, in
/// replication order) is attached only when the scenario asks for it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResultFrame {
    pub rows: Vec<ResultRow>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub replication_curves: Option<Vec<Vec<f64>>>,
}

/// SplitMix64 step, the documented per-replication seed derivation:
/// replication `r` uses `splitmix64(base_seed ⊕ (r+1)·0x9E3779B97F4A7C15)`.
pub fn derive_seed(base: u64, replication: u64) -> u64 {
    let mut z = base ^ (replication.wrapping_add(1)).wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Neumaier-compensated sum.
pub fn compensated_sum(xs: impl IntoIterator<Item = f64>) -> f64 {
    let mut sum = 0.0f64;
    let mut c = 0.0f64;
    for x in xs {
        let t = sum + x;
        if sum.abs() >= x.abs() {
            c += (sum - t) + x;
        } else {
            c += (x - t) + sum;
        }
        sum = t;
    }
    sum + c
}

/// Draws one blurred sample `Y = X + ε` of size `n`.
pub fn sample_y(
    target: &DistSpec,
    noise: &DistSpec,
    n: usize,
    seed: u64,
) -> Result<EmpiricalSample> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let obs = (0..n)
        .map(|_| target.sample(&mut rng) + noise.sample(&mut rng))
        .collect();
    EmpiricalSample::new(obs)
}

/// True blurred d.f. when it has a closed analytic form.
pub fn true_fy(target: &DistSpec, noise: &DistSpec) -> Option<Box<dyn Fn(f64) -> f64 + Sync>> {
    match (target.lattice_noise(), noise.lattice_noise()) {
        (Some(tx), Some(te)) => {
            // Both lattice on a common span: convolve the atom weights.
            if (tx.span() - te.span()).abs() > 1e-12 {
                return None;
            }
            let span = tx.span();
            let offset = tx.z0() + te.z0();
            let py = conv(tx.pmf(), te.pmf());
            Some(Box::new(move |xi: f64| {
                let m = ((xi - offset) / span + 1e-12).floor();
                deconv_core::seq::theta_of_seq(&py, m as i64)
            }))
        }
        (None, Some(te)) => {
            // Continuous target, lattice noise: finite mixture of shifts.
            let t = target.clone();
            Some(Box::new(move |xi: f64| {
                te.pmf()
                    .coeffs()
                    .iter()
                    .enumerate()
                    .map(|(z, &w)| w * t.cdf(xi - te.location(z as i64)))
                    .sum()
            }))
        }
        (Some(tx), None) => {
            let e = noise.clone();
            Some(Box::new(move |xi: f64| {
                tx.pmf()
                    .coeffs()
                    .iter()
                    .enumerate()
                    .map(|(z, &w)| w * e.cdf(xi - tx.location(z as i64)))
                    .sum()
            }))
        }
        (None, None) => match (target, noise) {
            (
                DistSpec::Normal { mean: m1, sd: s1 },
                DistSpec::Normal { mean: m2, sd: s2 },
            ) => {
                let (m, s) = (m1 + m2, (s1 * s1 + s2 * s2).sqrt());
                Some(Box::new(move |xi: f64| {
                    deconv_core::dist::normal_cdf(xi, m, s)
                }))
            }
            _ => None,
        },
    }
}

fn evaluate_estimator(
    scenario: &Scenario,
    sample: &EmpiricalSample,
    grid: &[f64],
) -> Result<Vec<f64>> {
    match &scenario.estimator {
        EstimatorSpec::Cor1 => {
            let noise = scenario
                .noise
                .lattice_noise()
                .expect("validated: lattice noise");
            plugin_estimator(sample, grid, PluginVariant::Fig1 { noise: &noise })
        }
        EstimatorSpec::Cor3 => {
            let noise = scenario
                .noise
                .lattice_noise()
                .expect("validated: lattice noise");
            plugin_estimator(sample, grid, PluginVariant::Fig3 { noise: &noise })
        }
        EstimatorSpec::Cor2 { sigma } => {
            let (xi0, span) = scenario.target_grid_geometry();
            let sigma = sigma.unwrap_or(span);
            let z0 = scenario.noise.left_extremity().unwrap_or(0.0);
            let noise = scenario.noise.clone();
            let eps_cdf = move |x: f64| noise.cdf(x);
            plugin_estimator(
                sample,
                grid,
                PluginVariant::Fig2 {
                    eps_cdf: &eps_cdf,
                    z0,
                    xi0,
                    span,
                    sigma,
                },
            )
        }
        EstimatorSpec::Neumann { m, eta } => {
            let model = match scenario.noise.lattice_noise() {
                Some(l) => NoiseModel::Lattice(l),
                None => match scenario.noise {
                    DistSpec::Normal { mean, sd } => NoiseModel::Normal { center: mean, sd },
                    _ => unreachable!("validated: lattice or normal noise"),
                },
            };
            let eta_mixture = match eta {
                Some(e) => SignedMixture::scaled_dirac(e.coeff, e.location),
                None => model.default_eta(),
            };
            grid.iter()
                .map(|&xi| {
                    deconv_fn(&eta_mixture, &model, ObservedDf::Empirical(sample), xi, *m)
                })
                .collect()
        }
    }
}

/// Runs all replications and aggregates mean/sd per grid point.
///
/// Replications execute in parallel with independently derived seeds;
/// aggregation always walks them in replication order, so the output is
/// byte-identical regardless of thread count.
pub fn run_scenario(scenario: &Scenario) -> Result<ResultFrame> {
    scenario.validate()?;
    let grid = scenario.grid.points();
    let per_rep: Vec<Result<Vec<f64>>> = (0..scenario.replications)
        .into_par_iter()
        .map(|r| {
            let sample = sample_y(
                &scenario.target,
                &scenario.noise,
                scenario.n,
                derive_seed(scenario.seed, r as u64),
            )?;
            evaluate_estimator(scenario, &sample, &grid)
        })
        .collect();
    let mut curves = Vec::with_capacity(per_rep.len());
    for rep in per_rep {
        curves.push(rep?);
    }

    let fy = true_fy(&scenario.target, &scenario.noise);
    let reps = scenario.replications as f64;
    let rows = grid
        .iter()
        .enumerate()
        .map(|(i, &xi)| {
            let mean = compensated_sum(curves.iter().map(|c| c[i])) / reps;
            let var = if scenario.replications > 1 {
                compensated_sum(curves.iter().map(|c| {
                    let d = c[i] - mean;
                    d * d
                })) / (reps - 1.0)
            } else {
                0.0
            };
            ResultRow {
                xi,
                fx_true: Some(scenario.target.cdf(xi)),
                fy_true: fy.as_ref().map(|f| f(xi)),
                est_mean: mean,
                est_sd: var.sqrt(),
            }
        })
        .collect();
    let replication_curves = scenario.keep_replications.then_some(curves);
    Ok(ResultFrame {
        rows,
        replication_curves,
    })
}
