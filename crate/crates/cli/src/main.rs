//! `deconv` — scenario runner and diagnostics for transform-free
//! deconvolution.
//!
//! Exit codes: 0 success, 2 validation/configuration error, 3 numeric
//! diagnostic (divergence detected).

use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand};
use deconv_core::inverse::gamma;
use deconv_core::measure::SignedMixture;
use deconv_core::neumann::NoiseModel;
use deconv_core::operator::tv_of_pi;
use deconv_core::DeconvError;
use deconv_cli::export::{export, write_csv, Format};
use deconv_cli::{run_scenario, DistSpec, Scenario};

#[derive(Parser)]
#[command(name = "deconv", about = "Deconvolution simulation and estimation harness")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a scenario file and export the aggregated result frame.
    Run(RunArgs),
    /// Print the inverse sequence γ of a noise family.
    Gamma(GammaArgs),
    /// Report the operator-norm diagnostics for a transforming measure.
    CheckInvertibility(CheckArgs),
    /// Deconvolve the target d.f. at one point from the analytic blurred
    /// d.f. of a target/noise pair (divergence surfaces as exit code 3).
    DfPoint(DfPointArgs),
}

#[derive(Args)]
struct RunArgs {
    /// Scenario JSON file.
    #[arg(long)]
    scenario: PathBuf,
    /// Output path (stdout when omitted).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Output format.
    #[arg(long, default_value = "csv")]
    format: Format,
    /// Field overrides `key=value` with dotted paths, e.g. `n=500`,
    /// `estimator.m=20`, `grid.max=5`.
    #[arg(long = "override", value_name = "KEY=VALUE")]
    overrides: Vec<String>,
}

#[derive(Args)]
struct GammaArgs {
    /// Noise family: poisson, geometric, bernoulli, uniform or lattice.
    #[arg(long)]
    family: String,
    /// Family parameters, e.g. `lambda=1.5`, `p=0.4`, `k=3`,
    /// `pmf=0.5;0.3;0.2`.
    #[arg(long, default_value = "")]
    params: String,
    /// Largest index to print.
    #[arg(long)]
    zmax: usize,
}

#[derive(Args)]
struct CheckArgs {
    /// Transforming measure as comma-separated atoms `coeff@location`.
    #[arg(long)]
    eta: String,
    /// Noise spec `family:params`, e.g. `poisson:lambda=1`,
    /// `normal:mean=0,sd=1`, `lattice:pmf=0.6;0.4`.
    #[arg(long)]
    noise: String,
}

#[derive(Args)]
struct DfPointArgs {
    /// Target spec `family:params` (the pair must have an analytic F_Y).
    #[arg(long)]
    target: String,
    /// Lattice noise spec `family:params`.
    #[arg(long)]
    noise: String,
    /// Evaluation point.
    #[arg(long, allow_negative_numbers = true)]
    xi: f64,
    /// Left extremity of the target support; omitted means the target is
    /// treated as non-decreasing under the summability assumption, with
    /// the divergence watch active.
    #[arg(long, allow_negative_numbers = true)]
    x_min: Option<f64>,
}

fn main() -> ExitCode {
    init_thread_pool();
    let cli = Cli::parse();
    let outcome = match cli.command {
        Command::Run(args) => cmd_run(args),
        Command::Gamma(args) => cmd_gamma(args),
        Command::CheckInvertibility(args) => cmd_check(args),
        Command::DfPoint(args) => cmd_df_point(args),
    };
    match outcome {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::from(classify(&err))
        }
    }
}

/// `DECONV_THREADS` caps the replication parallelism.
fn init_thread_pool() {
    if let Ok(v) = std::env::var("DECONV_THREADS") {
        if let Ok(n) = v.parse::<usize>() {
            let _ = rayon::ThreadPoolBuilder::new()
                .num_threads(n.max(1))
                .build_global();
        }
    }
}

fn classify(err: &anyhow::Error) -> u8 {
    for cause in err.chain() {
        if let Some(DeconvError::Divergence { .. }) = cause.downcast_ref::<DeconvError>() {
            return 3;
        }
    }
    2
}

fn cmd_run(args: RunArgs) -> Result<()> {
    let text = std::fs::read_to_string(&args.scenario)
        .with_context(|| format!("cannot read scenario {}", args.scenario.display()))?;
    let mut value: serde_json::Value =
        serde_json::from_str(&text).context("scenario is not valid JSON")?;
    for ov in &args.overrides {
        apply_override(&mut value, ov)?;
    }
    let scenario: Scenario =
        serde_json::from_value(value).context("scenario does not match the schema")?;
    scenario.validate().context("invalid scenario")?;
    let frame = run_scenario(&scenario)?;
    match &args.out {
        Some(path) => export(&frame, path, args.format)?,
        None => {
            let stdout = std::io::stdout().lock();
            match args.format {
                Format::Csv => write_csv(&frame, stdout)?,
                Format::Json => deconv_cli::export::write_json(&frame, stdout)?,
            }
        }
    }
    Ok(())
}

fn apply_override(value: &mut serde_json::Value, spec: &str) -> Result<()> {
    let (path, raw) = spec
        .split_once('=')
        .with_context(|| format!("override '{spec}' is not KEY=VALUE"))?;
    let leaf: serde_json::Value = serde_json::from_str(raw)
        .unwrap_or_else(|_| serde_json::Value::String(raw.to_string()));
    let mut cursor = value;
    let segments: Vec<&str> = path.split('.').collect();
    for (i, seg) in segments.iter().enumerate() {
        let map = cursor
            .as_object_mut()
            .with_context(|| format!("override path '{path}' does not address an object"))?;
        if i + 1 == segments.len() {
            map.insert(seg.to_string(), leaf);
            return Ok(());
        }
        cursor = map
            .entry(seg.to_string())
            .or_insert_with(|| serde_json::Value::Object(Default::default()));
    }
    Ok(())
}

fn parse_params(params: &str) -> Result<std::collections::HashMap<String, String>> {
    let mut out = std::collections::HashMap::new();
    for part in params.split(',').filter(|p| !p.is_empty()) {
        let (k, v) = part
            .split_once('=')
            .with_context(|| format!("parameter '{part}' is not key=value"))?;
        out.insert(k.trim().to_string(), v.trim().to_string());
    }
    Ok(out)
}

fn param_f64(
    params: &std::collections::HashMap<String, String>,
    key: &str,
) -> Result<f64> {
    params
        .get(key)
        .with_context(|| format!("missing parameter '{key}'"))?
        .parse::<f64>()
        .with_context(|| format!("parameter '{key}' is not a number"))
}

fn dist_from_family(family: &str, params: &str) -> Result<DistSpec> {
    let p = parse_params(params)?;
    let spec = match family {
        "poisson" => DistSpec::Poisson {
            lambda: param_f64(&p, "lambda")?,
        },
        "bernoulli" => DistSpec::Bernoulli {
            p: param_f64(&p, "p")?,
        },
        "geometric" => DistSpec::Geometric {
            p: param_f64(&p, "p")?,
        },
        "uniform" => DistSpec::DiscreteUniform {
            k: param_f64(&p, "k")? as usize,
        },
        "negative_binomial" => DistSpec::NegativeBinomial {
            r: param_f64(&p, "r")?,
            p: param_f64(&p, "p")?,
        },
        "normal" => DistSpec::Normal {
            mean: param_f64(&p, "mean")?,
            sd: param_f64(&p, "sd")?,
        },
        "laplace" => DistSpec::Laplace {
            loc: param_f64(&p, "loc")?,
            scale: param_f64(&p, "scale")?,
        },
        "exponential" => DistSpec::Exponential {
            rate: param_f64(&p, "rate")?,
        },
        "lattice" => {
            let pmf = p
                .get("pmf")
                .context("lattice family needs pmf=w0;w1;…")?
                .split(';')
                .map(|w| w.parse::<f64>().context("bad pmf weight"))
                .collect::<Result<Vec<f64>>>()?;
            DistSpec::Lattice {
                pmf,
                x0: p.get("x0").map_or(Ok(0.0), |v| v.parse()).context("bad x0")?,
                span: p
                    .get("span")
                    .map_or(Ok(1.0), |v| v.parse())
                    .context("bad span")?,
            }
        }
        other => anyhow::bail!("unknown family '{other}'"),
    };
    spec.validate()?;
    Ok(spec)
}

fn cmd_gamma(args: GammaArgs) -> Result<()> {
    let spec = dist_from_family(&args.family, &args.params)?;
    let noise = spec
        .lattice_noise()
        .context("gamma needs a lattice noise family")?;
    let table = gamma(noise.pmf(), args.zmax)?;
    println!("z,gamma");
    for (z, v) in table.values().iter().enumerate() {
        println!("{z},{v:.16e}");
    }
    Ok(())
}

fn parse_eta(text: &str) -> Result<SignedMixture> {
    let mut terms = Vec::new();
    for atom in text.split(',').filter(|a| !a.is_empty()) {
        let (coeff, loc) = atom
            .split_once('@')
            .with_context(|| format!("eta atom '{atom}' is not coeff@location"))?;
        terms.push((
            coeff.trim().parse::<f64>().context("bad eta coefficient")?,
            deconv_core::measure::Component::Dirac {
                location: loc.trim().parse::<f64>().context("bad eta location")?,
            },
        ));
    }
    anyhow::ensure!(!terms.is_empty(), "eta must contain at least one atom");
    Ok(SignedMixture::new(terms))
}

fn cmd_df_point(args: DfPointArgs) -> Result<()> {
    let parse = |text: &str| -> Result<DistSpec> {
        let (family, params) = text.split_once(':').unwrap_or((text, ""));
        dist_from_family(family, params)
    };
    let target = parse(&args.target)?;
    let noise_spec = parse(&args.noise)?;
    let noise = noise_spec
        .lattice_noise()
        .context("df-point needs a lattice noise family")?;
    let fy = deconv_cli::runner::true_fy(&target, &noise_spec)
        .context("this target/noise pair has no analytic blurred d.f.")?;
    let mode = match args.x_min {
        Some(x_min) => deconv_core::deconv::Cor3Mode::RightLateralTarget { x_min },
        None => deconv_core::deconv::Cor3Mode::Monotone(Default::default()),
    };
    let value = deconv_core::deconv::cor3_df_deconv(&noise, |x| fy(x), args.xi, mode)?;
    println!(
        "{}",
        serde_json::json!({ "xi": args.xi, "fx": value, "fx_true": target.cdf(args.xi) })
    );
    Ok(())
}

fn cmd_check(args: CheckArgs) -> Result<()> {
    let eta = parse_eta(&args.eta)?;
    let (family, params) = args
        .noise
        .split_once(':')
        .unwrap_or((args.noise.as_str(), ""));
    let spec = dist_from_family(family, params)?;
    let model = match spec.lattice_noise() {
        Some(l) => NoiseModel::Lattice(l),
        None => match spec {
            DistSpec::Normal { mean, sd } => NoiseModel::Normal { center: mean, sd },
            _ => anyhow::bail!("noise must be a lattice family or normal"),
        },
    };
    let report = tv_of_pi(&eta, &model)?;
    println!(
        "{}",
        serde_json::json!({
            "tv": report.tv,
            "atom_overlap": report.atom_overlap,
            "invertible_sufficient": report.invertible_sufficient,
            "jordan_case": format!("{:?}", report.jordan_case),
        })
    );
    Ok(())
}
