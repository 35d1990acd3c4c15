use std::fs::{self, File};
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::error::ErrorKind;
use clap::{Args, CommandFactory, Parser, Subcommand, ValueEnum};

use cdur_core::io::{
    load_dataset, pmf_table, read_result, read_study_config, sidecar_path, write_dataset,
    write_meta, write_pmf_table, write_records_csv, write_result, write_summary_csv,
    ResultDocument, SimulationMeta,
};
use cdur_core::likelihood::{fit, FitConfig, Model, STUDY_KNOTS};
use cdur_core::sim::{generate_dataset, DgpSpec, Recurrence, SimConfig, DEFAULT_HORIZON};
use cdur_core::study::run_study;

/// Grouped current-duration survival models.
#[derive(Parser)]
#[command(name = "cdur", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Fit a model to a dataset CSV and emit the result as JSON.
    Fit(FitArgs),
    /// Simulate a current-duration dataset from a renewal process.
    Simulate(SimulateArgs),
    /// Run a Monte Carlo study grid from a JSON config.
    Study(StudyArgs),
    /// Tabulate fitted pmf, survivor and hazard curves.
    Pmf(PmfArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum ModelArg {
    Semiparametric,
    Piecewise,
}

#[derive(Clone, Copy, ValueEnum)]
enum DgpArg {
    Geometric,
    PiecewiseGeometric,
    DiscreteWeibull,
}

#[derive(Args)]
struct FitArgs {
    /// Dataset CSV with columns y, delta, covariates...
    data: PathBuf,
    #[arg(long, value_enum, default_value = "semiparametric")]
    model: ModelArg,
    /// Comma-separated knots for the piecewise model.
    #[arg(long, value_delimiter = ',')]
    knots: Option<Vec<u32>>,
    /// Type I censoring value.
    #[arg(long)]
    tau: Option<u32>,
    /// Upper limit of the normalizing sum.
    #[arg(long)]
    y_plus: Option<u32>,
    /// Sum the geometric tail in closed form instead of truncating.
    #[arg(long)]
    exact_tail: bool,
    /// Optimizer iteration budget.
    #[arg(long, default_value_t = FitConfig::default().max_iter)]
    max_iter: usize,
    /// Output file; stdout if omitted.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct SimulateArgs {
    #[arg(long, value_enum)]
    dgp: DgpArg,
    #[arg(long)]
    theta: f64,
    /// Shape parameter (piecewise-geometric and discrete-weibull only).
    #[arg(long)]
    alpha0: Option<f64>,
    #[arg(long, default_value_t = 0.5)]
    beta1: f64,
    #[arg(long)]
    n: usize,
    /// Censor durations above this value.
    #[arg(long)]
    tau: Option<u32>,
    #[arg(long, env = "CDUR_SEED")]
    seed: u64,
    /// Renewal horizon.
    #[arg(long, default_value_t = DEFAULT_HORIZON)]
    horizon: u64,
    /// Record forward instead of backward recurrence times.
    #[arg(long)]
    forward: bool,
    /// Dataset CSV; the sidecar `<name>.meta.json` is written next to it.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct StudyArgs {
    /// Study config JSON.
    config: PathBuf,
    /// Override the replication count.
    #[arg(long)]
    replications: Option<usize>,
    /// Worker threads.
    #[arg(long)]
    parallelism: Option<usize>,
    /// Override the base seed.
    #[arg(long, env = "CDUR_SEED")]
    seed: Option<u64>,
    /// Output directory for summary.csv and replications.csv.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct PmfArgs {
    /// Result JSON written by `cdur fit`.
    result: PathBuf,
    /// Comma-separated covariate values.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    z: Vec<f64>,
    #[arg(long, default_value_t = 0)]
    y_min: u32,
    #[arg(long, default_value_t = 40)]
    y_max: u32,
    /// Output file; stdout if omitted.
    #[arg(long)]
    out: Option<PathBuf>,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let outcome = match cli.command {
        Command::Fit(a) => cmd_fit(a),
        Command::Simulate(a) => cmd_simulate(a).map(|()| true),
        Command::Study(a) => cmd_study(a).map(|()| true),
        Command::Pmf(a) => cmd_pmf(a).map(|()| true),
    };
    match outcome {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(2),
        Err(e) => {
            match e.downcast_ref::<Usage>() {
                Some(Usage {
                    subcommand,
                    message,
                }) => {
                    let mut cmd = Cli::command();
                    let sub = cmd
                        .find_subcommand_mut(subcommand)
                        .expect("known subcommand");
                    sub.set_bin_name(format!("cdur {subcommand}"));
                    let _ = sub.error(ErrorKind::ArgumentConflict, message).print();
                }
                None => eprintln!("error: {e:#}"),
            }
            ExitCode::from(1)
        }
    }
}

/// A flag combination clap cannot express; reported with the usage line.
#[derive(Debug)]
struct Usage {
    subcommand: &'static str,
    message: String,
}

impl std::fmt::Display for Usage {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.message)
    }
}

impl std::error::Error for Usage {}

fn usage(subcommand: &'static str, message: &str) -> anyhow::Error {
    Usage {
        subcommand,
        message: message.into(),
    }
    .into()
}

fn output(path: Option<&Path>) -> Result<Box<dyn Write>> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(
            File::create(p).with_context(|| format!("creating {}", p.display()))?,
        )),
        None => Box::new(BufWriter::new(io::stdout().lock())),
    })
}

/// Returns whether the fit converged.
fn cmd_fit(a: FitArgs) -> Result<bool> {
    let model = match (a.model, a.knots) {
        (ModelArg::Semiparametric, None) => Model::Semiparametric,
        (ModelArg::Semiparametric, Some(_)) => {
            return Err(usage("fit", "--knots only applies to --model piecewise"))
        }
        (ModelArg::Piecewise, knots) => Model::Piecewise {
            knots: knots.unwrap_or_else(|| STUDY_KNOTS.to_vec()),
        },
    };
    let data = load_dataset(&a.data).with_context(|| format!("reading {}", a.data.display()))?;
    let config = FitConfig {
        model,
        tau: a.tau,
        y_plus: a.y_plus,
        exact_tail: a.exact_tail,
        max_iter: a.max_iter,
        ..FitConfig::default()
    };
    let result = fit(&data, &config)?;
    for w in &result.warnings {
        eprintln!("warning: {w}");
    }
    let mut out = output(a.out.as_deref())?;
    write_result(&mut out, &ResultDocument::from_fit(&result))?;
    writeln!(out)?;
    out.flush()?;
    Ok(result.converged)
}

fn cmd_simulate(a: SimulateArgs) -> Result<()> {
    let dgp = match (a.dgp, a.alpha0) {
        (DgpArg::Geometric, None) => DgpSpec::geometric(a.theta, a.beta1)?,
        (DgpArg::Geometric, Some(_)) => {
            return Err(usage(
                "simulate",
                "--alpha0 does not apply to --dgp geometric",
            ))
        }
        (DgpArg::PiecewiseGeometric, Some(a0)) => {
            DgpSpec::piecewise_geometric(a.theta, a0, a.beta1)?
        }
        (DgpArg::DiscreteWeibull, Some(a0)) => DgpSpec::discrete_weibull(a.theta, a0, a.beta1)?,
        (_, None) => return Err(usage("simulate", "--alpha0 is required for this --dgp")),
    };
    let sim = SimConfig {
        horizon: a.horizon,
        recurrence: if a.forward {
            Recurrence::Forward
        } else {
            Recurrence::Backward
        },
        ..SimConfig::new(a.n, a.tau, a.seed)
    };
    let data = generate_dataset(&dgp, &sim)?;
    let meta = SimulationMeta {
        dgp,
        n: sim.n,
        tau: sim.tau,
        horizon: sim.horizon,
        seed: sim.seed,
        sampler: sim.sampler,
        recurrence: sim.recurrence,
        pre_censoring_max: data.pre_censoring_max,
        censored_fraction: data.censored_fraction(),
    };
    let mut out = output(Some(&a.out))?;
    write_dataset(&mut out, &data)?;
    out.flush()?;
    let mut side = output(Some(&sidecar_path(&a.out)))?;
    write_meta(&mut side, &meta)?;
    writeln!(side)?;
    side.flush()?;
    eprintln!(
        "{} rows, {:.1}% censored",
        data.len(),
        100.0 * meta.censored_fraction
    );
    Ok(())
}

fn cmd_study(a: StudyArgs) -> Result<()> {
    let file = File::open(&a.config).with_context(|| format!("opening {}", a.config.display()))?;
    let mut config =
        read_study_config(file).with_context(|| format!("reading {}", a.config.display()))?;
    if let Some(r) = a.replications {
        config.replications = r;
    }
    if a.parallelism.is_some() {
        config.parallelism = a.parallelism;
    }
    if let Some(s) = a.seed {
        config.base_seed = s;
    }
    config.validate()?;
    let result = run_study(&config)?;
    for w in &result.warnings {
        eprintln!("warning: {w}");
    }
    fs::create_dir_all(&a.out).with_context(|| format!("creating {}", a.out.display()))?;
    let mut summary = output(Some(&a.out.join("summary.csv")))?;
    write_summary_csv(&mut summary, &result.summaries)?;
    summary.flush()?;
    let mut records = output(Some(&a.out.join("replications.csv")))?;
    write_records_csv(&mut records, &result.records)?;
    records.flush()?;
    Ok(())
}

fn cmd_pmf(a: PmfArgs) -> Result<()> {
    if a.y_min > a.y_max {
        return Err(usage("pmf", "--y-min exceeds --y-max"));
    }
    let file = File::open(&a.result).with_context(|| format!("opening {}", a.result.display()))?;
    let doc = read_result(file)?;
    let rows = pmf_table(&doc, &a.z, a.y_min..=a.y_max)?;
    let mut out = output(a.out.as_deref())?;
    write_pmf_table(&mut out, &rows)?;
    out.flush()?;
    Ok(())
}
