//! Command-line front end: ingestion, fitting, year-to-year comparison,
//! sampling and plot-data emission as reproducible batch runs.
//!
//! Exit codes: 0 success, 1 input/configuration error, 2 completed with
//! warnings (non-converged fit). All numeric output is emitted with 17
//! significant digits and `.` decimals so downstream tools reproduce the
//! values bit-exactly.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use powertail::distcore::{log_spaced, survival_grid, ModelParams, QuadratureSettings};
use powertail::error::Error;
use powertail::fitkit::{fit, stability_report, EmpiricalSurvival, FitConfig, FitResult};
use powertail::ingest::{
    apply_exclusions, column_values, parse_table, IngestReport, ParseOptions,
};
use powertail::sampler::{sample, tabulate, GridSpec};

#[derive(Parser)]
#[command(
    name = "powertail",
    version,
    about = "Impact-factor distribution toolkit: fit, compare, sample, plot data"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Fit (T, theta) to one year of an impact-factor table.
    Fit(FitArgs),
    /// Emit survival curves (empirical, model, exponential reference) as a table.
    Plotdata(PlotArgs),
    /// Kolmogorov-Smirnov distance for every pair of selected years.
    Compare(CompareArgs),
    /// Draw reproducible samples from the model.
    Sample(SampleArgs),
}

#[derive(Args)]
struct InputArgs {
    /// Input table (UTF-8, header row, ';'/tab/',' delimited).
    #[arg(long)]
    input: PathBuf,
    /// Journal names to exclude (case-insensitive, repeatable).
    #[arg(long = "exclude")]
    exclude: Vec<String>,
}

#[derive(Args)]
struct OutputArgs {
    /// Output path; stdout when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Copy, Clone, PartialEq, Eq, ValueEnum)]
enum Format {
    Table,
    Report,
}

#[derive(Args)]
struct FitArgs {
    #[command(flatten)]
    input: InputArgs,
    /// Year column to fit (exactly one).
    #[arg(long = "year", required = true)]
    years: Vec<i32>,
    /// Shape parameter held fixed during the fit.
    #[arg(long, default_value_t = 2.0)]
    beta: f64,
    /// Log-spaced grid points before tail filtering.
    #[arg(long = "grid-points", default_value_t = 40)]
    grid_points: usize,
    /// Grid range override (both or neither).
    #[arg(long = "r-min")]
    r_min: Option<f64>,
    #[arg(long = "r-max")]
    r_max: Option<f64>,
    /// Minimizer iteration cap.
    #[arg(long = "max-iterations", default_value_t = 400)]
    max_iterations: usize,
    #[arg(long, value_enum, default_value_t = Format::Report)]
    format: Format,
    #[command(flatten)]
    output: OutputArgs,
}

#[derive(Args)]
struct PlotArgs {
    #[command(flatten)]
    input: InputArgs,
    /// Year column to plot (exactly one).
    #[arg(long = "year", required = true)]
    years: Vec<i32>,
    /// Model parameters; when --t/--theta are omitted a fit runs first.
    #[arg(long)]
    t: Option<f64>,
    #[arg(long)]
    theta: Option<f64>,
    #[arg(long, default_value_t = 2.0)]
    beta: f64,
    /// Points of the emitted log-spaced grid.
    #[arg(long = "grid-points", default_value_t = 60)]
    grid_points: usize,
    /// Grid range; defaults to the 1%..99.9% data quantiles.
    #[arg(long = "r-min")]
    r_min: Option<f64>,
    #[arg(long = "r-max")]
    r_max: Option<f64>,
    #[command(flatten)]
    output: OutputArgs,
}

#[derive(Args)]
struct CompareArgs {
    #[command(flatten)]
    input: InputArgs,
    /// Years to compare pairwise (at least two).
    #[arg(long = "year", required = true, num_args = 1)]
    years: Vec<i32>,
    #[arg(long, value_enum, default_value_t = Format::Table)]
    format: Format,
    #[command(flatten)]
    output: OutputArgs,
}

#[derive(Args)]
struct SampleArgs {
    #[arg(long, required = true)]
    t: Option<f64>,
    #[arg(long, required = true)]
    theta: Option<f64>,
    #[arg(long, default_value_t = 2.0)]
    beta: f64,
    /// Number of variates to draw (> 0).
    #[arg(long, required = true)]
    n: Option<i64>,
    /// RNG seed; mandatory so runs are reproducible.
    #[arg(long, required = true)]
    seed: Option<u64>,
    /// Survival-table grid controls.
    #[arg(long = "grid-points", default_value_t = 400)]
    grid_points: usize,
    #[arg(long = "r-min", default_value_t = 1e-3)]
    r_min: f64,
    #[arg(long = "r-max", default_value_t = 500.0)]
    r_max: f64,
    #[command(flatten)]
    output: OutputArgs,
}

/// 17 significant digits: enough for exact f64 round trips downstream.
fn fmt17(x: f64) -> String {
    format!("{x:.16e}")
}

fn quad_from_env() -> Result<QuadratureSettings, Error> {
    match std::env::var("POWERTAIL_QUAD_PROFILE") {
        Ok(profile) => match profile.as_str() {
            "fast" => Ok(QuadratureSettings::fast()),
            "accurate" => Ok(QuadratureSettings::accurate()),
            other => Err(Error::Config(format!(
                "POWERTAIL_QUAD_PROFILE must be 'fast' or 'accurate', got '{other}'"
            ))),
        },
        Err(std::env::VarError::NotPresent) => Ok(QuadratureSettings::accurate()),
        Err(e) => Err(Error::Config(format!(
            "POWERTAIL_QUAD_PROFILE is not readable: {e}"
        ))),
    }
}

fn open_output(out: &Option<PathBuf>) -> Result<Box<dyn Write>, Error> {
    match out {
        Some(path) => {
            let file = File::create(path).map_err(|e| {
                Error::Data(format!("cannot create output '{}': {e}", path.display()))
            })?;
            Ok(Box::new(BufWriter::new(file)))
        }
        None => Ok(Box::new(BufWriter::new(std::io::stdout()))),
    }
}

fn load_year(
    input: &InputArgs,
    year: i32,
) -> Result<(Vec<f64>, IngestReport, IngestReport), Error> {
    let (records, parse_report) = read_records(&input.input)?;
    let (records, exclusion_report) = apply_exclusions(records, &input.exclude);
    let values = column_values(&records, year)?;
    Ok((values, parse_report, exclusion_report))
}

fn read_records(
    path: &Path,
) -> Result<(Vec<powertail::ingest::JournalRecord>, IngestReport), Error> {
    let file = File::open(path)
        .map_err(|e| Error::Data(format!("cannot open input '{}': {e}", path.display())))?;
    parse_table(file, &ParseOptions::default())
}

fn single_year(years: &[i32]) -> Result<i32, Error> {
    match years {
        [year] => Ok(*year),
        _ => Err(Error::Config(format!(
            "exactly one --year is required here, got {}",
            years.len()
        ))),
    }
}

fn fit_with_args(values: &[f64], args: &FitArgs, quad: QuadratureSettings) -> Result<FitResult, Error> {
    let r_range = match (args.r_min, args.r_max) {
        (Some(lo), Some(hi)) => Some((lo, hi)),
        (None, None) => None,
        _ => {
            return Err(Error::Config(
                "--r-min and --r-max must be supplied together".into(),
            ))
        }
    };
    let config = FitConfig {
        grid_points: args.grid_points,
        r_range,
        beta_fixed: args.beta,
        max_iterations: args.max_iterations,
        quad,
        ..FitConfig::default()
    };
    fit(values, &config)
}

fn cmd_fit(args: &FitArgs) -> Result<i32, Error> {
    let year = single_year(&args.years)?;
    let quad = quad_from_env()?;
    let (values, _, exclusion_report) = load_year(&args.input, year)?;
    let result = fit_with_args(&values, args, quad)?;
    let mut out = open_output(&args.output.out)?;
    let fields: Vec<(&str, String)> = vec![
        ("T", fmt17(result.params.t())),
        ("beta", fmt17(result.params.beta())),
        ("theta", fmt17(result.params.theta())),
        ("objective", fmt17(result.objective)),
        ("grid_points", result.grid.len().to_string()),
        ("converged", result.converged.to_string()),
        ("n", values.len().to_string()),
        ("excluded_count", exclusion_report.excluded.len().to_string()),
        ("iterations", result.iterations.to_string()),
    ];
    match args.format {
        Format::Report => {
            for (k, v) in &fields {
                writeln!(out, "{k}: {v}").map_err(write_error)?;
            }
        }
        Format::Table => {
            let header: Vec<&str> = fields.iter().map(|(k, _)| *k).collect();
            let row: Vec<String> = fields.iter().map(|(_, v)| v.clone()).collect();
            writeln!(out, "{}", header.join(";")).map_err(write_error)?;
            writeln!(out, "{}", row.join(";")).map_err(write_error)?;
        }
    }
    out.flush().map_err(write_error)?;
    Ok(if result.converged { 0 } else { 2 })
}

fn cmd_plotdata(args: &PlotArgs) -> Result<i32, Error> {
    let year = single_year(&args.years)?;
    let quad = quad_from_env()?;
    let (values, _, _) = load_year(&args.input, year)?;
    let emp = EmpiricalSurvival::new(&values)?;

    let (params, exit) = match (args.t, args.theta) {
        (Some(t), Some(theta)) => (ModelParams::new(t, args.beta, theta)?, 0),
        (None, None) => {
            let fit_args = FitArgs {
                input: InputArgs {
                    input: args.input.input.clone(),
                    exclude: args.input.exclude.clone(),
                },
                years: vec![year],
                beta: args.beta,
                grid_points: 40,
                r_min: None,
                r_max: None,
                max_iterations: 400,
                format: Format::Report,
                output: OutputArgs { out: None },
            };
            let result = fit_with_args(&values, &fit_args, quad)?;
            (result.params, if result.converged { 0 } else { 2 })
        }
        _ => {
            return Err(Error::Config(
                "supply both --t and --theta, or neither to fit first".into(),
            ))
        }
    };

    let r_lo = args.r_min.unwrap_or_else(|| emp.quantile(0.01).max(1e-6));
    let r_hi = args.r_max.unwrap_or_else(|| emp.quantile(0.999));
    if !(r_lo > 0.0 && r_lo < r_hi) {
        return Err(Error::Config(format!(
            "plot grid requires 0 < r_min < r_max, got [{r_lo}, {r_hi}]"
        )));
    }
    let grid = log_spaced(r_lo, r_hi, args.grid_points.max(2));
    let model = survival_grid(&params, &grid, &quad)?;
    let mut out = open_output(&args.output.out)?;
    writeln!(
        out,
        "R;survival_empirical;survival_model;survival_exponential"
    )
    .map_err(write_error)?;
    for (&r, &m) in grid.iter().zip(&model) {
        let row = [
            fmt17(r),
            fmt17(emp.eval(r)),
            fmt17(m),
            fmt17((-r / params.t()).exp()),
        ];
        writeln!(out, "{}", row.join(";")).map_err(write_error)?;
    }
    out.flush().map_err(write_error)?;
    Ok(exit)
}

fn cmd_compare(args: &CompareArgs) -> Result<i32, Error> {
    if args.years.len() < 2 {
        return Err(Error::Config(format!(
            "compare needs at least two --year flags, got {}",
            args.years.len()
        )));
    }
    let (records, _) = read_records(&args.input.input)?;
    let (records, _) = apply_exclusions(records, &args.input.exclude);
    let mut samples = Vec::with_capacity(args.years.len());
    for &year in &args.years {
        samples.push((year.to_string(), column_values(&records, year)?));
    }
    let report = stability_report(&samples)?;
    let mut out = open_output(&args.output.out)?;
    match args.format {
        Format::Table => {
            writeln!(out, "year_a;year_b;ks_distance;n_a;n_b").map_err(write_error)?;
            for pair in &report.pairs {
                writeln!(
                    out,
                    "{};{};{};{};{}",
                    pair.label_a,
                    pair.label_b,
                    fmt17(pair.ks),
                    pair.n_a,
                    pair.n_b
                )
                .map_err(write_error)?;
            }
        }
        Format::Report => {
            for pair in &report.pairs {
                writeln!(out, "pair: {},{}", pair.label_a, pair.label_b).map_err(write_error)?;
                writeln!(out, "ks_distance: {}", fmt17(pair.ks)).map_err(write_error)?;
                writeln!(out, "n_a: {}", pair.n_a).map_err(write_error)?;
                writeln!(out, "n_b: {}", pair.n_b).map_err(write_error)?;
            }
        }
    }
    out.flush().map_err(write_error)?;
    Ok(0)
}

fn cmd_sample(args: &SampleArgs) -> Result<i32, Error> {
    let (t, theta) = (args.t.unwrap(), args.theta.unwrap());
    let n = args.n.unwrap();
    if n <= 0 {
        return Err(Error::Config(format!("--n must be positive, got {n}")));
    }
    let seed = args.seed.unwrap();
    let quad = quad_from_env()?;
    let params = ModelParams::new(t, args.beta, theta)?;
    let grid = GridSpec {
        r_min: args.r_min,
        r_max: args.r_max,
        points: args.grid_points,
        ..GridSpec::default()
    };
    let table = tabulate(&params, &quad, &grid)?;
    let values = sample(&table, n as usize, seed);
    let mut out = open_output(&args.output.out)?;
    for v in values {
        writeln!(out, "{}", fmt17(v)).map_err(write_error)?;
    }
    out.flush().map_err(write_error)?;
    Ok(0)
}

fn write_error(e: std::io::Error) -> Error {
    Error::Data(format!("write failed: {e}"))
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => 1,
            };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let outcome = match &cli.command {
        Command::Fit(args) => cmd_fit(args),
        Command::Plotdata(args) => cmd_plotdata(args),
        Command::Compare(args) => cmd_compare(args),
        Command::Sample(args) => cmd_sample(args),
    };
    match outcome {
        Ok(code) => ExitCode::from(code as u8),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}
