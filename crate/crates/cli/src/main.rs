//! `dri` — config-driven front end for the resilience index pipeline.
//!
//! Exit codes form a stable contract: 0 success, 1 operational error,
//! 2 validation findings. Logs go to stderr (controlled by `DRI_LOG`);
//! data goes to files only.

use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use dri_core::config::{NormalizationDomain, RunConfig};
use dri_core::fips::Fips;
use dri_core::pipeline::{run_compare, run_compute, run_validate};

#[derive(Parser)]
#[command(
    name = "dri",
    version,
    about = "County-level disaster resilience index pipeline"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Parse and join all configured inputs; report findings, write nothing
    Validate(RunArgs),
    /// Run the pipeline and write results CSV, GeoJSON, and manifest
    Compute(RunArgs),
    /// Compare index classes and values against the FEMA risk index
    Compare(RunArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum DomainArg {
    /// Normalization bounds from every joined county
    Full,
    /// Normalization bounds from the analysis subset
    Subset,
}

impl From<DomainArg> for NormalizationDomain {
    fn from(arg: DomainArg) -> Self {
        match arg {
            DomainArg::Full => NormalizationDomain::FullDataset,
            DomainArg::Subset => NormalizationDomain::AnalysisSubset,
        }
    }
}

#[derive(Args)]
struct RunArgs {
    /// Path to the JSON run configuration
    #[arg(short, long)]
    config: PathBuf,

    /// Override the common term weight
    #[arg(long)]
    weight: Option<f64>,

    /// Override the number of quantile classes
    #[arg(long)]
    classes: Option<usize>,

    /// Use the literal 0.33 coefficient instead of exact 1/3
    #[arg(long)]
    paper_literal: bool,

    /// Normalization domain
    #[arg(long, value_enum)]
    domain: Option<DomainArg>,

    /// File listing analysis-subset FIPS codes, one per line ('#' comments)
    #[arg(long)]
    subset_fips: Option<PathBuf>,

    /// Override the output directory
    #[arg(long)]
    out: Option<PathBuf>,
}

fn load_config(args: &RunArgs) -> Result<RunConfig, String> {
    let mut config = RunConfig::from_path(&args.config)
        .map_err(|e| format!("cannot load config {}: {e}", args.config.display()))?;
    if let Some(weight) = args.weight {
        config.index.weight = Some(weight);
    }
    if let Some(classes) = args.classes {
        config.index.class_count = classes;
    }
    if args.paper_literal {
        config.paper_literal = true;
    }
    if let Some(domain) = args.domain {
        config.index.normalization_domain = domain.into();
    }
    if let Some(path) = &args.subset_fips {
        config.index.analysis_fips = load_fips_list(path)?;
    }
    if let Some(out) = &args.out {
        config.output_dir = out.clone();
    }
    Ok(config)
}

fn load_fips_list(path: &PathBuf) -> Result<Vec<Fips>, String> {
    let raw = fs::read_to_string(path)
        .map_err(|e| format!("cannot read FIPS list {}: {e}", path.display()))?;
    raw.lines()
        .map(|line| line.split('#').next().unwrap_or("").trim())
        .filter(|line| !line.is_empty())
        .map(|line| {
            Fips::parse(line).map_err(|reason| format!("{}: {reason}", path.display()))
        })
        .collect()
}

fn cmd_validate(args: &RunArgs) -> ExitCode {
    let config = match load_config(args) {
        Ok(config) => config,
        Err(message) => return operational_error(&message),
    };
    match run_validate(&config) {
        Ok(report) => {
            println!("{report}");
            if report.findings() == 0 {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(2)
            }
        }
        Err(error) => operational_error(&error.to_string()),
    }
}

fn cmd_compute(args: &RunArgs) -> ExitCode {
    let config = match load_config(args) {
        Ok(config) => config,
        Err(message) => return operational_error(&message),
    };
    match run_compute(&config) {
        Ok(summary) => {
            for path in &summary.written {
                eprintln!("wrote {}", path.display());
            }
            log::info!(
                "{} counties scored, {} features emitted",
                summary.results,
                summary.geojson_features.unwrap_or(0)
            );
            ExitCode::SUCCESS
        }
        Err(error) => operational_error(&error.to_string()),
    }
}

fn cmd_compare(args: &RunArgs) -> ExitCode {
    let config = match load_config(args) {
        Ok(config) => config,
        Err(message) => return operational_error(&message),
    };
    match run_compare(&config) {
        Ok((report, path)) => {
            eprintln!("wrote {}", path.display());
            log::info!(
                "compared {} counties, rho = {}",
                report.n,
                report
                    .spearman_rho
                    .map_or("null".to_string(), |r| r.to_string())
            );
            ExitCode::SUCCESS
        }
        Err(error) => operational_error(&error.to_string()),
    }
}

fn operational_error(message: &str) -> ExitCode {
    eprintln!("error: {message}");
    ExitCode::from(1)
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::new().filter_or("DRI_LOG", "off"))
        .format_timestamp(None)
        .init();

    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(error) => {
            // --help and --version land here; usage mistakes are
            // operational errors, not validation findings.
            let _ = error.print();
            return if error.use_stderr() {
                ExitCode::from(1)
            } else {
                ExitCode::SUCCESS
            };
        }
    };

    match &cli.command {
        Command::Validate(args) => cmd_validate(args),
        Command::Compute(args) => cmd_compute(args),
        Command::Compare(args) => cmd_compare(args),
    }
}
