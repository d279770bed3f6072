//! Command-line surface: synthetic data generation, the three experiment
//! runners, and the feature-weight report.
//!
//! Exit codes: 0 success, 1 usage error, 2 data error, 3 every requested
//! model family was numerically not applicable.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

use std::collections::BTreeSet;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use jobtime::dataset::{self, JobProfile, SplitSpec};
use jobtime::features::CoreFeature;
use jobtime::pipeline::{self, EvaluationReport, ModelFamily, SearchGrid};
use jobtime::report;
use jobtime::synth::{self, Scenario, SynthConfig};

const EXIT_USAGE: u8 = 1;
const EXIT_DATA: u8 = 2;
const EXIT_NOT_APPLICABLE: u8 = 3;

/// Default seed used by every subcommand unless --seed is given.
const DEFAULT_SEED: u64 = 20161205;

#[derive(Parser)]
#[command(name = "jobtime", version, about = "MapReduce/Tez job execution time prediction")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a synthetic benchmark CSV plus a sidecar metadata file.
    Synth(SynthArgs),
    /// Same-query validation: 60/20/20 split, one report per query.
    Validate(ValidateArgs),
    /// Hold out one or more core counts for testing.
    CoreHoldout(CoreHoldoutArgs),
    /// Train on one query set, test on another.
    CrossQuery(CrossQueryArgs),
    /// Feature-weight report for the linear model families.
    Weights(WeightsArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum CoreFeatureArg {
    Plain,
    Inverse,
    MapOverCores,
    ReduceOverCores,
}

impl From<CoreFeatureArg> for CoreFeature {
    fn from(a: CoreFeatureArg) -> CoreFeature {
        match a {
            CoreFeatureArg::Plain => CoreFeature::PlainCores,
            CoreFeatureArg::Inverse => CoreFeature::InverseCores,
            CoreFeatureArg::MapOverCores => CoreFeature::MapOverCores,
            CoreFeatureArg::ReduceOverCores => CoreFeature::ReduceOverCores,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Json,
    Table,
    Csv,
}

#[derive(Args)]
struct CommonArgs {
    /// Input CSV of job profiles.
    #[arg(long)]
    input: PathBuf,
    /// Output directory for report files.
    #[arg(long)]
    out: PathBuf,
    #[arg(long, default_value_t = DEFAULT_SEED)]
    seed: u64,
    /// Core-feature transform used in the feature vector.
    #[arg(long, value_enum, default_value = "inverse")]
    core_feature: CoreFeatureArg,
    /// Comma-separated model families (ols, svr-linear, svr-poly2/3/4/6,
    /// svr-gaussian). Default: all.
    #[arg(long, value_delimiter = ',')]
    families: Vec<String>,
    /// Override the C grid.
    #[arg(long = "grid-c", value_delimiter = ',')]
    grid_c: Vec<f64>,
    /// Override the epsilon grid (fractions of mean |y| on training data).
    #[arg(long = "grid-eps", value_delimiter = ',')]
    grid_eps: Vec<f64>,
    /// Rendered report format written alongside the JSON report.
    #[arg(long, value_enum, default_value = "table")]
    format: Format,
    /// Disable feature standardization for SVR families.
    #[arg(long)]
    no_standardize: bool,
}

#[derive(Args)]
struct SynthArgs {
    #[arg(long, value_parser = Scenario::parse)]
    scenario: Scenario,
    #[arg(long)]
    out: PathBuf,
    #[arg(long, default_value_t = DEFAULT_SEED)]
    seed: u64,
    /// Multiplicative noise level; scenario default when omitted.
    #[arg(long)]
    noise: Option<f64>,
    #[arg(long, default_value_t = 20)]
    runs: usize,
    /// Toggle 10x duration spikes (noisy_fast_query only).
    #[arg(long)]
    spikes: Option<bool>,
}

#[derive(Args)]
struct ValidateArgs {
    #[command(flatten)]
    common: CommonArgs,
}

#[derive(Args)]
struct CoreHoldoutArgs {
    #[command(flatten)]
    common: CommonArgs,
    /// Core counts to hold out, one report each.
    #[arg(long, value_delimiter = ',', required = true)]
    cores: Vec<u32>,
}

#[derive(Args)]
struct CrossQueryArgs {
    #[command(flatten)]
    common: CommonArgs,
    /// Queries forming the training (and cv) population.
    #[arg(long, value_delimiter = ',', required = true)]
    train_queries: Vec<String>,
    /// Query to predict.
    #[arg(long)]
    test_query: String,
}

#[derive(Args)]
struct WeightsArgs {
    #[command(flatten)]
    common: CommonArgs,
}

struct DataError(String);

impl<E: std::fmt::Display> From<E> for DataError {
    fn from(e: E) -> Self {
        DataError(e.to_string())
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            // Keep clap's help/version on stdout with success, everything
            // else is a usage error.
            let _ = e.print();
            return match e.kind() {
                clap::error::ErrorKind::DisplayHelp | clap::error::ErrorKind::DisplayVersion => {
                    ExitCode::SUCCESS
                }
                _ => ExitCode::from(EXIT_USAGE),
            };
        }
    };

    let result = match cli.command {
        Command::Synth(args) => cmd_synth(args),
        Command::Validate(args) => cmd_validate(args),
        Command::CoreHoldout(args) => cmd_core_holdout(args),
        Command::CrossQuery(args) => cmd_cross_query(args),
        Command::Weights(args) => cmd_weights(args),
    };
    match result {
        Ok(code) => code,
        Err(DataError(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(EXIT_DATA)
        }
    }
}

fn write_atomic(path: &Path, contents: &str) -> Result<(), DataError> {
    if let Some(dir) = path.parent() {
        std::fs::create_dir_all(dir)?;
    }
    let tmp = path.with_extension("tmp");
    std::fs::write(&tmp, contents)?;
    std::fs::rename(&tmp, path)?;
    Ok(())
}

fn build_grid(common: &CommonArgs) -> Result<SearchGrid, DataError> {
    let mut grid = SearchGrid::standard();
    if !common.grid_c.is_empty() {
        if common.grid_c.iter().any(|c| !(*c > 0.0)) {
            return Err(DataError("--grid-c values must be positive".into()));
        }
        grid.c_values = common.grid_c.clone();
    }
    if !common.grid_eps.is_empty() {
        if common.grid_eps.iter().any(|e| !(*e >= 0.0)) {
            return Err(DataError("--grid-eps values must be nonnegative".into()));
        }
        grid.epsilon_values = common.grid_eps.clone();
    }
    if !common.families.is_empty() {
        let mut families = Vec::new();
        for name in &common.families {
            let family = ModelFamily::parse(name)
                .ok_or_else(|| DataError(format!("unknown model family {name:?}")))?;
            families.push(family);
        }
        grid.families = families;
    }
    grid.core_features = vec![common.core_feature.into()];
    Ok(grid)
}

fn load_input(common: &CommonArgs) -> Result<Vec<JobProfile>, DataError> {
    let profiles = dataset::load_profiles(&common.input)?;
    if profiles.is_empty() {
        return Err(DataError(format!(
            "{} contains no profiles",
            common.input.display()
        )));
    }
    Ok(profiles)
}

/// Writes the JSON report plus the rendered form chosen by --format and
/// echoes the table to stdout.
fn emit_report(
    common: &CommonArgs,
    name: &str,
    report: &EvaluationReport,
) -> Result<(), DataError> {
    let json = serde_json::to_string_pretty(report)?;
    write_atomic(&common.out.join(format!("{name}.json")), &json)?;
    let rendered = match common.format {
        Format::Json => json,
        Format::Table => report::render_table(report),
        Format::Csv => report::render_csv(report),
    };
    let ext = match common.format {
        Format::Json => "json",
        Format::Table => "txt",
        Format::Csv => "csv",
    };
    if !matches!(common.format, Format::Json) {
        write_atomic(&common.out.join(format!("{name}.{ext}")), &rendered)?;
    }
    println!("{}", report::render_table(report));
    Ok(())
}

fn all_not_applicable(reports: &[&EvaluationReport]) -> bool {
    reports
        .iter()
        .flat_map(|r| r.rows.iter())
        .all(|row| row.status == "not_applicable")
}

fn exit_for(reports: &[&EvaluationReport]) -> ExitCode {
    if all_not_applicable(reports) {
        ExitCode::from(EXIT_NOT_APPLICABLE)
    } else {
        ExitCode::SUCCESS
    }
}

fn cmd_synth(args: SynthArgs) -> Result<ExitCode, DataError> {
    let mut cfg = SynthConfig::new(args.scenario, args.seed);
    if let Some(noise) = args.noise {
        cfg.noise = noise;
    }
    cfg.runs_per_config = args.runs;
    if let Some(spikes) = args.spikes {
        cfg.spikes = spikes;
    }
    let (profiles, meta) = synth::generate(&cfg);
    let csv = dataset::write_mr_csv(&profiles)?;
    let csv_path = args.out.join(format!("{}.csv", cfg.scenario.id()));
    write_atomic(&csv_path, &csv)?;
    let meta_path = args.out.join(format!("{}.meta.json", cfg.scenario.id()));
    write_atomic(&meta_path, &serde_json::to_string_pretty(&meta)?)?;
    println!("wrote {} profiles to {}", profiles.len(), csv_path.display());
    println!("wrote generator metadata to {}", meta_path.display());
    Ok(ExitCode::SUCCESS)
}

fn cmd_validate(args: ValidateArgs) -> Result<ExitCode, DataError> {
    let common = args.common;
    let grid = build_grid(&common)?;
    let profiles = load_input(&common)?;
    let queries: BTreeSet<String> = profiles.iter().map(|p| p.query_id.clone()).collect();
    let mut reports = Vec::new();
    for query in &queries {
        let subset: Vec<JobProfile> = profiles.iter().filter(|p| &p.query_id == query).cloned().collect();
        let split_spec = SplitSpec::standard(common.seed);
        let report = pipeline::run_validation(&subset, !common.no_standardize, &grid, &split_spec)?;
        emit_report(&common, &format!("validate_{query}"), &report)?;
        reports.push(report);
    }
    Ok(exit_for(&reports.iter().collect::<Vec<_>>()))
}

fn cmd_core_holdout(args: CoreHoldoutArgs) -> Result<ExitCode, DataError> {
    let common = args.common;
    let grid = build_grid(&common)?;
    let profiles = load_input(&common)?;
    let mut reports = Vec::new();
    for &cores in &args.cores {
        let report =
            pipeline::run_core_holdout(&profiles, !common.no_standardize, &grid, cores, common.seed)?;
        emit_report(&common, &format!("core_holdout_{cores}"), &report)?;
        reports.push(report);
    }
    Ok(exit_for(&reports.iter().collect::<Vec<_>>()))
}

fn cmd_cross_query(args: CrossQueryArgs) -> Result<ExitCode, DataError> {
    let common = args.common;
    let grid = build_grid(&common)?;
    let profiles = load_input(&common)?;
    let known: BTreeSet<&str> = profiles.iter().map(|p| p.query_id.as_str()).collect();
    for q in args.train_queries.iter().chain(std::iter::once(&args.test_query)) {
        if !known.contains(q.as_str()) {
            return Err(DataError(format!(
                "unknown query id {q:?}; known queries: {}",
                known.into_iter().collect::<Vec<_>>().join(", ")
            )));
        }
    }
    let train: Vec<JobProfile> = profiles
        .iter()
        .filter(|p| args.train_queries.contains(&p.query_id))
        .cloned()
        .collect();
    let test: Vec<JobProfile> = profiles
        .iter()
        .filter(|p| p.query_id == args.test_query)
        .cloned()
        .collect();
    let report = pipeline::run_cross_query(&train, &test, !common.no_standardize, &grid, common.seed)?;
    let name = format!(
        "cross_query_{}_to_{}",
        args.train_queries.join("-"),
        args.test_query
    );
    emit_report(&common, &name, &report)?;
    Ok(exit_for(&[&report]))
}

fn cmd_weights(args: WeightsArgs) -> Result<ExitCode, DataError> {
    let common = args.common;
    let grid = build_grid(&common)?;
    let profiles = load_input(&common)?;
    let report = pipeline::run_weights(&profiles, !common.no_standardize, &grid, common.seed)?;
    emit_report(&common, "weights", &report)?;
    Ok(exit_for(&[&report]))
}
