use std::collections::BTreeSet;
use std::fs;
use std::io::{self, Read, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use collabnet_core::ingest::{write_records, AggregateOptions, ParseOptions};
use collabnet_core::pipeline::{feature_stats, load_input, run_pipeline, InputSource, PipelineError, RunConfig, ThresholdSpec};
use collabnet_core::stats::DEFAULT_BINS;
use collabnet_core::{filter_by_type, generate, ExportFormat, ProjectType, SynthConfig};
use log::warn;

const EXIT_INPUT: u8 = 1;
const EXIT_CONFIG: u8 = 2;

#[derive(Parser)]
#[command(name = "collabnet", version, about = "Build threshold-swept project collaboration networks")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Parse and validate an input table, then print a summary.
    Ingest(InputArgs),
    /// Print summary statistics of contribution and IC-score values as JSON.
    Stats {
        #[command(flatten)]
        input: InputArgs,
        /// Histogram bin count.
        #[arg(long, default_value_t = DEFAULT_BINS)]
        bins: usize,
        /// Project types to keep (comma separated).
        #[arg(long, value_delimiter = ',')]
        types: Vec<ProjectType>,
    },
    /// Build the layer stack and write exports, metrics and statistics.
    Build(BuildArgs),
    /// Write a seeded synthetic dataset as CSV.
    Synth {
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = SynthConfig::default().n_projects)]
        projects: usize,
        #[arg(long, default_value_t = SynthConfig::default().n_members)]
        members: usize,
        /// Output file; standard output when omitted.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Args)]
struct InputArgs {
    /// Input CSV path, or `-` for standard input.
    #[arg(long, required_unless_present = "synth_seed")]
    input: Option<String>,
    /// Use a synthetic dataset with this seed instead of an input file.
    #[arg(long, conflicts_with = "input")]
    synth_seed: Option<u64>,
    /// Field delimiter (a single ASCII character).
    #[arg(long, default_value_t = ',')]
    delimiter: char,
    /// Skip malformed rows instead of failing.
    #[arg(long)]
    lenient: bool,
    /// Treat project contribution sums above the 100.5 tolerance as errors.
    #[arg(long)]
    strict: bool,
}

#[derive(Args)]
struct BuildArgs {
    #[command(flatten)]
    input: InputArgs,
    /// Project types to keep (comma separated).
    #[arg(long, value_delimiter = ',')]
    types: Vec<ProjectType>,
    /// Explicit thresholds (comma separated, strictly increasing).
    #[arg(long, value_delimiter = ',', allow_negative_numbers = true)]
    thresholds: Vec<f64>,
    /// Evenly spaced thresholds between the smallest and largest linkage.
    /// Ignored when --thresholds is given.
    #[arg(long)]
    linspace: Option<usize>,
    /// Output directory.
    #[arg(long, env = "COLLABNET_OUT_DIR")]
    out: PathBuf,
    /// Layer export format: graphml, dot or json.
    #[arg(long, default_value = "graphml", value_parser = |s: &str| s.parse::<ExportFormat>().map_err(|e| e.to_string()))]
    format: ExportFormat,
    /// Keep isolated nodes in the exported layers.
    #[arg(long)]
    include_isolated: bool,
    /// Histogram bin count.
    #[arg(long, default_value_t = DEFAULT_BINS)]
    bins: usize,
    /// Also write the full linkage table.
    #[arg(long)]
    dump_linkage: bool,
}

#[derive(Debug)]
enum CliError {
    Pipeline(PipelineError),
    Config(String),
    Io(io::Error),
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            CliError::Pipeline(e) if e.exit_code() == 2 => EXIT_CONFIG,
            CliError::Config(_) => EXIT_CONFIG,
            _ => EXIT_INPUT,
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Pipeline(e) => write!(f, "{e}"),
            CliError::Config(msg) => write!(f, "{msg}"),
            CliError::Io(e) => write!(f, "{e}"),
        }
    }
}

impl From<PipelineError> for CliError {
    fn from(e: PipelineError) -> Self {
        CliError::Pipeline(e)
    }
}

impl From<io::Error> for CliError {
    fn from(e: io::Error) -> Self {
        CliError::Io(e)
    }
}

impl InputArgs {
    fn source(&self) -> Result<InputSource, CliError> {
        if let Some(seed) = self.synth_seed {
            return Ok(InputSource::Synth(SynthConfig::with_seed(seed)));
        }
        match self.input.as_deref() {
            Some("-") => {
                let mut data = Vec::new();
                io::stdin().read_to_end(&mut data)?;
                Ok(InputSource::Bytes {
                    label: "stdin".into(),
                    data,
                })
            }
            Some(path) => Ok(InputSource::Path(path.into())),
            None => Err(CliError::Config("no input given".into())),
        }
    }

    fn delimiter(&self) -> Result<u8, CliError> {
        u8::try_from(self.delimiter)
            .ok()
            .filter(u8::is_ascii)
            .ok_or_else(|| CliError::Config(format!("delimiter must be one ASCII character, got {:?}", self.delimiter)))
    }

    fn parse_options(&self) -> Result<ParseOptions, CliError> {
        Ok(ParseOptions {
            delimiter: self.delimiter()?,
            lenient: self.lenient,
        })
    }
}

fn type_set(types: &[ProjectType]) -> BTreeSet<ProjectType> {
    if types.is_empty() {
        ProjectType::all()
    } else {
        types.iter().copied().collect()
    }
}

fn ingest(args: &InputArgs) -> Result<(), CliError> {
    let loaded = load_input(&args.source()?, args.parse_options()?, AggregateOptions { strict: args.strict })?;
    for w in &loaded.warnings {
        warn!("{w}");
    }
    let d = &loaded.dataset;
    let summary = serde_json::json!({
        "source": loaded.label,
        "sha256": loaded.sha256,
        "records": loaded.records.len(),
        "skipped_rows": loaded.skipped_rows,
        "projects": d.len(),
        "members": d.member_index().len(),
        "types": ProjectType::ALL
            .iter()
            .map(|t| (t.as_str(), d.projects().filter(|p| p.project_type == *t).count()))
            .collect::<std::collections::BTreeMap<_, _>>(),
        "warnings": loaded.warnings,
        "fingerprint": d.fingerprint(),
    });
    println!("{}", serde_json::to_string_pretty(&summary).expect("summary serializes"));
    Ok(())
}

fn stats(args: &InputArgs, bins: usize, types: &[ProjectType]) -> Result<(), CliError> {
    let loaded = load_input(&args.source()?, args.parse_options()?, AggregateOptions { strict: args.strict })?;
    let records = filter_by_type(&loaded.dataset, &type_set(types)).to_records();
    let bundle = feature_stats(&records, bins).map_err(PipelineError::from)?;
    if let Some(a) = &bundle.advisory {
        warn!("{a}");
    }
    println!("{}", serde_json::to_string_pretty(&bundle).expect("stats serialize"));
    Ok(())
}

fn build(args: &BuildArgs) -> Result<(), CliError> {
    let mut config = RunConfig::new(args.input.source()?, &args.out);
    config.type_filter = args.types.iter().copied().collect();
    config.thresholds = match (args.thresholds.is_empty(), args.linspace) {
        (false, Some(_)) => {
            warn!("both --thresholds and --linspace given; using the explicit thresholds");
            ThresholdSpec::Explicit(args.thresholds.clone())
        }
        (false, None) => ThresholdSpec::Explicit(args.thresholds.clone()),
        (true, Some(n)) => ThresholdSpec::Linspace(n),
        (true, None) => ThresholdSpec::default(),
    };
    config.export_format = args.format;
    config.include_isolated = args.include_isolated;
    config.strict = args.input.strict;
    config.lenient = args.input.lenient;
    config.delimiter = args.input.delimiter()?;
    config.n_bins = args.bins;
    config.dump_linkage = args.dump_linkage;

    let out = run_pipeline(&config)?;
    for w in &out.input.warnings {
        warn!("{w}");
    }
    eprintln!(
        "{} projects, {} linkage pairs, {} layers written to {}",
        out.dataset.len(),
        out.table.len(),
        out.layers.len(),
        args.out.display()
    );
    Ok(())
}

fn synth(seed: u64, projects: usize, members: usize, out: Option<&PathBuf>) -> Result<(), CliError> {
    let defaults = SynthConfig::default();
    let config = SynthConfig {
        seed,
        n_projects: projects,
        n_members: members,
        team_size_max: defaults.team_size_max.min(members.max(1)),
        ..defaults
    };
    let records = generate(&config).map_err(PipelineError::from)?;
    let mut buf = Vec::new();
    write_records(&mut buf, &records).map_err(PipelineError::from)?;
    match out {
        Some(path) => fs::write(path, buf)?,
        None => io::stdout().lock().write_all(&buf)?,
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Ingest(args) => ingest(args),
        Command::Stats { input, bins, types } => stats(input, *bins, types),
        Command::Build(args) => build(args),
        Command::Synth {
            seed,
            projects,
            members,
            out,
        } => synth(*seed, *projects, *members, out.as_ref()),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
