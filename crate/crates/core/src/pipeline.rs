//! End-to-end run: records → dataset → linkage → layers → metrics → files.
//!
//! All artifacts are assembled in memory first and written only once the
//! whole run has succeeded, so a failed run leaves nothing behind.

use std::collections::BTreeSet;
use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;
use serde_json::json;
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::export::{export_layer, layer_visuals, ExportError, ExportFormat};
use crate::ingest::{
    aggregate, filter_by_type, hex, parse_records, write_records, AggregateOptions, ContributionRecord,
    Dataset, IngestError, ParseOptions, ProjectType,
};
use crate::layers::{build_layer_stack, make_sweep_linspace, NetworkLayer, SweepError, ThresholdSweep};
use crate::linkage::{build_linkage_table, LinkageTable};
use crate::metrics::{report, reports_to_json, write_reports_csv, LayerMetricsReport};
use crate::stats::{select_linkage_feature, summarize, Feature, FeatureSummary, StatsError, DEFAULT_BINS};
use crate::synth::{generate, SynthConfig, SynthError};

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error(transparent)]
    Ingest(#[from] IngestError),
    #[error(transparent)]
    Sweep(#[from] SweepError),
    #[error(transparent)]
    Stats(#[from] StatsError),
    #[error(transparent)]
    Export(#[from] ExportError),
    #[error(transparent)]
    Synth(#[from] SynthError),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorClass {
    /// Unreadable or invalid input data.
    Input,
    /// Invalid options.
    Config,
}

impl PipelineError {
    pub fn class(&self) -> ErrorClass {
        match self {
            PipelineError::Ingest(_) | PipelineError::Stats(_) | PipelineError::Io { .. } => ErrorClass::Input,
            PipelineError::Sweep(SweepError::EmptyTable) => ErrorClass::Input,
            PipelineError::Sweep(_) | PipelineError::Export(_) | PipelineError::Synth(_) => ErrorClass::Config,
        }
    }

    /// Process exit code: 1 for input errors, 2 for config errors.
    pub fn exit_code(&self) -> i32 {
        match self.class() {
            ErrorClass::Input => 1,
            ErrorClass::Config => 2,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ThresholdSpec {
    Explicit(Vec<f64>),
    Linspace(usize),
}

impl Default for ThresholdSpec {
    fn default() -> Self {
        ThresholdSpec::Explicit(ThresholdSweep::standard().thresholds().to_vec())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum InputSource {
    Path(PathBuf),
    /// Raw CSV bytes with a label for the manifest (e.g. "stdin").
    Bytes { label: String, data: Vec<u8> },
    Synth(SynthConfig),
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub input: InputSource,
    /// Empty means every type.
    pub type_filter: BTreeSet<ProjectType>,
    pub thresholds: ThresholdSpec,
    pub output_dir: PathBuf,
    pub export_format: ExportFormat,
    pub include_isolated: bool,
    pub strict: bool,
    pub lenient: bool,
    pub delimiter: u8,
    pub n_bins: usize,
    pub dump_linkage: bool,
}

impl RunConfig {
    pub fn new(input: InputSource, output_dir: impl Into<PathBuf>) -> Self {
        Self {
            input,
            type_filter: BTreeSet::new(),
            thresholds: ThresholdSpec::default(),
            output_dir: output_dir.into(),
            export_format: ExportFormat::GraphMl,
            include_isolated: true,
            strict: false,
            lenient: false,
            delimiter: b',',
            n_bins: DEFAULT_BINS,
            dump_linkage: false,
        }
    }

    fn effective_types(&self) -> BTreeSet<ProjectType> {
        if self.type_filter.is_empty() {
            ProjectType::all()
        } else {
            self.type_filter.clone()
        }
    }
}

/// Loaded and validated input.
#[derive(Debug, Clone)]
pub struct LoadedInput {
    pub label: String,
    pub sha256: String,
    pub records: Vec<ContributionRecord>,
    pub skipped_rows: usize,
    pub dataset: Dataset,
    pub warnings: Vec<String>,
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex(&Sha256::digest(bytes))
}

/// Reads, parses and aggregates the input.
pub fn load_input(
    input: &InputSource,
    options: ParseOptions,
    aggregate_options: AggregateOptions,
) -> Result<LoadedInput, PipelineError> {
    let (label, bytes) = match input {
        InputSource::Path(p) => {
            let bytes = fs::read(p).map_err(|source| PipelineError::Io {
                path: p.clone(),
                source,
            })?;
            (p.display().to_string(), bytes)
        }
        InputSource::Bytes { label, data } => (label.clone(), data.clone()),
        InputSource::Synth(cfg) => {
            let records = generate(cfg)?;
            let mut bytes = Vec::new();
            write_records(&mut bytes, &records)?;
            (format!("synth:seed={}", cfg.seed), bytes)
        }
    };
    let parsed = parse_records(bytes.as_slice(), options)?;
    let mut warnings: Vec<String> = parsed.skipped.iter().map(|e| format!("skipped {e}")).collect();
    let agg = aggregate(&parsed.records, aggregate_options)?;
    warnings.extend(agg.warnings.iter().map(ToString::to_string));
    Ok(LoadedInput {
        label,
        sha256: sha256_hex(&bytes),
        skipped_rows: parsed.skipped.len(),
        records: parsed.records,
        dataset: agg.dataset,
        warnings,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct StatsBundle {
    pub contribution: FeatureSummary,
    pub ic_score: Option<FeatureSummary>,
    pub linkage_feature: Feature,
    pub advisory: Option<String>,
}

/// Contribution statistics are required; IC-score statistics are optional.
pub fn feature_stats(records: &[ContributionRecord], n_bins: usize) -> Result<StatsBundle, StatsError> {
    let contribution = summarize(records, Feature::ContributionPct, n_bins)?;
    let ic_score = match summarize(records, Feature::IcScore, n_bins) {
        Ok(s) => Some(s),
        Err(StatsError::FeatureAbsent(_)) => None,
        Err(e) => return Err(e),
    };
    let choice = ic_score.as_ref().map(|ic| select_linkage_feature(&contribution, ic));
    Ok(StatsBundle {
        contribution,
        ic_score,
        linkage_feature: choice.as_ref().map_or(Feature::ContributionPct, |c| c.selected),
        advisory: choice.and_then(|c| c.advisory),
    })
}

/// Everything a run produces, before it touches the disk.
#[derive(Debug, Clone)]
pub struct RunOutput {
    pub input: LoadedInput,
    pub dataset: Dataset,
    pub table: LinkageTable,
    pub sweep: ThresholdSweep,
    pub layers: Vec<NetworkLayer>,
    pub reports: Vec<LayerMetricsReport>,
    pub stats: StatsBundle,
    /// Relative path and content, in write order. The manifest is last.
    pub files: Vec<(String, Vec<u8>)>,
}

fn resolve_sweep(spec: &ThresholdSpec, table: &LinkageTable) -> Result<ThresholdSweep, SweepError> {
    match spec {
        ThresholdSpec::Explicit(ts) => ThresholdSweep::explicit(ts.clone()),
        ThresholdSpec::Linspace(n) => make_sweep_linspace(table, *n),
    }
}

/// Runs the whole pipeline in memory.
pub fn build_artifacts(config: &RunConfig) -> Result<RunOutput, PipelineError> {
    let input = load_input(
        &config.input,
        ParseOptions {
            delimiter: config.delimiter,
            lenient: config.lenient,
        },
        AggregateOptions { strict: config.strict },
    )?;
    let types = config.effective_types();
    let dataset = filter_by_type(&input.dataset, &types);
    let records = dataset.to_records();
    let stats = feature_stats(&records, config.n_bins)?;

    let table = build_linkage_table(&dataset);
    let sweep = resolve_sweep(&config.thresholds, &table)?;
    let layers = build_layer_stack(&dataset, &table, &sweep);
    let reports: Vec<LayerMetricsReport> = layers.iter().map(report).collect();

    let mut files: Vec<(String, Vec<u8>)> = Vec::new();
    let ext = config.export_format.extension();
    for (i, layer) in layers.iter().enumerate() {
        let visuals = layer_visuals(layer, config.include_isolated);
        let doc = export_layer(layer, &visuals, config.export_format, config.include_isolated)?;
        files.push((format!("layers/layer_{i:02}.{ext}"), doc));
    }

    let mut metrics_csv = Vec::new();
    write_reports_csv(&mut metrics_csv, &reports).expect("write to memory");
    files.push(("metrics.csv".into(), metrics_csv));
    files.push(("metrics.json".into(), (reports_to_json(&reports) + "\n").into_bytes()));

    let mut hist = Vec::new();
    stats.contribution.write_histogram_csv(&mut hist).expect("write to memory");
    files.push(("stats/contribution_pct_histogram.csv".into(), hist));
    if let Some(ic) = &stats.ic_score {
        let mut hist = Vec::new();
        ic.write_histogram_csv(&mut hist).expect("write to memory");
        files.push(("stats/ic_score_histogram.csv".into(), hist));
    }
    let summary = serde_json::to_string_pretty(&stats).expect("stats serialize") + "\n";
    files.push(("stats/summary.json".into(), summary.into_bytes()));

    if config.dump_linkage {
        let mut dump = Vec::new();
        table.write_csv(&mut dump).expect("write to memory");
        files.push(("linkage.csv".into(), dump));
    }

    let manifest = manifest(config, &input, &dataset, &table, &sweep, &files);
    files.push(("manifest.json".into(), manifest.into_bytes()));

    Ok(RunOutput {
        input,
        dataset,
        table,
        sweep,
        layers,
        reports,
        stats,
        files,
    })
}

fn manifest(
    config: &RunConfig,
    input: &LoadedInput,
    dataset: &Dataset,
    table: &LinkageTable,
    sweep: &ThresholdSweep,
    files: &[(String, Vec<u8>)],
) -> String {
    let synth = match &config.input {
        InputSource::Synth(cfg) => serde_json::to_value(cfg).expect("config serializes"),
        _ => serde_json::Value::Null,
    };
    let doc = json!({
        "tool": env!("CARGO_PKG_NAME"),
        "version": env!("CARGO_PKG_VERSION"),
        "input": {
            "source": input.label,
            "sha256": input.sha256,
            "records": input.records.len(),
            "skipped_rows": input.skipped_rows,
            "synth": synth,
        },
        "dataset": {
            "fingerprint": dataset.fingerprint(),
            "projects": dataset.len(),
            "records": dataset.record_count(),
            "members": dataset.member_index().len(),
            "linkage_pairs": table.len(),
        },
        "config": {
            "types": config.effective_types().iter().map(|t| t.as_str()).collect::<Vec<_>>(),
            "thresholds": config.thresholds,
            "export_format": config.export_format,
            "include_isolated": config.include_isolated,
            "strict": config.strict,
            "lenient": config.lenient,
            "delimiter": (config.delimiter as char).to_string(),
            "bins": config.n_bins,
        },
        "thresholds": sweep.thresholds(),
        "warnings": input.warnings,
        "artifacts": files.iter().map(|(path, bytes)| json!({
            "path": path,
            "bytes": bytes.len(),
            "sha256": sha256_hex(bytes),
        })).collect::<Vec<_>>(),
    });
    serde_json::to_string_pretty(&doc).expect("manifest serializes") + "\n"
}

/// Writes every file under `dir`. On failure, files written so far are removed.
pub fn write_artifacts(dir: &Path, files: &[(String, Vec<u8>)]) -> Result<(), PipelineError> {
    let mut written: Vec<PathBuf> = Vec::new();
    let result = files.iter().try_for_each(|(rel, bytes)| {
        let path = dir.join(rel);
        if let Some(parent) = path.parent() {
            fs::create_dir_all(parent).map_err(|source| PipelineError::Io {
                path: parent.to_path_buf(),
                source,
            })?;
        }
        fs::write(&path, bytes).map_err(|source| PipelineError::Io {
            path: path.clone(),
            source,
        })?;
        written.push(path);
        Ok(())
    });
    if result.is_err() {
        for p in &written {
            let _ = fs::remove_file(p);
        }
    }
    result
}

/// Builds and writes all artifacts to `config.output_dir`.
pub fn run_pipeline(config: &RunConfig) -> Result<RunOutput, PipelineError> {
    let out = build_artifacts(config)?;
    write_artifacts(&config.output_dir, &out.files)?;
    Ok(out)
}
