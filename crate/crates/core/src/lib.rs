//! Threshold-swept project collaboration networks.
//!
//! Projects become nodes; two projects are linked in a layer when the mean
//! contribution of their shared members reaches the layer's threshold.
//! The crate covers the whole path from raw contribution rows to
//! per-layer metrics and viewer-ready exports:
//!
//! - [`ingest`]: CSV parsing, validation, aggregation into projects
//! - [`linkage`]: pairwise linkage values over co-membered projects
//! - [`layers`]: threshold sweeps and the resulting layer stack
//! - [`metrics`]: closeness, betweenness, degree, clustering, density, components
//! - [`stats`]: feature histograms and summary statistics
//! - [`export`]: GraphML / DOT / JSON output with component coloring
//! - [`synth`]: seeded synthetic datasets
//! - [`pipeline`]: the end-to-end run used by the command-line tool

pub mod export;
pub mod graph;
pub mod ingest;
pub mod layers;
pub mod linkage;
pub mod metrics;
pub mod pipeline;
pub mod stats;
pub mod synth;
pub mod union_find;

pub use export::{assign_visuals, export_layer, ComponentColor, ExportFormat, VisualAttributes};
pub use graph::Graph;
pub use ingest::{aggregate, filter_by_type, parse_records, ContributionRecord, Dataset, Project, ProjectType};
pub use layers::{build_layer, build_layer_stack, make_sweep_linspace, NetworkLayer, ThresholdSweep};
pub use linkage::{build_linkage_table, pair_linkage, LinkageTable, PairLinkage};
pub use metrics::{report, LayerMetricsReport};
pub use synth::{generate, SynthConfig};
