//! Python bindings for the collaboration-network core.

use std::collections::{BTreeMap, BTreeSet};

use collabnet_core as core;
use collabnet_core::export::layer_visuals;
use collabnet_core::ingest::{write_records, AggregateOptions, ParseOptions};
use collabnet_core::pipeline::{run_pipeline, InputSource, RunConfig, ThresholdSpec};
use collabnet_core::stats::{summarize_values, Feature};
use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;
use pyo3::types::PyDict;

fn value_error(e: impl std::fmt::Display) -> PyErr {
    PyValueError::new_err(e.to_string())
}

fn type_set(types: Option<Vec<String>>) -> PyResult<BTreeSet<core::ProjectType>> {
    match types {
        None => Ok(core::ProjectType::all()),
        Some(ts) => ts.iter().map(|t| t.parse().map_err(value_error)).collect(),
    }
}

fn sweep(table: &core::LinkageTable, thresholds: Option<Vec<f64>>, linspace: Option<usize>) -> PyResult<core::ThresholdSweep> {
    match (thresholds, linspace) {
        (Some(ts), _) => core::ThresholdSweep::explicit(ts).map_err(value_error),
        (None, Some(n)) => core::make_sweep_linspace(table, n).map_err(value_error),
        (None, None) => Ok(core::ThresholdSweep::standard()),
    }
}

/// Projects with their members and contribution percentages.
#[pyclass(module = "collabnet", frozen)]
struct Dataset {
    inner: core::Dataset,
}

#[pymethods]
impl Dataset {
    /// Parses CSV text with columns project_id, member_id, contribution_pct,
    /// ic_score (optional) and project_type.
    #[staticmethod]
    #[pyo3(signature = (text, delimiter = ",", lenient = false, strict = false))]
    fn from_csv(text: &str, delimiter: &str, lenient: bool, strict: bool) -> PyResult<Self> {
        let &[delimiter] = delimiter.as_bytes() else {
            return Err(value_error("delimiter must be a single byte"));
        };
        let parsed = core::parse_records(text.as_bytes(), ParseOptions { delimiter, lenient }).map_err(value_error)?;
        let agg = core::aggregate(&parsed.records, AggregateOptions { strict }).map_err(value_error)?;
        Ok(Self { inner: agg.dataset })
    }

    /// Builds a dataset from (project_id, member_id, contribution_pct, project_type) tuples.
    #[staticmethod]
    fn from_records(rows: Vec<(String, String, f64, String)>) -> PyResult<Self> {
        let records = rows
            .into_iter()
            .map(|(p, m, c, t)| {
                let t = t.parse().map_err(value_error)?;
                Ok(core::ContributionRecord::new(p, m, c, None, t))
            })
            .collect::<PyResult<Vec<_>>>()?;
        let agg = core::aggregate(&records, AggregateOptions::default()).map_err(value_error)?;
        Ok(Self { inner: agg.dataset })
    }

    /// Seeded synthetic dataset.
    #[staticmethod]
    #[pyo3(signature = (seed = 0, projects = None, members = None))]
    fn synthetic(seed: u64, projects: Option<usize>, members: Option<usize>) -> PyResult<Self> {
        let defaults = core::SynthConfig::with_seed(seed);
        let config = core::SynthConfig {
            n_projects: projects.unwrap_or(defaults.n_projects),
            n_members: members.unwrap_or(defaults.n_members),
            ..defaults
        };
        let records = core::generate(&config).map_err(value_error)?;
        let agg = core::aggregate(&records, AggregateOptions::default()).map_err(value_error)?;
        Ok(Self { inner: agg.dataset })
    }

    fn __len__(&self) -> usize {
        self.inner.len()
    }

    fn __repr__(&self) -> String {
        format!("Dataset(projects={}, records={})", self.inner.len(), self.inner.record_count())
    }

    fn project_ids(&self) -> Vec<String> {
        self.inner.project_ids().map(str::to_owned).collect()
    }

    /// Members of one project as {member_id: contribution_pct}.
    fn members<'py>(&self, py: Python<'py>, project_id: &str) -> PyResult<Bound<'py, PyDict>> {
        let p = self
            .inner
            .project(project_id)
            .ok_or_else(|| value_error(format!("unknown project {project_id:?}")))?;
        let d = PyDict::new(py);
        for (m, ms) in &p.members {
            d.set_item(m, ms.contribution_pct)?;
        }
        Ok(d)
    }

    fn record_count(&self) -> usize {
        self.inner.record_count()
    }

    fn fingerprint(&self) -> String {
        self.inner.fingerprint()
    }

    /// Keeps only projects of the given types ("IP", "Paper", "Prototype").
    fn filter_types(&self, types: Vec<String>) -> PyResult<Self> {
        Ok(Self {
            inner: core::filter_by_type(&self.inner, &type_set(Some(types))?),
        })
    }

    /// The dataset as CSV text.
    fn to_csv(&self) -> PyResult<String> {
        let mut buf = Vec::new();
        write_records(&mut buf, &self.inner.to_records()).map_err(value_error)?;
        String::from_utf8(buf).map_err(value_error)
    }

    fn linkage_table(&self) -> LinkageTable {
        LinkageTable {
            inner: core::build_linkage_table(&self.inner),
        }
    }

    /// Builds one layer per threshold. Explicit thresholds win over `linspace`;
    /// with neither, the standard sweep 0, 20, ..., 100 is used.
    #[pyo3(signature = (thresholds = None, linspace = None))]
    fn layers(&self, thresholds: Option<Vec<f64>>, linspace: Option<usize>) -> PyResult<Vec<NetworkLayer>> {
        let table = core::build_linkage_table(&self.inner);
        let sweep = sweep(&table, thresholds, linspace)?;
        Ok(core::build_layer_stack(&self.inner, &table, &sweep)
            .into_iter()
            .map(|inner| NetworkLayer { inner })
            .collect())
    }
}

/// Linkage values of every co-membered project pair.
#[pyclass(module = "collabnet", frozen)]
struct LinkageTable {
    inner: core::LinkageTable,
}

#[pymethods]
impl LinkageTable {
    fn __len__(&self) -> usize {
        self.inner.len()
    }

    /// (project_a, project_b, n_common, linkage) tuples in canonical order.
    fn pairs(&self) -> Vec<(String, String, usize, f64)> {
        self.inner
            .pairs()
            .iter()
            .map(|p| (p.project_a.clone(), p.project_b.clone(), p.n_common(), p.linkage))
            .collect()
    }

    /// Linkage of a pair in either order, or None when they share no member.
    fn get(&self, a: &str, b: &str) -> Option<f64> {
        self.inner.get(a, b).map(|p| p.linkage)
    }

    #[getter]
    fn min_linkage(&self) -> Option<f64> {
        self.inner.min_linkage()
    }

    #[getter]
    fn max_linkage(&self) -> Option<f64> {
        self.inner.max_linkage()
    }

    /// `n` evenly spaced thresholds from the smallest to the largest linkage.
    fn linspace(&self, n: usize) -> PyResult<Vec<f64>> {
        core::make_sweep_linspace(&self.inner, n)
            .map(|s| s.thresholds().to_vec())
            .map_err(value_error)
    }
}

/// All projects as nodes, linked where linkage reaches the threshold.
#[pyclass(module = "collabnet", frozen)]
struct NetworkLayer {
    inner: core::NetworkLayer,
}

#[pymethods]
impl NetworkLayer {
    #[getter]
    fn threshold(&self) -> f64 {
        self.inner.threshold
    }

    #[getter]
    fn nodes(&self) -> Vec<String> {
        self.inner.nodes.clone()
    }

    /// (source, target, weight) tuples.
    #[getter]
    fn edges(&self) -> Vec<(String, String, f64)> {
        self.inner
            .edges
            .iter()
            .map(|e| (e.source.clone(), e.target.clone(), e.weight))
            .collect()
    }

    fn n_edges(&self) -> usize {
        self.inner.n_edges()
    }

    fn n_isolated(&self) -> usize {
        self.inner.n_isolated()
    }

    fn __repr__(&self) -> String {
        format!(
            "NetworkLayer(threshold={}, nodes={}, edges={})",
            self.inner.threshold,
            self.inner.n_nodes(),
            self.inner.n_edges()
        )
    }

    /// Layer metrics after removing isolated nodes, as a dict.
    fn report<'py>(&self, py: Python<'py>) -> PyResult<Bound<'py, PyDict>> {
        let r = core::report(&self.inner);
        let d = PyDict::new(py);
        d.set_item("threshold", r.threshold)?;
        d.set_item("n_nodes_retained", r.n_nodes_retained)?;
        d.set_item("n_edges", r.n_edges)?;
        d.set_item("n_isolated_removed", r.n_isolated_removed)?;
        d.set_item("avg_closeness", r.avg_closeness)?;
        d.set_item("avg_betweenness", r.avg_betweenness)?;
        d.set_item("avg_degree", r.avg_degree)?;
        d.set_item("avg_clustering", r.avg_clustering)?;
        d.set_item("density", r.density)?;
        d.set_item("n_components", r.n_components)?;
        Ok(d)
    }

    /// Serializes the layer as "graphml", "dot" or "json".
    #[pyo3(signature = (format = "graphml", include_isolated = true))]
    fn export(&self, format: &str, include_isolated: bool) -> PyResult<String> {
        let format: core::ExportFormat = format.parse().map_err(value_error)?;
        let visuals = layer_visuals(&self.inner, include_isolated);
        let bytes = core::export_layer(&self.inner, &visuals, format, include_isolated).map_err(value_error)?;
        String::from_utf8(bytes).map_err(value_error)
    }
}

/// Linkage of two projects given as {member_id: contribution_pct} dicts.
#[pyfunction]
fn pair_linkage(a: BTreeMap<String, f64>, b: BTreeMap<String, f64>) -> Option<f64> {
    let project = |id: &str, members: BTreeMap<String, f64>| {
        members
            .into_iter()
            .fold(core::Project::new(id, core::ProjectType::Ip), |p, (m, c)| p.with_member(m, c))
    };
    core::pair_linkage(&project("a", a), &project("b", b)).map(|p| p.linkage)
}

/// Population statistics and an equal-width histogram of `values`.
#[pyfunction]
#[pyo3(signature = (values, bins = 20))]
fn summarize<'py>(py: Python<'py>, values: Vec<f64>, bins: usize) -> PyResult<Bound<'py, PyDict>> {
    let s = summarize_values(&values, Feature::ContributionPct, bins).map_err(value_error)?;
    let d = PyDict::new(py);
    d.set_item("count", s.count)?;
    d.set_item("mean", s.mean)?;
    d.set_item("std_dev", s.std_dev)?;
    d.set_item("variance", s.variance)?;
    d.set_item("min", s.min)?;
    d.set_item("max", s.max)?;
    let hist: Vec<(f64, f64, usize)> = s.histogram.iter().map(|b| (b.lower, b.upper, b.count)).collect();
    d.set_item("histogram", hist)?;
    Ok(d)
}

/// Runs the full pipeline on a CSV file (or a synthetic seed) and writes
/// artifacts to `out_dir`. Returns the written relative paths.
#[pyfunction]
#[pyo3(signature = (out_dir, input = None, synth_seed = None, types = None, thresholds = None, linspace = None, format = "graphml", include_isolated = true))]
#[allow(clippy::too_many_arguments)]
fn build(
    out_dir: &str,
    input: Option<&str>,
    synth_seed: Option<u64>,
    types: Option<Vec<String>>,
    thresholds: Option<Vec<f64>>,
    linspace: Option<usize>,
    format: &str,
    include_isolated: bool,
) -> PyResult<Vec<String>> {
    let source = match (input, synth_seed) {
        (Some(path), None) => InputSource::Path(path.into()),
        (None, Some(seed)) => InputSource::Synth(core::SynthConfig::with_seed(seed)),
        _ => return Err(value_error("give exactly one of input or synth_seed")),
    };
    let mut config = RunConfig::new(source, out_dir);
    if let Some(ts) = types {
        config.type_filter = type_set(Some(ts))?;
    }
    config.thresholds = match (thresholds, linspace) {
        (Some(ts), _) => ThresholdSpec::Explicit(ts),
        (None, Some(n)) => ThresholdSpec::Linspace(n),
        (None, None) => ThresholdSpec::default(),
    };
    config.export_format = format.parse().map_err(value_error)?;
    config.include_isolated = include_isolated;
    let out = run_pipeline(&config).map_err(value_error)?;
    Ok(out.files.into_iter().map(|(path, _)| path).collect())
}

#[pymodule]
fn collabnet(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<Dataset>()?;
    m.add_class::<LinkageTable>()?;
    m.add_class::<NetworkLayer>()?;
    m.add_function(wrap_pyfunction!(pair_linkage, m)?)?;
    m.add_function(wrap_pyfunction!(summarize, m)?)?;
    m.add_function(wrap_pyfunction!(build, m)?)?;
    Ok(())
}
