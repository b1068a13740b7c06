//! Threshold sweeps and the stack of network layers they produce.

use std::collections::BTreeSet;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::ingest::{Dataset, ProjectType};
use crate::linkage::LinkageTable;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SweepError {
    #[error("no co-membered pairs")]
    EmptyTable,
    #[error("a linspace sweep needs at least 2 points, got {0}")]
    TooFewPoints(usize),
    #[error("threshold list is empty")]
    Empty,
    #[error("threshold {0} is not finite")]
    NonFinite(f64),
    #[error("thresholds must be strictly increasing ({prev} then {next})")]
    NotIncreasing { prev: f64, next: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepSource {
    Explicit,
    Linspace { count: usize, lo: f64, hi: f64 },
}

/// Strictly increasing, finite thresholds.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ThresholdSweep {
    thresholds: Vec<f64>,
    source: SweepSource,
}

impl ThresholdSweep {
    pub fn explicit(thresholds: Vec<f64>) -> Result<Self, SweepError> {
        Self::checked(thresholds, SweepSource::Explicit)
    }

    /// The six thresholds 0, 20, ..., 100.
    pub fn standard() -> Self {
        Self::explicit(vec![0.0, 20.0, 40.0, 60.0, 80.0, 100.0]).expect("valid constant sweep")
    }

    fn checked(thresholds: Vec<f64>, source: SweepSource) -> Result<Self, SweepError> {
        if thresholds.is_empty() {
            return Err(SweepError::Empty);
        }
        if let Some(&bad) = thresholds.iter().find(|t| !t.is_finite()) {
            return Err(SweepError::NonFinite(bad));
        }
        if let Some(w) = thresholds.windows(2).find(|w| w[1] <= w[0]) {
            return Err(SweepError::NotIncreasing { prev: w[0], next: w[1] });
        }
        Ok(Self { thresholds, source })
    }

    pub fn thresholds(&self) -> &[f64] {
        &self.thresholds
    }

    pub fn source(&self) -> &SweepSource {
        &self.source
    }

    pub fn len(&self) -> usize {
        self.thresholds.len()
    }

    pub fn is_empty(&self) -> bool {
        self.thresholds.is_empty()
    }
}

/// `n_points` evenly spaced thresholds from the table's minimum to maximum linkage, inclusive.
pub fn make_sweep_linspace(table: &LinkageTable, n_points: usize) -> Result<ThresholdSweep, SweepError> {
    let (lo, hi) = match (table.min_linkage(), table.max_linkage()) {
        (Some(lo), Some(hi)) => (lo, hi),
        _ => return Err(SweepError::EmptyTable),
    };
    linspace(lo, hi, n_points)
}

pub fn linspace(lo: f64, hi: f64, n_points: usize) -> Result<ThresholdSweep, SweepError> {
    if n_points < 2 {
        return Err(SweepError::TooFewPoints(n_points));
    }
    let steps = (n_points - 1) as f64;
    let mut values: Vec<f64> = (0..n_points)
        .map(|i| lo + (hi - lo) * i as f64 / steps)
        .collect();
    values[n_points - 1] = hi;
    ThresholdSweep::checked(
        values,
        SweepSource::Linspace {
            count: n_points,
            lo,
            hi,
        },
    )
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Edge {
    pub source: String,
    pub target: String,
    pub weight: f64,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Provenance {
    pub dataset_fingerprint: String,
    /// Project types present in the source dataset.
    pub project_types: Vec<ProjectType>,
}

impl Provenance {
    pub fn of(d: &Dataset) -> Self {
        let types: BTreeSet<ProjectType> = d.projects().map(|p| p.project_type).collect();
        Self {
            dataset_fingerprint: d.fingerprint(),
            project_types: types.into_iter().collect(),
        }
    }
}

/// One undirected graph at a single threshold.
///
/// Nodes are sorted; edges are sorted by `(source, target)` with
/// `source < target`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NetworkLayer {
    pub threshold: f64,
    pub nodes: Vec<String>,
    pub edges: Vec<Edge>,
    pub provenance: Option<Provenance>,
}

impl NetworkLayer {
    /// Builds a layer from raw parts, canonicalizing order and dropping self-loops.
    /// Edge endpoints missing from `nodes` are added.
    pub fn from_parts(
        threshold: f64,
        nodes: impl IntoIterator<Item = String>,
        edges: impl IntoIterator<Item = (String, String, f64)>,
    ) -> Self {
        let mut node_set: BTreeSet<String> = nodes.into_iter().collect();
        let mut edges: Vec<Edge> = edges
            .into_iter()
            .filter(|(a, b, _)| a != b)
            .map(|(a, b, weight)| {
                let (source, target) = if a < b { (a, b) } else { (b, a) };
                Edge { source, target, weight }
            })
            .collect();
        edges.sort_by(|x, y| (&x.source, &x.target).cmp(&(&y.source, &y.target)));
        edges.dedup_by(|x, y| x.source == y.source && x.target == y.target);
        for e in &edges {
            node_set.insert(e.source.clone());
            node_set.insert(e.target.clone());
        }
        Self {
            threshold,
            nodes: node_set.into_iter().collect(),
            edges,
            provenance: None,
        }
    }

    pub fn n_nodes(&self) -> usize {
        self.nodes.len()
    }

    pub fn n_edges(&self) -> usize {
        self.edges.len()
    }

    pub fn edge_keys(&self) -> BTreeSet<(&str, &str)> {
        self.edges
            .iter()
            .map(|e| (e.source.as_str(), e.target.as_str()))
            .collect()
    }

    pub fn n_isolated(&self) -> usize {
        let touched: BTreeSet<&str> = self
            .edges
            .iter()
            .flat_map(|e| [e.source.as_str(), e.target.as_str()])
            .collect();
        self.nodes.iter().filter(|n| !touched.contains(n.as_str())).count()
    }
}

/// All projects as nodes; an edge for every pair whose linkage is at least `threshold`.
pub fn build_layer(d: &Dataset, table: &LinkageTable, threshold: f64) -> NetworkLayer {
    let nodes: Vec<String> = d.project_ids().map(str::to_owned).collect();
    assemble(nodes, table, threshold, Provenance::of(d))
}

/// One layer per threshold, in sweep order.
pub fn build_layer_stack(d: &Dataset, table: &LinkageTable, sweep: &ThresholdSweep) -> Vec<NetworkLayer> {
    let provenance = Provenance::of(d);
    let nodes: Vec<String> = d.project_ids().map(str::to_owned).collect();
    sweep
        .thresholds()
        .par_iter()
        .map(|&t| assemble(nodes.clone(), table, t, provenance.clone()))
        .collect()
}

fn assemble(nodes: Vec<String>, table: &LinkageTable, threshold: f64, provenance: Provenance) -> NetworkLayer {
    let edges = table
        .pairs()
        .iter()
        .filter(|p| p.linkage >= threshold)
        .map(|p| Edge {
            source: p.project_a.clone(),
            target: p.project_b.clone(),
            weight: p.linkage,
        })
        .collect();
    NetworkLayer {
        threshold,
        nodes,
        edges,
        provenance: Some(provenance),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ingest::Project;
    use crate::linkage::build_linkage_table;

    fn worked_dataset() -> Dataset {
        Dataset::from_projects([
            Project::new("A", ProjectType::Ip)
                .with_member("M1", 50.0)
                .with_member("M2", 20.0)
                .with_member("M9", 30.0),
            Project::new("B", ProjectType::Ip)
                .with_member("M1", 30.0)
                .with_member("M2", 40.0)
                .with_member("M8", 30.0),
            Project::new("C", ProjectType::Paper).with_member("M8", 100.0),
            Project::new("D", ProjectType::Paper).with_member("M7", 100.0),
        ])
    }

    #[test]
    fn linspace_examples() {
        assert_eq!(linspace(0.0, 100.0, 6).unwrap().thresholds(), [0.0, 20.0, 40.0, 60.0, 80.0, 100.0]);
        assert_eq!(linspace(0.0, 50.0, 3).unwrap().thresholds(), [0.0, 25.0, 50.0]);
        assert!(matches!(linspace(10.0, 10.0, 2), Err(SweepError::NotIncreasing { .. })));
        assert_eq!(linspace(0.0, 1.0, 1), Err(SweepError::TooFewPoints(1)));
    }

    #[test]
    fn linspace_from_table() {
        let d = worked_dataset();
        let t = build_linkage_table(&d);
        // A-B: 35, B-C: (30 + 100) / 2 = 65
        let sweep = make_sweep_linspace(&t, 3).unwrap();
        assert_eq!(sweep.thresholds(), [35.0, 50.0, 65.0]);
        assert_eq!(
            make_sweep_linspace(&LinkageTable::default(), 6),
            Err(SweepError::EmptyTable)
        );
    }

    #[test]
    fn explicit_sweep_validation() {
        assert!(ThresholdSweep::explicit(vec![0.0, 20.0]).is_ok());
        assert_eq!(ThresholdSweep::explicit(vec![]), Err(SweepError::Empty));
        assert!(ThresholdSweep::explicit(vec![20.0, 20.0]).is_err());
        assert!(ThresholdSweep::explicit(vec![0.0, f64::NAN]).is_err());
    }

    #[test]
    fn layer_boundary_is_inclusive() {
        let d = worked_dataset();
        let t = build_linkage_table(&d);
        let at = build_layer(&d, &t, 35.0);
        assert!(at.edge_keys().contains(&("A", "B")));
        let above = build_layer(&d, &t, 35.000001);
        assert!(!above.edge_keys().contains(&("A", "B")));
        assert_eq!(above.nodes, ["A", "B", "C", "D"]);
    }

    #[test]
    fn threshold_zero_keeps_every_pair() {
        let d = worked_dataset();
        let t = build_linkage_table(&d);
        let layer = build_layer(&d, &t, 0.0);
        assert_eq!(layer.n_edges(), t.len());
        assert_eq!(layer.n_isolated(), 1);
        assert_eq!(build_layer(&d, &t, 100.0).n_edges(), 0);
    }

    #[test]
    fn stack_matches_single_layers() {
        let d = worked_dataset();
        let t = build_linkage_table(&d);
        let single = ThresholdSweep::explicit(vec![40.0]).unwrap();
        assert_eq!(build_layer_stack(&d, &t, &single), vec![build_layer(&d, &t, 40.0)]);

        let stack = build_layer_stack(&d, &t, &ThresholdSweep::explicit(vec![0.0, 50.0]).unwrap());
        assert!(stack[1].edge_keys().is_subset(&stack[0].edge_keys()));
        assert_eq!(build_layer_stack(&d, &t, &ThresholdSweep::standard()).len(), 6);
    }

    #[test]
    fn from_parts_canonicalizes() {
        let layer = NetworkLayer::from_parts(
            0.0,
            ["z".to_string()],
            [
                ("b".to_string(), "a".to_string(), 1.0),
                ("a".to_string(), "a".to_string(), 1.0),
                ("a".to_string(), "b".to_string(), 1.0),
            ],
        );
        assert_eq!(layer.nodes, ["a", "b", "z"]);
        assert_eq!(layer.n_edges(), 1);
        assert_eq!(layer.edges[0].source, "a");
    }
}
