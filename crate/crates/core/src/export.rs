//! Layer serialization for graph viewers.
//!
//! Every node carries its degree (for sizing) and a component color. Colors
//! band the distinct component sizes: the largest size is blue, the
//! smallest gray, and sizes in between green (upper middle) or red (lower
//! middle).

use std::collections::BTreeMap;
use std::fmt::{self, Write as _};
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::graph::Graph;
use crate::layers::NetworkLayer;
use crate::metrics::{self, remove_isolated, Components};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ComponentColor {
    Blue,
    Green,
    Red,
    Gray,
}

impl ComponentColor {
    pub fn as_str(self) -> &'static str {
        match self {
            ComponentColor::Blue => "blue",
            ComponentColor::Green => "green",
            ComponentColor::Red => "red",
            ComponentColor::Gray => "gray",
        }
    }

    /// Band of the `rank`-th largest of `distinct` component sizes.
    fn for_rank(rank: usize, distinct: usize) -> Self {
        const BANDS: [ComponentColor; 4] = [
            ComponentColor::Blue,
            ComponentColor::Green,
            ComponentColor::Red,
            ComponentColor::Gray,
        ];
        match distinct {
            0 | 1 => ComponentColor::Blue,
            2 => [ComponentColor::Blue, ComponentColor::Gray][rank],
            3 => [ComponentColor::Blue, ComponentColor::Green, ComponentColor::Gray][rank],
            _ => BANDS[rank * 4 / distinct],
        }
    }
}

impl fmt::Display for ComponentColor {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct VisualAttributes {
    /// Node degree; viewers scale node size by it.
    pub node_size_key: usize,
    pub component_color: ComponentColor,
    /// Component id, 0 for the largest.
    pub component_rank: usize,
}

/// Visuals for every node of `g`, keyed by node id.
pub fn assign_visuals(g: &Graph, comps: &Components) -> BTreeMap<String, VisualAttributes> {
    let mut distinct: Vec<usize> = comps.sizes.clone();
    distinct.sort_unstable_by(|a, b| b.cmp(a));
    distinct.dedup();
    let color_of_size = |size: usize| {
        let rank = distinct.iter().position(|&s| s == size).expect("size present");
        ComponentColor::for_rank(rank, distinct.len())
    };
    (0..g.len())
        .map(|v| {
            let c = comps.membership[v];
            (
                g.id(v).to_owned(),
                VisualAttributes {
                    node_size_key: g.degree(v),
                    component_color: color_of_size(comps.sizes[c]),
                    component_rank: c,
                },
            )
        })
        .collect()
}

/// Visuals computed on the layer itself, or on its non-isolated part.
pub fn layer_visuals(layer: &NetworkLayer, include_isolated: bool) -> BTreeMap<String, VisualAttributes> {
    let g = if include_isolated {
        Graph::from_layer(layer)
    } else {
        Graph::from_layer(&remove_isolated(layer))
    };
    assign_visuals(&g, &metrics::components(&g))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ExportFormat {
    GraphMl,
    Dot,
    Json,
}

impl ExportFormat {
    pub fn extension(self) -> &'static str {
        match self {
            ExportFormat::GraphMl => "graphml",
            ExportFormat::Dot => "dot",
            ExportFormat::Json => "json",
        }
    }
}

impl FromStr for ExportFormat {
    type Err = ExportError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "graphml" => Ok(ExportFormat::GraphMl),
            "dot" | "gv" => Ok(ExportFormat::Dot),
            "json" | "jsongraph" => Ok(ExportFormat::Json),
            _ => Err(ExportError::UnsupportedFormat(s.to_owned())),
        }
    }
}

#[derive(Debug, Error)]
pub enum ExportError {
    #[error("unsupported export format {0:?} (expected graphml, dot or json)")]
    UnsupportedFormat(String),
    #[error("no visual attributes for node {0:?}")]
    MissingVisuals(String),
    #[error("malformed graph document: {0}")]
    Parse(#[from] serde_json::Error),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct JsonNode {
    pub id: String,
    pub degree: usize,
    pub component: usize,
    pub color: ComponentColor,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct JsonEdge {
    pub source: String,
    pub target: String,
    pub weight: f64,
}

/// The JSON graph document: node and edge arrays plus the layer threshold.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct JsonGraph {
    pub directed: bool,
    pub threshold: f64,
    pub nodes: Vec<JsonNode>,
    pub edges: Vec<JsonEdge>,
}

pub fn parse_json_graph(bytes: &[u8]) -> Result<JsonGraph, ExportError> {
    Ok(serde_json::from_slice(bytes)?)
}

fn round6(x: f64) -> f64 {
    (x * 1e6).round() / 1e6
}

struct Prepared<'a> {
    nodes: Vec<(&'a str, VisualAttributes)>,
    layer: &'a NetworkLayer,
}

fn prepare<'a>(
    layer: &'a NetworkLayer,
    visuals: &BTreeMap<String, VisualAttributes>,
    include_isolated: bool,
) -> Result<Prepared<'a>, ExportError> {
    let g = Graph::from_layer(layer);
    let mut nodes = Vec::with_capacity(layer.nodes.len());
    for (v, id) in layer.nodes.iter().enumerate() {
        if !include_isolated && g.degree(v) == 0 {
            continue;
        }
        let attrs = visuals
            .get(id)
            .copied()
            .ok_or_else(|| ExportError::MissingVisuals(id.clone()))?;
        nodes.push((id.as_str(), attrs));
    }
    Ok(Prepared { nodes, layer })
}

/// Serializes a layer. Output is fully determined by the inputs.
pub fn export_layer(
    layer: &NetworkLayer,
    visuals: &BTreeMap<String, VisualAttributes>,
    format: ExportFormat,
    include_isolated: bool,
) -> Result<Vec<u8>, ExportError> {
    let p = prepare(layer, visuals, include_isolated)?;
    let text = match format {
        ExportFormat::GraphMl => graphml(&p),
        ExportFormat::Dot => dot(&p),
        ExportFormat::Json => json(&p),
    };
    Ok(text.into_bytes())
}

fn json(p: &Prepared<'_>) -> String {
    let doc = JsonGraph {
        directed: false,
        threshold: p.layer.threshold,
        nodes: p
            .nodes
            .iter()
            .map(|(id, a)| JsonNode {
                id: (*id).to_owned(),
                degree: a.node_size_key,
                component: a.component_rank,
                color: a.component_color,
            })
            .collect(),
        edges: p
            .layer
            .edges
            .iter()
            .map(|e| JsonEdge {
                source: e.source.clone(),
                target: e.target.clone(),
                weight: round6(e.weight),
            })
            .collect(),
    };
    let mut s = serde_json::to_string_pretty(&doc).expect("graph serializes");
    s.push('\n');
    s
}

fn xml_escape(s: &str) -> String {
    let mut out = String::with_capacity(s.len());
    for c in s.chars() {
        match c {
            '&' => out.push_str("&amp;"),
            '<' => out.push_str("&lt;"),
            '>' => out.push_str("&gt;"),
            '"' => out.push_str("&quot;"),
            '\'' => out.push_str("&apos;"),
            c => out.push(c),
        }
    }
    out
}

fn graphml(p: &Prepared<'_>) -> String {
    let mut s = String::new();
    s.push_str("<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n");
    s.push_str("<graphml xmlns=\"http://graphml.graphdrawing.org/xmlns\">\n");
    s.push_str("  <key id=\"degree\" for=\"node\" attr.name=\"degree\" attr.type=\"int\"/>\n");
    s.push_str("  <key id=\"component\" for=\"node\" attr.name=\"component\" attr.type=\"int\"/>\n");
    s.push_str("  <key id=\"color\" for=\"node\" attr.name=\"color\" attr.type=\"string\"/>\n");
    s.push_str("  <key id=\"weight\" for=\"edge\" attr.name=\"weight\" attr.type=\"double\"/>\n");
    s.push_str("  <key id=\"threshold\" for=\"graph\" attr.name=\"threshold\" attr.type=\"double\"/>\n");
    s.push_str("  <graph id=\"layer\" edgedefault=\"undirected\">\n");
    let _ = writeln!(s, "    <data key=\"threshold\">{}</data>", p.layer.threshold);
    for (id, a) in &p.nodes {
        let _ = writeln!(
            s,
            "    <node id=\"{}\"><data key=\"degree\">{}</data><data key=\"component\">{}</data><data key=\"color\">{}</data></node>",
            xml_escape(id),
            a.node_size_key,
            a.component_rank,
            a.component_color
        );
    }
    for e in &p.layer.edges {
        let _ = writeln!(
            s,
            "    <edge source=\"{}\" target=\"{}\"><data key=\"weight\">{:.6}</data></edge>",
            xml_escape(&e.source),
            xml_escape(&e.target),
            e.weight
        );
    }
    s.push_str("  </graph>\n</graphml>\n");
    s
}

fn dot_id(s: &str) -> String {
    format!("\"{}\"", s.replace('\\', "\\\\").replace('"', "\\\""))
}

fn dot(p: &Prepared<'_>) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "graph layer {{");
    let _ = writeln!(s, "  threshold=\"{}\";", p.layer.threshold);
    for (id, a) in &p.nodes {
        let _ = writeln!(
            s,
            "  {} [degree={}, component={}, color={}];",
            dot_id(id),
            a.node_size_key,
            a.component_rank,
            a.component_color
        );
    }
    for e in &p.layer.edges {
        let _ = writeln!(s, "  {} -- {} [weight={:.6}];", dot_id(&e.source), dot_id(&e.target), e.weight);
    }
    s.push_str("}\n");
    s
}
