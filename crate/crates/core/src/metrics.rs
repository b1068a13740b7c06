//! Per-layer network metrics.
//!
//! Closeness here is the harmonic form, `sum_u 1 / d(v, u)` over all other
//! nodes, with unreachable nodes contributing 0. It is *not* the classical
//! `(n - 1) / sum_u d(v, u)` closeness that many graph libraries default to.
//!
//! Betweenness is unnormalized and counts each unordered `{s, t}` pair once.

use std::collections::{BTreeSet, VecDeque};
use std::io::Write;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::graph::Graph;
use crate::layers::NetworkLayer;
use crate::union_find::UnionFind;

/// Sources per Brandes work unit. Fixed so the reduction order does not
/// depend on the thread count.
const BRANDES_CHUNK: usize = 32;

/// Drops degree-0 nodes; edges are untouched.
pub fn remove_isolated(layer: &NetworkLayer) -> NetworkLayer {
    let touched: BTreeSet<&str> = layer
        .edges
        .iter()
        .flat_map(|e| [e.source.as_str(), e.target.as_str()])
        .collect();
    NetworkLayer {
        threshold: layer.threshold,
        nodes: layer
            .nodes
            .iter()
            .filter(|n| touched.contains(n.as_str()))
            .cloned()
            .collect(),
        edges: layer.edges.clone(),
        provenance: layer.provenance.clone(),
    }
}

pub fn degree(g: &Graph, v: usize) -> usize {
    g.degree(v)
}

/// BFS hop distances from `source`; `usize::MAX` marks unreachable nodes.
fn bfs_distances(g: &Graph, source: usize, dist: &mut [usize], queue: &mut VecDeque<usize>) {
    dist.fill(usize::MAX);
    dist[source] = 0;
    queue.clear();
    queue.push_back(source);
    while let Some(v) = queue.pop_front() {
        let next = dist[v] + 1;
        for &w in g.neighbors(v) {
            if dist[w] == usize::MAX {
                dist[w] = next;
                queue.push_back(w);
            }
        }
    }
}

/// Harmonic closeness of `v`.
pub fn closeness(g: &Graph, v: usize) -> f64 {
    let mut dist = vec![0; g.len()];
    let mut queue = VecDeque::new();
    harmonic_from(g, v, &mut dist, &mut queue)
}

fn harmonic_from(g: &Graph, v: usize, dist: &mut [usize], queue: &mut VecDeque<usize>) -> f64 {
    bfs_distances(g, v, dist, queue);
    dist.iter()
        .filter(|&&d| d != 0 && d != usize::MAX)
        .map(|&d| 1.0 / d as f64)
        .sum()
}

/// Harmonic closeness of every node, in node order.
pub fn closeness_all(g: &Graph) -> Vec<f64> {
    (0..g.len())
        .into_par_iter()
        .map_init(
            || (vec![0usize; g.len()], VecDeque::new()),
            |(dist, queue), v| harmonic_from(g, v, dist, queue),
        )
        .collect()
}

struct BrandesScratch {
    sigma: Vec<f64>,
    dist: Vec<usize>,
    delta: Vec<f64>,
    preds: Vec<Vec<usize>>,
    order: Vec<usize>,
    queue: VecDeque<usize>,
}

impl BrandesScratch {
    fn new(n: usize) -> Self {
        Self {
            sigma: vec![0.0; n],
            dist: vec![usize::MAX; n],
            delta: vec![0.0; n],
            preds: vec![Vec::new(); n],
            order: Vec::with_capacity(n),
            queue: VecDeque::new(),
        }
    }

    /// Adds the dependencies of `source` onto `acc`.
    fn accumulate(&mut self, g: &Graph, source: usize, acc: &mut [f64]) {
        self.sigma.fill(0.0);
        self.dist.fill(usize::MAX);
        self.delta.fill(0.0);
        for p in &mut self.preds {
            p.clear();
        }
        self.order.clear();

        self.sigma[source] = 1.0;
        self.dist[source] = 0;
        self.queue.push_back(source);
        while let Some(v) = self.queue.pop_front() {
            self.order.push(v);
            for &w in g.neighbors(v) {
                if self.dist[w] == usize::MAX {
                    self.dist[w] = self.dist[v] + 1;
                    self.queue.push_back(w);
                }
                if self.dist[w] == self.dist[v] + 1 {
                    self.sigma[w] += self.sigma[v];
                    self.preds[w].push(v);
                }
            }
        }

        for &w in self.order.iter().rev() {
            let coeff = (1.0 + self.delta[w]) / self.sigma[w];
            for &v in &self.preds[w] {
                self.delta[v] += self.sigma[v] * coeff;
            }
            if w != source {
                acc[w] += self.delta[w];
            }
        }
    }
}

/// Brandes betweenness for every node, in node order.
pub fn betweenness(g: &Graph) -> Vec<f64> {
    let n = g.len();
    let partials: Vec<Vec<f64>> = (0..n)
        .collect::<Vec<_>>()
        .par_chunks(BRANDES_CHUNK)
        .map(|sources| {
            let mut scratch = BrandesScratch::new(n);
            let mut acc = vec![0.0; n];
            for &s in sources {
                scratch.accumulate(g, s, &mut acc);
            }
            acc
        })
        .collect();

    let mut total = vec![0.0; n];
    for part in partials {
        for (t, p) in total.iter_mut().zip(part) {
            *t += p;
        }
    }
    // every unordered pair was counted from both endpoints
    for t in &mut total {
        *t /= 2.0;
    }
    total
}

/// Triangles through `v`.
pub fn triangles(g: &Graph, v: usize) -> usize {
    let nbrs = g.neighbors(v);
    let mut count = 0;
    for (i, &a) in nbrs.iter().enumerate() {
        for &b in &nbrs[i + 1..] {
            if g.has_edge(a, b) {
                count += 1;
            }
        }
    }
    count
}

/// `2 T(v) / (deg(v) (deg(v) - 1))`, or 0 when `deg(v) < 2`.
pub fn clustering(g: &Graph, v: usize) -> f64 {
    let k = g.degree(v);
    if k < 2 {
        return 0.0;
    }
    2.0 * triangles(g, v) as f64 / (k * (k - 1)) as f64
}

/// `2m / (n (n - 1))`, or 0 with fewer than two nodes.
pub fn density(g: &Graph) -> f64 {
    let n = g.len();
    if n < 2 {
        return 0.0;
    }
    2.0 * g.n_edges() as f64 / (n as f64 * (n - 1) as f64)
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Components {
    pub count: usize,
    /// Component id per node. Id 0 is the largest component; ties go to
    /// the component holding the smallest node id.
    pub membership: Vec<usize>,
    /// Size of each component, indexed by id.
    pub sizes: Vec<usize>,
}

pub fn components(g: &Graph) -> Components {
    let n = g.len();
    let mut uf = UnionFind::new(n);
    for v in 0..n {
        for &w in g.neighbors(v) {
            if v < w {
                uf.union(v, w);
            }
        }
    }

    // (size, smallest id, root)
    let mut groups: Vec<(usize, &str, usize)> = Vec::new();
    let mut slot = vec![usize::MAX; n];
    for v in 0..n {
        let r = uf.find(v);
        if slot[r] == usize::MAX {
            slot[r] = groups.len();
            groups.push((0, g.id(v), r));
        }
        let entry = &mut groups[slot[r]];
        entry.0 += 1;
        if g.id(v) < entry.1 {
            entry.1 = g.id(v);
        }
    }
    groups.sort_by(|a, b| b.0.cmp(&a.0).then_with(|| a.1.cmp(b.1)));

    let mut rank_of_root = vec![usize::MAX; n];
    for (rank, &(_, _, root)) in groups.iter().enumerate() {
        rank_of_root[root] = rank;
    }
    let membership = (0..n).map(|v| rank_of_root[uf.find(v)]).collect();
    Components {
        count: groups.len(),
        membership,
        sizes: groups.iter().map(|g| g.0).collect(),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LayerMetricsReport {
    pub threshold: f64,
    pub n_nodes_retained: usize,
    pub n_edges: usize,
    pub n_isolated_removed: usize,
    pub avg_closeness: f64,
    pub avg_betweenness: f64,
    pub avg_degree: f64,
    pub avg_clustering: f64,
    pub density: f64,
    pub n_components: usize,
}

fn mean(values: impl IntoIterator<Item = f64>, n: usize) -> f64 {
    if n == 0 {
        0.0
    } else {
        values.into_iter().sum::<f64>() / n as f64
    }
}

/// Removes isolated nodes, then averages local metrics over what remains.
pub fn report(layer: &NetworkLayer) -> LayerMetricsReport {
    let retained = remove_isolated(layer);
    let g = Graph::from_layer(&retained);
    let n = g.len();
    LayerMetricsReport {
        threshold: layer.threshold,
        n_nodes_retained: n,
        n_edges: g.n_edges(),
        n_isolated_removed: layer.nodes.len() - n,
        avg_closeness: mean(closeness_all(&g), n),
        avg_betweenness: mean(betweenness(&g), n),
        avg_degree: mean((0..n).map(|v| g.degree(v) as f64), n),
        avg_clustering: mean((0..n).map(|v| clustering(&g, v)), n),
        density: density(&g),
        n_components: components(&g).count,
    }
}

pub const REPORT_CSV_HEADER: &str = "threshold,n_nodes_retained,n_edges,n_isolated_removed,avg_closeness,avg_betweenness,avg_degree,avg_clustering,density,n_components";

/// One row per report, in the given order.
pub fn write_reports_csv<W: Write>(mut w: W, reports: &[LayerMetricsReport]) -> std::io::Result<()> {
    writeln!(w, "{REPORT_CSV_HEADER}")?;
    for r in reports {
        writeln!(
            w,
            "{},{},{},{},{},{},{},{},{},{}",
            r.threshold,
            r.n_nodes_retained,
            r.n_edges,
            r.n_isolated_removed,
            r.avg_closeness,
            r.avg_betweenness,
            r.avg_degree,
            r.avg_clustering,
            r.density,
            r.n_components
        )?;
    }
    Ok(())
}

pub fn reports_to_json(reports: &[LayerMetricsReport]) -> String {
    serde_json::to_string_pretty(reports).expect("reports serialize")
}

#[cfg(test)]
mod tests {
    use super::*;

    fn graph(n: usize, edges: &[(usize, usize)]) -> Graph {
        let ids = (0..n).map(|i| format!("n{i}")).collect();
        Graph::from_edges(ids, edges.iter().copied())
    }

    fn layer(nodes: &[&str], edges: &[(&str, &str)]) -> NetworkLayer {
        NetworkLayer::from_parts(
            0.0,
            nodes.iter().map(|s| s.to_string()),
            edges.iter().map(|(a, b)| (a.to_string(), b.to_string(), 50.0)),
        )
    }

    #[test]
    fn remove_isolated_cases() {
        let l = layer(&["a", "b", "c", "x", "y"], &[("a", "b"), ("b", "c"), ("a", "c")]);
        assert_eq!(remove_isolated(&l).nodes, ["a", "b", "c"]);

        let empty = layer(&["a", "b"], &[]);
        assert!(remove_isolated(&empty).nodes.is_empty());

        let full = layer(&["a", "b"], &[("a", "b")]);
        assert_eq!(remove_isolated(&full), full);
    }

    #[test]
    fn closeness_on_paths() {
        let path = graph(3, &[(0, 1), (1, 2)]);
        assert_eq!(closeness(&path, 1), 2.0);
        assert_eq!(closeness(&path, 0), 1.5);
        let two_edges = graph(4, &[(0, 1), (2, 3)]);
        for v in 0..4 {
            assert_eq!(closeness(&two_edges, v), 1.0);
        }
        assert_eq!(closeness_all(&path), vec![1.5, 2.0, 1.5]);
    }

    #[test]
    fn betweenness_small_graphs() {
        assert_eq!(betweenness(&graph(3, &[(0, 1), (1, 2)])), vec![0.0, 1.0, 0.0]);
        assert_eq!(betweenness(&graph(3, &[(0, 1), (1, 2), (0, 2)])), vec![0.0; 3]);
        assert_eq!(betweenness(&graph(4, &[(0, 1), (0, 2), (0, 3)])), vec![3.0, 0.0, 0.0, 0.0]);
        // square: each node sits on one of the two shortest paths between its neighbours
        assert_eq!(betweenness(&graph(4, &[(0, 1), (1, 2), (2, 3), (3, 0)])), vec![0.5; 4]);
        assert!(betweenness(&graph(0, &[])).is_empty());
    }

    #[test]
    fn degree_cases() {
        let tri = graph(3, &[(0, 1), (1, 2), (0, 2)]);
        assert_eq!(degree(&tri, 0), 2);
        assert_eq!(degree(&graph(2, &[]), 0), 0);
        assert_eq!(degree(&graph(4, &[(0, 1), (0, 2), (0, 3)]), 0), 3);
    }

    #[test]
    fn clustering_cases() {
        assert_eq!(clustering(&graph(3, &[(0, 1), (1, 2), (0, 2)]), 0), 1.0);
        assert_eq!(clustering(&graph(4, &[(0, 1), (0, 2), (0, 3)]), 0), 0.0);
        let one_link = graph(4, &[(0, 1), (0, 2), (0, 3), (1, 2)]);
        assert_eq!(clustering(&one_link, 0), 1.0 / 3.0);
        assert_eq!(clustering(&one_link, 3), 0.0);
    }

    #[test]
    fn density_cases() {
        assert_eq!(density(&graph(3, &[(0, 1), (1, 2), (0, 2)])), 1.0);
        assert_eq!(density(&graph(3, &[(0, 1), (1, 2)])), 2.0 / 3.0);
        assert_eq!(density(&graph(1, &[])), 0.0);
        let expected: f64 = 2.0 * 5220.0 / (626.0 * 625.0);
        assert!((expected - 0.0267).abs() < 5e-5);
    }

    #[test]
    fn component_ordering() {
        assert_eq!(components(&graph(4, &[(0, 1), (2, 3)])).count, 2);
        assert_eq!(components(&graph(3, &[(0, 1), (1, 2)])).count, 1);
        // path of 2 on the low ids, triangle on the high ids
        let c = components(&graph(5, &[(0, 1), (2, 3), (3, 4), (2, 4)]));
        assert_eq!(c.count, 2);
        assert_eq!(c.membership, vec![1, 1, 0, 0, 0]);
        assert_eq!(c.sizes, vec![3, 2]);
        // equal sizes: smallest id first
        let tie = components(&graph(4, &[(2, 3), (0, 1)]));
        assert_eq!(tie.membership, vec![0, 0, 1, 1]);
    }

    #[test]
    fn report_triangle() {
        let r = report(&layer(&["a", "b", "c", "d"], &[("a", "b"), ("b", "c"), ("a", "c")]));
        assert_eq!(r.n_nodes_retained, 3);
        assert_eq!(r.n_isolated_removed, 1);
        assert_eq!(r.avg_degree, 2.0);
        assert_eq!(r.avg_clustering, 1.0);
        assert_eq!(r.density, 1.0);
        assert_eq!(r.n_components, 1);
        assert_eq!(r.avg_betweenness, 0.0);
    }

    #[test]
    fn report_path_closeness() {
        let r = report(&layer(&["a", "b", "c"], &[("a", "b"), ("b", "c")]));
        assert!((r.avg_closeness - 5.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn report_all_isolated() {
        let r = report(&layer(&["a", "b", "c"], &[]));
        assert_eq!(
            r,
            LayerMetricsReport {
                threshold: 0.0,
                n_nodes_retained: 0,
                n_edges: 0,
                n_isolated_removed: 3,
                avg_closeness: 0.0,
                avg_betweenness: 0.0,
                avg_degree: 0.0,
                avg_clustering: 0.0,
                density: 0.0,
                n_components: 0,
            }
        );
    }

    #[test]
    fn report_serialization_keys() {
        let r = report(&layer(&["a", "b"], &[("a", "b")]));
        let json: serde_json::Value = serde_json::from_str(&reports_to_json(&[r.clone()])).unwrap();
        let keys: Vec<&str> = json[0].as_object().unwrap().keys().map(String::as_str).collect();
        let header: Vec<&str> = REPORT_CSV_HEADER.split(',').collect();
        let mut sorted_header = header.clone();
        sorted_header.sort();
        let mut sorted_keys = keys.clone();
        sorted_keys.sort();
        assert_eq!(sorted_keys, sorted_header);

        let mut csv = Vec::new();
        write_reports_csv(&mut csv, &[r]).unwrap();
        assert_eq!(String::from_utf8(csv).unwrap().lines().nth(1).unwrap(), "0,2,1,0,1,0,1,0,1,1");
    }
}
