//! Index-based undirected adjacency used by the metric routines.

use std::collections::HashMap;

use crate::layers::NetworkLayer;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Graph {
    ids: Vec<String>,
    adj: Vec<Vec<usize>>,
    n_edges: usize,
}

impl Graph {
    /// Builds from node ids and index pairs. Self-loops and repeated pairs are ignored.
    pub fn from_edges(ids: Vec<String>, edges: impl IntoIterator<Item = (usize, usize)>) -> Self {
        let n = ids.len();
        let mut adj = vec![Vec::new(); n];
        for (a, b) in edges {
            assert!(a < n && b < n, "edge ({a}, {b}) out of range for {n} nodes");
            if a != b {
                adj[a].push(b);
                adj[b].push(a);
            }
        }
        let mut n_edges = 0;
        for list in &mut adj {
            list.sort_unstable();
            list.dedup();
            n_edges += list.len();
        }
        Self {
            ids,
            adj,
            n_edges: n_edges / 2,
        }
    }

    /// Nodes take the layer's order.
    pub fn from_layer(layer: &NetworkLayer) -> Self {
        let index: HashMap<&str, usize> = layer
            .nodes
            .iter()
            .enumerate()
            .map(|(i, id)| (id.as_str(), i))
            .collect();
        let edges: Vec<(usize, usize)> = layer
            .edges
            .iter()
            .map(|e| (index[e.source.as_str()], index[e.target.as_str()]))
            .collect();
        Self::from_edges(layer.nodes.clone(), edges)
    }

    pub fn len(&self) -> usize {
        self.ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ids.is_empty()
    }

    pub fn n_edges(&self) -> usize {
        self.n_edges
    }

    pub fn id(&self, v: usize) -> &str {
        &self.ids[v]
    }

    pub fn ids(&self) -> &[String] {
        &self.ids
    }

    pub fn index_of(&self, id: &str) -> Option<usize> {
        self.ids.iter().position(|x| x == id)
    }

    /// Sorted neighbor indices.
    pub fn neighbors(&self, v: usize) -> &[usize] {
        &self.adj[v]
    }

    pub fn degree(&self, v: usize) -> usize {
        self.adj[v].len()
    }

    pub fn has_edge(&self, a: usize, b: usize) -> bool {
        self.adj[a].binary_search(&b).is_ok()
    }
}
