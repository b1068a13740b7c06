//! Brute-force reference implementations and random instance generators
//! shared by the integration tests and the acceptance suite.
#![allow(dead_code)]

use std::collections::{BTreeMap, BTreeSet, VecDeque};

use collabnet_core::{Dataset, Graph, NetworkLayer, Project, ProjectType};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Random dataset with up to `max_projects` projects over up to `max_members`
/// members. Contributions are arbitrary reals in (0, 100].
pub fn random_dataset(seed: u64, max_projects: usize, max_members: usize) -> Dataset {
    let mut r = rng(seed);
    let n_projects = r.random_range(1..=max_projects);
    let n_members = r.random_range(1..=max_members);
    let members: Vec<String> = (0..n_members).map(|m| format!("m{m}")).collect();
    let projects = (0..n_projects).map(|p| {
        let t = ProjectType::ALL[r.random_range(0..3)];
        let size = r.random_range(1..=n_members.min(5));
        let mut pool = members.clone();
        pool.shuffle(&mut r);
        pool.into_iter().take(size).fold(Project::new(format!("p{p:02}"), t), |proj, m| {
            let c: f64 = r.random_range(0.01..=100.0);
            proj.with_member(m, c)
        })
    });
    Dataset::from_projects(projects.collect::<Vec<_>>())
}

/// Linkage by the defining formula, evaluated on every unordered project pair.
/// Keyed by (smaller id, larger id); value is (shared member count, linkage).
pub fn naive_linkage(d: &Dataset) -> BTreeMap<(String, String), (usize, f64)> {
    let projects: Vec<&Project> = d.projects().collect();
    let mut out = BTreeMap::new();
    for i in 0..projects.len() {
        for j in 0..projects.len() {
            let (a, b) = (projects[i], projects[j]);
            if a.id >= b.id {
                continue;
            }
            let common: Vec<&String> = a.members.keys().filter(|m| b.members.contains_key(*m)).collect();
            if common.is_empty() {
                continue;
            }
            let total: f64 = common
                .iter()
                .map(|m| (a.members[*m].contribution_pct + b.members[*m].contribution_pct) / 2.0)
                .sum();
            out.insert((a.id.clone(), b.id.clone()), (common.len(), total / common.len() as f64));
        }
    }
    out
}

/// Number of unordered project pairs sharing at least one member, counted
/// from the member lists directly.
pub fn co_membered_pair_count(d: &Dataset) -> usize {
    let mut by_member: BTreeMap<&str, Vec<&str>> = BTreeMap::new();
    for p in d.projects() {
        for m in p.members.keys() {
            by_member.entry(m).or_default().push(&p.id);
        }
    }
    let mut pairs: BTreeSet<(&str, &str)> = BTreeSet::new();
    for ps in by_member.values() {
        for (i, a) in ps.iter().enumerate() {
            for b in &ps[i + 1..] {
                pairs.insert(if a < b { (a, b) } else { (b, a) });
            }
        }
    }
    pairs.len()
}

/// Random simple graph with 1..=max_n nodes and edge probability drawn per graph.
pub fn random_graph(seed: u64, max_n: usize) -> Graph {
    let mut r = rng(seed);
    let n = r.random_range(1..=max_n);
    let p: f64 = r.random_range(0.1..0.9);
    let ids: Vec<String> = (0..n).map(|i| format!("v{i}")).collect();
    let mut edges = Vec::new();
    for a in 0..n {
        for b in a + 1..n {
            if r.random::<f64>() < p {
                edges.push((a, b));
            }
        }
    }
    Graph::from_edges(ids, edges)
}

/// Random layer over `n` nodes with random weights; used for export checks.
pub fn random_layer(seed: u64, max_n: usize) -> NetworkLayer {
    let mut r = rng(seed);
    let n = r.random_range(1..=max_n);
    let p: f64 = r.random_range(0.02..0.5);
    let nodes: Vec<String> = (0..n).map(|i| format!("n{i:03}")).collect();
    let mut edges = Vec::new();
    for a in 0..n {
        for b in a + 1..n {
            if r.random::<f64>() < p {
                edges.push((nodes[a].clone(), nodes[b].clone(), r.random_range(0.0..100.0)));
            }
        }
    }
    NetworkLayer::from_parts(r.random_range(0.0..100.0), nodes, edges)
}

fn adjacency_matrix(g: &Graph) -> Vec<Vec<bool>> {
    let n = g.len();
    let mut m = vec![vec![false; n]; n];
    for (v, row) in m.iter_mut().enumerate() {
        for &w in g.neighbors(v) {
            row[w] = true;
        }
    }
    m
}

/// All-pairs hop distances by Floyd-Warshall; `None` when unreachable.
pub fn distances(g: &Graph) -> Vec<Vec<Option<usize>>> {
    let n = g.len();
    let adj = adjacency_matrix(g);
    let mut d: Vec<Vec<Option<usize>>> = (0..n)
        .map(|i| {
            (0..n)
                .map(|j| match (i == j, adj[i][j]) {
                    (true, _) => Some(0),
                    (false, true) => Some(1),
                    _ => None,
                })
                .collect()
        })
        .collect();
    for k in 0..n {
        for i in 0..n {
            for j in 0..n {
                if let (Some(a), Some(b)) = (d[i][k], d[k][j]) {
                    if d[i][j].is_none_or(|c| a + b < c) {
                        d[i][j] = Some(a + b);
                    }
                }
            }
        }
    }
    d
}

/// Sum of 1/d over reachable other nodes.
pub fn closeness(g: &Graph) -> Vec<f64> {
    distances(g)
        .iter()
        .enumerate()
        .map(|(v, row)| {
            row.iter()
                .enumerate()
                .filter(|&(u, _)| u != v)
                .filter_map(|(_, d)| d.map(|d| 1.0 / d as f64))
                .sum()
        })
        .collect()
}

/// Every shortest path from `s` to `t`, as node sequences.
pub fn shortest_paths(g: &Graph, dist: &[Vec<Option<usize>>], s: usize, t: usize) -> Vec<Vec<usize>> {
    fn walk(g: &Graph, dist: &[Vec<Option<usize>>], t: usize, path: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        let v = *path.last().unwrap();
        if v == t {
            out.push(path.clone());
            return;
        }
        let left = dist[v][t].unwrap();
        for &w in g.neighbors(v) {
            if dist[w][t] == Some(left - 1) {
                path.push(w);
                walk(g, dist, t, path, out);
                path.pop();
            }
        }
    }
    let mut out = Vec::new();
    if dist[s][t].is_some() {
        walk(g, dist, t, &mut vec![s], &mut out);
    }
    out
}

/// Betweenness over unordered pairs by explicit path enumeration.
pub fn betweenness(g: &Graph) -> Vec<f64> {
    let n = g.len();
    let dist = distances(g);
    let mut bc = vec![0.0; n];
    for s in 0..n {
        for t in s + 1..n {
            let paths = shortest_paths(g, &dist, s, t);
            if paths.is_empty() {
                continue;
            }
            let total = paths.len() as f64;
            for (v, score) in bc.iter_mut().enumerate() {
                if v == s || v == t {
                    continue;
                }
                let through = paths.iter().filter(|p| p.contains(&v)).count();
                *score += through as f64 / total;
            }
        }
    }
    bc
}

/// Local clustering by checking every neighbor pair.
pub fn clustering(g: &Graph) -> Vec<f64> {
    let adj = adjacency_matrix(g);
    (0..g.len())
        .map(|v| {
            let nb: Vec<usize> = (0..g.len()).filter(|&u| adj[v][u]).collect();
            let k = nb.len();
            if k < 2 {
                return 0.0;
            }
            let mut links = 0usize;
            for i in 0..k {
                for j in i + 1..k {
                    if adj[nb[i]][nb[j]] {
                        links += 1;
                    }
                }
            }
            2.0 * links as f64 / (k * (k - 1)) as f64
        })
        .collect()
}

/// Connected components by breadth-first flood fill; returns component sizes.
pub fn component_sizes(g: &Graph) -> Vec<usize> {
    let n = g.len();
    let mut seen = vec![false; n];
    let mut sizes = Vec::new();
    for start in 0..n {
        if seen[start] {
            continue;
        }
        seen[start] = true;
        let mut queue = VecDeque::from([start]);
        let mut size = 0;
        while let Some(v) = queue.pop_front() {
            size += 1;
            for &w in g.neighbors(v) {
                if !seen[w] {
                    seen[w] = true;
                    queue.push_back(w);
                }
            }
        }
        sizes.push(size);
    }
    sizes
}

pub fn rel_close(a: f64, b: f64, tol: f64) -> bool {
    a == b || (a - b).abs() <= tol * a.abs().max(b.abs())
}
