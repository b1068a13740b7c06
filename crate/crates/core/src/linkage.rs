//! Pairwise linkage values between co-membered projects.
//!
//! For projects `i` and `j` with common members `M`, the linkage is
//! `(1/|M|) * sum_{k in M} (c_ik + c_jk) / 2`, where `c_ik` is member `k`'s
//! contribution percentage in project `i`. Pairs without a common member
//! have no linkage and are never materialized.

use std::collections::{BTreeMap, BTreeSet};
use std::io::Write;

use rayon::prelude::*;

use crate::ingest::{Dataset, Project};

#[derive(Debug, Clone, PartialEq)]
pub struct PairLinkage {
    /// Lexicographically smaller id of the pair.
    pub project_a: String,
    pub project_b: String,
    /// Sorted.
    pub common_members: Vec<String>,
    pub linkage: f64,
}

impl PairLinkage {
    pub fn n_common(&self) -> usize {
        self.common_members.len()
    }

    pub fn key(&self) -> (&str, &str) {
        (&self.project_a, &self.project_b)
    }
}

/// Members present in both projects, in id order.
pub fn common_members<'a>(a: &'a Project, b: &Project) -> Vec<&'a str> {
    let (small, large) = if a.members.len() <= b.members.len() {
        (&a.members, &b.members)
    } else {
        (&b.members, &a.members)
    };
    small
        .keys()
        .filter(|m| large.contains_key(*m))
        .map(|m| a.members.get_key_value(m).expect("member present in both").0.as_str())
        .collect()
}

/// Linkage of an unordered project pair, or `None` when the teams are disjoint.
///
/// The result is independent of argument order: the pair is canonicalized
/// and the sum runs over common members in id order.
pub fn pair_linkage(a: &Project, b: &Project) -> Option<PairLinkage> {
    debug_assert_ne!(a.id, b.id, "pair_linkage on a single project");
    let (a, b) = if a.id <= b.id { (a, b) } else { (b, a) };
    let common = common_members(a, b);
    if common.is_empty() {
        return None;
    }
    let total: f64 = common
        .iter()
        .map(|m| {
            let ca = a.members[*m].contribution_pct;
            let cb = b.members[*m].contribution_pct;
            (ca + cb) / 2.0
        })
        .sum();
    let linkage = total / common.len() as f64;
    Some(PairLinkage {
        project_a: a.id.clone(),
        project_b: b.id.clone(),
        common_members: common.into_iter().map(str::to_owned).collect(),
        linkage,
    })
}

/// All materialized pair linkages of a dataset, sorted by canonical key.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct LinkageTable {
    pairs: Vec<PairLinkage>,
    lookup: BTreeMap<(String, String), usize>,
    min_linkage: Option<f64>,
    max_linkage: Option<f64>,
}

impl LinkageTable {
    /// Builds a table from arbitrary pairs; duplicates by key keep the last.
    pub fn from_pairs(pairs: impl IntoIterator<Item = PairLinkage>) -> Self {
        let mut by_key: BTreeMap<(String, String), PairLinkage> = BTreeMap::new();
        for p in pairs {
            by_key.insert((p.project_a.clone(), p.project_b.clone()), p);
        }
        let pairs: Vec<PairLinkage> = by_key.into_values().collect();
        let lookup = pairs
            .iter()
            .enumerate()
            .map(|(i, p)| ((p.project_a.clone(), p.project_b.clone()), i))
            .collect();
        let min_linkage = pairs.iter().map(|p| p.linkage).reduce(f64::min);
        let max_linkage = pairs.iter().map(|p| p.linkage).reduce(f64::max);
        Self {
            pairs,
            lookup,
            min_linkage,
            max_linkage,
        }
    }

    pub fn pairs(&self) -> &[PairLinkage] {
        &self.pairs
    }

    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }

    /// `None` on an empty table.
    pub fn min_linkage(&self) -> Option<f64> {
        self.min_linkage
    }

    pub fn max_linkage(&self) -> Option<f64> {
        self.max_linkage
    }

    /// Looks up a pair in either order.
    pub fn get(&self, a: &str, b: &str) -> Option<&PairLinkage> {
        let key = if a <= b { (a, b) } else { (b, a) };
        self.lookup
            .get(&(key.0.to_owned(), key.1.to_owned()))
            .map(|&i| &self.pairs[i])
    }

    /// Debug dump: `project_a,project_b,n_common,linkage` with 6 decimals.
    pub fn write_csv<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "project_a,project_b,n_common,linkage")?;
        for p in &self.pairs {
            writeln!(
                w,
                "{},{},{},{:.6}",
                csv_field(&p.project_a),
                csv_field(&p.project_b),
                p.n_common(),
                p.linkage
            )?;
        }
        Ok(())
    }
}

fn csv_field(s: &str) -> String {
    if s.contains([',', '"', '\n', '\r']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_owned()
    }
}

/// Distinct co-membered project pairs, found through the member index.
///
/// Only pairs that share at least one member are produced, so the number
/// of linkage evaluations equals the number of co-membered pairs.
pub fn co_membered_pairs(d: &Dataset) -> Vec<(&str, &str)> {
    let mut pairs: BTreeSet<(&str, &str)> = BTreeSet::new();
    for projects in d.member_index().values() {
        let ids: Vec<&str> = projects.iter().map(String::as_str).collect();
        for (i, a) in ids.iter().enumerate() {
            for b in &ids[i + 1..] {
                pairs.insert((a, b));
            }
        }
    }
    pairs.into_iter().collect()
}

pub fn build_linkage_table(d: &Dataset) -> LinkageTable {
    let candidates = co_membered_pairs(d);
    let pairs: Vec<PairLinkage> = candidates
        .par_iter()
        .map(|(a, b)| {
            let pa = d.project(a).expect("indexed project");
            let pb = d.project(b).expect("indexed project");
            pair_linkage(pa, pb).expect("co-membered pair has common members")
        })
        .collect();
    LinkageTable::from_pairs(pairs)
}
