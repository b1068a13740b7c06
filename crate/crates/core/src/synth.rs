//! Seeded generator of synthetic collaboration datasets.
//!
//! The defaults are calibrated to published aggregates of an institutional
//! project database: about 2300 projects, about 1000 members, an
//! IP/paper/prototype split of 630:1717:539 and a mean contribution share
//! near 23.3%. Everything else (team-size shape, who joins which project,
//! how credit is split) is a modeling choice and the output is synthetic.
//!
//! Members belong to fixed research groups. Each project has a home group
//! that supplies its first member and most of the rest of its team; the
//! remaining slots go to members of other groups, who receive a reduced
//! share of the credit. Within either pool, a slot is filled preferentially by
//! members who already have many projects.
//!
//! Because each project's contributions sum to exactly 100, the mean
//! contribution per record is `100 / mean team size`; the default team
//! size mean is therefore derived from `contribution_mean_target`.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Geometric, LogNormal};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::ingest::{ContributionRecord, ProjectType};
use crate::stats::apportion_ic_score;

/// Contributions are allotted in hundredths of a percent.
const UNITS_PER_PROJECT: u64 = 10_000;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SynthError {
    #[error("invalid synth config: {0}")]
    InvalidConfig(String),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SynthConfig {
    pub seed: u64,
    pub n_projects: usize,
    pub n_members: usize,
    /// Relative weights for IP, Paper and Prototype; normalized on use.
    pub type_mix: [f64; 3],
    /// Mean of the shifted-geometric team size. `None` derives it as
    /// `100 / contribution_mean_target`.
    pub team_size_mean: Option<f64>,
    pub team_size_max: usize,
    pub contribution_mean_target: f64,
    /// Members per research group.
    pub group_size: usize,
    /// Probability that a team slot is filled from outside the home group.
    pub cross_group_share: f64,
    /// Multiplier on the credit weight of members from outside the home group.
    pub cross_group_credit: f64,
    /// Credit weights are scaled by `projects^-activity_damping`, so
    /// members spread over many projects take smaller shares in each.
    pub activity_damping: f64,
    /// Probability that a team slot is filled by copying a member from an
    /// earlier slot of the same pool (preferential attachment) rather than
    /// uniformly.
    pub preferential_share: f64,
    /// Log-normal sigma of the per-member credit weights.
    pub contribution_spread: f64,
    /// Mean project-level IC-score, apportioned to members by share.
    pub project_ic_mean: f64,
}

impl Default for SynthConfig {
    fn default() -> Self {
        Self {
            seed: 0,
            n_projects: 2300,
            n_members: 1000,
            type_mix: [630.0, 1717.0, 539.0],
            team_size_mean: None,
            team_size_max: 25,
            contribution_mean_target: 23.3,
            group_size: 12,
            cross_group_share: 0.02,
            cross_group_credit: 0.3,
            activity_damping: 1.0,
            preferential_share: 0.3,
            contribution_spread: 0.4,
            project_ic_mean: 13.5,
        }
    }
}

impl SynthConfig {
    pub fn with_seed(seed: u64) -> Self {
        Self {
            seed,
            ..Self::default()
        }
    }

    pub fn effective_team_size_mean(&self) -> f64 {
        self.team_size_mean
            .unwrap_or(100.0 / self.contribution_mean_target)
    }

    /// Type proportions summing to 1.
    pub fn type_proportions(&self) -> [f64; 3] {
        let total: f64 = self.type_mix.iter().sum();
        self.type_mix.map(|w| w / total)
    }

    pub fn validate(&self) -> Result<(), SynthError> {
        let bad = |msg: String| Err(SynthError::InvalidConfig(msg));
        if self.n_projects == 0 || self.n_members == 0 {
            return bad("project and member counts must be positive".into());
        }
        if self.type_mix.iter().any(|w| !w.is_finite() || *w < 0.0) || self.type_mix.iter().sum::<f64>() <= 0.0 {
            return bad(format!("type_mix must be nonnegative with a positive total, got {:?}", self.type_mix));
        }
        if !(self.contribution_mean_target > 0.0 && self.contribution_mean_target <= 100.0) {
            return bad(format!(
                "contribution_mean_target must lie in (0, 100], got {}",
                self.contribution_mean_target
            ));
        }
        if self.team_size_max == 0 {
            return bad("team_size_max must be positive".into());
        }
        if self.team_size_max > self.n_members {
            return bad(format!(
                "team_size_max {} exceeds the member pool of {}",
                self.team_size_max, self.n_members
            ));
        }
        if self.team_size_max as u64 > UNITS_PER_PROJECT {
            return bad("team_size_max too large to give every member a positive share".into());
        }
        let mean = self.effective_team_size_mean();
        if !(mean >= 1.0 && mean <= self.team_size_max as f64) {
            return bad(format!(
                "team size mean {mean} must lie in [1, {}]",
                self.team_size_max
            ));
        }
        if self.group_size == 0 {
            return bad("group_size must be positive".into());
        }
        if !(0.0..=1.0).contains(&self.cross_group_share) {
            return bad(format!("cross_group_share must lie in [0, 1], got {}", self.cross_group_share));
        }
        if !(self.cross_group_credit.is_finite() && self.cross_group_credit > 0.0) {
            return bad(format!("cross_group_credit must be positive, got {}", self.cross_group_credit));
        }
        if !(self.activity_damping.is_finite() && self.activity_damping >= 0.0) {
            return bad(format!("activity_damping must be nonnegative, got {}", self.activity_damping));
        }
        if !(0.0..=1.0).contains(&self.preferential_share) {
            return bad(format!("preferential_share must lie in [0, 1], got {}", self.preferential_share));
        }
        if !(self.contribution_spread.is_finite() && self.contribution_spread >= 0.0) {
            return bad(format!("contribution_spread must be nonnegative, got {}", self.contribution_spread));
        }
        if !(self.project_ic_mean.is_finite() && self.project_ic_mean >= 0.0) {
            return bad(format!("project_ic_mean must be nonnegative, got {}", self.project_ic_mean));
        }
        Ok(())
    }
}

/// Splits `total` into integer counts proportional to `weights` (largest remainder, ties to the lower index).
fn apportion(total: u64, weights: &[f64]) -> Vec<u64> {
    let sum: f64 = weights.iter().sum();
    let exact: Vec<f64> = weights.iter().map(|w| total as f64 * w / sum).collect();
    let mut counts: Vec<u64> = exact.iter().map(|x| x.floor() as u64).collect();
    let assigned: u64 = counts.iter().sum();
    let mut order: Vec<usize> = (0..weights.len()).collect();
    order.sort_by(|&a, &b| {
        let fa = exact[a] - exact[a].floor();
        let fb = exact[b] - exact[b].floor();
        fb.total_cmp(&fa).then(a.cmp(&b))
    });
    for &i in order.iter().take(total.saturating_sub(assigned) as usize) {
        counts[i] += 1;
    }
    counts
}

/// Project counts per type, in `ProjectType::ALL` order.
pub fn type_counts(config: &SynthConfig) -> [usize; 3] {
    let c = apportion(config.n_projects as u64, &config.type_mix);
    [c[0] as usize, c[1] as usize, c[2] as usize]
}

fn id_width(n: usize) -> usize {
    n.to_string().len().max(4)
}

struct TeamSampler {
    sizes: Geometric,
    max: usize,
    n_members: usize,
    group_size: usize,
    cross_group_share: f64,
    preferential_share: f64,
    /// Every member placed so far, once per project.
    slots: Vec<usize>,
    /// The same, split by the member's group.
    group_slots: Vec<Vec<usize>>,
}

impl TeamSampler {
    fn new(config: &SynthConfig) -> Result<Self, SynthError> {
        let n_groups = config.n_members.div_ceil(config.group_size);
        Ok(Self {
            sizes: Geometric::new(1.0 / config.effective_team_size_mean())
                .map_err(|e| SynthError::InvalidConfig(e.to_string()))?,
            max: config.team_size_max,
            n_members: config.n_members,
            group_size: config.group_size,
            cross_group_share: config.cross_group_share,
            preferential_share: config.preferential_share,
            slots: Vec::new(),
            group_slots: vec![Vec::new(); n_groups],
        })
    }

    fn n_groups(&self) -> usize {
        self.group_slots.len()
    }

    fn group_members(&self, group: usize) -> std::ops::Range<usize> {
        let lo = group * self.group_size;
        lo..(lo + self.group_size).min(self.n_members)
    }

    fn size<R: Rng>(&self, rng: &mut R) -> usize {
        loop {
            let s = 1 + self.sizes.sample(rng) as usize;
            if s <= self.max {
                return s;
            }
        }
    }

    fn candidate<R: Rng>(&self, rng: &mut R, group: usize, cross: bool, lead: bool) -> usize {
        let (slots, range) = if cross {
            (&self.slots, 0..self.n_members)
        } else {
            (&self.group_slots[group], self.group_members(group))
        };
        if !lead && !slots.is_empty() && rng.random::<f64>() < self.preferential_share {
            slots[rng.random_range(0..slots.len())]
        } else {
            rng.random_range(range)
        }
    }

    /// Draws a team; returns it with the home group. The first member is
    /// always from the home group; later slots go outside it with
    /// probability `cross_group_share`, or when the group is used up.
    fn team<R: Rng>(&mut self, rng: &mut R, size: usize) -> (Vec<usize>, usize) {
        let group = rng.random_range(0..self.n_groups());
        let in_group = self.group_members(group).len();
        let mut team: Vec<usize> = Vec::with_capacity(size);
        while team.len() < size {
            let home_left = team.iter().filter(|&&m| m / self.group_size == group).count() < in_group;
            let cross = !team.is_empty() && (!home_left || rng.random::<f64>() < self.cross_group_share);
            let pick = (0..64)
                .map(|_| self.candidate(rng, group, cross, team.is_empty()))
                .find(|c| !team.contains(c));
            let member = pick.unwrap_or_else(|| {
                let free: Vec<usize> = if cross {
                    (0..self.n_members).filter(|m| !team.contains(m)).collect()
                } else {
                    self.group_members(group).filter(|m| !team.contains(m)).collect()
                };
                free[rng.random_range(0..free.len())]
            });
            team.push(member);
        }
        for &m in &team {
            self.slots.push(m);
            self.group_slots[m / self.group_size].push(m);
        }
        (team, group)
    }
}

/// Generates records project by project. Identical configs give identical output.
pub fn generate(config: &SynthConfig) -> Result<Vec<ContributionRecord>, SynthError> {
    config.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);

    let mut types: Vec<ProjectType> = ProjectType::ALL
        .iter()
        .zip(type_counts(config))
        .flat_map(|(&t, n)| std::iter::repeat_n(t, n))
        .collect();
    types.shuffle(&mut rng);

    let mut sampler = TeamSampler::new(config)?;
    let teams: Vec<(Vec<usize>, usize)> = (0..types.len())
        .map(|_| {
            let size = sampler.size(&mut rng);
            sampler.team(&mut rng, size)
        })
        .collect();
    let mut activity = vec![0u32; config.n_members];
    for &m in teams.iter().flat_map(|(t, _)| t) {
        activity[m] += 1;
    }
    let credit = LogNormal::new(0.0, config.contribution_spread)
        .map_err(|e| SynthError::InvalidConfig(e.to_string()))?;
    let ic_sigma: f64 = 0.9;
    let ic_dist = LogNormal::new(config.project_ic_mean.max(f64::MIN_POSITIVE).ln() - ic_sigma * ic_sigma / 2.0, ic_sigma)
        .map_err(|e| SynthError::InvalidConfig(e.to_string()))?;

    let pw = id_width(config.n_projects);
    let mw = id_width(config.n_members);
    let mut records = Vec::new();
    for (i, (project_type, (team, group))) in types.into_iter().zip(teams).enumerate() {
        let project_id = format!("P{:0pw$}", i + 1);
        let weights: Vec<f64> = team
            .iter()
            .map(|&m| {
                let mut w = credit.sample(&mut rng) * f64::from(activity[m]).powf(-config.activity_damping);
                if m / config.group_size != group {
                    w *= config.cross_group_credit;
                }
                w
            })
            .collect();
        let units = split_units(&weights);
        let project_ic = if config.project_ic_mean > 0.0 {
            ic_dist.sample(&mut rng)
        } else {
            0.0
        };
        for (member, u) in team.into_iter().zip(units) {
            let contribution_pct = u as f64 / 100.0;
            let ic = (apportion_ic_score(project_ic, contribution_pct) * 1e4).round() / 1e4;
            records.push(ContributionRecord {
                project_id: project_id.clone(),
                member_id: format!("M{:0mw$}", member + 1),
                contribution_pct,
                ic_score: Some(ic),
                project_type,
            });
        }
    }
    Ok(records)
}

/// Splits one project's 100% into positive hundredths, proportional to `weights`.
fn split_units(weights: &[f64]) -> Vec<u64> {
    let k = weights.len() as u64;
    apportion(UNITS_PER_PROJECT - k, weights)
        .into_iter()
        .map(|u| u + 1)
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::collections::BTreeMap;

    fn small(seed: u64) -> SynthConfig {
        SynthConfig {
            seed,
            n_projects: 120,
            n_members: 60,
            ..SynthConfig::default()
        }
    }

    #[test]
    fn deterministic_under_seed() {
        assert_eq!(generate(&small(7)).unwrap(), generate(&small(7)).unwrap());
        assert_ne!(generate(&small(7)).unwrap(), generate(&small(8)).unwrap());
    }

    #[test]
    fn contributions_sum_to_exactly_100() {
        let records = generate(&small(3)).unwrap();
        let mut units: BTreeMap<&str, u64> = BTreeMap::new();
        for r in &records {
            assert!(r.contribution_pct > 0.0);
            *units.entry(&r.project_id).or_default() += (r.contribution_pct * 100.0).round() as u64;
        }
        assert_eq!(units.len(), 120);
        assert!(units.values().all(|&u| u == UNITS_PER_PROJECT));
    }

    #[test]
    fn infeasible_configs_rejected() {
        let too_big_team = SynthConfig {
            n_members: 10,
            team_size_max: 11,
            ..SynthConfig::default()
        };
        assert!(generate(&too_big_team).is_err());
        let no_projects = SynthConfig {
            n_projects: 0,
            ..SynthConfig::default()
        };
        assert!(generate(&no_projects).is_err());
        let bad_mix = SynthConfig {
            type_mix: [0.0, 0.0, 0.0],
            ..SynthConfig::default()
        };
        assert!(generate(&bad_mix).is_err());
    }

    #[test]
    fn apportion_largest_remainder() {
        assert_eq!(apportion(10, &[1.0, 1.0, 1.0]), vec![4, 3, 3]);
        assert_eq!(apportion(2300, &[630.0, 1717.0, 539.0]).iter().sum::<u64>(), 2300);
        assert_eq!(split_units(&[1.0, 3.0]), vec![2501, 7499]);
    }

    #[test]
    fn tiny_member_pool_still_fills_teams() {
        let cfg = SynthConfig {
            n_projects: 30,
            n_members: 3,
            team_size_max: 3,
            team_size_mean: Some(2.5),
            ..SynthConfig::default()
        };
        let records = generate(&cfg).unwrap();
        assert!(records.len() >= 30);
    }
}
