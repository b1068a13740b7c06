//! Summary statistics and histograms of the per-member features.

use std::fmt;
use std::io::Write;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::ingest::ContributionRecord;

pub const DEFAULT_BINS: usize = 20;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Feature {
    ContributionPct,
    IcScore,
}

impl Feature {
    pub fn as_str(self) -> &'static str {
        match self {
            Feature::ContributionPct => "contribution_pct",
            Feature::IcScore => "ic_score",
        }
    }

    fn value(self, r: &ContributionRecord) -> Option<f64> {
        match self {
            Feature::ContributionPct => Some(r.contribution_pct),
            Feature::IcScore => r.ic_score,
        }
    }
}

impl fmt::Display for Feature {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum StatsError {
    #[error("feature {0} absent from dataset")]
    FeatureAbsent(Feature),
    #[error("histogram needs at least one bin")]
    NoBins,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HistogramBin {
    pub lower: f64,
    pub upper: f64,
    pub count: usize,
}

/// Population statistics (divisor N) of one feature.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureSummary {
    pub feature: Feature,
    pub count: usize,
    pub mean: f64,
    pub std_dev: f64,
    pub variance: f64,
    pub min: f64,
    pub max: f64,
    pub histogram: Vec<HistogramBin>,
}

impl FeatureSummary {
    pub fn range(&self) -> f64 {
        self.max - self.min
    }

    pub fn write_histogram_csv<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "bin_lower,bin_upper,count")?;
        for b in &self.histogram {
            writeln!(w, "{},{},{}", b.lower, b.upper, b.count)?;
        }
        Ok(())
    }
}

/// Summarizes `feature` over the records that carry it.
pub fn summarize(records: &[ContributionRecord], feature: Feature, n_bins: usize) -> Result<FeatureSummary, StatsError> {
    let values: Vec<f64> = records.iter().filter_map(|r| feature.value(r)).collect();
    summarize_values(&values, feature, n_bins)
}

pub fn summarize_values(values: &[f64], feature: Feature, n_bins: usize) -> Result<FeatureSummary, StatsError> {
    if n_bins == 0 {
        return Err(StatsError::NoBins);
    }
    if values.is_empty() {
        return Err(StatsError::FeatureAbsent(feature));
    }
    // sort first so the result does not depend on input order
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    let n = sorted.len() as f64;
    let mean = sorted.iter().sum::<f64>() / n;
    let variance = sorted.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
    let std_dev = variance.sqrt();
    let min = sorted[0];
    let max = sorted[sorted.len() - 1];
    Ok(FeatureSummary {
        feature,
        count: sorted.len(),
        mean,
        variance,
        std_dev,
        min,
        max,
        histogram: histogram(&sorted, min, max, n_bins),
    })
}

/// Equal-width bins over `[min, max]`, each half-open except the last.
/// Constant data collapses to a single zero-width bin.
fn histogram(values: &[f64], min: f64, max: f64, n_bins: usize) -> Vec<HistogramBin> {
    if max <= min {
        return vec![HistogramBin {
            lower: min,
            upper: max,
            count: values.len(),
        }];
    }
    let width = (max - min) / n_bins as f64;
    let mut bins: Vec<HistogramBin> = (0..n_bins)
        .map(|i| HistogramBin {
            lower: min + width * i as f64,
            upper: if i + 1 == n_bins { max } else { min + width * (i + 1) as f64 },
            count: 0,
        })
        .collect();
    for &v in values {
        let mut i = (((v - min) / width).floor() as usize).min(n_bins - 1);
        // floating-point edges: keep each value inside its bin's bounds
        while i > 0 && v < bins[i].lower {
            i -= 1;
        }
        while i + 1 < n_bins && v >= bins[i + 1].lower {
            i += 1;
        }
        bins[i].count += 1;
    }
    bins
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureChoice {
    pub selected: Feature,
    /// Set when the broader-range feature is not the one linkage uses.
    pub advisory: Option<String>,
}

/// Picks the feature whose observed range is broader; ties go to contribution percentage.
/// Advisory only: linkage always uses contribution percentage.
pub fn select_linkage_feature(contribution: &FeatureSummary, ic: &FeatureSummary) -> FeatureChoice {
    if ic.range() > contribution.range() {
        FeatureChoice {
            selected: Feature::IcScore,
            advisory: Some(format!(
                "ic_score spans a broader range ({}) than contribution_pct ({}); linkage still uses contribution_pct",
                ic.range(),
                contribution.range()
            )),
        }
    } else {
        FeatureChoice {
            selected: Feature::ContributionPct,
            advisory: None,
        }
    }
}

/// Member share of a project-level IC-score, apportioned by contribution percentage.
pub fn apportion_ic_score(project_ic: f64, contribution_pct: f64) -> f64 {
    project_ic * contribution_pct / 100.0
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ingest::ProjectType;

    fn rec(c: f64, ic: Option<f64>) -> ContributionRecord {
        ContributionRecord::new("P", "M", c, ic, ProjectType::Ip)
    }

    #[test]
    fn constant_values() {
        let s = summarize(&[rec(10.0, None), rec(10.0, None), rec(10.0, None)], Feature::ContributionPct, 4).unwrap();
        assert_eq!((s.mean, s.std_dev, s.variance), (10.0, 0.0, 0.0));
        assert_eq!(s.histogram.len(), 1);
        assert_eq!(s.histogram[0].count, 3);
    }

    #[test]
    fn two_point_histogram() {
        let s = summarize(&[rec(0.0, None), rec(100.0, None)], Feature::ContributionPct, 2).unwrap();
        assert_eq!(s.mean, 50.0);
        assert_eq!(
            s.histogram,
            vec![
                HistogramBin { lower: 0.0, upper: 50.0, count: 1 },
                HistogramBin { lower: 50.0, upper: 100.0, count: 1 },
            ]
        );
    }

    #[test]
    fn ic_score_skips_missing() {
        let records = [rec(10.0, Some(2.0)), rec(20.0, None), rec(30.0, Some(4.0))];
        let s = summarize(&records, Feature::IcScore, 5).unwrap();
        assert_eq!(s.count, 2);
        assert_eq!(s.mean, 3.0);
        assert_eq!(s.histogram.iter().map(|b| b.count).sum::<usize>(), 2);
        assert_eq!(
            summarize(&[rec(1.0, None)], Feature::IcScore, 5),
            Err(StatsError::FeatureAbsent(Feature::IcScore))
        );
        assert_eq!(summarize(&records, Feature::IcScore, 0), Err(StatsError::NoBins));
    }

    #[test]
    fn feature_selection() {
        let wide = summarize_values(&[0.0, 100.0], Feature::ContributionPct, 2).unwrap();
        let narrow = summarize_values(&[0.0, 20.0], Feature::IcScore, 2).unwrap();
        assert_eq!(select_linkage_feature(&wide, &narrow).selected, Feature::ContributionPct);

        let same = summarize_values(&[5.0, 105.0], Feature::IcScore, 2).unwrap();
        let tie = select_linkage_feature(&wide, &same);
        assert_eq!(tie.selected, Feature::ContributionPct);
        assert!(tie.advisory.is_none());

        let wider = summarize_values(&[0.0, 400.0], Feature::IcScore, 2).unwrap();
        let choice = select_linkage_feature(&wide, &wider);
        assert_eq!(choice.selected, Feature::IcScore);
        assert!(choice.advisory.unwrap().contains("linkage still uses contribution_pct"));
    }

    #[test]
    fn apportioning() {
        assert_eq!(apportion_ic_score(12.0, 25.0), 3.0);
    }
}
