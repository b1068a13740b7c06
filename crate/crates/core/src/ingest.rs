//! Parsing and aggregation of raw collaboration rows.
//!
//! Input is a delimited table with a header row naming the columns
//! `project_id`, `member_id`, `contribution_pct`, `ic_score` and
//! `project_type`. Column order is free; `ic_score` may be omitted
//! entirely or left empty per row.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::io::{Read, Write};
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

/// Per-project contribution sums up to this value are accepted silently.
pub const CONTRIBUTION_SUM_TOLERANCE: f64 = 100.5;

const REQUIRED_COLUMNS: [&str; 4] = ["project_id", "member_id", "contribution_pct", "project_type"];
const IC_COLUMN: &str = "ic_score";
const UTF8_BOM: &[u8] = &[0xEF, 0xBB, 0xBF];

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum ProjectType {
    #[serde(rename = "IP")]
    Ip,
    Paper,
    Prototype,
}

impl ProjectType {
    pub const ALL: [ProjectType; 3] = [ProjectType::Ip, ProjectType::Paper, ProjectType::Prototype];

    pub fn as_str(self) -> &'static str {
        match self {
            ProjectType::Ip => "IP",
            ProjectType::Paper => "Paper",
            ProjectType::Prototype => "Prototype",
        }
    }

    pub fn all() -> BTreeSet<ProjectType> {
        Self::ALL.into_iter().collect()
    }
}

impl fmt::Display for ProjectType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ProjectType {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "ip" => Ok(ProjectType::Ip),
            "paper" => Ok(ProjectType::Paper),
            "prototype" => Ok(ProjectType::Prototype),
            other => Err(format!("unknown project type {other:?}")),
        }
    }
}

/// One input row: a member's share in one project.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ContributionRecord {
    pub project_id: String,
    pub member_id: String,
    pub contribution_pct: f64,
    pub ic_score: Option<f64>,
    pub project_type: ProjectType,
}

impl ContributionRecord {
    pub fn new(
        project_id: impl Into<String>,
        member_id: impl Into<String>,
        contribution_pct: f64,
        ic_score: Option<f64>,
        project_type: ProjectType,
    ) -> Self {
        Self {
            project_id: project_id.into(),
            member_id: member_id.into(),
            contribution_pct,
            ic_score,
            project_type,
        }
    }

    fn validate(&self) -> Result<(), String> {
        if self.project_id.is_empty() {
            return Err("empty project_id".into());
        }
        if self.member_id.is_empty() {
            return Err("empty member_id".into());
        }
        if !self.contribution_pct.is_finite() || !(0.0..=100.0).contains(&self.contribution_pct) {
            return Err(format!("contribution_pct out of range: {}", self.contribution_pct));
        }
        if let Some(ic) = self.ic_score {
            if !ic.is_finite() || ic < 0.0 {
                return Err(format!("ic_score must be a nonnegative number, got {ic}"));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
#[error("row {row}: {reason}")]
pub struct RowError {
    /// 1-based line number in the source, header included.
    pub row: u64,
    pub reason: String,
}

#[derive(Debug, Error)]
pub enum IngestError {
    #[error("failed to read input: {0}")]
    Io(#[from] std::io::Error),
    #[error("input is not valid UTF-8 (byte offset {0})")]
    Encoding(usize),
    #[error("missing header row")]
    MissingHeader,
    #[error("missing required column {0:?}")]
    MissingColumn(&'static str),
    #[error(transparent)]
    Row(#[from] RowError),
    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
    #[error("duplicate member {member_id:?} in project {project_id:?}")]
    DuplicatePair { project_id: String, member_id: String },
    #[error("project {project_id:?} listed with conflicting types {first} and {second}")]
    ConflictingType {
        project_id: String,
        first: ProjectType,
        second: ProjectType,
    },
    #[error("contributions of project {project_id:?} sum to {sum}, above {CONTRIBUTION_SUM_TOLERANCE}")]
    ContributionSum { project_id: String, sum: f64 },
    #[error("invalid record: {0}")]
    InvalidRecord(String),
}

#[derive(Debug, Clone, Copy)]
pub struct ParseOptions {
    pub delimiter: u8,
    /// Skip malformed rows and report them instead of failing.
    pub lenient: bool,
}

impl Default for ParseOptions {
    fn default() -> Self {
        Self {
            delimiter: b',',
            lenient: false,
        }
    }
}

#[derive(Debug, Clone, Default)]
pub struct ParsedRecords {
    pub records: Vec<ContributionRecord>,
    /// Rows dropped in lenient mode.
    pub skipped: Vec<RowError>,
}

struct ColumnMap {
    project: usize,
    member: usize,
    contribution: usize,
    project_type: usize,
    ic: Option<usize>,
    width: usize,
}

impl ColumnMap {
    fn from_header(header: &csv::StringRecord) -> Result<Self, IngestError> {
        let find = |name: &str| header.iter().position(|h| h.trim() == name);
        let mut idx = [0usize; 4];
        for (slot, name) in idx.iter_mut().zip(REQUIRED_COLUMNS) {
            *slot = find(name).ok_or(IngestError::MissingColumn(name))?;
        }
        Ok(Self {
            project: idx[0],
            member: idx[1],
            contribution: idx[2],
            project_type: idx[3],
            ic: find(IC_COLUMN),
            width: header.len(),
        })
    }

    fn record(&self, row: &csv::StringRecord) -> Result<ContributionRecord, String> {
        if row.len() != self.width {
            return Err(format!("expected {} columns, found {}", self.width, row.len()));
        }
        let contribution_raw = row[self.contribution].trim();
        let contribution_pct: f64 = contribution_raw
            .parse()
            .map_err(|_| format!("unparseable contribution_pct {contribution_raw:?}"))?;
        let ic_score = match self.ic.map(|i| row[i].trim()) {
            None | Some("") => None,
            Some(raw) => Some(
                raw.parse::<f64>()
                    .map_err(|_| format!("unparseable ic_score {raw:?}"))?,
            ),
        };
        let project_type = row[self.project_type].parse()?;
        let record = ContributionRecord {
            project_id: row[self.project].trim().to_owned(),
            member_id: row[self.member].trim().to_owned(),
            contribution_pct,
            ic_score,
            project_type,
        };
        record.validate()?;
        Ok(record)
    }
}

/// Parses a delimited table into records, in input order. Blank lines are skipped.
pub fn parse_records<R: Read>(mut source: R, options: ParseOptions) -> Result<ParsedRecords, IngestError> {
    let mut bytes = Vec::new();
    source.read_to_end(&mut bytes)?;
    let body = bytes.strip_prefix(UTF8_BOM).unwrap_or(&bytes);
    if let Err(e) = std::str::from_utf8(body) {
        return Err(IngestError::Encoding(e.valid_up_to()));
    }

    let mut reader = csv::ReaderBuilder::new()
        .delimiter(options.delimiter)
        .has_headers(false)
        .flexible(true)
        .from_reader(body);

    let mut rows = reader.records();
    let header = match rows.next() {
        Some(h) => h?,
        None => return Err(IngestError::MissingHeader),
    };
    let columns = ColumnMap::from_header(&header)?;

    let mut parsed = ParsedRecords::default();
    for row in rows {
        let row = row?;
        if row.iter().all(|f| f.trim().is_empty()) {
            continue;
        }
        let line = row.position().map_or(0, |p| p.line());
        match columns.record(&row) {
            Ok(r) => parsed.records.push(r),
            Err(reason) => {
                let err = RowError { row: line, reason };
                if !options.lenient {
                    return Err(err.into());
                }
                parsed.skipped.push(err);
            }
        }
    }
    Ok(parsed)
}

/// Writes records in the schema read by [`parse_records`].
pub fn write_records<W: Write>(writer: W, records: &[ContributionRecord]) -> Result<(), IngestError> {
    let mut out = csv::WriterBuilder::new().from_writer(writer);
    out.write_record(["project_id", "member_id", "contribution_pct", "ic_score", "project_type"])?;
    for r in records {
        let ic = r.ic_score.map(|v| v.to_string()).unwrap_or_default();
        out.write_record([
            r.project_id.as_str(),
            r.member_id.as_str(),
            &r.contribution_pct.to_string(),
            &ic,
            r.project_type.as_str(),
        ])?;
    }
    out.flush()?;
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Membership {
    pub contribution_pct: f64,
    pub ic_score: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Project {
    pub id: String,
    pub project_type: ProjectType,
    pub members: BTreeMap<String, Membership>,
}

impl Project {
    pub fn new(id: impl Into<String>, project_type: ProjectType) -> Self {
        Self {
            id: id.into(),
            project_type,
            members: BTreeMap::new(),
        }
    }

    /// Builder-style helper, mostly for tests.
    pub fn with_member(mut self, member_id: impl Into<String>, contribution_pct: f64) -> Self {
        self.members.insert(
            member_id.into(),
            Membership {
                contribution_pct,
                ic_score: None,
            },
        );
        self
    }

    pub fn contribution(&self, member_id: &str) -> Option<f64> {
        self.members.get(member_id).map(|m| m.contribution_pct)
    }

    pub fn contribution_sum(&self) -> f64 {
        self.members.values().map(|m| m.contribution_pct).sum()
    }
}

/// Projects keyed by id plus the member → projects inverted index.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Dataset {
    projects: BTreeMap<String, Project>,
    member_index: BTreeMap<String, BTreeSet<String>>,
}

impl Dataset {
    pub fn from_projects(projects: impl IntoIterator<Item = Project>) -> Self {
        let projects: BTreeMap<String, Project> = projects.into_iter().map(|p| (p.id.clone(), p)).collect();
        let member_index = index_members(&projects);
        Self { projects, member_index }
    }

    pub fn projects(&self) -> impl ExactSizeIterator<Item = &Project> {
        self.projects.values()
    }

    pub fn project(&self, id: &str) -> Option<&Project> {
        self.projects.get(id)
    }

    pub fn project_ids(&self) -> impl ExactSizeIterator<Item = &str> {
        self.projects.keys().map(String::as_str)
    }

    pub fn len(&self) -> usize {
        self.projects.len()
    }

    pub fn is_empty(&self) -> bool {
        self.projects.is_empty()
    }

    pub fn member_index(&self) -> &BTreeMap<String, BTreeSet<String>> {
        &self.member_index
    }

    pub fn projects_of(&self, member_id: &str) -> Option<&BTreeSet<String>> {
        self.member_index.get(member_id)
    }

    pub fn record_count(&self) -> usize {
        self.projects.values().map(|p| p.members.len()).sum()
    }

    /// Flattens back into records, sorted by (project, member).
    pub fn to_records(&self) -> Vec<ContributionRecord> {
        self.projects
            .values()
            .flat_map(|p| {
                p.members.iter().map(move |(m, ms)| ContributionRecord {
                    project_id: p.id.clone(),
                    member_id: m.clone(),
                    contribution_pct: ms.contribution_pct,
                    ic_score: ms.ic_score,
                    project_type: p.project_type,
                })
            })
            .collect()
    }

    /// SHA-256 over the canonical record listing, hex encoded.
    pub fn fingerprint(&self) -> String {
        let mut hasher = Sha256::new();
        for r in self.to_records() {
            let ic = r.ic_score.map(f64::to_bits).unwrap_or(u64::MAX);
            hasher.update(r.project_id.as_bytes());
            hasher.update([0u8]);
            hasher.update(r.member_id.as_bytes());
            hasher.update([0u8]);
            hasher.update(r.contribution_pct.to_bits().to_le_bytes());
            hasher.update(ic.to_le_bytes());
            hasher.update(r.project_type.as_str().as_bytes());
            hasher.update([b'\n']);
        }
        hex(&hasher.finalize())
    }
}

pub(crate) fn hex(bytes: &[u8]) -> String {
    bytes.iter().map(|b| format!("{b:02x}")).collect()
}

fn index_members(projects: &BTreeMap<String, Project>) -> BTreeMap<String, BTreeSet<String>> {
    let mut index: BTreeMap<String, BTreeSet<String>> = BTreeMap::new();
    for p in projects.values() {
        for m in p.members.keys() {
            index.entry(m.clone()).or_default().insert(p.id.clone());
        }
    }
    index
}

#[derive(Debug, Clone, Copy, Default)]
pub struct AggregateOptions {
    /// Fail instead of warn when a project's contributions exceed the tolerance.
    pub strict: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub enum AggregateWarning {
    ContributionSum { project_id: String, sum: f64 },
}

impl fmt::Display for AggregateWarning {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            AggregateWarning::ContributionSum { project_id, sum } => write!(
                f,
                "contributions of project {project_id:?} sum to {sum}, above {CONTRIBUTION_SUM_TOLERANCE}"
            ),
        }
    }
}

#[derive(Debug, Clone)]
pub struct Aggregated {
    pub dataset: Dataset,
    pub warnings: Vec<AggregateWarning>,
}

/// Groups validated records into projects and builds the member index.
pub fn aggregate(records: &[ContributionRecord], options: AggregateOptions) -> Result<Aggregated, IngestError> {
    let mut projects: BTreeMap<String, Project> = BTreeMap::new();
    for r in records {
        r.validate().map_err(IngestError::InvalidRecord)?;
        let project = projects
            .entry(r.project_id.clone())
            .or_insert_with(|| Project::new(r.project_id.clone(), r.project_type));
        if project.project_type != r.project_type {
            return Err(IngestError::ConflictingType {
                project_id: r.project_id.clone(),
                first: project.project_type,
                second: r.project_type,
            });
        }
        let membership = Membership {
            contribution_pct: r.contribution_pct,
            ic_score: r.ic_score,
        };
        if project.members.insert(r.member_id.clone(), membership).is_some() {
            return Err(IngestError::DuplicatePair {
                project_id: r.project_id.clone(),
                member_id: r.member_id.clone(),
            });
        }
    }

    let mut warnings = Vec::new();
    for p in projects.values() {
        let sum = p.contribution_sum();
        if sum > CONTRIBUTION_SUM_TOLERANCE {
            if options.strict {
                return Err(IngestError::ContributionSum {
                    project_id: p.id.clone(),
                    sum,
                });
            }
            log::warn!("project {} contributions sum to {sum}", p.id);
            warnings.push(AggregateWarning::ContributionSum {
                project_id: p.id.clone(),
                sum,
            });
        }
    }

    Ok(Aggregated {
        dataset: Dataset::from_projects(projects.into_values()),
        warnings,
    })
}

/// Keeps only projects of the given types. An empty type set yields an empty dataset.
pub fn filter_by_type(d: &Dataset, types: &BTreeSet<ProjectType>) -> Dataset {
    Dataset::from_projects(
        d.projects
            .values()
            .filter(|p| types.contains(&p.project_type))
            .cloned(),
    )
}
