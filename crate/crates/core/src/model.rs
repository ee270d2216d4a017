//! Core domain records shared by every other module.

use std::collections::BTreeSet;
use std::fmt;
use std::str::FromStr;

use num_rational::Ratio;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::taxonomy::{NetworkClass, Topic};

/// Exact conflict value in `[0, 1]`.
pub type Conflict = Ratio<u64>;

/// Ecosystem-scoped identifier of a library, rendered as `group:artifact`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct LibraryCoordinate {
    pub ecosystem: String,
    pub group: String,
    pub artifact: String,
}

pub const DEFAULT_ECOSYSTEM: &str = "maven";

impl LibraryCoordinate {
    pub fn new(group: &str, artifact: &str) -> Result<Self> {
        Self::parse(&format!("{group}:{artifact}"))
    }

    /// Parses `group:artifact`. Whitespace around the line is trimmed; nothing
    /// else is normalised, coordinates stay case-sensitive.
    pub fn parse(line: &str) -> Result<Self> {
        let trimmed = line.trim();
        let malformed = |reason| Error::MalformedCoordinate {
            input: trimmed.to_string(),
            reason,
        };
        let mut parts = trimmed.split(':');
        let (group, artifact) = match (parts.next(), parts.next(), parts.next()) {
            (Some(g), Some(a), None) => (g, a),
            (_, None, _) => return Err(malformed("expected group:artifact")),
            _ => return Err(malformed("more than one ':'")),
        };
        if group.is_empty() || artifact.is_empty() {
            return Err(malformed("empty segment"));
        }
        if group.chars().chain(artifact.chars()).any(char::is_whitespace) {
            return Err(malformed("whitespace inside coordinate"));
        }
        Ok(LibraryCoordinate {
            ecosystem: DEFAULT_ECOSYSTEM.to_string(),
            group: group.to_string(),
            artifact: artifact.to_string(),
        })
    }

    pub fn with_ecosystem(mut self, ecosystem: impl Into<String>) -> Self {
        self.ecosystem = ecosystem.into();
        self
    }
}

pub fn parse_coordinate(line: &str) -> Result<LibraryCoordinate> {
    LibraryCoordinate::parse(line)
}

impl fmt::Display for LibraryCoordinate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.group, self.artifact)
    }
}

impl FromStr for LibraryCoordinate {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        LibraryCoordinate::parse(s)
    }
}

/// The four kinds of descriptive source collected per library.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum SourceKind {
    RegistryEntry,
    Repository,
    Website,
    WikiDoc,
}

impl SourceKind {
    pub const ALL: [SourceKind; 4] = [
        SourceKind::RegistryEntry,
        SourceKind::Repository,
        SourceKind::Website,
        SourceKind::WikiDoc,
    ];

    pub fn column(self) -> &'static str {
        match self {
            SourceKind::RegistryEntry => "registry_entry",
            SourceKind::Repository => "repository",
            SourceKind::Website => "website",
            SourceKind::WikiDoc => "wiki_doc",
        }
    }
}

/// At most one public http(s) link per source kind.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct SourceSet {
    pub registry_entry: Option<String>,
    pub repository: Option<String>,
    pub website: Option<String>,
    pub wiki_doc: Option<String>,
}

impl SourceSet {
    pub fn get(&self, kind: SourceKind) -> Option<&str> {
        match kind {
            SourceKind::RegistryEntry => self.registry_entry.as_deref(),
            SourceKind::Repository => self.repository.as_deref(),
            SourceKind::Website => self.website.as_deref(),
            SourceKind::WikiDoc => self.wiki_doc.as_deref(),
        }
    }

    /// Sets a link after validating it. A blank value clears the slot.
    pub fn set(&mut self, kind: SourceKind, url: &str) -> Result<()> {
        let value = if url.trim().is_empty() {
            None
        } else {
            Some(validate_url(url)?)
        };
        match kind {
            SourceKind::RegistryEntry => self.registry_entry = value,
            SourceKind::Repository => self.repository = value,
            SourceKind::Website => self.website = value,
            SourceKind::WikiDoc => self.wiki_doc = value,
        }
        Ok(())
    }

    pub fn present(&self) -> usize {
        SourceKind::ALL
            .iter()
            .filter(|k| self.get(**k).is_some())
            .count()
    }

    pub fn validate(&self) -> Result<()> {
        for kind in SourceKind::ALL {
            if let Some(url) = self.get(kind) {
                validate_url(url)?;
            }
        }
        Ok(())
    }
}

fn validate_url(raw: &str) -> Result<String> {
    let trimmed = raw.trim();
    let invalid = |reason: &str| Error::InvalidUrl {
        url: trimmed.to_string(),
        reason: reason.to_string(),
    };
    let parsed = url::Url::parse(trimmed).map_err(|e| invalid(&e.to_string()))?;
    if !matches!(parsed.scheme(), "http" | "https") {
        return Err(invalid("scheme must be http or https"));
    }
    if parsed.host_str().map_or(true, str::is_empty) {
        return Err(invalid("missing host"));
    }
    Ok(trimmed.to_string())
}

/// A CVSS base score with the one-decimal precision it is published with,
/// stored as an integer number of tenths.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(try_from = "f64", into = "f64")]
pub struct Score(u8);

impl Score {
    pub const MAX_TENTHS: u8 = 100;

    pub fn from_tenths(tenths: u8) -> Result<Score> {
        if tenths > Self::MAX_TENTHS {
            return Err(Error::InvalidScore(format!("{tenths} tenths")));
        }
        Ok(Score(tenths))
    }

    pub fn tenths(self) -> u8 {
        self.0
    }

    pub fn as_f64(self) -> f64 {
        f64::from(self.0) / 10.0
    }

    /// Parses `"9.8"`, `"10"`, `"7.0"`. More than one decimal is rejected
    /// unless the extra digits are zeros (`"9.80"`).
    pub fn parse(s: &str) -> Result<Score> {
        let t = s.trim();
        let bad = || Error::InvalidScore(t.to_string());
        let (int, frac) = match t.split_once('.') {
            Some((i, f)) => (i, f),
            None => (t, ""),
        };
        if int.is_empty() || !int.bytes().all(|b| b.is_ascii_digit()) {
            return Err(bad());
        }
        if !frac.bytes().all(|b| b.is_ascii_digit()) {
            return Err(bad());
        }
        if frac.len() > 1 && frac[1..].bytes().any(|b| b != b'0') {
            return Err(bad());
        }
        let whole: u32 = int.parse().map_err(|_| bad())?;
        let tenth = frac.bytes().next().map_or(0, |b| u32::from(b - b'0'));
        let tenths = whole.checked_mul(10).and_then(|w| w.checked_add(tenth));
        match tenths {
            Some(v) if v <= u32::from(Self::MAX_TENTHS) => Ok(Score(v as u8)),
            _ => Err(bad()),
        }
    }

    pub fn from_f64(v: f64) -> Result<Score> {
        if !(0.0..=10.0).contains(&v) {
            return Err(Error::InvalidScore(v.to_string()));
        }
        let tenths = (v * 10.0).round();
        if ((tenths / 10.0) - v).abs() > 1e-6 {
            return Err(Error::InvalidScore(v.to_string()));
        }
        Ok(Score(tenths as u8))
    }
}

impl fmt::Display for Score {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}.{}", self.0 / 10, self.0 % 10)
    }
}

impl FromStr for Score {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Score::parse(s)
    }
}

impl TryFrom<f64> for Score {
    type Error = Error;

    fn try_from(v: f64) -> Result<Self> {
        Score::from_f64(v)
    }
}

impl From<Score> for f64 {
    fn from(s: Score) -> f64 {
        s.as_f64()
    }
}

/// CVSS v3 Attack Vector metric.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum AttackVector {
    Network,
    #[serde(rename = "ADJACENT_NETWORK", alias = "ADJACENT")]
    Adjacent,
    Local,
    Physical,
}

impl AttackVector {
    /// Spelling used by the NVD JSON feed and the exported AV sheet.
    pub fn label(self) -> &'static str {
        match self {
            AttackVector::Network => "NETWORK",
            AttackVector::Adjacent => "ADJACENT_NETWORK",
            AttackVector::Local => "LOCAL",
            AttackVector::Physical => "PHYSICAL",
        }
    }

    pub fn parse(s: &str) -> Result<AttackVector> {
        match s.trim().to_ascii_uppercase().as_str() {
            "NETWORK" | "N" => Ok(AttackVector::Network),
            "ADJACENT_NETWORK" | "ADJACENT" | "A" => Ok(AttackVector::Adjacent),
            "LOCAL" | "L" => Ok(AttackVector::Local),
            "PHYSICAL" | "P" => Ok(AttackVector::Physical),
            _ => Err(Error::UnknownAttackVector(s.trim().to_string())),
        }
    }
}

impl fmt::Display for AttackVector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

/// Validated `CVE-YYYY-NNNN...` identifier.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub struct CveId(String);

impl CveId {
    pub fn parse(s: &str) -> Result<CveId> {
        let t = s.trim();
        let bad = || Error::InvalidCveId(t.to_string());
        let rest = t.strip_prefix("CVE-").ok_or_else(bad)?;
        let (year, seq) = rest.split_once('-').ok_or_else(bad)?;
        let digits = |p: &str| p.bytes().all(|b| b.is_ascii_digit());
        if year.len() != 4 || !digits(year) || seq.len() < 4 || !digits(seq) {
            return Err(bad());
        }
        Ok(CveId(t.to_string()))
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for CveId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl TryFrom<String> for CveId {
    type Error = Error;

    fn try_from(s: String) -> Result<Self> {
        CveId::parse(&s)
    }
}

impl From<CveId> for String {
    fn from(c: CveId) -> String {
        c.0
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct VulnerabilityRecord {
    pub cve_id: CveId,
    /// Score used when selecting libraries (e.g. copied from a vendor database).
    pub cvss_selection: Option<Score>,
    /// Authoritative NVD base score, used for reporting.
    pub cvss_nvd: Option<Score>,
    pub attack_vector: Option<AttackVector>,
    pub affected_version: Option<String>,
}

impl VulnerabilityRecord {
    pub fn new(cve_id: CveId) -> Self {
        VulnerabilityRecord {
            cve_id,
            cvss_selection: None,
            cvss_nvd: None,
            attack_vector: None,
            affected_version: None,
        }
    }

    pub fn is_network(&self) -> bool {
        self.attack_vector == Some(AttackVector::Network)
    }
}

/// True iff any record carries `AV:N`.
pub fn has_network_vector(vulns: &[VulnerabilityRecord]) -> bool {
    vulns.iter().any(VulnerabilityRecord::is_network)
}

/// Keeps libraries with at least one record whose selection score reaches
/// `floor`. Retained libraries are not trimmed.
pub fn filter_by_severity(
    libs: &[(LibraryCoordinate, Vec<VulnerabilityRecord>)],
    floor: Score,
) -> Vec<LibraryCoordinate> {
    libs.iter()
        .filter(|(_, vulns)| {
            vulns
                .iter()
                .any(|v| v.cvss_selection.is_some_and(|s| s >= floor))
        })
        .map(|(lib, _)| lib.clone())
        .collect()
}

/// Opaque actor identifier.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ActorId(pub String);

impl ActorId {
    pub fn new(id: impl Into<String>) -> Self {
        ActorId(id.into())
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for ActorId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl From<&str> for ActorId {
    fn from(s: &str) -> Self {
        ActorId(s.to_string())
    }
}

/// One assessor's categorisation of one library.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Assessment {
    pub assessor_id: ActorId,
    /// Entry order is preserved; it drives the pair reduction used for kappa.
    pub choices: Vec<Topic>,
    pub done: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub comment: Option<String>,
}

impl Assessment {
    pub fn new(assessor: impl Into<ActorId>, choices: Vec<Topic>, done: bool) -> Self {
        Assessment {
            assessor_id: assessor.into(),
            choices,
            done,
            comment: None,
        }
    }

    pub fn with_comment(mut self, comment: impl Into<String>) -> Self {
        let c = comment.into();
        self.comment = if c.trim().is_empty() { None } else { Some(c) };
        self
    }

    pub fn validate(&self, max_choices: usize) -> Result<()> {
        validate_choices(&self.choices, max_choices)
    }
}

pub fn validate_choices(choices: &[Topic], max_choices: usize) -> Result<()> {
    if choices.is_empty() {
        return Err(Error::EmptyEntry(0));
    }
    if choices.len() > max_choices {
        return Err(Error::TooManyChoices {
            max: max_choices,
            got: choices.len(),
        });
    }
    let mut seen = BTreeSet::new();
    for t in choices {
        if !seen.insert(*t) {
            return Err(Error::DuplicateChoice(*t));
        }
    }
    Ok(())
}

/// Per-library array of K category sets, one per assessor.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AssessmentMatrix {
    pub library: Option<LibraryCoordinate>,
    pub entries: Vec<Vec<Topic>>,
}

impl AssessmentMatrix {
    pub fn new(entries: Vec<Vec<Topic>>) -> Self {
        AssessmentMatrix {
            library: None,
            entries,
        }
    }

    pub fn for_library(library: LibraryCoordinate, entries: Vec<Vec<Topic>>) -> Self {
        AssessmentMatrix {
            library: Some(library),
            entries,
        }
    }

    pub fn assessors(&self) -> usize {
        self.entries.len()
    }

    pub fn sets(&self) -> Vec<BTreeSet<Topic>> {
        self.entries
            .iter()
            .map(|e| e.iter().copied().collect())
            .collect()
    }

    /// Categories chosen by every assessor.
    pub fn intersection(&self) -> BTreeSet<Topic> {
        let mut sets = self.sets().into_iter();
        let first = sets.next().unwrap_or_default();
        sets.fold(first, |acc, s| acc.intersection(&s).copied().collect())
    }

    /// Categories chosen by any assessor.
    pub fn union(&self) -> BTreeSet<Topic> {
        self.entries.iter().flatten().copied().collect()
    }
}

/// Arbitration scenario derived from an assessment.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "candidates")]
pub enum Scenario {
    /// A single coincident category; no arbitration.
    AutoFinal(Topic),
    /// Not ambiguous but several coincident categories; pick one of them.
    ChooseOne(BTreeSet<Topic>),
    /// Ambiguous; pick from everything any assessor chose.
    ChooseFromUnion(BTreeSet<Topic>),
}

impl Scenario {
    pub fn needs_arbitration(&self) -> bool {
        !matches!(self, Scenario::AutoFinal(_))
    }

    pub fn candidates(&self) -> BTreeSet<Topic> {
        match self {
            Scenario::AutoFinal(t) => [*t].into_iter().collect(),
            Scenario::ChooseOne(s) | Scenario::ChooseFromUnion(s) => s.clone(),
        }
    }

    pub fn kind(&self) -> ScenarioKind {
        match self {
            Scenario::AutoFinal(_) => ScenarioKind::AutoFinal,
            Scenario::ChooseOne(_) => ScenarioKind::ChooseOne,
            Scenario::ChooseFromUnion(_) => ScenarioKind::ChooseFromUnion,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum ScenarioKind {
    AutoFinal,
    ChooseOne,
    ChooseFromUnion,
}

impl ScenarioKind {
    pub const ALL: [ScenarioKind; 3] = [
        ScenarioKind::AutoFinal,
        ScenarioKind::ChooseOne,
        ScenarioKind::ChooseFromUnion,
    ];

    pub fn label(self) -> &'static str {
        match self {
            ScenarioKind::AutoFinal => "AutoFinal",
            ScenarioKind::ChooseOne => "ChooseOne",
            ScenarioKind::ChooseFromUnion => "ChooseFromUnion",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConflictReport {
    #[serde(with = "ratio_str")]
    pub conflict: Conflict,
    pub ambiguous: bool,
    pub scenario: Scenario,
}

/// Keep or escalate a library's class after revision.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RevisionDecision {
    Keep,
    Escalate,
}

impl RevisionDecision {
    pub fn label(self) -> &'static str {
        match self {
            RevisionDecision::Keep => "KEEP",
            RevisionDecision::Escalate => "ESCALATE",
        }
    }

    pub fn parse(s: &str) -> Result<RevisionDecision> {
        match s.trim().to_ascii_uppercase().as_str() {
            "KEEP" => Ok(RevisionDecision::Keep),
            "ESCALATE" => Ok(RevisionDecision::Escalate),
            other => Err(Error::format(format!("unknown revision decision {other:?}"))),
        }
    }
}

/// Outcome of the final arbitration step for one library.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ArbitrationRecord {
    /// `None` when no arbitrator was involved, or when the record was
    /// re-imported from a sheet that does not name one.
    pub arbitrator_id: Option<ActorId>,
    pub final_category: Topic,
    /// True when the category came from an arbitrator rather than coincidence.
    pub arbitrated: bool,
    pub revised_class: NetworkClass,
    pub revision_marked: bool,
    pub revision: Option<RevisionDecision>,
    pub comment: String,
}

impl ArbitrationRecord {
    pub fn append_comment(&mut self, text: &str) {
        let text = text.trim();
        if text.is_empty() {
            return;
        }
        if self.comment.is_empty() {
            self.comment = text.to_string();
        } else {
            self.comment = format!("{}; {}", self.comment, text);
        }
    }
}

/// Protocol parameters. Defaults: two assessors, two choices, threshold 1/2,
/// selection floor 7.0.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ProtocolConfig {
    pub assessors: usize,
    pub max_choices: usize,
    #[serde(with = "ratio_str")]
    pub threshold: Conflict,
    pub severity_floor: Score,
}

impl Default for ProtocolConfig {
    fn default() -> Self {
        ProtocolConfig {
            assessors: 2,
            max_choices: 2,
            threshold: Ratio::new(1, 2),
            severity_floor: Score(70),
        }
    }
}

impl ProtocolConfig {
    pub fn validate(&self) -> Result<()> {
        if self.assessors < 2 {
            return Err(Error::InvalidConfig("at least two assessors".into()));
        }
        if self.max_choices < 1 {
            return Err(Error::InvalidConfig("max choices must be >= 1".into()));
        }
        if self.threshold >= Ratio::from_integer(1) {
            return Err(Error::InvalidConfig("threshold must lie in [0, 1)".into()));
        }
        Ok(())
    }
}

/// Parses `"1/2"`, `"0.5"` or `"0"` into an exact ratio.
pub fn parse_ratio(s: &str) -> Result<Conflict> {
    let t = s.trim();
    let bad = || Error::InvalidConfig(format!("not a ratio: {t:?}"));
    if let Some((n, d)) = t.split_once('/') {
        let n: u64 = n.trim().parse().map_err(|_| bad())?;
        let d: u64 = d.trim().parse().map_err(|_| bad())?;
        if d == 0 {
            return Err(bad());
        }
        return Ok(Ratio::new(n, d));
    }
    let (int, frac) = t.split_once('.').unwrap_or((t, ""));
    if int.is_empty() && frac.is_empty() {
        return Err(bad());
    }
    if frac.len() > 18 {
        return Err(bad());
    }
    let whole: u64 = if int.is_empty() { 0 } else { int.parse().map_err(|_| bad())? };
    let den = 10u64.pow(frac.len() as u32);
    let num: u64 = if frac.is_empty() { 0 } else { frac.parse().map_err(|_| bad())? };
    Ok(Ratio::new(whole * den + num, den))
}

/// Renders a ratio as `"n/d"` (or `"n"` when integral).
pub fn ratio_to_string(r: &Conflict) -> String {
    if *r.denom() == 1 {
        r.numer().to_string()
    } else {
        format!("{}/{}", r.numer(), r.denom())
    }
}

pub(crate) mod ratio_str {
    use super::{parse_ratio, ratio_to_string, Conflict};
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(r: &Conflict, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&ratio_to_string(r))
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Conflict, D::Error> {
        let s = String::deserialize(d)?;
        parse_ratio(&s).map_err(serde::de::Error::custom)
    }
}

/// One finalized library, mirroring the columns of the arbitration sheet.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DatasetRow {
    pub coordinate: LibraryCoordinate,
    /// `(category, alternate)` per assessor, in assessor order.
    pub assessor_choices: Vec<(Topic, Option<Topic>)>,
    pub done: Vec<bool>,
    pub conflict: Conflict,
    pub ambiguous: bool,
    pub coincident_category: Option<Topic>,
    pub arbitrated_category: Option<Topic>,
    pub final_category: Topic,
    pub category_class: NetworkClass,
    pub network_vector: bool,
    pub revision: Option<RevisionDecision>,
    pub revised_class: NetworkClass,
    pub comment: String,
}

impl DatasetRow {
    pub fn validate(&self, vulns: &[VulnerabilityRecord]) -> Result<()> {
        let populated = match (self.coincident_category, self.arbitrated_category) {
            (Some(t), None) | (None, Some(t)) => t,
            _ => {
                return Err(Error::format(format!(
                    "{}: exactly one of coincident/arbitrated category must be set",
                    self.coordinate
                )))
            }
        };
        if populated != self.final_category {
            return Err(Error::format(format!(
                "{}: final category disagrees with its source column",
                self.coordinate
            )));
        }
        if self.network_vector != has_network_vector(vulns) {
            return Err(Error::format(format!(
                "{}: AV:N flag disagrees with vulnerability records",
                self.coordinate
            )));
        }
        Ok(())
    }
}
