//! File importers: library lists, source registries, CVE lists, assessment
//! and decision sheets. NVD fetching itself lives in the `crosscat-nvd`
//! crate; this module only defines what it returns and how results are
//! attached.
//!
//! Every importer parses the whole input before returning, so a failure
//! never leaves half an import behind.

use std::collections::{HashMap, HashSet};
use std::io::Read;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{
    AttackVector, CveId, LibraryCoordinate, RevisionDecision, Score, SourceKind, SourceSet,
    VulnerabilityRecord,
};
use crate::taxonomy::Topic;

/// Score and attack vector for one CVE as reported by NVD.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct NvdResponse {
    pub cve_id: CveId,
    pub base_score: Option<Score>,
    pub attack_vector: Option<AttackVector>,
    /// Which CVSS block the values came from, e.g. `"3.1"`.
    pub cvss_version: Option<String>,
}

/// One coordinate per line; blank lines and `#` comments are skipped.
pub fn import_library_list(text: &str) -> Result<Vec<LibraryCoordinate>> {
    let mut seen = HashSet::new();
    let mut out = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line_no = i + 1;
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let coord = LibraryCoordinate::parse(line).map_err(|e| e.at_line(line_no))?;
        if !seen.insert(coord.clone()) {
            return Err(Error::DuplicateCoordinate {
                line: line_no,
                coordinate: coord.to_string(),
            });
        }
        out.push(coord);
    }
    Ok(out)
}

struct Sheet {
    headers: HashMap<String, usize>,
    rows: Vec<(usize, csv::StringRecord)>,
}

impl Sheet {
    fn read(input: impl Read) -> Result<Sheet> {
        let mut rdr = csv::ReaderBuilder::new()
            .flexible(true)
            .trim(csv::Trim::All)
            .from_reader(input);
        let headers = rdr
            .headers()?
            .iter()
            .enumerate()
            .map(|(i, h)| (h.to_ascii_lowercase(), i))
            .collect();
        let mut rows = Vec::new();
        for rec in rdr.records() {
            let rec = rec?;
            let line = rec.position().map_or(0, |p| p.line() as usize);
            if rec.iter().all(str::is_empty) {
                continue;
            }
            rows.push((line, rec));
        }
        Ok(Sheet { headers, rows })
    }

    fn col(&self, name: &str) -> Result<usize> {
        self.headers
            .get(name)
            .copied()
            .ok_or_else(|| Error::format(format!("missing column {name:?}")))
    }

    fn opt_col(&self, name: &str) -> Option<usize> {
        self.headers.get(name).copied()
    }
}

fn cell(rec: &csv::StringRecord, idx: usize) -> &str {
    rec.get(idx).unwrap_or("")
}

fn opt_cell(rec: &csv::StringRecord, idx: Option<usize>) -> Option<&str> {
    idx.map(|i| cell(rec, i)).filter(|s| !s.is_empty())
}

fn known_coordinate(
    raw: &str,
    known: &HashSet<LibraryCoordinate>,
) -> Result<LibraryCoordinate> {
    let coord = LibraryCoordinate::parse(raw)?;
    if !known.contains(&coord) {
        return Err(Error::UnknownLibrary(coord.to_string()));
    }
    Ok(coord)
}

/// Source registry CSV with columns `coordinate, registry_entry, repository,
/// website, wiki_doc`. Blank cells mean the source was not found.
pub fn import_sources(
    input: impl Read,
    known: &HashSet<LibraryCoordinate>,
) -> Result<Vec<(LibraryCoordinate, SourceSet)>> {
    let sheet = Sheet::read(input)?;
    let coord_col = sheet.col("coordinate")?;
    let kind_cols = SourceKind::ALL
        .iter()
        .map(|k| Ok((*k, sheet.col(k.column())?)))
        .collect::<Result<Vec<_>>>()?;
    let mut seen = HashSet::new();
    let mut out = Vec::new();
    for (line, rec) in &sheet.rows {
        let parse = || -> Result<(LibraryCoordinate, SourceSet)> {
            let coord = known_coordinate(cell(rec, coord_col), known)?;
            let mut set = SourceSet::default();
            for (kind, idx) in &kind_cols {
                set.set(*kind, cell(rec, *idx))?;
            }
            Ok((coord, set))
        };
        let (coord, set) = parse().map_err(|e| e.at_line(*line))?;
        if !seen.insert(coord.clone()) {
            return Err(Error::DuplicateCoordinate {
                line: *line,
                coordinate: coord.to_string(),
            });
        }
        out.push((coord, set));
    }
    Ok(out)
}

/// CVE list CSV: `coordinate, cve_id, selection_score` plus optional
/// `affected_version`, `cvss_nvd` and `attack_vector` columns (the latter two
/// let an offline, pre-enriched list be imported directly).
///
/// Row order is preserved; a CVE may belong to only one library.
pub fn import_cves(
    input: impl Read,
    known: &HashSet<LibraryCoordinate>,
) -> Result<Vec<(LibraryCoordinate, VulnerabilityRecord)>> {
    let sheet = Sheet::read(input)?;
    let coord_col = sheet.col("coordinate")?;
    let id_col = sheet.col("cve_id")?;
    let sel_col = sheet.opt_col("selection_score");
    let ver_col = sheet.opt_col("affected_version");
    let nvd_col = sheet.opt_col("cvss_nvd");
    let av_col = sheet.opt_col("attack_vector");
    let mut owner: HashMap<CveId, LibraryCoordinate> = HashMap::new();
    let mut out = Vec::new();
    for (line, rec) in &sheet.rows {
        let parse = || -> Result<(LibraryCoordinate, VulnerabilityRecord)> {
            let coord = known_coordinate(cell(rec, coord_col), known)?;
            let mut v = VulnerabilityRecord::new(CveId::parse(cell(rec, id_col))?);
            v.cvss_selection = opt_cell(rec, sel_col).map(Score::parse).transpose()?;
            v.affected_version = opt_cell(rec, ver_col).map(str::to_string);
            v.cvss_nvd = opt_cell(rec, nvd_col).map(Score::parse).transpose()?;
            v.attack_vector = opt_cell(rec, av_col).map(AttackVector::parse).transpose()?;
            Ok((coord, v))
        };
        let (coord, v) = parse().map_err(|e| e.at_line(*line))?;
        if let Some(prev) = owner.get(&v.cve_id) {
            return Err(Error::DuplicateCve {
                line: *line,
                cve_id: v.cve_id.to_string(),
                owner: prev.to_string(),
            });
        }
        owner.insert(v.cve_id.clone(), coord.clone());
        out.push((coord, v));
    }
    Ok(out)
}

/// One assessor's sheet row.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AssessmentRow {
    pub coordinate: LibraryCoordinate,
    pub choices: Vec<Topic>,
    pub done: bool,
    pub comment: Option<String>,
}

/// Assessment sheet: `coordinate, category, alternate, done[, comment]`.
/// `done` is `DONE` (any case), `yes`, `true` or blank.
pub fn import_assessments(
    input: impl Read,
    known: &HashSet<LibraryCoordinate>,
) -> Result<Vec<AssessmentRow>> {
    let sheet = Sheet::read(input)?;
    let coord_col = sheet.col("coordinate")?;
    let cat_col = sheet.col("category")?;
    let alt_col = sheet.opt_col("alternate");
    let done_col = sheet.opt_col("done");
    let comment_col = sheet.opt_col("comment");
    let mut seen = HashSet::new();
    let mut out = Vec::new();
    for (line, rec) in &sheet.rows {
        let parse = || -> Result<AssessmentRow> {
            let coordinate = known_coordinate(cell(rec, coord_col), known)?;
            let mut choices = Vec::new();
            if let Some(c) = opt_cell(rec, Some(cat_col)) {
                choices.push(Topic::parse(c)?);
            }
            if let Some(c) = opt_cell(rec, alt_col) {
                choices.push(Topic::parse(c)?);
            }
            let done = opt_cell(rec, done_col).map_or(Ok(false), parse_flag)?;
            Ok(AssessmentRow {
                coordinate,
                choices,
                done,
                comment: opt_cell(rec, comment_col).map(str::to_string),
            })
        };
        let row = parse().map_err(|e| e.at_line(*line))?;
        if !seen.insert(row.coordinate.clone()) {
            return Err(Error::DuplicateCoordinate {
                line: *line,
                coordinate: row.coordinate.to_string(),
            });
        }
        out.push(row);
    }
    Ok(out)
}

fn parse_flag(s: &str) -> Result<bool> {
    match s.to_ascii_lowercase().as_str() {
        "done" | "yes" | "true" | "x" | "1" => Ok(true),
        "no" | "false" | "0" => Ok(false),
        other => Err(Error::format(format!("unrecognised flag {other:?}"))),
    }
}

/// Recorded arbitration and revision decisions, used to replay a finished
/// project.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DecisionRow {
    pub coordinate: LibraryCoordinate,
    pub arbitrated_category: Option<Topic>,
    pub revision: Option<RevisionDecision>,
    pub arbitration_comment: Option<String>,
    pub revision_comment: Option<String>,
}

/// Decisions sheet: `coordinate, arbitrated_category, revision,
/// arbitration_comment, revision_comment`.
pub fn import_decisions(
    input: impl Read,
    known: &HashSet<LibraryCoordinate>,
) -> Result<Vec<DecisionRow>> {
    let sheet = Sheet::read(input)?;
    let coord_col = sheet.col("coordinate")?;
    let cat_col = sheet.opt_col("arbitrated_category");
    let rev_col = sheet.opt_col("revision");
    let ac_col = sheet.opt_col("arbitration_comment");
    let rc_col = sheet.opt_col("revision_comment");
    let mut out = Vec::new();
    for (line, rec) in &sheet.rows {
        let parse = || -> Result<DecisionRow> {
            Ok(DecisionRow {
                coordinate: known_coordinate(cell(rec, coord_col), known)?,
                arbitrated_category: opt_cell(rec, cat_col).map(Topic::parse).transpose()?,
                revision: opt_cell(rec, rev_col)
                    .map(RevisionDecision::parse)
                    .transpose()?,
                arbitration_comment: opt_cell(rec, ac_col).map(str::to_string),
                revision_comment: opt_cell(rec, rc_col).map(str::to_string),
            })
        };
        out.push(parse().map_err(|e| e.at_line(*line))?);
    }
    Ok(out)
}

/// Externally reported per-group library counts (`group, libraries`), used
/// to flag discrepancies in the statistics report.
pub fn import_reference_counts(input: impl Read) -> Result<Vec<(String, usize)>> {
    let sheet = Sheet::read(input)?;
    let g = sheet.col("group")?;
    let n = sheet.col("libraries")?;
    sheet
        .rows
        .iter()
        .map(|(line, rec)| {
            let count = cell(rec, n)
                .parse()
                .map_err(|_| Error::format(format!("bad count {:?}", cell(rec, n))).at_line(*line))?;
            Ok((cell(rec, g).to_string(), count))
        })
        .collect()
}

/// Fills NVD score and attack vector into a library's records, matching by
/// CVE id. Record order is untouched; responses for other CVEs are ignored.
pub fn attach_vulnerabilities(records: &mut [VulnerabilityRecord], responses: &[NvdResponse]) {
    let by_id: HashMap<&CveId, &NvdResponse> = responses.iter().map(|r| (&r.cve_id, r)).collect();
    for rec in records.iter_mut() {
        if let Some(r) = by_id.get(&rec.cve_id) {
            rec.cvss_nvd = r.base_score;
            rec.attack_vector = r.attack_vector;
        }
    }
}

/// Builds fresh records from responses, in response order.
pub fn records_from_responses(responses: &[NvdResponse]) -> Vec<VulnerabilityRecord> {
    responses
        .iter()
        .map(|r| VulnerabilityRecord {
            cve_id: r.cve_id.clone(),
            cvss_selection: None,
            cvss_nvd: r.base_score,
            attack_vector: r.attack_vector,
            affected_version: None,
        })
        .collect()
}
