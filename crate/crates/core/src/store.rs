//! Project snapshots and the CSV dataset sheets.
//!
//! Snapshots are single JSON documents written through a temp file and an
//! atomic rename. Concurrent writers are serialised with an advisory lock on
//! a sidecar file and the project's revision counter: a save based on a
//! revision other than the one on disk is rejected.

use std::fs::{self, File, OpenOptions};
use std::io::Write;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::engine;
use crate::error::{Error, Result};
use crate::model::{
    has_network_vector, ratio_to_string, ActorId, Assessment, AssessmentMatrix, Conflict,
    LibraryCoordinate, RevisionDecision,
};
use crate::taxonomy::{NetworkClass, Topic};
use crate::workflow::{LibraryEntry, Project, RestoredOutcome, Role, WorkflowState};

const FORMAT: &str = "crosscat-project";
const FORMAT_VERSION: u32 = 1;

#[derive(Serialize)]
struct EnvelopeRef<'a> {
    format: &'static str,
    format_version: u32,
    project: &'a Project,
}

#[derive(Deserialize)]
struct Envelope {
    format: String,
    format_version: u32,
    project: Project,
}

pub fn to_json(project: &Project) -> Result<String> {
    serde_json::to_string_pretty(&EnvelopeRef {
        format: FORMAT,
        format_version: FORMAT_VERSION,
        project,
    })
    .map_err(|e| Error::CorruptSnapshot(e.to_string()))
}

pub fn from_json(text: &str) -> Result<Project> {
    let env: Envelope =
        serde_json::from_str(text).map_err(|e| Error::CorruptSnapshot(e.to_string()))?;
    if env.format != FORMAT || env.format_version != FORMAT_VERSION {
        return Err(Error::CorruptSnapshot(format!(
            "unsupported format {} v{}",
            env.format, env.format_version
        )));
    }
    let mut project = env.project;
    project.rebuild()?;
    Ok(project)
}

pub fn load(path: &Path) -> Result<Project> {
    from_json(&fs::read_to_string(path)?)
}

fn lock_path(path: &Path) -> PathBuf {
    let mut name = path.file_name().unwrap_or_default().to_os_string();
    name.push(".lock");
    path.with_file_name(name)
}

/// Writes `project` to `path`. With `base = Some(r)` the file on disk must
/// still be at revision `r` (or absent when `r == 0`), otherwise the save
/// fails with `VersionConflict` and nothing is written.
pub fn save(path: &Path, project: &Project, base: Option<u64>) -> Result<()> {
    let dir = match path.parent() {
        Some(d) if !d.as_os_str().is_empty() => d.to_path_buf(),
        _ => PathBuf::from("."),
    };
    let lock = OpenOptions::new()
        .create(true)
        .truncate(false)
        .write(true)
        .open(lock_path(path))?;
    lock.lock()?;
    if let Some(expected) = base {
        let actual = match fs::read_to_string(path) {
            Ok(text) => from_json(&text)?.revision,
            Err(e) if e.kind() == std::io::ErrorKind::NotFound => 0,
            Err(e) => return Err(e.into()),
        };
        if actual != expected {
            return Err(Error::VersionConflict { expected, actual });
        }
    }
    let body = to_json(project)?;
    let mut tmp = tempfile::NamedTempFile::new_in(&dir)?;
    tmp.write_all(body.as_bytes())?;
    tmp.write_all(b"\n")?;
    tmp.as_file().sync_all()?;
    tmp.persist(path).map_err(|e| Error::Io(e.error))?;
    if let Ok(d) = File::open(&dir) {
        let _ = d.sync_all();
    }
    Ok(())
}

// ----- sheets -------------------------------------------------------------

/// Which of the four dataset sheets to produce.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SheetKind {
    Arbitration,
    Cves,
    AttackVectors,
    Cvss,
}

impl SheetKind {
    pub const ALL: [SheetKind; 4] = [
        SheetKind::Arbitration,
        SheetKind::Cves,
        SheetKind::AttackVectors,
        SheetKind::Cvss,
    ];

    pub fn parse(s: &str) -> Result<SheetKind> {
        match s.trim().to_ascii_lowercase().as_str() {
            "arbitration" => Ok(SheetKind::Arbitration),
            "cves" => Ok(SheetKind::Cves),
            "av" => Ok(SheetKind::AttackVectors),
            "cvss" => Ok(SheetKind::Cvss),
            other => Err(Error::InvalidConfig(format!("unknown sheet {other:?}"))),
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            SheetKind::Arbitration => "arbitration",
            SheetKind::Cves => "cves",
            SheetKind::AttackVectors => "av",
            SheetKind::Cvss => "cvss",
        }
    }

    /// Conventional file name of the sheet.
    pub fn file_name(self) -> &'static str {
        match self {
            SheetKind::Arbitration => "libs_arbitration.csv",
            SheetKind::Cves => "libs_CVEs.csv",
            SheetKind::AttackVectors => "libs_CVEs_AV.csv",
            SheetKind::Cvss => "libs_CVEs_CVSS.csv",
        }
    }
}

/// Whether assessor choices of libraries that are not yet fully assessed
/// may appear in an export.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Visibility {
    Full,
    /// Choices of incompletely assessed libraries are blanked; done marks
    /// stay visible.
    AssessedOnly,
}

pub fn export(project: &Project, kind: SheetKind, vis: Visibility) -> String {
    match kind {
        SheetKind::Arbitration => export_arbitration_sheet(project, vis),
        other => export_cve_sheet(project, other),
    }
}

fn yes_no(b: bool) -> &'static str {
    if b {
        "YES"
    } else {
        "NO"
    }
}

/// Header of the arbitration sheet for `k` assessors and `n` choices.
pub fn arbitration_header(k: usize, n: usize) -> Vec<String> {
    let mut h = vec!["library".to_string()];
    for i in 1..=k {
        h.push(format!("assessor_{i}_category"));
        for j in 1..n {
            h.push(if n == 2 {
                format!("assessor_{i}_alternate")
            } else {
                format!("assessor_{i}_alternate_{j}")
            });
        }
    }
    for i in 1..=k {
        h.push(format!("assessor_{i}_done"));
    }
    for name in [
        "choices",
        "matches",
        "conflict",
        "conflict_decimal",
        "ambiguous",
        "coincident_category",
        "arbitrated_category",
        "final_category",
        "class",
        "av_network",
        "revision",
        "revised_class",
        "comments",
    ] {
        h.push(name.to_string());
    }
    h
}

/// Conflict with four decimals, rounded half-up.
pub fn conflict_decimal(c: &Conflict) -> String {
    let (n, d) = (*c.numer() as u128, *c.denom() as u128);
    let v = (20000 * n + d) / (2 * d);
    format!("{}.{:04}", v / 10000, v % 10000)
}

fn write_row(out: &mut csv::Writer<Vec<u8>>, row: &[String]) {
    out.write_record(row).expect("writing to memory");
}

fn finish(out: csv::Writer<Vec<u8>>) -> String {
    String::from_utf8(out.into_inner().expect("in-memory writer")).expect("utf-8 fields")
}

fn writer() -> csv::Writer<Vec<u8>> {
    csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(Vec::new())
}

pub fn export_arbitration_sheet(project: &Project, vis: Visibility) -> String {
    let k = project.config.assessors;
    let n = project.config.max_choices;
    let mut out = writer();
    write_row(&mut out, &arbitration_header(k, n));
    for lib in project.libraries() {
        write_row(&mut out, &arbitration_row(project, lib, vis));
    }
    finish(out)
}

fn arbitration_row(project: &Project, lib: &LibraryEntry, vis: Visibility) -> Vec<String> {
    let k = project.config.assessors;
    let n = project.config.max_choices;
    let reveal = vis == Visibility::Full || lib.state.is_assessed();
    let ordered = project.ordered_assessments(lib);
    let mut row = vec![lib.coordinate.to_string()];
    for i in 0..k {
        let a = ordered.get(i).filter(|_| reveal);
        for j in 0..n {
            row.push(
                a.and_then(|a| a.choices.get(j))
                    .map(|t| t.name().to_string())
                    .unwrap_or_default(),
            );
        }
    }
    for i in 0..k {
        let done = ordered.get(i).is_some_and(|a| a.done);
        row.push(if done { "DONE" } else { "" }.to_string());
    }
    match &lib.report {
        Some(report) => {
            let m = AssessmentMatrix::new(ordered.iter().map(|a| a.choices.clone()).collect());
            let choices: usize = m.sets().iter().map(|s| s.len()).sum();
            row.push(choices.to_string());
            row.push(m.intersection().len().to_string());
            row.push(ratio_to_string(&report.conflict));
            row.push(conflict_decimal(&report.conflict));
            row.push(yes_no(report.ambiguous).to_string());
        }
        None => row.extend(std::iter::repeat(String::new()).take(5)),
    }
    let network = has_network_vector(&lib.vulnerabilities);
    match &lib.arbitration {
        Some(rec) => {
            let name = rec.final_category.name().to_string();
            let (m, nn) = if rec.arbitrated {
                (String::new(), name.clone())
            } else {
                (name.clone(), String::new())
            };
            row.push(m);
            row.push(nn);
            row.push(name);
            row.push(project.partition.class_of(rec.final_category).label().to_string());
            row.push(yes_no(network).to_string());
            row.push(rec.revision.map(|r| r.label()).unwrap_or_default().to_string());
            row.push(if lib.state == WorkflowState::Finalized {
                rec.revised_class.label().to_string()
            } else {
                String::new()
            });
            row.push(rec.comment.clone());
        }
        None => {
            row.extend(std::iter::repeat(String::new()).take(4));
            row.push(yes_no(network).to_string());
            row.extend(std::iter::repeat(String::new()).take(3));
        }
    }
    row
}

/// One of the three CVE companion sheets: column A is the library, then one
/// column per CVE. Rows follow the arbitration sheet exactly; short rows are
/// padded so the sheet is rectangular.
pub fn export_cve_sheet(project: &Project, kind: SheetKind) -> String {
    let width = project
        .libraries()
        .iter()
        .map(|l| l.vulnerabilities.len())
        .max()
        .unwrap_or(0);
    let mut out = writer();
    let mut header = vec!["library".to_string()];
    header.extend((1..=width).map(|i| format!("cve_{i}")));
    write_row(&mut out, &header);
    for lib in project.libraries() {
        let mut row = vec![lib.coordinate.to_string()];
        for v in &lib.vulnerabilities {
            row.push(match kind {
                SheetKind::Cves | SheetKind::Arbitration => v.cve_id.to_string(),
                SheetKind::AttackVectors => {
                    v.attack_vector.map(|a| a.label().to_string()).unwrap_or_default()
                }
                SheetKind::Cvss => v.cvss_nvd.map(|s| s.to_string()).unwrap_or_default(),
            });
        }
        row.resize(width + 1, String::new());
        write_row(&mut out, &row);
    }
    finish(out)
}

/// Restores assessments and outcomes from an arbitration sheet into a
/// project that already holds the libraries (and their CVEs).
///
/// Rows are matched by coordinate. Derived columns (H–L, M–P, Q and S) are
/// recomputed and must agree with the sheet. Assessor columns are bound to
/// the project's registered assessors in order; missing ones are created as
/// `assessor-1`, `assessor-2`, ...
pub fn import_arbitration_sheet(project: &mut Project, text: &str) -> Result<usize> {
    let k = project.config.assessors;
    let n = project.config.max_choices;
    let expected = arbitration_header(k, n);
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(true)
        .from_reader(text.as_bytes());
    let header: Vec<String> = rdr.headers()?.iter().map(str::to_string).collect();
    if header != expected {
        return Err(Error::CorruptSheet {
            row: 1,
            reason: format!("unexpected header; want {}", expected.join(",")),
        });
    }
    let mut assessors: Vec<ActorId> = project
        .actors()
        .iter()
        .filter(|a| a.role == Role::Assessor)
        .map(|a| a.id.clone())
        .collect();
    let mut work = project.clone();
    let mut i = 1;
    while assessors.len() < k {
        let id = ActorId::new(format!("assessor-{i}"));
        i += 1;
        if work.actor(&id).is_ok() {
            continue;
        }
        work.add_actor(id.clone(), Role::Assessor)?;
        assessors.push(id);
    }
    let mut count = 0;
    for rec in rdr.records() {
        let rec = rec?;
        let row_no = rec.position().map_or(0, |p| p.line() as usize);
        let corrupt = |reason: String| Error::CorruptSheet { row: row_no, reason };
        let get = |i: usize| rec.get(i).unwrap_or("");
        let coord = LibraryCoordinate::parse(get(0)).map_err(|e| corrupt(e.to_string()))?;
        let mut col = 1;
        let mut choices: Vec<Vec<Topic>> = Vec::new();
        for _ in 0..k {
            let mut c = Vec::new();
            for _ in 0..n {
                let cell = get(col);
                col += 1;
                if !cell.is_empty() {
                    c.push(Topic::parse(cell).map_err(|e| corrupt(e.to_string()))?);
                }
            }
            choices.push(c);
        }
        let mut done = Vec::new();
        for _ in 0..k {
            done.push(match get(col) {
                "DONE" => true,
                "" => false,
                other => return Err(corrupt(format!("bad done mark {other:?}"))),
            });
            col += 1;
        }
        let derived: Vec<&str> = (col..col + 5).map(get).collect();
        col += 5;
        let tail: Vec<&str> = (col..col + 8).map(get).collect();
        let [coincident, arbitrated, final_cat, class, av, revision, revised, comment] =
            tail[..] else {
            return Err(corrupt("short row".into()));
        };

        let assessments: Vec<Assessment> = choices
            .iter()
            .zip(&done)
            .zip(&assessors)
            .filter(|((c, d), _)| !c.is_empty() || **d)
            .map(|((c, d), who)| Assessment::new(who.clone(), c.clone(), *d))
            .collect();
        let outcome = if final_cat.is_empty() {
            if !coincident.is_empty() || !arbitrated.is_empty() {
                return Err(corrupt("category columns without final category".into()));
            }
            None
        } else {
            let fc = Topic::parse(final_cat).map_err(|e| corrupt(e.to_string()))?;
            let (is_arb, source) = match (coincident.is_empty(), arbitrated.is_empty()) {
                (false, true) => (false, coincident),
                (true, false) => (true, arbitrated),
                _ => return Err(corrupt("exactly one of coincident/arbitrated must be set".into())),
            };
            if source != final_cat {
                return Err(corrupt("final category differs from its source column".into()));
            }
            Some(RestoredOutcome {
                final_category: fc,
                arbitrated: is_arb,
                revision: if revision.is_empty() {
                    None
                } else {
                    Some(RevisionDecision::parse(revision).map_err(|e| corrupt(e.to_string()))?)
                },
                comment: comment.to_string(),
            })
        };
        work.restore(&coord, assessments, outcome)
            .map_err(|e| corrupt(e.to_string()))?;

        // everything derivable must match what the sheet says
        let lib = work.library(&coord)?;
        let again = arbitration_row(&work, lib, Visibility::Full);
        let recomputed: Vec<&str> = again[1 + k * n + k..1 + k * n + k + 5]
            .iter()
            .map(String::as_str)
            .collect();
        if recomputed != derived {
            return Err(corrupt(format!(
                "conflict columns {derived:?} disagree with recomputed {recomputed:?}"
            )));
        }
        let base = 1 + k * n + k + 5;
        let checks = [(3, class, "class"), (4, av, "AV:N flag"), (6, revised, "revised class")];
        for (off, given, what) in checks {
            if again[base + off] != given {
                return Err(corrupt(format!(
                    "{what} {given:?} disagrees with recomputed {:?}",
                    again[base + off]
                )));
            }
        }
        if !class.is_empty() {
            NetworkClass::parse(class).map_err(|e| corrupt(e.to_string()))?;
        }
        count += 1;
    }
    *project = work;
    Ok(count)
}

/// Recomputes columns H–L of every complete row of an exported sheet from
/// its assessor columns and compares them with the stored values. Returns
/// the number of rows checked.
pub fn verify_derived_columns(text: &str, k: usize, n: usize, cfg: &crate::model::ProtocolConfig) -> Result<usize> {
    let mut rdr = csv::Reader::from_reader(text.as_bytes());
    let mut checked = 0;
    for rec in rdr.records() {
        let rec = rec?;
        let row_no = rec.position().map_or(0, |p| p.line() as usize);
        let get = |i: usize| rec.get(i).unwrap_or("");
        let done_col = 1 + k * n;
        if !(0..k).all(|i| get(done_col + i) == "DONE") {
            continue;
        }
        let mut entries = Vec::new();
        for i in 0..k {
            let mut e = Vec::new();
            for j in 0..n {
                let cell = get(1 + i * n + j);
                if !cell.is_empty() {
                    e.push(Topic::parse(cell)?);
                }
            }
            entries.push(e);
        }
        let m = AssessmentMatrix::new(entries);
        let conflict = engine::compute_conflict(&m)?;
        let choices: usize = m.sets().iter().map(|s| s.len()).sum();
        let want = [
            choices.to_string(),
            m.intersection().len().to_string(),
            ratio_to_string(&conflict),
            conflict_decimal(&conflict),
            yes_no(engine::is_ambiguous(&conflict, cfg)).to_string(),
        ];
        let base = done_col + k;
        for (i, w) in want.iter().enumerate() {
            if get(base + i) != w {
                return Err(Error::CorruptSheet {
                    row: row_no,
                    reason: format!("column {} is {:?}, recomputed {w:?}", base + i + 1, get(base + i)),
                });
            }
        }
        checked += 1;
    }
    Ok(checked)
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_rational::Ratio;

    #[test]
    fn decimals() {
        assert_eq!(conflict_decimal(&Ratio::new(1, 3)), "0.3333");
        assert_eq!(conflict_decimal(&Ratio::new(1, 2)), "0.5000");
        assert_eq!(conflict_decimal(&Ratio::new(2, 3)), "0.6667");
        assert_eq!(conflict_decimal(&Ratio::from_integer(1)), "1.0000");
        assert_eq!(conflict_decimal(&Ratio::from_integer(0)), "0.0000");
    }

    #[test]
    fn header_shape() {
        let h = arbitration_header(2, 2);
        assert_eq!(h.len(), 20);
        assert_eq!(h[0], "library");
        assert_eq!(h[4], "assessor_2_alternate");
        assert_eq!(h[7], "choices");
        assert_eq!(h[19], "comments");
    }

    #[test]
    fn sheet_kinds() {
        for k in SheetKind::ALL {
            assert_eq!(SheetKind::parse(k.name()).unwrap(), k);
        }
    }
}
