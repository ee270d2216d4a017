//! Drives recorded human work (assessment sheets, decision sheets) through
//! the regular workflow operations, so a replay obeys exactly the same rules
//! as live use.

use std::fs;
use std::path::Path;

use crate::error::{Error, Result};
use crate::ingest::{self, AssessmentRow, DecisionRow};
use crate::model::{ActorId, LibraryCoordinate, ProtocolConfig, VulnerabilityRecord};
use crate::workflow::{Project, Role, WorkflowState};

/// Submits every row as `assessor`. Returns the number of rows applied.
pub fn replay_assessments(
    project: &mut Project,
    assessor: &ActorId,
    rows: &[AssessmentRow],
) -> Result<usize> {
    let mut work = project.clone();
    for row in rows {
        if row.choices.is_empty() && !row.done {
            continue;
        }
        work.submit_assessment(
            assessor,
            &row.coordinate,
            row.choices.clone(),
            row.done,
            row.comment.clone(),
            None,
        )?;
    }
    *project = work;
    Ok(rows.len())
}

/// Applies arbitration choices and class-revision decisions as `arbitrator`.
/// Rows for libraries that need neither are ignored; a decision that the
/// workflow does not expect is an error.
pub fn replay_decisions(
    project: &mut Project,
    arbitrator: &ActorId,
    rows: &[DecisionRow],
) -> Result<DecisionTally> {
    let mut work = project.clone();
    let mut tally = DecisionTally::default();
    for row in rows {
        let lib = work.library(&row.coordinate)?;
        let (state, already) = (lib.state, lib.arbitration.is_some());
        if let Some(choice) = row.arbitrated_category {
            let open = matches!(state, WorkflowState::Assessed | WorkflowState::UnderArbitration);
            if !open && !already {
                return Err(Error::WrongState {
                    library: row.coordinate.to_string(),
                    state: state.label(),
                    expected: "Assessed",
                });
            }
            // on a finished library this is either a no-op replay or a
            // refusal from the workflow
            let comment = row.arbitration_comment.as_deref().unwrap_or("");
            work.submit_arbitration(arbitrator, &row.coordinate, choice, comment, None)?;
            if open {
                tally.arbitrated += 1;
            }
        }
        if let Some(decision) = row.revision {
            let comment = row.revision_comment.as_deref().unwrap_or("");
            let pending = work.library(&row.coordinate)?.state == WorkflowState::ClassRevisionPending;
            work.submit_revision(arbitrator, &row.coordinate, decision, comment, None)?;
            if pending {
                tally.revised += 1;
            }
        }
    }
    *project = work;
    Ok(tally)
}

#[derive(Debug, Default, Clone, Copy, PartialEq, Eq)]
pub struct DecisionTally {
    pub arbitrated: usize,
    pub revised: usize,
}

/// Builds a project from a directory in the standard layout:
///
/// ```text
/// libraries.txt      one coordinate per line
/// sources.csv        coordinate, registry_entry, repository, website, wiki_doc
/// cves.csv           coordinate, cve_id, selection_score[, cvss_nvd, attack_vector]
/// assessor_<i>.csv   coordinate, category, alternate, done   (i = 1..K)
/// decisions.csv      coordinate, arbitrated_category, revision, ... (optional)
/// ```
///
/// Actors are registered as `assessor-<i>`, `arbitrator-1` and `coordinator`.
/// Missing optional files simply leave the project at an earlier stage.
pub fn build_from_dir(dir: &Path, config: ProtocolConfig) -> Result<Project> {
    let read = |name: &str| -> Result<Option<String>> {
        match fs::read_to_string(dir.join(name)) {
            Ok(s) => Ok(Some(s)),
            Err(e) if e.kind() == std::io::ErrorKind::NotFound => Ok(None),
            Err(e) => Err(e.into()),
        }
    };
    let with_file = |name: &str, e: Error| Error::format(format!("{name}: {e}"));
    let k = config.assessors;
    let mut p = Project::new(config)?;
    for i in 1..=k {
        p.add_actor(format!("assessor-{i}").as_str(), Role::Assessor)?;
    }
    p.add_actor("arbitrator-1", Role::Arbitrator)?;
    p.add_actor("coordinator", Role::Coordinator)?;

    let libs = read("libraries.txt")?
        .ok_or_else(|| Error::format("libraries.txt is missing"))?;
    let libs = ingest::import_library_list(&libs).map_err(|e| with_file("libraries.txt", e))?;
    p.add_libraries(&libs);
    let known = p.coordinates();

    if let Some(text) = read("sources.csv")? {
        for (c, s) in ingest::import_sources(text.as_bytes(), &known)
            .map_err(|e| with_file("sources.csv", e))?
        {
            p.set_sources(&c, s)?;
        }
    }
    if let Some(text) = read("cves.csv")? {
        let rows = ingest::import_cves(text.as_bytes(), &known).map_err(|e| with_file("cves.csv", e))?;
        for (c, v) in group_by_library(rows) {
            p.set_vulnerabilities(&c, v)?;
        }
    }
    for i in 1..=k {
        let name = format!("assessor_{i}.csv");
        if let Some(text) = read(&name)? {
            let rows = ingest::import_assessments(text.as_bytes(), &known)
                .map_err(|e| with_file(&name, e))?;
            replay_assessments(&mut p, &ActorId::new(format!("assessor-{i}")), &rows)
                .map_err(|e| with_file(&name, e))?;
        }
    }
    if let Some(text) = read("decisions.csv")? {
        let rows = ingest::import_decisions(text.as_bytes(), &known)
            .map_err(|e| with_file("decisions.csv", e))?;
        replay_decisions(&mut p, &ActorId::new("arbitrator-1"), &rows)
            .map_err(|e| with_file("decisions.csv", e))?;
    }
    Ok(p)
}

/// Groups imported CVE rows per library, keeping first-seen library order
/// and row order within each library.
pub fn group_by_library(
    rows: Vec<(LibraryCoordinate, VulnerabilityRecord)>,
) -> Vec<(LibraryCoordinate, Vec<VulnerabilityRecord>)> {
    let mut out: Vec<(LibraryCoordinate, Vec<VulnerabilityRecord>)> = Vec::new();
    let mut pos = std::collections::HashMap::new();
    for (c, v) in rows {
        let i = *pos.entry(c.clone()).or_insert_with(|| {
            out.push((c, Vec::new()));
            out.len() - 1
        });
        out[i].1.push(v);
    }
    out
}
