//! Conflict metric, scenario derivation, finalization and class revision.
//!
//! Everything here is pure: no I/O, no shared state.

use std::collections::BTreeSet;

use num_rational::Ratio;

use crate::error::{Error, Result};
use crate::model::{
    has_network_vector, AssessmentMatrix, Conflict, ConflictReport, ProtocolConfig,
    RevisionDecision, Scenario, VulnerabilityRecord,
};
use crate::taxonomy::{NetworkClass, Topic};

fn check_matrix(ass: &AssessmentMatrix) -> Result<()> {
    if ass.assessors() < 2 {
        return Err(Error::TooFewAssessors(ass.assessors()));
    }
    if let Some(i) = ass.entries.iter().position(Vec::is_empty) {
        return Err(Error::EmptyEntry(i));
    }
    Ok(())
}

/// `(choices - K * matches) / choices`, where `choices` is the total number
/// of categories picked and `matches` the size of the K-way intersection.
pub fn compute_conflict(ass: &AssessmentMatrix) -> Result<Conflict> {
    check_matrix(ass)?;
    let sets = ass.sets();
    let choices: u64 = sets.iter().map(|s| s.len() as u64).sum();
    let matches = ass.intersection().len() as u64;
    let k = sets.len() as u64;
    Ok(Ratio::new(choices - k * matches, choices))
}

pub fn is_ambiguous(conflict: &Conflict, cfg: &ProtocolConfig) -> bool {
    *conflict > cfg.threshold
}

pub fn derive_scenario(ass: &AssessmentMatrix, cfg: &ProtocolConfig) -> Result<Scenario> {
    Ok(analyse(ass, cfg)?.scenario)
}

/// Conflict, ambiguity and scenario in one pass.
pub fn analyse(ass: &AssessmentMatrix, cfg: &ProtocolConfig) -> Result<ConflictReport> {
    let conflict = compute_conflict(ass)?;
    let ambiguous = is_ambiguous(&conflict, cfg);
    let common = ass.intersection();
    let scenario = if ambiguous {
        Scenario::ChooseFromUnion(ass.union())
    } else {
        match common.len() {
            0 => return Err(Error::InconsistentState { conflict }),
            1 => Scenario::AutoFinal(*common.iter().next().expect("one element")),
            _ => Scenario::ChooseOne(common),
        }
    };
    Ok(ConflictReport {
        conflict,
        ambiguous,
        scenario,
    })
}

/// Final category for a library. The arbitrator's choice is ignored for
/// `AutoFinal` and required (and restricted to the candidates) otherwise.
pub fn finalize(scenario: &Scenario, arbitrator_choice: Option<Topic>) -> Result<Topic> {
    match scenario {
        Scenario::AutoFinal(t) => Ok(*t),
        Scenario::ChooseOne(c) | Scenario::ChooseFromUnion(c) => {
            let choice = arbitrator_choice.ok_or(Error::MissingArbitratorChoice)?;
            if c.contains(&choice) {
                Ok(choice)
            } else {
                Err(Error::ChoiceOutsideCandidates(choice))
            }
        }
    }
}

/// Local libraries with at least one network-reachable CVE are re-examined.
pub fn needs_class_revision(final_class: NetworkClass, vulns: &[VulnerabilityRecord]) -> bool {
    final_class == NetworkClass::Local && has_network_vector(vulns)
}

/// Applies a keep/escalate decision. Only ever moves towards `RemoteNetwork`.
pub fn revise_class(
    current: NetworkClass,
    marked: bool,
    decision: RevisionDecision,
    comment: &str,
) -> Result<NetworkClass> {
    if !marked {
        return Err(Error::RevisionWithoutMark);
    }
    if comment.trim().is_empty() {
        return Err(Error::EmptyComment);
    }
    Ok(match decision {
        RevisionDecision::Keep => current,
        RevisionDecision::Escalate => NetworkClass::RemoteNetwork,
    })
}

/// Candidate categories an arbitrator may pick from; empty for `AutoFinal`.
pub fn arbitration_candidates(scenario: &Scenario) -> BTreeSet<Topic> {
    match scenario {
        Scenario::AutoFinal(_) => BTreeSet::new(),
        other => other.candidates(),
    }
}
