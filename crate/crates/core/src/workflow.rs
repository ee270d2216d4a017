//! Project state machine: actors and roles, per-library workflow states,
//! assessor isolation, the claim-based arbitration queue and class revision.
//!
//! Every mutating operation takes an optional expected library version and
//! bumps the version on success. Replaying a submission that is already
//! recorded is a no-op that succeeds without a version check.

use std::collections::{BTreeMap, HashMap, HashSet};
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::engine;
use crate::error::{Error, Result};
use crate::ingest::NvdResponse;
use crate::model::{
    validate_choices, ActorId, ArbitrationRecord, Assessment, AssessmentMatrix, ConflictReport,
    DatasetRow, LibraryCoordinate, ProtocolConfig, RevisionDecision, Scenario, SourceSet,
    VulnerabilityRecord,
};
use crate::stats::{self, ScoredLibrary};
use crate::taxonomy::{ClassPartition, NetworkClass, Topic};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Role {
    Assessor,
    Arbitrator,
    Coordinator,
}

impl Role {
    pub fn label(self) -> &'static str {
        match self {
            Role::Assessor => "assessor",
            Role::Arbitrator => "arbitrator",
            Role::Coordinator => "coordinator",
        }
    }

    pub fn parse(s: &str) -> Result<Role> {
        match s.trim().to_ascii_lowercase().as_str() {
            "assessor" => Ok(Role::Assessor),
            "arbitrator" => Ok(Role::Arbitrator),
            "coordinator" => Ok(Role::Coordinator),
            other => Err(Error::InvalidConfig(format!("unknown role {other:?}"))),
        }
    }
}

impl fmt::Display for Role {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Actor {
    pub id: ActorId,
    pub role: Role,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum WorkflowState {
    Defined,
    SourcesCollected,
    UnderAssessment,
    Assessed,
    UnderArbitration,
    ClassRevisionPending,
    Finalized,
}

impl WorkflowState {
    pub const ALL: [WorkflowState; 7] = [
        WorkflowState::Defined,
        WorkflowState::SourcesCollected,
        WorkflowState::UnderAssessment,
        WorkflowState::Assessed,
        WorkflowState::UnderArbitration,
        WorkflowState::ClassRevisionPending,
        WorkflowState::Finalized,
    ];

    /// The complete edge set of the state machine.
    pub const EDGES: [(WorkflowState, WorkflowState); 9] = {
        use WorkflowState::*;
        [
            (Defined, SourcesCollected),
            (SourcesCollected, UnderAssessment),
            (UnderAssessment, Assessed),
            (Assessed, UnderArbitration),
            (Assessed, ClassRevisionPending),
            (Assessed, Finalized),
            (UnderArbitration, ClassRevisionPending),
            (UnderArbitration, Finalized),
            (ClassRevisionPending, Finalized),
        ]
    };

    pub fn can_transition(self, to: WorkflowState) -> bool {
        Self::EDGES.contains(&(self, to))
    }

    pub fn label(self) -> &'static str {
        match self {
            WorkflowState::Defined => "Defined",
            WorkflowState::SourcesCollected => "SourcesCollected",
            WorkflowState::UnderAssessment => "UnderAssessment",
            WorkflowState::Assessed => "Assessed",
            WorkflowState::UnderArbitration => "UnderArbitration",
            WorkflowState::ClassRevisionPending => "ClassRevisionPending",
            WorkflowState::Finalized => "Finalized",
        }
    }

    pub fn parse(s: &str) -> Result<WorkflowState> {
        Self::ALL
            .into_iter()
            .find(|w| w.label().eq_ignore_ascii_case(s.trim()))
            .ok_or_else(|| Error::InvalidConfig(format!("unknown state {s:?}")))
    }

    /// True once the assessors' choices are no longer secret from the
    /// coordinator.
    pub fn is_assessed(self) -> bool {
        self >= WorkflowState::Assessed
    }
}

impl fmt::Display for WorkflowState {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

/// Everything recorded about one library.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LibraryEntry {
    pub coordinate: LibraryCoordinate,
    pub sources: SourceSet,
    pub vulnerabilities: Vec<VulnerabilityRecord>,
    /// In submission order.
    pub assessments: Vec<Assessment>,
    pub report: Option<ConflictReport>,
    pub arbitration: Option<ArbitrationRecord>,
    pub state: WorkflowState,
    pub claimed_by: Option<ActorId>,
    pub version: u64,
}

impl LibraryEntry {
    fn new(coordinate: LibraryCoordinate) -> Self {
        LibraryEntry {
            coordinate,
            sources: SourceSet::default(),
            vulnerabilities: Vec::new(),
            assessments: Vec::new(),
            report: None,
            arbitration: None,
            state: WorkflowState::Defined,
            claimed_by: None,
            version: 0,
        }
    }

    fn assessment_of(&self, who: &ActorId) -> Option<&Assessment> {
        self.assessments.iter().find(|a| &a.assessor_id == who)
    }

    fn transition(&mut self, to: WorkflowState) -> Result<()> {
        if !self.state.can_transition(to) {
            return Err(Error::InvalidTransition {
                from: self.state.label(),
                to: to.label(),
            });
        }
        self.state = to;
        Ok(())
    }

    fn check_version(&self, expected: Option<u64>) -> Result<()> {
        match expected {
            Some(v) if v != self.version => Err(Error::VersionConflict {
                expected: v,
                actual: self.version,
            }),
            _ => Ok(()),
        }
    }

    fn wrong_state(&self, expected: &'static str) -> Error {
        Error::WrongState {
            library: self.coordinate.to_string(),
            state: self.state.label(),
            expected,
        }
    }
}

/// What an arbitrator sees in the queue.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct QueueItem {
    pub coordinate: LibraryCoordinate,
    pub scenario: Scenario,
    pub candidates: Vec<Topic>,
    pub claimed_by: Option<ActorId>,
    pub version: u64,
}

/// What an arbitrator sees in the class-revision queue.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RevisionItem {
    pub coordinate: LibraryCoordinate,
    pub final_category: Topic,
    pub class: NetworkClass,
    pub vulnerabilities: Vec<VulnerabilityRecord>,
    pub version: u64,
}

/// A library as one particular actor may see it.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LibraryView {
    pub coordinate: LibraryCoordinate,
    pub state: WorkflowState,
    pub version: u64,
    /// Number of assessors that marked their entry done.
    pub done_count: usize,
    pub assessments: Vec<Assessment>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub report: Option<ConflictReport>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub final_category: Option<Topic>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub revised_class: Option<NetworkClass>,
}

/// The whole project: configuration, actors and libraries in import order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Project {
    pub config: ProtocolConfig,
    #[serde(default)]
    pub partition: ClassPartition,
    /// Registration order matters: it fixes the assessor column order.
    actors: Vec<Actor>,
    libraries: Vec<LibraryEntry>,
    /// Bumped on every successful mutation; used by the snapshot store.
    pub revision: u64,
    #[serde(skip)]
    index: HashMap<LibraryCoordinate, usize>,
}

impl Project {
    pub fn new(config: ProtocolConfig) -> Result<Project> {
        config.validate()?;
        Ok(Project {
            config,
            partition: ClassPartition::default(),
            actors: Vec::new(),
            libraries: Vec::new(),
            revision: 0,
            index: HashMap::new(),
        })
    }

    pub fn with_partition(mut self, partition: ClassPartition) -> Self {
        self.partition = partition;
        self
    }

    /// Rebuilds derived lookup tables and checks internal consistency; used
    /// after deserialisation.
    pub fn rebuild(&mut self) -> Result<()> {
        self.config.validate()?;
        self.index.clear();
        for (i, lib) in self.libraries.iter().enumerate() {
            if self.index.insert(lib.coordinate.clone(), i).is_some() {
                return Err(Error::CorruptSnapshot(format!(
                    "duplicate library {}",
                    lib.coordinate
                )));
            }
        }
        let mut ids = HashSet::new();
        for a in &self.actors {
            if !ids.insert(&a.id) {
                return Err(Error::CorruptSnapshot(format!("duplicate actor {}", a.id)));
            }
        }
        for lib in &self.libraries {
            self.check_entry(lib)
                .map_err(|e| Error::CorruptSnapshot(format!("{}: {e}", lib.coordinate)))?;
        }
        Ok(())
    }

    fn check_entry(&self, lib: &LibraryEntry) -> Result<()> {
        lib.sources.validate()?;
        if lib.assessments.len() > self.config.assessors {
            return Err(Error::format("more assessments than assessor slots"));
        }
        for a in &lib.assessments {
            validate_choices(&a.choices, self.config.max_choices)?;
        }
        let complete = self.is_complete(lib);
        if lib.state.is_assessed() != complete {
            return Err(Error::format("state disagrees with DONE marks"));
        }
        match (&lib.report, complete) {
            (Some(r), true) => {
                let recomputed = engine::analyse(&self.matrix(lib), &self.config)?;
                if &recomputed != r {
                    return Err(Error::format("stored conflict report is stale"));
                }
            }
            (None, false) => {}
            _ => return Err(Error::format("conflict report presence disagrees with state")),
        }
        let finalized_category = matches!(
            lib.state,
            WorkflowState::ClassRevisionPending | WorkflowState::Finalized
        );
        if finalized_category != lib.arbitration.is_some() {
            return Err(Error::format("arbitration record presence disagrees with state"));
        }
        if let (Some(rec), Some(report)) = (&lib.arbitration, &lib.report) {
            if !report.scenario.candidates().contains(&rec.final_category) {
                return Err(Error::ChoiceOutsideCandidates(rec.final_category));
            }
            let base = self.partition.class_of(rec.final_category);
            let expected = match rec.revision {
                Some(RevisionDecision::Escalate) => NetworkClass::RemoteNetwork,
                _ => base,
            };
            if rec.revised_class != expected {
                return Err(Error::format("revised class disagrees with revision"));
            }
            if rec.revision.is_some() && !rec.revision_marked {
                return Err(Error::RevisionWithoutMark);
            }
            let pending = lib.state == WorkflowState::ClassRevisionPending;
            if pending != (rec.revision_marked && rec.revision.is_none()) {
                return Err(Error::format("revision state disagrees with record"));
            }
        }
        Ok(())
    }

    // ----- actors -------------------------------------------------------

    /// Registers an actor. Re-adding with the same role is a no-op; any
    /// other role is rejected.
    pub fn add_actor(&mut self, id: impl Into<ActorId>, role: Role) -> Result<()> {
        let id = id.into();
        if let Some(existing) = self.actors.iter().find(|a| a.id == id) {
            if existing.role == role {
                return Ok(());
            }
            return Err(Error::IncompatibleRole(id.to_string()));
        }
        self.actors.push(Actor { id, role });
        self.revision += 1;
        Ok(())
    }

    pub fn actors(&self) -> &[Actor] {
        &self.actors
    }

    pub fn actor(&self, id: &ActorId) -> Result<&Actor> {
        self.actors
            .iter()
            .find(|a| &a.id == id)
            .ok_or_else(|| Error::UnknownActor(id.to_string()))
    }

    fn require(&self, id: &ActorId, role: Role, action: &'static str) -> Result<()> {
        let actor = self.actor(id)?;
        if actor.role != role {
            return Err(Error::RoleViolation {
                actor: id.to_string(),
                role: actor.role.label(),
                action,
            });
        }
        Ok(())
    }

    /// Coordinators and arbitrators may read aggregate results.
    pub fn require_reader(&self, id: &ActorId, action: &'static str) -> Result<()> {
        let actor = self.actor(id)?;
        if actor.role == Role::Assessor {
            return Err(Error::RoleViolation {
                actor: id.to_string(),
                role: actor.role.label(),
                action,
            });
        }
        Ok(())
    }

    fn assessor_rank(&self, id: &ActorId) -> usize {
        self.actors
            .iter()
            .filter(|a| a.role == Role::Assessor)
            .position(|a| &a.id == id)
            .unwrap_or(usize::MAX)
    }

    /// Staffing check before assessment can start.
    pub fn check_staffing(&self) -> Result<()> {
        let count = |r| self.actors.iter().filter(|a| a.role == r).count();
        if count(Role::Assessor) < self.config.assessors.max(2) || count(Role::Arbitrator) < 1 {
            return Err(Error::UnderstaffedProject);
        }
        Ok(())
    }

    // ----- libraries ----------------------------------------------------

    /// Adds libraries in order, skipping ones already present. Returns how
    /// many were new.
    pub fn add_libraries(&mut self, coords: &[LibraryCoordinate]) -> usize {
        let mut added = 0;
        for c in coords {
            if self.index.contains_key(c) {
                continue;
            }
            self.index.insert(c.clone(), self.libraries.len());
            self.libraries.push(LibraryEntry::new(c.clone()));
            added += 1;
        }
        if added > 0 {
            self.revision += 1;
        }
        added
    }

    pub fn libraries(&self) -> &[LibraryEntry] {
        &self.libraries
    }

    pub fn coordinates(&self) -> HashSet<LibraryCoordinate> {
        self.index.keys().cloned().collect()
    }

    pub fn library(&self, coord: &LibraryCoordinate) -> Result<&LibraryEntry> {
        self.index
            .get(coord)
            .map(|i| &self.libraries[*i])
            .ok_or_else(|| Error::UnknownLibrary(coord.to_string()))
    }

    fn library_mut(&mut self, coord: &LibraryCoordinate) -> Result<&mut LibraryEntry> {
        match self.index.get(coord) {
            Some(i) => Ok(&mut self.libraries[*i]),
            None => Err(Error::UnknownLibrary(coord.to_string())),
        }
    }

    /// Records the sources of a library; the first call moves it out of
    /// `Defined`. Sources are fixed once assessment is complete.
    pub fn set_sources(&mut self, coord: &LibraryCoordinate, sources: SourceSet) -> Result<()> {
        sources.validate()?;
        let lib = self.library_mut(coord)?;
        if lib.sources == sources && lib.state != WorkflowState::Defined {
            return Ok(());
        }
        if lib.state.is_assessed() {
            return Err(lib.wrong_state("before assessment completes"));
        }
        lib.sources = sources;
        if lib.state == WorkflowState::Defined {
            lib.transition(WorkflowState::SourcesCollected)?;
        }
        lib.version += 1;
        self.revision += 1;
        Ok(())
    }

    /// Replaces a library's vulnerability list (import order preserved).
    /// Revision marking is decided when the category becomes final.
    pub fn set_vulnerabilities(
        &mut self,
        coord: &LibraryCoordinate,
        vulns: Vec<VulnerabilityRecord>,
    ) -> Result<()> {
        let lib = self.library_mut(coord)?;
        if lib.vulnerabilities == vulns {
            return Ok(());
        }
        lib.vulnerabilities = vulns;
        lib.version += 1;
        self.revision += 1;
        Ok(())
    }

    /// Fills NVD results into every matching record. Returns how many
    /// records changed.
    pub fn apply_nvd(&mut self, responses: &[NvdResponse]) -> usize {
        let by_id: HashMap<_, _> = responses.iter().map(|r| (&r.cve_id, r)).collect();
        let mut changed = 0;
        for lib in &mut self.libraries {
            let mut touched = false;
            for v in &mut lib.vulnerabilities {
                if let Some(r) = by_id.get(&v.cve_id) {
                    if v.cvss_nvd != r.base_score || v.attack_vector != r.attack_vector {
                        v.cvss_nvd = r.base_score;
                        v.attack_vector = r.attack_vector;
                        changed += 1;
                        touched = true;
                    }
                }
            }
            if touched {
                lib.version += 1;
            }
        }
        if changed > 0 {
            self.revision += 1;
        }
        changed
    }

    /// All CVE ids in library order.
    pub fn cve_ids(&self) -> Vec<crate::model::CveId> {
        self.libraries
            .iter()
            .flat_map(|l| l.vulnerabilities.iter().map(|v| v.cve_id.clone()))
            .collect()
    }

    fn is_complete(&self, lib: &LibraryEntry) -> bool {
        lib.assessments.len() == self.config.assessors && lib.assessments.iter().all(|a| a.done)
    }

    /// Assessments ordered by assessor registration order.
    pub fn ordered_assessments<'a>(&self, lib: &'a LibraryEntry) -> Vec<&'a Assessment> {
        let mut v: Vec<&Assessment> = lib.assessments.iter().collect();
        v.sort_by_key(|a| self.assessor_rank(&a.assessor_id));
        v
    }

    fn matrix(&self, lib: &LibraryEntry) -> AssessmentMatrix {
        AssessmentMatrix::for_library(
            lib.coordinate.clone(),
            self.ordered_assessments(lib)
                .into_iter()
                .map(|a| a.choices.clone())
                .collect(),
        )
    }

    // ----- assessment ---------------------------------------------------

    /// Stores (or edits) an assessor's entry. Once `done` is set the entry is
    /// frozen. When all K entries are done the conflict report is computed;
    /// `AutoFinal` libraries are finalized on the spot.
    pub fn submit_assessment(
        &mut self,
        actor: &ActorId,
        coord: &LibraryCoordinate,
        choices: Vec<Topic>,
        done: bool,
        comment: Option<String>,
        expected_version: Option<u64>,
    ) -> Result<u64> {
        self.require(actor, Role::Assessor, "submit an assessment")?;
        let k = self.config.assessors;
        let max = self.config.max_choices;
        let lib = self.library(coord)?;
        let mut entry = Assessment::new(actor.clone(), choices, done);
        if let Some(c) = comment {
            entry = entry.with_comment(c);
        }
        if let Some(existing) = lib.assessment_of(actor) {
            if *existing == entry {
                return Ok(lib.version);
            }
            if existing.done {
                return Err(match lib.state {
                    WorkflowState::Finalized => Error::AlreadyFinalized(coord.to_string()),
                    _ => Error::AssessmentFrozen {
                        library: coord.to_string(),
                        assessor: actor.to_string(),
                    },
                });
            }
        }
        match lib.state {
            WorkflowState::SourcesCollected | WorkflowState::UnderAssessment => {}
            WorkflowState::Finalized => return Err(Error::AlreadyFinalized(coord.to_string())),
            _ => return Err(lib.wrong_state("SourcesCollected or UnderAssessment")),
        }
        validate_choices(&entry.choices, max)?;
        lib.check_version(expected_version)?;
        if lib.assessment_of(actor).is_none() && lib.assessments.len() >= k {
            return Err(Error::AssessmentSlotsFull(coord.to_string()));
        }

        let idx = self.index[coord];
        let lib = &mut self.libraries[idx];
        match lib.assessments.iter_mut().find(|a| &a.assessor_id == actor) {
            Some(slot) => *slot = entry,
            None => lib.assessments.push(entry),
        }
        if lib.state == WorkflowState::SourcesCollected {
            lib.transition(WorkflowState::UnderAssessment)?;
        }
        if self.is_complete(&self.libraries[idx]) {
            let report = engine::analyse(&self.matrix(&self.libraries[idx]), &self.config)?;
            let lib = &mut self.libraries[idx];
            lib.transition(WorkflowState::Assessed)?;
            let scenario = report.scenario.clone();
            lib.report = Some(report);
            if let Scenario::AutoFinal(t) = scenario {
                self.finalize_category(idx, t, None, "")?;
            }
        }
        let lib = &mut self.libraries[idx];
        lib.version += 1;
        let version = lib.version;
        self.revision += 1;
        Ok(version)
    }

    fn finalize_category(
        &mut self,
        idx: usize,
        category: Topic,
        arbitrator: Option<ActorId>,
        comment: &str,
    ) -> Result<()> {
        let class = self.partition.class_of(category);
        let lib = &mut self.libraries[idx];
        let marked = engine::needs_class_revision(class, &lib.vulnerabilities);
        let mut record = ArbitrationRecord {
            arbitrated: arbitrator.is_some(),
            arbitrator_id: arbitrator,
            final_category: category,
            revised_class: class,
            revision_marked: marked,
            revision: None,
            comment: String::new(),
        };
        record.append_comment(comment);
        lib.arbitration = Some(record);
        lib.claimed_by = None;
        lib.transition(if marked {
            WorkflowState::ClassRevisionPending
        } else {
            WorkflowState::Finalized
        })
    }

    /// What `actor` is allowed to see of the assessments of `coord`.
    pub fn visible_assessments(
        &self,
        actor: &ActorId,
        coord: &LibraryCoordinate,
    ) -> Result<Vec<Assessment>> {
        let role = self.actor(actor)?.role;
        let lib = self.library(coord)?;
        Ok(match role {
            Role::Assessor => lib
                .assessments
                .iter()
                .filter(|a| &a.assessor_id == actor)
                .cloned()
                .collect(),
            Role::Arbitrator => self.ordered_assessments(lib).into_iter().cloned().collect(),
            Role::Coordinator if lib.state.is_assessed() => {
                self.ordered_assessments(lib).into_iter().cloned().collect()
            }
            Role::Coordinator => self
                .ordered_assessments(lib)
                .into_iter()
                .map(|a| Assessment {
                    assessor_id: a.assessor_id.clone(),
                    choices: Vec::new(),
                    done: a.done,
                    comment: None,
                })
                .collect(),
        })
    }

    /// The library as `actor` may see it. Assessors never receive the
    /// conflict report: its candidate set would leak other entries.
    pub fn library_view(&self, actor: &ActorId, coord: &LibraryCoordinate) -> Result<LibraryView> {
        let role = self.actor(actor)?.role;
        let lib = self.library(coord)?;
        let report = match role {
            Role::Assessor => None,
            _ => lib.report.clone(),
        };
        let finalized = lib.state == WorkflowState::Finalized;
        let rec = lib.arbitration.as_ref().filter(|_| role != Role::Assessor || finalized);
        Ok(LibraryView {
            coordinate: lib.coordinate.clone(),
            state: lib.state,
            version: lib.version,
            done_count: lib.assessments.iter().filter(|a| a.done).count(),
            assessments: self.visible_assessments(actor, coord)?,
            report,
            final_category: rec.map(|r| r.final_category),
            revised_class: rec.map(|r| r.revised_class),
        })
    }

    /// Library views for `actor`, optionally filtered by state.
    pub fn list_libraries(
        &self,
        actor: &ActorId,
        state: Option<WorkflowState>,
    ) -> Result<Vec<LibraryView>> {
        self.actor(actor)?;
        self.libraries
            .iter()
            .filter(|l| state.map_or(true, |s| l.state == s))
            .map(|l| self.library_view(actor, &l.coordinate))
            .collect()
    }

    // ----- arbitration --------------------------------------------------

    /// Libraries awaiting arbitration that `actor` may work on: unclaimed
    /// ones plus those this actor has claimed.
    pub fn arbitration_queue(&self, actor: &ActorId) -> Result<Vec<QueueItem>> {
        self.require(actor, Role::Arbitrator, "read the arbitration queue")?;
        Ok(self
            .libraries
            .iter()
            .filter(|l| match l.state {
                WorkflowState::Assessed => true,
                WorkflowState::UnderArbitration => l.claimed_by.as_ref() == Some(actor),
                _ => false,
            })
            .filter_map(|l| {
                let scenario = l.report.as_ref()?.scenario.clone();
                Some(QueueItem {
                    coordinate: l.coordinate.clone(),
                    candidates: scenario.candidates().into_iter().collect(),
                    scenario,
                    claimed_by: l.claimed_by.clone(),
                    version: l.version,
                })
            })
            .collect())
    }

    /// Takes ownership of a queued library. Claiming one's own claim again is
    /// a no-op.
    pub fn claim(
        &mut self,
        actor: &ActorId,
        coord: &LibraryCoordinate,
        expected_version: Option<u64>,
    ) -> Result<u64> {
        self.require(actor, Role::Arbitrator, "claim a library")?;
        let lib = self.library_mut(coord)?;
        match lib.state {
            WorkflowState::Assessed => {}
            WorkflowState::UnderArbitration if lib.claimed_by.as_ref() == Some(actor) => {
                return Ok(lib.version)
            }
            _ => {
                return Err(Error::NotQueueOwner {
                    actor: actor.to_string(),
                    library: coord.to_string(),
                })
            }
        }
        lib.check_version(expected_version)?;
        lib.transition(WorkflowState::UnderArbitration)?;
        lib.claimed_by = Some(actor.clone());
        lib.version += 1;
        let version = lib.version;
        self.revision += 1;
        Ok(version)
    }

    /// Records the arbitrator's final category. An unclaimed queued library
    /// is claimed implicitly.
    pub fn submit_arbitration(
        &mut self,
        actor: &ActorId,
        coord: &LibraryCoordinate,
        choice: Topic,
        comment: &str,
        expected_version: Option<u64>,
    ) -> Result<u64> {
        self.require(actor, Role::Arbitrator, "arbitrate")?;
        let lib = self.library(coord)?;
        if let Some(rec) = &lib.arbitration {
            // a later revision comment is appended after "; "
            let c = comment.trim();
            let same_comment = rec.comment == c
                || (rec.revision.is_some()
                    && rec.comment.strip_prefix(c).is_some_and(|rest| rest.starts_with("; ")));
            if rec.arbitrator_id.as_ref() == Some(actor) && rec.final_category == choice && same_comment {
                return Ok(lib.version);
            }
        }
        let owned = match lib.state {
            WorkflowState::Assessed => true,
            WorkflowState::UnderArbitration => lib.claimed_by.as_ref() == Some(actor),
            _ => false,
        };
        if !owned {
            return Err(Error::NotQueueOwner {
                actor: actor.to_string(),
                library: coord.to_string(),
            });
        }
        let scenario = &lib.report.as_ref().expect("assessed library has a report").scenario;
        let category = engine::finalize(scenario, Some(choice))?;
        if comment.trim().is_empty() {
            return Err(Error::EmptyComment);
        }
        lib.check_version(expected_version)?;
        let idx = self.index[coord];
        let lib = &mut self.libraries[idx];
        if lib.state == WorkflowState::Assessed {
            lib.transition(WorkflowState::UnderArbitration)?;
            lib.claimed_by = Some(actor.clone());
        }
        self.finalize_category(idx, category, Some(actor.clone()), comment)?;
        let lib = &mut self.libraries[idx];
        lib.version += 1;
        let version = lib.version;
        self.revision += 1;
        Ok(version)
    }

    // ----- class revision -----------------------------------------------

    pub fn revision_queue(&self, actor: &ActorId) -> Result<Vec<RevisionItem>> {
        self.require(actor, Role::Arbitrator, "read the revision queue")?;
        Ok(self
            .libraries
            .iter()
            .filter(|l| l.state == WorkflowState::ClassRevisionPending)
            .filter_map(|l| {
                let rec = l.arbitration.as_ref()?;
                Some(RevisionItem {
                    coordinate: l.coordinate.clone(),
                    final_category: rec.final_category,
                    class: rec.revised_class,
                    vulnerabilities: l.vulnerabilities.clone(),
                    version: l.version,
                })
            })
            .collect())
    }

    pub fn submit_revision(
        &mut self,
        actor: &ActorId,
        coord: &LibraryCoordinate,
        decision: RevisionDecision,
        comment: &str,
        expected_version: Option<u64>,
    ) -> Result<u64> {
        self.require(actor, Role::Arbitrator, "revise a class")?;
        let lib = self.library_mut(coord)?;
        let Some(rec) = lib.arbitration.as_ref() else {
            return Err(Error::RevisionWithoutMark);
        };
        if rec.revision == Some(decision) {
            // replay of an already-applied decision
            return Ok(lib.version);
        }
        if lib.state != WorkflowState::ClassRevisionPending {
            return Err(if rec.revision_marked {
                Error::AlreadyFinalized(coord.to_string())
            } else {
                Error::RevisionWithoutMark
            });
        }
        let class = engine::revise_class(rec.revised_class, rec.revision_marked, decision, comment)?;
        lib.check_version(expected_version)?;
        let rec = lib.arbitration.as_mut().expect("checked above");
        rec.revised_class = class;
        rec.revision = Some(decision);
        rec.append_comment(comment);
        lib.transition(WorkflowState::Finalized)?;
        lib.version += 1;
        let version = lib.version;
        self.revision += 1;
        Ok(version)
    }

    // ----- sheet restore ------------------------------------------------

    /// Installs a finished (or partial) library row exactly as recorded,
    /// e.g. from an exported arbitration sheet. Everything derivable is
    /// recomputed and must agree with what the row claims.
    pub fn restore(
        &mut self,
        coord: &LibraryCoordinate,
        assessments: Vec<Assessment>,
        outcome: Option<RestoredOutcome>,
    ) -> Result<()> {
        let idx = *self
            .index
            .get(coord)
            .ok_or_else(|| Error::UnknownLibrary(coord.to_string()))?;
        for a in &assessments {
            let actor = self.actor(&a.assessor_id)?;
            if actor.role != Role::Assessor {
                return Err(Error::IncompatibleRole(a.assessor_id.to_string()));
            }
        }
        let mut lib = self.libraries[idx].clone();
        lib.assessments = assessments;
        lib.report = None;
        lib.arbitration = None;
        lib.claimed_by = None;
        lib.state = if lib.assessments.is_empty() {
            if lib.sources.present() > 0 || lib.state != WorkflowState::Defined {
                WorkflowState::SourcesCollected
            } else {
                WorkflowState::Defined
            }
        } else {
            WorkflowState::UnderAssessment
        };
        if self.is_complete(&lib) {
            let report = engine::analyse(&self.matrix(&lib), &self.config)?;
            lib.state = WorkflowState::Assessed;
            match (&report.scenario, outcome) {
                (Scenario::AutoFinal(t), out) => {
                    if let Some(o) = &out {
                        if o.arbitrated {
                            return Err(Error::format("arbitrated category given for an AutoFinal row"));
                        }
                        if o.final_category != *t {
                            return Err(Error::format("final category differs from coincident one"));
                        }
                    }
                    lib.report = Some(report.clone());
                    self.apply_outcome(&mut lib, *t, out)?;
                }
                (scenario, Some(o)) => {
                    if !o.arbitrated {
                        return Err(Error::format("row needs an arbitrated category"));
                    }
                    engine::finalize(scenario, Some(o.final_category))?;
                    lib.report = Some(report.clone());
                    lib.state = WorkflowState::UnderArbitration;
                    let cat = o.final_category;
                    self.apply_outcome(&mut lib, cat, Some(o))?;
                }
                (_, None) => lib.report = Some(report),
            }
        } else if outcome.is_some() {
            return Err(Error::format("outcome given for an incompletely assessed library"));
        }
        lib.version += 1;
        self.libraries[idx] = lib;
        self.revision += 1;
        Ok(())
    }

    fn apply_outcome(
        &self,
        lib: &mut LibraryEntry,
        category: Topic,
        outcome: Option<RestoredOutcome>,
    ) -> Result<()> {
        let class = self.partition.class_of(category);
        let marked = engine::needs_class_revision(class, &lib.vulnerabilities);
        let o = outcome.unwrap_or(RestoredOutcome {
            final_category: category,
            arbitrated: false,
            revision: None,
            comment: String::new(),
        });
        if o.revision.is_some() && !marked {
            return Err(Error::RevisionWithoutMark);
        }
        let revised = match o.revision {
            Some(RevisionDecision::Escalate) => NetworkClass::RemoteNetwork,
            _ => class,
        };
        lib.arbitration = Some(ArbitrationRecord {
            arbitrator_id: None,
            final_category: category,
            arbitrated: o.arbitrated,
            revised_class: revised,
            revision_marked: marked,
            revision: o.revision,
            comment: o.comment,
        });
        lib.state = if marked && o.revision.is_none() {
            WorkflowState::ClassRevisionPending
        } else {
            WorkflowState::Finalized
        };
        Ok(())
    }

    // ----- results ------------------------------------------------------

    /// One dataset row per library whose category is final, in import order.
    pub fn dataset_rows(&self) -> Vec<DatasetRow> {
        self.libraries
            .iter()
            .filter_map(|l| self.dataset_row(l))
            .collect()
    }

    pub fn dataset_row(&self, lib: &LibraryEntry) -> Option<DatasetRow> {
        let rec = lib.arbitration.as_ref()?;
        let report = lib.report.as_ref()?;
        let ordered = self.ordered_assessments(lib);
        Some(DatasetRow {
            coordinate: lib.coordinate.clone(),
            assessor_choices: ordered
                .iter()
                .map(|a| (a.choices[0], a.choices.get(1).copied()))
                .collect(),
            done: ordered.iter().map(|a| a.done).collect(),
            conflict: report.conflict,
            ambiguous: report.ambiguous,
            coincident_category: (!rec.arbitrated).then_some(rec.final_category),
            arbitrated_category: rec.arbitrated.then_some(rec.final_category),
            final_category: rec.final_category,
            category_class: self.partition.class_of(rec.final_category),
            network_vector: crate::model::has_network_vector(&lib.vulnerabilities),
            revision: rec.revision,
            revised_class: rec.revised_class,
            comment: rec.comment.clone(),
        })
    }

    pub fn reports(&self) -> impl Iterator<Item = &ConflictReport> {
        self.libraries.iter().filter_map(|l| l.report.as_ref())
    }

    /// Aggregate statistics over the current state.
    pub fn stats_report(&self) -> StatsReport {
        let distribution = stats::conflict_distribution(self.reports());
        let entries: Vec<Vec<Vec<Topic>>> = self
            .libraries
            .iter()
            .filter(|l| l.report.is_some())
            .map(|l| self.matrix(l).entries)
            .collect();
        let agreement = stats::agreement(&entries).map_err(|e| e.to_string());
        let finals: Vec<&LibraryEntry> = self
            .libraries
            .iter()
            .filter(|l| l.arbitration.is_some())
            .collect();
        let category_counts = stats::category_counts(
            finals
                .iter()
                .map(|l| l.arbitration.as_ref().expect("filtered").final_category),
        );
        let scored: Vec<ScoredLibrary> = finals
            .iter()
            .map(|l| {
                let rec = l.arbitration.as_ref().expect("filtered");
                ScoredLibrary {
                    category: rec.final_category,
                    class: rec.revised_class,
                    scores: l.vulnerabilities.iter().filter_map(|v| v.cvss_nvd).collect(),
                }
            })
            .collect();
        let (cvss_topics, cvss_classes) = stats::cvss_table(&scored);
        let all_scores: Vec<_> = scored.iter().flat_map(|s| s.scores.iter().copied()).collect();
        let floor = self.config.severity_floor;
        StatsReport {
            libraries: self.libraries.len(),
            finalized: finals.len(),
            distribution,
            agreement,
            category_counts,
            cvss_topics,
            cvss_classes,
            cves_scored: all_scores.len(),
            cves_below_floor: all_scores.iter().filter(|s| **s < floor).count(),
            unscored_cves: self
                .libraries
                .iter()
                .flat_map(|l| &l.vulnerabilities)
                .filter(|v| v.cvss_nvd.is_none())
                .count(),
        }
    }
}

/// Outcome columns of a restored sheet row.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RestoredOutcome {
    pub final_category: Topic,
    pub arbitrated: bool,
    pub revision: Option<RevisionDecision>,
    pub comment: String,
}

#[derive(Debug, Clone)]
pub struct StatsReport {
    pub libraries: usize,
    pub finalized: usize,
    pub distribution: stats::ScenarioDistribution,
    /// Kappa or the reason it is undefined.
    pub agreement: std::result::Result<stats::AgreementReport, String>,
    pub category_counts: Vec<(Topic, usize)>,
    pub cvss_topics: Vec<stats::CvssRow>,
    pub cvss_classes: Vec<stats::CvssRow>,
    pub cves_scored: usize,
    pub cves_below_floor: usize,
    pub unscored_cves: usize,
}

impl StatsReport {
    /// Group-level library counts (topics, then classes) for comparison
    /// with externally reported figures.
    pub fn group_counts(&self) -> BTreeMap<String, usize> {
        self.cvss_topics
            .iter()
            .chain(&self.cvss_classes)
            .map(|r| (r.group.clone(), r.libraries))
            .collect()
    }

    /// `(group, ours, reference)` for every reference group that differs.
    pub fn discrepancies(&self, reference: &[(String, usize)]) -> Vec<(String, usize, usize)> {
        let ours = self.group_counts();
        reference
            .iter()
            .filter_map(|(g, n)| {
                let mine = ours.get(g).copied().unwrap_or(0);
                (mine != *n).then(|| (g.clone(), mine, *n))
            })
            .collect()
    }
}
