use thiserror::Error;

use crate::model::Conflict;
use crate::taxonomy::Topic;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    // taxonomy / parsing
    #[error("unknown topic {0:?}")]
    UnknownTopic(String),
    #[error("unknown class {0:?}")]
    UnknownClass(String),
    #[error("malformed coordinate {input:?}: {reason}")]
    MalformedCoordinate { input: String, reason: &'static str },
    #[error("line {line}: duplicate coordinate {coordinate}")]
    DuplicateCoordinate { line: usize, coordinate: String },
    #[error("unknown library {0}")]
    UnknownLibrary(String),
    #[error("invalid URL {url:?}: {reason}")]
    InvalidUrl { url: String, reason: String },
    #[error("invalid CVSS score {0:?}")]
    InvalidScore(String),
    #[error("invalid CVE identifier {0:?}")]
    InvalidCveId(String),
    #[error("unknown attack vector {0:?}")]
    UnknownAttackVector(String),
    #[error("line {line}: {cve_id} already belongs to {owner}")]
    DuplicateCve {
        line: usize,
        cve_id: String,
        owner: String,
    },
    #[error("{0}")]
    Format(String),
    // the inner error is part of the message, so it is not also a source
    #[error("line {line}: {inner}")]
    AtLine { line: usize, inner: Box<Error> },
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    // protocol engine
    #[error("assessment matrix needs at least two assessors, got {0}")]
    TooFewAssessors(usize),
    #[error("assessor {0} has an empty category set")]
    EmptyEntry(usize),
    #[error("{got} categories chosen, at most {max} allowed")]
    TooManyChoices { max: usize, got: usize },
    #[error("category {0} chosen twice")]
    DuplicateChoice(Topic),
    #[error("conflict {conflict} is not ambiguous but no category is shared by all assessors")]
    InconsistentState { conflict: Conflict },
    #[error("{0} is not among the candidate categories")]
    ChoiceOutsideCandidates(Topic),
    #[error("arbitration requires an arbitrator choice")]
    MissingArbitratorChoice,
    #[error("library is not marked for class revision")]
    RevisionWithoutMark,
    #[error("a justification comment is required")]
    EmptyComment,

    // workflow
    #[error("actor {actor} with role {role} may not {action}")]
    RoleViolation {
        actor: String,
        role: &'static str,
        action: &'static str,
    },
    #[error("unknown actor {0}")]
    UnknownActor(String),
    #[error("actor {0} already holds an incompatible role")]
    IncompatibleRole(String),
    #[error("at least two assessors and one arbitrator are required")]
    UnderstaffedProject,
    #[error("library {0} is already finalized")]
    AlreadyFinalized(String),
    #[error("assessment of {library} by {assessor} is marked done and frozen")]
    AssessmentFrozen { library: String, assessor: String },
    #[error("library {0} already has all of its assessor slots taken")]
    AssessmentSlotsFull(String),
    #[error("library {library} is {state}, expected {expected}")]
    WrongState {
        library: String,
        state: &'static str,
        expected: &'static str,
    },
    #[error("invalid transition {from} -> {to}")]
    InvalidTransition {
        from: &'static str,
        to: &'static str,
    },
    #[error("{actor} does not own {library} in the arbitration queue")]
    NotQueueOwner { actor: String, library: String },
    #[error("version conflict: expected {expected}, found {actual}")]
    VersionConflict { expected: u64, actual: u64 },

    // statistics
    #[error("agreement is undefined: every rating falls in a single category")]
    DegenerateAgreement,
    #[error("empty input")]
    EmptyInput,
    #[error("Fleiss kappa needs a constant number of raters per item (>= 2)")]
    RaggedRatings,

    // persistence
    #[error("corrupt snapshot: {0}")]
    CorruptSnapshot(String),
    #[error("row {row}: {reason}")]
    CorruptSheet { row: usize, reason: String },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn format(message: impl Into<String>) -> Self {
        Error::Format(message.into())
    }

    pub(crate) fn at_line(self, line: usize) -> Self {
        match self {
            already @ Error::AtLine { .. } => already,
            other => Error::AtLine {
                line,
                inner: Box::new(other),
            },
        }
    }

    /// The underlying error with any line-number context stripped.
    pub fn root(&self) -> &Error {
        match self {
            Error::AtLine { inner, .. } => inner.root(),
            other => other,
        }
    }
}

impl From<csv::Error> for Error {
    fn from(e: csv::Error) -> Self {
        let line = e.position().map(|p| p.line() as usize);
        let err = Error::Format(e.to_string());
        match line {
            Some(l) => err.at_line(l),
            None => err,
        }
    }
}
