use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::Json;
use serde::Serialize;

use crosscat_core::Error as CoreError;

/// An HTTP error with a stable machine-readable code.
#[derive(Debug, thiserror::Error)]
#[error("{message}")]
pub struct ApiError {
    pub status: StatusCode,
    pub code: &'static str,
    pub message: String,
    /// Current version of the resource, when the conflict concerns one.
    pub version: Option<u64>,
}

#[derive(Serialize)]
struct Body<'a> {
    error: &'a str,
    message: &'a str,
    #[serde(skip_serializing_if = "Option::is_none")]
    version: Option<u64>,
}

impl ApiError {
    pub fn new(status: StatusCode, code: &'static str, message: impl Into<String>) -> Self {
        ApiError {
            status,
            code,
            message: message.into(),
            version: None,
        }
    }

    pub fn unauthorized() -> Self {
        Self::new(
            StatusCode::UNAUTHORIZED,
            "unauthorized",
            "missing, unknown or expired session",
        )
    }

    pub fn forbidden(message: impl Into<String>) -> Self {
        Self::new(StatusCode::FORBIDDEN, "role_violation", message)
    }

    pub fn not_found(message: impl Into<String>) -> Self {
        Self::new(StatusCode::NOT_FOUND, "not_found", message)
    }

    pub fn bad_request(message: impl Into<String>) -> Self {
        Self::new(StatusCode::UNPROCESSABLE_ENTITY, "invalid_request", message)
    }
}

/// Status and code for every core error. Each variant maps to exactly one
/// status.
pub fn classify(e: &CoreError) -> (StatusCode, &'static str) {
    use CoreError::*;
    use StatusCode as S;
    match e {
        UnknownLibrary(_) => (S::NOT_FOUND, "unknown_library"),
        UnknownActor(_) => (S::NOT_FOUND, "unknown_actor"),
        RoleViolation { .. } => (S::FORBIDDEN, "role_violation"),
        VersionConflict { .. } => (S::CONFLICT, "version_conflict"),
        NotQueueOwner { .. } => (S::CONFLICT, "not_queue_owner"),
        AlreadyFinalized(_) => (S::CONFLICT, "already_finalized"),
        AssessmentFrozen { .. } => (S::CONFLICT, "assessment_frozen"),
        AssessmentSlotsFull(_) => (S::CONFLICT, "assessment_slots_full"),
        WrongState { .. } => (S::CONFLICT, "wrong_state"),
        InvalidTransition { .. } => (S::CONFLICT, "invalid_transition"),
        IncompatibleRole(_) => (S::CONFLICT, "incompatible_role"),
        Io(_) => (S::INTERNAL_SERVER_ERROR, "io"),
        CorruptSnapshot(_) => (S::INTERNAL_SERVER_ERROR, "corrupt_snapshot"),
        UnknownTopic(_) => (S::UNPROCESSABLE_ENTITY, "unknown_topic"),
        UnknownClass(_) => (S::UNPROCESSABLE_ENTITY, "unknown_class"),
        MalformedCoordinate { .. } => (S::UNPROCESSABLE_ENTITY, "malformed_coordinate"),
        TooManyChoices { .. } => (S::UNPROCESSABLE_ENTITY, "too_many_choices"),
        DuplicateChoice(_) => (S::UNPROCESSABLE_ENTITY, "duplicate_choice"),
        EmptyEntry(_) => (S::UNPROCESSABLE_ENTITY, "empty_entry"),
        ChoiceOutsideCandidates(_) => (S::UNPROCESSABLE_ENTITY, "choice_outside_candidates"),
        MissingArbitratorChoice => (S::UNPROCESSABLE_ENTITY, "missing_choice"),
        RevisionWithoutMark => (S::UNPROCESSABLE_ENTITY, "revision_without_mark"),
        EmptyComment => (S::UNPROCESSABLE_ENTITY, "empty_comment"),
        _ => (S::UNPROCESSABLE_ENTITY, "invalid"),
    }
}

impl From<CoreError> for ApiError {
    fn from(e: CoreError) -> Self {
        let (status, code) = classify(&e);
        let version = match &e {
            CoreError::VersionConflict { actual, .. } => Some(*actual),
            _ => None,
        };
        ApiError {
            status,
            code,
            message: e.to_string(),
            version,
        }
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        let body = Body {
            error: self.code,
            message: &self.message,
            version: self.version,
        };
        (self.status, Json(body)).into_response()
    }
}
