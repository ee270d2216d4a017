use std::sync::Arc;

use axum::extract::{Path, Query, State};
use axum::http::{header, HeaderMap, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post, put};
use axum::{Json, Router};
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crosscat_core::stats::{CvssRow, ScenarioDistribution};
use crosscat_core::store::{self, SheetKind, Visibility};
use crosscat_core::workflow::{Project, Role, WorkflowState};
use crosscat_core::{
    ActorId, LibraryCoordinate, RevisionDecision, ScenarioKind, Topic,
};

use crate::{ApiError, AppState};

type Shared = State<Arc<AppState>>;
type ApiResult<T> = Result<T, ApiError>;

pub fn router(state: Arc<AppState>) -> Router {
    Router::new()
        .route("/api/session", post(login).get(whoami).delete(logout))
        .route("/api/taxonomy", get(taxonomy))
        .route("/api/libraries", get(list_libraries))
        .route("/api/libraries/{coord}", get(get_library))
        .route("/api/libraries/{coord}/sources", get(get_sources))
        .route("/api/libraries/{coord}/assessments", get(get_assessments))
        .route(
            "/api/libraries/{coord}/assessments/{assessor}",
            get(get_assessment_of),
        )
        .route("/api/libraries/{coord}/assessment", put(put_assessment))
        .route("/api/arbitration-queue", get(arbitration_queue))
        .route("/api/libraries/{coord}/claim", post(claim))
        .route("/api/libraries/{coord}/arbitration", put(put_arbitration))
        .route("/api/revision-queue", get(revision_queue))
        .route("/api/libraries/{coord}/revision", put(put_revision))
        .route("/api/stats", get(stats))
        .route("/api/export/{kind}", get(export))
        .with_state(state)
}

// ----- helpers ------------------------------------------------------------

fn bearer(headers: &HeaderMap) -> Option<&str> {
    headers
        .get(header::AUTHORIZATION)?
        .to_str()
        .ok()?
        .strip_prefix("Bearer ")
        .map(str::trim)
}

/// The authenticated actor. Sessions of actors since removed from the
/// project are rejected as well.
fn actor(state: &AppState, headers: &HeaderMap) -> ApiResult<(ActorId, Role)> {
    let token = bearer(headers).ok_or_else(ApiError::unauthorized)?;
    let session = state.sessions.check(token).ok_or_else(ApiError::unauthorized)?;
    let role = state
        .read(|p| p.actor(&session.actor).map(|a| a.role))
        .map_err(|_| ApiError::unauthorized())?;
    Ok((session.actor, role))
}

fn coordinate(raw: &str) -> ApiResult<LibraryCoordinate> {
    Ok(LibraryCoordinate::parse(raw)?)
}

fn library_status(p: &Project, c: &LibraryCoordinate) -> Value {
    match p.library(c) {
        Ok(l) => json!({ "library": c.to_string(), "state": l.state, "version": l.version }),
        Err(_) => json!({ "library": c.to_string() }),
    }
}

// ----- session ------------------------------------------------------------

#[derive(Deserialize)]
struct Login {
    actor: String,
    secret: String,
}

async fn login(State(st): Shared, Json(body): Json<Login>) -> ApiResult<Json<Value>> {
    let (token, session) = st
        .sessions
        .login(&body.actor, &body.secret)
        .ok_or_else(ApiError::unauthorized)?;
    let role = st
        .read(|p| p.actor(&session.actor).map(|a| a.role))
        .map_err(|_| ApiError::unauthorized())?;
    let version = st.read(|p| p.revision);
    Ok(Json(json!({
        "token": token,
        "actor": session.actor,
        "role": role,
        "expires_at": session.expires_at,
        "version": version,
    })))
}

async fn whoami(State(st): Shared, headers: HeaderMap) -> ApiResult<Json<Value>> {
    let (id, role) = actor(&st, &headers)?;
    let version = st.read(|p| p.revision);
    Ok(Json(json!({ "actor": id, "role": role, "version": version })))
}

async fn logout(State(st): Shared, headers: HeaderMap) -> ApiResult<StatusCode> {
    let token = bearer(&headers).ok_or_else(ApiError::unauthorized)?;
    if st.sessions.logout(token) {
        Ok(StatusCode::NO_CONTENT)
    } else {
        Err(ApiError::unauthorized())
    }
}

// ----- reading ------------------------------------------------------------

#[derive(Serialize)]
struct TopicBody {
    name: &'static str,
    description: &'static str,
    subcategories: &'static [&'static str],
    class: &'static str,
}

/// The closed category list with help text; needs no session.
async fn taxonomy(State(st): Shared) -> Json<Value> {
    st.read(|p| {
        let topics: Vec<TopicBody> = Topic::all()
            .map(|t| TopicBody {
                name: t.name(),
                description: t.info().description,
                subcategories: t.info().subcategories,
                class: p.partition.class_of(t).label(),
            })
            .collect();
        Json(json!({
            "version": p.revision,
            "max_choices": p.config.max_choices,
            "topics": topics,
        }))
    })
}

#[derive(Deserialize)]
struct ListQuery {
    state: Option<String>,
}

async fn list_libraries(
    State(st): Shared,
    headers: HeaderMap,
    Query(q): Query<ListQuery>,
) -> ApiResult<Json<Value>> {
    let (id, _) = actor(&st, &headers)?;
    let filter = q.state.as_deref().map(WorkflowState::parse).transpose()?;
    st.read(|p| {
        let items = p.list_libraries(&id, filter)?;
        Ok(Json(json!({ "version": p.revision, "items": items })))
    })
}

async fn get_library(
    State(st): Shared,
    headers: HeaderMap,
    Path(raw): Path<String>,
) -> ApiResult<Json<Value>> {
    let (id, _) = actor(&st, &headers)?;
    let c = coordinate(&raw)?;
    st.read(|p| Ok(Json(serde_json::to_value(p.library_view(&id, &c)?).expect("serializable"))))
}

async fn get_sources(
    State(st): Shared,
    headers: HeaderMap,
    Path(raw): Path<String>,
) -> ApiResult<Json<Value>> {
    actor(&st, &headers)?;
    let c = coordinate(&raw)?;
    st.read(|p| {
        let lib = p.library(&c)?;
        Ok(Json(json!({
            "library": c.to_string(),
            "version": lib.version,
            "sources": lib.sources,
        })))
    })
}

async fn get_assessments(
    State(st): Shared,
    headers: HeaderMap,
    Path(raw): Path<String>,
) -> ApiResult<Json<Value>> {
    let (id, _) = actor(&st, &headers)?;
    let c = coordinate(&raw)?;
    st.read(|p| {
        let items = p.visible_assessments(&id, &c)?;
        let version = p.library(&c)?.version;
        Ok(Json(json!({ "library": c.to_string(), "version": version, "items": items })))
    })
}

/// One assessor's entry. Assessors may only ask for their own.
async fn get_assessment_of(
    State(st): Shared,
    headers: HeaderMap,
    Path((raw, assessor)): Path<(String, String)>,
) -> ApiResult<Json<Value>> {
    let (id, role) = actor(&st, &headers)?;
    if role == Role::Assessor && id.as_str() != assessor {
        return Err(ApiError::forbidden(
            "assessors may not read other assessors' entries",
        ));
    }
    let c = coordinate(&raw)?;
    st.read(|p| {
        let version = p.library(&c)?.version;
        let entry = p
            .visible_assessments(&id, &c)?
            .into_iter()
            .find(|a| a.assessor_id.as_str() == assessor)
            .ok_or_else(|| ApiError::not_found(format!("no entry by {assessor} for {c}")))?;
        Ok(Json(json!({ "library": c.to_string(), "version": version, "assessment": entry })))
    })
}

async fn arbitration_queue(State(st): Shared, headers: HeaderMap) -> ApiResult<Json<Value>> {
    let (id, _) = actor(&st, &headers)?;
    st.read(|p| {
        let items = p.arbitration_queue(&id)?;
        Ok(Json(json!({ "version": p.revision, "items": items })))
    })
}

async fn revision_queue(State(st): Shared, headers: HeaderMap) -> ApiResult<Json<Value>> {
    let (id, _) = actor(&st, &headers)?;
    st.read(|p| {
        let items = p.revision_queue(&id)?;
        Ok(Json(json!({ "version": p.revision, "items": items })))
    })
}

// ----- writing ------------------------------------------------------------

#[derive(Deserialize)]
struct AssessmentBody {
    choices: Vec<String>,
    #[serde(default)]
    done: bool,
    comment: Option<String>,
    version: Option<u64>,
}

async fn put_assessment(
    State(st): Shared,
    headers: HeaderMap,
    Path(raw): Path<String>,
    Json(body): Json<AssessmentBody>,
) -> ApiResult<Json<Value>> {
    let (id, _) = actor(&st, &headers)?;
    let c = coordinate(&raw)?;
    let choices = body
        .choices
        .iter()
        .map(|s| Topic::parse(s))
        .collect::<Result<Vec<_>, _>>()?;
    let comment = body.comment.filter(|s| !s.trim().is_empty());
    st.mutate(|p| p.submit_assessment(&id, &c, choices, body.done, comment, body.version))?;
    Ok(Json(st.read(|p| library_status(p, &c))))
}

#[derive(Deserialize, Default)]
struct ClaimBody {
    version: Option<u64>,
}

async fn claim(
    State(st): Shared,
    headers: HeaderMap,
    Path(raw): Path<String>,
    body: Option<Json<ClaimBody>>,
) -> ApiResult<Json<Value>> {
    let (id, _) = actor(&st, &headers)?;
    let c = coordinate(&raw)?;
    let expected = body.and_then(|Json(b)| b.version);
    st.mutate(|p| p.claim(&id, &c, expected))?;
    Ok(Json(st.read(|p| library_status(p, &c))))
}

#[derive(Deserialize)]
struct ArbitrationBody {
    choice: String,
    #[serde(default)]
    comment: String,
    version: Option<u64>,
}

async fn put_arbitration(
    State(st): Shared,
    headers: HeaderMap,
    Path(raw): Path<String>,
    Json(body): Json<ArbitrationBody>,
) -> ApiResult<Json<Value>> {
    let (id, _) = actor(&st, &headers)?;
    let c = coordinate(&raw)?;
    let choice = Topic::parse(&body.choice)?;
    st.mutate(|p| p.submit_arbitration(&id, &c, choice, &body.comment, body.version))?;
    Ok(Json(st.read(|p| library_status(p, &c))))
}

#[derive(Deserialize)]
struct RevisionBody {
    decision: String,
    #[serde(default)]
    comment: String,
    version: Option<u64>,
}

async fn put_revision(
    State(st): Shared,
    headers: HeaderMap,
    Path(raw): Path<String>,
    Json(body): Json<RevisionBody>,
) -> ApiResult<Json<Value>> {
    let (id, _) = actor(&st, &headers)?;
    let c = coordinate(&raw)?;
    let decision = RevisionDecision::parse(&body.decision)?;
    st.mutate(|p| p.submit_revision(&id, &c, decision, &body.comment, body.version))?;
    Ok(Json(st.read(|p| library_status(p, &c))))
}

// ----- results ------------------------------------------------------------

fn cvss_rows(rows: &[CvssRow]) -> Vec<Value> {
    rows.iter()
        .map(|r| {
            let summary = r.summary.as_ref().map(|s| {
                let [min, median, max, mean, stdev] = s.formatted();
                json!({
                    "cves": s.n, "min": min, "median": median,
                    "max": max, "mean": mean, "stdev": stdev,
                })
            });
            json!({ "group": r.group, "libraries": r.libraries, "cvss": summary })
        })
        .collect()
}

fn distribution(d: &ScenarioDistribution) -> Value {
    let entry = |k: ScenarioKind| json!({ "count": d.count(k), "percent": d.percent(k) });
    json!({
        "total": d.total(),
        "auto_final": entry(ScenarioKind::AutoFinal),
        "choose_one": entry(ScenarioKind::ChooseOne),
        "choose_from_union": entry(ScenarioKind::ChooseFromUnion),
    })
}

/// Everything the dashboard draws: scenario shares, kappa, per-category
/// counts and the CVSS table.
async fn stats(State(st): Shared, headers: HeaderMap) -> ApiResult<Json<Value>> {
    let (id, _) = actor(&st, &headers)?;
    st.read(|p| {
        p.require_reader(&id, "read statistics")?;
        let r = p.stats_report();
        let (kappa, band, kappa_error) = match &r.agreement {
            Ok(a) => (Some(a.kappa), Some(a.band()), None),
            Err(e) => (None, None, Some(e.clone())),
        };
        let counts: Vec<Value> = r
            .category_counts
            .iter()
            .map(|(t, n)| json!({ "category": t.name(), "libraries": n }))
            .collect();
        Ok(Json(json!({
            "version": p.revision,
            "libraries": r.libraries,
            "finalized": r.finalized,
            "distribution": distribution(&r.distribution),
            "kappa": kappa,
            "kappa_formatted": kappa.map(|k| format!("{k:.6}")),
            "kappa_band": band,
            "kappa_error": kappa_error,
            "category_counts": counts,
            "cvss_categories": cvss_rows(&r.cvss_topics),
            "cvss_classes": cvss_rows(&r.cvss_classes),
            "cves_scored": r.cves_scored,
            "cves_below_floor": r.cves_below_floor,
            "unscored_cves": r.unscored_cves,
        })))
    })
}

async fn export(
    State(st): Shared,
    headers: HeaderMap,
    Path(kind): Path<String>,
) -> ApiResult<Response> {
    let (id, role) = actor(&st, &headers)?;
    let kind = SheetKind::parse(kind.trim_end_matches(".csv"))
        .map_err(|e| ApiError::not_found(e.to_string()))?;
    let (csv, version) = st.read(|p| {
        p.require_reader(&id, "export sheets")?;
        // coordinators do not see choices before assessment completes
        let vis = if role == Role::Arbitrator {
            Visibility::Full
        } else {
            Visibility::AssessedOnly
        };
        Ok::<_, ApiError>((store::export(p, kind, vis), p.revision))
    })?;
    Ok((
        [
            (header::CONTENT_TYPE, "text/csv; charset=utf-8".to_string()),
            (
                header::CONTENT_DISPOSITION,
                format!("attachment; filename=\"{}\"", kind.file_name()),
            ),
            (header::ETAG, format!("\"{version}\"")),
        ],
        csv,
    )
        .into_response())
}
