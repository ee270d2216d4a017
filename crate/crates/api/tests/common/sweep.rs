//! Adversarial sweep: an assessor session probes every endpoint for every
//! library and must never learn another assessor's unfinished choices.

use axum::http::{Method, StatusCode};
use serde_json::{json, Value};

use crosscat_core::model::{AttackVector, CveId};
use crosscat_core::workflow::{Project, Role, WorkflowState};
use crosscat_core::{
    ActorId, LibraryCoordinate, ProtocolConfig, SourceSet, Topic, VulnerabilityRecord,
};

use super::{app, call, login};

/// Categories only the victim ever picks.
pub const SECRET_TOPICS: [Topic; 4] = [
    Topic::Religion,
    Topic::Education,
    Topic::OfficeBusiness,
    Topic::GamesEntertainment,
];
pub const SECRET_NOTE: &str = "victim-private-note-7f3c";

pub struct SweepReport {
    pub requests: usize,
    /// `(method uri, marker)` for every response that contained a marker.
    pub leaks: Vec<String>,
    /// Requests whose status was outside the expected set.
    pub unexpected: Vec<String>,
    /// Direct requests for the victim's entry that were not answered 403.
    pub direct_not_forbidden: Vec<String>,
}

impl SweepReport {
    pub fn clean(&self) -> bool {
        self.leaks.is_empty() && self.unexpected.is_empty() && self.direct_not_forbidden.is_empty()
    }
}

fn coord(i: usize) -> LibraryCoordinate {
    LibraryCoordinate::parse(&format!("org.sweep:lib{i}")).unwrap()
}

/// Six libraries spread over every pre-final state, plus one finalized.
pub fn victim_project() -> Project {
    use Topic::*;
    let mut p = Project::new(ProtocolConfig::default()).unwrap();
    for (a, r) in [
        ("victim", Role::Assessor),
        ("probe", Role::Assessor),
        ("arb", Role::Arbitrator),
        ("boss", Role::Coordinator),
    ] {
        p.add_actor(a, r).unwrap();
    }
    let coords: Vec<_> = (0..6).map(coord).collect();
    p.add_libraries(&coords);
    for (i, c) in coords.iter().enumerate() {
        let mut s = SourceSet::default();
        s.website = Some(format!("https://sweep.example/{i}"));
        p.set_sources(c, s).unwrap();
        let mut v = VulnerabilityRecord::new(CveId::parse(&format!("CVE-2023-{:04}", 4100 + i)).unwrap());
        v.attack_vector = Some(if i == 5 { AttackVector::Local } else { AttackVector::Network });
        p.set_vulnerabilities(c, vec![v]).unwrap();
    }
    let (victim, probe, arb) = (ActorId::from("victim"), ActorId::from("probe"), ActorId::from("arb"));
    let note = Some(SECRET_NOTE.to_string());
    let mut assess = |who: &ActorId, i: usize, choices: Vec<Topic>, done: bool, note: Option<String>| {
        p.submit_assessment(who, &coords[i], choices, done, note, None).unwrap();
    };
    assess(&victim, 0, vec![Religion], true, note.clone());
    assess(&victim, 1, vec![Education, OfficeBusiness], false, note.clone());
    assess(&probe, 1, vec![Internet], false, None);
    assess(&victim, 2, vec![Religion, Education], true, note.clone());
    assess(&probe, 2, vec![Internet], true, None);
    assess(&victim, 3, vec![GamesEntertainment], true, note.clone());
    assess(&probe, 3, vec![System], true, None);
    assess(&victim, 4, vec![Religion], true, note.clone());
    assess(&probe, 4, vec![Database], true, None);
    assess(&victim, 5, vec![Internet], true, None);
    assess(&probe, 5, vec![Internet], true, None);
    p.claim(&arb, &coords[3], None).unwrap();
    p.submit_arbitration(&arb, &coords[4], Religion, "faith software", None)
        .unwrap();
    let states: Vec<_> = p.libraries().iter().map(|l| l.state).collect();
    assert_eq!(
        states,
        [
            WorkflowState::UnderAssessment,
            WorkflowState::UnderAssessment,
            WorkflowState::Assessed,
            WorkflowState::UnderArbitration,
            WorkflowState::ClassRevisionPending,
            WorkflowState::Finalized,
        ]
    );
    p
}

pub async fn run_sweep() -> SweepReport {
    let (app, _) = app(
        victim_project(),
        &[("victim", "v"), ("probe", "p"), ("arb", "a"), ("boss", "b")],
    );
    let token = login(&app, "probe", "p").await;
    let markers: Vec<String> = SECRET_TOPICS
        .iter()
        .map(|t| t.name().to_string())
        .chain([SECRET_NOTE.to_string(), "victim".to_string()])
        .collect();

    let mut probes: Vec<(Method, String, Option<Value>)> = Vec::new();
    let get = |u: String| (Method::GET, u, None);
    probes.push(get("/api/libraries".into()));
    probes.push(get("/api/session".into()));
    for s in WorkflowState::ALL {
        probes.push(get(format!("/api/libraries?state={}", s.label())));
    }
    probes.push(get("/api/libraries?state=bogus".into()));
    for q in ["arbitration-queue", "revision-queue", "stats"] {
        probes.push(get(format!("/api/{q}")));
    }
    for k in ["arbitration", "cves", "av", "cvss", "arbitration.csv"] {
        probes.push(get(format!("/api/export/{k}")));
    }
    let mut direct = Vec::new();
    let mut raw_coords: Vec<String> = (0..6).map(|i| coord(i).to_string()).collect();
    raw_coords.push("org.sweep%3Alib2".into());
    raw_coords.push(" org.sweep:lib3 ".replace(' ', "%20"));
    raw_coords.push("org.sweep:missing".into());
    for c in &raw_coords {
        let base = format!("/api/libraries/{c}");
        for suffix in ["", "/sources", "/assessments", "/assessment", "/arbitration", "/revision"] {
            probes.push(get(format!("{base}{suffix}")));
        }
        for who in ["victim", "Victim", "victim%20", "arb", "boss", "probe", "nobody"] {
            let uri = format!("{base}/assessments/{who}");
            if who != "probe" {
                direct.push(uri.clone());
            }
            probes.push(get(uri));
        }
        probes.push((Method::POST, format!("{base}/claim"), None));
        probes.push((Method::POST, format!("{base}/claim"), Some(json!({"version": 0}))));
        probes.push((Method::PUT, format!("{base}/arbitration"),
            Some(json!({"choice": "Internet", "comment": "probe"}))));
        probes.push((Method::PUT, format!("{base}/revision"),
            Some(json!({"decision": "KEEP", "comment": "probe"}))));
        probes.push((Method::PUT, format!("{base}/assessment"),
            Some(json!({"choices": ["Internet", "System", "Database"]}))));
        probes.push((Method::PUT, format!("{base}/assessment"),
            Some(json!({"choices": ["Internet"], "version": 9999}))));
        probes.push((Method::PUT, format!("{base}/assessment"), Some(json!({"choices": []}))));
    }

    let allowed = [
        StatusCode::OK,
        StatusCode::NO_CONTENT,
        StatusCode::FORBIDDEN,
        StatusCode::NOT_FOUND,
        StatusCode::METHOD_NOT_ALLOWED,
        StatusCode::CONFLICT,
        StatusCode::UNPROCESSABLE_ENTITY,
        StatusCode::BAD_REQUEST,
    ];
    let mut report = SweepReport {
        requests: 0,
        leaks: Vec::new(),
        unexpected: Vec::new(),
        direct_not_forbidden: Vec::new(),
    };
    for (method, uri, body) in probes {
        let r = call(&app, method.clone(), &uri, Some(&token), body).await;
        report.requests += 1;
        let what = format!("{method} {uri}");
        for m in &markers {
            if r.text.contains(m.as_str()) {
                report.leaks.push(format!("{what}: {m}"));
            }
        }
        if !allowed.contains(&r.status) {
            report.unexpected.push(format!("{what}: {}", r.status));
        }
        if direct.contains(&uri) && r.status != StatusCode::FORBIDDEN {
            report.direct_not_forbidden.push(format!("{what}: {}", r.status));
        }
        // any assessment list returned must hold only the prober's own entry
        if r.status == StatusCode::OK {
            let v = r.json();
            let lists = [&v["items"], &v["assessments"]];
            for list in lists.into_iter().filter_map(Value::as_array) {
                for item in list {
                    let nested = item["assessments"].as_array().cloned().unwrap_or_default();
                    let owners = std::iter::once(&item["assessor_id"])
                        .chain(nested.iter().map(|a| &a["assessor_id"]))
                        .filter_map(Value::as_str);
                    for o in owners.filter(|o| *o != "probe") {
                        report.leaks.push(format!("{what}: entry of {o}"));
                    }
                }
            }
        }
    }
    report
}
