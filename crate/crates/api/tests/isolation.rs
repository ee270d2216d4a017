mod common;

use common::sweep::run_sweep;

#[tokio::test]
async fn assessor_cannot_see_other_entries() {
    let report = run_sweep().await;
    assert!(report.requests >= 150, "only {} probes", report.requests);
    assert!(report.leaks.is_empty(), "{:#?}", report.leaks);
    assert!(report.unexpected.is_empty(), "{:#?}", report.unexpected);
    assert!(report.direct_not_forbidden.is_empty(), "{:#?}", report.direct_not_forbidden);
}

#[tokio::test]
async fn sweep_detects_a_leak_when_one_exists() {
    use axum::http::Method;
    use common::sweep::{victim_project, SECRET_NOTE};
    // the arbitrator legitimately sees everything; the sweep's markers must
    // show up there, otherwise the sweep could pass vacuously
    let (app, _) = common::app(victim_project(), &[("arb", "a")]);
    let t = common::login(&app, "arb", "a").await;
    let r = common::call(&app, Method::GET, "/api/libraries/org.sweep:lib0/assessments", Some(&t), None).await;
    assert!(r.text.contains("Religion") && r.text.contains(SECRET_NOTE));
}

#[tokio::test]
async fn anonymous_requests_are_rejected() {
    use axum::http::{Method, StatusCode};
    use common::sweep::victim_project;
    let (app, _) = common::app(victim_project(), &[]);
    for uri in [
        "/api/libraries",
        "/api/libraries/org.sweep:lib0",
        "/api/libraries/org.sweep:lib0/sources",
        "/api/libraries/org.sweep:lib0/assessments",
        "/api/libraries/org.sweep:lib0/assessments/victim",
        "/api/arbitration-queue",
        "/api/revision-queue",
        "/api/stats",
        "/api/export/arbitration",
        "/api/session",
    ] {
        let r = common::call(&app, Method::GET, uri, None, None).await;
        assert_eq!(r.status, StatusCode::UNAUTHORIZED, "{uri}");
        let r = common::call(&app, Method::GET, uri, Some("deadbeef"), None).await;
        assert_eq!(r.status, StatusCode::UNAUTHORIZED, "{uri} forged");
    }
    let r = common::call(&app, Method::GET, "/api/taxonomy", None, None).await;
    assert_eq!(r.status, StatusCode::OK);
}
