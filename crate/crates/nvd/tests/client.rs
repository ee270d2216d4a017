use std::cell::{Cell, RefCell};
use std::path::PathBuf;
use std::time::Duration;

use crosscat_core::model::{AttackVector, CveId};
use crosscat_nvd::{
    Cache, Clock, FakeClock, NvdClient, NvdError, RateLimiter, Reply, Transport, DEFAULT_REQUESTS,
    DEFAULT_WINDOW,
};

fn fixtures() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../fixtures/nvd")
}

/// Serves the recorded bodies; unknown ids get the recorded empty result.
struct Recorded {
    calls: Cell<usize>,
}

impl Recorded {
    fn new() -> Self {
        Recorded { calls: Cell::new(0) }
    }
}

impl Transport for Recorded {
    fn get(&self, cve: &str) -> crosscat_nvd::Result<Reply> {
        self.calls.set(self.calls.get() + 1);
        let path = fixtures().join(format!("{cve}.json"));
        let path = if path.exists() {
            path
        } else {
            fixtures().join("CVE-0000-0000.json")
        };
        Ok(Reply {
            status: 200,
            body: std::fs::read_to_string(path).unwrap(),
        })
    }
}

fn id(s: &str) -> CveId {
    CveId::parse(s).unwrap()
}

fn limiter() -> RateLimiter<FakeClock> {
    RateLimiter::new(FakeClock::default(), DEFAULT_REQUESTS, DEFAULT_WINDOW)
}

#[test]
fn jfinal_cves_from_recordings() {
    let client = NvdClient::new(Recorded::new(), limiter());
    let a = client.fetch_cve(&id("CVE-2021-31649")).unwrap();
    assert_eq!(a.base_score.unwrap().to_string(), "9.8");
    assert_eq!(a.attack_vector, Some(AttackVector::Network));
    let b = client.fetch_cve(&id("CVE-2019-17352")).unwrap();
    assert_eq!(b.base_score.unwrap().to_string(), "7.8");
    assert_eq!(b.attack_vector, Some(AttackVector::Network));
    assert_eq!(b.cvss_version.as_deref(), Some("3.1"));
}

#[test]
fn unknown_id_is_not_found() {
    let client = NvdClient::new(Recorded::new(), limiter());
    assert!(matches!(
        client.fetch_cve(&id("CVE-0000-0000")),
        Err(NvdError::NotFound(_))
    ));
}

#[test]
fn cache_hit_skips_transport() {
    let dir = tempfile::tempdir().unwrap();
    let cache = Cache::open(dir.path()).unwrap();
    let cold = NvdClient::new(Recorded::new(), limiter()).with_cache(cache.clone());
    let first = cold.fetch_cve(&id("CVE-2021-31649")).unwrap();
    assert_eq!(cold.transport().calls.get(), 1);

    let warm = NvdClient::new(Recorded::new(), limiter()).with_cache(cache.clone());
    for _ in 0..10 {
        assert_eq!(warm.fetch_cve(&id("CVE-2021-31649")).unwrap(), first);
    }
    assert_eq!(warm.transport().calls.get(), 0);

    // the stored payload is the recording, byte for byte
    let stored = cache.get("CVE-2021-31649").unwrap().unwrap();
    let recorded = std::fs::read_to_string(fixtures().join("CVE-2021-31649.json")).unwrap();
    assert_eq!(stored, recorded);

    let offline = NvdClient::new(Recorded::new(), limiter())
        .with_cache(cache)
        .offline(true);
    assert!(offline.fetch_cve(&id("CVE-2021-31649")).is_ok());
    assert!(matches!(
        offline.fetch_cve(&id("CVE-2019-17352")),
        Err(NvdError::Offline(_))
    ));
    assert_eq!(offline.transport().calls.get(), 0);
}

/// Records the fake-clock time of every request it sees.
struct Stamping<'a> {
    clock: FakeClock,
    stamps: &'a RefCell<Vec<Duration>>,
}

impl Transport for Stamping<'_> {
    fn get(&self, cve: &str) -> crosscat_nvd::Result<Reply> {
        self.stamps.borrow_mut().push(self.clock.now());
        // each request takes a little while
        self.clock.advance(Duration::from_millis(137));
        Recorded::new().get(cve)
    }
}

#[test]
fn stress_never_exceeds_window() {
    let clock = FakeClock::default();
    let stamps = RefCell::new(Vec::new());
    let client = NvdClient::new(
        Stamping {
            clock: clock.clone(),
            stamps: &stamps,
        },
        RateLimiter::new(clock.clone(), 5, Duration::from_secs(30)),
    );
    for i in 0..200 {
        let _ = client.fetch_cve(&id(&format!("CVE-2020-{:04}", 1000 + i)));
    }
    let stamps = stamps.into_inner();
    assert_eq!(stamps.len(), 200);
    let window = Duration::from_secs(30);
    let worst = stamps
        .iter()
        .map(|&start| {
            stamps
                .iter()
                .filter(|&&t| t >= start && t < start + window)
                .count()
        })
        .max()
        .unwrap();
    assert!(worst <= 5, "{worst} requests in one window");
    // and the limiter is not needlessly slow: 200 requests fit in 40 windows
    assert!(clock.now() <= Duration::from_secs(30 * 40));
}

struct Status(u16);

impl Transport for Status {
    fn get(&self, _: &str) -> crosscat_nvd::Result<Reply> {
        Ok(Reply {
            status: self.0,
            body: "<html>nope</html>".into(),
        })
    }
}

#[test]
fn http_statuses_map_to_errors() {
    let cve = id("CVE-2021-31649");
    let err = |s| NvdClient::new(Status(s), limiter()).fetch_cve(&cve).unwrap_err();
    assert!(matches!(err(429), NvdError::RateLimited { status: 429 }));
    assert!(matches!(err(403), NvdError::RateLimited { status: 403 }));
    assert!(matches!(err(404), NvdError::NotFound(_)));
    assert!(matches!(err(500), NvdError::Upstream { status: 500 }));
    assert!(matches!(err(200), NvdError::UpstreamSchemaError { .. }));
}
