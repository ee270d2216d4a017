//! Acceptance run: one PASS/FAIL line per primary criterion. Every expected
//! value is either a published figure or recomputed here by code that does
//! not go through the library under test.

#[path = "../../api/tests/common/mod.rs"]
mod common;

use std::cell::{Cell, RefCell};
use std::collections::{BTreeSet, HashMap};
use std::path::{Path, PathBuf};
use std::time::{Duration, Instant};

use num_rational::Ratio;
use rand::rngs::StdRng;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};

use crosscat_core::engine::{analyse, compute_conflict, is_ambiguous};
use crosscat_core::model::{AttackVector, CveId, RevisionDecision};
use crosscat_core::replay::{build_from_dir, replay_decisions};
use crosscat_core::stats::{cvss_stats, fleiss_kappa};
use crosscat_core::store::{self, SheetKind, Visibility};
use crosscat_core::workflow::{Project, Role};
use crosscat_core::{
    ingest, ActorId, AssessmentMatrix, Conflict, LibraryCoordinate, NetworkClass, ProtocolConfig,
    Scenario, Score, SourceSet, Topic, VulnerabilityRecord,
};
use crosscat_nvd::{Cache, Clock, FakeClock, NvdClient, RateLimiter, Reply, Transport};

type Outcome = Result<String, String>;

fn root() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../..")
}

fn replication_dir() -> PathBuf {
    root().join("fixtures/replication")
}

fn replication() -> Project {
    build_from_dir(&replication_dir(), ProtocolConfig::default()).expect("replication fixture builds")
}

macro_rules! ensure {
    ($cond:expr, $($fmt:tt)+) => {
        if !$cond {
            return Err(format!($($fmt)+));
        }
    };
}

/// Published per-category CVSS table: name, #, min, median, max, mean, stdev.
const CATEGORY_ROWS: &[(&str, usize, [&str; 5])] = &[
    ("Internet", 135, ["4.70", "7.50", "10.00", "8.04", "1.29"]),
    ("Database", 30, ["5.90", "9.10", "9.80", "8.66", "1.15"]),
    ("Text Processing", 21, ["5.30", "8.50", "9.80", "8.03", "1.49"]),
    ("Security", 19, ["5.30", "8.45", "9.90", "8.19", "1.39"]),
    ("Software Development", 14, ["5.50", "7.50", "9.80", "8.11", "1.32"]),
    ("Multimedia", 13, ["6.50", "6.50", "10.00", "7.33", "1.14"]),
    ("System", 13, ["5.90", "9.00", "10.00", "8.70", "1.25"]),
    ("Utilities", 6, ["7.50", "8.10", "9.80", "8.40", "0.63"]),
    ("Communications", 2, ["6.80", "7.95", "9.10", "7.95", "1.15"]),
    ("Scientific/Engineering", 2, ["5.30", "7.50", "9.80", "7.53", "1.84"]),
    ("Text Editors", 1, ["9.80", "9.80", "9.80", "9.80", "0.00"]),
];

const CLASS_ROWS: &[(&str, [&str; 5])] = &[
    ("Remote network", ["4.70", "8.10", "10.00", "8.22", "1.24"]),
    ("Local", ["5.30", "7.50", "10.00", "7.92", "1.46"]),
];

// ----- oracles ---------------------------------------------------------------

/// Picks that are missed by at least one other assessor, over all picks.
fn conflict_oracle(entries: &[Vec<Topic>]) -> Conflict {
    let mut picks = 0u64;
    let mut shared = 0u64;
    for (i, e) in entries.iter().enumerate() {
        for t in e {
            picks += 1;
            if entries.iter().enumerate().all(|(j, o)| j == i || o.contains(t)) {
                shared += 1;
            }
        }
    }
    Ratio::new(picks - shared, picks)
}

/// Float Fleiss kappa over an item × category count table.
fn kappa_oracle(table: &[Vec<usize>]) -> f64 {
    let items = table.len() as f64;
    let n = table[0].iter().sum::<usize>() as f64;
    let p_bar = table
        .iter()
        .map(|row| (row.iter().map(|&c| (c * c) as f64).sum::<f64>() - n) / (n * (n - 1.0)))
        .sum::<f64>()
        / items;
    let p_e: f64 = (0..table[0].len())
        .map(|j| {
            let p = table.iter().map(|r| r[j] as f64).sum::<f64>() / (items * n);
            p * p
        })
        .sum();
    (p_bar - p_e) / (1.0 - p_e)
}

fn gcd(a: usize, b: usize) -> usize {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}

fn csv_rows(text: &str) -> Vec<Vec<String>> {
    csv::Reader::from_reader(text.as_bytes())
        .records()
        .map(|r| r.unwrap().iter().map(str::to_string).collect())
        .collect()
}

/// Raw `(category, alternate)` cells per coordinate from an assessor sheet.
fn raw_sheet(name: &str) -> HashMap<String, Vec<String>> {
    let text = std::fs::read_to_string(replication_dir().join(name)).unwrap();
    csv_rows(&text)
        .into_iter()
        .map(|r| {
            let picks = r[1..3].iter().filter(|s| !s.is_empty()).cloned().collect();
            (r[0].clone(), picks)
        })
        .collect()
}

// ----- criteria --------------------------------------------------------------

fn conflict_exactness() -> Outcome {
    let t: Vec<Topic> = Topic::all().collect();
    let (x, y, z, w) = (t[0], t[1], t[2], t[3]);
    let r = |n, d| Ratio::new(n, d);
    let rows: [(Vec<Topic>, Vec<Topic>, Conflict, bool); 7] = [
        (vec![x], vec![x], r(0, 1), false),
        (vec![x, y], vec![x, y], r(0, 1), false),
        (vec![x, y], vec![x], r(1, 3), false),
        (vec![x, y], vec![x, z], r(1, 2), false),
        (vec![x], vec![y], r(1, 1), true),
        (vec![x, y], vec![z], r(1, 1), true),
        (vec![x, y], vec![z, w], r(1, 1), true),
    ];
    let cfg = ProtocolConfig::default();
    for (i, (a, b, want, amb)) in rows.into_iter().enumerate() {
        let entries = vec![a, b];
        ensure!(conflict_oracle(&entries) == want, "oracle disagrees with row {}", i + 1);
        let got = compute_conflict(&AssessmentMatrix::new(entries)).map_err(|e| e.to_string())?;
        ensure!(got == want, "row {}: {got} != {want}", i + 1);
        ensure!(is_ambiguous(&got, &cfg) == amb, "row {}: ambiguity", i + 1);
    }
    Ok("7 rows exact: 0, 0, 1/3, 1/2, 1, 1, 1".into())
}

fn scenario_distribution() -> Outcome {
    let p = replication();
    let d = p.stats_report().distribution;
    let got = (d.auto_final, d.choose_one, d.choose_from_union);
    ensure!(got == (148, 4, 104), "distribution {got:?}");
    let pct: Vec<String> = crosscat_core::ScenarioKind::ALL.iter().map(|k| d.percent(*k)).collect();
    ensure!(pct == ["57.8", "1.6", "40.6"], "percentages {pct:?}");

    // the same counts straight from the raw sheets
    let (a, b) = (raw_sheet("assessor_1.csv"), raw_sheet("assessor_2.csv"));
    let mut tally = [0usize; 3];
    for (coord, pa) in &a {
        let pb = &b[coord];
        let shared = pa.iter().filter(|t| pb.contains(t)).count();
        let picks = pa.len() + pb.len();
        let ambiguous = 2 * (picks - 2 * shared) > picks;
        let i = if ambiguous { 2 } else if shared == 1 { 0 } else { 1 };
        tally[i] += 1;
    }
    ensure!(tally == [148, 4, 104], "raw-sheet oracle {tally:?}");

    // every two-assessor shape with at most two picks each
    let alpha: Vec<Topic> = Topic::all().take(4).collect();
    let mut lists = Vec::new();
    for &a in &alpha {
        lists.push(vec![a]);
        for &b in &alpha {
            if a != b {
                lists.push(vec![a, b]);
            }
        }
    }
    let cfg = ProtocolConfig::default();
    let mut image = BTreeSet::new();
    let mut shapes = BTreeSet::new();
    for a in &lists {
        for b in &lists {
            let entries = vec![a.clone(), b.clone()];
            let rep = analyse(&AssessmentMatrix::new(entries.clone()), &cfg).map_err(|e| e.to_string())?;
            ensure!(rep.conflict == conflict_oracle(&entries), "{entries:?}");
            let shared = a.iter().filter(|t| b.contains(t)).count();
            let ok = match &rep.scenario {
                Scenario::AutoFinal(_) => !rep.ambiguous && shared == 1,
                Scenario::ChooseOne(c) => !rep.ambiguous && shared >= 2 && c.len() == shared,
                Scenario::ChooseFromUnion(_) => rep.ambiguous,
            };
            ensure!(ok, "scenario of {entries:?}");
            image.insert(rep.conflict);
            let (lo, hi) = (a.len().min(b.len()), a.len().max(b.len()));
            shapes.insert((lo, hi, shared));
        }
    }
    let want: BTreeSet<Conflict> =
        [Ratio::new(0, 1), Ratio::new(1, 3), Ratio::new(1, 2), Ratio::new(1, 1)].into();
    ensure!(image == want, "conflict image {image:?}");
    ensure!(shapes.len() == 7, "{} shapes", shapes.len());
    Ok(format!("148/4/104 (57.8/1.6/40.6%), {} inputs over 7 shapes", lists.len().pow(2)))
}

fn fleiss_kappa_criterion() -> Outcome {
    let p = replication();
    let a = p.stats_report().agreement?;
    ensure!((a.kappa - 0.381599).abs() <= 1e-6, "fixture kappa {}", a.kappa);

    let cats: Vec<Topic> = Topic::all().take(5).collect();
    let mut rng = StdRng::seed_from_u64(0x5eed);
    let mut worst = 0f64;
    let mut checked = 0;
    while checked < 100 {
        let raters = rng.gen_range(2..=6);
        let table: Vec<Vec<usize>> = (0..20)
            .map(|_| {
                let mut row = vec![0; 5];
                for _ in 0..raters {
                    row[rng.gen_range(0..5)] += 1;
                }
                row
            })
            .collect();
        let items: Vec<Vec<Topic>> = table
            .iter()
            .map(|row| {
                row.iter()
                    .enumerate()
                    .flat_map(|(j, &c)| std::iter::repeat(cats[j]).take(c))
                    .collect()
            })
            .collect();
        let Ok(ours) = fleiss_kappa(&items) else {
            continue; // single-category table, kappa undefined
        };
        worst = worst.max((ours - kappa_oracle(&table)).abs());
        checked += 1;
    }
    ensure!(worst <= 1e-9, "max deviation from oracle {worst:e}");
    let perfect: Vec<Vec<Topic>> = (0..20).map(|i| vec![cats[i % 5]; 4]).collect();
    let k = fleiss_kappa(&perfect).map_err(|e| e.to_string())?;
    ensure!(k == 1.0, "perfect agreement gives {k}");
    Ok(format!("fixture {:.6}; 100 random tables within {worst:.1e}; perfect = 1", a.kappa))
}

fn cvss_statistics() -> Outcome {
    let s = |v: &[&str]| v.iter().map(|x| Score::parse(x).unwrap()).collect::<Vec<_>>();
    let two = cvss_stats(&s(&["6.80", "9.10"])).map_err(|e| e.to_string())?.formatted();
    ensure!(two == ["6.80", "7.95", "9.10", "7.95", "1.15"], "{two:?}");
    let one = cvss_stats(&s(&["9.80"])).map_err(|e| e.to_string())?.formatted();
    ensure!(one[4] == "0.00", "{one:?}");

    let r = replication().stats_report();
    for (name, _, want) in CATEGORY_ROWS {
        let row = r.cvss_topics.iter().find(|row| row.group == *name).ok_or(format!("no {name} row"))?;
        let got = row.summary.as_ref().ok_or(format!("{name} unscored"))?.formatted();
        ensure!(got == *want, "{name}: {got:?}");
    }
    for (name, want) in CLASS_ROWS {
        let row = r.cvss_classes.iter().find(|row| row.group == *name).ok_or(format!("no {name} row"))?;
        let got = row.summary.as_ref().ok_or(format!("{name} unscored"))?.formatted();
        ensure!(got == *want, "{name}: {got:?}");
    }
    Ok("11 category rows and 2 class rows to 2 decimals".into())
}

fn category_counts() -> Outcome {
    let r = replication().stats_report();
    let counts: HashMap<Topic, usize> = r.category_counts.iter().copied().collect();
    for (name, n, _) in CATEGORY_ROWS {
        let t = Topic::parse(name).map_err(|e| e.to_string())?;
        ensure!(counts[&t] == *n, "{name}: {} != {n}", counts[&t]);
    }
    let zero = counts.values().filter(|n| **n == 0).count();
    ensure!(zero == 13, "{zero} empty topics");
    ensure!(counts.values().sum::<usize>() == 256, "total");
    Ok("Internet 135 … Text Editors 1; 13 empty topics".into())
}

fn class_revision() -> Outcome {
    // everything up to arbitration, then the recorded decisions one by one
    let tmp = tempfile::tempdir().map_err(|e| e.to_string())?;
    for f in ["libraries.txt", "sources.csv", "cves.csv", "assessor_1.csv", "assessor_2.csv"] {
        std::fs::copy(replication_dir().join(f), tmp.path().join(f)).map_err(|e| e.to_string())?;
    }
    let mut p = build_from_dir(tmp.path(), ProtocolConfig::default()).map_err(|e| e.to_string())?;
    let decisions = std::fs::read_to_string(replication_dir().join("decisions.csv")).unwrap();
    let rows = ingest::import_decisions(decisions.as_bytes(), &p.coordinates()).map_err(|e| e.to_string())?;
    let arb = ActorId::new("arbitrator-1");
    let trace = |coord: &str, p: &mut Project| -> Result<Vec<String>, String> {
        let c = LibraryCoordinate::parse(coord).unwrap();
        let row = rows.iter().find(|r| r.coordinate == c).ok_or(format!("no decision row for {coord}"))?;
        let mut seen = vec![p.library(&c).unwrap().state.label().to_string()];
        let mut arbitration_only = row.clone();
        arbitration_only.revision = None;
        replay_decisions(p, &arb, &[arbitration_only]).map_err(|e| e.to_string())?;
        let lib = p.library(&c).unwrap();
        let rec = lib.arbitration.as_ref().ok_or("not final")?;
        seen.push(format!("{} {} marked={}", lib.state.label(), rec.revised_class, rec.revision_marked));
        replay_decisions(p, &arb, std::slice::from_ref(row)).map_err(|e| e.to_string())?;
        let lib = p.library(&c).unwrap();
        let rec = lib.arbitration.as_ref().unwrap();
        let decision = rec.revision.map_or("-", RevisionDecision::label);
        seen.push(format!("{} {decision} {}", lib.state.label(), rec.revised_class));
        Ok(seen)
    };
    let corenlp = trace("edu.stanford.nlp:stanford-corenlp", &mut p)?;
    ensure!(
        corenlp == ["Assessed", "ClassRevisionPending Local marked=true", "Finalized ESCALATE Remote network"],
        "corenlp path {corenlp:?}"
    );
    let io = trace("com.itextpdf:io", &mut p)?;
    ensure!(
        io == ["Assessed", "ClassRevisionPending Local marked=true", "Finalized KEEP Local"],
        "itextpdf-io path {io:?}"
    );

    // random decision sequences never move a class back to Local
    let mut rng = StdRng::seed_from_u64(65);
    let local: Vec<Topic> = [Topic::TextEditors, Topic::ScientificEngineering, Topic::Multimedia].into();
    let remote: Vec<Topic> = [Topic::Internet, Topic::Database].into();
    let mut sequences = 0;
    for _ in 0..300 {
        let mut q = Project::new(ProtocolConfig::default()).unwrap();
        for (a, r) in [("a1", Role::Assessor), ("a2", Role::Assessor), ("arb", Role::Arbitrator)] {
            q.add_actor(a, r).unwrap();
        }
        let c = LibraryCoordinate::parse("org.random:lib").unwrap();
        q.add_libraries(std::slice::from_ref(&c));
        let mut src = SourceSet::default();
        src.website = Some("https://random.example/".into());
        q.set_sources(&c, src).unwrap();
        let mut v = VulnerabilityRecord::new(CveId::parse("CVE-2022-0001").unwrap());
        v.attack_vector = Some(if rng.gen_bool(0.7) { AttackVector::Network } else { AttackVector::Local });
        q.set_vulnerabilities(&c, vec![v]).unwrap();
        let topic = *if rng.gen_bool(0.7) { &local } else { &remote }.choose(&mut rng).unwrap();
        for a in ["a1", "a2"] {
            q.submit_assessment(&ActorId::new(a), &c, vec![topic], true, None, None).unwrap();
        }
        let mut prev = q.library(&c).unwrap().arbitration.as_ref().unwrap().revised_class;
        for _ in 0..rng.gen_range(1..6) {
            let d = *[RevisionDecision::Keep, RevisionDecision::Escalate].choose(&mut rng).unwrap();
            let comment = if rng.gen_bool(0.8) { "checked" } else { "" };
            let _ = q.submit_revision(&ActorId::new("arb"), &c, d, comment, None);
            let now = q.library(&c).unwrap().arbitration.as_ref().unwrap().revised_class;
            ensure!(
                !(prev == NetworkClass::RemoteNetwork && now == NetworkClass::Local),
                "class reverted after {d:?}"
            );
            prev = now;
        }
        sequences += 1;
    }
    Ok(format!("corenlp escalated, itextpdf-io kept; {sequences} random sequences monotone"))
}

/// Serves the recorded payloads and counts calls.
struct Recorded {
    calls: Cell<usize>,
    stamps: Option<(FakeClock, RefCell<Vec<Duration>>)>,
}

impl Transport for Recorded {
    fn get(&self, cve: &str) -> crosscat_nvd::Result<Reply> {
        self.calls.set(self.calls.get() + 1);
        if let Some((clock, stamps)) = &self.stamps {
            stamps.borrow_mut().push(clock.now());
            clock.advance(Duration::from_millis(90));
        }
        let dir = root().join("fixtures/nvd");
        let path = dir.join(format!("{cve}.json"));
        let path = if path.exists() { path } else { dir.join("CVE-0000-0000.json") };
        Ok(Reply {
            status: 200,
            body: std::fs::read_to_string(path).unwrap(),
        })
    }
}

fn nvd_client() -> Outcome {
    let window = Duration::from_secs(30);
    let limiter = || RateLimiter::new(FakeClock::default(), 5, window);
    let id = |s: &str| CveId::parse(s).unwrap();
    let tmp = tempfile::tempdir().map_err(|e| e.to_string())?;
    let cache = Cache::open(tmp.path()).map_err(|e| e.to_string())?;
    let cold = NvdClient::new(Recorded { calls: Cell::new(0), stamps: None }, limiter())
        .with_cache(cache.clone());
    let mut got = Vec::new();
    for cve in ["CVE-2021-31649", "CVE-2019-17352"] {
        let r = cold.fetch_cve(&id(cve)).map_err(|e| e.to_string())?;
        got.push(format!("{} {}", r.base_score.ok_or("no score")?, r.attack_vector.ok_or("no AV")?));
    }
    ensure!(got == ["9.8 NETWORK", "7.8 NETWORK"], "{got:?}");

    let warm = NvdClient::new(Recorded { calls: Cell::new(0), stamps: None }, limiter()).with_cache(cache);
    for cve in ["CVE-2021-31649", "CVE-2019-17352"] {
        warm.fetch_cve(&id(cve)).map_err(|e| e.to_string())?;
    }
    ensure!(warm.transport().calls.get() == 0, "cache hit went to the network");

    let clock = FakeClock::default();
    let stress = NvdClient::new(
        Recorded {
            calls: Cell::new(0),
            stamps: Some((clock.clone(), RefCell::new(Vec::new()))),
        },
        RateLimiter::new(clock.clone(), 5, window),
    );
    for i in 0..200 {
        let _ = stress.fetch_cve(&id(&format!("CVE-2020-{:05}", 10000 + i)));
    }
    let stamps = stress.transport().stamps.as_ref().unwrap().1.borrow().clone();
    ensure!(stamps.len() == 200, "{} requests", stamps.len());
    let worst = stamps
        .iter()
        .map(|&s| stamps.iter().filter(|&&t| t >= s && t < s + window).count())
        .max()
        .unwrap();
    ensure!(worst <= 5, "{worst} requests in one 30 s window");
    Ok(format!("(9.8, NETWORK), (7.8, NETWORK); 0 calls on cache hit; max {worst} per window over 200"))
}

fn export_fidelity() -> Outcome {
    let full = replication();
    let first = store::export(&full, SheetKind::Arbitration, Visibility::Full);
    let mut fresh = Project::new(full.config.clone()).unwrap();
    let coords: Vec<_> = full.libraries().iter().map(|l| l.coordinate.clone()).collect();
    fresh.add_libraries(&coords);
    for lib in full.libraries() {
        fresh.set_sources(&lib.coordinate, lib.sources.clone()).map_err(|e| e.to_string())?;
        fresh
            .set_vulnerabilities(&lib.coordinate, lib.vulnerabilities.clone())
            .map_err(|e| e.to_string())?;
    }
    store::import_arbitration_sheet(&mut fresh, &first).map_err(|e| e.to_string())?;
    let second = store::export(&fresh, SheetKind::Arbitration, Visibility::Full);
    ensure!(first == second, "re-export differs");

    let rows = csv_rows(&first);
    for row in &rows {
        let a: Vec<&String> = row[1..3].iter().filter(|s| !s.is_empty()).collect();
        let b: Vec<&String> = row[3..5].iter().filter(|s| !s.is_empty()).collect();
        let choices = a.len() + b.len();
        let matches = a.iter().filter(|x| b.contains(x)).count();
        let (num, den) = (choices - 2 * matches, choices);
        let g = gcd(num, den);
        let fraction = match num {
            0 => "0".to_string(),
            n if n == den => "1".to_string(),
            n => format!("{}/{}", n / g, den / g),
        };
        let want = [
            choices.to_string(),
            matches.to_string(),
            fraction,
            format!("{:.4}", num as f64 / den as f64),
            if 2 * num > den { "YES" } else { "NO" }.to_string(),
        ];
        ensure!(row[7..12] == want, "{}: {:?} != {want:?}", row[0], &row[7..12]);
    }

    let order: Vec<&String> = rows.iter().map(|r| &r[0]).collect();
    for kind in [SheetKind::Cves, SheetKind::AttackVectors, SheetKind::Cvss] {
        let other = csv_rows(&store::export(&full, kind, Visibility::Full));
        let col: Vec<&String> = other.iter().map(|r| &r[0]).collect();
        ensure!(col == order, "{} sheet row order differs", kind.name());
    }
    Ok(format!("byte-identical round trip; H–L recomputed on {} rows; 4 sheets aligned", rows.len()))
}

fn role_isolation() -> Outcome {
    let rt = tokio::runtime::Builder::new_current_thread()
        .build()
        .map_err(|e| e.to_string())?;
    let report = rt.block_on(common::sweep::run_sweep());
    ensure!(report.leaks.is_empty(), "leaks: {:?}", report.leaks);
    ensure!(report.unexpected.is_empty(), "unexpected statuses: {:?}", report.unexpected);
    ensure!(
        report.direct_not_forbidden.is_empty(),
        "direct reads not refused: {:?}",
        report.direct_not_forbidden
    );
    ensure!(report.clean(), "sweep not clean");
    Ok(format!("{} probes, no foreign choices disclosed", report.requests))
}

fn main() {
    let criteria: [(&str, Duration, fn() -> Outcome); 9] = [
        ("conflict metric exactness", Duration::from_secs(1), conflict_exactness),
        ("scenario distribution", Duration::from_secs(5), scenario_distribution),
        ("Fleiss kappa", Duration::from_secs(5), fleiss_kappa_criterion),
        ("CVSS statistics", Duration::from_secs(5), cvss_statistics),
        ("category counts", Duration::from_secs(5), category_counts),
        ("class revision", Duration::from_secs(5), class_revision),
        ("NVD client", Duration::from_secs(5), nvd_client),
        ("export fidelity", Duration::from_secs(5), export_fidelity),
        ("role isolation", Duration::from_secs(30), role_isolation),
    ];
    let mut failed = 0;
    for (i, (name, limit, check)) in criteria.into_iter().enumerate() {
        let start = Instant::now();
        let outcome = std::panic::catch_unwind(check).unwrap_or_else(|_| Err("panicked".into()));
        let took = start.elapsed();
        let outcome = outcome.and_then(|detail| {
            if took > limit {
                Err(format!("took {took:?}, limit {limit:?}"))
            } else {
                Ok(detail)
            }
        });
        match outcome {
            Ok(detail) => println!("PASS {} {name}: {detail} [{took:.2?}]", i + 1),
            Err(why) => {
                failed += 1;
                println!("FAIL {} {name}: {why} [{took:.2?}]", i + 1);
            }
        }
    }
    if failed > 0 {
        eprintln!("{failed} criteria failed");
        std::process::exit(1);
    }
}
