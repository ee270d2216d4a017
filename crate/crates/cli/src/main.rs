//! `crosscat`: batch driver for project setup, imports, NVD enrichment,
//! statistics, export and serving the API.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::{Arc, Mutex};
use std::time::Duration;

use anyhow::{anyhow, bail, Context, Result};
use clap::{Parser, Subcommand};

use crosscat_core::ingest::{self, NvdResponse};
use crosscat_core::model::{parse_ratio, CveId, Score};
use crosscat_core::replay::{self, group_by_library};
use crosscat_core::stats::{format_tenths, percent_tenths, CvssRow};
use crosscat_core::store::{self, SheetKind, Visibility};
use crosscat_core::workflow::{Project, Role};
use crosscat_core::{ActorId, ProtocolConfig, ScenarioKind};
use crosscat_nvd::{Cache, HttpTransport, NvdClient, NvdError, RateLimiter, SystemClock};

#[derive(Parser)]
#[command(name = "crosscat", version, about = "Library categorisation workbench")]
struct Cli {
    /// Project snapshot file.
    #[arg(long, short, global = true, env = "CROSSCAT_PROJECT", default_value = "crosscat.json")]
    project: PathBuf,
    #[command(subcommand)]
    cmd: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Create an empty project snapshot at PATH.
    Init {
        path: PathBuf,
        #[arg(long, default_value_t = 2)]
        assessors: usize,
        #[arg(long, default_value_t = 2)]
        max_choices: usize,
        /// Ambiguity threshold as a fraction, e.g. `1/2`.
        #[arg(long, default_value = "1/2")]
        threshold: String,
        #[arg(long, default_value = "7.0")]
        severity_floor: String,
    },
    /// Register an actor.
    Actor {
        id: String,
        /// assessor, arbitrator or coordinator
        role: String,
    },
    /// Import a library list (one group:artifact per line).
    ImportLibs { file: PathBuf },
    /// Import the source registry CSV.
    ImportSources { file: PathBuf },
    /// Import the CVE list CSV.
    ImportCves { file: PathBuf },
    /// Replay one assessor's recorded sheet.
    ImportAssessments {
        file: PathBuf,
        #[arg(long)]
        assessor: String,
    },
    /// Replay recorded arbitration and class-revision decisions.
    ImportDecisions {
        file: PathBuf,
        #[arg(long)]
        arbitrator: String,
    },
    /// Restore finished rows from an exported arbitration sheet.
    ImportSheet { file: PathBuf },
    /// Build a fresh project from a directory of recorded inputs.
    Replay {
        dir: PathBuf,
        #[arg(long, default_value_t = 2)]
        assessors: usize,
    },
    /// Fill NVD base scores and attack vectors into the CVE records.
    FetchNvd {
        #[arg(long, default_value = ".nvd-cache")]
        cache: PathBuf,
        /// Requests per window; defaults to the keyed or public allowance.
        #[arg(long)]
        rate: Option<usize>,
        /// Window length in seconds.
        #[arg(long, default_value_t = 30)]
        window: u64,
        /// Name of the environment variable holding an API key.
        #[arg(long, default_value = "NVD_API_KEY")]
        api_key_env: String,
        /// Use only the cache; never touch the network.
        #[arg(long)]
        offline: bool,
        /// Refetch CVEs that already have a score.
        #[arg(long)]
        all: bool,
        #[arg(long, default_value = crosscat_nvd::DEFAULT_ENDPOINT)]
        endpoint: String,
    },
    /// Print agreement, scenario, category and CVSS statistics.
    Stats {
        /// Also write the series as CSV.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Externally reported group counts to compare against.
        #[arg(long)]
        reference: Option<PathBuf>,
    },
    /// Write one of the four dataset sheets.
    Export {
        #[arg(long, default_value = "arbitration")]
        sheet: String,
        /// Defaults to stdout.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Blank choices of libraries that are not fully assessed.
        #[arg(long)]
        redacted: bool,
    },
    /// Serve the HTTP API.
    Serve {
        #[arg(long, default_value = "127.0.0.1:8080")]
        addr: String,
        /// JSON map of actor id to secret.
        #[arg(long, env = crosscat_api::SECRETS_ENV)]
        secrets: PathBuf,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}

fn run(cli: Cli) -> Result<()> {
    let path = cli.project.as_path();
    match cli.cmd {
        Command::Init {
            path,
            assessors,
            max_choices,
            threshold,
            severity_floor,
        } => {
            let config = ProtocolConfig {
                assessors,
                max_choices,
                threshold: parse_ratio(&threshold).context("--threshold")?,
                severity_floor: Score::parse(&severity_floor).context("--severity-floor")?,
            };
            init(&path, config)
        }
        Command::Actor { id, role } => {
            let role = Role::parse(&role)?;
            update(path, |p| {
                if p.actors().iter().any(|a| a.id.as_str() == id && a.role == role) {
                    return Ok(format!("{id} already registered"));
                }
                p.add_actor(id.as_str(), role)?;
                Ok(format!("registered {id} as {}", role.label()))
            })
        }
        Command::ImportLibs { file } => {
            let text = read(&file)?;
            let coords = ingest::import_library_list(&text).with_context(|| file.display().to_string())?;
            update(path, |p| {
                let new = p.add_libraries(&coords);
                Ok(format!("imported {} libraries ({new} new)", coords.len()))
            })
        }
        Command::ImportSources { file } => {
            let text = read(&file)?;
            update(path, |p| {
                let rows = ingest::import_sources(text.as_bytes(), &p.coordinates())
                    .with_context(|| file.display().to_string())?;
                for (c, s) in &rows {
                    p.set_sources(c, s.clone())?;
                }
                Ok(format!("imported sources for {} libraries", rows.len()))
            })
        }
        Command::ImportCves { file } => {
            let text = read(&file)?;
            update(path, |p| {
                let rows = ingest::import_cves(text.as_bytes(), &p.coordinates())
                    .with_context(|| file.display().to_string())?;
                let n = rows.len();
                let grouped = group_by_library(rows);
                for (c, v) in &grouped {
                    p.set_vulnerabilities(c, v.clone())?;
                }
                Ok(format!("imported {n} CVEs for {} libraries", grouped.len()))
            })
        }
        Command::ImportAssessments { file, assessor } => {
            let text = read(&file)?;
            update(path, |p| {
                let rows = ingest::import_assessments(text.as_bytes(), &p.coordinates())
                    .with_context(|| file.display().to_string())?;
                let n = replay::replay_assessments(p, &ActorId::new(assessor.clone()), &rows)
                    .with_context(|| file.display().to_string())?;
                Ok(format!("applied {n} assessments by {assessor}"))
            })
        }
        Command::ImportDecisions { file, arbitrator } => {
            let text = read(&file)?;
            update(path, |p| {
                let rows = ingest::import_decisions(text.as_bytes(), &p.coordinates())
                    .with_context(|| file.display().to_string())?;
                let t = replay::replay_decisions(p, &ActorId::new(arbitrator.clone()), &rows)
                    .with_context(|| file.display().to_string())?;
                Ok(format!("arbitrated {} and revised {} libraries", t.arbitrated, t.revised))
            })
        }
        Command::ImportSheet { file } => {
            let text = read(&file)?;
            update(path, |p| {
                let n = store::import_arbitration_sheet(p, &text)
                    .with_context(|| file.display().to_string())?;
                Ok(format!("restored {n} rows"))
            })
        }
        Command::Replay { dir, assessors } => {
            let config = ProtocolConfig {
                assessors,
                ..ProtocolConfig::default()
            };
            let project = replay::build_from_dir(&dir, config)
                .with_context(|| dir.display().to_string())?;
            store::save(path, &project, None)?;
            println!(
                "replayed {} libraries into {}",
                project.libraries().len(),
                path.display()
            );
            Ok(())
        }
        Command::FetchNvd {
            cache,
            rate,
            window,
            api_key_env,
            offline,
            all,
            endpoint,
        } => {
            let key = std::env::var(&api_key_env).ok().filter(|k| !k.is_empty());
            let rate = rate.unwrap_or(if key.is_some() {
                crosscat_nvd::KEYED_REQUESTS
            } else {
                crosscat_nvd::DEFAULT_REQUESTS
            });
            if rate == 0 || window == 0 {
                bail!("--rate and --window must be positive");
            }
            let client = NvdClient::new(
                HttpTransport::with_endpoint(&endpoint, key)?,
                RateLimiter::new(SystemClock::default(), rate, Duration::from_secs(window)),
            )
            .with_cache(Cache::open(&cache).with_context(|| cache.display().to_string())?)
            .offline(offline);
            fetch_nvd(path, &client, all)
        }
        Command::Stats { out, reference } => {
            let project = load(path)?;
            let reference = match reference {
                Some(f) => ingest::import_reference_counts(read(&f)?.as_bytes())
                    .with_context(|| f.display().to_string())?,
                None => Vec::new(),
            };
            let mut stdout = std::io::stdout().lock();
            print_stats(&mut stdout, &project, &reference)?;
            if let Some(out) = out {
                fs::write(&out, stats_csv(&project)?).with_context(|| out.display().to_string())?;
            }
            Ok(())
        }
        Command::Export { sheet, out, redacted } => {
            let project = load(path)?;
            let kind = SheetKind::parse(&sheet)?;
            let vis = if redacted {
                Visibility::AssessedOnly
            } else {
                Visibility::Full
            };
            let text = store::export(&project, kind, vis);
            match out {
                Some(out) => {
                    fs::write(&out, &text).with_context(|| out.display().to_string())?;
                    eprintln!("wrote {} rows to {}", text.lines().count().saturating_sub(1), out.display());
                }
                None => std::io::stdout().write_all(text.as_bytes())?,
            }
            Ok(())
        }
        Command::Serve { addr, secrets } => {
            let project = load(path)?;
            let secrets = crosscat_api::load_secrets(&secrets)
                .with_context(|| secrets.display().to_string())?;
            let state = Arc::new(
                crosscat_api::AppState::new(project, secrets).persist_to(path.to_path_buf()),
            );
            let rt = tokio::runtime::Builder::new_multi_thread().enable_all().build()?;
            eprintln!("serving {} on http://{addr}", path.display());
            rt.block_on(crosscat_api::serve(&addr, state))
                .with_context(|| format!("serving on {addr}"))
        }
    }
}

fn read(path: &Path) -> Result<String> {
    fs::read_to_string(path).with_context(|| path.display().to_string())
}

fn load(path: &Path) -> Result<Project> {
    store::load(path).with_context(|| path.display().to_string())
}

/// Loads, applies `op` and saves only if something changed and nobody else
/// wrote the snapshot meanwhile.
fn update(path: &Path, op: impl FnOnce(&mut Project) -> Result<String>) -> Result<()> {
    let mut project = load(path)?;
    let base = project.revision;
    let msg = op(&mut project)?;
    if project.revision != base {
        store::save(path, &project, Some(base)).with_context(|| path.display().to_string())?;
    }
    println!("{msg}");
    Ok(())
}

fn init(path: &Path, config: ProtocolConfig) -> Result<()> {
    if path.exists() {
        let existing = load(path)?;
        if existing.config == config {
            println!("{} already initialised", path.display());
            return Ok(());
        }
        bail!("{} exists with a different configuration", path.display());
    }
    let project = Project::new(config)?;
    store::save(path, &project, None).with_context(|| path.display().to_string())?;
    println!("initialised {}", path.display());
    Ok(())
}

fn fetch_nvd<T, C>(path: &Path, client: &NvdClient<T, C>, all: bool) -> Result<()>
where
    T: crosscat_nvd::Transport + Sync,
    C: crosscat_nvd::Clock + Sync,
{
    let project = load(path)?;
    let ids: Vec<CveId> = project
        .libraries()
        .iter()
        .flat_map(|l| &l.vulnerabilities)
        .filter(|v| all || v.cvss_nvd.is_none())
        .map(|v| v.cve_id.clone())
        .collect();
    // a few workers share the limiter, so pacing holds across them
    let next = AtomicUsize::new(0);
    let results: Mutex<Vec<(usize, CveId, Result<NvdResponse, NvdError>)>> = Mutex::new(Vec::new());
    let workers = client.limiter().max().clamp(1, 4).min(ids.len().max(1));
    std::thread::scope(|s| {
        for _ in 0..workers {
            s.spawn(|| loop {
                let i = next.fetch_add(1, Ordering::Relaxed);
                let Some(id) = ids.get(i) else { break };
                let r = client.fetch_cve(id);
                results.lock().expect("no worker panics").push((i, id.clone(), r));
            });
        }
    });
    let mut results = results.into_inner().expect("no worker panics");
    results.sort_by_key(|r| r.0);

    let mut ok = Vec::new();
    let mut failed = Vec::new();
    for (_, id, r) in results {
        match r {
            Ok(resp) => {
                if resp.base_score.is_none() {
                    eprintln!("warning: {id}: no CVSS v3 base score");
                }
                ok.push(resp);
            }
            // the record stays unscored; reports count it separately
            Err(e @ (NvdError::NotFound(_) | NvdError::UpstreamSchemaError { .. })) => {
                eprintln!("warning: {e}");
            }
            Err(e) => failed.push(format!("{id}: {e}")),
        }
    }
    let n = ok.len();
    update(path, |p| {
        let changed = p.apply_nvd(&ok);
        Ok(format!("fetched {n} of {} CVEs, {changed} records updated", ids.len()))
    })?;
    if !failed.is_empty() {
        bail!("{} lookups failed; first: {}", failed.len(), failed[0]);
    }
    Ok(())
}

fn print_stats(out: &mut impl Write, p: &Project, reference: &[(String, usize)]) -> Result<()> {
    let r = p.stats_report();
    writeln!(out, "libraries: {} ({} finalized)", r.libraries, r.finalized)?;
    writeln!(out, "scenarios ({} assessed):", r.distribution.total())?;
    for k in ScenarioKind::ALL {
        writeln!(
            out,
            "  {:<16} {:>4} {:>6}%",
            k.label(),
            r.distribution.count(k),
            r.distribution.percent(k)
        )?;
    }
    match &r.agreement {
        Ok(a) => writeln!(out, "Fleiss kappa: {:.6} ({})", a.kappa, a.band())?,
        Err(why) => writeln!(out, "Fleiss kappa: undefined ({why})")?,
    }
    writeln!(out, "categories:")?;
    let total: usize = r.category_counts.iter().map(|c| c.1).sum();
    let mut counts = r.category_counts.clone();
    counts.sort_by(|a, b| b.1.cmp(&a.1));
    let mut zero = Vec::new();
    for (t, n) in &counts {
        if *n == 0 {
            zero.push(t.name());
        } else {
            let pct = format_tenths(percent_tenths(*n, total));
            writeln!(out, "  {:<28} {:>4} {:>6}%", t.name(), n, pct)?;
        }
    }
    writeln!(out, "  ({} topics without libraries)", zero.len())?;
    writeln!(
        out,
        "CVSS:\n  {:<28} {:>4} {:>6} {:>6} {:>6} {:>6} {:>6}",
        "group", "#", "min", "median", "max", "mean", "stdev"
    )?;
    for row in &r.cvss_topics {
        writeln!(out, "  {}", cvss_line(row))?;
    }
    writeln!(out, "  --")?;
    for row in &r.cvss_classes {
        writeln!(out, "  {}", cvss_line(row))?;
    }
    writeln!(
        out,
        "CVEs: {} scored, {} below {}, {} without score",
        r.cves_scored, r.cves_below_floor, p.config.severity_floor, r.unscored_cves
    )?;
    for (g, ours, theirs) in r.discrepancies(reference) {
        writeln!(out, "discrepancy: {g}: {ours} here, {theirs} reported")?;
    }
    Ok(())
}

fn cvss_line(row: &CvssRow) -> String {
    let cells = match &row.summary {
        Some(s) => s.formatted(),
        None => std::array::from_fn(|_| "-".to_string()),
    };
    format!(
        "{:<28} {:>4} {:>6} {:>6} {:>6} {:>6} {:>6}",
        row.group, row.libraries, cells[0], cells[1], cells[2], cells[3], cells[4]
    )
}

/// Long-format series: `series, group, count, percent, min, median, max,
/// mean, stdev`, blank where a column does not apply.
fn stats_csv(p: &Project) -> Result<String> {
    let r = p.stats_report();
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["series", "group", "count", "percent", "min", "median", "max", "mean", "stdev"])?;
    let blank = || -> [String; 5] { Default::default() };
    let mut row = |series: &str, group: &str, count: String, pct: String, rest: [String; 5]| {
        let mut rec = vec![series.to_string(), group.to_string(), count, pct];
        rec.extend(rest);
        w.write_record(&rec)
    };
    for k in ScenarioKind::ALL {
        row("scenario", k.label(), r.distribution.count(k).to_string(), r.distribution.percent(k), blank())?;
    }
    let kappa = r.agreement.as_ref().map(|a| format!("{:.6}", a.kappa)).unwrap_or_default();
    row("kappa", "", kappa, String::new(), blank())?;
    let total: usize = r.category_counts.iter().map(|c| c.1).sum();
    for (t, n) in &r.category_counts {
        row("category", t.name(), n.to_string(), format_tenths(percent_tenths(*n, total)), blank())?;
    }
    for (series, rows) in [("cvss_category", &r.cvss_topics), ("cvss_class", &r.cvss_classes)] {
        for c in rows {
            let cells = c.summary.as_ref().map(|s| s.formatted()).unwrap_or_else(blank);
            row(series, &c.group, c.libraries.to_string(), String::new(), cells)?;
        }
    }
    row("cves", "scored", r.cves_scored.to_string(), String::new(), blank())?;
    row("cves", "below_floor", r.cves_below_floor.to_string(), String::new(), blank())?;
    row("cves", "unscored", r.unscored_cves.to_string(), String::new(), blank())?;
    let bytes = w.into_inner().map_err(|e| anyhow!("{e}"))?;
    Ok(String::from_utf8(bytes)?)
}
