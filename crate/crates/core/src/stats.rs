//! Agreement statistics, scenario distribution, category counts and CVSS
//! summaries.
//!
//! CVSS values are one-decimal scores, so every summary is computed exactly
//! in integer tenths; only the final rounding to hundredths (half-up) is a
//! presentation step.

use std::collections::BTreeMap;
use std::fmt;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::model::{ConflictReport, Score, ScenarioKind};
use crate::taxonomy::{NetworkClass, Topic};

/// Collapses two ordered choice lists to one category each, keeping any
/// coincidence: the first of `a`'s choices that `b` also picked is given to
/// both; with no coincidence each keeps its first choice.
pub fn reduce_pair(a: &[Topic], b: &[Topic]) -> (Topic, Topic) {
    assert!(!a.is_empty() && !b.is_empty(), "reduce_pair needs non-empty choices");
    match a.iter().find(|t| b.contains(t)) {
        Some(t) => (*t, *t),
        None => (a[0], b[0]),
    }
}

/// K-assessor form of [`reduce_pair`]: coincidence means a category shared
/// by every assessor, scanned in assessor 1's entry order.
pub fn reduce_entries(entries: &[Vec<Topic>]) -> Vec<Topic> {
    assert!(entries.iter().all(|e| !e.is_empty()));
    if let [a, b] = entries {
        let (x, y) = reduce_pair(a, b);
        return vec![x, y];
    }
    let shared = entries[0]
        .iter()
        .find(|t| entries[1..].iter().all(|e| e.contains(t)));
    match shared {
        Some(t) => vec![*t; entries.len()],
        None => entries.iter().map(|e| e[0]).collect(),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AgreementReport {
    pub kappa: f64,
    pub reduced: Vec<Vec<Topic>>,
    pub category_universe: Vec<Topic>,
}

impl AgreementReport {
    pub fn band(&self) -> &'static str {
        kappa_band(self.kappa)
    }
}

/// Landis & Koch style qualitative label.
pub fn kappa_band(kappa: f64) -> &'static str {
    match kappa {
        k if k < 0.0 => "poor",
        k if k <= 0.20 => "slight",
        k if k <= 0.40 => "fair",
        k if k <= 0.60 => "moderate",
        k if k <= 0.80 => "substantial",
        _ => "almost perfect",
    }
}

/// Fleiss' kappa over items rated by a constant number of raters. The
/// category universe is whatever appears in the input.
pub fn fleiss_kappa(items: &[Vec<Topic>]) -> Result<f64> {
    let n_items = items.len() as i128;
    if n_items == 0 {
        return Err(Error::EmptyInput);
    }
    let raters = items[0].len();
    if raters < 2 || items.iter().any(|i| i.len() != raters) {
        return Err(Error::RaggedRatings);
    }
    let n = raters as i128;
    let mut totals: BTreeMap<Topic, i128> = BTreeMap::new();
    let mut agree: i128 = 0; // sum over items of sum_j n_ij^2
    for item in items {
        let mut row: BTreeMap<Topic, i128> = BTreeMap::new();
        for t in item {
            *row.entry(*t).or_default() += 1;
            *totals.entry(*t).or_default() += 1;
        }
        agree += row.values().map(|c| c * c).sum::<i128>();
    }
    // kappa = (P - Pe) / (1 - Pe) with P = a/b and Pe = c/d, kept integral.
    let a = agree - n_items * n;
    let b = n_items * n * (n - 1);
    let c: i128 = totals.values().map(|c| c * c).sum();
    let d = (n_items * n) * (n_items * n);
    if c == d {
        return Err(Error::DegenerateAgreement);
    }
    Ok((a * d - c * b) as f64 / (b * (d - c)) as f64)
}

/// Pair-reduces every assessment and computes kappa over the result.
pub fn agreement(entries: &[Vec<Vec<Topic>>]) -> Result<AgreementReport> {
    let reduced: Vec<Vec<Topic>> = entries.iter().map(|e| reduce_entries(e)).collect();
    let kappa = fleiss_kappa(&reduced)?;
    let mut universe: Vec<Topic> = reduced.iter().flatten().copied().collect();
    universe.sort();
    universe.dedup();
    Ok(AgreementReport {
        kappa,
        reduced,
        category_universe: universe,
    })
}

/// `count / total` as a percentage with one decimal, half-up, in tenths of a
/// percent.
pub fn percent_tenths(count: usize, total: usize) -> u64 {
    if total == 0 {
        return 0;
    }
    let (c, t) = (count as u64, total as u64);
    (2000 * c + t) / (2 * t)
}

pub fn format_tenths(v: u64) -> String {
    format!("{}.{}", v / 10, v % 10)
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct ScenarioDistribution {
    pub auto_final: usize,
    pub choose_one: usize,
    pub choose_from_union: usize,
}

impl ScenarioDistribution {
    pub fn total(&self) -> usize {
        self.auto_final + self.choose_one + self.choose_from_union
    }

    pub fn count(&self, kind: ScenarioKind) -> usize {
        match kind {
            ScenarioKind::AutoFinal => self.auto_final,
            ScenarioKind::ChooseOne => self.choose_one,
            ScenarioKind::ChooseFromUnion => self.choose_from_union,
        }
    }

    /// Percentage string with one decimal, e.g. `"57.8"`.
    pub fn percent(&self, kind: ScenarioKind) -> String {
        format_tenths(percent_tenths(self.count(kind), self.total()))
    }
}

pub fn conflict_distribution<'a>(
    reports: impl IntoIterator<Item = &'a ConflictReport>,
) -> ScenarioDistribution {
    let mut d = ScenarioDistribution::default();
    for r in reports {
        match r.scenario.kind() {
            ScenarioKind::AutoFinal => d.auto_final += 1,
            ScenarioKind::ChooseOne => d.choose_one += 1,
            ScenarioKind::ChooseFromUnion => d.choose_from_union += 1,
        }
    }
    d
}

/// Count per topic in canonical order, zero-count topics included.
pub fn category_counts(finals: impl IntoIterator<Item = Topic>) -> Vec<(Topic, usize)> {
    let mut counts = [0usize; 24];
    for t in finals {
        counts[t.index()] += 1;
    }
    Topic::all().map(|t| (t, counts[t.index()])).collect()
}

/// Summary of a non-empty list of CVSS scores, kept exact.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CvssSummary {
    pub n: usize,
    pub min: Score,
    pub max: Score,
    /// Twice the median in tenths (so an even-n median stays integral).
    median_x2: u64,
    sum: u64,
    sum_sq: u64,
}

impl CvssSummary {
    pub fn min_hundredths(&self) -> u64 {
        u64::from(self.min.tenths()) * 10
    }

    pub fn max_hundredths(&self) -> u64 {
        u64::from(self.max.tenths()) * 10
    }

    pub fn median_hundredths(&self) -> u64 {
        self.median_x2 * 5
    }

    /// Mean rounded half-up to hundredths.
    pub fn mean_hundredths(&self) -> u64 {
        let n = self.n as u64;
        // round(10 * sum / n)
        (20 * self.sum + n) / (2 * n)
    }

    /// Population standard deviation rounded half-up to hundredths.
    pub fn stdev_hundredths(&self) -> u64 {
        // variance in tenths^2 is v / n^2 with v = n*sum_sq - sum^2; the
        // stdev in hundredths is 10*sqrt(v)/n. Find the largest k with
        // (k - 1/2)^2 <= 100 v / n^2, i.e. (2k - 1)^2 n^2 <= 400 v.
        let n = self.n as u128;
        let v = n * self.sum_sq as u128 - (self.sum as u128).pow(2);
        let rhs = 400 * v;
        let approx = (10.0 * (v as f64).sqrt() / n as f64).round() as u128;
        let ok = |k: u128| k == 0 || (2 * k - 1).pow(2) * n * n <= rhs;
        let mut k = approx + 1;
        while !ok(k) {
            k -= 1;
        }
        while ok(k + 1) {
            k += 1;
        }
        k as u64
    }

    pub fn median(&self) -> f64 {
        self.median_x2 as f64 / 20.0
    }

    pub fn mean(&self) -> f64 {
        self.sum as f64 / self.n as f64 / 10.0
    }

    pub fn stdev(&self) -> f64 {
        let n = self.n as f64;
        let v = n * self.sum_sq as f64 - (self.sum as f64).powi(2);
        v.max(0.0).sqrt() / n / 10.0
    }

    /// `(min, median, max, mean, stdev)` in hundredths, as reported.
    pub fn rounded(&self) -> [u64; 5] {
        [
            self.min_hundredths(),
            self.median_hundredths(),
            self.max_hundredths(),
            self.mean_hundredths(),
            self.stdev_hundredths(),
        ]
    }

    /// Reported values as two-decimal strings.
    pub fn formatted(&self) -> [String; 5] {
        self.rounded().map(format_hundredths)
    }
}

impl fmt::Display for CvssSummary {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let [a, b, c, d, e] = self.formatted();
        write!(f, "n={} min={a} med={b} max={c} avg={d} sd={e}", self.n)
    }
}

pub fn format_hundredths(v: u64) -> String {
    format!("{}.{:02}", v / 100, v % 100)
}

pub fn cvss_stats(values: &[Score]) -> Result<CvssSummary> {
    if values.is_empty() {
        return Err(Error::EmptyInput);
    }
    let mut v: Vec<u64> = values.iter().map(|s| u64::from(s.tenths())).collect();
    v.sort_unstable();
    let n = v.len();
    let median_x2 = if n % 2 == 1 {
        2 * v[n / 2]
    } else {
        v[n / 2 - 1] + v[n / 2]
    };
    Ok(CvssSummary {
        n,
        min: values.iter().min().copied().expect("non-empty"),
        max: values.iter().max().copied().expect("non-empty"),
        median_x2,
        sum: v.iter().sum(),
        sum_sq: v.iter().map(|x| x * x).sum(),
    })
}

/// Per-library input to the CVSS breakdown.
#[derive(Debug, Clone)]
pub struct ScoredLibrary {
    pub category: Topic,
    pub class: NetworkClass,
    pub scores: Vec<Score>,
}

/// One row of the category/class CVSS table.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CvssRow {
    pub group: String,
    pub libraries: usize,
    /// `None` when the group has libraries but no scored CVE.
    pub summary: Option<CvssSummary>,
}

/// Topic rows (non-empty topics, most libraries first, ties in canonical
/// order) followed by the two class rows.
pub fn cvss_table(libs: &[ScoredLibrary]) -> (Vec<CvssRow>, Vec<CvssRow>) {
    let mut by_topic: BTreeMap<Topic, (usize, Vec<Score>)> = BTreeMap::new();
    let mut by_class: BTreeMap<NetworkClass, (usize, Vec<Score>)> = BTreeMap::new();
    for lib in libs {
        let e = by_topic.entry(lib.category).or_default();
        e.0 += 1;
        e.1.extend(&lib.scores);
        let e = by_class.entry(lib.class).or_default();
        e.0 += 1;
        e.1.extend(&lib.scores);
    }
    let mut topics: Vec<CvssRow> = by_topic
        .into_iter()
        .map(|(t, (n, s))| CvssRow {
            group: t.name().to_string(),
            libraries: n,
            summary: cvss_stats(&s).ok(),
        })
        .collect();
    topics.sort_by(|a, b| b.libraries.cmp(&a.libraries));
    let classes = NetworkClass::ALL
        .iter()
        .map(|c| {
            let (n, s) = by_class.remove(c).unwrap_or_default();
            CvssRow {
                group: c.label().to_string(),
                libraries: n,
                summary: cvss_stats(&s).ok(),
            }
        })
        .collect();
    (topics, classes)
}
