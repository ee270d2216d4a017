use serde::Deserialize;

use crosscat_core::ingest::NvdResponse;
use crosscat_core::model::{AttackVector, CveId, Score};

use crate::{NvdError, Result};

#[derive(Deserialize)]
#[serde(rename_all = "camelCase")]
struct Page {
    total_results: u64,
    #[serde(default)]
    vulnerabilities: Vec<Item>,
}

#[derive(Deserialize)]
struct Item {
    cve: Cve,
}

#[derive(Deserialize)]
struct Cve {
    id: String,
    #[serde(default)]
    metrics: Metrics,
}

#[derive(Deserialize, Default)]
struct Metrics {
    #[serde(rename = "cvssMetricV31", default)]
    v31: Vec<Metric>,
    #[serde(rename = "cvssMetricV30", default)]
    v30: Vec<Metric>,
}

#[derive(Deserialize)]
struct Metric {
    #[serde(rename = "type", default)]
    kind: String,
    #[serde(rename = "cvssData")]
    data: CvssData,
}

#[derive(Deserialize)]
#[serde(rename_all = "camelCase")]
struct CvssData {
    version: String,
    base_score: f64,
    attack_vector: Option<String>,
}

/// Extracts score and attack vector from an API 2.0 response body.
///
/// v3.1 wins over v3.0; within a version the `Primary` (NVD's own) entry wins
/// over secondary sources. Without any v3 entry both fields are `None`.
pub fn parse_response(cve: &CveId, body: &str) -> Result<NvdResponse> {
    let schema = |detail: String| NvdError::UpstreamSchemaError {
        cve: cve.to_string(),
        detail,
    };
    let page: Page = serde_json::from_str(body).map_err(|e| schema(e.to_string()))?;
    if page.total_results == 0 || page.vulnerabilities.is_empty() {
        return Err(NvdError::NotFound(cve.to_string()));
    }
    let item = page
        .vulnerabilities
        .into_iter()
        .find(|v| v.cve.id == cve.as_str())
        .ok_or_else(|| schema("response does not mention the requested id".into()))?;

    let pick = |list: &[Metric]| -> Option<usize> {
        list.iter()
            .position(|m| m.kind == "Primary")
            .or(if list.is_empty() { None } else { Some(0) })
    };
    let metrics = &item.cve.metrics;
    let chosen = pick(&metrics.v31)
        .map(|i| &metrics.v31[i])
        .or_else(|| pick(&metrics.v30).map(|i| &metrics.v30[i]));

    let Some(m) = chosen else {
        return Ok(NvdResponse {
            cve_id: cve.clone(),
            base_score: None,
            attack_vector: None,
            cvss_version: None,
        });
    };
    let score = Score::from_f64(m.data.base_score).map_err(|e| schema(e.to_string()))?;
    let av = m
        .data
        .attack_vector
        .as_deref()
        .ok_or_else(|| schema("v3 metric without attackVector".into()))?;
    let av = AttackVector::parse(av).map_err(|e| schema(e.to_string()))?;
    Ok(NvdResponse {
        cve_id: cve.clone(),
        base_score: Some(score),
        attack_vector: Some(av),
        cvss_version: Some(m.data.version.clone()),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn id(s: &str) -> CveId {
        CveId::parse(s).unwrap()
    }

    fn body(metrics: &str) -> String {
        format!(
            r#"{{"totalResults":1,"vulnerabilities":[{{"cve":{{"id":"CVE-2020-0001","metrics":{metrics}}}}}]}}"#
        )
    }

    #[test]
    fn v31_preferred_over_v30() {
        let b = body(
            r#"{"cvssMetricV30":[{"type":"Primary","cvssData":{"version":"3.0","baseScore":5.0,"attackVector":"LOCAL"}}],
                "cvssMetricV31":[{"type":"Primary","cvssData":{"version":"3.1","baseScore":8.8,"attackVector":"NETWORK"}}]}"#,
        );
        let r = parse_response(&id("CVE-2020-0001"), &b).unwrap();
        assert_eq!(r.base_score.unwrap().to_string(), "8.8");
        assert_eq!(r.cvss_version.as_deref(), Some("3.1"));
    }

    #[test]
    fn v30_fallback_and_v2_ignored() {
        let b = body(
            r#"{"cvssMetricV30":[{"type":"Secondary","cvssData":{"version":"3.0","baseScore":6.1,"attackVector":"NETWORK"}}],
                "cvssMetricV2":[{"type":"Primary","cvssData":{"version":"2.0","baseScore":4.3}}]}"#,
        );
        let r = parse_response(&id("CVE-2020-0001"), &b).unwrap();
        assert_eq!(r.attack_vector, Some(AttackVector::Network));
        assert_eq!(r.cvss_version.as_deref(), Some("3.0"));

        let only_v2 = body(r#"{"cvssMetricV2":[{"cvssData":{"version":"2.0","baseScore":4.3}}]}"#);
        let r = parse_response(&id("CVE-2020-0001"), &only_v2).unwrap();
        assert_eq!((r.base_score, r.attack_vector), (None, None));
    }

    #[test]
    fn schema_errors() {
        let e = parse_response(&id("CVE-2020-0001"), "{\"oops\":1}").unwrap_err();
        assert!(matches!(e, NvdError::UpstreamSchemaError { .. }));
        let no_av = body(r#"{"cvssMetricV31":[{"cvssData":{"version":"3.1","baseScore":7.0}}]}"#);
        assert!(matches!(
            parse_response(&id("CVE-2020-0001"), &no_av),
            Err(NvdError::UpstreamSchemaError { .. })
        ));
        let wrong = body("{}");
        assert!(matches!(
            parse_response(&id("CVE-2020-0002"), &wrong),
            Err(NvdError::UpstreamSchemaError { .. })
        ));
    }
}
