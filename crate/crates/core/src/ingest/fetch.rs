//! Minimal advisory fetcher.
//!
//! Issues `GET {endpoint}/repos/{project}/security-advisories?per_page=N&page=P`,
//! follows `Link: <...>; rel="next"` headers and normalizes every advisory
//! object into a [`VulnerabilityRecord`]. Recognized advisory keys:
//!
//! | record field | advisory keys (first present wins)      |
//! |--------------|-----------------------------------------|
//! | `id`         | `cve_id`, `ghsa_id`, `id`               |
//! | `severity`   | `cvss.score`, `severity` (numeric only) |
//! | `published`  | `published_at`, `published`             |
//! | `commits`    | `commits`                               |
//! | `files`      | `files`                                 |
//! | `group_key`  | `group_key`, else first commit, else id |
//!
//! Advisories without a file list cannot be mapped to components and are
//! dropped with a warning.

use std::thread::sleep;
use std::time::Duration;

use log::warn;
use serde_json::{Map, Value};

use super::records::vulnerability_from_json;
use super::{IngestError, VulnerabilityRecord};

#[derive(Debug, Clone)]
pub struct FetchOptions {
    /// Retries after the first attempt for 429/5xx responses.
    pub max_retries: u32,
    /// First backoff delay, doubled on every retry unless `Retry-After` is sent.
    pub backoff_base: Duration,
    pub max_backoff: Duration,
    pub per_page: u32,
    pub timeout: Duration,
}

impl Default for FetchOptions {
    fn default() -> Self {
        FetchOptions {
            max_retries: 5,
            backoff_base: Duration::from_secs(1),
            max_backoff: Duration::from_secs(60),
            per_page: 100,
            timeout: Duration::from_secs(30),
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct FetchOutcome {
    pub records: Vec<VulnerabilityRecord>,
    /// `(advisory id, reason)` for every advisory that could not be normalized.
    pub dropped: Vec<(String, String)>,
}

pub fn fetch_advisories(
    project: &str,
    endpoint: &str,
    token: Option<&str>,
    options: &FetchOptions,
) -> Result<FetchOutcome, IngestError> {
    let agent: ureq::Agent = ureq::Agent::config_builder()
        .http_status_as_error(false)
        .timeout_global(Some(options.timeout))
        .build()
        .into();

    let mut url = Some(format!(
        "{}/repos/{}/security-advisories?per_page={}&page=1",
        endpoint.trim_end_matches('/'),
        project,
        options.per_page
    ));
    let mut outcome = FetchOutcome::default();

    while let Some(page_url) = url.take() {
        let (body, next) = get_with_retry(&agent, &page_url, token, options)?;
        let advisories: Value =
            serde_json::from_str(&body).map_err(|e| IngestError::NetworkError(format!("invalid JSON from {page_url}: {e}")))?;
        let advisories = advisories
            .as_array()
            .ok_or_else(|| IngestError::NetworkError(format!("{page_url} did not return a JSON array")))?;
        for adv in advisories {
            match normalize(adv) {
                Ok(record) => outcome.records.push(record),
                Err((id, reason)) => {
                    warn!("dropping advisory {id}: {reason}");
                    outcome.dropped.push((id, reason));
                }
            }
        }
        url = next;
    }
    Ok(outcome)
}

fn get_with_retry(
    agent: &ureq::Agent,
    url: &str,
    token: Option<&str>,
    options: &FetchOptions,
) -> Result<(String, Option<String>), IngestError> {
    let mut attempt = 0u32;
    loop {
        let mut request = agent.get(url).header("Accept", "application/json");
        if let Some(token) = token {
            request = request.header("Authorization", format!("Bearer {token}"));
        }
        let mut response = request.call().map_err(|e| IngestError::NetworkError(e.to_string()))?;
        let status = response.status().as_u16();
        let header = |name: &str| {
            response
                .headers()
                .get(name)
                .and_then(|v| v.to_str().ok())
                .map(str::to_owned)
        };
        let retry_after = header("retry-after").and_then(|v| v.trim().parse::<u64>().ok());
        let quota_exhausted = header("x-ratelimit-remaining").is_some_and(|v| v.trim() == "0");

        match status {
            200..=299 => {
                let next = header("link").and_then(|l| next_link(&l));
                let body = response
                    .body_mut()
                    .read_to_string()
                    .map_err(|e| IngestError::NetworkError(e.to_string()))?;
                return Ok((body, next));
            }
            401 => return Err(IngestError::AuthError(format!("{url} returned 401"))),
            403 if !quota_exhausted && retry_after.is_none() => {
                return Err(IngestError::AuthError(format!("{url} returned 403")))
            }
            403 | 429 | 500..=599 => {
                if attempt >= options.max_retries {
                    return Err(if status >= 500 {
                        IngestError::NetworkError(format!("{url} returned {status} after {} attempts", attempt + 1))
                    } else {
                        IngestError::RateLimited { attempts: attempt + 1 }
                    });
                }
                let delay = match retry_after {
                    Some(secs) => Duration::from_secs(secs),
                    None => options.backoff_base.saturating_mul(1u32 << attempt.min(16)),
                };
                sleep(delay.min(options.max_backoff));
                attempt += 1;
            }
            _ => return Err(IngestError::NetworkError(format!("{url} returned {status}"))),
        }
    }
}

/// Extracts the `rel="next"` target of an RFC 8288 `Link` header.
fn next_link(header: &str) -> Option<String> {
    header.split(',').find_map(|part| {
        let (target, params) = part.split_once(';')?;
        let is_next = params
            .split(';')
            .any(|p| matches!(p.trim(), "rel=\"next\"" | "rel=next"));
        is_next.then(|| target.trim().trim_start_matches('<').trim_end_matches('>').to_owned())
    })
}

fn normalize(adv: &Value) -> Result<VulnerabilityRecord, (String, String)> {
    let pick = |keys: &[&str]| keys.iter().find_map(|k| adv.get(*k).filter(|v| !v.is_null()).cloned());
    let id = pick(&["cve_id", "ghsa_id", "id"])
        .and_then(|v| v.as_str().map(str::to_owned))
        .unwrap_or_else(|| "<unidentified>".to_owned());
    let fail = |reason: String| (id.clone(), reason);

    let severity = adv
        .pointer("/cvss/score")
        .filter(|v| v.is_number())
        .or_else(|| adv.get("severity").filter(|v| v.is_number()))
        .cloned()
        .unwrap_or(Value::Null);
    let files = pick(&["files"]).unwrap_or(Value::Array(Vec::new()));
    if files.as_array().map_or(true, |f| f.is_empty()) {
        return Err(fail("advisory lists no affected files".into()));
    }
    let commits = pick(&["commits"]).unwrap_or(Value::Array(Vec::new()));
    let group_key = pick(&["group_key"])
        .or_else(|| commits.get(0).cloned())
        .unwrap_or_else(|| Value::String(id.clone()));

    let mut obj = Map::new();
    obj.insert("id".into(), Value::String(id.clone()));
    obj.insert("severity".into(), severity);
    obj.insert(
        "published".into(),
        pick(&["published_at", "published"]).unwrap_or(Value::Null),
    );
    obj.insert("commits".into(), commits);
    obj.insert("files".into(), files);
    obj.insert("group_key".into(), group_key);

    vulnerability_from_json(&Value::Object(obj), 0).map_err(|e| fail(e.to_string()))
}
