//! Vulnerability JSON Lines and release CSV readers and writers.

use std::collections::HashSet;
use std::io::{BufRead, Read, Write};
use std::path::Path;

use chrono::{DateTime, SecondsFormat};
use serde::{Deserialize, Serialize};
use serde_json::Value;

use super::{is_full_hash, validate_path, IngestError, ReleaseRecord, VulnerabilityRecord};
use crate::Timestamp;

pub(crate) fn parse_rfc3339(s: &str) -> Result<Timestamp, String> {
    DateTime::parse_from_rfc3339(s)
        .map(|dt| dt.timestamp())
        .map_err(|e| format!("{s:?} is not an RFC3339 timestamp: {e}"))
}

pub(crate) fn format_rfc3339(ts: Timestamp) -> String {
    DateTime::from_timestamp(ts, 0)
        .expect("timestamp within chrono's range")
        .to_rfc3339_opts(SecondsFormat::Secs, true)
}

/// Builds a validated record from one decoded JSON object.
pub(crate) fn vulnerability_from_json(obj: &Value, line: usize) -> Result<VulnerabilityRecord, IngestError> {
    let schema = |reason: String| IngestError::SchemaViolation { line, reason };
    let obj = obj
        .as_object()
        .ok_or_else(|| schema("record is not a JSON object".into()))?;
    let field = |key: &str| obj.get(key).ok_or_else(|| schema(format!("missing key {key:?}")));

    let id = field("id")?
        .as_str()
        .filter(|s| !s.is_empty())
        .ok_or_else(|| schema("\"id\" must be a non-empty string".into()))?
        .to_owned();

    let severity = match field("severity")? {
        Value::Null => None,
        Value::Number(n) => {
            let s = n.as_f64().ok_or_else(|| schema("\"severity\" is not a finite number".into()))?;
            if !(0.0..=10.0).contains(&s) {
                return Err(IngestError::SeverityOutOfRange { line, severity: s });
            }
            Some(s)
        }
        _ => return Err(schema("\"severity\" must be a number or null".into())),
    };

    let published = field("published")?
        .as_str()
        .ok_or_else(|| schema("\"published\" must be an RFC3339 string".into()))
        .and_then(|s| parse_rfc3339(s).map_err(schema))?;

    let string_list = |key: &str| -> Result<Vec<String>, IngestError> {
        field(key)?
            .as_array()
            .ok_or_else(|| schema(format!("{key:?} must be an array of strings")))?
            .iter()
            .map(|v| {
                v.as_str()
                    .map(str::to_owned)
                    .ok_or_else(|| schema(format!("{key:?} must be an array of strings")))
            })
            .collect()
    };

    let commits = string_list("commits")?;
    if let Some(bad) = commits.iter().find(|c| !is_full_hash(c)) {
        return Err(schema(format!("commit {bad:?} is not 40 lowercase hex characters")));
    }
    let files = string_list("files")?;
    if files.is_empty() {
        return Err(schema("\"files\" must be non-empty".into()));
    }
    for f in &files {
        validate_path(f).map_err(schema)?;
    }

    let group_key = match obj.get("group_key") {
        None | Some(Value::Null) => commits
            .first()
            .cloned()
            .ok_or_else(|| schema("no \"group_key\" and no commit to default it from".into()))?,
        Some(Value::String(s)) if !s.is_empty() => s.clone(),
        Some(_) => return Err(schema("\"group_key\" must be a non-empty string".into())),
    };

    Ok(VulnerabilityRecord {
        id,
        severity,
        published,
        commits,
        files,
        group_key,
    })
}

/// Parses vulnerability records from a JSON Lines stream. Blank lines are skipped.
pub fn parse_vulnerability_records<R: BufRead>(input: R) -> Result<Vec<VulnerabilityRecord>, IngestError> {
    let mut out = Vec::new();
    for (idx, line) in input.lines().enumerate() {
        let line_no = idx + 1;
        let line = line.map_err(|e| IngestError::SchemaViolation {
            line: line_no,
            reason: e.to_string(),
        })?;
        if line.trim().is_empty() {
            continue;
        }
        let value: Value = serde_json::from_str(&line).map_err(|e| IngestError::SchemaViolation {
            line: line_no,
            reason: e.to_string(),
        })?;
        out.push(vulnerability_from_json(&value, line_no)?);
    }
    Ok(out)
}

pub fn load_vulnerability_records(path: impl AsRef<Path>) -> Result<Vec<VulnerabilityRecord>, IngestError> {
    let path = path.as_ref();
    let file = std::fs::File::open(path).map_err(|e| IngestError::io(path, e))?;
    parse_vulnerability_records(std::io::BufReader::new(file))
}

#[derive(Serialize)]
struct VulnerabilityLine<'a> {
    id: &'a str,
    severity: Option<f64>,
    published: String,
    commits: &'a [String],
    files: &'a [String],
    group_key: &'a str,
}

/// Writes records in the canonical JSON Lines form; re-loading yields identical records.
pub fn write_vulnerability_records<W: Write>(records: &[VulnerabilityRecord], mut out: W) -> std::io::Result<()> {
    for r in records {
        let line = VulnerabilityLine {
            id: &r.id,
            severity: r.severity,
            published: format_rfc3339(r.published),
            commits: &r.commits,
            files: &r.files,
            group_key: &r.group_key,
        };
        serde_json::to_writer(&mut out, &line)?;
        out.write_all(b"\n")?;
    }
    out.flush()
}

#[derive(Deserialize)]
struct ReleaseRow {
    name: String,
    timestamp: String,
}

/// Parses a `name,timestamp` CSV (RFC3339 timestamps) sorted ascending by time.
pub fn parse_release_list<R: Read>(input: R) -> Result<Vec<ReleaseRecord>, IngestError> {
    let mut reader = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(input);
    let headers = reader
        .headers()
        .map_err(|e| IngestError::SchemaViolation {
            line: 1,
            reason: e.to_string(),
        })?
        .clone();
    if headers.iter().collect::<Vec<_>>() != ["name", "timestamp"] {
        return Err(IngestError::SchemaViolation {
            line: 1,
            reason: format!("expected header `name,timestamp`, found `{}`", headers.iter().collect::<Vec<_>>().join(",")),
        });
    }

    let mut releases = Vec::new();
    let mut names = HashSet::new();
    for row in reader.deserialize::<ReleaseRow>() {
        let row = row.map_err(|e| IngestError::SchemaViolation {
            line: e.position().map_or(0, |p| p.line() as usize),
            reason: e.to_string(),
        })?;
        let line = releases.len() + 2;
        if row.name.is_empty() {
            return Err(IngestError::SchemaViolation {
                line,
                reason: "empty release name".into(),
            });
        }
        let timestamp =
            parse_rfc3339(&row.timestamp).map_err(|reason| IngestError::SchemaViolation { line, reason })?;
        if !names.insert(row.name.clone()) {
            return Err(IngestError::DuplicateName(row.name));
        }
        releases.push(ReleaseRecord {
            name: row.name,
            timestamp,
        });
    }

    releases.sort_by_key(|r| r.timestamp);
    if let Some(w) = releases.windows(2).find(|w| w[0].timestamp == w[1].timestamp) {
        return Err(IngestError::SchemaViolation {
            line: 0,
            reason: format!("releases {:?} and {:?} share a timestamp", w[0].name, w[1].name),
        });
    }
    Ok(releases)
}

pub fn load_release_list(path: impl AsRef<Path>) -> Result<Vec<ReleaseRecord>, IngestError> {
    let path = path.as_ref();
    let file = std::fs::File::open(path).map_err(|e| IngestError::io(path, e))?;
    parse_release_list(file)
}

pub fn write_release_list<W: Write>(releases: &[ReleaseRecord], out: W) -> std::io::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["name", "timestamp"])?;
    for r in releases {
        w.write_record([r.name.as_str(), &format_rfc3339(r.timestamp)])?;
    }
    w.flush()
}
