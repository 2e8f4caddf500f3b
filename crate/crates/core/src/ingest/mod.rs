//! Parsing of commit histories, release timelines and vulnerability records
//! into the canonical domain types.
//!
//! Canonical interchange formats are JSON Lines for commits and
//! vulnerabilities and CSV for releases.

mod commit_log;
mod fetch;
mod records;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::Timestamp;

pub use commit_log::{load_commits_jsonl, parse_commit_log, read_commits_jsonl, write_commits_jsonl};
pub use fetch::{fetch_advisories, FetchOptions, FetchOutcome};
pub use records::{
    load_release_list, load_vulnerability_records, parse_release_list, parse_vulnerability_records,
    write_release_list, write_vulnerability_records,
};

/// Errors raised while ingesting input files.
#[derive(Debug, Error)]
pub enum IngestError {
    #[error("input is empty")]
    EmptyInput,
    #[error("malformed record at line {line}: {reason}")]
    MalformedRecord { line: usize, reason: String },
    #[error("schema violation at line {line}: {reason}")]
    SchemaViolation { line: usize, reason: String },
    #[error("severity {severity} out of range [0, 10] at line {line}")]
    SeverityOutOfRange { line: usize, severity: f64 },
    #[error("duplicate release name {0:?}")]
    DuplicateName(String),
    #[error("network error: {0}")]
    NetworkError(String),
    #[error("authentication rejected: {0}")]
    AuthError(String),
    #[error("rate limited after {attempts} attempts")]
    RateLimited { attempts: u32 },
    #[error("i/o error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

impl IngestError {
    pub(crate) fn io(path: impl AsRef<std::path::Path>, source: std::io::Error) -> Self {
        IngestError::Io {
            path: path.as_ref().display().to_string(),
            source,
        }
    }

    /// True for errors caused by the network rather than by input contents.
    pub fn is_network(&self) -> bool {
        matches!(
            self,
            IngestError::NetworkError(_) | IngestError::AuthError(_) | IngestError::RateLimited { .. }
        )
    }
}

/// Added/deleted line counts of a text change.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct LineDelta {
    pub added: u64,
    pub deleted: u64,
}

/// One file touched by a commit. `lines` is `None` for binary changes,
/// whose line counts git reports as unknown.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "RawFileChange", into = "RawFileChange")]
pub struct FileChange {
    pub path: String,
    pub lines: Option<LineDelta>,
}

impl FileChange {
    pub fn text(path: impl Into<String>, added: u64, deleted: u64) -> Self {
        FileChange {
            path: path.into(),
            lines: Some(LineDelta { added, deleted }),
        }
    }

    pub fn binary(path: impl Into<String>) -> Self {
        FileChange {
            path: path.into(),
            lines: None,
        }
    }

    pub fn added(&self) -> u64 {
        self.lines.map_or(0, |d| d.added)
    }

    pub fn deleted(&self) -> u64 {
        self.lines.map_or(0, |d| d.deleted)
    }
}

#[derive(Serialize, Deserialize)]
struct RawFileChange {
    path: String,
    added: Option<u64>,
    deleted: Option<u64>,
}

impl TryFrom<RawFileChange> for FileChange {
    type Error = String;

    fn try_from(raw: RawFileChange) -> Result<Self, Self::Error> {
        validate_path(&raw.path)?;
        let lines = match (raw.added, raw.deleted) {
            (Some(added), Some(deleted)) => Some(LineDelta { added, deleted }),
            (None, None) => None,
            _ => return Err(format!("{}: added/deleted must both be null or both numeric", raw.path)),
        };
        Ok(FileChange { path: raw.path, lines })
    }
}

impl From<FileChange> for RawFileChange {
    fn from(c: FileChange) -> Self {
        RawFileChange {
            path: c.path,
            added: c.lines.map(|d| d.added),
            deleted: c.lines.map(|d| d.deleted),
        }
    }
}

/// One commit: a single contribution to every file it changes.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct CommitRecord {
    pub hash: String,
    /// Lowercased author email.
    pub author: String,
    pub timestamp: Timestamp,
    pub parent_count: u32,
    pub changes: Vec<FileChange>,
}

impl CommitRecord {
    /// Merge commits are kept in the history but never counted as contributions.
    pub fn is_merge(&self) -> bool {
        self.parent_count >= 2
    }

    pub fn touches(&self, path: &str) -> bool {
        self.changes.iter().any(|c| c.path == path)
    }

    pub(crate) fn validate(&self) -> Result<(), String> {
        if !is_full_hash(&self.hash) {
            return Err(format!("hash {:?} is not 40 lowercase hex characters", self.hash));
        }
        if self.timestamp <= 0 {
            return Err(format!("timestamp {} is not positive", self.timestamp));
        }
        if self.author != self.author.to_lowercase() {
            return Err(format!("author {:?} is not lowercased", self.author));
        }
        for c in &self.changes {
            validate_path(&c.path)?;
        }
        Ok(())
    }
}

/// A tagged release.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct ReleaseRecord {
    pub name: String,
    pub timestamp: Timestamp,
}

/// One advisory or CVE mapped onto fix commits and affected files.
#[derive(Debug, Clone, PartialEq)]
pub struct VulnerabilityRecord {
    pub id: String,
    /// CVSS score in `[0, 10]`; `None` when the advisory carries no score.
    pub severity: Option<f64>,
    pub published: Timestamp,
    pub commits: Vec<String>,
    pub files: Vec<String>,
    /// Pull-request or origin-commit identifier used for locality clustering.
    pub group_key: String,
}

pub(crate) fn is_full_hash(s: &str) -> bool {
    s.len() == 40 && s.bytes().all(|b| matches!(b, b'0'..=b'9' | b'a'..=b'f'))
}

pub(crate) fn validate_path(path: &str) -> Result<(), String> {
    if path.is_empty() {
        return Err("empty path".into());
    }
    if path.starts_with('/') {
        return Err(format!("path {path:?} is not repository-relative"));
    }
    if path.contains('\\') {
        return Err(format!("path {path:?} must use '/' separators"));
    }
    Ok(())
}
