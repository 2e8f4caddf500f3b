use std::collections::{BTreeMap, HashMap};

use super::MetricsError;
use crate::ingest::CommitRecord;
use crate::Timestamp;

/// Commit counts per contributor for one component up to a cutoff.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ContributionLedger {
    pub component: String,
    pub cutoff: Timestamp,
    pub counts: BTreeMap<String, u64>,
    pub total: u64,
}

impl ContributionLedger {
    /// Sums counts contributor-wise. Used for group components and repository totals.
    pub fn merge<'a>(component: impl Into<String>, ledgers: impl IntoIterator<Item = &'a ContributionLedger>) -> Self {
        let mut counts = BTreeMap::new();
        let mut cutoff = Timestamp::MIN;
        for l in ledgers {
            cutoff = cutoff.max(l.cutoff);
            for (who, n) in &l.counts {
                *counts.entry(who.clone()).or_insert(0) += n;
            }
        }
        let total = counts.values().sum();
        ContributionLedger {
            component: component.into(),
            cutoff,
            counts,
            total,
        }
    }

    /// Each contributor's share of the component's commits.
    pub fn proportions(&self) -> impl Iterator<Item = (&str, f64)> + '_ {
        let total = self.total as f64;
        self.counts.iter().map(move |(k, &v)| (k.as_str(), v as f64 / total))
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ClassicMetrics {
    /// Estimated line count: cumulative added minus deleted, clamped at zero.
    pub file_size: u64,
    /// Total added plus deleted lines.
    pub code_churn: u64,
    pub churn_rate: f64,
}

impl ClassicMetrics {
    pub fn new(file_size: u64, code_churn: u64) -> Self {
        ClassicMetrics {
            file_size,
            code_churn,
            churn_rate: code_churn as f64 / file_size.max(1) as f64,
        }
    }

    /// Element-wise sum of sizes and churn; the rate is recomputed.
    pub fn sum<'a>(parts: impl IntoIterator<Item = &'a ClassicMetrics>) -> Self {
        let (size, churn) = parts
            .into_iter()
            .fold((0u64, 0u64), |(s, c), m| (s + m.file_size, c + m.code_churn));
        ClassicMetrics::new(size, churn)
    }
}

/// A commit history indexed by component.
///
/// Only non-merge commits count as contributions; merges stay in
/// [`History::commits`] but are absent from the per-component index.
#[derive(Debug, Clone)]
pub struct History {
    commits: Vec<CommitRecord>,
    /// component -> indices into `commits` of non-merge commits touching it, ascending.
    touches: HashMap<String, Vec<usize>>,
}

impl History {
    /// Builds the index. Commits are sorted by timestamp (stable) if they are not already.
    pub fn new(mut commits: Vec<CommitRecord>) -> Result<Self, MetricsError> {
        if commits.is_empty() {
            return Err(MetricsError::EmptyHistory);
        }
        commits.sort_by_key(|c| c.timestamp);
        let mut touches: HashMap<String, Vec<usize>> = HashMap::new();
        for (i, c) in commits.iter().enumerate().filter(|(_, c)| !c.is_merge()) {
            for change in &c.changes {
                let list = touches.entry(change.path.clone()).or_default();
                // A commit listing the same path twice is still one contribution.
                if list.last() != Some(&i) {
                    list.push(i);
                }
            }
        }
        Ok(History { commits, touches })
    }

    pub fn commits(&self) -> &[CommitRecord] {
        &self.commits
    }

    /// Timestamp of the first commit of the project.
    pub fn project_start(&self) -> Timestamp {
        self.commits[0].timestamp
    }

    /// Timestamp of the last commit, the evaluation point for non-vulnerable rows.
    pub fn snapshot(&self) -> Timestamp {
        self.commits[self.commits.len() - 1].timestamp
    }

    /// Components touched by at least one counted commit, sorted.
    pub fn components(&self) -> Vec<&str> {
        let mut v: Vec<&str> = self.touches.keys().map(String::as_str).collect();
        v.sort_unstable();
        v
    }

    /// Counted commits touching `component` with timestamp ≤ `cutoff`, oldest first.
    fn counted(&self, component: &str, cutoff: Timestamp) -> Result<impl Iterator<Item = &CommitRecord> + '_, MetricsError> {
        let idx = self
            .touches
            .get(component)
            .ok_or_else(|| MetricsError::ComponentUnknown(component.to_owned()))?;
        let end = idx.partition_point(|&i| self.commits[i].timestamp <= cutoff);
        if end == 0 {
            return Err(MetricsError::ComponentUnknown(component.to_owned()));
        }
        Ok(idx[..end].iter().map(|&i| &self.commits[i]))
    }

    /// Timestamp of the first counted commit touching `component`.
    pub fn first_touch(&self, component: &str) -> Result<Timestamp, MetricsError> {
        self.touches
            .get(component)
            .and_then(|idx| idx.first())
            .map(|&i| self.commits[i].timestamp)
            .ok_or_else(|| MetricsError::ComponentUnknown(component.to_owned()))
    }

    /// One commit is one contribution regardless of how many lines it changed.
    pub fn build_ledger(&self, component: &str, cutoff: Timestamp) -> Result<ContributionLedger, MetricsError> {
        let mut counts = BTreeMap::new();
        let mut total = 0;
        for c in self.counted(component, cutoff)? {
            *counts.entry(c.author.clone()).or_insert(0) += 1;
            total += 1;
        }
        Ok(ContributionLedger {
            component: component.to_owned(),
            cutoff,
            counts,
            total,
        })
    }

    pub fn classic_metrics(&self, component: &str, cutoff: Timestamp) -> Result<ClassicMetrics, MetricsError> {
        let mut added = 0u64;
        let mut deleted = 0u64;
        for c in self.counted(component, cutoff)? {
            for change in c.changes.iter().filter(|ch| ch.path == component) {
                added += change.added();
                deleted += change.deleted();
            }
        }
        Ok(ClassicMetrics::new(added.saturating_sub(deleted), added + deleted))
    }
}
