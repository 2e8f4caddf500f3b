use super::{ContributionLedger, MetricsError};

/// Default minor-contributor threshold (10%).
pub const DEFAULT_MINOR_THRESHOLD: f64 = 0.10;

/// Ownership statistics of one component at a given minor threshold.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OwnershipProfile {
    /// Largest single contributor proportion.
    pub ownership: f64,
    pub n_contributors: u64,
    /// Contributors whose proportion is strictly below `threshold`.
    pub n_minor: u64,
    pub per_minor: f64,
    pub threshold: f64,
}

pub fn ownership_profile(ledger: &ContributionLedger, threshold: f64) -> Result<OwnershipProfile, MetricsError> {
    if !(threshold > 0.0 && threshold < 1.0) {
        return Err(MetricsError::InvalidThreshold(threshold));
    }
    let mut top = 0.0f64;
    let mut n_minor = 0u64;
    let mut n_contributors = 0u64;
    for (_, p) in ledger.proportions() {
        n_contributors += 1;
        top = top.max(p);
        if p < threshold {
            n_minor += 1;
        }
    }
    Ok(OwnershipProfile {
        ownership: top,
        n_contributors,
        n_minor,
        per_minor: n_minor as f64 / n_contributors as f64,
        threshold,
    })
}

#[cfg(test)]
mod tests {
    use std::collections::BTreeMap;

    use super::*;

    pub(crate) fn ledger(counts: &[(&str, u64)]) -> ContributionLedger {
        let counts: BTreeMap<String, u64> = counts.iter().map(|(k, v)| (k.to_string(), *v)).collect();
        ContributionLedger {
            component: "f".into(),
            cutoff: 0,
            total: counts.values().sum(),
            counts,
        }
    }

    #[test]
    fn examples() {
        let p = ownership_profile(&ledger(&[("a", 3), ("b", 1)]), 0.10).unwrap();
        assert_eq!((p.ownership, p.n_contributors, p.n_minor, p.per_minor), (0.75, 2, 0, 0.0));

        let p = ownership_profile(&ledger(&[("a", 19), ("b", 1)]), 0.10).unwrap();
        assert_eq!((p.ownership, p.n_contributors, p.n_minor, p.per_minor), (0.95, 2, 1, 0.5));

        for t in [0.01, 0.1, 0.5, 0.99] {
            let p = ownership_profile(&ledger(&[("a", 1)]), t).unwrap();
            assert_eq!((p.ownership, p.n_minor), (1.0, 0));
        }
    }

    #[test]
    fn exact_threshold_share_is_not_minor() {
        // 2/20 == 0.1 exactly in binary floating point.
        let p = ownership_profile(&ledger(&[("a", 18), ("b", 2)]), 0.10).unwrap();
        assert_eq!(p.n_minor, 0);
    }

    #[test]
    fn invalid_thresholds() {
        let l = ledger(&[("a", 1)]);
        for t in [0.0, 1.0, -0.1, 1.5, f64::NAN] {
            assert!(matches!(ownership_profile(&l, t), Err(MetricsError::InvalidThreshold(_))));
        }
    }
}
