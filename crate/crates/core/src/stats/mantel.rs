//! Mantel permutation test between two distance matrices.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{CorrelationMatrix, StatsError};

const SYMMETRY_TOL: f64 = 1e-12;
/// Permuted statistics within this distance of the observed one count as ties.
const TIE_TOL: f64 = 1e-12;
const MAX_EXHAUSTIVE: usize = 10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Permutations {
    /// `count` row/column permutations drawn from a generator seeded with `seed`.
    Random { count: usize, seed: u64 },
    /// Every permutation of the points (at most 10 points).
    Exhaustive,
}

/// Which tail counts as extreme.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum Alternative {
    /// Association larger than chance.
    #[default]
    Greater,
    /// Association smaller than chance.
    Less,
    TwoSided,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MantelResult {
    /// Pearson correlation of the upper-triangle entries.
    pub r: f64,
    pub p: f64,
    pub permutations: usize,
    pub alternative: Alternative,
}

/// Converts a correlation matrix to distances `1 - |r|` with a zero diagonal.
pub fn correlation_to_distance(m: &CorrelationMatrix) -> Vec<Vec<f64>> {
    m.values
        .iter()
        .enumerate()
        .map(|(i, row)| {
            row.iter()
                .enumerate()
                .map(|(j, r)| if i == j { 0.0 } else { 1.0 - r.abs() })
                .collect()
        })
        .collect()
}

fn check_square_symmetric(m: &[Vec<f64>], n: usize) -> Result<(), StatsError> {
    if m.len() != n || m.iter().any(|row| row.len() != n) {
        return Err(StatsError::ShapeMismatch(format!("expected a {n}x{n} matrix")));
    }
    for i in 0..n {
        for j in i + 1..n {
            if !m[i][j].is_finite() || !m[j][i].is_finite() {
                return Err(StatsError::NonFinite);
            }
            if (m[i][j] - m[j][i]).abs() > SYMMETRY_TOL {
                return Err(StatsError::NotSymmetric);
            }
        }
    }
    Ok(())
}

/// Centered upper-triangle entries of `a` against the upper triangle of `b`
/// under a point permutation. Shared by the observed and permuted statistics
/// so the identity permutation reproduces the observed value bit for bit.
struct Kernel {
    dx: Vec<f64>,
    sxx: f64,
    mean_b: f64,
    syy: f64,
}

impl Kernel {
    fn new(a: &[Vec<f64>], b: &[Vec<f64>]) -> Option<Kernel> {
        let n = a.len();
        let upper = |m: &[Vec<f64>]| -> Vec<f64> { (0..n).flat_map(|i| (i + 1..n).map(move |j| (i, j))).map(|(i, j)| m[i][j]).collect() };
        let ua = upper(a);
        let ub = upper(b);
        let k = ua.len() as f64;
        let mean_a = ua.iter().sum::<f64>() / k;
        let mean_b = ub.iter().sum::<f64>() / k;
        let dx: Vec<f64> = ua.iter().map(|v| v - mean_a).collect();
        let sxx: f64 = dx.iter().map(|d| d * d).sum();
        let syy: f64 = ub.iter().map(|v| (v - mean_b) * (v - mean_b)).sum();
        let constant = |u: &[f64]| u.iter().all(|&v| v == u[0]);
        if constant(&ua) || constant(&ub) || sxx == 0.0 || syy == 0.0 {
            return None;
        }
        Some(Kernel { dx, sxx, mean_b, syy })
    }

    fn r(&self, b: &[Vec<f64>], perm: &[usize]) -> f64 {
        let n = perm.len();
        let mut sxy = 0.0;
        let mut k = 0;
        for i in 0..n {
            for j in i + 1..n {
                sxy += self.dx[k] * (b[perm[i]][perm[j]] - self.mean_b);
                k += 1;
            }
        }
        (sxy / (self.sxx * self.syy).sqrt()).clamp(-1.0, 1.0)
    }
}

fn is_extreme(alt: Alternative, permuted: f64, observed: f64) -> bool {
    match alt {
        Alternative::Greater => permuted >= observed - TIE_TOL,
        Alternative::Less => permuted <= observed + TIE_TOL,
        Alternative::TwoSided => permuted.abs() >= observed.abs() - TIE_TOL,
    }
}

/// Mantel test of `a` against row/column permutations of `b`.
///
/// With random permutations, `p = (1 + #extreme) / (count + 1)`; with
/// exhaustive enumeration (identity included), `p = #extreme / n!`.
pub fn mantel(
    a: &[Vec<f64>],
    b: &[Vec<f64>],
    permutations: Permutations,
    alternative: Alternative,
) -> Result<MantelResult, StatsError> {
    let n = a.len();
    if n < 3 {
        return Err(StatsError::TooFewSamples { needed: 3, got: n });
    }
    check_square_symmetric(a, n)?;
    check_square_symmetric(b, n)?;
    let kernel = Kernel::new(a, b).ok_or(StatsError::Undefined)?;

    let mut perm: Vec<usize> = (0..n).collect();
    let observed = kernel.r(b, &perm);

    let (total, p) = match permutations {
        Permutations::Random { count, seed } => {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let mut extreme = 0usize;
            for _ in 0..count {
                perm.shuffle(&mut rng);
                if is_extreme(alternative, kernel.r(b, &perm), observed) {
                    extreme += 1;
                }
            }
            (count, (1 + extreme) as f64 / (count + 1) as f64)
        }
        Permutations::Exhaustive => {
            if n > MAX_EXHAUSTIVE {
                return Err(StatsError::ShapeMismatch(format!(
                    "exhaustive enumeration supports at most {MAX_EXHAUSTIVE} points, got {n}"
                )));
            }
            let mut extreme = 0usize;
            let mut total = 0usize;
            for_each_permutation(n, |p| {
                total += 1;
                if is_extreme(alternative, kernel.r(b, p), observed) {
                    extreme += 1;
                }
            });
            (total, extreme as f64 / total as f64)
        }
    };

    Ok(MantelResult {
        r: observed,
        p,
        permutations: total,
        alternative,
    })
}

/// Heap's algorithm over `0..n`.
fn for_each_permutation(n: usize, mut visit: impl FnMut(&[usize])) {
    let mut perm: Vec<usize> = (0..n).collect();
    let mut c = vec![0usize; n];
    visit(&perm);
    let mut i = 1;
    while i < n {
        if c[i] < i {
            if i % 2 == 0 {
                perm.swap(0, i);
            } else {
                perm.swap(c[i], i);
            }
            visit(&perm);
            c[i] += 1;
            i = 1;
        } else {
            c[i] = 0;
            i += 1;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;

    fn random_distance(n: usize, rng: &mut impl Rng) -> Vec<Vec<f64>> {
        let mut m = vec![vec![0.0; n]; n];
        for i in 0..n {
            for j in i + 1..n {
                let v: f64 = rng.random();
                m[i][j] = v;
                m[j][i] = v;
            }
        }
        m
    }

    #[test]
    fn heap_enumerates_all_permutations() {
        let mut seen = std::collections::BTreeSet::new();
        for_each_permutation(4, |p| {
            seen.insert(p.to_vec());
        });
        assert_eq!(seen.len(), 24);
    }

    #[test]
    fn self_comparison() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let a = random_distance(10, &mut rng);
        let res = mantel(&a, &a, Permutations::Random { count: 999, seed: 7 }, Alternative::Greater).unwrap();
        assert_eq!(res.r, 1.0);
        assert_eq!(res.p, 1.0 / 1000.0);
    }

    #[test]
    fn seeded_runs_are_identical() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let a = random_distance(6, &mut rng);
        let b = random_distance(6, &mut rng);
        let run = || mantel(&a, &b, Permutations::Random { count: 199, seed: 42 }, Alternative::Greater).unwrap();
        let (x, y) = (run(), run());
        assert_eq!(x.r.to_bits(), y.r.to_bits());
        assert_eq!(x.p.to_bits(), y.p.to_bits());
    }

    #[test]
    fn errors() {
        let a = vec![vec![0., 1., 2.], vec![1., 0., 3.], vec![2., 3., 0.]];
        let asym = vec![vec![0., 1., 2.], vec![1.5, 0., 3.], vec![2., 3., 0.]];
        let perms = Permutations::Random { count: 9, seed: 0 };
        assert_eq!(mantel(&a, &asym, perms, Alternative::Greater), Err(StatsError::NotSymmetric));
        let small = vec![vec![0., 1.], vec![1., 0.]];
        assert!(matches!(mantel(&a, &small, perms, Alternative::Greater), Err(StatsError::ShapeMismatch(_))));
        let flat = vec![vec![0., 1., 1.], vec![1., 0., 1.], vec![1., 1., 0.]];
        assert_eq!(mantel(&a, &flat, perms, Alternative::Greater), Err(StatsError::Undefined));
    }

    #[test]
    fn distance_transform() {
        let cm = CorrelationMatrix {
            labels: vec!["a".into(), "b".into()],
            values: vec![vec![1.0, -0.25], vec![-0.25, 1.0]],
            masked: vec![vec![false; 2]; 2],
            method: crate::stats::Method::Pearson,
        };
        assert_eq!(correlation_to_distance(&cm), vec![vec![0.0, 0.75], vec![0.75, 0.0]]);
    }
}
