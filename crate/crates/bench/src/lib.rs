//! Seeded synthetic inputs shared by the benchmarks.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Two correlated columns of length `n`.
pub fn paired_columns(n: usize, seed: u64) -> (Vec<f64>, Vec<f64>) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let x: Vec<f64> = (0..n).map(|_| rng.random_range(0.0..100.0)).collect();
    let y = x.iter().map(|v| v * 0.5 + rng.random_range(-20.0..20.0)).collect();
    (x, y)
}

/// `p` predictor columns and a noisy linear target.
pub fn regression_problem(n: usize, p: usize, seed: u64) -> (Vec<Vec<f64>>, Vec<f64>) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let cols: Vec<Vec<f64>> = (0..p).map(|_| (0..n).map(|_| rng.random_range(-10.0..10.0)).collect()).collect();
    let y = (0..n)
        .map(|i| 1.0 + cols.iter().enumerate().map(|(j, c)| (j + 1) as f64 * c[i]).sum::<f64>() + rng.random_range(-1.0..1.0))
        .collect();
    (cols, y)
}

/// A symmetric `n x n` matrix with a zero diagonal.
pub fn distance_matrix(n: usize, seed: u64) -> Vec<Vec<f64>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut m = vec![vec![0.0; n]; n];
    for i in 0..n {
        for j in i + 1..n {
            let v = rng.random_range(0.0..1.0);
            m[i][j] = v;
            m[j][i] = v;
        }
    }
    m
}

/// A `git log --numstat` style log with `commits` records over `files` paths.
pub fn commit_log(commits: usize, files: usize, seed: u64) -> String {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = String::new();
    for c in 0..commits {
        if c > 0 {
            out.push_str("\n\n");
        }
        let author = rng.random_range(0..25);
        out.push_str(&format!("@@@{:040x}|dev{author}@example.org|{}|{:040x}", c + 1, 1_500_000_000 + c * 3600, c));
        for _ in 0..rng.random_range(1..5) {
            let f = rng.random_range(0..files);
            out.push_str(&format!("\n{}\t{}\tsrc/file{f}.rs", rng.random_range(0..200), rng.random_range(0..50)));
        }
    }
    out
}
