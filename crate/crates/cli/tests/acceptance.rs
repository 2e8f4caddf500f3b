//! Acceptance suite. Runs every criterion, prints one PASS/FAIL line each and
//! exits non-zero if any failed.

use std::collections::BTreeSet;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::{Path, PathBuf};
use std::process::{Command, ExitCode};
use std::time::{Duration, Instant};

use nalgebra::{DMatrix, DVector};
use ownerscope_core::analysis::{
    locality_check, ratio_sweep, regression_suite, split_by_class, threshold_sweep, Corpus, Frame, SweepConfig,
    MODEL_LEDGER,
};
use ownerscope_core::ingest::{load_release_list, load_vulnerability_records, parse_commit_log, ReleaseRecord};
use ownerscope_core::metrics::{
    oss_stage, ownership_profile, read_metrics_csv, time_stage, Calendar, ContributionLedger, History, OssStage,
    ReleaseTimeline, TimeStage, METRIC_COLUMNS,
};
use ownerscope_core::stats::{kendall, ols_fit, pearson, spearman};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde_json::Value;
use sha2::{Digest, Sha256};

const DAY: i64 = 86_400;

type Criterion = fn() -> String;

fn main() -> ExitCode {
    let criteria: [(&str, Criterion); 8] = [
        ("statistics match brute-force and least-squares oracles", statistics_oracles),
        ("time and OSS stage boundaries", stage_boundaries),
        ("ownership properties on random ledgers", ownership_properties),
        ("synthetic corpus reproduces the time-stage sign pattern", synthetic_signs),
        ("ratio, threshold and locality sweeps are stable", sweep_stability),
        ("analyze output is byte-identical across runs", determinism),
        ("regression ledger recovers a planted coefficient", regression_ledger),
        ("end-to-end pipeline finishes in time", end_to_end),
    ];

    // Keep assertion messages but drop the default backtrace hint.
    std::panic::set_hook(Box::new(|info| eprintln!("    {info}")));

    let mut failed = 0;
    for (i, (name, run)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let outcome = catch_unwind(AssertUnwindSafe(run));
        let secs = start.elapsed().as_secs_f64();
        match outcome {
            Ok(detail) => println!("[{}/8] PASS  {name} ({secs:.2}s): {detail}", i + 1),
            Err(_) => {
                failed += 1;
                println!("[{}/8] FAIL  {name} ({secs:.2}s)", i + 1);
            }
        }
    }
    println!("acceptance: {} passed, {failed} failed", criteria.len() - failed);
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}

// ---------------------------------------------------------------------------
// Oracles

fn kendall_brute_force(x: &[f64], y: &[f64]) -> Option<f64> {
    let n = x.len();
    let (mut cd, mut tied_x, mut tied_y, mut pairs) = (0i64, 0u64, 0u64, 0u64);
    for i in 0..n {
        for j in i + 1..n {
            pairs += 1;
            let dx = x[i] - x[j];
            let dy = y[i] - y[j];
            if dx == 0.0 {
                tied_x += 1;
            }
            if dy == 0.0 {
                tied_y += 1;
            }
            if dx != 0.0 && dy != 0.0 {
                cd += if (dx > 0.0) == (dy > 0.0) { 1 } else { -1 };
            }
        }
    }
    if tied_x == pairs || tied_y == pairs {
        return None;
    }
    let denom = ((pairs - tied_x) as f64 * (pairs - tied_y) as f64).sqrt();
    Some(cd as f64 / denom)
}

fn average_ranks(x: &[f64]) -> Vec<f64> {
    // Rank = 1 + #smaller + (#equal - 1) / 2.
    x.iter()
        .map(|&v| {
            let smaller = x.iter().filter(|&&w| w < v).count() as f64;
            let equal = x.iter().filter(|&&w| w == v).count() as f64;
            1.0 + smaller + (equal - 1.0) / 2.0
        })
        .collect()
}

fn pearson_two_pass(x: &[f64], y: &[f64]) -> Option<f64> {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = x.iter().map(|a| (a - mx).powi(2)).sum();
    let syy: f64 = y.iter().map(|b| (b - my).powi(2)).sum();
    (sxx > 0.0 && syy > 0.0).then(|| sxy / (sxx * syy).sqrt())
}

/// Normal equations solved by Cholesky: a different factorisation from the
/// fit under test, and accurate enough on well-conditioned designs.
fn lstsq_oracle(xs: &[Vec<f64>], y: &[f64]) -> Vec<f64> {
    let n = y.len();
    let design = DMatrix::from_fn(n, xs.len() + 1, |i, j| if j == 0 { 1.0 } else { xs[j - 1][i] });
    let gram = design.transpose() * &design;
    let rhs = design.transpose() * DVector::from_column_slice(y);
    let beta = gram.cholesky().expect("full-rank design").solve(&rhs);
    beta.iter().copied().collect()
}

/// Draws a column: continuous, coarse (many ties) or binary.
fn random_column(rng: &mut ChaCha8Rng, n: usize, kind: u32) -> Vec<f64> {
    match kind {
        0 => (0..n).map(|_| rng.random_range(-100.0..100.0)).collect(),
        1 => (0..n).map(|_| rng.random_range(0..6) as f64).collect(),
        _ => (0..n).map(|_| rng.random_range(0..2) as f64).collect(),
    }
}

fn statistics_oracles() -> String {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed);
    let (mut undefined, mut worst_spearman, mut worst_ols) = (0, 0.0f64, 0.0f64);

    for case in 0..500 {
        let n = rng.random_range(2..=200);
        let (kx, ky) = (rng.random_range(0..3), rng.random_range(0..3));
        let x = random_column(&mut rng, n, kx);
        let y = random_column(&mut rng, n, ky);

        let tau = kendall(&x, &y).unwrap();
        let oracle = kendall_brute_force(&x, &y);
        assert_eq!(tau, oracle, "kendall differs from brute force on case {case} (n = {n})");
        undefined += usize::from(tau.is_none());

        let rho = spearman(&x, &y).unwrap();
        let on_ranks = pearson(&average_ranks(&x), &average_ranks(&y)).unwrap();
        assert_eq!(rho.is_some(), on_ranks.is_some(), "case {case}");
        if let (Some(a), Some(b)) = (rho, on_ranks) {
            assert!((a - b).abs() <= 1e-12, "spearman {a} vs pearson-on-ranks {b} on case {case}");
            let independent = pearson_two_pass(&average_ranks(&x), &average_ranks(&y)).unwrap();
            worst_spearman = worst_spearman.max((a - independent).abs());
            assert!((a - independent).abs() <= 1e-12, "case {case}");
        }

        let p = rng.random_range(1..=5);
        let m = rng.random_range(p + 2..=200);
        let xs: Vec<Vec<f64>> = (0..p).map(|_| (0..m).map(|_| rng.random_range(-10.0..10.0)).collect()).collect();
        let beta: Vec<f64> = (0..=p).map(|_| rng.random_range(-5.0..5.0)).collect();
        let target: Vec<f64> = (0..m)
            .map(|i| beta[0] + (0..p).map(|k| beta[k + 1] * xs[k][i]).sum::<f64>() + rng.random_range(-1.0..1.0))
            .collect();
        let cols: Vec<&[f64]> = xs.iter().map(Vec::as_slice).collect();
        let fit = ols_fit(&cols, &target).unwrap();
        let oracle = lstsq_oracle(&xs, &target);
        for (got, want) in fit.coefficients.iter().zip(&oracle) {
            worst_ols = worst_ols.max((got - want).abs());
        }
        assert!(worst_ols <= 1e-9, "ols coefficients differ by {worst_ols} on case {case}");
    }
    let elapsed = start.elapsed();
    assert!(elapsed < Duration::from_secs(30), "took {elapsed:?}");
    format!(
        "500 cases, {undefined} undefined tau, max spearman gap {worst_spearman:.1e}, max ols gap {worst_ols:.1e}"
    )
}

// ---------------------------------------------------------------------------

fn timeline_stage(elapsed_days: i64, release_days: &[i64]) -> OssStage {
    let releases: Vec<ReleaseRecord> = release_days
        .iter()
        .enumerate()
        .map(|(i, d)| ReleaseRecord {
            name: format!("v{i}"),
            timestamp: d * DAY,
        })
        .collect();
    let timeline = ReleaseTimeline::new(&releases, 0, elapsed_days * DAY).unwrap();
    oss_stage(&timeline, &Calendar::default())
}

fn stage_boundaries() -> String {
    let cal = Calendar::default();
    let eps = 1e-9;
    let time_cases = [
        (0.0, TimeStage::T1),
        (5.0, TimeStage::T1),
        (7.0, TimeStage::T1),
        (7.0 + eps, TimeStage::T2),
        (90.0, TimeStage::T2),
        (90.0 + eps, TimeStage::T3),
        (100.0, TimeStage::T3),
        (270.0, TimeStage::T3),
        (270.0 + eps, TimeStage::T4),
        (1095.0 - eps, TimeStage::T4),
        (1095.0, TimeStage::T5),
    ];
    for (days, want) in time_cases {
        assert_eq!(time_stage(days, &cal), want, "{days} days");
    }

    let oss_cases: [(&str, i64, &[i64], OssStage); 12] = [
        ("no release, 400 days", 400, &[], OssStage::TI),
        ("five releases over 300 days", 400, &[10, 85, 160, 235, 310], OssStage::SG),
        ("one release, 400 days ago", 500, &[100], OssStage::TG),
        ("two releases, 200 days old, last 50 days ago", 200, &[100, 150], OssStage::IG),
        ("four releases within 90 days, 700 days old", 700, &[500, 530, 560, 590], OssStage::SI),
        ("no release, 100 days", 100, &[], OssStage::II),
        ("no release, exactly one year", 365, &[], OssStage::II),
        ("steady growth then silence", 810, &[10, 85, 160, 235, 310], OssStage::SG),
        ("three releases spanning exactly six months", 700, &[400, 490, 580], OssStage::SI),
        ("three quick releases, long abandoned", 900, &[100, 150, 200], OssStage::IG),
        ("two releases, last exactly one year ago", 400, &[10, 35], OssStage::SI),
        ("release before the window only", 400, &[-50], OssStage::TI),
    ];
    for (label, elapsed, releases, want) in oss_cases {
        assert_eq!(timeline_stage(elapsed, releases), want, "{label}");
    }
    format!("{} time stage cases, {} OSS stage cases", time_cases.len(), oss_cases.len())
}

// ---------------------------------------------------------------------------

fn ownership_properties() -> String {
    let start = Instant::now();
    let thresholds = [0.01, 0.05, 0.10, 0.20, 0.35, 0.50, 0.75, 0.99];
    let mut rng = ChaCha8Rng::seed_from_u64(1000);
    for case in 0..1000 {
        let n = rng.random_range(1..=60);
        // Mix flat and heavy-tailed count distributions.
        let heavy = rng.random_bool(0.5);
        let counts: std::collections::BTreeMap<String, u64> = (0..n)
            .map(|i| {
                let c = if heavy { 1 + rng.random_range(0..6u32).pow(4) as u64 } else { rng.random_range(1..=20) };
                (format!("dev{i}"), c)
            })
            .collect();
        let ledger = ContributionLedger {
            component: "c".into(),
            cutoff: 0,
            total: counts.values().sum(),
            counts,
        };
        let sum: f64 = ledger.proportions().map(|(_, p)| p).sum();
        assert!((sum - 1.0).abs() <= 1e-9, "case {case}: proportions sum to {sum}");

        let mut previous = 0;
        for &t in &thresholds {
            let profile = ownership_profile(&ledger, t).unwrap();
            assert_eq!(profile.n_contributors, n as u64);
            assert!(profile.ownership >= 1.0 / n as f64, "case {case}: ownership {}", profile.ownership);
            assert!(profile.n_minor >= previous, "case {case}: n_minor fell at threshold {t}");
            previous = profile.n_minor;
        }
    }
    let elapsed = start.elapsed();
    assert!(elapsed < Duration::from_secs(10), "took {elapsed:?}");
    format!("1000 ledgers x {} thresholds", thresholds.len())
}

// ---------------------------------------------------------------------------
// Fixture pipeline through the binary

fn fixture_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../fixtures/synthetic")
}

fn ownerscope(args: &[&str]) -> Vec<u8> {
    let out = Command::new(env!("CARGO_BIN_EXE_ownerscope"))
        .args(args)
        .output()
        .expect("spawn ownerscope");
    assert!(
        out.status.success(),
        "ownerscope {args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    out.stdout
}

struct Prepared {
    dir: tempfile::TempDir,
}

impl Prepared {
    fn path(&self, name: &str) -> String {
        self.dir.path().join(name).to_str().unwrap().to_owned()
    }
}

/// ingest history, releases and advisories, then compute metrics.csv.
fn prepare() -> Prepared {
    let p = Prepared {
        dir: tempfile::tempdir().unwrap(),
    };
    let fx = fixture_dir();
    let input = |name: &str| fx.join(name).to_str().unwrap().to_owned();
    ownerscope(&["ingest", "history", "--log", &input("history.log"), "-o", &p.path("commits.jsonl")]);
    ownerscope(&["ingest", "releases", "--file", &input("releases.csv"), "-o", &p.path("releases.csv")]);
    ownerscope(&["ingest", "vulns", "--file", &input("vulns.jsonl"), "-o", &p.path("vulns.jsonl")]);
    ownerscope(&[
        "metrics",
        "--commits",
        &p.path("commits.jsonl"),
        "--releases",
        &p.path("releases.csv"),
        "--vulns",
        &p.path("vulns.jsonl"),
        "-o",
        &p.path("metrics.csv"),
    ]);
    p
}

/// Every analyze invocation over a prepared directory.
fn analyses(p: &Prepared) -> Vec<Vec<String>> {
    let metrics = p.path("metrics.csv");
    let inputs = [
        "--commits".to_owned(),
        p.path("commits.jsonl"),
        "--releases".to_owned(),
        p.path("releases.csv"),
        "--vulns".to_owned(),
        p.path("vulns.jsonl"),
    ];
    let mut runs: Vec<Vec<String>> = ["is-defective", "time-stage", "severity"]
        .iter()
        .map(|t| {
            ["analyze", "correlate", "--target", t, "--metrics", &metrics]
                .map(str::to_owned)
                .to_vec()
        })
        .collect();
    runs.push(["analyze", "regress", "--metrics", &metrics].map(str::to_owned).to_vec());
    runs.push(["analyze", "sweep", "--axis", "ratio", "--metrics", &metrics].map(str::to_owned).to_vec());
    for axis in ["threshold", "locality"] {
        let mut args = ["analyze", "sweep", "--axis", axis].map(str::to_owned).to_vec();
        args.extend(inputs.iter().cloned());
        runs.push(args);
    }
    runs
}

fn run_json(args: &[String]) -> Value {
    let refs: Vec<&str> = args.iter().map(String::as_str).collect();
    serde_json::from_slice(&ownerscope(&refs)).expect("analyze output is JSON")
}

fn cell(report: &Value, metric: &str, target: &str, method: &str) -> f64 {
    let row = report["rows"]
        .as_array()
        .unwrap()
        .iter()
        .find(|r| r["metric"] == metric)
        .unwrap_or_else(|| panic!("no row {metric}"));
    let c = row["cells"]
        .as_array()
        .unwrap()
        .iter()
        .find(|c| c["target"] == target && c["method"] == method)
        .unwrap_or_else(|| panic!("no cell {metric}/{target}/{method}"));
    assert_eq!(c["masked"], false, "{metric} against {target} is masked");
    c["value"].as_f64().unwrap()
}

fn synthetic_signs() -> String {
    let start = Instant::now();
    let p = prepare();

    // Stages computed by the pipeline agree with the generator's labels.
    let rows = read_metrics_csv(std::fs::File::open(p.path("metrics.csv")).unwrap()).unwrap();
    let mut labels = csv::Reader::from_path(fixture_dir().join("labels.csv")).unwrap();
    let mut matched = 0;
    let mut expected = 0;
    for rec in labels.records() {
        let rec = rec.unwrap();
        if &rec[1] != "1" {
            continue;
        }
        expected += 1;
        let age: f64 = rec[3].parse().unwrap();
        let stage: u8 = rec[4].parse().unwrap();
        let row = rows
            .iter()
            .find(|r| r.is_defective == 1 && r.component == rec[0] && (r.age - age).abs() < 1e-5)
            .unwrap_or_else(|| panic!("no metric row for {} at age {age}", &rec[0]));
        assert_eq!(row.time_stage_aged_numeric, stage, "{} ({})", &rec[0], &rec[2]);
        matched += 1;
    }
    assert_eq!(matched, expected);
    assert_eq!(rows.iter().filter(|r| r.is_defective == 1).count(), expected);

    let metrics = p.path("metrics.csv");
    let out = ownerscope(&["analyze", "correlate", "--target", "time-stage", "--metrics", &metrics]);
    let json: Value = serde_json::from_slice(&out).unwrap();
    let report = &json["report"];
    let target = "time_stage_aged_numeric";
    let own = cell(report, "ownership", target, "spearman");
    let minor = cell(report, "per_minor", target, "spearman");
    let age = cell(report, "age", target, "spearman");
    assert!(own <= -0.5, "ownership vs stage = {own}");
    assert!(minor >= 0.5, "per_minor vs stage = {minor}");
    assert!(age >= 0.9, "age vs stage = {age}");

    let elapsed = start.elapsed();
    assert!(elapsed < Duration::from_secs(10), "took {elapsed:?}");
    format!("{matched} labelled stages agree; spearman ownership {own:.3}, per_minor {minor:.3}, age {age:.3}")
}

// ---------------------------------------------------------------------------

fn load_corpus() -> Corpus {
    let fx = fixture_dir();
    let log = std::fs::read(fx.join("history.log")).unwrap();
    let mut releases = load_release_list(fx.join("releases.csv")).unwrap();
    releases.sort_by_key(|r| r.timestamp);
    Corpus {
        history: History::new(parse_commit_log(&log).unwrap()).unwrap(),
        releases,
        vulns: load_vulnerability_records(fx.join("vulns.jsonl")).unwrap(),
        calendar: Calendar::default(),
    }
}

fn sweep_stability() -> String {
    let corpus = load_corpus();
    let cfg = SweepConfig::default();

    let (rows, _) = corpus.metric_table(cfg.threshold).unwrap();
    let (vulnerable, pool) = split_by_class(&rows);
    let ratio = ratio_sweep(&vulnerable, &pool, &cfg).unwrap();
    let mut min_mantel_p = f64::INFINITY;
    for pair in &ratio.pairwise {
        let p = pair.mantel_p.unwrap_or_else(|| panic!("mantel undefined for {} vs {}", pair.a, pair.b));
        assert!(p > 0.5, "ratio {} vs {}: mantel p = {p}", pair.a, pair.b);
        min_mantel_p = min_mantel_p.min(p);
    }

    let threshold = threshold_sweep(&corpus, &cfg).unwrap();
    let mut min_ks_p = f64::INFINITY;
    let mut compared = 0;
    for pair in threshold.pairwise.iter().filter(|p| p.a == 0.10 || p.b == 0.10) {
        assert!(pair.ks_p > 0.05, "threshold {} vs {}: ks p = {}", pair.a, pair.b, pair.ks_p);
        min_ks_p = min_ks_p.min(pair.ks_p);
        compared += 1;
    }
    assert_eq!(compared, 3);

    // Every advisory as its own group: group rows coincide with file rows.
    let mut singleton = corpus.clone();
    for v in &mut singleton.vulns {
        v.group_key = v.id.clone();
    }
    let locality = locality_check(&singleton, &cfg).unwrap();
    assert_eq!(locality.groups.len(), singleton.vulns.len());
    assert_eq!(locality.mantel.r, 1.0, "singleton locality r = {}", locality.mantel.r);

    format!(
        "{} ratio pairs, min mantel p ({:?} tail) {min_mantel_p:.3}; min K-S p vs 10% {min_ks_p:.3}; singleton locality r = {}",
        ratio.pairwise.len(),
        ratio.mantel_alternative,
        locality.mantel.r
    )
}

// ---------------------------------------------------------------------------

fn hex(bytes: &[u8]) -> String {
    bytes.iter().map(|b| format!("{b:02x}")).collect()
}

fn determinism() -> String {
    let p = prepare();
    let runs = analyses(&p);
    for args in &runs {
        let refs: Vec<&str> = args.iter().map(String::as_str).collect();
        let first = Sha256::digest(ownerscope(&refs));
        // Thread count must not leak into the output.
        let mut threaded = refs.clone();
        threaded.extend(["--jobs", "4"]);
        let second = Sha256::digest(ownerscope(&threaded));
        assert_eq!(hex(&first), hex(&second), "{} differs between runs", args[1..4].join(" "));
    }
    format!("{} analyze commands, each hashed twice", runs.len())
}

// ---------------------------------------------------------------------------

fn regression_ledger() -> String {
    let names: BTreeSet<&str> = MODEL_LEDGER.iter().map(|m| m.model).collect();
    assert_eq!(names.len(), 10, "{names:?}");
    let targets: BTreeSet<&str> = MODEL_LEDGER.iter().map(|m| m.target).collect();
    assert_eq!(targets, BTreeSet::from(["is_defective", "time_stage_aged_numeric", "severity"]));

    let n = 400;
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let noise = Normal::new(0.0, 0.01).unwrap();
    let mut columns: Vec<(String, Vec<f64>)> = METRIC_COLUMNS[1..]
        .iter()
        .map(|&c| ((*c).to_owned(), (0..n).map(|_| rng.random_range(0.0..10.0)).collect()))
        .collect();
    let per_minor: Vec<f64> = (0..n).map(|_| rng.random_range(0.0..1.0)).collect();
    let target: Vec<f64> = per_minor.iter().map(|p| 2.0 * p + noise.sample(&mut rng)).collect();
    for (name, col) in &mut columns {
        match name.as_str() {
            "is_defective" => *col = vec![1.0; n],
            "per_minor" => *col = per_minor.clone(),
            "time_stage_aged_numeric" => *col = target.clone(),
            _ => {}
        }
    }
    let fits = regression_suite(&Frame::new(columns));
    assert_eq!(fits.len(), MODEL_LEDGER.len());
    let fit = fits
        .iter()
        .find(|f| f.target == "time_stage_aged_numeric" && f.model == "Per of Minor")
        .unwrap();
    let result = fit.result.as_ref().expect("per_minor model fitted");
    let coef = fit.focal_coefficient.unwrap();
    assert!((coef - 2.0).abs() <= 0.05, "coefficient {coef}");
    assert!(result.adj_r_squared > 0.95, "adjusted R² {}", result.adj_r_squared);
    format!("{} models, per_minor coefficient {coef:.4}, adjusted R² {:.4}", names.len(), result.adj_r_squared)
}

// ---------------------------------------------------------------------------

fn end_to_end() -> String {
    let start = Instant::now();
    let p = prepare();
    let runs = analyses(&p);
    for args in &runs {
        let json = run_json(args);
        assert!(json.is_object());
    }
    let elapsed = start.elapsed();
    assert!(elapsed < Duration::from_secs(60), "took {elapsed:?}");
    format!("ingest, metrics and {} analyses in {:.2}s", runs.len(), elapsed.as_secs_f64())
}
