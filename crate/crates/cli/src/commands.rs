use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs::{self, File};
use std::io::{self, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use log::{info, warn};
use ownerscope_core::analysis::{
    build_dataset, direct_correlation_report, locality_check, ratio_sweep, regression_suite,
    severity_correlation_report, split_by_class, staged_correlation_report, threshold_sweep, Corpus, DatasetSpec,
    Frame, LocalityReport, ModelFit, SweepConfig, SweepReport, CORE_METRICS,
};
use ownerscope_core::ingest::{
    fetch_advisories, load_commits_jsonl, load_release_list, load_vulnerability_records, parse_commit_log,
    write_commits_jsonl, write_release_list, write_vulnerability_records, FetchOptions,
};
use ownerscope_core::metrics::{
    assemble_repository_row, build_metric_table, read_metrics_csv, write_metrics_csv, Calendar, History, MetricRow,
    ProjectContext,
};
use ownerscope_core::stats::{correlation_matrix, CorrelationMatrix, Method};
use serde::Serialize;

use crate::args::{Aggregate, AnalyzeCommand, Axis, Format, GlobalOpts, IngestCommand, MetricsArgs, ReportOpts, SweepArgs, Target, VulnsArgs};
use crate::error::CliError;

type Result<T> = std::result::Result<T, CliError>;

fn io_error(path: &Path, e: impl std::fmt::Display) -> CliError {
    CliError::input(format!("{}: {e}", path.display()))
}

fn is_stdio(path: &Path) -> bool {
    path.as_os_str() == "-"
}

/// Writes through a buffered sink and flushes it, `-` meaning stdout.
fn write_output(path: &Path, body: impl FnOnce(&mut dyn Write) -> io::Result<()>) -> Result<()> {
    let result = if is_stdio(path) {
        let stdout = io::stdout();
        let mut lock = stdout.lock();
        match body(&mut lock).and_then(|_| lock.flush()) {
            // A closed reader (e.g. `| head`) is not a failure.
            Err(e) if e.kind() == io::ErrorKind::BrokenPipe => Ok(()),
            other => other,
        }
    } else {
        File::create(path).and_then(|f| {
            let mut w = BufWriter::new(f);
            body(&mut w)?;
            w.flush()
        })
    };
    result.map_err(|e| io_error(path, e))
}

fn csv_to_io(e: csv::Error) -> io::Error {
    io::Error::other(e)
}

fn calendar(g: &GlobalOpts) -> Result<Calendar> {
    if !(g.month_days > 0.0 && g.year_days > 0.0) {
        return Err(CliError::input("--month-days and --year-days must be positive"));
    }
    Ok(Calendar {
        month_days: g.month_days,
        year_days: g.year_days,
    })
}

pub fn ingest(cmd: &IngestCommand) -> Result<()> {
    match cmd {
        IngestCommand::History { log, output } => {
            let bytes = fs::read(log).map_err(|e| io_error(log, e))?;
            let commits = parse_commit_log(&bytes)?;
            info!("parsed {} commits", commits.len());
            write_output(output, |w| write_commits_jsonl(&commits, w))
        }
        IngestCommand::Releases { file, output } => {
            let releases = load_release_list(file)?;
            write_output(output, |w| write_release_list(&releases, w))
        }
        IngestCommand::Vulns(args) => ingest_vulns(args),
    }
}

fn ingest_vulns(args: &VulnsArgs) -> Result<()> {
    let records = if args.fetch {
        let (Some(project), Some(endpoint)) = (&args.project, &args.endpoint) else {
            return Err(CliError::input("--fetch requires --project and --endpoint"));
        };
        let options = FetchOptions {
            max_retries: args.max_retries,
            ..FetchOptions::default()
        };
        let outcome = fetch_advisories(project, endpoint, args.token.as_deref(), &options)?;
        if !outcome.dropped.is_empty() {
            eprintln!("dropped {} advisories without usable file lists", outcome.dropped.len());
        }
        outcome.records
    } else {
        let file = args.file.as_ref().ok_or_else(|| CliError::input("--file or --fetch is required"))?;
        load_vulnerability_records(file)?
    };
    write_output(&args.output, |w| write_vulnerability_records(&records, w))
}

struct Inputs {
    history: History,
    releases: Vec<ownerscope_core::ReleaseRecord>,
    vulns: Vec<ownerscope_core::VulnerabilityRecord>,
}

fn load_inputs(commits: &Path, releases: &Path, vulns: &Path) -> Result<Inputs> {
    Ok(Inputs {
        history: History::new(load_commits_jsonl(commits)?)?,
        releases: load_release_list(releases)?,
        vulns: load_vulnerability_records(vulns)?,
    })
}

fn load_sizes(path: &Path) -> Result<BTreeMap<String, u64>> {
    #[derive(serde::Deserialize)]
    struct SizeRow {
        component: String,
        lines: u64,
    }
    let file = File::open(path).map_err(|e| io_error(path, e))?;
    let mut reader = csv::Reader::from_reader(BufReader::new(file));
    reader
        .deserialize::<SizeRow>()
        .map(|r| r.map(|r| (r.component, r.lines)).map_err(|e| io_error(path, e)))
        .collect()
}

pub fn metrics(g: &GlobalOpts, args: &MetricsArgs) -> Result<()> {
    let inputs = load_inputs(&args.commits, &args.releases, &args.vulns)?;
    let ctx = ProjectContext {
        history: &inputs.history,
        releases: &inputs.releases,
        threshold: g.threshold,
        calendar: calendar(g)?,
    };
    let rows = match args.aggregate {
        Aggregate::Repo => vec![assemble_repository_row(&ctx, &inputs.vulns)?],
        Aggregate::File => {
            let (mut rows, exclusions) = build_metric_table(&ctx, &inputs.vulns)?;
            if !exclusions.is_empty() {
                eprintln!("excluded {} (vulnerability, component) pairs:", exclusions.len());
                for ex in &exclusions {
                    eprintln!("  {} {}: {}", ex.vulnerability, ex.component, ex.reason);
                }
            }
            if let Some(path) = &args.sizes {
                let sizes = load_sizes(path)?;
                for row in rows.iter_mut().filter(|r| r.is_defective == 0) {
                    if let Some(&lines) = sizes.get(&row.component) {
                        row.set_file_size(lines);
                    }
                }
            }
            rows
        }
    };
    info!("{} metric rows", rows.len());
    write_output(&args.output, |w| write_metrics_csv(&rows, w).map_err(csv_to_io))
}

fn load_metrics(path: &Path) -> Result<Vec<MetricRow>> {
    let file = File::open(path).map_err(|e| io_error(path, e))?;
    read_metrics_csv(BufReader::new(file)).map_err(|e| io_error(path, e))
}

#[derive(Serialize)]
struct DatasetInfo {
    seed: u64,
    ratio: f64,
    n_vulnerable: usize,
    n_nonvulnerable: usize,
}

/// The analysis dataset: every vulnerable row plus a seeded sample of the pool.
fn dataset(g: &GlobalOpts, rows: &[MetricRow]) -> Result<(Vec<MetricRow>, DatasetInfo)> {
    let (vulnerable, pool) = split_by_class(rows);
    let spec = DatasetSpec {
        ratio: g.ratio,
        seed: g.seed,
        reading: g.ratio_reading.into(),
    };
    let data = build_dataset(&vulnerable, &pool, &spec)?;
    let info = DatasetInfo {
        seed: g.seed,
        ratio: g.ratio,
        n_vulnerable: vulnerable.len(),
        n_nonvulnerable: data.len() - vulnerable.len(),
    };
    Ok((data, info))
}

fn emit<T: Serialize>(opts: &ReportOpts, value: &T, text: impl FnOnce() -> String) -> Result<()> {
    match opts.format {
        Format::Json => {
            let body = serde_json::to_string_pretty(value).map_err(|e| CliError::input(e.to_string()))?;
            write_output(&opts.output, |w| writeln!(w, "{body}"))
        }
        Format::Text => {
            let body = text();
            write_output(&opts.output, |w| w.write_all(body.as_bytes()))
        }
    }
}

fn write_matrix(path: &Path, m: &CorrelationMatrix) -> Result<()> {
    write_output(path, |w| m.write_csv(w).map_err(csv_to_io))
}

pub fn analyze(g: &GlobalOpts, cmd: &AnalyzeCommand) -> Result<()> {
    match cmd {
        AnalyzeCommand::Correlate {
            target,
            metrics,
            methods,
            matrix_csv,
            report,
        } => {
            let rows = load_metrics(metrics)?;
            let methods: Vec<Method> = methods.iter().map(|&m| m.into()).collect();
            let (data, info) = dataset(g, &rows)?;
            let frame = Frame::from_rows(&data);
            let (name, result) = match target {
                Target::IsDefective => ("is-defective", direct_correlation_report(&frame, &methods)?),
                Target::TimeStage => ("time-stage", staged_correlation_report(&frame, &methods)?),
                Target::Severity => ("severity", severity_correlation_report(&frame, &methods)?),
            };
            if let Some(path) = matrix_csv {
                let method = methods.first().copied().unwrap_or(Method::Pearson);
                let m = correlation_matrix(&frame, &CORE_METRICS, method)
                    .map_err(ownerscope_core::analysis::AnalysisError::from)?;
                write_matrix(path, &m)?;
            }
            #[derive(Serialize)]
            struct Out<'a, R> {
                command: &'static str,
                target: &'a str,
                dataset: DatasetInfo,
                report: R,
            }
            let text = result.render_text();
            emit(
                report,
                &Out {
                    command: "correlate",
                    target: name,
                    dataset: info,
                    report: &result,
                },
                || text,
            )
        }
        AnalyzeCommand::Regress { metrics, report } => {
            let rows = load_metrics(metrics)?;
            let (data, info) = dataset(g, &rows)?;
            let fits = regression_suite(&Frame::from_rows(&data));
            #[derive(Serialize)]
            struct Out<'a> {
                command: &'static str,
                dataset: DatasetInfo,
                models: &'a [ModelFit],
            }
            emit(
                report,
                &Out {
                    command: "regress",
                    dataset: info,
                    models: &fits,
                },
                || render_models(&fits),
            )
        }
        AnalyzeCommand::Sweep(args) => sweep(g, args),
    }
}

fn sweep_config(g: &GlobalOpts, args: &SweepArgs) -> SweepConfig {
    SweepConfig {
        seed: g.seed,
        lambda: g.lambda,
        permutations: g.permutations,
        mantel_alternative: g.mantel_alternative.map(Into::into),
        pair_mode: g.pair_mode.into(),
        method: args.method.into(),
        reading: g.ratio_reading.into(),
        ratio: g.ratio,
        threshold: g.threshold,
    }
}

fn corpus(g: &GlobalOpts, args: &SweepArgs) -> Result<Corpus> {
    let need = |p: &Option<PathBuf>, flag: &str| {
        p.clone()
            .ok_or_else(|| CliError::input(format!("--{flag} is required for this axis")))
    };
    let inputs = load_inputs(&need(&args.commits, "commits")?, &need(&args.releases, "releases")?, &need(&args.vulns, "vulns")?)?;
    Ok(Corpus {
        history: inputs.history,
        releases: inputs.releases,
        vulns: inputs.vulns,
        calendar: calendar(g)?,
    })
}

fn sweep(g: &GlobalOpts, args: &SweepArgs) -> Result<()> {
    let cfg = sweep_config(g, args);
    if !(cfg.lambda > 0.0) {
        return Err(CliError::input("--lambda must be positive"));
    }
    match args.axis {
        Axis::Ratio => {
            let path = args.metrics.as_ref().ok_or_else(|| CliError::input("--metrics is required for the ratio axis"))?;
            let rows = load_metrics(path)?;
            let (vulnerable, pool) = split_by_class(&rows);
            let report = ratio_sweep(&vulnerable, &pool, &cfg)?;
            finish_sweep(args, &report)
        }
        Axis::Threshold => {
            let report = threshold_sweep(&corpus(g, args)?, &cfg)?;
            finish_sweep(args, &report)
        }
        Axis::Locality => {
            let report = locality_check(&corpus(g, args)?, &cfg)?;
            if let Some(dir) = &args.matrix_dir {
                fs::create_dir_all(dir).map_err(|e| io_error(dir, e))?;
                write_matrix(&dir.join("locality-files.csv"), &report.file_matrix)?;
                write_matrix(&dir.join("locality-groups.csv"), &report.group_matrix)?;
            }
            emit(&args.report, &report, || render_locality(&report))
        }
    }
}

fn finish_sweep(args: &SweepArgs, report: &SweepReport) -> Result<()> {
    if let Some(dir) = &args.matrix_dir {
        fs::create_dir_all(dir).map_err(|e| io_error(dir, e))?;
        for p in &report.points {
            write_matrix(&dir.join(format!("{}-{}.csv", report.axis, p.setting)), &p.matrix)?;
        }
    }
    if report.summary.minmax_degenerate {
        warn!("all matrices are equally far apart; min-max similarity is 1 for every pair");
    }
    emit(&args.report, report, || render_sweep(report))
}

fn opt(v: Option<f64>) -> String {
    v.map_or_else(|| "-".to_owned(), |v| format!("{v:.4}"))
}

fn render_models(fits: &[ModelFit]) -> String {
    let mut out = String::new();
    let _ = writeln!(
        out,
        "{:<24} {:<30} {:>6} {:>10} {:>12} {:>12}",
        "target", "model", "n", "adj_r2", "f_statistic", "coefficient"
    );
    for f in fits {
        match &f.result {
            Some(r) => {
                let _ = writeln!(
                    out,
                    "{:<24} {:<30} {:>6} {:>10.4} {:>12.4e} {:>12.4}",
                    f.target, f.model, f.n_rows, r.adj_r_squared, r.f_statistic, r.slope(0)
                );
            }
            None => {
                let _ = writeln!(
                    out,
                    "{:<24} {:<30} {:>6} {}",
                    f.target,
                    f.model,
                    f.n_rows,
                    f.error.as_deref().unwrap_or("not fitted")
                );
            }
        }
    }
    out
}

fn render_sweep(r: &SweepReport) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "{} sweep ({} matrices, mantel {:?})", r.axis, r.method, r.mantel_alternative);
    let _ = writeln!(
        out,
        "{:>6} {:>6} {:>10} {:>8} {:>8} {:>8} {:>8} {:>8} {:>8} {:>8}",
        "a", "b", "frobenius", "minmax", "expdecay", "cosine", "ks_d", "ks_p", "mantel_r", "mantel_p"
    );
    for p in &r.pairwise {
        let _ = writeln!(
            out,
            "{:>6} {:>6} {:>10.4} {:>8.4} {:>8.4} {:>8.4} {:>8.4} {:>8.4} {:>8} {:>8}",
            p.a,
            p.b,
            p.frobenius,
            p.minmax,
            p.expdecay,
            p.cosine,
            p.ks_d,
            p.ks_p,
            opt(p.mantel_r),
            opt(p.mantel_p)
        );
    }
    let s = &r.summary;
    let _ = writeln!(
        out,
        "mean: frobenius {:.4}, minmax {:.4}, expdecay {:.4}, cosine {:.4}, ks_p {:.4}, mantel_r {}, mantel_p {}",
        s.mean_frobenius,
        s.mean_minmax,
        s.mean_expdecay,
        s.mean_cosine,
        s.mean_ks_p,
        opt(s.mean_mantel_r),
        opt(s.mean_mantel_p)
    );
    let _ = writeln!(out, "best setting by mean cosine: {}", s.best_setting);
    out
}

fn render_locality(r: &LocalityReport) -> String {
    format!(
        "locality check ({}): {} file rows, {} group rows\nmantel r = {:.6}, p = {:.6} ({} permutations, {:?})\n",
        r.method, r.n_file_rows, r.n_group_rows, r.mantel.r, r.mantel.p, r.mantel.permutations, r.mantel.alternative
    )
}
