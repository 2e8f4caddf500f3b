use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use ownerscope_core::analysis::{PairMode, RatioReading};
use ownerscope_core::stats::{Alternative, Method};

/// Code ownership, time and release metrics for vulnerability analysis of a
/// repository history.
///
/// Every flag can also be set through an `OWNERSCOPE_<FLAG>` environment
/// variable (e.g. `OWNERSCOPE_SEED`); flags take precedence.
#[derive(Debug, Parser)]
#[command(name = "ownerscope", version, propagate_version = true)]
pub struct Cli {
    #[command(flatten)]
    pub global: GlobalOpts,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args)]
pub struct GlobalOpts {
    /// Print errors to stderr as a JSON object.
    #[arg(long, global = true, env = "OWNERSCOPE_JSON_ERRORS")]
    pub json_errors: bool,

    /// Worker threads for internal parallelism (output is unaffected).
    #[arg(long, global = true, env = "OWNERSCOPE_JOBS", value_name = "N")]
    pub jobs: Option<usize>,

    /// Minor-contributor threshold: share strictly below it is minor.
    #[arg(long, global = true, env = "OWNERSCOPE_THRESHOLD", default_value_t = 0.10)]
    pub threshold: f64,

    /// Seed for every random choice.
    #[arg(long, global = true, env = "OWNERSCOPE_SEED", default_value_t = 42)]
    pub seed: u64,

    /// Vulnerable to non-vulnerable ratio of the analysis dataset.
    #[arg(long, global = true, env = "OWNERSCOPE_RATIO", default_value_t = 1.0)]
    pub ratio: f64,

    /// How `--ratio` and the ratio sweep settings are read.
    #[arg(long, global = true, env = "OWNERSCOPE_RATIO_READING", value_enum, default_value_t = ReadingArg::VulnerableFraction)]
    pub ratio_reading: ReadingArg,

    /// Decay rate of the exponential similarity.
    #[arg(long, global = true, env = "OWNERSCOPE_LAMBDA", default_value_t = 1.0)]
    pub lambda: f64,

    /// Mantel test permutations.
    #[arg(long, global = true, env = "OWNERSCOPE_PERMUTATIONS", default_value_t = 999)]
    pub permutations: usize,

    /// Mantel tail; defaults to `less` for the ratio sweep and `greater` otherwise.
    #[arg(long, global = true, env = "OWNERSCOPE_MANTEL_ALTERNATIVE", value_enum)]
    pub mantel_alternative: Option<AlternativeArg>,

    /// Which sweep settings are compared pairwise.
    #[arg(long, global = true, env = "OWNERSCOPE_PAIR_MODE", value_enum, default_value_t = PairModeArg::All)]
    pub pair_mode: PairModeArg,

    /// Days per month in stage rules.
    #[arg(long, global = true, env = "OWNERSCOPE_MONTH_DAYS", default_value_t = 30.0)]
    pub month_days: f64,

    /// Days per year in stage rules.
    #[arg(long, global = true, env = "OWNERSCOPE_YEAR_DAYS", default_value_t = 365.0)]
    pub year_days: f64,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Convert raw inputs into canonical files.
    #[command(subcommand)]
    Ingest(IngestCommand),
    /// Compute one metric row per (component, vulnerability) plus snapshot rows.
    Metrics(MetricsArgs),
    /// Run an analysis over a metrics table.
    #[command(subcommand)]
    Analyze(AnalyzeCommand),
}

#[derive(Debug, Subcommand)]
pub enum IngestCommand {
    /// Parse `git log --numstat` output into commits.jsonl.
    History {
        /// Output of `git log --numstat --date=unix --no-renames --pretty=format:"@@@%H|%ae|%ad|%P"`.
        #[arg(long, env = "OWNERSCOPE_LOG")]
        log: PathBuf,
        /// Destination, `-` for stdout.
        #[arg(short, long, default_value = "-")]
        output: PathBuf,
    },
    /// Validate a `name,timestamp` release list and write it sorted.
    Releases {
        #[arg(long, env = "OWNERSCOPE_RELEASES_FILE")]
        file: PathBuf,
        #[arg(short, long, default_value = "-")]
        output: PathBuf,
    },
    /// Validate advisory records, or fetch them from an advisory API.
    Vulns(VulnsArgs),
}

#[derive(Debug, Args)]
#[command(group = clap::ArgGroup::new("source").required(true).args(["file", "fetch"]))]
pub struct VulnsArgs {
    /// JSON Lines advisory records.
    #[arg(long, env = "OWNERSCOPE_VULNS_FILE")]
    pub file: Option<PathBuf>,
    /// Fetch advisories over HTTP instead of reading a file.
    #[arg(long, requires_all = ["project", "endpoint"])]
    pub fetch: bool,
    /// Repository slug, e.g. `owner/name`.
    #[arg(long, env = "OWNERSCOPE_PROJECT")]
    pub project: Option<String>,
    /// API base URL.
    #[arg(long, env = "OWNERSCOPE_ENDPOINT")]
    pub endpoint: Option<String>,
    /// Bearer token for the advisory API.
    #[arg(long, env = "OWNERSCOPE_TOKEN", hide_env_values = true)]
    pub token: Option<String>,
    /// Retries for rate-limited or failing requests.
    #[arg(long, env = "OWNERSCOPE_MAX_RETRIES", default_value_t = 5)]
    pub max_retries: u32,
    #[arg(short, long, default_value = "-")]
    pub output: PathBuf,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Aggregate {
    /// One row per file.
    File,
    /// A single row covering the whole repository.
    Repo,
}

#[derive(Debug, Args)]
pub struct MetricsArgs {
    /// commits.jsonl from `ingest history`.
    #[arg(long, env = "OWNERSCOPE_COMMITS")]
    pub commits: PathBuf,
    /// Release list from `ingest releases`.
    #[arg(long, env = "OWNERSCOPE_RELEASES")]
    pub releases: PathBuf,
    /// Advisory records from `ingest vulns`.
    #[arg(long, env = "OWNERSCOPE_VULNS")]
    pub vulns: PathBuf,
    /// `component,lines` CSV replacing the estimated size of snapshot rows.
    #[arg(long, env = "OWNERSCOPE_SIZES")]
    pub sizes: Option<PathBuf>,
    #[arg(long, env = "OWNERSCOPE_AGGREGATE", value_enum, default_value_t = Aggregate::File)]
    pub aggregate: Aggregate,
    #[arg(short, long, default_value = "-")]
    pub output: PathBuf,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Target {
    IsDefective,
    TimeStage,
    Severity,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Axis {
    Ratio,
    Threshold,
    Locality,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Json,
    Text,
}

#[derive(Debug, Args)]
pub struct ReportOpts {
    /// Destination of the report, `-` for stdout.
    #[arg(short, long, default_value = "-")]
    pub output: PathBuf,
    #[arg(long, value_enum, default_value_t = Format::Json)]
    pub format: Format,
}

#[derive(Debug, Subcommand)]
pub enum AnalyzeCommand {
    /// Correlate every metric with a vulnerability target.
    Correlate {
        #[arg(long, value_enum)]
        target: Target,
        /// metrics.csv from `metrics`.
        #[arg(long, env = "OWNERSCOPE_METRICS")]
        metrics: PathBuf,
        /// Coefficients to report.
        #[arg(long, value_delimiter = ',', default_value = "pearson,spearman,kendall")]
        methods: Vec<MethodArg>,
        /// Also write the metric correlation matrix (first method) as CSV.
        #[arg(long)]
        matrix_csv: Option<PathBuf>,
        #[command(flatten)]
        report: ReportOpts,
    },
    /// Fit the regression robustness ledger.
    Regress {
        #[arg(long, env = "OWNERSCOPE_METRICS")]
        metrics: PathBuf,
        #[command(flatten)]
        report: ReportOpts,
    },
    /// Distortion checks across ratios, thresholds or group locality.
    Sweep(SweepArgs),
}

#[derive(Debug, Args)]
pub struct SweepArgs {
    #[arg(long, value_enum)]
    pub axis: Axis,
    /// metrics.csv; required for the ratio axis.
    #[arg(long, env = "OWNERSCOPE_METRICS", required_if_eq("axis", "ratio"))]
    pub metrics: Option<PathBuf>,
    /// commits.jsonl; required for the threshold and locality axes.
    #[arg(long, env = "OWNERSCOPE_COMMITS", required_if_eq_any([("axis", "threshold"), ("axis", "locality")]))]
    pub commits: Option<PathBuf>,
    #[arg(long, env = "OWNERSCOPE_RELEASES", required_if_eq_any([("axis", "threshold"), ("axis", "locality")]))]
    pub releases: Option<PathBuf>,
    #[arg(long, env = "OWNERSCOPE_VULNS", required_if_eq_any([("axis", "threshold"), ("axis", "locality")]))]
    pub vulns: Option<PathBuf>,
    /// Coefficient behind every matrix.
    #[arg(long, value_enum, default_value_t = MethodArg::Pearson)]
    pub method: MethodArg,
    /// Directory receiving one CSV per correlation matrix.
    #[arg(long)]
    pub matrix_dir: Option<PathBuf>,
    #[command(flatten)]
    pub report: ReportOpts,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum MethodArg {
    Pearson,
    Spearman,
    Kendall,
}

impl From<MethodArg> for Method {
    fn from(m: MethodArg) -> Self {
        match m {
            MethodArg::Pearson => Method::Pearson,
            MethodArg::Spearman => Method::Spearman,
            MethodArg::Kendall => Method::Kendall,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum AlternativeArg {
    Greater,
    Less,
    TwoSided,
}

impl From<AlternativeArg> for Alternative {
    fn from(a: AlternativeArg) -> Self {
        match a {
            AlternativeArg::Greater => Alternative::Greater,
            AlternativeArg::Less => Alternative::Less,
            AlternativeArg::TwoSided => Alternative::TwoSided,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum PairModeArg {
    All,
    Consecutive,
}

impl From<PairModeArg> for PairMode {
    fn from(p: PairModeArg) -> Self {
        match p {
            PairModeArg::All => PairMode::All,
            PairModeArg::Consecutive => PairMode::Consecutive,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ReadingArg {
    /// 0.1 means ten non-vulnerable rows per vulnerable row.
    VulnerableFraction,
    /// 0.1 means one non-vulnerable row per ten vulnerable rows.
    NonVulnerableFraction,
}

impl From<ReadingArg> for RatioReading {
    fn from(r: ReadingArg) -> Self {
        match r {
            ReadingArg::VulnerableFraction => RatioReading::VulnerableFraction,
            ReadingArg::NonVulnerableFraction => RatioReading::NonVulnerableFraction,
        }
    }
}
