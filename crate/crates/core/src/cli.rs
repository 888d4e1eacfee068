//! The `ultraclust` command line.
//!
//! Exit codes: 0 success, 1 invalid data, 2 I/O failure, 64 usage error.

use std::ffi::OsString;
use std::fmt;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use crate::cluster::{
    default_bins, distance_histogram, estimate_num_clusters, radii_from_valleys,
    spheric_clustering, DistanceHistogram, HistogramMode,
};
use crate::data::{
    lattice_generate, load_matrix_csv, load_points_csv, matrix_csv_string, pairwise_matrix,
    points_csv_string, LatticeConfig, Metric,
};
use crate::error::Error;
use crate::semiring::{minmax_product, stabilize_with, DissimMatrix, Execution, Strategy};
use crate::ultrametric::{is_ultrametric, UltraMatrix, CLUSTERABILITY_THRESHOLD};
use crate::value::ExtValue;

pub const EXIT_OK: i32 = 0;
pub const EXIT_VALIDATION: i32 = 1;
pub const EXIT_IO: i32 = 2;
pub const EXIT_USAGE: i32 = 64;

#[derive(Debug, Parser)]
#[command(
    name = "ultraclust",
    version,
    about = "Clusterability and subdominant ultrametrics via min-max matrix powers"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Stabilize the dissimilarity matrix and report clusterability.
    Analyze {
        #[command(flatten)]
        input: InputArgs,
        #[arg(long, value_enum, default_value_t = Format::Json)]
        format: Format,
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Write the subdominant ultrametric as matrix CSV.
    Ultrametric {
        #[command(flatten)]
        input: InputArgs,
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Spheric clustering of the subdominant ultrametric at a radius.
    Cluster {
        #[command(flatten)]
        input: InputArgs,
        /// A nonnegative number, `inf`, or `auto` (widest gap between
        /// consecutive distinct values of the ultrametric).
        #[arg(long)]
        radius: RadiusArg,
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Distance histogram of the input, its fixpoint, or every power.
    Histogram {
        #[command(flatten)]
        input: InputArgs,
        #[arg(long, default_value = "distinct")]
        mode: HistogramMode,
        /// Bin count for binned mode; defaults to ⌈√(pairs)⌉.
        #[arg(long)]
        bins: Option<usize>,
        #[arg(long, value_enum, default_value_t = Stage::Raw)]
        stage: Stage,
        #[arg(long, value_enum, default_value_t = Format::Csv)]
        format: Format,
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Generate a lattice point set as points CSV.
    Generate {
        /// Cluster arrangement, ROWSxCOLS.
        #[arg(long, default_value = "2x2", value_parser = parse_dims)]
        grid: (usize, usize),
        /// Points per cluster, ROWSxCOLS.
        #[arg(long, default_value = "3x3", value_parser = parse_dims)]
        cluster: (usize, usize),
        #[arg(long, default_value_t = 1.0)]
        spacing: f64,
        #[arg(long, default_value_t = 3.0)]
        gap: f64,
        #[arg(long)]
        output: Option<PathBuf>,
    },
}

#[derive(Debug, Args)]
pub struct InputArgs {
    #[arg(long)]
    pub input: PathBuf,
    #[arg(long, value_enum, default_value_t = InputKind::Matrix)]
    pub kind: InputKind,
    #[arg(long, default_value = "manhattan")]
    pub metric: Metric,
    #[arg(long, default_value = "doubling")]
    pub strategy: Strategy,
    /// Spread matrix products over all cores.
    #[arg(long)]
    pub parallel: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum InputKind {
    Matrix,
    Points,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Json,
    Text,
    Csv,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Stage {
    Raw,
    Stabilized,
    Trace,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum RadiusArg {
    Auto,
    Value(ExtValue),
}

impl FromStr for RadiusArg {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        if s == "auto" {
            return Ok(RadiusArg::Auto);
        }
        s.parse::<ExtValue>()
            .map(RadiusArg::Value)
            .map_err(|e| e.to_string())
    }
}

fn parse_dims(s: &str) -> Result<(usize, usize), String> {
    let (r, c) = s
        .split_once(['x', 'X'])
        .ok_or_else(|| format!("expected ROWSxCOLS, got {s:?}"))?;
    let r: usize = r.trim().parse().map_err(|_| format!("bad row count in {s:?}"))?;
    let c: usize = c.trim().parse().map_err(|_| format!("bad column count in {s:?}"))?;
    if r == 0 || c == 0 {
        return Err(format!("dimensions must be positive, got {s:?}"));
    }
    Ok((r, c))
}

/// Result of `analyze`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AnalysisReport {
    pub n: usize,
    pub m: usize,
    pub clusterability: f64,
    pub ultrametricity: f64,
    pub is_ultrametric: bool,
    pub distinct_values_before: usize,
    pub distinct_values_after: usize,
    pub estimated_k: Option<u64>,
    pub suggested_radius: Option<ExtValue>,
}

impl AnalysisReport {
    pub fn compute(a: &DissimMatrix, strategy: Strategy, exec: Execution) -> Self {
        let r = stabilize_with(a, strategy, exec);
        let star_hist = distance_histogram(&r.star, HistogramMode::Distinct, None)
            .expect("distinct mode takes no bins");
        let score = r.ultrametricity.to_f64();
        AnalysisReport {
            n: a.order(),
            m: r.m,
            clusterability: score,
            ultrametricity: score,
            is_ultrametric: r.m == 1,
            distinct_values_before: a.distinct_values().len(),
            distinct_values_after: r.star.distinct_values().len(),
            estimated_k: (a.order() >= 2)
                .then(|| estimate_num_clusters(star_hist.peak_count(None) as u64)),
            suggested_radius: radii_from_valleys(&star_hist, 1).radii.first().copied(),
        }
    }

    fn to_text(&self) -> String {
        let opt = |v: Option<String>| v.unwrap_or_else(|| "none".into());
        let mut s = String::new();
        s += &format!("n: {}\n", self.n);
        s += &format!("m: {}\n", self.m);
        s += &format!("clusterability: {}\n", self.clusterability);
        s += &format!("ultrametricity: {}\n", self.ultrametricity);
        s += &format!("is_ultrametric: {}\n", self.is_ultrametric);
        s += &format!("distinct_values_before: {}\n", self.distinct_values_before);
        s += &format!("distinct_values_after: {}\n", self.distinct_values_after);
        s += &format!("estimated_k: {}\n", opt(self.estimated_k.map(|k| k.to_string())));
        s += &format!(
            "suggested_radius: {}\n",
            opt(self.suggested_radius.map(|r| r.to_string()))
        );
        s += &format!(
            "note: clusterable benchmark datasets scored above {CLUSTERABILITY_THRESHOLD}; \
             treat this as a reference point, not a verdict\n"
        );
        s
    }
}

#[derive(Debug)]
enum CliError {
    Usage(String),
    Data(Error),
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        CliError::Data(e)
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Usage(msg) => write!(f, "usage error: {msg}"),
            CliError::Data(e) => write!(f, "{e}"),
        }
    }
}

impl CliError {
    fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => EXIT_USAGE,
            CliError::Data(e) if e.is_io() => EXIT_IO,
            CliError::Data(_) => EXIT_VALIDATION,
        }
    }
}

/// Parses `args` (program name first) and runs the command. Returns the
/// process exit code.
pub fn run<I, T>(args: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let rendered = e.render().to_string();
            if e.use_stderr() {
                let _ = write!(stderr, "{rendered}");
            } else {
                let _ = write!(stdout, "{rendered}");
            }
            return code;
        }
    };
    match execute(cli.command, stdout) {
        Ok(()) => EXIT_OK,
        Err(e) => {
            let _ = writeln!(stderr, "ultraclust: {e}");
            e.exit_code()
        }
    }
}

fn load_input(input: &InputArgs) -> Result<DissimMatrix, Error> {
    match input.kind {
        InputKind::Matrix => load_matrix_csv(&input.input),
        InputKind::Points => pairwise_matrix(&load_points_csv(&input.input)?, input.metric),
    }
}

fn execution(input: &InputArgs) -> Execution {
    if input.parallel {
        Execution::Parallel
    } else {
        Execution::Serial
    }
}

fn emit(output: Option<&Path>, text: &str, stdout: &mut dyn Write) -> Result<(), Error> {
    match output {
        Some(path) => fs::write(path, text).map_err(|e| Error::io(path, e)),
        None => stdout
            .write_all(text.as_bytes())
            .map_err(|e| Error::io("<stdout>", e)),
    }
}

fn subdominant_of(input: &InputArgs, a: &DissimMatrix) -> UltraMatrix {
    let r = stabilize_with(a, input.strategy, execution(input));
    UltraMatrix::from_dissim_unchecked(r.star)
}

fn execute(command: Command, stdout: &mut dyn Write) -> Result<(), CliError> {
    match command {
        Command::Analyze {
            input,
            format,
            output,
        } => {
            let a = load_input(&input)?;
            let report = AnalysisReport::compute(&a, input.strategy, execution(&input));
            let text = match format {
                Format::Json => {
                    let mut s = serde_json::to_string_pretty(&report)
                        .expect("report serializes");
                    s.push('\n');
                    s
                }
                Format::Text => report.to_text(),
                Format::Csv => {
                    return Err(CliError::Usage("analyze supports --format json or text".into()))
                }
            };
            emit(output.as_deref(), &text, stdout)?;
        }
        Command::Ultrametric { input, output } => {
            let a = load_input(&input)?;
            let u = subdominant_of(&input, &a);
            emit(output.as_deref(), &matrix_csv_string(&u), stdout)?;
        }
        Command::Cluster {
            input,
            radius,
            output,
        } => {
            let a = load_input(&input)?;
            // Non-ultrametric input is replaced by its subdominant first.
            let u = if is_ultrametric(&a) {
                UltraMatrix::from_dissim_unchecked(a)
            } else {
                subdominant_of(&input, &a)
            };
            let r = match radius {
                RadiusArg::Value(r) => r,
                RadiusArg::Auto => auto_radius(&u),
            };
            let c = spheric_clustering(&u, r);
            let mut text = String::from("point,cluster\n");
            for (p, id) in c.assignment().iter().enumerate() {
                text += &format!("{p},{id}\n");
            }
            emit(output.as_deref(), &text, stdout)?;
        }
        Command::Histogram {
            input,
            mode,
            bins,
            stage,
            format,
            output,
        } => {
            let bins = match (mode, bins) {
                (HistogramMode::Distinct, Some(_)) => {
                    return Err(CliError::Usage("--bins requires --mode binned".into()))
                }
                (HistogramMode::Distinct, None) => None,
                (HistogramMode::Binned, Some(0)) => {
                    return Err(CliError::Usage("--bins must be positive".into()))
                }
                (HistogramMode::Binned, b) => b,
            };
            if format == Format::Text {
                return Err(CliError::Usage("histogram supports --format csv or json".into()));
            }
            let a = load_input(&input)?;
            let bins = match mode {
                HistogramMode::Binned => Some(bins.unwrap_or_else(|| default_bins(a.order()))),
                HistogramMode::Distinct => None,
            };
            let stages = histogram_stages(&a, stage, &input)?;
            let mut hists = Vec::with_capacity(stages.len());
            for (power, m) in &stages {
                hists.push((*power, distance_histogram(m, mode, bins)?));
            }
            let text = match format {
                Format::Json => histograms_json(&hists),
                _ => histograms_csv(mode, &hists),
            };
            emit(output.as_deref(), &text, stdout)?;
        }
        Command::Generate {
            grid,
            cluster,
            spacing,
            gap,
            output,
        } => {
            let cfg = LatticeConfig::new(grid, cluster, spacing, gap);
            cfg.validate().map_err(|e| CliError::Usage(e.to_string()))?;
            let points = lattice_generate(&cfg)?;
            emit(output.as_deref(), &points_csv_string(&points), stdout)?;
        }
    }
    Ok(())
}

/// Midpoint of the widest gap between consecutive distinct finite values;
/// with fewer than two values, the largest finite value (one cluster per
/// connected component).
fn auto_radius(u: &UltraMatrix) -> ExtValue {
    let h = distance_histogram(u, HistogramMode::Distinct, None).expect("distinct mode");
    match radii_from_valleys(&h, 1).radii.first() {
        Some(&r) => r,
        None => h
            .values
            .last()
            .and_then(|&v| ExtValue::new(v))
            .unwrap_or(ExtValue::ZERO),
    }
}

/// `(power, matrix)` pairs for the requested stage. The trace lists
/// `A, A², …, A^m = A*`.
fn histogram_stages(
    a: &DissimMatrix,
    stage: Stage,
    input: &InputArgs,
) -> Result<Vec<(usize, DissimMatrix)>, Error> {
    Ok(match stage {
        Stage::Raw => vec![(1, a.clone())],
        Stage::Stabilized => {
            let r = stabilize_with(a, input.strategy, execution(input));
            vec![(r.m, r.star)]
        }
        Stage::Trace => {
            let base = a.as_matrix();
            let mut out = vec![(1, a.clone())];
            loop {
                let (k, last) = out.last().expect("nonempty");
                let next = minmax_product(last.as_matrix(), base)?;
                if &next == last.as_matrix() {
                    break;
                }
                let k = *k + 1;
                out.push((k, DissimMatrix::from_matrix_unchecked(next)));
            }
            out
        }
    })
}

fn histograms_csv(mode: HistogramMode, hists: &[(usize, DistanceHistogram)]) -> String {
    let mut s = match mode {
        HistogramMode::Distinct => String::from("power,value,count\n"),
        HistogramMode::Binned => String::from("power,bin_start,bin_end,count\n"),
    };
    for (power, h) in hists {
        for (i, &c) in h.counts.iter().enumerate() {
            match mode {
                HistogramMode::Distinct => s += &format!("{power},{},{c}\n", h.values[i]),
                HistogramMode::Binned => {
                    s += &format!("{power},{},{},{c}\n", h.values[i], h.values[i + 1])
                }
            }
        }
        if h.overflow > 0 {
            match mode {
                HistogramMode::Distinct => s += &format!("{power},inf,{}\n", h.overflow),
                HistogramMode::Binned => s += &format!("{power},inf,inf,{}\n", h.overflow),
            }
        }
    }
    s
}

#[derive(Serialize)]
struct ValleyJson {
    position: f64,
    strength: f64,
}

#[derive(Serialize)]
struct HistogramJson {
    power: usize,
    mode: String,
    values: Vec<f64>,
    counts: Vec<usize>,
    overflow: usize,
    peaks: Vec<usize>,
    valleys: Vec<ValleyJson>,
}

fn histograms_json(hists: &[(usize, DistanceHistogram)]) -> String {
    let out: Vec<HistogramJson> = hists
        .iter()
        .map(|(power, h)| HistogramJson {
            power: *power,
            mode: h.mode.to_string(),
            values: h.values.clone(),
            counts: h.counts.clone(),
            overflow: h.overflow,
            peaks: h.peaks.clone(),
            valleys: h
                .valleys
                .iter()
                .map(|v| ValleyJson {
                    position: v.position,
                    strength: v.strength,
                })
                .collect(),
        })
        .collect();
    let mut s = serde_json::to_string_pretty(&out).expect("histograms serialize");
    s.push('\n');
    s
}
