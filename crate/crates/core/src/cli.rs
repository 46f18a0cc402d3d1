//! Command-line front end: argument definitions, the pipeline report, and
//! one function per subcommand. The `reuseprof` binary only calls [`main`].

use std::fmt::Write as _;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::{Duration, Instant};

use clap::{Args, Parser, Subcommand, ValueEnum};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::cache::{hit_rate, CacheConfig};
use crate::error::{Error, Result};
use crate::extrapolate::{PredictedProfile, Predictor};
use crate::flatten::{flatten, parse_bound_list, BoundVector};
use crate::kernel::{generate_kernel, lower_kernel, parse_kernel, EmissionTemplate, GenOptions};
use crate::oracle::{compare_profiles, exact_profile, ComparisonReport};
use crate::profile::{compute_profile, ReuseHistogram};
use crate::trace::{parse_trace, AnnotatedTrace};

#[derive(Debug, Parser)]
#[command(
    name = "reuseprof",
    version,
    about = "Static reuse-distance profiles and cache hit rates for loop nests"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Lower a kernel file to a loop-annotated trace.
    Lower {
        kernel: PathBuf,
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Unroll a trace at concrete bounds, one symbol per line.
    Flatten {
        trace: PathBuf,
        #[arg(long)]
        bounds: Option<String>,
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Exact profile by unrolling and scanning the trace.
    Profile(ProfileArgs),
    /// Exact profile with the tree-based oracle.
    Oracle(ProfileArgs),
    /// Extrapolate the profile at target bounds and estimate the hit rate.
    Predict {
        trace: PathBuf,
        /// Target bounds, outermost first. Defaults to the trace's own bounds.
        #[arg(long)]
        target: Option<String>,
        #[command(flatten)]
        cache: CacheArgs,
        /// Also compute the exact profile at the target and compare.
        #[arg(long)]
        oracle: bool,
        #[arg(long, value_enum, default_value_t = Format::Text)]
        format: Format,
        /// Write the predicted histogram here.
        #[arg(short, long)]
        output: Option<PathBuf>,
        /// Write per-bin stable/volatile provenance here.
        #[arg(long)]
        provenance: Option<PathBuf>,
    },
    /// Hit rate of a histogram file.
    Hitrate {
        histogram: PathBuf,
        #[command(flatten)]
        cache: CacheArgs,
        #[arg(long, value_enum, default_value_t = Format::Text)]
        format: Format,
    },
    /// Bin-by-bin comparison of two histogram files.
    Compare {
        a: PathBuf,
        b: PathBuf,
        #[arg(long, value_enum, default_value_t = Format::Text)]
        format: Format,
    },
    /// Emit a random valid kernel.
    Gen {
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 2)]
        depth: usize,
        /// Probability of a constant index instead of a loop variable.
        #[arg(long, default_value_t = 0.0)]
        constants: f64,
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
}

#[derive(Debug, Args)]
pub struct ProfileArgs {
    pub trace: PathBuf,
    /// Bounds, outermost first. Defaults to the trace's own bounds.
    #[arg(long)]
    pub bounds: Option<String>,
    #[arg(long, value_enum, default_value_t = Format::Text)]
    pub format: Format,
    #[arg(short, long)]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Args, Default)]
pub struct CacheArgs {
    /// key=value cache description (capacity_bytes, associativity, line_bytes).
    #[arg(long, conflicts_with_all = ["cache_size", "assoc", "line_size"])]
    pub cache: Option<PathBuf>,
    #[arg(long)]
    pub cache_size: Option<u64>,
    #[arg(long)]
    pub assoc: Option<u64>,
    #[arg(long)]
    pub line_size: Option<u64>,
}

impl CacheArgs {
    pub fn config(&self) -> Result<CacheConfig> {
        if let Some(path) = &self.cache {
            return CacheConfig::from_file(path);
        }
        let r = CacheConfig::REFERENCE;
        CacheConfig::new(
            self.cache_size.unwrap_or(r.capacity()),
            self.assoc.unwrap_or(r.associativity()),
            self.line_size.unwrap_or(r.line_size()),
        )
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Default)]
pub enum Format {
    #[default]
    Text,
    Csv,
}

/// Everything one `predict` run produced.
#[derive(Debug, Clone)]
pub struct RunReport {
    pub input: String,
    pub cache: CacheConfig,
    pub predicted: PredictedProfile,
    pub static_hit_rate: Option<f64>,
    pub oracle: Option<ReuseHistogram>,
    pub oracle_hit_rate: Option<f64>,
    pub comparison: Option<ComparisonReport>,
    /// Wall time per stage, in run order.
    pub timings: Vec<(&'static str, Duration)>,
}

impl RunReport {
    pub fn timing(&self, stage: &str) -> Option<Duration> {
        self.timings
            .iter()
            .find(|(s, _)| *s == stage)
            .map(|&(_, d)| d)
    }

    /// True when a stage failed to conserve accesses.
    pub fn flagged(&self) -> bool {
        !self.predicted.is_conserved()
    }

    pub fn to_text(&self) -> String {
        let p = &self.predicted;
        let mut out = String::new();
        let _ = writeln!(out, "input:     {}", self.input);
        let _ = writeln!(out, "target:    {}", p.target);
        let _ = writeln!(out, "method:    {}", p.method);
        let _ = writeln!(out, "samples:   {}", p.samples_used);
        let _ = writeln!(out, "predicted: {}", p.histogram);
        match p.residual() {
            Some(0) => {
                let _ = writeln!(out, "accesses:  {} (conserved)", p.histogram.total());
            }
            Some(r) => {
                let _ = writeln!(
                    out,
                    "accesses:  {} (FLAGGED: residual {r} against trace length {})",
                    p.histogram.total(),
                    p.expected_total.unwrap_or_default()
                );
            }
            None => {}
        }
        let _ = writeln!(out, "cache:     {}", self.cache);
        let _ = writeln!(out, "hit rate:  static {}", fmt_rate(self.static_hit_rate));
        if let Some(oracle) = &self.oracle {
            let _ = writeln!(out, "oracle:    {oracle}");
            let _ = writeln!(out, "hit rate:  oracle {}", fmt_rate(self.oracle_hit_rate));
        } else {
            let _ = writeln!(out, "oracle:    not requested");
        }
        if let Some(c) = &self.comparison {
            out.push_str(&c.to_text());
        }
        out.push_str("timings:\n");
        for (stage, d) in &self.timings {
            let _ = writeln!(out, "  {stage:<16} {:>12.3} ms", d.as_secs_f64() * 1e3);
        }
        out
    }

    /// The comparison CSV when an oracle ran, otherwise the predicted
    /// histogram. Timings are left out so the CSV is reproducible.
    pub fn to_csv(&self) -> String {
        match &self.comparison {
            Some(c) => c.to_csv(),
            None => self.predicted.histogram.to_csv(),
        }
    }
}

fn fmt_rate(r: Option<f64>) -> String {
    r.map_or_else(|| "n/a".into(), |r| format!("{:.4}%", r * 100.0))
}

fn read(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| Error::io(path, e))
}

fn emit(output: Option<&Path>, text: &str, stdout: &mut dyn Write) -> Result<()> {
    match output {
        Some(path) => fs::write(path, text).map_err(|e| Error::io(path, e)),
        None => stdout
            .write_all(text.as_bytes())
            .map_err(|e| Error::io("<stdout>", e)),
    }
}

pub fn read_trace(path: &Path) -> Result<AnnotatedTrace> {
    parse_trace(&read(path)?)
}

pub fn read_histogram(path: &Path) -> Result<ReuseHistogram> {
    ReuseHistogram::parse(&read(path)?)
}

fn bounds_for(trace: &AnnotatedTrace, text: Option<&str>) -> Result<BoundVector> {
    match text {
        Some(t) => BoundVector::from_values(trace, &parse_bound_list(t)?),
        None => Ok(trace.declared_bounds()),
    }
}

fn histogram_text(h: &ReuseHistogram, format: Format) -> String {
    match format {
        Format::Text => format!("{}\n", h.to_text()),
        Format::Csv => h.to_csv(),
    }
}

/// Parse a kernel and render its trace.
pub fn cmd_lower(kernel: &Path) -> Result<String> {
    let k = parse_kernel(&read(kernel)?)?;
    Ok(format!(
        "{}\n",
        lower_kernel(&k, &EmissionTemplate::default())?
    ))
}

/// Exact profile of a trace file at `bounds`, via the literal scan.
pub fn cmd_profile(trace: &Path, bounds: Option<&str>) -> Result<ReuseHistogram> {
    let t = read_trace(trace)?;
    Ok(compute_profile(&flatten(&t, &bounds_for(&t, bounds)?)?))
}

/// Exact profile of a trace file at `bounds`, via the oracle.
pub fn cmd_oracle(trace: &Path, bounds: Option<&str>) -> Result<ReuseHistogram> {
    let t = read_trace(trace)?;
    Ok(exact_profile(&flatten(&t, &bounds_for(&t, bounds)?)?))
}

pub fn cmd_predict(
    trace: &Path,
    target: Option<&str>,
    cache: &CacheConfig,
    oracle: bool,
) -> Result<RunReport> {
    let t = read_trace(trace)?;
    let bounds = bounds_for(&t, target)?;
    let mut timings = Vec::new();

    let start = Instant::now();
    let predicted = if t.depth() == 0 {
        crate::extrapolate::predict_profile(&t, &bounds)?
    } else {
        Predictor::new(&t)?.predict(&bounds.resolve(&t)?)?
    };
    timings.push(("predict", start.elapsed()));

    let start = Instant::now();
    let static_hit_rate = hit_rate(&predicted.histogram, cache).ok();
    timings.push(("hit rate", start.elapsed()));

    let (mut oracle_hist, mut oracle_hit_rate, mut comparison) = (None, None, None);
    if oracle {
        let start = Instant::now();
        let flat = flatten(&t, &bounds)?;
        timings.push(("oracle flatten", start.elapsed()));
        let start = Instant::now();
        let exact = exact_profile(&flat);
        timings.push(("oracle profile", start.elapsed()));
        oracle_hit_rate = hit_rate(&exact, cache).ok();
        comparison = Some(compare_profiles(&predicted.histogram, &exact));
        oracle_hist = Some(exact);
    }

    Ok(RunReport {
        input: trace.display().to_string(),
        cache: *cache,
        predicted,
        static_hit_rate,
        oracle: oracle_hist,
        oracle_hit_rate,
        comparison,
        timings,
    })
}

pub fn cmd_hitrate(histogram: &Path, cache: &CacheConfig) -> Result<f64> {
    hit_rate(&read_histogram(histogram)?, cache)
}

pub fn cmd_compare(a: &Path, b: &Path) -> Result<ComparisonReport> {
    Ok(compare_profiles(&read_histogram(a)?, &read_histogram(b)?))
}

pub fn cmd_gen(seed: u64, depth: usize, constants: f64) -> Result<String> {
    if !(1..=3).contains(&depth) {
        return Err(Error::UnsupportedDepth(depth));
    }
    let options = GenOptions {
        constant_index_prob: constants.clamp(0.0, 1.0),
        ..GenOptions::with_depth(depth)
    };
    Ok(generate_kernel(&options, &mut ChaCha8Rng::seed_from_u64(seed)).to_dsl())
}

/// Run one parsed command, writing results to `stdout`. Returns the exit
/// status: 0 on success, 1 when a prediction was flagged.
pub fn run(cli: Cli, stdout: &mut dyn Write) -> Result<i32> {
    match cli.command {
        Command::Lower { kernel, output } => emit(output.as_deref(), &cmd_lower(&kernel)?, stdout)?,
        Command::Flatten {
            trace,
            bounds,
            output,
        } => {
            let t = read_trace(&trace)?;
            let flat = flatten(&t, &bounds_for(&t, bounds.as_deref())?)?;
            emit(output.as_deref(), &flat.to_text(), stdout)?;
        }
        Command::Profile(a) => {
            let h = cmd_profile(&a.trace, a.bounds.as_deref())?;
            emit(a.output.as_deref(), &histogram_text(&h, a.format), stdout)?;
        }
        Command::Oracle(a) => {
            let h = cmd_oracle(&a.trace, a.bounds.as_deref())?;
            emit(a.output.as_deref(), &histogram_text(&h, a.format), stdout)?;
        }
        Command::Predict {
            trace,
            target,
            cache,
            oracle,
            format,
            output,
            provenance,
        } => {
            let report = cmd_predict(&trace, target.as_deref(), &cache.config()?, oracle)?;
            if let Some(path) = output {
                emit(
                    Some(&path),
                    &histogram_text(&report.predicted.histogram, format),
                    stdout,
                )?;
            }
            if let Some(path) = provenance {
                emit(Some(&path), &report.predicted.provenance_text(), stdout)?;
            }
            let text = match format {
                Format::Text => report.to_text(),
                Format::Csv => report.to_csv(),
            };
            emit(None, &text, stdout)?;
            return Ok(if report.flagged() { 1 } else { 0 });
        }
        Command::Hitrate {
            histogram,
            cache,
            format,
        } => {
            let config = cache.config()?;
            let rate = cmd_hitrate(&histogram, &config)?;
            let text = match format {
                Format::Text => format!("{config}: hit rate {:.6}\n", rate),
                Format::Csv => format!(
                    "capacity_bytes,associativity,line_bytes,hit_rate\n{},{},{},{:.12}\n",
                    config.capacity(),
                    config.associativity(),
                    config.line_size(),
                    rate
                ),
            };
            emit(None, &text, stdout)?;
        }
        Command::Compare { a, b, format } => {
            let r = cmd_compare(&a, &b)?;
            let text = match format {
                Format::Text => r.to_text(),
                Format::Csv => r.to_csv(),
            };
            emit(None, &text, stdout)?;
        }
        Command::Gen {
            seed,
            depth,
            constants,
            output,
        } => emit(output.as_deref(), &cmd_gen(seed, depth, constants)?, stdout)?,
    }
    Ok(0)
}

/// Parse `args`, run, and map errors to exit codes with a diagnostic on
/// standard error.
pub fn main<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    let stdout = std::io::stdout();
    match run(cli, &mut stdout.lock()) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("reuseprof: {e}");
            e.exit_code()
        }
    }
}
