// SPDX-License-Identifier: MIT OR Apache-2.0

//! Command-line front end for `catseg-core`.

use std::path::PathBuf;

use catseg_core::calibration::{DEFAULT_CALIBRATION_MAX_CUT, DEFAULT_GRID_STEP};
use catseg_core::evaluation::{constant_range, linear_grid, two_constant_grid};
use catseg_core::io::{
    self, apply_length_policy, FastaOptions, InvalidSymbolPolicy, LengthAction, LengthAdjusted,
    LengthPolicy, OutputFormat,
};
use catseg_core::segmentation::default_max_segments;
use catseg_core::selection::{DEFAULT_C1, DEFAULT_C2};
use catseg_core::{
    calibrate_neh, calibrate_segmentation, calibrated_hybrid, eh_select, ei_select, encode,
    grid_sweep, neh_select, sample, transform_matrix, CalibrationPath, CategoricalSequence, Error,
    HybridOptions, MultinomialMatrix, Partition, PenaltySpec, ProbabilityMatrix, RealMatrix,
    Result, StoppingRule, Strategy, TestSignal,
};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::json;

pub const THREADS_ENV: &str = "CATSEG_THREADS";

#[derive(Debug, Clone, Parser)]
#[command(name = "catseg", version, about = "Penalized estimation and segmentation of categorical sequences")]
pub struct RunConfig {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Subcommand)]
pub enum Command {
    /// Estimate the column-wise distribution of a FASTA sequence.
    Estimate(EstimateArgs),
    /// Detect change points and write one row per segment.
    Segment(SegmentArgs),
    /// Dimension-jump calibration of a linear penalty constant.
    Calibrate(CalibrateArgs),
    /// Sample a sequence from a test signal.
    Simulate(SimulateArgs),
    /// Monte Carlo risk of a strategy over a grid of penalty constants.
    Risk(RiskArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum StrategyArg {
    Eh,
    Neh,
    Ei,
    Hybrid,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum SegmenterArg {
    Hybrid,
    Ei,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum PenaltyFamily {
    #[value(name = "log2const")]
    Log2Const,
    Linear,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum CalibrationTarget {
    Neh,
    Segmentation,
    Hybrid,
}

#[derive(Debug, Clone, Args)]
pub struct InputArgs {
    /// FASTA file; the first record is used unless --record is given.
    #[arg(long)]
    pub input: PathBuf,
    /// Header (or its first word) of the record to read.
    #[arg(long)]
    pub record: Option<String>,
    /// What to do with symbols outside ACGT.
    #[arg(long, default_value = "error", value_parser = parse_symbol_policy)]
    pub on_invalid: InvalidSymbolPolicy,
    /// How to bring the length to a power of two.
    #[arg(long, default_value = "truncate", value_parser = parse_length_policy)]
    pub n_policy: LengthPolicy,
}

#[derive(Debug, Clone, Args)]
pub struct PenaltyArgs {
    /// Penalty family for EI; EH always uses log2const and NEH linear.
    #[arg(long, value_enum)]
    pub penalty: Option<PenaltyFamily>,
    #[arg(long, default_value_t = DEFAULT_C1)]
    pub c1: f64,
    #[arg(long, default_value_t = DEFAULT_C2)]
    pub c2: f64,
    /// Linear constant; calibrated from the data when omitted.
    #[arg(long)]
    pub c: Option<f64>,
    /// Grid step of the calibration sweep.
    #[arg(long, default_value_t = DEFAULT_GRID_STEP)]
    pub grid_step: f64,
}

#[derive(Debug, Clone, Args)]
pub struct EstimateArgs {
    #[command(flatten)]
    pub input: InputArgs,
    #[arg(long, value_enum, default_value = "neh")]
    pub strategy: StrategyArg,
    #[command(flatten)]
    pub penalty: PenaltyArgs,
    /// Segmentation constant for the hybrid strategy; calibrated when omitted.
    #[arg(long)]
    pub ei_c: Option<f64>,
    /// Highest cut level of the compressed Haar collection.
    #[arg(long)]
    pub jmax: Option<usize>,
    /// Largest number of segments.
    #[arg(long)]
    pub dmax: Option<usize>,
    #[arg(long, default_value = "csv", value_parser = parse_format)]
    pub format: OutputFormat,
    #[arg(long)]
    pub out: PathBuf,
    /// CSV file for the criterion path.
    #[arg(long)]
    pub criterion_out: Option<PathBuf>,
}

#[derive(Debug, Clone, Args)]
pub struct SegmentArgs {
    #[command(flatten)]
    pub input: InputArgs,
    #[arg(long, value_enum, default_value = "hybrid")]
    pub strategy: SegmenterArg,
    #[command(flatten)]
    pub penalty: PenaltyArgs,
    /// Segmentation constant of the hybrid strategy; calibrated when omitted.
    #[arg(long)]
    pub ei_c: Option<f64>,
    #[arg(long)]
    pub dmax: Option<usize>,
    /// Segments as tab-separated `start end p1 .. pr` rows.
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long)]
    pub estimate_out: Option<PathBuf>,
    #[arg(long, default_value = "csv", value_parser = parse_format)]
    pub format: OutputFormat,
    #[arg(long)]
    pub criterion_out: Option<PathBuf>,
}

#[derive(Debug, Clone, Args)]
pub struct CalibrateArgs {
    #[command(flatten)]
    pub input: InputArgs,
    #[arg(long, value_enum, default_value = "hybrid")]
    pub target: CalibrationTarget,
    #[arg(long, default_value_t = DEFAULT_GRID_STEP)]
    pub grid_step: f64,
    #[arg(long)]
    pub jmax: Option<usize>,
    #[arg(long)]
    pub dmax: Option<usize>,
    /// Sweep table (`c,dimension`); for the hybrid target, the Haar-step sweep.
    #[arg(long)]
    pub out: PathBuf,
    /// Segmentation sweep of the hybrid target.
    #[arg(long)]
    pub segment_out: Option<PathBuf>,
}

#[derive(Debug, Clone, Args)]
pub struct SimulateArgs {
    #[arg(long, value_parser = parse_signal)]
    pub signal: TestSignal,
    #[arg(long, default_value_t = 1024)]
    pub n: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// FASTA output.
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Args)]
pub struct RiskArgs {
    #[arg(long, value_parser = parse_signal)]
    pub signal: TestSignal,
    #[arg(long, default_value_t = 1024)]
    pub n: usize,
    #[arg(long, value_enum, default_value = "neh")]
    pub strategy: StrategyArg,
    /// Penalty family for EI.
    #[arg(long, value_enum, default_value = "log2const")]
    pub penalty: PenaltyFamily,
    #[arg(long, default_value_t = 0.1)]
    pub grid_step: f64,
    #[arg(long, default_value_t = 1.0)]
    pub c1_max: f64,
    #[arg(long, default_value_t = 6.0)]
    pub c2_max: f64,
    #[arg(long, default_value_t = 4.0)]
    pub c_max: f64,
    #[arg(long)]
    pub jmax: Option<usize>,
    #[arg(long, default_value_t = 128)]
    pub dmax: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = 1e-2)]
    pub tolerance: f64,
    #[arg(long, default_value_t = 10)]
    pub min_reps: usize,
    #[arg(long, default_value_t = 100_000)]
    pub max_reps: usize,
    /// Risk table (`c1,c2,c,risk,replicates,converged`).
    #[arg(long)]
    pub out: PathBuf,
}

fn parse_symbol_policy(s: &str) -> Result<InvalidSymbolPolicy> {
    s.parse()
}

fn parse_length_policy(s: &str) -> Result<LengthPolicy> {
    s.parse()
}

fn parse_format(s: &str) -> Result<OutputFormat> {
    s.parse()
}

fn parse_signal(s: &str) -> Result<TestSignal> {
    s.parse()
}

/// Exit status for each error kind; 2 is left to argument parsing.
pub fn exit_code(err: &Error) -> i32 {
    match err {
        Error::InvalidInput(_) => 3,
        Error::ShapeMismatch { .. } => 4,
        Error::NonFinite { .. } => 5,
        Error::NotDyadic(_) => 6,
        Error::InvalidPenalty(_) => 7,
        Error::LevelOutOfRange { .. } => 8,
        Error::InvalidSegment { .. } => 9,
        Error::TooLarge(_) => 10,
        Error::CalibrationDiverged { .. } => 11,
        Error::Estimator { .. } => 12,
        Error::Io { .. } => 13,
        Error::Parse { .. } => 14,
        Error::InvalidSymbol { .. } => 15,
    }
}

/// Sizes the global thread pool from `CATSEG_THREADS` when set.
pub fn configure_threads() -> Result<()> {
    let Ok(value) = std::env::var(THREADS_ENV) else {
        return Ok(());
    };
    let threads: usize = value
        .trim()
        .parse()
        .ok()
        .filter(|&t| t > 0)
        .ok_or_else(|| Error::InvalidInput(format!("{THREADS_ENV} must be a positive integer, got '{value}'")))?;
    // a pool may already exist when called twice in one process
    let _ = rayon::ThreadPoolBuilder::new().num_threads(threads).build_global();
    Ok(())
}

/// Runs one command; diagnostics go to stderr and the exit status is returned.
pub fn run(config: RunConfig) -> i32 {
    let outcome = configure_threads().and_then(|()| match config.command {
        Command::Estimate(args) => estimate(&args),
        Command::Segment(args) => segment(&args),
        Command::Calibrate(args) => calibrate(&args),
        Command::Simulate(args) => simulate(&args),
        Command::Risk(args) => risk(&args),
    });
    match outcome {
        Ok(()) => 0,
        Err(err) => {
            let hint = match err {
                Error::CalibrationDiverged { .. } => " (try a larger --grid-step)",
                _ => "",
            };
            eprintln!("catseg: error: {err}{hint}");
            exit_code(&err)
        }
    }
}

fn read_sequence(input: &InputArgs) -> Result<CategoricalSequence> {
    let opts = FastaOptions {
        invalid: input.on_invalid,
        record: input.record.clone(),
    };
    let rec = io::read_fasta(&input.input, &opts)?;
    if rec.records > 1 && input.record.is_none() {
        eprintln!(
            "catseg: warning: {} holds {} records; using the first ('{}')",
            input.input.display(),
            rec.records,
            rec.header
        );
    }
    if rec.dropped > 0 {
        eprintln!("catseg: dropped {} symbols outside ACGT", rec.dropped);
    }
    Ok(rec.sequence)
}

/// Reads the input and applies the length policy, reporting any change.
fn read_dyadic(input: &InputArgs) -> Result<LengthAdjusted> {
    let adjusted = apply_length_policy(read_sequence(input)?, input.n_policy)?;
    if let Some(note) = adjusted.describe() {
        eprintln!("catseg: {note}");
    }
    Ok(adjusted)
}

fn unchanged(seq: CategoricalSequence) -> LengthAdjusted {
    LengthAdjusted {
        original_len: seq.len(),
        sequence: seq,
        action: LengthAction::Unchanged,
    }
}

/// Restricts a partition of a padded sequence to its original positions.
fn crop_partition(partition: &Partition, len: usize) -> Result<Partition> {
    let starts = partition.breakpoints().iter().copied().filter(|&b| b <= len).collect();
    Partition::new(starts, len)
}

fn crop_probability(est: &ProbabilityMatrix, len: usize) -> Result<ProbabilityMatrix> {
    ProbabilityMatrix::new(io::crop_columns(est.as_real(), len))
}

fn linear(c: f64) -> Result<PenaltySpec> {
    PenaltySpec::linear(c)
}

fn report_constant(what: &str, c: f64, calibrated: bool) {
    if calibrated {
        eprintln!("catseg: {what} constant calibrated to {c}");
    }
}

fn estimate(args: &EstimateArgs) -> Result<()> {
    let pen = &args.penalty;
    let adjusted = if args.strategy == StrategyArg::Ei {
        unchanged(read_sequence(&args.input)?)
    } else {
        read_dyadic(&args.input)?
    };
    let x = encode(&adjusted.sequence);
    let mut meta = adjusted.metadata();
    let (estimate, path, dimension, penalty) = match args.strategy {
        StrategyArg::Eh => {
            let coeffs = transform_matrix(x.as_real())?;
            let spec = PenaltySpec::two_constant(pen.c1, pen.c2)?;
            let res = eh_select(&coeffs, &spec)?;
            (res.estimate, res.criterion_path, res.dimension, spec)
        }
        StrategyArg::Neh => {
            let coeffs = transform_matrix(x.as_real())?;
            let c = match pen.c {
                Some(c) => c,
                None => {
                    let max_cut = args
                        .jmax
                        .unwrap_or(DEFAULT_CALIBRATION_MAX_CUT)
                        .min(coeffs.depth() as usize - 1);
                    let c = calibrate_neh(&coeffs, max_cut, pen.grid_step)?.retained;
                    report_constant("NEH", c, true);
                    c
                }
            };
            let spec = linear(c)?;
            let res = neh_select(&coeffs, &spec, args.jmax)?;
            meta["level"] = json!(res.level);
            (res.estimate, res.criterion_path, res.dimension, spec)
        }
        StrategyArg::Ei => {
            let dmax = args.dmax.unwrap_or(x.cols()).min(x.cols());
            let spec = ei_penalty(pen, &x, dmax)?;
            let res = ei_select(&x, &spec, dmax, None)?;
            meta["breakpoints"] = json!(res.partition.breakpoints());
            (res.estimate.into_real(), res.criterion_path, res.dimension, spec)
        }
        StrategyArg::Hybrid => {
            let found = run_hybrid(&x, pen, args.ei_c, args.dmax)?;
            meta["jumps"] = json!(found.result.jumps.len());
            meta["segment_penalty"] = json!(found.segment_penalty);
            meta["breakpoints"] = json!(found.result.partition.breakpoints());
            let dim = found.result.partition.dimension();
            (
                found.result.estimate.into_real(),
                found.result.criterion_path,
                dim,
                found.haar_penalty,
            )
        }
    };
    meta["strategy"] = json!(format!("{:?}", args.strategy).to_lowercase());
    meta["penalty"] = json!(penalty);
    meta["dimension"] = json!(dimension);
    let estimate: RealMatrix = io::crop_columns(&estimate, adjusted.original_len);
    io::write_estimate(&estimate, &args.out, args.format, Some(&meta))?;
    if let Some(p) = &args.criterion_out {
        io::write_criterion_path(p, &path)?;
    }
    Ok(())
}

/// EI penalty from the flags; a linear constant defaults to its calibrated value.
fn ei_penalty(pen: &PenaltyArgs, x: &MultinomialMatrix, dmax: usize) -> Result<PenaltySpec> {
    match pen.penalty.unwrap_or(PenaltyFamily::Log2Const) {
        PenaltyFamily::Log2Const => PenaltySpec::two_constant(pen.c1, pen.c2),
        PenaltyFamily::Linear => {
            let c = match pen.c {
                Some(c) => c,
                None => {
                    let c = calibrate_segmentation(x, None, dmax, pen.grid_step)?.retained;
                    report_constant("segmentation", c, true);
                    c
                }
            };
            linear(c)
        }
    }
}

fn run_hybrid(
    x: &MultinomialMatrix,
    pen: &PenaltyArgs,
    ei_c: Option<f64>,
    dmax: Option<usize>,
) -> Result<catseg_core::CalibratedHybrid> {
    let opts = HybridOptions {
        grid_step: pen.grid_step,
        max_segments: dmax,
        haar_c: pen.c,
        segment_c: ei_c,
        ..HybridOptions::default()
    };
    let found = calibrated_hybrid(x, &opts)?;
    if let PenaltySpec::Linear { c } = found.haar_penalty {
        report_constant("Haar-step", c, found.haar_calibration.is_some());
    }
    if let PenaltySpec::Linear { c } = found.segment_penalty {
        report_constant("segmentation", c, found.segment_calibration.is_some());
    }
    Ok(found)
}

fn segment(args: &SegmentArgs) -> Result<()> {
    let adjusted = match args.strategy {
        SegmenterArg::Hybrid => read_dyadic(&args.input)?,
        SegmenterArg::Ei => unchanged(read_sequence(&args.input)?),
    };
    let x = encode(&adjusted.sequence);
    let (partition, estimate, path) = match args.strategy {
        SegmenterArg::Hybrid => {
            let found = run_hybrid(&x, &args.penalty, args.ei_c, args.dmax)?;
            eprintln!(
                "catseg: Haar step kept {} coefficients with {} jumps",
                found.result.haar_dimension,
                found.result.jumps.len()
            );
            (found.result.partition, found.result.estimate, found.result.criterion_path)
        }
        SegmenterArg::Ei => {
            let n = x.cols();
            let dmax = args.dmax.unwrap_or(default_max_segments(n, n - 1)).min(n);
            let spec = ei_penalty(&args.penalty, &x, dmax)?;
            let res = ei_select(&x, &spec, dmax, None)?;
            (res.partition, res.estimate, res.criterion_path)
        }
    };
    let len = adjusted.original_len;
    let partition = crop_partition(&partition, len)?;
    let estimate = crop_probability(&estimate, len)?;
    io::write_segments(&partition, &estimate, &args.out)?;
    if let Some(p) = &args.estimate_out {
        let mut meta = adjusted.metadata();
        meta["breakpoints"] = json!(partition.breakpoints());
        io::write_estimate(estimate.as_real(), p, args.format, Some(&meta))?;
    }
    if let Some(p) = &args.criterion_out {
        io::write_criterion_path(p, &path)?;
    }
    Ok(())
}

fn print_calibration(label: &str, path: &CalibrationPath) {
    println!("{label}\tc_hat={}\tretained={}", path.c_hat, path.retained);
}

fn calibrate(args: &CalibrateArgs) -> Result<()> {
    match args.target {
        CalibrationTarget::Neh => {
            let adjusted = read_dyadic(&args.input)?;
            let x = encode(&adjusted.sequence);
            let coeffs = transform_matrix(x.as_real())?;
            let max_cut = args
                .jmax
                .unwrap_or(DEFAULT_CALIBRATION_MAX_CUT)
                .min(coeffs.depth() as usize - 1);
            let path = calibrate_neh(&coeffs, max_cut, args.grid_step)?;
            io::write_calibration(&args.out, &path)?;
            print_calibration("neh", &path);
        }
        CalibrationTarget::Segmentation => {
            let x = encode(&read_sequence(&args.input)?);
            let n = x.cols();
            let dmax = args.dmax.unwrap_or(default_max_segments(n, n - 1)).min(n);
            let path = calibrate_segmentation(&x, None, dmax, args.grid_step)?;
            io::write_calibration(&args.out, &path)?;
            print_calibration("segmentation", &path);
        }
        CalibrationTarget::Hybrid => {
            let adjusted = read_dyadic(&args.input)?;
            let x = encode(&adjusted.sequence);
            let opts = HybridOptions {
                grid_step: args.grid_step,
                calibration_max_cut: args.jmax.unwrap_or(DEFAULT_CALIBRATION_MAX_CUT),
                max_segments: args.dmax,
                ..HybridOptions::default()
            };
            let found = calibrated_hybrid(&x, &opts)?;
            let haar = found
                .haar_calibration
                .expect("Haar constant calibrated when not given");
            let seg = found
                .segment_calibration
                .expect("segment constant calibrated when not given");
            io::write_calibration(&args.out, &haar)?;
            if let Some(p) = &args.segment_out {
                io::write_calibration(p, &seg)?;
            }
            print_calibration("haar", &haar);
            print_calibration("segmentation", &seg);
        }
    }
    Ok(())
}

fn simulate(args: &SimulateArgs) -> Result<()> {
    if args.n < 2 {
        return Err(Error::InvalidInput(format!("n must be at least 2, got {}", args.n)));
    }
    let x = sample(&args.signal.matrix(args.n), args.seed);
    let header = format!("{} n={} seed={}", args.signal.name(), args.n, args.seed);
    io::write_fasta(&x.decode(), &header, &args.out)
}

fn risk(args: &RiskArgs) -> Result<()> {
    let s = args.signal.matrix(args.n);
    let rule = StoppingRule {
        tolerance: args.tolerance,
        min_reps: args.min_reps,
        max_reps: args.max_reps,
    };
    let two = || -> Result<Vec<PenaltySpec>> {
        Ok(two_constant_grid(
            &constant_range(0.0, args.c1_max, args.grid_step)?,
            &constant_range(0.0, args.c2_max, args.grid_step)?,
        ))
    };
    let lin = || -> Result<Vec<PenaltySpec>> {
        Ok(linear_grid(&constant_range(0.0, args.c_max, args.grid_step)?))
    };
    let (strategy, grid) = match args.strategy {
        StrategyArg::Eh => (Strategy::Eh, two()?),
        StrategyArg::Neh => (Strategy::Neh { max_cut: args.jmax }, lin()?),
        StrategyArg::Ei => {
            let grid = match args.penalty {
                PenaltyFamily::Log2Const => two()?,
                PenaltyFamily::Linear => lin()?,
            };
            (
                Strategy::Ei {
                    max_segments: args.dmax.min(args.n),
                },
                grid,
            )
        }
        StrategyArg::Hybrid => {
            return Err(Error::InvalidInput(
                "risk tables cover the eh, neh and ei strategies".into(),
            ))
        }
    };
    let table = grid_sweep(&s, &strategy, &grid, args.seed, &rule)?;
    io::write_sweep(&args.out, &table)?;
    let best = table.best_row();
    println!("best\t{}\t{}", json!(best.penalty), best.risk.value);
    Ok(())
}

/// Convenience for tests: parse arguments the way the binary does and run.
pub fn run_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    match RunConfig::try_parse_from(args) {
        Ok(config) => run(config),
        Err(err) => {
            let _ = err.print();
            err.exit_code()
        }
    }
}
