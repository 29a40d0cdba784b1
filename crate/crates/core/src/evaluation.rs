// SPDX-License-Identifier: MIT OR Apache-2.0

//! Synthetic signals, seeded sampling, Monte Carlo risk estimation and
//! brute-force reference selectors.
//!
//! Every replicate `h` of a run with master seed `seed` draws from its own
//! ChaCha8 stream `(seed, h)`, so replicate `h` is the same sample no matter
//! which estimator or penalty constant consumes it.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::domain::{frobenius_sq_diff, MultinomialMatrix, ProbabilityMatrix, RealMatrix};
use crate::error::{Error, Result};
use crate::haar::{transform_matrix, CoefficientMatrix, HaarIndex};
use crate::segmentation::{dp_optimal_partitions, Partition, SegmentStats};
use crate::selection::{
    self, eh_select, neh_select, EhRanking, NehRanking, PenaltySpec,
};

pub const DEFAULT_SIGNAL_LENGTH: usize = 1024;

/// Synthetic target matrices: piecewise constant (`S1`, `S2`), smooth
/// (`S3`, `S4`), piecewise linear (`S5`, `S6`) with two categories, and two
/// four-category products of those (`S7`, `S8`).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum TestSignal {
    S1,
    S2,
    S3,
    S4,
    S5,
    S6,
    S7,
    S8,
}

const S1_CUTS: [f64; 3] = [0.27, 0.52, 0.79];
const S1_LEVELS: [f64; 4] = [0.2, 0.7, 0.4, 0.8];
const S2_CUTS: [f64; 10] = [0.07, 0.16, 0.22, 0.33, 0.41, 0.50, 0.58, 0.69, 0.78, 0.88];
const S2_LEVELS: [f64; 11] = [0.15, 0.85, 0.25, 0.75, 0.35, 0.65, 0.15, 0.85, 0.25, 0.75, 0.35];
const S5_KNOTS: [(f64, f64); 4] = [(0.0, 0.1), (0.4, 0.9), (0.7, 0.3), (1.0, 0.7)];

fn step_function(x: f64, cuts: &[f64], levels: &[f64]) -> f64 {
    levels[cuts.iter().take_while(|&&c| x > c).count()]
}

impl TestSignal {
    pub const ALL: [TestSignal; 8] = [
        TestSignal::S1,
        TestSignal::S2,
        TestSignal::S3,
        TestSignal::S4,
        TestSignal::S5,
        TestSignal::S6,
        TestSignal::S7,
        TestSignal::S8,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            TestSignal::S1 => "s1",
            TestSignal::S2 => "s2",
            TestSignal::S3 => "s3",
            TestSignal::S4 => "s4",
            TestSignal::S5 => "s5",
            TestSignal::S6 => "s6",
            TestSignal::S7 => "s7",
            TestSignal::S8 => "s8",
        }
    }

    pub fn alphabet_size(&self) -> usize {
        match self {
            TestSignal::S7 | TestSignal::S8 => 4,
            _ => 2,
        }
    }

    /// First-line probability at `x` in `(0, 1]` for the two-category signals.
    fn first_line(&self, x: f64) -> f64 {
        use std::f64::consts::PI;
        match self {
            TestSignal::S1 => step_function(x, &S1_CUTS, &S1_LEVELS),
            TestSignal::S2 => step_function(x, &S2_CUTS, &S2_LEVELS),
            TestSignal::S3 => 0.5 + 0.35 * (2.0 * PI * x).sin(),
            TestSignal::S4 => 0.5 + 0.3 * (6.0 * PI * x).sin() * (-2.0 * x).exp(),
            TestSignal::S5 => {
                let seg = S5_KNOTS.windows(2).find(|w| x <= w[1].0).unwrap_or(&S5_KNOTS[2..]);
                let ((x0, y0), (x1, y1)) = (seg[0], seg[1]);
                y0 + (y1 - y0) * (x - x0) / (x1 - x0)
            }
            TestSignal::S6 => {
                let t = 6.0 * x;
                let frac = if t >= 6.0 { 1.0 } else { t - t.floor() };
                0.2 + 0.6 * frac
            }
            TestSignal::S7 | TestSignal::S8 => unreachable!("four-category signal"),
        }
    }

    /// The target matrix sampled at `x = i / n`, `i = 1..=n`.
    pub fn matrix(&self, n: usize) -> ProbabilityMatrix {
        let xs = (1..=n).map(|i| i as f64 / n as f64);
        let data: Vec<f64> = match self {
            TestSignal::S7 | TestSignal::S8 => {
                let (a, b) = if *self == TestSignal::S7 {
                    (TestSignal::S1, TestSignal::S3)
                } else {
                    (TestSignal::S2, TestSignal::S5)
                };
                let pa: Vec<f64> = xs.clone().map(|x| a.first_line(x)).collect();
                let pb: Vec<f64> = xs.map(|x| b.first_line(x)).collect();
                let mut data = Vec::with_capacity(4 * n);
                data.extend(pa.iter().zip(&pb).map(|(a, b)| a * b));
                data.extend(pa.iter().zip(&pb).map(|(a, b)| a * (1.0 - b)));
                data.extend(pa.iter().zip(&pb).map(|(a, b)| (1.0 - a) * b));
                data.extend(pa.iter().zip(&pb).map(|(a, b)| (1.0 - a) * (1.0 - b)));
                data
            }
            _ => {
                let p: Vec<f64> = xs.map(|x| self.first_line(x)).collect();
                let q: Vec<f64> = p.iter().map(|v| 1.0 - v).collect();
                [p, q].concat()
            }
        };
        let rows = self.alphabet_size();
        ProbabilityMatrix::new(RealMatrix::from_data_unchecked(rows, n, data))
            .expect("test signals are probability matrices")
    }
}

impl std::str::FromStr for TestSignal {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        TestSignal::ALL
            .into_iter()
            .find(|t| t.name().eq_ignore_ascii_case(s))
            .ok_or_else(|| Error::invalid(format!("unknown test signal '{s}' (expected s1..s8)")))
    }
}

impl std::fmt::Display for TestSignal {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

fn replicate_rng(seed: u64, replicate: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(replicate);
    rng
}

fn sample_with(s: &ProbabilityMatrix, rng: &mut impl Rng) -> MultinomialMatrix {
    let (r, n) = (s.rows(), s.cols());
    let m = s.as_real();
    let categories = (0..n)
        .map(|i| {
            let u: f64 = rng.random();
            let mut acc = 0.0;
            for j in 0..r - 1 {
                acc += m.get(j, i);
                if u < acc {
                    return j as u8;
                }
            }
            (r - 1) as u8
        })
        .collect();
    MultinomialMatrix::from_categories_unchecked(r, categories)
}

/// Draws one column per position from the categorical law in that column.
pub fn sample(s: &ProbabilityMatrix, seed: u64) -> MultinomialMatrix {
    sample_replicate(s, seed, 0)
}

/// Sample number `replicate` of the run seeded with `seed`.
pub fn sample_replicate(s: &ProbabilityMatrix, seed: u64, replicate: u64) -> MultinomialMatrix {
    sample_with(s, &mut replicate_rng(seed, replicate))
}

/// Stop once two successive running averages differ by less than `tolerance`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StoppingRule {
    pub tolerance: f64,
    pub min_reps: usize,
    pub max_reps: usize,
}

impl Default for StoppingRule {
    fn default() -> Self {
        Self {
            tolerance: 1e-2,
            min_reps: 10,
            max_reps: 100_000,
        }
    }
}

impl StoppingRule {
    pub fn validate(&self) -> Result<()> {
        if self.min_reps < 2 || self.max_reps < self.min_reps {
            return Err(Error::invalid(format!(
                "need 2 <= min_reps <= max_reps, got {} and {}",
                self.min_reps, self.max_reps
            )));
        }
        if self.tolerance.is_nan() || self.tolerance <= 0.0 {
            return Err(Error::invalid("stopping tolerance must be positive"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RiskEstimate {
    pub value: f64,
    pub replicates: usize,
    /// Running averages after each replicate.
    pub history: Vec<f64>,
    /// False when `max_reps` was hit before the tolerance was met.
    pub converged: bool,
}

#[derive(Debug, Clone, Default)]
struct RunningAverage {
    sum: f64,
    history: Vec<f64>,
    converged: Option<bool>,
}

impl RunningAverage {
    fn is_done(&self) -> bool {
        self.converged.is_some()
    }

    fn push(&mut self, loss: f64, rule: &StoppingRule) {
        self.sum += loss;
        let h = self.history.len() + 1;
        let avg = self.sum / h as f64;
        let prev = self.history.last().copied();
        self.history.push(avg);
        if h >= rule.min_reps && prev.is_some_and(|p| (avg - p).abs() < rule.tolerance) {
            self.converged = Some(true);
        } else if h >= rule.max_reps {
            self.converged = Some(false);
        }
    }

    fn finish(self) -> RiskEstimate {
        RiskEstimate {
            value: *self.history.last().unwrap_or(&0.0),
            replicates: self.history.len(),
            history: self.history,
            converged: self.converged.unwrap_or(false),
        }
    }
}

/// Monte Carlo estimate of `E ||s - estimator(X)||^2`.
pub fn monte_carlo_risk<F>(
    s: &ProbabilityMatrix,
    mut estimator: F,
    seed: u64,
    rule: &StoppingRule,
) -> Result<RiskEstimate>
where
    F: FnMut(&MultinomialMatrix) -> Result<RealMatrix>,
{
    rule.validate()?;
    let mut running = RunningAverage::default();
    let mut h = 0u64;
    while !running.is_done() {
        let x = sample_replicate(s, seed, h);
        let estimate = estimator(&x).map_err(|e| Error::Estimator {
            replicate: h as usize + 1,
            source: Box::new(e),
        })?;
        let loss = frobenius_sq_diff(s.as_real(), &estimate).map_err(|e| Error::Estimator {
            replicate: h as usize + 1,
            source: Box::new(e),
        })?;
        running.push(loss, rule);
        h += 1;
    }
    Ok(running.finish())
}

/// Model selection strategy evaluated by the risk tools.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Strategy {
    /// Exhaustive Haar subsets, two-constant log penalty.
    Eh,
    /// Compressed Haar collection, linear penalty.
    Neh { max_cut: Option<usize> },
    /// Interval partitions with at most `max_segments` pieces, either penalty.
    Ei { max_segments: usize },
}

impl Strategy {
    fn check_penalty(&self, pen: &PenaltySpec) -> Result<()> {
        pen.validate()?;
        match (self, pen) {
            (Strategy::Eh, PenaltySpec::TwoConstantLog { .. })
            | (Strategy::Neh { .. }, PenaltySpec::Linear { .. })
            | (Strategy::Ei { .. }, _) => Ok(()),
            _ => Err(Error::InvalidPenalty(format!(
                "{pen:?} is not accepted by {self:?}"
            ))),
        }
    }

    /// Runs the strategy on one sample and returns its unconstrained estimate.
    pub fn estimate(&self, x: &MultinomialMatrix, pen: &PenaltySpec) -> Result<RealMatrix> {
        self.check_penalty(pen)?;
        match *self {
            Strategy::Eh => Ok(eh_select(&transform_matrix(x.as_real())?, pen)?.estimate),
            Strategy::Neh { max_cut } => {
                Ok(neh_select(&transform_matrix(x.as_real())?, pen, max_cut)?.estimate)
            }
            Strategy::Ei { max_segments } => Ok(crate::segmentation::ei_select(
                x,
                pen,
                max_segments,
                None,
            )?
            .estimate
            .into_real()),
        }
    }
}

/// Criterion ingredients and losses of every candidate model for one sample.
struct CandidatePath {
    fits: Vec<f64>,
    dims: Vec<usize>,
    losses: Vec<f64>,
    size: usize,
}

/// Precomputed quantities of the target used to score candidate models
/// without reconstructing them.
struct TargetView<'a> {
    s: &'a ProbabilityMatrix,
    // Haar coefficients of s (dyadic n only)
    coeffs: Option<CoefficientMatrix>,
    energy: f64,
    // prefix sums of each line and of squared entries, for segment losses
    line_prefix: Vec<f64>,
    sq_prefix: Vec<f64>,
}

impl<'a> TargetView<'a> {
    fn new(s: &'a ProbabilityMatrix, strategy: &Strategy) -> Result<Self> {
        let (r, n) = (s.rows(), s.cols());
        let m = s.as_real();
        let coeffs = match strategy {
            Strategy::Ei { .. } => None,
            _ => Some(transform_matrix(m)?),
        };
        let mut line_prefix = vec![0.0; r * (n + 1)];
        let mut sq_prefix = vec![0.0; n + 1];
        if matches!(strategy, Strategy::Ei { .. }) {
            for j in 0..r {
                let row = &mut line_prefix[j * (n + 1)..(j + 1) * (n + 1)];
                for i in 0..n {
                    row[i + 1] = row[i] + m.get(j, i);
                }
            }
            for i in 0..n {
                sq_prefix[i + 1] = sq_prefix[i] + (0..r).map(|j| m.get(j, i).powi(2)).sum::<f64>();
            }
        }
        Ok(Self {
            s,
            coeffs,
            energy: m.frobenius_sq(),
            line_prefix,
            sq_prefix,
        })
    }

    /// Change in loss from adding coefficient `pos` of the sample to a model.
    fn haar_deltas(&self, sample: &CoefficientMatrix) -> Vec<f64> {
        let target = self.coeffs.as_ref().expect("haar strategies transform the target");
        let (t, x) = (target.coeffs(), sample.coeffs());
        (0..sample.len())
            .map(|pos| {
                (0..t.rows())
                    .map(|j| {
                        let (a, b) = (t.get(j, pos), x.get(j, pos));
                        (a - b) * (a - b) - a * a
                    })
                    .sum()
            })
            .collect()
    }

    fn segment_loss(&self, stats: &SegmentStats, partition: &Partition) -> f64 {
        let (r, n) = (self.s.rows(), self.s.cols());
        let mut loss = 0.0;
        for (start, end) in partition.segments() {
            let len = (end - start + 1) as f64;
            let (lo, hi) = (stats.cumulative(start - 1), stats.cumulative(end));
            let mut cross = 0.0;
            let mut mean_sq = 0.0;
            for j in 0..r {
                let mean = (hi[j] - lo[j]) as f64 / len;
                let row = &self.line_prefix[j * (n + 1)..];
                cross += mean * (row[end] - row[start - 1]);
                mean_sq += mean * mean;
            }
            loss += self.sq_prefix[end] - self.sq_prefix[start - 1] - 2.0 * cross + len * mean_sq;
        }
        loss.max(0.0)
    }

    fn path(&self, strategy: &Strategy, x: &MultinomialMatrix) -> Result<CandidatePath> {
        let n = x.cols();
        match *strategy {
            Strategy::Eh => {
                let sample = transform_matrix(x.as_real())?;
                let deltas = self.haar_deltas(&sample);
                let ranking = EhRanking::new(&sample);
                let mut acc = self.energy;
                let losses = ranking
                    .order()
                    .iter()
                    .map(|&pos| {
                        acc += deltas[pos];
                        acc.max(0.0)
                    })
                    .collect();
                Ok(CandidatePath {
                    fits: ranking.fits().to_vec(),
                    dims: ranking.dims().to_vec(),
                    losses,
                    size: n,
                })
            }
            Strategy::Neh { max_cut } => {
                let sample = transform_matrix(x.as_real())?;
                let deltas = self.haar_deltas(&sample);
                let ranking = NehRanking::new(&sample, max_cut)?;
                let depth = ranking.depth();
                // per-level prefix sums of deltas in ranking order
                let prefix: Vec<Vec<f64>> = (0..depth)
                    .map(|j| {
                        let mut acc = 0.0;
                        std::iter::once(0.0)
                            .chain(ranking.level_order(j).iter().map(|&pos| {
                                acc += deltas[pos];
                                acc
                            }))
                            .collect()
                    })
                    .collect();
                let losses = (0..=ranking.max_cut())
                    .map(|cut| {
                        let kept: f64 = (0..depth).map(|j| prefix[j][ranking.kept(cut, j)]).sum();
                        (self.energy + deltas[0] + kept).max(0.0)
                    })
                    .collect();
                Ok(CandidatePath {
                    fits: ranking.fits().to_vec(),
                    dims: ranking.dims().to_vec(),
                    losses,
                    size: n,
                })
            }
            Strategy::Ei { max_segments } => {
                let stats = SegmentStats::new(x);
                let fits = dp_optimal_partitions(&stats, max_segments, None)?;
                Ok(CandidatePath {
                    losses: fits.iter().map(|f| self.segment_loss(&stats, &f.partition)).collect(),
                    dims: fits.iter().map(|f| f.dimension).collect(),
                    fits: fits.iter().map(|f| f.sse).collect(),
                    size: n,
                })
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub penalty: PenaltySpec,
    pub risk: RiskEstimate,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepTable {
    pub strategy: Strategy,
    pub rows: Vec<SweepRow>,
    /// Row with the smallest estimated risk (first on ties).
    pub best: usize,
}

impl SweepTable {
    pub fn best_row(&self) -> &SweepRow {
        &self.rows[self.best]
    }
}

/// Estimated risk at every penalty of `grid`.
///
/// Each row equals what [`monte_carlo_risk`] returns for that penalty and
/// `seed`; the rows share samples, and each candidate model's loss is
/// evaluated once per sample.
pub fn grid_sweep(
    s: &ProbabilityMatrix,
    strategy: &Strategy,
    grid: &[PenaltySpec],
    seed: u64,
    rule: &StoppingRule,
) -> Result<SweepTable> {
    if grid.is_empty() {
        return Err(Error::invalid("penalty grid is empty"));
    }
    rule.validate()?;
    for pen in grid {
        strategy.check_penalty(pen)?;
    }
    let target = TargetView::new(s, strategy)?;
    let mut running = vec![RunningAverage::default(); grid.len()];
    let mut h = 0u64;
    while running.iter().any(|r| !r.is_done()) {
        let x = sample_replicate(s, seed, h);
        let path = target.path(strategy, &x).map_err(|e| Error::Estimator {
            replicate: h as usize + 1,
            source: Box::new(e),
        })?;
        for (pen, run) in grid.iter().zip(running.iter_mut()) {
            if run.is_done() {
                continue;
            }
            let pick = selection::penalized_argmin(&path.fits, &path.dims, pen, path.size);
            run.push(path.losses[pick], rule);
        }
        h += 1;
    }
    let rows: Vec<SweepRow> = grid
        .iter()
        .zip(running)
        .map(|(&penalty, run)| SweepRow {
            penalty,
            risk: run.finish(),
        })
        .collect();
    let best = rows
        .iter()
        .enumerate()
        .fold(0, |b, (i, row)| if row.risk.value < rows[b].risk.value { i } else { b });
    Ok(SweepTable {
        strategy: *strategy,
        rows,
        best,
    })
}

/// `lo, lo + step, ...` up to `hi` inclusive.
pub fn constant_range(lo: f64, hi: f64, step: f64) -> Result<Vec<f64>> {
    if !step.is_finite() || step <= 0.0 || !lo.is_finite() || !hi.is_finite() || hi < lo {
        return Err(Error::invalid(format!("bad range {lo}..={hi} step {step}")));
    }
    let count = ((hi - lo) / step + 1e-9).floor() as usize;
    Ok((0..=count).map(|t| lo + t as f64 * step).collect())
}

pub fn linear_grid(cs: &[f64]) -> Vec<PenaltySpec> {
    cs.iter().map(|&c| PenaltySpec::Linear { c }).collect()
}

pub fn two_constant_grid(c1s: &[f64], c2s: &[f64]) -> Vec<PenaltySpec> {
    c1s.iter()
        .flat_map(|&c1| c2s.iter().map(move |&c2| PenaltySpec::TwoConstantLog { c1, c2 }))
        .collect()
}

/// Brute-force minimum over all basis subsets containing the constant vector.
#[derive(Debug, Clone, PartialEq)]
pub struct SubsetOracle {
    pub criterion: f64,
    pub selected: Vec<HaarIndex>,
    pub scored: usize,
}

pub const ORACLE_SUBSET_MAX_N: usize = 16;
pub const ORACLE_PARTITION_MAX_N: usize = 12;

pub fn oracle_subset_select(coeffs: &CoefficientMatrix, pen: &PenaltySpec) -> Result<SubsetOracle> {
    pen.validate()?;
    let n = coeffs.len();
    if n > ORACLE_SUBSET_MAX_N {
        return Err(Error::TooLarge(format!(
            "subset enumeration needs n <= {ORACLE_SUBSET_MAX_N}, got {n}"
        )));
    }
    let norms = coeffs.norms();
    let mut best = (f64::INFINITY, 0u32);
    let subsets = 1u32 << (n - 1);
    for mask in 0..subsets {
        let energy: f64 = norms[0]
            + (1..n)
                .filter(|pos| mask & (1 << (pos - 1)) != 0)
                .map(|pos| norms[pos])
                .sum::<f64>();
        let dim = 1 + mask.count_ones() as usize;
        let value = -energy + pen.value(dim, n);
        if value < best.0 {
            best = (value, mask);
        }
    }
    let selected = std::iter::once(HaarIndex::ROOT)
        .chain((1..n).filter(|pos| best.1 & (1 << (pos - 1)) != 0).map(HaarIndex::from_position))
        .collect();
    Ok(SubsetOracle {
        criterion: best.0,
        selected,
        scored: subsets as usize,
    })
}

/// Brute-force best partition into a fixed number of segments.
#[derive(Debug, Clone, PartialEq)]
pub struct PartitionOracle {
    pub sse: f64,
    pub criterion: f64,
    pub partition: Partition,
    pub enumerated: usize,
}

pub fn oracle_partition_select(
    x: &MultinomialMatrix,
    pen: &PenaltySpec,
    segments: usize,
) -> Result<PartitionOracle> {
    pen.validate()?;
    let n = x.cols();
    if n > ORACLE_PARTITION_MAX_N {
        return Err(Error::TooLarge(format!(
            "partition enumeration needs n <= {ORACLE_PARTITION_MAX_N}, got {n}"
        )));
    }
    if segments == 0 || segments > n {
        return Err(Error::invalid(format!("segment count must be in 1..={n}")));
    }
    let r = x.rows();
    let m = x.as_real();
    // residual sum of squares by direct summation around the segment mean
    let direct = |start: usize, end: usize| -> f64 {
        let len = (end - start) as f64;
        (0..r)
            .map(|j| {
                let line = &m.line(j)[start..end];
                let mean = line.iter().sum::<f64>() / len;
                line.iter().map(|v| (v - mean).powi(2)).sum::<f64>()
            })
            .sum()
    };
    let mut best: Option<(f64, Vec<usize>)> = None;
    let mut enumerated = 0;
    for mask in 0u32..(1 << (n - 1)) {
        if mask.count_ones() as usize != segments - 1 {
            continue;
        }
        enumerated += 1;
        let mut starts = vec![1];
        starts.extend((2..=n).filter(|i| mask & (1 << (i - 2)) != 0));
        let mut sse = 0.0;
        for (k, &start) in starts.iter().enumerate() {
            let end = starts.get(k + 1).map_or(n, |next| next - 1);
            sse += direct(start - 1, end);
        }
        if best.as_ref().is_none_or(|(b, _)| sse < *b) {
            best = Some((sse, starts));
        }
    }
    let (sse, starts) = best.expect("at least one partition");
    Ok(PartitionOracle {
        sse,
        criterion: sse + pen.value(segments, n),
        partition: Partition::new(starts, n)?,
        enumerated,
    })
}

/// Closed-form risk of the saturated estimator `X`: the summed Bernoulli variances.
pub fn saturated_risk(s: &ProbabilityMatrix) -> f64 {
    s.as_real().as_slice().iter().map(|p| p * (1.0 - p)).sum()
}

/// `E ||s - single-segment mean||^2`, the risk of fitting one segment.
pub fn single_segment_risk(s: &ProbabilityMatrix) -> f64 {
    let (r, n) = (s.rows(), s.cols());
    let m = s.as_real();
    let nf = n as f64;
    (0..r)
        .map(|j| {
            let line = m.line(j);
            let mean = line.iter().sum::<f64>() / nf;
            let bias: f64 = line.iter().map(|p| (p - mean).powi(2)).sum();
            let var_of_mean = line.iter().map(|p| p * (1.0 - p)).sum::<f64>() / (nf * nf);
            bias + nf * var_of_mean
        })
        .sum()
}
