// SPDX-License-Identifier: MIT OR Apache-2.0

//! Least-squares segmentation over interval partitions, and the two-step
//! detector that restricts it to the jumps of a compressed Haar estimate.
//!
//! Positions in this module are 1-based: a [`Partition`] lists segment start
//! indices beginning with 1, and [`jump_set`] reports indices in `2..=n`.

use serde::{Deserialize, Serialize};

use crate::domain::{MultinomialMatrix, ProbabilityMatrix, RealMatrix};
use crate::error::{Error, Result};
use crate::haar::transform_matrix;
use crate::selection::{self, CriterionPoint, PenaltySpec};

/// Adjacent estimate columns closer than this in sup norm count as equal.
pub const JUMP_TOLERANCE: f64 = 1e-9;

// Above this many admissible segments the DP evaluates costs on the fly
// instead of tabulating them.
const COST_TABLE_MAX_SEGMENTS: usize = 2048;

/// A partition of `1..=n` into consecutive intervals.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Partition {
    breakpoints: Vec<usize>,
    n: usize,
}

impl Partition {
    pub fn new(breakpoints: Vec<usize>, n: usize) -> Result<Self> {
        if breakpoints.first() != Some(&1) {
            return Err(Error::invalid("a partition must start at position 1"));
        }
        if breakpoints.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::invalid("breakpoints must be strictly increasing"));
        }
        if breakpoints.last().is_some_and(|&b| b > n) {
            return Err(Error::invalid(format!("breakpoint beyond length {n}")));
        }
        Ok(Self { breakpoints, n })
    }

    pub fn single(n: usize) -> Self {
        Self {
            breakpoints: vec![1],
            n,
        }
    }

    /// Segment start indices, beginning with 1.
    pub fn breakpoints(&self) -> &[usize] {
        &self.breakpoints
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    /// Number of segments.
    pub fn dimension(&self) -> usize {
        self.breakpoints.len()
    }

    /// `(start, end)` pairs, 1-based and inclusive.
    pub fn segments(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.breakpoints.iter().enumerate().map(|(s, &start)| {
            let end = self.breakpoints.get(s + 1).map_or(self.n, |&next| next - 1);
            (start, end)
        })
    }
}

/// Cumulative category counts: row `i` holds the counts of positions `1..=i`.
#[derive(Debug, Clone)]
pub struct SegmentStats {
    r: usize,
    n: usize,
    cum: Vec<u32>,
}

impl SegmentStats {
    pub fn new(x: &MultinomialMatrix) -> Self {
        let (r, n) = (x.rows(), x.cols());
        let mut cum = vec![0u32; (n + 1) * r];
        for (i, &c) in x.categories().iter().enumerate() {
            let (prev, next) = cum.split_at_mut((i + 1) * r);
            next[..r].copy_from_slice(&prev[i * r..]);
            next[c as usize] += 1;
        }
        Self { r, n, cum }
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    pub fn alphabet_size(&self) -> usize {
        self.r
    }

    /// Counts of positions `1..=i`.
    pub fn cumulative(&self, i: usize) -> &[u32] {
        &self.cum[i * self.r..(i + 1) * self.r]
    }

    /// Category counts of the 0-based half-open range `[lo, hi)`.
    fn counts_into(&self, lo: usize, hi: usize, out: &mut [u64]) {
        let (a, b) = (self.cumulative(lo), self.cumulative(hi));
        for ((o, &x), &y) in out.iter_mut().zip(a).zip(b) {
            *o = (y - x) as u64;
        }
    }

    fn cost_half_open(&self, lo: usize, hi: usize) -> f64 {
        let (a, b) = (self.cumulative(lo), self.cumulative(hi));
        cost_from_counts(a, b, (hi - lo) as u64)
    }
}

#[inline]
fn cost_from_counts(lo: &[u32], hi: &[u32], len: u64) -> f64 {
    let sq: u64 = lo
        .iter()
        .zip(hi)
        .map(|(&x, &y)| {
            let c = (y - x) as u64;
            c * c
        })
        .sum();
    (len * len - sq) as f64 / len as f64
}

/// Residual sum of squares of positions `start..=end` around their mean.
pub fn segment_cost(stats: &SegmentStats, start: usize, end: usize) -> Result<f64> {
    if start == 0 || start > end || end > stats.n {
        return Err(Error::InvalidSegment {
            start,
            end,
            n: stats.n,
        });
    }
    Ok(stats.cost_half_open(start - 1, end))
}

/// Best partition into a fixed number of segments.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PartitionFit {
    pub dimension: usize,
    pub sse: f64,
    pub partition: Partition,
}

/// 0-based segment boundaries: 0, each candidate start minus one, then n.
fn boundaries(n: usize, candidates: Option<&[usize]>) -> Result<Vec<usize>> {
    let mut bounds = vec![0];
    match candidates {
        None => bounds.extend(1..n),
        Some(cands) => {
            if cands.windows(2).any(|w| w[0] >= w[1]) {
                return Err(Error::invalid("candidate breakpoints must be strictly increasing"));
            }
            if let Some(&bad) = cands.iter().find(|&&c| c < 2 || c > n) {
                return Err(Error::invalid(format!(
                    "candidate breakpoint {bad} outside 2..={n}"
                )));
            }
            bounds.extend(cands.iter().map(|c| c - 1));
        }
    }
    bounds.push(n);
    Ok(bounds)
}

/// Minimal residual sum of squares for every number of segments `1..=max_segments`.
///
/// With `candidates`, segments may only start at position 1 or at a candidate.
pub fn dp_optimal_partitions(
    stats: &SegmentStats,
    max_segments: usize,
    candidates: Option<&[usize]>,
) -> Result<Vec<PartitionFit>> {
    let n = stats.n;
    let bounds = boundaries(n, candidates)?;
    let p = bounds.len() - 1;
    if max_segments == 0 || max_segments > p {
        return Err(Error::invalid(format!(
            "number of segments must be in 1..={p}, got {max_segments}"
        )));
    }
    let r = stats.r;
    let counts: Vec<u32> = bounds
        .iter()
        .flat_map(|&b| stats.cumulative(b).iter().copied())
        .collect();
    let cost = |a: usize, b: usize| {
        cost_from_counts(
            &counts[a * r..(a + 1) * r],
            &counts[b * r..(b + 1) * r],
            (bounds[b] - bounds[a]) as u64,
        )
    };
    // triangular table: cost of boundary span (a, b) at b(b-1)/2 + a
    let table: Option<Vec<f64>> = (p <= COST_TABLE_MAX_SEGMENTS).then(|| {
        let mut t = Vec::with_capacity(p * (p + 1) / 2);
        for b in 1..=p {
            t.extend((0..b).map(|a| cost(a, b)));
        }
        t
    });

    // best[b] = minimal cost of covering boundaries 0..b with d segments
    let mut best: Vec<f64> = (0..=p)
        .map(|b| if b == 0 { f64::INFINITY } else { cost(0, b) })
        .collect();
    let mut argmins: Vec<Vec<u32>> = Vec::with_capacity(max_segments);
    let mut sse = vec![best[p]];
    argmins.push(Vec::new());
    for d in 2..=max_segments {
        let mut next = vec![f64::INFINITY; p + 1];
        let mut arg = vec![0u32; p + 1];
        for b in d..=p {
            let mut best_value = f64::INFINITY;
            let mut best_a = d - 1;
            match &table {
                Some(t) => {
                    let row = &t[b * (b - 1) / 2..];
                    for a in d - 1..b {
                        let v = best[a] + row[a];
                        if v < best_value {
                            best_value = v;
                            best_a = a;
                        }
                    }
                }
                None => {
                    for (a, &prev) in best.iter().enumerate().take(b).skip(d - 1) {
                        let v = prev + cost(a, b);
                        if v < best_value {
                            best_value = v;
                            best_a = a;
                        }
                    }
                }
            }
            next[b] = best_value;
            arg[b] = best_a as u32;
        }
        sse.push(next[p]);
        argmins.push(arg);
        best = next;
    }

    let mut fits = Vec::with_capacity(max_segments);
    for d in 1..=max_segments {
        let mut starts = Vec::with_capacity(d);
        let mut b = p;
        for level in (1..d).rev() {
            let a = argmins[level][b] as usize;
            starts.push(bounds[a] + 1);
            b = a;
        }
        starts.push(1);
        starts.reverse();
        fits.push(PartitionFit {
            dimension: d,
            sse: sse[d - 1].max(0.0),
            partition: Partition {
                breakpoints: starts,
                n,
            },
        });
    }
    Ok(fits)
}

/// Piecewise-constant estimate whose columns are segment frequencies.
pub fn segment_means(stats: &SegmentStats, partition: &Partition) -> ProbabilityMatrix {
    let (r, n) = (stats.r, stats.n);
    let mut data = vec![0.0; r * n];
    let mut counts = vec![0u64; r];
    for (start, end) in partition.segments() {
        stats.counts_into(start - 1, end, &mut counts);
        let len = (end - start + 1) as f64;
        for (j, &c) in counts.iter().enumerate() {
            let p = c as f64 / len;
            data[j * n + start - 1..j * n + end].fill(p);
        }
    }
    ProbabilityMatrix::from_real_unchecked(RealMatrix::from_data_unchecked(r, n, data))
}

#[derive(Debug, Clone, PartialEq)]
pub struct SegmentationResult {
    pub partition: Partition,
    pub dimension: usize,
    /// `SSE(D) + pen(D)` for every examined `D`.
    pub criterion_path: Vec<CriterionPoint>,
    pub estimate: ProbabilityMatrix,
}

pub(crate) fn select_from_fits(
    stats: &SegmentStats,
    fits: &[PartitionFit],
    pen: &PenaltySpec,
    size: usize,
) -> SegmentationResult {
    let sses: Vec<f64> = fits.iter().map(|f| f.sse).collect();
    let dims: Vec<usize> = fits.iter().map(|f| f.dimension).collect();
    let best = selection::penalized_argmin(&sses, &dims, pen, size);
    let partition = fits[best].partition.clone();
    SegmentationResult {
        estimate: segment_means(stats, &partition),
        dimension: dims[best],
        criterion_path: selection::criterion_path(dims.iter().copied(), &sses, &dims, pen, size),
        partition,
    }
}

/// Penalized segmentation over partitions with at most `max_segments` pieces.
///
/// The log term of a two-constant penalty uses the sequence length `n`.
pub fn ei_select(
    x: &MultinomialMatrix,
    pen: &PenaltySpec,
    max_segments: usize,
    candidates: Option<&[usize]>,
) -> Result<SegmentationResult> {
    pen.validate()?;
    let stats = SegmentStats::new(x);
    let fits = dp_optimal_partitions(&stats, max_segments, candidates)?;
    Ok(select_from_fits(&stats, &fits, pen, x.cols()))
}

/// Positions `i` in `2..=n` whose column differs from column `i - 1`.
pub fn jump_set(estimate: &RealMatrix) -> Vec<usize> {
    let (r, n) = (estimate.rows(), estimate.cols());
    (1..n)
        .filter(|&i| (0..r).any(|j| (estimate.get(j, i) - estimate.get(j, i - 1)).abs() > JUMP_TOLERANCE))
        .map(|i| i + 1)
        .collect()
}

/// Default segment cap for a run restricted to `candidates`.
pub fn default_max_segments(n: usize, candidates: usize) -> usize {
    n.min(4 * candidates + 1).min(candidates + 1)
}

#[derive(Debug, Clone, PartialEq)]
pub struct HybridResult {
    pub partition: Partition,
    pub estimate: ProbabilityMatrix,
    /// Jumps of the first-step Haar estimate.
    pub jumps: Vec<usize>,
    pub haar_level: usize,
    pub haar_dimension: usize,
    pub criterion_path: Vec<CriterionPoint>,
}

/// Compressed Haar selection followed by segmentation restricted to its jumps.
///
/// `max_segments` is clamped to the number of admissible segments.
pub fn hybrid_detect(
    x: &MultinomialMatrix,
    haar_pen: &PenaltySpec,
    segment_pen: &PenaltySpec,
    max_segments: Option<usize>,
) -> Result<HybridResult> {
    segment_pen.validate()?;
    let coeffs = transform_matrix(x.as_real())?;
    let first = selection::neh_select(&coeffs, haar_pen, None)?;
    let jumps = jump_set(&first.estimate);
    let seg = restricted_segmentation(x, &jumps, segment_pen, max_segments)?;
    Ok(HybridResult {
        partition: seg.partition,
        estimate: seg.estimate,
        haar_level: first.level.unwrap_or(0),
        haar_dimension: first.dimension,
        criterion_path: seg.criterion_path,
        jumps,
    })
}

/// Segmentation restricted to `jumps`; the log term of a two-constant penalty
/// uses the number of candidate jumps instead of `n`.
pub(crate) fn restricted_segmentation(
    x: &MultinomialMatrix,
    jumps: &[usize],
    pen: &PenaltySpec,
    max_segments: Option<usize>,
) -> Result<SegmentationResult> {
    let stats = SegmentStats::new(x);
    let admissible = jumps.len() + 1;
    let cap = max_segments
        .unwrap_or_else(|| default_max_segments(x.cols(), jumps.len()))
        .clamp(1, admissible);
    let fits = dp_optimal_partitions(&stats, cap, Some(jumps))?;
    Ok(select_from_fits(&stats, &fits, pen, jumps.len().max(1)))
}
