// SPDX-License-Identifier: MIT OR Apache-2.0

//! Data-driven choice of a linear penalty constant by dimension jump.
//!
//! The constant `c` is swept upward from zero on a regular grid until the
//! minimal model is selected. The grid point right after the largest drop
//! in selected dimension is `c_hat`, and the retained constant is `2 * c_hat`.

use serde::{Deserialize, Serialize};

use crate::domain::MultinomialMatrix;
use crate::error::{Error, Result};
use crate::haar::{transform_matrix, CoefficientMatrix};
use crate::segmentation::{
    default_max_segments, dp_optimal_partitions, jump_set, restricted_segmentation,
    HybridResult, SegmentStats,
};
use crate::selection::{self, neh_select, NehRanking, PenaltySpec};

pub const DEFAULT_GRID_STEP: f64 = 0.02;
pub const DEFAULT_CALIBRATION_MAX_CUT: usize = 7;
pub const MAX_GRID_STEPS: usize = 1_000_000;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CalibrationPath {
    pub grid: Vec<f64>,
    /// Selected model dimension at each grid point.
    pub dims: Vec<usize>,
    pub c_hat: f64,
    pub retained: f64,
}

/// Sweeps `c = 0, step, 2 step, ...`; `select(c)` returns the selected
/// dimension and whether the minimal model was reached.
fn sweep(step: f64, mut select: impl FnMut(f64) -> (usize, bool)) -> Result<CalibrationPath> {
    if !(step.is_finite() && step > 0.0) {
        return Err(Error::invalid(format!("grid step must be positive, got {step}")));
    }
    let mut grid = Vec::new();
    let mut dims = Vec::new();
    for t in 0..=MAX_GRID_STEPS {
        let c = t as f64 * step;
        let (dim, minimal) = select(c);
        grid.push(c);
        dims.push(dim);
        if t > 0 && minimal {
            let mut jump_at = 1;
            let mut biggest = 0;
            for t in 1..dims.len() {
                let drop = dims[t - 1].saturating_sub(dims[t]);
                if drop > biggest {
                    biggest = drop;
                    jump_at = t;
                }
            }
            let c_hat = grid[jump_at];
            return Ok(CalibrationPath {
                grid,
                dims,
                c_hat,
                retained: 2.0 * c_hat,
            });
        }
    }
    Err(Error::CalibrationDiverged {
        steps: MAX_GRID_STEPS,
    })
}

/// Calibrates the compressed Haar criterion with cut levels `0..=max_cut`.
pub fn calibrate_neh(
    coeffs: &CoefficientMatrix,
    max_cut: usize,
    grid_step: f64,
) -> Result<CalibrationPath> {
    let ranking = NehRanking::new(coeffs, Some(max_cut))?;
    sweep(grid_step, |c| {
        let cut = ranking.select(&PenaltySpec::Linear { c });
        (ranking.dims()[cut], cut == 0)
    })
}

/// Calibrates the segmentation criterion `SSE(D) + c D`, optionally with
/// segments restricted to start at `candidates`.
pub fn calibrate_segmentation(
    x: &MultinomialMatrix,
    candidates: Option<&[usize]>,
    max_segments: usize,
    grid_step: f64,
) -> Result<CalibrationPath> {
    let stats = SegmentStats::new(x);
    let fits = dp_optimal_partitions(&stats, max_segments, candidates)?;
    let sses: Vec<f64> = fits.iter().map(|f| f.sse).collect();
    let dims: Vec<usize> = fits.iter().map(|f| f.dimension).collect();
    sweep(grid_step, |c| {
        let best = selection::penalized_argmin(&sses, &dims, &PenaltySpec::Linear { c }, x.cols());
        (dims[best], dims[best] == 1)
    })
}

/// Options for the two-step detector with data-driven constants.
#[derive(Debug, Clone, PartialEq)]
pub struct HybridOptions {
    pub grid_step: f64,
    /// Highest cut level examined while calibrating the Haar step.
    pub calibration_max_cut: usize,
    pub max_segments: Option<usize>,
    /// Fixed Haar-step constant; calibrated when `None`.
    pub haar_c: Option<f64>,
    /// Fixed segmentation constant; calibrated when `None`.
    pub segment_c: Option<f64>,
}

impl Default for HybridOptions {
    fn default() -> Self {
        Self {
            grid_step: DEFAULT_GRID_STEP,
            calibration_max_cut: DEFAULT_CALIBRATION_MAX_CUT,
            max_segments: None,
            haar_c: None,
            segment_c: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CalibratedHybrid {
    pub result: HybridResult,
    pub haar_penalty: PenaltySpec,
    pub segment_penalty: PenaltySpec,
    pub haar_calibration: Option<CalibrationPath>,
    pub segment_calibration: Option<CalibrationPath>,
}

/// Calibration of the Haar step as the hybrid detector runs it.
pub fn calibrate_haar_step(coeffs: &CoefficientMatrix, opts: &HybridOptions) -> Result<CalibrationPath> {
    let max_cut = opts.calibration_max_cut.min(coeffs.depth() as usize - 1);
    calibrate_neh(coeffs, max_cut, opts.grid_step)
}

/// Calibration of the segmentation step as the hybrid detector runs it.
///
/// A sparse jump set leaves the sweep nothing to overfit with, so the sweep
/// is restricted to the jumps of the least penalized Haar model examined by
/// [`calibrate_haar_step`], the one selected at `c = 0`.
pub fn calibrate_segment_step(
    x: &MultinomialMatrix,
    coeffs: &CoefficientMatrix,
    opts: &HybridOptions,
) -> Result<CalibrationPath> {
    let max_cut = opts.calibration_max_cut.min(coeffs.depth() as usize - 1);
    let rich = neh_select(coeffs, &PenaltySpec::Linear { c: 0.0 }, Some(max_cut))?;
    let candidates = jump_set(&rich.estimate);
    let cap = opts
        .max_segments
        .unwrap_or_else(|| default_max_segments(x.cols(), candidates.len()))
        .clamp(1, candidates.len() + 1);
    calibrate_segmentation(x, Some(&candidates), cap, opts.grid_step)
}

/// Two-step detection where each linear constant is either given or set to
/// the retained value of its own dimension-jump calibration.
pub fn calibrated_hybrid(x: &MultinomialMatrix, opts: &HybridOptions) -> Result<CalibratedHybrid> {
    let coeffs = transform_matrix(x.as_real())?;
    let (haar_c, haar_calibration) = match opts.haar_c {
        Some(c) => (c, None),
        None => {
            let path = calibrate_haar_step(&coeffs, opts)?;
            (path.retained, Some(path))
        }
    };
    let haar_penalty = PenaltySpec::linear(haar_c)?;
    let first = neh_select(&coeffs, &haar_penalty, None)?;
    let jumps = jump_set(&first.estimate);
    let cap = opts
        .max_segments
        .unwrap_or_else(|| default_max_segments(x.cols(), jumps.len()))
        .clamp(1, jumps.len() + 1);

    let (segment_c, segment_calibration) = match opts.segment_c {
        Some(c) => (c, None),
        None => {
            let path = calibrate_segment_step(x, &coeffs, opts)?;
            (path.retained, Some(path))
        }
    };
    let segment_penalty = PenaltySpec::linear(segment_c)?;
    let seg = restricted_segmentation(x, &jumps, &segment_penalty, Some(cap))?;
    Ok(CalibratedHybrid {
        result: HybridResult {
            partition: seg.partition,
            estimate: seg.estimate,
            haar_level: first.level.unwrap_or(0),
            haar_dimension: first.dimension,
            criterion_path: seg.criterion_path,
            jumps,
        },
        haar_penalty,
        segment_penalty,
        haar_calibration,
        segment_calibration,
    })
}
