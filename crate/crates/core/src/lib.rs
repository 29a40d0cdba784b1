// SPDX-License-Identifier: MIT OR Apache-2.0

//! Estimation of the column-wise distribution of a categorical sequence by
//! penalized least squares, and change-point detection built on it.
//!
//! A sequence over an `r`-letter alphabet is encoded as an `r x n` one-hot
//! matrix `X`. Its expectation `s` is estimated by projecting `X` onto a
//! data-selected linear model:
//!
//! * [`selection::eh_select`] picks any subset of Haar vectors containing the
//!   constant, under a `D (c1 ln(n/D) + c2)` penalty;
//! * [`selection::neh_select`] picks from a compressed Haar collection under
//!   a linear penalty `c D`;
//! * [`segmentation::ei_select`] picks an interval partition by dynamic
//!   programming;
//! * [`segmentation::hybrid_detect`] runs the compressed Haar step and then
//!   segments on its jumps only, which scales to genome-length inputs.
//!
//! [`calibration`] chooses linear constants from the data, [`evaluation`]
//! holds the Monte Carlo and brute-force tooling, and [`io`] the file formats.

#![forbid(unsafe_code)]

pub mod calibration;
pub mod domain;
pub mod error;
pub mod evaluation;
pub mod haar;
pub mod io;
pub mod segmentation;
pub mod selection;

pub use calibration::{
    calibrate_neh, calibrate_segmentation, calibrated_hybrid, CalibratedHybrid, CalibrationPath,
    HybridOptions,
};
pub use domain::{
    encode, frobenius_sq_diff, simplex_project, CategoricalSequence, MultinomialMatrix,
    ProbabilityMatrix, RealMatrix,
};
pub use error::{Error, Result};
pub use evaluation::{
    grid_sweep, monte_carlo_risk, sample, RiskEstimate, StoppingRule, Strategy, SweepTable,
    TestSignal,
};
pub use haar::{transform_matrix, CoefficientMatrix, HaarIndex};
pub use segmentation::{
    dp_optimal_partitions, ei_select, hybrid_detect, jump_set, HybridResult, Partition,
    SegmentStats, SegmentationResult,
};
pub use selection::{
    eh_select, neh_collection_dimension, neh_select, reconstruct, PenaltySpec, SelectionResult,
};
