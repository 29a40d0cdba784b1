// SPDX-License-Identifier: MIT OR Apache-2.0

//! Penalized model selection over Haar coefficients.
//!
//! Two model collections are supported. The exhaustive one ([`eh_select`])
//! ranges over every subset of the basis containing the constant vector and
//! is solved by sorting coefficient norms. The compressed one
//! ([`neh_select`]) keeps, for a cut level `J`, every coarse coefficient
//! below `J` plus the `floor(2^J / (k+1)^3)` largest coefficients of each
//! finer level `J + k`.
//!
//! Criteria are written as `fit + pen(D)` where `fit = -||s_m||^2` is the
//! least-squares contrast of the projection. Ties in norms are broken by
//! lexical position; ties in the criterion go to the smallest candidate.

use serde::{Deserialize, Serialize};

use crate::domain::RealMatrix;
use crate::error::{Error, Result};
use crate::haar::{self, CoefficientMatrix, HaarIndex};

pub const DEFAULT_C1: f64 = 1.0;
pub const DEFAULT_C2: f64 = 2.0;
pub const DEFAULT_C: f64 = 1.0;

/// Dimension penalty.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case")]
pub enum PenaltySpec {
    /// `D * (c1 * ln(size / D) + c2)`, where `size` is the number of
    /// positions the models are built on.
    TwoConstantLog { c1: f64, c2: f64 },
    /// `c * D`.
    Linear { c: f64 },
}

impl PenaltySpec {
    pub fn two_constant(c1: f64, c2: f64) -> Result<Self> {
        let pen = PenaltySpec::TwoConstantLog { c1, c2 };
        pen.validate()?;
        Ok(pen)
    }

    pub fn linear(c: f64) -> Result<Self> {
        let pen = PenaltySpec::Linear { c };
        pen.validate()?;
        Ok(pen)
    }

    pub fn validate(&self) -> Result<()> {
        let ok = |v: f64| v.is_finite() && v >= 0.0;
        match *self {
            PenaltySpec::TwoConstantLog { c1, c2 } if ok(c1) && ok(c2) => Ok(()),
            PenaltySpec::Linear { c } if ok(c) => Ok(()),
            _ => Err(Error::InvalidPenalty(format!(
                "constants must be finite and non-negative: {self:?}"
            ))),
        }
    }

    pub fn value(&self, dimension: usize, size: usize) -> f64 {
        let d = dimension as f64;
        match *self {
            PenaltySpec::TwoConstantLog { c1, c2 } => {
                d * (c1 * (size as f64 / d).ln() + c2)
            }
            PenaltySpec::Linear { c } => c * d,
        }
    }

    fn family_name(&self) -> &'static str {
        match self {
            PenaltySpec::TwoConstantLog { .. } => "two-constant log",
            PenaltySpec::Linear { .. } => "linear",
        }
    }
}

impl Default for PenaltySpec {
    fn default() -> Self {
        PenaltySpec::TwoConstantLog {
            c1: DEFAULT_C1,
            c2: DEFAULT_C2,
        }
    }
}

/// Index of the minimum of `fit[i] + pen(dims[i])`, first index on ties.
pub fn penalized_argmin(fits: &[f64], dims: &[usize], pen: &PenaltySpec, size: usize) -> usize {
    debug_assert_eq!(fits.len(), dims.len());
    let mut best = 0;
    let mut best_value = f64::INFINITY;
    for (i, (&fit, &dim)) in fits.iter().zip(dims).enumerate() {
        let value = fit + pen.value(dim, size);
        if value < best_value {
            best = i;
            best_value = value;
        }
    }
    best
}

/// One candidate on a criterion path.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CriterionPoint {
    /// `D` for the exhaustive collection, the cut level `J` for the compressed one.
    pub candidate: usize,
    pub dimension: usize,
    pub value: f64,
}

pub(crate) fn criterion_path(
    candidates: impl Iterator<Item = usize>,
    fits: &[f64],
    dims: &[usize],
    pen: &PenaltySpec,
    size: usize,
) -> Vec<CriterionPoint> {
    candidates
        .zip(fits.iter().zip(dims))
        .map(|(candidate, (&fit, &dimension))| CriterionPoint {
            candidate,
            dimension,
            value: fit + pen.value(dimension, size),
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct SelectionResult {
    /// Selected basis indices, in lexical order.
    pub selected: Vec<HaarIndex>,
    pub dimension: usize,
    /// Selected cut level for the compressed collection.
    pub level: Option<usize>,
    pub criterion_path: Vec<CriterionPoint>,
    pub estimate: RealMatrix,
}

impl SelectionResult {
    pub fn criterion(&self) -> f64 {
        let pick = self.level.unwrap_or(self.dimension);
        self.criterion_path
            .iter()
            .find(|p| p.candidate == pick)
            .map(|p| p.value)
            .expect("selected candidate is on the path")
    }
}

/// Basis positions sorted for the exhaustive collection: the constant
/// vector first, then decreasing norm.
#[derive(Debug, Clone)]
pub struct EhRanking {
    order: Vec<usize>,
    // cumulative[d] = sum of the first d ranked norms
    cumulative: Vec<f64>,
    fits: Vec<f64>,
    dims: Vec<usize>,
}

impl EhRanking {
    pub fn new(coeffs: &CoefficientMatrix) -> Self {
        let norms = coeffs.norms();
        let n = norms.len();
        let mut order: Vec<usize> = (1..n).collect();
        order.sort_by(|&a, &b| norms[b].total_cmp(&norms[a]).then(a.cmp(&b)));
        order.insert(0, 0);
        let mut cumulative = Vec::with_capacity(n + 1);
        cumulative.push(0.0);
        let mut acc = 0.0;
        for &pos in &order {
            acc += norms[pos];
            cumulative.push(acc);
        }
        let fits = cumulative[1..].iter().map(|c| -c).collect();
        let dims = (1..=n).collect();
        Self {
            order,
            cumulative,
            fits,
            dims,
        }
    }

    /// Ranked lexical positions; the first `D` form the best model of dimension `D`.
    pub fn order(&self) -> &[usize] {
        &self.order
    }

    /// `-||s_m||^2` of the best model of each dimension `1..=n`.
    pub fn fits(&self) -> &[f64] {
        &self.fits
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn retained_energy(&self, dimension: usize) -> f64 {
        self.cumulative[dimension]
    }

    /// Selected dimension.
    pub fn select(&self, pen: &PenaltySpec) -> usize {
        penalized_argmin(&self.fits, &self.dims, pen, self.order.len()) + 1
    }
}

pub fn eh_select(coeffs: &CoefficientMatrix, pen: &PenaltySpec) -> Result<SelectionResult> {
    pen.validate()?;
    if !matches!(pen, PenaltySpec::TwoConstantLog { .. }) {
        return Err(Error::InvalidPenalty(format!(
            "exhaustive Haar selection takes the two-constant log penalty, got {}",
            pen.family_name()
        )));
    }
    let ranking = EhRanking::new(coeffs);
    let n = coeffs.len();
    let dimension = ranking.select(pen);
    let mut positions = ranking.order()[..dimension].to_vec();
    positions.sort_unstable();
    let estimate = reconstruct_positions(coeffs, &positions);
    Ok(SelectionResult {
        selected: positions.into_iter().map(HaarIndex::from_position).collect(),
        dimension,
        level: None,
        criterion_path: criterion_path(1..=n, ranking.fits(), ranking.dims(), pen, n),
        estimate,
    })
}

/// Number of coefficients kept at level `J + k` by the compressed collection.
fn kept_at_offset(cut: usize, k: usize) -> usize {
    let cube = ((k + 1) as u128).pow(3);
    ((1u128 << cut) / cube) as usize
}

/// Common dimension of every model of the compressed collection cut at `cut`.
pub fn neh_collection_dimension(cut: usize, depth: usize) -> Result<usize> {
    if depth == 0 || cut >= depth {
        return Err(Error::LevelOutOfRange {
            level: cut,
            max: depth.saturating_sub(1),
        });
    }
    Ok((1usize << cut) + (0..depth - cut).map(|k| kept_at_offset(cut, k)).sum::<usize>())
}

/// Per-level sorted coefficients for the compressed collection.
#[derive(Debug, Clone)]
pub struct NehRanking {
    depth: usize,
    // level_order[j] = positions of level j sorted by decreasing norm
    level_order: Vec<Vec<usize>>,
    // level_prefix[j][t] = sum of the t largest norms of level j
    level_prefix: Vec<Vec<f64>>,
    fits: Vec<f64>,
    dims: Vec<usize>,
}

impl NehRanking {
    /// `max_cut` defaults to `N - 1`.
    pub fn new(coeffs: &CoefficientMatrix, max_cut: Option<usize>) -> Result<Self> {
        let norms = coeffs.norms();
        let depth = coeffs.depth() as usize;
        let max_cut = max_cut.unwrap_or(depth - 1);
        if max_cut >= depth {
            return Err(Error::LevelOutOfRange {
                level: max_cut,
                max: depth - 1,
            });
        }
        let mut level_order = Vec::with_capacity(depth);
        let mut level_prefix = Vec::with_capacity(depth);
        for j in 0..depth {
            let start = 1usize << j;
            let mut order: Vec<usize> = (start..2 * start).collect();
            order.sort_by(|&a, &b| norms[b].total_cmp(&norms[a]).then(a.cmp(&b)));
            let mut prefix = Vec::with_capacity(order.len() + 1);
            prefix.push(0.0);
            let mut acc = 0.0;
            for &pos in &order {
                acc += norms[pos];
                prefix.push(acc);
            }
            level_order.push(order);
            level_prefix.push(prefix);
        }

        let mut fits = Vec::with_capacity(max_cut + 1);
        let mut dims = Vec::with_capacity(max_cut + 1);
        let mut coarse = norms[0];
        for cut in 0..=max_cut {
            let fine: f64 = (0..depth - cut)
                .map(|k| level_prefix[cut + k][kept_at_offset(cut, k)])
                .sum();
            fits.push(-(coarse + fine));
            dims.push(neh_collection_dimension(cut, depth)?);
            coarse += level_prefix[cut][1 << cut];
        }
        Ok(Self {
            depth,
            level_order,
            level_prefix,
            fits,
            dims,
        })
    }

    pub fn depth(&self) -> usize {
        self.depth
    }

    pub fn max_cut(&self) -> usize {
        self.fits.len() - 1
    }

    pub fn fits(&self) -> &[f64] {
        &self.fits
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    /// Positions of level `j`, decreasing norm.
    pub fn level_order(&self, j: usize) -> &[usize] {
        &self.level_order[j]
    }

    /// Sum of the `t` largest norms of level `j`.
    pub fn level_top_sum(&self, j: usize, t: usize) -> f64 {
        self.level_prefix[j][t]
    }

    /// How many coefficients of level `j` the model cut at `cut` keeps.
    pub fn kept(&self, cut: usize, j: usize) -> usize {
        if j < cut {
            1 << j
        } else {
            kept_at_offset(cut, j - cut)
        }
    }

    /// Lexical positions of the best model cut at `cut`, sorted.
    pub fn model_positions(&self, cut: usize) -> Vec<usize> {
        let mut positions = vec![0];
        for j in 0..self.depth {
            positions.extend_from_slice(&self.level_order[j][..self.kept(cut, j)]);
        }
        positions.sort_unstable();
        positions
    }

    /// Selected cut level.
    pub fn select(&self, pen: &PenaltySpec) -> usize {
        penalized_argmin(&self.fits, &self.dims, pen, 1 << self.depth)
    }
}

pub fn neh_select(
    coeffs: &CoefficientMatrix,
    pen: &PenaltySpec,
    max_cut: Option<usize>,
) -> Result<SelectionResult> {
    pen.validate()?;
    if !matches!(pen, PenaltySpec::Linear { .. }) {
        return Err(Error::InvalidPenalty(format!(
            "compressed Haar selection takes the linear penalty, got {}",
            pen.family_name()
        )));
    }
    let ranking = NehRanking::new(coeffs, max_cut)?;
    let cut = ranking.select(pen);
    let positions = ranking.model_positions(cut);
    let estimate = reconstruct_positions(coeffs, &positions);
    Ok(SelectionResult {
        dimension: positions.len(),
        selected: positions.into_iter().map(HaarIndex::from_position).collect(),
        level: Some(cut),
        criterion_path: criterion_path(
            0..=ranking.max_cut(),
            ranking.fits(),
            ranking.dims(),
            pen,
            coeffs.len(),
        ),
        estimate,
    })
}

/// Least-squares estimate on the span of `selected`.
pub fn reconstruct(coeffs: &CoefficientMatrix, selected: &[HaarIndex]) -> Result<RealMatrix> {
    let n = coeffs.len();
    let mut positions = Vec::with_capacity(selected.len());
    for &index in selected {
        positions.push(haar::canonical_order(index, n)? - 1);
    }
    Ok(reconstruct_positions(coeffs, &positions))
}

pub(crate) fn reconstruct_positions(coeffs: &CoefficientMatrix, positions: &[usize]) -> RealMatrix {
    let source = coeffs.coeffs();
    let (r, n) = (source.rows(), source.cols());
    let mut kept = vec![0.0; r * n];
    for j in 0..r {
        let line = source.line(j);
        for &pos in positions {
            kept[j * n + pos] = line[pos];
        }
    }
    haar::inverse_matrix(&RealMatrix::from_data_unchecked(r, n, kept))
}
