// SPDX-License-Identifier: MIT OR Apache-2.0

//! Matrices over an `r`-letter alphabet observed at `n` positions.
//!
//! All matrices are stored line-major: line `j` (one category) is a
//! contiguous slice of length `n`, since the Haar transform and the
//! least-squares projections act one line at a time. Line and column
//! indices in this module are 0-based.

use crate::error::{Error, Result};

/// Column sums of a [`ProbabilityMatrix`] must equal one within this tolerance.
pub const SIMPLEX_TOLERANCE: f64 = 1e-12;

/// A sequence of category labels in `1..=r`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CategoricalSequence {
    values: Vec<u8>,
    r: usize,
}

impl CategoricalSequence {
    pub fn new(values: Vec<u8>, r: usize) -> Result<Self> {
        if !(2..=u8::MAX as usize).contains(&r) {
            return Err(Error::invalid(format!("alphabet size must be in 2..=255, got {r}")));
        }
        if values.is_empty() {
            return Err(Error::invalid("sequence must not be empty"));
        }
        if let Some((i, &v)) = values
            .iter()
            .enumerate()
            .find(|(_, &v)| v == 0 || v as usize > r)
        {
            return Err(Error::invalid(format!(
                "label {v} at position {} is outside 1..={r}",
                i + 1
            )));
        }
        Ok(Self { values, r })
    }

    /// Labels, 1-based.
    pub fn values(&self) -> &[u8] {
        &self.values
    }

    pub fn alphabet_size(&self) -> usize {
        self.r
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub(crate) fn from_parts_unchecked(values: Vec<u8>, r: usize) -> Self {
        Self { values, r }
    }
}

/// An unconstrained `r x n` matrix with finite entries.
#[derive(Debug, Clone, PartialEq)]
pub struct RealMatrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl RealMatrix {
    /// Builds a matrix from line-major data of length `rows * cols`.
    pub fn new(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        if rows == 0 || cols == 0 {
            return Err(Error::invalid("matrix dimensions must be positive"));
        }
        if data.len() != rows * cols {
            return Err(Error::invalid(format!(
                "expected {} entries for a {rows}x{cols} matrix, got {}",
                rows * cols,
                data.len()
            )));
        }
        if let Some(idx) = data.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite {
                line: idx / cols,
                position: idx % cols,
            });
        }
        Ok(Self { rows, cols, data })
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    pub fn from_lines(lines: &[Vec<f64>]) -> Result<Self> {
        let rows = lines.len();
        let cols = lines.first().map_or(0, Vec::len);
        if lines.iter().any(|l| l.len() != cols) {
            return Err(Error::invalid("lines have unequal lengths"));
        }
        Self::new(rows, cols, lines.concat())
    }

    pub fn from_columns(columns: &[Vec<f64>]) -> Result<Self> {
        let cols = columns.len();
        let rows = columns.first().map_or(0, Vec::len);
        if columns.iter().any(|c| c.len() != rows) {
            return Err(Error::invalid("columns have unequal lengths"));
        }
        let mut data = vec![0.0; rows * cols];
        for (i, column) in columns.iter().enumerate() {
            for (j, &v) in column.iter().enumerate() {
                data[j * cols + i] = v;
            }
        }
        Self::new(rows, cols, data)
    }

    pub(crate) fn from_data_unchecked(rows: usize, cols: usize, data: Vec<f64>) -> Self {
        debug_assert_eq!(data.len(), rows * cols);
        Self { rows, cols, data }
    }

    /// Number of lines (the alphabet size `r`).
    pub fn rows(&self) -> usize {
        self.rows
    }

    /// Number of columns (the sequence length `n`).
    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn line(&self, j: usize) -> &[f64] {
        &self.data[j * self.cols..(j + 1) * self.cols]
    }

    pub fn lines(&self) -> impl Iterator<Item = &[f64]> {
        self.data.chunks_exact(self.cols)
    }

    pub(crate) fn lines_mut(&mut self) -> impl Iterator<Item = &mut [f64]> {
        self.data.chunks_exact_mut(self.cols)
    }

    pub fn get(&self, j: usize, i: usize) -> f64 {
        self.data[j * self.cols + i]
    }

    pub fn column(&self, i: usize) -> Vec<f64> {
        (0..self.rows).map(|j| self.get(j, i)).collect()
    }

    pub fn column_sum(&self, i: usize) -> f64 {
        (0..self.rows).map(|j| self.get(j, i)).sum()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn same_shape(&self, other: &RealMatrix) -> bool {
        self.rows == other.rows && self.cols == other.cols
    }

    pub fn frobenius_sq(&self) -> f64 {
        self.data.iter().map(|v| v * v).sum()
    }
}

/// An `r x n` matrix whose columns are probability vectors.
#[derive(Debug, Clone, PartialEq)]
pub struct ProbabilityMatrix(RealMatrix);

impl ProbabilityMatrix {
    pub fn new(matrix: RealMatrix) -> Result<Self> {
        for i in 0..matrix.cols() {
            let mut sum = 0.0;
            for j in 0..matrix.rows() {
                let v = matrix.get(j, i);
                if !(0.0..=1.0).contains(&v) {
                    return Err(Error::invalid(format!(
                        "entry ({j}, {i}) = {v} is outside [0, 1]"
                    )));
                }
                sum += v;
            }
            if (sum - 1.0).abs() > SIMPLEX_TOLERANCE {
                return Err(Error::invalid(format!("column {i} sums to {sum}, not 1")));
            }
        }
        Ok(Self(matrix))
    }

    pub fn from_columns(columns: &[Vec<f64>]) -> Result<Self> {
        Self::new(RealMatrix::from_columns(columns)?)
    }

    pub(crate) fn from_real_unchecked(matrix: RealMatrix) -> Self {
        Self(matrix)
    }

    pub fn as_real(&self) -> &RealMatrix {
        &self.0
    }

    pub fn into_real(self) -> RealMatrix {
        self.0
    }

    pub fn rows(&self) -> usize {
        self.0.rows()
    }

    pub fn cols(&self) -> usize {
        self.0.cols()
    }
}

/// The one-hot observation matrix of a categorical sequence.
#[derive(Debug, Clone, PartialEq)]
pub struct MultinomialMatrix {
    matrix: RealMatrix,
    // 0-based category of each column
    categories: Vec<u8>,
}

impl MultinomialMatrix {
    /// Builds the matrix from 0-based categories.
    pub fn from_categories(r: usize, categories: Vec<u8>) -> Result<Self> {
        if !(2..=u8::MAX as usize).contains(&r) {
            return Err(Error::invalid(format!("alphabet size must be in 2..=255, got {r}")));
        }
        if categories.is_empty() {
            return Err(Error::invalid("sequence must not be empty"));
        }
        if let Some(&c) = categories.iter().find(|&&c| c as usize >= r) {
            return Err(Error::invalid(format!("category {c} out of range for r = {r}")));
        }
        Ok(Self::from_categories_unchecked(r, categories))
    }

    pub(crate) fn from_categories_unchecked(r: usize, categories: Vec<u8>) -> Self {
        let n = categories.len();
        let mut data = vec![0.0; r * n];
        for (i, &c) in categories.iter().enumerate() {
            data[c as usize * n + i] = 1.0;
        }
        Self {
            matrix: RealMatrix::from_data_unchecked(r, n, data),
            categories,
        }
    }

    pub fn as_real(&self) -> &RealMatrix {
        &self.matrix
    }

    pub fn rows(&self) -> usize {
        self.matrix.rows()
    }

    pub fn cols(&self) -> usize {
        self.matrix.cols()
    }

    /// 0-based category of column `i`.
    pub fn category(&self, i: usize) -> usize {
        self.categories[i] as usize
    }

    pub fn categories(&self) -> &[u8] {
        &self.categories
    }

    /// Per-category counts over the whole sequence.
    pub fn counts(&self) -> Vec<usize> {
        let mut counts = vec![0; self.rows()];
        for &c in &self.categories {
            counts[c as usize] += 1;
        }
        counts
    }

    /// Column-wise argmax back to 1-based labels.
    pub fn decode(&self) -> CategoricalSequence {
        let values = (0..self.cols())
            .map(|i| {
                let column = self.matrix.column(i);
                let best = column
                    .iter()
                    .enumerate()
                    .fold(0, |best, (j, &v)| if v > column[best] { j } else { best });
                best as u8 + 1
            })
            .collect();
        CategoricalSequence::from_parts_unchecked(values, self.rows())
    }
}

pub fn encode(seq: &CategoricalSequence) -> MultinomialMatrix {
    let categories = seq.values().iter().map(|&v| v - 1).collect();
    MultinomialMatrix::from_categories_unchecked(seq.alphabet_size(), categories)
}

/// Squared Frobenius distance between two matrices of the same shape.
pub fn frobenius_sq_diff(a: &RealMatrix, b: &RealMatrix) -> Result<f64> {
    if !a.same_shape(b) {
        return Err(Error::ShapeMismatch {
            left_rows: a.rows(),
            left_cols: a.cols(),
            right_rows: b.rows(),
            right_cols: b.cols(),
        });
    }
    Ok(a
        .as_slice()
        .iter()
        .zip(b.as_slice())
        .map(|(x, y)| (x - y) * (x - y))
        .sum())
}

/// Euclidean projection of each column onto the probability simplex.
pub fn simplex_project(m: &RealMatrix) -> Result<ProbabilityMatrix> {
    if let Some(idx) = m.as_slice().iter().position(|v| !v.is_finite()) {
        return Err(Error::NonFinite {
            line: idx / m.cols(),
            position: idx % m.cols(),
        });
    }
    let (rows, cols) = (m.rows(), m.cols());
    let mut out = RealMatrix::zeros(rows, cols);
    let mut column = vec![0.0; rows];
    let mut projected = vec![0.0; rows];
    for i in 0..cols {
        for (j, v) in column.iter_mut().enumerate() {
            *v = m.get(j, i);
        }
        project_onto_simplex(&column, &mut projected);
        for (j, &v) in projected.iter().enumerate() {
            out.data[j * cols + i] = v;
        }
    }
    Ok(ProbabilityMatrix(out))
}

/// Writes the projection of `v` into `out`.
fn project_onto_simplex(v: &[f64], out: &mut [f64]) {
    out.copy_from_slice(v);
    out.sort_unstable_by(|a, b| b.total_cmp(a));
    let mut cumsum = 0.0;
    let mut theta = 0.0;
    for (k, &u) in out.iter().enumerate() {
        cumsum += u;
        let t = (cumsum - 1.0) / (k + 1) as f64;
        if u - t > 0.0 {
            theta = t;
        }
    }
    for (o, &x) in out.iter_mut().zip(v) {
        *o = (x - theta).clamp(0.0, 1.0);
    }
}
