// SPDX-License-Identifier: MIT OR Apache-2.0

//! Discrete Haar basis of `R^n`, `n = 2^N`, and its fast transform.
//!
//! Basis vectors are indexed by `(level, shift)` with level `-1` for the
//! constant vector and levels `0..N` for details. Coefficient arrays use the
//! lexical order: position 0 holds `(-1, 0)` and `(j, k)` sits at `2^j + k`.
//! The detail vector of `(j, k)` is positive on the first half of its support,
//! so sample `i` (1-based) maps to the point `i / n` of `(0, 1]`.

use rayon::prelude::*;
use std::f64::consts::FRAC_1_SQRT_2;

use crate::domain::RealMatrix;
use crate::error::{Error, Result};

/// Index of a Haar basis vector.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct HaarIndex {
    level: i32,
    shift: usize,
}

impl HaarIndex {
    /// The constant vector `(-1, 0)`.
    pub const ROOT: HaarIndex = HaarIndex { level: -1, shift: 0 };

    pub fn new(level: i32, shift: usize) -> Result<Self> {
        match level {
            -1 if shift == 0 => Ok(Self::ROOT),
            j if (0..63).contains(&j) && shift < (1usize << j) => Ok(Self { level: j, shift }),
            _ => Err(Error::invalid(format!("invalid Haar index ({level}, {shift})"))),
        }
    }

    pub fn level(&self) -> i32 {
        self.level
    }

    pub fn shift(&self) -> usize {
        self.shift
    }

    /// 0-based position in lexical order.
    pub fn position(&self) -> usize {
        if self.level < 0 {
            0
        } else {
            (1usize << self.level) + self.shift
        }
    }

    pub fn from_position(pos: usize) -> Self {
        if pos == 0 {
            Self::ROOT
        } else {
            let level = pos.ilog2();
            Self {
                level: level as i32,
                shift: pos - (1usize << level),
            }
        }
    }
}

impl std::fmt::Display for HaarIndex {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "({}, {})", self.level, self.shift)
    }
}

/// `N` such that `n = 2^N`, with `N >= 1`.
pub fn dyadic_exponent(n: usize) -> Result<u32> {
    if n >= 2 && n.is_power_of_two() {
        Ok(n.trailing_zeros())
    } else {
        Err(Error::NotDyadic(n))
    }
}

fn check_index(index: HaarIndex, n: usize) -> Result<u32> {
    let big_n = dyadic_exponent(n)?;
    if index.level >= big_n as i32 {
        return Err(Error::invalid(format!(
            "index {index} does not exist for n = {n}"
        )));
    }
    Ok(big_n)
}

/// 1-based lexical rank of `index` among the `n` basis vectors.
pub fn canonical_order(index: HaarIndex, n: usize) -> Result<usize> {
    check_index(index, n)?;
    Ok(index.position() + 1)
}

/// The basis vector of `index`, evaluated directly from its definition.
pub fn haar_vector(index: HaarIndex, n: usize) -> Result<Vec<f64>> {
    check_index(index, n)?;
    let inv_sqrt_n = 1.0 / (n as f64).sqrt();
    if index.level < 0 {
        return Ok(vec![inv_sqrt_n; n]);
    }
    let scale = 2f64.powf(index.level as f64 / 2.0) * inv_sqrt_n;
    // x = 2^j i / n - k, compared in units of 1/n to stay in integers
    let two_j = 1i64 << index.level;
    let half = n as i64 / 2;
    let whole = n as i64;
    Ok((1..=n as i64)
        .map(|i| {
            let x = two_j * i - index.shift as i64 * whole;
            if x > 0 && x <= half {
                scale
            } else if x > half && x <= whole {
                -scale
            } else {
                0.0
            }
        })
        .collect())
}

/// Haar coefficients of `line` in lexical order, via the O(n) pyramid.
pub fn forward(line: &[f64]) -> Result<Vec<f64>> {
    let mut out = vec![0.0; line.len()];
    let mut scratch = line.to_vec();
    forward_into(&mut scratch, &mut out)?;
    Ok(out)
}

/// Pyramid transform; `work` holds the input and is clobbered.
fn forward_into(work: &mut [f64], out: &mut [f64]) -> Result<()> {
    let n = work.len();
    dyadic_exponent(n)?;
    let mut len = n;
    while len > 1 {
        let half = len / 2;
        for k in 0..half {
            let a = work[2 * k];
            let b = work[2 * k + 1];
            out[half + k] = (a - b) * FRAC_1_SQRT_2;
            work[k] = (a + b) * FRAC_1_SQRT_2;
        }
        len = half;
    }
    out[0] = work[0];
    Ok(())
}

/// Inverse of [`forward`].
pub fn inverse(coeffs: &[f64]) -> Result<Vec<f64>> {
    let mut out = vec![0.0; coeffs.len()];
    inverse_into(coeffs, &mut out)?;
    Ok(out)
}

fn inverse_into(coeffs: &[f64], out: &mut [f64]) -> Result<()> {
    let n = coeffs.len();
    dyadic_exponent(n)?;
    out[0] = coeffs[0];
    let mut len = 1;
    while len < n {
        // expand in place from the back so approximations are not overwritten
        for k in (0..len).rev() {
            let a = out[k];
            let d = coeffs[len + k];
            out[2 * k] = (a + d) * FRAC_1_SQRT_2;
            out[2 * k + 1] = (a - d) * FRAC_1_SQRT_2;
        }
        len *= 2;
    }
    Ok(())
}

/// Haar coefficients of every line of a matrix, with per-index squared norms.
#[derive(Debug, Clone, PartialEq)]
pub struct CoefficientMatrix {
    coeffs: RealMatrix,
    norms: Vec<f64>,
}

impl CoefficientMatrix {
    pub fn coeffs(&self) -> &RealMatrix {
        &self.coeffs
    }

    /// `norms[pos]` is the squared norm, summed over lines, of the
    /// coefficient at lexical position `pos`.
    pub fn norms(&self) -> &[f64] {
        &self.norms
    }

    pub fn len(&self) -> usize {
        self.norms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.norms.is_empty()
    }

    pub fn alphabet_size(&self) -> usize {
        self.coeffs.rows()
    }

    /// `N` with `n = 2^N`.
    pub fn depth(&self) -> u32 {
        self.norms.len().trailing_zeros()
    }
}

pub fn transform_matrix(x: &RealMatrix) -> Result<CoefficientMatrix> {
    let n = x.cols();
    dyadic_exponent(n)?;
    let mut coeffs = RealMatrix::zeros(x.rows(), n);
    let lines: Vec<&mut [f64]> = coeffs.lines_mut().collect();
    lines
        .into_par_iter()
        .zip(x.lines().collect::<Vec<_>>())
        .try_for_each(|(out, line)| {
            let mut work = line.to_vec();
            forward_into(&mut work, out)
        })?;
    let mut norms = vec![0.0; n];
    for line in coeffs.lines() {
        for (norm, &c) in norms.iter_mut().zip(line) {
            *norm += c * c;
        }
    }
    Ok(CoefficientMatrix { coeffs, norms })
}

/// Inverse transform of each line of a coefficient matrix.
pub(crate) fn inverse_matrix(coeffs: &RealMatrix) -> RealMatrix {
    let n = coeffs.cols();
    let mut out = RealMatrix::zeros(coeffs.rows(), n);
    let lines: Vec<&mut [f64]> = out.lines_mut().collect();
    lines
        .into_par_iter()
        .zip(coeffs.lines().collect::<Vec<_>>())
        .for_each(|(dst, src)| {
            inverse_into(src, dst).expect("coefficient length checked at construction");
        });
    out
}
