//! Derivatives of the minimum-ELC matrix and the count/size selection rules.
//!
//! Differences are taken in index space: one step is one MER along the count
//! axis and one size increment along the size axis.

use serde::Serialize;
use thiserror::Error;

use crate::enumeration::ElcMatrix;

#[derive(Debug, Error, PartialEq)]
pub enum SizingError {
    #[error("{axis} axis has {len} entries, need at least {needed}")]
    VectorTooShort { axis: &'static str, len: usize, needed: usize },
    #[error("vectors and labels are misaligned or empty")]
    Misaligned,
}

/// Numerical gradient with unit spacing: one-sided differences at the ends,
/// central differences inside.
pub fn gradient_1d(values: &[f64]) -> Result<Vec<f64>, SizingError> {
    let n = values.len();
    if n < 2 {
        return Err(SizingError::VectorTooShort {
            axis: "input",
            len: n,
            needed: 2,
        });
    }
    Ok((0..n)
        .map(|i| match i {
            0 => values[1] - values[0],
            i if i == n - 1 => values[n - 1] - values[n - 2],
            i => (values[i + 1] - values[i - 1]) / 2.0,
        })
        .collect())
}

fn mean(values: impl ExactSizeIterator<Item = f64>) -> f64 {
    let n = values.len() as f64;
    values.sum::<f64>() / n
}

/// Gradient of each row (along counts) and its column-wise mean.
pub fn first_derivative_wrt_count(matrix: &ElcMatrix) -> Result<(Vec<Vec<f64>>, Vec<f64>), SizingError> {
    if matrix.counts.len() < 2 {
        return Err(SizingError::VectorTooShort {
            axis: "count",
            len: matrix.counts.len(),
            needed: 2,
        });
    }
    let d1 = matrix
        .values
        .iter()
        .map(|row| gradient_1d(row))
        .collect::<Result<Vec<_>, _>>()?;
    let avg = (0..matrix.counts.len())
        .map(|c| mean(d1.iter().map(|row| row[c])))
        .collect();
    Ok((d1, avg))
}

/// Second derivative down each column (along sizes) and its row-wise mean.
pub fn second_derivative_wrt_size(matrix: &ElcMatrix) -> Result<(Vec<Vec<f64>>, Vec<f64>), SizingError> {
    if matrix.sizes_kw.len() < 3 {
        return Err(SizingError::VectorTooShort {
            axis: "size",
            len: matrix.sizes_kw.len(),
            needed: 3,
        });
    }
    let mut d2 = vec![vec![0.0; matrix.counts.len()]; matrix.sizes_kw.len()];
    for c in 0..matrix.counts.len() {
        let col = gradient_1d(&gradient_1d(&matrix.column(c))?)?;
        for (row, v) in d2.iter_mut().zip(col) {
            row[c] = v;
        }
    }
    let avg = d2.iter().map(|row| mean(row.iter().copied())).collect();
    Ok((d2, avg))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DerivativeTables {
    pub d1_number: Vec<Vec<f64>>,
    pub d1_avg_over_sizes: Vec<f64>,
    pub d2_size: Vec<Vec<f64>>,
    pub d2_avg_over_counts: Vec<f64>,
}

impl DerivativeTables {
    pub fn compute(matrix: &ElcMatrix) -> Result<Self, SizingError> {
        let (d1_number, d1_avg_over_sizes) = first_derivative_wrt_count(matrix)?;
        let (d2_size, d2_avg_over_counts) = second_derivative_wrt_size(matrix)?;
        Ok(Self {
            d1_number,
            d1_avg_over_sizes,
            d2_size,
            d2_avg_over_counts,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum SizingFlag {
    /// The averaged first derivative never reaches zero; the largest count is reported.
    NoSignChange,
    /// The averaged first derivative is already nonnegative at the smallest count.
    NonnegativeAtStart,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SizingResult {
    pub optimal_count: usize,
    pub optimal_total_kw: f64,
    pub flags: Vec<SizingFlag>,
}

/// Optimal count: the last negative entry of `d1_avg` before it first turns
/// nonnegative. Optimal size: the largest entry of `d2_avg`, earliest on ties.
pub fn select_optimal(
    d1_avg: &[f64],
    d2_avg: &[f64],
    counts: &[usize],
    sizes: &[f64],
) -> Result<SizingResult, SizingError> {
    if d1_avg.is_empty() || d2_avg.is_empty() || d1_avg.len() != counts.len() || d2_avg.len() != sizes.len() {
        return Err(SizingError::Misaligned);
    }
    let mut flags = Vec::new();
    let optimal_count = match d1_avg.iter().position(|&v| v >= 0.0) {
        Some(0) => {
            flags.push(SizingFlag::NonnegativeAtStart);
            counts[0]
        }
        Some(i) => counts[i - 1],
        None => {
            flags.push(SizingFlag::NoSignChange);
            counts[counts.len() - 1]
        }
    };
    let mut best = 0;
    for (i, &v) in d2_avg.iter().enumerate() {
        if v > d2_avg[best] {
            best = i;
        }
    }
    Ok(SizingResult {
        optimal_count,
        optimal_total_kw: sizes[best],
        flags,
    })
}
