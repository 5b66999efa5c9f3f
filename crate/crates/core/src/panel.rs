//! Multivariate observation panel.

use crate::{Error, Float, Result};

/// N x d panel of observations, one row per time point, with column
/// names and an optional frequency tag ("monthly", "quarterly", ...).
#[derive(Clone, Debug, PartialEq)]
pub struct TimeSeriesPanel<F> {
    data: Vec<F>, // row-major N x d
    n: usize,
    d: usize,
    names: Vec<String>,
    frequency: Option<String>,
}

impl<F: Float> TimeSeriesPanel<F> {
    /// Builds a panel from rows, rejecting ragged or non-finite input.
    pub fn from_rows(rows: Vec<Vec<F>>, names: Vec<String>) -> Result<Self> {
        let n = rows.len();
        let d = names.len();
        let mut data = Vec::with_capacity(n * d);
        for row in &rows {
            if row.len() != d {
                return Err(Error::DimensionMismatch {
                    expected: d,
                    got: row.len(),
                });
            }
            for &v in row {
                if !v.is_finite() {
                    return Err(Error::NonFinite {
                        what: "panel observation",
                    });
                }
                data.push(v);
            }
        }
        Ok(TimeSeriesPanel {
            data,
            n,
            d,
            names,
            frequency: None,
        })
    }

    pub fn with_frequency(mut self, frequency: impl Into<String>) -> Self {
        self.frequency = Some(frequency.into());
        self
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    pub fn dim(&self) -> usize {
        self.d
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn frequency(&self) -> Option<&str> {
        self.frequency.as_deref()
    }

    pub fn row(&self, t: usize) -> &[F] {
        &self.data[t * self.d..(t + 1) * self.d]
    }

    pub fn get(&self, t: usize, j: usize) -> F {
        self.data[t * self.d + j]
    }

    pub fn column(&self, j: usize) -> Vec<F> {
        (0..self.n).map(|t| self.get(t, j)).collect()
    }

    pub fn rows_iter(&self) -> impl Iterator<Item = &[F]> {
        self.data.chunks_exact(self.d.max(1))
    }

    /// Reorders columns; `perm[k]` is the source column of output column `k`.
    pub fn permute_columns(&self, perm: &[usize]) -> Result<Self> {
        if perm.len() != self.d {
            return Err(Error::DimensionMismatch {
                expected: self.d,
                got: perm.len(),
            });
        }
        let names = perm.iter().map(|&j| self.names[j].clone()).collect();
        let mut data = Vec::with_capacity(self.n * self.d);
        for t in 0..self.n {
            for &j in perm {
                data.push(self.get(t, j));
            }
        }
        Ok(TimeSeriesPanel {
            data,
            n: self.n,
            d: self.d,
            names,
            frequency: self.frequency.clone(),
        })
    }
}
