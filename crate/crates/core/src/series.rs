use std::collections::HashSet;

use crate::error::{Error, Result};
use crate::linalg::Matrix;

/// An N×M panel of real observations: rows are time, columns are channels.
#[derive(Debug, Clone, PartialEq)]
pub struct TimeSeriesSet {
    values: Matrix,
    labels: Vec<String>,
    dt: Option<f64>,
    time: Option<Vec<f64>>,
}

impl TimeSeriesSet {
    pub fn new(values: Matrix, labels: Vec<String>) -> Result<Self> {
        if values.nrows() == 0 || values.ncols() == 0 {
            return Err(Error::InvalidInput(
                "time series needs at least one row and one channel".into(),
            ));
        }
        if labels.len() != values.ncols() {
            return Err(Error::InvalidInput(format!(
                "{} labels for {} channels",
                labels.len(),
                values.ncols()
            )));
        }
        let mut seen = HashSet::new();
        for label in &labels {
            if !seen.insert(label.as_str()) {
                return Err(Error::InvalidInput(format!("duplicate channel label '{label}'")));
            }
        }
        if let Some(pos) = values.iter().position(|v| !v.is_finite()) {
            let (row, col) = (pos % values.nrows(), pos / values.nrows());
            return Err(Error::InvalidInput(format!(
                "non-finite value at row {row}, channel '{}'",
                labels[col]
            )));
        }
        Ok(Self {
            values,
            labels,
            dt: None,
            time: None,
        })
    }

    /// Builds a set with generated labels `y1..yM`.
    pub fn from_matrix(values: Matrix) -> Result<Self> {
        let labels = (1..=values.ncols()).map(|i| format!("y{i}")).collect();
        Self::new(values, labels)
    }

    pub fn from_columns(columns: &[Vec<f64>], labels: Vec<String>) -> Result<Self> {
        let n = columns.first().map_or(0, Vec::len);
        if columns.iter().any(|c| c.len() != n) {
            return Err(Error::InvalidInput("columns have different lengths".into()));
        }
        Self::new(Matrix::from_fn(n, columns.len(), |i, j| columns[j][i]), labels)
    }

    pub fn with_dt(mut self, dt: f64) -> Result<Self> {
        if !(dt.is_finite() && dt > 0.0) {
            return Err(Error::InvalidInput(format!("sampling interval must be positive, got {dt}")));
        }
        self.dt = Some(dt);
        Ok(self)
    }

    pub fn with_time(mut self, time: Vec<f64>) -> Result<Self> {
        if time.len() != self.len() {
            return Err(Error::InvalidInput(format!(
                "time axis has {} entries for {} rows",
                time.len(),
                self.len()
            )));
        }
        self.time = Some(time);
        Ok(self)
    }

    pub fn values(&self) -> &Matrix {
        &self.values
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn dt(&self) -> Option<f64> {
        self.dt
    }

    pub fn time(&self) -> Option<&[f64]> {
        self.time.as_deref()
    }

    /// Number of samples N.
    pub fn len(&self) -> usize {
        self.values.nrows()
    }

    pub fn is_empty(&self) -> bool {
        self.values.nrows() == 0
    }

    /// Number of channels M.
    pub fn channels(&self) -> usize {
        self.values.ncols()
    }

    pub fn column(&self, j: usize) -> Vec<f64> {
        self.values.column(j).iter().copied().collect()
    }

    pub fn channel_index(&self, label: &str) -> Option<usize> {
        self.labels.iter().position(|l| l == label)
    }

    /// Keeps the listed channels, in the given order.
    pub fn select_channels(&self, idx: &[usize]) -> Result<Self> {
        if idx.is_empty() || idx.iter().any(|&i| i >= self.channels()) {
            return Err(Error::InvalidInput(format!(
                "channel selection {idx:?} out of range for {} channels",
                self.channels()
            )));
        }
        let values = crate::linalg::select_cols(&self.values, idx);
        let labels = idx.iter().map(|&i| self.labels[i].clone()).collect();
        let mut out = Self::new(values, labels)?;
        out.dt = self.dt;
        out.time = self.time.clone();
        Ok(out)
    }

    /// Replaces the sample matrix keeping labels; `dt` and the time axis are
    /// carried over only when the row count is unchanged.
    pub(crate) fn with_values(&self, values: Matrix) -> Result<Self> {
        let same_rows = values.nrows() == self.len();
        let mut out = Self::new(values, self.labels.clone())?;
        out.dt = self.dt;
        if same_rows {
            out.time = self.time.clone();
        }
        Ok(out)
    }

    pub(crate) fn set_dt(&mut self, dt: Option<f64>) {
        self.dt = dt;
    }

    pub(crate) fn set_time(&mut self, time: Option<Vec<f64>>) {
        self.time = time;
    }
}
