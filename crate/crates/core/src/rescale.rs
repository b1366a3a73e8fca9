//! Change-of-scale filters and their application to raw series.

use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::linalg::Matrix;
use crate::series::TimeSeriesSet;

/// Filter order used throughout unless overridden.
pub const DEFAULT_FILTER_ORDER: usize = 6;

/// Causal FIR filter `ỹ_n = Σ_l b_l y_{n-l}` with unit DC gain.
#[derive(Debug, Clone, PartialEq)]
pub struct FirFilter {
    coefficients: Vec<f64>,
    cutoff: f64,
}

impl FirFilter {
    /// Wraps user-supplied taps. They must be finite, not all zero, and sum to one.
    pub fn new(coefficients: Vec<f64>, cutoff: f64) -> Result<Self> {
        if coefficients.is_empty() {
            return Err(Error::InvalidFilter("no coefficients".into()));
        }
        if coefficients.iter().any(|b| !b.is_finite()) {
            return Err(Error::InvalidFilter("non-finite coefficient".into()));
        }
        let sum: f64 = coefficients.iter().sum();
        if (sum - 1.0).abs() > 1e-12 {
            return Err(Error::InvalidFilter(format!("coefficients sum to {sum}, expected 1")));
        }
        if !(cutoff > 0.0 && cutoff <= 0.5) {
            return Err(Error::InvalidFilter(format!("cutoff {cutoff} outside (0, 0.5]")));
        }
        Ok(Self { coefficients, cutoff })
    }

    /// Filter order q (number of taps minus one).
    pub fn order(&self) -> usize {
        self.coefficients.len() - 1
    }

    pub fn coefficients(&self) -> &[f64] {
        &self.coefficients
    }

    /// Nominal cutoff in cycles per sample.
    pub fn cutoff(&self) -> f64 {
        self.cutoff
    }

    pub fn leading_coefficient(&self) -> f64 {
        self.coefficients[0]
    }

    /// Number of exactly-zero leading taps, i.e. the pure delay of the filter.
    pub fn delay(&self) -> usize {
        self.coefficients.iter().take_while(|b| **b == 0.0).count()
    }

    /// Drops exactly-zero leading and trailing taps. The result differs from
    /// `self` only by a pure delay, so its leading tap is nonzero.
    pub fn trimmed(&self) -> Self {
        let first = self.delay();
        let last = self
            .coefficients
            .iter()
            .rposition(|b| *b != 0.0)
            .unwrap_or(first);
        Self {
            coefficients: self.coefficients[first..=last].to_vec(),
            cutoff: self.cutoff,
        }
    }

    /// `|Σ_l b_l e^{-i 2π f l}|` at normalized frequency `f`.
    pub fn magnitude_response(&self, f: f64) -> f64 {
        let (mut re, mut im) = (0.0, 0.0);
        for (l, b) in self.coefficients.iter().enumerate() {
            let w = 2.0 * PI * f * l as f64;
            re += b * w.cos();
            im -= b * w.sin();
        }
        re.hypot(im)
    }
}

/// `sin(π x) / (π x)` at `x = num / den`, exactly zero at nonzero integers.
fn sinc_ratio(num: i64, den: i64) -> f64 {
    if num == 0 {
        1.0
    } else if num % den == 0 {
        0.0
    } else {
        let x = PI * num as f64 / den as f64;
        x.sin() / x
    }
}

/// Hamming-windowed sinc lowpass of order `q` with cutoff `1 / (2τ)`,
/// rescaled to unit DC gain.
pub fn design_fir_hamming(q: usize, tau: usize) -> Result<FirFilter> {
    if tau == 0 {
        return Err(Error::InvalidFilter("scale factor must be at least 1".into()));
    }
    let cutoff = 0.5 / tau as f64;
    if q == 0 {
        return FirFilter::new(vec![1.0], cutoff);
    }
    let raw: Vec<f64> = (0..=q)
        .map(|l| {
            let window = 0.54 - 0.46 * (2.0 * PI * l as f64 / q as f64).cos();
            // 2 f_c (l - q/2) = (2l - q) / (2τ)
            window * sinc_ratio(2 * l as i64 - q as i64, 2 * tau as i64)
        })
        .collect();
    let sum: f64 = raw.iter().sum();
    let mut coefficients: Vec<f64> = raw.iter().map(|b| b / sum).collect();
    // Enforce symmetry bit-for-bit; the window and sinc are symmetric about q/2.
    for l in 0..coefficients.len() / 2 {
        let v = 0.5 * (coefficients[l] + coefficients[q - l]);
        coefficients[l] = v;
        coefficients[q - l] = v;
    }
    let drift: f64 = coefficients.iter().sum::<f64>() - 1.0;
    coefficients[q / 2] -= drift;
    FirFilter::new(coefficients, cutoff)
}

/// Moving average over `τ` samples: `q = τ - 1`, `b_l = 1/τ`.
pub fn averaging_filter(tau: usize) -> Result<FirFilter> {
    if tau == 0 {
        return Err(Error::InvalidFilter("scale factor must be at least 1".into()));
    }
    let mut coefficients = vec![1.0 / tau as f64; tau];
    let drift: f64 = coefficients.iter().sum::<f64>() - 1.0;
    coefficients[0] -= drift;
    FirFilter::new(coefficients, 0.5 / tau as f64)
}

/// Output row `n` (for `n = q..N-1`) is `Σ_l b_l x_{n-l}`; the first `q`
/// rows lack a full history and are dropped.
pub fn apply_filter(data: &TimeSeriesSet, filter: &FirFilter) -> Result<TimeSeriesSet> {
    let q = filter.order();
    let (n, m) = (data.len(), data.channels());
    if n <= q {
        return Err(Error::InsufficientData { needed: q, got: n });
    }
    let x = data.values();
    let b = filter.coefficients();
    let out = Matrix::from_fn(n - q, m, |r, c| {
        let t = r + q;
        b.iter().enumerate().map(|(l, bl)| bl * x[(t - l, c)]).sum()
    });
    let mut result = data.with_values(out)?;
    if let Some(time) = data.time() {
        result.set_time(Some(time[q..].to_vec()));
    }
    Ok(result)
}

/// Keeps rows `0, τ, 2τ, …` (every row index below N that is a multiple of τ).
pub fn downsample(data: &TimeSeriesSet, tau: usize) -> Result<TimeSeriesSet> {
    if tau == 0 {
        return Err(Error::InvalidInput("scale factor must be at least 1".into()));
    }
    let n = data.len();
    if n < tau {
        return Err(Error::InsufficientData { needed: tau, got: n });
    }
    let kept = n.div_ceil(tau);
    let x = data.values();
    let out = Matrix::from_fn(kept, data.channels(), |r, c| x[(r * tau, c)]);
    let mut result = data.with_values(out)?;
    result.set_dt(data.dt().map(|dt| dt * tau as f64));
    result.set_time(data.time().map(|t| t.iter().step_by(tau).copied().collect()));
    Ok(result)
}
