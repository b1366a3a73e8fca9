//! Detrending, normalization and uniform resampling.

use crate::error::{Error, Result};
use crate::linalg::Matrix;
use crate::series::TimeSeriesSet;

const TREND_GAP_TOL: f64 = 1e-8;
const TREND_MAX_ITER: usize = 200;

/// Default ℓ1 trend-filter penalty for a series of length `n`.
pub fn default_detrend_lambda(n: usize) -> f64 {
    10.0 * n as f64
}

/// Symmetric positive-definite pentadiagonal matrix stored by diagonals.
struct Penta {
    d0: Vec<f64>,
    d1: Vec<f64>,
    d2: Vec<f64>,
}

impl Penta {
    /// `D Dᵀ` for the second-difference operator on `n` points.
    fn second_difference_gram(m: usize) -> Self {
        Self {
            d0: vec![6.0; m],
            d1: vec![-4.0; m.saturating_sub(1)],
            d2: vec![1.0; m.saturating_sub(2)],
        }
    }

    fn mul(&self, x: &[f64]) -> Vec<f64> {
        let m = x.len();
        (0..m)
            .map(|i| {
                let mut s = self.d0[i] * x[i];
                if i >= 1 {
                    s += self.d1[i - 1] * x[i - 1];
                }
                if i + 1 < m {
                    s += self.d1[i] * x[i + 1];
                }
                if i >= 2 {
                    s += self.d2[i - 2] * x[i - 2];
                }
                if i + 2 < m {
                    s += self.d2[i] * x[i + 2];
                }
                s
            })
            .collect()
    }

    /// Solves `(self + diag(extra)) x = b` by banded LDLᵀ.
    fn solve(&self, extra: Option<&[f64]>, b: &[f64]) -> Vec<f64> {
        let m = b.len();
        let mut d = vec![0.0; m];
        let mut l1 = vec![0.0; m];
        let mut l2 = vec![0.0; m];
        for i in 0..m {
            let a_ii = self.d0[i] + extra.map_or(0.0, |e| e[i]);
            if i >= 2 {
                l2[i] = self.d2[i - 2] / d[i - 2];
            }
            if i >= 1 {
                let a = self.d1[i - 1] - if i >= 2 { l2[i] * d[i - 2] * l1[i - 1] } else { 0.0 };
                l1[i] = a / d[i - 1];
            }
            let mut di = a_ii;
            if i >= 1 {
                di -= l1[i] * l1[i] * d[i - 1];
            }
            if i >= 2 {
                di -= l2[i] * l2[i] * d[i - 2];
            }
            d[i] = di;
        }
        let mut y = b.to_vec();
        for i in 0..m {
            if i >= 1 {
                y[i] -= l1[i] * y[i - 1];
            }
            if i >= 2 {
                y[i] -= l2[i] * y[i - 2];
            }
        }
        for i in 0..m {
            y[i] /= d[i];
        }
        for i in (0..m).rev() {
            if i + 1 < m {
                y[i] -= l1[i + 1] * y[i + 1];
            }
            if i + 2 < m {
                y[i] -= l2[i + 2] * y[i + 2];
            }
        }
        y
    }
}

fn second_difference(x: &[f64]) -> Vec<f64> {
    x.windows(3).map(|w| w[0] - 2.0 * w[1] + w[2]).collect()
}

fn second_difference_adjoint(z: &[f64]) -> Vec<f64> {
    let mut out = vec![0.0; z.len() + 2];
    for (k, &v) in z.iter().enumerate() {
        out[k] += v;
        out[k + 1] -= 2.0 * v;
        out[k + 2] += v;
    }
    out
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Removes a piecewise-linear trend: returns `y - x*` with
/// `x* = argmin ½‖y - x‖² + λ ‖D x‖₁`, `D` the second difference.
///
/// Primal-dual interior point on the dual
/// `min ½ zᵀ D Dᵀ z - yᵀ Dᵀ z` subject to `|z| ≤ λ`, for which `y - x* = Dᵀ z`.
pub fn detrend_l1(series: &[f64], lambda: f64) -> Result<Vec<f64>> {
    let n = series.len();
    if n < 3 {
        return Err(Error::InsufficientData { needed: 2, got: n });
    }
    if !(lambda.is_finite() && lambda > 0.0) {
        return Err(Error::InvalidConfig(format!("detrend lambda must be positive, got {lambda}")));
    }
    if series.iter().any(|v| !v.is_finite()) {
        return Err(Error::InvalidInput("series has non-finite values".into()));
    }
    const MU: f64 = 2.0;
    const ALPHA: f64 = 0.01;
    const BETA: f64 = 0.5;
    const MAX_LINE_SEARCH: usize = 30;

    let m = n - 2;
    let ddt = Penta::second_difference_gram(m);
    let dy = second_difference(series);
    let mut z = vec![0.0; m];
    let mut mu1 = vec![1.0; m];
    let mut mu2 = vec![1.0; m];
    let mut f1: Vec<f64> = z.iter().map(|v| v - lambda).collect();
    let mut f2: Vec<f64> = z.iter().map(|v| -v - lambda).collect();
    let mut t = 1e-10;
    let mut step = f64::INFINITY;
    let mut gap = f64::INFINITY;

    for _ in 0..TREND_MAX_ITER {
        let dtz = second_difference_adjoint(&z);
        let ddtz = ddt.mul(&z);
        let w: Vec<f64> = (0..m).map(|k| dy[k] - (mu1[k] - mu2[k])).collect();
        let pobj1 = 0.5 * dot(&w, &ddt.solve(None, &w)) + lambda * (mu1.iter().sum::<f64>() + mu2.iter().sum::<f64>());
        let pobj2 = 0.5 * dot(&dtz, &dtz) + lambda * dy.iter().zip(&ddtz).map(|(a, b)| (a - b).abs()).sum::<f64>();
        let pobj = pobj1.min(pobj2);
        let dobj = -0.5 * dot(&dtz, &dtz) + dot(&dy, &z);
        gap = pobj - dobj;
        if gap <= TREND_GAP_TOL * pobj.abs().max(1.0) {
            return Ok(dtz);
        }
        if step >= 0.2 {
            t = (2.0 * m as f64 * MU / gap).max(1.2 * t);
        }
        let inv_t = 1.0 / t;

        let extra: Vec<f64> = (0..m).map(|k| -(mu1[k] / f1[k] + mu2[k] / f2[k])).collect();
        let r: Vec<f64> = (0..m)
            .map(|k| -ddtz[k] + dy[k] + inv_t / f1[k] - inv_t / f2[k])
            .collect();
        let dz = ddt.solve(Some(&extra), &r);
        let dmu1: Vec<f64> = (0..m).map(|k| -(mu1[k] + (inv_t + dz[k] * mu1[k]) / f1[k])).collect();
        let dmu2: Vec<f64> = (0..m).map(|k| -(mu2[k] + (inv_t - dz[k] * mu2[k]) / f2[k])).collect();

        let residual_norm = |z: &[f64], mu1: &[f64], mu2: &[f64], f1: &[f64], f2: &[f64]| {
            let ddtz = ddt.mul(z);
            let mut acc = 0.0;
            for k in 0..m {
                let dual = ddtz[k] - dy[k] + mu1[k] - mu2[k];
                let c1 = -mu1[k] * f1[k] - inv_t;
                let c2 = -mu2[k] * f2[k] - inv_t;
                acc += dual * dual + c1 * c1 + c2 * c2;
            }
            acc.sqrt()
        };
        let current = residual_norm(&z, &mu1, &mu2, &f1, &f2);

        step = 1.0;
        for k in 0..m {
            if dmu1[k] < 0.0 {
                step = step.min(-0.99 * mu1[k] / dmu1[k]);
            }
            if dmu2[k] < 0.0 {
                step = step.min(-0.99 * mu2[k] / dmu2[k]);
            }
            if dz[k] > 0.0 {
                step = step.min(-0.99 * f1[k] / dz[k]);
            }
            if dz[k] < 0.0 {
                step = step.min(0.99 * f2[k] / dz[k]);
            }
        }
        let mut accepted = false;
        for _ in 0..MAX_LINE_SEARCH {
            let nz: Vec<f64> = (0..m).map(|k| z[k] + step * dz[k]).collect();
            let nmu1: Vec<f64> = (0..m).map(|k| mu1[k] + step * dmu1[k]).collect();
            let nmu2: Vec<f64> = (0..m).map(|k| mu2[k] + step * dmu2[k]).collect();
            let nf1: Vec<f64> = nz.iter().map(|v| v - lambda).collect();
            let nf2: Vec<f64> = nz.iter().map(|v| -v - lambda).collect();
            let feasible = nf1.iter().chain(&nf2).all(|&v| v < 0.0);
            if feasible && residual_norm(&nz, &nmu1, &nmu2, &nf1, &nf2) <= (1.0 - ALPHA * step) * current {
                z = nz;
                mu1 = nmu1;
                mu2 = nmu2;
                f1 = nf1;
                f2 = nf2;
                accepted = true;
                break;
            }
            step *= BETA;
        }
        if !accepted {
            break;
        }
    }
    Err(Error::TrendFilterNonConvergence {
        iterations: TREND_MAX_ITER,
        gap,
    })
}

/// ℓ1 detrending of every channel.
pub fn detrend_l1_set(data: &TimeSeriesSet, lambda: f64) -> Result<TimeSeriesSet> {
    let mut out = data.values().clone();
    for c in 0..data.channels() {
        let col = detrend_l1(&data.column(c), lambda).map_err(|e| e.context(format!("channel '{}'", data.labels()[c])))?;
        out.set_column(c, &nalgebra::DVector::from_vec(col));
    }
    data.with_values(out)
}

/// Zero mean and unit sample variance (denominator `N - 1`) per channel.
pub fn normalize(data: &TimeSeriesSet) -> Result<TimeSeriesSet> {
    let n = data.len();
    if n < 2 {
        return Err(Error::InsufficientData { needed: 1, got: n });
    }
    let mut out = data.values().clone();
    for (c, mut col) in out.column_iter_mut().enumerate() {
        let mean = col.sum() / n as f64;
        let var = col.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
        let sd = var.sqrt();
        if col.iter().all(|&v| v == col[0]) || sd.is_nan() || sd <= 0.0 {
            return Err(Error::ConstantSeries(data.labels()[c].clone()));
        }
        col.apply(|v| *v = (*v - mean) / sd);
    }
    data.with_values(out)
}

/// Linear interpolation onto `t_min, t_min + dt, …` up to `t_max`, giving
/// `⌊(t_max - t_min)/dt⌋ + 1` rows. The time axis comes from `data.time()`,
/// or from the row index times `data.dt()` (1 if unset). A strictly decreasing
/// axis is reversed first.
pub fn resample_uniform(data: &TimeSeriesSet, dt: f64) -> Result<TimeSeriesSet> {
    if !(dt.is_finite() && dt > 0.0) {
        return Err(Error::InvalidConfig(format!("resampling interval must be positive, got {dt}")));
    }
    let n = data.len();
    if n < 2 {
        return Err(Error::InsufficientData { needed: 1, got: n });
    }
    let step = data.dt().unwrap_or(1.0);
    let mut times: Vec<f64> = match data.time() {
        Some(t) => t.to_vec(),
        None => (0..n).map(|i| i as f64 * step).collect(),
    };
    let mut values = data.values().clone();
    let decreasing = times[1] < times[0];
    if decreasing {
        times.reverse();
        values = Matrix::from_fn(n, values.ncols(), |i, j| data.values()[(n - 1 - i, j)]);
    }
    for (k, w) in times.windows(2).enumerate() {
        if w[1].partial_cmp(&w[0]) != Some(std::cmp::Ordering::Greater) {
            let row = if decreasing { n - 1 - (k + 1) } else { k + 1 };
            return Err(Error::NonMonotoneTime { row });
        }
    }
    let (t0, t1) = (times[0], times[n - 1]);
    // tolerate representation error when the span is an exact multiple of dt
    let ratio = (t1 - t0) / dt;
    let len = (ratio + 1e-9 * ratio.max(1.0)).floor() as usize + 1;
    let grid: Vec<f64> = (0..len).map(|k| t0 + k as f64 * dt).collect();
    let mut out = Matrix::zeros(len, values.ncols());
    let mut seg = 0;
    for (r, &t) in grid.iter().enumerate() {
        while seg + 2 < n && times[seg + 1] <= t {
            seg += 1;
        }
        let (ta, tb) = (times[seg], times[seg + 1]);
        let w = ((t - ta) / (tb - ta)).clamp(0.0, 1.0);
        for c in 0..values.ncols() {
            out[(r, c)] = values[(seg, c)] + w * (values[(seg + 1, c)] - values[(seg, c)]);
        }
    }
    TimeSeriesSet::new(out, data.labels().to_vec())?
        .with_dt(dt)?
        .with_time(grid)
}
