//! Oracles shared by the integration tests. They only use the VAR
//! coefficients and plain dense algebra, never the state-space code.
#![allow(dead_code)]

use msgc::linalg::Matrix;
use msgc::var_model::VarModel;

/// Autocovariances `Γ_h = E[Y_{t+h} Y_tᵀ]`, `h = 0..=max_lag`, of a VAR from
/// its impulse responses, truncated at `terms` lags.
pub fn var_autocovariances(model: &VarModel, max_lag: usize, terms: usize) -> Vec<Matrix> {
    let m = model.dim();
    let p = model.order();
    let mut psi: Vec<Matrix> = vec![Matrix::identity(m, m)];
    for k in 1..terms + max_lag {
        let mut next = Matrix::zeros(m, m);
        for i in 1..=p.min(k) {
            next += model.coef(i) * &psi[k - i];
        }
        psi.push(next);
    }
    let sigma = model.sigma();
    (0..=max_lag)
        .map(|h| {
            let mut g = Matrix::zeros(m, m);
            for k in 0..terms {
                g += &psi[k + h] * sigma * psi[k].transpose();
            }
            g
        })
        .collect()
}

/// Autocovariances of `H Y`.
pub fn mixed_autocovariances(gammas: &[Matrix], h: &Matrix) -> Vec<Matrix> {
    gammas.iter().map(|g| h * g * h.transpose()).collect()
}

/// One-step prediction error variance of channel `target` (an index into
/// `channels`) when regressing on `lags` past values of `channels`, from
/// autocovariances (normal equations of the finite-order regression).
pub fn regression_error_variance(gammas: &[Matrix], channels: &[usize], target: usize, lags: usize) -> f64 {
    let k = channels.len();
    let g = |h: isize, a: usize, b: usize| -> f64 {
        // E[Y_{t+h, a} Y_{t, b}]
        if h >= 0 {
            gammas[h as usize][(channels[a], channels[b])]
        } else {
            gammas[(-h) as usize][(channels[b], channels[a])]
        }
    };
    let n = k * lags;
    // regressor r = (lag l, channel c) -> Y_{t-l, c}, l = 1..=lags
    let r = Matrix::from_fn(n, n, |i, j| {
        let (li, ci) = (i / k + 1, i % k);
        let (lj, cj) = (j / k + 1, j % k);
        g(lj as isize - li as isize, ci, cj)
    });
    let gamma = Matrix::from_fn(n, 1, |i, _| {
        let (l, c) = (i / k + 1, i % k);
        g(l as isize, target, c)
    });
    let coef = r.cholesky().expect("regressor covariance is positive definite").solve(&gamma);
    g(0, target, target) - (gamma.transpose() * coef)[(0, 0)]
}

/// GC `F_{source -> target}` from the two regressions.
pub fn regression_gc(gammas: &[Matrix], m: usize, source: usize, target: usize, lags: usize) -> f64 {
    let all: Vec<usize> = (0..m).collect();
    let reduced: Vec<usize> = (0..m).filter(|&c| c != source).collect();
    let t_red = reduced.iter().position(|&c| c == target).unwrap();
    let full = regression_error_variance(gammas, &all, target, lags);
    let restricted = regression_error_variance(gammas, &reduced, t_red, lags);
    (restricted / full).ln()
}

pub fn argmax(values: &[f64]) -> usize {
    values
        .iter()
        .enumerate()
        .fold((0, f64::NEG_INFINITY), |acc, (i, &v)| if v > acc.1 { (i, v) } else { acc })
        .0
}

/// Indices of strict interior local maxima.
pub fn local_maxima(values: &[f64]) -> Vec<usize> {
    (1..values.len().saturating_sub(1))
        .filter(|&i| values[i] > values[i - 1] && values[i] > values[i + 1])
        .collect()
}

/// Autocovariances of `Σ_l b_l Y_{n-l}` from those of `Y`; `gammas` must
/// reach lag `max_lag + b.len() - 1`.
pub fn filtered_autocovariances(gammas: &[Matrix], b: &[f64], max_lag: usize) -> Vec<Matrix> {
    let g = |h: isize| -> Matrix {
        if h >= 0 {
            gammas[h as usize].clone()
        } else {
            gammas[(-h) as usize].transpose()
        }
    };
    (0..=max_lag)
        .map(|h| {
            let mut acc = Matrix::zeros(gammas[0].nrows(), gammas[0].ncols());
            for (l, bl) in b.iter().enumerate() {
                for (k, bk) in b.iter().enumerate() {
                    // E[Ỹ_{n+h} Ỹ_nᵀ] = Σ b_l b_k Γ(h - l + k)
                    acc += g(h as isize - l as isize + k as isize) * (bl * bk);
                }
            }
            acc
        })
        .collect()
}

/// Sample autocovariance `(1/N) Σ (y_{t+h} - ȳ)(y_t - ȳ)ᵀ`.
pub fn sample_autocovariance(values: &Matrix, h: usize) -> Matrix {
    let (n, m) = (values.nrows(), values.ncols());
    let mean = Matrix::from_fn(1, m, |_, j| values.column(j).mean());
    let mut acc = Matrix::zeros(m, m);
    for t in 0..n - h {
        let a = values.row(t + h) - &mean;
        let b = values.row(t) - &mean;
        acc += a.transpose() * b;
    }
    acc / n as f64
}
