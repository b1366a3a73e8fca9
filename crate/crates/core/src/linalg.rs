//! Small dense linear-algebra helpers shared by the model modules.

use nalgebra::{DMatrix, Schur};

pub type Matrix = DMatrix<f64>;

/// Largest eigenvalue modulus; infinite for non-finite input.
pub fn spectral_radius(a: &Matrix) -> f64 {
    if a.nrows() == 0 {
        return 0.0;
    }
    if a.iter().any(|v| !v.is_finite()) {
        return f64::INFINITY;
    }
    match Schur::try_new(a.clone(), f64::EPSILON, 1000 * a.nrows().max(10)) {
        Some(schur) => schur.complex_eigenvalues().iter().map(|z| z.norm()).fold(0.0, f64::max),
        None => gelfand_radius(a),
    }
}

/// `lim ‖A^k‖^{1/k}` along `k = 2^j`, with rescaling to avoid overflow.
fn gelfand_radius(a: &Matrix) -> f64 {
    let mut b = a.clone();
    let mut log_scale = 0.0;
    let mut estimate = f64::INFINITY;
    for j in 0..40 {
        let norm = b.norm();
        if norm == 0.0 {
            return 0.0;
        }
        b /= norm;
        log_scale += norm.ln() / 2f64.powi(j);
        estimate = log_scale.exp();
        b = &b * &b;
    }
    estimate
}

pub fn max_abs(a: &Matrix) -> f64 {
    a.iter().fold(0.0, |m, v| m.max(v.abs()))
}

pub fn max_abs_diff(a: &Matrix, b: &Matrix) -> f64 {
    a.iter()
        .zip(b.iter())
        .fold(0.0, |m, (x, y)| m.max((x - y).abs()))
}

pub fn symmetrize(a: &mut Matrix) {
    let n = a.nrows();
    for i in 0..n {
        for j in (i + 1)..n {
            let v = 0.5 * (a[(i, j)] + a[(j, i)]);
            a[(i, j)] = v;
            a[(j, i)] = v;
        }
    }
}

pub fn is_symmetric(a: &Matrix, tol: f64) -> bool {
    a.is_square() && max_abs_diff(a, &a.transpose()) <= tol
}

/// Smallest eigenvalue of a symmetric matrix; `-inf` for non-finite input.
pub fn min_sym_eigenvalue(a: &Matrix) -> f64 {
    if a.nrows() == 0 {
        return f64::INFINITY;
    }
    if a.iter().any(|v| !v.is_finite()) {
        return f64::NEG_INFINITY;
    }
    a.clone()
        .symmetric_eigenvalues()
        .iter()
        .copied()
        .fold(f64::INFINITY, f64::min)
}

/// `a^k` by repeated squaring.
pub fn mat_pow(a: &Matrix, mut k: usize) -> Matrix {
    let n = a.nrows();
    let mut result = Matrix::identity(n, n);
    let mut base = a.clone();
    while k > 0 {
        if k & 1 == 1 {
            result = &result * &base;
        }
        k >>= 1;
        if k > 0 {
            base = &base * &base;
        }
    }
    result
}

/// Solves `X = A X Aᵀ + Q` for stable `A` with the doubling (Smith) iteration.
pub fn lyapunov(a: &Matrix, q: &Matrix) -> Matrix {
    let mut x = q.clone();
    let mut ak = a.clone();
    for _ in 0..64 {
        let step = &ak * &x * ak.transpose();
        x += &step;
        ak = &ak * &ak;
        if max_abs(&step) <= f64::EPSILON * max_abs(&x).max(f64::MIN_POSITIVE) {
            break;
        }
    }
    symmetrize(&mut x);
    x
}

/// Inverse of a symmetric positive-definite matrix, `None` if Cholesky fails.
pub fn spd_inverse(a: &Matrix) -> Option<Matrix> {
    a.clone().cholesky().map(|c| c.inverse())
}

/// `ln det` of a symmetric positive-definite matrix.
pub fn spd_log_det(a: &Matrix) -> Option<f64> {
    let chol = a.clone().cholesky()?;
    let l = chol.l_dirty();
    Some((0..a.nrows()).map(|i| 2.0 * l[(i, i)].ln()).sum())
}

pub fn select(a: &Matrix, rows: &[usize], cols: &[usize]) -> Matrix {
    Matrix::from_fn(rows.len(), cols.len(), |i, j| a[(rows[i], cols[j])])
}

pub fn select_rows(a: &Matrix, rows: &[usize]) -> Matrix {
    Matrix::from_fn(rows.len(), a.ncols(), |i, j| a[(rows[i], j)])
}

pub fn select_cols(a: &Matrix, cols: &[usize]) -> Matrix {
    Matrix::from_fn(a.nrows(), cols.len(), |i, j| a[(i, cols[j])])
}
