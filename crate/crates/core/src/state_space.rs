//! State-space (SS) and innovations-form state-space (ISS) models.
//!
//! SS: `X_{n+1} = A X_n + W_n`, `Y_n = C X_n + V_n` with
//! `E[W Wᵀ] = Ξ`, `E[V Vᵀ] = Ψ`, `E[W Vᵀ] = Θ`.
//!
//! ISS: `Z_{n+1} = A Z_n + K E_n`, `Y_n = C Z_n + E_n` with `E[E Eᵀ] = Φ`.
//!
//! The DARE maps the former to the latter; the innovation covariance of any
//! channel subset follows from a submodel of the ISS and a second DARE.

use nalgebra::Cholesky;

use crate::error::{Error, Result};
use crate::linalg::{self, Matrix};
use crate::rescale::FirFilter;
use crate::var_model::VarModel;

const SYMMETRY_TOL: f64 = 1e-10;
const PSD_TOL: f64 = -1e-8;
/// Smallest admissible eigenvalue of `C P Cᵀ + Ψ` during the DARE iteration.
pub const SINGULAR_INNOVATION_TOL: f64 = 1e-12;

fn check_dims(what: &str, m: &Matrix, rows: usize, cols: usize) -> Result<()> {
    if m.nrows() != rows || m.ncols() != cols {
        return Err(Error::InvalidModel(format!(
            "{what} is {}x{}, expected {rows}x{cols}",
            m.nrows(),
            m.ncols()
        )));
    }
    if m.iter().any(|v| !v.is_finite()) {
        return Err(Error::InvalidModel(format!("{what} has non-finite entries")));
    }
    Ok(())
}

fn check_stable_state(a: &Matrix) -> Result<()> {
    let radius = linalg::spectral_radius(a);
    if radius < 1.0 {
        Ok(())
    } else {
        Err(Error::Unstable { radius })
    }
}

fn symmetric_within(m: &Matrix) -> bool {
    linalg::is_symmetric(m, SYMMETRY_TOL * linalg::max_abs(m).max(1.0))
}

#[derive(Debug, Clone, PartialEq)]
pub struct SsModel {
    a: Matrix,
    c: Matrix,
    xi: Matrix,
    psi: Matrix,
    theta: Matrix,
}

impl SsModel {
    pub fn new(a: Matrix, c: Matrix, xi: Matrix, psi: Matrix, theta: Matrix) -> Result<Self> {
        let m = a.nrows();
        let obs = c.nrows();
        if m == 0 || obs == 0 {
            return Err(Error::InvalidModel("empty state or observation".into()));
        }
        check_dims("A", &a, m, m)?;
        check_dims("C", &c, obs, m)?;
        check_dims("Xi", &xi, m, m)?;
        check_dims("Psi", &psi, obs, obs)?;
        check_dims("Theta", &theta, m, obs)?;
        if !symmetric_within(&xi) || !symmetric_within(&psi) {
            return Err(Error::InvalidModel("noise covariances must be symmetric".into()));
        }
        let mut joint = Matrix::zeros(m + obs, m + obs);
        joint.view_mut((0, 0), (m, m)).copy_from(&xi);
        joint.view_mut((0, m), (m, obs)).copy_from(&theta);
        joint.view_mut((m, 0), (obs, m)).copy_from(&theta.transpose());
        joint.view_mut((m, m), (obs, obs)).copy_from(&psi);
        linalg::symmetrize(&mut joint);
        let min_eig = linalg::min_sym_eigenvalue(&joint);
        if min_eig < PSD_TOL * linalg::max_abs(&joint).max(1.0) {
            return Err(Error::InvalidModel(format!(
                "joint noise covariance is not positive semidefinite (min eigenvalue {min_eig:.3e})"
            )));
        }
        check_stable_state(&a)?;
        Ok(Self { a, c, xi, psi, theta })
    }

    pub fn a(&self) -> &Matrix {
        &self.a
    }
    pub fn c(&self) -> &Matrix {
        &self.c
    }
    pub fn xi(&self) -> &Matrix {
        &self.xi
    }
    pub fn psi(&self) -> &Matrix {
        &self.psi
    }
    pub fn theta(&self) -> &Matrix {
        &self.theta
    }

    pub fn state_dim(&self) -> usize {
        self.a.nrows()
    }

    pub fn obs_dim(&self) -> usize {
        self.c.nrows()
    }

    /// Stationary state covariance `Π = A Π Aᵀ + Ξ`.
    pub fn state_covariance(&self) -> Matrix {
        linalg::lyapunov(&self.a, &self.xi)
    }

    /// Autocovariances `Γ_k = E[Y_{n+k} Y_nᵀ]` for `k = 0..=max_lag`.
    pub fn autocovariances(&self, max_lag: usize) -> Vec<Matrix> {
        let pi = self.state_covariance();
        let mut out = Vec::with_capacity(max_lag + 1);
        let mut g0 = &self.c * &pi * self.c.transpose() + &self.psi;
        linalg::symmetrize(&mut g0);
        out.push(g0);
        let mut carry = &self.a * &pi * self.c.transpose() + &self.theta;
        for _ in 1..=max_lag {
            out.push(&self.c * &carry);
            carry = &self.a * carry;
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct IssModel {
    a: Matrix,
    c: Matrix,
    k: Matrix,
    phi: Matrix,
}

impl IssModel {
    pub fn new(a: Matrix, c: Matrix, k: Matrix, phi: Matrix) -> Result<Self> {
        let m = a.nrows();
        let obs = c.nrows();
        if m == 0 || obs == 0 {
            return Err(Error::InvalidModel("empty state or observation".into()));
        }
        check_dims("A", &a, m, m)?;
        check_dims("C", &c, obs, m)?;
        check_dims("K", &k, m, obs)?;
        check_dims("Phi", &phi, obs, obs)?;
        if !symmetric_within(&phi) {
            return Err(Error::InvalidModel("innovation covariance must be symmetric".into()));
        }
        let min_eig = linalg::min_sym_eigenvalue(&phi);
        if min_eig.is_nan() || min_eig <= 0.0 {
            return Err(Error::InvalidModel(format!(
                "innovation covariance is not positive definite (min eigenvalue {min_eig:.3e})"
            )));
        }
        check_stable_state(&a)?;
        Ok(Self { a, c, k, phi })
    }

    pub fn a(&self) -> &Matrix {
        &self.a
    }
    pub fn c(&self) -> &Matrix {
        &self.c
    }
    pub fn k(&self) -> &Matrix {
        &self.k
    }
    pub fn phi(&self) -> &Matrix {
        &self.phi
    }

    pub fn state_dim(&self) -> usize {
        self.a.nrows()
    }

    pub fn obs_dim(&self) -> usize {
        self.c.nrows()
    }

    /// The same process written as a general SS model `(A, C, KΦKᵀ, Φ, KΦ)`.
    pub fn to_ss(&self) -> SsModel {
        let kphi = &self.k * &self.phi;
        let mut xi = &kphi * self.k.transpose();
        linalg::symmetrize(&mut xi);
        SsModel {
            a: self.a.clone(),
            c: self.c.clone(),
            xi,
            psi: self.phi.clone(),
            theta: kphi,
        }
    }

    pub fn autocovariances(&self, max_lag: usize) -> Vec<Matrix> {
        self.to_ss().autocovariances(max_lag)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DareMethod {
    /// Riccati difference iteration `P ← RHS(P)` from `P_0 = Ξ`.
    FixedPoint,
    /// Structured doubling on the cross-term-free form. Needs `Ψ ≻ 0`.
    Doubling,
    /// Doubling when applicable, falling back to the fixed-point iteration.
    Auto,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DareOptions {
    /// Relative tolerance: the iteration stops once the largest entry of the
    /// update is below `tol * max(1, max|P|)`.
    pub tol: f64,
    pub max_iter: usize,
    pub method: DareMethod,
}

impl Default for DareOptions {
    fn default() -> Self {
        Self {
            tol: 1e-12,
            max_iter: 10_000,
            method: DareMethod::Auto,
        }
    }
}

impl DareOptions {
    pub fn fixed_point() -> Self {
        Self {
            method: DareMethod::FixedPoint,
            ..Self::default()
        }
    }

    pub fn doubling() -> Self {
        Self {
            method: DareMethod::Doubling,
            ..Self::default()
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DareSolution {
    pub p: Matrix,
    pub k: Matrix,
    pub phi: Matrix,
    pub iterations: usize,
    /// `max |RHS(P) - P|` at the returned `P`.
    pub residual: f64,
}

fn innovation_cov(model: &SsModel, p: &Matrix) -> Result<(Matrix, Cholesky<f64, nalgebra::Dyn>)> {
    let mut s = &model.c * p * model.c.transpose() + &model.psi;
    linalg::symmetrize(&mut s);
    let min_eigenvalue = linalg::min_sym_eigenvalue(&s);
    if min_eigenvalue < SINGULAR_INNOVATION_TOL {
        return Err(Error::SingularInnovation { min_eigenvalue });
    }
    let chol = s
        .clone()
        .cholesky()
        .ok_or(Error::SingularInnovation { min_eigenvalue })?;
    Ok((s, chol))
}

/// Right-hand side of the DARE at `p`.
fn riccati_rhs(model: &SsModel, p: &Matrix) -> Result<Matrix> {
    let (_, chol) = innovation_cov(model, p)?;
    let g = &model.a * p * model.c.transpose() + &model.theta;
    let sinv_gt = chol.solve(&g.transpose());
    let mut next = &model.a * p * model.a.transpose() + &model.xi - &g * sinv_gt;
    linalg::symmetrize(&mut next);
    Ok(next)
}

/// `max |RHS(P) - P|`.
pub fn dare_residual(model: &SsModel, p: &Matrix) -> Result<f64> {
    Ok(linalg::max_abs_diff(&riccati_rhs(model, p)?, p))
}

fn converged(update: f64, p: &Matrix, tol: f64) -> bool {
    update <= tol * linalg::max_abs(p).max(1.0)
}

fn finish(model: &SsModel, p: Matrix, iterations: usize) -> Result<DareSolution> {
    let (phi, chol) = innovation_cov(model, &p)?;
    let g = &model.a * &p * model.c.transpose() + &model.theta;
    let k = chol.solve(&g.transpose()).transpose();
    let closed_loop = &model.a - &k * &model.c;
    let radius = linalg::spectral_radius(&closed_loop);
    if radius >= 1.0 {
        return Err(Error::NotStabilizing { radius });
    }
    let residual = dare_residual(model, &p)?;
    Ok(DareSolution {
        p,
        k,
        phi,
        iterations,
        residual,
    })
}

fn solve_fixed_point(model: &SsModel, opts: &DareOptions) -> Result<DareSolution> {
    let mut p = model.xi.clone();
    let mut update = f64::INFINITY;
    for it in 1..=opts.max_iter {
        let next = riccati_rhs(model, &p)?;
        update = linalg::max_abs_diff(&next, &p);
        p = next;
        if converged(update, &p, opts.tol) {
            return finish(model, p, it);
        }
    }
    Err(Error::DareNonConvergence {
        iterations: opts.max_iter,
        residual: update,
    })
}

fn solve_doubling(model: &SsModel, opts: &DareOptions) -> Result<DareSolution> {
    let n = model.state_dim();
    let min_eigenvalue = linalg::min_sym_eigenvalue(&model.psi);
    let r_chol = model
        .psi
        .clone()
        .cholesky()
        .filter(|_| min_eigenvalue >= SINGULAR_INNOVATION_TOL)
        .ok_or(Error::SingularInnovation { min_eigenvalue })?;
    // Remove the cross term: A_s = A - Θ Ψ⁻¹ C, Q = Ξ - Θ Ψ⁻¹ Θᵀ.
    let rinv_c = r_chol.solve(&model.c);
    let rinv_tt = r_chol.solve(&model.theta.transpose());
    let a_s = &model.a - &model.theta * &rinv_c;
    let mut q = &model.xi - &model.theta * &rinv_tt;
    linalg::symmetrize(&mut q);
    let mut g = model.c.transpose() * &rinv_c;
    linalg::symmetrize(&mut g);

    let eye = Matrix::identity(n, n);
    let mut ak = a_s.transpose();
    let mut gk = g;
    let mut hk = q;
    for it in 1..=opts.max_iter.min(200) {
        let w = &eye + &gk * &hk;
        let lu = w.lu();
        let winv_a = lu
            .solve(&ak)
            .ok_or_else(|| Error::InvalidModel("singular doubling iterate".into()))?;
        let winv_g = lu
            .solve(&gk)
            .ok_or_else(|| Error::InvalidModel("singular doubling iterate".into()))?;
        let a_next = &ak * &winv_a;
        let mut g_next = &gk + &ak * winv_g * ak.transpose();
        let mut h_next = &hk + ak.transpose() * &hk * &winv_a;
        linalg::symmetrize(&mut g_next);
        linalg::symmetrize(&mut h_next);
        let update = linalg::max_abs_diff(&h_next, &hk);
        ak = a_next;
        gk = g_next;
        hk = h_next;
        if converged(update, &hk, opts.tol) || linalg::max_abs(&ak) == 0.0 {
            return finish(model, hk, it);
        }
    }
    Err(Error::DareNonConvergence {
        iterations: opts.max_iter.min(200),
        residual: f64::NAN,
    })
}

/// Solves the DARE
/// `P = A P Aᵀ + Ξ - (A P Cᵀ + Θ)(C P Cᵀ + Ψ)⁻¹(C P Aᵀ + Θᵀ)`
/// for its stabilizing solution and returns `Φ = C P Cᵀ + Ψ`,
/// `K = (A P Cᵀ + Θ) Φ⁻¹`.
pub fn solve_dare(model: &SsModel, opts: &DareOptions) -> Result<DareSolution> {
    if opts.tol.is_nan() || opts.tol <= 0.0 || opts.max_iter == 0 {
        return Err(Error::InvalidConfig("DARE tolerance and iteration cap must be positive".into()));
    }
    match opts.method {
        DareMethod::FixedPoint => solve_fixed_point(model, opts),
        DareMethod::Doubling => solve_doubling(model, opts),
        DareMethod::Auto => solve_doubling(model, opts).or_else(|e| {
            log::debug!("doubling DARE failed ({e}); using fixed-point iteration");
            solve_fixed_point(model, opts)
        }),
    }
}

/// ISS form of a VAR whose output has been passed through `filter`.
///
/// State `[Ỹ_{n-1} … Ỹ_{n-p}, U_{n-1} … U_{n-q}]`, so the state dimension is
/// `M (p + q)`. Requires a nonzero leading tap.
pub fn var_filter_to_iss(model: &VarModel, filter: &FirFilter) -> Result<IssModel> {
    let b = filter.coefficients();
    let b0 = b[0];
    if b0 == 0.0 {
        return Err(Error::InvalidFilter(
            "leading coefficient b_0 is zero; trim the pure delay first".into(),
        ));
    }
    let (m, p, q) = (model.dim(), model.order(), filter.order());
    let dim = m * (p + q);
    let mut c = Matrix::zeros(m, dim);
    for (k, a) in model.coefs().iter().enumerate() {
        c.view_mut((0, k * m), (m, m)).copy_from(a);
    }
    for (l, bl) in b.iter().enumerate().skip(1) {
        c.view_mut((0, (p + l - 1) * m), (m, m))
            .fill_diagonal(*bl);
    }
    let mut a = Matrix::zeros(dim, dim);
    a.view_mut((0, 0), (m, dim)).copy_from(&c);
    // shift of the output lags
    for i in m..m * p {
        a[(i, i - m)] = 1.0;
    }
    // shift of the input lags; the first input block is fed by K
    for i in m * (p + 1)..dim {
        a[(i, i - m)] = 1.0;
    }
    let mut k = Matrix::zeros(dim, m);
    k.view_mut((0, 0), (m, m)).fill_diagonal(1.0);
    if q > 0 {
        k.view_mut((m * p, 0), (m, m)).fill_diagonal(1.0 / b0);
    }
    let mut phi = model.sigma() * (b0 * b0);
    linalg::symmetrize(&mut phi);
    IssModel::new(a, c, k, phi)
}

/// SS model of the subsampled process `Y_{nτ}`: `(A^τ, C, Ξ_τ, Ψ, A^{τ-1} Θ)`
/// with `Ξ_1 = Ξ` and `Ξ_τ = A Ξ_{τ-1} Aᵀ + Ξ`.
pub fn downsample_ss(model: &SsModel, tau: usize) -> Result<SsModel> {
    if tau == 0 {
        return Err(Error::InvalidInput("scale factor must be at least 1".into()));
    }
    let mut xi = model.xi.clone();
    for _ in 2..=tau {
        xi = &model.a * xi * model.a.transpose() + &model.xi;
    }
    linalg::symmetrize(&mut xi);
    let theta = linalg::mat_pow(&model.a, tau - 1) * &model.theta;
    let a = linalg::mat_pow(&model.a, tau);
    SsModel::new(a, model.c.clone(), xi, model.psi.clone(), theta)
}

/// ISS model of the subsampled process `Y_{nτ}`.
pub fn downsample_iss(model: &IssModel, tau: usize, opts: &DareOptions) -> Result<IssModel> {
    let ss = downsample_ss(&model.to_ss(), tau)?;
    let sol = solve_dare(&ss, opts)?;
    IssModel::new(ss.a, ss.c, sol.k, sol.phi)
}

/// Converts any SS model to its ISS form via the DARE.
pub fn ss_to_iss(model: &SsModel, opts: &DareOptions) -> Result<IssModel> {
    let sol = solve_dare(model, opts)?;
    IssModel::new(model.a.clone(), model.c.clone(), sol.k, sol.phi)
}

/// SS model observing only the channels in `keep` (0-based, strictly
/// increasing): `(A, C(keep,:), KΦKᵀ, Φ(keep,keep), KΦ(:,keep))`.
pub fn iss_submodel(model: &IssModel, keep: &[usize]) -> Result<SsModel> {
    if keep.is_empty() {
        return Err(Error::InvalidInput("submodel needs at least one channel".into()));
    }
    if keep.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::InvalidInput(format!(
            "submodel channels {keep:?} must be strictly increasing"
        )));
    }
    if keep[keep.len() - 1] >= model.obs_dim() {
        return Err(Error::InvalidInput(format!(
            "submodel channel {} out of range for {} channels",
            keep[keep.len() - 1],
            model.obs_dim()
        )));
    }
    let kphi = &model.k * &model.phi;
    let mut xi = &kphi * model.k.transpose();
    linalg::symmetrize(&mut xi);
    SsModel::new(
        model.a.clone(),
        linalg::select_rows(&model.c, keep),
        xi,
        linalg::select(&model.phi, keep, keep),
        linalg::select_cols(&kphi, keep),
    )
}

/// SS model of `H Y` for an ISS process `Y` and a fixed observation matrix `H`:
/// `(A, H C, KΦKᵀ, H Φ Hᵀ, K Φ Hᵀ)`.
pub fn observe(model: &IssModel, mixing: &Matrix) -> Result<SsModel> {
    if mixing.ncols() != model.obs_dim() {
        return Err(Error::InvalidModel(format!(
            "mixing matrix has {} columns for {} channels",
            mixing.ncols(),
            model.obs_dim()
        )));
    }
    let kphi = &model.k * &model.phi;
    let mut xi = &kphi * model.k.transpose();
    linalg::symmetrize(&mut xi);
    let mut psi = mixing * &model.phi * mixing.transpose();
    linalg::symmetrize(&mut psi);
    SsModel::new(
        model.a.clone(),
        mixing * &model.c,
        xi,
        psi,
        kphi * mixing.transpose(),
    )
}
