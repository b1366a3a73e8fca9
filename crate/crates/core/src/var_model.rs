//! Stationary vector autoregressions: representation, benchmark generators,
//! simulation, least-squares identification and BIC order selection.

use std::fmt;
use std::str::FromStr;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};
use crate::linalg::{self, Matrix};
use crate::series::TimeSeriesSet;

/// Discarded warm-up samples used when a caller does not choose a burn-in.
pub const DEFAULT_BURN_IN: usize = 1000;

/// Models with a companion spectral radius at or above `1 - STABILITY_MARGIN`
/// are treated as unstable.
pub const STABILITY_MARGIN: f64 = 1e-10;

/// `Y_n = Σ_k A_k Y_{n-k} + U_n` with `U_n ~ N(0, Σ)`.
#[derive(Debug, Clone, PartialEq)]
pub struct VarModel {
    coefs: Vec<Matrix>,
    sigma: Matrix,
}

impl VarModel {
    pub fn new(coefs: Vec<Matrix>, sigma: Matrix) -> Result<Self> {
        let m = sigma.nrows();
        if m == 0 || !sigma.is_square() {
            return Err(Error::InvalidModel("innovation covariance must be square and non-empty".into()));
        }
        if coefs.is_empty() {
            return Err(Error::InvalidModel("model order must be at least 1".into()));
        }
        if coefs.iter().any(|a| a.nrows() != m || a.ncols() != m) {
            return Err(Error::InvalidModel(format!("every coefficient matrix must be {m}x{m}")));
        }
        if coefs.iter().any(|a| a.iter().any(|v| !v.is_finite())) {
            return Err(Error::InvalidModel("non-finite coefficient".into()));
        }
        if !linalg::is_symmetric(&sigma, 1e-12) {
            return Err(Error::InvalidModel("innovation covariance is not symmetric".into()));
        }
        let min_eig = linalg::min_sym_eigenvalue(&sigma);
        if min_eig.is_nan() || min_eig <= 0.0 {
            return Err(Error::InvalidModel(format!(
                "innovation covariance is not positive definite (min eigenvalue {min_eig:.3e})"
            )));
        }
        Ok(Self { coefs, sigma })
    }

    /// Channel count M.
    pub fn dim(&self) -> usize {
        self.sigma.nrows()
    }

    /// Model order p.
    pub fn order(&self) -> usize {
        self.coefs.len()
    }

    /// `A_k` for `k = 1..=p`.
    pub fn coef(&self, k: usize) -> &Matrix {
        &self.coefs[k - 1]
    }

    pub fn coefs(&self) -> &[Matrix] {
        &self.coefs
    }

    pub fn sigma(&self) -> &Matrix {
        &self.sigma
    }

    /// The Mp×Mp companion matrix.
    pub fn companion(&self) -> Matrix {
        let (m, p) = (self.dim(), self.order());
        let mut c = Matrix::zeros(m * p, m * p);
        for (k, a) in self.coefs.iter().enumerate() {
            c.view_mut((0, k * m), (m, m)).copy_from(a);
        }
        for i in m..m * p {
            c[(i, i - m)] = 1.0;
        }
        c
    }

    pub fn spectral_radius(&self) -> f64 {
        linalg::spectral_radius(&self.companion())
    }

    pub fn is_stable(&self) -> bool {
        self.spectral_radius() < 1.0 - STABILITY_MARGIN
    }

    pub(crate) fn ensure_stable(&self) -> Result<()> {
        let radius = self.spectral_radius();
        if radius < 1.0 - STABILITY_MARGIN {
            Ok(())
        } else {
            Err(Error::Unstable { radius })
        }
    }
}

/// Companion-matrix spectral radius; the model is stable iff this is below
/// `1 - STABILITY_MARGIN`.
pub fn check_stability(model: &VarModel) -> f64 {
    model.spectral_radius()
}

/// Draws `n_samples` rows from the model after discarding `burn_in` rows.
/// The recursion starts from zero history. Output is a deterministic
/// function of `seed`.
pub fn simulate_var(model: &VarModel, n_samples: usize, burn_in: usize, seed: u64) -> Result<TimeSeriesSet> {
    if n_samples == 0 {
        return Err(Error::InvalidInput("n_samples must be positive".into()));
    }
    model.ensure_stable()?;
    let (m, p) = (model.dim(), model.order());
    let chol = model
        .sigma
        .clone()
        .cholesky()
        .ok_or_else(|| Error::InvalidModel("innovation covariance has no Cholesky factor".into()))?;
    let l = chol.l();

    let total = burn_in + n_samples;
    // Row-major history buffer with p leading zero rows.
    let mut buf = vec![0.0; (total + p) * m];
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut z = vec![0.0; m];
    for n in 0..total {
        let row = n + p;
        for zi in z.iter_mut() {
            *zi = StandardNormal.sample(&mut rng);
        }
        for i in 0..m {
            let mut acc = 0.0;
            for (c, &zc) in z.iter().enumerate().take(i + 1) {
                acc += l[(i, c)] * zc;
            }
            for (k, a) in model.coefs.iter().enumerate() {
                let lagged = (row - k - 1) * m;
                for c in 0..m {
                    acc += a[(i, c)] * buf[lagged + c];
                }
            }
            buf[row * m + i] = acc;
        }
    }
    let start = (burn_in + p) * m;
    let values = Matrix::from_row_slice(n_samples, m, &buf[start..]);
    TimeSeriesSet::from_matrix(values)
}

/// The benchmark families.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Generator {
    /// Bivariate, y1 drives y2 at lag 2.
    Uni,
    /// Bivariate, y2 drives y1 at lag 2 and y1 drives y2 at lag 7.
    Bi,
    /// Two latent oscillator pairs instantaneously mixed into two observations.
    Mix,
}

impl FromStr for Generator {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "uni" => Ok(Generator::Uni),
            "bi" => Ok(Generator::Bi),
            "mix" => Ok(Generator::Mix),
            other => Err(Error::UnknownGenerator(other.to_string())),
        }
    }
}

impl fmt::Display for Generator {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Generator::Uni => "uni",
            Generator::Bi => "bi",
            Generator::Mix => "mix",
        })
    }
}

/// Strength `c` applied at lag `d`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Coupling {
    pub strength: f64,
    pub lag: usize,
}

impl Coupling {
    pub const fn new(strength: f64, lag: usize) -> Self {
        Self { strength, lag }
    }
}

/// Phase of the faster latent oscillator, chosen so that `2ρ cos φ` equals
/// the published regression coefficient 1.6929 at `ρ = 0.95` (φ ≈ 0.4709).
pub fn mix_fast_phase() -> f64 {
    (1.6929_f64 / 1.9).acos()
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimulationConfig {
    pub generator: Generator,
    /// `couplings[i][j]` is the effect of channel `j` on channel `i`
    /// (bivariate generators only).
    pub couplings: [[Coupling; 2]; 2],
    /// Pole moduli of the slow (x1) and fast (z1) latent oscillators.
    pub pole_moduli: [f64; 2],
    /// Pole phases in radians, same order as `pole_moduli`.
    pub pole_phases: [f64; 2],
    /// Innovation variances of (u1, u2, w1, w2).
    pub innovation_variances: [f64; 4],
    pub n_samples: usize,
    pub burn_in: usize,
    pub seed: u64,
}

impl SimulationConfig {
    pub fn new(generator: Generator) -> Self {
        let couplings = match generator {
            Generator::Uni => [
                [Coupling::new(0.5, 1), Coupling::new(0.0, 1)],
                [Coupling::new(0.5, 2), Coupling::new(0.0, 1)],
            ],
            // The published autonomous strength 0.5 makes this system explosive
            // (det(I - A(1)) < 0); 0.25 keeps it stationary.
            Generator::Bi => [
                [Coupling::new(0.25, 1), Coupling::new(0.75, 2)],
                [Coupling::new(0.5, 7), Coupling::new(0.25, 1)],
            ],
            Generator::Mix => [[Coupling::new(0.0, 1); 2]; 2],
        };
        Self {
            generator,
            couplings,
            pole_moduli: [0.95, 0.95],
            pole_phases: [0.0, mix_fast_phase()],
            innovation_variances: [0.25, 0.5, 1.0, 0.5],
            n_samples: 500,
            burn_in: DEFAULT_BURN_IN,
            seed: 0,
        }
    }

    pub fn unidirectional() -> Self {
        Self::new(Generator::Uni)
    }

    pub fn bidirectional() -> Self {
        Self::new(Generator::Bi)
    }

    pub fn mixed() -> Self {
        let mut cfg = Self::new(Generator::Mix);
        cfg.n_samples = 1000;
        cfg
    }

    pub fn validate(&self) -> Result<()> {
        for row in &self.couplings {
            for c in row {
                if c.lag == 0 {
                    return Err(Error::InvalidConfig("coupling lags must be positive".into()));
                }
                if !c.strength.is_finite() {
                    return Err(Error::InvalidConfig("coupling strengths must be finite".into()));
                }
            }
        }
        if self.pole_moduli.iter().any(|r| !(*r > 0.0 && *r < 1.0)) {
            return Err(Error::InvalidConfig("pole moduli must lie in (0, 1)".into()));
        }
        if self.pole_phases.iter().any(|p| !p.is_finite()) {
            return Err(Error::InvalidConfig("pole phases must be finite".into()));
        }
        if self.innovation_variances.iter().any(|v| !(*v > 0.0 && v.is_finite())) {
            return Err(Error::InvalidConfig("innovation variances must be positive".into()));
        }
        Ok(())
    }

    /// Observation matrix mapping the simulated VAR state to the observed
    /// channels: the 2×4 instantaneous mixing for `Mix`, `None` otherwise.
    pub fn mixing(&self) -> Option<Matrix> {
        match self.generator {
            Generator::Mix => Some(Matrix::from_row_slice(
                2,
                4,
                &[1.0, 0.0, 0.0, 1.0, 0.0, 1.0, 1.0, 0.0],
            )),
            _ => None,
        }
    }
}

/// Builds the generating VAR of a benchmark. For `Mix` this is the
/// 4-dimensional latent model over (x1, x2, z1, z2); the observed pair is
/// obtained by applying [`SimulationConfig::mixing`].
pub fn build_benchmark(config: &SimulationConfig) -> Result<VarModel> {
    config.validate()?;
    match config.generator {
        Generator::Uni | Generator::Bi => {
            let p = config
                .couplings
                .iter()
                .flatten()
                .filter(|c| c.strength != 0.0)
                .map(|c| c.lag)
                .max()
                .unwrap_or(1);
            let mut coefs = vec![Matrix::zeros(2, 2); p];
            for (i, row) in config.couplings.iter().enumerate() {
                for (j, c) in row.iter().enumerate() {
                    if c.strength != 0.0 {
                        coefs[c.lag - 1][(i, j)] += c.strength;
                    }
                }
            }
            VarModel::new(coefs, Matrix::identity(2, 2))
        }
        Generator::Mix => {
            let [rho_x, rho_z] = config.pole_moduli;
            let [phi_x, phi_z] = config.pole_phases;
            let mut a1 = Matrix::zeros(4, 4);
            let mut a2 = Matrix::zeros(4, 4);
            a1[(0, 0)] = 2.0 * rho_x * phi_x.cos();
            a2[(0, 0)] = -rho_x * rho_x;
            a1[(1, 0)] = 0.5;
            a1[(2, 2)] = 2.0 * rho_z * phi_z.cos();
            a2[(2, 2)] = -rho_z * rho_z;
            a1[(3, 2)] = 1.0;
            let sigma = Matrix::from_diagonal(&nalgebra::DVector::from_row_slice(&config.innovation_variances));
            VarModel::new(vec![a1, a2], sigma)
        }
    }
}

/// Simulates the observed channels of a benchmark (mixed for `Mix`).
pub fn simulate_benchmark(config: &SimulationConfig) -> Result<TimeSeriesSet> {
    let model = build_benchmark(config)?;
    let latent = simulate_var(&model, config.n_samples, config.burn_in, config.seed)?;
    match config.mixing() {
        Some(h) => TimeSeriesSet::from_matrix(latent.values() * h.transpose()),
        None => Ok(latent),
    }
}

struct OlsFit {
    coefs: Vec<Matrix>,
    residual_sscp: Matrix,
    n_eff: usize,
}

fn demeaned(data: &TimeSeriesSet) -> Matrix {
    let mut y = data.values().clone();
    let n = y.nrows() as f64;
    for mut col in y.column_iter_mut() {
        let mean = col.sum() / n;
        col.add_scalar_mut(-mean);
    }
    y
}

/// Least-squares regression of rows `start..N` on their `p` predecessors.
fn ols(y: &Matrix, labels: &[String], p: usize, start: usize) -> Result<OlsFit> {
    let (n, m) = y.shape();
    let n_eff = n - start;
    let k = m * p;
    let x = Matrix::from_fn(n_eff, k, |r, c| y[(start + r - c / m - 1, c % m)]);
    let t = y.rows(start, n_eff).into_owned();

    let constant: Vec<String> = (0..m)
        .filter(|&j| {
            let col = y.column(j);
            let first = col[0];
            col.iter().all(|v| (v - first).abs() <= 1e-12 * first.abs().max(1.0))
        })
        .map(|j| labels[j].clone())
        .collect();
    if !constant.is_empty() {
        return Err(Error::RankDeficient { channels: constant });
    }

    let xtx = x.tr_mul(&x);
    let eig = xtx.clone().symmetric_eigen();
    let max_eig = eig.eigenvalues.iter().copied().fold(0.0, f64::max);
    let (min_idx, min_eig) = eig
        .eigenvalues
        .iter()
        .copied()
        .enumerate()
        .fold((0, f64::INFINITY), |acc, (i, v)| if v < acc.1 { (i, v) } else { acc });
    if min_eig.is_nan() || min_eig <= 1e-12 * max_eig {
        let v = eig.eigenvectors.column(min_idx);
        let mut channels: Vec<String> = Vec::new();
        for (c, comp) in v.iter().enumerate() {
            let label = &labels[c % m];
            if comp.abs() > 1e-3 && !channels.contains(label) {
                channels.push(label.clone());
            }
        }
        return Err(Error::RankDeficient { channels });
    }
    let inv = linalg::spd_inverse(&xtx).ok_or_else(|| Error::RankDeficient {
        channels: labels.to_vec(),
    })?;
    let b = inv * x.tr_mul(&t);
    let resid = &t - &x * &b;
    let residual_sscp = resid.tr_mul(&resid);
    let coefs = (0..p).map(|lag| b.rows(lag * m, m).transpose()).collect();
    Ok(OlsFit {
        coefs,
        residual_sscp,
        n_eff,
    })
}

/// Fits a VAR(p) by ordinary least squares on the demeaned data.
/// The innovation covariance uses the denominator `N - p`.
pub fn estimate_var(data: &TimeSeriesSet, p: usize) -> Result<VarModel> {
    if p == 0 {
        return Err(Error::InvalidInput("model order must be positive".into()));
    }
    let (n, m) = (data.len(), data.channels());
    if n <= m * p + 1 {
        return Err(Error::InsufficientData {
            needed: m * p + 1,
            got: n,
        });
    }
    let y = demeaned(data);
    let fit = ols(&y, data.labels(), p, p)?;
    let mut sigma = fit.residual_sscp / fit.n_eff as f64;
    linalg::symmetrize(&mut sigma);
    VarModel::new(fit.coefs, sigma).map_err(|e| match e {
        Error::InvalidModel(_) => Error::RankDeficient {
            channels: data.labels().to_vec(),
        },
        other => other,
    })
}

/// BIC for orders `1..=p_max` on the common sample `p_max..N`.
pub fn bic_scores(data: &TimeSeriesSet, p_max: usize) -> Result<Vec<f64>> {
    if p_max == 0 {
        return Err(Error::InvalidInput("p_max must be positive".into()));
    }
    let (n, m) = (data.len(), data.channels());
    let needed = (m + 1) * p_max + 1;
    if n <= needed {
        return Err(Error::InsufficientData { needed, got: n });
    }
    let y = demeaned(data);
    let n_eff = (n - p_max) as f64;
    (1..=p_max)
        .map(|p| {
            let fit = ols(&y, data.labels(), p, p_max)?;
            let sigma = fit.residual_sscp / n_eff;
            let log_det = linalg::spd_log_det(&sigma).ok_or_else(|| Error::RankDeficient {
                channels: data.labels().to_vec(),
            })?;
            Ok(log_det + (m * m * p) as f64 * n_eff.ln() / n_eff)
        })
        .collect()
}

/// Order in `1..=p_max` minimizing `ln det Σ̂(p) + M² p ln(N_eff) / N_eff`
/// with `N_eff = N - p_max` held fixed across candidates.
pub fn select_order_bic(data: &TimeSeriesSet, p_max: usize) -> Result<usize> {
    let scores = bic_scores(data, p_max)?;
    let best = scores
        .iter()
        .enumerate()
        .fold((0, f64::INFINITY), |acc, (i, &s)| if s < acc.1 { (i, s) } else { acc });
    Ok(best.0 + 1)
}

/// Largest usable `p_max` for a sample of `n` rows and `m` channels, capped
/// at `requested`. Zero if not even order 1 can be selected.
pub fn feasible_p_max(n: usize, m: usize, requested: usize) -> usize {
    // bic_scores needs n > (m + 1) p_max + 1
    let cap = if n >= 2 { (n - 2) / (m + 1) } else { 0 };
    requested.min(cap)
}
