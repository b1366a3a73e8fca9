//! Conditional Granger causality from ISS parameters, and the multiscale
//! sweeps built on it.

use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::linalg::Matrix;
use crate::rescale::{apply_filter, design_fir_hamming, downsample};
use crate::series::TimeSeriesSet;
use crate::state_space::{
    downsample_ss, iss_submodel, observe, solve_dare, ss_to_iss, var_filter_to_iss, DareOptions, IssModel, SsModel,
};
use crate::var_model::{estimate_var, feasible_p_max, select_order_bic, VarModel};

/// One directed GC value `F_{source -> target}` in nats, conditioned on every
/// other channel.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GcValue {
    pub source: usize,
    pub target: usize,
    pub lambda_full: f64,
    pub lambda_restricted: f64,
    pub gc: f64,
}

impl GcValue {
    pub fn from_variances(source: usize, target: usize, lambda_full: f64, lambda_restricted: f64) -> Self {
        Self {
            source,
            target,
            lambda_full,
            lambda_restricted,
            gc: (lambda_restricted / lambda_full).ln(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum EstimationMode {
    /// Parameter-level computation from a known VAR.
    Exact,
    /// VAR fitted once on the raw data, then the exact pipeline.
    SsEstimated,
    /// Regressions on the filtered and downsampled data.
    Naive,
}

impl fmt::Display for EstimationMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::Exact => "exact",
            Self::SsEstimated => "ss-estimated",
            Self::Naive => "naive",
        })
    }
}

impl FromStr for EstimationMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "exact" => Ok(Self::Exact),
            "ss-estimated" | "estimated" => Ok(Self::SsEstimated),
            "naive" => Ok(Self::Naive),
            other => Err(Error::InvalidConfig(format!(
                "unknown mode '{other}' (expected exact, ss-estimated or naive)"
            ))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum ScaleOutcome {
    Computed {
        values: Vec<GcValue>,
        /// VAR order used at this scale (naive mode selects one per scale).
        order: Option<usize>,
    },
    Skipped {
        reason: String,
    },
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScaleGc {
    pub tau: usize,
    pub outcome: ScaleOutcome,
}

impl ScaleGc {
    pub fn values(&self) -> Option<&[GcValue]> {
        match &self.outcome {
            ScaleOutcome::Computed { values, .. } => Some(values),
            ScaleOutcome::Skipped { .. } => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MultiscaleGcResult {
    pub mode: EstimationMode,
    pub filter_order: usize,
    /// Order of the VAR behind the exact pipeline; `None` in naive mode.
    pub model_order: Option<usize>,
    pub channels: usize,
    pub scales: Vec<ScaleGc>,
}

impl MultiscaleGcResult {
    pub fn taus(&self) -> Vec<usize> {
        self.scales.iter().map(|s| s.tau).collect()
    }

    pub fn get(&self, tau: usize, source: usize, target: usize) -> Option<&GcValue> {
        self.scales
            .iter()
            .find(|s| s.tau == tau)?
            .values()?
            .iter()
            .find(|v| v.source == source && v.target == target)
    }

    /// `F_{source -> target}` per scale, NaN where the scale was skipped.
    pub fn curve(&self, source: usize, target: usize) -> Vec<f64> {
        self.scales
            .iter()
            .map(|s| {
                s.values()
                    .and_then(|vals| vals.iter().find(|v| v.source == source && v.target == target))
                    .map_or(f64::NAN, |v| v.gc)
            })
            .collect()
    }

    pub fn skipped(&self) -> impl Iterator<Item = (usize, &str)> {
        self.scales.iter().filter_map(|s| match &s.outcome {
            ScaleOutcome::Skipped { reason } => Some((s.tau, reason.as_str())),
            ScaleOutcome::Computed { .. } => None,
        })
    }
}

/// Scales must be nonempty, at least 1 and strictly increasing.
pub fn validate_scales(scales: &[usize]) -> Result<()> {
    if scales.is_empty() {
        return Err(Error::InvalidConfig("at least one scale is required".into()));
    }
    if scales[0] == 0 {
        return Err(Error::InvalidConfig("scales must be at least 1".into()));
    }
    if scales.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::InvalidConfig("scales must be strictly increasing".into()));
    }
    Ok(())
}

fn check_channels(m: usize) -> Result<()> {
    if m < 2 {
        return Err(Error::InvalidInput("Granger causality needs at least two channels".into()));
    }
    Ok(())
}

/// `F_{i -> j}` for one ordered pair.
pub fn gc_from_iss(model: &IssModel, i: usize, j: usize) -> Result<GcValue> {
    gc_from_iss_with(model, i, j, &DareOptions::default())
}

pub fn gc_from_iss_with(model: &IssModel, i: usize, j: usize, opts: &DareOptions) -> Result<GcValue> {
    let m = model.obs_dim();
    if i == j || i >= m || j >= m {
        return Err(Error::InvalidInput(format!(
            "invalid direction {i} -> {j} for {m} channels"
        )));
    }
    let lambda_full = model.phi()[(j, j)];
    let restricted = restricted_phi(model, i, opts)?;
    let jr = if j < i { j } else { j - 1 };
    Ok(GcValue::from_variances(i, j, lambda_full, restricted[(jr, jr)]))
}

/// Innovation covariance of the submodel without channel `i`.
fn restricted_phi(model: &IssModel, i: usize, opts: &DareOptions) -> Result<Matrix> {
    let keep: Vec<usize> = (0..model.obs_dim()).filter(|&c| c != i).collect();
    let sub = iss_submodel(model, &keep)?;
    Ok(solve_dare(&sub, opts)?.phi)
}

/// Every ordered pair, sorted by source then target. One submodel DARE per
/// source channel.
pub fn all_pairs_gc(model: &IssModel, opts: &DareOptions) -> Result<Vec<GcValue>> {
    let m = model.obs_dim();
    check_channels(m)?;
    let mut out = Vec::with_capacity(m * (m - 1));
    for i in 0..m {
        let restricted = restricted_phi(model, i, opts).map_err(|e| e.context(format!("dropping channel {i}")))?;
        for j in (0..m).filter(|&j| j != i) {
            let jr = if j < i { j } else { j - 1 };
            out.push(GcValue::from_variances(i, j, model.phi()[(j, j)], restricted[(jr, jr)]));
        }
    }
    Ok(out)
}

fn exact_scale(iss: &IssModel, mixing: Option<&Matrix>, tau: usize, opts: &DareOptions) -> Result<Vec<GcValue>> {
    let ss: SsModel = match mixing {
        Some(h) => observe(iss, h)?,
        None => iss.to_ss(),
    };
    let bar = ss_to_iss(&downsample_ss(&ss, tau)?, opts)?;
    all_pairs_gc(&bar, opts)
}

fn exact_sweep(
    model: &VarModel,
    mixing: Option<&Matrix>,
    q: usize,
    scales: &[usize],
    opts: &DareOptions,
) -> Result<Vec<ScaleGc>> {
    validate_scales(scales)?;
    let m = mixing.map_or(model.dim(), Matrix::nrows);
    check_channels(m)?;
    model.ensure_stable()?;
    scales
        .iter()
        .map(|&tau| {
            let filter = design_fir_hamming(q, tau)?.trimmed();
            let iss = var_filter_to_iss(model, &filter)?;
            let values = exact_scale(&iss, mixing, tau, opts).map_err(|e| e.context(format!("scale {tau}")))?;
            Ok(ScaleGc {
                tau,
                outcome: ScaleOutcome::Computed { values, order: Some(model.order()) },
            })
        })
        .collect()
}

/// Exact multiscale GC of a known VAR: Hamming lowpass of order `q` at cutoff
/// `1/(2τ)`, downsampling by `τ`, then the submodel DAREs.
pub fn multiscale_gc_exact(model: &VarModel, q: usize, scales: &[usize]) -> Result<MultiscaleGcResult> {
    multiscale_gc_exact_with(model, q, scales, &DareOptions::default())
}

pub fn multiscale_gc_exact_with(
    model: &VarModel,
    q: usize,
    scales: &[usize],
    opts: &DareOptions,
) -> Result<MultiscaleGcResult> {
    Ok(MultiscaleGcResult {
        mode: EstimationMode::Exact,
        filter_order: q,
        model_order: Some(model.order()),
        channels: model.dim(),
        scales: exact_sweep(model, None, q, scales, opts)?,
    })
}

/// Exact multiscale GC of `H Y` where `Y` follows `model`. The mixing is
/// applied after filtering, which is equivalent because the filter acts on
/// every channel with the same taps.
pub fn multiscale_gc_exact_observed(
    model: &VarModel,
    mixing: &Matrix,
    q: usize,
    scales: &[usize],
) -> Result<MultiscaleGcResult> {
    if mixing.ncols() != model.dim() {
        return Err(Error::InvalidModel(format!(
            "mixing matrix has {} columns for a {}-channel model",
            mixing.ncols(),
            model.dim()
        )));
    }
    Ok(MultiscaleGcResult {
        mode: EstimationMode::Exact,
        filter_order: q,
        model_order: Some(model.order()),
        channels: mixing.nrows(),
        scales: exact_sweep(model, Some(mixing), q, scales, &DareOptions::default())?,
    })
}

fn clamp_p_max(n: usize, m: usize, p_max: usize) -> Result<usize> {
    if p_max == 0 {
        return Err(Error::InvalidConfig("p_max must be positive".into()));
    }
    let p = feasible_p_max(n, m, p_max);
    if p == 0 {
        return Err(Error::InsufficientData { needed: m + 3, got: n });
    }
    if p < p_max {
        log::warn!("p_max lowered from {p_max} to {p} for {n} samples of {m} channels");
    }
    Ok(p)
}

/// VAR order by BIC and OLS fit on the raw data, then the exact pipeline on
/// the fitted model.
pub fn multiscale_gc_estimated(
    data: &TimeSeriesSet,
    q: usize,
    scales: &[usize],
    p_max: usize,
) -> Result<MultiscaleGcResult> {
    validate_scales(scales)?;
    check_channels(data.channels())?;
    let model = fit_var_bic(data, p_max)?;
    multiscale_gc_from_fit(&model, q, scales)
}

/// BIC order selection (with `p_max` lowered to what the sample supports)
/// followed by the OLS fit.
pub fn fit_var_bic(data: &TimeSeriesSet, p_max: usize) -> Result<VarModel> {
    let p_max = clamp_p_max(data.len(), data.channels(), p_max)?;
    let p = select_order_bic(data, p_max).map_err(|e| e.context("order selection"))?;
    let model = estimate_var(data, p).map_err(|e| e.context("VAR estimation"))?;
    log::debug!("estimated VAR({p}), spectral radius {:.4}", model.spectral_radius());
    Ok(model)
}

/// The exact pipeline on a fitted model, labelled as ss-estimated.
pub fn multiscale_gc_from_fit(model: &VarModel, q: usize, scales: &[usize]) -> Result<MultiscaleGcResult> {
    let p = model.order();
    let mut result = multiscale_gc_exact(model, q, scales).map_err(|e| e.context(format!("fitted VAR({p})")))?;
    result.mode = EstimationMode::SsEstimated;
    Ok(result)
}

fn naive_scale(data: &TimeSeriesSet, q: usize, tau: usize, p_max: usize) -> Result<(Vec<GcValue>, usize)> {
    let filtered = apply_filter(data, &design_fir_hamming(q, tau)?)?;
    let rescaled = downsample(&filtered, tau)?;
    let (n, m) = (rescaled.len(), rescaled.channels());
    let p_max = feasible_p_max(n, m, p_max);
    if p_max == 0 {
        return Err(Error::InsufficientData { needed: m + 3, got: n });
    }
    let p = select_order_bic(&rescaled, p_max)?;
    let full = estimate_var(&rescaled, p)?;
    let mut out = Vec::with_capacity(m * (m - 1));
    for i in 0..m {
        let keep: Vec<usize> = (0..m).filter(|&c| c != i).collect();
        let restricted = estimate_var(&rescaled.select_channels(&keep)?, p)?;
        for j in (0..m).filter(|&j| j != i) {
            let jr = if j < i { j } else { j - 1 };
            out.push(GcValue::from_variances(
                i,
                j,
                full.sigma()[(j, j)],
                restricted.sigma()[(jr, jr)],
            ));
        }
    }
    Ok((out, p))
}

/// Baseline estimator: filter, downsample, then full and restricted OLS
/// regressions on the rescaled data with the order re-selected by BIC at each
/// scale. Scales where the rescaled series is too short or degenerate are
/// reported as skipped.
pub fn multiscale_gc_naive(
    data: &TimeSeriesSet,
    q: usize,
    scales: &[usize],
    p_max: usize,
) -> Result<MultiscaleGcResult> {
    validate_scales(scales)?;
    check_channels(data.channels())?;
    if p_max == 0 {
        return Err(Error::InvalidConfig("p_max must be positive".into()));
    }
    let scales = scales
        .iter()
        .map(|&tau| {
            let outcome = match naive_scale(data, q, tau, p_max) {
                Ok((values, p)) => ScaleOutcome::Computed { values, order: Some(p) },
                Err(e @ (Error::InsufficientData { .. } | Error::RankDeficient { .. } | Error::InvalidFilter(_))) => {
                    log::warn!("naive GC skipped scale {tau}: {e}");
                    ScaleOutcome::Skipped { reason: e.to_string() }
                }
                Err(e) => return Err(e.context(format!("scale {tau}"))),
            };
            Ok(ScaleGc { tau, outcome })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(MultiscaleGcResult {
        mode: EstimationMode::Naive,
        filter_order: q,
        model_order: None,
        channels: data.channels(),
        scales,
    })
}
