//! End-to-end analysis runs and benchmark reproduction.

use std::fmt::Write as _;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::time::{Duration, Instant};

use crate::error::{Error, Result};
use crate::gc::{
    fit_var_bic, multiscale_gc_exact, multiscale_gc_exact_observed, multiscale_gc_from_fit, multiscale_gc_naive,
    validate_scales, EstimationMode, MultiscaleGcResult,
};
use crate::io::{load_csv, write_gc_csv, CsvOptions};
use crate::linalg::Matrix;
use crate::preprocess::{default_detrend_lambda, detrend_l1_set, normalize, resample_uniform};
use crate::series::TimeSeriesSet;
use crate::surrogate::{significance_bands_with, SignificanceBands, SurrogateConfig};
use crate::var_model::{build_benchmark, simulate_benchmark, simulate_var, SimulationConfig, VarModel};

pub const DEFAULT_P_MAX: usize = 20;

#[derive(Debug, Clone, PartialEq)]
pub enum DetrendLambda {
    /// `10 N`, with `N` the series length at detrending time.
    Default,
    Value(f64),
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct PreprocessConfig {
    pub detrend: Option<DetrendLambda>,
    pub resample_dt: Option<f64>,
    pub normalize: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AnalysisConfig {
    pub input: PathBuf,
    pub csv: CsvOptions,
    /// Channel labels to keep, in order; all channels when `None`.
    pub channels: Option<Vec<String>>,
    pub scales: Vec<usize>,
    pub filter_order: usize,
    pub p_max: usize,
    pub mode: EstimationMode,
    pub surrogates: Option<SurrogateConfig>,
    pub preprocess: PreprocessConfig,
    pub output_dir: PathBuf,
    pub seed: u64,
}

impl AnalysisConfig {
    pub fn new(input: impl Into<PathBuf>, output_dir: impl Into<PathBuf>) -> Self {
        Self {
            input: input.into(),
            csv: CsvOptions::default(),
            channels: None,
            scales: (1..=10).collect(),
            filter_order: crate::rescale::DEFAULT_FILTER_ORDER,
            p_max: DEFAULT_P_MAX,
            mode: EstimationMode::SsEstimated,
            surrogates: None,
            preprocess: PreprocessConfig::default(),
            output_dir: output_dir.into(),
            seed: 0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        validate_scales(&self.scales)?;
        if self.p_max == 0 {
            return Err(Error::InvalidConfig("p_max must be positive".into()));
        }
        if self.mode == EstimationMode::Exact {
            return Err(Error::InvalidConfig(
                "exact mode needs a known model; analyze data with ss-estimated or naive, \
                 or use `reproduce` for the benchmark curves"
                    .into(),
            ));
        }
        if let Some(s) = &self.surrogates {
            s.validate()?;
        }
        if let Some(DetrendLambda::Value(l)) = self.preprocess.detrend {
            if !(l.is_finite() && l > 0.0) {
                return Err(Error::InvalidConfig(format!("detrend lambda must be positive, got {l}")));
            }
        }
        if let Some(dt) = self.preprocess.resample_dt {
            if !(dt.is_finite() && dt > 0.0) {
                return Err(Error::InvalidConfig(format!("resampling interval must be positive, got {dt}")));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct RunReport {
    pub config: AnalysisConfig,
    pub labels: Vec<String>,
    pub n_samples: usize,
    pub dt: Option<f64>,
    /// Preprocessing steps in the order they ran.
    pub preprocessing: Vec<String>,
    /// VAR order of the fitted model (ss-estimated mode).
    pub model_order: Option<usize>,
    pub spectral_radius: Option<f64>,
    pub result: MultiscaleGcResult,
    pub bands: Option<SignificanceBands>,
    pub warnings: Vec<String>,
    pub timings: Vec<(String, Duration)>,
}

impl RunReport {
    /// Human-readable summary written to `report.txt`.
    pub fn render(&self) -> String {
        let c = &self.config;
        let mut s = String::new();
        let _ = writeln!(s, "multiscale Granger causality report");
        let _ = writeln!(s);
        let _ = writeln!(s, "input: {}", c.input.display());
        let _ = writeln!(s, "channels: {}", self.labels.join(", "));
        let _ = writeln!(s, "samples analyzed: {}", self.n_samples);
        match self.dt {
            Some(dt) => {
                let _ = writeln!(s, "sampling interval: {dt}");
            }
            None => {
                let _ = writeln!(s, "sampling interval: unknown (scales in samples)");
            }
        }
        let scales: Vec<String> = c.scales.iter().map(usize::to_string).collect();
        let _ = writeln!(s, "scales: {}", scales.join(","));
        let _ = writeln!(s, "mode: {}", c.mode);
        let _ = writeln!(s, "filter order q: {}", c.filter_order);
        let _ = writeln!(s, "p_max: {}", c.p_max);
        let _ = writeln!(s, "seed: {}", c.seed);
        if self.preprocessing.is_empty() {
            let _ = writeln!(s, "preprocessing: none");
        } else {
            let _ = writeln!(s, "preprocessing: {}", self.preprocessing.join(" -> "));
        }
        if let Some(p) = self.model_order {
            let _ = writeln!(s, "selected VAR order (BIC): {p}");
        }
        if let Some(r) = self.spectral_radius {
            let _ = writeln!(s, "fitted model spectral radius: {r:.6}");
        }
        if let Some(b) = &self.bands {
            let _ = writeln!(
                s,
                "surrogates: {} used, {} skipped",
                b.surrogates_used, b.surrogates_skipped
            );
        }
        let _ = writeln!(s);
        let _ = writeln!(s, "{:>6} {:>12} {:>10} {:>10} {:>12}", "tau", "time", "source", "target", "gc");
        for scale in &self.result.scales {
            let time = self
                .dt
                .map_or_else(|| "-".to_string(), |dt| format!("{}", dt * scale.tau as f64));
            match scale.values() {
                Some(values) => {
                    for v in values {
                        let mark = self
                            .bands
                            .as_ref()
                            .and_then(|b| b.get(scale.tau, v.source, v.target))
                            .map_or("", |cell| if cell.significant { " *" } else { "" });
                        let _ = writeln!(
                            s,
                            "{:>6} {:>12} {:>10} {:>10} {:>12.6}{mark}",
                            scale.tau, time, self.labels[v.source], self.labels[v.target], v.gc
                        );
                    }
                }
                None => {
                    let _ = writeln!(s, "{:>6} {:>12} skipped", scale.tau, time);
                }
            }
        }
        if self.bands.is_some() {
            let _ = writeln!(s, "(* original GC above the highest surrogate percentile)");
        }
        if !self.warnings.is_empty() {
            let _ = writeln!(s);
            let _ = writeln!(s, "warnings:");
            for w in &self.warnings {
                let _ = writeln!(s, "  {w}");
            }
        }
        let _ = writeln!(s);
        let _ = writeln!(s, "timings:");
        for (name, d) in &self.timings {
            let _ = writeln!(s, "  {name}: {:.3} s", d.as_secs_f64());
        }
        s
    }
}

fn select_labels(data: &TimeSeriesSet, wanted: &[String]) -> Result<TimeSeriesSet> {
    let idx = wanted
        .iter()
        .map(|l| {
            data.channel_index(l)
                .ok_or_else(|| Error::InvalidConfig(format!("no channel named '{l}'")))
        })
        .collect::<Result<Vec<_>>>()?;
    data.select_channels(&idx)
}

/// Preprocessing in the fixed order detrend -> resample -> normalize.
/// Returns the processed data and a description of each step.
pub fn preprocess(data: &TimeSeriesSet, cfg: &PreprocessConfig) -> Result<(TimeSeriesSet, Vec<String>)> {
    let mut data = data.clone();
    let mut steps = Vec::new();
    if let Some(lambda) = &cfg.detrend {
        let lambda = match lambda {
            DetrendLambda::Default => default_detrend_lambda(data.len()),
            DetrendLambda::Value(v) => *v,
        };
        data = detrend_l1_set(&data, lambda).map_err(|e| e.context("detrending"))?;
        steps.push(format!("detrend (l1 trend filter, lambda = {lambda})"));
    }
    if let Some(dt) = cfg.resample_dt {
        let before = data.len();
        data = resample_uniform(&data, dt).map_err(|e| e.context("resampling"))?;
        steps.push(format!("resample (dt = {dt}, {before} -> {} rows)", data.len()));
    }
    if cfg.normalize {
        data = normalize(&data).map_err(|e| e.context("normalization"))?;
        steps.push("normalize (zero mean, unit variance)".to_string());
    }
    Ok((data, steps))
}

/// Channel selection followed by preprocessing: the data the GC sweep sees.
pub fn prepare(data: &TimeSeriesSet, config: &AnalysisConfig) -> Result<(TimeSeriesSet, Vec<String>)> {
    let selected = match &config.channels {
        Some(wanted) => select_labels(data, wanted)?,
        None => data.clone(),
    };
    preprocess(&selected, &config.preprocess)
}

/// Runs the configured analysis on in-memory data.
pub fn analyze(data: &TimeSeriesSet, config: &AnalysisConfig) -> Result<RunReport> {
    config.validate()?;
    let mut timings = Vec::new();
    let mut warnings = Vec::new();

    let t = Instant::now();
    let (data, steps) = prepare(data, config)?;
    timings.push(("preprocessing".to_string(), t.elapsed()));

    let t = Instant::now();
    let (q, scales, p_max) = (config.filter_order, config.scales.as_slice(), config.p_max);
    let (result, model_order, radius) = match config.mode {
        EstimationMode::SsEstimated => {
            let model = fit_var_bic(&data, p_max)?;
            let radius = model.spectral_radius();
            (multiscale_gc_from_fit(&model, q, scales)?, Some(model.order()), Some(radius))
        }
        EstimationMode::Naive => (multiscale_gc_naive(&data, q, scales, p_max)?, None, None),
        EstimationMode::Exact => unreachable!("rejected by validate"),
    };
    timings.push(("gc".to_string(), t.elapsed()));
    for (tau, reason) in result.skipped() {
        warnings.push(format!("scale {tau} skipped: {reason}"));
    }

    let bands = match &config.surrogates {
        Some(sc) => {
            let t = Instant::now();
            let mode = config.mode;
            let bands = significance_bands_with(&data, sc, |d| match mode {
                EstimationMode::Naive => multiscale_gc_naive(d, q, scales, p_max),
                _ => crate::gc::multiscale_gc_estimated(d, q, scales, p_max),
            })?;
            timings.push(("surrogates".to_string(), t.elapsed()));
            if bands.surrogates_skipped > 0 {
                warnings.push(format!(
                    "{} of {} surrogates failed and were skipped",
                    bands.surrogates_skipped, sc.n_surrogates
                ));
            }
            Some(bands)
        }
        None => None,
    };

    Ok(RunReport {
        config: config.clone(),
        labels: data.labels().to_vec(),
        n_samples: data.len(),
        dt: data.dt(),
        preprocessing: steps,
        model_order,
        spectral_radius: radius,
        result,
        bands,
        warnings,
        timings,
    })
}

/// Writes `gc.csv` and `report.txt` into `dir`.
pub fn write_outputs(report: &RunReport, dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir)?;
    let file = File::create(dir.join("gc.csv"))?;
    write_gc_csv(BufWriter::new(file), &report.result, &report.labels, report.bands.as_ref())?;
    std::fs::write(dir.join("report.txt"), report.render())?;
    Ok(())
}

/// Loads the input, analyzes it and writes the outputs.
pub fn run(config: &AnalysisConfig) -> Result<RunReport> {
    config.validate()?;
    let t = Instant::now();
    let data = load_csv(&config.input, &config.csv)?;
    let load_time = t.elapsed();
    let mut report = analyze(&data, config)?;
    report.timings.insert(0, ("loading".to_string(), load_time));
    write_outputs(&report, &config.output_dir)?;
    Ok(report)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Figure {
    /// Unidirectional benchmark, exact vs ss-estimated vs naive.
    Fig2,
    /// Bidirectional benchmark, exact vs ss-estimated vs naive.
    Fig3,
    /// Mixed fast/slow oscillators, ss-estimated.
    Fig4,
}

impl FromStr for Figure {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "fig2" => Ok(Self::Fig2),
            "fig3" => Ok(Self::Fig3),
            "fig4" => Ok(Self::Fig4),
            other => Err(Error::InvalidConfig(format!("unknown figure '{other}' (expected fig2, fig3 or fig4)"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MonteCarloConfig {
    /// Realization `r` is simulated with seed `simulation.seed + r`.
    pub simulation: SimulationConfig,
    pub filter_order: usize,
    pub scales: Vec<usize>,
    pub p_max: usize,
    pub realizations: usize,
    pub modes: Vec<EstimationMode>,
}

impl MonteCarloConfig {
    pub fn for_figure(fig: Figure) -> Self {
        let (simulation, scales, modes) = match fig {
            Figure::Fig2 => (
                SimulationConfig { n_samples: 500, ..SimulationConfig::unidirectional() },
                (1..=10).collect(),
                vec![EstimationMode::SsEstimated, EstimationMode::Naive],
            ),
            Figure::Fig3 => (
                SimulationConfig { n_samples: 500, ..SimulationConfig::bidirectional() },
                (1..=10).collect(),
                vec![EstimationMode::SsEstimated, EstimationMode::Naive],
            ),
            Figure::Fig4 => (
                SimulationConfig { n_samples: 1000, ..SimulationConfig::mixed() },
                (1..=15).collect(),
                vec![EstimationMode::SsEstimated],
            ),
        };
        Self {
            simulation,
            filter_order: crate::rescale::DEFAULT_FILTER_ORDER,
            scales,
            p_max: DEFAULT_P_MAX,
            realizations: 100,
            modes,
        }
    }
}

/// GC estimates of one mode across realizations.
#[derive(Debug, Clone, PartialEq)]
pub struct ModeEstimates {
    pub mode: EstimationMode,
    /// One result per successful realization, with the realization index.
    pub runs: Vec<(usize, MultiscaleGcResult)>,
    pub failures: usize,
}

impl ModeEstimates {
    /// Estimates of `F_{source -> target}` at `tau` across realizations, skipping gaps.
    pub fn samples(&self, tau: usize, source: usize, target: usize) -> Vec<f64> {
        self.runs
            .iter()
            .filter_map(|(_, r)| r.get(tau, source, target).map(|v| v.gc))
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MonteCarloResult {
    pub config: MonteCarloConfig,
    /// Exact curve of the generating model (of the observed mixture for `mix`).
    pub exact: MultiscaleGcResult,
    pub estimates: Vec<ModeEstimates>,
}

impl MonteCarloResult {
    pub fn mode(&self, mode: EstimationMode) -> Option<&ModeEstimates> {
        self.estimates.iter().find(|e| e.mode == mode)
    }
}

/// Exact GC of a benchmark, accounting for the observation mixing of `mix`.
pub fn benchmark_exact(sim: &SimulationConfig, q: usize, scales: &[usize]) -> Result<MultiscaleGcResult> {
    let model = build_benchmark(sim)?;
    match sim.mixing() {
        Some(h) => multiscale_gc_exact_observed(&model, &h, q, scales),
        None => multiscale_gc_exact(&model, q, scales),
    }
}

fn estimate(mode: EstimationMode, data: &TimeSeriesSet, q: usize, scales: &[usize], p_max: usize) -> Result<MultiscaleGcResult> {
    match mode {
        EstimationMode::SsEstimated => crate::gc::multiscale_gc_estimated(data, q, scales, p_max),
        EstimationMode::Naive => multiscale_gc_naive(data, q, scales, p_max),
        EstimationMode::Exact => Err(Error::InvalidConfig("exact mode does not estimate".into())),
    }
}

/// Simulates `realizations` datasets and estimates GC on each with every mode.
pub fn monte_carlo(cfg: &MonteCarloConfig) -> Result<MonteCarloResult> {
    validate_scales(&cfg.scales)?;
    if cfg.realizations == 0 {
        return Err(Error::InvalidConfig("at least one realization is required".into()));
    }
    let exact = benchmark_exact(&cfg.simulation, cfg.filter_order, &cfg.scales)?;
    let mut estimates: Vec<ModeEstimates> = cfg
        .modes
        .iter()
        .map(|&mode| ModeEstimates { mode, runs: Vec::new(), failures: 0 })
        .collect();
    for r in 0..cfg.realizations {
        let sim = SimulationConfig {
            seed: cfg.simulation.seed.wrapping_add(r as u64),
            ..cfg.simulation.clone()
        };
        let data = simulate_benchmark(&sim)?;
        for est in &mut estimates {
            match estimate(est.mode, &data, cfg.filter_order, &cfg.scales, cfg.p_max) {
                Ok(res) => est.runs.push((r, res)),
                Err(e) => {
                    log::warn!("realization {r}, {} mode failed: {e}", est.mode);
                    est.failures += 1;
                }
            }
        }
    }
    Ok(MonteCarloResult {
        config: cfg.clone(),
        exact,
        estimates,
    })
}

/// Median of unsorted data (NaN if empty).
pub fn median(values: &[f64]) -> f64 {
    quantile(values, 0.5)
}

/// Linear-interpolation quantile of unsorted data (NaN if empty).
pub fn quantile(values: &[f64], prob: f64) -> f64 {
    if values.is_empty() {
        return f64::NAN;
    }
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    crate::surrogate::percentile(&v, prob * 100.0)
}

fn direction_pairs(m: usize) -> Vec<(usize, usize)> {
    (0..m)
        .flat_map(|i| (0..m).filter(move |&j| j != i).map(move |j| (i, j)))
        .collect()
}

/// Writes `exact.csv`, `estimates.csv` (one row per realization) and
/// `summary.csv` (median and quartiles per mode, scale and direction).
pub fn write_monte_carlo(result: &MonteCarloResult, dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir)?;
    let labels: Vec<String> = (1..=result.exact.channels).map(|i| format!("y{i}")).collect();
    write_gc_csv(BufWriter::new(File::create(dir.join("exact.csv"))?), &result.exact, &labels, None)?;

    let mut est = BufWriter::new(File::create(dir.join("estimates.csv"))?);
    writeln!(est, "realization,mode,tau,source,target,gc")?;
    for e in &result.estimates {
        for (r, res) in &e.runs {
            for scale in &res.scales {
                let Some(values) = scale.values() else { continue };
                for v in values {
                    writeln!(est, "{r},{},{},{},{},{}", e.mode, scale.tau, labels[v.source], labels[v.target], v.gc)?;
                }
            }
        }
    }
    est.flush()?;

    let mut sum = BufWriter::new(File::create(dir.join("summary.csv"))?);
    writeln!(sum, "mode,tau,source,target,exact,median,p25,p75,n")?;
    let pairs = direction_pairs(result.exact.channels);
    for e in &result.estimates {
        for &tau in &result.config.scales {
            for &(s, t) in &pairs {
                let samples = e.samples(tau, s, t);
                let exact = result.exact.get(tau, s, t).map_or(f64::NAN, |v| v.gc);
                writeln!(
                    sum,
                    "{},{tau},{},{},{exact},{},{},{},{}",
                    e.mode,
                    labels[s],
                    labels[t],
                    median(&samples),
                    quantile(&samples, 0.25),
                    quantile(&samples, 0.75),
                    samples.len()
                )?;
            }
        }
    }
    sum.flush()?;
    Ok(())
}

/// Two independent AR(1) channels (coefficients 0.5 and 0.7, unit innovations).
pub fn independent_ar1(n: usize, seed: u64) -> Result<TimeSeriesSet> {
    let a = Matrix::from_row_slice(2, 2, &[0.5, 0.0, 0.0, 0.7]);
    let model = VarModel::new(vec![a], Matrix::identity(2, 2))?;
    simulate_var(&model, n, crate::var_model::DEFAULT_BURN_IN, seed)
}
