//! IAAFT surrogates and per-scale significance bands.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rustfft::num_complex::Complex;
use rustfft::FftPlanner;

use crate::error::{Error, Result};
use crate::gc::{multiscale_gc_estimated, MultiscaleGcResult};
use crate::linalg::Matrix;
use crate::series::TimeSeriesSet;

pub const DEFAULT_MAX_ITERATIONS: usize = 1000;
const MIN_LENGTH: usize = 8;

#[derive(Debug, Clone, PartialEq)]
pub struct SurrogateConfig {
    pub n_surrogates: usize,
    pub max_iterations: usize,
    pub seed: u64,
    /// Sorted, each in (0, 100).
    pub percentiles: Vec<f64>,
}

impl Default for SurrogateConfig {
    fn default() -> Self {
        Self {
            n_surrogates: 100,
            max_iterations: DEFAULT_MAX_ITERATIONS,
            seed: 0,
            percentiles: vec![5.0, 50.0, 95.0],
        }
    }
}

impl SurrogateConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n_surrogates == 0 {
            return Err(Error::InvalidConfig("at least one surrogate is required".into()));
        }
        if self.max_iterations == 0 {
            return Err(Error::InvalidConfig("IAAFT iteration cap must be positive".into()));
        }
        if self.percentiles.is_empty() {
            return Err(Error::InvalidConfig("at least one percentile is required".into()));
        }
        if self.percentiles.iter().any(|p| !(*p > 0.0 && *p < 100.0)) {
            return Err(Error::InvalidConfig("percentiles must lie in (0, 100)".into()));
        }
        if self.percentiles.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::InvalidConfig("percentiles must be strictly increasing".into()));
        }
        Ok(())
    }
}

fn check_series(series: &[f64]) -> Result<()> {
    if series.len() < MIN_LENGTH {
        return Err(Error::InsufficientData {
            needed: MIN_LENGTH - 1,
            got: series.len(),
        });
    }
    if series.iter().any(|v| !v.is_finite()) {
        return Err(Error::InvalidInput("series has non-finite values".into()));
    }
    if series.iter().all(|&v| v == series[0]) {
        return Err(Error::ConstantSeries("series".into()));
    }
    Ok(())
}

/// Iterative amplitude-adjusted Fourier transform surrogate.
///
/// The result is a permutation of `series` whose periodogram approximates the
/// original one. Iteration stops when the rank order stops changing.
pub fn iaaft(series: &[f64], max_iterations: usize, seed: u64) -> Result<Vec<f64>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    iaaft_with_rng(series, max_iterations, &mut rng)
}

pub fn iaaft_with_rng(series: &[f64], max_iterations: usize, rng: &mut ChaCha8Rng) -> Result<Vec<f64>> {
    check_series(series)?;
    if max_iterations == 0 {
        return Err(Error::InvalidConfig("IAAFT iteration cap must be positive".into()));
    }
    let n = series.len();
    let mut planner = FftPlanner::<f64>::new();
    let fft = planner.plan_fft_forward(n);
    let ifft = planner.plan_fft_inverse(n);

    let mut sorted = series.to_vec();
    sorted.sort_by(f64::total_cmp);
    let mut spectrum: Vec<Complex<f64>> = series.iter().map(|&v| Complex::new(v, 0.0)).collect();
    fft.process(&mut spectrum);
    let magnitudes: Vec<f64> = spectrum.iter().map(|z| z.norm()).collect();

    let mut current = series.to_vec();
    current.shuffle(rng);
    let mut ranks = rank_order(&current);
    let mut buf = vec![Complex::new(0.0, 0.0); n];
    for _ in 0..max_iterations {
        for (b, &v) in buf.iter_mut().zip(&current) {
            *b = Complex::new(v, 0.0);
        }
        fft.process(&mut buf);
        for (b, &mag) in buf.iter_mut().zip(&magnitudes) {
            let norm = b.norm();
            *b = if norm > 0.0 { *b * (mag / norm) } else { Complex::new(mag, 0.0) };
        }
        ifft.process(&mut buf);
        let candidate: Vec<f64> = buf.iter().map(|z| z.re / n as f64).collect();
        let next_ranks = rank_order(&candidate);
        for (k, &idx) in next_ranks.iter().enumerate() {
            current[idx] = sorted[k];
        }
        if next_ranks == ranks {
            break;
        }
        ranks = next_ranks;
    }
    Ok(current)
}

/// Indices that sort `x` ascending (ties broken by position).
fn rank_order(x: &[f64]) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..x.len()).collect();
    idx.sort_by(|&a, &b| x[a].total_cmp(&x[b]).then(a.cmp(&b)));
    idx
}

/// Independent IAAFT surrogate of every channel. Surrogate `index` draws from
/// stream `index * M + channel` of the ChaCha generator seeded with `seed`.
pub fn surrogate_set(data: &TimeSeriesSet, max_iterations: usize, seed: u64, index: u64) -> Result<TimeSeriesSet> {
    let m = data.channels();
    let mut columns = Vec::with_capacity(m);
    for c in 0..m {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(index * m as u64 + c as u64);
        let col = iaaft_with_rng(&data.column(c), max_iterations, &mut rng)
            .map_err(|e| e.context(format!("channel '{}'", data.labels()[c])))?;
        columns.push(col);
    }
    let values = Matrix::from_fn(data.len(), m, |i, j| columns[j][i]);
    data.with_values(values)
}

/// Linear-interpolation percentile (`pct` in [0, 100]) of ascending data.
pub fn percentile(sorted: &[f64], pct: f64) -> f64 {
    assert!(!sorted.is_empty(), "percentile of empty sample");
    let h = (sorted.len() - 1) as f64 * pct / 100.0;
    let lo = h.floor() as usize;
    let hi = (lo + 1).min(sorted.len() - 1);
    sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
}

#[derive(Debug, Clone, PartialEq)]
pub struct BandCell {
    pub tau: usize,
    pub source: usize,
    pub target: usize,
    pub original: f64,
    /// One value per configured percentile; NaN if no surrogate produced this cell.
    pub bands: Vec<f64>,
    /// Original GC strictly above the highest band.
    pub significant: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SignificanceBands {
    pub percentiles: Vec<f64>,
    pub original: MultiscaleGcResult,
    pub cells: Vec<BandCell>,
    pub surrogates_used: usize,
    pub surrogates_skipped: usize,
}

impl SignificanceBands {
    pub fn get(&self, tau: usize, source: usize, target: usize) -> Option<&BandCell> {
        self.cells
            .iter()
            .find(|c| c.tau == tau && c.source == source && c.target == target)
    }

    pub fn fraction_significant(&self) -> f64 {
        if self.cells.is_empty() {
            return 0.0;
        }
        self.cells.iter().filter(|c| c.significant).count() as f64 / self.cells.len() as f64
    }
}

/// Bands from IAAFT surrogates analyzed with the ss-estimated pipeline.
pub fn significance_bands(
    data: &TimeSeriesSet,
    q: usize,
    scales: &[usize],
    p_max: usize,
    config: &SurrogateConfig,
) -> Result<SignificanceBands> {
    significance_bands_with(data, config, |d| multiscale_gc_estimated(d, q, scales, p_max))
}

/// Bands for an arbitrary analysis. Surrogates whose analysis fails are
/// skipped and counted.
pub fn significance_bands_with<F>(data: &TimeSeriesSet, config: &SurrogateConfig, analyze: F) -> Result<SignificanceBands>
where
    F: Fn(&TimeSeriesSet) -> Result<MultiscaleGcResult>,
{
    config.validate()?;
    let original = analyze(data).map_err(|e| e.context("original data"))?;
    let mut samples: Vec<MultiscaleGcResult> = Vec::with_capacity(config.n_surrogates);
    let mut skipped = 0;
    for s in 0..config.n_surrogates {
        let surrogate = surrogate_set(data, config.max_iterations, config.seed, s as u64)?;
        match analyze(&surrogate) {
            Ok(res) => samples.push(res),
            Err(e) => {
                log::warn!("surrogate {s} skipped: {e}");
                skipped += 1;
            }
        }
    }
    if skipped > 0 {
        log::warn!("{skipped} of {} surrogates skipped", config.n_surrogates);
    }

    let mut cells = Vec::new();
    for scale in &original.scales {
        let Some(values) = scale.values() else { continue };
        for v in values {
            let mut dist: Vec<f64> = samples
                .iter()
                .filter_map(|r| r.get(scale.tau, v.source, v.target))
                .map(|g| g.gc)
                .collect();
            dist.sort_by(f64::total_cmp);
            let bands: Vec<f64> = if dist.is_empty() {
                vec![f64::NAN; config.percentiles.len()]
            } else {
                config.percentiles.iter().map(|&p| percentile(&dist, p)).collect()
            };
            let upper = *bands.last().expect("validated nonempty");
            cells.push(BandCell {
                tau: scale.tau,
                source: v.source,
                target: v.target,
                original: v.gc,
                significant: v.gc > upper,
                bands,
            });
        }
    }
    Ok(SignificanceBands {
        percentiles: config.percentiles.clone(),
        original,
        cells,
        surrogates_used: samples.len(),
        surrogates_skipped: skipped,
    })
}
