//! Acceptance suite: one PASS/FAIL line per criterion, nonzero exit if any fails.
//! Run with `cargo test -p msgc --test acceptance`.

mod common;

use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use common::{argmax, local_maxima, mixed_autocovariances, regression_gc, var_autocovariances};
use msgc::gc::{multiscale_gc_exact, multiscale_gc_exact_observed, EstimationMode};
use msgc::linalg::{self, Matrix};
use msgc::pipeline::{self, median, quantile, AnalysisConfig, DetrendLambda, Figure, MonteCarloConfig};
use msgc::preprocess::{detrend_l1, normalize, resample_uniform};
use msgc::state_space::{solve_dare, DareOptions, IssModel, SsModel};
use msgc::surrogate::{significance_bands, SurrogateConfig};
use msgc::var_model::{build_benchmark, simulate_benchmark, SimulationConfig};
use msgc::TimeSeriesSet;

type Criterion = (&'static str, fn() -> Outcome);

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome {
        pass,
        detail: detail.into(),
    }
}

fn within(elapsed: Duration, limit_secs: u64) -> bool {
    elapsed.as_secs_f64() < limit_secs as f64
}

fn benchmarks() -> Vec<(&'static str, SimulationConfig)> {
    vec![
        ("uni", SimulationConfig::unidirectional()),
        ("bi", SimulationConfig::bidirectional()),
    ]
}

fn criterion_1() -> Outcome {
    let t = Instant::now();
    let scales: Vec<usize> = (1..=10).collect();
    let uni = build_benchmark(&SimulationConfig::unidirectional()).unwrap();
    let bi = build_benchmark(&SimulationConfig::bidirectional()).unwrap();
    let ru = multiscale_gc_exact(&uni, 6, &scales).unwrap();
    let rb = multiscale_gc_exact(&bi, 6, &scales).unwrap();
    let uni12 = scales[argmax(&ru.curve(0, 1))];
    let bi12 = scales[argmax(&rb.curve(0, 1))];
    let bi21 = scales[argmax(&rb.curve(1, 0))];
    let elapsed = t.elapsed();
    outcome(
        uni12 == 2 && bi12 == 7 && bi21 == 2 && within(elapsed, 10),
        format!(
            "uni argmax F12 = {uni12}; bi argmax F12 = {bi12}, F21 = {bi21}; {:.2} s",
            elapsed.as_secs_f64()
        ),
    )
}

fn criterion_2() -> Outcome {
    let mut worst: f64 = 0.0;
    for (_, cfg) in benchmarks() {
        let model = build_benchmark(&cfg).unwrap();
        let base = multiscale_gc_exact(&model, 0, &[1]).unwrap();
        for q in [2, 4, 6, 8] {
            let res = multiscale_gc_exact(&model, q, &[1]).unwrap();
            for (s, t) in [(0, 1), (1, 0)] {
                let d = (res.get(1, s, t).unwrap().gc - base.get(1, s, t).unwrap().gc).abs();
                worst = worst.max(d);
            }
        }
    }
    outcome(worst < 1e-8, format!("max |F(1,q) - F(1,0)| = {worst:.2e} over uni, bi and q in {{2,4,6,8}}"))
}

fn random_matrix(rng: &mut ChaCha8Rng, r: usize, c: usize) -> Matrix {
    Matrix::from_fn(r, c, |_, _| rng.sample::<f64, _>(StandardNormal))
}

fn random_stable(rng: &mut ChaCha8Rng, m: usize) -> Matrix {
    let a = random_matrix(rng, m, m);
    let target = rng.random_range(0.05..0.95);
    let radius = linalg::spectral_radius(&a).max(1e-12);
    a * (target / radius)
}

fn criterion_3() -> Outcome {
    let t = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let mut worst_residual: f64 = 0.0;
    let mut worst_min_eig = f64::INFINITY;
    let mut worst_recovery: f64 = 0.0;
    let mut failures = Vec::new();
    for case in 0..100 {
        let m = rng.random_range(1..=20);
        let obs = rng.random_range(1..=4);
        let a = random_stable(&mut rng, m);
        let c = random_matrix(&mut rng, obs, m);
        let l = random_matrix(&mut rng, m + obs, m + obs);
        let mut joint = &l * l.transpose() + Matrix::identity(m + obs, m + obs) * 0.01;
        linalg::symmetrize(&mut joint);
        let xi = joint.view((0, 0), (m, m)).into_owned();
        let theta = joint.view((0, m), (m, obs)).into_owned();
        let psi = joint.view((m, m), (obs, obs)).into_owned();
        let ss = SsModel::new(a.clone(), c.clone(), xi, psi, theta).unwrap();
        for opts in [DareOptions::fixed_point(), DareOptions::default()] {
            match solve_dare(&ss, &opts) {
                Ok(sol) => {
                    worst_residual = worst_residual.max(sol.residual);
                    worst_min_eig = worst_min_eig.min(linalg::min_sym_eigenvalue(&sol.p));
                }
                Err(e) => failures.push(format!("case {case} ({:?}): {e}", opts.method)),
            }
        }

        // ISS-derived model: the DARE must return the generating (K, Φ).
        let mut k = random_matrix(&mut rng, m, obs) * 0.5;
        while linalg::spectral_radius(&(&a - &k * &c)) >= 0.95 {
            k *= 0.5;
        }
        let lphi = random_matrix(&mut rng, obs, obs);
        let mut phi = &lphi * lphi.transpose() + Matrix::identity(obs, obs) * 0.1;
        linalg::symmetrize(&mut phi);
        let iss = IssModel::new(a, c, k.clone(), phi.clone()).unwrap();
        for opts in [DareOptions::fixed_point(), DareOptions::default()] {
            match solve_dare(&iss.to_ss(), &opts) {
                Ok(sol) => {
                    let err = linalg::max_abs_diff(&sol.k, &k).max(linalg::max_abs_diff(&sol.phi, &phi));
                    worst_recovery = worst_recovery.max(err);
                }
                Err(e) => failures.push(format!("ISS case {case} ({:?}): {e}", opts.method)),
            }
        }
    }
    let elapsed = t.elapsed();
    let pass = failures.is_empty()
        && worst_residual < 1e-10
        && worst_min_eig > -1e-10
        && worst_recovery < 1e-8
        && within(elapsed, 30);
    let mut detail = format!(
        "max residual {worst_residual:.2e}, min eig(P) {worst_min_eig:.2e}, max (K, Phi) error {worst_recovery:.2e}; {:.2} s",
        elapsed.as_secs_f64()
    );
    if !failures.is_empty() {
        detail.push_str(&format!("; {} solver failures, first: {}", failures.len(), failures[0]));
    }
    outcome(pass, detail)
}

fn criterion_4() -> Outcome {
    // Long finite-order regressions on theoretical autocovariances.
    const LAGS: usize = 400;
    const TERMS: usize = 20_000;
    let mut worst: f64 = 0.0;
    let mut cases = benchmarks()
        .into_iter()
        .map(|(name, cfg)| {
            let model = build_benchmark(&cfg).unwrap();
            let exact = multiscale_gc_exact(&model, 0, &[1]).unwrap();
            let gammas = var_autocovariances(&model, LAGS, TERMS);
            (name, exact, gammas)
        })
        .collect::<Vec<_>>();
    let mix_cfg = SimulationConfig::mixed();
    let mix = build_benchmark(&mix_cfg).unwrap();
    let h = mix_cfg.mixing().unwrap();
    let exact = multiscale_gc_exact_observed(&mix, &h, 0, &[1]).unwrap();
    let gammas = mixed_autocovariances(&var_autocovariances(&mix, LAGS, TERMS), &h);
    cases.push(("mix", exact, gammas));
    let mut detail = Vec::new();
    for (name, exact, gammas) in &cases {
        for (s, t) in [(0, 1), (1, 0)] {
            let oracle = regression_gc(gammas, 2, s, t, LAGS);
            let d = (exact.get(1, s, t).unwrap().gc - oracle).abs();
            worst = worst.max(d);
        }
        detail.push(*name);
    }
    outcome(
        worst < 1e-8,
        format!("max |F_ss - F_yule_walker| = {worst:.2e} over {}", detail.join(", ")),
    )
}

fn criterion_5() -> Outcome {
    let t = Instant::now();
    let mut details = Vec::new();
    let mut pass = true;
    for (fig, coupled) in [(Figure::Fig2, vec![(0, 1)]), (Figure::Fig3, vec![(0, 1), (1, 0)])] {
        let cfg = MonteCarloConfig::for_figure(fig);
        let res = pipeline::monte_carlo(&cfg).unwrap();
        let ss = res.mode(EstimationMode::SsEstimated).unwrap();
        let naive = res.mode(EstimationMode::Naive).unwrap();
        for &(s, tg) in &coupled {
            let mut mae_wins = 0;
            let mut mae_total = 0;
            let mut iqr_wins = 0;
            let mut iqr_total = 0;
            for &tau in cfg.scales.iter().filter(|&&t| t >= 3) {
                let exact = res.exact.get(tau, s, tg).unwrap().gc;
                let err = |v: Vec<f64>| median(&v.iter().map(|x| (x - exact).abs()).collect::<Vec<_>>());
                let iqr = |v: &[f64]| quantile(v, 0.75) - quantile(v, 0.25);
                let (a, b) = (ss.samples(tau, s, tg), naive.samples(tau, s, tg));
                mae_total += 1;
                if err(a.clone()) < err(b.clone()) {
                    mae_wins += 1;
                }
                if tau >= 5 {
                    iqr_total += 1;
                    if iqr(&b) > iqr(&a) {
                        iqr_wins += 1;
                    }
                }
            }
            let ok = 2 * mae_wins > mae_total && iqr_wins == iqr_total;
            pass &= ok;
            details.push(format!(
                "{fig:?} F{}{}: MAE ss<naive at {mae_wins}/{mae_total} scales>=3, IQR naive>ss at {iqr_wins}/{iqr_total} scales>=5",
                s + 1,
                tg + 1
            ));
        }
        if ss.failures + naive.failures > 0 {
            details.push(format!("{fig:?}: {} ss / {} naive failed realizations", ss.failures, naive.failures));
        }
    }
    let elapsed = t.elapsed();
    pass &= within(elapsed, 600);
    details.push(format!("{:.1} s", elapsed.as_secs_f64()));
    outcome(pass, details.join("; "))
}

fn near(found: &[usize], target: usize) -> bool {
    found.iter().any(|&f| f.abs_diff(target) <= 1)
}

fn criterion_6() -> Outcome {
    let t = Instant::now();
    let cfg = MonteCarloConfig::for_figure(Figure::Fig4);
    let res = pipeline::monte_carlo(&cfg).unwrap();
    let est = res.mode(EstimationMode::SsEstimated).unwrap();
    let med = |s: usize, tg: usize| -> Vec<f64> {
        cfg.scales.iter().map(|&tau| median(&est.samples(tau, s, tg))).collect()
    };
    let f21 = med(1, 0);
    let f12 = med(0, 1);
    let peak21 = cfg.scales[argmax(&f21)];
    let maxima12: Vec<usize> = local_maxima(&f12).into_iter().map(|i| cfg.scales[i]).collect();
    let elapsed = t.elapsed();
    let pass = peak21.abs_diff(2) <= 1 && near(&maxima12, 4) && near(&maxima12, 8) && within(elapsed, 900);
    outcome(
        pass,
        format!(
            "median F21 peak at tau {peak21}; median F12 local maxima at {maxima12:?}; {} failed realizations; {:.1} s",
            est.failures,
            elapsed.as_secs_f64()
        ),
    )
}

fn criterion_7() -> Outcome {
    let t = Instant::now();
    let scales: Vec<usize> = (1..=10).collect();
    let config = SurrogateConfig {
        n_surrogates: 100,
        seed: 7,
        ..SurrogateConfig::default()
    };
    let null = pipeline::independent_ar1(2000, 99).unwrap();
    let bands = significance_bands(&null, 6, &scales, 20, &config).unwrap();
    let flagged = bands.fraction_significant();

    let uni_cfg = SimulationConfig {
        n_samples: 2000,
        seed: 5,
        ..SimulationConfig::unidirectional()
    };
    let uni = simulate_benchmark(&uni_cfg).unwrap();
    let ub = significance_bands(&uni, 6, &scales, 20, &config).unwrap();
    let cell = ub.get(2, 0, 1).unwrap();
    let upper = *cell.bands.last().unwrap();
    let elapsed = t.elapsed();
    outcome(
        flagged <= 0.10 && cell.original > upper && within(elapsed, 600),
        format!(
            "null: {:.1}% of cells flagged; uni F12(tau=2) = {:.4} vs 95th band {:.4}; {:.1} s",
            100.0 * flagged,
            cell.original,
            upper,
            elapsed.as_secs_f64()
        ),
    )
}

fn criterion_8() -> Outcome {
    let mut checks = Vec::new();
    let mut pass = true;

    // Irregular sampling over a span of exactly 1094 grid steps of 729.77.
    let dt = 729.77;
    let span = 1094.0 * dt;
    let n_raw = 3000;
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let mut times: Vec<f64> = (0..n_raw).map(|_| rng.random_range(0.0..span)).collect();
    times.push(0.0);
    times.push(span);
    times.sort_by(f64::total_cmp);
    times.dedup();
    let values = Matrix::from_fn(times.len(), 2, |i, j| (times[i] / 1e4 + j as f64).sin());
    let raw = TimeSeriesSet::from_matrix(values).unwrap().with_time(times).unwrap();
    let resampled = resample_uniform(&raw, dt).unwrap();
    pass &= resampled.len() == 1095;
    checks.push(format!("resampled length {}", resampled.len()));

    let line: Vec<f64> = (0..200).map(|i| 1.5 * i as f64 - 40.0).collect();
    let flat = detrend_l1(&line, 2000.0).unwrap();
    let max_resid = flat.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    pass &= max_resid < 1e-6;
    checks.push(format!("detrended line max {max_resid:.1e}"));

    let norm = normalize(&resampled).unwrap();
    let col = norm.column(0);
    let mean = col.iter().sum::<f64>() / col.len() as f64;
    let var = col.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (col.len() - 1) as f64;
    let affine = normalize(&TimeSeriesSet::from_matrix(resampled.values() * 3.0 + Matrix::from_element(resampled.len(), 2, 7.0)).unwrap()).unwrap();
    let affine_err = linalg::max_abs_diff(affine.values(), norm.values());
    pass &= mean.abs() < 1e-12 && (var - 1.0).abs() < 1e-12 && affine_err < 1e-12;
    checks.push(format!("normalized mean {mean:.1e}, var-1 {:.1e}, affine {affine_err:.1e}", var - 1.0));

    // End-to-end analyze on synthetic bivariate data.
    let t = Instant::now();
    let dir = tempfile::tempdir().unwrap();
    let sim = SimulationConfig {
        n_samples: 700,
        seed: 21,
        ..SimulationConfig::unidirectional()
    };
    let data = simulate_benchmark(&sim).unwrap();
    let input = dir.path().join("data.csv");
    let mut csv = String::from("t,x,y\n");
    for i in 0..data.len() {
        let trend = 0.01 * i as f64;
        csv.push_str(&format!("{i},{},{}\n", data.values()[(i, 0)] + trend, data.values()[(i, 1)] - trend));
    }
    std::fs::write(&input, csv).unwrap();
    let mut cfg = AnalysisConfig::new(&input, dir.path().join("out"));
    cfg.csv.time_column = true;
    cfg.scales = (1..=20).collect();
    cfg.surrogates = Some(SurrogateConfig {
        n_surrogates: 100,
        seed: 3,
        ..SurrogateConfig::default()
    });
    cfg.preprocess.detrend = Some(DetrendLambda::Default);
    cfg.preprocess.normalize = true;
    match pipeline::run(&cfg) {
        Ok(report) => {
            let gc = std::fs::read_to_string(dir.path().join("out/gc.csv")).unwrap();
            let mut lines = gc.lines();
            let header = lines.next().unwrap_or_default();
            let rows = lines.count();
            let elapsed = t.elapsed();
            let ok = rows == 40
                && header.ends_with("surr_p05,surr_p50,surr_p95,significant")
                && report.model_order.is_some()
                && within(elapsed, 600);
            pass &= ok;
            checks.push(format!(
                "analyze: {rows} rows, BIC order {:?}, {:.1} s",
                report.model_order,
                elapsed.as_secs_f64()
            ));
        }
        Err(e) => {
            pass = false;
            checks.push(format!("analyze failed: {e}"));
        }
    }
    outcome(pass, checks.join("; "))
}

fn main() {
    let criteria: [Criterion; 8] = [
        ("exact-curve peak locations", criterion_1),
        ("filtering invariance", criterion_2),
        ("DARE correctness", criterion_3),
        ("tau=1 Yule-Walker oracle", criterion_4),
        ("estimator-quality contrast", criterion_5),
        ("multiscale mixing benchmark", criterion_6),
        ("surrogate calibration", criterion_7),
        ("ingestion, preprocessing and end-to-end analyze", criterion_8),
    ];
    let only: Option<usize> = std::env::var("ACCEPTANCE_ONLY").ok().and_then(|v| v.parse().ok());
    let mut failed = 0;
    for (i, (name, run)) in criteria.iter().enumerate() {
        if only.is_some_and(|o| o != i + 1) {
            continue;
        }
        let result = run();
        let status = if result.pass { "PASS" } else { "FAIL" };
        println!("{status} criterion {}: {name}: {}", i + 1, result.detail);
        if !result.pass {
            failed += 1;
        }
    }
    if failed > 0 {
        println!("{failed} acceptance criteria failed");
        std::process::exit(1);
    }
}
