mod common;

use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use common::{filtered_autocovariances, regression_gc, var_autocovariances};
use msgc::gc::{multiscale_gc_estimated, multiscale_gc_exact, multiscale_gc_naive};
use msgc::linalg::Matrix;
use msgc::pipeline::median;
use msgc::rescale::design_fir_hamming;
use msgc::var_model::{build_benchmark, estimate_var, simulate_benchmark, simulate_var, SimulationConfig, VarModel};
use msgc::TimeSeriesSet;

#[test]
fn rescaled_gc_matches_long_regression_on_rescaled_autocovariances() {
    const LAGS: usize = 150;
    for cfg in [SimulationConfig::unidirectional(), SimulationConfig::bidirectional()] {
        let model = build_benchmark(&cfg).unwrap();
        for (q, tau) in [(6, 2), (6, 3), (4, 4), (6, 5)] {
            let exact = multiscale_gc_exact(&model, q, &[tau]).unwrap();
            let b = design_fir_hamming(q, tau).unwrap();
            let gammas = var_autocovariances(&model, tau * LAGS + q, 20_000);
            let filtered = filtered_autocovariances(&gammas, b.coefficients(), tau * LAGS);
            let down: Vec<Matrix> = (0..=LAGS).map(|h| filtered[h * tau].clone()).collect();
            for (s, t) in [(0, 1), (1, 0)] {
                let oracle = regression_gc(&down, 2, s, t, LAGS);
                let f = exact.get(tau, s, t).unwrap().gc;
                assert!((f - oracle).abs() < 1e-6, "q={q} tau={tau} {s}->{t}: {f} vs {oracle}");
            }
        }
    }
}

#[test]
fn unit_scale_matches_brute_force_regressions() {
    let data = simulate_benchmark(&SimulationConfig {
        n_samples: 1_000_000,
        seed: 31,
        ..SimulationConfig::unidirectional()
    })
    .unwrap();
    let full = estimate_var(&data, 2).unwrap().sigma()[(1, 1)];
    let y2 = data.select_channels(&[1]).unwrap();
    // The marginal of y2 is ARMA; a long AR approximates it.
    let restricted = estimate_var(&y2, 30).unwrap().sigma()[(0, 0)];
    let brute = (restricted / full).ln();
    let exact = multiscale_gc_exact(&build_benchmark(&SimulationConfig::unidirectional()).unwrap(), 0, &[1])
        .unwrap()
        .get(1, 0, 1)
        .unwrap()
        .gc;
    assert!((exact - ((3.0 + 5f64.sqrt()) / 4.0).ln()).abs() < 1e-10);
    assert!((brute - exact).abs() < 1e-3, "{brute} vs {exact}");
}

#[test]
fn estimated_medians_track_exact_curve() {
    let cfg = SimulationConfig::unidirectional();
    let scales: Vec<usize> = (1..=5).collect();
    let exact = multiscale_gc_exact(&build_benchmark(&cfg).unwrap(), 6, &scales).unwrap();
    let runs: Vec<_> = (0..100)
        .map(|r| {
            let data = simulate_benchmark(&SimulationConfig { seed: 1000 + r, ..cfg.clone() }).unwrap();
            multiscale_gc_estimated(&data, 6, &scales, 20).unwrap()
        })
        .collect();
    let samples = |tau, s, t| runs.iter().map(|r| r.get(tau, s, t).unwrap().gc).collect::<Vec<_>>();
    let truth = exact.get(2, 0, 1).unwrap().gc;
    let med = median(&samples(2, 0, 1));
    assert!((med / truth - 1.0).abs() < 0.2, "median {med} vs exact {truth}");
    for &tau in &scales {
        let m21 = median(&samples(tau, 1, 0));
        assert!(m21 < 0.02, "tau {tau}: median F21 {m21}");
    }
}

#[test]
fn white_noise_medians_are_small() {
    let scales: Vec<usize> = (1..=6).collect();
    let mut est = Vec::new();
    let mut naive = Vec::new();
    for r in 0..50 {
        let mut rng = ChaCha8Rng::seed_from_u64(r);
        let values = Matrix::from_fn(1000, 2, |_, _| StandardNormal.sample(&mut rng));
        let data = TimeSeriesSet::from_matrix(values).unwrap();
        est.push(multiscale_gc_estimated(&data, 6, &scales, 10).unwrap());
        naive.push(multiscale_gc_naive(&data, 6, &scales, 10).unwrap());
    }
    for results in [&est, &naive] {
        for &tau in &scales {
            for (s, t) in [(0, 1), (1, 0)] {
                let vals: Vec<f64> = results.iter().filter_map(|r| r.get(tau, s, t)).map(|v| v.gc).collect();
                let m = median(&vals);
                assert!(m < 0.02, "{} tau {tau} {s}->{t}: {m}", results[0].mode);
            }
        }
    }
}

fn arb_var(decoupled: bool) -> impl Strategy<Value = VarModel> {
    (1usize..=3, any::<u64>()).prop_map(move |(p, seed)| {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut coefs: Vec<Matrix> = (0..p)
            .map(|_| Matrix::from_fn(2, 2, |_, _| 0.5 * Distribution::<f64>::sample(&StandardNormal, &mut rng)))
            .collect();
        if decoupled {
            for a in &mut coefs {
                a[(0, 1)] = 0.0;
            }
        }
        let sigma = Matrix::from_row_slice(2, 2, &[1.0, 0.3, 0.3, 0.8]);
        // Shrink until stable.
        loop {
            let m = VarModel::new(coefs.clone(), sigma.clone()).unwrap();
            if m.spectral_radius() < 0.9 {
                return m;
            }
            for (k, a) in coefs.iter_mut().enumerate() {
                *a *= 0.8f64.powi(k as i32 + 1);
            }
        }
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn exact_gc_is_nonnegative(model in arb_var(false), q in prop::sample::select(vec![0usize, 2, 4, 6]), tau in 1usize..=6) {
        let res = multiscale_gc_exact(&model, q, &[tau]).unwrap();
        for v in res.scales[0].values().unwrap() {
            prop_assert!(v.gc >= -1e-9, "{v:?}");
        }
    }

    #[test]
    fn no_coupling_means_no_unit_scale_gc(model in arb_var(true), q in prop::sample::select(vec![0usize, 2, 6])) {
        let res = multiscale_gc_exact(&model, q, &[1]).unwrap();
        prop_assert!(res.get(1, 1, 0).unwrap().gc.abs() < 1e-10);
    }
}

#[test]
fn long_realization_estimates_approach_exact_curve() {
    // Coupling only 1 -> 2, but rescaling can create 2 -> 1 GC at tau >= 2.
    let a = Matrix::from_row_slice(2, 2, &[0.6, 0.0, 0.4, 0.5]);
    let model = VarModel::new(vec![a], Matrix::identity(2, 2)).unwrap();
    let scales = [1, 2, 3, 5];
    let exact = multiscale_gc_exact(&model, 6, &scales).unwrap();
    let data = simulate_var(&model, 200_000, 1000, 4).unwrap();
    let est = multiscale_gc_estimated(&data, 6, &scales, 10).unwrap();
    assert!(exact.get(1, 1, 0).unwrap().gc.abs() < 1e-10);
    for tau in scales {
        for (s, t) in [(0, 1), (1, 0)] {
            let (e, x) = (est.get(tau, s, t).unwrap().gc, exact.get(tau, s, t).unwrap().gc);
            assert!((e - x).abs() < 0.005, "tau {tau} {s}->{t}: {e} vs {x}");
        }
    }
}
