use proptest::prelude::*;

use msgc::linalg::Matrix;
use msgc::preprocess::{detrend_l1, normalize, resample_uniform};
use msgc::TimeSeriesSet;

fn rel_l2(a: &[f64], b: &[f64]) -> f64 {
    let num: f64 = a.iter().zip(b).map(|(x, y)| (x - y).powi(2)).sum();
    let den: f64 = b.iter().map(|y| y * y).sum();
    (num / den).sqrt()
}

#[test]
fn detrending_recovers_oscillation_on_a_line() {
    let n = 600;
    let osc: Vec<f64> = (0..n).map(|t| 0.3 * (2.0 * std::f64::consts::PI * t as f64 / 25.0).sin()).collect();
    let y: Vec<f64> = osc.iter().enumerate().map(|(t, o)| 2.0 + 0.05 * t as f64 + o).collect();
    let out = detrend_l1(&y, 1e5).unwrap();
    let e = rel_l2(&out, &osc);
    assert!(e < 0.05, "{e:.4}");
}

#[test]
fn detrending_removes_piecewise_linear_trend() {
    let n = 400;
    let osc: Vec<f64> = (0..n).map(|t| 0.2 * (t as f64 * 0.9).sin()).collect();
    let y: Vec<f64> = (0..n)
        .map(|t| {
            let t = t as f64;
            let trend = if t < 200.0 { 0.02 * t } else { 4.0 - 0.01 * (t - 200.0) };
            trend + osc[t as usize]
        })
        .collect();
    // Heavy penalties round off the kink; a moderate one keeps it.
    let out = detrend_l1(&y, 20.0).unwrap();
    assert!(rel_l2(&out, &osc) < 0.05);
}

#[test]
fn uniform_input_resamples_to_itself() {
    let dt = 0.25;
    let time: Vec<f64> = (0..50).map(|i| 3.0 + dt * i as f64).collect();
    let values = Matrix::from_fn(50, 2, |i, j| ((i * (j + 2)) as f64).sin());
    let data = TimeSeriesSet::from_matrix(values.clone()).unwrap().with_time(time).unwrap();
    let out = resample_uniform(&data, dt).unwrap();
    assert_eq!(out.len(), 50);
    assert!((out.values() - &values).abs().max() < 1e-12);
    assert_eq!(out.dt(), Some(dt));
}

#[test]
fn grid_length_is_floor_of_span_over_step_plus_one() {
    let dt = 729.77;
    for (span, expected) in [(1094.0 * dt, 1095), (798_000.0, 1094), (1094.5 * dt, 1095)] {
        let time = vec![0.0, span / 3.0, span];
        let data = TimeSeriesSet::from_matrix(Matrix::from_row_slice(3, 1, &[1.0, 2.0, 4.0]))
            .unwrap()
            .with_time(time)
            .unwrap();
        assert_eq!(resample_uniform(&data, dt).unwrap().len(), expected, "span {span}");
    }
}

#[test]
fn interpolation_is_linear_between_samples() {
    let time = vec![0.0, 1.0, 3.0];
    let data = TimeSeriesSet::from_matrix(Matrix::from_row_slice(3, 1, &[0.0, 2.0, -2.0]))
        .unwrap()
        .with_time(time)
        .unwrap();
    let out = resample_uniform(&data, 0.5).unwrap();
    assert_eq!(out.column(0), vec![0.0, 1.0, 2.0, 1.0, 0.0, -1.0, -2.0]);
}

proptest! {
    #[test]
    fn normalization_is_affine_invariant(
        x in prop::collection::vec(-100.0f64..100.0, 3..60),
        a in prop_oneof![0.01f64..50.0, -50.0f64..-0.01],
        b in -1e3f64..1e3,
    ) {
        let spread = x.iter().cloned().fold(f64::NEG_INFINITY, f64::max) - x.iter().cloned().fold(f64::INFINITY, f64::min);
        prop_assume!(spread > 1e-3);
        let n = x.len();
        let base = TimeSeriesSet::from_matrix(Matrix::from_column_slice(n, 1, &x)).unwrap();
        let y: Vec<f64> = x.iter().map(|v| a.abs() * v + b).collect();
        let shifted = TimeSeriesSet::from_matrix(Matrix::from_column_slice(n, 1, &y)).unwrap();
        let (p, q) = (normalize(&base).unwrap(), normalize(&shifted).unwrap());
        prop_assert!((p.values() - q.values()).abs().max() < 1e-9);
        let mean = p.column(0).iter().sum::<f64>() / n as f64;
        let var = p.column(0).iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
        prop_assert!(mean.abs() < 1e-12 && (var - 1.0).abs() < 1e-12);
    }
}
