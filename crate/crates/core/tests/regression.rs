mod common;

use approx::assert_relative_eq;
use cid_core::regression::{
    fit_simple_ols, predict_interval, t_quantile, ElectionDataset, ElectionRecord, IntervalKind,
};
use proptest::prelude::*;
use statrs::function::gamma::ln_gamma;

use common::hibbs_fit;

/// CDF of Student's t from 0 to `x` by composite Simpson integration of the density.
fn t_cdf_by_quadrature(x: f64, df: f64) -> f64 {
    let norm = (ln_gamma(0.5 * (df + 1.0)) - ln_gamma(0.5 * df)).exp() / (df * std::f64::consts::PI).sqrt();
    let density = |u: f64| norm * (1.0 + u * u / df).powf(-0.5 * (df + 1.0));
    let n = 20_000;
    let h = x / n as f64;
    let mut s = density(0.0) + density(x);
    for i in 1..n {
        let w = if i % 2 == 1 { 4.0 } else { 2.0 };
        s += w * density(i as f64 * h);
    }
    0.5 + s * h / 3.0
}

fn quantile_by_bisection(p: f64, df: f64) -> f64 {
    let (mut lo, mut hi) = (0.0, 50.0);
    for _ in 0..80 {
        let mid = 0.5 * (lo + hi);
        if t_cdf_by_quadrature(mid, df) < p {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

#[test]
fn t_quantile_matches_quadrature_oracle() {
    for (df, p) in [(5.0, 0.975), (14.0, 0.975), (30.0, 0.995)] {
        let level = 2.0 * p - 1.0;
        let q = t_quantile(level, df);
        let oracle = quantile_by_bisection(p, df);
        assert!((q - oracle).abs() < 1e-6, "df {df}, p {p}: {q} vs {oracle}");
    }
}

#[test]
fn hibbs_fit_reproduces_published_line() {
    let fit = hibbs_fit();
    assert_eq!(fit.n, 16);
    assert!((fit.intercept - 46.248).abs() < 0.01);
    assert!((fit.slope - 3.061).abs() < 0.01);
    assert!((fit.sigma2 - 14.16).abs() < 0.01);
}

#[test]
fn hibbs_prediction_at_2024_input() {
    let fit = hibbs_fit();
    let iv = predict_interval(&fit, -0.728, 0.95, IntervalKind::MeanResponse).unwrap();
    assert!((iv.center - 44.0).abs() < 0.1);
    assert!((iv.lower - 39.6).abs() < 0.3);
    assert!((iv.upper - 48.4).abs() < 0.3);
    let wide = predict_interval(&fit, -0.728, 0.95, IntervalKind::NewObservation).unwrap();
    assert!(wide.half_width() > 7.0);
}

#[test]
fn mean_response_width_is_smallest_at_x_mean() {
    let fit = hibbs_fit();
    let at_mean = predict_interval(&fit, fit.x_mean, 0.95, IntervalKind::MeanResponse).unwrap();
    let q = t_quantile(0.95, 14.0);
    assert_relative_eq!(at_mean.half_width(), q * (fit.sigma2 / 16.0).sqrt(), max_relative = 1e-12);
    let grid_min = (0..=2000)
        .map(|i| -4.0 + i as f64 * 0.005)
        .map(|x| (x, predict_interval(&fit, x, 0.95, IntervalKind::MeanResponse).unwrap().half_width()))
        .min_by(|a, b| a.1.total_cmp(&b.1))
        .unwrap();
    assert!((grid_min.0 - fit.x_mean).abs() <= 0.005);
}

fn dataset() -> impl Strategy<Value = ElectionDataset> {
    prop::collection::vec((-5.0..5.0f64, 30.0..70.0f64), 3..25)
        .prop_filter_map("needs x variance", |pts| {
            let recs = pts
                .into_iter()
                .map(|(growth, vote_share)| ElectionRecord { year: 0, growth, vote_share })
                .collect();
            ElectionDataset::new(recs).ok()
        })
        .prop_filter("well spread", |d| {
            let xs: Vec<f64> = d.records().iter().map(|r| r.growth).collect();
            let mean = xs.iter().sum::<f64>() / xs.len() as f64;
            xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() > 1e-3
        })
}

proptest! {
    #[test]
    fn prediction_is_affine(d in dataset(), x0 in -5.0..5.0f64, t in -4.0..4.0f64) {
        let fit = fit_simple_ols(&d).unwrap();
        let a = predict_interval(&fit, x0, 0.95, IntervalKind::MeanResponse).unwrap();
        let b = predict_interval(&fit, x0 + t, 0.95, IntervalKind::MeanResponse).unwrap();
        prop_assert!((b.center - (a.center + fit.slope * t)).abs() < 1e-9 * (1.0 + a.center.abs()));
    }

    #[test]
    fn half_width_convex_and_ordered(d in dataset(), x1 in -6.0..6.0f64, x2 in -6.0..6.0f64) {
        let fit = fit_simple_ols(&d).unwrap();
        let hw = |x: f64, k| predict_interval(&fit, x, 0.9, k).unwrap().half_width();
        let mid = 0.5 * (x1 + x2);
        let m = IntervalKind::MeanResponse;
        prop_assert!(hw(mid, m) <= 0.5 * (hw(x1, m) + hw(x2, m)) + 1e-9);
        prop_assert!(hw(fit.x_mean, m) <= hw(x1, m) + 1e-12);
        if fit.sigma2 > 1e-12 {
            prop_assert!(hw(x1, IntervalKind::NewObservation) > hw(x1, m));
        }
    }

    #[test]
    fn shifting_responses_shifts_intercept(d in dataset(), c in -20.0..20.0f64) {
        let fit = fit_simple_ols(&d).unwrap();
        let shifted = ElectionDataset::new(
            d.records().iter().map(|r| ElectionRecord { vote_share: r.vote_share + c, ..*r }).collect(),
        ).unwrap();
        let g = fit_simple_ols(&shifted).unwrap();
        prop_assert!((g.intercept - (fit.intercept + c)).abs() <= 1e-9 * (1.0 + fit.intercept.abs() + c.abs()));
        prop_assert!((g.slope - fit.slope).abs() <= 1e-9 * (1.0 + fit.slope.abs()));
        prop_assert!((g.sigma2 - fit.sigma2).abs() <= 1e-9 * (1.0 + fit.sigma2));
        let resid: f64 = d.records().iter().map(|r| r.vote_share - fit.predict(r.growth)).sum();
        prop_assert!(resid.abs() <= 1e-9 * d.len() as f64 * 70.0);
    }
}
