use gait_core::stats::{
    absolute_errors, bland_altman, mae_euclidean, pearson, shapiro_wilk, LabelSet, PairedSeries,
};
use proptest::prelude::*;
use serde::Deserialize;

#[derive(Deserialize)]
struct SwCase {
    name: String,
    x: Vec<f64>,
    w: f64,
    p: f64,
}

#[test]
fn shapiro_wilk_matches_reference_fixtures() {
    let cases: Vec<SwCase> = serde_json::from_str(include_str!("fixtures/shapiro_wilk.json")).unwrap();
    assert!(cases.iter().any(|c| c.x.len() == 12));
    for c in cases {
        let r = shapiro_wilk(&c.x).unwrap();
        assert!((r.w_statistic - c.w).abs() <= 1e-3, "{}: W {} vs {}", c.name, r.w_statistic, c.w);
        assert!((r.p_value - c.p).abs() <= 5e-3, "{}: p {} vs {}", c.name, r.p_value, c.p);
        assert_eq!(r.n, c.x.len());
    }
}

fn paired(max: usize) -> impl Strategy<Value = (Vec<f64>, Vec<f64>)> {
    (3..=max).prop_flat_map(|n| {
        (prop::collection::vec(-100.0f64..100.0, n), prop::collection::vec(-100.0f64..100.0, n))
    })
}

proptest! {
    #[test]
    fn pearson_affine_invariance((x, y) in paired(40), a in 0.1f64..10.0, b in -50.0f64..50.0) {
        let r = pearson(&x, &y).unwrap();
        let xs: Vec<f64> = x.iter().map(|v| a * v + b).collect();
        prop_assert!((pearson(&xs, &y).unwrap() - r).abs() <= 1e-12);
        let neg: Vec<f64> = y.iter().map(|v| -a * v + b).collect();
        prop_assert!((pearson(&x, &neg).unwrap() + r).abs() <= 1e-12);
        prop_assert!((-1.0..=1.0).contains(&r));
    }

    #[test]
    fn bland_altman_structure((x, y) in paired(40), c in -10.0f64..10.0) {
        let p = PairedSeries::unlabelled(x.clone(), y.clone()).unwrap();
        let r = bland_altman(&p).unwrap();
        prop_assert!(((r.loa_upper - r.loa_lower) - 2.0 * 1.96 * r.sd_diff).abs() <= 1e-12);
        prop_assert!(((r.loa_upper - r.bias) - (r.bias - r.loa_lower)).abs() <= 1e-12);
        prop_assert!(r.loa_lower <= r.bias && r.bias <= r.loa_upper);
        let shifted: Vec<f64> = x.iter().map(|v| v + c).collect();
        let s = bland_altman(&PairedSeries::unlabelled(shifted, y).unwrap()).unwrap();
        prop_assert!((s.bias - r.bias - c).abs() <= 1e-9);
        prop_assert!((s.loa_lower - r.loa_lower - c).abs() <= 1e-9);
        prop_assert!((s.loa_upper - r.loa_upper - c).abs() <= 1e-9);
    }

    #[test]
    fn absolute_errors_symmetric((x, y) in paired(40)) {
        let p = PairedSeries::unlabelled(x, y).unwrap();
        let a = absolute_errors(&p).unwrap();
        let b = absolute_errors(&p.swapped()).unwrap();
        prop_assert_eq!(a.accuracy_mu, b.accuracy_mu);
        prop_assert_eq!(a.precision_sigma, b.precision_sigma);
        prop_assert!(a.accuracy_mu >= 0.0 && a.precision_sigma >= 0.0);
    }

    #[test]
    fn shapiro_wilk_location_scale_invariant(
        x in prop::collection::vec(-100.0f64..100.0, 3..60),
        a in prop_oneof![0.01f64..100.0, -100.0f64..-0.01],
        b in -1000.0f64..1000.0,
    ) {
        prop_assume!(x.iter().any(|v| (v - x[0]).abs() > 1e-3));
        let w0 = shapiro_wilk(&x).unwrap();
        let y: Vec<f64> = x.iter().map(|v| a * v + b).collect();
        let w1 = shapiro_wilk(&y).unwrap();
        prop_assert!((w0.w_statistic - w1.w_statistic).abs() <= 1e-9);
        prop_assert!(w0.w_statistic <= 1.0 && w0.w_statistic > 0.0);
        prop_assert!((0.0..=1.0).contains(&w0.p_value));
    }

    #[test]
    fn mae_is_a_metric_mean(
        pts in prop::collection::vec((-500.0f64..500.0, -500.0f64..500.0, -20.0f64..20.0, -20.0f64..20.0), 1..30),
        (dx, dy) in (-30.0f64..30.0, -30.0f64..30.0),
    ) {
        let a: LabelSet = pts.iter().enumerate().map(|(i, p)| (format!("img{}", i / 4), format!("kp{}", i % 4), p.0, p.1)).collect();
        let b: LabelSet = pts.iter().enumerate().map(|(i, p)| (format!("img{}", i / 4), format!("kp{}", i % 4), p.0 + p.2, p.1 + p.3)).collect();
        let ab = mae_euclidean(&a, &b).unwrap();
        prop_assert!(ab >= 0.0);
        prop_assert_eq!(ab, mae_euclidean(&b, &a).unwrap());
        prop_assert_eq!(mae_euclidean(&a, &a).unwrap(), 0.0);
        // a common offset applied to both sets changes nothing
        let shift = |s: &LabelSet| -> LabelSet { s.iter().map(|((i, k), (x, y))| (i.clone(), k.clone(), x + dx, y + dy)).collect() };
        prop_assert!((mae_euclidean(&shift(&a), &shift(&b)).unwrap() - ab).abs() <= 1e-9);
        // a uniform offset of one set costs exactly its norm
        prop_assert!((mae_euclidean(&a, &shift(&a)).unwrap() - dx.hypot(dy)).abs() <= 1e-9);
    }
}
