use dysonlab_xlab::stats::{loglog, median, ols, pooled_slope, quartiles};
use proptest::prelude::*;

#[test]
fn median_and_quartiles_follow_linear_interpolation() {
    assert_eq!(median(&[3.0, 1.0, 2.0]), 2.0);
    assert_eq!(median(&[4.0, 1.0, 3.0, 2.0]), 2.5);
    let q = quartiles(&[1.0, 2.0, 3.0, 4.0, 5.0]);
    assert_eq!((q.q1, q.median, q.q3), (2.0, 3.0, 4.0));
    let q = quartiles(&[7.0]);
    assert_eq!((q.q1, q.median, q.q3), (7.0, 7.0, 7.0));
}

#[test]
fn ols_matches_hand_computed_fit() {
    // Means 1.5 and 2.75; sxx = 5, sxy = 5.5, so slope 1.1 and intercept 1.1.
    let x = [0.0, 1.0, 2.0, 3.0];
    let y = [1.0, 3.0, 2.0, 5.0];
    let fit = ols(&x, &y).unwrap();
    assert!((fit.slope - 1.1).abs() < 1e-14);
    assert!((fit.intercept - 1.1).abs() < 1e-14);
    let rss: f64 = x.iter().zip(&y).map(|(a, b)| (b - 1.1 - 1.1 * a).powi(2)).sum();
    let se = (rss / 2.0 / 5.0f64).sqrt();
    assert!((fit.slope_stderr.unwrap() - se).abs() < 1e-14);
    assert_eq!(fit.points, 4);
}

#[test]
fn degenerate_fits_are_absent() {
    assert!(ols(&[1.0], &[2.0]).is_none());
    assert!(ols(&[1.0, 1.0, 1.0], &[2.0, 3.0, 4.0]).is_none());
    let two = ols(&[0.0, 1.0], &[0.0, 2.0]).unwrap();
    assert_eq!(two.slope, 2.0);
    assert!(two.slope_stderr.is_none());
    assert!(loglog(&[1.0], &[1.0]).is_none());
}

#[test]
fn loglog_recovers_a_power_law() {
    let x: Vec<f64> = (0..9).map(|k| f64::powi(2.0, k)).collect();
    let y: Vec<f64> = x.iter().map(|t| 3.0 * t.powf(0.5)).collect();
    let fit = loglog(&x, &y).unwrap();
    assert!((fit.slope - 0.5).abs() < 1e-12);
    assert!(fit.slope_stderr.unwrap() < 1e-12);
}

#[test]
fn pooled_slope_ignores_group_offsets() {
    let x = vec![0.0, 1.0, 2.0];
    let groups = vec![
        (x.clone(), x.iter().map(|v| 1.0 - 0.5 * v).collect()),
        (x.clone(), x.iter().map(|v| 7.0 - 0.5 * v).collect()),
    ];
    let fit = pooled_slope(&groups).unwrap();
    assert!((fit.slope + 0.5).abs() < 1e-14);
    assert!(fit.slope_stderr.unwrap() < 1e-12);
    assert_eq!(fit.points, 6);
    assert!(pooled_slope(&[(vec![1.0], vec![2.0])]).is_none());
}

proptest! {
    #[test]
    fn quartiles_are_ordered_and_bracketed(v in prop::collection::vec(-1e6f64..1e6, 1..60)) {
        let q = quartiles(&v);
        let lo = v.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = v.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        prop_assert!(lo <= q.q1 && q.q1 <= q.median && q.median <= q.q3 && q.q3 <= hi);
    }

    #[test]
    fn ols_is_exact_on_lines(a in -10.0f64..10.0, b in -10.0f64..10.0, n in 3usize..30) {
        let x: Vec<f64> = (0..n).map(|k| k as f64).collect();
        let y: Vec<f64> = x.iter().map(|v| a + b * v).collect();
        let fit = ols(&x, &y).unwrap();
        prop_assert!((fit.slope - b).abs() < 1e-9);
        prop_assert!((fit.intercept - a).abs() < 1e-8);
    }
}
