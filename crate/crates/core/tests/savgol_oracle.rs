//! Savitzky-Golay smoothing checked against direct least-squares fits.

use nalgebra::{DMatrix, DVector};
use proptest::prelude::*;
use ruleshift_core::evalkit::{smooth, Edge, SavGol};

/// Fits a degree-`order` polynomial to `x[lo..lo + window]` by least squares
/// and evaluates it at index `at`.
fn lstsq_at(x: &[f64], lo: usize, window: usize, order: usize, at: usize) -> f64 {
    let a = DMatrix::from_fn(window, order + 1, |r, c| ((lo + r) as f64 - at as f64).powi(c as i32));
    let b = DVector::from_iterator(window, x[lo..lo + window].iter().copied());
    let coef = a.svd(true, true).solve(&b, 1e-14).unwrap();
    coef[0]
}

fn oracle(x: &[f64], window: usize, order: usize) -> Vec<f64> {
    let (n, k) = (x.len(), window / 2);
    (0..n)
        .map(|i| {
            let lo = i.saturating_sub(k).min(n - window);
            lstsq_at(x, lo, window, order, i)
        })
        .collect()
}

#[test]
fn cubic_inputs_are_reproduced() {
    let cubic = |t: f64| 0.5 * t * t * t - 2.0 * t * t + 3.0 * t - 7.0;
    let x: Vec<f64> = (0..40).map(|i| cubic(i as f64 * 0.25)).collect();
    for window in [5, 7, 9, 11] {
        let y = smooth(&x, window, 3).unwrap();
        for (a, b) in x.iter().zip(&y) {
            assert!((a - b).abs() <= 1e-10 * (1.0 + a.abs()), "window {window}: {a} vs {b}");
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn matches_least_squares(
        x in proptest::collection::vec(-100.0f64..100.0, 11..60),
        half in 2usize..6,
        order in 0usize..4,
    ) {
        let window = 2 * half + 1;
        prop_assume!(window <= x.len() && order < window);
        let y = SavGol { window, order, edge: Edge::Interpolate }.apply(&x).unwrap();
        for (i, (got, want)) in y.iter().zip(oracle(&x, window, order)).enumerate() {
            prop_assert!((got - want).abs() <= 1e-8 * (1.0 + want.abs()), "i={i}: {got} vs {want}");
        }
    }
}
