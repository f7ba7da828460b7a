use proptest::prelude::*;
use spiralwave::bessel::{derivative_zero, eval_j, eval_j_prime, BesselOrder};

/// Bessel's integral `J_m(x) = (1/π) ∫_0^π cos(mτ - x sin τ) dτ` by the
/// trapezoidal rule, which converges geometrically for this periodic integrand.
fn integral_oracle(m: u32, x: f64) -> f64 {
    let n = 2000;
    let h = std::f64::consts::PI / n as f64;
    let mut sum = 0.0;
    for k in 0..=n {
        let t = k as f64 * h;
        let w = if k == 0 || k == n { 0.5 } else { 1.0 };
        sum += w * (m as f64 * t - x * t.sin()).cos();
    }
    sum * h / std::f64::consts::PI
}

#[test]
fn agrees_with_integral_representation_up_to_100() {
    let mut worst = 0.0f64;
    for m in 0..=10u32 {
        for k in 0..=400 {
            let x = k as f64 * 0.25;
            let err = (eval_j(BesselOrder(m), x).unwrap() - integral_oracle(m, x)).abs();
            worst = worst.max(err);
        }
    }
    assert!(worst < 1e-13, "worst abs error {worst:e}");
}

#[test]
fn derivative_agrees_with_integral_representation() {
    for m in 0..=8u32 {
        for k in 0..=200 {
            let x = k as f64 * 0.5;
            let oracle = if m == 0 {
                -integral_oracle(1, x)
            } else {
                0.5 * (integral_oracle(m - 1, x) - integral_oracle(m + 1, x))
            };
            let err = (eval_j_prime(BesselOrder(m), x).unwrap() - oracle).abs();
            assert!(err < 1e-12, "m={m} x={x} err={err:e}");
        }
    }
}

#[test]
fn zeros_interlace_in_n() {
    for m in 0..=8u32 {
        let mut last = -1.0f64;
        for n in 0..=8 {
            let z: f64 = derivative_zero(BesselOrder(m), n).unwrap();
            assert!(z > last, "m={m} n={n}");
            last = z;
        }
    }
}

proptest! {
    #[test]
    fn three_term_recurrence(x in 1e-3f64..=50.0, m in 1u32..=10) {
        let jm = eval_j(BesselOrder(m), x).unwrap();
        let lo = eval_j(BesselOrder(m - 1), x).unwrap();
        let hi = eval_j(BesselOrder(m + 1), x).unwrap();
        prop_assert!((lo + hi - 2.0 * m as f64 / x * jm).abs() < 1e-10);
    }

    #[test]
    fn derivative_matches_central_difference(x in 0.1f64..=60.0, m in 0u32..=10) {
        let h = 1e-5;
        let fd = (eval_j(BesselOrder(m), x + h).unwrap() - eval_j(BesselOrder(m), x - h).unwrap()) / (2.0 * h);
        let d = eval_j_prime(BesselOrder(m), x).unwrap();
        prop_assert!((fd - d).abs() < 1e-6);
    }
}
