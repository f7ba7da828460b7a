use proptest::prelude::*;
use spiralwave::spectral::{critical_point, mu, mu_with_s};
use spiralwave::{Complex64, ModeIndex, ModelParams};

fn close(a: Complex64, b: Complex64, rel: f64) -> bool {
    (a - b).norm() <= rel * a.norm().max(b.norm()).max(1.0)
}

proptest! {
    // μ is affine in α + iβ with slope 1 / ((1 + iη)(1 + s)).
    #[test]
    fn mu_is_affine(
        eta in -2.0f64..2.0,
        omega in prop_oneof![-3.0f64..-0.1, 0.1f64..3.0],
        m in -4i64..=4,
        s in 0.0f64..200.0,
        a1 in -50.0f64..50.0, b1 in -50.0f64..50.0,
        a2 in -50.0f64..50.0, b2 in -50.0f64..50.0,
    ) {
        let p = ModelParams::new(eta, omega).unwrap();
        let d = Complex64::new(1.0, eta) * (1.0 + s);
        let diff = mu_with_s(&p, m, s, a1, b1) - mu_with_s(&p, m, s, a2, b2);
        prop_assert!(close(diff, Complex64::new(a1 - a2, b1 - b2) / d, 1e-14 * 64.0));
    }

    // Reversing the rotation direction maps mode m to -m.
    #[test]
    fn rotation_reversal_symmetry(
        eta in -2.0f64..2.0,
        omega in 0.1f64..3.0,
        m in -4i64..=4,
        n in 0usize..4,
    ) {
        let p = ModelParams::new(eta, omega).unwrap();
        let q = ModelParams::new(eta, -omega).unwrap();
        let a = critical_point(&p, ModeIndex::new(m, n)).unwrap();
        let b = critical_point(&q, ModeIndex::new(-m, n)).unwrap();
        prop_assert_eq!(a.s, b.s);
        prop_assert!(close(a.lambda(), b.lambda(), 1e-15));
    }
}

#[test]
fn critical_point_is_the_unique_root_nearby() {
    let p = ModelParams::new(0.3, 1.0).unwrap();
    for m in -3i64..=3 {
        for n in 0..4 {
            let mode = ModeIndex::new(m, n);
            let c = critical_point(&p, mode).unwrap();
            assert!(mu(&p, mode, c.alpha, c.beta).unwrap().norm() < 1e-12);
            for k in 0..32 {
                let z = c.lambda() + Complex64::from_polar(1e-3, std::f64::consts::TAU * k as f64 / 32.0);
                assert!(mu(&p, mode, z.re, z.im).unwrap().norm() > 1e-6);
            }
        }
    }
}
