use num_complex::Complex;
use proptest::prelude::*;
use spiralwave::radial::{linearized_modes, residual};
use spiralwave::spectral::critical_point;
use spiralwave::{Complex64, ModeIndex, ModelParams, Nonlinearity, RadialGrid, RadialProfile};

fn profile(m: i64, n: usize, seed: &[f64]) -> RadialProfile {
    let grid = RadialGrid::new(n).unwrap();
    RadialProfile::from_fn(m, grid, |r: f64| {
        let k = (r * 7.0).floor() as usize % (seed.len() / 2);
        Complex::new(
            seed[2 * k] * r.powi(m.unsigned_abs() as i32),
            seed[2 * k + 1] * (1.0 - r * r),
        )
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    // The cubic commutes with phase rotations, so the residual rotates with the profile.
    #[test]
    fn residual_is_gauge_equivariant(
        m in -3i64..=3,
        eta in -1.0f64..1.0,
        alpha in -5.0f64..5.0,
        beta in -5.0f64..5.0,
        phi in 0.0f64..std::f64::consts::TAU,
        seed in prop::collection::vec(-2.0f64..2.0, 8),
    ) {
        let p = ModelParams::new(eta, 1.0).unwrap();
        let f = Nonlinearity::cubic();
        let v = profile(m, 24, &seed);
        let g = Complex64::from_polar(1.0, phi);
        let r0 = residual(&p, alpha, beta, &v, &f).unwrap();
        let r1 = residual(&p, alpha, beta, &v.scaled(g), &f).unwrap();
        let scale = r0.iter().fold(1.0f64, |a, z| a.max(z.norm()));
        for (a, b) in r0.iter().zip(&r1) {
            prop_assert!((a * g - b).norm() <= 1e-12 * scale);
        }
    }
}

#[test]
fn eigenvalues_converge_at_second_order() {
    let p = ModelParams::new(0.4, 1.0).unwrap();
    for m in -3i64..=3 {
        for n in 0..=3usize {
            let exact = critical_point(&p, ModeIndex::new(m, n)).unwrap().lambda();
            let err = |nn: usize| (linearized_modes(&p, m, nn, 4).unwrap()[n] - exact).norm();
            let (e1, e2) = (err(64), err(128));
            if e1 < 1e-12 {
                assert_eq!((m, n), (0, 0));
                continue;
            }
            let order = (e1 / e2).log2();
            assert!((1.7..=2.3).contains(&order), "({m},{n}): order {order}");
        }
    }
}

#[test]
fn single_precision_smoke() {
    let p = spiralwave::spectral::ModelParams::<f32>::new(0.2, 1.0).unwrap();
    let modes = linearized_modes(&p, 1, 64, 2).unwrap();
    let exact = critical_point(&ModelParams::new(0.2, 1.0).unwrap(), ModeIndex::new(1, 0))
        .unwrap()
        .lambda();
    assert!((modes[0].re as f64 - exact.re).abs() < 1e-2 * exact.norm());
    assert!((modes[0].im as f64 - exact.im).abs() < 1e-2 * exact.norm());
}
