use num_complex::Complex;
use proptest::prelude::*;
use spiralwave::degree::{add, coeff, contour_winding, local_invariant, neg, winding_number, DegreeElement, OrbitType};
use spiralwave::spectral::{check_injectivity, enumerate_critical_points, mu_with_s};
use spiralwave::{Complex64, CriticalPoint, ModelParams};

fn element() -> impl Strategy<Value = DegreeElement> {
    prop::collection::vec((-5i64..=5, -10i64..=10), 0..6)
        .prop_map(|terms| DegreeElement::from_terms(terms.into_iter().map(|(m, c)| (OrbitType(m), c))))
}

proptest! {
    #[test]
    fn module_axioms(a in element(), b in element(), c in element()) {
        prop_assert_eq!(add(&add(&a, &b), &c), add(&a, &add(&b, &c)));
        prop_assert_eq!(add(&a, &b), add(&b, &a));
        prop_assert_eq!(add(&a, &DegreeElement::zero()), a.clone());
        prop_assert!(add(&a, &neg(&a)).is_zero());
        prop_assert_eq!(a.clone() - b.clone(), add(&a, &neg(&b)));
    }

    #[test]
    fn coefficients_are_additive(a in element(), b in element(), m in -6i64..=6) {
        let h = OrbitType(m);
        prop_assert_eq!(coeff(&add(&a, &b), h), coeff(&a, h) + coeff(&b, h));
    }
}

fn points(eta: f64) -> Vec<CriticalPoint> {
    enumerate_critical_points(&ModelParams::new(eta, 1.0).unwrap(), 3, 3).unwrap()
}

fn mu_at(p: &ModelParams, c: &CriticalPoint, l: Complex64) -> Complex64 {
    mu_with_s(p, c.mode.m, c.s, l.re, l.im)
}

/// Wrapped argument increments over `samples` equally spaced points.
fn brute_force_winding(f: impl Fn(Complex64) -> Complex64, center: Complex64, radius: f64, samples: usize) -> f64 {
    let at = |k: usize| f(center + Complex::from_polar(radius, std::f64::consts::TAU * k as f64 / samples as f64));
    (0..samples).map(|k| (at(k + 1) / at(k)).arg()).sum::<f64>() / std::f64::consts::TAU
}

#[test]
fn winding_matches_dense_sampling() {
    for eta in [-1.0, 0.0, 0.5] {
        let p = ModelParams::new(eta, 1.0).unwrap();
        for c in points(eta) {
            let w = winding_number(&p, c.mode, c.lambda(), 0.1, 16).unwrap();
            let oracle = brute_force_winding(|l| mu_at(&p, &c, l), c.lambda(), 0.1, 1 << 14);
            assert_eq!(w, 1, "{}", c.mode);
            assert!((oracle - 1.0).abs() < 1e-9, "{}: {oracle}", c.mode);
        }
    }
}

#[test]
fn winding_is_stable_in_radius() {
    for eta in [-1.0, 0.0, 0.5] {
        let p = ModelParams::new(eta, 1.0).unwrap();
        let pts = points(eta);
        for c in &pts {
            let nearest = pts
                .iter()
                .filter(|o| o.mode != c.mode)
                .map(|o| check_injectivity(&[*c, *o]))
                .fold(f64::INFINITY, f64::min);
            let mut tested = 0;
            for k in 0..=12 {
                let radius = 1e-3 * 300f64.powf(k as f64 / 12.0);
                if radius >= nearest {
                    continue;
                }
                assert_eq!(winding_number(&p, c.mode, c.lambda(), radius, 64).unwrap(), 1);
                tested += 1;
            }
            assert!(tested > 0);
            // A contour enclosing no root has winding number zero.
            let away = c.lambda() + Complex64::new(0.5, 0.0);
            assert_eq!(winding_number(&p, c.mode, away, 0.2, 64).unwrap(), 0);
        }
    }
}

#[test]
fn splitting_of_block_pairs() {
    // For a pair of blocks, the degree of det = μ_A μ_B on a disc enclosing
    // both roots, split by orbit type, equals the sum of the singletons.
    let p = ModelParams::new(0.5, 1.0).unwrap();
    let pts = enumerate_critical_points(&p, 3, 5).unwrap();
    let mut tested = 0;
    for (i, a) in pts.iter().enumerate() {
        for b in &pts[i + 1..] {
            let center = (a.lambda() + b.lambda()) / 2.0;
            let radius = 0.5 * (a.lambda() - b.lambda()).norm() + 0.5;
            let clear = pts
                .iter()
                .filter(|o| o.mode != a.mode && o.mode != b.mode)
                .all(|o| (o.lambda() - center).norm() > radius + 0.5);
            if !clear {
                continue;
            }
            let product =
                contour_winding(|l: Complex64| mu_at(&p, a, l) * mu_at(&p, b, l), center, radius, 64).unwrap();
            let wa = contour_winding(|l: Complex64| mu_at(&p, a, l), center, radius, 64).unwrap();
            let wb = contour_winding(|l: Complex64| mu_at(&p, b, l), center, radius, 64).unwrap();
            assert_eq!(product, wa + wb);
            let measured = DegreeElement::from_terms([(OrbitType(a.mode.m), wa), (OrbitType(b.mode.m), wb)]);
            assert_eq!(measured, add(&local_invariant(a.mode), &local_invariant(b.mode)));
            if a.mode.m == b.mode.m {
                assert_eq!(coeff(&measured, OrbitType(a.mode.m)), product);
            }
            tested += 1;
        }
    }
    assert!(tested >= 10, "only {tested} separable pairs");
}
