//! Orbit-type module algebra, local bifurcation invariants, a contour-based
//! winding-number engine and the unboundedness certificate.
//!
//! Elements live in the free ℤ-module generated by the orbit types `(H_m)`,
//! `H_m = {(e^{imφ}, e^{−iφ})}`. At every critical point `λ_{m,n}` the local
//! invariant is the generator `(H_m)`: its coefficient is the Brouwer degree of
//! `μ_{m,n}` on a small disc around `λ_{m,n}`, which the contour engine
//! measures independently.

use std::collections::BTreeMap;
use std::fmt;
use std::ops::{Add, Neg, Sub};

use num_complex::Complex;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::scalar::Scalar;
use crate::spectral::{mu_with_s, ModeIndex, ModelParams, SpectralError};

/// Largest number of contour samples before giving up.
pub const MAX_CONTOUR_SAMPLES: usize = 1 << 20;
/// Minimum `|f|` tolerated on the contour.
pub const CONTOUR_ROOT_TOL: f64 = 1e-12;
/// Admissible distance of the accumulated winding from an integer.
pub const WINDING_RESIDUAL_BOUND: f64 = 0.25;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum DegreeError {
    #[error("contour hits root: |f| = {min_modulus:e} on the contour")]
    ContourHitsRoot { min_modulus: f64 },
    #[error("non-convergent contour: more than {0} samples required")]
    NonConvergentContour(usize),
    #[error("winding {0} is not within the certified distance of an integer")]
    Uncertified(f64),
    #[error("invalid argument: {0}")]
    Argument(String),
    #[error(transparent)]
    Spectral(#[from] SpectralError),
}

/// Conjugacy class `(H_m)`, labelled by `m`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct OrbitType(pub i64);

impl fmt::Display for OrbitType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "(H_{})", self.0)
    }
}

/// Finite integer combination of orbit types; zero coefficients are never stored.
#[derive(Debug, Clone, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct DegreeElement {
    coefficients: BTreeMap<OrbitType, i64>,
}

impl DegreeElement {
    pub fn zero() -> Self {
        Self::default()
    }

    pub fn generator(h: OrbitType) -> Self {
        Self::from_terms([(h, 1)])
    }

    pub fn from_terms(terms: impl IntoIterator<Item = (OrbitType, i64)>) -> Self {
        let mut out = Self::zero();
        for (h, c) in terms {
            out.add_term(h, c);
        }
        out
    }

    fn add_term(&mut self, h: OrbitType, c: i64) {
        if c == 0 {
            return;
        }
        let entry = self.coefficients.entry(h).or_insert(0);
        *entry += c;
        if *entry == 0 {
            self.coefficients.remove(&h);
        }
    }

    pub fn coeff(&self, h: OrbitType) -> i64 {
        self.coefficients.get(&h).copied().unwrap_or(0)
    }

    pub fn is_zero(&self) -> bool {
        self.coefficients.is_empty()
    }

    pub fn terms(&self) -> impl Iterator<Item = (OrbitType, i64)> + '_ {
        self.coefficients.iter().map(|(&h, &c)| (h, c))
    }

    fn plus(&self, other: &Self) -> Self {
        let mut out = self.clone();
        for (h, c) in other.terms() {
            out.add_term(h, c);
        }
        out
    }

    fn negated(&self) -> Self {
        DegreeElement {
            coefficients: self.coefficients.iter().map(|(&h, &c)| (h, -c)).collect(),
        }
    }
}

impl Add for DegreeElement {
    type Output = DegreeElement;
    fn add(self, rhs: Self) -> Self {
        self.plus(&rhs)
    }
}

impl Sub for DegreeElement {
    type Output = DegreeElement;
    fn sub(self, rhs: Self) -> Self {
        self.plus(&rhs.negated())
    }
}

impl Neg for DegreeElement {
    type Output = DegreeElement;
    fn neg(self) -> Self {
        self.negated()
    }
}

impl std::iter::Sum for DegreeElement {
    fn sum<I: Iterator<Item = Self>>(iter: I) -> Self {
        iter.fold(DegreeElement::zero(), |acc, x| acc + x)
    }
}

impl fmt::Display for DegreeElement {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_zero() {
            return write!(f, "0");
        }
        for (i, (h, c)) in self.terms().enumerate() {
            let sign = if c < 0 { "-" } else { "+" };
            match (i, c.abs()) {
                (0, 1) if c < 0 => write!(f, "-{h}")?,
                (0, 1) => write!(f, "{h}")?,
                (0, a) if c < 0 => write!(f, "-{a}{h}")?,
                (0, a) => write!(f, "{a}{h}")?,
                (_, 1) => write!(f, " {sign} {h}")?,
                (_, a) => write!(f, " {sign} {a}{h}")?,
            }
        }
        Ok(())
    }
}

/// Coefficient of `h` in `elem`, zero when absent.
pub fn coeff(elem: &DegreeElement, h: OrbitType) -> i64 {
    elem.coeff(h)
}

/// Coefficient-wise sum.
pub fn add(a: &DegreeElement, b: &DegreeElement) -> DegreeElement {
    a.plus(b)
}

pub fn neg(a: &DegreeElement) -> DegreeElement {
    a.negated()
}

/// Local bifurcation invariant at `λ_{m,n}`: the generator `(H_m)`.
pub fn local_invariant(mode: ModeIndex) -> DegreeElement {
    DegreeElement::generator(OrbitType(mode.m))
}

/// Winding number of `f` along the circle `|λ − center| = radius`.
///
/// Samples start uniform and any arc whose argument jump reaches `π/2` is
/// bisected until every jump is below it; the accumulated argument divided by
/// `2π` must lie within [`WINDING_RESIDUAL_BOUND`] of an integer.
pub fn contour_winding<T, F>(f: F, center: Complex<T>, radius: T, min_samples: usize) -> Result<i64, DegreeError>
where
    T: Scalar,
    F: Fn(Complex<T>) -> Complex<T>,
{
    if !(radius > T::zero()) || !radius.is_finite() {
        return Err(DegreeError::Argument(format!("radius must be positive, got {radius}")));
    }
    let min_samples = min_samples.max(8);
    let tau = T::TAU();
    let eval = |t: T| f(center + Complex::from_polar(radius, t * tau));
    let root_tol = T::lit(CONTOUR_ROOT_TOL);
    let quarter = T::FRAC_PI_2();

    let mut total = T::zero();
    let mut samples = min_samples;
    let mut min_modulus = T::infinity();
    let check = |v: Complex<T>, min_modulus: &mut T| -> Result<(), DegreeError> {
        let r = v.norm();
        *min_modulus = min_modulus.min(r);
        if !(r > root_tol) {
            return Err(DegreeError::ContourHitsRoot {
                min_modulus: r.to_f64().unwrap_or(f64::NAN),
            });
        }
        Ok(())
    };

    let step = T::one() / T::from_index(min_samples);
    let mut t0 = T::zero();
    let mut v0 = eval(t0);
    check(v0, &mut min_modulus)?;
    for k in 1..=min_samples {
        let t1 = if k == min_samples {
            T::one()
        } else {
            T::from_index(k) * step
        };
        let v1 = if k == min_samples { eval(T::zero()) } else { eval(t1) };
        check(v1, &mut min_modulus)?;
        // Refine [t0, t1] with an explicit stack of pending arcs.
        let mut stack = vec![(t0, v0, t1, v1)];
        while let Some((a, va, b, vb)) = stack.pop() {
            let jump = (vb / va).arg();
            if jump.abs() < quarter {
                total += jump;
                continue;
            }
            samples += 1;
            if samples > MAX_CONTOUR_SAMPLES {
                return Err(DegreeError::NonConvergentContour(MAX_CONTOUR_SAMPLES));
            }
            let mid = (a + b) / T::lit(2.0);
            let vm = eval(mid);
            check(vm, &mut min_modulus)?;
            // Process the left half first.
            stack.push((mid, vm, b, vb));
            stack.push((a, va, mid, vm));
        }
        t0 = t1;
        v0 = v1;
    }
    let w = total / tau;
    let rounded = w.round();
    if (w - rounded).abs() >= T::lit(WINDING_RESIDUAL_BOUND) {
        return Err(DegreeError::Uncertified(w.to_f64().unwrap_or(f64::NAN)));
    }
    Ok(rounded.to_i64().unwrap_or(0))
}

/// Brouwer degree of `λ ↦ μ_{m,n}(λ)` on the disc `|λ − center| < radius`,
/// measured by [`contour_winding`].
pub fn winding_number<T: Scalar>(
    params: &ModelParams<T>,
    mode: ModeIndex,
    center: Complex<T>,
    radius: T,
    min_samples: usize,
) -> Result<i64, DegreeError> {
    let s = crate::bessel::eigenvalue_s(mode.order(), mode.n).map_err(SpectralError::from)?;
    contour_winding(
        |l: Complex<T>| mu_with_s(params, mode.m, s, l.re, l.im),
        center,
        radius,
        min_samples,
    )
}

/// Unboundedness test for a branch with orbit type `(H_m)` whose closure
/// meets the critical points in `branch_modes`: true iff the `(H_m)`
/// coefficient of the summed local invariants is non-zero.
///
/// The verdict is conditional on `branch_modes` being the complete list of
/// critical points met by the branch closure.
pub fn unboundedness_certificate(m: i64, branch_modes: &[ModeIndex]) -> Result<bool, DegreeError> {
    if branch_modes.is_empty() {
        return Err(DegreeError::Argument(
            "branch must meet at least one critical point".into(),
        ));
    }
    if !branch_modes.iter().any(|mode| mode.m == m) {
        return Err(DegreeError::Argument(format!(
            "no critical point with winding number {m} in the supplied set"
        )));
    }
    let total: DegreeElement = branch_modes.iter().map(|&mode| local_invariant(mode)).sum();
    Ok(total.coeff(OrbitType(m)) != 0)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn h(m: i64) -> OrbitType {
        OrbitType(m)
    }

    #[test]
    fn coefficient_lookup() {
        assert_eq!(DegreeElement::zero().coeff(h(3)), 0);
        assert_eq!(DegreeElement::generator(h(2)).coeff(h(2)), 1);
        let e = DegreeElement::from_terms([(h(1), 1), (h(2), 3), (h(1), -1)]);
        assert_eq!(e.coeff(h(1)), 0);
        assert_eq!(e.coeff(h(2)), 3);
        assert_eq!(e.terms().count(), 1);
    }

    #[test]
    fn addition_and_negation() {
        let a = DegreeElement::from_terms([(h(1), 2), (h(-4), -1)]);
        assert_eq!(add(&a, &DegreeElement::zero()), a);
        assert!(add(&a, &neg(&a)).is_zero());
        let g = DegreeElement::generator(h(1));
        assert_eq!(add(&g, &g), DegreeElement::from_terms([(h(1), 2)]));
        assert_eq!(coeff(&(a.clone() - a), h(1)), 0);
    }

    #[test]
    fn display_forms() {
        assert_eq!(DegreeElement::zero().to_string(), "0");
        assert_eq!(DegreeElement::generator(h(2)).to_string(), "(H_2)");
        assert_eq!(DegreeElement::generator(h(-1)).to_string(), "(H_-1)");
        let e = DegreeElement::from_terms([(h(1), 2), (h(3), -1)]);
        assert_eq!(e.to_string(), "2(H_1) - (H_3)");
    }

    #[test]
    fn local_invariants() {
        assert_eq!(local_invariant(ModeIndex::new(2, 1)), DegreeElement::generator(h(2)));
        assert_eq!(local_invariant(ModeIndex::new(0, 0)), DegreeElement::generator(h(0)));
        for m in -3..=3 {
            for m2 in -3..=3 {
                let c = local_invariant(ModeIndex::new(m2, 4)).coeff(h(m));
                assert_eq!(c, i64::from(m == m2));
            }
        }
    }

    #[test]
    fn winding_examples() {
        let p = ModelParams::new(0.5f64, 1.0).unwrap();
        let mode = ModeIndex::new(1, 0);
        let cp = crate::spectral::critical_point(&p, mode).unwrap();
        let w = winding_number(&p, mode, cp.lambda(), 0.1, 16).unwrap();
        assert_eq!(w, 1);
        let far = cp.lambda() + Complex::new(10.0, 0.0);
        assert_eq!(winding_number(&p, mode, far, 0.1, 16).unwrap(), 0);
    }

    #[test]
    fn winding_errors() {
        let p = ModelParams::new(0.0f64, 1.0).unwrap();
        let mode = ModeIndex::new(0, 0);
        // Root exactly on the contour: λ = 0 lies on |λ - 1| = 1.
        let err = winding_number(&p, mode, Complex::new(1.0, 0.0), 1.0, 16).unwrap_err();
        assert!(matches!(err, DegreeError::ContourHitsRoot { .. }));
        assert!(winding_number(&p, mode, Complex::new(0.0, 0.0), -1.0, 16).is_err());
        // A sign flip across the real axis never resolves under bisection.
        let flip = |z: Complex<f64>| Complex::new(if z.im >= 0.0 { 1.0 } else { -1.0 }, 0.0);
        let err = contour_winding(flip, Complex::new(0.0, 0.0), 1.0, 8).unwrap_err();
        assert!(matches!(err, DegreeError::NonConvergentContour(_)));
    }

    #[test]
    fn winding_of_monomials() {
        for k in -5i32..=5 {
            let w = contour_winding(|z: Complex<f64>| z.powi(k), Complex::new(0.0, 0.0), 1.0, 8).unwrap();
            assert_eq!(w, k as i64);
        }
    }

    #[test]
    fn certificate() {
        let one = [ModeIndex::new(1, 0)];
        assert!(unboundedness_certificate(1, &one).unwrap());
        let three = [ModeIndex::new(1, 0), ModeIndex::new(2, 3), ModeIndex::new(2, 4)];
        assert!(unboundedness_certificate(1, &three).unwrap());
        assert!(unboundedness_certificate(2, &[ModeIndex::new(2, 3)]).unwrap());
        assert!(unboundedness_certificate(0, &[]).is_err());
        assert!(unboundedness_certificate(5, &one).is_err());
    }

    #[test]
    fn single_precision_winding() {
        let p = ModelParams::new(0.0f32, 1.0).unwrap();
        let mode = ModeIndex::new(2, 0);
        let cp = crate::spectral::critical_point(&p, mode).unwrap();
        assert_eq!(winding_number(&p, mode, cp.lambda(), 0.1f32, 16).unwrap(), 1);
    }
}
