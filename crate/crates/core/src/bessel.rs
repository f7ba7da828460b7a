//! Bessel functions of the first kind, zeros of their derivatives and the
//! Neumann eigenvalues of the Laplacian on the unit disc.
//!
//! `J_m` is evaluated from its ascending power series for small arguments
//! and by Miller's backward recurrence (normalised with
//! `J_0 + 2 Σ J_{2k} = 1`) beyond [`SERIES_CROSSOVER`]. Zeros of `J'_m` are
//! bracketed by a sign-change scan with step `π/8` and refined by bisection.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::scalar::Scalar;

/// Arguments at or below this value use the power series.
///
/// Above it the series loses roughly `log10(I_m(x))` digits to cancellation,
/// so the backward recurrence takes over.
pub const SERIES_CROSSOVER: f64 = 4.0;

/// Step of the sign-change scan used to bracket zeros of `J'_m`.
pub const ZERO_SCAN_STEP: f64 = std::f64::consts::PI / 8.0;

/// Absolute bisection width at which a bracketed zero is accepted.
pub const ZERO_TOLERANCE: f64 = 1e-13;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum BesselError {
    #[error("bessel argument must be finite and non-negative, got {0}")]
    Domain(f64),
    #[error("zero {n} of J'_{m} not bracketed below x = {x_max}")]
    ZeroNotBracketed { m: u32, n: usize, x_max: f64 },
}

/// Order `m ≥ 0` of a Bessel function. Signed winding numbers enter via `|m|`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct BesselOrder(pub u32);

impl BesselOrder {
    pub fn from_winding(m: i64) -> Self {
        BesselOrder(m.unsigned_abs() as u32)
    }

    pub fn get(self) -> u32 {
        self.0
    }
}

impl From<u32> for BesselOrder {
    fn from(m: u32) -> Self {
        BesselOrder(m)
    }
}

fn check_arg<T: Scalar>(x: T) -> Result<(), BesselError> {
    if !x.is_finite() || x < T::zero() {
        return Err(BesselError::Domain(x.to_f64().unwrap_or(f64::NAN)));
    }
    Ok(())
}

fn series<T: Scalar>(m: u32, x: T) -> T {
    let half = x / T::lit(2.0);
    // (x/2)^m / m!
    let mut term = T::one();
    for k in 1..=m {
        term = term * half / T::from_index(k as usize);
    }
    if term == T::zero() {
        return T::zero();
    }
    let q = half * half;
    let mut sum = term;
    for k in 1..200usize {
        term = -term * q / (T::from_index(k) * T::from_index(k + m as usize));
        sum += term;
        if term.abs() <= T::epsilon() * sum.abs() * T::lit(0.5) {
            break;
        }
    }
    sum
}

/// `J_0(x) ..= J_{max_order}(x)` by Miller's backward recurrence.
fn miller<T: Scalar>(max_order: u32, x: T) -> Vec<T> {
    let xi = x.to_f64().unwrap_or(0.0).ceil() as usize;
    let top = (max_order as usize).max(xi);
    let mut start = top + (160.0 * top as f64).sqrt() as usize + 20;
    start += start % 2;

    let big = T::max_value().sqrt().sqrt();
    let two = T::lit(2.0);
    let mut out = vec![T::zero(); max_order as usize + 1];
    let mut next = T::zero(); // J_{k+1}
    let mut cur = T::one(); // J_k
    let mut norm = T::zero();
    for k in (1..=start).rev() {
        let prev = two * T::from_index(k) / x * cur - next;
        next = cur;
        cur = prev;
        // cur now holds J_{k-1}
        if cur.abs() > big {
            let inv = T::one() / big;
            cur *= inv;
            next *= inv;
            norm *= inv;
            for v in out.iter_mut() {
                *v *= inv;
            }
        }
        let order = k - 1;
        if order >= 2 && order % 2 == 0 {
            norm += two * cur;
        }
        if order <= max_order as usize {
            out[order] = cur;
        }
    }
    norm += cur;
    for v in out.iter_mut() {
        *v /= norm;
    }
    out
}

/// `J_m(x)` for finite `x ≥ 0`.
pub fn eval_j<T: Scalar>(m: BesselOrder, x: T) -> Result<T, BesselError> {
    check_arg(x)?;
    if x <= T::lit(SERIES_CROSSOVER) {
        return Ok(series(m.0, x));
    }
    Ok(miller(m.0, x)[m.0 as usize])
}

/// `J'_m(x)` from `J'_0 = -J_1` and `J'_m = (J_{m-1} - J_{m+1}) / 2`.
pub fn eval_j_prime<T: Scalar>(m: BesselOrder, x: T) -> Result<T, BesselError> {
    check_arg(x)?;
    let m = m.0;
    if x <= T::lit(SERIES_CROSSOVER) {
        return Ok(if m == 0 {
            -series(1, x)
        } else {
            (series(m - 1, x) - series(m + 1, x)) / T::lit(2.0)
        });
    }
    let seq = miller(m + 1, x);
    Ok(if m == 0 {
        -seq[1]
    } else {
        (seq[m as usize - 1] - seq[m as usize + 1]) / T::lit(2.0)
    })
}

/// Ordered non-negative zeros of `J'_m` under the indexing convention of
/// [`derivative_zero`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Scalar")]
pub struct DerivativeZeroTable<T> {
    pub m: BesselOrder,
    pub zeros: Vec<T>,
    pub requested_count: usize,
}

impl<T: Scalar> DerivativeZeroTable<T> {
    /// Computes the first `count` zeros.
    pub fn compute(m: BesselOrder, count: usize) -> Result<Self, BesselError> {
        let mut zeros = Vec::with_capacity(count);
        let step = T::lit(ZERO_SCAN_STEP);
        let mut a = if m.0 == 0 {
            if count > 0 {
                zeros.push(T::zero());
            }
            step
        } else {
            // J'_m > 0 on (0, m] because the first positive zero exceeds m.
            T::from_index(m.0 as usize)
        };
        let x_max = T::from_index(m.0 as usize) + T::lit(1.5) * T::PI() * T::from_index(count + 3) + T::lit(10.0);
        let mut fa = eval_j_prime(m, a)?;
        while zeros.len() < count {
            if a > x_max {
                return Err(BesselError::ZeroNotBracketed {
                    m: m.0,
                    n: zeros.len(),
                    x_max: x_max.to_f64().unwrap_or(f64::NAN),
                });
            }
            let b = a + step;
            let fb = eval_j_prime(m, b)?;
            if fa == T::zero() {
                zeros.push(a);
            } else if fa * fb < T::zero() {
                zeros.push(bisect(m, a, b, fa)?);
            }
            a = b;
            fa = fb;
        }
        Ok(DerivativeZeroTable {
            m,
            zeros,
            requested_count: count,
        })
    }

    pub fn get(&self, n: usize) -> Option<T> {
        self.zeros.get(n).copied()
    }

    /// Neumann eigenvalues `x_{m,n}^2` for every stored zero.
    pub fn eigenvalues(&self) -> Vec<T> {
        self.zeros.iter().map(|&z| z * z).collect()
    }
}

fn bisect<T: Scalar>(m: BesselOrder, mut a: T, mut b: T, mut fa: T) -> Result<T, BesselError> {
    let two = T::lit(2.0);
    loop {
        let tol = T::lit(ZERO_TOLERANCE).max(two * T::epsilon() * b.abs());
        let mid = (a + b) / two;
        if b - a <= tol || mid <= a || mid >= b {
            return Ok(mid);
        }
        let fm = eval_j_prime(m, mid)?;
        if fm == T::zero() {
            return Ok(mid);
        }
        if fa * fm < T::zero() {
            b = mid;
        } else {
            a = mid;
            fa = fm;
        }
    }
}

/// The `n`-th non-negative zero of `J'_m`.
///
/// For `m = 0`, `n = 0` is the zero at the origin (constant eigenfunction).
/// For `m ≥ 1` the origin is skipped, since `J_m(0·r) ≡ 0` is not an
/// eigenfunction, and `n = 0` is the first positive zero.
pub fn derivative_zero<T: Scalar>(m: BesselOrder, n: usize) -> Result<T, BesselError> {
    let table = DerivativeZeroTable::<T>::compute(m, n + 1)?;
    Ok(table.zeros[n])
}

/// Neumann eigenvalue `s_{m,n}` of `-Δ` on the unit disc for angular order `m`:
/// the square of [`derivative_zero`].
pub fn eigenvalue_s<T: Scalar>(m: BesselOrder, n: usize) -> Result<T, BesselError> {
    let z: T = derivative_zero(m, n)?;
    Ok(z * z)
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Independent oracle: 40-term power series in plain f64.
    fn series40(m: u32, x: f64) -> f64 {
        let mut sum = 0.0;
        for k in 0..40u32 {
            let mut t = (x / 2.0).powi((2 * k + m) as i32);
            for j in 1..=k {
                t /= j as f64;
            }
            for j in 1..=(k + m) {
                t /= j as f64;
            }
            if k % 2 == 1 {
                t = -t;
            }
            sum += t;
        }
        sum
    }

    fn bisect_oracle(f: impl Fn(f64) -> f64, mut a: f64, mut b: f64) -> f64 {
        let mut fa = f(a);
        for _ in 0..200 {
            let mid = 0.5 * (a + b);
            let fm = f(mid);
            if fa * fm <= 0.0 {
                b = mid;
            } else {
                a = mid;
                fa = fm;
            }
        }
        0.5 * (a + b)
    }

    #[test]
    fn values_at_origin() {
        assert_eq!(eval_j(BesselOrder(0), 0.0f64).unwrap(), 1.0);
        assert_eq!(eval_j(BesselOrder(1), 0.0f64).unwrap(), 0.0);
        assert_eq!(eval_j_prime(BesselOrder(0), 0.0f64).unwrap(), 0.0);
        assert_eq!(eval_j_prime(BesselOrder(1), 0.0f64).unwrap(), 0.5);
    }

    #[test]
    fn first_root_of_j0() {
        let root = bisect_oracle(|x| series40(0, x), 2.0, 3.0);
        assert!((root - 2.404_825_557_695_773).abs() < 1e-12);
        let v = eval_j(BesselOrder(0), root).unwrap();
        assert!(v.abs() < 1e-12, "J0(x*) = {v}");
    }

    #[test]
    fn j1_prime_near_first_zero() {
        let v = eval_j_prime(BesselOrder(1), 1.8412f64).unwrap();
        assert!(v.abs() < 1e-4);
    }

    #[test]
    fn first_zero_of_j1_prime_matches_oracle() {
        let oracle = bisect_oracle(|x| 0.5 * (series40(0, x) - series40(2, x)), 1.5, 2.5);
        let z: f64 = derivative_zero(BesselOrder(1), 0).unwrap();
        assert!((z - oracle).abs() < 1e-10, "{z} vs {oracle}");
        assert!((z - 1.8412).abs() < 1e-4);
        let s: f64 = eigenvalue_s(BesselOrder(1), 0).unwrap();
        assert!((s - 3.390).abs() < 1e-3);
    }

    #[test]
    fn zero_indexing_convention() {
        assert_eq!(derivative_zero::<f64>(BesselOrder(0), 0).unwrap(), 0.0);
        assert_eq!(eigenvalue_s::<f64>(BesselOrder(0), 0).unwrap(), 0.0);
        // J'_0 = -J_1, so the first positive zero is j_{1,1}.
        let z1: f64 = derivative_zero(BesselOrder(0), 1).unwrap();
        assert!((z1 - 3.831_705_970_207_512).abs() < 1e-11);
        let z2: f64 = derivative_zero(BesselOrder(0), 2).unwrap();
        assert!(z1 < z2);
        // m = 2 skips the root at the origin.
        let z: f64 = derivative_zero(BesselOrder(2), 0).unwrap();
        assert!((z - 3.054_236_928_227_14).abs() < 1e-11);
    }

    #[test]
    fn rejects_bad_arguments() {
        assert!(matches!(eval_j(BesselOrder(0), f64::NAN), Err(BesselError::Domain(_))));
        assert!(eval_j(BesselOrder(0), f64::INFINITY).is_err());
        assert!(eval_j_prime(BesselOrder(3), -1.0f64).is_err());
    }

    #[test]
    fn zero_table_is_certified_and_increasing() {
        for m in 0..=8u32 {
            let table = DerivativeZeroTable::<f64>::compute(BesselOrder(m), 9).unwrap();
            assert_eq!(table.zeros.len(), 9);
            for w in table.zeros.windows(2) {
                assert!(w[0] < w[1]);
            }
            for &z in &table.zeros {
                let d = eval_j_prime(BesselOrder(m), z).unwrap();
                assert!(d.abs() < 1e-11, "m={m} z={z} J'={d}");
            }
        }
    }

    #[test]
    fn single_precision_instantiation() {
        let z: f32 = derivative_zero(BesselOrder(1), 0).unwrap();
        assert!((z - 1.841_183_8).abs() < 1e-5);
        let j: f32 = eval_j(BesselOrder(0), 10.0).unwrap();
        assert!((j as f64 + 0.245_935_764_451_348_3).abs() < 1e-5);
    }
}
