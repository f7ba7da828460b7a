//! Closed-form spectrum of the linearisation at the trivial solution.
//!
//! On the `(m, n)` Fourier–Bessel mode the linearised operator acts as
//! multiplication by
//!
//! ```text
//! μ_{m,n}(α, β) = ((1 + iη) s + α + iβ − iωm) / ((1 + iη)(1 + s)),   s = s_{|m|,n}
//! ```
//!
//! so the critical set is `α = −s`, `β = ωm − ηs`.

use num_complex::Complex;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::bessel::{BesselError, BesselOrder, DerivativeZeroTable};
use crate::scalar::Scalar;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SpectralError {
    #[error("invalid model parameters: {0}")]
    InvalidParams(String),
    #[error(transparent)]
    Bessel(#[from] BesselError),
}

/// Diffusion parameter `η` and rotation frequency `ω ≠ 0`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Scalar")]
pub struct ModelParams<T> {
    pub eta: T,
    pub omega: T,
}

impl<T: Scalar> ModelParams<T> {
    pub fn new(eta: T, omega: T) -> Result<Self, SpectralError> {
        let p = ModelParams { eta, omega };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<(), SpectralError> {
        if !self.eta.is_finite() {
            return Err(SpectralError::InvalidParams(format!(
                "eta must be finite, got {}",
                self.eta
            )));
        }
        if !self.omega.is_finite() || self.omega == T::zero() {
            return Err(SpectralError::InvalidParams(format!(
                "omega = {} violates the non-zero rotational frequency constraint (omega must be finite and != 0)",
                self.omega
            )));
        }
        Ok(())
    }

    /// `1 + iη`.
    pub fn diffusion(&self) -> Complex<T> {
        Complex::new(T::one(), self.eta)
    }
}

/// Winding number `m` (any sign) and radial index `n ≥ 0`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct ModeIndex {
    pub m: i64,
    pub n: usize,
}

impl ModeIndex {
    pub fn new(m: i64, n: usize) -> Self {
        ModeIndex { m, n }
    }

    pub fn order(&self) -> BesselOrder {
        BesselOrder::from_winding(self.m)
    }
}

impl std::fmt::Display for ModeIndex {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "({},{})", self.m, self.n)
    }
}

/// A point `λ_{m,n} = (α_{m,n}, β_{m,n})` of the critical set.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Scalar")]
pub struct CriticalPoint<T> {
    pub mode: ModeIndex,
    /// Neumann eigenvalue `s_{|m|,n}`.
    pub s: T,
    pub alpha: T,
    pub beta: T,
}

impl<T: Scalar> CriticalPoint<T> {
    fn from_s(params: &ModelParams<T>, mode: ModeIndex, s: T) -> Self {
        CriticalPoint {
            mode,
            s,
            alpha: T::zero() - s,
            beta: params.omega * T::from_int(mode.m) - params.eta * s,
        }
    }

    /// `α + iβ`.
    pub fn lambda(&self) -> Complex<T> {
        Complex::new(self.alpha, self.beta)
    }
}

/// Eigenvalue `μ_{m,n}(α, β)` of the linearisation.
pub type ComplexEigenvalue<T> = Complex<T>;

/// `μ` for a mode whose eigenvalue `s` is already known.
pub fn mu_with_s<T: Scalar>(params: &ModelParams<T>, m: i64, s: T, alpha: T, beta: T) -> ComplexEigenvalue<T> {
    let d = params.diffusion();
    let num = d * s + Complex::new(alpha, beta - params.omega * T::from_int(m));
    num / (d * (T::one() + s))
}

pub fn mu<T: Scalar>(
    params: &ModelParams<T>,
    mode: ModeIndex,
    alpha: T,
    beta: T,
) -> Result<ComplexEigenvalue<T>, SpectralError> {
    let s = crate::bessel::eigenvalue_s(mode.order(), mode.n)?;
    Ok(mu_with_s(params, mode.m, s, alpha, beta))
}

pub fn critical_point<T: Scalar>(params: &ModelParams<T>, mode: ModeIndex) -> Result<CriticalPoint<T>, SpectralError> {
    let s = crate::bessel::eigenvalue_s(mode.order(), mode.n)?;
    Ok(CriticalPoint::from_s(params, mode, s))
}

/// All critical points with `|m| ≤ m_max`, `n ≤ n_max`, sorted by decreasing
/// `α` with `(m, n)` lexicographic tie-break.
pub fn enumerate_critical_points<T: Scalar>(
    params: &ModelParams<T>,
    m_max: u32,
    n_max: usize,
) -> Result<Vec<CriticalPoint<T>>, SpectralError> {
    let mut points = Vec::with_capacity((2 * m_max as usize + 1) * (n_max + 1));
    for order in 0..=m_max {
        let table = DerivativeZeroTable::<T>::compute(BesselOrder(order), n_max + 1)?;
        let eigen = table.eigenvalues();
        let signs: &[i64] = if order == 0 { &[1] } else { &[-1, 1] };
        for &sign in signs {
            let m = sign * order as i64;
            for (n, &s) in eigen.iter().enumerate() {
                points.push(CriticalPoint::from_s(params, ModeIndex::new(m, n), s));
            }
        }
    }
    points.sort_by(|a, b| {
        b.alpha
            .partial_cmp(&a.alpha)
            .unwrap_or(std::cmp::Ordering::Equal)
            .then(a.mode.cmp(&b.mode))
    });
    Ok(points)
}

/// Minimum pairwise distance `|λ_i − λ_j|` over distinct entries, or `+∞`
/// when fewer than two points are given.
pub fn check_injectivity<T: Scalar>(points: &[CriticalPoint<T>]) -> T {
    let mut best = T::infinity();
    for (i, a) in points.iter().enumerate() {
        for b in &points[i + 1..] {
            best = best.min((a.lambda() - b.lambda()).norm());
        }
    }
    best
}
