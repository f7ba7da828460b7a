//! Bifurcation skeleton and branch continuation for rotating spiral waves of
//! the complex Ginzburg–Landau equation
//!
//! ```text
//! (1 + iη) Δu + ω ∂_θ u = (α + iβ) u + f(u)   on the unit disc,  ∂_r u = 0 on r = 1
//! ```
//!
//! All numerics are generic over [`Scalar`] (`f32` or `f64`); the aliases
//! below fix the scalar to `f64`.

// `!(x > y)` is used deliberately so that NaN inputs fail validation.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod bessel;
pub mod continuation;
pub mod degree;
pub mod linalg;
pub mod radial;
pub mod scalar;
pub mod spectral;

pub use scalar::Scalar;

pub use degree::{DegreeElement, OrbitType};
pub use radial::RadialGrid;
pub use spectral::ModeIndex;

pub type Complex64 = num_complex::Complex<f64>;
pub type ModelParams = spectral::ModelParams<f64>;
pub type CriticalPoint = spectral::CriticalPoint<f64>;
pub type DerivativeZeroTable = bessel::DerivativeZeroTable<f64>;
pub type RadialProfile = radial::RadialProfile<f64>;
pub type Nonlinearity = radial::Nonlinearity<f64>;
pub type SolverConfig = radial::SolverConfig<f64>;
pub type NewtonSolution = radial::NewtonSolution<f64>;
pub type PolarField = radial::PolarField<f64>;
pub type ContinuationConfig = continuation::ContinuationConfig<f64>;
pub type BranchPoint = continuation::BranchPoint<f64>;
pub type Branch = continuation::Branch<f64>;
pub type BranchSummary = continuation::BranchSummary<f64>;
