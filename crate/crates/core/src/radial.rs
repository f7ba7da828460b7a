//! Reduced radial boundary-value problem for `u(r, θ) = e^{imθ} v(r)`.
//!
//! With the spiral ansatz the steady problem becomes, for the profile `v`,
//!
//! ```text
//! (1 + iη)(v'' + v'/r − m² v / r²) + iωm v − (α + iβ) v − f(v) = 0,   v'(1) = 0
//! ```
//!
//! discretised with second-order central differences on `r_i = i h`,
//! `h = 1/N`. The Neumann condition uses the ghost value `v_{N+1} = v_{N−1}`.
//! At the origin, `m = 0` keeps `v_0` as an unknown with the symmetric limit
//! `Δv(0) = 2 v''(0)`, while `m ≠ 0` imposes `v_0 = 0`. Unknown profiles
//! therefore live on nodes `0..=N` when `m = 0` and `1..=N` otherwise.

use std::fmt;
use std::sync::Arc;

use num_complex::Complex;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::linalg::{lu_solve, symmetric_tridiagonal_largest, DenseMatrix, LinalgError};
use crate::scalar::Scalar;
use crate::spectral::{ModelParams, SpectralError};

/// Smallest admissible number of radial intervals.
pub const MIN_GRID_POINTS: usize = 16;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum RadialError {
    #[error("invalid argument: {0}")]
    Argument(String),
    #[error("nonlinearity `{id}` rejected: {reason}")]
    Nonlinearity { id: String, reason: String },
    #[error("Newton divergence after {iterations} iterations (last residual {residual:e})")]
    NewtonDivergence { iterations: usize, residual: f64 },
    #[error("singular system: {0}")]
    Singular(LinalgError),
    #[error("eigen-solver failure: {0}")]
    Eigen(LinalgError),
    #[error(transparent)]
    Spectral(#[from] SpectralError),
}

/// Uniform radial grid `r_i = i/N`, `i = 0..=N`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct RadialGrid {
    pub n_points: usize,
}

impl RadialGrid {
    pub fn new(n_points: usize) -> Result<Self, RadialError> {
        if n_points < MIN_GRID_POINTS {
            return Err(RadialError::Argument(format!(
                "grid needs N >= {MIN_GRID_POINTS}, got {n_points}"
            )));
        }
        Ok(RadialGrid { n_points })
    }

    pub fn h<T: Scalar>(&self) -> T {
        T::one() / T::from_index(self.n_points)
    }

    pub fn node<T: Scalar>(&self, i: usize) -> T {
        T::from_index(i) / T::from_index(self.n_points)
    }

    /// Index of the first unknown node for winding number `m`.
    pub fn first_node(m: i64) -> usize {
        usize::from(m != 0)
    }

    /// Number of unknown nodes for winding number `m`.
    pub fn unknowns(&self, m: i64) -> usize {
        self.n_points + 1 - Self::first_node(m)
    }

    /// Radii of the unknown nodes for winding number `m`.
    pub fn active_nodes<T: Scalar>(&self, m: i64) -> Vec<T> {
        (Self::first_node(m)..=self.n_points).map(|i| self.node(i)).collect()
    }
}

/// Complex radial profile `v(r_i)` on the unknown nodes of its winding number.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Scalar")]
pub struct RadialProfile<T> {
    pub m: i64,
    pub grid: RadialGrid,
    pub values: Vec<Complex<T>>,
}

impl<T: Scalar> RadialProfile<T> {
    pub fn new(m: i64, grid: RadialGrid, values: Vec<Complex<T>>) -> Result<Self, RadialError> {
        if values.len() != grid.unknowns(m) {
            return Err(RadialError::Argument(format!(
                "profile has {} values, grid with N = {} and m = {m} needs {}",
                values.len(),
                grid.n_points,
                grid.unknowns(m)
            )));
        }
        if values.iter().any(|v| !v.re.is_finite() || !v.im.is_finite()) {
            return Err(RadialError::Argument("profile has non-finite entries".into()));
        }
        Ok(RadialProfile { m, grid, values })
    }

    pub fn zeros(m: i64, grid: RadialGrid) -> Self {
        RadialProfile {
            m,
            grid,
            values: vec![Complex::new(T::zero(), T::zero()); grid.unknowns(m)],
        }
    }

    /// Samples `g(r)` on the unknown nodes.
    pub fn from_fn(m: i64, grid: RadialGrid, g: impl Fn(T) -> Complex<T>) -> Self {
        RadialProfile {
            m,
            grid,
            values: grid.active_nodes(m).into_iter().map(g).collect(),
        }
    }

    pub fn radii(&self) -> Vec<T> {
        self.grid.active_nodes(self.m)
    }

    /// Values on every node `0..=N`, with `v(0) = 0` filled in for `m ≠ 0`.
    pub fn full_values(&self) -> Vec<Complex<T>> {
        let mut out = Vec::with_capacity(self.grid.n_points + 1);
        if self.m != 0 {
            out.push(Complex::new(T::zero(), T::zero()));
        }
        out.extend_from_slice(&self.values);
        out
    }

    pub fn sup_norm(&self) -> T {
        self.values.iter().fold(T::zero(), |m, v| m.max(v.norm()))
    }

    /// `sqrt(Σ r_i |v_i|² h)`.
    pub fn l2_norm(&self) -> T {
        self.inner(self).re.sqrt()
    }

    /// Weighted inner product `⟨self, other⟩_h = Σ r_i conj(self_i) other_i h`.
    pub fn inner(&self, other: &Self) -> Complex<T> {
        let h = self.grid.h::<T>();
        let first = RadialGrid::first_node(self.m);
        self.values
            .iter()
            .zip(&other.values)
            .enumerate()
            .map(|(k, (a, b))| a.conj() * b * (self.grid.node::<T>(k + first) * h))
            .fold(Complex::new(T::zero(), T::zero()), |acc, x| acc + x)
    }

    pub fn scaled(&self, c: Complex<T>) -> Self {
        RadialProfile {
            m: self.m,
            grid: self.grid,
            values: self.values.iter().map(|v| v * c).collect(),
        }
    }
}

type ScalarMap<T> = Arc<dyn Fn(Complex<T>) -> Complex<T> + Send + Sync>;
type JacobianMap<T> = Arc<dyn Fn(Complex<T>) -> [[T; 2]; 2] + Send + Sync>;

/// Constants of the growth bound `|f(ψ)| < a|ψ|^c + b`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Scalar")]
pub struct GrowthTags<T> {
    pub a: T,
    pub b: T,
    pub c: T,
}

/// Pointwise nonlinearity `f: ℂ → ℂ`.
///
/// Built-ins come with an analytic real Jacobian; custom maps fall back to
/// central differences.
#[derive(Clone)]
pub struct Nonlinearity<T> {
    id: String,
    eval: ScalarMap<T>,
    jacobian: Option<JacobianMap<T>>,
    pub growth: Option<GrowthTags<T>>,
}

impl<T> fmt::Debug for Nonlinearity<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Nonlinearity")
            .field("id", &self.id)
            .finish_non_exhaustive()
    }
}

impl<T: Scalar> Nonlinearity<T> {
    /// `f(u) = -|u|² u`.
    pub fn cubic() -> Self {
        let mut f = Self::polynomial(&[Complex::new(-T::one(), T::zero())]);
        f.id = "cubic".into();
        f
    }

    /// `f(u) = Σ_k c_k |u|^{2k} u` for `k = 1, 2, ...` (`coeffs[0]` is `c_1`).
    pub fn polynomial(coeffs: &[Complex<T>]) -> Self {
        let id = format!(
            "polynomial[{}]",
            coeffs
                .iter()
                .map(|c| format!("{}{:+}i", c.re, c.im))
                .collect::<Vec<_>>()
                .join(",")
        );
        let c_eval: Vec<Complex<T>> = coeffs.to_vec();
        let c_jac = c_eval.clone();
        // g(ρ) = Σ c_k ρ^k, f(u) = g(|u|²) u.
        let g = move |c: &[Complex<T>], rho: T| -> (Complex<T>, Complex<T>) {
            let mut val = Complex::new(T::zero(), T::zero());
            let mut der = Complex::new(T::zero(), T::zero());
            let mut pow = T::one();
            for (k, &ck) in c.iter().enumerate() {
                der += ck * (T::from_index(k + 1) * pow);
                pow *= rho;
                val += ck * pow;
            }
            (val, der)
        };
        let eval: ScalarMap<T> = Arc::new(move |u: Complex<T>| g(&c_eval, u.norm_sqr()).0 * u);
        let jacobian: JacobianMap<T> = Arc::new(move |u: Complex<T>| {
            let (val, der) = g(&c_jac, u.norm_sqr());
            let two = T::lit(2.0);
            let dx = der * u * (two * u.re) + val;
            let dy = der * u * (two * u.im) + val * Complex::new(T::zero(), T::one());
            [[dx.re, dy.re], [dx.im, dy.im]]
        });
        Nonlinearity {
            id,
            eval,
            jacobian: Some(jacobian),
            growth: None,
        }
    }

    /// Arbitrary map; its Jacobian is taken by central differences.
    pub fn custom(id: impl Into<String>, eval: impl Fn(Complex<T>) -> Complex<T> + Send + Sync + 'static) -> Self {
        Nonlinearity {
            id: id.into(),
            eval: Arc::new(eval),
            jacobian: None,
            growth: None,
        }
    }

    pub fn with_growth(mut self, tags: GrowthTags<T>) -> Self {
        self.growth = Some(tags);
        self
    }

    pub fn id(&self) -> &str {
        &self.id
    }

    #[inline]
    pub fn eval(&self, u: Complex<T>) -> Complex<T> {
        (self.eval)(u)
    }

    /// Real 2×2 Jacobian `[[∂Re f/∂x, ∂Re f/∂y], [∂Im f/∂x, ∂Im f/∂y]]`.
    pub fn jacobian(&self, u: Complex<T>) -> [[T; 2]; 2] {
        if let Some(j) = &self.jacobian {
            return j(u);
        }
        let h = T::epsilon().cbrt() * T::one().max(u.norm());
        let two_h = h + h;
        let fx = (self.eval(u + Complex::new(h, T::zero())) - self.eval(u - Complex::new(h, T::zero()))) / two_h;
        let fy = (self.eval(u + Complex::new(T::zero(), h)) - self.eval(u - Complex::new(T::zero(), h))) / two_h;
        [[fx.re, fy.re], [fx.im, fy.im]]
    }

    /// Checks gauge equivariance `f(e^{iφ}z) = e^{iφ} f(z)` and the vanishing
    /// linearisation `|f(z)|/|z| → 0`. A violated growth bound only warns.
    pub fn validate(&self) -> Result<(), RadialError> {
        let reject = |reason: String| RadialError::Nonlinearity {
            id: self.id.clone(),
            reason,
        };
        let mut rng = ChaCha8Rng::seed_from_u64(0x5eed_f00d);
        let tol = T::lit(1e-12).max(T::lit(64.0) * T::epsilon());
        for _ in 0..64 {
            let r = T::lit(rng.gen_range(0.01..3.0));
            let arg = T::lit(rng.gen_range(0.0..std::f64::consts::TAU));
            let phi = T::lit(rng.gen_range(0.0..std::f64::consts::TAU));
            let z = Complex::from_polar(r, arg);
            let rot = Complex::from_polar(T::one(), phi);
            let fz = self.eval(z);
            let err = (self.eval(rot * z) - rot * fz).norm();
            if !(err <= tol * T::one().max(fz.norm())) {
                return Err(reject(format!(
                    "not gauge equivariant: |f(e^(i{phi})z) - e^(i{phi})f(z)| = {err:e} at z = {z}"
                )));
            }
        }
        for dir in [
            Complex::new(T::one(), T::zero()),
            Complex::from_polar(T::one(), T::lit(2.1)),
        ] {
            let ratios: Vec<T> = (2..=8)
                .map(|k| {
                    let z = dir * T::lit(10f64.powi(-k));
                    self.eval(z).norm() / z.norm()
                })
                .collect();
            let increasing = ratios
                .windows(2)
                .any(|w| w[1] > w[0] * (T::one() + T::lit(1e-9)) + T::epsilon());
            let last = *ratios.last().unwrap();
            if !last.is_finite() || increasing || !(last < T::lit(0.5) * ratios[0] || last == T::zero()) {
                return Err(reject(format!(
                    "linearisation at zero does not vanish: |f(z)|/|z| = {:?} for |z| = 1e-2..1e-8",
                    ratios
                        .iter()
                        .map(|r| r.to_f64().unwrap_or(f64::NAN))
                        .collect::<Vec<_>>()
                )));
            }
        }
        if let Some(g) = self.growth {
            for k in 0..20 {
                let z = Complex::new(T::lit(0.5 * k as f64), T::zero());
                if !(self.eval(z).norm() < g.a * z.norm().powf(g.c) + g.b) {
                    log::warn!(
                        "nonlinearity `{}` exceeds its growth bound at |psi| = {}",
                        self.id,
                        z.norm()
                    );
                    break;
                }
            }
        }
        Ok(())
    }
}

/// Tridiagonal discrete radial Laplacian `v'' + v'/r − m² v/r²` on the
/// unknown nodes of winding number `m`.
#[derive(Debug, Clone, PartialEq)]
pub struct RadialLaplacian<T> {
    pub sub: Vec<T>,
    pub diag: Vec<T>,
    pub sup: Vec<T>,
}

impl<T: Scalar> RadialLaplacian<T> {
    pub fn new(grid: RadialGrid, m: i64) -> Self {
        let n = grid.n_points;
        let h = grid.h::<T>();
        let ih2 = T::one() / (h * h);
        let m2 = T::from_int(m * m);
        let first = RadialGrid::first_node(m);
        let k = grid.unknowns(m);
        let mut sub = vec![T::zero(); k];
        let mut diag = vec![T::zero(); k];
        let mut sup = vec![T::zero(); k];
        let two = T::lit(2.0);
        for row in 0..k {
            let i = row + first;
            if i == 0 {
                let c = T::lit(4.0) * ih2;
                diag[row] = -c;
                sup[row] = c;
            } else if i == n {
                sub[row] = two * ih2;
                diag[row] = -two * ih2 - m2;
            } else {
                let r = grid.node::<T>(i);
                let adv = T::one() / (two * r * h);
                sub[row] = if row == 0 { T::zero() } else { ih2 - adv };
                diag[row] = -two * ih2 - m2 / (r * r);
                sup[row] = ih2 + adv;
            }
        }
        RadialLaplacian { sub, diag, sup }
    }

    pub fn len(&self) -> usize {
        self.diag.len()
    }

    pub fn is_empty(&self) -> bool {
        self.diag.is_empty()
    }

    pub fn apply(&self, v: &[Complex<T>]) -> Vec<Complex<T>> {
        let k = self.len();
        (0..k)
            .map(|i| {
                let mut acc = v[i] * self.diag[i];
                if i > 0 {
                    acc += v[i - 1] * self.sub[i];
                }
                if i + 1 < k {
                    acc += v[i + 1] * self.sup[i];
                }
                acc
            })
            .collect()
    }
}

/// Newton/continuation tolerances.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Scalar", default, deny_unknown_fields)]
pub struct SolverConfig<T> {
    pub residual_tol: T,
    pub max_newton_iter: usize,
    /// Initial Newton step factor in `(0, 1]`.
    pub damping: T,
}

impl<T: Scalar> Default for SolverConfig<T> {
    fn default() -> Self {
        SolverConfig {
            residual_tol: T::lit(1e-10),
            max_newton_iter: 25,
            damping: T::one(),
        }
    }
}

impl<T: Scalar> SolverConfig<T> {
    pub fn validate(&self) -> Result<(), RadialError> {
        if !(self.residual_tol > T::zero()) {
            return Err(RadialError::Argument("residual_tol must be positive".into()));
        }
        if self.max_newton_iter < 1 {
            return Err(RadialError::Argument("max_newton_iter must be at least 1".into()));
        }
        if !(self.damping > T::zero() && self.damping <= T::one()) {
            return Err(RadialError::Argument("damping must lie in (0, 1]".into()));
        }
        Ok(())
    }
}

/// Discretised problem for one winding number; shared by the Newton solver
/// and the continuation driver.
pub(crate) struct Discretization<'a, T> {
    pub params: ModelParams<T>,
    pub grid: RadialGrid,
    pub m: i64,
    pub f: &'a Nonlinearity<T>,
    pub lap: RadialLaplacian<T>,
}

impl<'a, T: Scalar> Discretization<'a, T> {
    pub fn new(params: &ModelParams<T>, grid: RadialGrid, m: i64, f: &'a Nonlinearity<T>) -> Self {
        Discretization {
            params: *params,
            grid,
            m,
            f,
            lap: RadialLaplacian::new(grid, m),
        }
    }

    pub fn unknowns(&self) -> usize {
        self.lap.len()
    }

    fn shift(&self, alpha: T, beta: T) -> Complex<T> {
        // iωm − α − iβ
        Complex::new(-alpha, self.params.omega * T::from_int(self.m) - beta)
    }

    pub fn residual(&self, v: &[Complex<T>], alpha: T, beta: T) -> Vec<Complex<T>> {
        let d = self.params.diffusion();
        let c = self.shift(alpha, beta);
        self.lap
            .apply(v)
            .into_iter()
            .zip(v)
            .map(|(lv, &vi)| d * lv + c * vi - self.f.eval(vi))
            .collect()
    }

    /// Fills rows/columns `0..2K` with `∂R/∂v`, column `2K` with `∂R/∂β` and,
    /// when `alpha_col` is set, column `2K + 1` with `∂R/∂α`.
    pub fn fill_jacobian(&self, v: &[Complex<T>], alpha: T, beta: T, jac: &mut DenseMatrix<T>, alpha_col: bool) {
        let k = self.unknowns();
        let eta = self.params.eta;
        let c = self.shift(alpha, beta);
        let mut block = |row: usize, col: usize, a: T| {
            jac.add_to(2 * row, 2 * col, a);
            jac.add_to(2 * row, 2 * col + 1, -eta * a);
            jac.add_to(2 * row + 1, 2 * col, eta * a);
            jac.add_to(2 * row + 1, 2 * col + 1, a);
        };
        for i in 0..k {
            block(i, i, self.lap.diag[i]);
            if i > 0 {
                block(i, i - 1, self.lap.sub[i]);
            }
            if i + 1 < k {
                block(i, i + 1, self.lap.sup[i]);
            }
        }
        for (i, &vi) in v.iter().enumerate() {
            let jf = self.f.jacobian(vi);
            jac.add_to(2 * i, 2 * i, c.re - jf[0][0]);
            jac.add_to(2 * i, 2 * i + 1, -c.im - jf[0][1]);
            jac.add_to(2 * i + 1, 2 * i, c.im - jf[1][0]);
            jac.add_to(2 * i + 1, 2 * i + 1, c.re - jf[1][1]);
            jac.set(2 * i, 2 * k, vi.im);
            jac.set(2 * i + 1, 2 * k, -vi.re);
            if alpha_col {
                jac.set(2 * i, 2 * k + 1, -vi.re);
                jac.set(2 * i + 1, 2 * k + 1, -vi.im);
            }
        }
    }

    /// Weights `r_i h` of the discrete inner product.
    pub fn weights(&self) -> Vec<T> {
        let h = self.grid.h::<T>();
        self.grid.active_nodes::<T>(self.m).into_iter().map(|r| r * h).collect()
    }
}

pub(crate) fn max_norm<T: Scalar>(v: &[Complex<T>]) -> T {
    v.iter().fold(T::zero(), |m, z| m.max(z.norm()))
}

pub(crate) fn pack<T: Scalar>(v: &[Complex<T>], extra: &[T]) -> Vec<T> {
    v.iter()
        .flat_map(|z| [z.re, z.im])
        .chain(extra.iter().copied())
        .collect()
}

pub(crate) fn unpack<T: Scalar>(x: &[T], k: usize) -> Vec<Complex<T>> {
    (0..k).map(|i| Complex::new(x[2 * i], x[2 * i + 1])).collect()
}

/// `Im⟨reference, v⟩_h` and its gradient with respect to `(Re v_i, Im v_i)`.
pub(crate) fn phase_condition<T: Scalar>(weights: &[T], reference: &[Complex<T>], v: &[Complex<T>]) -> T {
    weights
        .iter()
        .zip(reference.iter().zip(v))
        .map(|(&w, (a, b))| w * (a.re * b.im - a.im * b.re))
        .sum()
}

pub(crate) fn fill_phase_row<T: Scalar>(weights: &[T], reference: &[Complex<T>], row: usize, jac: &mut DenseMatrix<T>) {
    for (i, (&w, a)) in weights.iter().zip(reference).enumerate() {
        jac.set(row, 2 * i, -w * a.im);
        jac.set(row, 2 * i + 1, w * a.re);
    }
}

/// Discrete residual of the reduced problem at `(α, β)` for profile `p`.
pub fn residual<T: Scalar>(
    params: &ModelParams<T>,
    alpha: T,
    beta: T,
    p: &RadialProfile<T>,
    f: &Nonlinearity<T>,
) -> Result<Vec<Complex<T>>, RadialError> {
    if p.values.len() != p.grid.unknowns(p.m) {
        return Err(RadialError::Argument(format!(
            "profile length {} inconsistent with grid ({} unknowns)",
            p.values.len(),
            p.grid.unknowns(p.m)
        )));
    }
    Ok(Discretization::new(params, p.grid, p.m, f).residual(&p.values, alpha, beta))
}

/// Leading eigenvalues of the discrete linear operator
/// `L_m v = (1 + iη) Δ_m v + iωm v`, sorted by real part descending.
///
/// The radial Laplacian is a tridiagonal matrix with positive off-diagonal
/// products, hence diagonally similar to a symmetric one with real spectrum
/// `σ_k`; `L_m` is a polynomial in it, so its eigenvalues are exactly
/// `(1 + iη) σ_k + iωm`.
pub fn linearized_modes<T: Scalar>(
    params: &ModelParams<T>,
    m: i64,
    n_points: usize,
    n_requested: usize,
) -> Result<Vec<Complex<T>>, RadialError> {
    let grid = RadialGrid::new(n_points)?;
    if n_requested > n_points / 4 {
        return Err(RadialError::Argument(format!(
            "at most N/4 = {} modes can be requested, got {n_requested}",
            n_points / 4
        )));
    }
    let lap = RadialLaplacian::<T>::new(grid, m);
    let k = lap.len();
    let mut off = Vec::with_capacity(k - 1);
    for i in 0..k - 1 {
        let prod = lap.sup[i] * lap.sub[i + 1];
        if !(prod > T::zero()) {
            let cond = lap.diag.iter().fold(T::zero(), |a, d| a.max(d.abs()))
                / lap.diag.iter().fold(T::infinity(), |a, d| a.min(d.abs()));
            return Err(RadialError::Eigen(LinalgError::Eigen {
                reason: format!("radial operator not symmetrisable at row {i}"),
                condition: cond.to_f64().unwrap_or(f64::NAN),
            }));
        }
        off.push(prod.sqrt());
    }
    let sigma = symmetric_tridiagonal_largest(&lap.diag, &off, n_requested);
    let d = params.diffusion();
    let rot = Complex::new(T::zero(), params.omega * T::from_int(m));
    Ok(sigma.into_iter().map(|s| d * s + rot).collect())
}

/// Result of [`newton_solve`].
#[derive(Debug, Clone, PartialEq)]
pub struct NewtonSolution<T> {
    pub profile: RadialProfile<T>,
    pub beta: T,
    pub iterations: usize,
    /// Max-norm of the discrete residual at the returned solution.
    pub residual: T,
}

/// Solves `residual(v, β) = 0` together with the phase condition
/// `Im⟨phase_ref, v⟩_h = 0` for `(v, β)` at fixed `α` by damped Newton.
#[allow(clippy::too_many_arguments)]
pub fn newton_solve<T: Scalar>(
    params: &ModelParams<T>,
    alpha: T,
    p0: &RadialProfile<T>,
    beta0: T,
    f: &Nonlinearity<T>,
    phase_ref: &RadialProfile<T>,
    cfg: &SolverConfig<T>,
) -> Result<NewtonSolution<T>, RadialError> {
    cfg.validate()?;
    if phase_ref.m != p0.m || phase_ref.grid != p0.grid || phase_ref.values.len() != p0.values.len() {
        return Err(RadialError::Argument(
            "phase reference does not match the predictor".into(),
        ));
    }
    if phase_ref.sup_norm() == T::zero() {
        return Err(RadialError::Argument("phase reference must be nonzero".into()));
    }
    let disc = Discretization::new(params, p0.grid, p0.m, f);
    let k = disc.unknowns();
    let weights = disc.weights();
    let dim = 2 * k + 1;

    let eval = |x: &[T]| -> (Vec<T>, T) {
        let v = unpack(x, k);
        let r = disc.residual(&v, alpha, x[2 * k]);
        let pde = max_norm(&r);
        let mut full = pack(&r, &[]);
        full.push(phase_condition(&weights, &phase_ref.values, &v));
        (full, pde)
    };
    let sup = |r: &[T]| r.iter().fold(T::zero(), |m, v| m.max(v.abs()));

    let mut x = pack(&p0.values, &[beta0]);
    let (mut fx, mut pde) = eval(&x);
    for iter in 0..=cfg.max_newton_iter {
        if pde < cfg.residual_tol && fx[2 * k].abs() < cfg.residual_tol {
            let v = unpack(&x, k);
            return Ok(NewtonSolution {
                profile: RadialProfile {
                    m: p0.m,
                    grid: p0.grid,
                    values: v,
                },
                beta: x[2 * k],
                iterations: iter,
                residual: pde,
            });
        }
        if iter == cfg.max_newton_iter {
            break;
        }
        let mut jac = DenseMatrix::zeros(dim);
        disc.fill_jacobian(&unpack(&x, k), alpha, x[2 * k], &mut jac, false);
        fill_phase_row(&weights, &phase_ref.values, 2 * k, &mut jac);
        let rhs: Vec<T> = fx.iter().map(|&v| -v).collect();
        let (dx, _) = lu_solve(jac, rhs).map_err(RadialError::Singular)?;

        let old = sup(&fx);
        let mut t = cfg.damping;
        let mut trial;
        let mut halvings = 0;
        loop {
            trial = x.iter().zip(&dx).map(|(&a, &d)| a + t * d).collect::<Vec<_>>();
            let (ft, pt) = eval(&trial);
            if sup(&ft) < old || halvings == 8 {
                fx = ft;
                pde = pt;
                break;
            }
            t /= T::lit(2.0);
            halvings += 1;
        }
        x = trial;
        if !pde.is_finite() {
            break;
        }
    }
    Err(RadialError::NewtonDivergence {
        iterations: cfg.max_newton_iter,
        residual: pde.to_f64().unwrap_or(f64::NAN),
    })
}

/// `u(r_i, θ_j) = e^{imθ_j} v(r_i)` on the polar grid `θ_j = 2πj/n_theta`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Scalar")]
pub struct PolarField<T> {
    pub m: i64,
    /// Radii `r_0 = 0, ..., r_N = 1`.
    pub radii: Vec<T>,
    pub thetas: Vec<T>,
    /// `values[i][j] = u(r_i, θ_j)`.
    pub values: Vec<Vec<Complex<T>>>,
}

pub fn reconstruct_field<T: Scalar>(p: &RadialProfile<T>, n_theta: usize) -> Result<PolarField<T>, RadialError> {
    if n_theta < 4 {
        return Err(RadialError::Argument(format!("n_theta must be >= 4, got {n_theta}")));
    }
    let thetas: Vec<T> = (0..n_theta)
        .map(|j| T::TAU() * T::from_index(j) / T::from_index(n_theta))
        .collect();
    // e^{imθ_j} via the integer phase index (m j mod n_theta) so that grid
    // rotations act exactly.
    let nt = n_theta as i64;
    let phases: Vec<Complex<T>> = (0..nt)
        .map(|j| {
            let idx = (p.m * j).rem_euclid(nt);
            Complex::from_polar(T::one(), T::TAU() * T::from_int(idx) / T::from_index(n_theta))
        })
        .collect();
    let radii: Vec<T> = (0..=p.grid.n_points).map(|i| p.grid.node(i)).collect();
    let values = p
        .full_values()
        .into_iter()
        .map(|v| phases.iter().map(|&e| e * v).collect())
        .collect();
    Ok(PolarField {
        m: p.m,
        radii,
        thetas,
        values,
    })
}
