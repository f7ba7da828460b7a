//! Pseudo-arclength continuation of spiral-wave branches.
//!
//! Unknowns are `X = (v, β, α)` packed as `[Re v_0, Im v_0, ..., β, α]`.
//! Each corrector solves the discrete residual, the phase condition against
//! the previous profile, and the arclength condition
//! `⟨τ, X − X_prev⟩ = ds` in the inner product
//! `h Σ Re(conj(v) w) + β β' + α α'`.

use num_complex::Complex;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::bessel::{eval_j, BesselError};
use crate::degree::{unboundedness_certificate, DegreeError};
use crate::linalg::{lu_solve, DenseMatrix};
use crate::radial::{
    fill_phase_row, linearized_modes, max_norm, pack, phase_condition, unpack, Discretization, Nonlinearity,
    RadialError, RadialGrid, RadialProfile, SolverConfig,
};
use crate::scalar::Scalar;
use crate::spectral::{critical_point, ModeIndex, ModelParams, SpectralError};

/// LU pivot ratio below which a corrector solve is logged as near-singular.
pub const NEAR_SINGULAR_PIVOT_RATIO: f64 = 1e-12;

/// Accepted steps needing at most this many Newton iterations count as easy.
const EASY_ITERATIONS: usize = 3;
/// Consecutive easy steps before the step size doubles.
const EASY_STEPS_TO_GROW: usize = 4;
/// A point whose sup-norm drops below this fraction of `δ₀` is trivial.
const TRIVIAL_FRACTION: f64 = 0.1;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ContinuationError {
    #[error("invalid continuation config: {0}")]
    Config(String),
    #[error(
        "branch launch failure at mode {mode}: {reason} (the bifurcation may be subcritical in the scanned direction; both tangent orientations were tried)"
    )]
    LaunchFailure { mode: ModeIndex, reason: String },
    #[error("empty branch")]
    EmptyBranch,
    #[error(transparent)]
    Radial(#[from] RadialError),
    #[error(transparent)]
    Spectral(#[from] SpectralError),
    #[error(transparent)]
    Bessel(#[from] BesselError),
    #[error(transparent)]
    Degree(#[from] DegreeError),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Scalar", default, deny_unknown_fields)]
pub struct ContinuationConfig<T> {
    /// Initial arclength step.
    pub ds: T,
    pub ds_min: T,
    pub ds_max: T,
    /// Continuation steps after the launch point; zero yields the launch point only.
    pub max_steps: usize,
    /// Amplitude `δ₀` of the launch predictor.
    pub amplitude_delta0: T,
    /// Sup-norm at which the trace stops.
    pub norm_ceiling: T,
}

impl<T: Scalar> Default for ContinuationConfig<T> {
    fn default() -> Self {
        let delta0 = T::lit(1e-2);
        ContinuationConfig {
            ds: T::lit(5e-3),
            ds_min: T::lit(1e-6),
            ds_max: T::lit(5e-2),
            max_steps: 200,
            amplitude_delta0: delta0,
            norm_ceiling: T::lit(10.0) * delta0,
        }
    }
}

impl<T: Scalar> ContinuationConfig<T> {
    pub fn validate(&self) -> Result<(), ContinuationError> {
        let all_finite = [
            self.ds,
            self.ds_min,
            self.ds_max,
            self.amplitude_delta0,
            self.norm_ceiling,
        ]
        .iter()
        .all(|v| v.is_finite());
        if !all_finite {
            return Err(ContinuationError::Config("non-finite entry".into()));
        }
        if !(T::zero() < self.ds_min && self.ds_min <= self.ds && self.ds <= self.ds_max) {
            return Err(ContinuationError::Config(format!(
                "need 0 < ds_min <= ds <= ds_max, got ds_min = {}, ds = {}, ds_max = {}",
                self.ds_min, self.ds, self.ds_max
            )));
        }
        if self.amplitude_delta0 <= T::zero() {
            return Err(ContinuationError::Config(format!(
                "amplitude_delta0 must be positive, got {}",
                self.amplitude_delta0
            )));
        }
        if self.norm_ceiling <= self.amplitude_delta0 {
            return Err(ContinuationError::Config(format!(
                "norm_ceiling ({}) must exceed amplitude_delta0 ({})",
                self.norm_ceiling, self.amplitude_delta0
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Scalar")]
pub struct BranchPoint<T> {
    pub alpha: T,
    pub beta: T,
    pub profile: RadialProfile<T>,
    pub sup_norm: T,
    pub l2_norm: T,
    /// Max-norm of the discrete residual.
    pub residual: T,
    /// Cumulative arclength from the trivial solution.
    pub arclength: T,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Termination {
    MaxSteps,
    NormCeiling,
    StepFailure,
    ReturnedToTrivial,
}

impl Termination {
    pub fn as_str(self) -> &'static str {
        match self {
            Termination::MaxSteps => "max-steps",
            Termination::NormCeiling => "norm-ceiling",
            Termination::StepFailure => "step-failure",
            Termination::ReturnedToTrivial => "returned-to-trivial",
        }
    }
}

impl std::fmt::Display for Termination {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for Termination {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        [
            Termination::MaxSteps,
            Termination::NormCeiling,
            Termination::StepFailure,
            Termination::ReturnedToTrivial,
        ]
        .into_iter()
        .find(|t| t.as_str() == s)
        .ok_or_else(|| format!("unknown termination tag `{s}`"))
    }
}

/// Corrector solve whose Jacobian was close to singular: a candidate
/// passage through a critical point of the branch.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Scalar")]
pub struct NearSingularEvent<T> {
    /// Index of the point being corrected.
    pub step: usize,
    pub alpha: T,
    pub beta: T,
    pub pivot_ratio: T,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Scalar")]
pub struct Branch<T> {
    pub mode: ModeIndex,
    pub params: ModelParams<T>,
    pub nonlinearity: String,
    pub grid: RadialGrid,
    pub points: Vec<BranchPoint<T>>,
    pub termination: Termination,
    pub near_singular: Vec<NearSingularEvent<T>>,
}

/// Launch predictor `δ₀ J_{|m|}(√s r) / ‖J_{|m|}(√s ·)‖_∞` at the critical point.
/// Returns `(profile, α, β)`.
pub fn initial_predictor<T: Scalar>(
    params: &ModelParams<T>,
    mode: ModeIndex,
    delta0: T,
    grid: RadialGrid,
) -> Result<(RadialProfile<T>, T, T), ContinuationError> {
    params.validate()?;
    let cp = critical_point(params, mode)?;
    let k = cp.s.sqrt();
    let order = mode.order();
    let mut values = Vec::with_capacity(grid.unknowns(mode.m));
    for r in grid.active_nodes::<T>(mode.m) {
        values.push(eval_j(order, k * r)?);
    }
    // Normalised by the grid maximum so the predictor has sup-norm exactly δ₀.
    let peak = values.iter().fold(T::zero(), |a, v| a.max(v.abs()));
    let profile = RadialProfile {
        m: mode.m,
        grid,
        values: values
            .into_iter()
            .map(|v| Complex::new(delta0 * v / peak, T::zero()))
            .collect(),
    };
    Ok((profile, cp.alpha, cp.beta))
}

/// Critical point `(α, β)` of the discretised problem for `mode`: the
/// eigenvalue `(1 + iη) σ_n + iωm` of the discrete linear operator, where
/// `σ_n` approximates `−s_{|m|,n}` to `O(h²)`.
pub fn discrete_critical_point<T: Scalar>(
    params: &ModelParams<T>,
    mode: ModeIndex,
    grid: RadialGrid,
) -> Result<(T, T), ContinuationError> {
    let modes = linearized_modes(params, mode.m, grid.n_points, mode.n + 1)?;
    let lambda = modes[mode.n];
    Ok((lambda.re, lambda.im))
}

/// Arclength geometry and corrector for one mode.
struct Tracer<'a, T> {
    disc: Discretization<'a, T>,
    weights: Vec<T>,
    h: T,
    k: usize,
    solver: &'a SolverConfig<T>,
}

struct Corrected<T> {
    x: Vec<T>,
    iterations: usize,
    residual: T,
    min_pivot_ratio: T,
}

impl<'a, T: Scalar> Tracer<'a, T> {
    fn dot(&self, a: &[T], b: &[T]) -> T {
        let v: T = a[..2 * self.k].iter().zip(&b[..2 * self.k]).map(|(&x, &y)| x * y).sum();
        self.h * v + a[2 * self.k] * b[2 * self.k] + a[2 * self.k + 1] * b[2 * self.k + 1]
    }

    fn norm(&self, a: &[T]) -> T {
        self.dot(a, a).sqrt()
    }

    fn diff(a: &[T], b: &[T]) -> Vec<T> {
        a.iter().zip(b).map(|(&x, &y)| x - y).collect()
    }

    fn profile(&self, x: &[T]) -> Vec<Complex<T>> {
        unpack(x, self.k)
    }

    /// Damped Newton on `[residual; phase; arclength]`.
    fn correct(
        &self,
        predictor: Vec<T>,
        phase_ref: &[Complex<T>],
        tangent: &[T],
        anchor: &[T],
        ds: T,
    ) -> Result<Corrected<T>, RadialError> {
        let k = self.k;
        let dim = 2 * k + 2;
        let ref_scale = max_norm(phase_ref);
        if !(ref_scale > T::zero()) {
            return Err(RadialError::Argument("phase reference must be nonzero".into()));
        }
        let reference: Vec<Complex<T>> = phase_ref.iter().map(|z| z / ref_scale).collect();
        let tol = self.solver.residual_tol;

        let eval = |x: &[T]| -> (Vec<T>, T) {
            let v = unpack(x, k);
            let r = self.disc.residual(&v, x[2 * k + 1], x[2 * k]);
            let pde = max_norm(&r);
            let mut full = pack(&r, &[]);
            full.push(phase_condition(&self.weights, &reference, &v));
            full.push(self.dot(tangent, &Self::diff(x, anchor)) - ds);
            (full, pde)
        };
        let merit = |r: &[T]| r.iter().fold(T::zero(), |m, v| m.max(v.abs()));
        let converged = |fx: &[T], pde: T, x: &[T]| {
            let amp = max_norm(&unpack(x, k));
            pde < tol && fx[2 * k].abs() < T::lit(1e-2) * tol * amp && fx[2 * k + 1].abs() < tol
        };

        let mut x = predictor;
        let (mut fx, mut pde) = eval(&x);
        let mut min_ratio = T::one();
        for iter in 0..=self.solver.max_newton_iter {
            if converged(&fx, pde, &x) {
                return Ok(Corrected {
                    x,
                    iterations: iter,
                    residual: pde,
                    min_pivot_ratio: min_ratio,
                });
            }
            if iter == self.solver.max_newton_iter || !pde.is_finite() {
                break;
            }
            let mut jac = DenseMatrix::zeros(dim);
            self.disc
                .fill_jacobian(&unpack(&x, k), x[2 * k + 1], x[2 * k], &mut jac, true);
            fill_phase_row(&self.weights, &reference, 2 * k, &mut jac);
            for (i, &t) in tangent[..2 * k].iter().enumerate() {
                jac.set(2 * k + 1, i, self.h * t);
            }
            jac.set(2 * k + 1, 2 * k, tangent[2 * k]);
            jac.set(2 * k + 1, 2 * k + 1, tangent[2 * k + 1]);
            let rhs: Vec<T> = fx.iter().map(|&v| -v).collect();
            let (dx, info) = lu_solve(jac, rhs).map_err(RadialError::Singular)?;
            min_ratio = min_ratio.min(info.pivot_ratio);

            let old = merit(&fx);
            let mut t = self.solver.damping;
            let mut halvings = 0;
            loop {
                let trial: Vec<T> = x.iter().zip(&dx).map(|(&a, &d)| a + t * d).collect();
                let (ft, pt) = eval(&trial);
                if merit(&ft) < old || halvings == 8 {
                    x = trial;
                    fx = ft;
                    pde = pt;
                    break;
                }
                t /= T::lit(2.0);
                halvings += 1;
            }
        }
        Err(RadialError::NewtonDivergence {
            iterations: self.solver.max_newton_iter,
            residual: pde.to_f64().unwrap_or(f64::NAN),
        })
    }

    fn point(&self, x: &[T], residual: T, arclength: T, grid: RadialGrid) -> BranchPoint<T> {
        let profile = RadialProfile {
            m: self.disc.m,
            grid,
            values: self.profile(x),
        };
        BranchPoint {
            alpha: x[2 * self.k + 1],
            beta: x[2 * self.k],
            sup_norm: profile.sup_norm(),
            l2_norm: profile.l2_norm(),
            profile,
            residual,
            arclength,
        }
    }
}

/// Traces the branch bifurcating from the critical point of `mode`.
///
/// The launch uses the `+φ` orientation of the eigenfunction and falls back
/// to `−φ` when that fails or does not grow in sup-norm on its first step.
pub fn continue_branch<T: Scalar>(
    params: &ModelParams<T>,
    mode: ModeIndex,
    grid: RadialGrid,
    f: &Nonlinearity<T>,
    cfg: &ContinuationConfig<T>,
    solver: &SolverConfig<T>,
) -> Result<Branch<T>, ContinuationError> {
    params.validate()?;
    cfg.validate()?;
    solver.validate()?;
    let plus = trace(params, mode, grid, f, cfg, solver, T::one());
    let grows = |b: &Branch<T>| b.points.len() < 2 || b.points[1].sup_norm > b.points[0].sup_norm;
    match plus {
        Ok(b) if grows(&b) => Ok(b),
        first => {
            log::info!("mode {mode}: retrying launch with reversed tangent");
            match (first, trace(params, mode, grid, f, cfg, solver, -T::one())) {
                (_, Ok(b)) if grows(&b) => Ok(b),
                (Ok(b), _) => Ok(b),
                (Err(_), Ok(b)) => Ok(b),
                (Err(e), Err(_)) => Err(e),
            }
        }
    }
}

fn launch_failure(mode: ModeIndex, reason: impl std::fmt::Display) -> ContinuationError {
    ContinuationError::LaunchFailure {
        mode,
        reason: reason.to_string(),
    }
}

fn trace<T: Scalar>(
    params: &ModelParams<T>,
    mode: ModeIndex,
    grid: RadialGrid,
    f: &Nonlinearity<T>,
    cfg: &ContinuationConfig<T>,
    solver: &SolverConfig<T>,
    orientation: T,
) -> Result<Branch<T>, ContinuationError> {
    let (pred, ..) = initial_predictor(params, mode, cfg.amplitude_delta0, grid)?;
    // Launch from the grid's own critical point: the continuum one is off by
    // O(h² s), which can exceed the whole α-excursion of the branch at δ₀.
    let (alpha_c, beta_c) = discrete_critical_point(params, mode, grid)?;
    let disc = Discretization::new(params, grid, mode.m, f);
    let k = disc.unknowns();
    let tracer = Tracer {
        weights: disc.weights(),
        disc,
        h: grid.h(),
        k,
        solver,
    };
    let mut near_singular = Vec::new();
    let mut note = |step: usize, c: &Corrected<T>| {
        if c.min_pivot_ratio < T::lit(NEAR_SINGULAR_PIVOT_RATIO) {
            log::debug!(
                "step {step}: near-singular corrector (pivot ratio {:e})",
                c.min_pivot_ratio
            );
            near_singular.push(NearSingularEvent {
                step,
                alpha: c.x[2 * k + 1],
                beta: c.x[2 * k],
                pivot_ratio: c.min_pivot_ratio,
            });
        }
    };

    // Launch: fix the projection onto the eigenfunction at δ₀.
    let pred = pred.scaled(Complex::new(orientation, T::zero()));
    let trivial = pack(&vec![Complex::new(T::zero(), T::zero()); k], &[beta_c, alpha_c]);
    let x_pred = pack(&pred.values, &[beta_c, alpha_c]);
    let offset = Tracer::<T>::diff(&x_pred, &trivial);
    let launch_ds = tracer.norm(&offset);
    let tangent: Vec<T> = offset.iter().map(|&v| v / launch_ds).collect();
    let launch = tracer
        .correct(x_pred, &pred.values, &tangent, &trivial, launch_ds)
        .map_err(|e| launch_failure(mode, e))?;
    note(0, &launch);
    let mut arclength = tracer.norm(&Tracer::<T>::diff(&launch.x, &trivial));
    let mut points = vec![tracer.point(&launch.x, launch.residual, arclength, grid)];

    let mut prev = trivial;
    let mut cur = launch.x;
    let mut ds = cfg.ds;
    let mut easy = 0;
    let trivial_level = T::lit(TRIVIAL_FRACTION) * cfg.amplitude_delta0;
    let mut termination = Termination::MaxSteps;
    for step in 1..=cfg.max_steps {
        let secant = Tracer::<T>::diff(&cur, &prev);
        let len = tracer.norm(&secant);
        let tau: Vec<T> = secant.iter().map(|&v| v / len).collect();
        let phase_ref = tracer.profile(&cur);
        let accepted = loop {
            let x_pred: Vec<T> = cur.iter().zip(&tau).map(|(&c, &t)| c + ds * t).collect();
            match tracer.correct(x_pred.clone(), &phase_ref, &tau, &cur, ds) {
                // A corrector that lands further than one step from its
                // predictor has jumped to another solution curve.
                Ok(c) if tracer.norm(&Tracer::<T>::diff(&c.x, &x_pred)) <= ds => break Some(c),
                Ok(_) => {
                    log::debug!("step {step}: corrector left the step neighbourhood at ds = {ds:e}");
                    ds /= T::lit(2.0);
                    if ds < cfg.ds_min {
                        break None;
                    }
                }
                Err(e) => {
                    log::debug!("step {step}: corrector failed at ds = {ds:e}: {e}");
                    ds /= T::lit(2.0);
                    if ds < cfg.ds_min {
                        break None;
                    }
                }
            }
        };
        let Some(c) = accepted else {
            if step == 1 {
                return Err(launch_failure(mode, "first continuation step failed at ds_min"));
            }
            termination = Termination::StepFailure;
            break;
        };
        note(step, &c);
        arclength += tracer.norm(&Tracer::<T>::diff(&c.x, &cur));
        let point = tracer.point(&c.x, c.residual, arclength, grid);
        log::trace!(
            "step {step}: alpha = {}, beta = {}, sup = {}, newton = {}",
            point.alpha,
            point.beta,
            point.sup_norm,
            c.iterations
        );
        let sup = point.sup_norm;
        points.push(point);
        if c.iterations <= EASY_ITERATIONS {
            easy += 1;
            if easy >= EASY_STEPS_TO_GROW {
                ds = (ds * T::lit(2.0)).min(cfg.ds_max);
                easy = 0;
            }
        } else {
            easy = 0;
        }
        prev = std::mem::replace(&mut cur, c.x);
        if sup < trivial_level {
            termination = Termination::ReturnedToTrivial;
            break;
        }
        if sup >= cfg.norm_ceiling {
            termination = Termination::NormCeiling;
            break;
        }
    }

    Ok(Branch {
        mode,
        params: *params,
        nonlinearity: f.id().to_string(),
        grid,
        points,
        termination,
        near_singular,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Scalar")]
pub struct Range<T> {
    pub min: T,
    pub max: T,
}

impl<T: Scalar> Range<T> {
    fn of(values: impl Iterator<Item = T>) -> Self {
        values.fold(
            Range {
                min: T::infinity(),
                max: T::neg_infinity(),
            },
            |r, v| Range {
                min: r.min.min(v),
                max: r.max.max(v),
            },
        )
    }
}

/// Diagnostics record for a traced branch.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Scalar")]
pub struct BranchSummary<T> {
    pub mode: ModeIndex,
    pub nonlinearity: String,
    pub points: usize,
    pub termination: Termination,
    pub alpha: Range<T>,
    pub beta: Range<T>,
    pub sup_norm: Range<T>,
    pub l2_norm: Range<T>,
    pub max_residual: T,
    pub arclength: T,
    pub sup_norm_increasing: bool,
    pub alpha_increasing: bool,
    pub alpha_decreasing: bool,
    pub near_singular_events: usize,
    /// Unboundedness certificate for the branch's winding number.
    pub certificate: bool,
}

pub fn branch_summary<T: Scalar>(b: &Branch<T>) -> Result<BranchSummary<T>, ContinuationError> {
    let last = b.points.last().ok_or(ContinuationError::EmptyBranch)?;
    let strictly = |get: fn(&BranchPoint<T>) -> T, up: bool| {
        b.points.windows(2).all(|w| {
            if up {
                get(&w[1]) > get(&w[0])
            } else {
                get(&w[1]) < get(&w[0])
            }
        })
    };
    Ok(BranchSummary {
        mode: b.mode,
        nonlinearity: b.nonlinearity.clone(),
        points: b.points.len(),
        termination: b.termination,
        alpha: Range::of(b.points.iter().map(|p| p.alpha)),
        beta: Range::of(b.points.iter().map(|p| p.beta)),
        sup_norm: Range::of(b.points.iter().map(|p| p.sup_norm)),
        l2_norm: Range::of(b.points.iter().map(|p| p.l2_norm)),
        max_residual: b.points.iter().fold(T::zero(), |a, p| a.max(p.residual)),
        arclength: last.arclength,
        sup_norm_increasing: strictly(|p| p.sup_norm, true),
        alpha_increasing: strictly(|p| p.alpha, true),
        alpha_decreasing: strictly(|p| p.alpha, false),
        near_singular_events: b.near_singular.len(),
        certificate: unboundedness_certificate(b.mode.m, &[b.mode])?,
    })
}
