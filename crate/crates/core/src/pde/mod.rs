//! Finite-volume solvers for `(∂_τ − Δ + b·∇)u = 0, u(s) = h`, with the
//! gradient energy functionals tracked along the way.
//!
//! Both solvers are monotone: explicit MUSCL/minmod upwinding for the drift
//! followed by an implicit diffusion step. Under their step-size rules the
//! discrete maximum principle holds exactly.

mod cartesian;
mod cauchy;
mod diagnostics;
mod radial;
pub mod tridiag;
mod verify;

use serde::{Deserialize, Serialize};

pub use cartesian::solve_cartesian;
pub use cauchy::{approximation_cauchy_check, CauchyConfig, CauchyRow, CauchyTable, CAUCHY_HEADER};
pub use diagnostics::{
    cartesian_functionals, functional_diagnostics, grad_norms, radial_functionals, Diagnostics, Functionals,
    NormTrace, NORM_TRACE_HEADER,
};
pub use radial::{solve_radial, stable_dt_radial};
pub use verify::{
    sobolev_constant, verify_gradient_bound, GradientBoundReport, VerificationStatus, Violation, ViolationKind,
    MONOTONE_SLACK,
};

use crate::error::{domain, Error, Result};
use crate::grid::RadialGrid;
use crate::scalar::Real;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Scheme {
    /// Explicit upwind drift, implicit diffusion. Monotone.
    Imex,
    /// Centered drift and diffusion, trapezoidal in time. Second order,
    /// not monotone.
    CrankNicolson,
}

impl std::str::FromStr for Scheme {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "imex" => Ok(Scheme::Imex),
            "crank_nicolson" | "cn" => Ok(Scheme::CrankNicolson),
            other => Err(Error::Parse(format!("unknown scheme `{other}`"))),
        }
    }
}

/// `u(τ, ·)` on the solver's grid.
#[derive(Debug, Clone, PartialEq)]
pub struct SolutionField<T> {
    pub tau: T,
    pub values: Vec<T>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolveOptions {
    /// Exponent of the tracked functionals, `q > 2`.
    pub q: f64,
    /// Times at which to keep snapshots; rounded to the step grid. Empty
    /// means start and end.
    pub snapshot_times: Vec<f64>,
    /// Record the trace every `trace_stride` steps (and at the last step).
    pub trace_stride: usize,
}

impl SolveOptions {
    pub fn new(q: f64) -> Self {
        SolveOptions { q, snapshot_times: Vec::new(), trace_stride: 1 }
    }

    pub fn snapshots(mut self, times: Vec<f64>) -> Self {
        self.snapshot_times = times;
        self
    }

    pub fn stride(mut self, stride: usize) -> Self {
        self.trace_stride = stride.max(1);
        self
    }
}

/// Bookkeeping of a finished solve.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SolveStats {
    pub steps: usize,
    pub dt: f64,
    /// Smallest and largest value of `u` over every step.
    pub min_value: f64,
    pub max_value: f64,
    pub initial_min: f64,
    pub initial_max: f64,
    /// `∫ |∂_ν u|` over the outer boundary and the time span.
    pub boundary_flux: f64,
    pub flux_limit: f64,
}

impl SolveStats {
    pub fn maximum_principle_holds(&self) -> bool {
        self.min_value >= self.initial_min.min(0.0) && self.max_value <= self.initial_max.max(0.0)
    }
}

#[derive(Debug, Clone)]
pub struct Solution<T, G> {
    pub grid: G,
    pub snapshots: Vec<SolutionField<T>>,
    pub trace: NormTrace<T>,
    pub stats: SolveStats,
}

/// Fraction of the initial mass allowed to leave through the outer boundary.
pub const FLUX_TOLERANCE: f64 = 1e-6;

/// Uniform time line shared by both solvers.
pub(crate) struct TimeLine<T> {
    pub s: T,
    pub dt: T,
    pub steps: usize,
    pub snapshot_steps: Vec<usize>,
    pub stride: usize,
}

impl<T: Real> TimeLine<T> {
    pub fn new(s: T, t: T, dt: T, opts: &SolveOptions) -> Result<Self> {
        if !(t > s) || !(dt > T::zero()) || !s.is_finite() || !t.is_finite() {
            return domain("time span needs s < t and dt > 0");
        }
        if !(opts.q > 2.0) {
            return domain("functional exponent q must exceed 2");
        }
        let span = (t - s).f64();
        let steps = ((span / dt.f64()) * (1.0 - 1e-12)).ceil().max(1.0) as usize;
        let dt = (t - s) / T::from_usize_lossy(steps);
        let requested = if opts.snapshot_times.is_empty() { vec![s.f64(), t.f64()] } else { opts.snapshot_times.clone() };
        let mut snapshot_steps = Vec::with_capacity(requested.len());
        for tau in requested {
            if tau < s.f64() - 1e-12 || tau > t.f64() + 1e-12 {
                return domain(format!("snapshot time {tau} outside the solve span"));
            }
            let k = ((tau - s.f64()) / dt.f64()).round() as usize;
            snapshot_steps.push(k.min(steps));
        }
        snapshot_steps.sort_unstable();
        snapshot_steps.dedup();
        Ok(TimeLine { s, dt, steps, snapshot_steps, stride: opts.trace_stride.max(1) })
    }

    pub fn time(&self, k: usize) -> T {
        self.s + self.dt * T::from_usize_lossy(k)
    }

    pub fn traced(&self, k: usize) -> bool {
        k % self.stride == 0 || k == self.steps
    }

    pub fn snapshot(&self, k: usize) -> bool {
        self.snapshot_steps.binary_search(&k).is_ok()
    }
}

/// Running extremes and non-finite detection.
pub(crate) fn extremes<T: Real>(u: &[T]) -> Result<(f64, f64)> {
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for v in u {
        let v = v.f64();
        if !v.is_finite() {
            return Err(Error::Stability("solution became non-finite".into()));
        }
        lo = lo.min(v);
        hi = hi.max(v);
    }
    Ok((lo, hi))
}

#[inline]
pub(crate) fn minmod<T: Real>(a: T, b: T) -> T {
    if a * b <= T::zero() {
        T::zero()
    } else if a.abs() < b.abs() {
        a
    } else {
        b
    }
}

/// Upwind MUSCL increment `ν (u_{i+½} − u_{i−½})` from the five-point
/// stencil `[u_{i-2}, …, u_{i+2}]` with `ν = dt v/Δx`.
#[inline]
pub(crate) fn muscl_increment<T: Real>(st: [T; 5], nu: T) -> T {
    let half = T::lit(0.5);
    let s = |j: usize| minmod(st[j] - st[j - 1], st[j + 1] - st[j]);
    if nu > T::zero() {
        let right = st[2] + half * s(2);
        let left = st[1] + half * s(1);
        nu * (right - left)
    } else if nu < T::zero() {
        let right = st[3] - half * s(3);
        let left = st[2] - half * s(2);
        nu * (right - left)
    } else {
        T::zero()
    }
}

/// Smooth cutoff equal to 1 on `[0, 3R/4]` and 0 beyond `R`.
pub fn smooth_cutoff<T: Real>(r: T, radius: T) -> T {
    let psi = |x: f64| if x > 0.0 { (-1.0 / x).exp() } else { 0.0 };
    let width = 0.25 * radius.f64();
    let x = (r.f64() - (radius.f64() - width)) / width;
    let step = psi(x) / (psi(x) + psi(1.0 - x));
    T::lit(1.0 - step)
}

/// Samples a radial profile on the grid, optionally multiplied by
/// [`smooth_cutoff`].
pub fn radial_initial<T: Real>(grid: &RadialGrid<T>, f: impl Fn(T) -> T, cutoff: Option<T>) -> Vec<T> {
    grid.nodes()
        .into_iter()
        .map(|r| match cutoff {
            Some(rc) => f(r) * smooth_cutoff(r, rc),
            None => f(r),
        })
        .collect()
}

/// `(1 + 4t)^{-d/2} exp(-r²/(1+4t))`: the heat flow of `exp(-|x|²)`.
pub fn heat_gaussian(d: usize, t: f64, r: f64) -> f64 {
    let s = 1.0 + 4.0 * t;
    s.powf(-(d as f64) / 2.0) * (-r * r / s).exp()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cutoff_shape() {
        assert_eq!(smooth_cutoff(0.0, 4.0), 1.0);
        assert_eq!(smooth_cutoff(3.0, 4.0), 1.0);
        assert_eq!(smooth_cutoff(4.0, 4.0), 0.0);
        let mid: f64 = smooth_cutoff(3.5, 4.0);
        assert!((mid - 0.5).abs() < 1e-12);
    }

    #[test]
    fn muscl_is_convex_for_small_courant() {
        // monotone data: the update stays between the neighbours
        let st = [0.0, 0.1, 0.5, 0.6, 1.0];
        for nu in [0.5, -0.5] {
            let next = st[2] - muscl_increment(st, nu);
            assert!((0.1..=0.6).contains(&next), "{nu}: {next}");
        }
    }

    #[test]
    fn time_line_rounds_to_grid() {
        let opts = SolveOptions::new(4.0).snapshots(vec![0.0, 0.2, 0.5]);
        let tl = TimeLine::new(0.0, 0.5, 0.03, &opts).unwrap();
        assert_eq!(tl.steps, 17);
        assert!(tl.dt <= 0.03);
        assert_eq!(tl.snapshot_steps, vec![0, 7, 17]);
    }
}
