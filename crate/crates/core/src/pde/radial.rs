//! Radially symmetric solves.
//!
//! With `b = β x/|x|` and `β = c/r + β_s(τ, r)` the equation becomes
//! `u_τ = r^{-a} ∂_r(r^a u_r) − β_s u_r`, `a = d − 1 − c`: the singular part of
//! the drift is absorbed into the radial weight. Cells are
//! `[r_{i-½}, r_{i+½}]` with exact `r^a`-volumes, so the origin needs no
//! special treatment beyond `r_{-½} = 0`.

use crate::drift::FormBoundedDrift;
use crate::error::{domain, Error, Result};
use crate::grid::{RadialGrid, SpaceGrid};
use crate::quadrature::sphere_area;
use crate::scalar::Real;

use super::diagnostics::{radial_functionals, NormTrace};
use super::tridiag::thomas;
use super::{extremes, muscl_increment, Scheme, Solution, SolutionField, SolveOptions, SolveStats, TimeLine, FLUX_TOLERANCE};

struct Operator<T> {
    /// `r_{i+½}^a / Δr` for `i = 0..n`.
    face: Vec<T>,
    /// `∫ r^a dr` over cell `i`.
    volume: Vec<T>,
}

impl<T: Real> Operator<T> {
    fn new(grid: &RadialGrid<T>, a: T) -> Self {
        let n = grid.n_r;
        let h = grid.dr();
        let half = T::lit(0.5);
        let a1 = a + T::one();
        let face = (0..n).map(|i| (grid.r(i) + half * h).powf(a) / h).collect();
        let volume = (0..n)
            .map(|i| {
                let hi = (grid.r(i) + half * h).powf(a1);
                let lo = if i == 0 { T::zero() } else { (grid.r(i) - half * h).powf(a1) };
                (hi - lo) / a1
            })
            .collect();
        Operator { face, volume }
    }

    /// `(lower, upper)` coupling of row `i` in `r^{-a}∂_r(r^a ∂_r)`.
    fn coupling(&self, i: usize) -> (T, T) {
        let lower = if i == 0 { T::zero() } else { self.face[i - 1] / self.volume[i] };
        (lower, self.face[i] / self.volume[i])
    }
}

/// Solves the radial problem on `[s, t]`; see the module docs for the
/// reduction. `h` holds the initial profile at the grid nodes.
#[allow(clippy::too_many_arguments)]
pub fn solve_radial<T: Real>(
    drift: &FormBoundedDrift<T>,
    h: &[T],
    grid: &RadialGrid<T>,
    s: T,
    t: T,
    dt: T,
    scheme: Scheme,
    opts: &SolveOptions,
) -> Result<Solution<T, RadialGrid<T>>> {
    let profile = drift.radial_profile()?;
    let n = grid.n_r;
    if h.len() != n + 1 {
        return domain(format!("initial profile has {} values, grid has {}", h.len(), n + 1));
    }
    if drift.d != grid.d {
        return domain("drift and grid dimensions differ");
    }
    if n < 4 {
        return domain("radial solves need at least 4 cells");
    }
    let c = profile.singular_coeff;
    let a = T::from_usize_lossy(grid.d - 1) - c;
    if !(a + T::one() > T::zero()) {
        return domain("singular drift coefficient reaches the dimension; no solution exists");
    }
    let tl = TimeLine::new(s, t, dt, opts)?;
    let dr = grid.dr();
    let nodes = grid.nodes();
    let beta_s: Vec<T> = nodes.iter().map(|r| profile.smooth.eval(*r)).collect();
    let vmax = beta_s[1..].iter().fold(T::zero(), |m, v| m.max(v.abs()));
    let dtv = tl.dt;
    let rel = T::lit(1.0 + 1e-12);
    match scheme {
        Scheme::Imex => {
            if dtv > T::lit(0.25) * dr * dr * rel {
                return Err(Error::Stability(format!(
                    "dt = {} exceeds 0.25 Δr² = {}",
                    dtv,
                    T::lit(0.25) * dr * dr
                )));
            }
            if dtv * vmax > T::lit(0.5) * dr * rel {
                return Err(Error::Stability(format!("dt = {} exceeds 0.5 Δr / max|β| = {}", dtv, T::lit(0.5) * dr / vmax)));
            }
        }
        Scheme::CrankNicolson => {
            if vmax * dr > T::lit(2.0) * rel {
                return Err(Error::Stability(format!("cell Péclet number {} exceeds 2", vmax * dr)));
            }
        }
    }

    let op = Operator::new(grid, a);
    let mass = grid.integrate(&h.iter().map(|v| v.abs()).collect::<Vec<_>>()).f64();
    let flux_limit = FLUX_TOLERANCE * mass;
    let sigma = sphere_area(grid.d - 1) * grid.r_max.f64().powi(grid.d as i32 - 1);
    let (init_min, init_max) = extremes(h)?;

    let mut trace = NormTrace::new(grid.d, opts.q);
    let mut snapshots = Vec::new();
    let mut beta_now = vec![T::zero(); n + 1];
    let record = |trace: &mut NormTrace<T>, beta_now: &mut Vec<T>, u: &[T], tau: T| {
        let theta = profile.time.eval(tau);
        for (b, v) in beta_now.iter_mut().zip(&beta_s) {
            *b = theta * *v;
        }
        trace.push(tau, &radial_functionals(grid, u, c, beta_now, opts.q));
    };

    let mut u = h.to_vec();
    record(&mut trace, &mut beta_now, &u, tl.time(0));
    if tl.snapshot(0) {
        snapshots.push(SolutionField { tau: tl.time(0), values: u.clone() });
    }

    let m = n; // unknowns u_0..u_{n-1}; u_n = 0
    let mut lower = vec![T::zero(); m];
    let mut diag = vec![T::zero(); m];
    let mut upper = vec![T::zero(); m];
    let mut rhs = vec![T::zero(); m];
    let mut scratch = Vec::with_capacity(m);
    let mut ghost = vec![T::zero(); n + 5];
    let (mut lo, mut hi) = (init_min, init_max);
    let mut flux = 0.0;
    let half = T::lit(0.5);

    if scheme == Scheme::Imex {
        for i in 0..m {
            let (l, r) = op.coupling(i);
            lower[i] = -dtv * l;
            upper[i] = -dtv * r;
            diag[i] = T::one() + dtv * (l + r);
        }
    }

    for k in 0..tl.steps {
        let tau = tl.time(k);
        match scheme {
            Scheme::Imex => {
                let theta = profile.time.eval(tau);
                // ghost layout: ghost[j + 2] = u_j, even reflection at the
                // origin, zero beyond r_max
                ghost[0] = u[2];
                ghost[1] = u[1];
                ghost[2..n + 3].copy_from_slice(&u);
                ghost[n + 3] = T::zero();
                ghost[n + 4] = T::zero();
                for i in 0..m {
                    let v = theta * beta_s[i];
                    let inc = if i == 0 || v == T::zero() {
                        T::zero()
                    } else {
                        let st = [ghost[i], ghost[i + 1], ghost[i + 2], ghost[i + 3], ghost[i + 4]];
                        muscl_increment(st, dtv * v / dr)
                    };
                    rhs[i] = u[i] - inc;
                }
                thomas(&lower, &diag, &upper, &mut rhs, &mut scratch);
            }
            Scheme::CrankNicolson => {
                let theta = profile.time.eval(tau + half * dtv);
                let hd = half * dtv;
                for i in 0..m {
                    let (l, r) = op.coupling(i);
                    let adv = if i == 0 { T::zero() } else { theta * beta_s[i] / (T::lit(2.0) * dr) };
                    let al = l + adv;
                    let au = r - adv;
                    let left = if i == 0 { T::zero() } else { u[i - 1] };
                    let right = u[i + 1];
                    rhs[i] = u[i] + hd * (al * left - (l + r) * u[i] + au * right);
                    lower[i] = -hd * al;
                    upper[i] = -hd * au;
                    diag[i] = T::one() + hd * (l + r);
                }
                thomas(&lower, &diag, &upper, &mut rhs, &mut scratch);
            }
        }
        u[..m].copy_from_slice(&rhs);
        u[n] = T::zero();
        flux += sigma * (u[n - 1] - u[n]).abs().f64() / dr.f64() * dtv.f64();
        if flux > flux_limit && flux_limit > 0.0 {
            return Err(Error::BoundaryFlux { flux, limit: flux_limit });
        }
        let (a_lo, a_hi) = extremes(&u)?;
        lo = lo.min(a_lo);
        hi = hi.max(a_hi);
        let kk = k + 1;
        if tl.traced(kk) {
            record(&mut trace, &mut beta_now, &u, tl.time(kk));
        }
        if tl.snapshot(kk) {
            snapshots.push(SolutionField { tau: tl.time(kk), values: u.clone() });
        }
    }
    trace.finish();
    Ok(Solution {
        grid: *grid,
        snapshots,
        trace,
        stats: SolveStats {
            steps: tl.steps,
            dt: dtv.f64(),
            min_value: lo,
            max_value: hi,
            initial_min: init_min,
            initial_max: init_max,
            boundary_flux: flux,
            flux_limit,
        },
    })
}

/// Largest step accepted by the IMEX rules `dt ≤ 0.25 Δr²` and
/// `dt ≤ 0.5 Δr / max|β_s|`.
pub fn stable_dt_radial<T: Real>(drift: &FormBoundedDrift<T>, grid: &RadialGrid<T>) -> Result<f64> {
    let profile = drift.radial_profile()?;
    let dr = grid.dr().f64();
    let vmax = grid.nodes()[1..].iter().fold(0.0f64, |m, r| m.max(profile.smooth.eval(*r).abs().f64()));
    let mut dt = 0.25 * dr * dr;
    if vmax > 0.0 {
        dt = dt.min(0.5 * dr / vmax);
    }
    Ok(dt)
}
