//! Full-grid solves for bounded smooth drifts.
//!
//! Unsplit explicit MUSCL upwinding over all axes, then a Lie-split
//! implicit diffusion solve along each axis.

use crate::drift::FormBoundedDrift;
use crate::error::{domain, Error, Result};
use crate::grid::{Boundary, CartesianGrid, SpaceGrid};
use crate::scalar::Real;

use super::diagnostics::{cartesian_functionals, NormTrace};
use super::tridiag::{cyclic_thomas, thomas};
use super::{extremes, muscl_increment, Solution, SolutionField, SolveOptions, SolveStats, TimeLine, FLUX_TOLERANCE};

struct Lines<'a, T> {
    grid: &'a CartesianGrid<T>,
    m: usize,
}

impl<'a, T: Real> Lines<'a, T> {
    fn coordinate(&self, flat: usize, axis: usize) -> usize {
        (flat / self.grid.stride(axis)) % self.m
    }

    /// Value at offset `o` along `axis`, zero outside a Dirichlet box.
    #[inline]
    fn at(&self, u: &[T], flat: usize, axis: usize, idx: usize, o: isize) -> T {
        let stride = self.grid.stride(axis);
        let j = idx as isize + o;
        match self.grid.boundary {
            Boundary::Periodic => {
                let jj = j.rem_euclid(self.m as isize) as usize;
                u[flat - idx * stride + jj * stride]
            }
            Boundary::Dirichlet => {
                if j < 0 || j >= self.m as isize {
                    T::zero()
                } else {
                    u[flat - idx * stride + j as usize * stride]
                }
            }
        }
    }

    fn on_boundary(&self, flat: usize) -> bool {
        self.grid.boundary == Boundary::Dirichlet
            && (0..self.grid.d).any(|k| {
                let c = self.coordinate(flat, k);
                c == 0 || c + 1 == self.m
            })
    }
}

/// Solves on the box `[-L, L]^d`; `h` holds the initial data at the nodes
/// (last axis fastest). Only bounded drifts are accepted.
#[allow(clippy::too_many_arguments)]
pub fn solve_cartesian<T: Real>(
    drift: &FormBoundedDrift<T>,
    h: &[T],
    grid: &CartesianGrid<T>,
    s: T,
    t: T,
    dt: T,
    opts: &SolveOptions,
) -> Result<Solution<T, CartesianGrid<T>>> {
    drift.sup_norm()?;
    if drift.d != grid.d {
        return domain("drift and grid dimensions differ");
    }
    let len = grid.len();
    if h.len() != len {
        return domain(format!("initial data has {} values, grid has {}", h.len(), len));
    }
    let tl = TimeLine::new(s, t, dt, opts)?;
    let d = grid.d;
    let dx = grid.dx();
    let m = grid.per_axis();
    let lines = Lines { grid, m };
    let spatial = drift.without_time();
    let theta_of = drift.time_factor();
    let mut field: Vec<Vec<T>> = vec![vec![T::zero(); len]; d];
    let mut vmax = T::zero();
    for i in 0..len {
        let b = spatial.eval(T::zero(), &grid.point(i))?;
        let mut sum = T::zero();
        for k in 0..d {
            field[k][i] = b[k];
            sum = sum + b[k].abs();
        }
        vmax = vmax.max(sum);
    }
    let dtv = tl.dt;
    let rel = T::lit(1.0 + 1e-12);
    if dtv > T::lit(0.25) * dx * dx * rel {
        return Err(Error::Stability(format!("dt = {} exceeds 0.25 Δx² = {}", dtv, T::lit(0.25) * dx * dx)));
    }
    if dtv * vmax > T::lit(0.5) * dx * rel {
        return Err(Error::Stability(format!("dt = {} exceeds 0.5 Δx / max Σ|b_k| = {}", dtv, T::lit(0.5) * dx / vmax)));
    }

    let weights: Vec<T> = (0..len).map(|i| grid.weight(i)).collect();
    let mass: f64 = (0..len).map(|i| (weights[i] * h[i].abs()).f64()).sum();
    let flux_limit = FLUX_TOLERANCE * mass;
    let (init_min, init_max) = extremes(h)?;
    let boundary: Vec<bool> = (0..len).map(|i| lines.on_boundary(i)).collect();
    let face_area = dx.f64().powi(d as i32 - 1);

    let mut trace = NormTrace::new(d, opts.q);
    let mut snapshots = Vec::new();
    let mut b_now: Vec<Vec<T>> = vec![vec![T::zero(); len]; d];
    let mut record = |trace: &mut NormTrace<T>, u: &[T], tau: T| {
        let theta = theta_of.eval(tau);
        for k in 0..d {
            for (o, v) in b_now[k].iter_mut().zip(&field[k]) {
                *o = theta * *v;
            }
        }
        trace.push(tau, &cartesian_functionals(grid, u, &b_now, &weights, opts.q));
    };

    let mut u = h.to_vec();
    record(&mut trace, &u, tl.time(0));
    if tl.snapshot(0) {
        snapshots.push(SolutionField { tau: tl.time(0), values: u.clone() });
    }
    let mut next = vec![T::zero(); len];
    let (mut lo, mut hi) = (init_min, init_max);
    let mut flux = 0.0;
    let r = dtv / (dx * dx);
    let line_len = match grid.boundary {
        Boundary::Dirichlet => m - 2,
        Boundary::Periodic => m,
    };
    let lower = vec![-r; line_len];
    let upper = vec![-r; line_len];
    let diag = vec![T::one() + T::lit(2.0) * r; line_len];
    let mut buf = vec![T::zero(); line_len];
    let mut scratch = Vec::with_capacity(line_len);

    for k in 0..tl.steps {
        let theta = theta_of.eval(tl.time(k));
        for i in 0..len {
            if boundary[i] {
                next[i] = T::zero();
                continue;
            }
            let mut v = u[i];
            for axis in 0..d {
                let b = theta * field[axis][i];
                if b == T::zero() {
                    continue;
                }
                let idx = lines.coordinate(i, axis);
                let st = [
                    lines.at(&u, i, axis, idx, -2),
                    lines.at(&u, i, axis, idx, -1),
                    u[i],
                    lines.at(&u, i, axis, idx, 1),
                    lines.at(&u, i, axis, idx, 2),
                ];
                v = v - muscl_increment(st, dtv * b / dx);
            }
            next[i] = v;
        }
        std::mem::swap(&mut u, &mut next);
        for axis in 0..d {
            let stride = grid.stride(axis);
            let first = match grid.boundary {
                Boundary::Dirichlet => 1,
                Boundary::Periodic => 0,
            };
            for start in 0..len {
                if lines.coordinate(start, axis) != 0 {
                    continue;
                }
                if grid.boundary == Boundary::Dirichlet
                    && (0..d).any(|kk| kk != axis && {
                        let c = lines.coordinate(start, kk);
                        c == 0 || c + 1 == m
                    })
                {
                    continue;
                }
                for (j, b) in buf.iter_mut().enumerate() {
                    *b = u[start + (first + j) * stride];
                }
                match grid.boundary {
                    Boundary::Dirichlet => thomas(&lower, &diag, &upper, &mut buf, &mut scratch),
                    Boundary::Periodic => cyclic_thomas(&lower, &diag, &upper, &mut buf, &mut scratch),
                }
                for (j, b) in buf.iter().enumerate() {
                    u[start + (first + j) * stride] = *b;
                }
            }
        }
        if grid.boundary == Boundary::Dirichlet {
            // |∂_ν u| ≈ |u_adjacent| / Δx on each face cell
            let mut out = 0.0;
            for i in 0..len {
                if boundary[i] {
                    continue;
                }
                let faces = (0..d)
                    .filter(|&kk| {
                        let c = lines.coordinate(i, kk);
                        c == 1 || c + 2 == m
                    })
                    .count();
                if faces > 0 {
                    out += faces as f64 * u[i].abs().f64() / dx.f64() * face_area;
                }
            }
            flux += out * dtv.f64();
            if flux > flux_limit && flux_limit > 0.0 {
                return Err(Error::BoundaryFlux { flux, limit: flux_limit });
            }
        }
        let (a_lo, a_hi) = extremes(&u)?;
        lo = lo.min(a_lo);
        hi = hi.max(a_hi);
        let kk = k + 1;
        if tl.traced(kk) {
            record(&mut trace, &u, tl.time(kk));
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
