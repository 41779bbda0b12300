//! Ensemble means against the backward equation with time-reversed drift.
//!
//! `E f(X_T)` equals `u(T, x0)` where `u_τ = Δu − b̃·∇u`, `u(0) = f` and
//! `b̃(τ, x) = b(T − τ, x)`.

use serde::Serialize;

use crate::drift::{DriftKind, FormBoundedDrift, SmoothField};
use crate::error::{domain, Result};
use crate::grid::{Boundary, CartesianGrid, RadialGrid};
use crate::pde::{smooth_cutoff, solve_cartesian, solve_radial, stable_dt_radial, Scheme, SolveOptions};
use crate::scalar::Real;

use super::{run_path_pairs, summarize, EnsembleSpec, PathOutcome, TerminalFunction};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum PdeMethod {
    /// Radial drift and a terminal function centered at the origin.
    Radial,
    /// Zero or constant drift: the heat flow of `f` evaluated at the
    /// transported point `x0 − cT`.
    RadialShifted,
    /// Full grid, `d ∈ {2, 3}`.
    Cartesian,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PdeConfig {
    pub r_max: f64,
    pub n_r: usize,
    pub half_width: f64,
    /// Cells per axis of the full grid.
    pub n_cartesian: usize,
}

impl Default for PdeConfig {
    fn default() -> Self {
        PdeConfig { r_max: 10.0, n_r: 2000, half_width: 6.0, n_cartesian: 96 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct WeakCompareReport {
    pub functional: String,
    pub method: PdeMethod,
    pub x0: Vec<f64>,
    pub horizon: f64,
    pub dt: f64,
    pub n_paths: usize,
    pub seed: u64,
    /// Ensemble mean at `dt`.
    pub mean: f64,
    pub std_err: f64,
    /// Ensemble mean at `dt/2` on the same Brownian paths.
    pub mean_half_step: f64,
    /// `2 |mean − mean_half_step|`.
    pub sde_bias: f64,
    pub pde_value: f64,
    /// `|u_h − u_{2h}| / 3` from a grid-halving pair.
    pub pde_err: f64,
    pub discrepancy: f64,
    /// `3·SE + sde_bias + pde_err`.
    pub band: f64,
    pub passed: bool,
}

/// Cubic Lagrange interpolation on a uniform stencil starting at `x[0]`.
fn lagrange4(x: [f64; 4], y: [f64; 4], at: f64) -> f64 {
    let mut out = 0.0;
    for i in 0..4 {
        let mut w = 1.0;
        for j in 0..4 {
            if j != i {
                w *= (at - x[j]) / (x[i] - x[j]);
            }
        }
        out += w * y[i];
    }
    out
}

/// Interpolates radial node values at `r`, reflecting evenly through 0.
pub(crate) fn interpolate_radial<T: Real>(grid: &RadialGrid<T>, values: &[T], r: f64) -> f64 {
    let dr = grid.dr().f64();
    let n = grid.n_r as isize;
    let i = ((r / dr).floor() as isize).clamp(0, n - 2);
    let start = (i - 1).min(n - 3);
    let mut xs = [0.0; 4];
    let mut ys = [0.0; 4];
    for k in 0..4 {
        let j = start + k as isize;
        xs[k] = j as f64 * dr;
        ys[k] = values[j.unsigned_abs()].f64();
    }
    lagrange4(xs, ys, r)
}

/// Tensor cubic interpolation of full-grid node values at `x`.
fn interpolate_cartesian<T: Real>(grid: &CartesianGrid<T>, values: &[T], x: &[f64]) -> f64 {
    let d = grid.d;
    let dx = grid.dx().f64();
    let l = grid.half_width.f64();
    let m = grid.per_axis() as isize;
    let mut starts = vec![0isize; d];
    let mut axes = vec![[0.0; 4]; d];
    for k in 0..d {
        let i = (((x[k] + l) / dx).floor() as isize).clamp(1, m - 3);
        starts[k] = i - 1;
        for j in 0..4 {
            axes[k][j] = -l + (starts[k] + j as isize) as f64 * dx;
        }
    }
    let weights: Vec<[f64; 4]> = (0..d)
        .map(|k| {
            let mut w = [1.0; 4];
            for i in 0..4 {
                for j in 0..4 {
                    if j != i {
                        w[i] *= (x[k] - axes[k][j]) / (axes[k][i] - axes[k][j]);
                    }
                }
            }
            w
        })
        .collect();
    let mut out = 0.0;
    for combo in 0..4usize.pow(d as u32) {
        let mut flat = 0usize;
        let mut w = 1.0;
        let mut c = combo;
        for k in 0..d {
            let o = c % 4;
            c /= 4;
            flat += (starts[k] + o as isize) as usize * grid.stride(k);
            w *= weights[k][o];
        }
        out += w * values[flat].f64();
    }
    out
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

fn choose_method<T: Real>(drift: &FormBoundedDrift<T>, f: &TerminalFunction) -> Result<PdeMethod> {
    let TerminalFunction::Gaussian { center, .. } = f else {
        return domain("the PDE side needs a decaying terminal function");
    };
    if center.len() != drift.d {
        return domain("terminal function and drift dimensions differ");
    }
    match &drift.kind {
        DriftKind::Zero | DriftKind::BoundedSmooth(SmoothField::Constant(_)) => Ok(PdeMethod::RadialShifted),
        _ if drift.radial_profile().is_ok() && norm(center) == 0.0 => Ok(PdeMethod::Radial),
        _ if (2..=3).contains(&drift.d) => Ok(PdeMethod::Cartesian),
        _ => domain("no PDE method fits this drift and terminal function"),
    }
}

fn radial_value<T: Real>(
    drift: &FormBoundedDrift<T>,
    f: &TerminalFunction,
    horizon: T,
    n_r: usize,
    cfg: &PdeConfig,
    r_eval: f64,
) -> Result<f64> {
    let TerminalFunction::Gaussian { amplitude, width, .. } = f else { unreachable!() };
    let grid = RadialGrid::new(drift.d, T::lit(cfg.r_max), n_r)?;
    let cut = T::lit(cfg.r_max / 2.0);
    let h: Vec<T> = grid
        .nodes()
        .into_iter()
        .map(|r| T::lit(amplitude * (-(r.f64() / width).powi(2)).exp()) * smooth_cutoff(r, cut))
        .collect();
    let dt = stable_dt_radial(drift, &grid)?;
    let opts = SolveOptions::new(4.0).stride(usize::MAX);
    let sol = solve_radial(drift, &h, &grid, T::zero(), horizon, T::lit(dt), Scheme::Imex, &opts)?;
    let last = sol.snapshots.last().expect("final snapshot");
    Ok(interpolate_radial(&grid, &last.values, r_eval))
}

fn cartesian_value<T: Real>(
    drift: &FormBoundedDrift<T>,
    f: &TerminalFunction,
    horizon: T,
    n: usize,
    cfg: &PdeConfig,
    x0: &[f64],
) -> Result<f64> {
    let grid = CartesianGrid::new(drift.d, T::lit(cfg.half_width), n, Boundary::Dirichlet)?;
    let cut = T::lit(cfg.half_width / 2.0);
    let h: Vec<T> = (0..grid_len(&grid))
        .map(|flat| {
            let p: Vec<f64> = grid.point(flat).iter().map(|v| v.f64()).collect();
            T::lit(f.eval(&p)) * smooth_cutoff(T::lit(norm(&p)), cut)
        })
        .collect();
    let dx = grid.dx().f64();
    let sup = drift.sup_norm()?.f64();
    let mut dt = 0.25 * dx * dx;
    if sup > 0.0 {
        dt = dt.min(0.45 * dx / ((drift.d as f64).sqrt() * sup));
    }
    let opts = SolveOptions::new(4.0).stride(usize::MAX);
    let sol = solve_cartesian(drift, &h, &grid, T::zero(), horizon, T::lit(dt), &opts)?;
    let last = sol.snapshots.last().expect("final snapshot");
    Ok(interpolate_cartesian(&grid, &last.values, x0))
}

fn grid_len<T: Real>(grid: &CartesianGrid<T>) -> usize {
    grid.per_axis().pow(grid.d as u32)
}

/// Runs the ensemble at `dt` and `dt/2` on shared Brownian paths and
/// solves the backward equation on a grid and its coarsening.
pub fn weak_compare<T: Real>(spec: &EnsembleSpec<T>, f: &TerminalFunction, pde: &PdeConfig) -> Result<WeakCompareReport> {
    let steps = spec.validate()?;
    let method = choose_method(&spec.drift, f)?;
    let x0: Vec<f64> = spec.x0.iter().map(|v| v.f64()).collect();
    let horizon = spec.horizon;
    let reversed = spec.drift.time_reversed(horizon);

    let pairs = run_path_pairs(spec, steps)?;
    let (coarse, fine): (Vec<_>, Vec<_>) = pairs
        .into_iter()
        .map(|(c, f)| (PathOutcome { terminal: c, hits: Vec::new() }, PathOutcome { terminal: f, hits: Vec::new() }))
        .unzip();
    let coarse = summarize(f, &coarse, spec.dt.f64(), horizon.f64(), 0);
    let fine = summarize(f, &fine, spec.dt.f64() / 2.0, horizon.f64(), 0);

    let (fine_pde, coarse_pde) = match method {
        PdeMethod::Radial | PdeMethod::RadialShifted => {
            let (drift, at) = if method == PdeMethod::Radial {
                (reversed, norm(&x0))
            } else {
                let TerminalFunction::Gaussian { center, .. } = f else { unreachable!() };
                let shift: Vec<f64> = match &spec.drift.kind {
                    DriftKind::BoundedSmooth(SmoothField::Constant(c)) => c.iter().map(|v| v.f64() * horizon.f64()).collect(),
                    _ => vec![0.0; x0.len()],
                };
                let p: Vec<f64> = (0..x0.len()).map(|k| x0[k] - shift[k] - center[k]).collect();
                (crate::drift::zero_drift(spec.drift.d), norm(&p))
            };
            rayon::join(
                || radial_value(&drift, f, horizon, pde.n_r, pde, at),
                || radial_value(&drift, f, horizon, pde.n_r / 2, pde, at),
            )
        }
        PdeMethod::Cartesian => rayon::join(
            || cartesian_value(&reversed, f, horizon, pde.n_cartesian, pde, &x0),
            || cartesian_value(&reversed, f, horizon, pde.n_cartesian / 2, pde, &x0),
        ),
    };
    let pde_value = fine_pde?;
    let pde_err = (pde_value - coarse_pde?).abs() / 3.0;
    let sde_bias = 2.0 * (coarse.mean - fine.mean).abs();
    let discrepancy = (coarse.mean - pde_value).abs();
    let band = 3.0 * coarse.std_err + sde_bias + pde_err;
    Ok(WeakCompareReport {
        functional: f.name(),
        method,
        x0,
        horizon: horizon.f64(),
        dt: spec.dt.f64(),
        n_paths: spec.n_paths,
        seed: spec.seed,
        mean: coarse.mean,
        std_err: coarse.std_err,
        mean_half_step: fine.mean,
        sde_bias,
        pde_value,
        pde_err,
        discrepancy,
        band,
        passed: discrepancy <= band,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cubic_interpolation_is_exact_on_cubics() {
        let grid = RadialGrid::<f64>::new(3, 4.0, 40).unwrap();
        let vals: Vec<f64> = grid.nodes().iter().map(|r| 1.0 + r * r - 0.1 * r * r * r.abs()).collect();
        // even reflection keeps r² exact near the origin
        let even: Vec<f64> = grid.nodes().iter().map(|r| 2.0 + r * r).collect();
        assert!((interpolate_radial(&grid, &even, 0.03) - (2.0 + 0.0009)).abs() < 1e-12);
        let r: f64 = 1.234;
        assert!((interpolate_radial(&grid, &vals, r) - (1.0 + r * r - 0.1 * r.powi(3))).abs() < 1e-12);

        let cg = CartesianGrid::<f64>::new(2, 2.0, 20, Boundary::Dirichlet).unwrap();
        let vals: Vec<f64> = (0..grid_len(&cg))
            .map(|k| {
                let p = cg.point(k);
                p[0] * p[0] * p[1] - p[1] + 0.5
            })
            .collect();
        let x = [0.33, -0.71];
        assert!((interpolate_cartesian(&cg, &vals, &x) - (x[0] * x[0] * x[1] - x[1] + 0.5)).abs() < 1e-12);
    }
}
