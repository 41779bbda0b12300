//! Distances between solutions driven by consecutive members of the
//! regularizing sequence.

use std::fmt::Write as _;

use rayon::prelude::*;
use serde::Serialize;

use crate::drift::{DriftKind, FormBoundedDrift};
use crate::error::{domain, Result};
use crate::grid::{RadialGrid, SpaceGrid};
use crate::mollifier::build_regularized_drift_within;
use crate::rational::to_f64;
use crate::scalar::Real;

use super::{solve_radial, Scheme, SolveOptions};

pub const CAUCHY_HEADER: &str = "n_a,n_b,eps_a,eps_b,lr_distance,sup_distance";

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CauchyConfig {
    /// `ε_n = eps0 · 2^{-n}`.
    pub eps0: f64,
    /// Upper bound for the time step; reduced to satisfy every member's
    /// stability rule.
    pub dt: f64,
    /// Number of equally spaced comparison times on `[0, t]`.
    pub samples: usize,
}

impl Default for CauchyConfig {
    fn default() -> Self {
        CauchyConfig { eps0: 0.16, dt: 1e-4, samples: 51 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CauchyRow {
    pub n_a: usize,
    pub n_b: usize,
    pub eps_a: f64,
    pub eps_b: f64,
    /// `sup_τ ‖u_{n_a}(τ) − u_{n_b}(τ)‖_r`.
    pub lr_distance: f64,
    /// `sup_τ ‖u_{n_a}(τ) − u_{n_b}(τ)‖_∞`.
    pub sup_distance: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CauchyTable {
    pub r: f64,
    pub dt: f64,
    pub rows: Vec<CauchyRow>,
    /// Each distance strictly below the previous one (or all zero).
    pub lr_decreasing: bool,
    pub sup_decreasing: bool,
}

impl CauchyTable {
    pub fn to_csv(&self) -> String {
        let mut out = String::from(CAUCHY_HEADER);
        out.push('\n');
        for row in &self.rows {
            let _ = writeln!(
                out,
                "{},{},{},{},{},{}",
                row.n_a, row.n_b, row.eps_a, row.eps_b, row.lr_distance, row.sup_distance
            );
        }
        out
    }
}

fn decreasing(v: &[f64]) -> bool {
    v.iter().all(|x| *x == 0.0) || v.windows(2).all(|w| w[1] < w[0])
}

/// Solves with `b_n` for every `n` in `n_list` (concurrently) and tabulates
/// the distances between consecutive solutions. Requires `r > 2/(2 − √δ)`.
pub fn approximation_cauchy_check<T: Real>(
    base: &FormBoundedDrift<T>,
    h: &[T],
    grid: &RadialGrid<T>,
    t: T,
    n_list: &[usize],
    r: f64,
    config: &CauchyConfig,
) -> Result<CauchyTable> {
    if n_list.len() < 2 || n_list.windows(2).any(|w| w[1] <= w[0]) {
        return domain("n_list must be strictly increasing with at least two entries");
    }
    let sd = to_f64(&base.delta).sqrt();
    if !(sd < 2.0) || !(r > 2.0 / (2.0 - sd)) {
        return domain(format!("exponent r = {r} must exceed 2/(2 - √δ)"));
    }
    let eps: Vec<f64> = n_list.iter().map(|&n| config.eps0 * 0.5f64.powi(n as i32)).collect();
    // bounded smooth bases are their own regularizations
    let regularize = !matches!(base.kind, DriftKind::BoundedSmooth(_) | DriftKind::Zero);
    let members: Vec<FormBoundedDrift<T>> = n_list
        .iter()
        .zip(&eps)
        .map(|(&n, &e)| {
            if regularize {
                build_regularized_drift_within(base, n, e, Some(grid.r_max.f64() + 1.0))
            } else {
                Ok(base.clone())
            }
        })
        .collect::<Result<_>>()?;
    let dr = grid.dr().f64();
    let mut dt = config.dt.min(0.25 * dr * dr);
    for m in &members {
        let p = m.radial_profile()?;
        let vmax = grid.nodes()[1..].iter().fold(0.0f64, |acc, x| acc.max(p.smooth.eval(*x).abs().f64()));
        if vmax > 0.0 {
            dt = dt.min(0.45 * dr / vmax);
        }
    }
    let samples = config.samples.max(2);
    let times: Vec<f64> = (0..samples).map(|k| t.f64() * k as f64 / (samples - 1) as f64).collect();
    let opts = SolveOptions::new(r.max(2.0 + 1e-9)).snapshots(times).stride(usize::MAX);
    let solutions = members
        .par_iter()
        .map(|m| solve_radial(m, h, grid, T::zero(), t, T::lit(dt), Scheme::Imex, &opts))
        .collect::<Result<Vec<_>>>()?;
    let mut rows = Vec::with_capacity(n_list.len() - 1);
    for k in 1..n_list.len() {
        let (a, b) = (&solutions[k - 1], &solutions[k]);
        let mut lr = 0.0f64;
        let mut sup = 0.0f64;
        for (sa, sb) in a.snapshots.iter().zip(&b.snapshots) {
            let diff: Vec<T> = sa.values.iter().zip(&sb.values).map(|(x, y)| (*x - *y).abs()).collect();
            let pow: Vec<T> = diff.iter().map(|v| v.powf(T::lit(r))).collect();
            lr = lr.max(grid.integrate(&pow).f64().powf(1.0 / r));
            sup = sup.max(diff.iter().fold(0.0f64, |m, v| m.max(v.f64())));
        }
        rows.push(CauchyRow { n_a: n_list[k - 1], n_b: n_list[k], eps_a: eps[k - 1], eps_b: eps[k], lr_distance: lr, sup_distance: sup });
    }
    let lr: Vec<f64> = rows.iter().map(|r| r.lr_distance).collect();
    let sp: Vec<f64> = rows.iter().map(|r| r.sup_distance).collect();
    Ok(CauchyTable { r, dt, lr_decreasing: decreasing(&lr), sup_decreasing: decreasing(&sp), rows })
}
