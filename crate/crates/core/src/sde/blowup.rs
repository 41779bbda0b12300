//! Hitting of a small ball around the singularity of the Hardy drift.

use std::fmt::Write as _;

use serde::Serialize;

use crate::drift::{hardy_drift, zero_drift, FormBoundedDrift};
use crate::error::{domain, Result};
use crate::rational::{to_f64, Rational};

use super::{run_paths, Ball, EnsembleSpec};

pub const BLOWUP_HEADER: &str = "delta,hit_fraction,n_paths,dt";

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BlowupRow {
    pub delta: f64,
    pub hit_fraction: f64,
    pub hits: usize,
    pub n_paths: usize,
    pub dt: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BlowupSweep {
    pub d: usize,
    pub x0: Vec<f64>,
    pub rho: f64,
    pub horizon: f64,
    pub seed: u64,
    pub rows: Vec<BlowupRow>,
    pub strictly_increasing: bool,
}

impl BlowupSweep {
    pub fn to_csv(&self) -> String {
        let mut out = String::from(BLOWUP_HEADER);
        out.push('\n');
        for row in &self.rows {
            let _ = writeln!(out, "{},{},{},{}", row.delta, row.hit_fraction, row.n_paths, row.dt);
        }
        out
    }
}

/// Fraction of paths from `x0` entering `B(0, rho)` before `horizon` under
/// `b = c x/|x|²`. The drift magnitude is capped at `1/√dt`.
#[allow(clippy::too_many_arguments)]
pub fn blowup_probe(
    d: usize,
    delta: &Rational,
    x0: &[f64],
    rho: f64,
    horizon: f64,
    dt: f64,
    n_paths: usize,
    seed: u64,
) -> Result<BlowupRow> {
    if x0.len() != d {
        return domain("starting point and dimension differ");
    }
    let r0 = x0.iter().map(|v| v * v).sum::<f64>().sqrt();
    if !(rho > 0.0) || !(r0 > rho) {
        return domain("need 0 < rho < |x0|");
    }
    if n_paths == 0 || n_paths > u32::MAX as usize || !(dt > 0.0) || !(horizon > 0.0) {
        return domain("need dt > 0, horizon > 0 and 1 <= n_paths < 2^32");
    }
    let steps_f = horizon / dt;
    let steps = steps_f.round();
    if (steps_f - steps).abs() > 1e-9 * steps_f.max(1.0) {
        return domain("the horizon must be a whole number of steps");
    }
    let drift: FormBoundedDrift<f64> = if to_f64(delta) == 0.0 { zero_drift(d) } else { hardy_drift(d, delta)? };
    let mut spec = EnsembleSpec::new(drift, x0.to_vec(), horizon, dt, n_paths, seed);
    spec.targets = vec![Ball { center: vec![0.0; d], radius: rho }];
    let outcomes = run_paths(&spec, dt, steps as usize, 1, Some(1.0 / dt.sqrt()), true)?;
    let hits = outcomes.iter().filter(|o| o.hits[0]).count();
    Ok(BlowupRow { delta: to_f64(delta), hit_fraction: hits as f64 / n_paths as f64, hits, n_paths, dt })
}

/// [`blowup_probe`] over several `δ` with one seed, so all rows share
/// their Brownian increments.
#[allow(clippy::too_many_arguments)]
pub fn blowup_sweep(
    d: usize,
    deltas: &[Rational],
    x0: &[f64],
    rho: f64,
    horizon: f64,
    dt: f64,
    n_paths: usize,
    seed: u64,
) -> Result<BlowupSweep> {
    let rows = deltas
        .iter()
        .map(|delta| blowup_probe(d, delta, x0, rho, horizon, dt, n_paths, seed))
        .collect::<Result<Vec<_>>>()?;
    let strictly_increasing = rows.windows(2).all(|w| w[1].hit_fraction > w[0].hit_fraction);
    Ok(BlowupSweep { d, x0: x0.to_vec(), rho, horizon, seed, rows, strictly_increasing })
}
