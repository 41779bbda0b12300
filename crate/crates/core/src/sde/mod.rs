//! Euler–Maruyama simulation of `X_t = x − ∫_0^t b(s, X_s) ds + √2 B_t`.
//!
//! Noise comes from a counter-based generator keyed by the seed, with the
//! counter `(path, step, block)`, so every path is reproducible on its own
//! and the ensemble can be split across threads freely. Path results are
//! collected in path order and reduced sequentially.

mod blowup;
mod weak;

use serde::Serialize;

use rayon::prelude::*;

use crate::drift::{DriftKind, FormBoundedDrift, RadialDrift, SmoothField};
use crate::error::{domain, Result};
use crate::rng::{counter, Philox4x32};
use crate::scalar::Real;

pub use blowup::{blowup_probe, blowup_sweep, BlowupRow, BlowupSweep, BLOWUP_HEADER};
pub use weak::{weak_compare, PdeConfig, PdeMethod, WeakCompareReport};

/// A ball `{|x - center| <= radius}` whose first hitting is recorded.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Ball {
    pub center: Vec<f64>,
    pub radius: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EnsembleSpec<T> {
    pub drift: FormBoundedDrift<T>,
    pub x0: Vec<T>,
    pub horizon: T,
    pub dt: T,
    pub n_paths: usize,
    pub seed: u64,
    pub targets: Vec<Ball>,
}

impl<T: Real> EnsembleSpec<T> {
    pub fn new(drift: FormBoundedDrift<T>, x0: Vec<T>, horizon: T, dt: T, n_paths: usize, seed: u64) -> Self {
        EnsembleSpec { drift, x0, horizon, dt, n_paths, seed, targets: Vec::new() }
    }

    fn validate(&self) -> Result<usize> {
        if self.x0.len() != self.drift.d {
            return domain("starting point and drift dimensions differ");
        }
        if !(self.dt > T::zero()) || !(self.horizon > T::zero()) {
            return domain("dt and the horizon must be positive");
        }
        if self.n_paths == 0 || self.n_paths > u32::MAX as usize {
            return domain("n_paths must be in 1..=2^32-1");
        }
        self.drift.sup_norm()?;
        let steps = (self.horizon / self.dt).f64();
        let n = steps.round();
        if (steps - n).abs() > 1e-9 * steps.max(1.0) {
            return domain("the horizon must be a whole number of steps");
        }
        Ok(n as usize)
    }
}

/// Functionals of the terminal point.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum TerminalFunction {
    /// `amplitude · exp(-|x - center|² / width²)`.
    Gaussian { amplitude: f64, center: Vec<f64>, width: f64 },
    Coordinate(usize),
    NormSquared,
}

impl TerminalFunction {
    pub fn name(&self) -> String {
        match self {
            TerminalFunction::Gaussian { .. } => "gaussian".into(),
            TerminalFunction::Coordinate(k) => format!("x{k}"),
            TerminalFunction::NormSquared => "norm_squared".into(),
        }
    }

    pub fn eval(&self, x: &[f64]) -> f64 {
        match self {
            TerminalFunction::Gaussian { amplitude, center, width } => {
                let d2: f64 = x.iter().zip(center).map(|(a, b)| (a - b) * (a - b)).sum();
                amplitude * (-d2 / (width * width)).exp()
            }
            TerminalFunction::Coordinate(k) => x[*k],
            TerminalFunction::NormSquared => x.iter().map(|v| v * v).sum(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EnsembleStats {
    pub functional: String,
    pub mean: f64,
    /// Sample standard deviation over `√n_paths`.
    pub std_err: f64,
    pub n_paths: usize,
    pub dt: f64,
    pub horizon: f64,
    pub terminal_mean: Vec<f64>,
    pub terminal_variance: Vec<f64>,
    /// One entry per target ball.
    pub hit_fractions: Vec<f64>,
}

/// Drift evaluation without allocation.
pub(crate) enum Evaluator<'a, T> {
    Zero,
    Constant(Vec<T>),
    Radial(RadialDrift<T>),
    General(&'a FormBoundedDrift<T>),
}

impl<'a, T: Real> Evaluator<'a, T> {
    pub fn new(drift: &'a FormBoundedDrift<T>) -> Self {
        match &drift.kind {
            DriftKind::Zero => Evaluator::Zero,
            DriftKind::BoundedSmooth(SmoothField::Constant(c)) => Evaluator::Constant(c.clone()),
            _ => match drift.radial_profile() {
                Ok(p) => Evaluator::Radial(p),
                Err(_) => Evaluator::General(drift),
            },
        }
    }

    /// Writes `b(t, x)` into `out`; `clamp` caps `|b|`.
    pub fn apply(&self, t: T, x: &[T], clamp: Option<T>, out: &mut [T]) -> Result<()> {
        match self {
            Evaluator::Zero => out.iter_mut().for_each(|o| *o = T::zero()),
            Evaluator::Constant(c) => out.copy_from_slice(c),
            Evaluator::Radial(p) => {
                let r = x.iter().fold(T::zero(), |s, v| s + *v * *v).sqrt();
                if r == T::zero() {
                    out.iter_mut().for_each(|o| *o = T::zero());
                } else {
                    let mut beta = p.beta(t, r);
                    if let Some(cap) = clamp {
                        beta = beta.max(-cap).min(cap);
                    }
                    for (o, xi) in out.iter_mut().zip(x) {
                        *o = beta * *xi / r;
                    }
                }
                return Ok(());
            }
            Evaluator::General(drift) => {
                let b = drift.eval(t, x)?;
                out.copy_from_slice(&b);
            }
        }
        if let Some(cap) = clamp {
            let norm = out.iter().fold(T::zero(), |s, v| s + *v * *v).sqrt();
            if norm > cap {
                out.iter_mut().for_each(|o| *o = *o * cap / norm);
            }
        }
        Ok(())
    }
}

/// Distance from `c` to the segment `[a, b]`.
pub(crate) fn segment_distance(a: &[f64], b: &[f64], c: &[f64]) -> f64 {
    let mut ab2 = 0.0;
    let mut dot = 0.0;
    for k in 0..a.len() {
        let ab = b[k] - a[k];
        ab2 += ab * ab;
        dot += (c[k] - a[k]) * ab;
    }
    let s = if ab2 > 0.0 { (dot / ab2).clamp(0.0, 1.0) } else { 0.0 };
    (0..a.len()).map(|k| (a[k] + s * (b[k] - a[k]) - c[k]).powi(2)).sum::<f64>().sqrt()
}

/// Result of one path.
pub(crate) struct PathOutcome {
    pub terminal: Vec<f64>,
    pub hits: Vec<bool>,
}

/// Path simulation. Step `k` uses `coupling` consecutive base increments
/// `ξ_{k·coupling + j}` combined as `Σ_j ξ / √coupling`, so runs at `dt` and
/// `dt/coupling` share their Brownian path.
#[allow(clippy::too_many_arguments)]
pub(crate) fn simulate_path<T: Real>(
    eval: &Evaluator<'_, T>,
    gen: &Philox4x32,
    path: u32,
    x0: &[T],
    dt: T,
    steps: usize,
    coupling: u32,
    clamp: Option<T>,
    targets: &[Ball],
    stop_on_hit: bool,
) -> Result<PathOutcome> {
    let d = x0.len();
    let blocks = d.div_ceil(4) as u32;
    let mut x = x0.to_vec();
    let mut b = vec![T::zero(); d];
    let mut noise = vec![0.0f64; d];
    let mut prev = vec![0.0f64; d];
    let mut cur = vec![0.0f64; d];
    let mut hits = vec![false; targets.len()];
    let scale = T::lit((2.0 / coupling as f64).sqrt()) * dt.sqrt();
    for k in 0..steps {
        let t = dt * T::from_usize_lossy(k);
        eval.apply(t, &x, clamp, &mut b)?;
        noise.iter_mut().for_each(|v| *v = 0.0);
        for j in 0..coupling {
            let base = k as u64 * coupling as u64 + j as u64;
            for blk in 0..blocks {
                let z = gen.normals(counter(path, base, blk));
                for (l, zv) in z.iter().enumerate() {
                    let idx = blk as usize * 4 + l;
                    if idx < d {
                        noise[idx] += zv;
                    }
                }
            }
        }
        if !targets.is_empty() {
            prev.iter_mut().zip(&x).for_each(|(p, v)| *p = v.f64());
        }
        for i in 0..d {
            x[i] = x[i] - b[i] * dt + scale * T::lit(noise[i]);
        }
        if !targets.is_empty() {
            cur.iter_mut().zip(&x).for_each(|(p, v)| *p = v.f64());
            for (h, ball) in hits.iter_mut().zip(targets) {
                if !*h && segment_distance(&prev, &cur, &ball.center) <= ball.radius {
                    *h = true;
                }
            }
            if stop_on_hit && hits.iter().all(|h| *h) {
                break;
            }
        }
    }
    Ok(PathOutcome { terminal: x.iter().map(|v| v.f64()).collect(), hits })
}

/// Runs all paths (concurrently) and returns their outcomes in path order.
pub(crate) fn run_paths<T: Real>(
    spec: &EnsembleSpec<T>,
    dt: T,
    steps: usize,
    coupling: u32,
    clamp: Option<T>,
    stop_on_hit: bool,
) -> Result<Vec<PathOutcome>> {
    let eval = Evaluator::new(&spec.drift);
    let gen = Philox4x32::new(spec.seed);
    (0..spec.n_paths as u32)
        .into_par_iter()
        .map(|p| simulate_path(&eval, &gen, p, &spec.x0, dt, steps, coupling, clamp, &spec.targets, stop_on_hit))
        .collect()
}

/// Terminal points at `dt` and `dt/2` from one draw of the noise: the
/// coarse step `k` sums the fine increments `2k` and `2k + 1`. Matches
/// separate [`run_paths`] calls with coupling 2 and 1 up to rounding.
pub(crate) fn run_path_pairs<T: Real>(spec: &EnsembleSpec<T>, steps: usize) -> Result<Vec<(Vec<f64>, Vec<f64>)>> {
    let eval = Evaluator::new(&spec.drift);
    let gen = Philox4x32::new(spec.seed);
    let d = spec.x0.len();
    let blocks = d.div_ceil(4) as u32;
    let dt = spec.dt;
    let half = dt / T::lit(2.0);
    let fine_scale = (T::lit(2.0) * half).sqrt();
    let coarse_scale = dt.sqrt();
    (0..spec.n_paths as u32)
        .into_par_iter()
        .map(|path| {
            let mut coarse = spec.x0.clone();
            let mut fine = spec.x0.clone();
            let mut b = vec![T::zero(); d];
            let mut z = [vec![0.0f64; d], vec![0.0f64; d]];
            for k in 0..steps {
                for (j, zj) in z.iter_mut().enumerate() {
                    let step = 2 * k as u64 + j as u64;
                    for blk in 0..blocks {
                        let nz = gen.normals(counter(path, step, blk));
                        for (l, v) in nz.iter().enumerate() {
                            let idx = blk as usize * 4 + l;
                            if idx < d {
                                zj[idx] = *v;
                            }
                        }
                    }
                    eval.apply(half * T::from_usize_lossy(2 * k + j), &fine, None, &mut b)?;
                    for i in 0..d {
                        fine[i] = fine[i] - b[i] * half + fine_scale * T::lit(zj[i]);
                    }
                }
                eval.apply(dt * T::from_usize_lossy(k), &coarse, None, &mut b)?;
                for i in 0..d {
                    // Σ ξ / √2 · √(2dt)
                    coarse[i] = coarse[i] - b[i] * dt + coarse_scale * T::lit(z[0][i] + z[1][i]);
                }
            }
            Ok((coarse.iter().map(|v| v.f64()).collect(), fine.iter().map(|v| v.f64()).collect()))
        })
        .collect()
}

/// Mean and standard error with a fixed-order summation.
pub(crate) fn mean_se(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = if values.len() > 1 {
        values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1.0)
    } else {
        0.0
    };
    (mean, (var / n).sqrt())
}

pub(crate) fn summarize(spec_functional: &TerminalFunction, outcomes: &[PathOutcome], dt: f64, horizon: f64, targets: usize) -> EnsembleStats {
    let values: Vec<f64> = outcomes.iter().map(|o| spec_functional.eval(&o.terminal)).collect();
    let (mean, std_err) = mean_se(&values);
    let d = outcomes.first().map_or(0, |o| o.terminal.len());
    let mut terminal_mean = vec![0.0; d];
    let mut terminal_variance = vec![0.0; d];
    for k in 0..d {
        let col: Vec<f64> = outcomes.iter().map(|o| o.terminal[k]).collect();
        let (m, se) = mean_se(&col);
        terminal_mean[k] = m;
        terminal_variance[k] = se * se * col.len() as f64;
    }
    let n = outcomes.len() as f64;
    let hit_fractions = (0..targets).map(|j| outcomes.iter().filter(|o| o.hits[j]).count() as f64 / n).collect();
    EnsembleStats {
        functional: spec_functional.name(),
        mean,
        std_err,
        n_paths: outcomes.len(),
        dt,
        horizon,
        terminal_mean,
        terminal_variance,
        hit_fractions,
    }
}

/// `X_{k+1} = X_k − b(t_k, X_k) dt + √(2dt) ξ_k`; statistics of `f(X_T)`.
pub fn euler_maruyama<T: Real>(spec: &EnsembleSpec<T>, f: &TerminalFunction) -> Result<EnsembleStats> {
    let steps = spec.validate()?;
    let outcomes = run_paths(spec, spec.dt, steps, 1, None, false)?;
    Ok(summarize(f, &outcomes, spec.dt.f64(), spec.horizon.f64(), spec.targets.len()))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn paired_runs_match_separate_runs() {
        let spec = EnsembleSpec::new(crate::drift::constant_drift(vec![0.3, -0.2, 0.1]), vec![0.1; 3], 0.2, 0.02, 50, 9);
        let pairs = run_path_pairs(&spec, 10).unwrap();
        let coarse = run_paths(&spec, 0.02, 10, 2, None, false).unwrap();
        let fine = run_paths(&spec, 0.01, 20, 1, None, false).unwrap();
        for ((c, f), (a, b)) in pairs.iter().zip(coarse.iter().zip(&fine)) {
            for k in 0..3 {
                assert!((c[k] - a.terminal[k]).abs() < 1e-12 && (f[k] - b.terminal[k]).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn segment_distance_cases() {
        assert!((segment_distance(&[-1.0, 1.0], &[1.0, 1.0], &[0.0, 0.0]) - 1.0).abs() < 1e-15);
        assert!((segment_distance(&[1.0, 0.0], &[2.0, 0.0], &[0.0, 0.0]) - 1.0).abs() < 1e-15);
        assert_eq!(segment_distance(&[-1.0, 0.0], &[1.0, 0.0], &[0.0, 0.0]), 0.0);
    }
}
