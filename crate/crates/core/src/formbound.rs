//! Discrete check of the form-bound inequality
//! `∫‖b f‖² ≤ δ ∫‖∇f‖² + ∫ g ‖f‖²` and empirical estimation of `δ`.

use rayon::prelude::*;
use serde::Serialize;

use crate::drift::FormBoundedDrift;
use crate::error::{domain, Error, Result};
use crate::grid::SpaceGrid;
use crate::rng::{counter, Philox4x32};
use crate::scalar::Real;

/// Time nodes on `[0, t]` with trapezoid weights.
#[derive(Debug, Clone, PartialEq)]
pub struct TimeGrid<T> {
    pub nodes: Vec<T>,
    pub weights: Vec<T>,
}

impl<T: Real> TimeGrid<T> {
    pub fn uniform(t: T, n: usize) -> Result<Self> {
        if n < 2 || !(t > T::zero()) {
            return domain("time grid needs t > 0 and n >= 2");
        }
        let h = t / T::from_usize_lossy(n - 1);
        let nodes = (0..n).map(|j| h * T::from_usize_lossy(j)).collect();
        let weights = (0..n)
            .map(|j| if j == 0 || j + 1 == n { h * T::lit(0.5) } else { h })
            .collect();
        Ok(TimeGrid { nodes, weights })
    }
}

/// A separable test function `f(τ, x) = φ(τ) F(x)`.
#[derive(Debug, Clone, PartialEq)]
pub struct TestFunction<T> {
    pub id: String,
    /// `φ` at the time nodes.
    pub phi: Vec<T>,
    /// `F` at the space nodes.
    pub space: Vec<T>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TestFunctionFamily<T> {
    pub members: Vec<TestFunction<T>>,
    pub description: String,
}

impl<T: Real> TestFunctionFamily<T> {
    pub fn new(description: impl Into<String>) -> Self {
        TestFunctionFamily { members: Vec::new(), description: description.into() }
    }

    pub fn extend(&mut self, other: TestFunctionFamily<T>) {
        if !self.description.is_empty() {
            self.description.push_str("; ");
        }
        self.description.push_str(&other.description);
        self.members.extend(other.members);
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FormRatio {
    pub lhs: f64,
    pub grad_term: f64,
    pub mass_term: f64,
    pub ratio: f64,
}

/// Discrete `(∫‖bf‖², ∫‖∇f‖², ∫g‖f‖², (lhs − mass)/grad)`.
pub fn form_ratio<T: Real, G: SpaceGrid<T>>(
    drift: &FormBoundedDrift<T>,
    f: &TestFunction<T>,
    grid: &G,
    times: &TimeGrid<T>,
) -> Result<FormRatio> {
    if f.space.len() != grid.len() || f.phi.len() != times.nodes.len() {
        return domain(format!("test function {} does not match the grid", f.id));
    }
    let f2: Vec<T> = f.space.iter().map(|v| *v * *v).collect();
    let norm2 = grid.integrate(&f2).f64();
    let grad2 = grid.integrate(&grid.grad_sq(&f.space)).f64();
    let time_dependent = drift.is_time_dependent();
    let frozen = if time_dependent { None } else { Some(grid.drift_sq(drift, T::zero())?) };
    let (mut lhs, mut grad, mut mass) = (0.0, 0.0, 0.0);
    for (j, (&t, &w)) in times.nodes.iter().zip(&times.weights).enumerate() {
        let phi2 = (f.phi[j] * f.phi[j]).f64() * w.f64();
        if phi2 == 0.0 {
            continue;
        }
        let b2 = match &frozen {
            Some(b2) => grid.integrate(&b2.iter().zip(&f2).map(|(a, b)| *a * *b).collect::<Vec<_>>()),
            None => {
                let b2 = grid.drift_sq(drift, t)?;
                grid.integrate(&b2.iter().zip(&f2).map(|(a, b)| *a * *b).collect::<Vec<_>>())
            }
        };
        lhs += phi2 * b2.f64();
        grad += phi2 * grad2;
        mass += phi2 * drift.g_at(t).f64() * norm2;
    }
    if grad < 1e-14 {
        return Err(Error::Degenerate(format!("gradient term of {} vanishes", f.id)));
    }
    Ok(FormRatio { lhs, grad_term: grad, mass_term: mass, ratio: (lhs - mass) / grad })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FormBoundRow {
    pub member_id: String,
    #[serde(flatten)]
    pub ratio: FormRatio,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FormBoundEstimate {
    pub delta_hat: f64,
    pub rows: Vec<FormBoundRow>,
}

/// `δ̂ = max_f ratio(f)`, a lower estimate of the true form bound.
pub fn estimate_form_bound<T: Real, G: SpaceGrid<T>>(
    drift: &FormBoundedDrift<T>,
    family: &TestFunctionFamily<T>,
    grid: &G,
    times: &TimeGrid<T>,
) -> Result<FormBoundEstimate> {
    if family.is_empty() {
        return domain("test-function family is empty");
    }
    let rows: Vec<FormBoundRow> = family
        .members
        .par_iter()
        .map(|f| Ok(FormBoundRow { member_id: f.id.clone(), ratio: form_ratio(drift, f, grid, times)? }))
        .collect::<Result<_>>()?;
    let delta_hat = rows.iter().map(|r| r.ratio.ratio).fold(f64::NEG_INFINITY, f64::max);
    Ok(FormBoundEstimate { delta_hat, rows })
}

pub const FORM_BOUND_HEADER: &str = "member_id,lhs,grad_term,mass_term,ratio";

pub fn form_bound_csv(est: &FormBoundEstimate) -> String {
    let mut out = String::from(FORM_BOUND_HEADER);
    out.push('\n');
    for r in &est.rows {
        let f = &r.ratio;
        out.push_str(&format!("{},{:e},{:e},{:e},{}\n", r.member_id, f.lhs, f.grad_term, f.mass_term, f.ratio));
    }
    out
}

fn ones<T: Real>(times: &TimeGrid<T>) -> Vec<T> {
    vec![T::one(); times.nodes.len()]
}

/// `sin²` bump in `ln r` between `a` and `b`, zero outside.
fn log_window(r: f64, a: f64, b: f64) -> f64 {
    if r <= a || r >= b {
        return 0.0;
    }
    let s = (r / a).ln() / (b / a).ln();
    (std::f64::consts::PI * s).sin().powi(2)
}

/// Truncated Hardy near-optimizers `r^{-(d-2)/2 + η} ψ(r)` with `ψ` a smooth
/// window in `ln r` supported on `[r_in, r_out]`.
pub fn hardy_near_optimizers<T: Real, G: SpaceGrid<T>>(
    grid: &G,
    times: &TimeGrid<T>,
    etas: &[f64],
    r_in: f64,
    r_out: f64,
) -> TestFunctionFamily<T> {
    let d = grid.dim() as f64;
    let members = etas
        .iter()
        .map(|&eta| {
            let space = (0..grid.len())
                .map(|i| {
                    let r = grid.radius(i).f64();
                    if r == 0.0 {
                        return T::zero();
                    }
                    T::lit(r.powf(-(d - 2.0) / 2.0 + eta) * log_window(r, r_in, r_out))
                })
                .collect();
            TestFunction { id: format!("hardy_eta_{eta}"), phi: ones(times), space }
        })
        .collect();
    TestFunctionFamily { members, description: format!("Hardy near-optimizers, eta in {etas:?}") }
}

/// Gaussian packets `exp(-|x - c|²/w²)`; on radial grids the centers are
/// radii (spherical shells).
pub fn gaussian_packets<T: Real, G: SpaceGrid<T>, P>(
    grid: &G,
    times: &TimeGrid<T>,
    packets: &[(P, f64)],
    position: impl Fn(usize) -> Vec<f64>,
) -> TestFunctionFamily<T>
where
    P: AsRef<[f64]>,
{
    let members = packets
        .iter()
        .enumerate()
        .map(|(k, (center, width))| {
            let c = center.as_ref();
            let space = (0..grid.len())
                .map(|i| {
                    let x = position(i);
                    let d2: f64 = x.iter().zip(c).map(|(a, b)| (a - b) * (a - b)).sum();
                    T::lit((-d2 / (width * width)).exp())
                })
                .collect();
            TestFunction { id: format!("gauss_{k}"), phi: ones(times), space }
        })
        .collect();
    TestFunctionFamily { members, description: format!("{} Gaussian packets", packets.len()) }
}

/// Radial shells `exp(-(r - c)²/w²)` for each `(c, w)`.
pub fn radial_packets<T: Real, G: SpaceGrid<T>>(grid: &G, times: &TimeGrid<T>, shells: &[(f64, f64)]) -> TestFunctionFamily<T> {
    let packets: Vec<([f64; 1], f64)> = shells.iter().map(|&(c, w)| ([c], w)).collect();
    gaussian_packets(grid, times, &packets, |i| vec![grid.radius(i).f64()])
}

/// Seeded sums of three radial bumps with random centers, widths and
/// amplitudes, and a random time profile.
pub fn random_bumps<T: Real, G: SpaceGrid<T>>(
    grid: &G,
    times: &TimeGrid<T>,
    count: usize,
    r_scale: f64,
    seed: u64,
) -> TestFunctionFamily<T> {
    let rng = Philox4x32::new(seed);
    let t_end = times.nodes.last().map(|t| t.f64()).unwrap_or(1.0);
    let members = (0..count)
        .map(|k| {
            let bumps: Vec<[f64; 4]> = (0..3).map(|j| rng.uniforms(counter(k as u32, j, 0))).collect();
            let tp = rng.uniforms(counter(k as u32, 3, 0));
            let space = (0..grid.len())
                .map(|i| {
                    let r = grid.radius(i).f64();
                    T::lit(bumps.iter().map(|u| {
                        let c = u[0] * r_scale * 0.6;
                        let w = r_scale * (0.03 + 0.2 * u[1]);
                        let a = 2.0 * u[2] - 1.0;
                        a * (-(r - c) * (r - c) / (w * w)).exp()
                    }).sum())
                })
                .collect();
            let phi = times
                .nodes
                .iter()
                .map(|t| T::lit(1.0 + 0.5 * tp[0] * (std::f64::consts::TAU * (tp[1] + t.f64() / t_end)).sin()))
                .collect();
            TestFunction { id: format!("random_{k}"), phi, space }
        })
        .collect();
    TestFunctionFamily { members, description: format!("{count} random bumps (seed {seed})") }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::drift::{constant_drift, hardy_drift, zero_drift};
    use crate::grid::{Boundary, CartesianGrid, LogRadialGrid, RadialGrid};
    use crate::rational::rat;

    #[test]
    fn zero_drift_has_zero_ratio() {
        let g = RadialGrid::new(3, 4.0f64, 400).unwrap();
        let t = TimeGrid::uniform(1.0, 3).unwrap();
        let fam = radial_packets(&g, &t, &[(1.0, 0.3)]);
        let est = estimate_form_bound(&zero_drift(3), &fam, &g, &t).unwrap();
        assert_eq!(est.delta_hat, 0.0);
        assert_eq!(est.rows[0].ratio.lhs, 0.0);
    }

    #[test]
    fn bounded_drift_sanity_identity() {
        let g = CartesianGrid::new(3, 3.0f64, 30, Boundary::Dirichlet).unwrap();
        let t = TimeGrid::uniform(1.0, 3).unwrap();
        let b = constant_drift(vec![0.6, 0.0, 0.8]);
        let fam = gaussian_packets(&g, &t, &[([0.5, 0.0, 0.0], 0.7)], |i| g.point(i));
        let f = &fam.members[0];
        let r = form_ratio(&b, f, &g, &t).unwrap();
        let f2: Vec<f64> = f.space.iter().map(|v| v * v).collect();
        assert!(r.lhs <= 1.0 * g.integrate(&f2) * 1.0 + 1e-12);
        // g = |c|² exactly compensates
        assert!(r.ratio.abs() < 1e-12);
    }

    #[test]
    fn hardy_packets_respect_the_bound() {
        let g = CartesianGrid::new(3, 4.0f64, 64, Boundary::Dirichlet).unwrap();
        let t = TimeGrid::uniform(1.0, 2).unwrap();
        let b = hardy_drift(3, &rat(9, 25)).unwrap();
        let fam = gaussian_packets(&g, &t, &[([0.5, 0.25, 0.0], 0.8), ([1.0, 0.0, 0.0], 0.5)], |i| g.point(i));
        let est = estimate_form_bound(&b, &fam, &g, &t).unwrap();
        assert!(est.delta_hat > 0.0 && est.delta_hat <= 0.36, "{}", est.delta_hat);
    }

    #[test]
    fn degenerate_member() {
        let g = RadialGrid::new(3, 4.0f64, 100).unwrap();
        let t = TimeGrid::uniform(1.0, 2).unwrap();
        let f = TestFunction { id: "zero".into(), phi: vec![1.0; 2], space: vec![0.0; g.len()] };
        assert!(matches!(form_ratio(&zero_drift(3), &f, &g, &t), Err(Error::Degenerate(_))));
    }

    #[test]
    fn near_optimizers_approach_delta() {
        let g = LogRadialGrid::new(3, 1e-9f64, 1.0, 2000).unwrap();
        let t = TimeGrid::uniform(1.0, 2).unwrap();
        let fam = hardy_near_optimizers(&g, &t, &[0.1, 0.2, 0.4], 2e-9, 0.5);
        let est = estimate_form_bound(&hardy_drift(3, &rat(9, 25)).unwrap(), &fam, &g, &t).unwrap();
        assert!(est.delta_hat > 0.8 * 0.36 && est.delta_hat <= 0.36, "{}", est.delta_hat);
        let csv = form_bound_csv(&est);
        assert!(csv.starts_with("member_id,lhs,grad_term,mass_term,ratio\n"));
    }
}
