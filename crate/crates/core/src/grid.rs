//! Spatial grids with quadrature weights and discrete gradients.

use crate::drift::FormBoundedDrift;
use crate::error::{domain, Error, Result};
use crate::quadrature::sphere_area;
use crate::scalar::Real;

/// A spatial grid carrying the measure `dx` of `R^d`.
pub trait SpaceGrid<T: Real>: Sync {
    fn dim(&self) -> usize;
    fn len(&self) -> usize;
    fn is_empty(&self) -> bool {
        self.len() == 0
    }
    /// Quadrature weight of node `i`.
    fn weight(&self, i: usize) -> T;
    /// `|x_i|`.
    fn radius(&self, i: usize) -> T;
    /// `|∇f|²` at every node: centered differences inside, one-sided at edges.
    fn grad_sq(&self, f: &[T]) -> Vec<T>;
    /// `|b(t, x_i)|²` at every node; the node containing a singularity is
    /// masked to zero.
    fn drift_sq(&self, drift: &FormBoundedDrift<T>, t: T) -> Result<Vec<T>>;

    fn integrate(&self, f: &[T]) -> T {
        (0..self.len()).map(|i| self.weight(i) * f[i]).sum()
    }
}

fn radial_drift_sq<T: Real>(drift: &FormBoundedDrift<T>, t: T, radii: impl Iterator<Item = T>) -> Result<Vec<T>> {
    let p = drift.radial_profile()?;
    Ok(radii
        .map(|r| {
            if r == T::zero() {
                if p.is_singular() {
                    T::zero()
                } else {
                    // b(0) = lim β(r) x/r; β(0) = 0 for every smooth radial field
                    let b = p.smooth_at(t, r);
                    b * b
                }
            } else {
                let b = p.beta(t, r);
                b * b
            }
        })
        .collect())
}

/// Uniform radial grid `r_i = i Δr`, `i = 0..=n_r`, with the measure
/// `|S^{d-1}| r^{d-1} dr` (trapezoid).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RadialGrid<T> {
    pub d: usize,
    pub r_max: T,
    pub n_r: usize,
}

impl<T: Real> RadialGrid<T> {
    pub fn new(d: usize, r_max: T, n_r: usize) -> Result<Self> {
        if d < 1 || n_r < 2 || !(r_max > T::zero()) {
            return domain("radial grid needs d >= 1, n_r >= 2 and r_max > 0");
        }
        Ok(RadialGrid { d, r_max, n_r })
    }

    pub fn dr(&self) -> T {
        self.r_max / T::from_usize_lossy(self.n_r)
    }

    pub fn r(&self, i: usize) -> T {
        self.dr() * T::from_usize_lossy(i)
    }

    pub fn nodes(&self) -> Vec<T> {
        (0..=self.n_r).map(|i| self.r(i)).collect()
    }

    /// `df/dr` with the even reflection at `r = 0`.
    pub fn derivative(&self, f: &[T]) -> Vec<T> {
        let n = self.n_r;
        let h = self.dr();
        let two = T::lit(2.0);
        (0..=n)
            .map(|i| {
                if i == 0 {
                    T::zero()
                } else if i == n {
                    (T::lit(3.0) * f[n] - T::lit(4.0) * f[n - 1] + f[n - 2]) / (two * h)
                } else {
                    (f[i + 1] - f[i - 1]) / (two * h)
                }
            })
            .collect()
    }
}

impl<T: Real> SpaceGrid<T> for RadialGrid<T> {
    fn dim(&self) -> usize {
        self.d
    }
    fn len(&self) -> usize {
        self.n_r + 1
    }
    fn weight(&self, i: usize) -> T {
        let sigma = T::lit(sphere_area(self.d - 1));
        let w = sigma * self.r(i).powi(self.d as i32 - 1) * self.dr();
        if i == self.n_r {
            w * T::lit(0.5)
        } else {
            w
        }
    }
    fn radius(&self, i: usize) -> T {
        self.r(i)
    }
    fn grad_sq(&self, f: &[T]) -> Vec<T> {
        self.derivative(f).into_iter().map(|g| g * g).collect()
    }
    fn drift_sq(&self, drift: &FormBoundedDrift<T>, t: T) -> Result<Vec<T>> {
        radial_drift_sq(drift, t, (0..=self.n_r).map(|i| self.r(i)))
    }
}

/// Logarithmic radial grid `r_i = r_min e^{i Δs}` on `[r_min, r_max]`, with
/// the measure `|S^{d-1}| r^d ds`. Resolves profiles spread over many
/// decades of radius.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LogRadialGrid<T> {
    pub d: usize,
    pub r_min: T,
    pub r_max: T,
    pub n: usize,
}

impl<T: Real> LogRadialGrid<T> {
    pub fn new(d: usize, r_min: T, r_max: T, n: usize) -> Result<Self> {
        if d < 1 || n < 2 || !(r_min > T::zero()) || !(r_max > r_min) {
            return domain("log grid needs 0 < r_min < r_max and n >= 2");
        }
        Ok(LogRadialGrid { d, r_min, r_max, n })
    }

    pub fn ds(&self) -> T {
        (self.r_max / self.r_min).ln() / T::from_usize_lossy(self.n)
    }

    pub fn r(&self, i: usize) -> T {
        self.r_min * (self.ds() * T::from_usize_lossy(i)).exp()
    }
}

impl<T: Real> SpaceGrid<T> for LogRadialGrid<T> {
    fn dim(&self) -> usize {
        self.d
    }
    fn len(&self) -> usize {
        self.n + 1
    }
    fn weight(&self, i: usize) -> T {
        let sigma = T::lit(sphere_area(self.d - 1));
        let w = sigma * self.r(i).powi(self.d as i32) * self.ds();
        if i == 0 || i == self.n {
            w * T::lit(0.5)
        } else {
            w
        }
    }
    fn radius(&self, i: usize) -> T {
        self.r(i)
    }
    fn grad_sq(&self, f: &[T]) -> Vec<T> {
        let n = self.n;
        let h = self.ds();
        let two = T::lit(2.0);
        (0..=n)
            .map(|i| {
                let dfds = if i == 0 {
                    (-T::lit(3.0) * f[0] + T::lit(4.0) * f[1] - f[2]) / (two * h)
                } else if i == n {
                    (T::lit(3.0) * f[n] - T::lit(4.0) * f[n - 1] + f[n - 2]) / (two * h)
                } else {
                    (f[i + 1] - f[i - 1]) / (two * h)
                };
                let g = dfds / self.r(i);
                g * g
            })
            .collect()
    }
    fn drift_sq(&self, drift: &FormBoundedDrift<T>, t: T) -> Result<Vec<T>> {
        radial_drift_sq(drift, t, (0..=self.n).map(|i| self.r(i)))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Boundary {
    /// `n + 1` nodes per axis including both edges, zero outside.
    Dirichlet,
    /// `n` nodes per axis, `x_n ≡ x_0`.
    Periodic,
}

/// Tensor grid on `[-L, L]^d` with spacing `Δx = 2L/n`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CartesianGrid<T> {
    pub d: usize,
    pub half_width: T,
    pub n: usize,
    pub boundary: Boundary,
}

impl<T: Real> CartesianGrid<T> {
    pub fn new(d: usize, half_width: T, n: usize, boundary: Boundary) -> Result<Self> {
        if d < 1 || n < 4 || !(half_width > T::zero()) {
            return domain("Cartesian grid needs d >= 1, n >= 4 and L > 0");
        }
        let g = CartesianGrid { d, half_width, n, boundary };
        if (g.per_axis() as f64).powi(d as i32) > 5e8 {
            return domain("Cartesian grid is too large");
        }
        Ok(g)
    }

    pub fn dx(&self) -> T {
        T::lit(2.0) * self.half_width / T::from_usize_lossy(self.n)
    }

    pub fn per_axis(&self) -> usize {
        match self.boundary {
            Boundary::Dirichlet => self.n + 1,
            Boundary::Periodic => self.n,
        }
    }

    pub fn coord(&self, k: usize) -> T {
        -self.half_width + self.dx() * T::from_usize_lossy(k)
    }

    /// Multi-index of a flat node index (last axis fastest).
    pub fn index(&self, mut flat: usize) -> Vec<usize> {
        let m = self.per_axis();
        let mut idx = vec![0; self.d];
        for k in (0..self.d).rev() {
            idx[k] = flat % m;
            flat /= m;
        }
        idx
    }

    pub fn point(&self, flat: usize) -> Vec<T> {
        self.index(flat).into_iter().map(|k| self.coord(k)).collect()
    }

    pub fn stride(&self, axis: usize) -> usize {
        self.per_axis().pow((self.d - 1 - axis) as u32)
    }

    /// `∂f/∂x_axis` at every node.
    pub fn partial(&self, f: &[T], axis: usize) -> Vec<T> {
        let m = self.per_axis();
        let stride = self.stride(axis);
        let h = self.dx();
        let two = T::lit(2.0);
        (0..f.len())
            .map(|i| {
                let k = (i / stride) % m;
                match self.boundary {
                    Boundary::Periodic => {
                        let up = if k + 1 == m { i + stride - m * stride } else { i + stride };
                        let down = if k == 0 { i + (m - 1) * stride } else { i - stride };
                        (f[up] - f[down]) / (two * h)
                    }
                    Boundary::Dirichlet => {
                        if k == 0 {
                            (-T::lit(3.0) * f[i] + T::lit(4.0) * f[i + stride] - f[i + 2 * stride]) / (two * h)
                        } else if k + 1 == m {
                            (T::lit(3.0) * f[i] - T::lit(4.0) * f[i - stride] + f[i - 2 * stride]) / (two * h)
                        } else {
                            (f[i + stride] - f[i - stride]) / (two * h)
                        }
                    }
                }
            })
            .collect()
    }

    /// Nodes within half a cell of the origin in every coordinate.
    pub fn is_origin_cell(&self, flat: usize) -> bool {
        let half = self.dx() * T::lit(0.5 + 1e-9);
        self.point(flat).iter().all(|x| x.abs() <= half)
    }
}

impl<T: Real> SpaceGrid<T> for CartesianGrid<T> {
    fn dim(&self) -> usize {
        self.d
    }
    fn len(&self) -> usize {
        self.per_axis().pow(self.d as u32)
    }
    fn weight(&self, i: usize) -> T {
        let base = self.dx().powi(self.d as i32);
        match self.boundary {
            Boundary::Periodic => base,
            Boundary::Dirichlet => {
                let edges = self.index(i).into_iter().filter(|&k| k == 0 || k == self.n).count();
                base * T::lit(0.5f64.powi(edges as i32))
            }
        }
    }
    fn radius(&self, i: usize) -> T {
        self.point(i).iter().fold(T::zero(), |s, x| s + *x * *x).sqrt()
    }
    fn grad_sq(&self, f: &[T]) -> Vec<T> {
        let mut out = vec![T::zero(); f.len()];
        for axis in 0..self.d {
            for (o, g) in out.iter_mut().zip(self.partial(f, axis)) {
                *o = *o + g * g;
            }
        }
        out
    }
    fn drift_sq(&self, drift: &FormBoundedDrift<T>, t: T) -> Result<Vec<T>> {
        if drift.d != self.d {
            return domain("drift and grid dimensions differ");
        }
        let singular = drift.is_singular();
        (0..self.len())
            .map(|i| {
                if singular && self.is_origin_cell(i) {
                    return Ok(T::zero());
                }
                match drift.eval(t, &self.point(i)) {
                    Ok(b) => Ok(b.iter().fold(T::zero(), |s, v| s + *v * *v)),
                    Err(Error::Singularity) => Ok(T::zero()),
                    Err(e) => Err(e),
                }
            })
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn radial_measure_integrates_gaussians() {
        // ∫_{R^3} e^{-|x|²} = π^{3/2}
        let g = RadialGrid::new(3, 8.0f64, 4000).unwrap();
        let f: Vec<f64> = g.nodes().iter().map(|r| (-r * r).exp()).collect();
        assert!((g.integrate(&f) - PI.powf(1.5)).abs() < 1e-5);
        let lg = LogRadialGrid::new(3, 1e-6f64, 8.0, 4000).unwrap();
        let f: Vec<f64> = (0..lg.len()).map(|i| (-lg.r(i).powi(2)).exp()).collect();
        assert!((lg.integrate(&f) - PI.powf(1.5)).abs() < 1e-5);
    }

    #[test]
    fn cartesian_measure_and_gradient() {
        let g = CartesianGrid::new(2, 6.0f64, 120, Boundary::Dirichlet).unwrap();
        let f: Vec<f64> = (0..g.len()).map(|i| {
            let p = g.point(i);
            (-(p[0] * p[0] + p[1] * p[1])).exp()
        }).collect();
        assert!((g.integrate(&f) - PI).abs() < 1e-8);
        // ∫|∇e^{-|x|²}|² = ∫ 4|x|² e^{-2|x|²} = π in two dimensions
        let gs = g.grad_sq(&f);
        // centered differences lose O(Δx²) ≈ 1% at Δx = 0.1
        assert!((g.integrate(&gs) - PI).abs() < 4e-2, "{}", g.integrate(&gs));
        let p = CartesianGrid::new(1, PI as f64, 64, Boundary::Periodic).unwrap();
        let s: Vec<f64> = (0..p.len()).map(|i| p.point(i)[0].sin()).collect();
        let ds = p.partial(&s, 0);
        for i in 0..p.len() {
            assert!((ds[i] - p.point(i)[0].cos()).abs() < 2e-3);
        }
    }

    #[test]
    fn origin_cell_masking() {
        let g = CartesianGrid::new(3, 1.0f64, 4, Boundary::Dirichlet).unwrap();
        let masked = (0..g.len()).filter(|&i| g.is_origin_cell(i)).count();
        assert_eq!(masked, 1);
    }
}
