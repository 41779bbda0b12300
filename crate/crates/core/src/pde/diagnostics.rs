//! Gradient norms and the energy functionals of `w = ∇u`:
//!
//! `I_q = Σ_i ⟨|∇w_i|², |w|^{q-2}⟩`, `J_q = ⟨|∇|w||², |w|^{q-2}⟩`,
//! `B_q = ⟨|b·w|², |w|^{q-2}⟩`, `X_q = ⟨b·w, ∇·(w|w|^{q-2})⟩`,
//! which satisfy `q⁻¹ ∂_τ‖w‖_q^q + I_q + (q-2) J_q = X_q` along solutions.

use std::fmt::Write as _;

use crate::drift::FormBoundedDrift;
use crate::error::{domain, Result};
use crate::grid::{CartesianGrid, RadialGrid, SpaceGrid};
use crate::scalar::Real;

use super::SolutionField;

pub const NORM_TRACE_HEADER: &str = "tau,sup_norm,grad_q,grad_qj_integrand,I_q,J_q,B_q,X_q,identity_residual";

/// Functionals of a single field.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Functionals<T> {
    pub sup_norm: T,
    /// `‖w‖_q^q`.
    pub grad_q_pow: T,
    /// `‖w‖_{qj}^q`, the integrand of the `L^{qj}` term.
    pub grad_qj_pow: T,
    pub i_q: T,
    pub j_q: T,
    pub b_q: T,
    pub x_q: T,
    /// `⟨|∂_τu|², |w|^{q-2}⟩` with `∂_τu` from the equation.
    pub dt_term: T,
}

/// `j = d/(d-2)`; infinite for `d <= 2`.
fn sobolev_j(d: usize) -> f64 {
    if d > 2 {
        d as f64 / (d as f64 - 2.0)
    } else {
        f64::INFINITY
    }
}

fn finish_qj<T: Real>(acc: T, sup: T, q: f64, j: f64) -> T {
    if j.is_infinite() {
        sup.powf(T::lit(q))
    } else {
        acc.powf(T::lit(1.0 / j))
    }
}

/// Functionals on a radial grid for `b = β x/|x|` with
/// `β(r) = c/r + beta_s(r)` sampled at the nodes.
pub fn radial_functionals<T: Real>(grid: &RadialGrid<T>, u: &[T], c: T, beta_s: &[T], q: f64) -> Functionals<T> {
    let n = grid.n_r;
    let h = grid.dr();
    let h2 = h * h;
    let d = grid.d;
    let dm1 = T::from_usize_lossy(d - 1);
    let qt = T::lit(q);
    let qm1 = T::lit(q - 1.0);
    let qm2 = T::lit(q - 2.0);
    let j = sobolev_j(d);
    let qj = T::lit(q * j);
    let two = T::lit(2.0);
    let mut f = Functionals::<T>::default();
    let mut qj_acc = T::zero();
    let mut grad_sup = T::zero();
    for i in 0..=n {
        let (ur, urr) = if i == 0 {
            (T::zero(), two * (u[1] - u[0]) / h2)
        } else if i == n {
            (
                (T::lit(3.0) * u[n] - T::lit(4.0) * u[n - 1] + u[n - 2]) / (two * h),
                (two * u[n] - T::lit(5.0) * u[n - 1] + T::lit(4.0) * u[n - 2] - u[n - 3]) / h2,
            )
        } else {
            ((u[i + 1] - u[i - 1]) / (two * h), (u[i + 1] - two * u[i] + u[i - 1]) / h2)
        };
        let r = grid.r(i);
        // u_r / r tends to u_rr at the origin
        let ratio = if i == 0 { urr } else { ur / r };
        let bw = if i == 0 { c * urr } else { (c / r + beta_s[i]) * ur };
        let a = ur.abs();
        let p = a.powf(qm2);
        let w = grid.weight(i);
        f.sup_norm = f.sup_norm.max(u[i].abs());
        f.grad_q_pow = f.grad_q_pow + w * a.powf(qt);
        if j.is_finite() {
            qj_acc = qj_acc + w * a.powf(qj);
        }
        grad_sup = grad_sup.max(a);
        f.i_q = f.i_q + w * (urr * urr + dm1 * ratio * ratio) * p;
        f.j_q = f.j_q + w * urr * urr * p;
        f.b_q = f.b_q + w * bw * bw * p;
        f.x_q = f.x_q + w * bw * p * (qm1 * urr + dm1 * ratio);
        let ut = urr + dm1 * ratio - bw;
        f.dt_term = f.dt_term + w * ut * ut * p;
    }
    f.grad_qj_pow = finish_qj(qj_acc, grad_sup, q, j);
    f
}

/// Functionals on a Cartesian grid. `b[k]` holds the `k`-th drift component
/// at every node and `weights` the quadrature weights.
pub fn cartesian_functionals<T: Real>(grid: &CartesianGrid<T>, u: &[T], b: &[Vec<T>], weights: &[T], q: f64) -> Functionals<T> {
    let d = grid.d;
    let m = grid.per_axis();
    let h = grid.dx();
    let h2 = h * h;
    let two = T::lit(2.0);
    let w: Vec<Vec<T>> = (0..d).map(|k| grid.partial(u, k)).collect();
    // Hessian: 3-point second differences on the diagonal, differences of
    // the gradient off it (symmetrized)
    let mut hess: Vec<Vec<Vec<T>>> = vec![vec![Vec::new(); d]; d];
    for k in 0..d {
        let stride = grid.stride(k);
        hess[k][k] = (0..u.len())
            .map(|i| {
                let idx = (i / stride) % m;
                let at = |o: isize| -> T {
                    let j = idx as isize + o;
                    match grid.boundary {
                        crate::grid::Boundary::Periodic => {
                            let jj = j.rem_euclid(m as isize) as usize;
                            u[i - idx * stride + jj * stride]
                        }
                        crate::grid::Boundary::Dirichlet => {
                            if j < 0 || j >= m as isize {
                                T::zero()
                            } else {
                                u[i - idx * stride + j as usize * stride]
                            }
                        }
                    }
                };
                (at(1) - two * at(0) + at(-1)) / h2
            })
            .collect();
    }
    for k in 0..d {
        for l in (k + 1)..d {
            let a = grid.partial(&w[k], l);
            let bb = grid.partial(&w[l], k);
            let sym: Vec<T> = a.iter().zip(&bb).map(|(x, y)| (*x + *y) / two).collect();
            hess[l][k] = sym.clone();
            hess[k][l] = sym;
        }
    }
    let qt = T::lit(q);
    let qm2 = T::lit(q - 2.0);
    let qm4 = T::lit(q - 4.0);
    let j = sobolev_j(d);
    let qj = T::lit(q * j);
    let mut f = Functionals::<T>::default();
    let mut qj_acc = T::zero();
    let mut grad_sup = T::zero();
    let mut hw = vec![T::zero(); d];
    for i in 0..u.len() {
        let wt = weights[i];
        let a2 = (0..d).fold(T::zero(), |s, k| s + w[k][i] * w[k][i]);
        let a = a2.sqrt();
        f.sup_norm = f.sup_norm.max(u[i].abs());
        f.grad_q_pow = f.grad_q_pow + wt * a.powf(qt);
        if j.is_finite() {
            qj_acc = qj_acc + wt * a.powf(qj);
        }
        grad_sup = grad_sup.max(a);
        let mut hess_sq = T::zero();
        let mut lap = T::zero();
        for k in 0..d {
            lap = lap + hess[k][k][i];
            let mut s = T::zero();
            for l in 0..d {
                let hv = hess[k][l][i];
                hess_sq = hess_sq + hv * hv;
                s = s + hv * w[l][i];
            }
            hw[k] = s;
        }
        let bw = (0..d).fold(T::zero(), |s, k| s + b[k][i] * w[k][i]);
        let ut = lap - bw;
        if a > T::zero() {
            let p = a.powf(qm2);
            let hw_sq = hw.iter().fold(T::zero(), |s, v| s + *v * *v);
            let whw = (0..d).fold(T::zero(), |s, k| s + w[k][i] * hw[k]);
            f.i_q = f.i_q + wt * hess_sq * p;
            f.j_q = f.j_q + wt * hw_sq * a.powf(qm4);
            f.b_q = f.b_q + wt * bw * bw * p;
            f.x_q = f.x_q + wt * bw * p * (lap + qm2 * whw / a2);
            f.dt_term = f.dt_term + wt * ut * ut * p;
        }
    }
    f.grad_qj_pow = finish_qj(qj_acc, grad_sup, q, j);
    f
}

/// `(‖∇u‖_q, ‖∇u‖_{qj})` under the grid measure; `j = d/(d-2)`, and the
/// second entry is the sup norm of `|∇u|` when `d <= 2`.
pub fn grad_norms<T: Real, G: SpaceGrid<T>>(grid: &G, field: &SolutionField<T>, q: f64) -> (T, T) {
    let g2 = grid.grad_sq(&field.values);
    let j = sobolev_j(grid.dim());
    let half_q = T::lit(q / 2.0);
    let nq: T = (0..g2.len()).map(|i| grid.weight(i) * g2[i].powf(half_q)).sum();
    let norm_q = nq.powf(T::lit(1.0 / q));
    let norm_qj = if j.is_finite() {
        let e = T::lit(q * j / 2.0);
        let s: T = (0..g2.len()).map(|i| grid.weight(i) * g2[i].powf(e)).sum();
        s.powf(T::lit(1.0 / (q * j)))
    } else {
        g2.iter().fold(T::zero(), |m, v| m.max(*v)).sqrt()
    };
    (norm_q, norm_qj)
}

/// Functionals at a snapshot together with the identity residual, from the
/// neighbouring snapshots.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Diagnostics<T> {
    pub i_q: T,
    pub j_q: T,
    pub b_q: T,
    pub x_q: T,
    pub identity_residual: T,
}

/// Radial version: `prev`, `field` and `next` must be equally spaced in time.
pub fn functional_diagnostics<T: Real>(
    grid: &RadialGrid<T>,
    prev: &SolutionField<T>,
    field: &SolutionField<T>,
    next: &SolutionField<T>,
    drift: &FormBoundedDrift<T>,
    q: f64,
) -> Result<Diagnostics<T>> {
    if !(next.tau > prev.tau) {
        return domain("snapshots must be increasing in time");
    }
    let p = drift.radial_profile()?;
    let beta_s: Vec<T> = grid.nodes().into_iter().map(|r| p.smooth_at(field.tau, r)).collect();
    let f = radial_functionals(grid, &field.values, p.singular_coeff, &beta_s, q);
    let fp = radial_functionals(grid, &prev.values, p.singular_coeff, &beta_s, q);
    let fn_ = radial_functionals(grid, &next.values, p.singular_coeff, &beta_s, q);
    let dn = (fn_.grad_q_pow - fp.grad_q_pow) / (next.tau - prev.tau);
    let qt = T::lit(q);
    Ok(Diagnostics {
        i_q: f.i_q,
        j_q: f.j_q,
        b_q: f.b_q,
        x_q: f.x_q,
        identity_residual: (dn / qt + f.i_q + (qt - T::lit(2.0)) * f.j_q - f.x_q).abs(),
    })
}

/// Time series of the functionals along a solve.
#[derive(Debug, Clone, PartialEq)]
pub struct NormTrace<T> {
    pub d: usize,
    pub q: f64,
    pub times: Vec<T>,
    pub sup_norm: Vec<T>,
    /// `‖∇u‖_q`.
    pub grad_q: Vec<T>,
    /// `‖∇u‖_{qj}`.
    pub grad_qj: Vec<T>,
    /// `‖∇u‖_q^q`, kept to avoid a root/power round trip.
    pub grad_q_pow: Vec<T>,
    pub i_q: Vec<T>,
    pub j_q: Vec<T>,
    pub b_q: Vec<T>,
    pub x_q: Vec<T>,
    pub dt_term: Vec<T>,
    pub identity_residual: Vec<T>,
}

impl<T: Real> NormTrace<T> {
    pub fn new(d: usize, q: f64) -> Self {
        NormTrace {
            d,
            q,
            times: Vec::new(),
            sup_norm: Vec::new(),
            grad_q: Vec::new(),
            grad_qj: Vec::new(),
            grad_q_pow: Vec::new(),
            i_q: Vec::new(),
            j_q: Vec::new(),
            b_q: Vec::new(),
            x_q: Vec::new(),
            dt_term: Vec::new(),
            identity_residual: Vec::new(),
        }
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn push(&mut self, tau: T, f: &Functionals<T>) {
        let inv_q = T::lit(1.0 / self.q);
        self.times.push(tau);
        self.sup_norm.push(f.sup_norm);
        self.grad_q_pow.push(f.grad_q_pow);
        self.grad_q.push(f.grad_q_pow.powf(inv_q));
        self.grad_qj.push(f.grad_qj_pow.powf(inv_q));
        self.i_q.push(f.i_q);
        self.j_q.push(f.j_q);
        self.b_q.push(f.b_q);
        self.x_q.push(f.x_q);
        self.dt_term.push(f.dt_term);
    }

    /// `∂_τ‖w‖_q^q` at entry `k`: central inside, one-sided at the ends.
    pub fn dnorm_dt(&self, k: usize) -> T {
        let n = self.len();
        let (a, b) = if n < 2 {
            return T::zero();
        } else if k == 0 {
            (0, 1)
        } else if k + 1 == n {
            (n - 2, n - 1)
        } else {
            (k - 1, k + 1)
        };
        (self.grad_q_pow[b] - self.grad_q_pow[a]) / (self.times[b] - self.times[a])
    }

    /// Fills `identity_residual` from the recorded functionals.
    pub fn finish(&mut self) {
        let qt = T::lit(self.q);
        let qm2 = T::lit(self.q - 2.0);
        self.identity_residual = (0..self.len())
            .map(|k| (self.dnorm_dt(k) / qt + self.i_q[k] + qm2 * self.j_q[k] - self.x_q[k]).abs())
            .collect();
    }

    /// Largest identity residual over interior entries.
    pub fn max_interior_residual(&self) -> T {
        let n = self.len();
        if n < 3 {
            return T::zero();
        }
        self.identity_residual[1..n - 1].iter().fold(T::zero(), |m, v| m.max(*v))
    }

    /// `∫ ⟨|∂_τu|², |w|^{q-2}⟩ dτ` (trapezoid).
    pub fn dt_term_integral(&self) -> T {
        let half = T::lit(0.5);
        (1..self.len())
            .map(|k| half * (self.dt_term[k] + self.dt_term[k - 1]) * (self.times[k] - self.times[k - 1]))
            .sum()
    }

    pub fn all_finite(&self) -> bool {
        [
            &self.times,
            &self.sup_norm,
            &self.grad_q,
            &self.grad_qj,
            &self.i_q,
            &self.j_q,
            &self.b_q,
            &self.x_q,
            &self.dt_term,
            &self.identity_residual,
        ]
        .iter()
        .all(|v| v.iter().all(|x| x.is_finite()))
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from(NORM_TRACE_HEADER);
        out.push('\n');
        let qt = T::lit(self.q);
        for k in 0..self.len() {
            let _ = writeln!(
                out,
                "{},{},{},{},{},{},{},{},{}",
                self.times[k].f64(),
                self.sup_norm[k].f64(),
                self.grad_q[k].f64(),
                self.grad_qj[k].powf(qt).f64(),
                self.i_q[k].f64(),
                self.j_q[k].f64(),
                self.b_q[k].f64(),
                self.x_q[k].f64(),
                self.identity_residual.get(k).map_or(f64::NAN, |v| v.f64()),
            );
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::Boundary;

    #[test]
    fn gaussian_gradient_norm() {
        // ∫|2x|⁴ e^{-4|x|²} dx over R³ = 15 π^{3/2} / 32
        let exact = 15.0 * std::f64::consts::PI.powf(1.5) / 32.0;
        let grid = RadialGrid::<f64>::new(3, 8.0, 4000).unwrap();
        let u: Vec<f64> = grid.nodes().iter().map(|r| (-r * r).exp()).collect();
        let (nq, _) = grad_norms(&grid, &SolutionField { tau: 0.0, values: u }, 4.0);
        assert!((nq.powi(4) / exact - 1.0).abs() < 1e-4, "{}", nq.powi(4));
    }

    #[test]
    fn constants_and_scaling() {
        let grid = RadialGrid::<f64>::new(3, 4.0, 200).unwrap();
        let c = SolutionField { tau: 0.0, values: vec![2.5; 201] };
        assert_eq!(grad_norms(&grid, &c, 3.0), (0.0, 0.0));
        let u: Vec<f64> = grid.nodes().iter().map(|r| (-r * r).exp()).collect();
        let a = grad_norms(&grid, &SolutionField { tau: 0.0, values: u.clone() }, 3.0);
        let b = grad_norms(&grid, &SolutionField { tau: 0.0, values: u.iter().map(|v| 3.0 * v).collect() }, 3.0);
        assert!((b.0 / a.0 - 3.0).abs() < 1e-12 && (b.1 / a.1 - 3.0).abs() < 1e-12);
    }

    #[test]
    fn radial_and_cartesian_functionals_agree() {
        let q = 3.0;
        let rg = RadialGrid::<f64>::new(3, 6.0, 1200).unwrap();
        let u: Vec<f64> = rg.nodes().iter().map(|r| (-r * r).exp()).collect();
        let beta: Vec<f64> = rg.nodes().iter().map(|r| 0.5 * r * (-r * r).exp()).collect();
        let fr = radial_functionals(&rg, &u, 0.0, &beta, q);
        let cg = CartesianGrid::<f64>::new(3, 4.0, 120, Boundary::Dirichlet).unwrap();
        let n = cg.len();
        let uc: Vec<f64> = (0..n).map(|i| (-cg.radius(i).powi(2)).exp()).collect();
        let b: Vec<Vec<f64>> = (0..3)
            .map(|k| (0..n).map(|i| 0.5 * cg.point(i)[k] * (-cg.radius(i).powi(2)).exp()).collect())
            .collect();
        let weights: Vec<f64> = (0..n).map(|i| cg.weight(i)).collect();
        let fc = cartesian_functionals(&cg, &uc, &b, &weights, q);
        for (name, a, c) in [
            ("N", fr.grad_q_pow, fc.grad_q_pow),
            ("I", fr.i_q, fc.i_q),
            ("J", fr.j_q, fc.j_q),
            ("B", fr.b_q, fc.b_q),
            ("X", fr.x_q, fc.x_q),
        ] {
            assert!((a / c - 1.0).abs() < 2e-2, "{name}: {a} vs {c}");
        }
        assert!(fr.i_q >= fr.j_q && fc.i_q >= fc.j_q);
    }
}
