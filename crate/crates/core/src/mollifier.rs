//! Heat-semigroup mollification and the regularizing sequence
//! `b_n = E^{1+d}_{ε_n}(1_{Q_n} b)`, `Q_n = [0, n] × B(0, n)`.

use std::f64::consts::PI;
use std::sync::Arc;

use rayon::prelude::*;

use crate::drift::{
    CustomRadial, DriftKind, FormBoundedDrift, GClass, RadialTable, SmoothField, TimeFactor,
};
use crate::error::{domain, Error, Result};
use crate::quadrature::{sphere_area, GaussLegendre};
use crate::rational::to_f64;
use crate::scalar::Real;

/// Kernel support in units of `√ε`; the two-sided tail mass beyond it is
/// `erfc(4.1) ≈ 6.7e-9`.
pub const KERNEL_RADIUS: f64 = 8.2;
/// Largest grid spacing, in units of `√ε`, for which the sampled kernel
/// still sums to one within 1e-10.
pub const MAX_SPACING: f64 = 1.25;
const TAIL: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Axis<T> {
    pub start: T,
    pub step: T,
    pub len: usize,
}

impl<T: Real> Axis<T> {
    pub fn new(start: T, step: T, len: usize) -> Self {
        Axis { start, step, len }
    }

    /// `len` nodes spanning `[a, b]`.
    pub fn span(a: T, b: T, len: usize) -> Self {
        Axis { start: a, step: (b - a) / T::from_usize_lossy(len - 1), len }
    }

    pub fn node(&self, i: usize) -> T {
        self.start + self.step * T::from_usize_lossy(i)
    }
}

/// Values on a tensor grid `[time?] × space axes`, row-major with the last
/// axis fastest.
#[derive(Debug, Clone, PartialEq)]
pub struct GriddedField<T> {
    pub time: Option<Axis<T>>,
    pub space: Vec<Axis<T>>,
    pub values: Vec<T>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MollifyAxes {
    Space,
    Time,
    SpaceTime,
}

impl<T: Real> GriddedField<T> {
    pub fn axes(&self) -> Vec<Axis<T>> {
        self.time.iter().chain(self.space.iter()).copied().collect()
    }

    pub fn shape(&self) -> Vec<usize> {
        self.axes().iter().map(|a| a.len).collect()
    }

    /// Samples `f(t, x)`; `t` is zero when there is no time axis.
    pub fn sample(time: Option<Axis<T>>, space: Vec<Axis<T>>, f: impl Fn(T, &[T]) -> T + Sync) -> Self {
        let mut axes: Vec<Axis<T>> = time.iter().copied().collect();
        axes.extend(space.iter().copied());
        let total: usize = axes.iter().map(|a| a.len).product();
        let has_time = time.is_some();
        let values = (0..total)
            .into_par_iter()
            .map(|flat| {
                let mut rem = flat;
                let mut coords = vec![T::zero(); axes.len()];
                for (k, a) in axes.iter().enumerate().rev() {
                    coords[k] = a.node(rem % a.len);
                    rem /= a.len;
                }
                if has_time {
                    f(coords[0], &coords[1..])
                } else {
                    f(T::zero(), &coords)
                }
            })
            .collect();
        GriddedField { time, space, values }
    }

    pub fn max_abs(&self) -> T {
        self.values.iter().fold(T::zero(), |m, v| m.max(v.abs()))
    }
}

fn kernel<T: Real>(step: T, eps: f64) -> Result<Vec<T>> {
    let h = step.f64().abs();
    let scale = eps.sqrt();
    if h > MAX_SPACING * scale {
        return Err(Error::Unresolved { spacing: h, scale });
    }
    let m = (KERNEL_RADIUS * scale / h).floor() as usize;
    let norm = h / (4.0 * PI * eps).sqrt();
    Ok((0..=m)
        .map(|k| {
            let s = k as f64 * h;
            T::lit(norm * (-s * s / (4.0 * eps)).exp())
        })
        .collect())
}

/// Convolves along axis `a` of a row-major array with shape `shape`.
fn convolve_axis<T: Real>(values: &[T], shape: &[usize], a: usize, step: T, eps: f64) -> Result<Vec<T>> {
    let w = kernel(step, eps)?;
    let m = w.len() - 1;
    let len = shape[a];
    let stride: usize = shape[a + 1..].iter().product();
    let block = len * stride;

    // margin: nodes within the kernel radius of either end must be negligible
    let peak = values.iter().fold(T::zero(), |acc, v| acc.max(v.abs()));
    let cutoff = peak * T::lit(TAIL);
    let mut first = len;
    let mut last = 0usize;
    for (idx, v) in values.iter().enumerate() {
        if v.abs() > cutoff {
            let k = (idx / stride) % len;
            first = first.min(k);
            last = last.max(k);
        }
    }
    if first <= last {
        let available = first.min(len - 1 - last) as f64 * step.f64().abs();
        if first < m || len - 1 - last < m {
            return Err(Error::Margin { available, required: m as f64 * step.f64().abs() });
        }
    }

    let mut out = vec![T::zero(); values.len()];
    out.par_chunks_mut(block).zip(values.par_chunks(block)).for_each(|(o, src)| {
        for k in 0..len {
            let lo = k.saturating_sub(m);
            let hi = (k + m).min(len - 1);
            for i in 0..stride {
                let mut s = T::zero();
                for j in lo..=hi {
                    s = s + w[k.abs_diff(j)] * src[j * stride + i];
                }
                o[k * stride + i] = s;
            }
        }
    });
    Ok(out)
}

/// Discrete `E_ε` along the selected axes: direct summation with the
/// kernel `(4πε)^{-k/2} e^{-|·|²/4ε}` truncated at [`KERNEL_RADIUS`]`·√ε`.
pub fn heat_mollify<T: Real>(f: &GriddedField<T>, epsilon: f64, axes: MollifyAxes) -> Result<GriddedField<T>> {
    if !(epsilon > 0.0) {
        return domain("epsilon must be positive");
    }
    let shape = f.shape();
    let all = f.axes();
    let offset = usize::from(f.time.is_some());
    let mut selected: Vec<usize> = Vec::new();
    if matches!(axes, MollifyAxes::Time | MollifyAxes::SpaceTime) {
        if f.time.is_none() {
            return domain("field has no time axis");
        }
        selected.push(0);
    }
    if matches!(axes, MollifyAxes::Space | MollifyAxes::SpaceTime) {
        selected.extend(offset..all.len());
    }
    let mut values = f.values.clone();
    for a in selected {
        values = convolve_axis(&values, &shape, a, all[a].step, epsilon)?;
    }
    Ok(GriddedField { time: f.time, space: f.space.clone(), values })
}

/// `M(z) = ∫_0^π e^{-z(1-cos θ)} w(θ) sin^{d-2}θ dθ` with `w = cos` (vector
/// fields) or `w = 1` (scalars).
fn angular(z: f64, d: usize, vector: bool) -> f64 {
    let upper = if z > 20.0 { PI * (20.0 / z).sqrt() } else { PI };
    GaussLegendre::eight().integrate(0.0, upper, 16, |th| {
        let c = th.cos();
        let w = if vector { c } else { 1.0 };
        (-z * (1.0 - c)).exp() * w * th.sin().powi(d as i32 - 2)
    })
}

/// Spherical average of a radial field truncated to `B(0, n)`:
/// `∫_0^n β_0(ρ) ρ^{d-1} (4πε)^{-d/2} |S^{d-2}| e^{-(r-ρ)²/4ε} M(rρ/2ε) dρ`.
fn radial_mollify(beta0: &(dyn Fn(f64) -> f64 + Sync), d: usize, n: f64, eps: f64, r: f64, vector: bool) -> f64 {
    let s = eps.sqrt();
    let reach = 12.65 * s;
    let a = (r - reach).max(0.0);
    let b = (r + reach).min(n);
    if b <= a {
        return 0.0;
    }
    let pref = (4.0 * PI * eps).powf(-(d as f64) / 2.0) * sphere_area(d - 2);
    let panels = (((b - a) / (0.5 * s)).ceil() as usize).max(4);
    pref * GaussLegendre::eight().integrate(a, b, panels, |rho| {
        let g = (-(r - rho) * (r - rho) / (4.0 * eps)).exp();
        if g == 0.0 {
            return 0.0;
        }
        beta0(rho) * rho.powi(d as i32 - 1) * g * angular(r * rho / (2.0 * eps), d, vector)
    })
}

fn tabulate(
    beta0: &(dyn Fn(f64) -> f64 + Sync),
    d: usize,
    n: f64,
    eps: f64,
    vector: bool,
    r_max: Option<f64>,
) -> Vec<f64> {
    let h = eps.sqrt() / 16.0;
    let mut extent = n + 12.65 * eps.sqrt();
    if let Some(rm) = r_max {
        extent = extent.min(rm);
    }
    let count = (extent / h).ceil() as usize + 1;
    (0..count)
        .into_par_iter()
        .map(|i| {
            let r = i as f64 * h;
            if vector && i == 0 {
                0.0
            } else {
                radial_mollify(beta0, d, n, eps, r, vector)
            }
        })
        .collect()
}

fn base_profile<T: Real>(base: &FormBoundedDrift<T>) -> Result<Option<Arc<dyn Fn(f64) -> f64 + Send + Sync>>> {
    Ok(match &base.kind {
        DriftKind::Zero => None,
        DriftKind::Hardy { coeff } => {
            let c = coeff.f64();
            Some(Arc::new(move |r: f64| c / r))
        }
        DriftKind::CustomRadial(CustomRadial::Power { coeff, power }) => {
            let (c, p) = (coeff.f64(), power.f64());
            Some(Arc::new(move |r: f64| if p == 0.0 { c } else { c * r.powf(p) }))
        }
        DriftKind::CustomRadial(CustomRadial::Table(t)) => {
            let t = t.clone();
            Some(Arc::new(move |r: f64| t.eval(T::lit(r)).f64()))
        }
        DriftKind::BoundedSmooth(SmoothField::Constant(_)) => None,
        DriftKind::BoundedSmooth(_) => {
            return Err(Error::Unsupported("mollification of non-radial smooth fields".into()))
        }
    })
}

/// `g_n = E^1_ε g`.
pub fn mollify_g<T: Real>(g: &GClass<T>, eps: f64) -> Result<GClass<T>> {
    Ok(match g {
        GClass::Zero => GClass::Zero,
        GClass::Constant(v) => GClass::Constant(*v),
        GClass::Tabulated { times, .. } => {
            let t0 = times[0].f64();
            let t1 = times[times.len() - 1].f64();
            let reach = KERNEL_RADIUS * eps.sqrt();
            let h = (eps.sqrt() / 4.0).min((t1 - t0) / 64.0);
            let axis = Axis::span(T::lit(t0 - 1.05 * reach - h), T::lit(t1 + 1.05 * reach + h), {
                ((t1 - t0 + 2.1 * reach + 2.0 * h) / h).ceil() as usize + 1
            });
            let f = GriddedField::sample(None, vec![axis], |_, x| g.eval(x[0]));
            let m = heat_mollify(&f, eps, MollifyAxes::Space)?;
            let grid: Vec<T> = (0..axis.len).map(|i| axis.node(i)).collect();
            GClass::tabulated(grid, m.values.iter().map(|v| v.max(T::zero())).collect())?
        }
    })
}

/// `b_n = E^{1+d}_ε(1_{Q_n} b)` for radial and constant bases.
///
/// The result is tabulated radially with spacing `√ε/16`; `r_max` limits the
/// table to the region that will be evaluated.
pub fn build_regularized_drift_within<T: Real>(
    base: &FormBoundedDrift<T>,
    n: usize,
    epsilon: f64,
    r_max: Option<f64>,
) -> Result<FormBoundedDrift<T>> {
    if n == 0 {
        return domain("regularization index n must be at least 1");
    }
    if !(epsilon > 0.0) {
        return domain("epsilon must be positive");
    }
    let d = base.d;
    let nf = n as f64;
    let time = TimeFactor { window: Some((T::lit(nf), T::lit(epsilon))), reversed_at: None };
    let h = T::lit(epsilon.sqrt() / 16.0);
    let kind = match (&base.kind, base_profile(base)?) {
        (DriftKind::Zero, _) => DriftKind::Zero,
        (DriftKind::BoundedSmooth(SmoothField::Constant(c)), _) => {
            let one = |_: f64| 1.0;
            let values = tabulate(&one, d, nf, epsilon, false, r_max).into_iter().map(T::lit).collect();
            DriftKind::BoundedSmooth(SmoothField::ModulatedConstant {
                c: c.clone(),
                profile: Arc::new(RadialTable::Uniform { h, values }),
                time,
            })
        }
        (_, Some(beta0)) => {
            let values = tabulate(beta0.as_ref(), d, nf, epsilon, true, r_max)
                .into_iter()
                .map(T::lit)
                .collect();
            DriftKind::BoundedSmooth(SmoothField::Radial {
                profile: Arc::new(RadialTable::Uniform { h, values }),
                time,
            })
        }
        (_, None) => unreachable!("non-radial kinds are rejected by base_profile"),
    };
    Ok(FormBoundedDrift {
        kind,
        d,
        delta: base.delta.clone(),
        g: mollify_g(&base.g, epsilon)?,
        supercritical: base.supercritical,
        g_reversed_at: None,
    })
}

pub fn build_regularized_drift<T: Real>(base: &FormBoundedDrift<T>, n: usize, epsilon: f64) -> Result<FormBoundedDrift<T>> {
    build_regularized_drift_within(base, n, epsilon, None)
}

/// `√(C(d) δ) ε^{-1/2} + sup √(E^1(1_{[0,n]} g))` with `C(d) = d/8`.
pub fn sup_norm_bound<T: Real>(base: &FormBoundedDrift<T>, epsilon: f64) -> Result<f64> {
    let delta = to_f64(&base.delta);
    let first = (base.d as f64 * delta / 8.0).sqrt() / epsilon.sqrt();
    let second = match &base.g {
        GClass::Zero => 0.0,
        GClass::Constant(v) => v.f64().max(0.0).sqrt(),
        GClass::Tabulated { values, .. } => {
            // E^1 of a function never exceeds its supremum
            values.iter().fold(0.0f64, |m, v| m.max(v.f64())).sqrt()
        }
    };
    Ok(first + second)
}

/// A member of the regularizing sequence with its bookkeeping.
#[derive(Debug, Clone)]
pub struct RegularizingSequence<T> {
    pub base: FormBoundedDrift<T>,
    pub n: usize,
    pub epsilon_n: f64,
    pub drift: FormBoundedDrift<T>,
    pub sup_bound: f64,
}

pub fn regularizing_member<T: Real>(base: &FormBoundedDrift<T>, n: usize, epsilon: f64) -> Result<RegularizingSequence<T>> {
    Ok(RegularizingSequence {
        base: base.clone(),
        n,
        epsilon_n: epsilon,
        drift: build_regularized_drift(base, n, epsilon)?,
        sup_bound: sup_norm_bound(base, epsilon)?,
    })
}

/// Space-time grid for the discrete `L²` distance `‖b_n − 1_{Q_n} b‖`:
/// radial nodes on `[0, r_max]`, time nodes on `[0, t_max]`, and an excluded
/// ball around the origin.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DistanceGrid {
    pub r_max: f64,
    pub n_r: usize,
    pub t_max: f64,
    pub n_t: usize,
    pub exclusion: f64,
}

impl DistanceGrid {
    pub fn standard(singular: bool) -> Self {
        DistanceGrid { r_max: 2.0, n_r: 400, t_max: 1.0, n_t: 64, exclusion: if singular { 0.05 } else { 0.0 } }
    }
}

/// Discrete `(∫_0^t ∫_{|x| ≥ ρ} |b_n − 1_{Q_n} b|² dx dτ)^{1/2}` for radial or
/// constant bases.
pub fn l2_distance<T: Real>(base: &FormBoundedDrift<T>, member: &FormBoundedDrift<T>, n: usize, grid: &DistanceGrid) -> Result<f64> {
    let d = base.d;
    let nf = n as f64;
    let scale = match &base.kind {
        DriftKind::BoundedSmooth(SmoothField::Constant(c)) => c.iter().map(|v| v.f64() * v.f64()).sum::<f64>().sqrt(),
        _ => 1.0,
    };
    let raw: Box<dyn Fn(f64) -> f64> = match &base.kind {
        DriftKind::BoundedSmooth(SmoothField::Constant(_)) => Box::new(|_| 1.0),
        _ => {
            let p = base.radial_profile()?;
            Box::new(move |r| p.beta(T::zero(), T::lit(r)).f64())
        }
    };
    let mol: Box<dyn Fn(f64, f64) -> f64> = match &member.kind {
        DriftKind::Zero => Box::new(|_, _| 0.0),
        DriftKind::BoundedSmooth(SmoothField::ModulatedConstant { profile, time, .. }) => {
            let (p, tf) = (profile.clone(), *time);
            Box::new(move |t, r| tf.eval(T::lit(t)).f64() * p.eval(T::lit(r)).f64())
        }
        DriftKind::BoundedSmooth(SmoothField::Radial { profile, time }) => {
            let (p, tf) = (profile.clone(), *time);
            Box::new(move |t, r| tf.eval(T::lit(t)).f64() * p.eval(T::lit(r)).f64())
        }
        _ => return Err(Error::Unsupported("distance needs a mollified member".into())),
    };
    let sigma = sphere_area(d - 1);
    let dr = grid.r_max / grid.n_r as f64;
    let dt = grid.t_max / (grid.n_t - 1) as f64;
    let mut total = 0.0;
    for j in 0..grid.n_t {
        let t = j as f64 * dt;
        let wt = if j == 0 || j + 1 == grid.n_t { 0.5 * dt } else { dt };
        let in_time = if t <= nf { 1.0 } else { 0.0 };
        let mut space = 0.0;
        for i in 0..=grid.n_r {
            let r = i as f64 * dr;
            if r < grid.exclusion || r == 0.0 {
                continue;
            }
            let target = if r < nf { in_time * raw(r) } else { 0.0 };
            let diff = mol(t, r) - target;
            let wr = if i == grid.n_r { 0.5 * dr } else { dr };
            space += diff * diff * sigma * r.powi(d as i32 - 1) * wr;
        }
        total += wt * space;
    }
    Ok(scale * total.sqrt())
}

/// Selected scales `ε_1 > … > ε_{n_max}` with their distances.
#[derive(Debug, Clone, PartialEq)]
pub struct EpsilonSchedule {
    pub epsilons: Vec<f64>,
    pub distances: Vec<f64>,
}

/// For each `n`, halves from `ε_{n-1}` (seed `ε_0 = 1`) until the discrete
/// `L²` distance is at most `tol · 2^{-n}`.
pub fn select_epsilons<T: Real>(base: &FormBoundedDrift<T>, grid: &DistanceGrid, tol: f64, n_max: usize) -> Result<EpsilonSchedule> {
    if !(tol > 0.0) {
        return domain("tol must be positive");
    }
    const HALVINGS: usize = 60;
    let mut eps = 1.0;
    let mut out = EpsilonSchedule { epsilons: Vec::new(), distances: Vec::new() };
    for n in 1..=n_max {
        let target = tol * 0.5f64.powi(n as i32);
        let mut accepted = None;
        for _ in 0..HALVINGS {
            eps *= 0.5;
            let member = build_regularized_drift_within(base, n, eps, Some(grid.r_max + 0.01))?;
            let dist = l2_distance(base, &member, n, grid)?;
            if dist <= target {
                accepted = Some(dist);
                break;
            }
        }
        match accepted {
            Some(dist) => {
                out.epsilons.push(eps);
                out.distances.push(dist);
            }
            None => return Err(Error::NonConvergence { n, halvings: HALVINGS }),
        }
    }
    Ok(out)
}
