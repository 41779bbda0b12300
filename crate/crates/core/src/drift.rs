//! Drift fields with form-bound metadata.

use std::sync::Arc;

use num_traits::Signed;

use crate::error::{domain, Error, Result};
use crate::rational::{fmt_rational, parse_rational, to_f64, Rational};
use crate::scalar::Real;

/// The integrable part `g` of the form bound, as a function of time.
#[derive(Debug, Clone, PartialEq)]
pub enum GClass<T> {
    Zero,
    /// Constant value per unit time.
    Constant(T),
    /// Piecewise linear through `(times[i], values[i])`, zero outside.
    Tabulated { times: Vec<T>, values: Vec<T> },
}

impl<T: Real> GClass<T> {
    pub fn tabulated(times: Vec<T>, values: Vec<T>) -> Result<Self> {
        if times.len() != values.len() || times.len() < 2 {
            return domain("tabulated g needs matching time/value vectors of length >= 2");
        }
        if times.windows(2).any(|w| w[1] <= w[0]) {
            return domain("tabulated g times must be strictly increasing");
        }
        if values.iter().any(|v| *v < T::zero()) {
            return domain("g must be nonnegative");
        }
        Ok(GClass::Tabulated { times, values })
    }

    pub fn is_zero(&self) -> bool {
        matches!(self, GClass::Zero)
    }

    pub fn eval(&self, t: T) -> T {
        match self {
            GClass::Zero => T::zero(),
            GClass::Constant(v) => *v,
            GClass::Tabulated { times, values } => interp_linear(times, values, t),
        }
    }

    /// `c_delta(t) = ∫_0^t g`.
    pub fn integral(&self, t: T) -> T {
        match self {
            GClass::Zero => T::zero(),
            GClass::Constant(v) => *v * t.max(T::zero()),
            GClass::Tabulated { times, values } => {
                let half = T::lit(0.5);
                let mut acc = T::zero();
                for i in 0..times.len() - 1 {
                    let (a, b) = (times[i].max(T::zero()), times[i + 1].min(t));
                    if b <= a {
                        continue;
                    }
                    acc = acc + half * (interp_linear(times, values, a) + interp_linear(times, values, b)) * (b - a);
                }
                acc
            }
        }
    }
}

fn interp_linear<T: Real>(xs: &[T], ys: &[T], x: T) -> T {
    let n = xs.len();
    if x < xs[0] || x > xs[n - 1] {
        return T::zero();
    }
    let i = match xs.iter().position(|&xi| xi > x) {
        Some(0) => 0,
        Some(i) => i - 1,
        None => n - 2,
    };
    let w = (x - xs[i]) / (xs[i + 1] - xs[i]);
    ys[i] + w * (ys[i + 1] - ys[i])
}

/// A radial profile tabulated on a uniform grid `r_i = i h` (cubic
/// interpolation) or on arbitrary nodes (linear interpolation). Zero beyond
/// the last node.
#[derive(Debug, Clone, PartialEq)]
pub enum RadialTable<T> {
    Uniform { h: T, values: Vec<T> },
    Nodes { r: Vec<T>, values: Vec<T> },
}

impl<T: Real> RadialTable<T> {
    pub fn eval(&self, r: T) -> T {
        match self {
            RadialTable::Nodes { r: xs, values } => interp_linear(xs, values, r),
            RadialTable::Uniform { h, values } => {
                let n = values.len();
                let s = r / *h;
                if s < T::zero() || s > T::from_usize_lossy(n - 1) {
                    return T::zero();
                }
                let i = s.floor().to_usize().unwrap_or(0).min(n.saturating_sub(2));
                let u = s - T::from_usize_lossy(i);
                // Catmull-Rom; odd reflection across r = 0 for the ghost value.
                let p1 = values[i];
                let p2 = values[(i + 1).min(n - 1)];
                let p0 = if i == 0 { -values[1.min(n - 1)] } else { values[i - 1] };
                let p3 = if i + 2 < n { values[i + 2] } else { p2 + (p2 - p1) };
                let half = T::lit(0.5);
                let two = T::lit(2.0);
                let three = T::lit(3.0);
                let four = T::lit(4.0);
                let five = T::lit(5.0);
                half * (two * p1
                    + (p2 - p0) * u
                    + (two * p0 - five * p1 + four * p2 - p3) * u * u
                    + (three * (p1 - p2) + p3 - p0) * u * u * u)
            }
        }
    }

    pub fn sup_abs(&self) -> T {
        let vals = match self {
            RadialTable::Uniform { values, .. } | RadialTable::Nodes { values, .. } => values,
        };
        vals.iter().fold(T::zero(), |m, v| m.max(v.abs()))
    }

    pub fn extent(&self) -> T {
        match self {
            RadialTable::Uniform { h, values } => *h * T::from_usize_lossy(values.len() - 1),
            RadialTable::Nodes { r, .. } => r[r.len() - 1],
        }
    }
}

/// Time modulation of a mollified field, optionally time-reversed.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TimeFactor<T> {
    /// `(n, eps)`: factor `½[erf((n-τ)/(2√ε)) + erf(τ/(2√ε))]`.
    pub window: Option<(T, T)>,
    /// Evaluate at `T - τ` instead of `τ`.
    pub reversed_at: Option<T>,
}

impl<T: Real> TimeFactor<T> {
    pub fn one() -> Self {
        TimeFactor { window: None, reversed_at: None }
    }

    pub fn map_time(&self, t: T) -> T {
        match self.reversed_at {
            Some(horizon) => horizon - t,
            None => t,
        }
    }

    pub fn eval(&self, t: T) -> T {
        match self.window {
            None => T::one(),
            Some((n, eps)) => {
                let tau = self.map_time(t).f64();
                let s = 2.0 * eps.f64().sqrt();
                T::lit(0.5 * (libm::erf((n.f64() - tau) / s) + libm::erf(tau / s)))
            }
        }
    }
}

/// Radial part of a radially symmetric drift: `b(τ,x) = β(τ,|x|) x/|x|`.
#[derive(Debug, Clone, PartialEq)]
pub enum RadialPart<T> {
    Zero,
    /// `coeff · r^power`, `power >= 0`.
    Power { coeff: T, power: T },
    Table(Arc<RadialTable<T>>),
}

impl<T: Real> RadialPart<T> {
    pub fn eval(&self, r: T) -> T {
        match self {
            RadialPart::Zero => T::zero(),
            RadialPart::Power { coeff, power } => {
                if *power == T::zero() {
                    *coeff
                } else {
                    *coeff * r.powf(*power)
                }
            }
            RadialPart::Table(t) => t.eval(r),
        }
    }
}

/// `β(τ, r) = singular_coeff / r + time(τ) · smooth(r)`.
#[derive(Debug, Clone, PartialEq)]
pub struct RadialDrift<T> {
    pub singular_coeff: T,
    pub smooth: RadialPart<T>,
    pub time: TimeFactor<T>,
}

impl<T: Real> RadialDrift<T> {
    pub fn zero() -> Self {
        RadialDrift { singular_coeff: T::zero(), smooth: RadialPart::Zero, time: TimeFactor::one() }
    }

    pub fn is_singular(&self) -> bool {
        self.singular_coeff != T::zero()
    }

    pub fn smooth_at(&self, t: T, r: T) -> T {
        match self.smooth {
            RadialPart::Zero => T::zero(),
            _ => self.time.eval(t) * self.smooth.eval(r),
        }
    }

    /// Full `β(τ, r)` for `r > 0`.
    pub fn beta(&self, t: T, r: T) -> T {
        let sing = if self.is_singular() { self.singular_coeff / r } else { T::zero() };
        sing + self.smooth_at(t, r)
    }
}

/// Smooth bounded drift fields.
#[derive(Debug, Clone, PartialEq)]
pub enum SmoothField<T> {
    Constant(Vec<T>),
    /// `amplitude · exp(-|x - center|² / width²)`.
    Bump { amplitude: Vec<T>, center: Vec<T>, width: T },
    /// `time(τ) · β(|x|) x/|x|`, the mollification of a radial drift.
    Radial { profile: Arc<RadialTable<T>>, time: TimeFactor<T> },
    /// `time(τ) · m(|x|) c`, the mollification of a truncated constant.
    ModulatedConstant { c: Vec<T>, profile: Arc<RadialTable<T>>, time: TimeFactor<T> },
}

#[derive(Debug, Clone, PartialEq)]
pub enum CustomRadial<T> {
    /// `β(r) = coeff · r^power` with `power = -1` (singular) or `power >= 0`.
    Power { coeff: T, power: T },
    Table(Arc<RadialTable<T>>),
}

#[derive(Debug, Clone, PartialEq)]
pub enum DriftKind<T> {
    /// `b(x) = coeff · x / |x|²` with `coeff = √δ (d-2)/2`.
    Hardy { coeff: T },
    BoundedSmooth(SmoothField<T>),
    Zero,
    CustomRadial(CustomRadial<T>),
}

/// A drift `b(τ, x)` on `R^d` with its form-bound metadata `(δ, g)`.
#[derive(Debug, Clone, PartialEq)]
pub struct FormBoundedDrift<T> {
    pub kind: DriftKind<T>,
    pub d: usize,
    pub delta: Rational,
    pub g: GClass<T>,
    /// Set when `δ` exceeds `4 (d/(d-2))²`.
    pub supercritical: bool,
    /// Evaluate `g` at `T - τ` (time-reversed drifts).
    pub g_reversed_at: Option<T>,
}

pub type FormBoundedDriftF64 = FormBoundedDrift<f64>;

/// `4 (d/(d-2))²`.
pub fn nonexistence_threshold(d: usize) -> Result<Rational> {
    if d < 3 {
        return domain(format!("dimension d = {d} must be at least 3"));
    }
    let r = Rational::new((d as i64).into(), (d as i64 - 2).into());
    Ok(Rational::from_integer(4.into()) * &r * &r)
}

pub fn hardy_coefficient(d: usize, delta: &Rational) -> f64 {
    to_f64(delta).sqrt() * (d as f64 - 2.0) / 2.0
}

pub fn hardy_drift<T: Real>(d: usize, delta: &Rational) -> Result<FormBoundedDrift<T>> {
    if d < 3 {
        return domain(format!("Hardy drift is not locally square integrable for d = {d} < 3"));
    }
    if !delta.is_positive() {
        return domain("Hardy drift needs delta > 0");
    }
    Ok(FormBoundedDrift {
        kind: DriftKind::Hardy { coeff: T::lit(hardy_coefficient(d, delta)) },
        d,
        delta: delta.clone(),
        g: GClass::Zero,
        supercritical: *delta > nonexistence_threshold(d)?,
        g_reversed_at: None,
    })
}

pub fn zero_drift<T: Real>(d: usize) -> FormBoundedDrift<T> {
    FormBoundedDrift {
        kind: DriftKind::Zero,
        d,
        delta: Rational::from_integer(0.into()),
        g: GClass::Zero,
        supercritical: false,
        g_reversed_at: None,
    }
}

/// Constant drift `c`; it is form-bounded with any `δ` and `g ≡ |c|²`.
pub fn constant_drift<T: Real>(c: Vec<T>) -> FormBoundedDrift<T> {
    let norm2 = c.iter().fold(T::zero(), |s, v| s + *v * *v);
    FormBoundedDrift {
        d: c.len(),
        kind: DriftKind::BoundedSmooth(SmoothField::Constant(c)),
        delta: Rational::from_integer(0.into()),
        g: GClass::Constant(norm2),
        supercritical: false,
        g_reversed_at: None,
    }
}

/// Gaussian bump drift; form-bounded with `g ≡ sup|b|²`.
pub fn bump_drift<T: Real>(amplitude: Vec<T>, center: Vec<T>, width: T) -> Result<FormBoundedDrift<T>> {
    if amplitude.len() != center.len() || !(width > T::zero()) {
        return domain("bump drift needs matching amplitude/center and width > 0");
    }
    let norm2 = amplitude.iter().fold(T::zero(), |s, v| s + *v * *v);
    Ok(FormBoundedDrift {
        d: amplitude.len(),
        kind: DriftKind::BoundedSmooth(SmoothField::Bump { amplitude, center, width }),
        delta: Rational::from_integer(0.into()),
        g: GClass::Constant(norm2),
        supercritical: false,
        g_reversed_at: None,
    })
}

pub fn custom_radial_drift<T: Real>(
    d: usize,
    profile: CustomRadial<T>,
    delta: Rational,
    g: GClass<T>,
) -> Result<FormBoundedDrift<T>> {
    if d < 3 {
        return domain(format!("dimension d = {d} must be at least 3"));
    }
    if let CustomRadial::Power { power, .. } = &profile {
        if !(*power == -T::one() || *power >= T::zero()) {
            return Err(Error::Unsupported("radial power must be -1 or >= 0".into()));
        }
    }
    if delta.is_negative() {
        return domain("delta must be nonnegative");
    }
    Ok(FormBoundedDrift {
        kind: DriftKind::CustomRadial(profile),
        d,
        supercritical: delta > nonexistence_threshold(d)?,
        delta,
        g,
        g_reversed_at: None,
    })
}

fn norm<T: Real>(x: &[T]) -> T {
    x.iter().fold(T::zero(), |s, v| s + *v * *v).sqrt()
}

impl<T: Real> FormBoundedDrift<T> {
    pub fn is_singular(&self) -> bool {
        match &self.kind {
            DriftKind::Hardy { .. } => true,
            DriftKind::CustomRadial(CustomRadial::Power { power, .. }) => *power < T::zero(),
            _ => false,
        }
    }

    pub fn is_bounded(&self) -> bool {
        matches!(self.kind, DriftKind::Zero | DriftKind::BoundedSmooth(_))
    }

    pub fn is_time_dependent(&self) -> bool {
        match &self.kind {
            DriftKind::BoundedSmooth(SmoothField::Radial { time, .. })
            | DriftKind::BoundedSmooth(SmoothField::ModulatedConstant { time, .. }) => time.window.is_some(),
            _ => false,
        }
    }

    /// The factor `θ` in `b(τ, x) = θ(τ) F(x)`; every kind separates this way.
    pub fn time_factor(&self) -> TimeFactor<T> {
        match &self.kind {
            DriftKind::BoundedSmooth(SmoothField::Radial { time, .. })
            | DriftKind::BoundedSmooth(SmoothField::ModulatedConstant { time, .. }) => *time,
            _ => TimeFactor::one(),
        }
    }

    /// The spatial part `F` of [`time_factor`](Self::time_factor).
    pub fn without_time(&self) -> Self {
        let mut out = self.clone();
        if let DriftKind::BoundedSmooth(SmoothField::Radial { time, .. })
        | DriftKind::BoundedSmooth(SmoothField::ModulatedConstant { time, .. }) = &mut out.kind
        {
            *time = TimeFactor::one();
        }
        out
    }

    pub fn kind_name(&self) -> &'static str {
        match self.kind {
            DriftKind::Hardy { .. } => "hardy",
            DriftKind::BoundedSmooth(_) => "bounded_smooth",
            DriftKind::Zero => "zero",
            DriftKind::CustomRadial(_) => "custom_radial",
        }
    }

    pub fn g_at(&self, t: T) -> T {
        let t = match self.g_reversed_at {
            Some(h) => h - t,
            None => t,
        };
        self.g.eval(t)
    }

    /// `c_delta(t) = ∫_0^t g`.
    pub fn c_delta(&self, t: T) -> T {
        self.g.integral(t)
    }

    /// The form bound implied by Hardy's inequality `‖f/|x|‖² ≤ (2/(d-2))² ‖∇f‖²`;
    /// equals the metadata `δ` for the Hardy drift.
    pub fn hardy_implied_bound(&self) -> Option<f64> {
        match self.kind {
            DriftKind::Hardy { coeff } => {
                let k = 2.0 / (self.d as f64 - 2.0);
                Some(coeff.f64() * coeff.f64() * k * k)
            }
            _ => None,
        }
    }

    /// `b(t, x)`.
    pub fn eval(&self, t: T, x: &[T]) -> Result<Vec<T>> {
        if x.len() != self.d {
            return domain(format!("point has dimension {}, drift has {}", x.len(), self.d));
        }
        let r = norm(x);
        let radial = |beta: T| -> Vec<T> {
            if r == T::zero() {
                vec![T::zero(); x.len()]
            } else {
                x.iter().map(|xi| beta * *xi / r).collect()
            }
        };
        match &self.kind {
            DriftKind::Zero => Ok(vec![T::zero(); self.d]),
            DriftKind::Hardy { coeff } => {
                if r == T::zero() {
                    return Err(Error::Singularity);
                }
                Ok(x.iter().map(|xi| *coeff * *xi / (r * r)).collect())
            }
            DriftKind::CustomRadial(p) => {
                let beta = match p {
                    CustomRadial::Power { coeff, power } => {
                        if r == T::zero() && (*power <= T::zero()) && *coeff != T::zero() {
                            return Err(Error::Singularity);
                        }
                        if *power == T::zero() { *coeff } else { *coeff * r.powf(*power) }
                    }
                    CustomRadial::Table(tab) => {
                        let v = tab.eval(r);
                        if r == T::zero() && v != T::zero() {
                            return Err(Error::Singularity);
                        }
                        v
                    }
                };
                Ok(radial(beta))
            }
            DriftKind::BoundedSmooth(field) => Ok(match field {
                SmoothField::Constant(c) => c.clone(),
                SmoothField::Bump { amplitude, center, width } => {
                    let d2 = x.iter().zip(center).fold(T::zero(), |s, (a, b)| s + (*a - *b) * (*a - *b));
                    let w = (-d2 / (*width * *width)).exp();
                    amplitude.iter().map(|a| *a * w).collect()
                }
                SmoothField::Radial { profile, time } => radial(time.eval(t) * profile.eval(r)),
                SmoothField::ModulatedConstant { c, profile, time } => {
                    let m = time.eval(t) * profile.eval(r);
                    c.iter().map(|ci| *ci * m).collect()
                }
            }),
        }
    }

    /// Radial reduction `β` with `b(τ, x) = β(τ, |x|) x/|x|`.
    pub fn radial_profile(&self) -> Result<RadialDrift<T>> {
        match &self.kind {
            DriftKind::Zero => Ok(RadialDrift::zero()),
            DriftKind::Hardy { coeff } => Ok(RadialDrift {
                singular_coeff: *coeff,
                smooth: RadialPart::Zero,
                time: TimeFactor::one(),
            }),
            DriftKind::CustomRadial(CustomRadial::Power { coeff, power }) => Ok(if *power < T::zero() {
                RadialDrift { singular_coeff: *coeff, smooth: RadialPart::Zero, time: TimeFactor::one() }
            } else {
                RadialDrift {
                    singular_coeff: T::zero(),
                    smooth: RadialPart::Power { coeff: *coeff, power: *power },
                    time: TimeFactor::one(),
                }
            }),
            DriftKind::CustomRadial(CustomRadial::Table(t)) => Ok(RadialDrift {
                singular_coeff: T::zero(),
                smooth: RadialPart::Table(t.clone()),
                time: TimeFactor::one(),
            }),
            DriftKind::BoundedSmooth(SmoothField::Radial { profile, time }) => Ok(RadialDrift {
                singular_coeff: T::zero(),
                smooth: RadialPart::Table(profile.clone()),
                time: *time,
            }),
            DriftKind::BoundedSmooth(SmoothField::Constant(c)) if c.iter().all(|v| *v == T::zero()) => {
                Ok(RadialDrift::zero())
            }
            DriftKind::BoundedSmooth(_) => Err(Error::NotRadial),
        }
    }

    /// Upper bound for `sup |b|` over space-time, or an error for unbounded kinds.
    pub fn sup_norm(&self) -> Result<T> {
        match &self.kind {
            DriftKind::Zero => Ok(T::zero()),
            DriftKind::BoundedSmooth(f) => Ok(match f {
                SmoothField::Constant(c) | SmoothField::Bump { amplitude: c, .. } => norm(c),
                SmoothField::Radial { profile, .. } => profile.sup_abs(),
                SmoothField::ModulatedConstant { c, profile, .. } => norm(c) * profile.sup_abs(),
            }),
            _ => Err(Error::UnboundedDrift),
        }
    }

    /// The drift `b̃(τ, x) = b(horizon - τ, x)`.
    pub fn time_reversed(&self, horizon: T) -> Self {
        let mut out = self.clone();
        let flip = |tf: &mut TimeFactor<T>| {
            tf.reversed_at = match tf.reversed_at {
                // reversing twice restores the original time
                Some(_) => None,
                None => Some(horizon),
            };
        };
        if let DriftKind::BoundedSmooth(SmoothField::Radial { time, .. })
        | DriftKind::BoundedSmooth(SmoothField::ModulatedConstant { time, .. }) = &mut out.kind
        {
            flip(time);
        }
        out.g_reversed_at = match self.g_reversed_at {
            Some(_) => None,
            None => Some(horizon),
        };
        out
    }

    /// Key/value form used by configuration files. Mollified fields are
    /// described by their base and are not serializable on their own.
    pub fn to_config(&self) -> Result<Vec<(String, String)>> {
        let mut kv = vec![("drift.d".to_string(), self.d.to_string())];
        let join = |v: &[T]| v.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(",");
        match &self.kind {
            DriftKind::Hardy { .. } => kv.push(("drift.kind".into(), "hardy".into())),
            DriftKind::Zero => kv.push(("drift.kind".into(), "zero".into())),
            DriftKind::BoundedSmooth(SmoothField::Constant(c)) => {
                kv.push(("drift.kind".into(), "constant".into()));
                kv.push(("drift.vector".into(), join(c)));
            }
            DriftKind::BoundedSmooth(SmoothField::Bump { amplitude, center, width }) => {
                kv.push(("drift.kind".into(), "bump".into()));
                kv.push(("drift.vector".into(), join(amplitude)));
                kv.push(("drift.center".into(), join(center)));
                kv.push(("drift.width".into(), width.to_string()));
            }
            DriftKind::CustomRadial(CustomRadial::Power { coeff, power }) => {
                kv.push(("drift.kind".into(), "power".into()));
                kv.push(("drift.coeff".into(), coeff.to_string()));
                kv.push(("drift.power".into(), power.to_string()));
            }
            DriftKind::CustomRadial(CustomRadial::Table(t)) => match t.as_ref() {
                RadialTable::Nodes { r, values } => {
                    kv.push(("drift.kind".into(), "table".into()));
                    kv.push(("drift.table_r".into(), join(r)));
                    kv.push(("drift.table_v".into(), join(values)));
                }
                RadialTable::Uniform { .. } => {
                    return Err(Error::Unsupported("uniform radial tables are not serializable".into()))
                }
            },
            DriftKind::BoundedSmooth(_) => {
                return Err(Error::Unsupported("mollified drifts serialize through their base".into()))
            }
        }
        kv.push(("drift.delta".into(), fmt_rational(&self.delta)));
        kv.push((
            "drift.g".into(),
            match &self.g {
                GClass::Zero => "zero".into(),
                GClass::Constant(v) => format!("constant:{v}"),
                GClass::Tabulated { times, values } => format!("table:{};{}", join(times), join(values)),
            },
        ));
        kv.sort();
        Ok(kv)
    }

    /// Inverse of [`FormBoundedDrift::to_config`]. `get` looks up a key.
    pub fn from_config(get: impl Fn(&str) -> Option<String>) -> Result<Self> {
        let req = |k: &str| get(k).ok_or_else(|| Error::Config(format!("missing key {k}")));
        let num = |s: &str| -> Result<T> {
            s.trim()
                .parse::<f64>()
                .map(T::lit)
                .map_err(|_| Error::Parse(format!("not a number: {s:?}")))
        };
        let vec = |s: &str| -> Result<Vec<T>> { s.split(',').map(num).collect() };
        let kind = req("drift.kind")?;
        let d: usize = match get("drift.d") {
            Some(s) => s.trim().parse().map_err(|_| Error::Parse(format!("bad dimension {s:?}")))?,
            None if kind == "constant" || kind == "bump" => vec(&req("drift.vector")?)?.len(),
            None => return Err(Error::Config("missing key drift.d".into())),
        };
        let delta = match get("drift.delta") {
            Some(s) => parse_rational(&s)?,
            None => Rational::from_integer(0.into()),
        };
        let g = match get("drift.g").as_deref().map(str::trim) {
            None | Some("zero") => GClass::Zero,
            Some(s) if s.starts_with("constant:") => GClass::Constant(num(&s["constant:".len()..])?),
            Some(s) if s.starts_with("table:") => {
                let (t, v) = s["table:".len()..]
                    .split_once(';')
                    .ok_or_else(|| Error::Parse("g table needs `times;values`".into()))?;
                GClass::tabulated(vec(t)?, vec(v)?)?
            }
            Some(s) => return Err(Error::Parse(format!("unknown g class {s:?}"))),
        };
        let mut drift = match kind.trim() {
            "hardy" => hardy_drift(d, &delta)?,
            "zero" => zero_drift(d),
            "constant" => constant_drift(vec(&req("drift.vector")?)?),
            "bump" => bump_drift(
                vec(&req("drift.vector")?)?,
                vec(&req("drift.center")?)?,
                num(&req("drift.width")?)?,
            )?,
            "power" => custom_radial_drift(
                d,
                CustomRadial::Power { coeff: num(&req("drift.coeff")?)?, power: num(&req("drift.power")?)? },
                delta.clone(),
                g.clone(),
            )?,
            "table" => {
                let r = vec(&req("drift.table_r")?)?;
                let values = vec(&req("drift.table_v")?)?;
                if r.len() != values.len() || r.len() < 2 || r.windows(2).any(|w| w[1] <= w[0]) {
                    return domain("radial table needs increasing nodes matching the values");
                }
                custom_radial_drift(d, CustomRadial::Table(Arc::new(RadialTable::Nodes { r, values })), delta.clone(), g.clone())?
            }
            other => return Err(Error::Config(format!("unknown drift kind {other:?}"))),
        };
        if drift.d != d {
            return domain("drift.d does not match the vector length");
        }
        if get("drift.delta").is_some() {
            drift.delta = delta;
        }
        if get("drift.g").is_some() {
            drift.g = g;
        }
        Ok(drift)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::rat;

    #[test]
    fn hardy_evaluation() {
        let b = hardy_drift::<f64>(3, &rat(9, 25)).unwrap();
        let v = b.eval(0.0, &[1.0, 0.0, 0.0]).unwrap();
        assert!((v[0] - 0.3).abs() < 1e-15 && v[1] == 0.0 && v[2] == 0.0);
        let v = b.eval(0.0, &[0.0, 0.0, 2.0]).unwrap();
        assert!((v[2] - 0.15).abs() < 1e-15);
        assert_eq!(b.eval(0.0, &[0.0; 3]), Err(Error::Singularity));
        let b5 = hardy_drift::<f64>(5, &rat(1, 25)).unwrap();
        let v = b5.eval(0.0, &[0.0, 0.0, 0.0, 0.0, 1.0]).unwrap();
        assert!((v[4] - 0.3).abs() < 1e-15);
        assert!(hardy_drift::<f64>(2, &rat(1, 4)).is_err());
    }

    #[test]
    fn thresholds() {
        assert_eq!(nonexistence_threshold(3).unwrap(), rat(36, 1));
        assert_eq!(nonexistence_threshold(4).unwrap(), rat(16, 1));
        assert_eq!(nonexistence_threshold(5).unwrap(), rat(100, 9));
        assert!(hardy_drift::<f64>(3, &rat(49, 1)).unwrap().supercritical);
        assert!(!hardy_drift::<f64>(3, &rat(36, 1)).unwrap().supercritical);
    }

    #[test]
    fn hardy_metadata_matches_hardy_inequality() {
        for d in 3..8 {
            let b = hardy_drift::<f64>(d, &rat(9, 25)).unwrap();
            assert!((b.hardy_implied_bound().unwrap() - 0.36).abs() < 1e-14);
            assert!(b.g.is_zero());
        }
    }

    #[test]
    fn radial_profiles() {
        let b = hardy_drift::<f64>(3, &rat(9, 25)).unwrap();
        let p = b.radial_profile().unwrap();
        assert!((p.beta(0.0, 2.0) - 0.15).abs() < 1e-15);
        assert_eq!(zero_drift::<f64>(3).radial_profile().unwrap(), RadialDrift::zero());
        let bump = bump_drift(vec![1.0, 0.0, 0.0], vec![0.5, 0.0, 0.0], 1.0).unwrap();
        assert_eq!(bump.radial_profile(), Err(Error::NotRadial));
        assert_eq!(constant_drift(vec![1.0, 0.0, 0.0]).radial_profile(), Err(Error::NotRadial));
    }

    #[test]
    fn g_classes() {
        let g = GClass::tabulated(vec![0.0, 1.0, 2.0], vec![0.0, 2.0, 0.0]).unwrap();
        assert!((g.integral(2.0) - 2.0).abs() < 1e-14);
        assert!((g.integral(1.0) - 1.0).abs() < 1e-14);
        assert!((g.eval(0.5) - 1.0).abs() < 1e-14);
        assert_eq!(g.eval(3.0), 0.0);
        assert_eq!(GClass::Constant(2.0).integral(3.0), 6.0);
        assert!(GClass::tabulated(vec![1.0, 0.0], vec![1.0, 1.0]).is_err());
    }

    #[test]
    fn catmull_rom_converges_at_third_order() {
        let f = |r: f64| (2.0 * r).sin();
        let err = |h: f64| {
            let values: Vec<f64> = (0..=(4.0 / h) as usize).map(|i| f(i as f64 * h)).collect();
            let t = RadialTable::Uniform { h, values };
            [0.013, 0.05, 0.73, 1.234, 3.21].iter().map(|&r| (t.eval(r) - f(r)).abs()).fold(0.0, f64::max)
        };
        let (e1, e2) = (err(0.1), err(0.05));
        assert!(e1 < 2e-3 && e1 / e2 > 6.0, "{e1} {e2}");
        let t = RadialTable::Uniform { h: 0.1, values: vec![0.0, 1.0, 2.0] };
        assert_eq!(t.eval(10.0), 0.0);
        // odd reflection at the origin keeps linear profiles exact
        assert!((t.eval(0.05) - 0.5).abs() < 1e-14);
    }

    #[test]
    fn time_reversal_is_an_involution() {
        let b = hardy_drift::<f64>(3, &rat(9, 25)).unwrap();
        assert_eq!(b.time_reversed(1.0).time_reversed(1.0), b);
        let tf = TimeFactor { window: Some((2.0, 0.01)), reversed_at: None };
        let rev = TimeFactor { reversed_at: Some(1.5), ..tf };
        assert_eq!(rev.eval(0.25), tf.eval(1.25));
        assert!((tf.eval(0.0) - 0.5).abs() < 1e-12);
        assert!((tf.eval(1.0) - 1.0).abs() < 1e-10);
    }

    #[test]
    fn config_round_trip() {
        let drifts = vec![
            hardy_drift::<f64>(3, &rat(9, 25)).unwrap(),
            zero_drift(4),
            constant_drift(vec![0.5, 0.0, -0.25]),
            bump_drift(vec![1.0, 0.0, 0.0], vec![0.5, 0.0, 0.0], 1.5).unwrap(),
            custom_radial_drift(
                3,
                CustomRadial::Table(Arc::new(RadialTable::Nodes { r: vec![0.0, 1.0, 2.0], values: vec![0.0, 0.5, 0.0] })),
                rat(1, 10),
                GClass::tabulated(vec![0.0, 1.0], vec![1.0, 1.0]).unwrap(),
            )
            .unwrap(),
        ];
        for b in drifts {
            let kv = b.to_config().unwrap();
            let back = FormBoundedDrift::<f64>::from_config(|k| {
                kv.iter().find(|(key, _)| key == k).map(|(_, v)| v.clone())
            })
            .unwrap();
            assert_eq!(back, b);
        }
    }
}
