//! Admissibility calculus for the exponent/form-bound pair `(q, delta)`.
//!
//! Margins are returned as binary64 values together with a sign certified in
//! exact rational arithmetic, so strict inequalities are never decided by
//! rounding.

use num_traits::{One, Signed, Zero};
use serde::Serialize;

use crate::error::{domain, Result};
use crate::rational::{fmt_rational, int, sign_a_minus_b_sqrt, to_f64, Rational, Sign};
use crate::scalar::{Field, Real};

/// A margin value with its exactly certified sign.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Margin {
    pub value: f64,
    pub sign: Sign,
}

impl Margin {
    pub fn is_positive(&self) -> bool {
        self.sign.is_positive()
    }
}

/// Which branch condition governs a dimension.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Branch {
    /// d = 3, 4
    Star,
    /// d >= 5
    StarPrime,
}

impl Branch {
    pub fn for_dim(d: usize) -> Branch {
        if d <= 4 {
            Branch::Star
        } else {
            Branch::StarPrime
        }
    }
}

fn check_q_delta(q: &Rational, delta: &Rational) -> Result<()> {
    if *q <= int(2) {
        return domain(format!("q = {q} must exceed 2"));
    }
    if delta.is_negative() {
        return domain(format!("delta = {delta} must be nonnegative"));
    }
    Ok(())
}

/// Floating-point evaluation of `q-1 - q^2 d/4 - (q-2)^2/4 - (q-2) q sqrt(d)/2`.
pub fn star_margin_value<T: Real>(q: T, delta: T) -> T {
    let two = T::lit(2.0);
    let four = T::lit(4.0);
    let s = delta.sqrt();
    q - T::one() - q * q * delta / four - (q - two).powi(2) / four - (q - two) * q * s / two
}

/// Floating-point evaluation of `q-1 - (q sqrt(d)/2)(sqrt(q^2 d/4 + (q-2)^2) + q-2)`.
pub fn star_prime_margin_value<T: Real>(q: T, delta: T) -> T {
    let two = T::lit(2.0);
    let four = T::lit(4.0);
    let s = delta.sqrt();
    let inner = (q * q * delta / four + (q - two).powi(2)).sqrt();
    q - T::one() - q * s / two * (inner + q - two)
}

/// Coefficient of the d = 3, 4 branch.
pub fn star_margin(q: &Rational, delta: &Rational) -> Result<Margin> {
    check_q_delta(q, delta)?;
    let two = int(2);
    let four = int(4);
    let qm2 = q - &two;
    let a = q - Rational::one() - q * q * delta / &four - &qm2 * &qm2 / &four;
    let b = &qm2 * q / &two;
    Ok(Margin {
        value: star_margin_value(to_f64(q), to_f64(delta)),
        sign: sign_a_minus_b_sqrt(&a, &b, delta),
    })
}

/// Coefficient of the d >= 5 branch.
pub fn star_prime_margin(q: &Rational, delta: &Rational) -> Result<Margin> {
    check_q_delta(q, delta)?;
    let value = star_prime_margin_value(to_f64(q), to_f64(delta));
    if delta.is_zero() {
        return Ok(Margin { value, sign: Sign::Positive });
    }
    let two = int(2);
    let four = int(4);
    let qm1 = q - Rational::one();
    let qm2 = q - &two;
    let p = q * &qm2 / &two;
    let half_q = q / &two;
    let r = q * q * delta / &four + &qm2 * &qm2;
    // margin = u - (q/2) sqrt(delta R) with u = (q-1) - P sqrt(delta)
    let u_sign = sign_a_minus_b_sqrt(&qm1, &p, delta);
    let sign = match u_sign {
        Sign::Negative | Sign::Zero => Sign::Negative,
        Sign::Positive => {
            // u^2 - (q/2)^2 delta R = C - D sqrt(delta)
            let c = &qm1 * &qm1 + &p * &p * delta - &half_q * &half_q * delta * &r;
            let d = &two * &qm1 * &p;
            sign_a_minus_b_sqrt(&c, &d, delta)
        }
    };
    Ok(Margin { value, sign })
}

/// The branch margin selected by the dimension.
pub fn branch_margin(d: usize, q: &Rational, delta: &Rational) -> Result<Margin> {
    match Branch::for_dim(d) {
        Branch::Star => star_margin(q, delta),
        Branch::StarPrime => star_prime_margin(q, delta),
    }
}

/// The delta cap of the d = 3, 4 branch, `((sqrt(q-1) - (q-2)/2) 2/q)^2`.
pub fn delta_max_low_dim(q: &Rational) -> Result<f64> {
    if *q <= int(2) {
        return domain(format!("q = {q} must exceed 2"));
    }
    let qm2 = q - int(2);
    // bracket > 0 iff q - 1 > (q-2)^2 / 4
    if q - Rational::one() <= &qm2 * &qm2 / int(4) {
        return domain(format!("low-dimensional cap is nonpositive at q = {q}"));
    }
    let qf = to_f64(q);
    let bracket = ((qf - 1.0).sqrt() - (qf - 2.0) / 2.0) * 2.0 / qf;
    Ok(bracket * bracket)
}

/// Exact sign of `delta_max_low_dim(q) - x` for rational `x >= 0`.
///
/// With `s = sqrt(x)`, the cap exceeds `x` iff `2 sqrt(q-1) > q - 2 + q s`;
/// only rational `s` is handled, which covers every use here.
fn low_cap_exceeds_square(q: &Rational, s: &Rational) -> Sign {
    let lhs = -(q - int(2) + q * s);
    sign_a_minus_b_sqrt(&lhs, &int(-2), &(q - Rational::one()))
}

/// Result of [`delta_max_high_dim`].
#[derive(Debug, Clone, PartialEq)]
pub struct HighDimCap<F> {
    pub value: F,
    /// Whether `16 mu > (1-mu)^4 (q-1)^2/(q-2)^4`.
    pub side_condition: bool,
}

/// The delta cap of the d >= 5 branch, `((1-mu)(q-1)/((q-2) q))^2`.
pub fn delta_max_high_dim<F: Field>(q: &F, mu: &F) -> Result<HighDimCap<F>> {
    let two = F::int(2);
    if *q <= two {
        return domain(format!("q = {q} must exceed 2"));
    }
    if *mu <= F::zero() || *mu >= F::one() {
        return domain(format!("mu = {mu} must lie in (0, 1)"));
    }
    let one_m = F::one() - mu.clone();
    let qm1 = q.clone() - F::one();
    let qm2 = q.clone() - two;
    let root = one_m.clone() * qm1.clone() / (qm2.clone() * q.clone());
    let qm2_sq = qm2.clone() * qm2;
    let a = qm1.clone() * qm1 / (qm2_sq.clone() * qm2_sq);
    let om2 = one_m.clone() * one_m;
    let side = F::int(16) * mu.clone() > om2.clone() * om2 * a;
    Ok(HighDimCap { value: root.clone() * root, side_condition: side })
}

/// The constants attached to an exponent `q`.
#[derive(Debug, Clone, PartialEq)]
pub struct BoundConstants<F> {
    /// `(q-1)^2/(q-2)^4`
    pub a: F,
    /// `a/(16+a)`
    pub mu_default: F,
    /// `1 + 8/a - sqrt((1 + 8/a)^2 - 1)`, always binary64.
    pub mu_alt: f64,
    /// Whether `mu_alt < mu_default`, certified in the field arithmetic.
    pub mu_alt_below_default: bool,
    /// `1/q^2`
    pub c_old: F,
    /// `delta_max_high_dim(q, mu_default)`
    pub c_new: F,
}

pub fn bound_constants<F: Field>(q: &F) -> Result<BoundConstants<F>> {
    let two = F::int(2);
    if *q <= two {
        return domain(format!("q = {q} must exceed 2"));
    }
    let qm1 = q.clone() - F::one();
    let qm2 = q.clone() - two.clone();
    let qm2_sq = qm2.clone() * qm2;
    let a = qm1.clone() * qm1 / (qm2_sq.clone() * qm2_sq);
    let mu_default = a.clone() / (F::int(16) + a.clone());
    let c = F::one() + F::int(8) / a.clone();
    // mu_alt < m  iff  2 c m - m^2 > 1
    let mu_alt_below_default =
        two * c.clone() * mu_default.clone() - mu_default.clone() * mu_default.clone() > F::one();
    let cf = c.approx();
    let mu_alt = 1.0 / (cf + (cf * cf - 1.0).sqrt());
    let c_old = F::one() / (q.clone() * q.clone());
    let c_new = delta_max_high_dim(q, &mu_default)?.value;
    Ok(BoundConstants { a, mu_default, mu_alt, mu_alt_below_default, c_old, c_new })
}

pub type BoundConstantsExact = BoundConstants<Rational>;

/// Whether the branch condition selected by `d` holds strictly.
pub fn admissible(d: usize, q: &Rational, delta: &Rational) -> Result<bool> {
    if d < 3 {
        return domain(format!("dimension d = {d} must be at least 3"));
    }
    if *q <= int(d as i64) {
        return domain(format!("q = {q} must exceed d = {d}"));
    }
    if !delta.is_positive() {
        return domain(format!("delta = {delta} must be positive"));
    }
    Ok(branch_margin(d, q, delta)?.is_positive())
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AdmissibilityReport {
    pub d: usize,
    pub q: String,
    pub delta: String,
    pub star_margin: f64,
    pub star_margin_sign: Sign,
    pub star_prime_margin: f64,
    pub star_prime_margin_sign: Sign,
    pub delta_max_low: Option<f64>,
    pub delta_max_high: f64,
    pub mu: String,
    pub side_condition: bool,
    pub a: String,
    pub mu_default: String,
    pub mu_alt: f64,
    pub c_old: f64,
    pub c_new: f64,
    pub branch: Branch,
    pub admissible: bool,
}

/// Full report for `(d, q, delta)`; `mu` defaults to `a/(16+a)`.
pub fn report(d: usize, q: &Rational, delta: &Rational, mu: Option<&Rational>) -> Result<AdmissibilityReport> {
    if d < 3 {
        return domain(format!("dimension d = {d} must be at least 3"));
    }
    let star = star_margin(q, delta)?;
    let star_prime = star_prime_margin(q, delta)?;
    let consts = bound_constants(q)?;
    let mu = mu.cloned().unwrap_or_else(|| consts.mu_default.clone());
    let high = delta_max_high_dim(q, &mu)?;
    let branch = Branch::for_dim(d);
    let admissible = *q > int(d as i64)
        && delta.is_positive()
        && match branch {
            Branch::Star => star.is_positive(),
            Branch::StarPrime => star_prime.is_positive(),
        };
    Ok(AdmissibilityReport {
        d,
        q: fmt_rational(q),
        delta: fmt_rational(delta),
        star_margin: star.value,
        star_margin_sign: star.sign,
        star_prime_margin: star_prime.value,
        star_prime_margin_sign: star_prime.sign,
        delta_max_low: delta_max_low_dim(q).ok(),
        delta_max_high: to_f64(&high.value),
        mu: fmt_rational(&mu),
        side_condition: high.side_condition,
        a: fmt_rational(&consts.a),
        mu_default: fmt_rational(&consts.mu_default),
        mu_alt: consts.mu_alt,
        c_old: to_f64(&consts.c_old),
        c_new: to_f64(&consts.c_new),
        branch,
        admissible,
    })
}

/// One row of the constant-comparison table.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RatioRow {
    pub d: usize,
    pub q: f64,
    pub c_old: f64,
    pub c_new: f64,
    pub ratio: f64,
    /// `c_new(d+eps) > c_old(d+eps)`, certified exactly.
    pub exceeds: bool,
    /// `c_new(d+eps) > c_old(d) = 1/d^2`, certified exactly.
    pub exceeds_at_d: bool,
}

pub fn ratio_table(d_min: usize, d_max: usize, epsilon: &Rational) -> Result<Vec<RatioRow>> {
    if d_min < 3 || d_min > d_max {
        return domain(format!("need 3 <= d_min <= d_max, got {d_min}..{d_max}"));
    }
    if !epsilon.is_positive() {
        return domain("epsilon must be positive");
    }
    (d_min..=d_max)
        .map(|d| {
            let q = int(d as i64) + epsilon;
            let c_old = Rational::one() / (&q * &q);
            let inv_d = Rational::new(1.into(), (d as i64).into());
            let (c_new, exceeds, exceeds_at_d) = if d >= 5 {
                let c_new = bound_constants(&q)?.c_new;
                let exceeds = c_new > c_old;
                let exceeds_at_d = c_new > &inv_d * &inv_d;
                (to_f64(&c_new), exceeds, exceeds_at_d)
            } else {
                let cap = delta_max_low_dim(&q)?;
                let inv_q = Rational::one() / &q;
                (
                    cap,
                    low_cap_exceeds_square(&q, &inv_q).is_positive(),
                    low_cap_exceeds_square(&q, &inv_d).is_positive(),
                )
            };
            let c_old = to_f64(&c_old);
            Ok(RatioRow { d, q: to_f64(&q), c_old, c_new, ratio: c_new / c_old, exceeds, exceeds_at_d })
        })
        .collect()
}

pub const RATIO_TABLE_HEADER: &str = "d,q,c_old,c_new,ratio";

pub fn ratio_table_csv(rows: &[RatioRow]) -> String {
    let mut out = String::from(RATIO_TABLE_HEADER);
    out.push('\n');
    for r in rows {
        out.push_str(&format!("{},{},{:e},{:e},{}\n", r.d, r.q, r.c_old, r.c_new, r.ratio));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::rat;

    #[test]
    fn star_margin_reference_values() {
        let m = star_margin(&rat(145, 48), &rat(9, 25)).unwrap();
        assert!((m.value - 0.013889).abs() < 1e-6);
        assert_eq!(m.sign, Sign::Positive);
        let m = star_margin(&rat(2007, 500), &rat(49, 400)).unwrap();
        assert!((m.value - 0.091781).abs() < 1e-6);
        let m = star_margin(&int(4), &int(0)).unwrap();
        assert_eq!(m.value, 2.0);
        assert!(star_margin(&int(2), &int(0)).is_err());
    }

    #[test]
    fn star_prime_reference_values() {
        let m = star_prime_margin(&int(6), &rat(1, 25)).unwrap();
        assert!((m.value - 0.173150).abs() < 1e-6);
        assert_eq!(m.sign, Sign::Positive);
        let m = star_prime_margin(&rat(13, 2), &rat(1, 25)).unwrap();
        assert_eq!(m.sign, Sign::Negative);
        assert!(m.value < 0.0);
        assert_eq!(star_prime_margin(&int(3), &int(0)).unwrap().value, 2.0);
    }

    #[test]
    fn caps() {
        assert!((delta_max_low_dim(&rat(145, 48)).unwrap() - 0.363898).abs() < 1e-6);
        assert!((delta_max_low_dim(&int(3)).unwrap() - 0.371461).abs() < 1e-6);
        // sqrt(q-1) = (q-2)/2 at q = 4 + 2 sqrt(2); just above it the cap is gone
        assert!(delta_max_low_dim(&int(7)).is_err());
        let consts = bound_constants(&int(6)).unwrap();
        let high = delta_max_high_dim(&int(6), &consts.mu_default).unwrap();
        assert!((to_f64(&high.value) - 0.042878).abs() < 1e-6);
        assert!(high.side_condition);
        let near_one = delta_max_high_dim(&int(6), &rat(999_999, 1_000_000)).unwrap();
        assert!(to_f64(&near_one.value) < 1e-12);
        assert!(delta_max_high_dim(&int(6), &int(1)).is_err());
    }

    #[test]
    fn bound_constants_exact() {
        let c = bound_constants(&int(6)).unwrap();
        assert_eq!(c.a, rat(25, 256));
        assert_eq!(c.mu_default, rat(25, 4121));
        assert_eq!(c.c_old, rat(1, 36));
        assert_eq!(c.c_new, rat(6_553_600, 152_843_769));
        assert!(c.mu_alt_below_default);
        assert!(c.mu_alt < to_f64(&c.mu_default));
        let c7 = bound_constants(&int(7)).unwrap();
        assert_eq!(c7.a, rat(36, 625));
        assert!((to_f64(&(c7.c_new / c7.c_old)) - 1.429687).abs() < 1e-5);
    }

    #[test]
    fn bound_constants_in_binary64_agree() {
        let exact = bound_constants(&int(6)).unwrap();
        let float = bound_constants(&6.0f64).unwrap();
        assert!((float.c_new - to_f64(&exact.c_new)).abs() < 1e-15);
        assert_eq!(float.mu_alt, exact.mu_alt);
    }

    #[test]
    fn dispatch() {
        assert!(admissible(3, &rat(145, 48), &rat(9, 25)).unwrap());
        assert!(admissible(5, &int(6), &rat(1, 25)).unwrap());
        assert!(!admissible(5, &rat(13, 2), &rat(1, 25)).unwrap());
        assert!(admissible(2, &int(3), &rat(1, 25)).is_err());
        assert!(admissible(5, &int(5), &rat(1, 25)).is_err());
    }

    #[test]
    fn report_fields() {
        let r = report(3, &rat(145, 48), &rat(9, 25), None).unwrap();
        assert!(r.admissible);
        assert_eq!(r.branch, Branch::Star);
        let json = serde_json::to_value(&r).unwrap();
        for key in [
            "star_margin", "star_prime_margin", "delta_max_low", "delta_max_high", "a",
            "mu_default", "mu_alt", "c_old", "c_new", "admissible",
        ] {
            assert!(json.get(key).is_some(), "missing {key}");
        }
        let r = report(5, &int(5), &rat(1, 25), None).unwrap();
        assert!(!r.admissible);
    }

    #[test]
    fn ratio_rows() {
        let rows = ratio_table(5, 5, &int(1)).unwrap();
        assert!((rows[0].ratio - 1.5436).abs() < 1e-4);
        let rows = ratio_table(5, 15, &int(1)).unwrap();
        assert!(rows.iter().all(|r| r.ratio > 1.0 && r.exceeds && r.exceeds_at_d));
        assert!(rows.windows(2).all(|w| w[1].ratio < w[0].ratio));
        let low = ratio_table(3, 4, &rat(1, 10)).unwrap();
        assert!(low.iter().all(|r| r.exceeds && r.exceeds_at_d));
        let csv = ratio_table_csv(&rows);
        assert!(csv.starts_with("d,q,c_old,c_new,ratio\n"));
        assert_eq!(csv.lines().count(), 12);
    }
}
