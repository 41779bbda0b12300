//! Exponent schedule of the Moser iteration: `r_n`, `alpha_n`, `gamma_n`,
//! `Gamma_n` and their bounds.
//!
//! Generic over [`Field`]: with `BigRational` every identity is checked with
//! zero tolerance, with `f64` to a small relative tolerance.

use serde::Serialize;

use crate::error::{domain, Result};
use crate::scalar::Field;

#[derive(Debug, Clone, PartialEq)]
pub struct MoserSchedule<F> {
    pub d: usize,
    pub q: F,
    pub r0: F,
    pub k: u32,
    pub delta: F,
    pub beta: F,
    pub t_frak: F,
    pub j1: F,
    pub x: F,
    pub x_prime: F,
    /// `r_1..r_N` from the recursion `r_{n+1} = t r_n + 2`.
    pub r_seq: Vec<F>,
    /// `r_1..r_N` from the closed form.
    pub r_closed: Vec<F>,
    pub alpha_seq: Vec<F>,
    pub gamma_seq: Vec<F>,
    /// `ln Gamma_n`, summed in log space.
    pub log_gamma_big_seq: Vec<f64>,
    pub a_env: F,
    pub b_env: F,
}

pub type MoserScheduleExact = MoserSchedule<crate::Rational>;

fn pow<F: Field>(base: &F, n: usize) -> F {
    let mut out = F::one();
    for _ in 0..n {
        out = out * base.clone();
    }
    out
}

/// The exponent `beta` with `j_1/x' = 1/(1-beta)`.
///
/// Solving `d (q-2)(1-beta) = q (d-2+2 beta)` gives the unique value
/// `2(q-d)/(2q + d(q-2))`, which lies in `(0, q-d]` whenever `q > d`
/// and equals `2/(d^2+d+2)` at `q = d+1`.
pub fn select_beta<F: Field>(d: usize, q: &F) -> Result<F> {
    let df = F::int(d as i64);
    if *q <= df {
        return domain(format!("q = {q} must exceed d = {d}"));
    }
    let two = F::int(2);
    Ok(two.clone() * (q.clone() - df.clone()) / (two.clone() * q.clone() + df * (q.clone() - two)))
}

/// Whether `r0 > 2/(2 - sqrt(delta))`, decided without square roots.
pub fn r0_admissible<F: Field>(r0: &F, delta: &F) -> bool {
    let two = F::int(2);
    if *r0 <= F::zero() {
        return false;
    }
    let lhs = two.clone() - two / r0.clone();
    lhs > F::zero() && lhs.clone() * lhs > *delta
}

/// Builds the schedule with the default form-bound `delta = 1/d^2`.
pub fn build_schedule<F: Field>(d: usize, q: &F, r0: &F, k: u32, n_max: usize) -> Result<MoserSchedule<F>> {
    let dd = F::int((d * d) as i64);
    build_schedule_with_delta(d, q, r0, k, n_max, &(F::one() / dd))
}

pub fn build_schedule_with_delta<F: Field>(
    d: usize,
    q: &F,
    r0: &F,
    k: u32,
    n_max: usize,
    delta: &F,
) -> Result<MoserSchedule<F>> {
    if d < 3 {
        return domain(format!("dimension d = {d} must be at least 3"));
    }
    if k <= 2 {
        return domain(format!("k = {k} must exceed 2"));
    }
    if *delta < F::zero() {
        return domain("delta must be nonnegative");
    }
    if !r0_admissible(r0, delta) {
        return domain(format!("r0 = {r0} must exceed 2/(2 - sqrt(delta))"));
    }
    let beta = select_beta(d, q)?;
    if beta <= F::zero() || beta >= F::one() {
        return domain(format!("beta = {beta} outside (0, 1)"));
    }
    let two = F::int(2);
    let df = F::int(d as i64);
    let x = q.clone() / two.clone();
    let x_prime = x.clone() / (x.clone() - F::one());
    let j1 = df.clone() / (df - two.clone() + two.clone() * beta.clone());
    let t_frak = j1.clone() / x_prime.clone();
    let tm1 = t_frak.clone() - F::one();
    let s0 = r0.clone() / x_prime.clone();

    let mut r_seq = Vec::with_capacity(n_max);
    let mut r_closed = Vec::with_capacity(n_max);
    let mut prev: Option<F> = None;
    for n in 1..=n_max {
        let r = match prev {
            None => s0.clone() + two.clone(),
            Some(p) => t_frak.clone() * p + two.clone(),
        };
        let tn = pow(&t_frak, n);
        let tn1 = pow(&t_frak, n - 1);
        let closed = (tn * (s0.clone() + two.clone()) - tn1 * s0.clone() - two.clone()) / tm1.clone();
        r_closed.push(closed);
        r_seq.push(r.clone());
        prev = Some(r);
    }

    let mut alpha_seq = Vec::with_capacity(n_max);
    let mut gamma_seq = Vec::with_capacity(n_max);
    let mut alpha = F::zero();
    let mut gamma = F::one();
    for r in &r_seq {
        let factor = F::one() - two.clone() / r.clone();
        alpha = alpha * factor.clone() + F::one() / r.clone();
        gamma = gamma * factor;
        alpha_seq.push(alpha.clone());
        gamma_seq.push(gamma.clone());
    }

    // ln Gamma_n = 2k sum_i t^{n-i} ln(r_i) / r_n
    let tf = t_frak.approx();
    let log_gamma_big_seq = (1..=n_max)
        .map(|n| {
            let rn = r_seq[n - 1].approx();
            let s: f64 = (1..=n)
                .map(|i| tf.powi((n - i) as i32) * r_seq[i - 1].approx().ln())
                .sum();
            2.0 * k as f64 * s / rn
        })
        .collect();

    let r1 = s0 + two;
    let a_env = r1.clone() / tm1;
    let b_env = r1 / t_frak.clone();
    Ok(MoserSchedule {
        d,
        q: q.clone(),
        r0: r0.clone(),
        k,
        delta: delta.clone(),
        beta,
        t_frak,
        j1,
        x,
        x_prime,
        r_seq,
        r_closed,
        alpha_seq,
        gamma_seq,
        log_gamma_big_seq,
        a_env,
        b_env,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScheduleLimits<F> {
    pub alpha_bound: F,
    pub gamma_lower: F,
    pub gamma_upper: F,
    /// `ln` of `[a^{1/(t-1)} t^{t/(t-1)^2}]^{2k/b}`.
    pub log_gamma_bound: f64,
}

impl<F> ScheduleLimits<F> {
    pub fn gamma_bound(&self) -> f64 {
        self.log_gamma_bound.exp()
    }
}

pub fn schedule_limits<F: Field>(s: &MoserSchedule<F>) -> ScheduleLimits<F> {
    let two = F::int(2);
    let s0 = s.r0.clone() / s.x_prime.clone();
    let tm1 = s.t_frak.clone() - F::one();
    let alpha_bound = F::one() / (s0.clone() + two.clone() - s.r0.clone() / s.j1.clone());
    let gamma_lower = s0.clone() / (s0 + two * s.t_frak.clone() / tm1.clone());
    let t = s.t_frak.approx();
    let tm1 = tm1.approx();
    let inner = s.a_env.approx().ln() / tm1 + t * t.ln() / (tm1 * tm1);
    ScheduleLimits {
        alpha_bound,
        gamma_lower,
        gamma_upper: F::one(),
        log_gamma_bound: 2.0 * s.k as f64 * inner / s.b_env.approx(),
    }
}

impl<F: Field> MoserSchedule<F> {
    pub fn len(&self) -> usize {
        self.r_seq.len()
    }

    pub fn is_empty(&self) -> bool {
        self.r_seq.is_empty()
    }

    /// `nu(tau) = tau^{gamma/(r0(x-1))}` on `(0, 1]`, `tau^{1/(r0(x-1))}` beyond.
    pub fn nu(&self, tau: f64) -> f64 {
        let gamma = schedule_limits(self).gamma_lower.approx();
        let base = 1.0 / (self.r0.approx() * (self.x.approx() - 1.0));
        if tau <= 1.0 {
            tau.powf(gamma * base)
        } else {
            tau.powf(base)
        }
    }
}

/// Outcome of [`verify_schedule`].
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScheduleVerification {
    pub passed: bool,
    pub checks: usize,
    /// Name of the first violated identity and its index `n`.
    pub first_failure: Option<(String, usize)>,
}

fn agrees<F: Field>(a: &F, b: &F) -> bool {
    if F::EXACT {
        a == b
    } else {
        let (x, y) = (a.approx(), b.approx());
        (x - y).abs() <= 1e-10 * x.abs().max(y.abs()).max(1.0)
    }
}

fn at_most<F: Field>(a: &F, b: &F) -> bool {
    if F::EXACT {
        a <= b
    } else {
        a.approx() <= b.approx() * (1.0 + 1e-12)
    }
}

pub fn verify_schedule<F: Field>(s: &MoserSchedule<F>) -> ScheduleVerification {
    let mut checks = 0usize;
    let mut fail: Option<(String, usize)> = None;
    let mut check = |ok: bool, name: &str, n: usize| {
        checks += 1;
        if !ok && fail.is_none() {
            fail = Some((name.to_string(), n));
        }
    };
    let two = F::int(2);
    let tm1 = s.t_frak.clone() - F::one();
    check(agrees(&s.t_frak, &(F::one() / (F::one() - s.beta.clone()))), "t = 1/(1-beta)", 0);
    check(agrees(&s.t_frak, &(s.j1.clone() / s.x_prime.clone())), "t = j1/x'", 0);
    if s.is_empty() {
        return ScheduleVerification { passed: fail.is_none(), checks, first_failure: fail };
    }
    let lim = schedule_limits(s);
    let log_bound_root = lim.log_gamma_bound / (2.0 * s.k as f64);
    for n in 1..=s.len() {
        let r = &s.r_seq[..n];
        let rn = &r[n - 1];
        check(agrees(rn, &s.r_closed[n - 1]), "recursion = closed form", n);

        let mut alpha_sum = F::zero();
        for i in 0..n {
            let mut term = F::one() / r[i].clone();
            for rk in &r[i + 1..] {
                term = term * (F::one() - two.clone() / rk.clone());
            }
            alpha_sum = alpha_sum + term;
        }
        let tn = pow(&s.t_frak, n);
        let alpha_closed = (tn.clone() - F::one()) / (rn.clone() * tm1.clone());
        check(agrees(&alpha_sum, &s.alpha_seq[n - 1]), "alpha sum = alpha recursion", n);
        check(agrees(&alpha_sum, &alpha_closed), "alpha sum = closed form", n);

        let mut gamma_prod = F::one();
        for rk in r {
            gamma_prod = gamma_prod * (F::one() - two.clone() / rk.clone());
        }
        let gamma_closed = s.r0.clone() * pow(&s.t_frak, n - 1) / (s.x_prime.clone() * rn.clone());
        check(agrees(&gamma_prod, &s.gamma_seq[n - 1]), "gamma product = gamma recursion", n);
        check(agrees(&gamma_prod, &gamma_closed), "gamma product = closed form", n);

        check(at_most(&alpha_sum, &lim.alpha_bound), "alpha_n <= alpha bound", n);
        check(gamma_prod > lim.gamma_lower && gamma_prod < F::one(), "gamma bound < gamma_n < 1", n);
        check(
            at_most(&(s.b_env.clone() * tn.clone()), rn) && at_most(rn, &(s.a_env.clone() * tn)),
            "b t^n <= r_n <= a t^n",
            n,
        );
        let log_root = s.log_gamma_big_seq[n - 1] / (2.0 * s.k as f64);
        check(log_root <= log_bound_root + 1e-12 * log_bound_root.abs(), "Gamma_n^{1/2k} <= bound", n);
        if n >= 2 {
            check(
                s.log_gamma_big_seq[n - 1] >= s.log_gamma_big_seq[n - 2],
                "Gamma_n nondecreasing",
                n,
            );
        }
    }
    ScheduleVerification { passed: fail.is_none(), checks, first_failure: fail }
}

pub const SCHEDULE_HEADER: &str = "n,r_n,alpha_n,gamma_n,Gamma_n,r_n_f64,alpha_n_f64,gamma_n_f64,ln_Gamma_n";

pub fn schedule_csv<F: Field>(s: &MoserSchedule<F>) -> String {
    let mut out = String::from(SCHEDULE_HEADER);
    out.push('\n');
    for n in 0..s.len() {
        let lg = s.log_gamma_big_seq[n];
        out.push_str(&format!(
            "{},{},{},{},{:e},{},{},{},{}\n",
            n + 1,
            s.r_seq[n].render(),
            s.alpha_seq[n].render(),
            s.gamma_seq[n].render(),
            lg.exp(),
            s.r_seq[n].approx(),
            s.alpha_seq[n].approx(),
            s.gamma_seq[n].approx(),
            lg,
        ));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::{int, rat, Rational};

    fn reference() -> MoserScheduleExact {
        build_schedule(5, &int(6), &int(2), 3, 20).unwrap()
    }

    #[test]
    fn reference_constants() {
        let s = reference();
        assert_eq!(s.beta, rat(1, 16));
        assert_eq!(s.t_frak, rat(16, 15));
        assert_eq!(s.j1, rat(8, 5));
        assert_eq!(s.x_prime, rat(3, 2));
        assert_eq!(s.r_seq[0], rat(10, 3));
        assert_eq!(s.r_seq[1], rat(50, 9));
        assert_eq!(s.r_seq[2], rat(214, 27));
        assert_eq!(s.b_env.clone() * s.t_frak.clone(), s.r_seq[0]);
    }

    #[test]
    fn reference_limits() {
        let s = reference();
        let lim = schedule_limits(&s);
        assert_eq!(lim.alpha_bound, rat(12, 25));
        assert_eq!(lim.gamma_lower, rat(1, 25));
        assert_eq!(lim.gamma_upper, int(1));
        assert!(lim.log_gamma_bound.is_finite());
    }

    #[test]
    fn reference_verifies() {
        let v = verify_schedule(&reference());
        assert!(v.passed, "{:?}", v.first_failure);
        assert!(v.checks > 200);
    }

    #[test]
    fn beta_matches_the_reference_formula() {
        for d in 5..=12usize {
            let b: Rational = select_beta(d, &int(d as i64 + 1)).unwrap();
            assert_eq!(b, rat(2, (d * d + d + 2) as i64));
        }
    }

    #[test]
    fn degenerate_and_invalid() {
        let s = build_schedule(5, &int(6), &int(2), 3, 0).unwrap();
        assert!(s.is_empty());
        assert!(verify_schedule(&s).passed);
        assert!(verify_schedule(&build_schedule(5, &int(6), &int(2), 3, 1).unwrap()).passed);
        assert!(build_schedule(5, &int(6), &int(1), 3, 5).is_err());
        assert!(build_schedule(5, &int(6), &int(2), 2, 5).is_err());
        assert!(build_schedule(5, &int(5), &int(2), 3, 5).is_err());
    }

    #[test]
    fn binary64_schedule_tracks_the_exact_one() {
        let e = reference();
        let f = build_schedule(5, &6.0f64, &2.0, 3, 20).unwrap();
        assert!(verify_schedule(&f).passed);
        for (a, b) in e.r_seq.iter().zip(&f.r_seq) {
            assert!((a.approx() - b).abs() < 1e-12 * b);
        }
    }

    #[test]
    fn nu_is_continuous_at_one() {
        let s = reference();
        assert!((s.nu(1.0) - 1.0).abs() < 1e-15);
        assert!(s.nu(0.5) < 1.0 && s.nu(2.0) > 1.0);
    }

    #[test]
    fn csv_renders_fractions() {
        let csv = schedule_csv(&reference());
        let first = csv.lines().nth(1).unwrap();
        assert!(first.starts_with("1,10/3,3/10,2/5,"));
    }
}
