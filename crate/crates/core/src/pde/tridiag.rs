//! Tridiagonal solvers.

use crate::scalar::Real;

/// Solves `lower[i] x[i-1] + diag[i] x[i] + upper[i] x[i+1] = rhs[i]` in place
/// (`rhs` becomes `x`). `lower[0]` and `upper[n-1]` are ignored.
///
/// No pivoting; intended for diagonally dominant systems.
pub fn thomas<T: Real>(lower: &[T], diag: &[T], upper: &[T], rhs: &mut [T], scratch: &mut Vec<T>) {
    let n = rhs.len();
    if n == 0 {
        return;
    }
    scratch.clear();
    scratch.resize(n, T::zero());
    let mut denom = diag[0];
    scratch[0] = if n > 1 { upper[0] / denom } else { T::zero() };
    rhs[0] = rhs[0] / denom;
    for i in 1..n {
        denom = diag[i] - lower[i] * scratch[i - 1];
        if i + 1 < n {
            scratch[i] = upper[i] / denom;
        }
        rhs[i] = (rhs[i] - lower[i] * rhs[i - 1]) / denom;
    }
    for i in (0..n - 1).rev() {
        let next = rhs[i + 1];
        rhs[i] = rhs[i] - scratch[i] * next;
    }
}

/// Periodic variant: `lower[0]` couples `x[0]` to `x[n-1]` and `upper[n-1]`
/// couples `x[n-1]` to `x[0]`. Sherman–Morrison on top of [`thomas`].
pub fn cyclic_thomas<T: Real>(lower: &[T], diag: &[T], upper: &[T], rhs: &mut [T], scratch: &mut Vec<T>) {
    let n = rhs.len();
    if n < 3 {
        // degenerate rings fold the corner terms into the diagonal band
        let mut d = diag.to_vec();
        let mut up = upper.to_vec();
        let mut lo = lower.to_vec();
        if n == 2 {
            up[0] = up[0] + lower[0];
            lo[1] = lo[1] + upper[1];
        } else if n == 1 {
            d[0] = d[0] + lower[0] + upper[0];
        }
        thomas(&lo, &d, &up, rhs, scratch);
        return;
    }
    let alpha = upper[n - 1];
    let beta = lower[0];
    let gamma = -diag[0];
    let mut d = diag.to_vec();
    d[0] = diag[0] - gamma;
    d[n - 1] = diag[n - 1] - alpha * beta / gamma;
    thomas(lower, &d, upper, rhs, scratch);
    let mut z = vec![T::zero(); n];
    z[0] = gamma;
    z[n - 1] = alpha;
    thomas(lower, &d, upper, &mut z, scratch);
    let fact = (rhs[0] + beta * rhs[n - 1] / gamma) / (T::one() + z[0] + beta * z[n - 1] / gamma);
    for i in 0..n {
        rhs[i] = rhs[i] - fact * z[i];
    }
}
