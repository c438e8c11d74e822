//! Scalar-generic numeric utilities: compensated summation, monotone function
//! inversion, and Gauss-Legendre quadrature nodes.

use thiserror::Error;

use crate::scalar::Scalar;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum NumericError {
    #[error("target {target} is not bracketed by f over [{lo}, {hi}] (f(lo) = {f_lo}, f(hi) = {f_hi})")]
    NotBracketed {
        lo: f64,
        hi: f64,
        f_lo: f64,
        f_hi: f64,
        target: f64,
    },
    #[error("invalid bracket [{lo}, {hi}]: endpoints must be finite with lo < hi")]
    InvalidBracket { lo: f64, hi: f64 },
}

/// Neumaier-compensated sum. Exactness matters where normalized weight vectors
/// must hit one to within a few ulps.
pub fn neumaier_sum<F: Scalar, I: IntoIterator<Item = F>>(xs: I) -> F {
    let mut sum = F::zero();
    let mut comp = F::zero();
    for x in xs {
        let t = sum + x;
        if sum.abs() >= x.abs() {
            comp += (sum - t) + x;
        } else {
            comp += (x - t) + sum;
        }
        sum = t;
    }
    sum + comp
}

/// Solves `f(x) = target` for a function monotone (either direction) on
/// `[lo, hi]` by bisection.
///
/// Terminates when `|f(x) - target| <= f_tol` or the interval shrinks to a few
/// ulps, whichever comes first; runs at most `max_iter` halvings. The bracket
/// is checked up front and the endpoints themselves are accepted if they
/// already meet the tolerance.
pub fn invert_monotone<F: Scalar>(
    f: impl Fn(F) -> F,
    lo: F,
    hi: F,
    target: F,
    f_tol: F,
    max_iter: usize,
) -> Result<F, NumericError> {
    if !(lo.is_finite() && hi.is_finite() && lo < hi) {
        return Err(NumericError::InvalidBracket {
            lo: lo.to_f64_lossy(),
            hi: hi.to_f64_lossy(),
        });
    }
    let f_lo = f(lo);
    let f_hi = f(hi);
    if (f_lo - target).abs() <= f_tol {
        return Ok(lo);
    }
    if (f_hi - target).abs() <= f_tol {
        return Ok(hi);
    }
    let increasing = f_hi > f_lo;
    let (mut below, mut above) = if increasing { (lo, hi) } else { (hi, lo) };
    // `below` maps under the target, `above` over it.
    let under = if increasing { f_lo } else { f_hi };
    let over = if increasing { f_hi } else { f_lo };
    if !(under <= target && target <= over) {
        return Err(NumericError::NotBracketed {
            lo: lo.to_f64_lossy(),
            hi: hi.to_f64_lossy(),
            f_lo: f_lo.to_f64_lossy(),
            f_hi: f_hi.to_f64_lossy(),
            target: target.to_f64_lossy(),
        });
    }
    let two = F::of(2.0);
    let mut mid = (below + above) / two;
    for _ in 0..max_iter {
        mid = (below + above) / two;
        let fm = f(mid);
        if (fm - target).abs() <= f_tol {
            return Ok(mid);
        }
        if fm < target {
            below = mid;
        } else {
            above = mid;
        }
        let width = (above - below).abs();
        if width <= F::eps() * (F::one() + mid.abs()) * F::of(4.0) {
            break;
        }
    }
    Ok(mid)
}

/// Nodes and weights of the `n`-point Gauss-Legendre rule on `[-1, 1]`,
/// computed by Newton iteration on the Legendre recurrence.
pub fn gauss_legendre<F: Scalar>(n: usize) -> (Vec<F>, Vec<F>) {
    assert!(n >= 2, "quadrature order must be at least 2");
    let mut nodes = vec![F::zero(); n];
    let mut weights = vec![F::zero(); n];
    let nf = F::of(n as f64);
    let half = (n + 1) / 2;
    for i in 0..half {
        // Tricomi initial guess for the i-th positive root.
        let theta = std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5);
        let mut x = F::of(theta.cos());
        let mut dp = F::one();
        for _ in 0..100 {
            // Evaluate P_n and P_{n-1} by upward recurrence.
            let mut p0 = F::one();
            let mut p1 = x;
            for k in 2..=n {
                let kf = F::of(k as f64);
                let p2 = ((F::of(2.0) * kf - F::one()) * x * p1 - (kf - F::one()) * p0) / kf;
                p0 = p1;
                p1 = p2;
            }
            dp = nf * (x * p1 - p0) / (x * x - F::one());
            let step = p1 / dp;
            x = x - step;
            if step.abs() <= F::eps() * (F::one() + x.abs()) {
                break;
            }
        }
        let w = F::of(2.0) / ((F::one() - x * x) * dp * dp);
        nodes[i] = -x;
        nodes[n - 1 - i] = x;
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    if n % 2 == 1 {
        nodes[n / 2] = F::zero();
    }
    (nodes, weights)
}
