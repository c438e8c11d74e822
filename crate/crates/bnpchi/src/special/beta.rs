//! Regularized incomplete beta function, used to check sampled Dirichlet
//! marginals against their Beta laws.

use crate::scalar::Scalar;

use super::gamma::ln_gamma;

/// Regularized incomplete beta I_x(a, b) for a, b > 0 and x in [0, 1].
///
/// Continued-fraction evaluation with the symmetry
/// I_x(a, b) = 1 - I_{1-x}(b, a) applied so the fraction always converges
/// fast. NaN on domain violations.
pub fn reg_inc_beta<F: Scalar>(a: F, b: F, x: F) -> F {
    if !(a > F::zero() && b > F::zero()) || x.is_nan() {
        return F::nan();
    }
    if x <= F::zero() {
        return F::zero();
    }
    if x >= F::one() {
        return F::one();
    }
    let ln_front = ln_gamma(a + b) - ln_gamma(a) - ln_gamma(b)
        + a * x.ln()
        + b * (F::one() - x).ln();
    let front = ln_front.exp();
    if x < (a + F::one()) / (a + b + F::of(2.0)) {
        (front * beta_cf(a, b, x) / a).clamp_to(F::zero(), F::one())
    } else {
        (F::one() - front * beta_cf(b, a, F::one() - x) / b).clamp_to(F::zero(), F::one())
    }
}

/// Lentz evaluation of the standard incomplete-beta continued fraction.
fn beta_cf<F: Scalar>(a: F, b: F, x: F) -> F {
    let fpmin = F::min_positive_value() / F::eps();
    let qab = a + b;
    let qap = a + F::one();
    let qam = a - F::one();
    let mut c = F::one();
    let mut d = F::one() - qab * x / qap;
    if d.abs() < fpmin {
        d = fpmin;
    }
    d = d.recip();
    let mut h = d;
    for m in 1..400 {
        let mf = F::of(m as f64);
        let m2 = F::of(2.0) * mf;
        let aa = mf * (b - mf) * x / ((qam + m2) * (a + m2));
        d = F::one() + aa * d;
        if d.abs() < fpmin {
            d = fpmin;
        }
        c = F::one() + aa / c;
        if c.abs() < fpmin {
            c = fpmin;
        }
        d = d.recip();
        h *= d * c;
        let aa = -(a + mf) * (qab + mf) * x / ((a + m2) * (qap + m2));
        d = F::one() + aa * d;
        if d.abs() < fpmin {
            d = fpmin;
        }
        c = F::one() + aa / c;
        if c.abs() < fpmin {
            c = fpmin;
        }
        d = d.recip();
        let del = d * c;
        h *= del;
        if (del - F::one()).abs() < F::eps() {
            break;
        }
    }
    h
}
