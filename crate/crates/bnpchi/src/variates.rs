//! Gamma variate generation.
//!
//! Shape >= 1 uses the Marsaglia-Tsang squeeze/rejection scheme; shape < 1
//! uses the boost identity X_a = X_{a+1} * U^{1/a}, whose log form stays
//! exact even when the variate itself underflows to zero. Tiny shapes are the
//! normal case here: Dirichlet weight vectors use shape alpha/n with n in the
//! thousands.

use rand::Rng;

use crate::scalar::Scalar;

/// One unit-rate gamma variate with the given shape.
///
/// Precondition: `shape` is finite and positive; violating it yields NaN.
/// For shape < 1 the result may round to exactly zero when the true value
/// falls below the smallest representable positive number.
pub fn gamma_variate<F: Scalar, R: Rng + ?Sized>(shape: F, rng: &mut R) -> F {
    gamma_variate_with_ln(shape, rng).0
}

/// One unit-rate gamma variate together with its natural log.
///
/// The log is computed analytically along the boost path, so `ln x` is finite
/// and accurate even when `x` underflows; callers that need `ln` of tiny
/// Dirichlet weights rely on this.
pub fn gamma_variate_with_ln<F: Scalar, R: Rng + ?Sized>(shape: F, rng: &mut R) -> (F, F) {
    debug_assert!(shape > F::zero() && shape.is_finite(), "shape = {shape:?}");
    if shape >= F::one() {
        let x = marsaglia_tsang(shape, rng);
        (x, x.ln())
    } else {
        let x1 = marsaglia_tsang(shape + F::one(), rng);
        let u = F::unit01(rng);
        let ln_x = x1.ln() + u.ln() / shape;
        (ln_x.exp(), ln_x)
    }
}

/// Marsaglia-Tsang for shape >= 1.
fn marsaglia_tsang<F: Scalar, R: Rng + ?Sized>(shape: F, rng: &mut R) -> F {
    let d = shape - F::of(1.0 / 3.0);
    let c = F::one() / (F::of(3.0) * d.sqrt());
    loop {
        let z = F::std_normal(rng);
        let t = F::one() + c * z;
        if t <= F::zero() {
            continue;
        }
        let v = t * t * t;
        let u = F::unit01(rng);
        let z2 = z * z;
        // Cheap squeeze first, exact log test on the rare misses.
        if u < F::one() - F::of(0.0331) * z2 * z2 {
            return d * v;
        }
        if u.ln() < F::of(0.5) * z2 + d * (F::one() - v + v.ln()) {
            return d * v;
        }
    }
}
