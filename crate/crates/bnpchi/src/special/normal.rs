//! Standard normal pdf, cdf, and quantile.
//!
//! The cdf routes through the regularized incomplete gamma at shape 1/2,
//! which is the classical series/continued-fraction evaluation of erf and
//! keeps this module on a single, well-tested numerical core.

use crate::numeric::invert_monotone;
use crate::scalar::Scalar;

use super::gamma::GammaTail;

/// Standard normal density.
pub fn normal_pdf<F: Scalar>(x: F) -> F {
    let inv_sqrt_2pi = F::of(0.398_942_280_401_432_7);
    inv_sqrt_2pi * (-x * x / F::of(2.0)).exp()
}

/// Standard normal cdf, absolute error well under 1e-12 across the axis.
pub fn normal_cdf<F: Scalar>(x: F) -> F {
    if x.is_nan() {
        return F::nan();
    }
    let half = F::of(0.5);
    let t = GammaTail::new(half);
    let arg = x * x / F::of(2.0);
    if x >= F::zero() {
        half + half * t.p(arg)
    } else {
        half * t.q(arg)
    }
}

/// Standard normal quantile for p in (0, 1); NaN outside.
///
/// Inverted from the cdf by bisection, exploiting the symmetry
/// probit(p) = -probit(1 - p) so the bracket stays one-sided.
pub fn normal_quantile<F: Scalar>(p: F) -> F {
    if !(p > F::zero() && p < F::one()) {
        return F::nan();
    }
    let half = F::of(0.5);
    if p == half {
        return F::zero();
    }
    if p < half {
        return -normal_quantile(F::one() - p);
    }
    let mut hi = F::of(2.0);
    while normal_cdf(hi) < p {
        hi += F::of(2.0);
        if hi > F::of(60.0) {
            break;
        }
    }
    invert_monotone(normal_cdf, F::zero(), hi, p, F::of(1e-15), 300)
        .unwrap_or_else(|_| F::nan())
}

#[cfg(test)]
mod tests {
    use super::*;

    const CDF_ORACLE: [(f64, f64); 13] = [
        (-8.0, 6.2209605742717841e-16),
        (-6.0, 9.8658764503769814e-10),
        (-3.5, 0.00023262907903552504),
        (-2.0, 0.022750131948179207),
        (-1.0, 0.15865525393145705),
        (-0.3, 0.38208857781104737),
        (0.0, 0.50000000000000000),
        (0.3, 0.61791142218895263),
        (1.0, 0.84134474606854295),
        (2.0, 0.97724986805182079),
        (3.5, 0.99976737092096447),
        (6.0, 0.99999999901341235),
        (8.0, 0.99999999999999938),
    ];

    const QUANTILE_ORACLE: [(f64, f64); 11] = [
        (0.001, -3.0902323061678135),
        (0.025, -1.9599639845400542),
        (0.2, -0.84162123357291421),
        (0.25, -0.67448975019608174),
        (0.4, -0.25334710313579980),
        (0.5, 0.0),
        (0.6, 0.25334710313579980),
        (0.75, 0.67448975019608174),
        (0.8, 0.84162123357291421),
        (0.975, 1.9599639845400542),
        (0.999, 3.0902323061678135),
    ];

    #[test]
    fn cdf_matches_oracle_to_1e12_absolute() {
        for &(x, want) in &CDF_ORACLE {
            let got = normal_cdf(x);
            assert!(
                (got - want).abs() < 1e-12,
                "Phi({x}): got {got:.17e}, want {want:.17e}"
            );
            // Deep tails should also hold relative accuracy.
            if want < 0.5 && want > 0.0 {
                assert!(((got - want) / want).abs() < 1e-10, "rel err at {x}");
            }
        }
    }

    #[test]
    fn cdf_is_symmetric() {
        for i in 0..600 {
            let x = -6.0 + 0.02 * i as f64;
            let s = normal_cdf(x) + normal_cdf(-x);
            assert!((s - 1.0).abs() < 1e-13, "x = {x}, sum = {s}");
        }
    }

    #[test]
    fn quantile_matches_oracle() {
        for &(p, want) in &QUANTILE_ORACLE {
            let got = normal_quantile(p);
            assert!(
                (got - want).abs() < 1e-9,
                "probit({p}): got {got:.17e}, want {want:.17e}"
            );
        }
        assert!(normal_quantile(0.0f64).is_nan());
        assert!(normal_quantile(1.0f64).is_nan());
    }

    #[test]
    fn quantile_inverts_cdf() {
        for i in 1..100 {
            let p = i as f64 / 100.0;
            let err = (normal_cdf(normal_quantile(p)) - p).abs();
            assert!(err < 1e-12, "p = {p}, err = {err:.3e}");
        }
    }

    #[test]
    fn pdf_integrates_cdf_slope() {
        // Central difference of the cdf approximates the density.
        for &x in &[-2.0f64, -0.5, 0.0, 0.7, 2.3] {
            let h = 1e-6;
            let slope = (normal_cdf(x + h) - normal_cdf(x - h)) / (2.0 * h);
            assert!((slope - normal_pdf(x)).abs() < 1e-9);
        }
    }
}
