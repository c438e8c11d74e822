//! Floating-point abstraction used by every numeric routine in this crate.
//!
//! All algorithms are written once against [`Scalar`] and instantiated for
//! `f64` (the default throughout the CLI) and `f32`. Constants are written as
//! `f64` literals and converted through [`Scalar::of`], so an `f32`
//! instantiation degrades gracefully to its own precision.

use std::fmt;
use std::iter::{Product, Sum};

use num_traits::{Float, FromPrimitive, NumAssign, ToPrimitive};
use rand::Rng;
use rand_distr::{Exp1, OpenClosed01, StandardNormal};

/// Field of computation: `f32` or `f64`.
///
/// Beyond the arithmetic supplied by `num_traits::Float`, a `Scalar` knows how
/// to draw its own primitive random variates so samplers stay generic without
/// threading distribution objects everywhere.
pub trait Scalar:
    Float
    + FromPrimitive
    + ToPrimitive
    + NumAssign
    + Sum<Self>
    + Product<Self>
    + fmt::Debug
    + fmt::Display
    + fmt::LowerExp
    + Send
    + Sync
    + 'static
{
    /// Converts an `f64` constant into this scalar type.
    fn of(x: f64) -> Self;

    /// Converts into `f64`, saturating at the representable range.
    fn to_f64_lossy(self) -> f64;

    /// Draws a uniform variate on the half-open interval `(0, 1]`.
    ///
    /// The left end is open so `ln(u)` is always finite.
    fn unit01<R: Rng + ?Sized>(rng: &mut R) -> Self;

    /// Draws a standard normal variate.
    fn std_normal<R: Rng + ?Sized>(rng: &mut R) -> Self;

    /// Draws a standard (rate one) exponential variate.
    fn std_exp<R: Rng + ?Sized>(rng: &mut R) -> Self;

    /// Machine epsilon for this type.
    fn eps() -> Self {
        Self::epsilon()
    }

    /// `x.max(lo).min(hi)` with the argument order made explicit.
    fn clamp_to(self, lo: Self, hi: Self) -> Self {
        if self < lo {
            lo
        } else if self > hi {
            hi
        } else {
            self
        }
    }
}

macro_rules! impl_scalar {
    ($t:ty) => {
        impl Scalar for $t {
            #[inline]
            fn of(x: f64) -> Self {
                x as $t
            }

            #[inline]
            fn to_f64_lossy(self) -> f64 {
                self as f64
            }

            #[inline]
            fn unit01<R: Rng + ?Sized>(rng: &mut R) -> Self {
                rng.sample::<$t, _>(OpenClosed01)
            }

            #[inline]
            fn std_normal<R: Rng + ?Sized>(rng: &mut R) -> Self {
                rng.sample::<$t, _>(StandardNormal)
            }

            #[inline]
            fn std_exp<R: Rng + ?Sized>(rng: &mut R) -> Self {
                rng.sample::<$t, _>(Exp1)
            }
        }
    };
}

impl_scalar!(f32);
impl_scalar!(f64);
