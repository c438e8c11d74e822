//! Hand-rolled special functions with accuracy pinned by unit oracles.
//!
//! Everything the samplers and distribution functions need lives here: log
//! gamma, digamma, trigamma, the regularized incomplete gamma pair, the
//! regularized incomplete beta, and the standard normal cdf/quantile built on
//! top of the gamma tail functions.

mod beta;
mod gamma;
mod normal;

pub use beta::reg_inc_beta;
pub use gamma::{
    chi_squared_cdf, chi_squared_quantile, digamma, ln_gamma, trigamma, GammaTail,
};
pub use normal::{normal_cdf, normal_pdf, normal_quantile};
