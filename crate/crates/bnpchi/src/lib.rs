//! Bayesian nonparametric chi-squared testing via Dirichlet process
//! simulation.
//!
//! The library centers on one object: a random probability measure P drawn
//! from a Dirichlet process with mass `alpha` and base measure H. Binning a
//! realization over a partition of the line (or a grid in the plane) gives
//! a random probability vector whose quadratic distance from a reference
//! distribution plays the role of a chi-squared statistic:
//!
//! ```text
//! D = alpha * sum_i (P(A_i) - F0(A_i))^2 / F0(A_i)
//! ```
//!
//! Conditioning on data updates the process in closed form (mass
//! `alpha + m`, base mixed with the empirical measure), so the posterior
//! law of D is simulable by drawing fresh realizations. The tests here
//! estimate Pr(D <= c) under the posterior and reject when that probability
//! falls strictly below a prior belief level q; `alpha` is either supplied
//! or calibrated so the prior probability of the event matches q.
//!
//! What the crate provides:
//!
//! - [`dp`]: realization samplers (finite-dimensional and decreasing-weight
//!   representations), conjugate posterior updates, and the exact Dirichlet
//!   law of binned cell probabilities.
//! - [`chisq`]: the distance statistic, mass calibration by bisection, the
//!   simple goodness-of-fit test, and the composite test with parameter
//!   posterior sampling.
//! - [`independence`]: the two-way variant against the realization's own
//!   product measure.
//! - [`kl`]: exact moments of the Kullback-Leibler divergence between a
//!   realization and a fixed distribution, in both directions, on a
//!   partition interleaving the realization's atoms.
//! - [`measure`], [`bivariate`], [`partition`]: base distributions, their
//!   two-dimensional counterparts, and binning.
//! - [`mc`]: seeded, splittable random streams and a replicate runner whose
//!   output is independent of thread count.
//! - [`special`]: the gamma-function family and the distribution functions
//!   the rest of the crate needs.
//!
//! Everything numeric is generic over the scalar type through [`Scalar`]
//! (implemented for `f32` and `f64`); the `*64` aliases at the crate root
//! pick the common case.
//!
//! # Example
//!
//! ```
//! use bnpchi::{gof_simple, Measure64, Partition64, RngStream, TestSettings64};
//!
//! let null: Measure64 = "normal:0,1".parse()?;
//! let bins = Partition64::new(vec![-2.0, -1.0, 0.0, 1.0, 2.0, 3.0])?;
//! let data = vec![0.3, -0.7, 1.4, 0.2, -1.1, 0.5, 2.2, -0.4];
//! let mut settings = TestSettings64::fixed(3.0, 0.5, 10.0);
//! settings.n_atoms = 200;
//! settings.replicates = 200;
//! let report = gof_simple(&data, &null, &bins, &settings, &RngStream::root(7))?;
//! println!("Pr(D <= c) = {} -> {}", report.p_hat, report.decision);
//! # Ok::<(), bnpchi::Error>(())
//! ```

pub mod bivariate;
pub mod chisq;
pub mod dp;
pub mod independence;
pub mod kl;
pub mod mc;
pub mod measure;
pub mod numeric;
pub mod partition;
pub mod scalar;
pub mod special;
pub mod variates;

pub use bivariate::{BivariateMeasure, BivariateNormal};
pub use chisq::{
    gof_composite, gof_simple, AlphaChoice, Calibration, CalibrationSpec, ChisqError,
    CompositeReport, CompositeSettings, Decision, Family, GofReport, TestSettings, ThetaSampler,
};
pub use dp::{
    sample_bin_probabilities, sample_dp_decreasing, sample_dp_finite, DiscreteRandomMeasure,
    DpParams,
};
pub use independence::{independence_test, GridProbabilities, IndepReport};
pub use kl::{forward_kl_moments, reverse_kl_moments, InterleavedPartition, KlMoments};
pub use mc::{EmpiricalSample, RngStream};
pub use measure::Measure;
pub use partition::{Grid, Partition};
pub use scalar::Scalar;

use thiserror::Error;

/// Any error the crate can produce, for callers that do not care which
/// stage failed.
#[derive(Debug, Error)]
pub enum Error {
    #[error(transparent)]
    Chisq(#[from] chisq::ChisqError),
    #[error(transparent)]
    Independence(#[from] independence::IndepError),
    #[error(transparent)]
    Dp(#[from] dp::DpError),
    #[error(transparent)]
    Kl(#[from] kl::KlError),
    #[error(transparent)]
    Mc(#[from] mc::McError),
    #[error(transparent)]
    Measure(#[from] measure::MeasureError),
    #[error(transparent)]
    Bivariate(#[from] bivariate::BivariateError),
    #[error(transparent)]
    Partition(#[from] partition::PartitionError),
    #[error(transparent)]
    Numeric(#[from] numeric::NumericError),
}

/// `f64` instances of the main types.
pub type Measure64 = Measure<f64>;
pub type BivariateMeasure64 = BivariateMeasure<f64>;
pub type Partition64 = Partition<f64>;
pub type Grid64 = Grid<f64>;
pub type DpParams64 = DpParams<f64, Measure<f64>>;
pub type TestSettings64 = TestSettings<f64>;
pub type CompositeSettings64 = CompositeSettings<f64>;
pub type CalibrationSpec64 = CalibrationSpec<f64>;
pub type GofReport64 = GofReport<f64>;
pub type IndepReport64 = IndepReport<f64>;
pub type EmpiricalSample64 = EmpiricalSample<f64>;
pub type KlMoments64 = KlMoments<f64>;

/// `f32` instances for callers trading precision for footprint.
pub type Measure32 = Measure<f32>;
pub type Partition32 = Partition<f32>;
pub type TestSettings32 = TestSettings<f32>;
pub type GofReport32 = GofReport<f32>;
