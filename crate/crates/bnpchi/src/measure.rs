//! Univariate probability measures: the base/null distributions the tests are
//! centered on, plus empirical data measures and two-component mixtures (the
//! form posterior base measures take).

use std::fmt;
use std::str::FromStr;

use rand::Rng;
use thiserror::Error;

use crate::mc::EmpiricalSample;
use crate::numeric::invert_monotone;
use crate::partition::Partition;
use crate::scalar::Scalar;
use crate::special::{normal_cdf, normal_pdf, normal_quantile, GammaTail};
use crate::variates::gamma_variate;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MeasureError {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("quantile level must lie strictly between 0 and 1, got {0}")]
    QuantileLevel(f64),
    #[error("this measure has no density")]
    NoDensity,
    #[error("empirical measure needs at least one finite value")]
    EmptyEmpirical,
    #[error("unknown measure kind {kind:?}; expected one of normal, exp, cauchy, gamma, uniform")]
    UnknownKind { kind: String },
    #[error("measure spec {kind:?} takes {want} parameter(s), got {got}")]
    WrongArity { kind: String, want: usize, got: usize },
    #[error("cannot parse {token:?} as a number")]
    BadNumber { token: String },
    #[error("measure spec must look like kind:p1,p2,...")]
    MissingColon,
}

/// A univariate probability measure.
///
/// Construct through the validating constructors or parse from a spec string
/// like `normal:0,1`, `exp:0.00136`, `cauchy:0,1`, `gamma:1.7,2550`, or
/// `uniform:0,1`.
#[derive(Debug, Clone, PartialEq)]
pub enum Measure<F> {
    Normal { mean: F, sd: F },
    Exponential { rate: F },
    Cauchy { location: F, scale: F },
    Gamma { shape: F, rate: F },
    Uniform { lo: F, hi: F },
    Empirical(EmpiricalSample<F>),
    Mixture { weight: F, first: Box<Measure<F>>, second: Box<Measure<F>> },
}

impl<F: Scalar> Measure<F> {
    pub fn normal(mean: F, sd: F) -> Result<Self, MeasureError> {
        require(mean.is_finite(), "normal mean must be finite")?;
        require(sd.is_finite() && sd > F::zero(), "normal sd must be positive")?;
        Ok(Self::Normal { mean, sd })
    }

    pub fn exponential(rate: F) -> Result<Self, MeasureError> {
        require(rate.is_finite() && rate > F::zero(), "exponential rate must be positive")?;
        Ok(Self::Exponential { rate })
    }

    pub fn cauchy(location: F, scale: F) -> Result<Self, MeasureError> {
        require(location.is_finite(), "cauchy location must be finite")?;
        require(scale.is_finite() && scale > F::zero(), "cauchy scale must be positive")?;
        Ok(Self::Cauchy { location, scale })
    }

    pub fn gamma(shape: F, rate: F) -> Result<Self, MeasureError> {
        require(shape.is_finite() && shape > F::zero(), "gamma shape must be positive")?;
        require(rate.is_finite() && rate > F::zero(), "gamma rate must be positive")?;
        Ok(Self::Gamma { shape, rate })
    }

    pub fn uniform(lo: F, hi: F) -> Result<Self, MeasureError> {
        require(lo.is_finite() && hi.is_finite() && lo < hi, "uniform needs lo < hi")?;
        Ok(Self::Uniform { lo, hi })
    }

    pub fn empirical(values: Vec<F>) -> Result<Self, MeasureError> {
        EmpiricalSample::new(values)
            .map(Self::Empirical)
            .map_err(|_| MeasureError::EmptyEmpirical)
    }

    pub fn mixture(weight: F, first: Measure<F>, second: Measure<F>) -> Result<Self, MeasureError> {
        require(
            weight.is_finite() && weight >= F::zero() && weight <= F::one(),
            "mixture weight must lie in [0, 1]",
        )?;
        Ok(Self::Mixture { weight, first: Box::new(first), second: Box::new(second) })
    }

    /// Cumulative distribution function.
    pub fn cdf(&self, x: F) -> F {
        match self {
            Self::Normal { mean, sd } => normal_cdf((x - *mean) / *sd),
            Self::Exponential { rate } => {
                if x <= F::zero() {
                    F::zero()
                } else {
                    -(-*rate * x).exp_m1()
                }
            }
            Self::Cauchy { location, scale } => {
                F::of(0.5) + ((x - *location) / *scale).atan() / F::of(std::f64::consts::PI)
            }
            Self::Gamma { shape, rate } => {
                if x <= F::zero() {
                    F::zero()
                } else {
                    GammaTail::new(*shape).p(*rate * x)
                }
            }
            Self::Uniform { lo, hi } => ((x - *lo) / (*hi - *lo)).clamp_to(F::zero(), F::one()),
            Self::Empirical(sample) => sample.probability_le(x),
            Self::Mixture { weight, first, second } => {
                *weight * first.cdf(x) + (F::one() - *weight) * second.cdf(x)
            }
        }
    }

    /// Density, where one exists. Empirical measures have none.
    pub fn pdf(&self, x: F) -> Result<F, MeasureError> {
        Ok(match self {
            Self::Normal { mean, sd } => normal_pdf((x - *mean) / *sd) / *sd,
            Self::Exponential { rate } => {
                if x < F::zero() {
                    F::zero()
                } else {
                    *rate * (-*rate * x).exp()
                }
            }
            Self::Cauchy { location, scale } => {
                let z = (x - *location) / *scale;
                ((F::of(std::f64::consts::PI) * *scale) * (F::one() + z * z)).recip()
            }
            Self::Gamma { .. } => self.ln_pdf(x)?.exp(),
            Self::Uniform { lo, hi } => {
                if x >= *lo && x <= *hi {
                    (*hi - *lo).recip()
                } else {
                    F::zero()
                }
            }
            Self::Empirical(_) => return Err(MeasureError::NoDensity),
            Self::Mixture { weight, first, second } => {
                *weight * first.pdf(x)? + (F::one() - *weight) * second.pdf(x)?
            }
        })
    }

    /// Log density; negative infinity outside the support.
    pub fn ln_pdf(&self, x: F) -> Result<F, MeasureError> {
        Ok(match self {
            Self::Normal { mean, sd } => {
                let z = (x - *mean) / *sd;
                -F::of(0.5) * z * z - sd.ln() - F::of(0.918_938_533_204_672_7)
            }
            Self::Exponential { rate } => {
                if x < F::zero() {
                    F::neg_infinity()
                } else {
                    rate.ln() - *rate * x
                }
            }
            Self::Gamma { shape, rate } => {
                if x <= F::zero() {
                    // Limit at zero depends on the shape; keep the measure-zero
                    // boundary simple and out of the support.
                    F::neg_infinity()
                } else {
                    *shape * rate.ln() + (*shape - F::one()) * x.ln()
                        - *rate * x
                        - crate::special::ln_gamma(*shape)
                }
            }
            _ => self.pdf(x)?.ln(),
        })
    }

    /// Quantile (inverse cdf) for `p` strictly inside (0, 1).
    pub fn quantile(&self, p: F) -> Result<F, MeasureError> {
        if !(p > F::zero() && p < F::one()) {
            return Err(MeasureError::QuantileLevel(p.to_f64_lossy()));
        }
        Ok(match self {
            Self::Normal { mean, sd } => *mean + *sd * normal_quantile(p),
            Self::Exponential { rate } => -(-p).ln_1p() / *rate,
            Self::Cauchy { location, scale } => {
                *location + *scale * (F::of(std::f64::consts::PI) * (p - F::of(0.5))).tan()
            }
            Self::Gamma { shape, rate } => {
                let mut hi = (*shape + F::of(10.0) * shape.sqrt() + F::of(10.0)) / *rate;
                while self.cdf(hi) < p {
                    hi *= F::of(2.0);
                }
                invert_monotone(|x| self.cdf(x), F::zero(), hi, p, F::of(1e-12), 300)
                    .map_err(|e| MeasureError::InvalidParameter(e.to_string()))?
            }
            Self::Uniform { lo, hi } => *lo + (*hi - *lo) * p,
            Self::Empirical(sample) => {
                let n = sample.len();
                let rank = (p.to_f64_lossy() * n as f64).ceil() as usize;
                sample.sorted()[rank.clamp(1, n) - 1]
            }
            Self::Mixture { first, second, .. } => {
                let q1 = first.quantile(p)?;
                let q2 = second.quantile(p)?;
                let (lo, hi) = if q1 < q2 { (q1, q2) } else { (q2, q1) };
                if lo == hi {
                    lo
                } else {
                    invert_monotone(|x| self.cdf(x), lo, hi, p, F::of(1e-12), 300)
                        .map_err(|e| MeasureError::InvalidParameter(e.to_string()))?
                }
            }
        })
    }

    /// Draws one variate.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> F {
        match self {
            Self::Normal { mean, sd } => *mean + *sd * F::std_normal(rng),
            Self::Exponential { rate } => F::std_exp(rng) / *rate,
            Self::Cauchy { location, scale } => {
                let u = F::unit01(rng);
                *location + *scale * (F::of(std::f64::consts::PI) * (u - F::of(0.5))).tan()
            }
            Self::Gamma { shape, rate } => gamma_variate(*shape, rng) / *rate,
            Self::Uniform { lo, hi } => *lo + (*hi - *lo) * F::unit01(rng),
            Self::Empirical(sample) => {
                let n = sample.len();
                let u = F::unit01(rng);
                let rank = (u.to_f64_lossy() * n as f64).ceil() as usize;
                sample.sorted()[rank.clamp(1, n) - 1]
            }
            Self::Mixture { weight, first, second } => {
                if F::unit01(rng) <= *weight {
                    first.sample(rng)
                } else {
                    second.sample(rng)
                }
            }
        }
    }

    /// Mean, where defined (Cauchy has none).
    pub fn mean(&self) -> Option<F> {
        match self {
            Self::Normal { mean, .. } => Some(*mean),
            Self::Exponential { rate } => Some(rate.recip()),
            Self::Cauchy { .. } => None,
            Self::Gamma { shape, rate } => Some(*shape / *rate),
            Self::Uniform { lo, hi } => Some((*lo + *hi) / F::of(2.0)),
            Self::Empirical(sample) => Some(sample.mean()),
            Self::Mixture { weight, first, second } => {
                let m1 = first.mean()?;
                let m2 = second.mean()?;
                Some(*weight * m1 + (F::one() - *weight) * m2)
            }
        }
    }

    /// Probability of each cell of `partition`, in cell order.
    ///
    /// The last cell is computed as a complement so the vector sums to one up
    /// to a few ulps.
    pub fn probabilities_on(&self, partition: &Partition<F>) -> Vec<F> {
        let edges = partition.edges();
        let mut out = Vec::with_capacity(partition.bin_count());
        let mut prev = F::zero();
        for &e in edges {
            let c = self.cdf(e);
            out.push((c - prev).max(F::zero()));
            prev = c;
        }
        out.push((F::one() - prev).max(F::zero()));
        out
    }
}

fn require(ok: bool, message: &str) -> Result<(), MeasureError> {
    if ok {
        Ok(())
    } else {
        Err(MeasureError::InvalidParameter(message.to_string()))
    }
}

impl<F: Scalar> FromStr for Measure<F> {
    type Err = MeasureError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let (kind, rest) = s.split_once(':').ok_or(MeasureError::MissingColon)?;
        let kind = kind.trim();
        let params: Vec<F> = parse_params(kind, rest)?;
        let arity = |want: usize| -> Result<(), MeasureError> {
            if params.len() == want {
                Ok(())
            } else {
                Err(MeasureError::WrongArity {
                    kind: kind.to_string(),
                    want,
                    got: params.len(),
                })
            }
        };
        match kind {
            "normal" => {
                arity(2)?;
                Measure::normal(params[0], params[1])
            }
            "exp" => {
                arity(1)?;
                Measure::exponential(params[0])
            }
            "cauchy" => {
                arity(2)?;
                Measure::cauchy(params[0], params[1])
            }
            "gamma" => {
                arity(2)?;
                Measure::gamma(params[0], params[1])
            }
            "uniform" => {
                arity(2)?;
                Measure::uniform(params[0], params[1])
            }
            other => Err(MeasureError::UnknownKind { kind: other.to_string() }),
        }
    }
}

pub(crate) fn parse_params<F: Scalar>(kind: &str, rest: &str) -> Result<Vec<F>, MeasureError> {
    if rest.trim().is_empty() {
        return Err(MeasureError::WrongArity { kind: kind.to_string(), want: 1, got: 0 });
    }
    rest.split(',')
        .map(|tok| {
            let tok = tok.trim();
            tok.parse::<f64>()
                .map(F::of)
                .map_err(|_| MeasureError::BadNumber { token: tok.to_string() })
        })
        .collect()
}

impl<F: Scalar> fmt::Display for Measure<F> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Normal { mean, sd } => write!(f, "normal:{mean},{sd}"),
            Self::Exponential { rate } => write!(f, "exp:{rate}"),
            Self::Cauchy { location, scale } => write!(f, "cauchy:{location},{scale}"),
            Self::Gamma { shape, rate } => write!(f, "gamma:{shape},{rate}"),
            Self::Uniform { lo, hi } => write!(f, "uniform:{lo},{hi}"),
            Self::Empirical(s) => write!(f, "empirical[{} points]", s.len()),
            Self::Mixture { weight, first, second } => {
                write!(f, "mix({weight}; {first}; {second})")
            }
        }
    }
}
