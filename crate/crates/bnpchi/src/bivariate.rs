//! Bivariate measures for the independence test: a correlated normal base,
//! empirical paired data, and posterior mixtures of the two.
//!
//! The bivariate normal cdf is evaluated by Gauss-Legendre panels over the
//! representation Phi2(z1, z2; rho) = int_{-inf}^{z1} phi(t) Phi((z2 - rho t)
//! / sqrt(1 - rho^2)) dt, which is smooth and one-dimensional.

use std::str::FromStr;

use rand::Rng;
use thiserror::Error;

use crate::measure::{parse_params, MeasureError};
use crate::numeric::gauss_legendre;
use crate::partition::Grid;
use crate::scalar::Scalar;
use crate::special::{normal_cdf, normal_pdf};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum BivariateError {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("covariance matrix must be symmetric positive semidefinite with positive variances")]
    NotPositiveDefinite,
    #[error("empirical bivariate measure needs at least one pair")]
    EmptyEmpirical,
    #[error("pair at index {index} is not finite")]
    NonFinitePair { index: usize },
    #[error(transparent)]
    Spec(#[from] MeasureError),
}

/// Correlated normal distribution on the plane.
#[derive(Debug, Clone, PartialEq)]
pub struct BivariateNormal<F> {
    mean: [F; 2],
    sd: [F; 2],
    rho: F,
    /// Lower-triangular Cholesky factor of the covariance.
    chol: [[F; 2]; 2],
    gl_nodes: Vec<F>,
    gl_weights: Vec<F>,
}

impl<F: Scalar> BivariateNormal<F> {
    /// Builds from means and covariance entries (s11, s12, s22).
    ///
    /// Degenerate correlation |rho| = 1 is accepted; the cdf then uses the
    /// comonotone/antimonotone closed forms.
    pub fn new(mean: [F; 2], s11: F, s12: F, s22: F) -> Result<Self, BivariateError> {
        if !(mean[0].is_finite() && mean[1].is_finite()) {
            return Err(BivariateError::InvalidParameter("means must be finite".into()));
        }
        if !(s11.is_finite() && s12.is_finite() && s22.is_finite())
            || s11 <= F::zero()
            || s22 <= F::zero()
        {
            return Err(BivariateError::NotPositiveDefinite);
        }
        let sd = [s11.sqrt(), s22.sqrt()];
        let rho = s12 / (sd[0] * sd[1]);
        if rho.abs() > F::one() + F::eps() * F::of(16.0) {
            return Err(BivariateError::NotPositiveDefinite);
        }
        let rho = rho.clamp_to(-F::one(), F::one());
        let resid = (s22 - s12 * s12 / s11).max(F::zero());
        let chol = [[sd[0], F::zero()], [s12 / sd[0], resid.sqrt()]];
        let (gl_nodes, gl_weights) = gauss_legendre(32);
        Ok(Self { mean, sd, rho, chol, gl_nodes, gl_weights })
    }

    pub fn standard() -> Self {
        Self::new([F::zero(), F::zero()], F::one(), F::zero(), F::one())
            .expect("identity covariance is valid")
    }

    pub fn mean(&self) -> [F; 2] {
        self.mean
    }

    pub fn correlation(&self) -> F {
        self.rho
    }

    /// Joint cdf P(X <= x, Y <= y).
    pub fn cdf(&self, x: F, y: F) -> F {
        let z1 = (x - self.mean[0]) / self.sd[0];
        let z2 = (y - self.mean[1]) / self.sd[1];
        self.std_cdf(z1, z2)
    }

    fn std_cdf(&self, z1: F, z2: F) -> F {
        let rho = self.rho;
        if rho == F::zero() {
            return normal_cdf(z1) * normal_cdf(z2);
        }
        if rho >= F::one() {
            return normal_cdf(z1.min(z2));
        }
        if rho <= -F::one() {
            return (normal_cdf(z1) + normal_cdf(z2) - F::one()).max(F::zero());
        }
        // Integrate the smaller-variance direction for symmetry of accuracy.
        let (a, b) = if z1 <= z2 { (z1, z2) } else { (z2, z1) };
        let s = (F::one() - rho * rho).sqrt();
        let lo = F::of(-9.5).min(a - F::of(1.0));
        if a <= F::of(-13.0) {
            return F::zero();
        }
        let width = a - lo;
        let panels = (width.to_f64_lossy() / 0.5).ceil().max(1.0) as usize;
        let step = width / F::of(panels as f64);
        let half = F::of(0.5);
        let mut total = F::zero();
        for k in 0..panels {
            let left = lo + step * F::of(k as f64);
            let mid = left + half * step;
            let scale = half * step;
            let mut panel = F::zero();
            for (node, weight) in self.gl_nodes.iter().zip(&self.gl_weights) {
                let t = mid + scale * *node;
                panel += *weight * normal_pdf(t) * normal_cdf((b - rho * t) / s);
            }
            total += panel * scale;
        }
        total.clamp_to(F::zero(), F::one())
    }

    /// Probability of the rectangle (x_lo, x_hi] x (y_lo, y_hi] where the
    /// bounds may be infinite.
    fn rectangle(&self, x_lo: F, x_hi: F, y_lo: F, y_hi: F) -> F {
        let term = |x: F, y: F| -> F {
            if x == F::neg_infinity() || y == F::neg_infinity() {
                F::zero()
            } else if x == F::infinity() && y == F::infinity() {
                F::one()
            } else if x == F::infinity() {
                normal_cdf((y - self.mean[1]) / self.sd[1])
            } else if y == F::infinity() {
                normal_cdf((x - self.mean[0]) / self.sd[0])
            } else {
                self.cdf(x, y)
            }
        };
        (term(x_hi, y_hi) - term(x_lo, y_hi) - term(x_hi, y_lo) + term(x_lo, y_lo))
            .max(F::zero())
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> [F; 2] {
        let z1 = F::std_normal(rng);
        let z2 = F::std_normal(rng);
        [
            self.mean[0] + self.chol[0][0] * z1,
            self.mean[1] + self.chol[1][0] * z1 + self.chol[1][1] * z2,
        ]
    }
}

/// A bivariate probability measure: normal base, empirical pairs, or a
/// mixture (the posterior base form).
#[derive(Debug, Clone, PartialEq)]
pub enum BivariateMeasure<F> {
    Normal(BivariateNormal<F>),
    Empirical(Vec<[F; 2]>),
    Mixture { weight: F, first: Box<BivariateMeasure<F>>, second: Box<BivariateMeasure<F>> },
}

impl<F: Scalar> BivariateMeasure<F> {
    pub fn empirical(pairs: Vec<[F; 2]>) -> Result<Self, BivariateError> {
        if pairs.is_empty() {
            return Err(BivariateError::EmptyEmpirical);
        }
        if let Some(index) = pairs
            .iter()
            .position(|p| !(p[0].is_finite() && p[1].is_finite()))
        {
            return Err(BivariateError::NonFinitePair { index });
        }
        Ok(Self::Empirical(pairs))
    }

    pub fn mixture(
        weight: F,
        first: BivariateMeasure<F>,
        second: BivariateMeasure<F>,
    ) -> Result<Self, BivariateError> {
        if !(weight.is_finite() && weight >= F::zero() && weight <= F::one()) {
            return Err(BivariateError::InvalidParameter("mixture weight must lie in [0, 1]".into()));
        }
        Ok(Self::Mixture { weight, first: Box::new(first), second: Box::new(second) })
    }

    pub fn cdf(&self, x: F, y: F) -> F {
        match self {
            Self::Normal(n) => n.cdf(x, y),
            Self::Empirical(pairs) => {
                let count = pairs.iter().filter(|p| p[0] <= x && p[1] <= y).count();
                F::of(count as f64) / F::of(pairs.len() as f64)
            }
            Self::Mixture { weight, first, second } => {
                *weight * first.cdf(x, y) + (F::one() - *weight) * second.cdf(x, y)
            }
        }
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> [F; 2] {
        match self {
            Self::Normal(n) => n.sample(rng),
            Self::Empirical(pairs) => {
                let u = F::unit01(rng);
                let rank = (u.to_f64_lossy() * pairs.len() as f64).ceil() as usize;
                pairs[rank.clamp(1, pairs.len()) - 1]
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

    /// Probability of each grid cell, row-major, summing to one up to
    /// quadrature error.
    pub fn cell_probabilities(&self, grid: &Grid<F>) -> Vec<F> {
        match self {
            Self::Normal(n) => {
                let xe = grid.x().edges();
                let ye = grid.y().edges();
                let bound = |edges: &[F], i: usize| -> (F, F) {
                    let lo = if i == 0 { F::neg_infinity() } else { edges[i - 1] };
                    let hi = if i == edges.len() { F::infinity() } else { edges[i] };
                    (lo, hi)
                };
                let mut out = Vec::with_capacity(grid.cell_count());
                for i in 0..grid.rows() {
                    let (xlo, xhi) = bound(xe, i);
                    for j in 0..grid.cols() {
                        let (ylo, yhi) = bound(ye, j);
                        out.push(n.rectangle(xlo, xhi, ylo, yhi));
                    }
                }
                out
            }
            Self::Empirical(pairs) => grid.frequencies(pairs),
            Self::Mixture { weight, first, second } => {
                let a = first.cell_probabilities(grid);
                let b = second.cell_probabilities(grid);
                a.iter()
                    .zip(&b)
                    .map(|(&pa, &pb)| *weight * pa + (F::one() - *weight) * pb)
                    .collect()
            }
        }
    }
}

impl<F: Scalar> FromStr for BivariateMeasure<F> {
    type Err = BivariateError;

    /// Parses `bvnormal:mu1,mu2,s11,s12,s22`.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let (kind, rest) = s.split_once(':').ok_or(MeasureError::MissingColon)?;
        let kind = kind.trim();
        if kind != "bvnormal" {
            return Err(MeasureError::UnknownKind { kind: kind.to_string() }.into());
        }
        let p: Vec<F> = parse_params(kind, rest)?;
        if p.len() != 5 {
            return Err(MeasureError::WrongArity { kind: kind.into(), want: 5, got: p.len() }.into());
        }
        Ok(Self::Normal(BivariateNormal::new([p[0], p[1]], p[2], p[3], p[4])?))
    }
}
