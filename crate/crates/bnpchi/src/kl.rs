//! Kullback-Leibler divergences between a realized discrete random measure
//! and a continuous reference distribution, plus their closed-form moments
//! under symmetric Dirichlet weights.
//!
//! The divergence of an atomic measure from a continuous one is defined
//! through an interleaved partition: cut points placed strictly between
//! consecutive sorted atoms turn the reference distribution into histogram
//! density values q_i = (F(x_{i+1}) - F(x_i)) / (x_{i+1} - x_i), one per
//! atom. With weights p_i aligned to the sorted atoms,
//!
//! * forward:  D(P || F) = sum_i p_i ln p_i - sum_i p_i ln q_i
//! * reverse:  D(F || P) = sum_i q_i ln q_i - sum_i q_i ln p_i
//!
//! The q_i are density values, not probabilities, so the forward value can
//! be negative; it is a cross-entropy style functional and is computed
//! literally.
//!
//! For weights from a symmetric Dirichlet(alpha/n, ..., alpha/n) and a fixed
//! q vector, both divergences have closed-form means and variances in terms
//! of digamma and trigamma values; the variance of the forward divergence is
//! assembled from six exchangeable moment ingredients, each exposed for
//! testing. The reverse-direction closed forms treat q as a probability
//! vector and are exact only when q sums to one.

use thiserror::Error;

use crate::dp::DiscreteRandomMeasure;
use crate::measure::Measure;
use crate::numeric::neumaier_sum;
use crate::scalar::Scalar;
use crate::special::{digamma, trigamma};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum KlError {
    #[error("at least one atom is required")]
    NoAtoms,
    #[error("atom at index {index} is not finite")]
    NonFiniteAtom { index: usize },
    #[error("atoms are too closely spaced for strictly interleaved cut points")]
    DegenerateSpacing,
    #[error("expected {expected} weights for this partition, got {got}")]
    LengthMismatch { expected: usize, got: usize },
    #[error("infinite divergence: zero density against positive weight (or vice versa) at sorted index {index}")]
    InfiniteDivergence { index: usize },
    #[error("reference value at index {index} must be positive")]
    NonPositiveReference { index: usize },
    #[error("reference value at index {index} must be finite and nonnegative")]
    BadReference { index: usize },
    #[error("concentration must be finite and positive, got {0}")]
    InvalidMass(f64),
}

/// Cut points x_1 < ... < x_{n+1} strictly interleaving the sorted atoms:
/// x_i < atom_(i) < x_{i+1}.
///
/// Interior cuts are midpoints of consecutive atoms; the end cuts extend
/// outward by half the adjacent gap (a single atom gets cuts at distance
/// one half on each side). Tied atoms are separated by two representable
/// steps before the cuts are placed, so the midpoints stay strictly between
/// them; `tie_bumps` reports how many atoms were moved.
#[derive(Debug, Clone, PartialEq)]
pub struct InterleavedPartition<F> {
    cuts: Vec<F>,
    order: Vec<usize>,
    tie_bumps: usize,
}

impl<F: Scalar> InterleavedPartition<F> {
    pub fn new(atoms: &[F]) -> Result<Self, KlError> {
        let n = atoms.len();
        if n == 0 {
            return Err(KlError::NoAtoms);
        }
        if let Some(index) = atoms.iter().position(|a| !a.is_finite()) {
            return Err(KlError::NonFiniteAtom { index });
        }
        let mut order: Vec<usize> = (0..n).collect();
        order.sort_by(|&a, &b| atoms[a].partial_cmp(&atoms[b]).expect("atoms are finite"));
        let mut sorted: Vec<F> = order.iter().map(|&i| atoms[i]).collect();
        let mut tie_bumps = 0;
        for i in 1..n {
            if sorted[i] <= sorted[i - 1] {
                let prev = sorted[i - 1];
                let mut step = (prev.abs() * F::eps()).max(F::min_positive_value());
                let mut v = prev + step + step;
                while v <= prev {
                    step = step + step;
                    v = prev + step + step;
                }
                sorted[i] = v;
                tie_bumps += 1;
            }
        }
        let half = F::of(0.5);
        let mut cuts = Vec::with_capacity(n + 1);
        if n == 1 {
            cuts.push(sorted[0] - half);
            cuts.push(sorted[0] + half);
        } else {
            cuts.push(sorted[0] - (sorted[1] - sorted[0]) * half);
            for i in 1..n {
                cuts.push((sorted[i - 1] + sorted[i]) * half);
            }
            cuts.push(sorted[n - 1] + (sorted[n - 1] - sorted[n - 2]) * half);
        }
        for i in 0..n {
            if !(cuts[i].is_finite() && cuts[i + 1].is_finite()) {
                return Err(KlError::DegenerateSpacing);
            }
            if !(cuts[i] < sorted[i] && sorted[i] < cuts[i + 1]) {
                return Err(KlError::DegenerateSpacing);
            }
        }
        Ok(Self { cuts, order, tie_bumps })
    }

    /// Number of atoms (cells).
    pub fn len(&self) -> usize {
        self.order.len()
    }

    pub fn is_empty(&self) -> bool {
        self.order.is_empty()
    }

    pub fn cuts(&self) -> &[F] {
        &self.cuts
    }

    /// `order()[k]` is the position in the original atom slice of the k-th
    /// sorted atom; weights are aligned through this permutation.
    pub fn order(&self) -> &[usize] {
        &self.order
    }

    pub fn tie_bumps(&self) -> usize {
        self.tie_bumps
    }

    /// Histogram density of `f` over each cell: (F(x_{i+1}) - F(x_i)) / dx_i.
    pub fn densities(&self, f: &Measure<F>) -> Vec<F> {
        let mut out = Vec::with_capacity(self.len());
        let mut lo = f.cdf(self.cuts[0]);
        for i in 0..self.len() {
            let hi = f.cdf(self.cuts[i + 1]);
            let mass = (hi - lo).max(F::zero());
            out.push(mass / (self.cuts[i + 1] - self.cuts[i]));
            lo = hi;
        }
        out
    }

    /// Probability `f` assigns to each cell; the total is at most one.
    pub fn cell_masses(&self, f: &Measure<F>) -> Vec<F> {
        let mut out = Vec::with_capacity(self.len());
        let mut lo = f.cdf(self.cuts[0]);
        for i in 0..self.len() {
            let hi = f.cdf(self.cuts[i + 1]);
            out.push((hi - lo).max(F::zero()));
            lo = hi;
        }
        out
    }

    fn check_len(&self, got: usize) -> Result<(), KlError> {
        if got != self.len() {
            return Err(KlError::LengthMismatch { expected: self.len(), got });
        }
        Ok(())
    }
}

/// Forward divergence sum from weights already aligned to sorted atoms and
/// the matching density values: sum p ln p - sum p ln q. Zero weights
/// contribute nothing; a positive weight against a zero density is an
/// infinite divergence.
pub fn kl_forward_parts<F: Scalar>(p_sorted: &[F], q: &[F]) -> Result<F, KlError> {
    if p_sorted.len() != q.len() {
        return Err(KlError::LengthMismatch { expected: q.len(), got: p_sorted.len() });
    }
    let mut terms = Vec::with_capacity(p_sorted.len());
    for (i, (&p, &qi)) in p_sorted.iter().zip(q).enumerate() {
        if p <= F::zero() {
            continue;
        }
        if qi <= F::zero() {
            return Err(KlError::InfiniteDivergence { index: i });
        }
        terms.push(p * (p.ln() - qi.ln()));
    }
    Ok(neumaier_sum(terms.into_iter()))
}

/// Reverse divergence sum from log-weights aligned to sorted atoms:
/// sum q ln q - sum q ln p. Cells with zero density contribute nothing; a
/// positive density against ln p = -inf is an infinite divergence. Taking
/// log-weights keeps the value finite when a weight underflows to zero but
/// its logarithm is known analytically.
pub fn kl_reverse_parts<F: Scalar>(ln_p_sorted: &[F], q: &[F]) -> Result<F, KlError> {
    if ln_p_sorted.len() != q.len() {
        return Err(KlError::LengthMismatch { expected: q.len(), got: ln_p_sorted.len() });
    }
    let mut terms = Vec::with_capacity(q.len());
    for (i, (&lp, &qi)) in ln_p_sorted.iter().zip(q).enumerate() {
        if qi < F::zero() || !qi.is_finite() {
            return Err(KlError::BadReference { index: i });
        }
        if qi == F::zero() {
            continue;
        }
        if lp == F::neg_infinity() {
            return Err(KlError::InfiniteDivergence { index: i });
        }
        terms.push(qi * (qi.ln() - lp));
    }
    Ok(neumaier_sum(terms.into_iter()))
}

/// D(P || F) for a realized measure against a continuous reference, through
/// the interleaved partition built from the realization's atoms.
pub fn kl_forward<F: Scalar>(
    realization: &DiscreteRandomMeasure<F, F>,
    f: &Measure<F>,
    ip: &InterleavedPartition<F>,
) -> Result<F, KlError> {
    ip.check_len(realization.len())?;
    let q = ip.densities(f);
    let w = realization.weights();
    let p_sorted: Vec<F> = ip.order().iter().map(|&i| w[i]).collect();
    kl_forward_parts(&p_sorted, &q)
}

/// D(F || P) for a realized measure against a continuous reference.
pub fn kl_reverse<F: Scalar>(
    realization: &DiscreteRandomMeasure<F, F>,
    f: &Measure<F>,
    ip: &InterleavedPartition<F>,
) -> Result<F, KlError> {
    ip.check_len(realization.len())?;
    let w = realization.weights();
    let ln_p: Vec<F> = ip.order().iter().map(|&i| w[i].ln()).collect();
    kl_reverse_parts(&ln_p, &ip.densities(f))
}

/// D(F || P) from analytic log-weights (in original draw order) aligned
/// through the partition's permutation.
pub fn kl_reverse_from_ln<F: Scalar>(
    ln_weights: &[F],
    f: &Measure<F>,
    ip: &InterleavedPartition<F>,
) -> Result<F, KlError> {
    ip.check_len(ln_weights.len())?;
    let ln_p: Vec<F> = ip.order().iter().map(|&i| ln_weights[i]).collect();
    kl_reverse_parts(&ln_p, &ip.densities(f))
}

/// Discrete Kullback-Leibler divergence sum p_i ln(p_i / q_i) between two
/// aligned nonnegative vectors, with 0 ln 0 = 0.
pub fn discrete_kl<F: Scalar>(p: &[F], q: &[F]) -> Result<F, KlError> {
    if p.len() != q.len() {
        return Err(KlError::LengthMismatch { expected: q.len(), got: p.len() });
    }
    let mut terms = Vec::with_capacity(p.len());
    for (i, (&pi, &qi)) in p.iter().zip(q).enumerate() {
        if pi <= F::zero() {
            continue;
        }
        if qi <= F::zero() {
            return Err(KlError::InfiniteDivergence { index: i });
        }
        terms.push(pi * (pi / qi).ln());
    }
    Ok(neumaier_sum(terms.into_iter()))
}

fn check_mass<F: Scalar>(alpha: F, n: usize) -> Result<F, KlError> {
    if !(alpha.is_finite() && alpha > F::zero()) {
        return Err(KlError::InvalidMass(alpha.to_f64_lossy()));
    }
    if n == 0 {
        return Err(KlError::NoAtoms);
    }
    Ok(alpha / F::of(n as f64))
}

/// Var(p_i) = (n - 1) / (n^2 (alpha + 1)) for symmetric Dirichlet weights.
pub fn weight_variance<F: Scalar>(alpha: F, n: usize) -> Result<F, KlError> {
    check_mass(alpha, n)?;
    let nf = F::of(n as f64);
    Ok((nf - F::one()) / (nf * nf * (alpha + F::one())))
}

/// Cov(p_i, p_j), i != j: -1 / (n^2 (alpha + 1)).
pub fn weight_covariance<F: Scalar>(alpha: F, n: usize) -> Result<F, KlError> {
    check_mass(alpha, n)?;
    let nf = F::of(n as f64);
    Ok(-(nf * nf * (alpha + F::one())).recip())
}

/// E(p_i ln p_i) = (psi(alpha/n + 1) - psi(alpha + 1)) / n.
pub fn mean_weight_ln_weight<F: Scalar>(alpha: F, n: usize) -> Result<F, KlError> {
    let a = check_mass(alpha, n)?;
    Ok((digamma(a + F::one()) - digamma(alpha + F::one())) / F::of(n as f64))
}

/// Var(p_i ln p_i).
pub fn var_weight_ln_weight<F: Scalar>(alpha: F, n: usize) -> Result<F, KlError> {
    let a = check_mass(alpha, n)?;
    let one = F::one();
    let two = F::of(2.0);
    let nf = F::of(n as f64);
    let mu1 = mean_weight_ln_weight(alpha, n)?;
    let pref = (a + one) / (nf * (alpha + one));
    let dps = digamma(a + two) - digamma(alpha + two);
    let second = pref * (trigamma(a + two) - trigamma(alpha + two) + dps * dps);
    Ok(second - mu1 * mu1)
}

/// Cov(p_i ln p_i, p_i), same coordinate.
pub fn cov_weight_ln_weight_same<F: Scalar>(alpha: F, n: usize) -> Result<F, KlError> {
    let a = check_mass(alpha, n)?;
    let one = F::one();
    let two = F::of(2.0);
    let nf = F::of(n as f64);
    let mu1 = mean_weight_ln_weight(alpha, n)?;
    let pref = (a + one) / (nf * (alpha + one));
    Ok(pref * (digamma(a + two) - digamma(alpha + two)) - mu1 / nf)
}

/// Cov(p_i ln p_i, p_j), i != j.
pub fn cov_weight_ln_weight_cross<F: Scalar>(alpha: F, n: usize) -> Result<F, KlError> {
    let a = check_mass(alpha, n)?;
    let one = F::one();
    let two = F::of(2.0);
    let nf = F::of(n as f64);
    let mu1 = mean_weight_ln_weight(alpha, n)?;
    let cpref = alpha / (nf * nf * (alpha + one));
    Ok(cpref * (digamma(a + one) - digamma(alpha + two)) - mu1 / nf)
}

/// Cov(p_i ln p_i, p_j ln p_j), i != j.
pub fn cov_weight_ln_weight_pair<F: Scalar>(alpha: F, n: usize) -> Result<F, KlError> {
    let a = check_mass(alpha, n)?;
    let one = F::one();
    let two = F::of(2.0);
    let nf = F::of(n as f64);
    let mu1 = mean_weight_ln_weight(alpha, n)?;
    let cpref = alpha / (nf * nf * (alpha + one));
    let d = digamma(a + one) - digamma(alpha + two);
    Ok(cpref * (d * d - trigamma(alpha + two)) - mu1 * mu1)
}

/// Mean and variance of a divergence under random Dirichlet weights with the
/// reference values held fixed.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KlMoments<F> {
    pub mean: F,
    pub variance: F,
}

fn check_positive_q<F: Scalar>(q: &[F]) -> Result<(), KlError> {
    if q.is_empty() {
        return Err(KlError::NoAtoms);
    }
    if let Some(index) = q.iter().position(|&x| !(x.is_finite() && x > F::zero())) {
        return Err(KlError::NonPositiveReference { index });
    }
    Ok(())
}

/// E D(P || F) for fixed reference values q:
/// (psi(alpha/n + 1) - psi(alpha + 1)) - (1/n) sum ln q_i.
pub fn mean_kl_forward<F: Scalar>(alpha: F, n: usize, q: &[F]) -> Result<F, KlError> {
    let a = check_mass(alpha, n)?;
    check_positive_q(q)?;
    if q.len() != n {
        return Err(KlError::LengthMismatch { expected: n, got: q.len() });
    }
    let sum_lq = neumaier_sum(q.iter().map(|&x| x.ln()));
    Ok(digamma(a + F::one()) - digamma(alpha + F::one()) - sum_lq / F::of(n as f64))
}

/// Var D(P || F) for fixed reference values q, assembled from the six
/// exchangeable moment ingredients. The pair sums collapse to O(n) because
/// all (i, j) pairs share the same covariance constants.
pub fn var_kl_forward<F: Scalar>(alpha: F, n: usize, q: &[F]) -> Result<F, KlError> {
    check_mass(alpha, n)?;
    check_positive_q(q)?;
    if q.len() != n {
        return Err(KlError::LengthMismatch { expected: n, got: q.len() });
    }
    let two = F::of(2.0);
    let nf = F::of(n as f64);
    let var_p = weight_variance(alpha, n)?;
    let cov_pp = weight_covariance(alpha, n)?;
    let var_plp = var_weight_ln_weight(alpha, n)?;
    let cov_same = cov_weight_ln_weight_same(alpha, n)?;
    let cov_cross = cov_weight_ln_weight_cross(alpha, n)?;
    let cov_pair = cov_weight_ln_weight_pair(alpha, n)?;

    let lq: Vec<F> = q.iter().map(|&x| x.ln()).collect();
    let sum_lq = neumaier_sum(lq.iter().copied());
    let sum_lq2 = neumaier_sum(lq.iter().map(|&x| x * x));

    // Diagonal: sum_i Var(p_i ln p_i - lq_i p_i).
    let diag = nf * var_plp + sum_lq2 * var_p - two * cov_same * sum_lq;
    // Pairs: 2 sum_{i<j} Cov(.., ..) with sum_{i<j} lq_i lq_j and
    // sum_{i<j} (lq_i + lq_j) reduced to the power sums.
    let pairs_count = nf * (nf - F::one()) / two;
    let sum_lq_prod = (sum_lq * sum_lq - sum_lq2) / two;
    let sum_lq_pairs = (nf - F::one()) * sum_lq;
    let pairs = two * (pairs_count * cov_pair + sum_lq_prod * cov_pp - sum_lq_pairs * cov_cross);
    Ok(diag + pairs)
}

/// E D(F || P) for a fixed probability vector q:
/// -H(q) - (psi(alpha/n) - psi(alpha)). Exact when q sums to one.
pub fn mean_kl_reverse<F: Scalar>(alpha: F, n: usize, q: &[F]) -> Result<F, KlError> {
    let a = check_mass(alpha, n)?;
    if q.is_empty() {
        return Err(KlError::NoAtoms);
    }
    if let Some(index) = q.iter().position(|&x| !(x.is_finite() && x >= F::zero())) {
        return Err(KlError::BadReference { index });
    }
    let neg_entropy = neumaier_sum(
        q.iter().filter(|&&x| x > F::zero()).map(|&x| x * x.ln()),
    );
    Ok(neg_entropy - (digamma(a) - digamma(alpha)))
}

/// Var D(F || P) for a fixed probability vector q:
/// (sum q_i^2) psi1(alpha/n) - psi1(alpha). Exact when q sums to one.
pub fn var_kl_reverse<F: Scalar>(alpha: F, n: usize, q: &[F]) -> Result<F, KlError> {
    let a = check_mass(alpha, n)?;
    if q.is_empty() {
        return Err(KlError::NoAtoms);
    }
    if let Some(index) = q.iter().position(|&x| !(x.is_finite() && x >= F::zero())) {
        return Err(KlError::BadReference { index });
    }
    let sum_q2 = neumaier_sum(q.iter().map(|&x| x * x));
    Ok(sum_q2 * trigamma(a) - trigamma(alpha))
}

/// Both forward-divergence moments at once.
pub fn forward_kl_moments<F: Scalar>(alpha: F, n: usize, q: &[F]) -> Result<KlMoments<F>, KlError> {
    Ok(KlMoments { mean: mean_kl_forward(alpha, n, q)?, variance: var_kl_forward(alpha, n, q)? })
}

/// Both reverse-divergence moments at once.
pub fn reverse_kl_moments<F: Scalar>(alpha: F, n: usize, q: &[F]) -> Result<KlMoments<F>, KlError> {
    Ok(KlMoments { mean: mean_kl_reverse(alpha, n, q)?, variance: var_kl_reverse(alpha, n, q)? })
}
