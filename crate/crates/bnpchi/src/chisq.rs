//! Chi-squared-style distances between random probability measures and a
//! reference distribution, concentration calibration, and the simple and
//! composite goodness-of-fit tests.
//!
//! The central statistic for a realization P and reference probabilities h
//! over k cells is
//!
//! ```text
//! D = mult * sum_i (P(A_i) - h_i)^2 / h_i
//! ```
//!
//! with `mult` the process mass (prior) or updated mass (posterior). Tests
//! estimate Pr(D <= c) by Monte Carlo over fresh realizations and reject
//! when the estimate falls strictly below the prior belief level q. The
//! mass is either supplied or calibrated so that the prior probability
//! Pr(D <= c) matches q, by bisection on log10(mass) with deterministic
//! per-evaluation substreams.

use rand_chacha::ChaCha12Rng;
use serde::Serialize;
use thiserror::Error;

use crate::dp::{
    measure_on_partition, sample_bin_probabilities, sample_dp_decreasing, BaseMeasure, DpError,
    DpParams,
};
use crate::mc::{map_replicates, EmpiricalSample, McError, RngStream};
use crate::measure::{Measure, MeasureError};
use crate::numeric::neumaier_sum;
use crate::partition::{Partition, PartitionError};
use crate::scalar::Scalar;
use crate::variates::gamma_variate;
use rand::Rng;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ChisqError {
    #[error("probability vectors must have equal length >= 2 (got {p} and {h})")]
    BadVectorShape { p: usize, h: usize },
    #[error("{which} vector sums to {sum}, not 1")]
    NotProbabilityVector { which: &'static str, sum: f64 },
    #[error("reference probability at cell {index} is zero; merge cells or choose a different partition")]
    ZeroReferenceBin { index: usize },
    #[error("data must be nonempty")]
    EmptyData,
    #[error("data value at index {index} must be finite and nonnegative for this family")]
    NegativeData { index: usize },
    #[error("composite tests need at least 2 cells, got {0}")]
    InvalidBinCount(usize),
    #[error("at least one parameter draw is required")]
    NoThetaDraws,
    #[error("the prior has no finite mean to anchor calibration")]
    PriorMeanUnavailable,
    #[error("prior mean must be a positive rate, got {0}")]
    InvalidThetaHat(f64),
    #[error("conjugate parameter sampling requires a gamma prior on the rate")]
    ConjugateNeedsGammaPrior,
    #[error("random-walk chain degenerated: acceptance rate {acceptance} below 1%")]
    ChainDegenerate { acceptance: f64 },
    #[error(transparent)]
    Calibration(#[from] CalibrationFailure),
    #[error(transparent)]
    Dp(#[from] DpError),
    #[error(transparent)]
    Mc(#[from] McError),
    #[error(transparent)]
    Measure(#[from] MeasureError),
    #[error(transparent)]
    Partition(#[from] PartitionError),
}

/// Validation and bracketing failures of the mass calibration.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum CalibrationFailure {
    #[error("threshold c must be finite and positive, got {0}")]
    InvalidThreshold(f64),
    #[error("prior belief q must lie strictly between 0 and 1, got {0}")]
    InvalidBelief(f64),
    #[error("mass bracket must satisfy 0 < lo < hi, got ({lo}, {hi})")]
    InvalidBracket { lo: f64, hi: f64 },
    #[error("probability tolerance must be positive, got {0}")]
    InvalidTolerance(f64),
    #[error("at least one calibration replicate is required")]
    NoReplicates,
    #[error("q = {q} is unattainable: Pr(D <= c) spans [{p_hi}, {p_lo}] over the bracket")]
    TargetOutOfRange { q: f64, p_lo: f64, p_hi: f64 },
}

pub(crate) fn validate_threshold_and_belief<F: Scalar>(c: F, q: F) -> Result<(), CalibrationFailure> {
    if !(c.is_finite() && c > F::zero()) {
        return Err(CalibrationFailure::InvalidThreshold(c.to_f64_lossy()));
    }
    if !(q.is_finite() && q > F::zero() && q < F::one()) {
        return Err(CalibrationFailure::InvalidBelief(q.to_f64_lossy()));
    }
    Ok(())
}

/// The quadratic distance mult * sum (p_i - h_i)^2 / h_i.
///
/// Both vectors must be probability vectors of the same length (sums within
/// 1e-9 of one); every reference cell must carry positive probability.
pub fn chisq_distance<F: Scalar>(mult: F, p: &[F], h: &[F]) -> Result<F, ChisqError> {
    if p.len() != h.len() || p.len() < 2 {
        return Err(ChisqError::BadVectorShape { p: p.len(), h: h.len() });
    }
    let tol = F::of(1e-9).max(F::eps() * F::of(64.0));
    let sum_p = neumaier_sum(p.iter().copied());
    if (sum_p - F::one()).abs() > tol {
        return Err(ChisqError::NotProbabilityVector { which: "realization", sum: sum_p.to_f64_lossy() });
    }
    let sum_h = neumaier_sum(h.iter().copied());
    if (sum_h - F::one()).abs() > tol {
        return Err(ChisqError::NotProbabilityVector { which: "reference", sum: sum_h.to_f64_lossy() });
    }
    let mut acc = F::zero();
    for (i, (&pi, &hi)) in p.iter().zip(h).enumerate() {
        if hi <= F::zero() {
            return Err(ChisqError::ZeroReferenceBin { index: i });
        }
        let d = pi - hi;
        acc += d * d / hi;
    }
    Ok(mult * acc)
}

/// Monte Carlo sample of the distance statistic, with the per-cell
/// realization probabilities averaged over replicates.
#[derive(Debug, Clone)]
pub struct DistanceLaw<F> {
    pub distances: EmpiricalSample<F>,
    pub mean_bins: Vec<F>,
    pub multiplier: F,
}

fn law_from_cells<F, Draw>(
    reference: &[F],
    multiplier: F,
    replicates: usize,
    stream: &RngStream,
    draw: Draw,
) -> Result<DistanceLaw<F>, ChisqError>
where
    F: Scalar,
    Draw: Fn(&mut ChaCha12Rng) -> Result<Vec<F>, ChisqError> + Sync,
{
    let per: Vec<(F, Vec<F>)> = map_replicates(replicates, stream, |_, rng| {
        let p = draw(rng)?;
        let d = chisq_distance(multiplier, &p, reference)?;
        Ok::<_, ChisqError>((d, p))
    })?;
    let k = reference.len();
    let nf = F::of(replicates.max(1) as f64);
    let mean_bins: Vec<F> = (0..k)
        .map(|i| neumaier_sum(per.iter().map(|(_, p)| p[i])) / nf)
        .collect();
    let distances = EmpiricalSample::new(per.into_iter().map(|(d, _)| d).collect())?;
    Ok(DistanceLaw { distances, mean_bins, multiplier })
}

fn checked_reference<F: Scalar, B: BaseMeasure<F>>(
    base: &B,
    bins: &B::Bins,
) -> Result<Vec<F>, ChisqError> {
    let h = base.probabilities_on(bins);
    if let Some(index) = h.iter().position(|&x| x <= F::zero()) {
        return Err(ChisqError::ZeroReferenceBin { index });
    }
    Ok(h)
}

/// Distance draws for arbitrary reference probabilities and multiplier, one
/// decreasing-weight realization of `params` per replicate.
pub fn distance_draws<F: Scalar, B: BaseMeasure<F>>(
    params: &DpParams<F, B>,
    bins: &B::Bins,
    reference: &[F],
    multiplier: F,
    n_atoms: usize,
    replicates: usize,
    stream: &RngStream,
) -> Result<DistanceLaw<F>, ChisqError> {
    law_from_cells(reference, multiplier, replicates, stream, |rng| {
        let r = sample_dp_decreasing(params, n_atoms, rng)?;
        Ok(measure_on_partition(&r, bins))
    })
}

/// Draws of the prior distance D(P, H) against the process's own base
/// probabilities, with multiplier alpha.
pub fn prior_distance_draws<F: Scalar, B: BaseMeasure<F>>(
    params: &DpParams<F, B>,
    bins: &B::Bins,
    n_atoms: usize,
    replicates: usize,
    stream: &RngStream,
) -> Result<DistanceLaw<F>, ChisqError> {
    let reference = checked_reference(params.base(), bins)?;
    distance_draws(params, bins, &reference, params.alpha(), n_atoms, replicates, stream)
}

/// Draws of the posterior distance D(P*, F0): realizations come from the
/// posterior process given `data`, the reference stays the prior base (the
/// null distribution), and the multiplier is the updated mass alpha + m.
pub fn posterior_distance_draws<F: Scalar, B: BaseMeasure<F>>(
    prior: &DpParams<F, B>,
    data: &[B::Atom],
    bins: &B::Bins,
    n_atoms: usize,
    replicates: usize,
    stream: &RngStream,
) -> Result<DistanceLaw<F>, ChisqError> {
    let reference = checked_reference(prior.base(), bins)?;
    let posterior = prior.posterior(data)?;
    distance_draws(&posterior, bins, &reference, posterior.alpha(), n_atoms, replicates, stream)
}

/// How posterior realizations are represented in self-distance draws.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Representation {
    /// Atom-based realization with decreasing weights (`n_atoms` atoms).
    Atoms,
    /// One draw of the exact Dirichlet law of the cell probabilities
    /// (`n_atoms` is ignored).
    ExactLaw,
}

/// Draws of D(P*, H*): both the realization and the reference come from the
/// posterior process, the regime where the statistic approaches a
/// chi-squared law with (cells - 1) degrees of freedom as m grows.
/// Empty data reduces to the prior self-distance D(P, H).
pub fn posterior_self_distance_draws<F: Scalar, B: BaseMeasure<F>>(
    prior: &DpParams<F, B>,
    data: &[B::Atom],
    bins: &B::Bins,
    repr: Representation,
    n_atoms: usize,
    replicates: usize,
    stream: &RngStream,
) -> Result<DistanceLaw<F>, ChisqError> {
    let posterior = prior.posterior(data)?;
    let reference = checked_reference(posterior.base(), bins)?;
    let mult = posterior.alpha();
    match repr {
        Representation::Atoms => {
            distance_draws(&posterior, bins, &reference, mult, n_atoms, replicates, stream)
        }
        Representation::ExactLaw => law_from_cells(&reference, mult, replicates, stream, |rng| {
            Ok(sample_bin_probabilities(&posterior, bins, rng)?)
        }),
    }
}

/// Search parameters for mass calibration.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CalibrationSpec<F> {
    pub alpha_lo: F,
    pub alpha_hi: F,
    /// Stop when |Pr(D <= c) - q| does not exceed this.
    pub tolerance: F,
    /// Replicates per probability evaluation.
    pub replicates: usize,
    pub max_iterations: usize,
}

impl<F: Scalar> Default for CalibrationSpec<F> {
    fn default() -> Self {
        Self {
            alpha_lo: F::of(1e-2),
            alpha_hi: F::of(1e4),
            tolerance: F::of(0.01),
            replicates: 2000,
            max_iterations: 40,
        }
    }
}

impl<F: Scalar> CalibrationSpec<F> {
    fn validate(&self) -> Result<(), CalibrationFailure> {
        if !(self.alpha_lo.is_finite()
            && self.alpha_hi.is_finite()
            && F::zero() < self.alpha_lo
            && self.alpha_lo < self.alpha_hi)
        {
            return Err(CalibrationFailure::InvalidBracket {
                lo: self.alpha_lo.to_f64_lossy(),
                hi: self.alpha_hi.to_f64_lossy(),
            });
        }
        if !(self.tolerance.is_finite() && self.tolerance > F::zero()) {
            return Err(CalibrationFailure::InvalidTolerance(self.tolerance.to_f64_lossy()));
        }
        if self.replicates == 0 {
            return Err(CalibrationFailure::NoReplicates);
        }
        Ok(())
    }
}

/// Outcome of a calibration run.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Calibration<F> {
    pub alpha: F,
    /// Pr(D <= c) achieved at `alpha`.
    pub achieved: F,
    /// Every (mass, probability) evaluation, in search order.
    pub evaluations: Vec<(F, F)>,
    /// False when the iteration budget ran out; `alpha` is then the best
    /// evaluation seen.
    pub converged: bool,
}

/// Calibrates the process mass so the prior probability Pr(D <= c) matches
/// q, assuming the probability decreases in the mass.
///
/// `eval` draws the prior distance sample for a candidate mass; it receives
/// a dedicated substream per evaluation (children 0 and 1 for the bracket
/// ends, 2 + i for bisection step i), so the objective is deterministic and
/// independent of evaluation order.
pub fn calibrate_alpha<F, E, Eval>(
    spec: &CalibrationSpec<F>,
    c: F,
    q: F,
    stream: &RngStream,
    eval: Eval,
) -> Result<Calibration<F>, E>
where
    F: Scalar,
    E: From<CalibrationFailure>,
    Eval: Fn(F, &RngStream) -> Result<EmpiricalSample<F>, E>,
{
    spec.validate()?;
    validate_threshold_and_belief(c, q)?;
    let mut evaluations = Vec::new();
    let p_lo = eval(spec.alpha_lo, &stream.child(0))?.probability_le(c);
    evaluations.push((spec.alpha_lo, p_lo));
    if (p_lo - q).abs() <= spec.tolerance {
        return Ok(Calibration { alpha: spec.alpha_lo, achieved: p_lo, evaluations, converged: true });
    }
    let p_hi = eval(spec.alpha_hi, &stream.child(1))?.probability_le(c);
    evaluations.push((spec.alpha_hi, p_hi));
    if (p_hi - q).abs() <= spec.tolerance {
        return Ok(Calibration { alpha: spec.alpha_hi, achieved: p_hi, evaluations, converged: true });
    }
    // Pr(D <= c) decreases in the mass, so the bracket must straddle q.
    if !(p_lo > q && q > p_hi) {
        return Err(CalibrationFailure::TargetOutOfRange {
            q: q.to_f64_lossy(),
            p_lo: p_lo.to_f64_lossy(),
            p_hi: p_hi.to_f64_lossy(),
        }
        .into());
    }
    let ten = F::of(10.0);
    let mut llo = spec.alpha_lo.log10();
    let mut lhi = spec.alpha_hi.log10();
    for i in 0..spec.max_iterations {
        let mid = ten.powf((llo + lhi) / F::of(2.0));
        let p = eval(mid, &stream.child(2 + i as u64))?.probability_le(c);
        evaluations.push((mid, p));
        if (p - q).abs() <= spec.tolerance {
            return Ok(Calibration { alpha: mid, achieved: p, evaluations, converged: true });
        }
        if p > q {
            llo = mid.log10();
        } else {
            lhi = mid.log10();
        }
    }
    let (alpha, achieved) = evaluations
        .iter()
        .copied()
        .min_by(|a, b| {
            (a.1 - q).abs().partial_cmp(&(b.1 - q).abs()).expect("probabilities are finite")
        })
        .expect("at least two evaluations");
    Ok(Calibration { alpha, achieved, evaluations, converged: false })
}

/// Process mass for a test: fixed, or calibrated to (c, q).
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum AlphaChoice<F> {
    Fixed(F),
    Calibrated(CalibrationSpec<F>),
}

/// Shared configuration of the hypothesis tests.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TestSettings<F> {
    pub c: F,
    pub q: F,
    pub alpha: AlphaChoice<F>,
    pub n_atoms: usize,
    pub replicates: usize,
}

impl<F: Scalar> TestSettings<F> {
    /// Calibrated mass with default search parameters, 2000 atoms, 2000
    /// replicates.
    pub fn calibrated(c: F, q: F) -> Self {
        Self { c, q, alpha: AlphaChoice::Calibrated(CalibrationSpec::default()), n_atoms: 2000, replicates: 2000 }
    }

    /// Fixed mass, 2000 atoms, 2000 replicates.
    pub fn fixed(c: F, q: F, alpha: F) -> Self {
        Self { c, q, alpha: AlphaChoice::Fixed(alpha), n_atoms: 2000, replicates: 2000 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Decision {
    Reject,
    NoEvidenceToReject,
}

impl std::fmt::Display for Decision {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Decision::Reject => write!(f, "reject"),
            Decision::NoEvidenceToReject => write!(f, "no_evidence_to_reject"),
        }
    }
}

/// Rejection is strict: a posterior probability exactly equal to q is not
/// evidence against the null.
pub(crate) fn decide<F: Scalar>(p_hat: F, q: F) -> Decision {
    if p_hat < q {
        Decision::Reject
    } else {
        Decision::NoEvidenceToReject
    }
}

pub(crate) fn binomial_se<F: Scalar>(p: F, n: usize) -> F {
    (p * (F::one() - p) / F::of(n.max(1) as f64)).sqrt()
}

/// Everything a goodness-of-fit run reports.
#[derive(Debug, Clone, Serialize)]
pub struct GofReport<F> {
    pub seed: u64,
    /// Sample size of the observed data.
    pub m: usize,
    /// Prior process mass used for the posterior draws.
    pub alpha: F,
    /// Updated mass alpha + m.
    pub alpha_posterior: F,
    pub c: F,
    pub q: F,
    /// Monte Carlo estimate of Pr(D <= c) under the posterior.
    pub p_hat: F,
    /// Binomial standard error of `p_hat`.
    pub standard_error: F,
    pub replicates: usize,
    pub n_atoms: usize,
    pub decision: Decision,
    /// Empirical cell frequencies of the data.
    pub observed_bins: Vec<F>,
    /// Null-distribution cell probabilities.
    pub reference_bins: Vec<F>,
    /// Posterior realization cell probabilities, averaged over replicates.
    pub mean_posterior_bins: Vec<F>,
    pub distance_mean: F,
    pub distance_median: F,
    pub distance_min: F,
    pub distance_max: F,
    /// Present when the mass was calibrated rather than fixed.
    pub calibration: Option<Calibration<F>>,
}

pub(crate) fn resolve_alpha<F: Scalar, E, Eval>(
    choice: &AlphaChoice<F>,
    c: F,
    q: F,
    stream: &RngStream,
    eval: Eval,
) -> Result<(F, Option<Calibration<F>>), E>
where
    E: From<CalibrationFailure>,
    Eval: Fn(F, &RngStream) -> Result<EmpiricalSample<F>, E>,
{
    match choice {
        AlphaChoice::Fixed(a) => Ok((*a, None)),
        AlphaChoice::Calibrated(spec) => {
            let cal = calibrate_alpha(spec, c, q, stream, eval)?;
            Ok((cal.alpha, Some(cal)))
        }
    }
}

/// Simple goodness-of-fit test of `data` against the null distribution
/// `null` on the given partition.
///
/// Substream layout: child 0 drives calibration, child 1 the posterior
/// distance draws.
pub fn gof_simple<F: Scalar>(
    data: &[F],
    null: &Measure<F>,
    bins: &Partition<F>,
    settings: &TestSettings<F>,
    stream: &RngStream,
) -> Result<GofReport<F>, ChisqError> {
    if data.is_empty() {
        return Err(ChisqError::EmptyData);
    }
    validate_threshold_and_belief(settings.c, settings.q)?;
    let reference = checked_reference(null, bins)?;
    let cal_replicates = match &settings.alpha {
        AlphaChoice::Calibrated(spec) => spec.replicates,
        AlphaChoice::Fixed(_) => 0,
    };
    let (alpha, calibration) = resolve_alpha::<F, ChisqError, _>(
        &settings.alpha,
        settings.c,
        settings.q,
        &stream.child(0),
        |a, s| {
            let params = DpParams::new(a, null.clone())?;
            Ok(prior_distance_draws(&params, bins, settings.n_atoms, cal_replicates, s)?.distances)
        },
    )?;
    let prior = DpParams::new(alpha, null.clone())?;
    let law =
        posterior_distance_draws(&prior, data, bins, settings.n_atoms, settings.replicates, &stream.child(1))?;
    let p_hat = law.distances.probability_le(settings.c);
    Ok(GofReport {
        seed: stream.seed(),
        m: data.len(),
        alpha,
        alpha_posterior: law.multiplier,
        c: settings.c,
        q: settings.q,
        p_hat,
        standard_error: binomial_se(p_hat, settings.replicates),
        replicates: settings.replicates,
        n_atoms: settings.n_atoms,
        decision: decide(p_hat, settings.q),
        observed_bins: bins.frequencies(data),
        reference_bins: reference,
        mean_posterior_bins: law.mean_bins,
        distance_mean: law.distances.mean(),
        distance_median: law.distances.median(),
        distance_min: law.distances.min(),
        distance_max: law.distances.max(),
        calibration,
    })
}

/// Parametric family under a composite null hypothesis. The parameter is a
/// positive rate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Family {
    Exponential,
}

impl Family {
    /// The family member at rate `theta`.
    pub fn measure<F: Scalar>(&self, theta: F) -> Result<Measure<F>, MeasureError> {
        match self {
            Family::Exponential => Measure::exponential(theta),
        }
    }

    /// Log-likelihood of data with the given sufficient statistics
    /// (count, sum).
    fn ln_likelihood<F: Scalar>(&self, theta: F, m: F, sum: F) -> F {
        match self {
            Family::Exponential => {
                if theta <= F::zero() {
                    F::neg_infinity()
                } else {
                    m * theta.ln() - theta * sum
                }
            }
        }
    }

    /// Maps a standard draw (rate 1) to the family member at `theta`; used
    /// by the common-random-numbers parameter scan.
    fn atom_from_standard<F: Scalar>(&self, standard: F, theta: F) -> F {
        match self {
            Family::Exponential => standard / theta,
        }
    }
}

/// How the parameter posterior is sampled.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ThetaSampler<F> {
    /// Exact draws; requires a gamma prior on the exponential rate.
    Conjugate,
    /// Gaussian random-walk chain; `step` defaults to a tenth of the prior
    /// mean and adapts during burn-in toward a 20-50% acceptance rate.
    RandomWalk { step: Option<F>, burn_in: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MhDiagnostics<F> {
    pub acceptance: F,
    pub step: F,
}

/// Result of parameter-posterior sampling.
#[derive(Debug, Clone)]
pub struct ThetaPosterior<F> {
    pub draws: Vec<F>,
    /// Exact posterior (shape, rate) in conjugate mode.
    pub gamma_params: Option<(F, F)>,
    pub mh: Option<MhDiagnostics<F>>,
}

/// Samples `count` draws of the rate parameter's posterior given `data`.
///
/// Conjugate mode requires `Family::Exponential` with a gamma prior: the
/// posterior is Gamma(shape + m, rate + sum x) exactly. Random-walk mode
/// targets the same density by Metropolis steps and reports acceptance
/// diagnostics; a post-burn-in acceptance rate below 1% is an error.
pub fn sample_theta_posterior<F: Scalar, R: Rng + ?Sized>(
    family: Family,
    prior: &Measure<F>,
    data: &[F],
    count: usize,
    sampler: &ThetaSampler<F>,
    rng: &mut R,
) -> Result<ThetaPosterior<F>, ChisqError> {
    if count == 0 {
        return Err(ChisqError::NoThetaDraws);
    }
    if let Some(index) = data.iter().position(|&x| !x.is_finite() || x < F::zero()) {
        return Err(ChisqError::NegativeData { index });
    }
    let m = F::of(data.len() as f64);
    let sum: F = neumaier_sum(data.iter().copied());
    match sampler {
        ThetaSampler::Conjugate => {
            let (a0, b0) = match prior {
                Measure::Gamma { shape, rate } => (*shape, *rate),
                _ => return Err(ChisqError::ConjugateNeedsGammaPrior),
            };
            let (a, b) = (a0 + m, b0 + sum);
            let draws = (0..count).map(|_| gamma_variate(a, rng) / b).collect();
            Ok(ThetaPosterior { draws, gamma_params: Some((a, b)), mh: None })
        }
        ThetaSampler::RandomWalk { step, burn_in } => {
            let theta_hat = prior.mean().ok_or(ChisqError::PriorMeanUnavailable)?;
            if !(theta_hat.is_finite() && theta_hat > F::zero()) {
                return Err(ChisqError::InvalidThetaHat(theta_hat.to_f64_lossy()));
            }
            // Fail early if the prior has no density (empirical components).
            prior.ln_pdf(theta_hat)?;
            let ln_target = |t: F| {
                if t <= F::zero() {
                    return F::neg_infinity();
                }
                let lp = prior.ln_pdf(t).expect("density availability checked");
                family.ln_likelihood(t, m, sum) + lp
            };
            let mut step_size = step.unwrap_or(theta_hat / F::of(10.0));
            let mut theta = theta_hat;
            let mut lt = ln_target(theta);
            let mut window_accepts = 0usize;
            for i in 0..*burn_in {
                let proposal = theta + step_size * F::std_normal(rng);
                let lp = ln_target(proposal);
                if F::unit01(rng).ln() < lp - lt {
                    theta = proposal;
                    lt = lp;
                    window_accepts += 1;
                }
                // Adapt toward 20-50% acceptance, burn-in only.
                if (i + 1) % 50 == 0 {
                    let rate = window_accepts as f64 / 50.0;
                    if rate > 0.5 {
                        step_size = step_size * F::of(1.1);
                    } else if rate < 0.2 {
                        step_size = step_size * F::of(0.9);
                    }
                    window_accepts = 0;
                }
            }
            let mut draws = Vec::with_capacity(count);
            let mut accepts = 0usize;
            for _ in 0..count {
                let proposal = theta + step_size * F::std_normal(rng);
                let lp = ln_target(proposal);
                if F::unit01(rng).ln() < lp - lt {
                    theta = proposal;
                    lt = lp;
                    accepts += 1;
                }
                draws.push(theta);
            }
            let acceptance = F::of(accepts as f64 / count as f64);
            if acceptance < F::of(0.01) {
                return Err(ChisqError::ChainDegenerate { acceptance: acceptance.to_f64_lossy() });
            }
            Ok(ThetaPosterior { draws, gamma_params: None, mh: Some(MhDiagnostics { acceptance, step: step_size }) })
        }
    }
}

/// Configuration of the composite goodness-of-fit test.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CompositeSettings<F> {
    pub test: TestSettings<F>,
    /// Number of cells; edges are equal-probability quantiles of the family
    /// member at the posterior-mean rate.
    pub bin_count: usize,
    /// Number of parameter-posterior draws scanned for the best-fitting rate.
    pub theta_draws: usize,
    pub sampler: ThetaSampler<F>,
}

#[derive(Debug, Clone, Serialize)]
pub struct CompositeReport<F> {
    /// The underlying test run against the best-fitting family member.
    pub gof: GofReport<F>,
    /// Prior-mean rate used for calibration.
    pub theta_hat: F,
    /// Mean of the parameter-posterior draws.
    pub theta_posterior_mean: F,
    /// The scanned rate minimizing the posterior distance.
    pub theta_min: F,
    /// Exact posterior gamma (shape, rate) in conjugate mode.
    pub posterior_shape: Option<F>,
    pub posterior_rate: Option<F>,
    /// Cell edges used by the test.
    pub edges: Vec<F>,
    pub mh: Option<MhDiagnostics<F>>,
}

/// Composite goodness-of-fit test: is the data from *some* member of the
/// family?
///
/// The flow: sample the rate posterior; place cell edges at equal-probability
/// quantiles of the family member at the posterior-mean rate; calibrate the
/// process mass against the prior-mean member; scan the posterior rate draws
/// for the member closest to one shared posterior realization (common random
/// numbers, so the argmin is not resampling noise); run the distance test
/// against that member.
///
/// Substream layout: child 0 calibration, child 1 final distance draws,
/// child 2 parameter sampling and the scan.
pub fn gof_composite<F: Scalar>(
    data: &[F],
    family: Family,
    prior: &Measure<F>,
    settings: &CompositeSettings<F>,
    stream: &RngStream,
) -> Result<CompositeReport<F>, ChisqError> {
    if data.is_empty() {
        return Err(ChisqError::EmptyData);
    }
    if let Some(index) = data.iter().position(|&x| !x.is_finite() || x < F::zero()) {
        return Err(ChisqError::NegativeData { index });
    }
    if settings.bin_count < 2 {
        return Err(ChisqError::InvalidBinCount(settings.bin_count));
    }
    validate_threshold_and_belief(settings.test.c, settings.test.q)?;
    let theta_hat = family_anchor(prior)?;

    let mut scan_rng = stream.child(2).rng();
    let posterior =
        sample_theta_posterior(family, prior, data, settings.theta_draws, &settings.sampler, &mut scan_rng)?;
    let theta_bar = neumaier_sum(posterior.draws.iter().copied()) / F::of(posterior.draws.len() as f64);

    // Equal-probability edges under the posterior-mean member.
    let k = settings.bin_count;
    let bar_measure = family.measure(theta_bar)?;
    let mut edges = Vec::with_capacity(k - 1);
    for j in 1..k {
        edges.push(bar_measure.quantile(F::of(j as f64 / k as f64))?);
    }
    let bins = Partition::new(edges.clone())?;

    // Calibrate against the prior-mean member.
    let hat_measure = family.measure(theta_hat)?;
    let cal_replicates = match &settings.test.alpha {
        AlphaChoice::Calibrated(spec) => spec.replicates,
        AlphaChoice::Fixed(_) => 0,
    };
    let (alpha, calibration) = resolve_alpha::<F, ChisqError, _>(
        &settings.test.alpha,
        settings.test.c,
        settings.test.q,
        &stream.child(0),
        |a, s| {
            let params = DpParams::new(a, hat_measure.clone())?;
            Ok(prior_distance_draws(&params, &bins, settings.test.n_atoms, cal_replicates, s)?
                .distances)
        },
    )?;

    // Scan the posterior rates against one shared realization.
    let m = data.len();
    let alpha_star = alpha + F::of(m as f64);
    let pick_base = alpha / alpha_star;
    let n_atoms = settings.test.n_atoms;
    let weights = crate::dp::decreasing_weights(alpha_star, n_atoms, &mut scan_rng)?;
    let picks: Vec<F> = (0..n_atoms).map(|_| F::unit01(&mut scan_rng)).collect();
    let standards: Vec<F> = (0..n_atoms).map(|_| F::std_exp(&mut scan_rng)).collect();
    let indices: Vec<usize> = (0..n_atoms).map(|_| scan_rng.gen_range(0..m)).collect();
    let mut theta_min = posterior.draws[0];
    let mut best_distance = F::infinity();
    for &theta in &posterior.draws {
        let member = family.measure(theta)?;
        let h = member.probabilities_on(&bins);
        if h.iter().any(|&x| x <= F::zero()) {
            continue; // this member puts no mass in a cell; it cannot win
        }
        let mut cells = vec![F::zero(); bins.bin_count()];
        for j in 0..n_atoms {
            let atom = if picks[j] <= pick_base {
                family.atom_from_standard(standards[j], theta)
            } else {
                data[indices[j]]
            };
            cells[bins.bin_of(atom)] += weights[j];
        }
        let d = chisq_distance(alpha_star, &cells, &h)?;
        if d < best_distance {
            best_distance = d;
            theta_min = theta;
        }
    }

    // Final test against the best-fitting member.
    let min_measure = family.measure(theta_min)?;
    let reference = checked_reference(&min_measure, &bins)?;
    let prior_params = DpParams::new(alpha, min_measure.clone())?;
    let law = posterior_distance_draws(
        &prior_params,
        data,
        &bins,
        n_atoms,
        settings.test.replicates,
        &stream.child(1),
    )?;
    let p_hat = law.distances.probability_le(settings.test.c);
    let gof = GofReport {
        seed: stream.seed(),
        m,
        alpha,
        alpha_posterior: law.multiplier,
        c: settings.test.c,
        q: settings.test.q,
        p_hat,
        standard_error: binomial_se(p_hat, settings.test.replicates),
        replicates: settings.test.replicates,
        n_atoms,
        decision: decide(p_hat, settings.test.q),
        observed_bins: bins.frequencies(data),
        reference_bins: reference,
        mean_posterior_bins: law.mean_bins,
        distance_mean: law.distances.mean(),
        distance_median: law.distances.median(),
        distance_min: law.distances.min(),
        distance_max: law.distances.max(),
        calibration,
    };
    Ok(CompositeReport {
        gof,
        theta_hat,
        theta_posterior_mean: theta_bar,
        theta_min,
        posterior_shape: posterior.gamma_params.map(|(a, _)| a),
        posterior_rate: posterior.gamma_params.map(|(_, b)| b),
        edges,
        mh: posterior.mh,
    })
}

/// The prior-mean rate anchoring calibration; must be finite and positive.
fn family_anchor<F: Scalar>(prior: &Measure<F>) -> Result<F, ChisqError> {
    let theta_hat = prior.mean().ok_or(ChisqError::PriorMeanUnavailable)?;
    if !(theta_hat.is_finite() && theta_hat > F::zero()) {
        return Err(ChisqError::InvalidThetaHat(theta_hat.to_f64_lossy()));
    }
    Ok(theta_hat)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mc::RngStream;

    fn std_normal() -> Measure<f64> {
        "normal:0,1".parse().unwrap()
    }

    fn seven_bins() -> Partition<f64> {
        Partition::new(vec![-2.0, -1.0, 0.0, 1.0, 2.0, 3.0]).unwrap()
    }

    #[test]
    fn distance_identity_and_substitution() {
        let h = [0.5f64, 0.5];
        assert_eq!(chisq_distance(160.0, &h, &h).unwrap(), 0.0);
        let d = chisq_distance(160.0, &[0.6, 0.4], &h).unwrap();
        assert!((d - 6.4).abs() < 1e-12);
    }

    #[test]
    fn distance_matches_term_by_term_oracle() {
        let p = [0.2f64, 0.5, 0.3];
        let h = [0.25f64, 0.4, 0.35];
        let got = chisq_distance(7.5, &p, &h).unwrap();
        let mut want = 0.0;
        for i in 0..3 {
            want += (p[i] - h[i]).powi(2) / h[i];
        }
        want *= 7.5;
        assert!((got - want).abs() < 1e-12);
    }

    #[test]
    fn distance_is_permutation_invariant() {
        let p = [0.2f64, 0.5, 0.3];
        let h = [0.25f64, 0.4, 0.35];
        let a = chisq_distance(3.0, &p, &h).unwrap();
        let b = chisq_distance(3.0, &[0.5, 0.3, 0.2], &[0.4, 0.35, 0.25]).unwrap();
        assert!((a - b).abs() < 1e-14);
    }

    #[test]
    fn distance_validates_inputs() {
        assert!(matches!(
            chisq_distance(1.0, &[1.0], &[1.0]),
            Err(ChisqError::BadVectorShape { .. })
        ));
        assert!(matches!(
            chisq_distance(1.0, &[0.5, 0.5], &[1.0, 0.0]),
            Err(ChisqError::ZeroReferenceBin { index: 1 })
        ));
        assert!(matches!(
            chisq_distance(1.0, &[0.5, 0.4], &[0.5, 0.5]),
            Err(ChisqError::NotProbabilityVector { which: "realization", .. })
        ));
    }

    #[test]
    fn prior_probability_decreases_in_mass() {
        // Pr(D <= 2) falls sharply as the mass grows.
        let bins = seven_bins();
        let stream = RngStream::root(7);
        let mut last = f64::INFINITY;
        for (i, &alpha) in [1.0, 10.0, 100.0].iter().enumerate() {
            let params = DpParams::new(alpha, std_normal()).unwrap();
            let law =
                prior_distance_draws(&params, &bins, 500, 400, &stream.child(i as u64)).unwrap();
            let p = law.distances.probability_le(2.0);
            assert!(p < last, "alpha {alpha}: {p} !< {last}");
            last = p;
        }
    }

    #[test]
    fn prior_draws_are_deterministic() {
        let bins = seven_bins();
        let params = DpParams::new(10.0, std_normal()).unwrap();
        let stream = RngStream::root(11);
        let a = prior_distance_draws(&params, &bins, 200, 50, &stream).unwrap();
        let b = prior_distance_draws(&params, &bins, 200, 50, &stream).unwrap();
        assert_eq!(a.distances.values(), b.distances.values());
        assert_eq!(a.mean_bins, b.mean_bins);
    }

    #[test]
    fn posterior_with_no_data_is_the_prior() {
        let bins = seven_bins();
        let params = DpParams::new(10.0, std_normal()).unwrap();
        let stream = RngStream::root(13);
        let prior = prior_distance_draws(&params, &bins, 200, 50, &stream).unwrap();
        let empty: [f64; 0] = [];
        let post = posterior_distance_draws(&params, &empty, &bins, 200, 50, &stream).unwrap();
        assert_eq!(prior.distances.values(), post.distances.values());
        assert_eq!(prior.multiplier, post.multiplier);
    }

    #[test]
    fn mean_bins_average_realizations() {
        // With a huge mass the realizations hug the base probabilities.
        let bins = seven_bins();
        let params = DpParams::new(5e4, std_normal()).unwrap();
        let law = prior_distance_draws(&params, &bins, 400, 100, &RngStream::root(17)).unwrap();
        let h = std_normal().probabilities_on(&bins);
        for i in 0..h.len() {
            assert!((law.mean_bins[i] - h[i]).abs() < 0.01, "cell {i}");
        }
        let total: f64 = law.mean_bins.iter().sum();
        assert!((total - 1.0).abs() < 1e-9);
    }

    fn fake_eval(alpha: f64, c: f64, n: usize) -> EmpiricalSample<f64> {
        // Deterministic surrogate: Pr(D <= c) = 1 / (1 + alpha).
        let p = 1.0 / (1.0 + alpha);
        let below = (p * n as f64).round() as usize;
        let mut v = vec![c + 1.0; n];
        for x in v.iter_mut().take(below) {
            *x = c - 1.0;
        }
        EmpiricalSample::new(v).unwrap()
    }

    #[test]
    fn calibration_converges_on_analytic_objective() {
        let spec = CalibrationSpec {
            alpha_lo: 1e-2,
            alpha_hi: 1e4,
            tolerance: 0.002,
            replicates: 4000,
            max_iterations: 40,
        };
        let stream = RngStream::root(19);
        let cal: Calibration<f64> = calibrate_alpha::<f64, ChisqError, _>(
            &spec,
            5.0,
            0.25,
            &stream,
            |a, _| Ok(fake_eval(a, 5.0, 4000)),
        )
        .unwrap();
        assert!(cal.converged);
        // p = 1/(1+alpha) = 0.25 at alpha = 3.
        assert!((cal.alpha - 3.0).abs() < 0.15, "alpha {}", cal.alpha);
        assert!((cal.achieved - 0.25).abs() <= 0.002);
        assert!(cal.evaluations.len() >= 3);
    }

    #[test]
    fn calibration_boundary_and_bracket_failures() {
        let spec = CalibrationSpec {
            alpha_lo: 1.0,
            alpha_hi: 100.0,
            tolerance: 0.01,
            replicates: 1000,
            max_iterations: 10,
        };
        let stream = RngStream::root(23);
        // q equals the achieved probability at the low end: returns lo.
        let cal = calibrate_alpha::<f64, ChisqError, _>(&spec, 5.0, 0.5, &stream, |a, _| {
            Ok(fake_eval(a, 5.0, 1000))
        })
        .unwrap();
        assert_eq!(cal.alpha, 1.0);
        // q above every achievable probability: bracket failure.
        let err = calibrate_alpha::<f64, ChisqError, _>(&spec, 5.0, 0.9, &stream, |a, _| {
            Ok(fake_eval(a, 5.0, 1000))
        })
        .unwrap_err();
        assert!(matches!(
            err,
            ChisqError::Calibration(CalibrationFailure::TargetOutOfRange { .. })
        ));
    }

    #[test]
    fn calibration_validates_spec() {
        let stream = RngStream::root(29);
        let bad = CalibrationSpec { alpha_lo: 5.0, alpha_hi: 1.0, ..CalibrationSpec::default() };
        let err = calibrate_alpha::<f64, ChisqError, _>(&bad, 3.0, 0.5, &stream, |a, _| {
            Ok(fake_eval(a, 3.0, 100))
        })
        .unwrap_err();
        assert!(matches!(err, ChisqError::Calibration(CalibrationFailure::InvalidBracket { .. })));
        let spec = CalibrationSpec::<f64>::default();
        let err = calibrate_alpha::<f64, ChisqError, _>(&spec, 3.0, 1.5, &stream, |a, _| {
            Ok(fake_eval(a, 3.0, 100))
        })
        .unwrap_err();
        assert!(matches!(err, ChisqError::Calibration(CalibrationFailure::InvalidBelief(_))));
    }

    #[test]
    fn small_scale_calibration_on_real_draws() {
        let bins = seven_bins();
        let spec = CalibrationSpec {
            alpha_lo: 0.5,
            alpha_hi: 500.0,
            tolerance: 0.05,
            replicates: 400,
            max_iterations: 20,
        };
        let stream = RngStream::root(31);
        let cal = calibrate_alpha::<f64, ChisqError, _>(&spec, 3.0, 0.48, &stream, |a, s| {
            let params = DpParams::new(a, std_normal())?;
            Ok(prior_distance_draws(&params, &bins, 400, 400, s)?.distances)
        })
        .unwrap();
        assert!(cal.converged);
        assert!((cal.achieved - 0.48).abs() <= 0.05);
        assert!(cal.alpha > 2.0 && cal.alpha < 60.0, "alpha {}", cal.alpha);
    }

    #[test]
    fn gof_decision_rule_is_strict() {
        let data: Vec<f64> = {
            let mut rng = RngStream::root(37).rng();
            (0..60).map(|_| f64::std_normal(&mut rng)).collect()
        };
        let bins = seven_bins();
        let stream = RngStream::root(41);
        let mut settings = TestSettings::fixed(3.0, 0.5, 20.0);
        settings.n_atoms = 300;
        settings.replicates = 300;
        let report = gof_simple(&data, &std_normal(), &bins, &settings, &stream).unwrap();
        // Rerun with q exactly at the estimate: a tie is not a rejection.
        let mut tie = settings;
        tie.q = report.p_hat;
        let tie_report = gof_simple(&data, &std_normal(), &bins, &tie, &stream).unwrap();
        assert_eq!(tie_report.p_hat, report.p_hat);
        assert_eq!(tie_report.decision, Decision::NoEvidenceToReject);
        // Nudge q above the estimate: now it rejects.
        let mut above = settings;
        above.q = (report.p_hat + 1e-9).min(1.0 - 1e-12);
        let above_report = gof_simple(&data, &std_normal(), &bins, &above, &stream).unwrap();
        assert_eq!(above_report.decision, Decision::Reject);
    }

    #[test]
    fn gof_extreme_thresholds() {
        let data: Vec<f64> = {
            let mut rng = RngStream::root(43).rng();
            (0..40).map(|_| f64::std_normal(&mut rng)).collect()
        };
        let bins = seven_bins();
        let stream = RngStream::root(47);
        let mut settings = TestSettings::fixed(1e9, 0.5, 10.0);
        settings.n_atoms = 200;
        settings.replicates = 200;
        let report = gof_simple(&data, &std_normal(), &bins, &settings, &stream).unwrap();
        assert_eq!(report.p_hat, 1.0);
        assert_eq!(report.decision, Decision::NoEvidenceToReject);
        assert_eq!(report.alpha_posterior, 50.0);
        assert_eq!(report.m, 40);
        assert!(report.calibration.is_none());
        let tiny = TestSettings { c: 1e-12, ..settings };
        let report = gof_simple(&data, &std_normal(), &bins, &tiny, &stream).unwrap();
        assert_eq!(report.p_hat, 0.0);
        assert_eq!(report.decision, Decision::Reject);
    }

    #[test]
    fn gof_rejects_empty_data_and_zero_bins() {
        let bins = seven_bins();
        let stream = RngStream::root(53);
        let settings = TestSettings::fixed(3.0, 0.5, 10.0);
        let empty: [f64; 0] = [];
        assert!(matches!(
            gof_simple(&empty, &std_normal(), &bins, &settings, &stream),
            Err(ChisqError::EmptyData)
        ));
        // A null with no mass beyond 1 makes the last cell zero.
        let uniform: Measure<f64> = "uniform:0,1".parse().unwrap();
        let data = [0.5, 0.25];
        assert!(matches!(
            gof_simple(&data, &uniform, &bins, &settings, &stream),
            Err(ChisqError::ZeroReferenceBin { .. })
        ));
    }

    #[test]
    fn conjugate_posterior_matches_closed_form() {
        // 31 observations summing to 17907 against a gamma(1.7, 2550) prior.
        let mut data = vec![17907.0 / 31.0; 31];
        data[0] += 0.5;
        data[1] -= 0.5;
        let prior: Measure<f64> = "gamma:1.7,2550".parse().unwrap();
        let mut rng = RngStream::root(59).rng();
        let post = sample_theta_posterior(
            Family::Exponential,
            &prior,
            &data,
            2000,
            &ThetaSampler::Conjugate,
            &mut rng,
        )
        .unwrap();
        let (a, b) = post.gamma_params.unwrap();
        assert!((a - 32.7).abs() < 1e-12);
        assert!((b - 20457.0).abs() < 1e-9);
        let mean = post.draws.iter().sum::<f64>() / post.draws.len() as f64;
        let want = a / b;
        let se = (a.sqrt() / b) / (post.draws.len() as f64).sqrt();
        assert!((mean - want).abs() < 4.0 * se, "mean {mean} vs {want}");
        // Empty data: the posterior is the prior.
        let none: [f64; 0] = [];
        let same = sample_theta_posterior(
            Family::Exponential,
            &prior,
            &none,
            10,
            &ThetaSampler::Conjugate,
            &mut rng,
        )
        .unwrap();
        assert_eq!(same.gamma_params.unwrap(), (1.7, 2550.0));
    }

    #[test]
    fn random_walk_matches_conjugate_target() {
        let mut data = vec![17907.0 / 31.0; 31];
        data[0] += 0.5;
        data[1] -= 0.5;
        let prior: Measure<f64> = "gamma:1.7,2550".parse().unwrap();
        let mut rng = RngStream::root(61).rng();
        let post = sample_theta_posterior(
            Family::Exponential,
            &prior,
            &data,
            4000,
            &ThetaSampler::RandomWalk { step: None, burn_in: 500 },
            &mut rng,
        )
        .unwrap();
        let mh = post.mh.unwrap();
        assert!(mh.acceptance > 0.05 && mh.acceptance < 0.95, "acceptance {}", mh.acceptance);
        let mean = post.draws.iter().sum::<f64>() / post.draws.len() as f64;
        let want = 32.7 / 20457.0;
        // Correlated chain: allow a generous multiple of the iid standard error.
        let sd = 32.7f64.sqrt() / 20457.0;
        assert!((mean - want).abs() < 12.0 * sd / (post.draws.len() as f64).sqrt(),
            "chain mean {mean} vs {want}");
    }

    #[test]
    fn theta_sampling_validates_inputs() {
        let prior: Measure<f64> = "gamma:1.7,2550".parse().unwrap();
        let normal_prior: Measure<f64> = "normal:0,1".parse().unwrap();
        let mut rng = RngStream::root(67).rng();
        assert!(matches!(
            sample_theta_posterior(
                Family::Exponential,
                &normal_prior,
                &[1.0],
                10,
                &ThetaSampler::Conjugate,
                &mut rng
            ),
            Err(ChisqError::ConjugateNeedsGammaPrior)
        ));
        assert!(matches!(
            sample_theta_posterior(
                Family::Exponential,
                &prior,
                &[1.0, -2.0],
                10,
                &ThetaSampler::Conjugate,
                &mut rng
            ),
            Err(ChisqError::NegativeData { index: 1 })
        ));
        assert!(matches!(
            sample_theta_posterior(
                Family::Exponential,
                &prior,
                &[1.0],
                0,
                &ThetaSampler::Conjugate,
                &mut rng
            ),
            Err(ChisqError::NoThetaDraws)
        ));
    }

    fn small_composite_settings() -> CompositeSettings<f64> {
        CompositeSettings {
            test: TestSettings { n_atoms: 300, replicates: 300, ..TestSettings::fixed(3.0, 0.51, 100.0) },
            bin_count: 4,
            theta_draws: 50,
            sampler: ThetaSampler::Conjugate,
        }
    }

    #[test]
    fn composite_smoke_run_is_coherent() {
        let mut rng = RngStream::root(71).rng();
        let rate = 0.00136;
        let data: Vec<f64> = (0..31).map(|_| f64::std_exp(&mut rng) / rate).collect();
        let prior: Measure<f64> = "gamma:1.7,2550".parse().unwrap();
        let settings = small_composite_settings();
        let stream = RngStream::root(73);
        let report =
            gof_composite(&data, Family::Exponential, &prior, &settings, &stream).unwrap();
        assert_eq!(report.gof.m, 31);
        assert_eq!(report.gof.alpha, 100.0);
        assert_eq!(report.gof.alpha_posterior, 131.0);
        assert_eq!(report.edges.len(), 3);
        assert!(report.edges.windows(2).all(|w| w[0] < w[1]));
        assert!(report.theta_min > 0.0);
        assert!((report.theta_hat - 1.7 / 2550.0).abs() < 1e-15);
        assert!(report.posterior_shape.unwrap() == 32.7);
        assert!(report.theta_posterior_mean > 0.0);
        assert!(report.mh.is_none());
        assert_eq!(report.gof.reference_bins.len(), 4);
        // Reproducible end to end.
        let again = gof_composite(&data, Family::Exponential, &prior, &settings, &stream).unwrap();
        assert_eq!(again.theta_min, report.theta_min);
        assert_eq!(again.gof.p_hat, report.gof.p_hat);
    }

    #[test]
    fn composite_single_theta_draw_is_theta_min() {
        let mut rng = RngStream::root(79).rng();
        let data: Vec<f64> = (0..20).map(|_| f64::std_exp(&mut rng) / 0.001).collect();
        let prior: Measure<f64> = "gamma:1.7,2550".parse().unwrap();
        let mut settings = small_composite_settings();
        settings.theta_draws = 1;
        let stream = RngStream::root(83);
        let report =
            gof_composite(&data, Family::Exponential, &prior, &settings, &stream).unwrap();
        // With one candidate the scan must pick it.
        assert_eq!(report.theta_min, report.theta_posterior_mean);
    }

    #[test]
    fn composite_validates_inputs() {
        let prior: Measure<f64> = "gamma:1.7,2550".parse().unwrap();
        let stream = RngStream::root(89);
        let mut settings = small_composite_settings();
        let empty: [f64; 0] = [];
        assert!(matches!(
            gof_composite(&empty, Family::Exponential, &prior, &settings, &stream),
            Err(ChisqError::EmptyData)
        ));
        assert!(matches!(
            gof_composite(&[1.0, -1.0], Family::Exponential, &prior, &settings, &stream),
            Err(ChisqError::NegativeData { index: 1 })
        ));
        settings.bin_count = 1;
        assert!(matches!(
            gof_composite(&[1.0], Family::Exponential, &prior, &settings, &stream),
            Err(ChisqError::InvalidBinCount(1))
        ));
    }

    #[test]
    fn exact_law_self_distance_runs() {
        let bins = seven_bins();
        let params = DpParams::new(10.0, std_normal()).unwrap();
        let mut rng = RngStream::root(97).rng();
        let data: Vec<f64> = (0..200).map(|_| f64::std_normal(&mut rng)).collect();
        let stream = RngStream::root(101);
        let law = posterior_self_distance_draws(
            &params,
            &data,
            &bins,
            Representation::ExactLaw,
            0,
            200,
            &stream,
        )
        .unwrap();
        assert_eq!(law.multiplier, 210.0);
        assert_eq!(law.distances.len(), 200);
        assert!(law.distances.min() >= 0.0);
        // Same stream, atom representation: different law object but same
        // multiplier and deterministic.
        let atoms = posterior_self_distance_draws(
            &params,
            &data,
            &bins,
            Representation::Atoms,
            300,
            100,
            &stream,
        )
        .unwrap();
        assert_eq!(atoms.multiplier, 210.0);
    }
}
