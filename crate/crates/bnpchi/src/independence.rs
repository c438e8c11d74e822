//! Test of independence for paired observations on a two-way grid of cells.
//!
//! A realization of the random joint measure assigns probability p_ij to
//! grid cell (i, j); its row and column margins r_i and c_j are the cell
//! sums. The distance from independence is
//!
//! ```text
//! D = mult * sum_ij (p_ij - r_i c_j)^2 / (r_i c_j)
//! ```
//!
//! the same quadratic form as the goodness-of-fit distance, but against the
//! realization's own product measure. The test estimates Pr(D <= c) under
//! the posterior joint process and rejects independence when it falls
//! strictly below q.

use serde::Serialize;
use thiserror::Error;

use crate::bivariate::BivariateMeasure;
use crate::chisq::{
    binomial_se, decide, resolve_alpha, validate_threshold_and_belief, Calibration,
    CalibrationFailure, Decision, DistanceLaw, TestSettings,
};
use crate::dp::{measure_on_partition, sample_dp_decreasing, DiscreteRandomMeasure, DpError, DpParams};
use crate::mc::{map_replicates, EmpiricalSample, McError, RngStream};
use crate::numeric::neumaier_sum;
use crate::partition::Grid;
use crate::scalar::Scalar;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum IndepError {
    #[error("cell vector has {got} entries, expected {expected}")]
    LengthMismatch { expected: usize, got: usize },
    #[error("cell {index} must be a finite nonnegative probability")]
    BadCell { index: usize },
    #[error("cell probabilities sum to {sum}, not 1")]
    NotNormalized { sum: f64 },
    #[error("{axis} margin {index} of the realization is zero; the product reference is undefined")]
    ZeroMargin { axis: &'static str, index: usize },
    #[error("{axis} margin {index} of the base measure is zero; every realization would fail")]
    ZeroBaseMargin { axis: &'static str, index: usize },
    #[error("paired data must be nonempty")]
    EmptyData,
    #[error(transparent)]
    Calibration(#[from] CalibrationFailure),
    #[error(transparent)]
    Dp(#[from] DpError),
    #[error(transparent)]
    Mc(#[from] McError),
}

/// A probability vector over the cells of a two-way grid, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct GridProbabilities<F> {
    cells: Vec<F>,
    rows: usize,
    cols: usize,
}

impl<F: Scalar> GridProbabilities<F> {
    /// Validates shape, nonnegativity, and total mass one.
    pub fn new(cells: Vec<F>, rows: usize, cols: usize) -> Result<Self, IndepError> {
        if cells.len() != rows * cols || rows == 0 || cols == 0 {
            return Err(IndepError::LengthMismatch { expected: rows * cols, got: cells.len() });
        }
        if let Some(index) = cells.iter().position(|x| !(x.is_finite() && *x >= F::zero())) {
            return Err(IndepError::BadCell { index });
        }
        let sum = neumaier_sum(cells.iter().copied());
        let tol = F::of(1e-9).max(F::eps() * F::of(64.0));
        if (sum - F::one()).abs() > tol {
            return Err(IndepError::NotNormalized { sum: sum.to_f64_lossy() });
        }
        Ok(Self { cells, rows, cols })
    }

    /// Bins a discrete random measure onto the grid.
    pub fn from_realization(
        measure: &DiscreteRandomMeasure<F, [F; 2]>,
        grid: &Grid<F>,
    ) -> Result<Self, IndepError> {
        Self::new(measure_on_partition(measure, grid), grid.rows(), grid.cols())
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn cells(&self) -> &[F] {
        &self.cells
    }

    pub fn cell(&self, row: usize, col: usize) -> F {
        self.cells[row * self.cols + col]
    }

    /// Row margins, computed by summing cells so additivity is exact.
    pub fn row_margins(&self) -> Vec<F> {
        (0..self.rows)
            .map(|i| {
                let mut acc = F::zero();
                for j in 0..self.cols {
                    acc += self.cell(i, j);
                }
                acc
            })
            .collect()
    }

    /// Column margins, computed by summing cells so additivity is exact.
    pub fn col_margins(&self) -> Vec<F> {
        (0..self.cols)
            .map(|j| {
                let mut acc = F::zero();
                for i in 0..self.rows {
                    acc += self.cell(i, j);
                }
                acc
            })
            .collect()
    }
}

/// The distance of a joint cell vector from its own product measure.
///
/// Every row and column margin must be positive; a realization that misses
/// an entire row or column has no product reference.
pub fn independence_statistic<F: Scalar>(
    mult: F,
    probs: &GridProbabilities<F>,
) -> Result<F, IndepError> {
    let r = probs.row_margins();
    let c = probs.col_margins();
    if let Some(index) = r.iter().position(|&x| x <= F::zero()) {
        return Err(IndepError::ZeroMargin { axis: "row", index });
    }
    if let Some(index) = c.iter().position(|&x| x <= F::zero()) {
        return Err(IndepError::ZeroMargin { axis: "col", index });
    }
    let mut acc = F::zero();
    for i in 0..probs.rows() {
        for j in 0..probs.cols() {
            let reference = r[i] * c[j];
            let d = probs.cell(i, j) - reference;
            acc += d * d / reference;
        }
    }
    Ok(mult * acc)
}

/// Statistic draws under the given joint process.
///
/// A realization whose margins miss a row or column entirely is redrawn
/// from a fresh substream, up to 16 attempts per replicate, before the
/// zero-margin error surfaces. The retry keeps the run deterministic and
/// independent of worker count.
fn statistic_draws<F: Scalar>(
    params: &DpParams<F, BivariateMeasure<F>>,
    grid: &Grid<F>,
    n_atoms: usize,
    replicates: usize,
    stream: &RngStream,
) -> Result<DistanceLaw<F>, IndepError> {
    let mult = params.alpha();
    let per: Vec<(F, Vec<F>)> = map_replicates(replicates, stream, |i, _rng| {
        let replicate_stream = stream.child(i as u64);
        let mut last = None;
        for attempt in 0..16 {
            let mut rng = replicate_stream.child(attempt).rng();
            let realization = sample_dp_decreasing(params, n_atoms, &mut rng)?;
            let probs = GridProbabilities::from_realization(&realization, grid)?;
            match independence_statistic(mult, &probs) {
                Ok(d) => return Ok((d, probs.cells)),
                Err(e @ IndepError::ZeroMargin { .. }) => last = Some(e),
                Err(e) => return Err(e),
            }
        }
        Err(last.expect("16 attempts recorded an error"))
    })?;
    let k = grid.cell_count();
    let nf = F::of(replicates.max(1) as f64);
    let mean_bins: Vec<F> =
        (0..k).map(|i| neumaier_sum(per.iter().map(|(_, p)| p[i])) / nf).collect();
    let distances = EmpiricalSample::new(per.into_iter().map(|(d, _)| d).collect())?;
    Ok(DistanceLaw { distances, mean_bins, multiplier: mult })
}

/// Everything an independence run reports.
#[derive(Debug, Clone, Serialize)]
pub struct IndepReport<F> {
    pub seed: u64,
    /// Number of observed pairs.
    pub m: usize,
    pub alpha: F,
    /// Updated mass alpha + m.
    pub alpha_posterior: F,
    pub c: F,
    pub q: F,
    /// Monte Carlo estimate of Pr(D <= c) under the posterior.
    pub p_hat: F,
    pub standard_error: F,
    pub replicates: usize,
    pub n_atoms: usize,
    pub decision: Decision,
    pub rows: usize,
    pub cols: usize,
    /// Empirical cell frequencies of the pairs, row-major.
    pub observed_cells: Vec<F>,
    /// Posterior realization cell probabilities, averaged over replicates.
    pub mean_posterior_cells: Vec<F>,
    pub distance_mean: F,
    pub distance_median: F,
    pub distance_min: F,
    pub distance_max: F,
    pub calibration: Option<Calibration<F>>,
}

/// Test of independence for `pairs` with the given base joint measure.
///
/// The base's own margins must all be positive, otherwise no realization
/// can have a product reference. Substream layout matches the
/// goodness-of-fit test: child 0 calibration, child 1 posterior draws.
pub fn independence_test<F: Scalar>(
    pairs: &[[F; 2]],
    base: &BivariateMeasure<F>,
    grid: &Grid<F>,
    settings: &TestSettings<F>,
    stream: &RngStream,
) -> Result<IndepReport<F>, IndepError> {
    if pairs.is_empty() {
        return Err(IndepError::EmptyData);
    }
    validate_threshold_and_belief(settings.c, settings.q)?;
    let base_cells = GridProbabilities::new(
        base.cell_probabilities(grid),
        grid.rows(),
        grid.cols(),
    )?;
    if let Some(index) = base_cells.row_margins().iter().position(|&x| x <= F::zero()) {
        return Err(IndepError::ZeroBaseMargin { axis: "row", index });
    }
    if let Some(index) = base_cells.col_margins().iter().position(|&x| x <= F::zero()) {
        return Err(IndepError::ZeroBaseMargin { axis: "col", index });
    }
    let cal_replicates = match &settings.alpha {
        crate::chisq::AlphaChoice::Calibrated(spec) => spec.replicates,
        crate::chisq::AlphaChoice::Fixed(_) => 0,
    };
    let (alpha, calibration) = resolve_alpha::<F, IndepError, _>(
        &settings.alpha,
        settings.c,
        settings.q,
        &stream.child(0),
        |a, s| {
            let params = DpParams::new(a, base.clone())?;
            Ok(statistic_draws(&params, grid, settings.n_atoms, cal_replicates, s)?.distances)
        },
    )?;
    let prior = DpParams::new(alpha, base.clone())?;
    let posterior = prior.posterior(pairs)?;
    let law =
        statistic_draws(&posterior, grid, settings.n_atoms, settings.replicates, &stream.child(1))?;
    let p_hat = law.distances.probability_le(settings.c);
    Ok(IndepReport {
        seed: stream.seed(),
        m: pairs.len(),
        alpha,
        alpha_posterior: law.multiplier,
        c: settings.c,
        q: settings.q,
        p_hat,
        standard_error: binomial_se(p_hat, settings.replicates),
        replicates: settings.replicates,
        n_atoms: settings.n_atoms,
        decision: decide(p_hat, settings.q),
        rows: grid.rows(),
        cols: grid.cols(),
        observed_cells: grid.frequencies(pairs),
        mean_posterior_cells: law.mean_bins,
        distance_mean: law.distances.mean(),
        distance_median: law.distances.median(),
        distance_min: law.distances.min(),
        distance_max: law.distances.max(),
        calibration,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::partition::Partition;

    fn grid_2x3() -> Grid<f64> {
        Grid::new(Partition::new(vec![0.0]).unwrap(), Partition::new(vec![-1.0, 1.0]).unwrap())
    }

    #[test]
    fn margins_are_exact_cell_sums() {
        let cells = vec![0.1, 0.2, 0.05, 0.25, 0.15, 0.25];
        let p = GridProbabilities::new(cells.clone(), 2, 3).unwrap();
        let r = p.row_margins();
        let c = p.col_margins();
        assert_eq!(r[0], cells[0] + cells[1] + cells[2]);
        assert_eq!(r[1], cells[3] + cells[4] + cells[5]);
        assert_eq!(c[0], cells[0] + cells[3]);
        assert_eq!(c[1], cells[1] + cells[4]);
        assert_eq!(c[2], cells[2] + cells[5]);
        assert_eq!(p.cell(1, 2), 0.25);
    }

    #[test]
    fn validation_catches_shape_sign_and_mass() {
        assert!(matches!(
            GridProbabilities::new(vec![0.5, 0.5], 2, 2),
            Err(IndepError::LengthMismatch { expected: 4, got: 2 })
        ));
        assert!(matches!(
            GridProbabilities::new(vec![0.5, 0.6, -0.1, 0.0], 2, 2),
            Err(IndepError::BadCell { index: 2 })
        ));
        assert!(matches!(
            GridProbabilities::new(vec![0.5, 0.2, 0.1, 0.1], 2, 2),
            Err(IndepError::NotNormalized { .. })
        ));
    }

    #[test]
    fn product_measure_has_zero_distance() {
        // Dyadic margins make the outer product exact in floating point.
        let r = [0.25, 0.75];
        let c = [0.5, 0.25, 0.25];
        let cells: Vec<f64> = r.iter().flat_map(|ri| c.iter().map(move |cj| ri * cj)).collect();
        let p = GridProbabilities::new(cells, 2, 3).unwrap();
        assert_eq!(independence_statistic(100.0, &p).unwrap(), 0.0);
    }

    #[test]
    fn two_by_two_closed_form() {
        // Uniform margins, dependence 0.05: each term (0.05)^2 / 0.25.
        let p = GridProbabilities::new(vec![0.3f64, 0.2, 0.2, 0.3], 2, 2).unwrap();
        let d = independence_statistic(100.0, &p).unwrap();
        assert!((d - 4.0).abs() < 1e-12);
    }

    #[test]
    fn statistic_matches_term_by_term_oracle() {
        let cells =
            vec![0.10f64, 0.05, 0.15, 0.02, 0.08, 0.10, 0.20, 0.05, 0.05, 0.05, 0.05, 0.10];
        let p = GridProbabilities::new(cells.clone(), 3, 4).unwrap();
        let got = independence_statistic(7.0, &p).unwrap();
        let r = p.row_margins();
        let c = p.col_margins();
        let mut want = 0.0;
        for i in 0..3 {
            for j in 0..4 {
                want += (cells[i * 4 + j] - r[i] * c[j]).powi(2) / (r[i] * c[j]);
            }
        }
        want *= 7.0;
        assert!((got - want).abs() < 1e-12, "{got} vs {want}");
    }

    #[test]
    fn statistic_is_invariant_under_row_swap() {
        let cells = vec![0.10, 0.05, 0.15, 0.02, 0.08, 0.10, 0.20, 0.05, 0.05, 0.05, 0.05, 0.10];
        let swapped: Vec<f64> =
            cells[4..8].iter().chain(&cells[0..4]).chain(&cells[8..12]).copied().collect();
        let a = independence_statistic(
            3.0,
            &GridProbabilities::new(cells, 3, 4).unwrap(),
        )
        .unwrap();
        let b = independence_statistic(
            3.0,
            &GridProbabilities::new(swapped, 3, 4).unwrap(),
        )
        .unwrap();
        assert!((a - b).abs() < 1e-14);
    }

    #[test]
    fn empty_row_or_column_is_an_error() {
        let p = GridProbabilities::new(vec![0.5, 0.5, 0.0, 0.0], 2, 2).unwrap();
        assert!(matches!(
            independence_statistic(1.0, &p),
            Err(IndepError::ZeroMargin { axis: "row", index: 1 })
        ));
        let p = GridProbabilities::new(vec![0.5, 0.0, 0.5, 0.0], 2, 2).unwrap();
        assert!(matches!(
            independence_statistic(1.0, &p),
            Err(IndepError::ZeroMargin { axis: "col", index: 1 })
        ));
    }

    #[test]
    fn single_atom_realization_has_empty_margins() {
        let m = DiscreteRandomMeasure::new(vec![[0.5f64, 0.0]], vec![1.0]).unwrap();
        let p = GridProbabilities::from_realization(&m, &grid_2x3()).unwrap();
        assert_eq!(p.cells().iter().filter(|&&x| x > 0.0).count(), 1);
        assert!(matches!(
            independence_statistic(1.0, &p),
            Err(IndepError::ZeroMargin { .. })
        ));
    }

    fn standard_base() -> BivariateMeasure<f64> {
        "bvnormal:0,0,1,0,1".parse().unwrap()
    }

    fn sample_pairs(rho: f64, m: usize, seed: u64) -> Vec<[f64; 2]> {
        let b: BivariateMeasure<f64> =
            format!("bvnormal:0,0,1,{rho},1").parse().unwrap();
        let mut rng = RngStream::root(seed).rng();
        (0..m).map(|_| b.sample(&mut rng)).collect()
    }

    #[test]
    fn draws_are_deterministic_with_retries() {
        let params = DpParams::new(2.0, standard_base()).unwrap();
        let stream = RngStream::root(103);
        let a = statistic_draws(&params, &grid_2x3(), 40, 60, &stream).unwrap();
        let b = statistic_draws(&params, &grid_2x3(), 40, 60, &stream).unwrap();
        assert_eq!(a.distances.values(), b.distances.values());
        assert_eq!(a.mean_bins, b.mean_bins);
        // Small atom counts on a 6-cell grid make empty margins likely
        // enough that the retry path is exercised, yet runs still finish.
        assert_eq!(a.distances.len(), 60);
        let total: f64 = a.mean_bins.iter().sum();
        assert!((total - 1.0).abs() < 1e-9);
    }

    #[test]
    fn independent_data_with_fixed_mass_keeps_the_null() {
        let pairs = sample_pairs(0.0, 60, 107);
        let grid = grid_2x3();
        let mut settings = TestSettings::fixed(1e9, 0.5, 30.0);
        settings.n_atoms = 300;
        settings.replicates = 200;
        let report =
            independence_test(&pairs, &standard_base(), &grid, &settings, &RngStream::root(109))
                .unwrap();
        assert_eq!(report.m, 60);
        assert_eq!(report.alpha_posterior, 90.0);
        assert_eq!(report.rows, 2);
        assert_eq!(report.cols, 3);
        assert_eq!(report.p_hat, 1.0);
        assert_eq!(report.decision, Decision::NoEvidenceToReject);
        let observed: f64 = report.observed_cells.iter().sum();
        assert!((observed - 1.0).abs() < 1e-12);
        let mean: f64 = report.mean_posterior_cells.iter().sum();
        assert!((mean - 1.0).abs() < 1e-9);
        assert!(report.calibration.is_none());
    }

    #[test]
    fn strongly_dependent_data_rejects() {
        // Pairs on the diagonal concentrate the joint posterior far from
        // any product measure.
        let mut rng = RngStream::root(113).rng();
        let pairs: Vec<[f64; 2]> = (0..80)
            .map(|_| {
                let x = f64::std_normal(&mut rng);
                [x, x]
            })
            .collect();
        let grid = Grid::new(
            Partition::new(vec![-0.5, 0.5]).unwrap(),
            Partition::new(vec![-0.5, 0.5]).unwrap(),
        );
        let mut settings = TestSettings::fixed(20.0, 0.5, 20.0);
        settings.n_atoms = 300;
        settings.replicates = 200;
        let report =
            independence_test(&pairs, &standard_base(), &grid, &settings, &RngStream::root(127))
                .unwrap();
        assert_eq!(report.decision, Decision::Reject, "p_hat {}", report.p_hat);
        assert!(report.p_hat < 0.5);
    }

    #[test]
    fn base_with_empty_margin_fails_fast() {
        // An empirical base whose points never enter the second x-row.
        let base = BivariateMeasure::empirical(vec![[-2.0f64, -2.0], [-2.0, 0.0], [-2.0, 2.0]])
            .unwrap();
        let grid = grid_2x3();
        let settings = TestSettings::fixed(3.0, 0.5, 10.0);
        let err = independence_test(
            &[[0.0, 0.0]],
            &base,
            &grid,
            &settings,
            &RngStream::root(131),
        )
        .unwrap_err();
        assert!(matches!(err, IndepError::ZeroBaseMargin { axis: "row", .. }));
    }

    #[test]
    fn empty_pairs_are_rejected() {
        let settings = TestSettings::fixed(3.0, 0.5, 10.0);
        let empty: [[f64; 2]; 0] = [];
        assert!(matches!(
            independence_test(&empty, &standard_base(), &grid_2x3(), &settings, &RngStream::root(1)),
            Err(IndepError::EmptyData)
        ));
    }
}
