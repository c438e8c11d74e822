//! Deterministic Monte Carlo engine.
//!
//! Reproducibility contract: a [`RngStream`] is identified by a root seed and
//! a path of child indices. Every replicate draws from its own child stream,
//! so results are bit-identical for a given seed regardless of how many
//! worker threads execute the replicates or in what order they finish.

use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;
use rayon::prelude::*;
use thiserror::Error;

use crate::numeric::neumaier_sum;
use crate::scalar::Scalar;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum McError {
    #[error("empirical sample must contain at least one value")]
    EmptySample,
    #[error("empirical sample value at index {index} is not finite")]
    NonFiniteValue { index: usize },
}

/// SplitMix64 finalizer; the avalanche step used to derive child keys.
#[inline]
fn mix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Addressable random stream: a root seed plus a path of child indices.
///
/// `child(i)` never collides with `child(j)` for i != j, and the key
/// derivation is pure, so any node of the tree can be reconstructed from the
/// seed and path alone.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RngStream {
    seed: u64,
    path: Vec<u64>,
}

impl RngStream {
    /// Root of the stream tree for a user-facing seed.
    pub fn root(seed: u64) -> Self {
        Self { seed, path: Vec::new() }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn path(&self) -> &[u64] {
        &self.path
    }

    /// Child stream `index` of this node.
    pub fn child(&self, index: u64) -> Self {
        let mut path = Vec::with_capacity(self.path.len() + 1);
        path.extend_from_slice(&self.path);
        path.push(index);
        Self { seed: self.seed, path }
    }

    /// Materializes the generator for this node.
    pub fn rng(&self) -> ChaCha12Rng {
        let mut h = mix64(self.seed);
        for &part in &self.path {
            h = mix64(h ^ mix64(part));
        }
        let mut key = [0u8; 32];
        for (i, chunk) in key.chunks_exact_mut(8).enumerate() {
            chunk.copy_from_slice(&mix64(h ^ (i as u64 + 1)).to_le_bytes());
        }
        ChaCha12Rng::from_seed(key)
    }
}

/// A batch of simulated statistic values with its sorted view cached.
#[derive(Debug, Clone, PartialEq)]
pub struct EmpiricalSample<F> {
    values: Vec<F>,
    sorted: Vec<F>,
}

impl<F: Scalar> EmpiricalSample<F> {
    /// Validates finiteness and caches the sorted order.
    pub fn new(values: Vec<F>) -> Result<Self, McError> {
        if values.is_empty() {
            return Err(McError::EmptySample);
        }
        if let Some(index) = values.iter().position(|v| !v.is_finite()) {
            return Err(McError::NonFiniteValue { index });
        }
        let mut sorted = values.clone();
        sorted.sort_unstable_by(|a, b| a.partial_cmp(b).expect("values checked finite"));
        Ok(Self { values, sorted })
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Values in generation order.
    pub fn values(&self) -> &[F] {
        &self.values
    }

    /// Values in ascending order.
    pub fn sorted(&self) -> &[F] {
        &self.sorted
    }

    /// Fraction of values at or below `c`: the empirical cdf evaluated at `c`.
    pub fn probability_le(&self, c: F) -> F {
        let count = self.sorted.partition_point(|v| *v <= c);
        F::of(count as f64) / F::of(self.len() as f64)
    }

    pub fn min(&self) -> F {
        self.sorted[0]
    }

    pub fn max(&self) -> F {
        self.sorted[self.len() - 1]
    }

    pub fn mean(&self) -> F {
        neumaier_sum(self.values.iter().copied()) / F::of(self.len() as f64)
    }

    /// Unbiased sample variance; zero for a single value.
    pub fn variance(&self) -> F {
        let n = self.len();
        if n < 2 {
            return F::zero();
        }
        let m = self.mean();
        let ss = neumaier_sum(self.values.iter().map(|&v| (v - m) * (v - m)));
        ss / F::of((n - 1) as f64)
    }

    /// Midpoint-convention median.
    pub fn median(&self) -> F {
        let n = self.len();
        if n % 2 == 1 {
            self.sorted[n / 2]
        } else {
            (self.sorted[n / 2 - 1] + self.sorted[n / 2]) / F::of(2.0)
        }
    }

    /// Two-sided Kolmogorov-Smirnov distance between this sample and a
    /// reference cdf: sup over the sample points of the larger one-sided gap.
    pub fn ks_distance(&self, cdf: impl Fn(F) -> F) -> F {
        let n = F::of(self.len() as f64);
        let mut d = F::zero();
        for (i, &x) in self.sorted.iter().enumerate() {
            let fx = cdf(x);
            let hi = F::of((i + 1) as f64) / n - fx;
            let lo = fx - F::of(i as f64) / n;
            d = d.max(hi).max(lo);
        }
        d
    }
}

/// Runs `replicates` independent tasks, each on child stream `i` of `stream`,
/// and collects results in replicate order.
///
/// Execution is parallel; the output (including which error surfaces when
/// several replicates fail) is deterministic because the first failing index
/// is selected after all tasks finish.
pub fn map_replicates<T, E, Task>(
    replicates: usize,
    stream: &RngStream,
    task: Task,
) -> Result<Vec<T>, E>
where
    Task: Fn(usize, &mut ChaCha12Rng) -> Result<T, E> + Sync,
    T: Send,
    E: Send,
{
    let results: Vec<Result<T, E>> = (0..replicates)
        .into_par_iter()
        .map(|i| {
            let mut rng = stream.child(i as u64).rng();
            task(i, &mut rng)
        })
        .collect();
    let mut out = Vec::with_capacity(replicates);
    for r in results {
        out.push(r?);
    }
    Ok(out)
}

/// `map_replicates` specialized to scalar statistics, packaged as an
/// [`EmpiricalSample`].
pub fn run_replicates<F, E, Task>(
    replicates: usize,
    stream: &RngStream,
    task: Task,
) -> Result<EmpiricalSample<F>, RunError<E>>
where
    F: Scalar,
    Task: Fn(usize, &mut ChaCha12Rng) -> Result<F, E> + Sync,
    E: Send,
{
    let values = map_replicates(replicates, stream, task).map_err(RunError::Task)?;
    EmpiricalSample::new(values).map_err(RunError::Collect)
}

/// Error of [`run_replicates`]: either a replicate task failed or the
/// collected values do not form a valid sample.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum RunError<E> {
    #[error("replicate failed: {0}")]
    Task(E),
    #[error("invalid sample: {0}")]
    Collect(McError),
}

pub use crate::special::{chi_squared_cdf, chi_squared_quantile};
