//! Finite measurable partitions of the line and the plane.
//!
//! A [`Partition`] with edges e_1 < ... < e_k induces the k + 1 right-closed
//! cells (-inf, e_1], (e_1, e_2], ..., (e_k, +inf). A [`Grid`] is the product
//! of two partitions with cells indexed row-major (x-cell major).

use thiserror::Error;

use crate::scalar::Scalar;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum PartitionError {
    #[error("partition needs at least one edge")]
    NoEdges,
    #[error("edge at index {index} is not finite")]
    NonFiniteEdge { index: usize },
    #[error("edges must be strictly increasing; violation at index {index}")]
    NotIncreasing { index: usize },
}

/// Cut points on the real line defining right-closed bins.
#[derive(Debug, Clone, PartialEq)]
pub struct Partition<F> {
    edges: Vec<F>,
}

impl<F: Scalar> Partition<F> {
    pub fn new(edges: Vec<F>) -> Result<Self, PartitionError> {
        if edges.is_empty() {
            return Err(PartitionError::NoEdges);
        }
        for (index, e) in edges.iter().enumerate() {
            if !e.is_finite() {
                return Err(PartitionError::NonFiniteEdge { index });
            }
            if index > 0 && !(edges[index - 1] < *e) {
                return Err(PartitionError::NotIncreasing { index });
            }
        }
        Ok(Self { edges })
    }

    pub fn edges(&self) -> &[F] {
        &self.edges
    }

    /// Number of cells: edges + 1.
    pub fn bin_count(&self) -> usize {
        self.edges.len() + 1
    }

    /// Index of the cell containing `x`.
    ///
    /// Cells are right-closed, so `x` equal to an edge lands in the cell
    /// ending at that edge. `x` must not be NaN.
    #[inline]
    pub fn bin_of(&self, x: F) -> usize {
        debug_assert!(!x.is_nan());
        self.edges.partition_point(|e| *e < x)
    }

    /// Empirical cell frequencies of a data set (counts over len).
    pub fn frequencies(&self, data: &[F]) -> Vec<F> {
        let mut counts = vec![0usize; self.bin_count()];
        for &x in data {
            counts[self.bin_of(x)] += 1;
        }
        let n = F::of(data.len().max(1) as f64);
        counts.iter().map(|&c| F::of(c as f64) / n).collect()
    }
}

/// Product partition of the plane; cell (i, j) is x-cell i crossed with
/// y-cell j, flattened as i * cols + j.
#[derive(Debug, Clone, PartialEq)]
pub struct Grid<F> {
    x: Partition<F>,
    y: Partition<F>,
}

impl<F: Scalar> Grid<F> {
    pub fn new(x: Partition<F>, y: Partition<F>) -> Self {
        Self { x, y }
    }

    pub fn x(&self) -> &Partition<F> {
        &self.x
    }

    pub fn y(&self) -> &Partition<F> {
        &self.y
    }

    /// Number of x-cells (rows).
    pub fn rows(&self) -> usize {
        self.x.bin_count()
    }

    /// Number of y-cells (columns).
    pub fn cols(&self) -> usize {
        self.y.bin_count()
    }

    pub fn cell_count(&self) -> usize {
        self.rows() * self.cols()
    }

    #[inline]
    pub fn cell_of(&self, point: &[F; 2]) -> usize {
        self.x.bin_of(point[0]) * self.cols() + self.y.bin_of(point[1])
    }

    /// Empirical cell frequencies of paired data.
    pub fn frequencies(&self, data: &[[F; 2]]) -> Vec<F> {
        let mut counts = vec![0usize; self.cell_count()];
        for p in data {
            counts[self.cell_of(p)] += 1;
        }
        let n = F::of(data.len().max(1) as f64);
        counts.iter().map(|&c| F::of(c as f64) / n).collect()
    }
}

/// Anything that assigns atoms to finitely many cells.
///
/// Lets the random-measure machinery work identically over line partitions
/// (univariate atoms) and grids (paired atoms).
pub trait BinSpace<A>: Sync {
    fn cells(&self) -> usize;
    fn index_of(&self, atom: &A) -> usize;
}

impl<F: Scalar> BinSpace<F> for Partition<F> {
    fn cells(&self) -> usize {
        self.bin_count()
    }

    #[inline]
    fn index_of(&self, atom: &F) -> usize {
        self.bin_of(*atom)
    }
}

impl<F: Scalar> BinSpace<[F; 2]> for Grid<F> {
    fn cells(&self) -> usize {
        self.cell_count()
    }

    #[inline]
    fn index_of(&self, atom: &[F; 2]) -> usize {
        self.cell_of(atom)
    }
}
