//! Block-structured vectors.
//!
//! The decision variable is a flat `Vec<f64>` partitioned into `s` disjoint
//! contiguous blocks. Matrix-shaped blocks (factor matrices) are stored
//! flattened column-major inside their block; the shape lives with the
//! problem, not here.

use std::ops::Range;
use std::sync::Arc;

use crate::error::{Error, Result};

/// Disjoint partition of `n` coordinates into contiguous blocks.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BlockPartition {
    dims: Vec<usize>,
    offsets: Vec<usize>,
    total: usize,
}

impl BlockPartition {
    /// Builds a partition from per-block dimensions. Every dimension must be
    /// positive and there must be at least one block.
    pub fn new(dims: Vec<usize>) -> Result<Self> {
        if dims.is_empty() {
            return Err(Error::InvalidArgument("partition needs at least one block".into()));
        }
        if dims.contains(&0) {
            return Err(Error::InvalidArgument("block dimensions must be positive".into()));
        }
        let mut offsets = Vec::with_capacity(dims.len());
        let mut total = 0;
        for &d in &dims {
            offsets.push(total);
            total += d;
        }
        Ok(Self { dims, offsets, total })
    }

    /// One block per coordinate.
    pub fn coordinates(n: usize) -> Self {
        Self::new(vec![1; n]).expect("n must be positive")
    }

    /// A single block covering all `n` coordinates.
    pub fn single(n: usize) -> Self {
        Self::new(vec![n]).expect("n must be positive")
    }

    pub fn block_count(&self) -> usize {
        self.dims.len()
    }

    pub fn total_dim(&self) -> usize {
        self.total
    }

    pub fn block_dim(&self, block: usize) -> usize {
        self.dims[block]
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    /// Index range of `block` within the flat vector.
    pub fn range(&self, block: usize) -> Range<usize> {
        let start = self.offsets[block];
        start..start + self.dims[block]
    }

    pub fn check_block(&self, block: usize) -> Result<()> {
        if block < self.dims.len() {
            Ok(())
        } else {
            Err(Error::BlockIndex { index: block, count: self.dims.len() })
        }
    }
}

/// A point of the decision space together with its partition.
#[derive(Debug, Clone, PartialEq)]
pub struct BlockPoint {
    partition: Arc<BlockPartition>,
    values: Vec<f64>,
}

impl BlockPoint {
    pub fn new(partition: Arc<BlockPartition>, values: Vec<f64>) -> Result<Self> {
        if values.len() != partition.total_dim() {
            return Err(Error::DimensionMismatch {
                expected: partition.total_dim(),
                got: values.len(),
            });
        }
        Ok(Self { partition, values })
    }

    pub fn zeros(partition: Arc<BlockPartition>) -> Self {
        let n = partition.total_dim();
        Self { partition, values: vec![0.0; n] }
    }

    pub fn partition(&self) -> &Arc<BlockPartition> {
        &self.partition
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    /// View of block `block`. Panics if out of range; see [`Self::try_block`].
    pub fn block(&self, block: usize) -> &[f64] {
        &self.values[self.partition.range(block)]
    }

    /// Mutable view of block `block`; writes touch only this block's entries.
    pub fn block_mut(&mut self, block: usize) -> &mut [f64] {
        let range = self.partition.range(block);
        &mut self.values[range]
    }

    pub fn try_block(&self, block: usize) -> Result<&[f64]> {
        self.partition.check_block(block)?;
        Ok(self.block(block))
    }

    pub fn is_finite(&self) -> bool {
        self.values.iter().all(|v| v.is_finite())
    }

    pub fn norm(&self) -> f64 {
        self.values.iter().map(|v| v * v).sum::<f64>().sqrt()
    }

    /// Squared Euclidean distance to another point of the same dimension.
    pub fn distance_squared(&self, other: &BlockPoint) -> f64 {
        assert_eq!(self.values.len(), other.values.len());
        self.values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| (a - b) * (a - b))
            .sum()
    }
}
