//! Shared test fixtures: a tiny deterministic quadratic problem with
//! explicit curvature, regularizers, and constraints.

// Each integration test binary uses a different subset of the fixtures.
#![allow(dead_code)]

use std::sync::Arc;

use blockgrad::{
    BlockPartition, BlockPoint, ConstraintSet, ObjectiveValue, Regularizer, Result,
    StochasticProblem,
};
use rand_chacha::ChaCha8Rng;

/// `F(x) = 0.5 x'Qx - c'x + offset` as a one-sample finite sum. The
/// per-block Lipschitz constants are supplied explicitly, so worked examples
/// can pin them exactly.
pub struct ToyQuadratic {
    partition: Arc<BlockPartition>,
    q: Vec<f64>,
    lin: Vec<f64>,
    offset: f64,
    block_lip: Vec<f64>,
    regs: Vec<Regularizer>,
    sets: Vec<ConstraintSet>,
}

impl ToyQuadratic {
    pub fn new(dims: Vec<usize>, q: Vec<f64>, lin: Vec<f64>, block_lip: Vec<f64>) -> Self {
        let partition = Arc::new(BlockPartition::new(dims).unwrap());
        let n = partition.total_dim();
        assert_eq!(q.len(), n * n);
        assert_eq!(lin.len(), n);
        assert_eq!(block_lip.len(), partition.block_count());
        let blocks = partition.block_count();
        Self {
            partition,
            q,
            lin,
            offset: 0.0,
            block_lip,
            regs: vec![Regularizer::Zero; blocks],
            sets: vec![ConstraintSet::All; blocks],
        }
    }

    /// `0.5 (x1 - 1)^2 + 0.5 (x2 - 2)^2 + x1 x2`, two one-dimensional blocks
    /// with unit per-block curvature.
    pub fn coupled() -> Self {
        let mut toy = Self::new(
            vec![1, 1],
            vec![1.0, 1.0, 1.0, 1.0],
            vec![1.0, 2.0],
            vec![1.0, 1.0],
        );
        toy.offset = 2.5;
        toy
    }

    pub fn with_regularizers(mut self, regs: Vec<Regularizer>) -> Self {
        assert_eq!(regs.len(), self.partition.block_count());
        self.regs = regs;
        self
    }

    pub fn with_constraints(mut self, sets: Vec<ConstraintSet>) -> Self {
        assert_eq!(sets.len(), self.partition.block_count());
        self.sets = sets;
        self
    }

    pub fn point(&self, values: Vec<f64>) -> BlockPoint {
        BlockPoint::new(self.partition.clone(), values).unwrap()
    }
}

impl StochasticProblem for ToyQuadratic {
    type Sample = ();

    fn partition(&self) -> &Arc<BlockPartition> {
        &self.partition
    }

    fn epoch_size(&self) -> usize {
        1
    }

    fn draw_batch(&self, _rng: &mut ChaCha8Rng, m: usize) -> Vec<()> {
        vec![(); m]
    }

    fn full_batch(&self) -> Option<Vec<()>> {
        Some(vec![()])
    }

    fn sample_partial_gradient(
        &self,
        block: usize,
        x: &BlockPoint,
        _batch: &[()],
        out: &mut [f64],
    ) -> Result<()> {
        let n = self.partition.total_dim();
        for (o, i) in out.iter_mut().zip(self.partition.range(block)) {
            let qx: f64 = self.q[i * n..(i + 1) * n]
                .iter()
                .zip(x.values())
                .map(|(a, b)| a * b)
                .sum();
            *o = qx - self.lin[i];
        }
        Ok(())
    }

    fn sample_objective(&self, x: &BlockPoint, _batch: &[()]) -> Result<f64> {
        Ok(self.objective_smooth(x))
    }

    fn objective(&self, x: &BlockPoint) -> ObjectiveValue {
        let reg: f64 = (0..self.partition.block_count())
            .map(|b| self.regs[b].value(x.block(b)))
            .sum();
        ObjectiveValue::Exact(self.objective_smooth(x) + reg)
    }

    fn regularizer(&self, block: usize) -> &Regularizer {
        &self.regs[block]
    }

    fn constraint(&self, block: usize) -> &ConstraintSet {
        &self.sets[block]
    }

    fn block_lipschitz(&self, block: usize, _x: &BlockPoint, _batch: &[()]) -> f64 {
        self.block_lip[block]
    }
}

impl ToyQuadratic {
    fn objective_smooth(&self, x: &BlockPoint) -> f64 {
        let n = self.partition.total_dim();
        let v = x.values();
        let mut quad = 0.0;
        for i in 0..n {
            let qx: f64 = self.q[i * n..(i + 1) * n].iter().zip(v).map(|(a, b)| a * b).sum();
            quad += v[i] * qx;
        }
        0.5 * quad - self.lin.iter().zip(v).map(|(a, b)| a * b).sum::<f64>() + self.offset
    }
}

/// Max absolute componentwise difference.
pub fn max_abs_diff(a: &BlockPoint, b: &BlockPoint) -> f64 {
    a.values()
        .iter()
        .zip(b.values())
        .map(|(x, y)| (x - y).abs())
        .fold(0.0, f64::max)
}
