//! Stochastic least squares: `min_x E 0.5 (a'x - b)^2` with standard
//! Gaussian features and `b = a' truth + noise`.
//!
//! Two modes share one type: a streaming instance draws fresh samples from
//! the population, a finite-sum instance stores `N` generated samples. Per
//! default every coordinate is its own block.

use std::sync::Arc;

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::block::{BlockPartition, BlockPoint};
use crate::error::{Error, Result};
use crate::linalg;
use crate::problem::{ConstraintSet, ObjectiveValue, Regularizer, StochasticProblem};
use crate::seed::{self, stream};

/// One drawn sample: realized data in streaming mode, an index into the
/// stored rows in finite-sum mode.
#[derive(Debug, Clone)]
pub enum LsSample {
    Fresh { features: Vec<f64>, target: f64 },
    Index(usize),
}

#[derive(Debug, Clone)]
enum Mode {
    Streaming {
        nominal_samples: usize,
    },
    FiniteSum {
        /// N x n row-major.
        features: Vec<f64>,
        targets: Vec<f64>,
        /// Gram matrix (1/N) sum a a', n x n row-major.
        gram: Vec<f64>,
        /// (1/N) sum b a.
        lin: Vec<f64>,
    },
}

#[derive(Debug, Clone)]
pub struct LeastSquaresInstance {
    partition: Arc<BlockPartition>,
    truth: Vec<f64>,
    noise_std: f64,
    mode: Mode,
    reg: Regularizer,
    set: ConstraintSet,
}

impl LeastSquaresInstance {
    /// Population instance: a fresh sample per draw, truth a standard
    /// Gaussian vector; `nominal_samples` defines the epoch accounting.
    pub fn streaming(dim: usize, nominal_samples: usize, noise_std: f64, data_seed: u64) -> Self {
        let mut rng = seed::rng_for(data_seed, stream::DATA);
        let truth: Vec<f64> = (0..dim).map(|_| StandardNormal.sample(&mut rng)).collect();
        Self {
            partition: Arc::new(BlockPartition::coordinates(dim)),
            truth,
            noise_std,
            mode: Mode::Streaming { nominal_samples },
            reg: Regularizer::Zero,
            set: ConstraintSet::All,
        }
    }

    /// Finite-sum instance over `samples` stored rows drawn from the same
    /// population.
    pub fn finite_sum(dim: usize, samples: usize, noise_std: f64, data_seed: u64) -> Self {
        let mut rng = seed::rng_for(data_seed, stream::DATA);
        let truth: Vec<f64> = (0..dim).map(|_| StandardNormal.sample(&mut rng)).collect();
        let mut features = vec![0.0; samples * dim];
        let mut targets = vec![0.0; samples];
        for ell in 0..samples {
            let row = &mut features[ell * dim..(ell + 1) * dim];
            for v in row.iter_mut() {
                *v = StandardNormal.sample(&mut rng);
            }
            let noise: f64 = StandardNormal.sample(&mut rng);
            targets[ell] = row.iter().zip(&truth).map(|(a, t)| a * t).sum::<f64>() + noise_std * noise;
        }
        let mut gram = vec![0.0; dim * dim];
        let mut lin = vec![0.0; dim];
        for ell in 0..samples {
            let row = &features[ell * dim..(ell + 1) * dim];
            for i in 0..dim {
                lin[i] += targets[ell] * row[i];
                for j in 0..dim {
                    gram[i * dim + j] += row[i] * row[j];
                }
            }
        }
        let inv_n = 1.0 / samples as f64;
        gram.iter_mut().for_each(|v| *v *= inv_n);
        lin.iter_mut().for_each(|v| *v *= inv_n);
        Self {
            partition: Arc::new(BlockPartition::coordinates(dim)),
            truth,
            noise_std,
            mode: Mode::FiniteSum { features, targets, gram, lin },
            reg: Regularizer::Zero,
            set: ConstraintSet::All,
        }
    }

    /// Replaces the default one-coordinate-per-block partition.
    pub fn with_partition(mut self, partition: Arc<BlockPartition>) -> Result<Self> {
        if partition.total_dim() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                got: partition.total_dim(),
            });
        }
        self.partition = partition;
        Ok(self)
    }

    pub fn dim(&self) -> usize {
        self.truth.len()
    }

    pub fn truth(&self) -> &[f64] {
        &self.truth
    }

    pub fn truth_point(&self) -> BlockPoint {
        BlockPoint::new(self.partition.clone(), self.truth.clone()).expect("dims match")
    }

    pub fn noise_variance(&self) -> f64 {
        self.noise_std * self.noise_std
    }

    /// Gram matrix of the stored samples (finite-sum mode only).
    pub fn gram(&self) -> Option<&[f64]> {
        match &self.mode {
            Mode::FiniteSum { gram, .. } => Some(gram),
            Mode::Streaming { .. } => None,
        }
    }

    /// Exact minimizer of the finite sum via the normal equations.
    pub fn minimizer(&self) -> Result<BlockPoint> {
        match &self.mode {
            Mode::Streaming { .. } => {
                // The population risk is minimized by the truth itself.
                Ok(self.truth_point())
            }
            Mode::FiniteSum { gram, lin, .. } => {
                let x = linalg::cholesky_solve(gram, self.dim(), lin).ok_or_else(|| {
                    Error::InvalidArgument("sample Gram matrix is singular".into())
                })?;
                BlockPoint::new(self.partition.clone(), x)
            }
        }
    }

    fn sample_row<'a>(&'a self, sample: &'a LsSample) -> (&'a [f64], f64) {
        match sample {
            LsSample::Fresh { features, target } => (features, *target),
            LsSample::Index(ell) => match &self.mode {
                Mode::FiniteSum { features, targets, .. } => {
                    let n = self.dim();
                    (&features[ell * n..(ell + 1) * n], targets[*ell])
                }
                Mode::Streaming { .. } => unreachable!("index sample on streaming instance"),
            },
        }
    }

    fn residual<'a>(&'a self, x: &[f64], sample: &'a LsSample) -> (f64, &'a [f64]) {
        let (row, target) = self.sample_row(sample);
        let r = row.iter().zip(x).map(|(a, v)| a * v).sum::<f64>() - target;
        (r, row)
    }

    /// Mean loss of each point over the same `samples` fresh draws. Streams
    /// the evaluation set so all points see identical data without storing
    /// it.
    pub fn empirical_loss_many(
        &self,
        points: &[&BlockPoint],
        samples: usize,
        rng: &mut ChaCha8Rng,
    ) -> Vec<f64> {
        let n = self.dim();
        let mut acc = vec![0.0; points.len()];
        let mut row = vec![0.0; n];
        for _ in 0..samples {
            for v in row.iter_mut() {
                *v = StandardNormal.sample(rng);
            }
            let noise: f64 = StandardNormal.sample(rng);
            let target =
                row.iter().zip(&self.truth).map(|(a, t)| a * t).sum::<f64>() + self.noise_std * noise;
            for (a, p) in acc.iter_mut().zip(points) {
                let r = row.iter().zip(p.values()).map(|(ai, xi)| ai * xi).sum::<f64>() - target;
                *a += 0.5 * r * r;
            }
        }
        acc.iter_mut().for_each(|a| *a /= samples as f64);
        acc
    }

    /// Monte-Carlo estimate of the population loss at one point.
    pub fn empirical_loss(&self, x: &BlockPoint, samples: usize, rng: &mut ChaCha8Rng) -> ObjectiveValue {
        let value = self.empirical_loss_many(&[x], samples, rng)[0];
        ObjectiveValue::Estimate { value, samples }
    }

    pub fn distance_squared_to_truth(&self, x: &BlockPoint) -> f64 {
        x.values()
            .iter()
            .zip(&self.truth)
            .map(|(a, b)| (a - b) * (a - b))
            .sum()
    }
}

impl StochasticProblem for LeastSquaresInstance {
    type Sample = LsSample;

    fn partition(&self) -> &Arc<BlockPartition> {
        &self.partition
    }

    fn epoch_size(&self) -> usize {
        match &self.mode {
            Mode::Streaming { nominal_samples } => *nominal_samples,
            Mode::FiniteSum { targets, .. } => targets.len(),
        }
    }

    fn draw_batch(&self, rng: &mut ChaCha8Rng, m: usize) -> Vec<LsSample> {
        match &self.mode {
            Mode::Streaming { .. } => (0..m)
                .map(|_| {
                    let features: Vec<f64> =
                        (0..self.dim()).map(|_| StandardNormal.sample(rng)).collect();
                    let noise: f64 = StandardNormal.sample(rng);
                    let target = features.iter().zip(&self.truth).map(|(a, t)| a * t).sum::<f64>()
                        + self.noise_std * noise;
                    LsSample::Fresh { features, target }
                })
                .collect(),
            Mode::FiniteSum { targets, .. } => {
                let n = targets.len();
                (0..m).map(|_| LsSample::Index(rng.random_range(0..n))).collect()
            }
        }
    }

    fn full_batch(&self) -> Option<Vec<LsSample>> {
        match &self.mode {
            Mode::Streaming { .. } => None,
            Mode::FiniteSum { targets, .. } => Some((0..targets.len()).map(LsSample::Index).collect()),
        }
    }

    fn sample_partial_gradient(
        &self,
        block: usize,
        x: &BlockPoint,
        batch: &[LsSample],
        out: &mut [f64],
    ) -> Result<()> {
        if batch.is_empty() {
            return Err(Error::EmptyBatch);
        }
        self.partition.check_block(block)?;
        let range = self.partition.range(block);
        out.fill(0.0);
        for sample in batch {
            let (r, row) = self.residual(x.values(), sample);
            for (o, &a) in out.iter_mut().zip(&row[range.clone()]) {
                *o += a * r;
            }
        }
        let inv_m = 1.0 / batch.len() as f64;
        out.iter_mut().for_each(|o| *o *= inv_m);
        Ok(())
    }

    fn sample_objective(&self, x: &BlockPoint, batch: &[LsSample]) -> Result<f64> {
        if batch.is_empty() {
            return Err(Error::EmptyBatch);
        }
        let sum: f64 = batch
            .iter()
            .map(|s| {
                let (r, _) = self.residual(x.values(), s);
                0.5 * r * r
            })
            .sum();
        Ok(sum / batch.len() as f64)
    }

    fn full_partial_gradient(&self, block: usize, x: &BlockPoint, out: &mut [f64]) -> Result<()> {
        match &self.mode {
            Mode::Streaming { .. } => {
                // Population gradient: x - truth.
                self.partition.check_block(block)?;
                let range = self.partition.range(block);
                for ((o, &xi), &ti) in out.iter_mut().zip(&x.values()[range.clone()]).zip(&self.truth[range]) {
                    *o = xi - ti;
                }
                Ok(())
            }
            Mode::FiniteSum { gram, lin, .. } => {
                // Gram route: (G x - lin) restricted to the block; this is a
                // second evaluation path, independent of the per-sample one.
                self.partition.check_block(block)?;
                let n = self.dim();
                let range = self.partition.range(block);
                for (o, i) in out.iter_mut().zip(range) {
                    let gx: f64 = gram[i * n..(i + 1) * n]
                        .iter()
                        .zip(x.values())
                        .map(|(g, v)| g * v)
                        .sum();
                    *o = gx - lin[i];
                }
                Ok(())
            }
        }
    }

    fn objective(&self, x: &BlockPoint) -> ObjectiveValue {
        match &self.mode {
            Mode::Streaming { .. } => {
                // E 0.5 (a'x - b)^2 = 0.5 (||x - truth||^2 + noise variance).
                let d2 = self.distance_squared_to_truth(x);
                ObjectiveValue::Exact(0.5 * (d2 + self.noise_variance()))
            }
            Mode::FiniteSum { features, targets, .. } => {
                let n = self.dim();
                let mut sum = 0.0;
                for (ell, &b) in targets.iter().enumerate() {
                    let row = &features[ell * n..(ell + 1) * n];
                    let r = row.iter().zip(x.values()).map(|(a, v)| a * v).sum::<f64>() - b;
                    sum += 0.5 * r * r;
                }
                ObjectiveValue::Exact(sum / targets.len() as f64)
            }
        }
    }

    fn regularizer(&self, _block: usize) -> &Regularizer {
        &self.reg
    }

    fn constraint(&self, _block: usize) -> &ConstraintSet {
        &self.set
    }

    fn block_lipschitz(&self, block: usize, _x: &BlockPoint, batch: &[LsSample]) -> f64 {
        // Trace bound of the sampled block Gram: (1/m) sum_l ||a_{l,block}||^2,
        // exact for single-coordinate blocks and rank-one batches.
        let range = self.partition.range(block);
        let mut sum = 0.0;
        for sample in batch {
            let (row, _) = self.sample_row(sample);
            for &a in &row[range.clone()] {
                sum += a * a;
            }
        }
        (sum / batch.len() as f64).max(f64::MIN_POSITIVE)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::seed::rng_for;
    use crate::verify::gradient_check;

    #[test]
    fn streaming_population_objective_at_truth_is_noise_floor() {
        let p = LeastSquaresInstance::streaming(200, 10_000, 0.1, 3);
        let at_truth = p.objective(&p.truth_point()).value();
        assert!((at_truth - 0.005).abs() < 1e-15);
    }

    #[test]
    fn noiseless_sample_loss_at_truth_is_zero() {
        let p = LeastSquaresInstance::streaming(10, 100, 0.0, 5);
        let mut rng = rng_for(99, stream::EVAL);
        let batch = p.draw_batch(&mut rng, 8);
        let loss = p.sample_objective(&p.truth_point(), &batch).unwrap();
        assert!(loss.abs() < 1e-24);
    }

    #[test]
    fn single_sample_gradient_arithmetic() {
        // a = [1, 2], b = 0, x = [1, 1]: residual 3, coordinate 2 gradient 6.
        let p = LeastSquaresInstance::streaming(2, 10, 0.1, 1);
        let x = BlockPoint::new(p.partition().clone(), vec![1.0, 1.0]).unwrap();
        let batch = [LsSample::Fresh { features: vec![1.0, 2.0], target: 0.0 }];
        let mut g = [0.0];
        p.sample_partial_gradient(1, &x, &batch, &mut g).unwrap();
        assert!((g[0] - 6.0).abs() < 1e-15);
    }

    #[test]
    fn gradient_matches_finite_differences() {
        let p = LeastSquaresInstance::finite_sum(6, 30, 0.1, 7);
        let mut rng = rng_for(7, stream::EVAL);
        for trial in 0..5 {
            let vals: Vec<f64> = (0..6).map(|_| rng.random_range(-2.0..2.0)).collect();
            let x = BlockPoint::new(p.partition().clone(), vals).unwrap();
            let batch = p.draw_batch(&mut rng, 4);
            let err = gradient_check(&p, &x, &batch, 1e-5).unwrap();
            assert!(err <= 1e-7, "trial {trial}: rel err {err}");
        }
    }

    #[test]
    fn full_batch_gradient_matches_gram_route() {
        let p = LeastSquaresInstance::finite_sum(8, 40, 0.1, 11);
        let mut rng = rng_for(13, stream::EVAL);
        let vals: Vec<f64> = (0..8).map(|_| rng.random_range(-1.0..1.0)).collect();
        let x = BlockPoint::new(p.partition().clone(), vals).unwrap();
        let full = p.full_batch().unwrap();
        for block in 0..8 {
            let mut sampled = [0.0];
            let mut exact = [0.0];
            p.sample_partial_gradient(block, &x, &full, &mut sampled).unwrap();
            p.full_partial_gradient(block, &x, &mut exact).unwrap();
            let rel = (sampled[0] - exact[0]).abs() / exact[0].abs().max(1.0);
            assert!(rel <= 1e-12, "block {block}: {rel}");
        }
    }

    #[test]
    fn block_lipschitz_bounds_gradient_variation() {
        // For x, y differing only in block i and a fixed batch,
        // ||g_i(x) - g_i(y)|| <= L_i ||x_i - y_i|| (1 + 1e-8).
        let part = Arc::new(BlockPartition::new(vec![3, 2, 5]).unwrap());
        let p = LeastSquaresInstance::finite_sum(10, 25, 0.1, 17)
            .with_partition(part.clone())
            .unwrap();
        let mut rng = rng_for(23, stream::EVAL);
        for block in 0..3 {
            for _ in 0..10 {
                let base: Vec<f64> = (0..10).map(|_| rng.random_range(-2.0..2.0)).collect();
                let mut x = BlockPoint::new(part.clone(), base).unwrap();
                let mut y = x.clone();
                for v in y.block_mut(block) {
                    *v += rng.random_range(-1.0..1.0);
                }
                let batch = p.draw_batch(&mut rng, 6);
                let dim = part.block_dim(block);
                let mut gx = vec![0.0; dim];
                let mut gy = vec![0.0; dim];
                p.sample_partial_gradient(block, &x, &batch, &mut gx).unwrap();
                p.sample_partial_gradient(block, &y, &batch, &mut gy).unwrap();
                let lip = p.block_lipschitz(block, &x, &batch);
                let dg: f64 = gx.iter().zip(&gy).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt();
                let dx: f64 = x
                    .block(block)
                    .iter()
                    .zip(y.block(block))
                    .map(|(a, b)| (a - b) * (a - b))
                    .sum::<f64>()
                    .sqrt();
                assert!(dg <= lip * dx * (1.0 + 1e-8), "block {block}: {dg} vs {}", lip * dx);
                x.block_mut(block).copy_from_slice(y.block(block));
            }
        }
    }

    #[test]
    fn minimizer_solves_normal_equations() {
        let p = LeastSquaresInstance::finite_sum(5, 50, 0.1, 29);
        let xstar = p.minimizer().unwrap();
        let mut g = [0.0];
        for block in 0..5 {
            p.full_partial_gradient(block, &xstar, &mut g).unwrap();
            assert!(g[0].abs() < 1e-10, "residual gradient {}", g[0]);
        }
    }

    #[test]
    fn empirical_loss_shares_data_across_points() {
        let p = LeastSquaresInstance::streaming(4, 100, 0.1, 31);
        let a = p.truth_point();
        let b = BlockPoint::zeros(p.partition().clone());
        let mut rng1 = rng_for(41, stream::EVAL);
        let mut rng2 = rng_for(41, stream::EVAL);
        let joint = p.empirical_loss_many(&[&a, &b], 500, &mut rng1);
        let single = p.empirical_loss_many(&[&a], 500, &mut rng2);
        assert_eq!(joint[0], single[0]);
    }
}
