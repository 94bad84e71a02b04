//! Bilinear logistic regression over matrix samples:
//! `min_{U,V,b} (1/N) sum_l log(1 + exp(-y_l (tr(U' X_l V) + b)))`
//! with three blocks: the factor `U` (rows x rank), the factor `V`
//! (cols x rank), and the scalar intercept.

use std::sync::Arc;

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use super::logistic::{log1p_exp, sigmoid};
use crate::block::{BlockPartition, BlockPoint};
use crate::error::{Error, Result};
use crate::problem::{ConstraintSet, ObjectiveValue, Regularizer, StochasticProblem};
use crate::seed::{self, stream};

#[derive(Debug, Clone)]
pub struct BilinearLogisticInstance {
    partition: Arc<BlockPartition>,
    rows: usize,
    cols: usize,
    rank: usize,
    /// N stacked samples, each `rows * cols` row-major.
    features: Vec<f64>,
    labels: Vec<f64>,
}

impl BilinearLogisticInstance {
    pub fn from_parts(
        rows: usize,
        cols: usize,
        rank: usize,
        features: Vec<f64>,
        labels: Vec<f64>,
    ) -> Result<Self> {
        if rows == 0 || cols == 0 || rank == 0 {
            return Err(Error::InvalidArgument("matrix sizes and rank must be positive".into()));
        }
        if labels.is_empty() || features.len() != labels.len() * rows * cols {
            return Err(Error::DimensionMismatch {
                expected: labels.len() * rows * cols,
                got: features.len(),
            });
        }
        if labels.iter().any(|&y| y != 1.0 && y != -1.0) {
            return Err(Error::InvalidArgument("labels must be +1 or -1".into()));
        }
        let partition = Arc::new(BlockPartition::new(vec![rows * rank, cols * rank, 1])?);
        Ok(Self { partition, rows, cols, rank, features, labels })
    }

    /// Synthetic matrix samples around a rank-structured signal: class `y`
    /// has mean `y * S` for a random unit-norm rank-`truth_rank` matrix `S`,
    /// plus standard Gaussian noise.
    pub fn synthetic(
        rows: usize,
        cols: usize,
        samples: usize,
        rank: usize,
        truth_rank: usize,
        data_seed: u64,
    ) -> Result<Self> {
        if samples == 0 || samples % 2 != 0 {
            return Err(Error::InvalidArgument("sample count must be positive and even".into()));
        }
        let mut rng = seed::rng_for(data_seed, stream::DATA);
        let u0: Vec<f64> = (0..rows * truth_rank).map(|_| StandardNormal.sample(&mut rng)).collect();
        let v0: Vec<f64> = (0..cols * truth_rank).map(|_| StandardNormal.sample(&mut rng)).collect();
        let mut signal = vec![0.0; rows * cols];
        for i in 0..rows {
            for j in 0..cols {
                for r in 0..truth_rank {
                    signal[i * cols + j] += u0[r * rows + i] * v0[r * cols + j];
                }
            }
        }
        let norm = signal.iter().map(|v| v * v).sum::<f64>().sqrt();
        signal.iter_mut().for_each(|v| *v /= norm);

        let mut features = vec![0.0; samples * rows * cols];
        let mut labels = vec![0.0; samples];
        for ell in 0..samples {
            let y = if ell < samples / 2 { 1.0 } else { -1.0 };
            labels[ell] = y;
            let row = &mut features[ell * rows * cols..(ell + 1) * rows * cols];
            for (v, &s) in row.iter_mut().zip(&signal) {
                let z: f64 = StandardNormal.sample(&mut rng);
                *v = y * s + 0.5 * z;
            }
        }
        Self::from_parts(rows, cols, rank, features, labels)
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn rank(&self) -> usize {
        self.rank
    }

    pub fn sample_count(&self) -> usize {
        self.labels.len()
    }

    pub fn labels(&self) -> &[f64] {
        &self.labels
    }

    /// Stacked samples, each `rows * cols` row-major.
    pub fn features(&self) -> &[f64] {
        &self.features
    }

    fn sample_matrix(&self, ell: usize) -> &[f64] {
        let e = self.rows * self.cols;
        &self.features[ell * e..(ell + 1) * e]
    }

    /// `X v_c` for every factor column, written as a rows x rank
    /// column-major matrix.
    fn times_v(&self, ell: usize, v: &[f64], out: &mut [f64]) {
        let x = self.sample_matrix(ell);
        out.fill(0.0);
        for r in 0..self.rank {
            let vr = &v[r * self.cols..(r + 1) * self.cols];
            let or = &mut out[r * self.rows..(r + 1) * self.rows];
            for (i, o) in or.iter_mut().enumerate() {
                let row = &x[i * self.cols..(i + 1) * self.cols];
                *o = row.iter().zip(vr).map(|(a, b)| a * b).sum();
            }
        }
    }

    /// `X' u_c` for every factor column, written as a cols x rank
    /// column-major matrix.
    fn transpose_times_u(&self, ell: usize, u: &[f64], out: &mut [f64]) {
        let x = self.sample_matrix(ell);
        out.fill(0.0);
        for r in 0..self.rank {
            let ur = &u[r * self.rows..(r + 1) * self.rows];
            let or = &mut out[r * self.cols..(r + 1) * self.cols];
            for (i, &ui) in ur.iter().enumerate() {
                let row = &x[i * self.cols..(i + 1) * self.cols];
                for (o, &a) in or.iter_mut().zip(row) {
                    *o += ui * a;
                }
            }
        }
    }

    /// `tr(U' X_l V) + b`.
    pub fn score(&self, x: &BlockPoint, ell: usize) -> f64 {
        let mut tv = vec![0.0; self.rows * self.rank];
        self.times_v(ell, x.block(1), &mut tv);
        x.block(0).iter().zip(&tv).map(|(u, t)| u * t).sum::<f64>() + x.block(2)[0]
    }

    /// Fraction of samples whose sign matches the label.
    pub fn accuracy(&self, x: &BlockPoint) -> f64 {
        let hits = (0..self.labels.len())
            .filter(|&ell| self.score(x, ell) * self.labels[ell] > 0.0)
            .count();
        hits as f64 / self.labels.len() as f64
    }
}

impl StochasticProblem for BilinearLogisticInstance {
    type Sample = usize;

    fn partition(&self) -> &Arc<BlockPartition> {
        &self.partition
    }

    fn epoch_size(&self) -> usize {
        self.labels.len()
    }

    fn draw_batch(&self, rng: &mut ChaCha8Rng, m: usize) -> Vec<usize> {
        let n = self.labels.len();
        (0..m).map(|_| rng.random_range(0..n)).collect()
    }

    fn full_batch(&self) -> Option<Vec<usize>> {
        Some((0..self.labels.len()).collect())
    }

    fn sample_partial_gradient(
        &self,
        block: usize,
        x: &BlockPoint,
        batch: &[usize],
        out: &mut [f64],
    ) -> Result<()> {
        self.sample_gradient_and_lipschitz(block, x, batch, out).map(|_| ())
    }

    fn sample_gradient_and_lipschitz(
        &self,
        block: usize,
        x: &BlockPoint,
        batch: &[usize],
        out: &mut [f64],
    ) -> Result<f64> {
        if batch.is_empty() {
            return Err(Error::EmptyBatch);
        }
        self.partition.check_block(block)?;
        out.fill(0.0);
        let inv_m = 1.0 / batch.len() as f64;
        let mut lip = 0.0;
        match block {
            0 | 1 => {
                let dim = self.partition.block_dim(block);
                let mut contraction = vec![0.0; dim];
                for &ell in batch {
                    // The relevant contraction doubles as the score factor:
                    // score = <U, XV> + b = <V, X'U> + b.
                    if block == 0 {
                        self.times_v(ell, x.block(1), &mut contraction);
                    } else {
                        self.transpose_times_u(ell, x.block(0), &mut contraction);
                    }
                    let score = x.block(block).iter().zip(&contraction).map(|(f, c)| f * c).sum::<f64>()
                        + x.block(2)[0];
                    let y = self.labels[ell];
                    let coeff = -y * sigmoid(-y * score);
                    for (o, &c) in out.iter_mut().zip(&contraction) {
                        *o += coeff * c;
                    }
                    lip += 0.25 * contraction.iter().map(|c| c * c).sum::<f64>();
                }
                out.iter_mut().for_each(|o| *o *= inv_m);
                Ok((lip * inv_m).max(f64::MIN_POSITIVE))
            }
            2 => {
                let mut g = 0.0;
                for &ell in batch {
                    let y = self.labels[ell];
                    g -= y * sigmoid(-y * self.score(x, ell));
                }
                out[0] = g * inv_m;
                Ok(0.25)
            }
            _ => unreachable!("three blocks"),
        }
    }

    fn sample_objective(&self, x: &BlockPoint, batch: &[usize]) -> Result<f64> {
        if batch.is_empty() {
            return Err(Error::EmptyBatch);
        }
        let sum: f64 = batch
            .iter()
            .map(|&ell| log1p_exp(-self.labels[ell] * self.score(x, ell)))
            .sum();
        Ok(sum / batch.len() as f64)
    }

    fn objective(&self, x: &BlockPoint) -> ObjectiveValue {
        let full: Vec<usize> = (0..self.labels.len()).collect();
        ObjectiveValue::Exact(self.sample_objective(x, &full).expect("non-empty"))
    }

    fn regularizer(&self, _block: usize) -> &Regularizer {
        &Regularizer::Zero
    }

    fn constraint(&self, _block: usize) -> &ConstraintSet {
        &ConstraintSet::All
    }

    fn block_lipschitz(&self, block: usize, x: &BlockPoint, batch: &[usize]) -> f64 {
        match block {
            2 => 0.25,
            _ => {
                let dim = self.partition.block_dim(block);
                let mut contraction = vec![0.0; dim];
                let mut lip = 0.0;
                for &ell in batch {
                    if block == 0 {
                        self.times_v(ell, x.block(1), &mut contraction);
                    } else {
                        self.transpose_times_u(ell, x.block(0), &mut contraction);
                    }
                    lip += 0.25 * contraction.iter().map(|c| c * c).sum::<f64>();
                }
                (lip / batch.len() as f64).max(f64::MIN_POSITIVE)
            }
        }
    }
}
