//! Binary logistic regression `min_{w,b} (1/N) sum log(1 + exp(-y (x'w + b)))`
//! over stored samples, with every coordinate of `(w, b)` its own block (the
//! bias is the last block).

use std::sync::Arc;

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::block::{BlockPartition, BlockPoint};
use crate::error::{Error, Result};
use crate::problem::{ConstraintSet, ObjectiveValue, Regularizer, StochasticProblem};
use crate::seed::{self, stream};

/// `ln(1 + e^z)` without overflow.
pub(crate) fn log1p_exp(z: f64) -> f64 {
    if z > 0.0 {
        z + (-z).exp().ln_1p()
    } else {
        z.exp().ln_1p()
    }
}

/// Standard sigmoid, evaluated stably.
pub(crate) fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

#[derive(Debug, Clone)]
pub struct LogisticInstance {
    partition: Arc<BlockPartition>,
    /// N x dim row-major.
    features: Vec<f64>,
    /// Labels in {-1, +1}.
    labels: Vec<f64>,
    dim: usize,
}

impl LogisticInstance {
    pub fn from_parts(features: Vec<f64>, labels: Vec<f64>, dim: usize) -> Result<Self> {
        if labels.is_empty() || dim == 0 {
            return Err(Error::InvalidArgument("logistic instance needs samples and features".into()));
        }
        if features.len() != labels.len() * dim {
            return Err(Error::DimensionMismatch {
                expected: labels.len() * dim,
                got: features.len(),
            });
        }
        if labels.iter().any(|&y| y != 1.0 && y != -1.0) {
            return Err(Error::InvalidArgument("labels must be +1 or -1".into()));
        }
        if features.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidArgument("features must be finite".into()));
        }
        Ok(Self {
            partition: Arc::new(BlockPartition::coordinates(dim + 1)),
            features,
            labels,
            dim,
        })
    }

    /// Two-Gaussian synthetic data: `samples/2` positive rows with entries
    /// from N(5,1) and `samples/2` negative rows from N(-5,1).
    pub fn synthetic(dim: usize, samples: usize, data_seed: u64) -> Result<Self> {
        if samples == 0 || samples % 2 != 0 {
            return Err(Error::InvalidArgument("sample count must be positive and even".into()));
        }
        let mut rng = seed::rng_for(data_seed, stream::DATA);
        let mut features = vec![0.0; samples * dim];
        let mut labels = vec![0.0; samples];
        for ell in 0..samples {
            let (mean, label) = if ell < samples / 2 { (5.0, 1.0) } else { (-5.0, -1.0) };
            labels[ell] = label;
            for v in &mut features[ell * dim..(ell + 1) * dim] {
                let z: f64 = StandardNormal.sample(&mut rng);
                *v = mean + z;
            }
        }
        Self::from_parts(features, labels, dim)
    }

    pub fn sample_count(&self) -> usize {
        self.labels.len()
    }

    /// Feature dimension (excluding the bias coordinate).
    pub fn feature_dim(&self) -> usize {
        self.dim
    }

    pub fn features(&self) -> &[f64] {
        &self.features
    }

    pub fn labels(&self) -> &[f64] {
        &self.labels
    }

    fn margin(&self, x: &[f64], ell: usize) -> f64 {
        let row = &self.features[ell * self.dim..(ell + 1) * self.dim];
        let score = row.iter().zip(x).map(|(a, w)| a * w).sum::<f64>() + x[self.dim];
        self.labels[ell] * score
    }
}

impl StochasticProblem for LogisticInstance {
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
        if batch.is_empty() {
            return Err(Error::EmptyBatch);
        }
        self.partition.check_block(block)?;
        let mut g = 0.0;
        for &ell in batch {
            let weight = self.labels[ell] * sigmoid(-self.margin(x.values(), ell));
            let coord = if block < self.dim {
                self.features[ell * self.dim + block]
            } else {
                1.0
            };
            g -= weight * coord;
        }
        out[0] = g / batch.len() as f64;
        Ok(())
    }

    fn sample_objective(&self, x: &BlockPoint, batch: &[usize]) -> Result<f64> {
        if batch.is_empty() {
            return Err(Error::EmptyBatch);
        }
        let sum: f64 = batch.iter().map(|&ell| log1p_exp(-self.margin(x.values(), ell))).sum();
        Ok(sum / batch.len() as f64)
    }

    fn objective(&self, x: &BlockPoint) -> ObjectiveValue {
        let n = self.labels.len();
        let sum: f64 = (0..n).map(|ell| log1p_exp(-self.margin(x.values(), ell))).sum();
        ObjectiveValue::Exact(sum / n as f64)
    }

    fn regularizer(&self, _block: usize) -> &Regularizer {
        &Regularizer::Zero
    }

    fn constraint(&self, _block: usize) -> &ConstraintSet {
        &ConstraintSet::All
    }

    fn block_lipschitz(&self, block: usize, _x: &BlockPoint, batch: &[usize]) -> f64 {
        // The sigmoid derivative is at most 1/4, so the coordinate Lipschitz
        // constant is (1/4m) sum_l x_{l,i}^2, and 1/4 for the bias.
        if block >= self.dim {
            return 0.25;
        }
        let sum: f64 = batch
            .iter()
            .map(|&ell| {
                let a = self.features[ell * self.dim + block];
                a * a
            })
            .sum();
        (0.25 * sum / batch.len() as f64).max(f64::MIN_POSITIVE)
    }
}
