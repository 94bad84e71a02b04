//! The problem-oracle interface shared by every solver.

use rand_chacha::ChaCha8Rng;

use crate::block::{BlockPartition, BlockPoint};
use crate::error::{Error, Result};

/// Separable per-block regularizer.
#[derive(Debug, Clone, PartialEq)]
pub enum Regularizer {
    Zero,
    /// `weight * ||v||_1` with `weight >= 0`.
    L1 { weight: f64 },
}

impl Regularizer {
    pub fn l1(weight: f64) -> Self {
        assert!(weight >= 0.0, "l1 weight must be nonnegative");
        Regularizer::L1 { weight }
    }

    pub fn value(&self, v: &[f64]) -> f64 {
        match self {
            Regularizer::Zero => 0.0,
            Regularizer::L1 { weight } => weight * v.iter().map(|x| x.abs()).sum::<f64>(),
        }
    }

    /// Lipschitz constant of the regularizer on a block of dimension `dim`;
    /// for `weight * ||.||_1` this is `weight * sqrt(dim)`.
    pub fn lipschitz_const(&self, dim: usize) -> f64 {
        match self {
            Regularizer::Zero => 0.0,
            Regularizer::L1 { weight } => weight * (dim as f64).sqrt(),
        }
    }

    /// The minimum-norm subgradient: `weight * sign(v)` componentwise, 0 at 0.
    pub fn subgradient(&self, v: &[f64], out: &mut [f64]) {
        assert_eq!(v.len(), out.len());
        match self {
            Regularizer::Zero => out.fill(0.0),
            Regularizer::L1 { weight } => {
                for (o, &x) in out.iter_mut().zip(v) {
                    *o = weight * x.signum() * f64::from(x != 0.0);
                }
            }
        }
    }
}

/// Convex constraint set for one block.
#[derive(Debug, Clone, PartialEq)]
pub enum ConstraintSet {
    /// The whole space; no projection needed.
    All,
    /// Coordinatewise bounds, `lower <= upper`.
    Box { lower: Vec<f64>, upper: Vec<f64> },
    /// Euclidean ball of nonnegative radius.
    Ball { center: Vec<f64>, radius: f64 },
}

impl ConstraintSet {
    pub fn boxed(lower: Vec<f64>, upper: Vec<f64>) -> Result<Self> {
        if lower.len() != upper.len() {
            return Err(Error::DimensionMismatch { expected: lower.len(), got: upper.len() });
        }
        if lower.iter().zip(&upper).any(|(l, u)| l > u) {
            return Err(Error::InvalidArgument("box requires lower <= upper".into()));
        }
        Ok(ConstraintSet::Box { lower, upper })
    }

    pub fn ball(center: Vec<f64>, radius: f64) -> Result<Self> {
        if radius < 0.0 {
            return Err(Error::InvalidArgument("ball radius must be nonnegative".into()));
        }
        Ok(ConstraintSet::Ball { center, radius })
    }

    pub fn is_whole_space(&self) -> bool {
        matches!(self, ConstraintSet::All)
    }

    fn check_dim(&self, v: &[f64]) -> Result<()> {
        let expected = match self {
            ConstraintSet::All => return Ok(()),
            ConstraintSet::Box { lower, .. } => lower.len(),
            ConstraintSet::Ball { center, .. } => center.len(),
        };
        if v.len() == expected {
            Ok(())
        } else {
            Err(Error::DimensionMismatch { expected, got: v.len() })
        }
    }

    /// Exact membership test.
    pub fn contains(&self, v: &[f64]) -> Result<bool> {
        self.check_dim(v)?;
        Ok(match self {
            ConstraintSet::All => true,
            ConstraintSet::Box { lower, upper } => v
                .iter()
                .zip(lower.iter().zip(upper))
                .all(|(x, (l, u))| l <= x && x <= u),
            ConstraintSet::Ball { center, radius } => {
                let d2: f64 = v.iter().zip(center).map(|(x, c)| (x - c) * (x - c)).sum();
                d2.sqrt() <= *radius
            }
        })
    }
}

/// Objective value, flagged by how it was obtained.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ObjectiveValue {
    /// Closed form or full finite sum.
    Exact(f64),
    /// Monte-Carlo estimate over `samples` fresh draws.
    Estimate { value: f64, samples: usize },
}

impl ObjectiveValue {
    pub fn value(&self) -> f64 {
        match *self {
            ObjectiveValue::Exact(v) => v,
            ObjectiveValue::Estimate { value, .. } => value,
        }
    }
}

/// Oracle bundle for `min E_xi f(x;xi) + sum_i r_i(x_i)  s.t.  x_i in X_i`.
///
/// A problem is immutable once built; oracles hold no interior mutability, so
/// concurrent calls are safe as long as each caller owns its generator and
/// its point.
pub trait StochasticProblem {
    /// One drawn sample: an index into stored data for finite sums, or the
    /// realized data itself for streaming problems.
    type Sample;

    fn partition(&self) -> &std::sync::Arc<BlockPartition>;

    /// Number of samples that counts as one epoch.
    fn epoch_size(&self) -> usize;

    /// Draws `m` i.i.d. samples.
    fn draw_batch(&self, rng: &mut ChaCha8Rng, m: usize) -> Vec<Self::Sample>;

    /// The deterministic full batch, when the problem is a finite sum.
    fn full_batch(&self) -> Option<Vec<Self::Sample>>;

    /// Mini-batch estimate of the partial gradient of the smooth part with
    /// respect to `block`, written into `out` (length = block dimension).
    fn sample_partial_gradient(
        &self,
        block: usize,
        x: &BlockPoint,
        batch: &[Self::Sample],
        out: &mut [f64],
    ) -> Result<()>;

    /// Mini-batch estimate of the smooth part of the objective.
    fn sample_objective(&self, x: &BlockPoint, batch: &[Self::Sample]) -> Result<f64>;

    /// Exact partial gradient of the smooth part, when available. The default
    /// routes through the full batch; instances with a cheaper closed form
    /// override it.
    fn full_partial_gradient(&self, block: usize, x: &BlockPoint, out: &mut [f64]) -> Result<()> {
        let batch = self
            .full_batch()
            .ok_or(Error::NoFullGradient("problem is not a finite sum"))?;
        self.sample_partial_gradient(block, x, &batch, out)
    }

    /// Full objective including regularizers.
    fn objective(&self, x: &BlockPoint) -> ObjectiveValue;

    fn regularizer(&self, block: usize) -> &Regularizer;

    fn constraint(&self, block: usize) -> &ConstraintSet;

    /// Lipschitz constant (in `block`) of the sampled partial gradient at `x`
    /// for this batch; strictly positive.
    fn block_lipschitz(&self, block: usize, x: &BlockPoint, batch: &[Self::Sample]) -> f64;

    /// Gradient and Lipschitz constant in one call. Instances whose two
    /// oracles share most of their work override this.
    fn sample_gradient_and_lipschitz(
        &self,
        block: usize,
        x: &BlockPoint,
        batch: &[Self::Sample],
        out: &mut [f64],
    ) -> Result<f64> {
        self.sample_partial_gradient(block, x, batch, out)?;
        Ok(self.block_lipschitz(block, x, batch))
    }

    /// Lipschitz constant of the whole sampled gradient; used by solvers that
    /// update all blocks at once. The default sums the per-block constants,
    /// which is valid for the trace-style bounds the instances use.
    fn full_lipschitz(&self, x: &BlockPoint, batch: &[Self::Sample]) -> f64 {
        (0..self.partition().block_count())
            .map(|i| self.block_lipschitz(i, x, batch))
            .sum()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_regularizer_has_zero_lipschitz() {
        assert_eq!(Regularizer::Zero.lipschitz_const(17), 0.0);
    }

    #[test]
    fn l1_lipschitz_is_weight_times_sqrt_dim() {
        let r = Regularizer::l1(2.0);
        assert!((r.lipschitz_const(9) - 6.0).abs() < 1e-15);
    }

    #[test]
    fn l1_subgradient_uses_zero_at_zero() {
        let r = Regularizer::l1(0.5);
        let mut out = [0.0; 3];
        r.subgradient(&[2.0, 0.0, -3.0], &mut out);
        assert_eq!(out, [0.5, 0.0, -0.5]);
    }

    #[test]
    fn membership_examples() {
        assert!(ConstraintSet::All.contains(&[1e30, -4.0]).unwrap());
        let b = ConstraintSet::boxed(vec![0.0, 0.0], vec![1.0, 1.0]).unwrap();
        assert!(b.contains(&[0.5, 1.0]).unwrap());
        assert!(!b.contains(&[0.5, 1.5]).unwrap());
        let ball = ConstraintSet::ball(vec![0.0, 0.0], 1.0).unwrap();
        // ||(0.8, 0.8)|| = 1.131... > 1
        assert!(!ball.contains(&[0.8, 0.8]).unwrap());
    }

    #[test]
    fn membership_dimension_mismatch_errors() {
        let ball = ConstraintSet::ball(vec![0.0, 0.0], 1.0).unwrap();
        assert!(ball.contains(&[0.0]).is_err());
    }

    #[test]
    fn degenerate_box_and_invalid_sets() {
        assert!(ConstraintSet::boxed(vec![1.0], vec![1.0]).is_ok());
        assert!(ConstraintSet::boxed(vec![2.0], vec![1.0]).is_err());
        assert!(ConstraintSet::ball(vec![0.0], -1.0).is_err());
    }
}
