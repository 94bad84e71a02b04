//! Stepsize and batch-size schedules and the block update order.

use rand::seq::SliceRandom;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};

/// Base stepsize rule as a function of the iteration counter `k >= 1`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum StepsizeKind {
    /// `theta / sqrt(k)`.
    DimSqrt { theta: f64 },
    /// `theta / (sqrt(k) * max(ln k, 1))`; the `max` removes the singular
    /// first step and keeps the schedule nonincreasing.
    DimSqrtLog { theta: f64 },
    /// `theta / k`.
    DimLinear { theta: f64 },
    /// `theta / sqrt(horizon)` for every `k`, for runs with a predetermined
    /// iteration count.
    FixedHorizon { theta: f64, horizon: usize },
    /// Reciprocal of the sampled per-block Lipschitz constant.
    LipschitzOnly,
}

/// Stepsize schedule, optionally capped by the sampled Lipschitz constant:
/// `alpha = min(base(k), 1/L)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepsizeSchedule {
    pub kind: StepsizeKind,
    pub cap_by_lipschitz: bool,
}

impl StepsizeSchedule {
    pub fn dim_sqrt(theta: f64) -> Self {
        Self { kind: StepsizeKind::DimSqrt { theta }, cap_by_lipschitz: true }
    }

    pub fn dim_sqrt_log(theta: f64) -> Self {
        Self { kind: StepsizeKind::DimSqrtLog { theta }, cap_by_lipschitz: true }
    }

    pub fn dim_linear(theta: f64) -> Self {
        Self { kind: StepsizeKind::DimLinear { theta }, cap_by_lipschitz: true }
    }

    pub fn fixed_horizon(theta: f64, horizon: usize) -> Self {
        Self { kind: StepsizeKind::FixedHorizon { theta, horizon }, cap_by_lipschitz: true }
    }

    pub fn lipschitz_only() -> Self {
        Self { kind: StepsizeKind::LipschitzOnly, cap_by_lipschitz: true }
    }

    pub fn uncapped(mut self) -> Self {
        self.cap_by_lipschitz = false;
        self
    }

    pub fn validate(&self) -> Result<()> {
        let theta = match self.kind {
            StepsizeKind::DimSqrt { theta }
            | StepsizeKind::DimSqrtLog { theta }
            | StepsizeKind::DimLinear { theta } => theta,
            StepsizeKind::FixedHorizon { theta, horizon } => {
                if horizon == 0 {
                    return Err(Error::InvalidConfig("fixed-horizon schedule needs horizon >= 1".into()));
                }
                theta
            }
            StepsizeKind::LipschitzOnly => return Ok(()),
        };
        if theta > 0.0 {
            Ok(())
        } else {
            Err(Error::InvalidConfig("stepsize scale theta must be positive".into()))
        }
    }

    /// Schedule value before the Lipschitz cap; `None` for the pure `1/L` rule.
    pub fn base(&self, k: usize) -> Option<f64> {
        assert!(k >= 1, "iteration counter starts at 1");
        let kf = k as f64;
        match self.kind {
            StepsizeKind::DimSqrt { theta } => Some(theta / kf.sqrt()),
            StepsizeKind::DimSqrtLog { theta } => Some(theta / (kf.sqrt() * kf.ln().max(1.0))),
            StepsizeKind::DimLinear { theta } => Some(theta / kf),
            StepsizeKind::FixedHorizon { theta, horizon } => Some(theta / (horizon as f64).sqrt()),
            StepsizeKind::LipschitzOnly => None,
        }
    }

    /// Emitted stepsize for iteration `k` given the sampled Lipschitz
    /// constant. Always strictly positive.
    pub fn value(&self, k: usize, lipschitz: f64) -> f64 {
        assert!(lipschitz > 0.0 && lipschitz.is_finite(), "Lipschitz constant must be positive and finite");
        match self.base(k) {
            None => 1.0 / lipschitz,
            Some(base) => {
                if self.cap_by_lipschitz {
                    base.min(1.0 / lipschitz)
                } else {
                    base
                }
            }
        }
    }
}

/// Mini-batch size as a function of the iteration counter.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum BatchSchedule {
    Constant { m: usize },
    /// `m_1 + ceil((k-1)/stride)`.
    LinearIncrease { initial: usize, stride: usize },
    /// `ceil(m_1 * k^(1+epsilon))`.
    Polynomial { initial: usize, epsilon: f64 },
    /// The deterministic full finite-sum batch; draws no randomness.
    Full,
}

impl BatchSchedule {
    pub fn validate(&self) -> Result<()> {
        match *self {
            BatchSchedule::Constant { m: 0 } => {
                Err(Error::InvalidConfig("batch size must be at least 1".into()))
            }
            BatchSchedule::LinearIncrease { initial, stride } if initial == 0 || stride == 0 => {
                Err(Error::InvalidConfig("linear batch growth needs initial >= 1 and stride >= 1".into()))
            }
            BatchSchedule::Polynomial { initial, epsilon } if initial == 0 || epsilon <= 0.0 => {
                Err(Error::InvalidConfig("polynomial batch growth needs initial >= 1 and epsilon > 0".into()))
            }
            _ => Ok(()),
        }
    }

    /// Batch size at iteration `k` for a problem whose epoch is `epoch_size`
    /// samples.
    pub fn size(&self, k: usize, epoch_size: usize) -> usize {
        assert!(k >= 1);
        match *self {
            BatchSchedule::Constant { m } => m,
            BatchSchedule::LinearIncrease { initial, stride } => initial + (k - 1).div_ceil(stride),
            BatchSchedule::Polynomial { initial, epsilon } => {
                let kf = k as f64;
                (initial as f64 * kf.powf(1.0 + epsilon)).ceil() as usize
            }
            BatchSchedule::Full => epoch_size,
        }
    }

    pub fn is_full(&self) -> bool {
        matches!(self, BatchSchedule::Full)
    }
}

/// Order in which the blocks are visited within one iteration.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum UpdateOrder {
    /// Ascending block index every iteration.
    Fixed,
    /// Fresh uniform permutation each iteration, drawn from the run's
    /// order stream.
    Shuffled,
}

impl UpdateOrder {
    /// Fills `order` with a permutation of `0..s` for this iteration.
    pub fn fill(&self, order: &mut Vec<usize>, block_count: usize, rng: &mut ChaCha8Rng) {
        order.clear();
        order.extend(0..block_count);
        if matches!(self, UpdateOrder::Shuffled) {
            order.shuffle(rng);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand_chacha::rand_core::SeedableRng;

    #[test]
    fn stepsize_examples() {
        let s = StepsizeSchedule::dim_sqrt(0.1);
        assert!((s.value(4, 1.0) - 0.05).abs() < 1e-15);

        let s = StepsizeSchedule::dim_sqrt(10.0);
        assert!((s.value(1, 100.0) - 0.01).abs() < 1e-15);

        let s = StepsizeSchedule::dim_linear(2.0).uncapped();
        assert!((s.value(8, 1e-9) - 0.25).abs() < 1e-15);
    }

    #[test]
    fn sqrt_log_first_steps_are_nonincreasing() {
        let s = StepsizeSchedule::dim_sqrt_log(1.0).uncapped();
        let mut prev = f64::INFINITY;
        for k in 1..200 {
            let v = s.value(k, 1.0);
            assert!(v > 0.0);
            assert!(v <= prev + 1e-15, "k={k}: {v} > {prev}");
            prev = v;
        }
    }

    #[test]
    fn lipschitz_only_is_reciprocal() {
        let s = StepsizeSchedule::lipschitz_only();
        assert_eq!(s.value(17, 4.0), 0.25);
    }

    #[test]
    #[should_panic(expected = "starts at 1")]
    fn stepsize_rejects_k_zero() {
        StepsizeSchedule::dim_sqrt(1.0).value(0, 1.0);
    }

    #[test]
    fn batch_examples() {
        let b = BatchSchedule::LinearIncrease { initial: 64, stride: 10 };
        assert_eq!(b.size(1, 0), 64);
        assert_eq!(b.size(11, 0), 65);
        assert_eq!(b.size(21, 0), 66);

        let b = BatchSchedule::Polynomial { initial: 1, epsilon: 0.5 };
        assert_eq!(b.size(1, 0), 1);
        assert_eq!(b.size(4, 0), 8);

        assert_eq!(BatchSchedule::Full.size(3, 123), 123);
    }

    #[test]
    fn batch_schedules_nondecreasing() {
        let schedules = [
            BatchSchedule::LinearIncrease { initial: 2, stride: 7 },
            BatchSchedule::Polynomial { initial: 3, epsilon: 0.25 },
        ];
        for b in schedules {
            let mut prev = 0;
            for k in 1..500 {
                let m = b.size(k, 0);
                assert!(m >= 1 && m >= prev);
                prev = m;
            }
        }
    }

    #[test]
    fn shuffled_order_is_a_reproducible_permutation() {
        let mut rng1 = ChaCha8Rng::seed_from_u64(5);
        let mut rng2 = ChaCha8Rng::seed_from_u64(5);
        let mut a = Vec::new();
        let mut b = Vec::new();
        for _ in 0..10 {
            UpdateOrder::Shuffled.fill(&mut a, 6, &mut rng1);
            UpdateOrder::Shuffled.fill(&mut b, 6, &mut rng2);
            assert_eq!(a, b);
            let mut sorted = a.clone();
            sorted.sort_unstable();
            assert_eq!(sorted, (0..6).collect::<Vec<_>>());
        }
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #[test]
            fn emitted_stepsizes_positive_and_nonincreasing(
                theta in 0.001..10.0f64,
                lipschitz in 0.01..100.0f64,
                cap in proptest::bool::ANY,
            ) {
                for sched in [
                    StepsizeSchedule::dim_sqrt(theta),
                    StepsizeSchedule::dim_sqrt_log(theta),
                    StepsizeSchedule::dim_linear(theta),
                ] {
                    let sched = if cap { sched } else { sched.uncapped() };
                    let mut prev = f64::INFINITY;
                    for k in 1..100 {
                        let v = sched.value(k, lipschitz);
                        prop_assert!(v > 0.0);
                        prop_assert!(v <= prev + 1e-15);
                        prev = v;
                    }
                }
            }
        }
    }
}
