//! Independent numeric checks: finite differences, grid search, and property
//! suites over the prox operations.
//!
//! Everything here deliberately avoids the code paths it is checking: the
//! finite-difference gradient only calls the sampled objective, and the grid
//! minimizer scans the subproblem objective directly. Used by the test suites
//! and by the `check` subcommand of the command-line harness.

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::block::BlockPoint;
use crate::error::Result;
use crate::problem::{ConstraintSet, Regularizer, StochasticProblem};
use crate::prox;

/// Argmin of `f` over the grid `lo, lo+step, ..., hi`.
pub fn grid_minimize_1d(f: impl Fn(f64) -> f64, lo: f64, hi: f64, step: f64) -> f64 {
    assert!(step > 0.0 && hi > lo);
    let mut best_x = lo;
    let mut best_f = f(lo);
    let mut x = lo + step;
    while x <= hi {
        let v = f(x);
        if v < best_f {
            best_f = v;
            best_x = x;
        }
        x += step;
    }
    best_x
}

/// Central-difference gradient of the sampled objective with respect to one
/// block, at absolute step `h` per coordinate.
pub fn finite_diff_block_gradient<P: StochasticProblem>(
    problem: &P,
    block: usize,
    x: &BlockPoint,
    batch: &[P::Sample],
    h: f64,
) -> Result<Vec<f64>> {
    let dim = x.partition().block_dim(block);
    let mut grad = vec![0.0; dim];
    let mut probe = x.clone();
    for j in 0..dim {
        let base = x.block(block)[j];
        probe.block_mut(block)[j] = base + h;
        let fp = problem.sample_objective(&probe, batch)?;
        probe.block_mut(block)[j] = base - h;
        let fm = problem.sample_objective(&probe, batch)?;
        probe.block_mut(block)[j] = base;
        grad[j] = (fp - fm) / (2.0 * h);
    }
    Ok(grad)
}

/// Worst relative error between the sampled partial gradient and central
/// finite differences, over all blocks at the given point.
pub fn gradient_check<P: StochasticProblem>(
    problem: &P,
    x: &BlockPoint,
    batch: &[P::Sample],
    h: f64,
) -> Result<f64> {
    let mut worst = 0.0f64;
    for block in 0..x.partition().block_count() {
        let dim = x.partition().block_dim(block);
        let mut analytic = vec![0.0; dim];
        problem.sample_partial_gradient(block, x, batch, &mut analytic)?;
        let numeric = finite_diff_block_gradient(problem, block, x, batch, h)?;
        let diff: f64 = analytic
            .iter()
            .zip(&numeric)
            .map(|(a, b)| (a - b) * (a - b))
            .sum::<f64>()
            .sqrt();
        let scale: f64 = numeric.iter().map(|v| v * v).sum::<f64>().sqrt();
        worst = worst.max(diff / scale.max(1.0));
    }
    Ok(worst)
}

/// Outcome of a randomized property suite.
#[derive(Debug, Clone, Copy)]
pub struct SuiteReport {
    pub cases: usize,
    pub violations: usize,
    /// Worst observed margin; meaning depends on the suite.
    pub worst: f64,
}

impl SuiteReport {
    pub fn passed(&self) -> bool {
        self.violations == 0
    }
}

/// Nonexpansiveness and idempotence of soft-thresholding and projections on
/// random pairs.
pub fn prox_contract_suite(pairs: usize, seed: u64) -> SuiteReport {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let dim = 4;
    let mut violations = 0;
    let mut worst = 0.0f64;
    let norm = |v: &[f64]| v.iter().map(|x| x * x).sum::<f64>().sqrt();
    for _ in 0..pairs {
        let u: Vec<f64> = (0..dim).map(|_| rng.random_range(-5.0..5.0)).collect();
        let v: Vec<f64> = (0..dim).map(|_| rng.random_range(-5.0..5.0)).collect();
        let tau = rng.random_range(0.0..2.0);
        let radius = rng.random_range(0.1..4.0);
        let sets = [
            ConstraintSet::boxed(vec![-1.0; dim], vec![1.0; dim]).unwrap(),
            ConstraintSet::ball(vec![0.0; dim], radius).unwrap(),
        ];
        let mut pu = vec![0.0; dim];
        let mut pv = vec![0.0; dim];
        prox::soft_threshold(&u, tau, &mut pu);
        prox::soft_threshold(&v, tau, &mut pv);
        let before = norm(&u.iter().zip(&v).map(|(a, b)| a - b).collect::<Vec<_>>());
        let after = norm(&pu.iter().zip(&pv).map(|(a, b)| a - b).collect::<Vec<_>>());
        worst = worst.max(after - before);
        if after > before + 1e-12 {
            violations += 1;
        }
        for set in &sets {
            prox::project(set, &u, &mut pu);
            prox::project(set, &v, &mut pv);
            let after = norm(&pu.iter().zip(&pv).map(|(a, b)| a - b).collect::<Vec<_>>());
            worst = worst.max(after - before);
            if after > before + 1e-12 {
                violations += 1;
            }
            let mut ppu = vec![0.0; dim];
            prox::project(set, &pu, &mut ppu);
            if ppu != pu {
                violations += 1;
            }
        }
    }
    SuiteReport { cases: pairs, violations, worst }
}

/// Grid-search agreement of the 1-D prox and projected-subgradient updates;
/// the returned point must minimize its subproblem objective to within the
/// grid step.
pub fn prox_grid_suite(cases: usize, grid_step: f64, seed: u64) -> SuiteReport {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut violations = 0;
    let mut worst = 0.0f64;
    for _ in 0..cases {
        let x = rng.random_range(-1.0..1.0);
        let g = rng.random_range(-1.0..1.0);
        let alpha = rng.random_range(0.05..1.0);
        let w = rng.random_range(0.0..2.0);

        let r = Regularizer::l1(w);
        let mut out = [0.0];
        prox::prox_step(&[x], &[g], alpha, &r, &mut out);
        let oracle = grid_minimize_1d(
            |u| g * (u - x) + (u - x) * (u - x) / (2.0 * alpha) + w * u.abs(),
            -4.0,
            4.0,
            grid_step,
        );
        let err = (out[0] - oracle).abs();
        worst = worst.max(err);
        if err > grid_step {
            violations += 1;
        }

        let set = ConstraintSet::boxed(vec![-0.5], vec![0.5]).unwrap();
        let mut r_sub = [0.0];
        r.subgradient(&[x], &mut r_sub);
        prox::projected_subgradient_step(&[x], &[g], &r_sub, alpha, &set, &mut out);
        let oracle = grid_minimize_1d(
            |u| (g + r_sub[0]) * (u - x) + (u - x) * (u - x) / (2.0 * alpha),
            -0.5,
            0.5,
            grid_step,
        );
        let err = (out[0] - oracle).abs();
        worst = worst.max(err);
        if err > grid_step {
            violations += 1;
        }
    }
    SuiteReport { cases, violations, worst }
}
