//! Convergence diagnostics: the measurable constants behind the worst-case
//! rate bounds, evaluators for those bounds, the scalar decay recursion they
//! rest on, empirical bias/variance estimation for the Gauss-Seidel gradient
//! error, log-log rate fitting, and a first-order stationarity measure.

use rand_chacha::ChaCha8Rng;

use crate::block::BlockPoint;
use crate::error::{Error, Result};
use crate::linalg;
use crate::problem::{ConstraintSet, Regularizer, StochasticProblem};
use crate::prox;
use crate::seed::{self, stream};

pub use crate::linalg::symmetric_eigen_extremes;

/// Measurable quantities a problem instance exposes to the bound evaluators:
/// the bias slope of the gradient error, its second-moment bound, the
/// partial-gradient Lipschitz constant, an iterate-norm bound, per-block
/// regularizer Lipschitz constants, the stepsize scale, the strong-convexity
/// modulus, and the geometry of the run.
#[derive(Debug, Clone)]
pub struct AnalysisConstants {
    /// Slope of the conditional-bias bound: bias <= slope * max_j alpha_j.
    pub bias_slope: f64,
    /// Uniform bound on the gradient-error second moment (its square root).
    pub noise_bound: f64,
    /// Uniform Lipschitz constant of the partial gradients.
    pub grad_lipschitz: f64,
    /// Bound on sqrt(E ||x^k||^2) along the run.
    pub iterate_norm_bound: f64,
    /// Per-block regularizer Lipschitz constants.
    pub reg_lipschitz: Vec<f64>,
    /// max_i || grad_i F(0) ||.
    pub origin_grad_max: f64,
    /// Stepsize scale theta.
    pub stepsize_scale: f64,
    /// Strong convexity modulus (0 when unknown).
    pub strong_convexity: f64,
    /// Number of blocks.
    pub block_count: usize,
    /// Norm of the minimizer.
    pub solution_norm: f64,
}

impl AnalysisConstants {
    pub fn validate(&self) -> Result<()> {
        let nonneg = [
            self.bias_slope,
            self.noise_bound,
            self.iterate_norm_bound,
            self.origin_grad_max,
            self.solution_norm,
            self.strong_convexity,
        ];
        if nonneg.iter().any(|v| *v < 0.0 || !v.is_finite()) {
            return Err(Error::InvalidArgument("analysis constants must be nonnegative and finite".into()));
        }
        if self.grad_lipschitz <= 0.0 || self.stepsize_scale <= 0.0 {
            return Err(Error::InvalidArgument("Lipschitz constant and stepsize scale must be positive".into()));
        }
        if self.reg_lipschitz.len() != self.block_count {
            return Err(Error::DimensionMismatch {
                expected: self.block_count,
                got: self.reg_lipschitz.len(),
            });
        }
        Ok(())
    }

    pub fn max_reg_lipschitz(&self) -> f64 {
        self.reg_lipschitz.iter().copied().fold(0.0, f64::max)
    }

    /// Second-moment bound on the partial gradients along the run:
    /// `sqrt(4 L^2 rho^2 + 2 max_i ||grad_i F(0)||^2)`.
    pub fn gradient_moment_bound(&self) -> f64 {
        let l = self.grad_lipschitz;
        let rho = self.iterate_norm_bound;
        (4.0 * l * l * rho * rho + 2.0 * self.origin_grad_max * self.origin_grad_max).sqrt()
    }

    /// The aggregate constant entering both sublinear rate bounds. Combines
    /// the per-block noise and regularizer terms with the bias contribution
    /// of the Gauss-Seidel gradient error; requires `L * theta < 1`.
    pub fn rate_constant(&self, sigma_k: f64) -> Result<f64> {
        self.validate()?;
        let l_theta = self.grad_lipschitz * self.stepsize_scale;
        if l_theta >= 1.0 {
            return Err(Error::InvalidArgument(format!(
                "stepsize scale too large: L * theta = {l_theta} >= 1"
            )));
        }
        let s = self.block_count as f64;
        let sigma = self.noise_bound;
        let lmax = self.max_reg_lipschitz();
        let m = self.gradient_moment_bound();
        let radical: f64 = self
            .reg_lipschitz
            .iter()
            .map(|lr| 4.0 * m * m + 4.0 * sigma_k * sigma_k + 2.0 * lr * lr)
            .sum::<f64>()
            .sqrt();
        let first = s * (sigma * sigma + 4.0 * lmax * lmax) / (1.0 - l_theta);
        let second = s.sqrt()
            * (self.solution_norm + self.iterate_norm_bound)
            * (self.bias_slope + self.grad_lipschitz * radical);
        Ok(first + second)
    }

    /// Fixed-horizon ergodic gap bound for general convex problems with
    /// steps `theta / sqrt(K)`:
    /// `D theta / sqrt(K) + dist^2 / (2 theta sqrt(K))`.
    pub fn ergodic_gap_bound(&self, horizon: usize, x_init_dist: f64) -> Result<f64> {
        if horizon == 0 {
            return Err(Error::InvalidArgument("horizon must be at least 1".into()));
        }
        let d = self.rate_constant(self.noise_bound)?;
        let sqrt_k = (horizon as f64).sqrt();
        Ok(d * self.stepsize_scale / sqrt_k + x_init_dist * x_init_dist / (2.0 * self.stepsize_scale * sqrt_k))
    }

    /// The stepsize scale minimizing the ergodic gap bound, and the resulting
    /// bound `sqrt(2 D) dist / sqrt(K)`.
    pub fn optimal_ergodic_bound(&self, horizon: usize, x_init_dist: f64) -> Result<(f64, f64)> {
        let d = self.rate_constant(self.noise_bound)?;
        let theta = x_init_dist / (2.0 * d).sqrt();
        let bound = (2.0 * d).sqrt() * x_init_dist / (horizon as f64).sqrt();
        Ok((theta, bound))
    }

    /// Distance bound for strongly convex problems with steps `theta / k`:
    /// `(1/k) max{2 D theta (1 + mu theta) / mu, dist^2}`.
    pub fn strongly_convex_distance_bound(&self, k: usize, x_init_dist: f64) -> Result<f64> {
        if k == 0 {
            return Err(Error::InvalidArgument("iteration index starts at 1".into()));
        }
        let mu = self.strong_convexity;
        if mu <= 0.0 {
            return Err(Error::InvalidArgument("strong convexity modulus must be positive".into()));
        }
        let d = self.rate_constant(self.noise_bound)?;
        let theta = self.stepsize_scale;
        let c = (2.0 * d * theta * (1.0 + mu * theta) / mu).max(x_init_dist * x_init_dist);
        Ok(c / k as f64)
    }

    /// Coefficients of the per-step recursion for strongly convex problems
    /// with constant stepsize `alpha < 2/L`:
    /// gain `(3L/mu^2)(1/alpha^2 + s L^2) / (1/(2 alpha) - L/4)` and noise
    /// scale `gain * alpha / (2 - L alpha) + 3L/mu^2`. The expected gap
    /// contracts by `gain / (1 + gain)` per step plus a noise term.
    pub fn recursion_coefficients(&self, alpha: f64) -> Result<RecursionCoefficients> {
        let l = self.grad_lipschitz;
        let mu = self.strong_convexity;
        if mu <= 0.0 {
            return Err(Error::InvalidArgument("strong convexity modulus must be positive".into()));
        }
        if alpha <= 0.0 || alpha >= 2.0 / l {
            return Err(Error::InvalidArgument(format!(
                "stepsize {alpha} outside (0, 2/L) with L = {l}"
            )));
        }
        let s = self.block_count as f64;
        let base = 3.0 * l / (mu * mu);
        let gain = base * (1.0 / (alpha * alpha) + s * l * l) / (1.0 / (2.0 * alpha) - l / 4.0);
        let noise = gain * alpha / (2.0 - l * alpha) + base;
        Ok(RecursionCoefficients { gain, noise })
    }
}

/// See [`AnalysisConstants::recursion_coefficients`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RecursionCoefficients {
    pub gain: f64,
    pub noise: f64,
}

impl RecursionCoefficients {
    /// Per-step contraction factor `gain / (1 + gain)`.
    pub fn contraction_factor(&self) -> f64 {
        self.gain / (1.0 + self.gain)
    }
}

/// Iterates `A_{k+1} = (1 - a/k) A_k + b/k^2` from `initial` and checks the
/// claimed envelope `A_k <= c/k` over `k in [floor(a)+1, k_max]`, with
/// `c = 2b/(a-1)` for `a > 1` and `c = max{b/a, initial}` otherwise.
///
/// The `a > 1` branch is provable; the `a <= 1` branch is checked as
/// claimed but is refutable (for a < 1 the true decay is on the order of
/// k^{-a}, so the product A_k * k grows without bound).
pub fn check_recursion_lemma(a: f64, b: f64, initial: f64, k_max: usize) -> Result<bool> {
    Ok(recursion_envelope(a, b, initial, k_max)?.holds)
}

/// Detailed outcome of the recursion check.
#[derive(Debug, Clone, Copy)]
pub struct RecursionEnvelope {
    pub holds: bool,
    /// The claimed constant c.
    pub constant: f64,
    /// Worst observed product `A_k * k` over the checked range.
    pub worst_product: f64,
}

pub fn recursion_envelope(a: f64, b: f64, initial: f64, k_max: usize) -> Result<RecursionEnvelope> {
    if a <= 0.0 || b <= 0.0 || initial < 0.0 {
        return Err(Error::InvalidArgument("recursion needs a > 0, b > 0, initial >= 0".into()));
    }
    let first_checked = a.floor() as usize + 1;
    if k_max < first_checked {
        return Err(Error::InvalidArgument(format!(
            "k_max must be at least floor(a)+1 = {first_checked}"
        )));
    }
    let c = if a > 1.0 { 2.0 * b / (a - 1.0) } else { (b / a).max(initial) };
    let mut value = initial;
    let mut holds = true;
    let mut worst = 0.0f64;
    for k in 1..=k_max {
        if k >= first_checked {
            let product = value * k as f64;
            worst = worst.max(product);
            if product > c {
                holds = false;
            }
        }
        let kf = k as f64;
        value = (1.0 - a / kf) * value + b / (kf * kf);
        // The recursion models a nonnegative sequence; (1 - a/k) < 0 for
        // k < a would drive the iterate negative, which only slackens the
        // inequality, so clamp.
        value = value.max(0.0);
    }
    Ok(RecursionEnvelope { holds, constant: c, worst_product: worst })
}

/// Least-squares slope of `log(gap)` against `log(k)`.
pub fn fit_loglog_slope(points: &[(f64, f64)]) -> Result<f64> {
    if points.len() < 10 {
        return Err(Error::InvalidArgument(format!("need at least 10 points, got {}", points.len())));
    }
    if let Some((k, gap)) = points.iter().find(|(k, gap)| *k <= 0.0 || *gap <= 0.0) {
        return Err(Error::InvalidArgument(format!(
            "nonpositive point (k={k}, gap={gap}); check the optimum reference"
        )));
    }
    let logs: Vec<(f64, f64)> = points.iter().map(|&(k, g)| (k.ln(), g.ln())).collect();
    let n = logs.len() as f64;
    let mean_x = logs.iter().map(|p| p.0).sum::<f64>() / n;
    let mean_y = logs.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = logs.iter().map(|p| (p.0 - mean_x) * (p.1 - mean_y)).sum();
    let sxx: f64 = logs.iter().map(|p| (p.0 - mean_x) * (p.0 - mean_x)).sum();
    Ok(sxy / sxx)
}

/// Monte-Carlo estimate of the gradient error `delta_i = g~_i - g_i` at a
/// frozen point: each trial draws a fresh batch, replays the partial block
/// updates before `block` (ascending order, given per-block stepsizes), and
/// compares the sampled partial gradient with the exact one at that
/// partially updated point. This reproduces the bias the sequential updates
/// induce, because the earlier updates depend on the same batch.
#[derive(Debug, Clone, Copy)]
pub struct GradientErrorEstimate {
    /// Norm of the mean error vector.
    pub bias_norm: f64,
    /// Mean squared norm of the error.
    pub second_moment: f64,
}

pub fn estimate_gradient_error<P: StochasticProblem>(
    problem: &P,
    x: &BlockPoint,
    block: usize,
    alphas: &[f64],
    batch: &crate::solvers::BatchSchedule,
    trials: usize,
    seed: u64,
) -> Result<GradientErrorEstimate> {
    if trials < 1000 {
        return Err(Error::InvalidArgument(format!("need at least 1000 trials, got {trials}")));
    }
    let part = problem.partition();
    part.check_block(block)?;
    if alphas.len() < block {
        return Err(Error::DimensionMismatch { expected: block, got: alphas.len() });
    }
    if alphas[..block].iter().any(|&a| a <= 0.0) {
        return Err(Error::InvalidArgument("stepsizes must be positive".into()));
    }
    let full_batch = if batch.is_full() {
        Some(problem.full_batch().ok_or(Error::NoFullGradient("full batches need a finite sum"))?)
    } else {
        None
    };
    let batch_size = batch.size(1, problem.epoch_size());
    let dim = part.block_dim(block);
    let mut rng: ChaCha8Rng = seed::rng_for(seed, stream::BATCH);
    let mut mean = vec![0.0; dim];
    let mut second = 0.0;
    let mut sampled = vec![0.0; part.dims().iter().copied().max().unwrap()];
    let mut exact = vec![0.0; dim];
    let mut stepped = vec![0.0; sampled.len()];
    let mut sub = vec![0.0; sampled.len()];
    for _ in 0..trials {
        let drawn;
        let batch: &[P::Sample] = match &full_batch {
            Some(full) => full,
            None => {
                drawn = problem.draw_batch(&mut rng, batch_size);
                &drawn
            }
        };
        let mut y = x.clone();
        for j in 0..block {
            let d = part.block_dim(j);
            problem.sample_partial_gradient(j, &y, batch, &mut sampled[..d])?;
            let reg = problem.regularizer(j);
            let set = problem.constraint(j);
            if set.is_whole_space() {
                prox::prox_step(y.block(j), &sampled[..d], alphas[j], reg, &mut stepped[..d]);
            } else {
                reg.subgradient(y.block(j), &mut sub[..d]);
                prox::projected_subgradient_step(
                    y.block(j),
                    &sampled[..d],
                    &sub[..d],
                    alphas[j],
                    set,
                    &mut stepped[..d],
                );
            }
            y.block_mut(j).copy_from_slice(&stepped[..d]);
        }
        problem.sample_partial_gradient(block, &y, batch, &mut sampled[..dim])?;
        problem.full_partial_gradient(block, &y, &mut exact)?;
        let mut sq = 0.0;
        for ((m, &s), &e) in mean.iter_mut().zip(&sampled[..dim]).zip(&exact) {
            let delta = s - e;
            *m += delta;
            sq += delta * delta;
        }
        second += sq;
    }
    let inv = 1.0 / trials as f64;
    let bias_norm = mean.iter().map(|m| (m * inv) * (m * inv)).sum::<f64>().sqrt();
    Ok(GradientErrorEstimate { bias_norm, second_moment: second * inv })
}

/// First-order stationarity measure: the norm of the minimum-norm element of
/// the subdifferential of the full objective at `x`, computed in closed form
/// per block. Unconstrained smooth blocks contribute their gradient;
/// l1-regularized unconstrained blocks shrink it coordinatewise; constrained
/// blocks (with zero regularizer) measure the distance of the negative
/// gradient to the normal cone.
pub fn stationarity_measure<P: StochasticProblem>(problem: &P, x: &BlockPoint) -> Result<f64> {
    let part = problem.partition();
    let mut total = 0.0;
    let mut grad = vec![0.0; part.dims().iter().copied().max().unwrap()];
    for block in 0..part.block_count() {
        let dim = part.block_dim(block);
        let g = &mut grad[..dim];
        problem.full_partial_gradient(block, x, g)?;
        let xi = x.block(block);
        let reg = problem.regularizer(block);
        let set = problem.constraint(block);
        match (set, reg) {
            (ConstraintSet::All, Regularizer::Zero) => {
                total += g.iter().map(|v| v * v).sum::<f64>();
            }
            (ConstraintSet::All, Regularizer::L1 { weight }) => {
                for (j, &gj) in g.iter().enumerate() {
                    let r = if xi[j] != 0.0 {
                        gj + weight * xi[j].signum()
                    } else {
                        gj.signum() * (gj.abs() - weight).max(0.0)
                    };
                    total += r * r;
                }
            }
            (ConstraintSet::Box { lower, upper }, Regularizer::Zero) => {
                for (j, &gj) in g.iter().enumerate() {
                    let at_lower = xi[j] <= lower[j];
                    let at_upper = xi[j] >= upper[j];
                    let r = match (at_lower, at_upper) {
                        (true, true) => 0.0,
                        (true, false) => gj.min(0.0),
                        (false, true) => gj.max(0.0),
                        (false, false) => gj,
                    };
                    total += r * r;
                }
            }
            (ConstraintSet::Ball { center, radius }, Regularizer::Zero) => {
                let d: Vec<f64> = xi.iter().zip(center).map(|(a, c)| a - c).collect();
                let dist = d.iter().map(|v| v * v).sum::<f64>().sqrt();
                if dist < *radius {
                    total += g.iter().map(|v| v * v).sum::<f64>();
                } else {
                    // Outward normal cone is the nonnegative multiples of d.
                    let d2: f64 = d.iter().map(|v| v * v).sum();
                    let t = (-g.iter().zip(&d).map(|(a, b)| a * b).sum::<f64>() / d2).max(0.0);
                    total += g.iter().zip(&d).map(|(a, b)| (a + t * b) * (a + t * b)).sum::<f64>();
                }
            }
            _ => {
                return Err(Error::InvalidArgument(
                    "stationarity measure needs each block unconstrained or unregularized".into(),
                ));
            }
        }
    }
    Ok(total.sqrt())
}

/// Smallest and largest eigenvalues of a problem's Gram matrix, as the
/// strong-convexity modulus and gradient Lipschitz constant of a quadratic.
pub fn quadratic_moduli(gram: &[f64], dim: usize) -> (f64, f64) {
    linalg::symmetric_eigen_extremes(gram, dim, 500)
}
