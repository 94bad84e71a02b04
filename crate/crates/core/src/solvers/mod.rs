//! The iterative methods: block stochastic gradient (Gauss-Seidel block
//! updates from one shared mini batch), plain stochastic gradient (Jacobi),
//! stochastic block coordinate selection, and deterministic cyclic block
//! gradient descent.

mod schedule;

use std::time::Instant;

use rand_chacha::ChaCha8Rng;

pub use schedule::{BatchSchedule, StepsizeKind, StepsizeSchedule, UpdateOrder};

use crate::block::BlockPoint;
use crate::error::{Error, Result};
use crate::problem::StochasticProblem;
use crate::prox;
use crate::seed::{self, stream};

/// Which method a run uses.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Method {
    /// Gauss-Seidel block updates, one shared batch per iteration.
    Bsg,
    /// Jacobi update of all blocks from the previous iterate, stepsize capped
    /// by the full sampled-gradient Lipschitz constant.
    Sg,
    /// Each iteration updates `blocks_per_iter` blocks selected uniformly
    /// without replacement, Jacobi-style, with per-block Lipschitz caps.
    Sbmd { blocks_per_iter: usize },
    /// Deterministic cyclic block proximal gradient with full partial
    /// gradients and `1/L_i` steps. Ignores the configured stepsize, batch,
    /// and order; one iteration is accounted as one epoch.
    Bcgd,
}

/// Run length in epochs (one epoch = `epoch_size` samples), optionally capped
/// by wall-clock time. The time cap is only checked at record boundaries so
/// iterate content stays deterministic.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Budget {
    pub epochs: f64,
    pub max_seconds: Option<f64>,
}

impl Budget {
    pub fn epochs(epochs: f64) -> Self {
        Self { epochs, max_seconds: None }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolverConfig {
    pub method: Method,
    pub stepsize: StepsizeSchedule,
    pub batch: BatchSchedule,
    pub order: UpdateOrder,
    pub budget: Budget,
    pub seed: u64,
    /// Epochs between trace records.
    pub record_every: f64,
    /// Accumulate the stepsize-weighted average of iterates.
    pub track_ergodic: bool,
}

impl SolverConfig {
    pub fn new(method: Method, stepsize: StepsizeSchedule, batch: BatchSchedule, epochs: f64, seed: u64) -> Self {
        Self {
            method,
            stepsize,
            batch,
            order: UpdateOrder::Fixed,
            budget: Budget::epochs(epochs),
            seed,
            record_every: 1.0,
            track_ergodic: false,
        }
    }

    pub fn validate(&self, block_count: usize) -> Result<()> {
        self.stepsize.validate()?;
        self.batch.validate()?;
        if self.budget.epochs < 0.0 || !self.budget.epochs.is_finite() {
            return Err(Error::InvalidConfig("epoch budget must be finite and nonnegative".into()));
        }
        if self.record_every <= 0.0 {
            return Err(Error::InvalidConfig("record_every must be positive".into()));
        }
        if let Method::Sbmd { blocks_per_iter } = self.method {
            if blocks_per_iter == 0 || blocks_per_iter > block_count {
                return Err(Error::InvalidConfig(format!(
                    "sbmd selects {blocks_per_iter} of {block_count} blocks"
                )));
            }
        }
        Ok(())
    }
}

/// One trace entry.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TraceRecord {
    pub epoch: f64,
    pub seconds: f64,
    pub objective: f64,
    pub metric: Option<f64>,
}

/// Everything a run leaves behind.
#[derive(Debug, Clone)]
pub struct RunTrace {
    pub records: Vec<TraceRecord>,
    pub final_point: BlockPoint,
    /// Stepsize-weighted average of the post-update iterates, when tracked.
    pub ergodic_point: Option<BlockPoint>,
    /// Stepsize-weighted average of the post-update objective values, when
    /// tracked. By convexity this dominates the objective at the averaged
    /// point.
    pub ergodic_objective: Option<f64>,
    pub iterations: usize,
    pub samples_consumed: usize,
}

/// Optional progress metric evaluated at record times.
pub type Metric<'a> = Option<&'a (dyn Fn(&BlockPoint) -> f64 + Sync)>;

/// Stepsize-weighted average of a list of points.
pub fn ergodic_average(points: &[BlockPoint], weights: &[f64]) -> Result<BlockPoint> {
    if points.is_empty() {
        return Err(Error::InvalidArgument("ergodic average of an empty list".into()));
    }
    if points.len() != weights.len() {
        return Err(Error::DimensionMismatch { expected: points.len(), got: weights.len() });
    }
    if weights.iter().any(|&w| w <= 0.0 || !w.is_finite()) {
        return Err(Error::InvalidArgument("ergodic weights must be positive".into()));
    }
    let n = points[0].values().len();
    let mut acc = vec![0.0; n];
    let mut total = 0.0;
    for (p, &w) in points.iter().zip(weights) {
        if p.values().len() != n {
            return Err(Error::DimensionMismatch { expected: n, got: p.values().len() });
        }
        for (a, &v) in acc.iter_mut().zip(p.values()) {
            *a += w * v;
        }
        total += w;
    }
    for a in &mut acc {
        *a /= total;
    }
    BlockPoint::new(points[0].partition().clone(), acc)
}

struct Buffers {
    grad: Vec<f64>,
    sub: Vec<f64>,
    out: Vec<f64>,
    order: Vec<usize>,
    flat_grad: Vec<f64>,
    alphas: Vec<f64>,
}

impl Buffers {
    fn for_problem<P: StochasticProblem>(problem: &P) -> Self {
        let part = problem.partition();
        let max_dim = part.dims().iter().copied().max().unwrap_or(1);
        Buffers {
            grad: vec![0.0; max_dim],
            sub: vec![0.0; max_dim],
            out: vec![0.0; max_dim],
            order: Vec::with_capacity(part.block_count()),
            flat_grad: vec![0.0; part.total_dim()],
            alphas: vec![0.0; part.block_count()],
        }
    }
}

fn ensure_finite(values: &[f64], what: &'static str, block: usize, iteration: usize) -> Result<()> {
    if values.iter().all(|v| v.is_finite()) {
        Ok(())
    } else {
        Err(Error::NonFinite { what, block, iteration })
    }
}

/// Applies the block update rule for `block`: a proximal step when the block
/// is unconstrained, a projected subgradient step otherwise.
fn update_block<P: StochasticProblem>(
    problem: &P,
    x: &mut BlockPoint,
    block: usize,
    grad: &[f64],
    alpha: f64,
    buffers_sub: &mut [f64],
    buffers_out: &mut [f64],
    iteration: usize,
) -> Result<()> {
    let reg = problem.regularizer(block);
    let set = problem.constraint(block);
    let current = x.block(block);
    match prox::UpdateRule::for_constraint(set) {
        prox::UpdateRule::Proximal => {
            prox::prox_step(current, grad, alpha, reg, buffers_out);
        }
        prox::UpdateRule::ProjectedSubgradient => {
            reg.subgradient(current, buffers_sub);
            prox::projected_subgradient_step(current, grad, buffers_sub, alpha, set, buffers_out);
        }
    }
    ensure_finite(buffers_out, "iterate", block, iteration)?;
    x.block_mut(block).copy_from_slice(buffers_out);
    Ok(())
}

/// One Gauss-Seidel sweep over `order`: each block's gradient and Lipschitz
/// constant are evaluated at the partially updated point, from the one shared
/// batch.
fn bsg_sweep<P: StochasticProblem>(
    problem: &P,
    x: &mut BlockPoint,
    k: usize,
    stepsize: &StepsizeSchedule,
    order: &[usize],
    batch: &[P::Sample],
    buffers: &mut Buffers,
) -> Result<()> {
    if batch.is_empty() {
        return Err(Error::EmptyBatch);
    }
    for &block in order {
        let dim = x.partition().block_dim(block);
        let grad = &mut buffers.grad[..dim];
        let lipschitz = problem.sample_gradient_and_lipschitz(block, x, batch, grad)?;
        ensure_finite(grad, "gradient", block, k)?;
        let alpha = stepsize.value(k, lipschitz);
        update_block(problem, x, block, grad, alpha, &mut buffers.sub[..dim], &mut buffers.out[..dim], k)?;
    }
    Ok(())
}

/// One iteration of the block stochastic gradient method: draws the batch
/// `Xi_k` of the scheduled size, picks the update order, then updates every
/// block sequentially so that later blocks see the earlier updates of this
/// same iteration.
pub fn bsg_step<P: StochasticProblem>(
    problem: &P,
    x: &BlockPoint,
    k: usize,
    config: &SolverConfig,
    rng_batch: &mut ChaCha8Rng,
    rng_order: &mut ChaCha8Rng,
) -> Result<BlockPoint> {
    let mut buffers = Buffers::for_problem(problem);
    let batch = draw_batch(problem, &config.batch, k, rng_batch)?;
    config.order.fill(&mut buffers.order, problem.partition().block_count(), rng_order);
    let order = std::mem::take(&mut buffers.order);
    let mut next = x.clone();
    bsg_sweep(problem, &mut next, k, &config.stepsize, &order, &batch, &mut buffers)?;
    Ok(next)
}

/// One Jacobi iteration: every block's gradient is taken at the incoming
/// point and a single stepsize, capped by the full sampled-gradient Lipschitz
/// constant, is shared by all blocks.
fn sg_sweep<P: StochasticProblem>(
    problem: &P,
    x: &mut BlockPoint,
    k: usize,
    stepsize: &StepsizeSchedule,
    batch: &[P::Sample],
    buffers: &mut Buffers,
) -> Result<()> {
    if batch.is_empty() {
        return Err(Error::EmptyBatch);
    }
    let part = x.partition().clone();
    for block in 0..part.block_count() {
        let range = part.range(block);
        problem.sample_partial_gradient(block, x, batch, &mut buffers.flat_grad[range])?;
    }
    ensure_finite(&buffers.flat_grad, "gradient", 0, k)?;
    let lipschitz = problem.full_lipschitz(x, batch);
    let alpha = stepsize.value(k, lipschitz);
    for block in 0..part.block_count() {
        let range = part.range(block);
        let dim = range.len();
        buffers.grad[..dim].copy_from_slice(&buffers.flat_grad[range]);
        update_block(
            problem,
            x,
            block,
            &buffers.grad[..dim],
            alpha,
            &mut buffers.sub[..dim],
            &mut buffers.out[..dim],
            k,
        )?;
    }
    Ok(())
}

/// One iteration of block coordinate selection: `t` blocks are chosen
/// uniformly without replacement and updated from the incoming point, each
/// with its own Lipschitz-capped stepsize.
fn sbmd_sweep<P: StochasticProblem>(
    problem: &P,
    x: &mut BlockPoint,
    k: usize,
    t: usize,
    stepsize: &StepsizeSchedule,
    batch: &[P::Sample],
    rng_order: &mut ChaCha8Rng,
    buffers: &mut Buffers,
) -> Result<()> {
    if batch.is_empty() {
        return Err(Error::EmptyBatch);
    }
    let part = x.partition().clone();
    let selected = select_blocks(rng_order, part.block_count(), t);
    // Gradients and stepsizes all come from the incoming point; updates are
    // applied afterwards so selection order cannot leak into the result.
    for &block in &selected {
        let range = part.range(block);
        problem.sample_partial_gradient(block, x, batch, &mut buffers.flat_grad[range])?;
        let lipschitz = problem.block_lipschitz(block, x, batch);
        buffers.alphas[block] = stepsize.value(k, lipschitz);
    }
    for &block in &selected {
        let range = part.range(block);
        let dim = range.len();
        buffers.grad[..dim].copy_from_slice(&buffers.flat_grad[range]);
        ensure_finite(&buffers.grad[..dim], "gradient", block, k)?;
        let alpha = buffers.alphas[block];
        update_block(
            problem,
            x,
            block,
            &buffers.grad[..dim],
            alpha,
            &mut buffers.sub[..dim],
            &mut buffers.out[..dim],
            k,
        )?;
    }
    Ok(())
}

/// Uniform without-replacement choice of `t` of `block_count` blocks.
pub fn select_blocks(rng: &mut ChaCha8Rng, block_count: usize, t: usize) -> Vec<usize> {
    rand::seq::index::sample(rng, block_count, t).into_vec()
}

fn draw_batch<P: StochasticProblem>(
    problem: &P,
    schedule: &BatchSchedule,
    k: usize,
    rng: &mut ChaCha8Rng,
) -> Result<Vec<P::Sample>> {
    if schedule.is_full() {
        return problem
            .full_batch()
            .ok_or(Error::NoFullGradient("full-batch schedule on a streaming problem"));
    }
    let m = schedule.size(k, problem.epoch_size());
    if m == 0 {
        return Err(Error::EmptyBatch);
    }
    Ok(problem.draw_batch(rng, m))
}

struct ErgodicTracker {
    sum: Vec<f64>,
    objective_sum: f64,
    weight: f64,
}

/// Runs the configured method. The trace records the objective (and the
/// optional metric) every `record_every` epochs; identical inputs produce
/// identical iterates and records.
pub fn run<P: StochasticProblem>(
    problem: &P,
    x0: &BlockPoint,
    config: &SolverConfig,
    metric: Metric,
) -> Result<RunTrace> {
    let part = problem.partition();
    config.validate(part.block_count())?;
    if x0.values().len() != part.total_dim() {
        return Err(Error::DimensionMismatch { expected: part.total_dim(), got: x0.values().len() });
    }
    if !x0.is_finite() {
        return Err(Error::NonFinite { what: "starting point", block: 0, iteration: 0 });
    }
    if matches!(config.method, Method::Bcgd) && problem.full_batch().is_none() {
        return Err(Error::NoFullGradient("cyclic block gradient descent needs a finite sum"));
    }

    let mut rng_batch = seed::rng_for(config.seed, stream::BATCH);
    let mut rng_order = seed::rng_for(config.seed, stream::ORDER);
    let mut buffers = Buffers::for_problem(problem);
    let mut x = x0.clone();

    let epoch_size = problem.epoch_size().max(1);
    let budget_samples = config.budget.epochs * epoch_size as f64;
    let start = Instant::now();

    let mut records = Vec::new();
    let mut samples_consumed = 0usize;
    let mut iterations = 0usize;
    let mut next_record = config.record_every;
    let mut ergodic = config.track_ergodic.then(|| ErgodicTracker {
        sum: vec![0.0; part.total_dim()],
        objective_sum: 0.0,
        weight: 0.0,
    });

    let record = |records: &mut Vec<TraceRecord>, x: &BlockPoint, epoch: f64, start: &Instant| {
        records.push(TraceRecord {
            epoch,
            seconds: start.elapsed().as_secs_f64(),
            objective: problem.objective(x).value(),
            metric: metric.map(|f| f(x)),
        });
    };
    record(&mut records, &x, 0.0, &start);

    let mut k = 0usize;
    while (samples_consumed as f64) + 1e-9 < budget_samples {
        k += 1;
        match config.method {
            Method::Bsg => {
                let batch = draw_batch(problem, &config.batch, k, &mut rng_batch)?;
                config.order.fill(&mut buffers.order, part.block_count(), &mut rng_order);
                let order = std::mem::take(&mut buffers.order);
                bsg_sweep(problem, &mut x, k, &config.stepsize, &order, &batch, &mut buffers)?;
                buffers.order = order;
                samples_consumed += batch.len();
            }
            Method::Sg => {
                let batch = draw_batch(problem, &config.batch, k, &mut rng_batch)?;
                sg_sweep(problem, &mut x, k, &config.stepsize, &batch, &mut buffers)?;
                samples_consumed += batch.len();
            }
            Method::Sbmd { blocks_per_iter } => {
                let batch = draw_batch(problem, &config.batch, k, &mut rng_batch)?;
                sbmd_sweep(
                    problem,
                    &mut x,
                    k,
                    blocks_per_iter,
                    &config.stepsize,
                    &batch,
                    &mut rng_order,
                    &mut buffers,
                )?;
                samples_consumed += batch.len();
            }
            Method::Bcgd => {
                let batch = problem
                    .full_batch()
                    .expect("checked above");
                let order: Vec<usize> = (0..part.block_count()).collect();
                let sched = StepsizeSchedule::lipschitz_only();
                bsg_sweep(problem, &mut x, k, &sched, &order, &batch, &mut buffers)?;
                samples_consumed += epoch_size;
            }
        }
        iterations = k;

        if let Some(tracker) = ergodic.as_mut() {
            let w = config.stepsize.base(k).unwrap_or(1.0);
            for (s, &v) in tracker.sum.iter_mut().zip(x.values()) {
                *s += w * v;
            }
            tracker.objective_sum += w * problem.objective(&x).value();
            tracker.weight += w;
        }

        let epoch = samples_consumed as f64 / epoch_size as f64;
        if epoch + 1e-12 >= next_record {
            record(&mut records, &x, epoch, &start);
            while next_record <= epoch + 1e-12 {
                next_record += config.record_every;
            }
            if let Some(limit) = config.budget.max_seconds {
                if start.elapsed().as_secs_f64() > limit {
                    break;
                }
            }
        }
    }

    let final_epoch = samples_consumed as f64 / epoch_size as f64;
    if records.last().map(|r| r.epoch) != Some(final_epoch) {
        record(&mut records, &x, final_epoch, &start);
    }

    let (ergodic_point, ergodic_objective) = match ergodic {
        Some(t) if t.weight > 0.0 => {
            let avg: Vec<f64> = t.sum.iter().map(|s| s / t.weight).collect();
            (Some(BlockPoint::new(part.clone(), avg)?), Some(t.objective_sum / t.weight))
        }
        _ => (None, None),
    };

    Ok(RunTrace {
        records,
        final_point: x,
        ergodic_point,
        ergodic_objective,
        iterations,
        samples_consumed,
    })
}

/// Block stochastic gradient run (Gauss-Seidel).
pub fn bsg_run<P: StochasticProblem>(
    problem: &P,
    x0: &BlockPoint,
    config: &SolverConfig,
    metric: Metric,
) -> Result<RunTrace> {
    run(problem, x0, &SolverConfig { method: Method::Bsg, ..config.clone() }, metric)
}

/// Plain stochastic gradient run (Jacobi).
pub fn sg_run<P: StochasticProblem>(
    problem: &P,
    x0: &BlockPoint,
    config: &SolverConfig,
    metric: Metric,
) -> Result<RunTrace> {
    run(problem, x0, &SolverConfig { method: Method::Sg, ..config.clone() }, metric)
}

/// Random block-selection run updating `blocks_per_iter` blocks per
/// iteration.
pub fn sbmd_run<P: StochasticProblem>(
    problem: &P,
    x0: &BlockPoint,
    blocks_per_iter: usize,
    config: &SolverConfig,
    metric: Metric,
) -> Result<RunTrace> {
    run(
        problem,
        x0,
        &SolverConfig { method: Method::Sbmd { blocks_per_iter }, ..config.clone() },
        metric,
    )
}

/// Deterministic cyclic block proximal gradient run with `1/L_i` steps.
pub fn bcgd_run<P: StochasticProblem>(
    problem: &P,
    x0: &BlockPoint,
    config: &SolverConfig,
    metric: Metric,
) -> Result<RunTrace> {
    run(problem, x0, &SolverConfig { method: Method::Bcgd, ..config.clone() }, metric)
}
