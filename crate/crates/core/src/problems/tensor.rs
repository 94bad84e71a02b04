//! Low-rank tensor recovery from dense Gaussian measurements:
//! `min_X (1/2N) sum_l (<G_l, X1 o X2 o X3> - b_l)^2 + lambda sum_d ||X_d||_1`
//! where `X1 o X2 o X3` is the rank-R reconstruction
//! `sum_r X1(:,r) (x) X2(:,r) (x) X3(:,r)`.
//!
//! Tensors are stored flat with the last mode fastest; factor matrices are
//! one block each, flattened column-major.

use std::sync::Arc;

use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::block::{BlockPartition, BlockPoint};
use crate::error::{Error, Result};
use crate::problem::{ConstraintSet, ObjectiveValue, Regularizer, StochasticProblem};
use crate::seed::{self, stream};

/// Indicator of the centered slab of `width` indices out of `size`.
pub fn slab_indicator(size: usize, width: usize) -> Result<Vec<f64>> {
    if width > size {
        return Err(Error::InvalidArgument(format!("slab width {width} exceeds mode size {size}")));
    }
    let start = (size - width) / 2;
    let mut u = vec![0.0; size];
    u[start..start + width].fill(1.0);
    Ok(u)
}

/// The benchmark shape: value 1 exactly where all three mode indices lie in
/// the centered slab, i.e. the rank-one tensor `u (x) u (x) u` with `u` the
/// slab indicator.
pub fn cube_tensor(sizes: [usize; 3], slab_width: usize) -> Result<Vec<f64>> {
    let us: Vec<Vec<f64>> = sizes
        .iter()
        .map(|&s| slab_indicator(s, slab_width))
        .collect::<Result<_>>()?;
    let mut t = vec![0.0; sizes[0] * sizes[1] * sizes[2]];
    let mut idx = 0;
    for i in 0..sizes[0] {
        for j in 0..sizes[1] {
            for k in 0..sizes[2] {
                t[idx] = us[0][i] * us[1][j] * us[2][k];
                idx += 1;
            }
        }
    }
    Ok(t)
}

#[derive(Debug, Clone)]
pub struct TensorRecoveryInstance {
    partition: Arc<BlockPartition>,
    sizes: [usize; 3],
    rank: usize,
    truth: Vec<f64>,
    /// N stacked measurement tensors, each of `sizes` entries.
    measurements: Vec<f64>,
    targets: Vec<f64>,
    regs: [Regularizer; 3],
}

impl TensorRecoveryInstance {
    /// Ground truth is the centered cube; measurements are i.i.d. standard
    /// Gaussian tensors `G_l` with `b_l = <G_l, truth>`. `rank` is the
    /// recovery rank of the factor variable, not of the truth (which is
    /// rank one).
    pub fn generate(
        sizes: [usize; 3],
        slab_width: usize,
        rank: usize,
        measurements: usize,
        l1_weight: f64,
        data_seed: u64,
    ) -> Result<Self> {
        let truth = cube_tensor(sizes, slab_width)?;
        let entries = truth.len();
        let mut rng = seed::rng_for(data_seed, stream::DATA);
        let mut g = vec![0.0; measurements * entries];
        for v in &mut g {
            *v = StandardNormal.sample(&mut rng);
        }
        let targets: Vec<f64> = (0..measurements)
            .map(|ell| {
                g[ell * entries..(ell + 1) * entries]
                    .iter()
                    .zip(&truth)
                    .map(|(a, b)| a * b)
                    .sum()
            })
            .collect();
        Self::from_parts(sizes, rank, truth, g, targets, l1_weight)
    }

    fn from_parts(
        sizes: [usize; 3],
        rank: usize,
        truth: Vec<f64>,
        measurements: Vec<f64>,
        targets: Vec<f64>,
        l1_weight: f64,
    ) -> Result<Self> {
        if rank == 0 {
            return Err(Error::InvalidArgument("recovery rank must be positive".into()));
        }
        if targets.is_empty() {
            return Err(Error::InvalidArgument("need at least one measurement".into()));
        }
        let reg = if l1_weight > 0.0 { Regularizer::l1(l1_weight) } else { Regularizer::Zero };
        let partition = Arc::new(BlockPartition::new(vec![
            sizes[0] * rank,
            sizes[1] * rank,
            sizes[2] * rank,
        ])?);
        Ok(Self {
            partition,
            sizes,
            rank,
            truth,
            measurements,
            targets,
            regs: [reg.clone(), reg.clone(), reg],
        })
    }

    pub fn sizes(&self) -> [usize; 3] {
        self.sizes
    }

    pub fn rank(&self) -> usize {
        self.rank
    }

    pub fn truth(&self) -> &[f64] {
        &self.truth
    }

    fn entries(&self) -> usize {
        self.sizes[0] * self.sizes[1] * self.sizes[2]
    }

    fn measurement(&self, ell: usize) -> &[f64] {
        let e = self.entries();
        &self.measurements[ell * e..(ell + 1) * e]
    }

    /// Rank-R reconstruction of the factor point.
    pub fn reconstruct(&self, x: &BlockPoint) -> Vec<f64> {
        let [i1, i2, i3] = self.sizes;
        let (a, b, c) = (x.block(0), x.block(1), x.block(2));
        let mut t = vec![0.0; self.entries()];
        for r in 0..self.rank {
            let (ar, br, cr) = (&a[r * i1..(r + 1) * i1], &b[r * i2..(r + 1) * i2], &c[r * i3..(r + 1) * i3]);
            let mut idx = 0;
            for &ai in ar {
                for &bj in br {
                    let w = ai * bj;
                    for &ck in cr {
                        t[idx] += w * ck;
                        idx += 1;
                    }
                }
            }
        }
        t
    }

    /// `||reconstruction - truth||_F / ||truth||_F`.
    pub fn relative_error(&self, x: &BlockPoint) -> Result<f64> {
        let truth_norm: f64 = self.truth.iter().map(|v| v * v).sum::<f64>().sqrt();
        if truth_norm == 0.0 {
            return Err(Error::InvalidArgument("ground truth tensor is zero".into()));
        }
        let t = self.reconstruct(x);
        let diff: f64 = t
            .iter()
            .zip(&self.truth)
            .map(|(a, b)| (a - b) * (a - b))
            .sum::<f64>()
            .sqrt();
        Ok(diff / truth_norm)
    }

    /// Contraction of one measurement tensor with the two factors other than
    /// `mode`, laid out like the `mode` factor block. The measurement value
    /// is `<X_mode, out>` and the partial gradient is the residual times
    /// `out`, so one contraction serves residual, gradient, and the
    /// Frobenius Lipschitz bound.
    fn contract(&self, mode: usize, x: &BlockPoint, g: &[f64], out: &mut [f64]) {
        let [i1, i2, i3] = self.sizes;
        out.fill(0.0);
        match mode {
            0 => {
                let (b, c) = (x.block(1), x.block(2));
                for r in 0..self.rank {
                    let br = &b[r * i2..(r + 1) * i2];
                    let cr = &c[r * i3..(r + 1) * i3];
                    let or = &mut out[r * i1..(r + 1) * i1];
                    for (i, o) in or.iter_mut().enumerate() {
                        let mut acc = 0.0;
                        for (j, &bj) in br.iter().enumerate() {
                            let slab = &g[(i * i2 + j) * i3..(i * i2 + j + 1) * i3];
                            let s: f64 = slab.iter().zip(cr).map(|(gv, cv)| gv * cv).sum();
                            acc += bj * s;
                        }
                        *o = acc;
                    }
                }
            }
            1 => {
                let (a, c) = (x.block(0), x.block(2));
                for r in 0..self.rank {
                    let ar = &a[r * i1..(r + 1) * i1];
                    let cr = &c[r * i3..(r + 1) * i3];
                    let or = &mut out[r * i2..(r + 1) * i2];
                    for (i, &ai) in ar.iter().enumerate() {
                        for (j, o) in or.iter_mut().enumerate() {
                            let slab = &g[(i * i2 + j) * i3..(i * i2 + j + 1) * i3];
                            let s: f64 = slab.iter().zip(cr).map(|(gv, cv)| gv * cv).sum();
                            *o += ai * s;
                        }
                    }
                }
            }
            2 => {
                let (a, b) = (x.block(0), x.block(1));
                for r in 0..self.rank {
                    let ar = &a[r * i1..(r + 1) * i1];
                    let br = &b[r * i2..(r + 1) * i2];
                    let or = &mut out[r * i3..(r + 1) * i3];
                    for (i, &ai) in ar.iter().enumerate() {
                        for (j, &bj) in br.iter().enumerate() {
                            let w = ai * bj;
                            let slab = &g[(i * i2 + j) * i3..(i * i2 + j + 1) * i3];
                            for (o, &gv) in or.iter_mut().zip(slab) {
                                *o += w * gv;
                            }
                        }
                    }
                }
            }
            _ => unreachable!("three factor blocks"),
        }
    }
}

impl StochasticProblem for TensorRecoveryInstance {
    type Sample = usize;

    fn partition(&self) -> &Arc<BlockPartition> {
        &self.partition
    }

    fn epoch_size(&self) -> usize {
        self.targets.len()
    }

    fn draw_batch(&self, rng: &mut ChaCha8Rng, m: usize) -> Vec<usize> {
        use rand::Rng;
        let n = self.targets.len();
        (0..m).map(|_| rng.random_range(0..n)).collect()
    }

    fn full_batch(&self) -> Option<Vec<usize>> {
        Some((0..self.targets.len()).collect())
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
        let dim = self.partition.block_dim(block);
        let mut contraction = vec![0.0; dim];
        out.fill(0.0);
        let factor = x.block(block);
        let mut lip = 0.0;
        for &ell in batch {
            self.contract(block, x, self.measurement(ell), &mut contraction);
            let residual =
                factor.iter().zip(&contraction).map(|(f, m)| f * m).sum::<f64>() - self.targets[ell];
            for (o, &m) in out.iter_mut().zip(&contraction) {
                *o += residual * m;
            }
            lip += contraction.iter().map(|m| m * m).sum::<f64>();
        }
        let inv_m = 1.0 / batch.len() as f64;
        out.iter_mut().for_each(|o| *o *= inv_m);
        Ok((lip * inv_m).max(f64::MIN_POSITIVE))
    }

    fn sample_objective(&self, x: &BlockPoint, batch: &[usize]) -> Result<f64> {
        if batch.is_empty() {
            return Err(Error::EmptyBatch);
        }
        let dim = self.partition.block_dim(0);
        let mut contraction = vec![0.0; dim];
        let factor = x.block(0);
        let mut sum = 0.0;
        for &ell in batch {
            self.contract(0, x, self.measurement(ell), &mut contraction);
            let residual =
                factor.iter().zip(&contraction).map(|(f, m)| f * m).sum::<f64>() - self.targets[ell];
            sum += 0.5 * residual * residual;
        }
        Ok(sum / batch.len() as f64)
    }

    fn objective(&self, x: &BlockPoint) -> ObjectiveValue {
        let full: Vec<usize> = (0..self.targets.len()).collect();
        let smooth = self.sample_objective(x, &full).expect("non-empty");
        let reg: f64 = (0..3).map(|d| self.regs[d].value(x.block(d))).sum();
        ObjectiveValue::Exact(smooth + reg)
    }

    fn regularizer(&self, block: usize) -> &Regularizer {
        &self.regs[block]
    }

    fn constraint(&self, _block: usize) -> &ConstraintSet {
        &ConstraintSet::All
    }

    fn block_lipschitz(&self, block: usize, x: &BlockPoint, batch: &[usize]) -> f64 {
        let dim = self.partition.block_dim(block);
        let mut contraction = vec![0.0; dim];
        let mut lip = 0.0;
        for &ell in batch {
            self.contract(block, x, self.measurement(ell), &mut contraction);
            lip += contraction.iter().map(|m| m * m).sum::<f64>();
        }
        (lip / batch.len() as f64).max(f64::MIN_POSITIVE)
    }
}
