//! Proximal mappings, projections, and the two block-update rules.
//!
//! Every operation here is an exact closed form; there are no inner iterative
//! solves. All functions are pure and safe to call concurrently.

use crate::problem::{ConstraintSet, Regularizer};

/// Which of the two block-update rules applies to a block.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum UpdateRule {
    /// Proximal step through the regularizer; for unconstrained blocks.
    Proximal,
    /// Projected step with a regularizer subgradient folded into the
    /// direction; for constrained blocks, where minimizing the nonsmooth
    /// term under the constraint has no easy closed form.
    ProjectedSubgradient,
}

impl UpdateRule {
    pub fn for_constraint(set: &ConstraintSet) -> Self {
        if set.is_whole_space() {
            UpdateRule::Proximal
        } else {
            UpdateRule::ProjectedSubgradient
        }
    }
}

/// Componentwise shrinkage `sign(v_j) * max(|v_j| - tau, 0)`, the proximal
/// mapping of `tau * ||.||_1`.
pub fn soft_threshold(v: &[f64], tau: f64, out: &mut [f64]) {
    assert!(tau >= 0.0, "shrinkage amount must be nonnegative");
    assert_eq!(v.len(), out.len());
    for (o, &x) in out.iter_mut().zip(v) {
        *o = x.signum() * (x.abs() - tau).max(0.0);
    }
}

/// Proximal block update: `argmin <g, u - x> + (1/2a)||u - x||^2 + r(u)`,
/// i.e. `prox_{a r}(x - a g)`. Used for unconstrained blocks.
pub fn prox_step(x: &[f64], g: &[f64], alpha: f64, r: &Regularizer, out: &mut [f64]) {
    assert!(alpha > 0.0, "stepsize must be positive");
    assert_eq!(x.len(), g.len());
    assert_eq!(x.len(), out.len());
    match r {
        Regularizer::Zero => {
            for ((o, &xi), &gi) in out.iter_mut().zip(x).zip(g) {
                *o = xi - alpha * gi;
            }
        }
        Regularizer::L1 { weight } => {
            let tau = alpha * weight;
            for ((o, &xi), &gi) in out.iter_mut().zip(x).zip(g) {
                let y = xi - alpha * gi;
                *o = y.signum() * (y.abs() - tau).max(0.0);
            }
        }
    }
}

/// Constrained block update: `P_X(x - a (g + r_sub))` with a caller-supplied
/// subgradient `r_sub` of the regularizer at `x`. Always feasible for `X`.
pub fn projected_subgradient_step(
    x: &[f64],
    g: &[f64],
    r_sub: &[f64],
    alpha: f64,
    set: &ConstraintSet,
    out: &mut [f64],
) {
    assert!(alpha > 0.0, "stepsize must be positive");
    assert_eq!(x.len(), g.len());
    assert_eq!(x.len(), r_sub.len());
    assert_eq!(x.len(), out.len());
    for (i, o) in out.iter_mut().enumerate() {
        *o = x[i] - alpha * (g[i] + r_sub[i]);
    }
    project_in_place(set, out);
}

/// Euclidean projection onto `set`.
pub fn project(set: &ConstraintSet, v: &[f64], out: &mut [f64]) {
    assert_eq!(v.len(), out.len());
    out.copy_from_slice(v);
    project_in_place(set, out);
}

/// In-place variant of [`project`].
pub fn project_in_place(set: &ConstraintSet, v: &mut [f64]) {
    match set {
        ConstraintSet::All => {}
        ConstraintSet::Box { lower, upper } => {
            assert_eq!(v.len(), lower.len());
            for ((x, &l), &u) in v.iter_mut().zip(lower).zip(upper) {
                *x = x.clamp(l, u);
            }
        }
        ConstraintSet::Ball { center, radius } => {
            assert_eq!(v.len(), center.len());
            let dist = v
                .iter()
                .zip(center)
                .map(|(x, c)| (x - c) * (x - c))
                .sum::<f64>()
                .sqrt();
            // The relative guard absorbs the rounding of a previous radial
            // scaling, making repeated projection a bit-exact fixed point.
            if dist > radius * (1.0 + 1e-12) {
                let scale = radius / dist;
                for (x, &c) in v.iter_mut().zip(center) {
                    *x = c + (*x - c) * scale;
                }
            }
        }
    }
}

/// Stochastic gradient mapping `(x_before - x_after) / alpha`, the
/// stationarity surrogate for a prox step of size `alpha`.
pub fn gradient_mapping(x_before: &[f64], x_after: &[f64], alpha: f64, out: &mut [f64]) {
    assert!(alpha > 0.0, "stepsize must be positive");
    assert_eq!(x_before.len(), x_after.len());
    assert_eq!(x_before.len(), out.len());
    for ((o, &b), &a) in out.iter_mut().zip(x_before).zip(x_after) {
        *o = (b - a) / alpha;
    }
}
