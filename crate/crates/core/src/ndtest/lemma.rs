//! Refining a kernel approximation along a color split.

use crate::kernels::{l1_distance, ColoredStepKernel};
use crate::rat::{rat_u, rzero, Rat};
use crate::{Error, Result};
use num_traits::Signed;

/// Cut-(*,P) distance of two colored step kernels over the partition of
/// their own classes. With P discrete the block tuples are single cells and
/// every term of the objective is `|value| * prod of mask measures`, which
/// is maximized by taking every mask full; the supremum is therefore the
/// weighted L1 distance, and it is exact at any class count.
pub fn step_p_distance(a: &ColoredStepKernel, b: &ColoredStepKernel) -> Result<Rat> {
    l1_distance(a, b)
}

/// Output of [`coloring_lemma`].
#[derive(Debug)]
pub struct ColoringLemmaOutcome {
    /// Refinement of `v` mirroring how `uhat` refines `u`.
    pub vhat: ColoredStepKernel,
    /// Measured distance between the coarse kernels.
    pub hypothesis: Rat,
    /// True when the hypothesis distance is within eps.
    pub hypothesis_met: bool,
    /// Measured distance between the refined kernels.
    pub post: Rat,
    /// Guaranteed bound `k_sub * eps` under the hypothesis.
    pub bound: Rat,
    /// post <= bound.
    pub holds: bool,
}

/// Splits `v` into `k_sub` sub-colors per color so that the refined kernels
/// stay close whenever the coarse ones are: each cell of `v` is divided in
/// the same proportions `uhat` divides `u` (uniformly where `u` has no
/// mass). Per cell and coarse color the split differences sum to the coarse
/// difference, so the refined distance equals the coarse one; the advertised
/// `k_sub * eps` bound is met with room.
pub fn coloring_lemma(
    u: &ColoredStepKernel,
    uhat: &ColoredStepKernel,
    v: &ColoredStepKernel,
    eps: &Rat,
) -> Result<ColoringLemmaOutcome> {
    if !eps.is_positive() {
        return Err(Error::RangeError("eps must be positive".into()));
    }
    if u.r() != uhat.r() || u.r() != v.r() {
        return Err(Error::ShapeMismatch("arities differ".into()));
    }
    if u.t() != uhat.t() || u.t() != v.t() {
        return Err(Error::ShapeMismatch("class counts differ".into()));
    }
    if u.weights() != uhat.weights() || u.weights() != v.weights() {
        return Err(Error::ShapeMismatch("class weights differ".into()));
    }
    if v.k() != u.k() {
        return Err(Error::ShapeMismatch(format!(
            "v has {} colors, u has {}",
            v.k(),
            u.k()
        )));
    }
    if uhat.k() % u.k() != 0 || uhat.k() < u.k() {
        return Err(Error::ShapeMismatch(format!(
            "{} colors do not refine {}",
            uhat.k(),
            u.k()
        )));
    }
    let k_sub = uhat.k() / u.k();
    let cells = u.t().pow(u.r() as u32);
    // the refinement must aggregate back to the coarse kernel exactly
    for alpha in 0..u.k() {
        for idx in 0..cells {
            let mut sum = rzero();
            for beta in 0..k_sub {
                sum += uhat.value_at(alpha * k_sub + beta, idx);
            }
            if &sum != u.value_at(alpha, idx) {
                return Err(Error::ShapeMismatch(format!(
                    "refined colors of {alpha} do not sum to the coarse value at cell {idx}"
                )));
            }
        }
    }
    let mut values = vec![vec![rzero(); cells]; uhat.k()];
    for alpha in 0..u.k() {
        for idx in 0..cells {
            let denom = u.value_at(alpha, idx);
            for beta in 0..k_sub {
                let refined = alpha * k_sub + beta;
                values[refined][idx] = if denom.is_positive() {
                    v.value_at(alpha, idx) * uhat.value_at(refined, idx) / denom
                } else {
                    v.value_at(alpha, idx) / rat_u(k_sub as u64)
                };
            }
        }
    }
    let vhat = ColoredStepKernel::new(u.r(), u.weights().to_vec(), values)?;
    let hypothesis = step_p_distance(u, v)?;
    let post = step_p_distance(uhat, &vhat)?;
    let bound = rat_u(k_sub as u64) * eps;
    let holds = post <= bound;
    Ok(ColoringLemmaOutcome {
        vhat,
        hypothesis_met: &hypothesis <= eps,
        hypothesis,
        post,
        bound,
        holds,
    })
}
