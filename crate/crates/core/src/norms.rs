//! Cut-type norms of step kernels, the doubled-edge density sandwich,
//! cut distances, and weak regularity.
//!
//! The suprema behind these norms run over measurable coordinate sets (or
//! `[-1,1]` test functions). On step kernels every objective is multilinear
//! in the per-class memberships, so optima sit at 0/1 memberships and exact
//! enumeration over class subsets is sound; `extreme_point_reduction` in the
//! test module compares against a fractional grid. The sandwich inequality
//! is stated in the literature for the symmetric cut norm; its proof only
//! manipulates one test set per coordinate, which is exactly the shape of
//! the norms here, and the invariant suite checks the containment exactly
//! on every corpus kernel.

use num_traits::{Signed, ToPrimitive, Zero};
use rand::Rng;
use rayon::prelude::*;

use crate::comb::{for_each_tuple, set_partitions};
use crate::kernels::{
    cell_index, common_refinement, step_average, CellPartition, ColoredStepKernel, StepKernel,
    StepKernelF,
};
use crate::limits::Limits;
use crate::rat::{rat_pow, rat_u, rone, rzero, to_f64, Rat};
use crate::rngutil::trial_rng;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NormMode {
    Exact,
    /// Coordinate-wise best response with random restarts; returns a
    /// certified lower bound (the witness value is evaluated exactly).
    Ascent { restarts: usize, seed: u64 },
}

#[derive(Debug, Clone)]
pub struct NormResult {
    pub value: Rat,
    /// One membership mask per coordinate (for the box norms) or one sign
    /// vector per coordinate (`true` = +1) for the test-function norm.
    pub witness: Vec<Vec<bool>>,
    pub exact: bool,
}

fn pow2_work(bits: usize) -> u128 {
    if bits >= 127 {
        u128::MAX
    } else {
        1u128 << bits
    }
}

type Cand = (Rat, u64, u64);

/// Larger value wins; ties go to the lexicographically smallest masks so the
/// parallel reduction is deterministic.
fn better(a: Cand, b: Cand) -> Cand {
    match a.0.cmp(&b.0) {
        std::cmp::Ordering::Greater => a,
        std::cmp::Ordering::Less => b,
        std::cmp::Ordering::Equal => {
            if (a.1, a.2) <= (b.1, b.2) {
                a
            } else {
                b
            }
        }
    }
}

fn decode_masks(mask: u64, t: usize, coords: usize) -> Vec<Vec<bool>> {
    (0..coords).map(|i| (0..t).map(|c| mask >> (i * t + c) & 1 == 1).collect()).collect()
}

// ---- cut-* norm --------------------------------------------------------------

pub fn cut_star_norm(w: &StepKernel, mode: NormMode, limits: &Limits) -> Result<NormResult> {
    match mode {
        NormMode::Exact => cut_star_exact(w, limits),
        NormMode::Ascent { restarts, seed } => Ok(cut_star_ascent(w, restarts, seed)),
    }
}

fn cut_star_exact(w: &StepKernel, limits: &Limits) -> Result<NormResult> {
    let t = w.t();
    let r = w.r();
    let coords = r - 1;
    let bits = t * coords;
    limits.check(pow2_work(bits).saturating_mul(t.pow(r as u32) as u128))?;
    let stride = t.pow(coords as u32);
    let best = (0..1u64 << bits)
        .into_par_iter()
        .map(|mask| {
            let m = last_marginals(w, mask, stride);
            let mut pos = rzero();
            let mut neg = rzero();
            let mut pos_mask = 0u64;
            let mut neg_mask = 0u64;
            for (u, mu) in m.iter().enumerate() {
                if mu.is_positive() {
                    pos += mu;
                    pos_mask |= 1 << u;
                } else if mu.is_negative() {
                    neg -= mu;
                    neg_mask |= 1 << u;
                }
            }
            // ties prefer the positive branch via mask order
            if pos >= neg {
                (pos, mask, pos_mask)
            } else {
                (neg, mask, neg_mask)
            }
        })
        .reduce_with(better)
        .expect("at least one prefix mask");
    let mut witness = decode_masks(best.1, t, coords);
    witness.push((0..t).map(|u| best.2 >> u & 1 == 1).collect());
    Ok(NormResult { value: best.0, witness, exact: true })
}

/// Marginal of the boxed integral in the last coordinate: entry u is
/// the integral over (prefix in mask) x class u, class weights included.
fn last_marginals(w: &StepKernel, mask: u64, stride: usize) -> Vec<Rat> {
    let t = w.t();
    let coords = w.r() - 1;
    let mut m = vec![rzero(); t];
    for_each_tuple(t, coords, |cprime| {
        for (i, &c) in cprime.iter().enumerate() {
            if mask >> (i * t + c) & 1 == 0 {
                return;
            }
        }
        let mut wt = rone();
        for &c in cprime {
            wt *= &w.weights()[c];
        }
        let pidx = cell_index(cprime, t);
        for (u, mu) in m.iter_mut().enumerate() {
            let v = &w.values()[pidx + u * stride];
            if !v.is_zero() {
                *mu += &wt * &w.weights()[u] * v;
            }
        }
    });
    m
}

/// Signed integral of W over the box given by one membership mask per
/// coordinate.
pub fn eval_box(w: &StepKernel, masks: &[Vec<bool>]) -> Rat {
    let t = w.t();
    let mut total = rzero();
    for_each_tuple(t, w.r(), |cell| {
        if cell.iter().enumerate().any(|(i, &c)| !masks[i][c]) {
            return;
        }
        let v = w.value(cell);
        if v.is_zero() {
            return;
        }
        let mut wt = rone();
        for &c in cell {
            wt *= &w.weights()[c];
        }
        total += wt * v;
    });
    total
}

fn cut_star_ascent(w: &StepKernel, restarts: usize, seed: u64) -> NormResult {
    let t = w.t();
    let r = w.r();
    let mut best: Option<(Rat, Vec<Vec<bool>>)> = None;
    for restart in 0..restarts.max(1) {
        let mut rng = trial_rng(seed, restart as u64);
        for flip in [false, true] {
            let mut masks: Vec<Vec<bool>> =
                (0..r).map(|_| (0..t).map(|_| rng.gen_bool(0.5)).collect()).collect();
            let sign = if flip { -rone() } else { rone() };
            let mut current = eval_box(w, &masks) * &sign;
            for _ in 0..64 {
                let mut improved = false;
                for j in 0..r {
                    let m = coord_marginals(w, &masks, j);
                    // best response includes exactly the strictly positive
                    // marginals: the smallest optimal subset
                    let cand: Vec<bool> = m.iter().map(|v| (v * &sign).is_positive()).collect();
                    let val: Rat =
                        m.iter().map(|v| v * &sign).filter(|v| v.is_positive()).sum();
                    if val > current {
                        masks[j] = cand;
                        current = val;
                        improved = true;
                    }
                }
                if !improved {
                    break;
                }
            }
            if current.is_negative() {
                continue;
            }
            if best.as_ref().map_or(true, |(v, _)| current > *v) {
                best = Some((current, masks));
            }
        }
    }
    let (value, witness) = best.unwrap();
    NormResult { value, witness, exact: false }
}

/// Marginals of the boxed integral with respect to coordinate j's
/// memberships (other coordinates fixed by their masks).
fn coord_marginals(w: &StepKernel, masks: &[Vec<bool>], j: usize) -> Vec<Rat> {
    let t = w.t();
    let mut m = vec![rzero(); t];
    for_each_tuple(t, w.r(), |cell| {
        if cell.iter().enumerate().any(|(i, &c)| i != j && !masks[i][c]) {
            return;
        }
        let v = w.value(cell);
        if v.is_zero() {
            return;
        }
        let mut wt = rone();
        for &c in cell {
            wt *= &w.weights()[c];
        }
        m[cell[j]] += wt * v;
    });
    m
}

// ---- cut-(*,Q) norm ----------------------------------------------------------

pub fn cut_star_p_norm(
    w: &StepKernel,
    qp: &CellPartition,
    mode: NormMode,
    limits: &Limits,
) -> Result<NormResult> {
    if qp.t() != w.t() {
        return Err(Error::ShapeMismatch(format!(
            "partition of {} classes against kernel with {}",
            qp.t(),
            w.t()
        )));
    }
    match mode {
        NormMode::Exact => cut_star_p_exact(w, qp, limits),
        NormMode::Ascent { restarts, seed } => Ok(cut_star_p_ascent(w, qp, restarts, seed)),
    }
}

fn cut_star_p_exact(w: &StepKernel, qp: &CellPartition, limits: &Limits) -> Result<NormResult> {
    let t = w.t();
    let r = w.r();
    let coords = r - 1;
    let bits = t * coords;
    let blocks = qp.block_count();
    let btuples = blocks.pow(coords as u32) as u128;
    let block_work: u128 = (0..blocks)
        .map(|b| {
            let s = qp.block(b).len();
            pow2_work(s).saturating_mul(btuples * s as u128)
        })
        .sum();
    limits.check(
        pow2_work(bits).saturating_mul(t.pow(r as u32) as u128 + block_work),
    )?;
    let stride = t.pow(coords as u32);
    let btuples = blocks.pow(coords as u32);
    let best = (0..1u64 << bits)
        .into_par_iter()
        .map(|mask| {
            // m[prefix block tuple][last class]
            let mut m = vec![vec![rzero(); t]; btuples];
            for_each_tuple(t, coords, |cprime| {
                for (i, &c) in cprime.iter().enumerate() {
                    if mask >> (i * t + c) & 1 == 0 {
                        return;
                    }
                }
                let mut wt = rone();
                for &c in cprime {
                    wt *= &w.weights()[c];
                }
                let btuple: Vec<usize> = cprime.iter().map(|&c| qp.label(c)).collect();
                let bidx = cell_index(&btuple, blocks);
                let pidx = cell_index(cprime, t);
                for u in 0..t {
                    let v = &w.values()[pidx + u * stride];
                    if !v.is_zero() {
                        m[bidx][u] += &wt * &w.weights()[u] * v;
                    }
                }
            });
            // the last coordinate decouples per block of qp
            let mut total = rzero();
            let mut last_mask = 0u64;
            for b in 0..blocks {
                let members = qp.block(b);
                let mut best_val = rzero();
                let mut best_x = 0u64;
                for x in 0..1u64 << members.len() {
                    let mut val = rzero();
                    for row in &m {
                        let mut s = rzero();
                        for (pos, &c) in members.iter().enumerate() {
                            if x >> pos & 1 == 1 {
                                s += &row[c];
                            }
                        }
                        val += s.abs();
                    }
                    if val > best_val {
                        best_val = val;
                        best_x = x;
                    }
                }
                total += best_val;
                for (pos, &c) in members.iter().enumerate() {
                    if best_x >> pos & 1 == 1 {
                        last_mask |= 1 << c;
                    }
                }
            }
            (total, mask, last_mask)
        })
        .reduce_with(better)
        .expect("at least one prefix mask");
    let mut witness = decode_masks(best.1, t, coords);
    witness.push((0..t).map(|u| best.2 >> u & 1 == 1).collect());
    Ok(NormResult { value: best.0, witness, exact: true })
}

/// Exact value of the partition norm's objective at given masks: sum over
/// block tuples of the absolute box-restricted integral.
pub fn eval_probe(w: &StepKernel, qp: &CellPartition, masks: &[Vec<bool>]) -> Rat {
    let t = w.t();
    let blocks = qp.block_count();
    let mut acc = vec![rzero(); blocks.pow(w.r() as u32)];
    for_each_tuple(t, w.r(), |cell| {
        if cell.iter().enumerate().any(|(i, &c)| !masks[i][c]) {
            return;
        }
        let v = w.value(cell);
        if v.is_zero() {
            return;
        }
        let mut wt = rone();
        for &c in cell {
            wt *= &w.weights()[c];
        }
        let btuple: Vec<usize> = cell.iter().map(|&c| qp.label(c)).collect();
        acc[cell_index(&btuple, blocks)] += wt * v;
    });
    acc.into_iter().map(|v| v.abs()).sum()
}

fn cut_star_p_ascent(
    w: &StepKernel,
    qp: &CellPartition,
    restarts: usize,
    seed: u64,
) -> NormResult {
    let t = w.t();
    let r = w.r();
    let wf = w.to_f64();
    let score = |masks: &[Vec<bool>]| probe_f64(&wf, qp, masks);
    let mut best: Option<(f64, Vec<Vec<bool>>)> = None;
    for restart in 0..restarts.max(1) {
        let mut rng = trial_rng(seed, restart as u64);
        let mut masks: Vec<Vec<bool>> =
            (0..r).map(|_| (0..t).map(|_| rng.gen_bool(0.5)).collect()).collect();
        let mut current = score(&masks);
        for _ in 0..32 {
            let mut improved = false;
            for j in 0..r {
                for c in 0..t {
                    masks[j][c] = !masks[j][c];
                    let val = score(&masks);
                    if val > current + 1e-15 {
                        current = val;
                        improved = true;
                    } else {
                        masks[j][c] = !masks[j][c];
                    }
                }
            }
            if !improved {
                break;
            }
        }
        if best.as_ref().map_or(true, |(v, _)| current > *v) {
            best = Some((current, masks));
        }
    }
    let (_, witness) = best.unwrap();
    // the reported value is the exact evaluation of the found witness
    let value = eval_probe(w, qp, &witness);
    NormResult { value, witness, exact: false }
}

fn probe_f64(w: &StepKernelF, qp: &CellPartition, masks: &[Vec<bool>]) -> f64 {
    let t = w.t;
    let blocks = qp.block_count();
    let mut acc = vec![0f64; blocks.pow(w.r as u32)];
    for_each_tuple(t, w.r, |cell| {
        if cell.iter().enumerate().any(|(i, &c)| !masks[i][c]) {
            return;
        }
        let mut wt = 1f64;
        for &c in cell {
            wt *= w.weights[c];
        }
        let btuple: Vec<usize> = cell.iter().map(|&c| qp.label(c)).collect();
        acc[cell_index(&btuple, blocks)] += wt * w.value(cell);
    });
    acc.into_iter().map(f64::abs).sum()
}

// ---- test-function norm ------------------------------------------------------

/// Norm with `[-1,1]` test functions on the first r-1 coordinates and the
/// last coordinate integrated in absolute value. Optima sit at +-1 class
/// sign vectors.
pub fn boxplus_norm(w: &StepKernel, mode: NormMode, limits: &Limits) -> Result<NormResult> {
    match mode {
        NormMode::Exact => boxplus_exact(w, limits),
        NormMode::Ascent { restarts, seed } => Ok(boxplus_ascent(w, restarts, seed)),
    }
}

fn boxplus_exact(w: &StepKernel, limits: &Limits) -> Result<NormResult> {
    let t = w.t();
    let r = w.r();
    let coords = r - 1;
    let bits = t * coords;
    limits.check(pow2_work(bits).saturating_mul(t.pow(r as u32) as u128))?;
    let stride = t.pow(coords as u32);
    let best = (0..1u64 << bits)
        .into_par_iter()
        .map(|pattern| {
            let mut m = vec![rzero(); t];
            for_each_tuple(t, coords, |cprime| {
                let mut neg = false;
                for (i, &c) in cprime.iter().enumerate() {
                    if pattern >> (i * t + c) & 1 == 0 {
                        neg = !neg;
                    }
                }
                let mut wt = rone();
                for &c in cprime {
                    wt *= &w.weights()[c];
                }
                if neg {
                    wt = -wt;
                }
                let pidx = cell_index(cprime, t);
                for (u, mu) in m.iter_mut().enumerate() {
                    let v = &w.values()[pidx + u * stride];
                    if !v.is_zero() {
                        *mu += &wt * &w.weights()[u] * v;
                    }
                }
            });
            let mut val = rzero();
            let mut last = 0u64;
            for (u, mu) in m.iter().enumerate() {
                val += mu.abs();
                if !mu.is_negative() {
                    last |= 1 << u;
                }
            }
            (val, pattern, last)
        })
        .reduce_with(better)
        .expect("at least one sign pattern");
    let mut witness = decode_masks(best.1, t, coords);
    witness.push((0..t).map(|u| best.2 >> u & 1 == 1).collect());
    Ok(NormResult { value: best.0, witness, exact: true })
}

fn boxplus_ascent(w: &StepKernel, restarts: usize, seed: u64) -> NormResult {
    let t = w.t();
    let coords = w.r() - 1;
    let objective = |signs: &[Vec<bool>]| -> Rat {
        let stride = t.pow(coords as u32);
        let mut m = vec![rzero(); t];
        for_each_tuple(t, coords, |cprime| {
            let neg = cprime.iter().enumerate().filter(|&(i, &c)| !signs[i][c]).count() % 2 == 1;
            let mut wt = rone();
            for &c in cprime {
                wt *= &w.weights()[c];
            }
            if neg {
                wt = -wt;
            }
            let pidx = cell_index(cprime, t);
            for (u, mu) in m.iter_mut().enumerate() {
                let v = &w.values()[pidx + u * stride];
                if !v.is_zero() {
                    *mu += &wt * &w.weights()[u] * v;
                }
            }
        });
        m.into_iter().map(|v| v.abs()).sum()
    };
    let mut best: Option<(Rat, Vec<Vec<bool>>)> = None;
    for restart in 0..restarts.max(1) {
        let mut rng = trial_rng(seed, restart as u64);
        let mut signs: Vec<Vec<bool>> =
            (0..coords).map(|_| (0..t).map(|_| rng.gen_bool(0.5)).collect()).collect();
        let mut current = objective(&signs);
        for _ in 0..32 {
            let mut improved = false;
            for j in 0..coords {
                for c in 0..t {
                    signs[j][c] = !signs[j][c];
                    let val = objective(&signs);
                    if val > current {
                        current = val;
                        improved = true;
                    } else {
                        signs[j][c] = !signs[j][c];
                    }
                }
            }
            if !improved {
                break;
            }
        }
        if best.as_ref().map_or(true, |(v, _)| current > *v) {
            best = Some((current, signs));
        }
    }
    let (value, mut witness) = best.unwrap();
    witness.push(vec![true; t]);
    NormResult { value, witness, exact: false }
}

// ---- doubled-edge density and the sandwich -----------------------------------

/// Exact product density of the 2-fold blow-up of a single r-edge. Uses the
/// square form in the last coordinate, so the work is t^(2r-1) 2^(r-1).
pub fn kr2_density(w: &StepKernel, limits: &Limits) -> Result<Rat> {
    let t = w.t();
    let r = w.r();
    limits.check((t as u128).saturating_pow(2 * r as u32))?;
    let coords = r - 1;
    let mut total = rzero();
    let mut cell = vec![0usize; r];
    for_each_tuple(t, 2 * coords, |c| {
        let mut wt = rone();
        for &ci in c {
            wt *= &w.weights()[ci];
        }
        let mut a = rzero();
        for u in 0..t {
            let mut prod = w.weights()[u].clone();
            'eps: for eps in 0..1usize << coords {
                let mut cl = cell.clone();
                for (i, ci) in cl.iter_mut().enumerate().take(coords) {
                    *ci = c[2 * i + (eps >> i & 1)];
                }
                cl[r - 1] = u;
                prod *= w.value(&cl);
                if prod.is_zero() {
                    break 'eps;
                }
            }
            a += prod;
        }
        total += wt * &a * &a;
    });
    let _ = &mut cell;
    Ok(total)
}

pub fn kr2_f64(w: &StepKernelF) -> f64 {
    let t = w.t;
    let r = w.r;
    let coords = r - 1;
    let mut total = 0f64;
    for_each_tuple(t, 2 * coords, |c| {
        let mut wt = 1f64;
        for &ci in c {
            wt *= w.weights[ci];
        }
        let mut a = 0f64;
        let mut cl = vec![0usize; r];
        for u in 0..t {
            let mut prod = w.weights[u];
            for eps in 0..1usize << coords {
                for i in 0..coords {
                    cl[i] = c[2 * i + (eps >> i & 1)];
                }
                cl[r - 1] = u;
                prod *= w.value(&cl);
            }
            a += prod;
        }
        total += wt * a * a;
    });
    total
}

#[derive(Debug, Clone)]
pub struct Sandwich {
    pub r: usize,
    /// 2^-r times the doubled-edge density; a lower bound for the cut-* norm.
    pub lower: Rat,
    pub kr2: Rat,
    /// Float view of kr2^(1/2^r), the upper bound.
    pub upper_f64: f64,
}

impl Sandwich {
    /// Exact containment checks: lower <= cut and cut^(2^r) <= kr2.
    pub fn contains(&self, cut: &Rat) -> (bool, bool) {
        (self.lower <= *cut, rat_pow(cut, 1u32 << self.r) <= self.kr2)
    }
}

/// Both sandwich bounds for a kernel with sup norm at most 1.
pub fn sandwich_bounds(w: &StepKernel, limits: &Limits) -> Result<Sandwich> {
    if w.max_abs() > rone() {
        return Err(Error::RangeError("sandwich bounds need |W| <= 1".into()));
    }
    let r = w.r();
    let kr2 = kr2_density(w, limits)?;
    let lower = &kr2 / rat_u(1u64 << r);
    let upper_f64 = to_f64(&kr2).powf(1.0 / (1u64 << r) as f64);
    Ok(Sandwich { r, lower, kr2, upper_f64 })
}

// ---- colored cut distance ----------------------------------------------------

/// Sum over colors of the chosen norm of the per-color difference. Kernels
/// on different class structures are aligned on their common refinement
/// first; a partition argument requires identical class structures.
pub fn cut_distance(
    u: &ColoredStepKernel,
    v: &ColoredStepKernel,
    qp: Option<&CellPartition>,
    mode: NormMode,
    limits: &Limits,
) -> Result<Rat> {
    if u.r() != v.r() || u.k() != v.k() {
        return Err(Error::ShapeMismatch(format!(
            "kernels ({},{} colors) vs ({},{} colors)",
            u.r(),
            u.k(),
            v.r(),
            v.k()
        )));
    }
    let (a, b) = if u.weights() == v.weights() {
        (u.clone(), v.clone())
    } else {
        if qp.is_some() {
            return Err(Error::ShapeMismatch(
                "partition argument needs kernels on the same classes".into(),
            ));
        }
        common_refinement(u, v)?
    };
    let mut total = rzero();
    for color in 0..a.k() {
        let diff = a.component(color).diff(&b.component(color))?;
        let res = match qp {
            Some(q) => cut_star_p_norm(&diff, q, mode, limits)?,
            None => cut_star_norm(&diff, mode, limits)?,
        };
        total += res.value;
    }
    Ok(total)
}

// ---- weak regularity ----------------------------------------------------------

#[derive(Debug, Clone)]
pub enum ProbeMode {
    /// Every partition of the class set with at most `probe_blocks` blocks,
    /// all norms exact.
    Exhaustive,
    /// Coarsenings of the returned partition, sampled groupings and a short
    /// move-based climb; witness values are evaluated exactly but the family
    /// is not exhausted.
    Heuristic { samples: usize, moves: usize },
    /// No probe stage; the report's deviation is the per-color cut-* residual.
    None,
}

#[derive(Debug, Clone)]
pub struct RegularityOptions {
    pub eps: Rat,
    pub probe_blocks: usize,
    pub mode: ProbeMode,
    pub cap_override: Option<usize>,
    pub seed: u64,
}

impl RegularityOptions {
    pub fn exhaustive(eps: Rat, probe_blocks: usize) -> Self {
        RegularityOptions { eps, probe_blocks, mode: ProbeMode::Exhaustive, cap_override: None, seed: 0 }
    }
}

#[derive(Debug, Clone)]
pub struct Regularity {
    pub partition: CellPartition,
    pub step: ColoredStepKernel,
    pub iterations: usize,
    pub cap: usize,
    /// Largest probe deviation seen for the returned pair.
    pub deviation: Rat,
    /// True when the probe family was exhaustive with exact norms.
    pub deviation_exact: bool,
    pub probes_tested: usize,
    pub class_bound_log10: f64,
    pub class_bound_ok: bool,
}

/// Energy-increment iteration cap: ceil(4 k^2 / eps^2).
pub fn regularity_cap(k: usize, eps: &Rat) -> usize {
    let v = rat_u(4 * (k * k) as u64) / (eps * eps);
    v.ceil().to_integer().to_usize().unwrap_or(usize::MAX)
}

/// log10 of the class-count bound (2t)^((rk+1)^(4k^2/eps^2)).
pub fn class_bound_log10(r: usize, k: usize, eps: &Rat, t: usize) -> f64 {
    let e = to_f64(&(rat_u(4 * (k * k) as u64) / (eps * eps)));
    let inner = ((r * k + 1) as f64).ln() * e;
    let exponent = inner.exp();
    exponent * (2.0 * t as f64).log10()
}

struct ProbeOutcome {
    deviation: Rat,
    exact: bool,
    tested: usize,
    worst: Option<(CellPartition, Vec<Vec<Vec<bool>>>)>,
}

/// Approximates a colored kernel by its step average over a partition of the
/// class set, refining while any color's cut-* deviation exceeds eps/(2k) or
/// any probe partition sees total deviation above eps. Every refinement
/// strictly splits the partition (a violating witness cannot be measurable
/// in the current partition), so the loop ends after at most t-1 splits; the
/// energy-increment cap is still enforced and a cap hit is an error, never a
/// silently accepted result.
pub fn weak_regularity(
    w: &ColoredStepKernel,
    opts: &RegularityOptions,
    limits: &Limits,
) -> Result<Regularity> {
    if !opts.eps.is_positive() {
        return Err(Error::RangeError("eps must be positive".into()));
    }
    let t = w.t();
    let k = w.k();
    let cap = opts.cap_override.unwrap_or_else(|| regularity_cap(k, &opts.eps));
    let threshold = &opts.eps / rat_u(2 * k as u64);
    let mut q = CellPartition::trivial(t);
    let mut iterations = 0usize;
    loop {
        let v = step_average(w, &q);
        let mut witness_masks: Option<Vec<Vec<bool>>> = None;
        for color in 0..k {
            let diff = w.component(color).diff(&v.component(color))?;
            let res = cut_star_best_effort(&diff, limits, opts.seed)?;
            if res.value > threshold {
                witness_masks = Some(res.witness);
                break;
            }
        }
        if let Some(masks) = witness_masks {
            q = refine_by_masks(&q, &masks);
            iterations += 1;
            if iterations > cap {
                return Err(cap_error(cap, w, &q));
            }
            continue;
        }
        let probe = probe_deviation(w, &v, &q, opts, limits)?;
        if probe.deviation <= opts.eps {
            let log10 = class_bound_log10(w.r(), k, &opts.eps, t);
            let ok = (q.block_count() as f64).log10() <= log10 + 1e-12;
            return Ok(Regularity {
                partition: q,
                step: v,
                iterations,
                cap,
                deviation: probe.deviation,
                deviation_exact: probe.exact,
                probes_tested: probe.tested,
                class_bound_log10: log10,
                class_bound_ok: ok,
            });
        }
        let (qp, wits) = probe.worst.expect("violation carries a witness");
        q = q.meet(&qp);
        for masks in &wits {
            q = refine_by_masks(&q, masks);
        }
        iterations += 1;
        if iterations > cap {
            return Err(cap_error(cap, w, &q));
        }
    }
}

fn cap_error(cap: usize, w: &ColoredStepKernel, q: &CellPartition) -> Error {
    let deviation = {
        let v = step_average(w, q);
        let mut d = 0f64;
        for color in 0..w.k() {
            if let Ok(diff) = w.component(color).diff(&v.component(color)) {
                let (val, _) = cut_star_f64(&diff.to_f64(), 4, 0);
                d += val;
            }
        }
        d
    };
    Error::RegularityCapExceeded { cap, deviation }
}

fn refine_by_masks(q: &CellPartition, masks: &[Vec<bool>]) -> CellPartition {
    let mut out = q.clone();
    for mask in masks {
        out = out.split_by(mask);
    }
    out
}

fn cut_star_best_effort(w: &StepKernel, limits: &Limits, seed: u64) -> Result<NormResult> {
    let bits = w.t() * (w.r() - 1);
    let work = pow2_work(bits).saturating_mul(w.t().pow(w.r() as u32) as u128);
    if limits.check(work).is_ok() {
        cut_star_exact(w, limits)
    } else {
        let mut res = cut_star_ascent(w, 8, seed);
        // re-evaluate the witness exactly so the threshold test is sound
        res.value = eval_box(w, &res.witness).abs();
        Ok(res)
    }
}

fn probe_deviation(
    w: &ColoredStepKernel,
    v: &ColoredStepKernel,
    q: &CellPartition,
    opts: &RegularityOptions,
    limits: &Limits,
) -> Result<ProbeOutcome> {
    let t = w.t();
    let k = w.k();
    let diffs: Vec<StepKernel> =
        (0..k).map(|c| w.component(c).diff(&v.component(c))).collect::<Result<_>>()?;
    match &opts.mode {
        ProbeMode::None => {
            let mut total = rzero();
            let mut exact = true;
            for diff in &diffs {
                let res = cut_star_best_effort(diff, limits, opts.seed)?;
                exact &= res.exact;
                total += res.value;
            }
            Ok(ProbeOutcome { deviation: total, exact, tested: 0, worst: None })
        }
        ProbeMode::Exhaustive => {
            let mut best: Option<(Rat, CellPartition, Vec<Vec<Vec<bool>>>)> = None;
            let parts = set_partitions(t, opts.probe_blocks);
            let tested = parts.len();
            for labels in parts {
                let qp = CellPartition::new(labels).unwrap();
                let mut total = rzero();
                let mut wits = Vec::with_capacity(k);
                for diff in &diffs {
                    let res = cut_star_p_exact(diff, &qp, limits)?;
                    total += res.value;
                    wits.push(res.witness);
                }
                if best.as_ref().map_or(true, |(b, _, _)| total > *b) {
                    best = Some((total, qp, wits));
                }
            }
            let (deviation, qp, wits) = best.expect("family contains the trivial partition");
            Ok(ProbeOutcome { deviation, exact: true, tested, worst: Some((qp, wits)) })
        }
        ProbeMode::Heuristic { samples, moves } => {
            let blocks = q.block_count();
            let mut candidates: Vec<CellPartition> = vec![CellPartition::trivial(t)];
            // coarsenings of q: group its blocks
            let groupings: Vec<Vec<usize>> = if blocks <= 9 {
                let all = set_partitions(blocks, opts.probe_blocks);
                if all.len() <= *samples {
                    all
                } else {
                    sample_groupings(blocks, opts.probe_blocks, *samples, opts.seed)
                }
            } else {
                sample_groupings(blocks, opts.probe_blocks, *samples, opts.seed)
            };
            for g in groupings {
                let labels: Vec<usize> = (0..t).map(|c| g[q.label(c)]).collect();
                candidates.push(
                    CellPartition::new(normalize_labels(labels)).expect("dense labels"),
                );
            }
            let mut tested = 0usize;
            let mut best: Option<(Rat, CellPartition, Vec<Vec<Vec<bool>>>)> = None;
            let score = |qp: &CellPartition, tested: &mut usize| -> Result<(Rat, Vec<Vec<Vec<bool>>>)> {
                *tested += 1;
                let mut total = rzero();
                let mut wits = Vec::with_capacity(k);
                for diff in &diffs {
                    let res = cut_star_p_best_effort(diff, qp, limits, opts.seed)?;
                    total += res.value;
                    wits.push(res.witness);
                }
                Ok((total, wits))
            };
            for qp in &candidates {
                let (total, wits) = score(qp, &mut tested)?;
                if best.as_ref().map_or(true, |(b, _, _)| total > *b) {
                    best = Some((total, qp.clone(), wits));
                }
            }
            // short adversarial climb: move one q-block to another group
            let mut rng = trial_rng(opts.seed, 0x9e3779b97f4a7c15);
            for _ in 0..*moves {
                let (bval, bq, _) = best.as_ref().unwrap();
                if blocks < 2 {
                    break;
                }
                let mut labels: Vec<usize> = bq.labels().to_vec();
                let shift_block = rng.gen_range(0..blocks);
                let target = rng.gen_range(0..opts.probe_blocks);
                for c in 0..t {
                    if q.label(c) == shift_block {
                        labels[c] = target.min(bq.block_count().min(opts.probe_blocks) - 1);
                    }
                }
                let labels = normalize_labels(labels);
                if CellPartition::new(labels.clone()).map_or(true, |p| p.block_count() > opts.probe_blocks) {
                    continue;
                }
                let qp = CellPartition::new(labels).unwrap();
                let (total, wits) = score(&qp, &mut tested)?;
                if total > *bval {
                    best = Some((total, qp, wits));
                }
            }
            let (deviation, qp, wits) = best.unwrap();
            Ok(ProbeOutcome { deviation, exact: false, tested, worst: Some((qp, wits)) })
        }
    }
}

fn cut_star_p_best_effort(
    w: &StepKernel,
    qp: &CellPartition,
    limits: &Limits,
    seed: u64,
) -> Result<NormResult> {
    let bits = w.t() * (w.r() - 1);
    let work = pow2_work(bits)
        .saturating_mul((w.t().pow(w.r() as u32) as u128).saturating_mul(4));
    if limits.check(work).is_ok() {
        cut_star_p_exact(w, qp, limits)
    } else {
        Ok(cut_star_p_ascent(w, qp, 6, seed))
    }
}

fn sample_groupings(blocks: usize, groups: usize, samples: usize, seed: u64) -> Vec<Vec<usize>> {
    let mut out = Vec::with_capacity(samples);
    for i in 0..samples {
        let mut rng = trial_rng(seed, 0x70_000 + i as u64);
        let g: Vec<usize> = (0..blocks).map(|_| rng.gen_range(0..groups)).collect();
        out.push(normalize_labels(g));
    }
    out
}

fn normalize_labels(labels: Vec<usize>) -> Vec<usize> {
    let mut map = std::collections::BTreeMap::new();
    labels
        .into_iter()
        .map(|l| {
            let next = map.len();
            *map.entry(l).or_insert(next)
        })
        .collect()
}

/// Float ascent for the cut-* norm, for scales beyond exact enumeration.
/// Returns the best box value found and its masks.
pub fn cut_star_f64(w: &StepKernelF, restarts: usize, seed: u64) -> (f64, Vec<Vec<bool>>) {
    let t = w.t;
    let r = w.r;
    let eval = |masks: &[Vec<bool>]| -> f64 {
        let mut total = 0f64;
        for_each_tuple(t, r, |cell| {
            if cell.iter().enumerate().any(|(i, &c)| !masks[i][c]) {
                return;
            }
            let mut wt = 1f64;
            for &c in cell {
                wt *= w.weights[c];
            }
            total += wt * w.value(cell);
        });
        total
    };
    let mut best: Option<(f64, Vec<Vec<bool>>)> = None;
    for restart in 0..restarts.max(1) {
        let mut rng = trial_rng(seed, restart as u64);
        for sign in [1f64, -1f64] {
            let mut masks: Vec<Vec<bool>> =
                (0..r).map(|_| (0..t).map(|_| rng.gen_bool(0.5)).collect()).collect();
            let mut current = sign * eval(&masks);
            for _ in 0..64 {
                let mut improved = false;
                for j in 0..r {
                    // marginals for coordinate j
                    let mut m = vec![0f64; t];
                    for_each_tuple(t, r, |cell| {
                        if cell.iter().enumerate().any(|(i, &c)| i != j && !masks[i][c]) {
                            return;
                        }
                        let mut wt = 1f64;
                        for &c in cell {
                            wt *= w.weights[c];
                        }
                        m[cell[j]] += sign * wt * w.value(cell);
                    });
                    let cand: Vec<bool> = m.iter().map(|&v| v > 0.0).collect();
                    let val: f64 = m.iter().filter(|&&v| v > 0.0).sum();
                    if val > current + 1e-15 {
                        masks[j] = cand;
                        current = val;
                        improved = true;
                    }
                }
                if !improved {
                    break;
                }
            }
            if best.as_ref().map_or(true, |(v, _)| current > *v) {
                best = Some((current, masks));
            }
        }
    }
    let (value, masks) = best.unwrap();
    (value.max(0.0), masks)
}
