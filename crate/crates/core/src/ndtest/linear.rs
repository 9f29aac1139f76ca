//! Colored linear pattern enumeration and their density vectors.

use crate::comb::{binomial, permutations, subsets};
use crate::graphs::{tstar_density, ColoredHypergraph, ColoredPattern};
use crate::kernels::ColoredStepKernel;
use crate::norms::{cut_distance, NormMode};
use crate::rat::{rat_abs, rat_u, rzero, Rat};
use crate::{Error, Limits, Result};
use rayon::prelude::*;
use std::collections::BTreeSet;

/// Canonical representative of a colored pattern's isomorphism class: the
/// lexicographically least edge list over all vertex relabelings. Exact by
/// construction; feasible for the pattern sizes the enumeration guard
/// admits.
pub fn canonical_pattern(p: &ColoredPattern) -> Result<ColoredPattern> {
    if p.q > 8 {
        return Err(Error::Unsupported(
            "pattern canonicalization".into(),
            format!("{} vertices (max 8)", p.q),
        ));
    }
    let mut best: Option<Vec<(Vec<u32>, u32)>> = None;
    for perm in permutations(p.q) {
        let mut edges: Vec<(Vec<u32>, u32)> = p
            .edges
            .iter()
            .map(|(e, c)| {
                let mut img: Vec<u32> = e.iter().map(|&v| perm[v as usize]).collect();
                img.sort_unstable();
                (img, *c)
            })
            .collect();
        edges.sort();
        if best.as_ref().map_or(true, |b| edges < *b) {
            best = Some(edges);
        }
    }
    ColoredPattern::new(p.r, p.q, best.unwrap_or_default())
}

/// All isomorphism classes of colored linear patterns with r-edges, colors
/// in `0..k`, between r and `size_cap` vertices, and no isolated vertex.
/// Deterministic order (sorted canonical forms).
pub fn enumerate_linear_patterns(
    r: usize,
    k: usize,
    size_cap: usize,
    limits: &Limits,
) -> Result<Vec<ColoredPattern>> {
    if size_cap > 8 {
        return Err(Error::Unsupported(
            "linear pattern enumeration".into(),
            format!("size cap {} (max 8)", size_cap),
        ));
    }
    let mut out: BTreeSet<ColoredPattern> = BTreeSet::new();
    let mut visited: u128 = 0;
    for q in r..=size_cap {
        let slots = subsets(q, r);
        let m = slots.len();
        for mask in 1u64..(1 << m) {
            visited += 1;
            limits.check(visited)?;
            let chosen: Vec<&Vec<u32>> =
                (0..m).filter(|i| mask >> i & 1 == 1).map(|i| &slots[i]).collect();
            // linearity: any two edges share at most one vertex
            let linear = (0..chosen.len()).all(|i| {
                (i + 1..chosen.len()).all(|j| {
                    chosen[i].iter().filter(|v| chosen[j].contains(v)).count() <= 1
                })
            });
            if !linear {
                continue;
            }
            let mut covered = vec![false; q];
            for e in &chosen {
                for &v in e.iter() {
                    covered[v as usize] = true;
                }
            }
            if !covered.iter().all(|&c| c) {
                continue;
            }
            // color odometer over the chosen edges
            let mut colors = vec![0u32; chosen.len()];
            loop {
                visited += 1;
                limits.check(visited)?;
                let edges: Vec<(Vec<u32>, u32)> = chosen
                    .iter()
                    .zip(colors.iter())
                    .map(|(e, &c)| ((*e).clone(), c))
                    .collect();
                let p = ColoredPattern::new(r, q, edges)?;
                out.insert(canonical_pattern(&p)?);
                let mut i = 0;
                loop {
                    if i == colors.len() {
                        break;
                    }
                    colors[i] += 1;
                    if (colors[i] as usize) < k {
                        break;
                    }
                    colors[i] = 0;
                    i += 1;
                }
                if i == colors.len() {
                    break;
                }
            }
        }
    }
    Ok(out.into_iter().collect())
}

/// Densities of every linear pattern class in a host, in the deterministic
/// enumeration order, so vectors from hosts with equal (r, k, size_cap) are
/// comparable entrywise.
#[derive(Debug, Clone)]
pub struct LinearDensityVector {
    pub size_cap: usize,
    pub patterns: Vec<ColoredPattern>,
    pub values: Vec<Rat>,
}

impl LinearDensityVector {
    /// Largest entrywise deviation. Errors when the pattern lists differ.
    pub fn sup_distance(&self, other: &LinearDensityVector) -> Result<Rat> {
        if self.patterns != other.patterns {
            return Err(Error::ShapeMismatch("density vectors over different pattern sets".into()));
        }
        let mut sup = rzero();
        for (a, b) in self.values.iter().zip(other.values.iter()) {
            let d = rat_abs(&(a - b));
            if d > sup {
                sup = d;
            }
        }
        Ok(sup)
    }

    pub fn get(&self, p: &ColoredPattern) -> Option<&Rat> {
        self.patterns.iter().position(|q| q == p).map(|i| &self.values[i])
    }
}

/// Exact t*-density of every colored linear pattern up to `size_cap`
/// vertices in `g`.
pub fn linear_density_vector(
    g: &ColoredHypergraph,
    size_cap: usize,
    limits: &Limits,
) -> Result<LinearDensityVector> {
    let patterns = enumerate_linear_patterns(g.r(), g.k(), size_cap, limits)?;
    let values: Vec<Rat> = patterns
        .par_iter()
        .map(|p| tstar_density(p, g, limits))
        .collect::<Result<_>>()?;
    Ok(LinearDensityVector { size_cap, patterns, values })
}

/// One check of the linear counting bound
/// `|t*(F,U) - t*(F,W)| <= C(q,r) * d(U,W)` with both sides exact.
#[derive(Debug)]
pub struct LinearCountReport {
    pub lhs: Rat,
    pub distance: Rat,
    pub factor: Rat,
    pub bound: Rat,
    pub holds: bool,
}

pub fn linear_count_check(
    f: &ColoredPattern,
    u: &ColoredStepKernel,
    w: &ColoredStepKernel,
    limits: &Limits,
) -> Result<LinearCountReport> {
    let tu = crate::kernels::tstar_kernel(f, u)?;
    let tw = crate::kernels::tstar_kernel(f, w)?;
    let lhs = rat_abs(&(tu - tw));
    let distance = cut_distance(u, w, None, NormMode::Exact, limits)?;
    let factor = rat_u(binomial(f.q, f.r));
    let bound = &factor * &distance;
    let holds = lhs <= bound;
    Ok(LinearCountReport { lhs, distance, factor, bound, holds })
}
