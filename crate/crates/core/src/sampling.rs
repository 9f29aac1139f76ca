//! Sampling experiments, total-variation computations, and bound formulas.
//!
//! The experiments here compare exact densities of step kernels against the
//! empirical densities of graphs sampled from them. Exact quantities are kept
//! rational; Monte-Carlo summaries are f64.

use std::collections::BTreeMap;

use num_bigint::BigUint;
use num_traits::{Signed, ToPrimitive, Zero};
use rand::Rng;
use rayon::prelude::*;

use crate::comb::{binomial, for_each_tuple, set_partitions};
use crate::error::{Error, Result};
use crate::graphs::{ColoredHypergraph, Hypergraph};
use crate::kernels::{
    cell_index, exact_sample_distribution, graph_to_kernel, t_density_kernel, tstar_step,
    CellPartition, ColoredStepKernel, StepKernel,
};
use crate::limits::Limits;
use crate::norms::{cut_distance, cut_star_norm, cut_star_p_norm, NormMode};
use crate::rat::{rat_int, rat_pow, rat_u, rone, rzero, to_f64, Rat};
use crate::rngutil::trial_rng;

// ---- total variation and couplings -------------------------------------------

/// Exact total-variation distance between two distributions over colored
/// graphs. Both must live on the same atom space (same arity, vertex count,
/// and color count); keys missing from one side carry mass zero there.
pub fn tv_distance(
    mu: &BTreeMap<ColoredHypergraph, Rat>,
    nu: &BTreeMap<ColoredHypergraph, Rat>,
) -> Result<Rat> {
    check_universe(mu, nu)?;
    let mut acc = rzero();
    for (key, p) in mu {
        let q = nu.get(key).cloned().unwrap_or_else(rzero);
        acc += (p - q).abs();
    }
    for (key, q) in nu {
        if !mu.contains_key(key) {
            acc += q.abs();
        }
    }
    Ok(acc / rat_u(2))
}

fn check_universe(
    mu: &BTreeMap<ColoredHypergraph, Rat>,
    nu: &BTreeMap<ColoredHypergraph, Rat>,
) -> Result<()> {
    let shape = |m: &BTreeMap<ColoredHypergraph, Rat>| {
        m.keys().next().map(|g| (g.r(), g.n(), g.k()))
    };
    if let (Some(a), Some(b)) = (shape(mu), shape(nu)) {
        if a != b {
            return Err(Error::ShapeMismatch(format!(
                "distributions over ({},{},{} colors) vs ({},{},{} colors)",
                a.0, a.1, a.2, b.0, b.1, b.2
            )));
        }
    }
    Ok(())
}

/// Exact total-variation distance between two same-length probability vectors.
pub fn tv_distance_vec(p: &[Rat], q: &[Rat]) -> Result<Rat> {
    if p.len() != q.len() {
        return Err(Error::ShapeMismatch(format!(
            "distributions with {} vs {} atoms",
            p.len(),
            q.len()
        )));
    }
    let mut acc = rzero();
    for (a, b) in p.iter().zip(q) {
        acc += (a - b).abs();
    }
    Ok(acc / rat_u(2))
}

/// A coupling of two distributions over colored graphs. `diagonal` carries
/// the shared mass, `off` the mismatched pairs; `mismatch` is the total mass
/// where the two coordinates differ.
pub struct Coupling {
    pub diagonal: Vec<(ColoredHypergraph, Rat)>,
    pub off: Vec<(ColoredHypergraph, ColoredHypergraph, Rat)>,
    pub mismatch: Rat,
}

/// The maximal coupling: puts min(mu, nu) on the diagonal and pairs the
/// leftovers proportionally, so the mismatch mass equals the total-variation
/// distance exactly.
pub fn maximal_coupling(
    mu: &BTreeMap<ColoredHypergraph, Rat>,
    nu: &BTreeMap<ColoredHypergraph, Rat>,
) -> Result<Coupling> {
    check_universe(mu, nu)?;
    let mut diagonal = Vec::new();
    let mut exc_mu: Vec<(ColoredHypergraph, Rat)> = Vec::new();
    let mut exc_nu: Vec<(ColoredHypergraph, Rat)> = Vec::new();
    let keys: std::collections::BTreeSet<&ColoredHypergraph> =
        mu.keys().chain(nu.keys()).collect();
    let mut mismatch = rzero();
    for key in keys {
        let p = mu.get(key).cloned().unwrap_or_else(rzero);
        let q = nu.get(key).cloned().unwrap_or_else(rzero);
        let m = if p <= q { p.clone() } else { q.clone() };
        if !m.is_zero() {
            diagonal.push((key.clone(), m.clone()));
        }
        if p > q {
            exc_mu.push((key.clone(), &p - &q));
        } else if q > p {
            exc_nu.push((key.clone(), &q - &p));
        }
    }
    for (_, w) in &exc_mu {
        mismatch += w;
    }
    let mut off = Vec::new();
    if !mismatch.is_zero() {
        for (a, wa) in &exc_mu {
            for (b, wb) in &exc_nu {
                let w = wa * wb / &mismatch;
                if !w.is_zero() {
                    off.push((a.clone(), b.clone(), w));
                }
            }
        }
    }
    Ok(Coupling { diagonal, off, mismatch })
}

impl Coupling {
    /// Verifies both marginals exactly.
    pub fn check_marginals(
        &self,
        mu: &BTreeMap<ColoredHypergraph, Rat>,
        nu: &BTreeMap<ColoredHypergraph, Rat>,
    ) -> bool {
        let mut left: BTreeMap<ColoredHypergraph, Rat> = BTreeMap::new();
        let mut right: BTreeMap<ColoredHypergraph, Rat> = BTreeMap::new();
        for (g, w) in &self.diagonal {
            *left.entry(g.clone()).or_insert_with(rzero) += w;
            *right.entry(g.clone()).or_insert_with(rzero) += w;
        }
        for (a, b, w) in &self.off {
            *left.entry(a.clone()).or_insert_with(rzero) += w;
            *right.entry(b.clone()).or_insert_with(rzero) += w;
        }
        let same = |got: &BTreeMap<ColoredHypergraph, Rat>,
                    want: &BTreeMap<ColoredHypergraph, Rat>| {
            want.iter().all(|(k, v)| {
                got.get(k).cloned().unwrap_or_else(rzero) == *v
            }) && got.iter().all(|(k, v)| {
                v.is_zero() || want.get(k).map(|w| w == v).unwrap_or(false)
            })
        };
        same(&left, mu) && same(&right, nu)
    }
}

// ---- ordered graph densities --------------------------------------------------

/// Density of ordered injective q-tuples of host vertices whose draw-order
/// induced coloring equals the pattern, normalized by n(n-1)...(n-q+1).
pub fn ordered_induced_density(
    f: &ColoredHypergraph,
    g: &ColoredHypergraph,
    limits: &Limits,
) -> Result<Rat> {
    if f.r() != g.r() || f.k() != g.k() {
        return Err(Error::ShapeMismatch(format!(
            "pattern ({},{} colors) vs host ({},{} colors)",
            f.r(),
            f.k(),
            g.r(),
            g.k()
        )));
    }
    let q = f.n();
    if q > g.n() || q < g.r() {
        return Err(Error::InvalidSample(q, g.n()));
    }
    let total = falling_u128(g.n(), q);
    limits.check(total)?;
    let slots = crate::comb::subsets(q, g.r());
    let mut hits: u64 = 0;
    let mut image = vec![0u32; g.r()];
    for_each_distinct_tuple(g.n(), q, |tuple| {
        for (rank, s) in slots.iter().enumerate() {
            for (slot, &v) in image.iter_mut().zip(s.iter()) {
                *slot = tuple[v as usize] as u32;
            }
            image.sort_unstable();
            if g.colors()[crate::comb::colex_rank(&image) as usize] != f.color_at(rank) {
                return;
            }
        }
        hits += 1;
    });
    Ok(rat_u(hits) / rat_u(total as u64))
}

/// Law of the draw-order pattern of q distinct uniform host vertices, with an
/// extra final color that is never used (slots keep the host's colors). The
/// extended space lets the result be compared against unconditioned kernel
/// samples, where the extra color marks collisions.
pub fn ordered_sample_distribution(
    g: &ColoredHypergraph,
    q: usize,
    limits: &Limits,
) -> Result<BTreeMap<ColoredHypergraph, Rat>> {
    if q > g.n() || q < g.r() {
        return Err(Error::InvalidSample(q, g.n()));
    }
    let total = falling_u128(g.n(), q);
    limits.check(total)?;
    let slots = crate::comb::subsets(q, g.r());
    let w = rone() / rat_u(total as u64);
    let mut out: BTreeMap<ColoredHypergraph, Rat> = BTreeMap::new();
    let mut image = vec![0u32; g.r()];
    for_each_distinct_tuple(g.n(), q, |tuple| {
        let mut colors = vec![0u32; slots.len()];
        for (rank, s) in slots.iter().enumerate() {
            for (slot, &v) in image.iter_mut().zip(s.iter()) {
                *slot = tuple[v as usize] as u32;
            }
            image.sort_unstable();
            colors[rank] = g.colors()[crate::comb::colex_rank(&image) as usize];
        }
        let pat = ColoredHypergraph::from_colors(g.r(), q, g.k() + 1, colors).unwrap();
        *out.entry(pat).or_insert_with(rzero) += &w;
    });
    Ok(out)
}

/// Law of the draw-order pattern of q unconditioned samples from the lift
/// kernel of the host: vertex classes are drawn with repetition, and a slot
/// whose vertices collide gets the extra final color (the lift kernel has no
/// color mass there).
pub fn lift_sample_distribution(
    g: &ColoredHypergraph,
    q: usize,
    limits: &Limits,
) -> Result<BTreeMap<ColoredHypergraph, Rat>> {
    if q < g.r() {
        return Err(Error::InvalidSample(q, g.n()));
    }
    let total = (g.n() as u128).checked_pow(q as u32).unwrap_or(u128::MAX);
    limits.check(total)?;
    let slots = crate::comb::subsets(q, g.r());
    let w = rone() / rat_pow(&rat_u(g.n() as u64), q as u32);
    let mut out: BTreeMap<ColoredHypergraph, Rat> = BTreeMap::new();
    let mut image = vec![0u32; g.r()];
    for_each_tuple(g.n(), q, |tuple| {
        let mut colors = vec![0u32; slots.len()];
        for (rank, s) in slots.iter().enumerate() {
            for (slot, &v) in image.iter_mut().zip(s.iter()) {
                *slot = tuple[v as usize] as u32;
            }
            image.sort_unstable();
            colors[rank] = if image.windows(2).any(|p| p[0] == p[1]) {
                g.k() as u32
            } else {
                g.colors()[crate::comb::colex_rank(&image) as usize]
            };
        }
        let pat = ColoredHypergraph::from_colors(g.r(), q, g.k() + 1, colors).unwrap();
        *out.entry(pat).or_insert_with(rzero) += &w;
    });
    Ok(out)
}

fn falling_u128(n: usize, q: usize) -> u128 {
    let mut acc: u128 = 1;
    for i in 0..q {
        acc = acc.saturating_mul((n - i) as u128);
    }
    acc
}

/// Calls f on every q-tuple of pairwise distinct values from [n].
fn for_each_distinct_tuple<F: FnMut(&[usize])>(n: usize, q: usize, mut f: F) {
    let mut tuple = vec![0usize; q];
    let mut used = vec![false; n];
    fn rec<F: FnMut(&[usize])>(
        n: usize,
        q: usize,
        i: usize,
        tuple: &mut Vec<usize>,
        used: &mut Vec<bool>,
        f: &mut F,
    ) {
        if i == q {
            f(tuple);
            return;
        }
        for v in 0..n {
            if used[v] {
                continue;
            }
            used[v] = true;
            tuple[i] = v;
            rec(n, q, i + 1, tuple, used, f);
            used[v] = false;
        }
    }
    rec(n, q, 0, &mut tuple, &mut used, &mut f);
}

// ---- graph vs lift consistency ------------------------------------------------

/// Outcome of comparing a graph's exact densities against its lift kernel:
/// the worst pattern-density gap against the collision bound, and the
/// total-variation distance of the two q-sample laws against its bound.
pub struct GraphKernelReport {
    pub patterns: usize,
    pub max_gap: Rat,
    /// None when n <= C(q,2); the density bound is vacuous there.
    pub density_bound: Option<Rat>,
    pub density_ok: bool,
    pub tv: Rat,
    pub tv_bound: Rat,
    pub tv_ok: bool,
}

/// Compares, for every fully colored pattern on q vertices, the ordered
/// induced density in the graph against the pattern density of its lift
/// kernel, and the two q-sample laws in total variation.
pub fn graph_kernel_consistency(
    g: &ColoredHypergraph,
    q: usize,
    limits: &Limits,
) -> Result<GraphKernelReport> {
    let w = graph_to_kernel(g);
    let base = ColoredHypergraph::monochromatic(g.r(), q, 1, 0)?;
    let mut max_gap = rzero();
    let mut patterns = 0usize;
    for coloring in crate::graphs::enumerate_colorings(&base, g.k(), limits)? {
        let f = ColoredHypergraph::from_colors(
            g.r(),
            q,
            g.k(),
            coloring.refined().colors().to_vec(),
        )?;
        let lhs = ordered_induced_density(&f, g, limits)?;
        let rhs = t_density_kernel(&f, &w)?;
        let gap = (lhs - rhs).abs();
        if gap > max_gap {
            max_gap = gap;
        }
        patterns += 1;
    }
    let pairs = binomial(q, 2);
    let density_bound = if g.n() > pairs as usize {
        Some(rat_u(pairs) / rat_int(g.n() as i64 - pairs as i64))
    } else {
        None
    };
    let density_ok = match &density_bound {
        Some(b) => max_gap <= *b,
        None => true,
    };
    let mu = ordered_sample_distribution(g, q, limits)?;
    let nu = lift_sample_distribution(g, q, limits)?;
    let tv = tv_distance(&mu, &nu)?;
    let tv_bound = color_count_factor(g.k(), q, g.r())? * rat_u((q * q) as u64)
        / rat_u(g.n() as u64);
    let tv_ok = tv <= tv_bound;
    Ok(GraphKernelReport {
        patterns,
        max_gap,
        density_bound,
        density_ok,
        tv,
        tv_bound,
        tv_ok,
    })
}

/// k^(q^r) as an exact rational, guarded against absurd exponents.
fn color_count_factor(k: usize, q: usize, r: usize) -> Result<Rat> {
    let e = (q as u64)
        .checked_pow(r as u32)
        .filter(|&e| e <= 4096)
        .ok_or_else(|| Error::RangeError(format!("exponent {q}^{r} too large")))?;
    Ok(rat_pow(&rat_u(k as u64), e as u32))
}

// ---- counting lemma check -------------------------------------------------------

/// Outcome of checking that the sample laws of two proper colored kernels are
/// as close in total variation as their cut distance requires.
pub struct CountingLemmaReport {
    pub tv: Rat,
    pub cut_dist: Rat,
    pub factor: Rat,
    pub bound: Rat,
    pub holds: bool,
    /// True when the bound is at least 1 and the comparison carries no
    /// information.
    pub vacuous: bool,
    pub coupling_mismatch: Rat,
    pub coupling_ok: bool,
}

/// Exact check of the sampling counting bound: the total-variation distance
/// of the q-sample laws of two proper colored kernels is at most
/// k^(q^r) q^r / (2 r!) times their cut distance. Also builds the maximal
/// coupling and verifies that it attains the total-variation distance.
pub fn counting_lemma_check(
    u: &ColoredStepKernel,
    w: &ColoredStepKernel,
    q: usize,
    limits: &Limits,
) -> Result<CountingLemmaReport> {
    if u.r() != w.r() || u.k() != w.k() {
        return Err(Error::ShapeMismatch(format!(
            "kernels ({},{} colors) vs ({},{} colors)",
            u.r(),
            u.k(),
            w.r(),
            w.k()
        )));
    }
    if !u.is_proper() || !w.is_proper() {
        return Err(Error::RangeError(
            "sample-law comparison needs proper kernels (colors carry all mass)".into(),
        ));
    }
    let mu = exact_sample_distribution(u, q, limits)?;
    let nu = exact_sample_distribution(w, q, limits)?;
    let tv = tv_distance(&mu, &nu)?;
    let d = cut_distance(u, w, None, NormMode::Exact, limits)?;
    let r = u.r();
    let mut rfact: u64 = 1;
    for i in 1..=r {
        rfact *= i as u64;
    }
    let factor = color_count_factor(u.k(), q, r)?
        * rat_u((q as u64).pow(r as u32))
        / rat_u(2 * rfact);
    let bound = &factor * &d;
    let holds = tv <= bound;
    let vacuous = bound >= rone();
    let coupling = maximal_coupling(&mu, &nu)?;
    let coupling_ok = coupling.mismatch == tv && coupling.check_marginals(&mu, &nu);
    Ok(CountingLemmaReport {
        tv,
        cut_dist: d,
        factor,
        bound,
        holds,
        vacuous,
        coupling_mismatch: coupling.mismatch,
        coupling_ok,
    })
}

// ---- concentration experiment ---------------------------------------------------

/// Monte-Carlo summary of how often the sampled product density deviates from
/// its exact kernel value by more than delta, against the exponential tail
/// bound with three binomial standard errors of slack.
pub struct ConcentrationReport {
    pub reference: Rat,
    pub q: usize,
    pub delta: f64,
    pub trials: usize,
    pub exceed: usize,
    pub empirical_rate: f64,
    pub standard_error: f64,
    pub bound: f64,
    /// True when the tail bound is at least 1 at these parameters.
    pub vacuous: bool,
    pub violated: bool,
}

/// Samples q-point graphs from the kernel `trials` times and counts how often
/// the collision-free product density of `f` deviates from the exact kernel
/// density by more than delta. The empirical density sums over injective
/// point maps only, normalized by q(q-1)...(q-v+1).
pub fn concentration_experiment(
    f: &Hypergraph,
    u: &StepKernel,
    q: usize,
    delta: f64,
    trials: usize,
    seed: u64,
) -> Result<ConcentrationReport> {
    if f.r() != u.r() {
        return Err(Error::ShapeMismatch(format!(
            "pattern arity {} vs kernel {}",
            f.r(),
            u.r()
        )));
    }
    if u.max_abs() > rone() {
        return Err(Error::RangeError("kernel values must lie in [-1, 1]".into()));
    }
    let v = f.n();
    if q < v {
        return Err(Error::InvalidSample(v, q));
    }
    let t = u.t();
    let maps = (t as u128).saturating_pow(v as u32);
    if maps > (1u128 << 24) {
        return Err(Error::EnumerationTooLarge { needed: maps, limit: 1 << 24 });
    }
    let reference = tstar_step(f, u)?;
    let ref_f = to_f64(&reference);
    let weights: Vec<f64> = u.weights().iter().map(to_f64).collect();
    let values: Vec<f64> = u.values().iter().map(to_f64).collect();
    let edges: Vec<Vec<usize>> = f
        .edges()
        .map(|e| e.iter().map(|&x| x as usize).collect())
        .collect();
    let exceed: usize = (0..trials)
        .into_par_iter()
        .map(|i| {
            let mut rng = trial_rng(seed, i as u64);
            let mut counts = vec![0u64; t];
            for _ in 0..q {
                let x: f64 = rng.gen();
                let mut acc = 0.0;
                let mut c = t - 1;
                for (j, wj) in weights.iter().enumerate() {
                    acc += wj;
                    if x < acc {
                        c = j;
                        break;
                    }
                }
                counts[c] += 1;
            }
            let emp = injective_density(&edges, v, t, &values, &counts, q);
            if (emp - ref_f).abs() > delta {
                1
            } else {
                0
            }
        })
        .sum();
    let empirical_rate = exceed as f64 / trials as f64;
    let standard_error = (empirical_rate * (1.0 - empirical_rate) / trials as f64).sqrt();
    let bound = 2.0 * (-delta * delta * q as f64 / (2.0 * (v * v) as f64)).exp();
    let vacuous = bound >= 1.0;
    let violated = empirical_rate > bound + 3.0 * standard_error;
    Ok(ConcentrationReport {
        reference,
        q,
        delta,
        trials,
        exceed,
        empirical_rate,
        standard_error,
        bound,
        vacuous,
        violated,
    })
}

/// Sum over class maps of the pattern's edge-value product, weighted by the
/// number of injective point assignments consistent with the map, normalized
/// by the falling factorial of q.
fn injective_density(
    edges: &[Vec<usize>],
    v: usize,
    t: usize,
    values: &[f64],
    counts: &[u64],
    q: usize,
) -> f64 {
    let mut assign = vec![0usize; v];
    let mut used = vec![0u64; t];
    let mut total = 0.0;
    fn rec(
        edges: &[Vec<usize>],
        v: usize,
        t: usize,
        values: &[f64],
        counts: &[u64],
        assign: &mut Vec<usize>,
        used: &mut Vec<u64>,
        depth: usize,
        weight: f64,
        total: &mut f64,
    ) {
        if depth == v {
            let mut prod = weight;
            let mut cell = Vec::with_capacity(edges.first().map_or(0, |e| e.len()));
            for e in edges {
                cell.clear();
                cell.extend(e.iter().map(|&x| assign[x]));
                prod *= values[cell_index(&cell, t)];
            }
            *total += prod;
            return;
        }
        for c in 0..t {
            if used[c] >= counts[c] {
                continue;
            }
            assign[depth] = c;
            used[c] += 1;
            rec(
                edges,
                v,
                t,
                values,
                counts,
                assign,
                used,
                depth + 1,
                weight * (counts[c] - used[c] + 1) as f64,
                total,
            );
            used[c] -= 1;
        }
    }
    rec(
        edges, v, t, values, counts, &mut assign, &mut used, 0, 1.0, &mut total,
    );
    let mut denom = 1.0;
    for i in 0..v {
        denom *= (q - i) as f64;
    }
    total / denom
}

// ---- sampled cut-norm check -------------------------------------------------------

/// Outcome of probing whether sampled kernels stay jointly small in the
/// partition cut norms whenever the source kernels do. Violations found by
/// probes are genuine; a clean run is evidence, not proof, since probing is
/// not exhaustive at sample scale.
pub struct SampledCutnormReport {
    pub hypothesis_lhs: Rat,
    pub hypothesis_rhs: Rat,
    pub hypothesis_met: bool,
    /// Sample size the guarantee asks for, with the unspecified leading
    /// constant set by the caller (conventionally 1).
    pub q_required: f64,
    pub below_guaranteed_regime: bool,
    pub trials: usize,
    pub violations: usize,
    pub worst: f64,
    pub probes_only: bool,
}

/// Samples q shared points from the layers' common class structure `trials`
/// times and probes partition cut norms of the sampled kernels against eps.
/// The layers must share weights: they are color layers over one space.
/// `c` scales the required-sample formula, whose leading constant the
/// guarantee leaves unspecified.
#[allow(clippy::too_many_arguments)]
pub fn sampled_cutnorm_check(
    layers: &[StepKernel],
    eps: &Rat,
    t_probe: usize,
    q: usize,
    trials: usize,
    seed: u64,
    c: f64,
    limits: &Limits,
) -> Result<SampledCutnormReport> {
    if layers.is_empty() {
        return Err(Error::RangeError("at least one layer".into()));
    }
    let r = layers[0].r();
    let t = layers[0].t();
    for l in layers {
        if l.r() != r || l.weights() != layers[0].weights() {
            return Err(Error::ShapeMismatch(
                "layers must share arity and class weights".into(),
            ));
        }
        if l.max_abs() > rone() {
            return Err(Error::RangeError("layer values must lie in [-1, 1]".into()));
        }
    }
    let k = layers.len();
    let mut lhs = rzero();
    for l in layers {
        lhs += cut_star_norm(l, NormMode::Exact, limits)?.value;
    }
    let tp = rat_u((t_probe as u64).pow(r as u32));
    let rhs = rat_pow(&(eps / (rat_u(k as u64) * tp)), 1u32 << r)
        / rat_pow(&rat_u(2), (r + 1) as u32);
    let hypothesis_met = lhs <= rhs;
    let epsf = to_f64(eps);
    let exp = (1u32 << (2 * r)) as i32;
    let q_required = c
        * (1.0 / epsf).powi(exp)
        * (t_probe as f64).powi(exp)
        * (k as f64).powi(3)
        * (r as f64).powi(2);
    let below_guaranteed_regime = (q as f64) < q_required;
    let weights: Vec<f64> = layers[0].weights().iter().map(to_f64).collect();
    let groupings = set_partitions(t, t_probe);
    let results: Vec<(bool, f64)> = (0..trials)
        .into_par_iter()
        .map(|i| {
            let mut rng = trial_rng(seed, i as u64);
            let mut src = vec![0usize; q];
            for s in src.iter_mut() {
                let x: f64 = rng.gen();
                let mut acc = 0.0;
                let mut cls = t - 1;
                for (j, wj) in weights.iter().enumerate() {
                    acc += wj;
                    if x < acc {
                        cls = j;
                        break;
                    }
                }
                *s = cls;
            }
            let emp: Vec<StepKernel> = layers
                .iter()
                .map(|l| sampled_kernel(l, &src, q))
                .collect();
            let mut probes: Vec<Vec<usize>> = Vec::new();
            for grouping in &groupings {
                probes.push(src.iter().map(|&s| grouping[s]).collect());
            }
            for _ in 0..8 {
                let labels: Vec<usize> =
                    (0..q).map(|_| rng.gen_range(0..t_probe)).collect();
                probes.push(labels);
            }
            let mut trial_worst = 0.0f64;
            let mut violated = false;
            for labels in probes {
                let qp = match CellPartition::new(normalize_probe(labels)) {
                    Ok(p) => p,
                    Err(_) => continue,
                };
                let mut total = rzero();
                for e in &emp {
                    let res = cut_star_p_norm(
                        e,
                        &qp,
                        NormMode::Ascent { restarts: 3, seed: rng.gen() },
                        limits,
                    )
                    .expect("ascent mode cannot overflow");
                    total += res.value;
                }
                let tf = to_f64(&total);
                if tf > trial_worst {
                    trial_worst = tf;
                }
                if total > *eps {
                    violated = true;
                }
            }
            (violated, trial_worst)
        })
        .collect();
    let violations = results.iter().filter(|(v, _)| *v).count();
    let worst = results.iter().map(|(_, w)| *w).fold(0.0, f64::max);
    Ok(SampledCutnormReport {
        hypothesis_lhs: lhs,
        hypothesis_rhs: rhs,
        hypothesis_met,
        q_required,
        below_guaranteed_regime,
        trials,
        violations,
        worst,
        probes_only: true,
    })
}

/// The q-point sampled kernel: classes are the sample points with uniform
/// weight, values copied from the source kernel at the points' source cells.
fn sampled_kernel(l: &StepKernel, src: &[usize], q: usize) -> StepKernel {
    let r = l.r();
    let t = l.t();
    let mut values = Vec::with_capacity(q.pow(r as u32));
    let mut cell = vec![0usize; r];
    for_each_tuple(q, r, |tuple| {
        for (c, &p) in cell.iter_mut().zip(tuple) {
            *c = src[p];
        }
        values.push(l.values()[cell_index(&cell, t)].clone());
    });
    let w = rone() / rat_u(q as u64);
    StepKernel::new(r, vec![w; q], values).expect("sampled kernel is well formed")
}

/// Dense relabeling so arbitrary probe labels form a valid partition.
fn normalize_probe(labels: Vec<usize>) -> Vec<usize> {
    let mut map: BTreeMap<usize, usize> = BTreeMap::new();
    let mut out = Vec::with_capacity(labels.len());
    for l in labels {
        let next = map.len();
        out.push(*map.entry(l).or_insert(next));
    }
    out
}

// ---- bound calculator ---------------------------------------------------------

/// Number of decimal digits up to which bound values are materialized as
/// exact integers; beyond it they stay symbolic tower magnitudes.
pub const PRINTABLE_DIGITS: u64 = 10_000;

/// A bound value: either an exact integer, or the exponential function
/// iterated `height` times on `arg` when the value has no printable
/// representation. Height zero means the plain number `arg`.
#[derive(Debug, Clone, PartialEq)]
pub enum Magnitude {
    Exact(BigUint),
    ExpTower { height: u32, arg: f64 },
}

impl Magnitude {
    /// Approximate decimal-digit count; exact values report their length.
    pub fn digits(&self) -> f64 {
        match self {
            Magnitude::Exact(n) => n.to_string().len() as f64,
            Magnitude::ExpTower { height, arg } => {
                let mut h = *height;
                let mut x = *arg;
                while h > 1 && x < 700.0 {
                    x = x.exp();
                    h -= 1;
                }
                if h > 1 {
                    f64::INFINITY
                } else if h == 1 {
                    x / std::f64::consts::LN_10
                } else {
                    x.abs().log10().max(0.0) + 1.0
                }
            }
        }
    }

    /// Compares magnitudes; exact against exact is exact, towers compare by
    /// collapsing to a common height in floating point.
    pub fn cmp_magnitude(&self, other: &Magnitude) -> std::cmp::Ordering {
        use Magnitude::*;
        match (self, other) {
            (Exact(a), Exact(b)) => a.cmp(b),
            _ => {
                let key = |m: &Magnitude| -> (u32, f64) {
                    match m {
                        Exact(n) => {
                            let d = n.to_string().len() as f64;
                            (0, n.to_f64().unwrap_or(10f64.powf(d.min(300.0))))
                        }
                        ExpTower { height, arg } => {
                            let mut h = *height;
                            let mut x = *arg;
                            while h > 0 && x < 700.0 {
                                x = x.exp();
                                h -= 1;
                            }
                            (h, x)
                        }
                    }
                };
                let (ha, xa) = key(self);
                let (hb, xb) = key(other);
                if ha != hb {
                    ha.cmp(&hb)
                } else {
                    xa.partial_cmp(&xb).unwrap_or(std::cmp::Ordering::Equal)
                }
            }
        }
    }
}

/// The precision combination delta / (4k (kt)^(q0^r) q0^r), exactly.
pub fn pi_combination(r: usize, delta: &Rat, q0: usize, t: usize, k: usize) -> Result<Rat> {
    let e = (q0 as u64)
        .checked_pow(r as u32)
        .filter(|&e| e <= 4096)
        .ok_or_else(|| Error::RangeError(format!("exponent {q0}^{r} too large")))?;
    let kt = rat_u((k * t) as u64);
    Ok(delta / (rat_u(4 * k as u64) * rat_pow(&kt, e as u32) * rat_u(e)))
}

/// Class-count bound for weak regularity: (2t)^((rk+1)^ceil(4k^2/eps^2)),
/// exact when printable, else a symbolic tower.
pub fn t_reg_bound(r: usize, k: usize, eps: &Rat, t: usize) -> Result<Magnitude> {
    if eps <= &rzero() {
        return Err(Error::RangeError("eps must be positive".into()));
    }
    let cap = crate::norms::regularity_cap(k, eps);
    let base = (r * k + 1) as f64;
    let inner_bits = cap as f64 * base.log2();
    let outer_base = (2 * t) as f64;
    if inner_bits <= 40.0 {
        let inner = BigUint::from(r * k + 1).pow(cap as u32);
        let inner_u = inner.to_u64().unwrap();
        let digits = inner_u as f64 * outer_base.log10();
        if digits <= PRINTABLE_DIGITS as f64 && inner_u <= u32::MAX as u64 {
            return Ok(Magnitude::Exact(BigUint::from(2 * t).pow(inner_u as u32)));
        }
    }
    let inner_ln = cap as f64 * base.ln();
    if inner_ln <= 700.0 {
        let arg = inner_ln.exp() * outer_base.ln();
        if arg.is_finite() {
            return Ok(Magnitude::ExpTower { height: 1, arg });
        }
    }
    Ok(Magnitude::ExpTower {
        height: 2,
        arg: inner_ln + outer_base.ln().ln(),
    })
}

/// Sample size above which sampled kernels keep small partition cut norms:
/// c (1/eps)^(2^(2r)) t^(2^(2r)) k^3 r^2 with caller-chosen leading constant.
pub fn q_cut_bound(r: usize, k: usize, eps: f64, t: usize, c: f64) -> Magnitude {
    let e = (1u32 << (2 * r)) as i32;
    let v = c * (1.0 / eps).powi(e) * (t as f64).powi(e) * (k as f64).powi(3)
        * (r as f64).powi(2);
    Magnitude::ExpTower { height: 0, arg: v }
}

/// Sample size that makes coloring laws transferable in total variation.
/// Height-0 for r = 1 (an explicit formula); a tower of height 4(r-1) above.
/// `c_r` is the arity-dependent constant the guarantee leaves unspecified.
pub fn q_tv_bound(
    r: usize,
    delta: f64,
    q0: usize,
    t: usize,
    k: usize,
    c_r: f64,
) -> Result<Magnitude> {
    if delta <= 0.0 || r == 0 {
        return Err(Error::RangeError("need r >= 1 and delta > 0".into()));
    }
    if r == 1 {
        let v = (t as f64 + std::f64::consts::LN_2 - delta.ln()) * 3.0
            * (q0 as f64).powi(2 * k as i32 + 2)
            / (4.0 * delta * delta);
        return Ok(Magnitude::ExpTower { height: 0, arg: v });
    }
    let qr = (q0 as f64).powi(r as i32);
    let arg = c_r * (qr / delta).powi(3) * ((k * t) as f64).powf(6.0 * qr);
    Ok(Magnitude::ExpTower { height: 4 * (r as u32 - 1), arg })
}

/// Sample complexity transferred from a witness parameter: a tower of height
/// 4(r-1)+1 on c q_g / eps.
pub fn q_f_bound(r: usize, q_g: u64, eps: f64, c: f64) -> Result<Magnitude> {
    if eps <= 0.0 || r == 0 {
        return Err(Error::RangeError("need r >= 1 and eps > 0".into()));
    }
    Ok(Magnitude::ExpTower {
        height: 4 * (r as u32 - 1) + 1,
        arg: c * q_g as f64 / eps,
    })
}

/// Sample complexity for witnesses that only read linear-pattern densities:
/// a tower of fixed height 3 on c q_g^2, independent of arity.
pub fn q_linear_bound(q_g: u64, c: f64) -> Magnitude {
    Magnitude::ExpTower {
        height: 3,
        arg: c * (q_g as f64) * (q_g as f64),
    }
}

/// Sample size for energy concentration: Theta^4 ln(Theta) with
/// Theta = 2^(r+10) s^r r / delta.
pub fn gse_sample_threshold(r: usize, s: usize, delta: f64) -> f64 {
    let theta = 2f64.powi(r as i32 + 10) * (s as f64).powi(r as i32) * r as f64 / delta;
    theta.powi(4) * theta.ln()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kernels::{random_colored_kernel, random_step_kernel};
    use crate::rat::rat;

    fn graph_with_edges(n: usize, edges: &[[u32; 2]]) -> ColoredHypergraph {
        let mut g = ColoredHypergraph::monochromatic(2, n, 2, 0).unwrap();
        for e in edges {
            g.set_color(e, 1).unwrap();
        }
        g
    }

    fn lim() -> Limits {
        Limits::default()
    }

    fn two_atom(r: usize, n: usize, k: usize, edge_mass: Rat) -> BTreeMap<ColoredHypergraph, Rat> {
        let mut out = BTreeMap::new();
        let e = ColoredHypergraph::monochromatic(r, n, k, 1).unwrap();
        let ne = ColoredHypergraph::monochromatic(r, n, k, 0).unwrap();
        out.insert(e, edge_mass.clone());
        out.insert(ne, rone() - edge_mass);
        out
    }

    #[test]
    fn tv_two_bernoulli() {
        let mu = two_atom(2, 2, 2, rat(3, 10));
        let nu = two_atom(2, 2, 2, rat(1, 2));
        assert_eq!(tv_distance(&mu, &nu).unwrap(), rat(1, 5));
        assert_eq!(tv_distance(&nu, &mu).unwrap(), rat(1, 5));
        assert!(tv_distance(&mu, &mu).unwrap().is_zero());
    }

    #[test]
    fn tv_universe_mismatch_rejected() {
        let mu = two_atom(2, 2, 2, rat(1, 2));
        let nu = two_atom(2, 3, 2, rat(1, 2));
        assert!(tv_distance(&mu, &nu).is_err());
    }

    #[test]
    fn tv_vec_basics() {
        let p = vec![rat(1, 4), rat(3, 4)];
        let q = vec![rat(1, 2), rat(1, 2)];
        assert_eq!(tv_distance_vec(&p, &q).unwrap(), rat(1, 4));
        assert!(tv_distance_vec(&p, &[rone()]).is_err());
    }

    #[test]
    fn maximal_coupling_attains_tv() {
        let mu = two_atom(2, 2, 2, rat(3, 10));
        let nu = two_atom(2, 2, 2, rat(1, 2));
        let c = maximal_coupling(&mu, &nu).unwrap();
        assert_eq!(c.mismatch, rat(1, 5));
        assert!(c.check_marginals(&mu, &nu));

        let mut rng = trial_rng(40, 0);
        for _ in 0..10 {
            let a = random_colored_kernel(2, 2, 2, 6, &mut rng);
            let b = random_colored_kernel(2, 2, 2, 6, &mut rng);
            let mu = exact_sample_distribution(&a, 2, &lim()).unwrap();
            let nu = exact_sample_distribution(&b, 2, &lim()).unwrap();
            let c = maximal_coupling(&mu, &nu).unwrap();
            assert_eq!(c.mismatch, tv_distance(&mu, &nu).unwrap());
            assert!(c.check_marginals(&mu, &nu));
        }
    }

    #[test]
    fn ordered_density_path_oracle() {
        // Host: single edge {0,1} on 3 vertices. An ordered distinct pair
        // induces the edge pattern iff it hits {0,1}: 2 of 6 tuples.
        let g = graph_with_edges(3, &[[0, 1]]);
        let f = ColoredHypergraph::monochromatic(2, 2, 2, 1).unwrap();
        assert_eq!(ordered_induced_density(&f, &g, &lim()).unwrap(), rat(1, 3));
    }

    #[test]
    fn lift_density_identity() {
        // For fully colored patterns the lift density equals the ordered
        // injective density scaled by the distinct-tuple fraction.
        let mut rng = trial_rng(41, 0);
        let mut g = graph_with_edges(5, &[]);
        for e in [[0u32, 1], [1, 2], [2, 3], [3, 4], [0, 4], [1, 3]] {
            if rng.gen::<bool>() {
                g.set_color(&e, 1).unwrap();
            }
        }
        let w = graph_to_kernel(&g);
        let q = 3;
        let base = ColoredHypergraph::monochromatic(2, q, 1, 0).unwrap();
        let scale = rat_u(5 * 4 * 3) / rat_u(125);
        for col in crate::graphs::enumerate_colorings(&base, 2, &lim()).unwrap() {
            let f = ColoredHypergraph::from_colors(2, q, 2, col.refined().colors().to_vec())
                .unwrap();
            let kernel_side = t_density_kernel(&f, &w).unwrap();
            let graph_side = ordered_induced_density(&f, &g, &lim()).unwrap();
            assert_eq!(kernel_side, graph_side * &scale);
        }
    }

    #[test]
    fn graph_kernel_consistency_holds() {
        let k4 = Hypergraph::complete(2, 4).to_colored();
        for q in [2usize, 3] {
            let rep = graph_kernel_consistency(&k4, q, &lim()).unwrap();
            assert!(rep.density_ok);
            assert!(rep.tv_ok);
            assert_eq!(rep.patterns, 2usize.pow(binomial(q, 2) as u32));
        }
        let path = graph_with_edges(5, &[[0, 1], [1, 2], [2, 3], [3, 4]]);
        let rep = graph_kernel_consistency(&path, 3, &lim()).unwrap();
        assert!(rep.density_ok);
        assert!(rep.tv_ok);
        assert!(rep.max_gap > rzero());
    }

    #[test]
    fn counting_lemma_identical_kernels() {
        let mut rng = trial_rng(42, 0);
        let u = random_colored_kernel(2, 2, 2, 8, &mut rng);
        let rep = counting_lemma_check(&u, &u, 3, &lim()).unwrap();
        assert!(rep.tv.is_zero());
        assert!(rep.cut_dist.is_zero());
        assert!(rep.bound.is_zero());
        assert!(rep.holds);
        assert!(!rep.vacuous);
        assert!(rep.coupling_ok);
        assert!(rep.coupling_mismatch.is_zero());
    }

    #[test]
    fn counting_lemma_random_pairs() {
        let mut rng = trial_rng(43, 0);
        for _ in 0..5 {
            let u = random_colored_kernel(2, 2, 2, 6, &mut rng);
            let w = random_colored_kernel(2, 2, 2, 6, &mut rng);
            let rep = counting_lemma_check(&u, &w, 3, &lim()).unwrap();
            assert!(rep.holds);
            assert!(rep.coupling_ok);
            assert_eq!(
                rep.bound,
                rep.factor.clone() * rep.cut_dist.clone()
            );
        }
    }

    #[test]
    fn counting_lemma_factor_value() {
        let mut rng = trial_rng(44, 0);
        let u = random_colored_kernel(2, 2, 2, 4, &mut rng);
        let rep = counting_lemma_check(&u, &u, 3, &lim()).unwrap();
        // 2^(3^2) * 3^2 / (2 * 2!) = 512 * 9 / 4
        assert_eq!(rep.factor, rat(512 * 9, 4));
    }

    #[test]
    fn concentration_small_run() {
        let f = Hypergraph::doubled_edge(2);
        let mut rng = trial_rng(45, 0);
        let u = random_step_kernel(2, 3, 8, &mut rng);
        let rep = concentration_experiment(&f, &u, 200, 0.15, 300, 46).unwrap();
        assert_eq!(rep.trials, 300);
        assert!(!rep.violated);
        // The tail bound is loose here, but sampling itself concentrates.
        assert!(rep.empirical_rate < 0.5);
        let again = concentration_experiment(&f, &u, 200, 0.15, 300, 46).unwrap();
        assert_eq!(rep.exceed, again.exceed);
    }

    #[test]
    fn concentration_rejects_wide_values() {
        let f = Hypergraph::doubled_edge(2);
        let u = StepKernel::new(2, vec![rone()], vec![rat(3, 1)]).unwrap();
        assert!(concentration_experiment(&f, &u, 10, 0.1, 5, 0).is_err());
    }

    #[test]
    fn sampled_cutnorm_tiny_layers_pass() {
        // A signed checkerboard with tiny amplitude keeps every probe far
        // below eps, and meets the smallness hypothesis exactly.
        let eta = rat(1, 40000);
        let vals = vec![eta.clone(), -eta.clone(), -eta.clone(), eta.clone()];
        let u = StepKernel::new(2, vec![rat(1, 2), rat(1, 2)], vals).unwrap();
        let rep = sampled_cutnorm_check(
            std::slice::from_ref(&u),
            &rat(1, 2),
            2,
            24,
            4,
            47,
            1.0,
            &lim(),
        )
        .unwrap();
        assert_eq!(rep.hypothesis_lhs, rat(1, 160000));
        assert_eq!(rep.hypothesis_rhs, rat(1, 32768));
        assert!(rep.hypothesis_met);
        assert_eq!(rep.violations, 0);
        assert!(rep.below_guaranteed_regime);
        assert!(rep.probes_only);
    }

    #[test]
    fn sampled_cutnorm_big_layer_fails_hypothesis() {
        let u = StepKernel::constant(2, 2, rone());
        let rep = sampled_cutnorm_check(
            std::slice::from_ref(&u),
            &rat(1, 2),
            2,
            12,
            2,
            48,
            1.0,
            &lim(),
        )
        .unwrap();
        assert!(!rep.hypothesis_met);
    }

    #[test]
    fn sampled_cutnorm_rejects_mismatched_layers() {
        let a = StepKernel::constant(2, 2, rzero());
        let b = StepKernel::constant(2, 3, rzero());
        let layers = vec![a, b];
        assert!(sampled_cutnorm_check(&layers, &rat(1, 2), 2, 8, 1, 0, 1.0, &lim()).is_err());
    }

    #[test]
    fn pi_combination_value() {
        let v = pi_combination(2, &rat(1, 10), 2, 2, 2).unwrap();
        assert_eq!(v, rat(1, 81920));
    }

    #[test]
    fn pi_combination_monotone() {
        let lo = pi_combination(2, &rat(1, 20), 2, 2, 2).unwrap();
        let hi = pi_combination(2, &rat(1, 10), 2, 2, 2).unwrap();
        assert!(lo < hi);
        let more_classes = pi_combination(2, &rat(1, 10), 2, 3, 2).unwrap();
        assert!(more_classes < hi);
    }

    #[test]
    fn t_reg_small_exact() {
        // r=1, k=1, eps=2: cap 1, inner (1*1+1)^1 = 2, (2*1)^2 = 4.
        match t_reg_bound(1, 1, &rat(2, 1), 1).unwrap() {
            Magnitude::Exact(n) => assert_eq!(n, BigUint::from(4u32)),
            other => panic!("expected exact, got {:?}", other),
        }
    }

    #[test]
    fn t_reg_symbolic_case() {
        // r=2, k=2, eps=1, t=1: (2)^(5^16), far beyond printing.
        match t_reg_bound(2, 2, &rone(), 1).unwrap() {
            Magnitude::ExpTower { height: 1, arg } => {
                let expect = 152587890625.0f64 * 2.0f64.ln();
                assert!((arg - expect).abs() / expect < 1e-12);
            }
            other => panic!("expected height-1 tower, got {:?}", other),
        }
    }

    #[test]
    fn tower_heights_by_arity() {
        for r in 1..=4usize {
            let tv = q_tv_bound(r, 0.1, 2, 2, 2, 1.0).unwrap();
            let f = q_f_bound(r, 5, 0.1, 1.0).unwrap();
            match tv {
                Magnitude::ExpTower { height, .. } => {
                    assert_eq!(height, 4 * (r as u32 - 1));
                }
                _ => panic!("tv bound should stay symbolic"),
            }
            match f {
                Magnitude::ExpTower { height, .. } => {
                    assert_eq!(height, 4 * (r as u32 - 1) + 1);
                }
                _ => panic!("f bound should stay symbolic"),
            }
        }
        match q_linear_bound(7, 1.0) {
            Magnitude::ExpTower { height: 3, arg } => assert_eq!(arg, 49.0),
            other => panic!("expected height-3 tower, got {:?}", other),
        }
    }

    #[test]
    fn q_tv_base_case_explicit() {
        // r=1 is a plain number: (t + ln 2 - ln delta) 3 q0^(2k+2) / (4 delta^2).
        match q_tv_bound(1, 0.5, 2, 3, 1, 1.0).unwrap() {
            Magnitude::ExpTower { height: 0, arg } => {
                let expect = (3.0 + 2.0f64.ln() - 0.5f64.ln()) * 3.0 * 2.0f64.powi(4)
                    / (4.0 * 0.25);
                assert!((arg - expect).abs() < 1e-12);
            }
            other => panic!("expected a plain number, got {:?}", other),
        }
    }

    #[test]
    fn bounds_monotone_in_precision() {
        let loose = q_tv_bound(3, 0.2, 2, 2, 2, 1.0).unwrap();
        let tight = q_tv_bound(3, 0.1, 2, 2, 2, 1.0).unwrap();
        assert_eq!(
            tight.cmp_magnitude(&loose),
            std::cmp::Ordering::Greater
        );
        let f_loose = q_f_bound(2, 5, 0.2, 1.0).unwrap();
        let f_tight = q_f_bound(2, 5, 0.1, 1.0).unwrap();
        assert_eq!(
            f_tight.cmp_magnitude(&f_loose),
            std::cmp::Ordering::Greater
        );
    }

    #[test]
    fn magnitude_ordering_across_kinds() {
        let small = Magnitude::Exact(BigUint::from(100u32));
        let big = Magnitude::ExpTower { height: 2, arg: 1000.0 };
        assert_eq!(small.cmp_magnitude(&big), std::cmp::Ordering::Less);
        assert!(big.digits() > 1e6);
    }

    #[test]
    fn gse_threshold_scale() {
        let q = gse_sample_threshold(2, 2, 0.25);
        assert!(q > 1e20);
        assert!(gse_sample_threshold(2, 2, 0.5) < q);
    }

    #[test]
    fn q_cut_plain_number() {
        match q_cut_bound(2, 1, 0.5, 2, 1.0) {
            Magnitude::ExpTower { height: 0, arg } => {
                // (1/0.5)^16 * 2^16 * 1 * 4 = 2^16 * 2^16 * 4
                assert_eq!(arg, 65536.0 * 65536.0 * 4.0);
            }
            other => panic!("expected plain, got {:?}", other),
        }
    }
}
