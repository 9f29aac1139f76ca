//! Step kernels on `[0,1]^r`: finitely many classes with rational weights
//! and symmetric cell values.
//!
//! A colored step kernel carries one value array per color; per cell the
//! color masses sum to at most 1 and the deficit is the reserved loop color
//! that graph lifts put on diagonal cells. Pure kernels have zero deficit
//! everywhere. Coordinates address single vertices; only this one-point
//! class structure is supported (see [`step_level_supported`]).

use std::collections::BTreeMap;
use std::fmt::Write as _;

use num_traits::{One, Signed, Zero};
use rand::Rng;

use crate::comb::for_each_tuple;
use crate::graphs::{ColoredHypergraph, ColoredPattern, Hypergraph};
use crate::limits::Limits;
use crate::rat::{rat_from_text, rat_to_text, rat_u, rone, rzero, to_f64, Rat};
use crate::{Error, Result};

/// Cell index for a class tuple; the first coordinate varies fastest.
pub fn cell_index(cell: &[usize], t: usize) -> usize {
    let mut idx = 0usize;
    for &c in cell.iter().rev() {
        idx = idx * t + c;
    }
    idx
}

fn validate_weights(weights: &[Rat]) -> Result<()> {
    if weights.is_empty() {
        return Err(Error::ShapeMismatch("no classes".into()));
    }
    if weights.iter().any(|w| !w.is_positive()) {
        return Err(Error::RangeError("class weights must be positive".into()));
    }
    let total: Rat = weights.iter().sum();
    if !total.is_one() {
        return Err(Error::RangeError(format!("class weights sum to {}", total)));
    }
    Ok(())
}

fn check_symmetry(r: usize, t: usize, values: &[Rat]) -> Result<()> {
    if values.len() != t.pow(r as u32) {
        return Err(Error::ShapeMismatch(format!(
            "{} cells for t={} r={}",
            values.len(),
            t,
            r
        )));
    }
    let mut ok = true;
    for_each_tuple(t, r, |cell| {
        let idx = cell_index(cell, t);
        let mut sorted = cell.to_vec();
        sorted.sort_unstable();
        if values[idx] != values[cell_index(&sorted, t)] {
            ok = false;
        }
    });
    if ok {
        Ok(())
    } else {
        Err(Error::RangeError("cell values are not symmetric".into()))
    }
}

/// Uncolored step kernel; values are arbitrary rationals (norm routines
/// that need `|W| <= 1` check [`StepKernel::max_abs`] themselves).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StepKernel {
    r: usize,
    t: usize,
    weights: Vec<Rat>,
    values: Vec<Rat>,
}

impl StepKernel {
    pub fn new(r: usize, weights: Vec<Rat>, values: Vec<Rat>) -> Result<Self> {
        assert!(r >= 1);
        validate_weights(&weights)?;
        check_symmetry(r, weights.len(), &values)?;
        Ok(StepKernel { r, t: weights.len(), weights, values })
    }

    pub fn constant(r: usize, t: usize, c: Rat) -> Self {
        let weights = vec![rone() / rat_u(t as u64); t];
        StepKernel { r, t, weights, values: vec![c; t.pow(r as u32)] }
    }

    /// Symmetric rank-one kernel `f(x_1) ... f(x_r)` on equal classes.
    pub fn rank_one(r: usize, f: &[Rat]) -> Self {
        let t = f.len();
        let weights = vec![rone() / rat_u(t as u64); t];
        let mut values = vec![rzero(); t.pow(r as u32)];
        for_each_tuple(t, r, |cell| {
            let mut v = rone();
            for &c in cell {
                v *= &f[c];
            }
            values[cell_index(cell, t)] = v;
        });
        StepKernel { r, t, weights, values }
    }

    pub fn r(&self) -> usize {
        self.r
    }

    pub fn t(&self) -> usize {
        self.t
    }

    pub fn weights(&self) -> &[Rat] {
        &self.weights
    }

    pub fn value(&self, cell: &[usize]) -> &Rat {
        &self.values[cell_index(cell, self.t)]
    }

    pub fn values(&self) -> &[Rat] {
        &self.values
    }

    pub fn max_abs(&self) -> Rat {
        self.values.iter().map(|v| v.abs()).max().unwrap_or_else(rzero)
    }

    /// Cellwise difference; requires identical weights (refine first).
    pub fn diff(&self, other: &StepKernel) -> Result<StepKernel> {
        if self.r != other.r || self.weights != other.weights {
            return Err(Error::ShapeMismatch("kernels live on different class structures".into()));
        }
        let values: Vec<Rat> =
            self.values.iter().zip(&other.values).map(|(a, b)| a - b).collect();
        Ok(StepKernel { r: self.r, t: self.t, weights: self.weights.clone(), values })
    }

    pub fn to_f64(&self) -> StepKernelF {
        StepKernelF {
            r: self.r,
            t: self.t,
            weights: self.weights.iter().map(to_f64).collect(),
            values: self.values.iter().map(to_f64).collect(),
        }
    }

    /// Lifts a `[0,1]`-valued kernel to the 2-colored kernel (deficit color 0
    /// carries `1 - W`, color 1 carries `W`).
    pub fn to_two_colored(&self) -> Result<ColoredStepKernel> {
        if self.values.iter().any(|v| v.is_negative() || v > &rone()) {
            return Err(Error::RangeError("values must lie in [0,1] to form a 2-coloring".into()));
        }
        let absent: Vec<Rat> = self.values.iter().map(|v| rone() - v).collect();
        ColoredStepKernel::new(self.r, self.weights.clone(), vec![absent, self.values.clone()])
    }
}

/// Float mirror of a step kernel for large-instance heuristics.
#[derive(Debug, Clone)]
pub struct StepKernelF {
    pub r: usize,
    pub t: usize,
    pub weights: Vec<f64>,
    pub values: Vec<f64>,
}

impl StepKernelF {
    pub fn value(&self, cell: &[usize]) -> f64 {
        self.values[cell_index(cell, self.t)]
    }
}

/// Colored step kernel: one `[0,1]` value array per color, cell sums <= 1,
/// deficit = loop color.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ColoredStepKernel {
    r: usize,
    t: usize,
    k: usize,
    weights: Vec<Rat>,
    values: Vec<Vec<Rat>>,
}

impl ColoredStepKernel {
    pub fn new(r: usize, weights: Vec<Rat>, values: Vec<Vec<Rat>>) -> Result<Self> {
        assert!(r >= 1);
        validate_weights(&weights)?;
        let t = weights.len();
        let k = values.len();
        if k == 0 {
            return Err(Error::ShapeMismatch("no colors".into()));
        }
        for arr in &values {
            check_symmetry(r, t, arr)?;
            if arr.iter().any(|v| v.is_negative() || v > &rone()) {
                return Err(Error::RangeError("color masses must lie in [0,1]".into()));
            }
        }
        for idx in 0..t.pow(r as u32) {
            let total: Rat = values.iter().map(|arr| arr[idx].clone()).sum();
            if total > rone() {
                return Err(Error::RangeError(format!("cell {} has color mass {}", idx, total)));
            }
        }
        Ok(ColoredStepKernel { r, t, k, weights, values })
    }

    pub fn r(&self) -> usize {
        self.r
    }

    pub fn t(&self) -> usize {
        self.t
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn weights(&self) -> &[Rat] {
        &self.weights
    }

    pub fn value(&self, color: usize, cell: &[usize]) -> &Rat {
        &self.values[color][cell_index(cell, self.t)]
    }

    pub fn value_at(&self, color: usize, idx: usize) -> &Rat {
        &self.values[color][idx]
    }

    pub fn arrays(&self) -> &[Vec<Rat>] {
        &self.values
    }

    /// Loop-color mass of a cell: `1 - sum of color masses`.
    pub fn deficit_at(&self, idx: usize) -> Rat {
        let used: Rat = self.values.iter().map(|arr| arr[idx].clone()).sum();
        rone() - used
    }

    /// True when every cell's colors sum to exactly 1 (no loop mass).
    pub fn is_proper(&self) -> bool {
        (0..self.t.pow(self.r as u32)).all(|idx| self.deficit_at(idx).is_zero())
    }

    /// One color layer as an uncolored kernel.
    pub fn component(&self, color: usize) -> StepKernel {
        StepKernel {
            r: self.r,
            t: self.t,
            weights: self.weights.clone(),
            values: self.values[color].clone(),
        }
    }

    /// Loop-color layer as an uncolored kernel.
    pub fn deficit_component(&self) -> StepKernel {
        let values: Vec<Rat> =
            (0..self.t.pow(self.r as u32)).map(|idx| self.deficit_at(idx)).collect();
        StepKernel { r: self.r, t: self.t, weights: self.weights.clone(), values }
    }

    /// Forgets a sub-color: colors `a * k_sub + b` merge over b.
    pub fn discolor(&self, k_sub: usize) -> Result<ColoredStepKernel> {
        if k_sub == 0 || self.k % k_sub != 0 {
            return Err(Error::ShapeMismatch(format!(
                "color count {} not divisible by {}",
                self.k, k_sub
            )));
        }
        let k_base = self.k / k_sub;
        let cells = self.t.pow(self.r as u32);
        let mut values = vec![vec![rzero(); cells]; k_base];
        for (c, arr) in self.values.iter().enumerate() {
            let base = c / k_sub;
            for (i, v) in arr.iter().enumerate() {
                values[base][i] += v;
            }
        }
        ColoredStepKernel::new(self.r, self.weights.clone(), values)
    }

    pub fn to_f64(&self) -> ColoredStepKernelF {
        ColoredStepKernelF {
            r: self.r,
            t: self.t,
            k: self.k,
            weights: self.weights.iter().map(to_f64).collect(),
            values: self.values.iter().map(|arr| arr.iter().map(to_f64).collect()).collect(),
        }
    }
}

/// Float mirror of a colored step kernel.
#[derive(Debug, Clone)]
pub struct ColoredStepKernelF {
    pub r: usize,
    pub t: usize,
    pub k: usize,
    pub weights: Vec<f64>,
    pub values: Vec<Vec<f64>>,
}

/// Only one-point coordinate classes are supported; richer coordinate
/// structures are reserved and rejected here.
pub fn step_level_supported(r: usize, level: usize) -> Result<()> {
    if level == 1 {
        Ok(())
    } else {
        Err(Error::Unsupported(
            format!("({r},{level})-step structure"),
            "only level-1 (one vertex per coordinate) step kernels are implemented".into(),
        ))
    }
}

/// Partition of the class index set `0..t`. Labels are dense block ids.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CellPartition {
    labels: Vec<usize>,
    blocks: usize,
}

impl CellPartition {
    pub fn new(labels: Vec<usize>) -> Result<Self> {
        let blocks = labels.iter().map(|&b| b + 1).max().unwrap_or(0);
        let mut seen = vec![false; blocks];
        for &b in &labels {
            seen[b] = true;
        }
        if seen.iter().any(|&s| !s) {
            return Err(Error::ShapeMismatch("block labels are not dense".into()));
        }
        Ok(CellPartition { labels, blocks })
    }

    pub fn trivial(t: usize) -> Self {
        CellPartition { labels: vec![0; t], blocks: if t == 0 { 0 } else { 1 } }
    }

    pub fn discrete(t: usize) -> Self {
        CellPartition { labels: (0..t).collect(), blocks: t }
    }

    pub fn t(&self) -> usize {
        self.labels.len()
    }

    pub fn block_count(&self) -> usize {
        self.blocks
    }

    pub fn label(&self, class: usize) -> usize {
        self.labels[class]
    }

    pub fn labels(&self) -> &[usize] {
        &self.labels
    }

    /// Classes of one block.
    pub fn block(&self, b: usize) -> Vec<usize> {
        (0..self.labels.len()).filter(|&i| self.labels[i] == b).collect()
    }

    /// Common refinement with another partition of the same ground set.
    pub fn meet(&self, other: &CellPartition) -> CellPartition {
        assert_eq!(self.labels.len(), other.labels.len());
        let mut map: BTreeMap<(usize, usize), usize> = BTreeMap::new();
        let mut labels = Vec::with_capacity(self.labels.len());
        for i in 0..self.labels.len() {
            let key = (self.labels[i], other.labels[i]);
            let next = map.len();
            let b = *map.entry(key).or_insert(next);
            labels.push(b);
        }
        CellPartition { labels, blocks: map.len() }
    }

    /// Splits every block by membership in a class subset.
    pub fn split_by(&self, subset: &[bool]) -> CellPartition {
        assert_eq!(subset.len(), self.labels.len());
        let other = CellPartition {
            labels: subset.iter().map(|&b| usize::from(b)).collect(),
            blocks: 2,
        };
        // meet() renumbers densely even if the subset is trivial
        let re = self.meet(&other);
        CellPartition::new(re.labels).unwrap()
    }

    pub fn refines(&self, coarser: &CellPartition) -> bool {
        assert_eq!(self.labels.len(), coarser.labels.len());
        let mut image: BTreeMap<usize, usize> = BTreeMap::new();
        for i in 0..self.labels.len() {
            match image.get(&self.labels[i]) {
                Some(&b) if b != coarser.labels[i] => return false,
                None => {
                    image.insert(self.labels[i], coarser.labels[i]);
                }
                _ => {}
            }
        }
        true
    }
}

/// Averages a colored kernel over a class partition: constant on every block
/// cell, same class structure. Idempotent.
pub fn step_average(w: &ColoredStepKernel, q: &CellPartition) -> ColoredStepKernel {
    assert_eq!(q.t(), w.t);
    let t = w.t;
    let r = w.r;
    let cells = t.pow(r as u32);
    let blocks = q.block_count();
    // accumulate weighted sums per block cell
    let bcells = blocks.pow(r as u32);
    let mut mass = vec![rzero(); bcells];
    let mut sums = vec![vec![rzero(); bcells]; w.k];
    for_each_tuple(t, r, |cell| {
        let mut wt = rone();
        for &c in cell {
            wt *= &w.weights[c];
        }
        let bcell: Vec<usize> = cell.iter().map(|&c| q.label(c)).collect();
        let bidx = cell_index(&bcell, blocks);
        let idx = cell_index(cell, t);
        for (color, arr) in w.values.iter().enumerate() {
            sums[color][bidx] += &arr[idx] * &wt;
        }
        mass[bidx] += wt;
    });
    let mut values = vec![vec![rzero(); cells]; w.k];
    for_each_tuple(t, r, |cell| {
        let bcell: Vec<usize> = cell.iter().map(|&c| q.label(c)).collect();
        let bidx = cell_index(&bcell, blocks);
        let idx = cell_index(cell, t);
        for color in 0..w.k {
            values[color][idx] = &sums[color][bidx] / &mass[bidx];
        }
    });
    ColoredStepKernel { r, t, k: w.k, weights: w.weights.clone(), values }
}

/// Uncolored variant of [`step_average`].
pub fn step_average_simple(w: &StepKernel, q: &CellPartition) -> StepKernel {
    let colored = ColoredStepKernel {
        r: w.r,
        t: w.t,
        k: 1,
        weights: w.weights.clone(),
        values: vec![w.values.iter().map(|v| (v + rone()) / rat_u(2)).collect()],
    };
    // shift to [0,1], average, shift back: averaging commutes with affine maps
    let avg = step_average(&colored, q);
    let values: Vec<Rat> = avg.values[0].iter().map(|v| v * rat_u(2) - rone()).collect();
    StepKernel { r: w.r, t: w.t, weights: w.weights.clone(), values }
}

/// Naive kernel of a colored hypergraph: one class per vertex with weight
/// 1/n, color indicators off the diagonal, loop color on diagonal cells.
pub fn graph_to_kernel(g: &ColoredHypergraph) -> ColoredStepKernel {
    let n = g.n();
    let r = g.r();
    let cells = n.pow(r as u32);
    let weights = vec![rone() / rat_u(n as u64); n];
    let mut values = vec![vec![rzero(); cells]; g.k()];
    for_each_tuple(n, r, |cell| {
        let mut verts: Vec<u32> = cell.iter().map(|&c| c as u32).collect();
        verts.sort_unstable();
        if verts.windows(2).all(|w| w[0] < w[1]) {
            let c = g.color_of(&verts).unwrap() as usize;
            values[c][cell_index(cell, n)] = rone();
        }
    });
    ColoredStepKernel { r, t: n, k: g.k(), weights, values }
}

/// Probability that a q-point sample of the kernel comes out as exactly the
/// colored graph `f`, without conditioning on avoiding the loop color.
pub fn t_density_kernel(f: &ColoredHypergraph, w: &ColoredStepKernel) -> Result<Rat> {
    if f.r() != w.r || f.k() != w.k {
        return Err(Error::ShapeMismatch(format!(
            "pattern ({},{} colors) vs kernel ({},{} colors)",
            f.r(),
            f.k(),
            w.r,
            w.k
        )));
    }
    let q = f.n();
    let slots = crate::comb::subsets(q, w.r);
    let mut total = rzero();
    for_each_tuple(w.t, q, |assign| {
        let mut term = rone();
        for &c in assign {
            term *= &w.weights[c];
        }
        for s in &slots {
            let color = f.color_at(crate::comb::colex_rank(s) as usize) as usize;
            let cell: Vec<usize> = s.iter().map(|&v| assign[v as usize]).collect();
            term *= &w.values[color][cell_index(&cell, w.t)];
            if term.is_zero() {
                break;
            }
        }
        total += term;
    });
    Ok(total)
}

/// Probability that a q-point sample avoids the loop color entirely.
pub fn no_loop_mass(w: &ColoredStepKernel, q: usize) -> Rat {
    let slots = crate::comb::subsets(q, w.r);
    let mut total = rzero();
    for_each_tuple(w.t, q, |assign| {
        let mut term = rone();
        for &c in assign {
            term *= &w.weights[c];
        }
        for s in &slots {
            let cell: Vec<usize> = s.iter().map(|&v| assign[v as usize]).collect();
            let idx = cell_index(&cell, w.t);
            let mut used = rzero();
            for arr in &w.values {
                used += &arr[idx];
            }
            term *= used;
            if term.is_zero() {
                break;
            }
        }
        total += term;
    });
    total
}

/// Exact distribution of [`sample_from_kernel`]: the loop-conditioned law of
/// a q-point sample. Probabilities sum to 1 exactly.
pub fn exact_sample_distribution(
    w: &ColoredStepKernel,
    q: usize,
    limits: &Limits,
) -> Result<BTreeMap<ColoredHypergraph, Rat>> {
    if q < w.r {
        return Err(Error::InvalidSample(q, w.t));
    }
    let slots = crate::comb::binomial(q, w.r);
    let atoms = (w.k as u128).checked_pow(slots as u32).unwrap_or(u128::MAX);
    let work = atoms.saturating_mul((w.t as u128).saturating_pow(q as u32));
    limits.check(work)?;
    let denom = no_loop_mass(w, q);
    if denom.is_zero() {
        return Err(Error::RangeError("every sample hits the loop color".into()));
    }
    let base = ColoredHypergraph::monochromatic(w.r, q, 1, 0).unwrap();
    let mut out = BTreeMap::new();
    for coloring in crate::graphs::enumerate_colorings(&base, w.k, limits)? {
        let f = ColoredHypergraph::from_colors(
            w.r,
            q,
            w.k,
            coloring.refined().colors().to_vec(),
        )
        .unwrap();
        let p = t_density_kernel(&f, w)?;
        if !p.is_zero() {
            out.insert(f, p / &denom);
        }
    }
    Ok(out)
}

/// Samples a colored graph on q labeled points: classes are drawn by weight,
/// slot colors by cell mass; a draw that hits the loop color restarts the
/// whole point vector.
pub fn sample_from_kernel<R: Rng>(
    w: &ColoredStepKernel,
    q: usize,
    rng: &mut R,
) -> Result<ColoredHypergraph> {
    if q < w.r {
        return Err(Error::InvalidSample(q, w.t));
    }
    let wf: Vec<f64> = w.weights.iter().map(to_f64).collect();
    let slots = crate::comb::subsets(q, w.r);
    'resample: loop {
        let assign: Vec<usize> = (0..q).map(|_| draw_categorical(&wf, rng)).collect();
        let mut colors = vec![0u32; slots.len()];
        for (i, s) in slots.iter().enumerate() {
            let cell: Vec<usize> = s.iter().map(|&v| assign[v as usize]).collect();
            let idx = cell_index(&cell, w.t);
            let masses: Vec<f64> = w.values.iter().map(|arr| to_f64(&arr[idx])).collect();
            let x: f64 = rng.gen();
            let mut acc = 0.0;
            let mut chosen = None;
            for (c, m) in masses.iter().enumerate() {
                acc += m;
                if x < acc {
                    chosen = Some(c as u32);
                    break;
                }
            }
            match chosen {
                Some(c) => colors[i] = c,
                None => continue 'resample, // loop color drawn
            }
        }
        return ColoredHypergraph::from_colors(w.r, q, w.k, colors);
    }
}

fn draw_categorical<R: Rng>(probs: &[f64], rng: &mut R) -> usize {
    let x: f64 = rng.gen();
    let mut acc = 0.0;
    for (i, p) in probs.iter().enumerate() {
        acc += p;
        if x < acc {
            return i;
        }
    }
    probs.len() - 1
}

/// Product density of a colored linear pattern against a colored kernel.
pub fn tstar_kernel(p: &ColoredPattern, w: &ColoredStepKernel) -> Result<Rat> {
    if p.r != w.r {
        return Err(Error::ShapeMismatch(format!("pattern arity {} vs kernel {}", p.r, w.r)));
    }
    if p.edges.iter().any(|(_, c)| *c as usize >= w.k) {
        return Err(Error::InvalidColor(p.edges.iter().map(|(_, c)| *c).max().unwrap(), w.k));
    }
    let mut total = rzero();
    for_each_tuple(w.t, p.q, |assign| {
        let mut term = rone();
        for &c in assign {
            term *= &w.weights[c];
        }
        for (e, color) in &p.edges {
            let cell: Vec<usize> = e.iter().map(|&v| assign[v as usize]).collect();
            term *= &w.values[*color as usize][cell_index(&cell, w.t)];
            if term.is_zero() {
                break;
            }
        }
        total += term;
    });
    Ok(total)
}

/// Product density of an uncolored pattern against an uncolored kernel.
pub fn tstar_step(h: &Hypergraph, w: &StepKernel) -> Result<Rat> {
    if h.r() != w.r {
        return Err(Error::ShapeMismatch(format!("pattern arity {} vs kernel {}", h.r(), w.r)));
    }
    let edges: Vec<Vec<u32>> = h.edges().cloned().collect();
    let mut total = rzero();
    for_each_tuple(w.t, h.n(), |assign| {
        let mut term = rone();
        for &c in assign {
            term *= &w.weights[c];
        }
        for e in &edges {
            let cell: Vec<usize> = e.iter().map(|&v| assign[v as usize]).collect();
            term *= &w.values[cell_index(&cell, w.t)];
            if term.is_zero() {
                break;
            }
        }
        total += term;
    });
    Ok(total)
}

// ---- alignment of two class structures ------------------------------------

/// Common interval refinement of two weight vectors laid out in class order:
/// segments `(class in a, class in b, length)` covering `[0,1]`.
pub fn overlay_weights(a: &[Rat], b: &[Rat]) -> Vec<(usize, usize, Rat)> {
    let mut out = Vec::new();
    let mut ia = 0usize;
    let mut ib = 0usize;
    let mut rem_a = a[0].clone();
    let mut rem_b = b[0].clone();
    loop {
        let take = rem_a.clone().min(rem_b.clone());
        if take.is_positive() {
            out.push((ia, ib, take.clone()));
        }
        rem_a -= &take;
        rem_b -= &take;
        if rem_a.is_zero() {
            ia += 1;
            if ia == a.len() {
                break;
            }
            rem_a = a[ia].clone();
        }
        if rem_b.is_zero() {
            ib += 1;
            if ib == b.len() {
                break;
            }
            rem_b = b[ib].clone();
        }
    }
    out
}

/// Rewrites two colored kernels over the common refinement of their class
/// intervals, so they share weights and can be compared cellwise.
pub fn common_refinement(
    a: &ColoredStepKernel,
    b: &ColoredStepKernel,
) -> Result<(ColoredStepKernel, ColoredStepKernel)> {
    if a.r != b.r {
        return Err(Error::ShapeMismatch("different arities".into()));
    }
    let segs = overlay_weights(&a.weights, &b.weights);
    let t = segs.len();
    let weights: Vec<Rat> = segs.iter().map(|(_, _, l)| l.clone()).collect();
    let map_a: Vec<usize> = segs.iter().map(|(i, _, _)| *i).collect();
    let map_b: Vec<usize> = segs.iter().map(|(_, j, _)| *j).collect();
    let lift = |w: &ColoredStepKernel, map: &[usize]| {
        let cells = t.pow(w.r as u32);
        let mut values = vec![vec![rzero(); cells]; w.k];
        for_each_tuple(t, w.r, |cell| {
            let src: Vec<usize> = cell.iter().map(|&c| map[c]).collect();
            let sidx = cell_index(&src, w.t);
            let didx = cell_index(cell, t);
            for color in 0..w.k {
                values[color][didx] = w.values[color][sidx].clone();
            }
        });
        ColoredStepKernel { r: w.r, t, k: w.k, weights: weights.clone(), values }
    };
    Ok((lift(a, &map_a), lift(b, &map_b)))
}

/// L1 distance of two colored kernels summed over the color layers,
/// computed exactly on the common refinement. The loop layer is a derived
/// quantity (1 minus the color sum) and is excluded here, matching the
/// other colored distances; it vanishes cellwise whenever all color layers
/// agree.
pub fn l1_distance(a: &ColoredStepKernel, b: &ColoredStepKernel) -> Result<Rat> {
    if a.k != b.k {
        return Err(Error::ShapeMismatch("different color counts".into()));
    }
    let (ra, rb) = common_refinement(a, b)?;
    let mut total = rzero();
    for_each_tuple(ra.t, ra.r, |cell| {
        let mut wt = rone();
        for &c in cell {
            wt *= &ra.weights[c];
        }
        let idx = cell_index(cell, ra.t);
        let mut celldiff = rzero();
        for color in 0..ra.k {
            celldiff += (&ra.values[color][idx] - &rb.values[color][idx]).abs();
        }
        total += celldiff * wt;
    });
    Ok(total)
}

// ---- random generation -----------------------------------------------------

/// Random uncolored kernel: weights are normalized positive integers, values
/// are multiples of `1/denom` in `[-1,1]`.
pub fn random_step_kernel<R: Rng>(r: usize, t: usize, denom: u32, rng: &mut R) -> StepKernel {
    let weights = random_weights(t, rng);
    let cells = t.pow(r as u32);
    let mut values = vec![rzero(); cells];
    for_each_tuple(t, r, |cell| {
        let mut sorted = cell.to_vec();
        sorted.sort_unstable();
        if sorted == cell {
            let num = rng.gen_range(-(denom as i64)..=denom as i64);
            values[cell_index(cell, t)] = Rat::new(num.into(), (denom as i64).into());
        }
    });
    // symmetrize off the sorted representatives
    for_each_tuple(t, r, |cell| {
        let mut sorted = cell.to_vec();
        sorted.sort_unstable();
        values[cell_index(cell, t)] = values[cell_index(&sorted, t)].clone();
    });
    StepKernel { r, t, weights, values }
}

/// Random proper colored kernel: each sorted cell gets a random composition
/// of `denom` into k parts.
pub fn random_colored_kernel<R: Rng>(
    r: usize,
    t: usize,
    k: usize,
    denom: u32,
    rng: &mut R,
) -> ColoredStepKernel {
    let weights = random_weights(t, rng);
    let cells = t.pow(r as u32);
    let mut values = vec![vec![rzero(); cells]; k];
    for_each_tuple(t, r, |cell| {
        let mut sorted = cell.to_vec();
        sorted.sort_unstable();
        if sorted == cell {
            // stars and bars: k-1 cut points in 0..=denom
            let mut cuts: Vec<u32> = (0..k - 1).map(|_| rng.gen_range(0..=denom)).collect();
            cuts.sort_unstable();
            cuts.insert(0, 0);
            cuts.push(denom);
            let idx = cell_index(cell, t);
            for color in 0..k {
                let part = cuts[color + 1] - cuts[color];
                values[color][idx] = Rat::new((part as i64).into(), (denom as i64).into());
            }
        }
    });
    for_each_tuple(t, r, |cell| {
        let mut sorted = cell.to_vec();
        sorted.sort_unstable();
        let sidx = cell_index(&sorted, t);
        let idx = cell_index(cell, t);
        for color in 0..k {
            values[color][idx] = values[color][sidx].clone();
        }
    });
    ColoredStepKernel { r, t, k, weights, values }
}

fn random_weights<R: Rng>(t: usize, rng: &mut R) -> Vec<Rat> {
    let parts: Vec<u64> = (0..t).map(|_| rng.gen_range(1..=8u64)).collect();
    let total: u64 = parts.iter().sum();
    parts.into_iter().map(|p| rat_u(p) / rat_u(total)).collect()
}

// ---- text format ------------------------------------------------------------

/// Canonical text form: header `r t k` (k = 0 for uncolored), a line of t
/// weights `p/q`, then per color one line of t^r cell values in lexicographic
/// cell order (leftmost coordinate most significant).
pub fn write_colored_kernel(w: &ColoredStepKernel) -> String {
    let mut out = String::new();
    writeln!(out, "{} {} {}", w.r, w.t, w.k).unwrap();
    writeln!(out, "{}", w.weights.iter().map(rat_to_text).collect::<Vec<_>>().join(" ")).unwrap();
    for arr in &w.values {
        writeln!(out, "{}", lex_cells(w.r, w.t, arr).join(" ")).unwrap();
    }
    out
}

pub fn write_step_kernel(w: &StepKernel) -> String {
    let mut out = String::new();
    writeln!(out, "{} {} 0", w.r, w.t).unwrap();
    writeln!(out, "{}", w.weights.iter().map(rat_to_text).collect::<Vec<_>>().join(" ")).unwrap();
    writeln!(out, "{}", lex_cells(w.r, w.t, &w.values).join(" ")).unwrap();
    out
}

fn lex_cells(r: usize, t: usize, arr: &[Rat]) -> Vec<String> {
    // lexicographic on (c_1..c_r) with the left coordinate most significant
    let mut out = Vec::with_capacity(arr.len());
    let mut cell = vec![0usize; r];
    loop {
        out.push(rat_to_text(&arr[cell_index(&cell, t)]));
        let mut i = r;
        loop {
            if i == 0 {
                return out;
            }
            i -= 1;
            cell[i] += 1;
            if cell[i] < t {
                break;
            }
            cell[i] = 0;
            if i == 0 {
                return out;
            }
        }
    }
}

fn parse_cells(r: usize, t: usize, toks: &[&str], line: usize) -> Result<Vec<Rat>> {
    let cells = t.pow(r as u32);
    if toks.len() != cells {
        return Err(Error::parse(line, format!("expected {} cell values", cells)));
    }
    let mut arr = vec![rzero(); cells];
    let mut cell = vec![0usize; r];
    let mut pos = 0usize;
    loop {
        let v = rat_from_text(toks[pos])
            .ok_or_else(|| Error::parse(line, format!("bad rational {:?}", toks[pos])))?;
        arr[cell_index(&cell, t)] = v;
        pos += 1;
        let mut i = r;
        loop {
            if i == 0 {
                return Ok(arr);
            }
            i -= 1;
            cell[i] += 1;
            if cell[i] < t {
                break;
            }
            cell[i] = 0;
            if i == 0 {
                return Ok(arr);
            }
        }
    }
}

/// Parses either kernel kind; a colored kernel comes back as `Ok(Err(..))`
/// style is avoided: use [`read_colored_kernel`] / [`read_step_kernel`].
fn read_kernel_parts(text: &str) -> Result<(usize, usize, usize, Vec<Rat>, Vec<Vec<Rat>>)> {
    let mut lines = text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty());
    let (_, header) = lines.next().ok_or_else(|| Error::parse(1, "empty input"))?;
    let head: Vec<usize> = header
        .split_whitespace()
        .map(|t| t.parse::<usize>().map_err(|_| Error::parse(1, format!("bad header token {t:?}"))))
        .collect::<Result<_>>()?;
    if head.len() != 3 {
        return Err(Error::parse(1, "header must be `r t k`"));
    }
    let (r, t, k) = (head[0], head[1], head[2]);
    let (wline, wtext) = lines.next().ok_or_else(|| Error::parse(2, "missing weights"))?;
    let weights: Vec<Rat> = wtext
        .split_whitespace()
        .map(|tok| rat_from_text(tok).ok_or_else(|| Error::parse(wline + 1, format!("bad rational {tok:?}"))))
        .collect::<Result<_>>()?;
    if weights.len() != t {
        return Err(Error::parse(wline + 1, format!("expected {} weights", t)));
    }
    let mut arrays = Vec::new();
    for _ in 0..k.max(1) {
        let (aline, atext) =
            lines.next().ok_or_else(|| Error::parse(wline + 2, "missing value array"))?;
        let toks: Vec<&str> = atext.split_whitespace().collect();
        arrays.push(parse_cells(r, t, &toks, aline + 1)?);
    }
    Ok((r, t, k, weights, arrays))
}

pub fn read_colored_kernel(text: &str) -> Result<ColoredStepKernel> {
    let (r, t, k, weights, arrays) = read_kernel_parts(text)?;
    if k == 0 {
        return Err(Error::parse(1, "header declares an uncolored kernel"));
    }
    let _ = t;
    ColoredStepKernel::new(r, weights, arrays)
}

pub fn read_step_kernel(text: &str) -> Result<StepKernel> {
    let (r, t, k, weights, mut arrays) = read_kernel_parts(text)?;
    if k != 0 {
        return Err(Error::parse(1, "header declares a colored kernel"));
    }
    let _ = t;
    StepKernel::new(r, weights, arrays.pop().unwrap())
}
