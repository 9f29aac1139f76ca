//! r-uniform hypergraphs and total edge colorings.
//!
//! Vertices are `0..n`. An edge is a sorted r-subset; loops (repeated
//! vertices) never exist as stored objects. A colored hypergraph assigns one
//! of k colors to *every* r-subset; a simple hypergraph lifts to the
//! 2-colored object with color 0 on absent edges and color 1 on present ones.

use std::collections::BTreeSet;
use std::fmt::Write as _;

use rand::seq::SliceRandom;
use rand::Rng;

use crate::comb::{binomial, colex_rank, for_each_subset, for_each_tuple, subsets};
use crate::limits::Limits;
use crate::rat::{rat_u, rzero, Rat};
use crate::{Error, Result};

fn validate_edge(edge: &[u32], r: usize, n: usize) -> Result<Vec<u32>> {
    let mut e = edge.to_vec();
    e.sort_unstable();
    let distinct = e.windows(2).all(|w| w[0] < w[1]);
    if e.len() != r || !distinct || e.iter().any(|&v| v as usize >= n) {
        return Err(Error::InvalidEdge(edge.to_vec(), r, n));
    }
    Ok(e)
}

/// Simple r-uniform hypergraph: a set of r-subsets of `0..n`.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
pub struct Hypergraph {
    r: usize,
    n: usize,
    edges: BTreeSet<Vec<u32>>,
}

impl Hypergraph {
    pub fn new(r: usize, n: usize) -> Self {
        assert!(r >= 1, "edge arity must be positive");
        Hypergraph { r, n, edges: BTreeSet::new() }
    }

    pub fn from_edges<I>(r: usize, n: usize, edges: I) -> Result<Self>
    where
        I: IntoIterator,
        I::Item: AsRef<[u32]>,
    {
        let mut g = Hypergraph::new(r, n);
        for e in edges {
            g.add_edge(e.as_ref())?;
        }
        Ok(g)
    }

    /// Complete r-graph on n vertices.
    pub fn complete(r: usize, n: usize) -> Self {
        let mut g = Hypergraph::new(r, n);
        for_each_subset(n, r, |s| {
            g.edges.insert(s.to_vec());
        });
        g
    }

    /// Two-fold blow-up of a single r-edge: vertices `2i, 2i+1` per original
    /// vertex i, and all 2^r choices of one copy per coordinate as edges.
    pub fn doubled_edge(r: usize) -> Self {
        let mut g = Hypergraph::new(r, 2 * r);
        for_each_tuple(2, r, |side| {
            let e: Vec<u32> = (0..r).map(|i| (2 * i + side[i]) as u32).collect();
            g.add_edge(&e).unwrap();
        });
        g
    }

    pub fn add_edge(&mut self, edge: &[u32]) -> Result<()> {
        let e = validate_edge(edge, self.r, self.n)?;
        self.edges.insert(e);
        Ok(())
    }

    pub fn remove_edge(&mut self, edge: &[u32]) -> bool {
        let mut e = edge.to_vec();
        e.sort_unstable();
        self.edges.remove(&e)
    }

    pub fn has_edge(&self, edge: &[u32]) -> bool {
        let mut e = edge.to_vec();
        e.sort_unstable();
        self.edges.contains(&e)
    }

    pub fn r(&self) -> usize {
        self.r
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn edges(&self) -> impl Iterator<Item = &Vec<u32>> {
        self.edges.iter()
    }

    /// Induced sub-hypergraph on a duplicate-free vertex list, relabeled
    /// 0..q in the order given.
    pub fn induced(&self, verts: &[u32]) -> Result<Hypergraph> {
        let lifted = ColoredHypergraph::from_hypergraph(self);
        let sub = lifted.induced(verts)?;
        Ok(sub.color_class(1))
    }

    pub fn to_colored(&self) -> ColoredHypergraph {
        ColoredHypergraph::from_hypergraph(self)
    }
}

/// Total k-coloring of the r-subsets of `0..n`; slot order is colex rank.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct ColoredHypergraph {
    r: usize,
    n: usize,
    k: usize,
    colors: Vec<u32>,
}

impl ColoredHypergraph {
    /// All slots colored `color`.
    pub fn monochromatic(r: usize, n: usize, k: usize, color: u32) -> Result<Self> {
        assert!(r >= 1 && k >= 1);
        if color as usize >= k {
            return Err(Error::InvalidColor(color, k));
        }
        let slots = binomial(n, r) as usize;
        Ok(ColoredHypergraph { r, n, k, colors: vec![color; slots] })
    }

    /// Lift of a simple hypergraph: color 1 on edges, 0 elsewhere.
    pub fn from_hypergraph(g: &Hypergraph) -> Self {
        let mut c = ColoredHypergraph::monochromatic(g.r, g.n, 2, 0).unwrap();
        for e in g.edges() {
            c.colors[colex_rank(e) as usize] = 1;
        }
        c
    }

    pub fn from_colors(r: usize, n: usize, k: usize, colors: Vec<u32>) -> Result<Self> {
        if colors.len() != binomial(n, r) as usize {
            return Err(Error::ShapeMismatch(format!(
                "{} colors for {} slots",
                colors.len(),
                binomial(n, r)
            )));
        }
        if let Some(&c) = colors.iter().find(|&&c| c as usize >= k) {
            return Err(Error::InvalidColor(c, k));
        }
        Ok(ColoredHypergraph { r, n, k, colors })
    }

    pub fn r(&self) -> usize {
        self.r
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn slot_count(&self) -> usize {
        self.colors.len()
    }

    pub fn colors(&self) -> &[u32] {
        &self.colors
    }

    pub fn color_at(&self, rank: usize) -> u32 {
        self.colors[rank]
    }

    /// Color of a sorted edge (any order accepted; the slot is the set).
    pub fn color_of(&self, edge: &[u32]) -> Result<u32> {
        let e = validate_edge(edge, self.r, self.n)?;
        Ok(self.colors[colex_rank(&e) as usize])
    }

    pub fn set_color(&mut self, edge: &[u32], color: u32) -> Result<()> {
        let e = validate_edge(edge, self.r, self.n)?;
        if color as usize >= self.k {
            return Err(Error::InvalidColor(color, self.k));
        }
        self.colors[colex_rank(&e) as usize] = color;
        Ok(())
    }

    /// Edges of one color class as a simple hypergraph.
    pub fn color_class(&self, color: u32) -> Hypergraph {
        let mut g = Hypergraph::new(self.r, self.n);
        for_each_subset(self.n, self.r, |s| {
            if self.colors[colex_rank(s) as usize] == color {
                g.edges.insert(s.to_vec());
            }
        });
        g
    }

    /// Counts per color over all slots.
    pub fn color_histogram(&self) -> Vec<u64> {
        let mut h = vec![0u64; self.k];
        for &c in &self.colors {
            h[c as usize] += 1;
        }
        h
    }

    /// Induced colored subgraph on a duplicate-free vertex list, relabeled
    /// 0..q in the order given (vertex order preserved for sorted input).
    pub fn induced(&self, verts: &[u32]) -> Result<ColoredHypergraph> {
        let q = verts.len();
        let mut seen = BTreeSet::new();
        for &v in verts {
            if v as usize >= self.n || !seen.insert(v) {
                return Err(Error::InvalidSample(q, self.n));
            }
        }
        if q < self.r {
            return Err(Error::InvalidSample(q, self.n));
        }
        let mut out = ColoredHypergraph::monochromatic(self.r, q, self.k, 0).unwrap();
        for_each_subset(q, self.r, |s| {
            let mut orig: Vec<u32> = s.iter().map(|&i| verts[i as usize]).collect();
            orig.sort_unstable();
            let c = self.colors[colex_rank(&orig) as usize];
            out.colors[colex_rank(s) as usize] = c;
        });
        Ok(out)
    }

    /// Uniform q-subset sample: returns the induced colored subgraph on a
    /// sorted random subset together with the chosen vertices.
    pub fn sample_q<R: Rng>(&self, q: usize, rng: &mut R) -> Result<(ColoredHypergraph, Vec<u32>)> {
        if q < self.r || q > self.n {
            return Err(Error::InvalidSample(q, self.n));
        }
        let mut verts: Vec<u32> = (0..self.n as u32).collect();
        verts.shuffle(rng);
        let mut chosen: Vec<u32> = verts[..q].to_vec();
        chosen.sort_unstable();
        Ok((self.induced(&chosen)?, chosen))
    }

    /// Relabels vertices by a permutation (perm[v] = new name). Test helper
    /// for invariance checks.
    pub fn relabel(&self, perm: &[u32]) -> ColoredHypergraph {
        assert_eq!(perm.len(), self.n);
        let mut out = self.clone();
        for_each_subset(self.n, self.r, |s| {
            let mut img: Vec<u32> = s.iter().map(|&v| perm[v as usize]).collect();
            img.sort_unstable();
            out.colors[colex_rank(&img) as usize] = self.colors[colex_rank(s) as usize];
        });
        out
    }
}

/// A refinement of a base coloring: base color a with sub-color b is stored
/// flat as `a * k_sub + b`, so forgetting the sub-color is integer division.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Coloring {
    base: ColoredHypergraph,
    refined: ColoredHypergraph,
    k_sub: usize,
}

impl Coloring {
    /// Builds a refinement from per-slot sub-colors.
    pub fn refine(base: &ColoredHypergraph, k_sub: usize, sub: &[u32]) -> Result<Coloring> {
        if sub.len() != base.slot_count() {
            return Err(Error::ShapeMismatch(format!(
                "{} sub-colors for {} slots",
                sub.len(),
                base.slot_count()
            )));
        }
        if let Some(&b) = sub.iter().find(|&&b| b as usize >= k_sub) {
            return Err(Error::InvalidColor(b, k_sub));
        }
        let colors: Vec<u32> =
            base.colors.iter().zip(sub).map(|(&a, &b)| a * k_sub as u32 + b).collect();
        let refined =
            ColoredHypergraph::from_colors(base.r, base.n, base.k * k_sub, colors).unwrap();
        Ok(Coloring { base: base.clone(), refined, k_sub })
    }

    /// Reinterprets an already-flattened refined graph.
    pub fn from_refined(refined: ColoredHypergraph, k_sub: usize) -> Result<Coloring> {
        if k_sub == 0 || refined.k % k_sub != 0 {
            return Err(Error::ShapeMismatch(format!(
                "refined color count {} not divisible by {}",
                refined.k, k_sub
            )));
        }
        let base = discolor(&refined, k_sub);
        Ok(Coloring { base, refined, k_sub })
    }

    pub fn base(&self) -> &ColoredHypergraph {
        &self.base
    }

    pub fn refined(&self) -> &ColoredHypergraph {
        &self.refined
    }

    pub fn k_sub(&self) -> usize {
        self.k_sub
    }
}

/// Forgets the sub-color of a flattened refinement.
pub fn discolor(refined: &ColoredHypergraph, k_sub: usize) -> ColoredHypergraph {
    assert!(k_sub >= 1 && refined.k % k_sub == 0);
    let colors: Vec<u32> = refined.colors.iter().map(|&c| c / k_sub as u32).collect();
    ColoredHypergraph::from_colors(refined.r, refined.n, refined.k / k_sub, colors).unwrap()
}

/// Streams all k_sub-refinements of a base coloring (k_sub^slots of them).
pub fn enumerate_colorings<'a>(
    base: &'a ColoredHypergraph,
    k_sub: usize,
    limits: &Limits,
) -> Result<impl Iterator<Item = Coloring> + 'a> {
    let total = (k_sub as u128).checked_pow(base.slot_count() as u32).unwrap_or(u128::MAX);
    limits.check(total)?;
    let slots = base.slot_count();
    let mut sub = vec![0u32; slots];
    let mut done = false;
    Ok(std::iter::from_fn(move || {
        if done {
            return None;
        }
        let item = Coloring::refine(base, k_sub, &sub).unwrap();
        // odometer increment
        let mut i = 0;
        loop {
            if i == slots {
                done = true;
                break;
            }
            sub[i] += 1;
            if (sub[i] as usize) < k_sub {
                break;
            }
            sub[i] = 0;
            i += 1;
        }
        if slots == 0 {
            done = true;
        }
        Some(item)
    }))
}

/// Exact induced-subgraph density: the probability that a uniform
/// |V(F)|-subset of G induces exactly F (vertex order preserved).
pub fn induced_density(f: &ColoredHypergraph, g: &ColoredHypergraph, limits: &Limits) -> Result<Rat> {
    if f.r != g.r || f.k != g.k {
        return Err(Error::ShapeMismatch(format!(
            "pattern ({}, {} colors) vs host ({}, {} colors)",
            f.r, f.k, g.r, g.k
        )));
    }
    let q = f.n;
    if q > g.n {
        return Err(Error::InvalidSample(q, g.n));
    }
    let total = binomial(g.n, q);
    limits.check(total as u128)?;
    let mut hits: u64 = 0;
    for_each_subset(g.n, q, |s| {
        let sub = g.induced(s).unwrap();
        if sub == *f {
            hits += 1;
        }
    });
    Ok(rat_u(hits) / rat_u(total))
}

/// Monte Carlo induced density with standard error, for hosts too large to
/// enumerate.
pub fn induced_density_mc<R: Rng>(
    f: &ColoredHypergraph,
    g: &ColoredHypergraph,
    trials: u64,
    rng: &mut R,
) -> Result<(f64, f64)> {
    let q = f.n;
    let mut hits = 0u64;
    for _ in 0..trials {
        let (sub, _) = g.sample_q(q, rng)?;
        if sub == *f {
            hits += 1;
        }
    }
    let p = hits as f64 / trials as f64;
    let se = (p * (1.0 - p) / trials as f64).sqrt();
    Ok((p, se))
}

/// Exact distribution of `sample_q`: map from induced colored subgraph to its
/// probability. Probabilities sum to 1 exactly.
pub fn sample_distribution(
    g: &ColoredHypergraph,
    q: usize,
    limits: &Limits,
) -> Result<std::collections::BTreeMap<ColoredHypergraph, Rat>> {
    if q < g.r || q > g.n {
        return Err(Error::InvalidSample(q, g.n));
    }
    let total = binomial(g.n, q);
    limits.check(total as u128)?;
    let mut out: std::collections::BTreeMap<ColoredHypergraph, Rat> = Default::default();
    let w = rat_u(1) / rat_u(total);
    for_each_subset(g.n, q, |s| {
        let sub = g.induced(s).unwrap();
        *out.entry(sub).or_insert_with(rzero) += &w;
    });
    Ok(out)
}

/// A linear pattern with colored edges: only the listed edges constrain a
/// map, absent slots are free. Edges must pairwise share at most one vertex.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct ColoredPattern {
    pub r: usize,
    pub q: usize,
    /// Sorted edge list with colors, canonically ordered.
    pub edges: Vec<(Vec<u32>, u32)>,
}

impl ColoredPattern {
    pub fn new(r: usize, q: usize, mut edges: Vec<(Vec<u32>, u32)>) -> Result<Self> {
        for (e, _) in edges.iter_mut() {
            *e = validate_edge(e, r, q)?;
        }
        edges.sort();
        edges.dedup();
        for i in 0..edges.len() {
            for j in i + 1..edges.len() {
                if edges[i].0 == edges[j].0 {
                    return Err(Error::ShapeMismatch(format!(
                        "edge {:?} listed with two colors",
                        edges[i].0
                    )));
                }
                let shared = edges[i].0.iter().filter(|v| edges[j].0.contains(v)).count();
                if shared > 1 {
                    return Err(Error::Unsupported(
                        "pattern".into(),
                        format!("edges {:?} and {:?} share {} vertices", edges[i].0, edges[j].0, shared),
                    ));
                }
            }
        }
        Ok(ColoredPattern { r, q, edges })
    }
}

/// Product density of a colored linear pattern in a colored host: the
/// fraction of maps `[q] -> [n]` under which every pattern edge lands on r
/// distinct vertices with the required color.
pub fn tstar_density(p: &ColoredPattern, g: &ColoredHypergraph, limits: &Limits) -> Result<Rat> {
    if p.r != g.r {
        return Err(Error::ShapeMismatch(format!("pattern arity {} vs host {}", p.r, g.r)));
    }
    if p.edges.iter().any(|(_, c)| *c as usize >= g.k) {
        return Err(Error::InvalidColor(
            p.edges.iter().map(|(_, c)| *c).max().unwrap(),
            g.k,
        ));
    }
    let total = (g.n as u128).checked_pow(p.q as u32).unwrap_or(u128::MAX);
    limits.check(total)?;
    let mut hits: u64 = 0;
    let mut image = vec![0u32; p.r];
    for_each_tuple(g.n, p.q, |map| {
        for (e, c) in &p.edges {
            for (slot, &v) in image.iter_mut().zip(e.iter()) {
                *slot = map[v as usize] as u32;
            }
            image.sort_unstable();
            if image.windows(2).any(|w| w[0] == w[1]) {
                return;
            }
            if g.colors[colex_rank(&image) as usize] != *c {
                return;
            }
        }
        hits += 1;
    });
    Ok(rat_u(hits) / rat_pow_u(g.n as u64, p.q as u32))
}

fn rat_pow_u(base: u64, e: u32) -> Rat {
    crate::rat::rat_pow(&rat_u(base), e)
}

/// Product density of an uncolored pattern in a simple host: every pattern
/// edge must land on a present edge.
pub fn tstar_density_simple(h: &Hypergraph, g: &Hypergraph, limits: &Limits) -> Result<Rat> {
    let edges: Vec<(Vec<u32>, u32)> = h.edges().map(|e| (e.clone(), 1)).collect();
    let p = ColoredPattern::new(h.r, h.n, edges)?;
    tstar_density(&p, &g.to_colored(), limits)
}

// ---- text format ----------------------------------------------------------

/// Canonical text form: header `r n m k`, then one line `v_1 .. v_r c` per
/// slot with color != 0, in colex slot order. Byte-stable: equal graphs
/// serialize identically.
pub fn write_colored(g: &ColoredHypergraph) -> String {
    let mut lines: Vec<(u64, &[u32], u32)> = Vec::new();
    let subs = subsets(g.n, g.r);
    for (rank, s) in subs.iter().enumerate() {
        let c = g.colors[rank];
        if c != 0 {
            lines.push((rank as u64, s, c));
        }
    }
    let mut out = String::new();
    writeln!(out, "{} {} {} {}", g.r, g.n, lines.len(), g.k).unwrap();
    for (_, s, c) in lines {
        for v in s {
            write!(out, "{} ", v).unwrap();
        }
        writeln!(out, "{}", c).unwrap();
    }
    out
}

pub fn write_hypergraph(g: &Hypergraph) -> String {
    write_colored(&g.to_colored())
}

/// Parses the text form. Errors carry 1-based line numbers.
pub fn read_colored(text: &str) -> Result<ColoredHypergraph> {
    let mut lines = text.lines().enumerate();
    let (_, header) = lines
        .next()
        .ok_or_else(|| Error::parse(1, "empty input"))?;
    let head: Vec<usize> = header
        .split_whitespace()
        .map(|t| t.parse::<usize>().map_err(|_| Error::parse(1, format!("bad header token {t:?}"))))
        .collect::<Result<_>>()?;
    if head.len() != 4 {
        return Err(Error::parse(1, "header must be `r n m k`"));
    }
    let (r, n, m, k) = (head[0], head[1], head[2], head[3]);
    if r < 1 || k < 1 {
        return Err(Error::parse(1, "r and k must be positive"));
    }
    let mut g = ColoredHypergraph::monochromatic(r, n, k, 0)
        .map_err(|e| Error::parse(1, e.to_string()))?;
    let mut seen = 0usize;
    for (idx, line) in lines {
        let lineno = idx + 1;
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let toks: Vec<&str> = line.split_whitespace().collect();
        if toks.len() != r + 1 {
            return Err(Error::parse(lineno, format!("expected {} tokens", r + 1)));
        }
        let mut edge = Vec::with_capacity(r);
        for t in &toks[..r] {
            edge.push(
                t.parse::<u32>().map_err(|_| Error::parse(lineno, format!("bad vertex {t:?}")))?,
            );
        }
        if edge.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::parse(lineno, "vertices must be strictly increasing (loops forbidden)"));
        }
        let color: u32 = toks[r]
            .parse()
            .map_err(|_| Error::parse(lineno, format!("bad color {:?}", toks[r])))?;
        if color == 0 {
            return Err(Error::parse(lineno, "color 0 lines are implicit and must be omitted"));
        }
        g.set_color(&edge, color).map_err(|e| Error::parse(lineno, e.to_string()))?;
        seen += 1;
    }
    if seen != m {
        return Err(Error::parse(1, format!("header claims {m} lines, found {seen}")));
    }
    Ok(g)
}

pub fn read_hypergraph(text: &str) -> Result<Hypergraph> {
    let c = read_colored(text)?;
    if c.k != 2 {
        return Err(Error::parse(1, format!("expected 2 colors for a simple hypergraph, found {}", c.k)));
    }
    Ok(c.color_class(1))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rat::{rat, rone};
    use crate::rngutil::trial_rng;

    fn fano() -> Hypergraph {
        Hypergraph::from_edges(
            3,
            7,
            [
                [0u32, 1, 2],
                [0, 3, 4],
                [0, 5, 6],
                [1, 3, 5],
                [1, 4, 6],
                [2, 3, 6],
                [2, 4, 5],
            ],
        )
        .unwrap()
    }

    #[test]
    fn complete_graph_edges() {
        let g = Hypergraph::complete(2, 5);
        assert_eq!(g.edge_count(), 10);
        assert!(g.has_edge(&[4, 0]));
    }

    #[test]
    fn doubled_edge_shape() {
        let g = Hypergraph::doubled_edge(2);
        // the 4-cycle 0-2-1-3
        assert_eq!(g.edge_count(), 4);
        assert!(g.has_edge(&[0, 2]) && g.has_edge(&[0, 3]) && g.has_edge(&[1, 2]) && g.has_edge(&[1, 3]));
        assert!(!g.has_edge(&[0, 1]));
        let g3 = Hypergraph::doubled_edge(3);
        assert_eq!(g3.edge_count(), 8);
        assert_eq!(g3.n(), 6);
    }

    #[test]
    fn induced_on_fano_restriction() {
        let g = fano();
        let sub = g.induced(&[0, 1, 2, 3]).unwrap();
        // only {0,1,2} survives among the four chosen points
        assert_eq!(sub.edge_count(), 1);
        assert!(sub.has_edge(&[0, 1, 2]));
    }

    #[test]
    fn induced_rejects_bad_samples() {
        let g = fano();
        assert!(g.induced(&[0, 0, 1, 2]).is_err());
        assert!(g.induced(&[0, 1]).is_err());
        assert!(g.induced(&[0, 1, 99]).is_err());
    }

    #[test]
    fn induced_preserves_order_not_values() {
        let g = Hypergraph::from_edges(2, 4, [[0u32, 1]]).unwrap();
        let sub = g.induced(&[1, 3]).unwrap();
        assert_eq!(sub.edge_count(), 0);
        let sub2 = g.induced(&[0, 1, 2]).unwrap();
        assert!(sub2.has_edge(&[0, 1]));
    }

    #[test]
    fn discolor_inverts_refinement() {
        let base = fano().to_colored();
        let sub: Vec<u32> = (0..base.slot_count() as u32).map(|i| i % 3).collect();
        let col = Coloring::refine(&base, 3, &sub).unwrap();
        assert_eq!(discolor(col.refined(), 3), base);
        assert_eq!(col.refined().k(), 6);
    }

    #[test]
    fn enumerate_colorings_counts_and_guard() {
        let base = ColoredHypergraph::monochromatic(2, 3, 2, 0).unwrap();
        let limits = Limits::default();
        let all: Vec<_> = enumerate_colorings(&base, 2, &limits).unwrap().collect();
        assert_eq!(all.len(), 8);
        // every refinement discolors back to base
        for c in &all {
            assert_eq!(discolor(c.refined(), 2), base);
        }
        let tight = Limits { max_enumeration: 7, ..limits };
        assert!(matches!(
            enumerate_colorings(&base, 2, &tight),
            Err(Error::EnumerationTooLarge { needed: 8, .. })
        ));
    }

    #[test]
    fn induced_density_single_edge() {
        // G = one edge on 4 vertices; F = edge on 2 vertices.
        let g = Hypergraph::from_edges(2, 4, [[0u32, 1]]).unwrap().to_colored();
        let f = Hypergraph::complete(2, 2).to_colored();
        let d = induced_density(&f, &g, &Limits::default()).unwrap();
        assert_eq!(d, rat(1, 6));
    }

    #[test]
    fn induced_density_sums_to_one() {
        // over all patterns on q vertices the exact densities add to 1
        let g = fano().to_colored();
        let limits = Limits::default();
        let mut total = rzero();
        let base = ColoredHypergraph::monochromatic(3, 4, 1, 0).unwrap();
        for c in enumerate_colorings(&base, 2, &limits).unwrap() {
            let f = ColoredHypergraph::from_colors(3, 4, 2, c.refined().colors().to_vec()).unwrap();
            total += induced_density(&f, &g, &limits).unwrap();
        }
        assert_eq!(total, rone());
    }

    #[test]
    fn sample_distribution_matches_density_at_q_r() {
        let g = Hypergraph::from_edges(2, 5, [[0u32, 1], [1, 2], [3, 4]]).unwrap().to_colored();
        let limits = Limits::default();
        let dist = sample_distribution(&g, 2, &limits).unwrap();
        let mut total = rzero();
        for (f, p) in &dist {
            assert_eq!(*p, induced_density(f, &g, &limits).unwrap());
            total += p;
        }
        assert_eq!(total, rone());
        // two atoms: edge present (3/10), absent (7/10)
        assert_eq!(dist.len(), 2);
        let edge = Hypergraph::complete(2, 2).to_colored();
        assert_eq!(dist[&edge], rat(3, 10));
    }

    #[test]
    fn sample_q_deterministic_per_seed() {
        let g = fano().to_colored();
        let (a, va) = g.sample_q(4, &mut trial_rng(9, 0)).unwrap();
        let (b, vb) = g.sample_q(4, &mut trial_rng(9, 0)).unwrap();
        assert_eq!(a, b);
        assert_eq!(va, vb);
        assert!(vb.windows(2).all(|w| w[0] < w[1]));
    }

    #[test]
    fn mc_density_converges() {
        let g = Hypergraph::from_edges(2, 4, [[0u32, 1]]).unwrap().to_colored();
        let f = Hypergraph::complete(2, 2).to_colored();
        let (p, se) = induced_density_mc(&f, &g, 4000, &mut trial_rng(3, 0)).unwrap();
        assert!((p - 1.0 / 6.0).abs() < 4.0 * se + 1e-9, "p={p} se={se}");
    }

    #[test]
    fn tstar_single_edge_complete_host() {
        // single-edge pattern in the complete r-graph: (n)_r / n^r
        for (r, n) in [(2usize, 5usize), (3, 6)] {
            let h = Hypergraph::complete(r, r);
            let g = Hypergraph::complete(r, n);
            let d = tstar_density_simple(&h, &g, &Limits::default()).unwrap();
            let expect = rat_u(crate::comb::falling(n, r)) / rat_pow_u(n as u64, r as u32);
            assert_eq!(d, expect);
        }
    }

    #[test]
    fn tstar_empty_pattern_is_one() {
        let h = Hypergraph::new(2, 3);
        let g = fano();
        let g2 = Hypergraph::from_edges(2, 5, [[0u32, 1]]).unwrap();
        let _ = g;
        assert_eq!(tstar_density_simple(&h, &g2, &Limits::default()).unwrap(), rone());
    }

    #[test]
    fn tstar_rejects_nonlinear_patterns() {
        // two triples sharing two vertices
        let p = ColoredPattern::new(3, 4, vec![(vec![0, 1, 2], 1), (vec![0, 1, 3], 1)]);
        assert!(p.is_err());
    }

    #[test]
    fn tstar_invariant_under_relabeling() {
        let g = fano().to_colored();
        let p = ColoredPattern::new(3, 4, vec![(vec![0, 1, 2], 1), (vec![0, 1, 3], 0)]);
        // {0,1,2} and {0,1,3} share two vertices: rejected
        assert!(p.is_err());
        let p = ColoredPattern::new(3, 5, vec![(vec![0, 1, 2], 1), (vec![2, 3, 4], 1)]).unwrap();
        let limits = Limits::default();
        let d = tstar_density(&p, &g, &limits).unwrap();
        let perm: Vec<u32> = vec![3, 0, 6, 2, 5, 1, 4];
        let d2 = tstar_density(&p, &g.relabel(&perm), &limits).unwrap();
        assert_eq!(d, d2);
    }

    #[test]
    fn text_round_trip_and_stability() {
        let g = fano().to_colored();
        let text = write_colored(&g);
        let back = read_colored(&text).unwrap();
        assert_eq!(back, g);
        assert_eq!(write_colored(&back), text);
        assert!(text.starts_with("3 7 7 2\n"));
    }

    #[test]
    fn text_errors_carry_line_numbers() {
        let bad = "2 4 1 2\n1 0 1\n";
        match read_colored(bad) {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 2),
            other => panic!("expected parse error, got {other:?}"),
        }
        let badcount = "2 4 2 2\n0 1 1\n";
        assert!(matches!(read_colored(badcount), Err(Error::Parse { line: 1, .. })));
    }
}
