//! Edit distance from a graph to a property, exact or sampled.

use crate::comb::{binomial, subsets};
use crate::graphs::Hypergraph;
use crate::rat::{rat_u, Rat};
use crate::rngutil::trial_rng;
use crate::{Error, Limits, Result};
use num_traits::ToPrimitive;
use rayon::prelude::*;

#[derive(Debug, Clone, Copy)]
pub enum EditMode {
    /// Breadth-first search over edit radii `0..=radius_cap`.
    Exact { radius_cap: usize },
    /// Verdict for `d1(G, P) < c` from induced samples: each sample is
    /// checked for an edit set below the scaled budget, majority decides.
    Tester { q: usize, trials: usize, seed: u64 },
}

#[derive(Debug)]
pub enum EditResult {
    /// Minimal edits and the normalized distance `edits / n^r`.
    Exact { edits: usize, distance: Rat },
    /// No edit set within the radius cap reaches the property; the true
    /// distance is at least `lower`.
    Bracket { searched_radius: usize, lower: Rat },
    Tester(EditTesterReport),
}

#[derive(Debug)]
pub struct EditTesterReport {
    pub q: usize,
    pub trials: usize,
    /// Per-sample edit budget: the largest count below `c * q^r`.
    pub allowed_edits: usize,
    /// Trials whose sample had an edit set within the budget.
    pub near: usize,
    pub near_rate: f64,
    /// Majority verdict for `d1(G, P) < c`.
    pub verdict: bool,
}

/// Smallest number of slot toggles reaching the property, capped. The
/// candidate count is guarded before each radius.
fn min_edits<P: Fn(&Hypergraph) -> bool>(
    g: &Hypergraph,
    property: &P,
    cap: usize,
    limits: &Limits,
) -> Result<Option<usize>> {
    if property(g) {
        return Ok(Some(0));
    }
    let slots = subsets(g.n(), g.r());
    let mut work: u128 = 0;
    for d in 1..=cap {
        work = work.saturating_add(binomial(slots.len(), d) as u128);
        limits.check(work)?;
        // colex walk over d-subsets of slot indices with early exit
        if d > slots.len() {
            break;
        }
        let mut pick: Vec<usize> = (0..d).collect();
        loop {
            let mut h = g.clone();
            for &i in &pick {
                let e = &slots[i];
                if !h.remove_edge(e) {
                    h.add_edge(e)?;
                }
            }
            if property(&h) {
                return Ok(Some(d));
            }
            let mut i = 0;
            while i + 1 < d && pick[i] + 1 == pick[i + 1] {
                i += 1;
            }
            pick[i] += 1;
            if pick[i] >= slots.len() {
                break;
            }
            for j in 0..i {
                pick[j] = j;
            }
            if *pick.last().unwrap() >= slots.len() {
                break;
            }
        }
    }
    Ok(None)
}

/// Normalized edit distance `|edits| / n^r` to a property, or a sampled
/// verdict for being within distance `c`.
pub fn edit_distance_to_property<P: Fn(&Hypergraph) -> bool + Sync>(
    g: &Hypergraph,
    property: P,
    c: &Rat,
    mode: EditMode,
    limits: &Limits,
) -> Result<EditResult> {
    let scale = |n: usize, r: usize| rat_u((n as u64).pow(r as u32));
    match mode {
        EditMode::Exact { radius_cap } => {
            match min_edits(g, &property, radius_cap, limits)? {
                Some(edits) => Ok(EditResult::Exact {
                    edits,
                    distance: rat_u(edits as u64) / scale(g.n(), g.r()),
                }),
                None => Ok(EditResult::Bracket {
                    searched_radius: radius_cap,
                    lower: rat_u(radius_cap as u64 + 1) / scale(g.n(), g.r()),
                }),
            }
        }
        EditMode::Tester { q, trials, seed } => {
            if q > g.n() {
                return Err(Error::InvalidSample(q, g.n()));
            }
            // strict budget: most edits with edits < c * q^r
            let budget = c * scale(q, g.r());
            let allowed = if budget.is_integer() {
                budget.to_integer().to_usize().and_then(|b| b.checked_sub(1))
            } else {
                budget.floor().to_integer().to_usize()
            }
            .ok_or_else(|| Error::RangeError(format!("edit budget {budget} unusable")))?;
            let colored = g.to_colored();
            let hits: Vec<bool> = (0..trials as u64)
                .into_par_iter()
                .map(|trial| {
                    let mut rng = trial_rng(seed, trial);
                    let (sub, _) = colored.sample_q(q, &mut rng)?;
                    let sample = sub.color_class(1);
                    Ok(min_edits(&sample, &property, allowed, limits)?.is_some())
                })
                .collect::<Result<_>>()?;
            let near = hits.iter().filter(|&&h| h).count();
            Ok(EditResult::Tester(EditTesterReport {
                q,
                trials,
                allowed_edits: allowed,
                near,
                near_rate: near as f64 / trials.max(1) as f64,
                verdict: 2 * near >= trials,
            }))
        }
    }
}

/// Triangle-freeness for 2-graphs; vacuously true at other arities.
pub fn triangle_free(g: &Hypergraph) -> bool {
    if g.r() != 2 {
        return true;
    }
    let n = g.n();
    let mut free = true;
    crate::comb::for_each_subset(n, 3, |t| {
        if g.has_edge(&[t[0], t[1]])
            && g.has_edge(&[t[0], t[2]])
            && g.has_edge(&[t[1], t[2]])
        {
            free = false;
        }
    });
    free
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rat::rat;

    #[test]
    fn member_has_distance_zero() {
        let g = Hypergraph::from_edges(2, 4, vec![vec![0, 1], vec![2, 3]]).unwrap();
        match edit_distance_to_property(
            &g,
            triangle_free,
            &rat(1, 10),
            EditMode::Exact { radius_cap: 2 },
            &Limits::default(),
        )
        .unwrap()
        {
            EditResult::Exact { edits, distance } => {
                assert_eq!(edits, 0);
                assert_eq!(distance, rat(0, 1));
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn k4_needs_two_edits_to_kill_all_triangles() {
        let g = Hypergraph::complete(2, 4);
        match edit_distance_to_property(
            &g,
            triangle_free,
            &rat(1, 10),
            EditMode::Exact { radius_cap: 3 },
            &Limits::default(),
        )
        .unwrap()
        {
            EditResult::Exact { edits, distance } => {
                assert_eq!(edits, 2);
                assert_eq!(distance, rat(2, 16));
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn edgeless_target_needs_every_edge_deleted() {
        let g = Hypergraph::from_edges(2, 4, vec![vec![0, 1], vec![1, 2], vec![2, 3]]).unwrap();
        match edit_distance_to_property(
            &g,
            |h: &Hypergraph| h.edge_count() == 0,
            &rat(1, 10),
            EditMode::Exact { radius_cap: 4 },
            &Limits::default(),
        )
        .unwrap()
        {
            EditResult::Exact { edits, distance } => {
                assert_eq!(edits, 3);
                assert_eq!(distance, rat(3, 16));
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn cap_below_distance_returns_bracket() {
        let g = Hypergraph::complete(2, 4);
        match edit_distance_to_property(
            &g,
            triangle_free,
            &rat(1, 10),
            EditMode::Exact { radius_cap: 1 },
            &Limits::default(),
        )
        .unwrap()
        {
            EditResult::Bracket { searched_radius, lower } => {
                assert_eq!(searched_radius, 1);
                assert_eq!(lower, rat(2, 16));
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn tester_separates_near_from_far() {
        // C5 is triangle-free; K8 is far from it
        let c5 = Hypergraph::from_edges(
            2,
            5,
            vec![vec![0, 1], vec![1, 2], vec![2, 3], vec![3, 4], vec![0, 4]],
        )
        .unwrap();
        let k8 = Hypergraph::complete(2, 8);
        let limits = Limits::default();
        let near = edit_distance_to_property(
            &c5,
            triangle_free,
            &rat(1, 10),
            EditMode::Tester { q: 5, trials: 15, seed: 2 },
            &limits,
        )
        .unwrap();
        let far = edit_distance_to_property(
            &k8,
            triangle_free,
            &rat(1, 10),
            EditMode::Tester { q: 5, trials: 15, seed: 2 },
            &limits,
        )
        .unwrap();
        match (near, far) {
            (EditResult::Tester(n), EditResult::Tester(f)) => {
                assert!(n.verdict, "near rate {}", n.near_rate);
                assert!(!f.verdict, "far rate {}", f.near_rate);
                assert_eq!(n.allowed_edits, 2);
            }
            other => panic!("unexpected {other:?}"),
        }
    }
}
