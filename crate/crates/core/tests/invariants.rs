//! Cross-module laws: identities that tie the exact evaluators, the search
//! heuristics, and the certified pipelines to each other. Module-local
//! behavior is covered by the inline unit tests; everything here spans at
//! least two layers.

use proptest::prelude::*;
use rand::Rng;

use hypertest_core::comb::{falling, for_each_subset, for_each_tuple};
use hypertest_core::graphs::{
    tstar_density, ColoredHypergraph, ColoredPattern, Coloring, Hypergraph,
};
use hypertest_core::kernels::{random_colored_kernel, StepKernel};
use hypertest_core::ndtest::{
    coloring_transfer, fo_property_check, nd_eval, tester, witness_by_name, EvalMode, FOCheckMode,
    FOFormula, FOMatrix, PredicateTable, TransferOptions,
};
use hypertest_core::norms::{cut_distance, cut_star_norm, NormMode};
use hypertest_core::rat::{rat, rat_abs, rat_to_text, rat_u, rone, rzero, Rat};
use hypertest_core::rngutil::trial_rng;
use hypertest_core::Limits;

fn lim() -> Limits {
    Limits::default()
}

fn random_graph<R: Rng>(n: usize, r: usize, p: f64, rng: &mut R) -> Hypergraph {
    let mut edges = Vec::new();
    for_each_subset(n, r, |s| {
        if rng.gen::<f64>() < p {
            edges.push(s.to_vec());
        }
    });
    Hypergraph::from_edges(r, n, edges).unwrap()
}

/// Two-block host; strong structure keeps the transfer's host-side
/// regularity decomposition small, which is all these tests need.
fn planted_graph<R: Rng>(n: usize, rng: &mut R) -> Hypergraph {
    let half = n / 2;
    let mut edges = Vec::new();
    for_each_subset(n, 2, |e| {
        let crossing = (e[0] as usize) < half && (e[1] as usize) >= half;
        let p = if crossing { 0.9 } else { 0.1 };
        if rng.gen::<f64>() < p {
            edges.push(e.to_vec());
        }
    });
    Hypergraph::from_edges(2, n, edges).unwrap()
}

// ---- nondeterministic evaluation -------------------------------------------

/// The exact maximum dominates the witness value of every refinement,
/// including inconsistent ones (which score low, not error).
#[test]
fn nd_value_dominates_every_refinement() {
    let limits = lim();
    let param = witness_by_name("maxcut").unwrap();
    let mut rng = trial_rng(61, 1);
    for i in 0..8 {
        let n = 4 + (i % 5);
        let g = random_graph(n, 2, 0.5, &mut rng);
        let exact = nd_eval(&param, &g, EvalMode::Exact, &limits).unwrap();
        let base = ColoredHypergraph::from_hypergraph(&g);
        for _ in 0..25 {
            let sub: Vec<u32> =
                (0..base.slot_count()).map(|_| rng.gen_range(0..2)).collect();
            let coloring = Coloring::refine(&base, param.k_sub(), &sub).unwrap();
            let value = param.witness().eval(coloring.refined(), &limits).unwrap();
            assert!(
                value <= exact.value,
                "refinement of instance {i} scores {} above the maximum {}",
                rat_to_text(&value),
                rat_to_text(&exact.value)
            );
        }
        // the returned argmax coloring reproduces the returned value
        let replay = param.witness().eval(exact.coloring.refined(), &limits).unwrap();
        assert_eq!(replay, exact.value, "instance {i}: argmax coloring does not replay");
    }
}

#[test]
fn nd_value_is_invariant_under_vertex_relabeling() {
    let limits = lim();
    let param = witness_by_name("maxcut").unwrap();
    let mut rng = trial_rng(61, 2);
    for i in 0..8 {
        let n = 5 + (i % 4);
        let g = random_graph(n, 2, 0.5, &mut rng);
        let mut perm: Vec<u32> = (0..n as u32).collect();
        for j in 0..n {
            let k = j + rng.gen_range(0..n - j);
            perm.swap(j, k);
        }
        let relabeled = g.to_colored().relabel(&perm).color_class(1);
        let a = nd_eval(&param, &g, EvalMode::Exact, &limits).unwrap();
        let b = nd_eval(&param, &relabeled, EvalMode::Exact, &limits).unwrap();
        assert_eq!(
            a.value,
            b.value,
            "instance {i}: {} vs {} after relabeling",
            rat_to_text(&a.value),
            rat_to_text(&b.value)
        );
    }
}

/// Sampling the whole graph leaves no room for estimation error, with or
/// without a caller-supplied reference.
#[test]
fn tester_with_full_sample_never_fails() {
    let limits = lim();
    let param = witness_by_name("maxcut").unwrap();
    let g = random_graph(8, 2, 0.5, &mut trial_rng(61, 3));
    let exact = nd_eval(&param, &g, EvalMode::Exact, &limits).unwrap();
    for reference in [None, Some(exact.value.clone())] {
        let rep = tester(&param, &g, 8, 0.1, 30, 613, EvalMode::Exact, reference, &limits)
            .unwrap();
        assert_eq!(rep.failures, 0, "rate {}", rep.failure_rate);
    }
}

// ---- coloring transfer -------------------------------------------------------

#[test]
fn transfer_budget_is_exactly_the_stage_sum() {
    let limits = lim();
    let host = planted_graph(12, &mut trial_rng(62, 1));
    let sample: Vec<u32> = vec![1, 3, 5, 7, 9, 11];
    let induced = host.induced(&sample).unwrap();
    let param = witness_by_name("maxcut").unwrap();
    let best = nd_eval(&param, &induced, EvalMode::Exact, &limits).unwrap();
    let opts = TransferOptions { delta: rat(1, 4), seed: 621, size_cap: 3, stage_budgets: None };
    let rep = coloring_transfer(&host, &sample, &best.coloring, &opts, &limits).unwrap();

    let stage_sum: f64 = rep.stages.iter().map(|s| s.bound).sum();
    assert_eq!(rep.budget, stage_sum, "budget must be the in-order sum of stage bounds");
    for stage in &rep.stages {
        assert!(stage.bound >= 0.0 && stage.value >= 0.0, "stage {}", stage.stage);
    }

    // Per-stage caps compare against the raw stage values: infinite caps
    // always pass, zero caps fail exactly the stages with positive value.
    let n_stages = rep.stages.len();
    let loose = TransferOptions {
        stage_budgets: Some(vec![f64::INFINITY; n_stages]),
        ..opts.clone()
    };
    let rep_loose = coloring_transfer(&host, &sample, &best.coloring, &loose, &limits).unwrap();
    assert!(rep_loose.failed_stage.is_none());

    let tight = TransferOptions { stage_budgets: Some(vec![0.0; n_stages]), ..opts };
    let rep_tight = coloring_transfer(&host, &sample, &best.coloring, &tight, &limits).unwrap();
    for (a, b) in rep.stages.iter().zip(rep_tight.stages.iter()) {
        assert_eq!(b.within_budget, a.value <= 0.0, "stage {}", a.stage);
    }
}

#[test]
fn transfer_of_a_full_sample_is_the_identity() {
    let limits = lim();
    let host = random_graph(10, 2, 0.5, &mut trial_rng(62, 2));
    let all: Vec<u32> = (0..10).collect();
    let param = witness_by_name("maxcut").unwrap();
    let best = nd_eval(&param, &host, EvalMode::Exact, &limits).unwrap();
    let opts = TransferOptions { delta: rat(1, 4), seed: 622, size_cap: 3, stage_budgets: None };
    let rep = coloring_transfer(&host, &all, &best.coloring, &opts, &limits).unwrap();
    assert!(rep.identity_fast_path);
    assert_eq!(rep.budget, 0.0);
    assert_eq!(rep.discrepancy, rzero());
    assert!(rep.final_ok && rep.failed_stage.is_none());
    assert_eq!(rep.ghat.refined().colors(), best.coloring.refined().colors());
}

// ---- kernel distances ----------------------------------------------------------

#[test]
fn cut_distance_behaves_like_a_metric() {
    let limits = lim();
    let mut rng = trial_rng(63, 1);
    for i in 0..6 {
        let t = 2 + (i % 2);
        let u = random_colored_kernel(2, t, 2, 6, &mut rng);
        let v = random_colored_kernel(2, t, 2, 6, &mut rng);
        let w = random_colored_kernel(2, t, 2, 6, &mut rng);
        let uu = cut_distance(&u, &u, None, NormMode::Exact, &limits).unwrap();
        assert_eq!(uu, rzero(), "pair {i}: self distance {}", rat_to_text(&uu));
        let uv = cut_distance(&u, &v, None, NormMode::Exact, &limits).unwrap();
        let vu = cut_distance(&v, &u, None, NormMode::Exact, &limits).unwrap();
        assert_eq!(uv, vu, "pair {i}: asymmetric");
        let vw = cut_distance(&v, &w, None, NormMode::Exact, &limits).unwrap();
        let uw = cut_distance(&u, &w, None, NormMode::Exact, &limits).unwrap();
        assert!(
            uw <= uv.clone() + vw.clone(),
            "triple {i}: d(u,w)={} d(u,v)={} d(v,w)={}",
            rat_to_text(&uw),
            rat_to_text(&uv),
            rat_to_text(&vw)
        );
    }
}

// ---- densities -------------------------------------------------------------------

/// The single-edge pattern densities over all colors add up to the injective
/// map mass, whatever the coloring.
#[test]
fn single_edge_densities_partition_the_injective_mass() {
    let limits = lim();
    let mut rng = trial_rng(64, 1);
    for i in 0..10 {
        let r = 2 + (i % 2);
        let n = r + 2 + (i % 4);
        let k = 2 + (i % 2);
        let slots = hypertest_core::comb::binomial(n, r) as usize;
        let colors: Vec<u32> = (0..slots).map(|_| rng.gen_range(0..k as u32)).collect();
        let g = ColoredHypergraph::from_colors(r, n, k, colors).unwrap();
        let mut total = rzero();
        for c in 0..k as u32 {
            let p = ColoredPattern::new(r, r, vec![((0..r as u32).collect(), c)]).unwrap();
            total += tstar_density(&p, &g, &limits).unwrap();
        }
        let want = rat_u(falling(n, r))
            / hypertest_core::rat::rat_pow(&rat_u(n as u64), r as u32);
        assert_eq!(total, want, "instance {i} (r={r} n={n} k={k})");
    }
}

// ---- first-order checks --------------------------------------------------------

/// Truth under a fixed relation implies truth under the nondeterministic
/// reading, which maximizes over relations.
#[test]
fn fixed_relation_truth_implies_nd_truth() {
    let limits = lim();
    let formula = FOFormula {
        exists: 1,
        forall: 1,
        predicate_arities: vec![1],
        matrix: FOMatrix::And(vec![
            FOMatrix::Pred(0, vec![0]),
            FOMatrix::Or(vec![
                FOMatrix::Eq(0, 1),
                FOMatrix::Not(Box::new(FOMatrix::Pred(0, vec![1]))),
            ]),
        ]),
    };
    let mut rng = trial_rng(65, 1);
    for i in 0..12 {
        let n = 3 + (i % 3);
        let g = random_graph(n, 2, 0.5, &mut rng);
        let tuples: Vec<Vec<u32>> =
            (0..n as u32).filter(|_| rng.gen::<bool>()).map(|v| vec![v]).collect();
        let table = PredicateTable::new(1, tuples).unwrap();
        let fixed = fo_property_check(
            &g,
            &[table],
            &formula,
            FOCheckMode::FixedRelations,
            &limits,
        )
        .unwrap();
        if fixed.value {
            let nd =
                fo_property_check(&g, &[], &formula, FOCheckMode::ND, &limits).unwrap();
            assert!(nd.value, "instance {i}: fixed-table truth without any witnessing table");
        }
    }
}

// ---- property-based checks --------------------------------------------------------

/// [-1,1]-valued kernel from a seed, plus its exact mean.
fn seeded_kernel(seed: u64, t: usize) -> (StepKernel, Rat) {
    let mut rng = trial_rng(seed, 9);
    let base = random_colored_kernel(2, t, 2, 4, &mut rng).component(0);
    let values: Vec<Rat> = base.values().iter().map(|v| v + v - rone()).collect();
    let w = StepKernel::new(2, base.weights().to_vec(), values).unwrap();
    let mut mean = rzero();
    for_each_tuple(t, 2, |cell| {
        let mut mass = rone();
        for &c in cell {
            mass *= w.weights()[c].clone();
        }
        mean += mass * w.values()[cell[0] * t + cell[1]].clone();
    });
    (w, mean)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    /// The cut norm never exceeds the sup norm, never drops below the plain
    /// mean, and ignores global sign.
    #[test]
    fn cut_norm_envelope(seed in any::<u64>(), t in 1usize..=3) {
        let limits = lim();
        let (w, mean) = seeded_kernel(seed, t);
        let cut = cut_star_norm(&w, NormMode::Exact, &limits).unwrap().value;
        prop_assert!(cut <= w.max_abs());
        prop_assert!(cut >= rat_abs(&mean));
        let negated = StepKernel::new(
            2,
            w.weights().to_vec(),
            w.values().iter().map(|v| -v.clone()).collect(),
        ).unwrap();
        let cut_neg = cut_star_norm(&negated, NormMode::Exact, &limits).unwrap().value;
        prop_assert_eq!(cut, cut_neg);
    }

    /// Heuristic ascent never overshoots the exact norm.
    #[test]
    fn ascent_is_dominated_by_exact(seed in any::<u64>(), t in 1usize..=3) {
        let limits = lim();
        let (w, _) = seeded_kernel(seed, t);
        let exact = cut_star_norm(&w, NormMode::Exact, &limits).unwrap();
        let ascent = cut_star_norm(
            &w,
            NormMode::Ascent { restarts: 3, seed },
            &limits,
        ).unwrap();
        prop_assert!(ascent.value <= exact.value);
    }

    /// Taking an induced subgraph on all vertices changes nothing.
    #[test]
    fn induced_on_all_vertices_is_identity(seed in any::<u64>(), n in 2usize..=7) {
        let g = random_graph(n, 2, 0.5, &mut trial_rng(seed, 11));
        let all: Vec<u32> = (0..n as u32).collect();
        let h = g.induced(&all).unwrap();
        prop_assert_eq!(
            hypertest_core::graphs::write_hypergraph(&h),
            hypertest_core::graphs::write_hypergraph(&g)
        );
    }
}
