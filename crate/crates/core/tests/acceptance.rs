//! End-to-end acceptance runs: each test pins one advertised guarantee of
//! the crate at the scale it is expected to hold, with explicit wall-clock
//! budgets where speed is part of the contract. Every numeric claim is
//! checked either in exact rational arithmetic or against an oracle written
//! from the definition, never against the code under test.

use std::time::{Duration, Instant};

use rand::Rng;

use hypertest_core::comb::{binomial, for_each_subset};
use hypertest_core::energy::{
    density_tensor_of, ggse, gse_graph, gse_sampling_check, satisfies_tensor, EnergyMode,
    PartitionFamily, RealArray, TensorSearchMode,
};
use hypertest_core::graphs::{ColoredHypergraph, Hypergraph};
use hypertest_core::kernels::{random_colored_kernel, CellPartition, StepKernel};
use hypertest_core::ndtest::{
    coloring_transfer, nd_eval, tester, witness_by_name, EvalMode, TransferOptions,
};
use hypertest_core::norms::{
    boxplus_norm, cut_star_norm, cut_star_p_norm, sandwich_bounds, weak_regularity, NormMode,
    RegularityOptions,
};
use hypertest_core::rat::{rat, rat_to_text, rat_u, rone, rzero, to_f64, Rat};
use hypertest_core::rngutil::trial_rng;
use hypertest_core::sampling::{
    concentration_experiment, counting_lemma_check, graph_kernel_consistency, pi_combination,
    q_f_bound, q_linear_bound, q_tv_bound, t_reg_bound, Magnitude,
};
use hypertest_core::Limits;

fn lim() -> Limits {
    Limits::default()
}

/// [-1,1]-valued step kernel with denominator-bounded entries.
fn signed_kernel<R: Rng>(r: usize, t: usize, denom: u32, rng: &mut R) -> StepKernel {
    let base = random_colored_kernel(r, t, 2, denom, rng).component(0);
    let values = base.values().iter().map(|v| v + v - rone()).collect();
    StepKernel::new(r, base.weights().to_vec(), values).unwrap()
}

/// 200 kernels mixing arity, class count, and sign, all with sup norm <= 1.
fn norm_corpus() -> Vec<StepKernel> {
    let mut rng = trial_rng(41, 1);
    (0..200)
        .map(|i| {
            let r = 2 + (i % 2);
            let t = 1 + ((i / 2) % 4);
            if i % 3 == 0 {
                signed_kernel(r, t, 8, &mut rng)
            } else {
                random_colored_kernel(r, t, 2, 8, &mut rng).component(0)
            }
        })
        .collect()
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

/// Two-block graph: pairs across the split appear with probability `across`,
/// pairs inside a block with probability `within`.
fn planted_graph<R: Rng>(n: usize, across: f64, within: f64, rng: &mut R) -> Hypergraph {
    let half = n / 2;
    let mut edges = Vec::new();
    for_each_subset(n, 2, |e| {
        let crossing = (e[0] as usize) < half && (e[1] as usize) >= half;
        let p = if crossing { across } else { within };
        if rng.gen::<f64>() < p {
            edges.push(e.to_vec());
        }
    });
    Hypergraph::from_edges(2, n, edges).unwrap()
}

/// First-seen relabeling so random block labels form a valid partition.
fn densify(labels: Vec<usize>) -> Vec<usize> {
    let top = labels.iter().max().copied().unwrap_or(0);
    let mut map: Vec<Option<usize>> = vec![None; top + 1];
    let mut next = 0;
    labels
        .into_iter()
        .map(|l| {
            *map[l].get_or_insert_with(|| {
                let id = next;
                next += 1;
                id
            })
        })
        .collect()
}

// ---- 1: doubled-edge density sandwiches the cut norm ----------------------

#[test]
fn criterion_01_sandwich_bounds_hold_on_200_random_kernels() {
    let start = Instant::now();
    let limits = lim();
    for (i, w) in norm_corpus().iter().enumerate() {
        assert!(w.max_abs() <= rone(), "kernel {i} exceeds sup norm 1");
        let cut = cut_star_norm(w, NormMode::Exact, &limits).unwrap().value;
        let sb = sandwich_bounds(w, &limits).unwrap();
        let (lo, hi) = sb.contains(&cut);
        assert!(
            lo && hi,
            "kernel {i} (r={} t={}): lower={} cut={} upper~{}",
            w.r(),
            w.t(),
            rat_to_text(&sb.lower),
            rat_to_text(&cut),
            sb.upper_f64
        );
    }
    assert!(
        start.elapsed() < Duration::from_secs(120),
        "took {:?}, budget is 2 minutes",
        start.elapsed()
    );
}

// ---- 2: norm relaxation envelope and partition monotonicity ----------------

#[test]
fn criterion_02_boxplus_envelope_and_refinement_monotonicity() {
    let limits = lim();
    let mut rng = trial_rng(41, 2);
    for (i, w) in norm_corpus().iter().enumerate() {
        let cut = cut_star_norm(w, NormMode::Exact, &limits).unwrap().value;
        let boxp = boxplus_norm(w, NormMode::Exact, &limits).unwrap().value;
        assert!(
            boxp <= rat_u(1u64 << w.r()) * cut.clone() && cut <= boxp,
            "kernel {i}: boxplus={} cut={} r={}",
            rat_to_text(&boxp),
            rat_to_text(&cut),
            w.r()
        );

        let t = w.t();
        let coarse = densify((0..t).map(|_| rng.gen_range(0..2usize)).collect());
        let finer = densify(coarse.iter().map(|&b| b * 2 + rng.gen_range(0..2usize)).collect());
        let chain = [
            CellPartition::trivial(t),
            CellPartition::new(coarse).unwrap(),
            CellPartition::new(finer).unwrap(),
            CellPartition::discrete(t),
        ];
        let values: Vec<Rat> = chain
            .iter()
            .map(|qp| cut_star_p_norm(w, qp, NormMode::Exact, &limits).unwrap().value)
            .collect();
        assert_eq!(values[0], cut, "kernel {i}: trivial partition must recover the cut norm");
        assert!(
            values.windows(2).all(|v| v[0] <= v[1]),
            "kernel {i}: refinement chain not monotone: {:?}",
            values.iter().map(rat_to_text).collect::<Vec<_>>()
        );
    }
}

// ---- 3: sample-law total variation against cut distance --------------------

#[test]
fn criterion_03_counting_lemma_on_50_kernel_pairs() {
    let start = Instant::now();
    let limits = lim();
    let mut rng = trial_rng(43, 1);
    for i in 0..50 {
        let u = random_colored_kernel(2, 3, 2, 6, &mut rng);
        let w = random_colored_kernel(2, 3, 2, 6, &mut rng);
        let rep = counting_lemma_check(&u, &w, 3, &limits).unwrap();
        if i == 0 {
            // k^(q^r) q^r / (2 r!) with k = 2, q = 3, r = 2.
            assert_eq!(rep.factor, rat_u(1152), "factor={}", rat_to_text(&rep.factor));
        }
        assert!(
            rep.holds,
            "pair {i}: tv={} > bound={}",
            rat_to_text(&rep.tv),
            rat_to_text(&rep.bound)
        );
        assert!(
            rep.coupling_ok,
            "pair {i}: maximal coupling off by {}",
            rat_to_text(&rep.coupling_mismatch)
        );
    }
    assert!(
        start.elapsed() < Duration::from_secs(60),
        "took {:?}, budget is 1 minute",
        start.elapsed()
    );
}

// ---- 4: density concentration for the doubled edge -------------------------

#[test]
fn criterion_04_doubled_edge_density_concentrates_at_q500() {
    let start = Instant::now();
    let mut rng = trial_rng(44, 1);
    let u = random_colored_kernel(2, 3, 2, 8, &mut rng).component(0);
    let f = Hypergraph::doubled_edge(2);
    let rep = concentration_experiment(&f, &u, 500, 0.1, 2000, 4401).unwrap();
    let stated = 2.0 * (-0.1f64 * 0.1 * 500.0 / 32.0).exp();
    assert!((rep.bound - stated).abs() < 1e-12, "bound {} vs {}", rep.bound, stated);
    assert_eq!(rep.trials, 2000);
    assert!(
        !rep.violated,
        "empirical rate {} exceeds {} + 3se ({})",
        rep.empirical_rate, rep.bound, rep.standard_error
    );
    assert!(
        start.elapsed() < Duration::from_secs(120),
        "took {:?}, budget is 2 minutes",
        start.elapsed()
    );
}

// ---- 5: weak regularity decompositions -------------------------------------

#[test]
fn criterion_05_weak_regularity_certifies_50_random_kernels() {
    let limits = lim();
    let eps = rat(3, 10);
    let mut rng = trial_rng(45, 1);
    for i in 0..50 {
        let w = random_colored_kernel(2, 4, 2, 16, &mut rng);
        let reg =
            weak_regularity(&w, &RegularityOptions::exhaustive(eps.clone(), 4), &limits).unwrap();
        // ceil(4 k^2 / eps^2) with k = 2, eps = 3/10.
        assert_eq!(reg.cap, 178, "kernel {i}: iteration cap");
        assert!(
            reg.deviation <= eps && reg.deviation_exact,
            "kernel {i}: deviation={} exact={}",
            rat_to_text(&reg.deviation),
            reg.deviation_exact
        );
        assert!(reg.probes_tested > 0, "kernel {i}: no probes checked");
        assert!(
            reg.iterations <= reg.cap,
            "kernel {i}: {} iterations over cap {}",
            reg.iterations,
            reg.cap
        );
        assert!(
            reg.class_bound_ok,
            "kernel {i}: {} classes, log10(bound)~{}",
            reg.partition.block_count(),
            reg.class_bound_log10
        );
    }
}

// ---- 6: ground-state energies against brute force ---------------------------

/// All permutations of 0..r for r <= 3, for summing an array over the
/// orderings of an edge.
fn orderings(r: usize) -> Vec<Vec<usize>> {
    match r {
        2 => vec![vec![0, 1], vec![1, 0]],
        3 => vec![
            vec![0, 1, 2],
            vec![0, 2, 1],
            vec![1, 0, 2],
            vec![1, 2, 0],
            vec![2, 0, 1],
            vec![2, 1, 0],
        ],
        _ => panic!("only r = 2, 3 supported"),
    }
}

/// Integer-numerator array J with entries num[idx]/denom in [-1, 1],
/// symmetric in nothing (general arrays are allowed).
fn random_array<R: Rng>(r: usize, s: usize, denom: i64, rng: &mut R) -> (RealArray, Vec<i64>) {
    let len = s.pow(r as u32);
    let num: Vec<i64> = (0..len).map(|_| rng.gen_range(-denom..=denom)).collect();
    let entries = num.iter().map(|&v| rat(v, denom)).collect();
    (RealArray::new(r, s, entries).unwrap(), num)
}

/// Definition-level energy: max over all s^n class assignments of the sum,
/// over edges and orderings of each edge, of J at the assigned classes,
/// normalized by n^r. Integer arithmetic throughout, one division at the end.
fn brute_energy(g: &Hypergraph, num: &[i64], s: usize, denom: i64) -> Rat {
    let n = g.n();
    let r = g.r();
    let perms = orderings(r);
    let edges: Vec<Vec<usize>> =
        g.edges().map(|e| e.iter().map(|&v| v as usize).collect()).collect();
    let mut assign = vec![0usize; n];
    let mut best = i64::MIN;
    loop {
        let mut acc = 0i64;
        for e in &edges {
            for p in &perms {
                let mut idx = 0usize;
                for &slot in p {
                    idx = idx * s + assign[e[slot]];
                }
                acc += num[idx];
            }
        }
        best = best.max(acc);
        let mut j = 0;
        loop {
            if j == n {
                return rat(best, denom * (n as i64).pow(r as u32));
            }
            assign[j] += 1;
            if assign[j] < s {
                break;
            }
            assign[j] = 0;
            j += 1;
        }
    }
}

#[test]
fn criterion_06_energies_match_brute_force_on_100_instances() {
    let limits = lim();

    let k4 = gse_graph(&Hypergraph::complete(2, 4), &RealArray::maxcut(), EnergyMode::Exact, &limits)
        .unwrap();
    assert_eq!(k4.value, rat(1, 2), "maxcut energy of K4: {}", rat_to_text(&k4.value));

    let mut rng = trial_rng(46, 1);
    for i in 0..100 {
        let r = if i % 10 == 9 { 3 } else { 2 };
        let n = if r == 3 { 4 + (i % 4) } else { 4 + (i % 7) };
        let s = 2 + (i % 2);
        let g = random_graph(n, r, 0.5, &mut rng);
        let (j, num) = random_array(r, s, 8, &mut rng);
        let exact = gse_graph(&g, &j, EnergyMode::Exact, &limits).unwrap();
        assert!(exact.exact, "instance {i} did not resolve exactly");
        let oracle = brute_energy(&g, &num, s, 8);
        assert_eq!(
            exact.value,
            oracle,
            "instance {i} (r={r} n={n} s={s}): got {} want {}",
            rat_to_text(&exact.value),
            rat_to_text(&oracle)
        );
    }

    // Pairwise generalized energy with indicator arrays per color collapses
    // to the plain graph energy.
    let zero = RealArray::new(2, 2, vec![rzero(); 4]).unwrap();
    let maxcut = RealArray::maxcut();
    for i in 0..10 {
        let n = 3 + (i % 6);
        let g = random_graph(n, 2, 0.5, &mut rng);
        let h = ColoredHypergraph::from_hypergraph(&g);
        let gg = ggse(&h, &[zero.clone(), maxcut.clone()], EnergyMode::Exact, &limits).unwrap();
        let ge = gse_graph(&g, &maxcut, EnergyMode::Exact, &limits).unwrap();
        assert_eq!(
            gg.value,
            ge.value,
            "instance {i} (n={n}): generalized {} vs plain {}",
            rat_to_text(&gg.value),
            rat_to_text(&ge.value)
        );
    }
}

// ---- 7: sampled energies concentrate ----------------------------------------

#[test]
fn criterion_07_sampled_energy_deviation_rate_is_bounded() {
    let start = Instant::now();
    let limits = lim();
    let mut rng = trial_rng(47, 1);
    let u = random_colored_kernel(2, 3, 2, 8, &mut rng).component(0);
    let rep = gse_sampling_check(&u, &RealArray::maxcut(), 400, 0.25, 300, 4701, &limits).unwrap();
    let stated = 2.0 * (-0.25f64 * 0.25 * 400.0 / 32.0).exp();
    assert!((rep.bound - stated).abs() < 1e-12, "bound {} vs {}", rep.bound, stated);
    assert!(!rep.vacuous, "bound {} is vacuous", rep.bound);
    assert!(
        !rep.violated,
        "deviation rate {} exceeds {} + 3se ({})",
        rep.empirical_rate, rep.bound, rep.standard_error
    );
    assert!(
        start.elapsed() < Duration::from_secs(180),
        "took {:?}, budget is 3 minutes",
        start.elapsed()
    );
}

// ---- 8: nondeterministic maxcut, exact and sampled ---------------------------

/// Largest cut over all bipartitions, divided by the number of pair slots.
fn brute_maxcut_density(g: &Hypergraph) -> Rat {
    let n = g.n();
    let edges: Vec<(usize, usize)> =
        g.edges().map(|e| (e[0] as usize, e[1] as usize)).collect();
    let mut best = 0u64;
    for mask in 0u32..(1u32 << n) {
        let cross = edges
            .iter()
            .filter(|&&(u, v)| ((mask >> u) ^ (mask >> v)) & 1 == 1)
            .count() as u64;
        best = best.max(cross);
    }
    rat_u(best) / rat_u(binomial(n, 2))
}

#[test]
fn criterion_08_nd_maxcut_matches_brute_force_and_tester_succeeds() {
    let limits = lim();
    let param = witness_by_name("maxcut").unwrap();

    let mut rng = trial_rng(48, 1);
    for i in 0..14 {
        let n = 4 + (i % 7);
        let g = random_graph(n, 2, 0.5, &mut rng);
        let got = nd_eval(&param, &g, EvalMode::Exact, &limits).unwrap();
        assert!(got.exact, "instance {i} not exact");
        let want = brute_maxcut_density(&g);
        assert_eq!(
            got.value,
            want,
            "instance {i} (n={n}): got {} want {}",
            rat_to_text(&got.value),
            rat_to_text(&want)
        );
    }

    // Sampling tester on a 60-vertex two-block host. The host value is out of
    // exact reach, so the reference and the per-sample evaluations both come
    // from seeded local search; on this strongly clustered host the search
    // recovers the planted cut.
    let host = planted_graph(60, 0.9, 0.1, &mut trial_rng(48, 2));
    let reference =
        nd_eval(&param, &host, EvalMode::Search { restarts: 12, seed: 4801 }, &limits).unwrap();
    let rep = tester(
        &param,
        &host,
        25,
        0.2,
        200,
        4802,
        EvalMode::Search { restarts: 6, seed: 4803 },
        Some(reference.value.clone()),
        &limits,
    )
    .unwrap();
    assert!(
        rep.failure_rate < 0.2,
        "failure rate {} (= {}/{}) not below eps = 0.2",
        rep.failure_rate,
        rep.failures,
        rep.trials
    );
}

// ---- 9: coloring transfer at scale ------------------------------------------

#[test]
fn criterion_09_coloring_transfer_succeeds_on_200_vertex_host() {
    let start = Instant::now();
    let limits = lim();
    let host = planted_graph(200, 0.9, 0.1, &mut trial_rng(49, 1));

    let mut rng = trial_rng(49, 2);
    let mut verts: Vec<u32> = (0..200).collect();
    for i in 0..50 {
        let j = i + rng.gen_range(0..200 - i);
        verts.swap(i, j);
    }
    let mut sample = verts[..50].to_vec();
    sample.sort_unstable();

    let induced = host.induced(&sample).unwrap();
    let param = witness_by_name("maxcut").unwrap();
    let best =
        nd_eval(&param, &induced, EvalMode::Search { restarts: 8, seed: 4901 }, &limits).unwrap();

    let opts =
        TransferOptions { delta: rat(1, 4), seed: 4902, size_cap: 3, stage_budgets: None };
    let rep = coloring_transfer(&host, &sample, &best.coloring, &opts, &limits).unwrap();
    for stage in &rep.stages {
        assert!(
            stage.within_budget,
            "stage {} out of budget: value~{} bound~{}",
            stage.stage, stage.value, stage.bound
        );
    }
    assert!(rep.failed_stage.is_none(), "failed at stage {:?}", rep.failed_stage);
    assert!(
        rep.final_ok,
        "discrepancy ~{} exceeds budget ~{}",
        to_f64(&rep.discrepancy),
        rep.budget
    );
    assert!(
        start.elapsed() < Duration::from_secs(300),
        "took {:?}, budget is 5 minutes",
        start.elapsed()
    );
}

// ---- 10: density tensors round-trip ------------------------------------------

/// Random partition family. Wide levels with two classes get a sparse second
/// class so the exact search below stays within a small candidate pool; the
/// round trip being tested is the same either way.
fn planted_family<R: Rng>(n: usize, r: usize, rng: &mut R) -> PartitionFamily {
    let mut levels = Vec::new();
    let mut classes = Vec::new();
    for s in 1..r {
        let m = binomial(n, s) as usize;
        let c = 1 + rng.gen_range(0..2usize);
        let labels = if c == 2 && m > 12 {
            let mut l = vec![0usize; m];
            for _ in 0..3 {
                l[rng.gen_range(0..m)] = 1;
            }
            l
        } else {
            (0..m).map(|_| rng.gen_range(0..c)).collect()
        };
        levels.push(labels);
        classes.push(c);
    }
    PartitionFamily::new(n, r, levels, classes).unwrap()
}

#[test]
fn criterion_10_density_tensor_of_a_family_is_always_satisfiable() {
    let limits = lim();
    let mut rng = trial_rng(50, 1);
    for i in 0..100 {
        let r = if i % 3 == 2 { 3 } else { 2 };
        let n = if r == 3 { 4 + (i % 4) } else { 3 + (i % 5) };
        let g = random_graph(n, r, 0.5, &mut rng);
        let fam = planted_family(n, r, &mut rng);
        let psi = density_tensor_of(&g, &fam, &limits).unwrap();
        let found =
            satisfies_tensor(&g, &psi, &rzero(), TensorSearchMode::Exact, &limits).unwrap();
        assert!(
            found.is_some(),
            "instance {i} (r={r} n={n} classes={:?}): own tensor not satisfied at tol 0",
            psi.classes
        );
    }
}

// ---- 11: sample-size calculators ----------------------------------------------

fn tower_of(m: &Magnitude) -> (u32, f64) {
    match m {
        Magnitude::Exact(_) => panic!("expected a tower, got an exact value"),
        Magnitude::ExpTower { height, arg } => (*height, *arg),
    }
}

#[test]
fn criterion_11_bound_calculators_give_stated_values_and_shapes() {
    let pi = pi_combination(2, &rat(1, 10), 2, 2, 2).unwrap();
    assert_eq!(pi, rat(1, 10) / rat_u(8192), "pi = {}", rat_to_text(&pi));
    let pi_loose = pi_combination(2, &rat(1, 5), 2, 2, 2).unwrap();
    assert!(pi_loose > pi, "combination count not monotone in delta");

    for r in 1..=4usize {
        let (h, _) = tower_of(&q_f_bound(r, 100, 0.1, 1.0).unwrap());
        assert_eq!(h, 4 * (r as u32 - 1) + 1, "witness sample tower at r={r}");
        let (h, _) = tower_of(&q_tv_bound(r, 0.1, 3, 2, 2, 1.0).unwrap());
        assert_eq!(h, 4 * (r as u32 - 1), "coloring-law tower at r={r}");
    }
    let (h, _) = tower_of(&q_linear_bound(10, 1.0));
    assert_eq!(h, 3, "linear-witness tower");

    // Monotonicity in the accuracy parameters. Equal tower heights compare on
    // the top argument; digit counts overflow long before heights differ.
    let (ht, at) = tower_of(&q_f_bound(2, 10, 0.1, 1.0).unwrap());
    let (hl, al) = tower_of(&q_f_bound(2, 10, 0.2, 1.0).unwrap());
    assert!(hl == ht && al <= at, "witness bound not monotone in eps");
    let (ht, at) = tower_of(&q_tv_bound(2, 0.05, 3, 2, 2, 1.0).unwrap());
    let (hl, al) = tower_of(&q_tv_bound(2, 0.1, 3, 2, 2, 1.0).unwrap());
    assert!(hl == ht && al <= at, "coloring-law bound not monotone in delta");
    let tight = t_reg_bound(2, 2, &rat(1, 4), 2).unwrap();
    let loose = t_reg_bound(2, 2, &rat(1, 2), 2).unwrap();
    assert!(
        loose.cmp_magnitude(&tight) != std::cmp::Ordering::Greater,
        "regularity class bound not monotone in eps: {loose:?} vs {tight:?}"
    );
}

// ---- 12: graphs against their lift kernels -------------------------------------

#[test]
fn criterion_12_graph_and_lift_kernel_agree_on_small_samples() {
    let limits = lim();
    let mut hosts: Vec<ColoredHypergraph> = Vec::new();

    // Every 2-colored pair structure on up to 4 vertices.
    for n in 2..=4usize {
        let slots = binomial(n, 2) as usize;
        for mask in 0u32..(1u32 << slots) {
            let colors: Vec<u32> = (0..slots).map(|s| (mask >> s) & 1).collect();
            hosts.push(ColoredHypergraph::from_colors(2, n, 2, colors).unwrap());
        }
    }
    // Structured and random hosts up to 8 vertices.
    for n in 5..=8usize {
        hosts.push(Hypergraph::complete(2, n).to_colored());
        hosts.push(Hypergraph::new(2, n).to_colored());
        let star: Vec<Vec<u32>> = (1..n as u32).map(|v| vec![0, v]).collect();
        hosts.push(Hypergraph::from_edges(2, n, star).unwrap().to_colored());
        let cycle: Vec<Vec<u32>> = (0..n as u32)
            .map(|v| {
                let w = (v + 1) % n as u32;
                vec![v.min(w), v.max(w)]
            })
            .collect();
        hosts.push(Hypergraph::from_edges(2, n, cycle).unwrap().to_colored());
    }
    let mut rng = trial_rng(52, 1);
    for i in 0..12 {
        let n = 5 + (i % 4);
        hosts.push(random_graph(n, 2, 0.5, &mut rng).to_colored());
    }

    let mut runs = 0usize;
    for (i, g) in hosts.iter().enumerate() {
        for q in [2usize, 3] {
            if q > g.n() {
                continue;
            }
            let rep = graph_kernel_consistency(g, q, &limits).unwrap();
            assert!(
                rep.density_ok,
                "host {i} (n={}), q={q}: worst density gap {} above {:?}",
                g.n(),
                rat_to_text(&rep.max_gap),
                rep.density_bound.as_ref().map(rat_to_text)
            );
            assert!(
                rep.tv_ok,
                "host {i} (n={}), q={q}: tv {} above {}",
                g.n(),
                rat_to_text(&rep.tv),
                rat_to_text(&rep.tv_bound)
            );
            assert!(rep.patterns > 0);
            runs += 1;
        }
    }
    assert!(runs > 140, "only {runs} host/sample-size combinations ran");
}
