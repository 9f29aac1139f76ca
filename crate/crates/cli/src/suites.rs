//! The twelve experiment suites behind `hypertest run`. Each suite reads
//! its parameters from the section named after it, runs at desk scale by
//! default, and returns one row per certified check.

use std::collections::BTreeMap;
use std::fs;
use std::path::PathBuf;

use num_traits::Zero;
use rand::Rng;

use hypertest_core::energy::{
    density_tensor_of, ggse, gse_graph, satisfies_tensor, EnergyMode, PartitionFamily, RealArray,
    TensorSearchMode,
};
use hypertest_core::graphs::{read_hypergraph, ColoredHypergraph, Hypergraph};
use hypertest_core::kernels::{
    random_colored_kernel, read_colored_kernel, read_step_kernel, CellPartition, StepKernel,
};
use hypertest_core::ndtest::{
    coloring_transfer, edit_distance_to_property, fo_property_check, nd_eval, tester,
    triangle_free, EditMode, EditResult, EvalMode, FOCheckMode, FOFormula, FOMatrix,
    PredicateTable, TransferOptions,
};
use hypertest_core::norms::{
    boxplus_norm, cut_star_norm, cut_star_p_norm, sandwich_bounds, weak_regularity, NormMode,
    RegularityOptions,
};
use hypertest_core::rat::{rat, rat_to_text, rat_u, rzero, to_f64};
use hypertest_core::rngutil::trial_rng;
use hypertest_core::sampling::{
    concentration_experiment, counting_lemma_check, pi_combination, q_f_bound, q_linear_bound,
    q_tv_bound, t_reg_bound, Magnitude,
};
use hypertest_core::Limits;

use crate::config::Config;
use crate::gen;
use crate::report::{check, Check};
use crate::CliError;

#[derive(Debug, Default)]
pub struct SuiteOutcome {
    pub checks: Vec<Check>,
    pub params: BTreeMap<String, String>,
    /// Files the suite read; hashed into the report.
    pub inputs: Vec<PathBuf>,
}

impl SuiteOutcome {
    fn note(&mut self, key: &str, value: impl ToString) {
        self.params.insert(key.to_string(), value.to_string());
    }
}

pub fn run_suite(
    name: &str,
    cfg: &Config,
    seed: u64,
    limits: &Limits,
) -> Result<SuiteOutcome, CliError> {
    match name {
        "sandwich" => sandwich(cfg, seed, limits),
        "wreg" => wreg(cfg, seed, limits),
        "countlemma" => countlemma(cfg, seed, limits),
        "concentrate" => concentrate(cfg, seed),
        "gse" => gse(cfg, seed, limits),
        "ggse" => ggse_suite(cfg, seed, limits),
        "tensor" => tensor(cfg, seed, limits),
        "ndtest" => ndtest(cfg, seed, limits),
        "transfer" => transfer(cfg, seed, limits),
        "dist" => dist(cfg, seed, limits),
        "fo" => fo(cfg, limits),
        "bounds" => bounds(),
        other => Err(CliError::usage(format!(
            "unknown suite `{other}` (sandwich | wreg | countlemma | concentrate | gse | ggse | tensor | ndtest | transfer | dist | fo | bounds)"
        ))),
    }
}

fn core(err: hypertest_core::Error) -> CliError {
    CliError::from_core(err)
}

/// Dense relabeling so [`CellPartition::new`] accepts random block labels.
fn densify(labels: Vec<usize>) -> Vec<usize> {
    let mut map: BTreeMap<usize, usize> = BTreeMap::new();
    labels
        .into_iter()
        .map(|l| {
            let next = map.len();
            *map.entry(l).or_insert(next)
        })
        .collect()
}

// ---- sandwich -----------------------------------------------------------

fn sandwich(cfg: &Config, seed: u64, limits: &Limits) -> Result<SuiteOutcome, CliError> {
    let mut out = SuiteOutcome::default();
    let count = cfg.usize_or("sandwich", "count", 12)?;
    let denom = cfg.usize_or("sandwich", "denom", 8)? as u32;
    out.note("count", count);
    out.note("denom", denom);
    let mut rng = trial_rng(seed, 101);

    for i in 0..count {
        let r = 2 + (i % 2);
        let t = 1 + (i % 4);
        let w = if i % 2 == 0 {
            random_colored_kernel(r, t, 2, denom, &mut rng).component(0)
        } else {
            gen::random_signed_kernel(r, t, denom, &mut rng)
        };
        sandwich_rows(&format!("kernel-{i}"), &w, &mut out, &mut rng, limits)?;
    }

    for path in cfg.paths("sandwich", "inputs") {
        let text = fs::read_to_string(&path)
            .map_err(|e| CliError::usage(format!("cannot read {path}: {e}")))?;
        let name = PathBuf::from(&path)
            .file_stem()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_else(|| path.clone());
        // Plain kernels get one block of rows, colored kernels one per color.
        match read_step_kernel(&text) {
            Ok(w) => sandwich_rows(&name, &w, &mut out, &mut rng, limits)?,
            Err(_) => {
                let cw = read_colored_kernel(&text).map_err(core)?;
                for color in 0..cw.k() {
                    sandwich_rows(&format!("{name}/c{color}"), &cw.component(color), &mut out, &mut rng, limits)?;
                }
            }
        }
        out.inputs.push(PathBuf::from(path));
    }
    Ok(out)
}

fn sandwich_rows<R: Rng>(
    name: &str,
    w: &StepKernel,
    out: &mut SuiteOutcome,
    rng: &mut R,
    limits: &Limits,
) -> Result<(), CliError> {
    let cut = cut_star_norm(w, NormMode::Exact, limits).map_err(core)?.value;
    let sb = sandwich_bounds(w, limits).map_err(core)?;
    let (lo, hi) = sb.contains(&cut);
    out.checks.push(check(
        format!("{name}/sandwich"),
        lo && hi,
        format!(
            "lower={} cut={} upper~{:.6}",
            rat_to_text(&sb.lower),
            rat_to_text(&cut),
            sb.upper_f64
        ),
    ));

    let boxp = boxplus_norm(w, NormMode::Exact, limits).map_err(core)?.value;
    let scaled_ok = boxp.clone() <= rat_u(1u64 << w.r()) * cut.clone() && cut <= boxp;
    out.checks.push(check(
        format!("{name}/boxplus-envelope"),
        scaled_ok,
        format!("boxplus={} cut={}", rat_to_text(&boxp), rat_to_text(&cut)),
    ));

    let t = w.t();
    let coarse = densify((0..t).map(|_| rng.gen_range(0..2usize)).collect());
    let finer = densify(coarse.iter().map(|&b| b * 2 + rng.gen_range(0..2usize)).collect());
    let chain = [
        CellPartition::trivial(t),
        CellPartition::new(coarse).map_err(core)?,
        CellPartition::new(finer).map_err(core)?,
        CellPartition::discrete(t),
    ];
    let mut values = Vec::new();
    for qp in &chain {
        values.push(cut_star_p_norm(w, qp, NormMode::Exact, limits).map_err(core)?.value);
    }
    let monotone = values.windows(2).all(|v| v[0] <= v[1]);
    out.checks.push(check(
        format!("{name}/partition-monotone"),
        monotone && values[0] == cut,
        format!(
            "trivial={} coarse={} fine={} discrete={}",
            rat_to_text(&values[0]),
            rat_to_text(&values[1]),
            rat_to_text(&values[2]),
            rat_to_text(&values[3])
        ),
    ));
    Ok(())
}

// ---- wreg ---------------------------------------------------------------

fn wreg(cfg: &Config, seed: u64, limits: &Limits) -> Result<SuiteOutcome, CliError> {
    let mut out = SuiteOutcome::default();
    let count = cfg.usize_or("wreg", "count", 6)?;
    let t = cfg.usize_or("wreg", "t", 4)?;
    let k = cfg.usize_or("wreg", "k", 2)?;
    let denom = cfg.usize_or("wreg", "denom", 16)? as u32;
    let eps = cfg.rat_or("wreg", "eps", rat(3, 10))?;
    let probe_blocks = cfg.usize_or("wreg", "probe_blocks", 4)?;
    out.note("count", count);
    out.note("eps", rat_to_text(&eps));
    out.note("probe_blocks", probe_blocks);

    let mut rng = trial_rng(seed, 102);
    for i in 0..count {
        let w = random_colored_kernel(2, t, k, denom, &mut rng);
        let reg = weak_regularity(&w, &RegularityOptions::exhaustive(eps.clone(), probe_blocks), limits)
            .map_err(core)?;
        out.checks.push(check(
            format!("kernel-{i}/deviation"),
            reg.deviation <= eps && reg.deviation_exact,
            format!(
                "deviation={} eps={} exact={}",
                rat_to_text(&reg.deviation),
                rat_to_text(&eps),
                reg.deviation_exact
            ),
        ));
        out.checks.push(check(
            format!("kernel-{i}/iterations"),
            reg.iterations <= reg.cap,
            format!("iterations={} cap={}", reg.iterations, reg.cap),
        ));
        out.checks.push(check(
            format!("kernel-{i}/class-bound"),
            reg.class_bound_ok,
            format!("classes={} log10(bound)~{:.3}", reg.partition.block_count(), reg.class_bound_log10),
        ));
    }
    Ok(out)
}

// ---- countlemma ---------------------------------------------------------

fn countlemma(cfg: &Config, seed: u64, limits: &Limits) -> Result<SuiteOutcome, CliError> {
    let mut out = SuiteOutcome::default();
    let pairs = cfg.usize_or("countlemma", "pairs", 8)?;
    let t = cfg.usize_or("countlemma", "t", 3)?;
    let k = cfg.usize_or("countlemma", "k", 2)?;
    let q = cfg.usize_or("countlemma", "q", 3)?;
    let denom = cfg.usize_or("countlemma", "denom", 6)? as u32;
    out.note("pairs", pairs);
    out.note("q", q);

    let mut rng = trial_rng(seed, 103);
    for i in 0..pairs {
        let u = random_colored_kernel(2, t, k, denom, &mut rng);
        let w = random_colored_kernel(2, t, k, denom, &mut rng);
        let rep = counting_lemma_check(&u, &w, q, limits).map_err(core)?;
        out.checks.push(check(
            format!("pair-{i}/bound"),
            rep.holds,
            format!(
                "tv={} bound={} vacuous={}",
                rat_to_text(&rep.tv),
                rat_to_text(&rep.bound),
                rep.vacuous
            ),
        ));
        out.checks.push(check(
            format!("pair-{i}/coupling"),
            rep.coupling_ok,
            format!("mismatch={}", rat_to_text(&rep.coupling_mismatch)),
        ));
    }
    Ok(out)
}

// ---- concentrate --------------------------------------------------------

fn concentrate(cfg: &Config, seed: u64) -> Result<SuiteOutcome, CliError> {
    let mut out = SuiteOutcome::default();
    let t = cfg.usize_or("concentrate", "t", 3)?;
    let q = cfg.usize_or("concentrate", "q", 300)?;
    // Default chosen so the tail bound 2 exp(-delta^2 q / 32) stays below 1.
    let delta = cfg.f64_or("concentrate", "delta", 0.3)?;
    let trials = cfg.usize_or("concentrate", "trials", 400)?;
    let denom = cfg.usize_or("concentrate", "denom", 8)? as u32;
    out.note("q", q);
    out.note("delta", delta);
    out.note("trials", trials);

    let mut rng = trial_rng(seed, 104);
    let u = random_colored_kernel(2, t, 2, denom, &mut rng).component(0);
    let f = Hypergraph::doubled_edge(2);
    let rep = concentration_experiment(&f, &u, q, delta, trials, seed).map_err(core)?;
    out.checks.push(check(
        "deviation-rate",
        !rep.violated,
        format!(
            "empirical={:.4} bound={:.4} se={:.4} exceed={}/{} vacuous={}",
            rep.empirical_rate, rep.bound, rep.standard_error, rep.exceed, rep.trials, rep.vacuous
        ),
    ));
    Ok(out)
}

// ---- gse ----------------------------------------------------------------

/// Symmetric array with entries a/denom, |a| <= denom.
fn random_symmetric_array<R: Rng>(s: usize, denom: i64, rng: &mut R) -> RealArray {
    let mut entries = vec![rzero(); s * s];
    for a in 0..s {
        for b in a..s {
            let v = rat(rng.gen_range(-denom..=denom), denom);
            entries[a * s + b] = v.clone();
            entries[b * s + a] = v;
        }
    }
    RealArray::new(2, s, entries).unwrap()
}

fn gse(cfg: &Config, seed: u64, limits: &Limits) -> Result<SuiteOutcome, CliError> {
    let mut out = SuiteOutcome::default();
    let count = cfg.usize_or("gse", "count", 8)?;
    let n_max = cfg.usize_or("gse", "n_max", 8)?.max(4);
    let s_max = cfg.usize_or("gse", "s_max", 3)?.max(2);
    let p = cfg.f64_or("gse", "p", 0.5)?;
    out.note("count", count);
    out.note("n_max", n_max);
    out.note("s_max", s_max);

    let k4 = gse_graph(&Hypergraph::complete(2, 4), &RealArray::maxcut(), EnergyMode::Exact, limits)
        .map_err(core)?;
    out.checks.push(check(
        "k4-maxcut-half",
        k4.value == rat(1, 2),
        format!("value={}", rat_to_text(&k4.value)),
    ));

    let mut rng = trial_rng(seed, 105);
    for i in 0..count {
        let n = 4 + (i % (n_max - 3));
        let s = 2 + (i % (s_max - 1));
        let g = gen::random_hypergraph(n, 2, p, seed ^ (i as u64) << 8)?;
        let j = random_symmetric_array(s, 8, &mut rng);
        let exact = gse_graph(&g, &j, EnergyMode::Exact, limits).map_err(core)?;
        let local = gse_graph(&g, &j, EnergyMode::Local { restarts: 6, seed: seed + i as u64 }, limits)
            .map_err(core)?;
        out.checks.push(check(
            format!("instance-{i}/local-dominated"),
            local.value <= exact.value && exact.exact,
            format!("local={} exact={}", rat_to_text(&local.value), rat_to_text(&exact.value)),
        ));
    }
    Ok(out)
}

// ---- ggse ---------------------------------------------------------------

fn ggse_suite(cfg: &Config, seed: u64, limits: &Limits) -> Result<SuiteOutcome, CliError> {
    let mut out = SuiteOutcome::default();
    let count = cfg.usize_or("ggse", "count", 6)?;
    let n_max = cfg.usize_or("ggse", "n_max", 6)?.max(3);
    let p = cfg.f64_or("ggse", "p", 0.5)?;
    out.note("count", count);
    out.note("n_max", n_max);

    let zero = RealArray::new(2, 2, vec![rzero(); 4]).unwrap();
    let maxcut = RealArray::maxcut();
    for i in 0..count {
        let n = 3 + (i % (n_max - 2));
        let g = gen::random_hypergraph(n, 2, p, seed ^ 0x6767 ^ (i as u64))?;
        let h = ColoredHypergraph::from_hypergraph(&g);
        let gg = ggse(&h, &[zero.clone(), maxcut.clone()], EnergyMode::Exact, limits).map_err(core)?;
        let ge = gse_graph(&g, &maxcut, EnergyMode::Exact, limits).map_err(core)?;
        out.checks.push(check(
            format!("instance-{i}/matches-graph-energy"),
            gg.value == ge.value,
            format!("ggse={} gse={}", rat_to_text(&gg.value), rat_to_text(&ge.value)),
        ));
    }
    Ok(out)
}

// ---- tensor -------------------------------------------------------------

fn random_family<R: Rng>(n: usize, r: usize, rng: &mut R) -> PartitionFamily {
    let mut levels = Vec::new();
    let mut classes = Vec::new();
    for s in 1..r {
        let c = 1 + rng.gen_range(0..2usize);
        let count = hypertest_core::comb::binomial(n, s) as usize;
        levels.push((0..count).map(|_| rng.gen_range(0..c)).collect());
        classes.push(c);
    }
    PartitionFamily::new(n, r, levels, classes).unwrap()
}

fn tensor(cfg: &Config, seed: u64, limits: &Limits) -> Result<SuiteOutcome, CliError> {
    let mut out = SuiteOutcome::default();
    let count = cfg.usize_or("tensor", "count", 8)?;
    let n_max = cfg.usize_or("tensor", "n_max", 6)?.max(4);
    let p = cfg.f64_or("tensor", "p", 0.5)?;
    out.note("count", count);
    out.note("n_max", n_max);

    let mut rng = trial_rng(seed, 107);
    for i in 0..count {
        let r = 2 + (i % 2);
        let n_cap = if r == 3 { n_max.min(5) } else { n_max };
        let n = (r + 1) + (i % (n_cap - r));
        let g = gen::random_hypergraph(n, r, p, seed ^ (0x7e << 8) ^ (i as u64))?;
        let fam = random_family(n, r, &mut rng);
        let psi = density_tensor_of(&g, &fam, limits).map_err(core)?;
        let found = satisfies_tensor(&g, &psi, &rzero(), TensorSearchMode::Exact, limits)
            .map_err(core)?;
        out.checks.push(check(
            format!("instance-{i}/round-trip"),
            found.is_some(),
            format!("n={n} r={r} classes={:?}", psi.classes),
        ));
    }
    Ok(out)
}

// ---- ndtest -------------------------------------------------------------

fn ndtest(cfg: &Config, seed: u64, limits: &Limits) -> Result<SuiteOutcome, CliError> {
    let mut out = SuiteOutcome::default();
    let witness = cfg.get("ndtest", "witness").unwrap_or("maxcut").to_string();
    let n = cfg.usize_or("ndtest", "n", 14)?;
    let p = cfg.f64_or("ndtest", "p", 0.5)?;
    let q = cfg.usize_or("ndtest", "q", 8)?;
    let eps = cfg.f64_or("ndtest", "eps", 0.25)?;
    let trials = cfg.usize_or("ndtest", "trials", 80)?;
    let restarts = cfg.usize_or("ndtest", "restarts", 6)?;
    out.note("witness", &witness);
    out.note("n", n);
    out.note("q", q);
    out.note("eps", eps);
    out.note("trials", trials);

    let param = hypertest_core::ndtest::witness_by_name(&witness).map_err(core)?;
    let g = gen::random_hypergraph(n, 2, p, seed ^ 0x6e64)?;
    let exact = nd_eval(&param, &g, EvalMode::Exact, limits).map_err(core)?;
    let search = nd_eval(&param, &g, EvalMode::Search { restarts, seed }, limits).map_err(core)?;
    out.checks.push(check(
        "search-dominated",
        search.value <= exact.value && exact.exact,
        format!("search={} exact={}", rat_to_text(&search.value), rat_to_text(&exact.value)),
    ));

    let rep = tester(
        &param,
        &g,
        q,
        eps,
        trials,
        seed,
        EvalMode::Exact,
        Some(exact.value.clone()),
        limits,
    )
    .map_err(core)?;
    out.checks.push(check(
        "tester-failure-rate",
        rep.failure_rate < eps,
        format!("failures={}/{} rate={:.4} eps={eps}", rep.failures, rep.trials, rep.failure_rate),
    ));
    Ok(out)
}

// ---- transfer -----------------------------------------------------------

fn transfer(cfg: &Config, seed: u64, limits: &Limits) -> Result<SuiteOutcome, CliError> {
    let mut out = SuiteOutcome::default();
    let n = cfg.usize_or("transfer", "n", 36)?;
    let q = cfg.usize_or("transfer", "q", 12)?;
    let delta = cfg.rat_or("transfer", "delta", rat(1, 4))?;
    let size_cap = cfg.usize_or("transfer", "size_cap", 3)?;
    out.note("n", n);
    out.note("q", q);
    out.note("delta", rat_to_text(&delta));

    let g = match cfg.get("transfer", "input") {
        Some(path) => {
            let text = fs::read_to_string(path)
                .map_err(|e| CliError::usage(format!("cannot read {path}: {e}")))?;
            out.inputs.push(PathBuf::from(path));
            read_hypergraph(&text).map_err(core)?
        }
        None => gen::planted_partition(n, 0.9, 0.1, seed ^ 0x7266)?,
    };
    let n = g.n();
    if q > n {
        return Err(CliError::usage("transfer needs q <= n"));
    }

    // Sorted q-subset of the host vertices.
    let mut rng = trial_rng(seed, 109);
    let mut verts: Vec<u32> = (0..n as u32).collect();
    for i in 0..q {
        let j = i + rng.gen_range(0..n - i);
        verts.swap(i, j);
    }
    let mut sample: Vec<u32> = verts[..q].to_vec();
    sample.sort_unstable();

    let fhat_graph = g.induced(&sample).map_err(core)?;
    let param = hypertest_core::ndtest::witness_by_name("maxcut").map_err(core)?;
    let best = nd_eval(&param, &fhat_graph, EvalMode::Exact, limits).map_err(core)?;

    let opts = TransferOptions { delta, seed, size_cap, stage_budgets: None };
    let rep = coloring_transfer(&g, &sample, &best.coloring, &opts, limits).map_err(core)?;

    for stage in &rep.stages {
        out.checks.push(check(
            format!("stage-{}", stage.stage),
            stage.within_budget,
            format!("value~{:.6} bound~{:.6}", stage.value, stage.bound),
        ));
    }
    out.checks.push(check(
        "stages-complete",
        rep.failed_stage.is_none(),
        match rep.failed_stage {
            Some(s) => format!("failed at {s}"),
            None => format!("{} stages", rep.stages.len()),
        },
    ));
    out.checks.push(check(
        "discrepancy-within-budget",
        rep.final_ok,
        format!("discrepancy~{:.6} budget~{:.6}", to_f64(&rep.discrepancy), rep.budget),
    ));
    Ok(out)
}

// ---- dist ---------------------------------------------------------------

fn dist(cfg: &Config, seed: u64, limits: &Limits) -> Result<SuiteOutcome, CliError> {
    let mut out = SuiteOutcome::default();
    let c = cfg.rat_or("dist", "c", rat(1, 5))?;
    let q = cfg.usize_or("dist", "q", 5)?;
    let trials = cfg.usize_or("dist", "trials", 40)?;
    out.note("c", rat_to_text(&c));
    out.note("q", q);

    let empty = Hypergraph::new(2, 4);
    match edit_distance_to_property(&empty, triangle_free, &c, EditMode::Exact { radius_cap: 1 }, limits)
        .map_err(core)?
    {
        EditResult::Exact { edits, distance } => {
            out.checks.push(check(
                "empty-distance-zero",
                edits == 0 && distance.is_zero(),
                format!("edits={edits}"),
            ));
        }
        _ => out.checks.push(check("empty-distance-zero", false, "no exact result")),
    }

    // Mantel: the largest triangle-free subgraph of K6 is K_{3,3}, so six
    // removals are needed.
    let (g, expected, label) = match cfg.get("dist", "input") {
        Some(path) => {
            let text = fs::read_to_string(path)
                .map_err(|e| CliError::usage(format!("cannot read {path}: {e}")))?;
            out.inputs.push(PathBuf::from(path));
            (read_hypergraph(&text).map_err(core)?, None, "input".to_string())
        }
        None => (Hypergraph::complete(2, 6), Some(rat(6, 36)), "k6".to_string()),
    };
    let radius_cap = g.edge_count() + 1;
    match edit_distance_to_property(&g, triangle_free, &c, EditMode::Exact { radius_cap }, limits)
        .map_err(core)?
    {
        EditResult::Exact { edits, distance } => {
            let pass = match &expected {
                Some(want) => distance == *want,
                None => (edits == 0) == triangle_free(&g),
            };
            out.checks.push(check(
                format!("{label}-distance"),
                pass,
                format!("edits={edits} distance={}", rat_to_text(&distance)),
            ));
        }
        EditResult::Bracket { searched_radius, lower } => {
            out.checks.push(check(
                format!("{label}-distance"),
                false,
                format!("unresolved after radius {searched_radius}, lower={}", rat_to_text(&lower)),
            ));
        }
        EditResult::Tester(_) => {
            out.checks.push(check(format!("{label}-distance"), false, "unexpected tester result"))
        }
    }

    let cycle = Hypergraph::from_edges(
        2,
        6,
        (0..6u32).map(|v| vec![v.min((v + 1) % 6), v.max((v + 1) % 6)]).collect::<Vec<_>>(),
    )
    .map_err(core)?;
    let mode = EditMode::Tester { q, trials, seed };
    match edit_distance_to_property(&cycle, triangle_free, &c, mode, limits).map_err(core)? {
        EditResult::Tester(rep) => out.checks.push(check(
            "tester-near-verdict",
            rep.verdict,
            format!("near={}/{} allowed={}", rep.near, rep.trials, rep.allowed_edits),
        )),
        _ => out.checks.push(check("tester-near-verdict", false, "no tester result")),
    }
    let tiny = rat(1, 36);
    let mode = EditMode::Tester { q, trials, seed };
    match edit_distance_to_property(&Hypergraph::complete(2, 6), triangle_free, &tiny, mode, limits)
        .map_err(core)?
    {
        EditResult::Tester(rep) => out.checks.push(check(
            "tester-far-verdict",
            !rep.verdict,
            format!("near={}/{} allowed={}", rep.near, rep.trials, rep.allowed_edits),
        )),
        _ => out.checks.push(check("tester-far-verdict", false, "no tester result")),
    }
    Ok(out)
}

// ---- fo -----------------------------------------------------------------

fn fo(cfg: &Config, limits: &Limits) -> Result<SuiteOutcome, CliError> {
    let mut out = SuiteOutcome::default();
    let _ = cfg;

    let one = Hypergraph::new(2, 1);
    let taut = FOFormula { exists: 0, forall: 0, predicate_arities: vec![], matrix: FOMatrix::Bool(true) };
    let rep = fo_property_check(&one, &[], &taut, FOCheckMode::FixedRelations, limits).map_err(core)?;
    out.checks.push(check("tautology", rep.value, format!("tables_tried={}", rep.tables_tried)));

    // exists u forall v: u = v or adjacent(u, v)
    let dominating = FOFormula {
        exists: 1,
        forall: 1,
        predicate_arities: vec![],
        matrix: FOMatrix::Or(vec![FOMatrix::Eq(0, 1), FOMatrix::Adj(vec![0, 1])]),
    };
    let star = Hypergraph::from_edges(2, 5, (1..5u32).map(|v| vec![0, v]).collect::<Vec<_>>())
        .map_err(core)?;
    let rep = fo_property_check(&star, &[], &dominating, FOCheckMode::FixedRelations, limits)
        .map_err(core)?;
    out.checks.push(check(
        "dominating-star",
        rep.value && rep.witness == Some(vec![0]),
        format!("witness={:?}", rep.witness),
    ));

    let two_k2 =
        Hypergraph::from_edges(2, 4, vec![vec![0, 1], vec![2, 3]]).map_err(core)?;
    let rep = fo_property_check(&two_k2, &[], &dominating, FOCheckMode::FixedRelations, limits)
        .map_err(core)?;
    out.checks.push(check("dominating-2k2", !rep.value, "no dominating vertex"));

    // exists u forall v: P(u) and (u = v or not P(v)) - satisfiable by
    // marking exactly u.
    let unique_mark = FOFormula {
        exists: 1,
        forall: 1,
        predicate_arities: vec![1],
        matrix: FOMatrix::And(vec![
            FOMatrix::Pred(0, vec![0]),
            FOMatrix::Or(vec![FOMatrix::Eq(0, 1), FOMatrix::Not(Box::new(FOMatrix::Pred(0, vec![1])))]),
        ]),
    };
    let host = Hypergraph::new(2, 3);
    let rep = fo_property_check(&host, &[], &unique_mark, FOCheckMode::ND, limits).map_err(core)?;
    out.checks.push(check(
        "nd-unique-mark",
        rep.value,
        format!("tables_tried={}", rep.tables_tried),
    ));

    let contradiction = FOFormula {
        exists: 1,
        forall: 0,
        predicate_arities: vec![1],
        matrix: FOMatrix::And(vec![
            FOMatrix::Pred(0, vec![0]),
            FOMatrix::Not(Box::new(FOMatrix::Pred(0, vec![0]))),
        ]),
    };
    let rep = fo_property_check(&host, &[], &contradiction, FOCheckMode::ND, limits).map_err(core)?;
    out.checks.push(check(
        "nd-contradiction",
        !rep.value,
        format!("tables_tried={}", rep.tables_tried),
    ));

    // Fixed-relation variant of the marking formula: holds for a singleton
    // table, fails for an empty one.
    let table = PredicateTable::new(1, vec![vec![1]]).map_err(core)?;
    let rep = fo_property_check(&host, &[table], &unique_mark, FOCheckMode::FixedRelations, limits)
        .map_err(core)?;
    out.checks.push(check("fixed-singleton-table", rep.value, format!("witness={:?}", rep.witness)));
    let empty_table = PredicateTable::new(1, vec![]).map_err(core)?;
    let rep = fo_property_check(&host, &[empty_table], &unique_mark, FOCheckMode::FixedRelations, limits)
        .map_err(core)?;
    out.checks.push(check("fixed-empty-table", !rep.value, "no marked vertex"));
    Ok(out)
}

// ---- bounds -------------------------------------------------------------

fn bounds() -> Result<SuiteOutcome, CliError> {
    let mut out = SuiteOutcome::default();

    let pi = pi_combination(2, &rat(1, 10), 2, 2, 2).map_err(core)?;
    out.checks.push(check(
        "pi-exact",
        pi == rat(1, 10) / rat_u(8192),
        format!("pi={}", rat_to_text(&pi)),
    ));
    let pi_loose = pi_combination(2, &rat(1, 5), 2, 2, 2).map_err(core)?;
    out.checks.push(check(
        "pi-monotone-delta",
        pi_loose > pi,
        format!("delta=1/5 gives {}", rat_to_text(&pi_loose)),
    ));

    for r in 1..=4usize {
        let expect = 4 * (r as u32 - 1) + 1;
        let m = q_f_bound(r, 100, 0.1, 1.0).map_err(core)?;
        let pass = matches!(m, Magnitude::ExpTower { height, .. } if height == expect);
        out.checks.push(check(
            format!("tower-witness-r{r}"),
            pass,
            format!("expected height {expect}, got {m:?}"),
        ));
    }
    for r in 1..=4usize {
        let expect = 4 * (r as u32 - 1);
        let m = q_tv_bound(r, 0.1, 3, 2, 2, 1.0).map_err(core)?;
        let pass = matches!(m, Magnitude::ExpTower { height, .. } if height == expect);
        out.checks.push(check(
            format!("tower-tv-r{r}"),
            pass,
            format!("expected height {expect}, got {m:?}"),
        ));
    }
    let lin = q_linear_bound(10, 1.0);
    out.checks.push(check(
        "tower-linear",
        matches!(lin, Magnitude::ExpTower { height: 3, .. }),
        format!("{lin:?}"),
    ));

    let tight = t_reg_bound(2, 2, &rat(1, 4), 2).map_err(core)?;
    let loose = t_reg_bound(2, 2, &rat(1, 2), 2).map_err(core)?;
    out.checks.push(check(
        "treg-monotone-eps",
        loose.cmp_magnitude(&tight) != std::cmp::Ordering::Greater,
        format!("eps=1/2 digits~{:.1} eps=1/4 digits~{:.1}", loose.digits(), tight.digits()),
    ));
    let qf_tight = q_f_bound(2, 10, 0.1, 1.0).map_err(core)?;
    let qf_loose = q_f_bound(2, 10, 0.2, 1.0).map_err(core)?;
    // Equal tower heights here, so compare the top arguments directly;
    // digit counts overflow long before the heights differ.
    let pass = match (&qf_loose, &qf_tight) {
        (
            Magnitude::ExpTower { height: hl, arg: al },
            Magnitude::ExpTower { height: ht, arg: at },
        ) => hl == ht && al <= at,
        _ => false,
    };
    out.checks.push(check(
        "witness-monotone-eps",
        pass,
        format!("eps=0.2 gives {qf_loose:?}, eps=0.1 gives {qf_tight:?}"),
    ));
    Ok(out)
}
