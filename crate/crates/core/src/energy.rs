//! Ground state energies and density tensors.
//!
//! Energies of graphs use integer class assignments; kernel energies range
//! over fractional class rows. For two classes and pairwise kernels the
//! fractional optimum is found exactly by active-set enumeration of the
//! box-constrained quadratic; otherwise an alternating heuristic reports a
//! certified-feasible lower bound.

use num_traits::{Signed, ToPrimitive, Zero};
use rand::Rng;
use rayon::prelude::*;

use crate::comb::{binomial, colex_rank, for_each_tuple, permutations, subsets};
use crate::error::{Error, Result};
use crate::graphs::{ColoredHypergraph, Hypergraph};
use crate::kernels::{cell_index, StepKernel};
use crate::limits::Limits;
use crate::rat::{rat_u, rone, rzero, to_f64, Rat};
use crate::rngutil::trial_rng;

// ---- ground state arrays ------------------------------------------------------

/// A coupling array with s^r rational entries, indexed like kernel cells.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RealArray {
    r: usize,
    s: usize,
    entries: Vec<Rat>,
}

impl RealArray {
    pub fn new(r: usize, s: usize, entries: Vec<Rat>) -> Result<Self> {
        if s == 0 || r == 0 {
            return Err(Error::RangeError("array needs r, s >= 1".into()));
        }
        let want = s.checked_pow(r as u32).unwrap_or(usize::MAX);
        if entries.len() != want {
            return Err(Error::ShapeMismatch(format!(
                "array with {} entries, expected {}^{} = {}",
                entries.len(),
                s,
                r,
                want
            )));
        }
        Ok(RealArray { r, s, entries })
    }

    /// The pairwise cross-coupling array: 1 off the diagonal, 0 on it. Its
    /// graph energy is the (ordered) maximal cut density.
    pub fn maxcut() -> RealArray {
        RealArray::new(2, 2, vec![rzero(), rone(), rone(), rzero()]).unwrap()
    }

    pub fn r(&self) -> usize {
        self.r
    }

    pub fn s(&self) -> usize {
        self.s
    }

    pub fn entry(&self, cell: &[usize]) -> &Rat {
        &self.entries[cell_index(cell, self.s)]
    }

    pub fn entries(&self) -> &[Rat] {
        &self.entries
    }

    pub fn max_abs(&self) -> Rat {
        self.entries
            .iter()
            .map(|v| v.abs())
            .max()
            .unwrap_or_else(rzero)
    }
}

/// Rows of class-to-part masses: one point of the s-simplex per class.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FractionalPartition {
    t: usize,
    s: usize,
    rows: Vec<Vec<Rat>>,
}

impl FractionalPartition {
    pub fn new(rows: Vec<Vec<Rat>>, s: usize) -> Result<Self> {
        let t = rows.len();
        if t == 0 || s == 0 {
            return Err(Error::RangeError("partition needs t, s >= 1".into()));
        }
        for row in &rows {
            if row.len() != s {
                return Err(Error::ShapeMismatch(format!(
                    "row with {} parts, expected {}",
                    row.len(),
                    s
                )));
            }
            let mut sum = rzero();
            for v in row {
                if v < &rzero() {
                    return Err(Error::RangeError("negative part mass".into()));
                }
                sum += v;
            }
            if sum != rone() {
                return Err(Error::RangeError("row masses must sum to 1".into()));
            }
        }
        Ok(FractionalPartition { t, s, rows })
    }

    /// One whole part per class.
    pub fn from_assignment(assign: &[usize], s: usize) -> Self {
        let rows = assign
            .iter()
            .map(|&i| {
                let mut row = vec![rzero(); s];
                row[i] = rone();
                row
            })
            .collect();
        FractionalPartition { t: assign.len(), s, rows }
    }

    pub fn t(&self) -> usize {
        self.t
    }

    pub fn s(&self) -> usize {
        self.s
    }

    pub fn rows(&self) -> &[Vec<Rat>] {
        &self.rows
    }
}

// ---- graph ground state energy ---------------------------------------------------

#[derive(Debug, Clone, Copy)]
pub enum EnergyMode {
    /// Enumerates every class assignment; first lexicographic maximizer wins.
    Exact,
    /// Single-vertex moves from random starts; a lower bound.
    Local { restarts: usize, seed: u64 },
}

#[derive(Debug, Clone)]
pub struct GraphEnergy {
    pub value: Rat,
    pub assignment: Vec<usize>,
    pub exact: bool,
}

/// Maximal energy of assigning the graph's vertices to s classes: the sum
/// over ordered edge tuples of the array entry at the endpoint classes,
/// normalized by n^r. Exact mode scans assignments in lexicographic order.
pub fn gse_graph(
    g: &Hypergraph,
    j: &RealArray,
    mode: EnergyMode,
    limits: &Limits,
) -> Result<GraphEnergy> {
    if j.r() != g.r() {
        return Err(Error::ShapeMismatch(format!(
            "array arity {} vs graph {}",
            j.r(),
            g.r()
        )));
    }
    let n = g.n();
    let s = j.s();
    if n == 0 {
        return Err(Error::RangeError("empty vertex set".into()));
    }
    let (jint, denom) = integer_entries(j.entries());
    let tuples = edge_tuples(g);
    let scale = denom * rat_pow_u(n as u64, g.r() as u32);
    match mode {
        EnergyMode::Exact => {
            let total = (s as u128).checked_pow(n as u32).unwrap_or(u128::MAX);
            limits.check(total)?;
            let mut assign = vec![0usize; n];
            let mut best: Option<(i128, Vec<usize>)> = None;
            loop {
                let e = assignment_energy(&tuples, &assign, &jint, s);
                if best.as_ref().map_or(true, |(b, _)| e > *b) {
                    best = Some((e, assign.clone()));
                }
                if !next_lex(&mut assign, s) {
                    break;
                }
            }
            let (e, assignment) = best.unwrap();
            Ok(GraphEnergy {
                value: rat_i128(e) / scale,
                assignment,
                exact: true,
            })
        }
        EnergyMode::Local { restarts, seed } => {
            let results: Vec<(i128, Vec<usize>)> = (0..restarts.max(1))
                .into_par_iter()
                .map(|i| {
                    let mut rng = trial_rng(seed, i as u64);
                    let mut assign: Vec<usize> =
                        (0..n).map(|_| rng.gen_range(0..s)).collect();
                    let mut value = assignment_energy(&tuples, &assign, &jint, s);
                    loop {
                        let mut improved = false;
                        for v in 0..n {
                            let old = assign[v];
                            let mut best_c = old;
                            let mut best_e = value;
                            for c in 0..s {
                                if c == old {
                                    continue;
                                }
                                assign[v] = c;
                                let e = assignment_energy(&tuples, &assign, &jint, s);
                                if e > best_e {
                                    best_e = e;
                                    best_c = c;
                                }
                            }
                            assign[v] = best_c;
                            if best_e > value {
                                value = best_e;
                                improved = true;
                            }
                        }
                        if !improved {
                            break;
                        }
                    }
                    (value, assign)
                })
                .collect();
            let (value, assignment) = results
                .into_iter()
                .max_by(|a, b| a.0.cmp(&b.0).then_with(|| b.1.cmp(&a.1)))
                .unwrap();
            Ok(GraphEnergy {
                value: rat_i128(value) / scale,
                assignment,
                exact: false,
            })
        }
    }
}

/// All ordered vertex tuples of all edges, flattened.
fn edge_tuples(g: &Hypergraph) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    let perms = permutations(g.r());
    for e in g.edges() {
        for p in &perms {
            out.push(p.iter().map(|&i| e[i as usize] as usize).collect());
        }
    }
    out
}

fn assignment_energy(
    tuples: &[Vec<usize>],
    assign: &[usize],
    jint: &[i128],
    s: usize,
) -> i128 {
    let mut acc: i128 = 0;
    let mut cell = vec![0usize; tuples.first().map_or(0, |t| t.len())];
    for tup in tuples {
        for (c, &v) in cell.iter_mut().zip(tup) {
            *c = assign[v];
        }
        acc += jint[cell_index(&cell, s)];
    }
    acc
}

/// Advances to the next assignment in lexicographic order (last coordinate
/// fastest); false when wrapped.
fn next_lex(assign: &mut [usize], s: usize) -> bool {
    for slot in assign.iter_mut().rev() {
        *slot += 1;
        if *slot < s {
            return true;
        }
        *slot = 0;
    }
    false
}

/// Clears denominators: entries scaled to integers, returns the common
/// denominator as a rational.
fn integer_entries(entries: &[Rat]) -> (Vec<i128>, Rat) {
    let mut denom = num_bigint::BigInt::from(1);
    for e in entries {
        denom = num_integer::lcm(denom, e.denom().clone());
    }
    let d = Rat::new(denom.clone(), num_bigint::BigInt::from(1));
    let ints = entries
        .iter()
        .map(|e| {
            let v = e * &d;
            v.numer().to_i128().expect("scaled array entry fits i128")
        })
        .collect();
    (ints, d)
}

fn rat_i128(v: i128) -> Rat {
    Rat::new(v.into(), 1.into())
}

fn rat_pow_u(base: u64, e: u32) -> Rat {
    crate::rat::rat_pow(&rat_u(base), e)
}

// ---- kernel ground state energy ---------------------------------------------------

#[derive(Debug, Clone, Copy)]
pub enum KernelEnergyMode {
    /// Assigns each kernel class wholly to one part; exact enumeration.
    Vertex,
    /// Fractional rows. Exact active-set solve for pairwise kernels with two
    /// parts; otherwise alternating ascent from random starts.
    Fractional { restarts: usize, seed: u64 },
}

#[derive(Debug, Clone)]
pub struct KernelEnergy {
    pub value: Rat,
    pub rows: FractionalPartition,
    pub exact: bool,
}

/// Maximal energy of fractionally assigning kernel classes to s parts.
pub fn gse_kernel(
    u: &StepKernel,
    j: &RealArray,
    mode: KernelEnergyMode,
    limits: &Limits,
) -> Result<KernelEnergy> {
    if j.r() != u.r() {
        return Err(Error::ShapeMismatch(format!(
            "array arity {} vs kernel {}",
            j.r(),
            u.r()
        )));
    }
    let t = u.t();
    let s = j.s();
    match mode {
        KernelEnergyMode::Vertex => {
            let total = (s as u128).checked_pow(t as u32).unwrap_or(u128::MAX);
            limits.check(total)?;
            let mut assign = vec![0usize; t];
            let mut best: Option<(Rat, Vec<usize>)> = None;
            loop {
                let rows = FractionalPartition::from_assignment(&assign, s);
                let e = kernel_energy_value(u, j, &rows);
                if best.as_ref().map_or(true, |(b, _)| e > *b) {
                    best = Some((e, assign.clone()));
                }
                if !next_lex(&mut assign, s) {
                    break;
                }
            }
            let (value, assign) = best.unwrap();
            Ok(KernelEnergy {
                value,
                rows: FractionalPartition::from_assignment(&assign, s),
                exact: true,
            })
        }
        KernelEnergyMode::Fractional { restarts, seed } => {
            if u.r() == 2 && s == 2 && t <= 10 {
                return fractional_exact_pairwise(u, j, limits);
            }
            fractional_ascent(u, j, restarts, seed)
        }
    }
}

/// Exact energy of a fractional row choice.
pub fn kernel_energy_value(u: &StepKernel, j: &RealArray, rows: &FractionalPartition) -> Rat {
    let t = u.t();
    let s = j.s();
    let r = u.r();
    let mut total = rzero();
    for_each_tuple(t, r, |cell| {
        let base = u.values()[cell_index(cell, t)].clone();
        if base.is_zero() {
            return;
        }
        let mut lambda = base;
        for &c in cell {
            lambda *= &u.weights()[c];
        }
        let mut inner = rzero();
        for_each_tuple(s, r, |parts| {
            let mut term = j.entries()[cell_index(parts, s)].clone();
            if term.is_zero() {
                return;
            }
            for (&c, &p) in cell.iter().zip(parts.iter()) {
                term *= &rows.rows()[c][p];
                if term.is_zero() {
                    break;
                }
            }
            inner += term;
        });
        total += lambda * inner;
    });
    total
}

/// Global maximum of the two-part pairwise energy: a box-constrained
/// quadratic in the first-part masses, solved by enumerating which
/// coordinates sit at the bounds. Free coordinates must make the gradient
/// vanish; singular stationary systems are skipped because every optimum on
/// such a manifold can be slid to a smaller free set at equal value.
fn fractional_exact_pairwise(
    u: &StepKernel,
    j: &RealArray,
    limits: &Limits,
) -> Result<KernelEnergy> {
    let t = u.t();
    limits.check(3u128.saturating_pow(t as u32))?;
    // E(x) = a x^T G x + b . x + c0 with G_cd = l_c l_d U(c,d).
    let j00 = &j.entries()[0];
    let j10 = &j.entries()[1];
    let j01 = &j.entries()[2];
    let j11 = &j.entries()[3];
    let a = j00 - j01 - j10 + j11;
    let mut gmat = vec![vec![rzero(); t]; t];
    for c in 0..t {
        for d in 0..t {
            gmat[c][d] = &u.weights()[c] * &u.weights()[d] * &u.values()[c + d * t];
        }
    }
    let mut b = vec![rzero(); t];
    let mut c0 = rzero();
    for c in 0..t {
        let mut row = rzero();
        let mut col = rzero();
        for d in 0..t {
            row += &gmat[c][d];
            col += &gmat[d][c];
        }
        b[c] = (j01 - j11) * row + (j10 - j11) * col;
        for d in 0..t {
            c0 += j11 * &gmat[c][d];
        }
    }
    let mut best: Option<(Rat, Vec<Rat>)> = None;
    let mut state = vec![0u8; t]; // 0 -> x=0, 1 -> x=1, 2 -> free
    loop {
        let free: Vec<usize> = (0..t).filter(|&c| state[c] == 2).collect();
        let candidate = if free.is_empty() {
            Some(state.iter().map(|&v| rat_u(v as u64)).collect::<Vec<Rat>>())
        } else {
            // gradient on free coords: 2a (G x)_c + b_c = 0 (G symmetrized).
            let m = free.len();
            let mut mat = vec![vec![rzero(); m]; m];
            let mut rhs = vec![rzero(); m];
            for (i, &c) in free.iter().enumerate() {
                for (jx, &d) in free.iter().enumerate() {
                    mat[i][jx] = &a * (&gmat[c][d] + &gmat[d][c]);
                }
                let mut acc = -b[c].clone();
                for d in 0..t {
                    if state[d] == 1 {
                        acc -= &a * (&gmat[c][d] + &gmat[d][c]);
                    }
                }
                rhs[i] = acc;
            }
            solve_rat(mat, rhs).map(|sol| {
                let mut x: Vec<Rat> = state.iter().map(|&v| rat_u(v.min(1) as u64)).collect();
                for (i, &c) in free.iter().enumerate() {
                    x[c] = sol[i].clone();
                }
                x
            })
        };
        if let Some(x) = candidate {
            let feasible = x.iter().all(|v| v >= &rzero() && v <= &rone());
            if feasible {
                let mut e = c0.clone();
                for c in 0..t {
                    e += &b[c] * &x[c];
                    for d in 0..t {
                        e += &a * &gmat[c][d] * &x[c] * &x[d];
                    }
                }
                if best.as_ref().map_or(true, |(bv, _)| e > *bv) {
                    best = Some((e, x));
                }
            }
        }
        if !next_lex_u8(&mut state, 3) {
            break;
        }
    }
    let (value, x) = best.expect("corner candidates are always feasible");
    let rows = x
        .into_iter()
        .map(|v| {
            let rest = rone() - &v;
            vec![v, rest]
        })
        .collect();
    Ok(KernelEnergy {
        value,
        rows: FractionalPartition::new(rows, 2)?,
        exact: true,
    })
}

fn next_lex_u8(state: &mut [u8], base: u8) -> bool {
    for slot in state.iter_mut().rev() {
        *slot += 1;
        if *slot < base {
            return true;
        }
        *slot = 0;
    }
    false
}

/// Gaussian elimination over rationals; None if singular.
fn solve_rat(mut a: Vec<Vec<Rat>>, mut b: Vec<Rat>) -> Option<Vec<Rat>> {
    let n = b.len();
    for col in 0..n {
        let pivot = (col..n).find(|&row| !a[row][col].is_zero())?;
        a.swap(col, pivot);
        b.swap(col, pivot);
        let p = a[col][col].clone();
        for v in a[col].iter_mut() {
            *v /= &p;
        }
        b[col] /= &p;
        for row in 0..n {
            if row == col || a[row][col].is_zero() {
                continue;
            }
            let f = a[row][col].clone();
            for c2 in 0..n {
                let sub = &f * &a[col][c2];
                a[row][c2] -= sub;
            }
            let sub = &f * &b[col];
            b[row] -= sub;
        }
    }
    Some(b)
}

/// Alternating ascent over rows in floating point, then the best point is
/// re-evaluated exactly. A feasible lower bound, not a certificate.
fn fractional_ascent(
    u: &StepKernel,
    j: &RealArray,
    restarts: usize,
    seed: u64,
) -> Result<KernelEnergy> {
    let t = u.t();
    let s = j.s();
    let r = u.r();
    let uf: Vec<f64> = u.values().iter().map(to_f64).collect();
    let wf: Vec<f64> = u.weights().iter().map(to_f64).collect();
    let jf: Vec<f64> = j.entries().iter().map(to_f64).collect();
    let energy_f = |rows: &[Vec<f64>]| -> f64 {
        let mut total = 0.0;
        let mut cell_buf = vec![0usize; r];
        for_each_tuple(t, r, |cell| {
            let v = uf[cell_index(cell, t)];
            if v == 0.0 {
                return;
            }
            let mut lambda = v;
            for &c in cell {
                lambda *= wf[c];
            }
            cell_buf.copy_from_slice(cell);
            let mut inner = 0.0;
            for_each_tuple(s, r, |parts| {
                let mut term = jf[cell_index(parts, s)];
                if term == 0.0 {
                    return;
                }
                for (&c, &p) in cell_buf.iter().zip(parts) {
                    term *= rows[c][p];
                }
                inner += term;
            });
            total += lambda * inner;
        });
        total
    };
    let mut best: Option<(f64, Vec<Vec<f64>>)> = None;
    for i in 0..restarts.max(1) {
        let mut rng = trial_rng(seed, i as u64);
        let mut rows: Vec<Vec<f64>> = (0..t)
            .map(|_| {
                let raw: Vec<f64> = (0..s).map(|_| rng.gen::<f64>() + 1e-3).collect();
                let sum: f64 = raw.iter().sum();
                raw.into_iter().map(|x| x / sum).collect()
            })
            .collect();
        let mut value = energy_f(&rows);
        for _ in 0..100 {
            let mut improved = false;
            for c in 0..t {
                let (bv, brow) = best_row(&energy_f, &rows, c, s);
                if bv > value + 1e-12 {
                    rows[c] = brow;
                    value = bv;
                    improved = true;
                }
            }
            if !improved {
                break;
            }
        }
        if best.as_ref().map_or(true, |(b, _)| value > *b) {
            best = Some((value, rows));
        }
    }
    let (_, rows_f) = best.unwrap();
    let rows: Vec<Vec<Rat>> = rows_f
        .into_iter()
        .map(|row| {
            let mut rat_row: Vec<Rat> = row
                .into_iter()
                .map(|x| Rat::from_float(x.max(0.0)).unwrap_or_else(rzero))
                .collect();
            let mut sum = rzero();
            for v in &rat_row {
                sum += v;
            }
            if sum.is_zero() {
                rat_row[0] = rone();
            } else {
                for v in rat_row.iter_mut() {
                    *v /= &sum;
                }
            }
            rat_row
        })
        .collect();
    let rows = FractionalPartition::new(rows, s)?;
    let value = kernel_energy_value(u, j, &rows);
    Ok(KernelEnergy { value, rows, exact: false })
}

/// Best simplex row for one class with the others fixed: tries every support
/// with a stationary solve, plus the vertices.
fn best_row<F: Fn(&[Vec<f64>]) -> f64>(
    energy: &F,
    rows: &[Vec<f64>],
    c: usize,
    s: usize,
) -> (f64, Vec<f64>) {
    let mut work = rows.to_vec();
    let mut best = (f64::NEG_INFINITY, rows[c].clone());
    let mut try_row = |row: Vec<f64>, work: &mut Vec<Vec<f64>>| {
        if row.iter().any(|&x| !(0.0..=1.0 + 1e-9).contains(&x)) {
            return;
        }
        work[c] = row.clone();
        let v = energy(work);
        if v > best.0 {
            best = (v, row);
        }
    };
    for i in 0..s {
        let mut row = vec![0.0; s];
        row[i] = 1.0;
        try_row(row, &mut work);
    }
    // Numeric stationary candidates on each 2-point support: the energy
    // restricted to one row is quadratic, so golden-section refine on pairs.
    for i in 0..s {
        for k2 in i + 1..s {
            let mut lo = 0.0f64;
            let mut hi = 1.0f64;
            for _ in 0..40 {
                let m1 = lo + (hi - lo) / 3.0;
                let m2 = hi - (hi - lo) / 3.0;
                let eval = |x: f64, work: &mut Vec<Vec<f64>>| {
                    let mut row = vec![0.0; s];
                    row[i] = x;
                    row[k2] = 1.0 - x;
                    work[c] = row;
                    energy(work)
                };
                if eval(m1, &mut work) < eval(m2, &mut work) {
                    lo = m1;
                } else {
                    hi = m2;
                }
            }
            let x = (lo + hi) / 2.0;
            let mut row = vec![0.0; s];
            row[i] = x;
            row[k2] = 1.0 - x;
            try_row(row, &mut work);
        }
    }
    best
}

// ---- energy sampling experiment ---------------------------------------------------

/// Monte-Carlo summary of how often the assignment energy of a sampled
/// weighted graph deviates from the exact fractional kernel energy.
pub struct GseSamplingReport {
    pub reference: Rat,
    pub q: usize,
    pub delta: f64,
    pub trials: usize,
    pub exceed: usize,
    pub empirical_rate: f64,
    pub standard_error: f64,
    pub bound: f64,
    pub vacuous: bool,
    pub violated: bool,
    /// Sample size the guarantee asks for; q below it means the run only
    /// probes the regime.
    pub q_threshold: f64,
    pub below_guaranteed_regime: bool,
}

/// Samples q points from a pairwise kernel `trials` times, computes the exact
/// two-part assignment energy of each sampled weighted graph by count-matrix
/// enumeration, and counts deviations beyond delta times the kernel's sup
/// norm against the tail bound 2 exp(-delta^2 q / (8 r^2)).
pub fn gse_sampling_check(
    u: &StepKernel,
    j: &RealArray,
    q: usize,
    delta: f64,
    trials: usize,
    seed: u64,
    limits: &Limits,
) -> Result<GseSamplingReport> {
    if u.r() != 2 || j.s() != 2 {
        return Err(Error::Unsupported(
            "energy sampling".into(),
            "exact reference needs a pairwise kernel and two parts".into(),
        ));
    }
    if j.r() != u.r() {
        return Err(Error::ShapeMismatch("array arity vs kernel".into()));
    }
    let reference = gse_kernel(
        u,
        j,
        KernelEnergyMode::Fractional { restarts: 1, seed: 0 },
        limits,
    )?;
    if !reference.exact {
        return Err(Error::Unsupported(
            "energy sampling".into(),
            "reference energy did not resolve exactly".into(),
        ));
    }
    let t = u.t();
    // Count-matrix search space: classes are exchangeable in the sample.
    let per_class = (q / t + 2) as u128;
    limits.check(per_class.saturating_pow(t as u32))?;
    let ref_f = to_f64(&reference.value);
    let tol = delta * to_f64(&u.max_abs());
    let wf: Vec<f64> = u.weights().iter().map(to_f64).collect();
    let uf: Vec<f64> = u.values().iter().map(to_f64).collect();
    let jf: Vec<f64> = j.entries().iter().map(to_f64).collect();
    let exceed: usize = (0..trials)
        .into_par_iter()
        .map(|i| {
            let mut rng = trial_rng(seed, i as u64);
            let mut counts = vec![0u64; t];
            for _ in 0..q {
                let x: f64 = rng.gen();
                let mut acc = 0.0;
                let mut c = t - 1;
                for (idx, w) in wf.iter().enumerate() {
                    acc += w;
                    if x < acc {
                        c = idx;
                        break;
                    }
                }
                counts[c] += 1;
            }
            let emp = sampled_energy_two_parts(&counts, &uf, &jf, t, q);
            if (emp - ref_f).abs() > tol {
                1
            } else {
                0
            }
        })
        .sum();
    let empirical_rate = exceed as f64 / trials as f64;
    let standard_error = (empirical_rate * (1.0 - empirical_rate) / trials as f64).sqrt();
    let bound = 2.0 * (-delta * delta * q as f64 / 32.0).exp();
    let vacuous = bound >= 1.0;
    let violated = empirical_rate > bound + 3.0 * standard_error;
    let q_threshold = crate::sampling::gse_sample_threshold(2, 2, delta);
    Ok(GseSamplingReport {
        reference: reference.value,
        q,
        delta,
        trials,
        exceed,
        empirical_rate,
        standard_error,
        bound,
        vacuous,
        violated,
        q_threshold,
        below_guaranteed_regime: (q as f64) < q_threshold,
    })
}

/// Exact two-part assignment energy of the sampled weighted graph, maximized
/// over how many points of each source class go to the first part. Sample
/// points of one class are exchangeable, so count matrices cover every
/// assignment; diagonal pairs are excluded like the lift's zero diagonal.
fn sampled_energy_two_parts(
    counts: &[u64],
    uf: &[f64],
    jf: &[f64],
    t: usize,
    q: usize,
) -> f64 {
    let mut m0 = vec![0u64; t];
    let mut best = f64::NEG_INFINITY;
    loop {
        // part counts per class: m0[c] to part 0, counts[c]-m0[c] to part 1
        let mut e = 0.0;
        for c in 0..t {
            for d in 0..t {
                let ucd = uf[c + d * t];
                if ucd == 0.0 {
                    continue;
                }
                let mc = [m0[c] as f64, (counts[c] - m0[c]) as f64];
                let md = [m0[d] as f64, (counts[d] - m0[d]) as f64];
                for (pi, mi) in mc.iter().enumerate() {
                    for (pj, mj) in md.iter().enumerate() {
                        let jv = jf[pi + pj * 2];
                        if jv == 0.0 {
                            continue;
                        }
                        let mut pairs = mi * mj;
                        if c == d && pi == pj {
                            pairs -= mi;
                        }
                        e += jv * ucd * pairs;
                    }
                }
            }
        }
        e /= (q * q) as f64;
        if e > best {
            best = e;
        }
        // odometer over 0..=counts[c]
        let mut advanced = false;
        for c in 0..t {
            if m0[c] < counts[c] {
                m0[c] += 1;
                for slot in m0.iter_mut().take(c) {
                    *slot = 0;
                }
                advanced = true;
                break;
            }
        }
        if !advanced {
            break;
        }
    }
    best
}

// ---- generalized ground state energy ----------------------------------------------

#[derive(Debug, Clone)]
pub struct GgseResult {
    pub value: Rat,
    /// Class label per (r-1)-subset in colex order.
    pub labels: Vec<usize>,
    pub exact: bool,
}

/// Maximal energy over partitions of the (r-1)-subsets into the arrays'
/// class count: for each color, ordered edge tuples contribute the array
/// entry indexed by the classes of the subsets obtained by dropping one
/// coordinate, normalized by n^r.
pub fn ggse(
    h: &ColoredHypergraph,
    js: &[RealArray],
    mode: EnergyMode,
    limits: &Limits,
) -> Result<GgseResult> {
    if js.len() != h.k() {
        return Err(Error::ShapeMismatch(format!(
            "{} arrays for {} colors",
            js.len(),
            h.k()
        )));
    }
    let r = h.r();
    let n = h.n();
    let t = js[0].s();
    for j in js {
        if j.r() != r || j.s() != t {
            return Err(Error::ShapeMismatch(
                "arrays must share arity and class count".into(),
            ));
        }
    }
    let m = binomial(n, r - 1) as usize;
    // Flatten every (edge tuple, dropped coordinate) into subset ranks, and
    // scale all arrays by one common denominator.
    let mut all_entries: Vec<Rat> = Vec::new();
    for j in js {
        all_entries.extend_from_slice(j.entries());
    }
    let (jint_all, denom) = integer_entries(&all_entries);
    let block = t.pow(r as u32);
    let perms = permutations(r);
    let mut tuples: Vec<(usize, Vec<usize>)> = Vec::new(); // (color, subset ranks)
    let subs = subsets(n, r);
    for (rank, e) in subs.iter().enumerate() {
        let color = h.color_at(rank) as usize;
        for p in &perms {
            let ordered: Vec<u32> = p.iter().map(|&i| e[i as usize]).collect();
            let mut ranks = Vec::with_capacity(r);
            for drop in 0..r {
                let mut sub: Vec<u32> = ordered
                    .iter()
                    .enumerate()
                    .filter(|(idx, _)| *idx != drop)
                    .map(|(_, &v)| v)
                    .collect();
                sub.sort_unstable();
                ranks.push(colex_rank(&sub) as usize);
            }
            tuples.push((color, ranks));
        }
    }
    let scale = denom * rat_pow_u(n as u64, r as u32);
    let energy = |labels: &[usize]| -> i128 {
        let mut acc: i128 = 0;
        let mut cell = vec![0usize; r];
        for (color, ranks) in &tuples {
            for (cslot, &rk) in cell.iter_mut().zip(ranks) {
                *cslot = labels[rk];
            }
            acc += jint_all[color * block + cell_index(&cell, t)];
        }
        acc
    };
    match mode {
        EnergyMode::Exact => {
            let total = (t as u128).checked_pow(m as u32).unwrap_or(u128::MAX);
            limits.check(total)?;
            let mut labels = vec![0usize; m];
            let mut best: Option<(i128, Vec<usize>)> = None;
            loop {
                let e = energy(&labels);
                if best.as_ref().map_or(true, |(b, _)| e > *b) {
                    best = Some((e, labels.clone()));
                }
                if !next_lex(&mut labels, t) {
                    break;
                }
            }
            let (e, labels) = best.unwrap();
            Ok(GgseResult { value: rat_i128(e) / scale, labels, exact: true })
        }
        EnergyMode::Local { restarts, seed } => {
            let results: Vec<(i128, Vec<usize>)> = (0..restarts.max(1))
                .into_par_iter()
                .map(|i| {
                    let mut rng = trial_rng(seed, i as u64);
                    let mut labels: Vec<usize> =
                        (0..m).map(|_| rng.gen_range(0..t)).collect();
                    let mut value = energy(&labels);
                    loop {
                        let mut improved = false;
                        for slot in 0..m {
                            let old = labels[slot];
                            let mut best_l = old;
                            let mut best_e = value;
                            for l in 0..t {
                                if l == old {
                                    continue;
                                }
                                labels[slot] = l;
                                let e = energy(&labels);
                                if e > best_e {
                                    best_e = e;
                                    best_l = l;
                                }
                            }
                            labels[slot] = best_l;
                            if best_e > value {
                                value = best_e;
                                improved = true;
                            }
                        }
                        if !improved {
                            break;
                        }
                    }
                    (value, labels)
                })
                .collect();
            let (value, labels) = results
                .into_iter()
                .max_by(|a, b| a.0.cmp(&b.0).then_with(|| b.1.cmp(&a.1)))
                .unwrap();
            Ok(GgseResult { value: rat_i128(value) / scale, labels, exact: false })
        }
    }
}

// ---- partition families and density tensors ----------------------------------------

/// One partition per subset size 1..r-1: labels in colex order of the
/// subsets, classes may be empty.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PartitionFamily {
    n: usize,
    r: usize,
    /// levels[s-1] assigns each s-subset a class below `classes[s-1]`.
    levels: Vec<Vec<usize>>,
    classes: Vec<usize>,
}

impl PartitionFamily {
    pub fn new(n: usize, r: usize, levels: Vec<Vec<usize>>, classes: Vec<usize>) -> Result<Self> {
        if r < 2 {
            return Err(Error::RangeError("families exist for r >= 2".into()));
        }
        if levels.len() != r - 1 || classes.len() != r - 1 {
            return Err(Error::ShapeMismatch(format!(
                "{} levels and {} class counts for r = {}",
                levels.len(),
                classes.len(),
                r
            )));
        }
        for (idx, level) in levels.iter().enumerate() {
            let s = idx + 1;
            let want = binomial(n, s) as usize;
            if level.len() != want {
                return Err(Error::ShapeMismatch(format!(
                    "level {} with {} labels, expected {}",
                    s,
                    level.len(),
                    want
                )));
            }
            if classes[idx] == 0 || level.iter().any(|&l| l >= classes[idx]) {
                return Err(Error::RangeError(format!(
                    "level {} labels must stay below {}",
                    s, classes[idx]
                )));
            }
        }
        Ok(PartitionFamily { n, r, levels, classes })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn r(&self) -> usize {
        self.r
    }

    pub fn classes(&self) -> &[usize] {
        &self.classes
    }

    pub fn level(&self, s: usize) -> &[usize] {
        &self.levels[s - 1]
    }

    /// Class of a sorted subset.
    pub fn class_of(&self, subset: &[u32]) -> usize {
        self.levels[subset.len() - 1][colex_rank(subset) as usize]
    }
}

/// Per-level class densities and, per class map over proper projections,
/// normalized ordered edge-tuple counts.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DensityTensor {
    pub r: usize,
    pub n: usize,
    /// classes per level, levels 1..r-1.
    pub classes: Vec<usize>,
    /// rho[s-1][i] = (number of s-subsets in class i) / n^s.
    pub rho: Vec<Vec<Rat>>,
    /// mu indexed by the mixed-radix class map over proper nonempty subsets
    /// of the coordinate set, ordered by (size, colex), first digit fastest.
    pub mu: Vec<Rat>,
}

impl DensityTensor {
    /// Proper nonempty subsets of [r] in (size, colex) order, as coordinate
    /// index lists.
    pub fn projections(r: usize) -> Vec<Vec<usize>> {
        let mut out = Vec::new();
        for s in 1..r {
            for sub in subsets(r, s) {
                out.push(sub.iter().map(|&x| x as usize).collect());
            }
        }
        out
    }

    pub fn mu_len(r: usize, classes: &[usize]) -> usize {
        Self::projections(r)
            .iter()
            .map(|p| classes[p.len() - 1])
            .product()
    }

    /// Sup-norm distance across rho and mu jointly.
    pub fn sup_distance(&self, other: &DensityTensor) -> Result<Rat> {
        if self.r != other.r || self.classes != other.classes {
            return Err(Error::ShapeMismatch("tensors with different shapes".into()));
        }
        let mut worst = rzero();
        for (a, b) in self
            .rho
            .iter()
            .flatten()
            .zip(other.rho.iter().flatten())
            .chain(self.mu.iter().zip(other.mu.iter()))
        {
            let d = (a - b).abs();
            if d > worst {
                worst = d;
            }
        }
        Ok(worst)
    }
}

/// Exact density tensor of a graph relative to a partition family.
pub fn density_tensor_of(
    h: &Hypergraph,
    p: &PartitionFamily,
    limits: &Limits,
) -> Result<DensityTensor> {
    if p.r() != h.r() || p.n() != h.n() {
        return Err(Error::ShapeMismatch(format!(
            "family on ({}, {}) vs graph ({}, {})",
            p.r(),
            p.n(),
            h.r(),
            h.n()
        )));
    }
    let r = h.r();
    let n = h.n();
    limits.check((n as u128).saturating_pow(r as u32))?;
    let mut rho = Vec::new();
    for s in 1..r {
        let mut hist = vec![0u64; p.classes()[s - 1]];
        for &l in p.level(s) {
            hist[l] += 1;
        }
        let denom = rat_pow_u(n as u64, s as u32);
        rho.push(hist.into_iter().map(|c| rat_u(c) / &denom).collect());
    }
    let projections = DensityTensor::projections(r);
    let radices: Vec<usize> = projections.iter().map(|pr| p.classes()[pr.len() - 1]).collect();
    let mut counts = vec![0u64; radices.iter().product::<usize>().max(1)];
    let mut sorted = vec![0u32; r];
    let perms = permutations(r);
    for e in h.edges() {
        for perm in &perms {
            let ordered: Vec<u32> = perm.iter().map(|&i| e[i as usize]).collect();
            let mut index = 0usize;
            let mut stride = 1usize;
            for (pr, &radix) in projections.iter().zip(&radices) {
                let m = pr.len();
                for (slot, &coord) in sorted.iter_mut().zip(pr.iter()) {
                    *slot = ordered[coord];
                }
                sorted[..m].sort_unstable();
                let label = p.levels[m - 1][colex_rank(&sorted[..m]) as usize];
                index += label * stride;
                stride *= radix;
            }
            counts[index] += 1;
        }
    }
    let denom = rat_pow_u(n as u64, r as u32);
    let mu = counts.into_iter().map(|c| rat_u(c) / &denom).collect();
    Ok(DensityTensor { r, n, classes: p.classes().to_vec(), rho, mu })
}

#[derive(Debug, Clone, Copy)]
pub enum TensorSearchMode {
    /// Enumerates families level by level, pruning on the level densities.
    Exact,
    /// Searches a q-vertex sample instead, with the tolerance widened by
    /// `slack`; evidence, not proof.
    Sampled { q: usize, seed: u64 },
}

/// Finds a partition family whose density tensor is within tol (sup-norm) of
/// the target, or None. Exact mode scans lexicographically, so the first hit
/// is the smallest witness.
pub fn satisfies_tensor(
    h: &Hypergraph,
    target: &DensityTensor,
    tol: &Rat,
    mode: TensorSearchMode,
    limits: &Limits,
) -> Result<Option<PartitionFamily>> {
    match mode {
        TensorSearchMode::Exact => satisfies_tensor_exact(h, target, tol, limits),
        TensorSearchMode::Sampled { q, seed } => {
            let mut rng = trial_rng(seed, 0);
            let colored = h.to_colored();
            let (sample, _) = colored.sample_q(q, &mut rng)?;
            let sub = sample.color_class(1);
            let scaled = DensityTensor {
                r: target.r,
                n: q,
                classes: target.classes.clone(),
                rho: target.rho.clone(),
                mu: target.mu.clone(),
            };
            satisfies_tensor_exact(&sub, &scaled, tol, limits)
        }
    }
}

fn satisfies_tensor_exact(
    h: &Hypergraph,
    target: &DensityTensor,
    tol: &Rat,
    limits: &Limits,
) -> Result<Option<PartitionFamily>> {
    let r = h.r();
    let n = h.n();
    if target.r != r {
        return Err(Error::ShapeMismatch("tensor arity vs graph".into()));
    }
    // Per level, collect labelings whose class histogram matches rho.
    let mut level_candidates: Vec<Vec<Vec<usize>>> = Vec::new();
    for s in 1..r {
        let k = target.classes[s - 1];
        let m = binomial(n, s) as usize;
        limits.check((k as u128).saturating_pow(m as u32))?;
        let denom = rat_pow_u(n as u64, s as u32);
        let mut good = Vec::new();
        let mut labels = vec![0usize; m];
        loop {
            let mut hist = vec![0u64; k];
            for &l in &labels {
                hist[l] += 1;
            }
            let ok = hist.iter().zip(&target.rho[s - 1]).all(|(&c, want)| {
                let have = rat_u(c) / &denom;
                (have - want).abs() <= *tol
            });
            if ok {
                good.push(labels.clone());
            }
            if !next_lex(&mut labels, k) {
                break;
            }
        }
        if good.is_empty() {
            return Ok(None);
        }
        level_candidates.push(good);
    }
    // Cartesian product over levels, checking mu exactly.
    let mut pick = vec![0usize; r - 1];
    loop {
        let levels: Vec<Vec<usize>> = pick
            .iter()
            .enumerate()
            .map(|(i, &c)| level_candidates[i][c].clone())
            .collect();
        let family = PartitionFamily::new(n, r, levels, target.classes.clone())?;
        let tensor = density_tensor_of(h, &family, limits)?;
        if tensor.sup_distance(target)? <= *tol {
            return Ok(Some(family));
        }
        let mut advanced = false;
        for i in (0..pick.len()).rev() {
            if pick[i] + 1 < level_candidates[i].len() {
                pick[i] += 1;
                for slot in pick.iter_mut().skip(i + 1) {
                    *slot = 0;
                }
                advanced = true;
                break;
            }
        }
        if !advanced {
            break;
        }
    }
    Ok(None)
}
