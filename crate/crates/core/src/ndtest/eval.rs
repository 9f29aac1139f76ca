//! Exact and heuristic evaluation of ND parameters, and the sampling tester.

use super::witness::NDParameter;
use crate::graphs::{enumerate_colorings, Coloring, Hypergraph};
use crate::rat::{rat_abs, Rat};
use crate::rngutil::trial_rng;
use crate::{Error, Limits, Result};
use rand::Rng;
use rayon::prelude::*;

#[derive(Debug, Clone, Copy)]
pub enum EvalMode {
    /// Witness-specific exact maximization when available, otherwise full
    /// enumeration of `k_sub^slots` refinements (guarded).
    Exact,
    /// Restarted single-slot recoloring ascent. Value is a lower bound.
    Search { restarts: usize, seed: u64 },
}

/// Result of maximizing a witness over refinements.
pub struct NDEvaluation {
    pub value: Rat,
    pub coloring: Coloring,
    /// True when the maximum is certified (exact path), false for search.
    pub exact: bool,
}

/// `f(G) = max over k_sub-refinements of the witness value`.
pub fn nd_eval(
    param: &NDParameter,
    g: &Hypergraph,
    mode: EvalMode,
    limits: &Limits,
) -> Result<NDEvaluation> {
    let w = param.witness();
    match mode {
        EvalMode::Exact => {
            if let Some((value, coloring)) = w.exact_nd(g, limits)? {
                return Ok(NDEvaluation { value, coloring, exact: true });
            }
            let base = g.to_colored();
            let mut best: Option<(Rat, Coloring)> = None;
            for coloring in enumerate_colorings(&base, w.k_sub(), limits)? {
                let v = w.eval(coloring.refined(), limits)?;
                if best.as_ref().map_or(true, |(bv, _)| v > *bv) {
                    best = Some((v, coloring));
                }
            }
            let (value, coloring) = best.expect("at least one refinement exists");
            Ok(NDEvaluation { value, coloring, exact: true })
        }
        EvalMode::Search { restarts, seed } => {
            let base = g.to_colored();
            let k_sub = w.k_sub();
            let slots = base.slot_count();
            let runs: Vec<(Rat, Vec<u32>)> = (0..restarts.max(1) as u64)
                .into_par_iter()
                .map(|restart| {
                    let mut rng = trial_rng(seed, restart);
                    let mut subs: Vec<u32> =
                        (0..slots).map(|_| rng.gen_range(0..k_sub as u32)).collect();
                    let mut value = w.eval(
                        Coloring::refine(&base, k_sub, &subs)?.refined(),
                        limits,
                    )?;
                    // steepest single-slot moves until no slot improves
                    loop {
                        let mut improved = false;
                        for i in 0..slots {
                            let cur = subs[i];
                            let mut best_c = cur;
                            let mut best_v = value.clone();
                            for c in 0..k_sub as u32 {
                                if c == cur {
                                    continue;
                                }
                                subs[i] = c;
                                let v = w.eval(
                                    Coloring::refine(&base, k_sub, &subs)?.refined(),
                                    limits,
                                )?;
                                if v > best_v {
                                    best_v = v;
                                    best_c = c;
                                }
                            }
                            subs[i] = best_c;
                            if best_c != cur {
                                value = best_v;
                                improved = true;
                            }
                        }
                        if !improved {
                            break;
                        }
                    }
                    Ok((value, subs))
                })
                .collect::<Result<_>>()?;
            let (value, subs) = runs
                .into_iter()
                .max_by(|a, b| a.0.cmp(&b.0))
                .expect("restarts >= 1");
            Ok(NDEvaluation {
                value,
                coloring: Coloring::refine(&base, k_sub, &subs)?,
                exact: false,
            })
        }
    }
}

/// One sampling experiment for an ND parameter.
#[derive(Debug)]
pub struct TesterReport {
    /// Value being estimated on the host graph.
    pub reference: Rat,
    /// True when the reference came from this run's exact evaluation.
    pub reference_exact: bool,
    pub eps: f64,
    pub q: usize,
    pub trials: usize,
    /// Trials whose sample estimate missed the reference by more than eps.
    pub failures: usize,
    pub failure_rate: f64,
    /// True when every per-sample evaluation was certified exact.
    pub samples_exact: bool,
    pub declared_budget: u64,
}

/// Estimates `f(G)` from induced samples of size `q`, `trials` times, and
/// reports the empirical rate of deviations above `eps`.
///
/// The host value is taken from `reference` when supplied (planted instances
/// where the optimum is known); otherwise it is computed exactly, which
/// bounds the feasible host size.
#[allow(clippy::too_many_arguments)]
pub fn tester(
    param: &NDParameter,
    g: &Hypergraph,
    q: usize,
    eps: f64,
    trials: usize,
    seed: u64,
    mode: EvalMode,
    reference: Option<Rat>,
    limits: &Limits,
) -> Result<TesterReport> {
    if q > g.n() {
        return Err(Error::InvalidSample(q, g.n()));
    }
    if eps <= 0.0 {
        return Err(Error::RangeError("eps must be positive".into()));
    }
    let (reference, reference_exact) = match reference {
        Some(v) => (v, false),
        None => {
            let host = nd_eval(param, g, EvalMode::Exact, limits)?;
            (host.value, true)
        }
    };
    let colored = g.to_colored();
    let eps_rat = Rat::from_float(eps)
        .ok_or_else(|| Error::RangeError("eps is not finite".into()))?;
    let outcomes: Vec<(bool, bool)> = (0..trials as u64)
        .into_par_iter()
        .map(|trial| {
            let mut rng = trial_rng(seed, trial);
            let (sub, _) = colored.sample_q(q, &mut rng)?;
            let sample = sub.color_class(1);
            let est = nd_eval(param, &sample, mode, limits)?;
            let miss = rat_abs(&(est.value.clone() - &reference)) > eps_rat;
            Ok((miss, est.exact))
        })
        .collect::<Result<_>>()?;
    let failures = outcomes.iter().filter(|(miss, _)| *miss).count();
    let samples_exact = outcomes.iter().all(|(_, exact)| *exact);
    Ok(TesterReport {
        reference,
        reference_exact,
        eps,
        q,
        trials,
        failures,
        failure_rate: failures as f64 / trials.max(1) as f64,
        samples_exact,
        declared_budget: param.witness().sample_complexity(eps),
    })
}
