//! Existential-universal first-order checks over a hypergraph with optional
//! symmetric predicate symbols.

use crate::comb::binomial;
use crate::graphs::Hypergraph;
use crate::{Error, Limits, Result};

/// Quantifier-free matrix. Variables are indices into the combined
/// assignment: existential variables first, then universal ones.
#[derive(Debug, Clone)]
pub enum FOMatrix {
    Bool(bool),
    /// Adjacency of r distinct vertices; repeated values make it false.
    Adj(Vec<usize>),
    Eq(usize, usize),
    /// Predicate symbol applied to variables; symmetric, so the argument
    /// order is irrelevant.
    Pred(usize, Vec<usize>),
    Not(Box<FOMatrix>),
    And(Vec<FOMatrix>),
    Or(Vec<FOMatrix>),
}

/// Prenex ∃..∃∀..∀ formula with declared predicate arities.
#[derive(Debug, Clone)]
pub struct FOFormula {
    pub exists: usize,
    pub forall: usize,
    pub predicate_arities: Vec<usize>,
    pub matrix: FOMatrix,
}

/// Symmetric relation table: membership of sorted value tuples.
#[derive(Debug, Clone, Default)]
pub struct PredicateTable {
    pub arity: usize,
    members: std::collections::HashSet<Vec<u32>>,
}

impl PredicateTable {
    pub fn new(arity: usize, tuples: Vec<Vec<u32>>) -> Result<Self> {
        let mut members = std::collections::HashSet::new();
        for mut t in tuples {
            if t.len() != arity {
                return Err(Error::ShapeMismatch(format!(
                    "tuple of {} entries in an arity-{arity} table",
                    t.len()
                )));
            }
            t.sort_unstable();
            members.insert(t);
        }
        Ok(PredicateTable { arity, members })
    }

    pub fn holds(&self, values: &[u32]) -> bool {
        let mut key = values.to_vec();
        key.sort_unstable();
        self.members.contains(&key)
    }
}

#[derive(Debug, Clone, Copy)]
pub enum FOCheckMode {
    /// Evaluate with the supplied relation tables.
    FixedRelations,
    /// Existentially quantify the relation tables too: true when some
    /// assignment of symmetric tables satisfies the formula.
    ND,
}

#[derive(Debug)]
pub struct FOReport {
    pub value: bool,
    /// Witness for the existential block when the formula holds.
    pub witness: Option<Vec<u32>>,
    pub tables_tried: u64,
}

fn validate(matrix: &FOMatrix, vars: usize, arities: &[usize], r: usize) -> Result<()> {
    match matrix {
        FOMatrix::Bool(_) => Ok(()),
        FOMatrix::Adj(vs) => {
            if vs.len() != r {
                return Err(Error::ShapeMismatch(format!(
                    "adjacency over {} variables in an r={r} host",
                    vs.len()
                )));
            }
            vs.iter().try_for_each(|&v| {
                if v < vars {
                    Ok(())
                } else {
                    Err(Error::RangeError(format!("variable {v} out of range")))
                }
            })
        }
        FOMatrix::Eq(a, b) => {
            if *a < vars && *b < vars {
                Ok(())
            } else {
                Err(Error::RangeError("equality variable out of range".into()))
            }
        }
        FOMatrix::Pred(p, vs) => {
            let arity = *arities
                .get(*p)
                .ok_or_else(|| Error::RangeError(format!("predicate {p} undeclared")))?;
            if vs.len() != arity {
                return Err(Error::ShapeMismatch(format!(
                    "predicate {p} of arity {arity} applied to {} variables",
                    vs.len()
                )));
            }
            vs.iter().try_for_each(|&v| {
                if v < vars {
                    Ok(())
                } else {
                    Err(Error::RangeError(format!("variable {v} out of range")))
                }
            })
        }
        FOMatrix::Not(inner) => validate(inner, vars, arities, r),
        FOMatrix::And(list) | FOMatrix::Or(list) => {
            list.iter().try_for_each(|m| validate(m, vars, arities, r))
        }
    }
}

fn eval_matrix(
    matrix: &FOMatrix,
    assign: &[u32],
    g: &Hypergraph,
    tables: &[PredicateTable],
) -> bool {
    match matrix {
        FOMatrix::Bool(b) => *b,
        FOMatrix::Adj(vs) => {
            let mut vals: Vec<u32> = vs.iter().map(|&v| assign[v]).collect();
            vals.sort_unstable();
            vals.windows(2).all(|w| w[0] != w[1]) && g.has_edge(&vals)
        }
        FOMatrix::Eq(a, b) => assign[*a] == assign[*b],
        FOMatrix::Pred(p, vs) => {
            let vals: Vec<u32> = vs.iter().map(|&v| assign[v]).collect();
            tables[*p].holds(&vals)
        }
        FOMatrix::Not(inner) => !eval_matrix(inner, assign, g, tables),
        FOMatrix::And(list) => list.iter().all(|m| eval_matrix(m, assign, g, tables)),
        FOMatrix::Or(list) => list.iter().any(|m| eval_matrix(m, assign, g, tables)),
    }
}

/// Walks mixed-radix tuples over 0..n of the given length; returns whether
/// the callback accepted every tuple (callback returning false stops).
fn all_tuples<F: FnMut(&[u32]) -> bool>(n: usize, len: usize, mut f: F) -> bool {
    let mut cur = vec![0u32; len];
    loop {
        if !f(&cur) {
            return false;
        }
        let mut i = 0;
        loop {
            if i == len {
                return true;
            }
            cur[i] += 1;
            if (cur[i] as usize) < n {
                break;
            }
            cur[i] = 0;
            i += 1;
        }
    }
}

fn check_fixed(
    g: &Hypergraph,
    tables: &[PredicateTable],
    formula: &FOFormula,
) -> Result<Option<Vec<u32>>> {
    let n = g.n();
    if n == 0 {
        return Err(Error::RangeError("empty host".into()));
    }
    let mut found: Option<Vec<u32>> = None;
    all_tuples(n, formula.exists, |evars| {
        let ok = all_tuples(n, formula.forall, |uvars| {
            let mut assign = Vec::with_capacity(formula.exists + formula.forall);
            assign.extend_from_slice(evars);
            assign.extend_from_slice(uvars);
            eval_matrix(&formula.matrix, &assign, g, tables)
        });
        if ok {
            found = Some(evars.to_vec());
            false
        } else {
            true
        }
    });
    Ok(found)
}

/// Enumerates symmetric tables of the given arity over 0..n: one bit per
/// sorted multiset.
fn table_space(n: usize, arity: usize) -> Vec<Vec<u32>> {
    // multisets of size `arity` from 0..n as sorted tuples
    let mut out = Vec::new();
    let mut cur = vec![0u32; arity];
    if arity == 0 {
        out.push(Vec::new());
        return out;
    }
    loop {
        out.push(cur.clone());
        // nondecreasing successor
        let mut i = arity;
        loop {
            if i == 0 {
                return out;
            }
            i -= 1;
            if (cur[i] as usize) < n - 1 {
                cur[i] += 1;
                for j in i + 1..arity {
                    cur[j] = cur[i];
                }
                break;
            }
        }
    }
}

/// Brute-force truth of a prenex ∃∀ formula, optionally with existential
/// second-order search over symmetric predicate tables.
pub fn fo_property_check(
    g: &Hypergraph,
    tables: &[PredicateTable],
    formula: &FOFormula,
    mode: FOCheckMode,
    limits: &Limits,
) -> Result<FOReport> {
    let vars = formula.exists + formula.forall;
    validate(&formula.matrix, vars, &formula.predicate_arities, g.r())?;
    let n = g.n() as u128;
    let assignments = n
        .checked_pow(vars as u32)
        .ok_or(Error::EnumerationTooLarge { needed: u128::MAX, limit: 0 })?;
    match mode {
        FOCheckMode::FixedRelations => {
            if tables.len() != formula.predicate_arities.len() {
                return Err(Error::ShapeMismatch(format!(
                    "{} tables for {} predicate symbols",
                    tables.len(),
                    formula.predicate_arities.len()
                )));
            }
            for (i, (table, &arity)) in
                tables.iter().zip(formula.predicate_arities.iter()).enumerate()
            {
                if table.arity != arity {
                    return Err(Error::ShapeMismatch(format!(
                        "table {i} has arity {}, formula declares {arity}",
                        table.arity
                    )));
                }
            }
            limits.check(assignments)?;
            let witness = check_fixed(g, tables, formula)?;
            Ok(FOReport { value: witness.is_some(), witness, tables_tried: 0 })
        }
        FOCheckMode::ND => {
            let spaces: Vec<Vec<Vec<u32>>> = formula
                .predicate_arities
                .iter()
                .map(|&a| table_space(g.n(), a))
                .collect();
            let mut total: u128 = 1;
            for s in &spaces {
                // each table is a u64 mask over its multiset space
                if s.len() >= 64 {
                    return Err(Error::EnumerationTooLarge {
                        needed: pow2_saturating(s.len()),
                        limit: limits.max_enumeration,
                    });
                }
                total = total.saturating_mul(1u128 << s.len());
            }
            limits.check(total.saturating_mul(assignments))?;
            // odometer over the joint table masks
            let mut masks: Vec<u64> = vec![0; spaces.len()];
            let mut tried = 0u64;
            loop {
                tried += 1;
                let tables: Vec<PredicateTable> = spaces
                    .iter()
                    .zip(masks.iter())
                    .zip(formula.predicate_arities.iter())
                    .map(|((space, &mask), &arity)| {
                        let tuples: Vec<Vec<u32>> = space
                            .iter()
                            .enumerate()
                            .filter(|(i, _)| mask >> i & 1 == 1)
                            .map(|(_, t)| t.clone())
                            .collect();
                        PredicateTable::new(arity, tuples)
                    })
                    .collect::<Result<_>>()?;
                if let Some(witness) = check_fixed(g, &tables, formula)? {
                    return Ok(FOReport { value: true, witness: Some(witness), tables_tried: tried });
                }
                let mut i = 0;
                loop {
                    if i == masks.len() {
                        return Ok(FOReport { value: false, witness: None, tables_tried: tried });
                    }
                    masks[i] += 1;
                    if masks[i] < (1u64 << spaces[i].len()) {
                        break;
                    }
                    masks[i] = 0;
                    i += 1;
                }
            }
        }
    }
}

/// Bits needed for one symmetric arity-a table over n vertices; lets
/// callers size an ND search before running it.
pub fn table_bits(n: usize, arity: usize) -> u64 {
    if arity == 0 {
        1
    } else {
        binomial(n + arity - 1, arity)
    }
}

fn pow2_saturating(bits: usize) -> u128 {
    if bits >= 127 {
        u128::MAX
    } else {
        1u128 << bits
    }
}
