//! Deterministic instance generators. Each kind derives its RNG stream from
//! the seed alone, so equal invocations produce byte-identical files.

use std::collections::BTreeMap;
use std::fs;

use rand::Rng;

use hypertest_core::comb::{for_each_subset, for_each_tuple};
use hypertest_core::graphs::{write_hypergraph, Hypergraph};
use hypertest_core::kernels::{random_colored_kernel, write_colored_kernel, write_step_kernel, StepKernel};
use hypertest_core::rat::rone;
use hypertest_core::rngutil::trial_rng;

use crate::CliError;

const STREAM_HYPERGRAPH: u64 = 1;
const STREAM_KERNEL: u64 = 2;
const STREAM_PLANTED: u64 = 3;

#[derive(Debug, Default)]
pub struct Params(BTreeMap<String, String>);

impl Params {
    pub fn parse(args: &[String]) -> Result<Params, CliError> {
        let mut map = BTreeMap::new();
        for arg in args {
            let (key, value) = arg
                .split_once('=')
                .ok_or_else(|| CliError::usage(format!("parameter `{arg}` is not key=value")))?;
            if map.insert(key.trim().to_string(), value.trim().to_string()).is_some() {
                return Err(CliError::usage(format!("duplicate parameter `{}`", key.trim())));
            }
        }
        Ok(Params(map))
    }

    fn get(&self, key: &str) -> Option<&str> {
        self.0.get(key).map(String::as_str)
    }

    fn require(&self, key: &str) -> Result<&str, CliError> {
        self.get(key).ok_or_else(|| CliError::usage(format!("missing parameter `{key}`")))
    }

    fn usize_or(&self, key: &str, default: usize) -> Result<usize, CliError> {
        match self.get(key) {
            None => Ok(default),
            Some(v) => v
                .parse()
                .map_err(|_| CliError::usage(format!("cannot parse `{v}` for parameter `{key}`"))),
        }
    }

    fn prob_or(&self, key: &str, default: f64) -> Result<f64, CliError> {
        let value = match self.get(key) {
            None => default,
            Some(v) => v
                .parse::<f64>()
                .ok()
                .or_else(|| hypertest_core::rat::rat_from_text(v).map(|r| hypertest_core::rat::to_f64(&r)))
                .ok_or_else(|| CliError::usage(format!("cannot parse `{v}` for parameter `{key}`")))?,
        };
        if !(0.0..=1.0).contains(&value) {
            return Err(CliError::usage(format!("parameter `{key}` must lie in [0, 1]")));
        }
        Ok(value)
    }
}

pub fn generate(kind: &str, params: &Params, seed: u64) -> Result<String, CliError> {
    match kind {
        "random-hypergraph" => {
            let n = params.require("n")?.parse().map_err(|_| CliError::usage("cannot parse `n`"))?;
            let r = params.usize_or("r", 2)?;
            let p = params.prob_or("p", 0.5)?;
            Ok(write_hypergraph(&random_hypergraph(n, r, p, seed)?))
        }
        "random-kernel" => {
            let r = params.usize_or("r", 2)?;
            let t = params.usize_or("t", 3)?;
            let k = params.usize_or("k", 2)?;
            let denom = params.usize_or("denom", 8)?;
            if r == 0 || t == 0 || denom == 0 {
                return Err(CliError::usage("r, t, denom must be positive"));
            }
            if t.pow(r as u32) > 1 << 16 {
                return Err(CliError::usage("t^r too large for a kernel file"));
            }
            let mut rng = trial_rng(seed, STREAM_KERNEL);
            // k = 0 writes a plain signed step kernel instead of a coloring.
            if k == 0 {
                Ok(write_step_kernel(&random_signed_kernel(r, t, denom as u32, &mut rng)))
            } else {
                Ok(write_colored_kernel(&random_colored_kernel(r, t, k, denom as u32, &mut rng)))
            }
        }
        "blowup" => {
            let path = params.require("in")?;
            let b = params.usize_or("b", 2)?;
            let text = fs::read_to_string(path)
                .map_err(|e| CliError::usage(format!("cannot read {path}: {e}")))?;
            let base = hypertest_core::graphs::read_hypergraph(&text).map_err(CliError::from_core)?;
            Ok(write_hypergraph(&blowup(&base, b)?))
        }
        "planted-partition" => {
            let n = params.require("n")?.parse().map_err(|_| CliError::usage("cannot parse `n`"))?;
            let across = params.prob_or("across", 0.9)?;
            let within = params.prob_or("within", 0.1)?;
            Ok(write_hypergraph(&planted_partition(n, across, within, seed)?))
        }
        other => Err(CliError::usage(format!(
            "unknown kind `{other}` (random-hypergraph | random-kernel | blowup | planted-partition)"
        ))),
    }
}

/// Signed step kernel with entries 2v - 1 for v the [0,1] entries of a
/// random colored kernel's first color; sup norm at most 1.
pub fn random_signed_kernel<R: Rng>(r: usize, t: usize, denom: u32, rng: &mut R) -> StepKernel {
    let base = random_colored_kernel(r, t, 2, denom, rng).component(0);
    let values = base.values().iter().map(|v| v + v - rone()).collect();
    StepKernel::new(r, base.weights().to_vec(), values).unwrap()
}

pub fn random_hypergraph(n: usize, r: usize, p: f64, seed: u64) -> Result<Hypergraph, CliError> {
    if r == 0 || n < r {
        return Err(CliError::usage("need n >= r >= 1"));
    }
    if !(0.0..=1.0).contains(&p) {
        return Err(CliError::usage("edge probability must lie in [0, 1]"));
    }
    let mut rng = trial_rng(seed, STREAM_HYPERGRAPH);
    let mut edges = Vec::new();
    for_each_subset(n, r, |s| {
        if rng.gen::<f64>() < p {
            edges.push(s.to_vec());
        }
    });
    Hypergraph::from_edges(r, n, edges).map_err(CliError::from_core)
}

/// Every vertex becomes `b` clones; an edge becomes the b^r edges over its
/// clones. Vertex v's clones are v*b .. v*b+b-1.
pub fn blowup(base: &Hypergraph, b: usize) -> Result<Hypergraph, CliError> {
    if b == 0 {
        return Err(CliError::usage("blowup factor must be positive"));
    }
    let r = base.r();
    let mut edges = Vec::new();
    for e in base.edges() {
        for_each_tuple(b, r, |clones| {
            let mut edge: Vec<u32> =
                e.iter().zip(clones).map(|(&v, &c)| v * b as u32 + c as u32).collect();
            edge.sort_unstable();
            edges.push(edge);
        });
    }
    Hypergraph::from_edges(r, base.n() * b, edges).map_err(CliError::from_core)
}

/// 2-graph on `n` vertices split into two near-halves; pairs crossing the
/// split appear with probability `across`, pairs inside a side with
/// probability `within`. With across > within the split is the natural
/// max-cut witness.
pub fn planted_partition(n: usize, across: f64, within: f64, seed: u64) -> Result<Hypergraph, CliError> {
    if n < 2 {
        return Err(CliError::usage("need n >= 2"));
    }
    let half = n.div_ceil(2);
    let mut rng = trial_rng(seed, STREAM_PLANTED);
    let mut edges = Vec::new();
    for_each_subset(n, 2, |s| {
        let crossing = (s[0] as usize) < half && (s[1] as usize) >= half;
        let p = if crossing { across } else { within };
        if rng.gen::<f64>() < p {
            edges.push(s.to_vec());
        }
    });
    Hypergraph::from_edges(2, n, edges).map_err(CliError::from_core)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn same_seed_same_file() {
        let p = Params::parse(&["n=9".into(), "p=3/5".into()]).unwrap();
        let a = generate("random-hypergraph", &p, 5).unwrap();
        let b = generate("random-hypergraph", &p, 5).unwrap();
        assert_eq!(a, b);
        assert_ne!(a, generate("random-hypergraph", &p, 6).unwrap());
    }

    #[test]
    fn n_equals_r_single_edge() {
        let g = random_hypergraph(3, 3, 1.0, 1).unwrap();
        assert_eq!(g.edge_count(), 1);
        assert!(g.has_edge(&[0, 1, 2]));
    }

    #[test]
    fn blowup_multiplies_edges() {
        let base = Hypergraph::from_edges(2, 3, vec![vec![0, 1], vec![1, 2]]).unwrap();
        let big = blowup(&base, 3).unwrap();
        assert_eq!(big.n(), 9);
        assert_eq!(big.edge_count(), 2 * 9);
        assert!(big.has_edge(&[0, 3]));
        assert!(!big.has_edge(&[0, 1]));
    }

    #[test]
    fn planted_partition_respects_probabilities() {
        let g = planted_partition(40, 1.0, 0.0, 2).unwrap();
        let expected = 20u64 * 20;
        assert_eq!(g.edge_count() as u64, expected);
        for e in g.edges() {
            assert!(e[0] < 20 && e[1] >= 20);
        }
    }
}
