//! Random instance family shared by the integration tests.
//!
//! Costs `γx² + βx + μ` with `γ ∈ [0.5, 2]`, `β ∈ [1, 5]`, `μ ∈ [0, 1]`;
//! intervals `[lo, lo + w]` with `lo ∈ [0, 0.5]`, `w ∈ [0.5, 1.5]`; the total
//! sits 20–80% of the way between `Σlo` and `Σhi` and is split equally.
//! Graphs are a random spanning tree plus each remaining pair with
//! probability 0.3.

#![allow(dead_code)]

use dlm_core::case_io::equal_shares;
use dlm_core::{GraphTopology, LocalProblem};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub struct Instance {
    pub problems: Vec<LocalProblem>,
    pub graph: GraphTopology,
    pub total: f64,
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn random_connected_graph(rng: &mut ChaCha8Rng, n: usize, p_extra: f64) -> GraphTopology {
    let mut edges = Vec::new();
    for i in 1..n {
        let j = rng.gen_range(0..i);
        edges.push((j, i));
    }
    for i in 0..n {
        for j in i + 1..n {
            if !edges.contains(&(i, j)) && rng.gen_bool(p_extra) {
                edges.push((i, j));
            }
        }
    }
    GraphTopology::connected(n, &edges).unwrap()
}

/// Problems and their total, without a graph (any `n ≥ 1`).
pub fn random_problems(rng: &mut ChaCha8Rng, n: usize) -> (Vec<LocalProblem>, f64) {
    let coeffs: Vec<(f64, f64, f64, f64, f64)> = (0..n)
        .map(|_| {
            let lo = rng.gen_range(0.0..=0.5);
            (
                rng.gen_range(0.5..=2.0),
                rng.gen_range(1.0..=5.0),
                rng.gen_range(0.0..=1.0),
                lo,
                lo + rng.gen_range(0.5..=1.5),
            )
        })
        .collect();
    let lo: f64 = coeffs.iter().map(|c| c.3).sum();
    let hi: f64 = coeffs.iter().map(|c| c.4).sum();
    let total = lo + rng.gen_range(0.2..=0.8) * (hi - lo);
    let problems = coeffs
        .iter()
        .zip(equal_shares(total, n))
        .map(|(&(g, b, m, l, h), s)| LocalProblem::quadratic(g, b, m, l, h, s).unwrap())
        .collect();
    (problems, total)
}

pub fn random_instance(rng: &mut ChaCha8Rng, n: usize) -> Instance {
    let (problems, total) = random_problems(rng, n);
    let graph = random_connected_graph(rng, n, 0.3);
    Instance {
        problems,
        graph,
        total,
    }
}

/// The twenty instances used by the convergence and bound checks.
pub fn convergence_family() -> Vec<Instance> {
    let mut r = rng(20_240_501);
    (0..20)
        .map(|_| {
            let n = r.gen_range(2..=10);
            random_instance(&mut r, n)
        })
        .collect()
}
