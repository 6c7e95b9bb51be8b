//! Random network generators.

use rand::Rng;
use rand_distr::{Distribution, Pareto};

use super::DirectedFinancialNetwork;
use crate::error::{Error, Result};
use crate::rng;

/// Pareto shape used for exposures drawn at generation time.
pub const DEFAULT_PARETO_SHAPE: f64 = 2.0;
/// Pareto scale used for exposures drawn at generation time.
pub const DEFAULT_PARETO_SCALE: f64 = 10.0;

/// Generates a scale-free network with the preferential-attachment scheme.
///
/// `m0` seed nodes are fully connected (one structural link per pair), then
/// each of the remaining `n - m0` nodes attaches to `k` distinct existing
/// nodes with probability proportional to current total degree. Every
/// structural link is oriented by a fair coin flip and assigned a Pareto
/// exposure with the default parameters; callers that need a specific
/// exposure law re-draw with [`simulate_exposures`](crate::balance::simulate_exposures).
///
/// The structural link count is exactly `C(m0, 2) + (n - m0) * k`.
pub fn generate_ba(n: usize, m0: usize, k: usize, rng_seed: u64) -> Result<DirectedFinancialNetwork> {
    if !(n >= m0 && m0 >= k && k >= 1) {
        return Err(Error::config(format!(
            "generate_ba requires n >= m0 >= k >= 1, got n={n}, m0={m0}, k={k}"
        )));
    }
    let mut structure_rng = rng::stream(rng_seed, "ba-structure", 0);

    // Undirected structural links; orientation is decided per link below.
    let mut links: Vec<(usize, usize)> = Vec::with_capacity(m0 * (m0 - 1) / 2 + (n - m0) * k);
    for i in 0..m0 {
        for j in (i + 1)..m0 {
            links.push((i, j));
        }
    }
    // One entry per degree unit; sampling an index is preferential attachment.
    let mut degree_pool: Vec<usize> = Vec::new();
    for (a, b) in &links {
        degree_pool.push(*a);
        degree_pool.push(*b);
    }

    for new_node in m0..n {
        let mut targets: Vec<usize> = Vec::with_capacity(k);
        while targets.len() < k {
            let candidate = if degree_pool.is_empty() {
                // m0 = 1: no seed links exist, attach uniformly.
                structure_rng.random_range(0..new_node)
            } else {
                degree_pool[structure_rng.random_range(0..degree_pool.len())]
            };
            if !targets.contains(&candidate) {
                targets.push(candidate);
            }
        }
        for t in targets {
            links.push((new_node, t));
            degree_pool.push(new_node);
            degree_pool.push(t);
        }
    }

    let mut orient_rng = rng::stream(rng_seed, "ba-orientation", 0);
    let oriented: Vec<(usize, usize)> = links
        .iter()
        .map(|&(a, b)| if orient_rng.random_bool(0.5) { (a, b) } else { (b, a) })
        .collect();

    let mut exposure_rng = rng::stream(rng_seed, "ba-exposures", 0);
    let pareto = Pareto::new(DEFAULT_PARETO_SCALE, DEFAULT_PARETO_SHAPE)
        .map_err(|e| Error::config(format!("pareto: {e}")))?;
    let raw: Vec<(usize, usize, f64)> = oriented
        .into_iter()
        .map(|(src, dst)| (src, dst, pareto.sample(&mut exposure_rng)))
        .collect();
    DirectedFinancialNetwork::from_edges(n, raw)
}

/// Generates a complete directed network: every ordered pair `(i, j)`,
/// `i != j`, carries an edge with a positive Pareto exposure draw.
pub fn generate_complete(n: usize, rng_seed: u64) -> Result<DirectedFinancialNetwork> {
    if n < 2 {
        return Err(Error::config(format!("generate_complete requires n >= 2, got {n}")));
    }
    let mut exposure_rng = rng::stream(rng_seed, "complete-exposures", 0);
    let pareto = Pareto::new(DEFAULT_PARETO_SCALE, DEFAULT_PARETO_SHAPE)
        .map_err(|e| Error::config(format!("pareto: {e}")))?;
    let mut raw = Vec::with_capacity(n * (n - 1));
    for i in 0..n {
        for j in 0..n {
            if i != j {
                raw.push((i, j, pareto.sample(&mut exposure_rng)));
            }
        }
    }
    DirectedFinancialNetwork::from_edges(n, raw)
}
