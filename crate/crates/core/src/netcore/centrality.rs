//! Closeness and betweenness centrality on directed networks.
//!
//! Distances are either unit hop counts or reciprocal normalized exposures
//! (a stronger exposure means a shorter effective distance). Closeness uses
//! the Wasserman-Faust reachability correction so disconnected realizations
//! still yield finite scores in [0, 1]; betweenness sums shortest-path
//! fractions over unordered pairs and normalizes by C(n-1, 2).

use std::cmp::Ordering;
use std::collections::{BinaryHeap, VecDeque};

use super::DirectedFinancialNetwork;
use crate::error::{Error, Result};

/// Edge-length convention for shortest paths.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DistanceMode {
    /// Every edge has length 1.
    Unit,
    /// Edge length is `max_exposure / exposure`, so lengths are >= 1 and the
    /// strongest exposure has length exactly 1.
    InverseWeight,
}

const REL_TOL: f64 = 1e-9;

/// Shortest distances and shortest-path counts from every source.
struct AllPairs {
    n: usize,
    /// dist[s * n + t]; infinity when unreachable.
    dist: Vec<f64>,
    /// sigma[s * n + t]: number of shortest s->t paths (0 when unreachable).
    sigma: Vec<f64>,
}

impl AllPairs {
    fn dist(&self, s: usize, t: usize) -> f64 {
        self.dist[s * self.n + t]
    }

    fn sigma(&self, s: usize, t: usize) -> f64 {
        self.sigma[s * self.n + t]
    }
}

fn edge_lengths(net: &DirectedFinancialNetwork, mode: DistanceMode) -> Vec<f64> {
    match mode {
        DistanceMode::Unit => vec![1.0; net.edge_count()],
        DistanceMode::InverseWeight => {
            let max = net
                .edges()
                .iter()
                .map(|e| e.exposure)
                .fold(0.0_f64, f64::max);
            if max <= 0.0 {
                return vec![1.0; net.edge_count()];
            }
            net.edges().iter().map(|e| max / e.exposure).collect()
        }
    }
}

#[derive(PartialEq)]
struct HeapItem {
    dist: f64,
    node: usize,
}

impl Eq for HeapItem {}

impl Ord for HeapItem {
    fn cmp(&self, other: &Self) -> Ordering {
        // Min-heap on distance.
        other
            .dist
            .partial_cmp(&self.dist)
            .unwrap_or(Ordering::Equal)
            .then_with(|| other.node.cmp(&self.node))
    }
}

impl PartialOrd for HeapItem {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

fn all_pairs(net: &DirectedFinancialNetwork, mode: DistanceMode) -> AllPairs {
    let n = net.node_count();
    let lengths = edge_lengths(net, mode);
    let mut dist = vec![f64::INFINITY; n * n];
    let mut sigma = vec![0.0; n * n];
    for s in 0..n {
        match mode {
            DistanceMode::Unit => bfs(net, s, &mut dist[s * n..(s + 1) * n], &mut sigma[s * n..(s + 1) * n]),
            DistanceMode::InverseWeight => dijkstra(
                net,
                s,
                &lengths,
                &mut dist[s * n..(s + 1) * n],
                &mut sigma[s * n..(s + 1) * n],
            ),
        }
    }
    AllPairs { n, dist, sigma }
}

fn bfs(net: &DirectedFinancialNetwork, s: usize, dist: &mut [f64], sigma: &mut [f64]) {
    dist[s] = 0.0;
    sigma[s] = 1.0;
    let mut queue = VecDeque::new();
    queue.push_back(s);
    while let Some(u) = queue.pop_front() {
        let du = dist[u];
        for e in net.out_neighbors(u) {
            let v = e.dst;
            if dist[v].is_infinite() {
                dist[v] = du + 1.0;
                sigma[v] = sigma[u];
                queue.push_back(v);
            } else if dist[v] == du + 1.0 {
                sigma[v] += sigma[u];
            }
        }
    }
}

fn dijkstra(
    net: &DirectedFinancialNetwork,
    s: usize,
    lengths: &[f64],
    dist: &mut [f64],
    sigma: &mut [f64],
) {
    let n = net.node_count();
    dist[s] = 0.0;
    sigma[s] = 1.0;
    let mut settled = vec![false; n];
    let mut heap = BinaryHeap::new();
    heap.push(HeapItem { dist: 0.0, node: s });
    while let Some(HeapItem { dist: du, node: u }) = heap.pop() {
        if settled[u] {
            continue;
        }
        settled[u] = true;
        for (idx, e) in net.out_edges[u].iter().map(|&i| (i, &net.edges[i])) {
            let v = e.dst;
            let alt = du + lengths[idx];
            let tol = REL_TOL * alt.max(1.0);
            if alt < dist[v] - tol {
                dist[v] = alt;
                sigma[v] = sigma[u];
                heap.push(HeapItem { dist: alt, node: v });
            } else if (alt - dist[v]).abs() <= tol {
                sigma[v] += sigma[u];
            }
        }
    }
}

/// Closeness centrality with the Wasserman-Faust correction:
/// `CC_i = (R_i / (n-1)) * (R_i / sum of distances to reachable nodes)`,
/// where `R_i` counts nodes reachable from `i`. Nodes that reach nothing
/// score 0. On strongly connected graphs this reduces to
/// `(n-1) / sum_j d_ij`.
pub fn closeness(net: &DirectedFinancialNetwork, mode: DistanceMode) -> Result<Vec<f64>> {
    let n = net.node_count();
    if n < 2 {
        return Err(Error::config("closeness requires at least 2 nodes"));
    }
    let ap = all_pairs(net, mode);
    let mut out = vec![0.0; n];
    for i in 0..n {
        let mut reachable = 0usize;
        let mut total = 0.0;
        for j in 0..n {
            if j == i {
                continue;
            }
            let d = ap.dist(i, j);
            if d.is_finite() {
                reachable += 1;
                total += d;
            }
        }
        if reachable > 0 {
            let r = reachable as f64;
            out[i] = (r / (n as f64 - 1.0)) * (r / total);
        }
    }
    Ok(out)
}

/// Betweenness centrality over unordered pairs `{j, k}` with `j, k != i`:
/// the fraction of shortest paths between the pair (both directions pooled)
/// that pass through `i`, normalized by `C(n-1, 2)`. Pairs connected in
/// neither direction contribute 0.
pub fn betweenness(net: &DirectedFinancialNetwork, mode: DistanceMode) -> Result<Vec<f64>> {
    let n = net.node_count();
    if n < 3 {
        return Err(Error::config("betweenness requires at least 3 nodes"));
    }
    let ap = all_pairs(net, mode);
    let norm = (n as f64 - 1.0) * (n as f64 - 2.0) / 2.0;
    let mut out = vec![0.0; n];

    // sigma_jk(i) = sigma(j, i) * sigma(i, k) when d(j,i) + d(i,k) = d(j,k).
    let through = |j: usize, k: usize, i: usize| -> f64 {
        let d = ap.dist(j, k);
        if !d.is_finite() {
            return 0.0;
        }
        let a = ap.dist(j, i);
        let b = ap.dist(i, k);
        if !a.is_finite() || !b.is_finite() {
            return 0.0;
        }
        if ((a + b) - d).abs() <= REL_TOL * d.max(1.0) {
            ap.sigma(j, i) * ap.sigma(i, k)
        } else {
            0.0
        }
    };

    for i in 0..n {
        let mut acc = 0.0;
        for j in 0..n {
            if j == i {
                continue;
            }
            for k in (j + 1)..n {
                if k == i {
                    continue;
                }
                let sig_fwd = if ap.dist(j, k).is_finite() { ap.sigma(j, k) } else { 0.0 };
                let sig_bwd = if ap.dist(k, j).is_finite() { ap.sigma(k, j) } else { 0.0 };
                let total = sig_fwd + sig_bwd;
                if total == 0.0 {
                    continue;
                }
                acc += (through(j, k, i) + through(k, j, i)) / total;
            }
        }
        out[i] = acc / norm;
    }
    Ok(out)
}
