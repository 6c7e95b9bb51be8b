//! Directed weighted interbank networks.
//!
//! An edge `src -> dst` with exposure `omega` means `src` owes `omega` to
//! `dst` (debtor to creditor). Row sums of the exposure matrix are therefore
//! interbank liabilities and column sums are interbank assets. Networks are
//! immutable after construction and safe to share across threads.

mod centrality;
mod generate;

pub use centrality::{betweenness, closeness, DistanceMode};
pub use generate::{generate_ba, generate_complete, DEFAULT_PARETO_SCALE, DEFAULT_PARETO_SHAPE};

use std::collections::BTreeMap;
use std::io::{BufRead, BufReader, Write};
use std::path::Path;

use crate::error::{Error, Result};

/// A directed edge: `src` owes `exposure` to `dst`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Edge {
    pub src: usize,
    pub dst: usize,
    pub exposure: f64,
}

/// Directed weighted graph of interbank exposures.
///
/// Invariants enforced at construction: no self-loops, strictly positive
/// exposures, at most one edge per ordered pair (parallel edges are merged
/// by summing exposures).
#[derive(Debug, Clone)]
pub struct DirectedFinancialNetwork {
    n: usize,
    edges: Vec<Edge>,
    out_edges: Vec<Vec<usize>>,
    in_edges: Vec<Vec<usize>>,
}

impl DirectedFinancialNetwork {
    /// Builds a network from an edge list, merging parallel edges.
    pub fn from_edges(n: usize, raw: impl IntoIterator<Item = (usize, usize, f64)>) -> Result<Self> {
        let mut merged: BTreeMap<(usize, usize), f64> = BTreeMap::new();
        for (src, dst, exposure) in raw {
            if src >= n || dst >= n {
                return Err(Error::data(format!(
                    "edge ({src},{dst}) references a node outside 0..{n}"
                )));
            }
            if src == dst {
                return Err(Error::data(format!("self-loop on node {src}")));
            }
            if !exposure.is_finite() || exposure <= 0.0 {
                return Err(Error::data(format!(
                    "edge ({src},{dst}) has non-positive exposure {exposure}"
                )));
            }
            *merged.entry((src, dst)).or_insert(0.0) += exposure;
        }
        let edges: Vec<Edge> = merged
            .into_iter()
            .map(|((src, dst), exposure)| Edge { src, dst, exposure })
            .collect();
        let mut out_edges = vec![Vec::new(); n];
        let mut in_edges = vec![Vec::new(); n];
        for (idx, e) in edges.iter().enumerate() {
            out_edges[e.src].push(idx);
            in_edges[e.dst].push(idx);
        }
        Ok(DirectedFinancialNetwork {
            n,
            edges,
            out_edges,
            in_edges,
        })
    }

    pub fn node_count(&self) -> usize {
        self.n
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    /// Edges in deterministic (src, dst) order.
    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    pub fn out_neighbors(&self, node: usize) -> impl Iterator<Item = &Edge> + '_ {
        self.out_edges[node].iter().map(move |&i| &self.edges[i])
    }

    pub fn in_neighbors(&self, node: usize) -> impl Iterator<Item = &Edge> + '_ {
        self.in_edges[node].iter().map(move |&i| &self.edges[i])
    }

    pub fn out_degree(&self, node: usize) -> usize {
        self.out_edges[node].len()
    }

    pub fn in_degree(&self, node: usize) -> usize {
        self.in_edges[node].len()
    }

    pub fn has_edge(&self, src: usize, dst: usize) -> bool {
        self.out_edges[src]
            .iter()
            .any(|&i| self.edges[i].dst == dst)
    }

    /// Exposure on edge `src -> dst`, 0 when absent.
    pub fn exposure(&self, src: usize, dst: usize) -> f64 {
        self.out_edges[src]
            .iter()
            .find(|&&i| self.edges[i].dst == dst)
            .map_or(0.0, |&i| self.edges[i].exposure)
    }

    /// Sum of exposures owed by `node` (row sum, interbank liabilities).
    pub fn out_strength(&self, node: usize) -> f64 {
        self.out_neighbors(node).map(|e| e.exposure).sum()
    }

    /// Sum of exposures owed to `node` (column sum, interbank assets).
    pub fn in_strength(&self, node: usize) -> f64 {
        self.in_neighbors(node).map(|e| e.exposure).sum()
    }

    pub fn total_exposure(&self) -> f64 {
        self.edges.iter().map(|e| e.exposure).sum()
    }

    /// Rebuilds the network with the same structure and new exposures,
    /// one per edge in deterministic edge order.
    pub fn with_exposures(&self, exposures: &[f64]) -> Result<Self> {
        if exposures.len() != self.edges.len() {
            return Err(Error::data("exposure vector length does not match edge count"));
        }
        Self::from_edges(
            self.n,
            self.edges
                .iter()
                .zip(exposures)
                .map(|(e, &x)| (e.src, e.dst, x)),
        )
    }

    pub fn degrees(&self) -> DegreeProfile {
        DegreeProfile {
            in_degree: (0..self.n).map(|i| self.in_degree(i)).collect(),
            out_degree: (0..self.n).map(|i| self.out_degree(i)).collect(),
        }
    }

    /// Writes the edge list as CSV with header `src,dst,exposure`.
    ///
    /// `header_comments` lines are emitted first, each prefixed with `#`.
    pub fn write_edge_csv(&self, w: &mut impl Write, header_comments: &[String]) -> Result<()> {
        for line in header_comments {
            writeln!(w, "# {line}")?;
        }
        writeln!(w, "src,dst,exposure")?;
        for e in &self.edges {
            writeln!(w, "{},{},{:.16e}", e.src, e.dst, e.exposure)?;
        }
        Ok(())
    }

    /// Loads an edge-list CSV written by [`write_edge_csv`](Self::write_edge_csv).
    ///
    /// Node count is one past the largest node id seen.
    pub fn read_edge_csv(r: impl std::io::Read) -> Result<Self> {
        let reader = BufReader::new(r);
        let mut raw = Vec::new();
        let mut saw_header = false;
        let mut max_node = 0usize;
        for (lineno, line) in reader.lines().enumerate() {
            let line = line?;
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            if !saw_header {
                if line != "src,dst,exposure" {
                    return Err(Error::Parse(format!(
                        "expected header 'src,dst,exposure', got '{line}'"
                    )));
                }
                saw_header = true;
                continue;
            }
            let fields: Vec<&str> = line.split(',').collect();
            if fields.len() != 3 {
                return Err(Error::Parse(format!("line {}: expected 3 fields", lineno + 1)));
            }
            let src: usize = fields[0]
                .parse()
                .map_err(|_| Error::Parse(format!("line {}: bad src", lineno + 1)))?;
            let dst: usize = fields[1]
                .parse()
                .map_err(|_| Error::Parse(format!("line {}: bad dst", lineno + 1)))?;
            let exposure: f64 = fields[2]
                .parse()
                .map_err(|_| Error::Parse(format!("line {}: bad exposure", lineno + 1)))?;
            max_node = max_node.max(src).max(dst);
            raw.push((src, dst, exposure));
        }
        if !saw_header {
            return Err(Error::Parse("empty edge CSV".into()));
        }
        DirectedFinancialNetwork::from_edges(max_node + 1, raw)
    }

    pub fn read_edge_csv_path(path: impl AsRef<Path>) -> Result<Self> {
        let file = std::fs::File::open(path)?;
        Self::read_edge_csv(file)
    }
}

/// Per-node in/out edge counts.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DegreeProfile {
    pub in_degree: Vec<usize>,
    pub out_degree: Vec<usize>,
}

impl DegreeProfile {
    pub fn max_in(&self) -> usize {
        self.in_degree.iter().copied().max().unwrap_or(0)
    }

    pub fn max_out(&self) -> usize {
        self.out_degree.iter().copied().max().unwrap_or(0)
    }
}

/// Closeness and betweenness per node.
#[derive(Debug, Clone, PartialEq)]
pub struct CentralityScores {
    pub closeness: Vec<f64>,
    pub betweenness: Vec<f64>,
}

impl CentralityScores {
    /// Computes both centralities. Networks with fewer than 3 nodes have no
    /// possible intermediary, so their betweenness is identically zero
    /// rather than an error.
    pub fn compute(net: &DirectedFinancialNetwork, mode: DistanceMode) -> Result<Self> {
        let betweenness = if net.node_count() < 3 {
            vec![0.0; net.node_count()]
        } else {
            betweenness(net, mode)?
        };
        Ok(CentralityScores {
            closeness: closeness(net, mode)?,
            betweenness,
        })
    }
}

/// One row of a bank-summary CSV
/// (`name,deg_out,deg_in,total_received,total_sent,equity`).
#[derive(Debug, Clone, PartialEq)]
pub struct BankSummaryRow {
    pub name: String,
    pub deg_out: usize,
    pub deg_in: usize,
    pub total_received: f64,
    pub total_sent: f64,
    pub equity: f64,
}

/// Loads a bank-summary CSV of per-institution aggregates.
pub fn read_bank_summary_csv(r: impl std::io::Read) -> Result<Vec<BankSummaryRow>> {
    const HEADER: &str = "name,deg_out,deg_in,total_received,total_sent,equity";
    let reader = BufReader::new(r);
    let mut rows = Vec::new();
    let mut saw_header = false;
    for (lineno, line) in reader.lines().enumerate() {
        let line = line?;
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        if !saw_header {
            if line != HEADER {
                return Err(Error::Parse(format!("expected header '{HEADER}', got '{line}'")));
            }
            saw_header = true;
            continue;
        }
        let f: Vec<&str> = line.split(',').collect();
        if f.len() != 6 {
            return Err(Error::Parse(format!("line {}: expected 6 fields", lineno + 1)));
        }
        let bad = |what: &str| Error::Parse(format!("line {}: bad {what}", lineno + 1));
        rows.push(BankSummaryRow {
            name: f[0].to_string(),
            deg_out: f[1].parse().map_err(|_| bad("deg_out"))?,
            deg_in: f[2].parse().map_err(|_| bad("deg_in"))?,
            total_received: f[3].parse().map_err(|_| bad("total_received"))?,
            total_sent: f[4].parse().map_err(|_| bad("total_sent"))?,
            equity: f[5].parse().map_err(|_| bad("equity"))?,
        });
    }
    if !saw_header {
        return Err(Error::Parse("empty bank summary CSV".into()));
    }
    Ok(rows)
}

/// Least-squares slope of log CCDF against log degree, returned as a
/// positive exponent.
///
/// Requires at least 10 nodes with degree >= 1 and at least two distinct
/// degree values.
pub fn power_law_exponent(degrees: &[usize]) -> Result<f64> {
    let positive: Vec<usize> = degrees.iter().copied().filter(|&d| d >= 1).collect();
    if positive.len() < 10 {
        return Err(Error::estimation(format!(
            "need at least 10 nodes with degree >= 1, got {}",
            positive.len()
        )));
    }
    let m = positive.len() as f64;
    let mut sorted = positive.clone();
    sorted.sort_unstable();
    let mut distinct: Vec<usize> = sorted.clone();
    distinct.dedup();
    if distinct.len() < 2 {
        return Err(Error::estimation(
            "degenerate degree distribution: all degrees equal",
        ));
    }
    // CCDF(v) = P(degree >= v), evaluated at each distinct degree value.
    let mut points = Vec::with_capacity(distinct.len());
    for &v in &distinct {
        let below = sorted.partition_point(|&d| d < v);
        let ccdf = (m - below as f64) / m;
        points.push(((v as f64).ln(), ccdf.ln()));
    }
    let k = points.len() as f64;
    let sx: f64 = points.iter().map(|p| p.0).sum();
    let sy: f64 = points.iter().map(|p| p.1).sum();
    let sxx: f64 = points.iter().map(|p| p.0 * p.0).sum();
    let sxy: f64 = points.iter().map(|p| p.0 * p.1).sum();
    let denom = k * sxx - sx * sx;
    if denom.abs() < 1e-12 {
        return Err(Error::estimation("degenerate degree distribution"));
    }
    let slope = (k * sxy - sx * sy) / denom;
    if slope >= 0.0 {
        return Err(Error::estimation(format!(
            "CCDF slope {slope} is non-negative; no power-law decay"
        )));
    }
    Ok(-slope)
}
