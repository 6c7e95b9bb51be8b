//! Absorbing-Markov-chain baseline ranking.
//!
//! Exposures are row-normalized into a transition matrix; making one node
//! absorbing and solving `(I - Q) t = 1` gives expected absorption times,
//! whose mean (inverted) ranks how quickly flow is absorbed by a failed
//! institution.

use std::collections::VecDeque;
use std::io::Write;

use crate::error::{Error, Result};
use crate::linalg::Matrix;
use crate::netcore::DirectedFinancialNetwork;

/// Row-stochastic transition matrix built from exposures.
#[derive(Debug, Clone, PartialEq)]
pub struct TransitionMatrix {
    p: Matrix,
}

impl TransitionMatrix {
    pub fn matrix(&self) -> &Matrix {
        &self.p
    }

    pub fn dim(&self) -> usize {
        self.p.rows()
    }
}

/// `P_ij = exposure_ij / out_strength_i`; rows without outgoing exposure
/// become uniform.
pub fn to_transition(net: &DirectedFinancialNetwork) -> Result<TransitionMatrix> {
    let n = net.node_count();
    if n == 0 || net.edge_count() == 0 {
        return Err(Error::data("cannot build a transition matrix from an empty network"));
    }
    let mut p = Matrix::zeros(n, n);
    for i in 0..n {
        let total = net.out_strength(i);
        if total > 0.0 {
            for e in net.out_neighbors(i) {
                p.set(i, e.dst, e.exposure / total);
            }
        } else {
            for j in 0..n {
                p.set(i, j, 1.0 / n as f64);
            }
        }
    }
    Ok(TransitionMatrix { p })
}

/// SinkRank of one sink node.
#[derive(Debug, Clone, PartialEq)]
pub struct SinkRankResult {
    /// Mean expected absorption time over non-sink nodes.
    pub sinkrank: f64,
    /// `1 / sinkrank`: larger means more systemic.
    pub inv_sinkrank: f64,
    /// Expected absorption time per non-sink node, indexed by original id.
    pub absorption_times: Vec<(usize, f64)>,
}

/// Expected absorption times into `sink` via the fundamental-matrix solve.
pub fn sinkrank(tm: &TransitionMatrix, sink: usize) -> Result<SinkRankResult> {
    let n = tm.dim();
    if sink >= n {
        return Err(Error::config(format!("sink {sink} outside 0..{n}")));
    }
    if n < 2 {
        return Err(Error::data("sinkrank needs at least 2 states"));
    }
    let unreachable = nodes_not_reaching(tm, sink);
    if !unreachable.is_empty() {
        return Err(Error::data(format!(
            "sink {sink} unreachable from nodes {unreachable:?}"
        )));
    }
    // Q: transitions among non-sink states.
    let others: Vec<usize> = (0..n).filter(|&i| i != sink).collect();
    let m = others.len();
    let mut i_minus_q = Matrix::zeros(m, m);
    for (a, &i) in others.iter().enumerate() {
        for (b, &j) in others.iter().enumerate() {
            let q = tm.p.get(i, j);
            i_minus_q.set(a, b, if a == b { 1.0 - q } else { -q });
        }
    }
    let times = i_minus_q.lu_solve(&vec![1.0; m]).map_err(|_| {
        Error::data(format!("singular fundamental matrix for sink {sink}"))
    })?;
    let mean = times.iter().sum::<f64>() / m as f64;
    Ok(SinkRankResult {
        sinkrank: mean,
        inv_sinkrank: 1.0 / mean,
        absorption_times: others.into_iter().zip(times).collect(),
    })
}

/// Inverse SinkRank for every node as the systemic score vector.
pub fn inv_sinkrank_scores(tm: &TransitionMatrix) -> Result<Vec<f64>> {
    (0..tm.dim()).map(|s| sinkrank(tm, s).map(|r| r.inv_sinkrank)).collect()
}

fn nodes_not_reaching(tm: &TransitionMatrix, sink: usize) -> Vec<usize> {
    // Reverse BFS from the sink along positive transition probabilities.
    let n = tm.dim();
    let mut seen = vec![false; n];
    seen[sink] = true;
    let mut queue = VecDeque::from([sink]);
    while let Some(v) = queue.pop_front() {
        for u in 0..n {
            if !seen[u] && tm.p.get(u, v) > 0.0 {
                seen[u] = true;
                queue.push_back(u);
            }
        }
    }
    (0..n).filter(|&i| !seen[i]).collect()
}

/// Spearman rho (average ranks on ties) and Kendall tau-b.
pub fn rank_correlation(a: &[f64], b: &[f64]) -> Result<(f64, f64)> {
    if a.len() != b.len() {
        return Err(Error::data("score vectors differ in length"));
    }
    if a.len() < 3 {
        return Err(Error::data("rank correlation needs at least 3 observations"));
    }
    let constant = |v: &[f64]| v.iter().all(|&x| x == v[0]);
    if constant(a) || constant(b) {
        return Err(Error::estimation("rank correlation undefined for constant scores"));
    }
    let ra = average_ranks(a);
    let rb = average_ranks(b);
    let spearman = pearson(&ra, &rb);

    let n = a.len();
    let mut concordant = 0.0;
    let mut discordant = 0.0;
    let mut ties_a = 0.0;
    let mut ties_b = 0.0;
    for i in 0..n {
        for j in (i + 1)..n {
            let da = a[i] - a[j];
            let db = b[i] - b[j];
            if da == 0.0 && db == 0.0 {
                ties_a += 1.0;
                ties_b += 1.0;
            } else if da == 0.0 {
                ties_a += 1.0;
            } else if db == 0.0 {
                ties_b += 1.0;
            } else if da * db > 0.0 {
                concordant += 1.0;
            } else {
                discordant += 1.0;
            }
        }
    }
    let n0 = (n * (n - 1)) as f64 / 2.0;
    let denom = ((n0 - ties_a) * (n0 - ties_b)).sqrt();
    if denom == 0.0 {
        return Err(Error::estimation("rank correlation undefined: all pairs tied"));
    }
    let kendall = (concordant - discordant) / denom;
    Ok((spearman, kendall))
}

fn average_ranks(values: &[f64]) -> Vec<f64> {
    let n = values.len();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| values[i].partial_cmp(&values[j]).unwrap());
    let mut ranks = vec![0.0; n];
    let mut i = 0;
    while i < n {
        let mut j = i;
        while j + 1 < n && values[order[j + 1]] == values[order[i]] {
            j += 1;
        }
        let avg = (i + j) as f64 / 2.0 + 1.0;
        for &idx in &order[i..=j] {
            ranks[idx] = avg;
        }
        i = j + 1;
    }
    ranks
}

fn pearson(x: &[f64], y: &[f64]) -> f64 {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let mut sxy = 0.0;
    let mut sxx = 0.0;
    let mut syy = 0.0;
    for (a, b) in x.iter().zip(y) {
        sxy += (a - mx) * (b - my);
        sxx += (a - mx) * (a - mx);
        syy += (b - my) * (b - my);
    }
    sxy / (sxx * syy).sqrt()
}

/// One row of the comparison CSV
/// (`name,deg_out,deg_in,impact_index,inv_sinkrank,total_received,total_sent,equity`).
#[derive(Debug, Clone, PartialEq)]
pub struct ComparisonRow {
    pub name: String,
    pub deg_out: usize,
    pub deg_in: usize,
    pub impact_index: f64,
    pub inv_sinkrank: f64,
    pub total_received: f64,
    pub total_sent: f64,
    pub equity: f64,
}

pub fn write_comparison_csv(
    rows: &[ComparisonRow],
    w: &mut impl Write,
    header_comments: &[String],
) -> Result<()> {
    for line in header_comments {
        writeln!(w, "# {line}")?;
    }
    writeln!(
        w,
        "name,deg_out,deg_in,impact_index,inv_sinkrank,total_received,total_sent,equity"
    )?;
    for r in rows {
        writeln!(
            w,
            "{},{},{},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e}",
            r.name,
            r.deg_out,
            r.deg_in,
            r.impact_index,
            r.inv_sinkrank,
            r.total_received,
            r.total_sent,
            r.equity
        )?;
    }
    Ok(())
}
