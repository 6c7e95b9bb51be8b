//! Impact-index computation.
//!
//! The iteration matrices scale vulnerability weights by each node's own
//! centrality: `W_cc[i][j] = cc_i * w_ij` and `W_bc[i][j] = bc_i * w_ij`,
//! where the betweenness vector is affinely rescaled to `[1e-3, 1]` first so
//! zero-betweenness nodes are not annihilated. The impact vector is the
//! averaged fixed-point iteration
//!
//! ```text
//! p^1     = W_bc * r
//! p^(k+1) = k/(k+1) * W_cc * p^k + 1/(k+1) * W_bc * r
//! ```
//!
//! stopped when the max-norm step difference drops below the tolerance.

use std::io::Write;

use crate::error::{Error, Result};
use crate::linalg::{self, Matrix};

/// Floor of the rescaled betweenness vector.
pub const BETWEENNESS_FLOOR: f64 = 1e-3;

/// Default stopping tolerance.
pub const DEFAULT_TOLERANCE: f64 = 1e-5;

/// Default iteration cap.
pub const DEFAULT_MAX_ITER: usize = 100_000;

/// Centrality-scaled weight matrices plus the solvency-ratio vector.
#[derive(Debug, Clone)]
pub struct IterationMatrices {
    pub w_cc: Matrix,
    pub w_bc: Matrix,
    pub ratios: Vec<f64>,
}

impl IterationMatrices {
    pub fn dim(&self) -> usize {
        self.w_cc.rows()
    }

    /// The combined matrix `M_k = k/(k+1) * W_cc + 1/(k+1) * W_bc * diag(r)`.
    pub fn combined(&self, k: usize) -> Matrix {
        let alpha = k as f64 / (k as f64 + 1.0);
        let beta = 1.0 - alpha;
        self.w_cc
            .scale(alpha)
            .add(&self.w_bc.scale_cols(&self.ratios).scale(beta))
    }

    /// `W_bc * r`, the injection term of the iteration.
    pub fn injection(&self) -> Vec<f64> {
        self.w_bc.matvec(&self.ratios)
    }
}

/// How the stopping tolerance is interpreted.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ToleranceMode {
    /// Stop when `max_i |p^(k+1)_i - p^k_i| < tolerance`.
    Absolute,
    /// Stop when the max-norm step difference drops below
    /// `tolerance * max_i |p^1_i|`. Scale-free: iteration counts do not
    /// depend on the magnitude of the injection term, so they are
    /// comparable across network sizes.
    RelativeToInitial,
}

/// Solver output.
#[derive(Debug, Clone, PartialEq)]
pub struct ImpactVector {
    pub p: Vec<f64>,
    /// Number of update steps performed (the final `k`).
    pub iterations: usize,
    pub converged: bool,
    /// Max-norm of the last iterate difference.
    pub residual: f64,
}

/// Builds the iteration matrices from vulnerability weights, centralities
/// and solvency ratios.
///
/// A constant betweenness vector (for example all zeros on a complete
/// network) rescales to all ones, leaving `W_bc = w`.
pub fn build_iteration_matrices(
    w: &Matrix,
    closeness: &[f64],
    betweenness: &[f64],
    ratios: &[f64],
) -> Result<IterationMatrices> {
    let n = w.rows();
    if w.cols() != n {
        return Err(Error::data("vulnerability matrix must be square"));
    }
    if closeness.len() != n || betweenness.len() != n || ratios.len() != n {
        return Err(Error::data(format!(
            "dimension mismatch: w is {n}x{n}, cc={}, bc={}, r={}",
            closeness.len(),
            betweenness.len(),
            ratios.len()
        )));
    }
    let bc_scaled = rescale_betweenness(betweenness);
    let mut w_cc = Matrix::zeros(n, n);
    let mut w_bc = Matrix::zeros(n, n);
    for i in 0..n {
        for j in 0..n {
            let wij = w.get(i, j);
            if wij != 0.0 {
                w_cc.set(i, j, closeness[i] * wij);
                w_bc.set(i, j, bc_scaled[i] * wij);
            }
        }
    }
    Ok(IterationMatrices {
        w_cc,
        w_bc,
        ratios: ratios.to_vec(),
    })
}

/// Affine rescale of the betweenness vector onto `[BETWEENNESS_FLOOR, 1]`.
/// Constant vectors map to all ones.
pub fn rescale_betweenness(betweenness: &[f64]) -> Vec<f64> {
    let lo = betweenness.iter().cloned().fold(f64::INFINITY, f64::min);
    let hi = betweenness.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    if !(hi - lo).is_finite() || hi - lo < 1e-15 {
        return vec![1.0; betweenness.len()];
    }
    betweenness
        .iter()
        .map(|&b| BETWEENNESS_FLOOR + (1.0 - BETWEENNESS_FLOOR) * (b - lo) / (hi - lo))
        .collect()
}

/// Runs the averaged fixed-point iteration with an absolute stopping rule.
pub fn iterate_impact(
    mats: &IterationMatrices,
    tolerance: f64,
    max_iter: usize,
) -> Result<ImpactVector> {
    iterate_impact_with(mats, tolerance, max_iter, ToleranceMode::Absolute)
}

/// Runs the averaged fixed-point iteration with an explicit tolerance mode.
pub fn iterate_impact_with(
    mats: &IterationMatrices,
    tolerance: f64,
    max_iter: usize,
    mode: ToleranceMode,
) -> Result<ImpactVector> {
    if !(tolerance > 0.0) {
        return Err(Error::config(format!("tolerance must be > 0, got {tolerance}")));
    }
    if max_iter < 1 {
        return Err(Error::config("max_iter must be >= 1"));
    }
    let injection = mats.injection();
    let threshold = match mode {
        ToleranceMode::Absolute => tolerance,
        ToleranceMode::RelativeToInitial => {
            let scale = linalg::norm_inf(&injection);
            if scale > 0.0 {
                tolerance * scale
            } else {
                tolerance
            }
        }
    };

    let mut p = injection.clone();
    let mut iterations = 0;
    let mut residual = f64::INFINITY;
    let mut converged = false;
    for k in 1..=max_iter {
        let alpha = k as f64 / (k as f64 + 1.0);
        let beta = 1.0 - alpha;
        let wp = mats.w_cc.matvec(&p);
        let next: Vec<f64> = wp
            .iter()
            .zip(&injection)
            .map(|(a, b)| alpha * a + beta * b)
            .collect();
        if next.iter().any(|v| !v.is_finite()) {
            return Err(Error::numeric(format!(
                "non-finite impact value at iteration {k}"
            )));
        }
        residual = linalg::diff_inf(&next, &p);
        p = next;
        iterations = k;
        if residual < threshold {
            converged = true;
            break;
        }
    }
    Ok(ImpactVector {
        p,
        iterations,
        converged,
        residual,
    })
}

/// Fixed-weight variant: `p^(k+1) = alpha * W_cc * p^k + (1-alpha) * W_bc * r`
/// with a constant `alpha` instead of the `k/(k+1)` schedule.
pub fn iterate_impact_fixed_alpha(
    mats: &IterationMatrices,
    alpha: f64,
    tolerance: f64,
    max_iter: usize,
) -> Result<ImpactVector> {
    if !(0.0..1.0).contains(&alpha) {
        return Err(Error::config(format!("alpha must lie in [0, 1), got {alpha}")));
    }
    if !(tolerance > 0.0) {
        return Err(Error::config(format!("tolerance must be > 0, got {tolerance}")));
    }
    let injection = mats.injection();
    let beta = 1.0 - alpha;
    let mut p = injection.clone();
    let mut iterations = 0;
    let mut residual = f64::INFINITY;
    let mut converged = false;
    for k in 1..=max_iter {
        let wp = mats.w_cc.matvec(&p);
        let next: Vec<f64> = wp
            .iter()
            .zip(&injection)
            .map(|(a, b)| alpha * a + beta * b)
            .collect();
        if next.iter().any(|v| !v.is_finite()) {
            return Err(Error::numeric(format!(
                "non-finite impact value at iteration {k}"
            )));
        }
        residual = linalg::diff_inf(&next, &p);
        p = next;
        iterations = k;
        if residual < tolerance {
            converged = true;
            break;
        }
    }
    Ok(ImpactVector {
        p,
        iterations,
        converged,
        residual,
    })
}

/// Descending ranking with ties broken by ascending node id.
pub fn rank_institutions(impact: &ImpactVector) -> Vec<(usize, f64)> {
    let mut order: Vec<(usize, f64)> = impact.p.iter().copied().enumerate().collect();
    order.sort_by(|a, b| b.1.partial_cmp(&a.1).unwrap_or(std::cmp::Ordering::Equal).then(a.0.cmp(&b.0)));
    order
}

/// `||M_k p - p||_2` with `p` normalized onto the simplex and
/// `M_k` assembled at the vector's final iteration count.
pub fn residual_norm(mats: &IterationMatrices, impact: &ImpactVector) -> Result<f64> {
    residual_norm_at(mats, &impact.p, impact.iterations.max(1))
}

/// Residual at an explicit iteration count.
pub fn residual_norm_at(mats: &IterationMatrices, p: &[f64], k: usize) -> Result<f64> {
    if p.len() != mats.dim() {
        return Err(Error::data("impact vector length does not match matrices"));
    }
    let total = linalg::norm1(p);
    if total <= 0.0 {
        return Err(Error::data("cannot normalize a zero impact vector"));
    }
    let normalized: Vec<f64> = p.iter().map(|v| v / total).collect();
    let m = mats.combined(k);
    let mp = m.matvec(&normalized);
    let diff: Vec<f64> = mp.iter().zip(&normalized).map(|(a, b)| a - b).collect();
    Ok(linalg::norm2(&diff))
}

/// Writes `node,impact_index,rank` CSV, ranked output order by node id.
pub fn write_impact_csv(
    impact: &ImpactVector,
    w: &mut impl Write,
    header_comments: &[String],
) -> Result<()> {
    for line in header_comments {
        writeln!(w, "# {line}")?;
    }
    let ranking = rank_institutions(impact);
    let mut rank_of = vec![0usize; impact.p.len()];
    for (rank, (node, _)) in ranking.iter().enumerate() {
        rank_of[*node] = rank + 1;
    }
    writeln!(w, "node,impact_index,rank")?;
    for (node, v) in impact.p.iter().enumerate() {
        writeln!(w, "{},{:.16e},{}", node, v, rank_of[node])?;
    }
    Ok(())
}
