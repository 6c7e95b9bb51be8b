//! Exact-solution oracle: constrained least squares over the probability
//! simplex via projected gradient, plus dense power iteration and the
//! relative-error metric used by the comparison reports.

use crate::error::{Error, Result};
use crate::linalg::{self, Matrix};

/// A non-negative vector summing to 1.
#[derive(Debug, Clone, PartialEq)]
pub struct SimplexVector {
    values: Vec<f64>,
}

impl SimplexVector {
    /// Validates the simplex invariants (entries >= 0, sum within 1e-12 of 1).
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::data("empty simplex vector"));
        }
        if values.iter().any(|v| !v.is_finite() || *v < 0.0) {
            return Err(Error::data("simplex vector entries must be finite and >= 0"));
        }
        let sum: f64 = values.iter().sum();
        if (sum - 1.0).abs() > 1e-12 {
            return Err(Error::data(format!("simplex vector sums to {sum}, not 1")));
        }
        Ok(SimplexVector { values })
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn uniform(n: usize) -> Self {
        SimplexVector {
            values: vec![1.0 / n as f64; n],
        }
    }
}

/// Euclidean projection onto the unit simplex (sort-and-threshold).
///
/// If the input already satisfies the simplex invariants it is returned
/// unchanged, which makes the projection exactly idempotent.
pub fn project_to_simplex(v: &[f64]) -> Result<SimplexVector> {
    if v.is_empty() {
        return Err(Error::data("cannot project an empty vector"));
    }
    if v.iter().any(|x| !x.is_finite()) {
        return Err(Error::data("cannot project a vector with non-finite entries"));
    }
    // Feasible points are returned unchanged, which makes the projection
    // exactly idempotent. The tolerance sits below the SimplexVector
    // invariant (1e-12) and above accumulated rounding from a prior
    // projection pass.
    let sum: f64 = v.iter().sum();
    if v.iter().all(|&x| x >= 0.0) && (sum - 1.0).abs() <= 1e-13 {
        return Ok(SimplexVector { values: v.to_vec() });
    }
    let mut sorted = v.to_vec();
    sorted.sort_by(|a, b| b.partial_cmp(a).unwrap());
    let mut cumsum = 0.0;
    let mut theta = 0.0;
    let mut rho = 0;
    for (j, &u) in sorted.iter().enumerate() {
        cumsum += u;
        let candidate = (cumsum - 1.0) / (j as f64 + 1.0);
        if u - candidate > 0.0 {
            rho = j + 1;
            theta = candidate;
        }
    }
    if rho == 0 {
        // Entries so large that u - (u - 1) rounds to zero.
        return Err(Error::numeric(
            "simplex projection degenerated on extreme values; rescale the input",
        ));
    }
    let values: Vec<f64> = v.iter().map(|&x| (x - theta).max(0.0)).collect();
    Ok(SimplexVector { values })
}

/// Backtracking line-search parameters.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct StepRule {
    pub initial_step: f64,
    pub shrink: f64,
    pub armijo: f64,
}

impl Default for StepRule {
    fn default() -> Self {
        StepRule {
            initial_step: 1.0,
            shrink: 0.5,
            armijo: 1e-4,
        }
    }
}

/// Output of [`solve_optimal`].
#[derive(Debug, Clone, PartialEq)]
pub struct OptimalSolution {
    pub point: SimplexVector,
    pub objective: f64,
    pub iterations: usize,
    /// False when the stationarity test was not met within `max_iter`.
    pub converged: bool,
}

/// `||M p - p||_2`.
pub fn objective(m: &Matrix, p: &[f64]) -> f64 {
    let mp = m.matvec(p);
    let diff: Vec<f64> = mp.iter().zip(p).map(|(a, b)| a - b).collect();
    linalg::norm2(&diff)
}

/// Minimizes `||M p - p||_2` over the probability simplex with projected
/// gradient descent and Armijo backtracking, starting from the uniform
/// vector. Exits when the projected-gradient norm falls below `tol`.
pub fn solve_optimal(
    m: &Matrix,
    step_rule: StepRule,
    max_iter: usize,
    tol: f64,
) -> Result<OptimalSolution> {
    solve_optimal_from(m, SimplexVector::uniform(m.rows()), step_rule, max_iter, tol)
}

/// [`solve_optimal`] from an explicit feasible starting point. Warm starts
/// make the oracle a guaranteed improvement over a candidate solution.
pub fn solve_optimal_from(
    m: &Matrix,
    start: SimplexVector,
    step_rule: StepRule,
    max_iter: usize,
    tol: f64,
) -> Result<OptimalSolution> {
    let n = m.rows();
    if m.cols() != n {
        return Err(Error::data("solve_optimal requires a square matrix"));
    }
    if start.values().len() != n {
        return Err(Error::data("start vector length does not match matrix"));
    }
    let a = |p: &[f64]| -> Vec<f64> {
        // (M - I) p
        let mp = m.matvec(p);
        mp.iter().zip(p).map(|(x, y)| x - y).collect()
    };

    let mut p = start.into_values();
    let mut f = linalg::norm2(&a(&p));
    let mut converged = false;
    let mut iterations = 0;

    for it in 1..=max_iter {
        iterations = it;
        let ap = a(&p);
        let ap_norm = linalg::norm2(&ap);
        if ap_norm < 1e-14 {
            // Exact fixed point on the simplex.
            f = ap_norm;
            converged = true;
            break;
        }
        // grad ||Ap|| = A^T (Ap) / ||Ap|| with A = M - I.
        let mtap = m.t_matvec(&ap);
        let grad: Vec<f64> = mtap
            .iter()
            .zip(&ap)
            .map(|(x, y)| (x - y) / ap_norm)
            .collect();

        // Stationarity: distance between p and its projected gradient step.
        let moved: Vec<f64> = p.iter().zip(&grad).map(|(x, g)| x - g).collect();
        let projected = project_to_simplex(&moved)?;
        let pg_norm = linalg::norm2(
            &p.iter()
                .zip(projected.values())
                .map(|(x, y)| x - y)
                .collect::<Vec<_>>(),
        );
        if pg_norm < tol {
            converged = true;
            break;
        }

        let mut step = step_rule.initial_step;
        let mut accepted = false;
        while step > 1e-16 {
            let trial: Vec<f64> = p.iter().zip(&grad).map(|(x, g)| x - step * g).collect();
            let candidate = project_to_simplex(&trial)?;
            let f_new = linalg::norm2(&a(candidate.values()));
            let decrease: f64 = grad
                .iter()
                .zip(p.iter().zip(candidate.values()))
                .map(|(g, (x, y))| g * (x - y))
                .sum();
            if f_new <= f - step_rule.armijo * decrease.max(0.0) && f_new < f {
                p = candidate.into_values();
                f = f_new;
                accepted = true;
                break;
            }
            step *= step_rule.shrink;
        }
        if !accepted {
            // Line search stalled at float resolution.
            break;
        }
    }

    Ok(OptimalSolution {
        point: SimplexVector { values: p },
        objective: f,
        iterations,
        converged,
    })
}

/// Relative error `(err_alg - err_opt) / err_opt`.
pub fn relative_error(err_alg: f64, err_opt: f64) -> Result<f64> {
    if !(err_alg >= 0.0) {
        return Err(Error::data(format!("err_alg must be >= 0, got {err_alg}")));
    }
    if err_opt == 0.0 {
        return Err(Error::numeric(
            "relative error undefined for err_opt = 0; use the absolute error",
        ));
    }
    Ok((err_alg - err_opt) / err_opt)
}

/// Power-method output.
#[derive(Debug, Clone, PartialEq)]
pub struct EigenEstimate {
    /// Dominant eigenvector normalized to unit 1-norm.
    pub vector: Vec<f64>,
    /// Rayleigh-quotient estimate of the dominant eigenvalue.
    pub eigenvalue: f64,
    pub iterations: usize,
    pub converged: bool,
    /// Set when zero entries persisted, suggesting a reducible matrix.
    pub reducible_warning: bool,
}

const POWER_MAX_ITER: usize = 100_000;

/// Plain power iteration with max-norm normalization, started from the
/// uniform vector.
pub fn dominant_eigenvector(m: &Matrix, tol: f64) -> Result<EigenEstimate> {
    let n = m.rows();
    dominant_eigenvector_from(m, &vec![1.0; n], tol)
}

/// Power iteration from an explicit non-negative starting vector.
pub fn dominant_eigenvector_from(m: &Matrix, start: &[f64], tol: f64) -> Result<EigenEstimate> {
    let n = m.rows();
    if m.cols() != n {
        return Err(Error::data("dominant_eigenvector requires a square matrix"));
    }
    if n > 2000 {
        return Err(Error::config(format!(
            "dense power iteration capped at n <= 2000, got {n}"
        )));
    }
    if start.len() != n {
        return Err(Error::data("start vector length does not match matrix"));
    }
    if m.rows() == 0 {
        return Err(Error::data("empty matrix"));
    }

    let mut x: Vec<f64> = start.to_vec();
    let scale = linalg::norm_inf(&x);
    if scale <= 0.0 {
        return Err(Error::data("start vector must be non-zero"));
    }
    for v in &mut x {
        *v /= scale;
    }

    let mut iterations = 0;
    let mut converged = false;
    let mut zero_streak = 0usize;
    let mut reducible_warning = false;
    for it in 1..=POWER_MAX_ITER {
        iterations = it;
        let mut next = m.matvec(&x);
        let norm = linalg::norm_inf(&next);
        if norm <= 0.0 || !norm.is_finite() {
            return Err(Error::numeric(format!(
                "power iteration degenerated at iteration {it}"
            )));
        }
        for v in &mut next {
            *v /= norm;
        }
        if next.contains(&0.0) {
            zero_streak += 1;
            if zero_streak >= 100 {
                reducible_warning = true;
            }
        } else {
            zero_streak = 0;
        }
        let diff = linalg::diff_inf(&next, &x);
        x = next;
        if diff < tol {
            converged = true;
            break;
        }
    }

    // Rayleigh quotient on the max-norm-normalized iterate.
    let mx = m.matvec(&x);
    let num: f64 = mx.iter().zip(&x).map(|(a, b)| a * b).sum();
    let den: f64 = x.iter().map(|v| v * v).sum();
    let eigenvalue = num / den;

    let total = linalg::norm1(&x);
    let vector: Vec<f64> = x.iter().map(|v| v / total).collect();
    Ok(EigenEstimate {
        vector,
        eigenvalue,
        iterations,
        converged,
        reducible_warning,
    })
}
