//! Empirical distributions, DKW confidence bands, quantile confidence
//! intervals, SIFI-count probabilities and bucket classification.

use std::io::Write;

use crate::error::{Error, Result};
use crate::impact::ImpactVector;

/// Sorted sample with ECDF and quantile queries.
#[derive(Debug, Clone, PartialEq)]
pub struct EmpiricalDistribution {
    samples: Vec<f64>,
}

impl EmpiricalDistribution {
    /// Sorts the sample. Empty or non-finite input is a data error.
    pub fn new(mut samples: Vec<f64>) -> Result<Self> {
        if samples.is_empty() {
            return Err(Error::data("empty sample"));
        }
        if samples.iter().any(|x| !x.is_finite()) {
            return Err(Error::data("sample contains non-finite values"));
        }
        samples.sort_by(|a, b| a.partial_cmp(b).unwrap());
        Ok(EmpiricalDistribution { samples })
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn sorted_samples(&self) -> &[f64] {
        &self.samples
    }

    /// Right-continuous ECDF: fraction of samples `<= x`.
    pub fn evaluate(&self, x: f64) -> f64 {
        let count = self.samples.partition_point(|&s| s <= x);
        count as f64 / self.samples.len() as f64
    }

    /// Left-continuous generalized inverse: the smallest sample `x` with
    /// `ECDF(x) >= p`. Accepts `p` in `(0, 1]`.
    pub fn quantile(&self, p: f64) -> Result<f64> {
        if !(p > 0.0 && p <= 1.0) {
            return Err(Error::config(format!("quantile level must lie in (0, 1], got {p}")));
        }
        let n = self.samples.len();
        let idx = ((p * n as f64).ceil() as usize).clamp(1, n) - 1;
        Ok(self.samples[idx])
    }

    /// k-th order statistic, 1-based.
    pub fn order_statistic(&self, k: usize) -> Result<f64> {
        if k == 0 || k > self.samples.len() {
            return Err(Error::data(format!(
                "order statistic index {k} outside 1..={}",
                self.samples.len()
            )));
        }
        Ok(self.samples[k - 1])
    }
}

/// Builds the ECDF of a sample.
pub fn ecdf(samples: &[f64]) -> Result<EmpiricalDistribution> {
    EmpiricalDistribution::new(samples.to_vec())
}

/// Simultaneous distribution-free confidence band for the ECDF.
#[derive(Debug, Clone)]
pub struct DkwBand<'a> {
    dist: &'a EmpiricalDistribution,
    pub epsilon: f64,
    pub alpha_prime: f64,
}

impl DkwBand<'_> {
    /// `L(x) = max(ECDF(x) - epsilon, 0)`.
    pub fn lower(&self, x: f64) -> f64 {
        (self.dist.evaluate(x) - self.epsilon).max(0.0)
    }

    /// `U(x) = min(ECDF(x) + epsilon, 1)`.
    pub fn upper(&self, x: f64) -> f64 {
        (self.dist.evaluate(x) + self.epsilon).min(1.0)
    }
}

/// Band half-width `epsilon = sqrt(ln(2 / alpha') / (2n))`.
pub fn dkw_band(dist: &EmpiricalDistribution, alpha_prime: f64) -> Result<DkwBand<'_>> {
    if !(alpha_prime > 0.0 && alpha_prime < 1.0) {
        return Err(Error::config(format!(
            "alpha' must lie in (0, 1), got {alpha_prime}"
        )));
    }
    let n = dist.len() as f64;
    let epsilon = ((2.0 / alpha_prime).ln() / (2.0 * n)).sqrt();
    Ok(DkwBand {
        dist,
        epsilon,
        alpha_prime,
    })
}

/// Natural logs of factorials 0..=n.
fn ln_factorials(n: usize) -> Vec<f64> {
    let mut table = vec![0.0; n + 1];
    for i in 1..=n {
        table[i] = table[i - 1] + (i as f64).ln();
    }
    table
}

/// Upper binomial tail `P(X >= r)` for `X ~ Binomial(n, q)`, computed with
/// log-space coefficients so `n` up to 10^4 stays stable.
pub fn binomial_upper_tail(n: usize, q: f64, r: usize) -> f64 {
    if r == 0 {
        return 1.0;
    }
    if r > n {
        return 0.0;
    }
    if q <= 0.0 {
        return 0.0;
    }
    if q >= 1.0 {
        return 1.0;
    }
    let lnf = ln_factorials(n);
    let ln_q = q.ln();
    let ln_1q = (1.0 - q).ln();
    let mut total = 0.0;
    for i in r..=n {
        let ln_term =
            lnf[n] - lnf[i] - lnf[n - i] + i as f64 * ln_q + (n - i) as f64 * ln_1q;
        total += ln_term.exp();
    }
    total.min(1.0)
}

/// `P(M >= r)` where `M` counts samples at or below the threshold `u`:
/// binomial upper tail with success probability `ECDF(u)`.
pub fn prob_at_least_r(dist: &EmpiricalDistribution, u: f64, r: usize) -> f64 {
    binomial_upper_tail(dist.len(), dist.evaluate(u), r)
}

/// Distribution-free confidence interval for the `p`-quantile as a pair of
/// 1-based order-statistic indices `(k, l)`, each tail holding `alpha'/2`:
///
/// - `k` = largest index with `P(X_(k) <= u_p) >= 1 - alpha'/2`
/// - `l` = smallest index with `P(X_(l) <= u_p) <= alpha'/2`
///
/// where `P(X_(i) <= u_p) = P(Binomial(n, p) >= i)`.
pub fn quantile_ci(
    dist: &EmpiricalDistribution,
    p: f64,
    alpha_prime: f64,
) -> Result<(usize, usize)> {
    if !(p > 0.0 && p < 1.0) {
        return Err(Error::config(format!("quantile level must lie in (0, 1), got {p}")));
    }
    if !(alpha_prime > 0.0 && alpha_prime < 1.0) {
        return Err(Error::config(format!(
            "alpha' must lie in (0, 1), got {alpha_prime}"
        )));
    }
    let n = dist.len();
    let half = alpha_prime / 2.0;
    // One pass over the binomial pmf gives every tail by suffix summation;
    // P(Binomial(n, p) >= i) is non-increasing in i.
    let lnf = ln_factorials(n);
    let ln_p = p.ln();
    let ln_1p = (1.0 - p).ln();
    let pmf = |i: usize| -> f64 {
        (lnf[n] - lnf[i] - lnf[n - i] + i as f64 * ln_p + (n - i) as f64 * ln_1p).exp()
    };
    let mut k = None;
    let mut l = None;
    let mut tail = pmf(n);
    for i in (1..n).rev() {
        tail = (tail + pmf(i)).min(1.0);
        if k.is_none() && tail >= 1.0 - half {
            k = Some(i);
        }
        if tail <= half {
            l = Some(i);
        }
    }
    match (k, l) {
        (Some(k), Some(l)) if k < l => Ok((k, l)),
        _ => Err(Error::estimation(format!(
            "sample of size {n} cannot support a {:.1}% quantile interval at p={p}",
            100.0 * (1.0 - alpha_prime)
        ))),
    }
}

/// Poisson lower tail `P(X <= k)` with `lambda = n * q_tail`.
pub fn poisson_tail(n: usize, q_tail: f64, k: usize) -> Result<f64> {
    if !(0.0..=1.0).contains(&q_tail) {
        return Err(Error::config(format!("q_tail must lie in [0, 1], got {q_tail}")));
    }
    let lambda = n as f64 * q_tail;
    if lambda == 0.0 {
        return Ok(1.0);
    }
    let mut term = (-lambda).exp();
    let mut total = term;
    for j in 1..=k {
        term *= lambda / j as f64;
        total += term;
    }
    Ok(total.min(1.0))
}

const LOG_ODDS_CLAMP: f64 = 1e-9;

/// Bucket assignment with per-node SIFI probabilities and log-odds.
#[derive(Debug, Clone, PartialEq)]
pub struct SifiClassification {
    /// Empirical quantile thresholds, ascending.
    pub thresholds: Vec<f64>,
    /// Number of thresholds each node's score strictly exceeds.
    pub buckets: Vec<usize>,
    /// Mid-rank percentile of each node's score within the score
    /// distribution, clamped away from {0, 1}.
    pub probabilities: Vec<f64>,
    pub log_odds: Vec<f64>,
    /// Set when all scores are equal and every node lands in bucket 0.
    pub degenerate: bool,
}

/// Classifies nodes into buckets cut at the given score quantiles.
///
/// A node's SIFI probability is its mid-rank percentile under the empirical
/// distribution of all scores: nodes near the top of the ranking get
/// probabilities near 1. Boundary scores fall in the lower bucket.
pub fn classify(impact: &ImpactVector, bucket_quantiles: &[f64]) -> Result<SifiClassification> {
    classify_scores(&impact.p, bucket_quantiles)
}

/// [`classify`] on a raw score vector.
pub fn classify_scores(scores: &[f64], bucket_quantiles: &[f64]) -> Result<SifiClassification> {
    if bucket_quantiles.is_empty() {
        return Err(Error::config("at least one bucket quantile is required"));
    }
    for w in bucket_quantiles.windows(2) {
        if w[0] >= w[1] {
            return Err(Error::config("bucket quantiles must be strictly increasing"));
        }
    }
    if bucket_quantiles
        .iter()
        .any(|&q| !(0.0 < q && q < 1.0))
    {
        return Err(Error::config("bucket quantiles must lie in (0, 1)"));
    }
    let dist = EmpiricalDistribution::new(scores.to_vec())?;
    let thresholds: Vec<f64> = bucket_quantiles
        .iter()
        .map(|&q| dist.quantile(q))
        .collect::<Result<_>>()?;

    let n = scores.len() as f64;
    let sorted = dist.sorted_samples();
    let mut buckets = Vec::with_capacity(scores.len());
    let mut probabilities = Vec::with_capacity(scores.len());
    let mut log_odds = Vec::with_capacity(scores.len());
    for &s in scores {
        buckets.push(thresholds.iter().filter(|&&t| s > t).count());
        let below = sorted.partition_point(|&x| x < s);
        let at_or_below = sorted.partition_point(|&x| x <= s);
        let ties = at_or_below - below;
        let percentile = (below as f64 + 0.5 * ties as f64) / n;
        let p = percentile.clamp(LOG_ODDS_CLAMP, 1.0 - LOG_ODDS_CLAMP);
        probabilities.push(p);
        log_odds.push((p / (1.0 - p)).ln());
    }
    let degenerate = sorted[0] == sorted[sorted.len() - 1];
    Ok(SifiClassification {
        thresholds,
        buckets,
        probabilities,
        log_odds,
        degenerate,
    })
}

/// Log-odds of a probability clamped away from {0, 1}.
pub fn log_odds(p: f64) -> f64 {
    let p = p.clamp(LOG_ODDS_CLAMP, 1.0 - LOG_ODDS_CLAMP);
    (p / (1.0 - p)).ln()
}

/// Writes `node,impact,bucket,p_sifi,log_odds` CSV.
pub fn write_classification_csv(
    scores: &[f64],
    classification: &SifiClassification,
    w: &mut impl Write,
    header_comments: &[String],
) -> Result<()> {
    for line in header_comments {
        writeln!(w, "# {line}")?;
    }
    writeln!(w, "node,impact,bucket,p_sifi,log_odds")?;
    for (i, &s) in scores.iter().enumerate() {
        writeln!(
            w,
            "{},{:.16e},{},{:.16e},{:.16e}",
            i, s, classification.buckets[i], classification.probabilities[i], classification.log_odds[i]
        )?;
    }
    Ok(())
}
