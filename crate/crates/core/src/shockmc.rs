//! Deposit-shock injection and Monte-Carlo impact estimation.
//!
//! Each run selects a fraction of nodes, hits them with negative
//! half-normal deposit shocks, recomputes solvency and ratios, and re-runs
//! the impact iteration. Per-run sub-seeds are derived from the root seed
//! and the run index, so runs are reproducible independent of scheduling.

use rand::seq::index::sample;
use rand::Rng;
use rand_distr::{Distribution, Normal};

use crate::balance::{self, BalanceSheet};
use crate::error::{Error, Result};
use crate::impact::{self, ImpactVector, IterationMatrices, ToleranceMode};
use crate::linalg::Matrix;
use crate::netcore::{CentralityScores, DirectedFinancialNetwork, DistanceMode};
use crate::rng;
use crate::stats::EmpiricalDistribution;

/// Shock direction. Deposit shocks in this model are always adverse.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ShockSign {
    #[default]
    Negative,
}

/// Deposit-shock parameters.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct ShockConfig {
    /// Fraction of nodes hit, in (0, 1].
    pub fraction_hit: f64,
    pub magnitude_mean: f64,
    pub magnitude_sd: f64,
    #[serde(default)]
    pub sign: ShockSign,
    pub rng_seed: u64,
}

impl ShockConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.fraction_hit > 0.0 && self.fraction_hit <= 1.0) {
            return Err(Error::config(format!(
                "fraction_hit must lie in (0, 1], got {}",
                self.fraction_hit
            )));
        }
        if !(self.magnitude_sd >= 0.0) {
            return Err(Error::config(format!(
                "magnitude_sd must be >= 0, got {}",
                self.magnitude_sd
            )));
        }
        if !self.magnitude_mean.is_finite() {
            return Err(Error::config("magnitude_mean must be finite"));
        }
        Ok(())
    }
}

/// Draws per-node shock values: `ceil(fraction * n)` nodes chosen uniformly
/// without replacement each receive `-|Normal(mean, sd)|`; all others get 0.
pub fn apply_shocks(sheets: &[BalanceSheet], cfg: &ShockConfig) -> Result<Vec<f64>> {
    let mut rng = rng::stream(cfg.rng_seed, "shock", 0);
    draw_shocks_with(sheets.len(), cfg, &mut rng)
}

/// [`apply_shocks`] driven by an external RNG, for callers that manage
/// per-run sub-seed streams themselves.
pub fn draw_shocks_with(n: usize, cfg: &ShockConfig, rng: &mut impl Rng) -> Result<Vec<f64>> {
    cfg.validate()?;
    if cfg.fraction_hit * (n as f64) < 1.0 {
        return Err(Error::config(format!(
            "fraction_hit {} selects no nodes out of {n}",
            cfg.fraction_hit
        )));
    }
    let hit = (cfg.fraction_hit * n as f64).ceil() as usize;
    let chosen = sample(rng, n, hit.min(n));
    let mut eps = vec![0.0; n];
    if cfg.magnitude_sd == 0.0 {
        for idx in chosen {
            eps[idx] = -cfg.magnitude_mean.abs();
        }
    } else {
        let normal = Normal::new(cfg.magnitude_mean, cfg.magnitude_sd)
            .map_err(|e| Error::config(format!("normal: {e}")))?;
        for idx in chosen {
            eps[idx] = -normal.sample(rng).abs();
        }
    }
    Ok(eps)
}

/// Precomputed shock-independent state for repeated impact evaluations:
/// vulnerability weights, centralities and solver settings.
#[derive(Debug, Clone)]
pub struct ImpactEngine {
    pub weights: Matrix,
    pub centrality: CentralityScores,
    pub phi: f64,
    pub tolerance: f64,
    pub max_iter: usize,
    pub tolerance_mode: ToleranceMode,
}

impl ImpactEngine {
    pub fn prepare(
        net: &DirectedFinancialNetwork,
        sheets: &[BalanceSheet],
        phi: f64,
        tolerance: f64,
        max_iter: usize,
        tolerance_mode: ToleranceMode,
        distance_mode: DistanceMode,
    ) -> Result<Self> {
        let weights = balance::vulnerability_weights(net, sheets)?;
        let centrality = CentralityScores::compute(net, distance_mode)?;
        Ok(ImpactEngine {
            weights,
            centrality,
            phi,
            tolerance,
            max_iter,
            tolerance_mode,
        })
    }

    /// Iteration matrices for a given per-node shock vector.
    pub fn matrices_for_shocks(
        &self,
        net: &DirectedFinancialNetwork,
        sheets: &[BalanceSheet],
        shocks: &[f64],
    ) -> Result<IterationMatrices> {
        let states = balance::solvency_indices(sheets, self.phi, shocks)?;
        let solvency: Vec<f64> = states.iter().map(|s| s.solvency_index).collect();
        let ratios = balance::solvency_ratio(net, &solvency)?;
        impact::build_iteration_matrices(
            &self.weights,
            &self.centrality.closeness,
            &self.centrality.betweenness,
            &ratios.values,
        )
    }

    /// Full impact evaluation under a shock vector.
    pub fn impact_for_shocks(
        &self,
        net: &DirectedFinancialNetwork,
        sheets: &[BalanceSheet],
        shocks: &[f64],
    ) -> Result<ImpactVector> {
        let mats = self.matrices_for_shocks(net, sheets, shocks)?;
        impact::iterate_impact_with(&mats, self.tolerance, self.max_iter, self.tolerance_mode)
    }
}

/// Monte-Carlo summary: per-node mean and percentile confidence interval.
#[derive(Debug, Clone, PartialEq)]
pub struct McSummary {
    pub mean_impact: Vec<f64>,
    pub ci_low: Vec<f64>,
    pub ci_high: Vec<f64>,
    /// Successful runs contributing to the summary.
    pub runs: usize,
    pub failed_runs: usize,
}

/// Maximum tolerated fraction of failed runs.
const MAX_FAILURE_FRACTION: f64 = 0.2;

/// Runs the shock Monte-Carlo: each run draws a shock fraction from the
/// grid, applies shocks, recomputes solvency and the impact iteration.
/// Returns per-node means with percentile [2.5%, 97.5%] intervals.
pub fn monte_carlo_impact(
    net: &DirectedFinancialNetwork,
    sheets: &[BalanceSheet],
    engine: &ImpactEngine,
    cfg: &ShockConfig,
    runs: usize,
    fraction_grid: &[f64],
) -> Result<McSummary> {
    Ok(monte_carlo_impact_with_samples(net, sheets, engine, cfg, runs, fraction_grid)?.0)
}

/// [`monte_carlo_impact`] that also returns per-node run samples, for the
/// long-format per-run report.
pub fn monte_carlo_impact_with_samples(
    net: &DirectedFinancialNetwork,
    sheets: &[BalanceSheet],
    engine: &ImpactEngine,
    cfg: &ShockConfig,
    runs: usize,
    fraction_grid: &[f64],
) -> Result<(McSummary, Vec<Vec<f64>>)> {
    if runs < 2 {
        return Err(Error::config(format!("runs must be >= 2, got {runs}")));
    }
    if fraction_grid.is_empty() {
        return Err(Error::config("fraction grid must not be empty"));
    }
    cfg.validate()?;
    let n = net.node_count();
    let mut samples: Vec<Vec<f64>> = vec![Vec::with_capacity(runs); n];
    let mut failed = 0usize;
    for run in 0..runs {
        let mut run_rng = rng::stream(cfg.rng_seed, "mc-run", run as u64);
        let fraction = fraction_grid[run_rng.random_range(0..fraction_grid.len())];
        let run_cfg = ShockConfig {
            fraction_hit: fraction,
            ..*cfg
        };
        let outcome = draw_shocks_with(n, &run_cfg, &mut run_rng)
            .and_then(|eps| engine.impact_for_shocks(net, sheets, &eps));
        match outcome {
            Ok(iv) if iv.converged => {
                for (node, &v) in iv.p.iter().enumerate() {
                    samples[node].push(v);
                }
            }
            Ok(_) | Err(Error::Numeric(_)) => failed += 1,
            Err(e) => return Err(e),
        }
    }
    let successes = runs - failed;
    if (failed as f64) > MAX_FAILURE_FRACTION * runs as f64 || successes < 2 {
        return Err(Error::Experiment(format!(
            "{failed} of {runs} Monte-Carlo runs failed"
        )));
    }
    let mut summary = summarize_runs(&samples)?;
    summary.failed_runs = failed;
    Ok((summary, samples))
}

/// Percentile summary of per-node run samples. Exposed so synthetic
/// distributions can exercise the interval logic directly.
pub fn summarize_runs(samples_per_node: &[Vec<f64>]) -> Result<McSummary> {
    let runs = samples_per_node.first().map_or(0, Vec::len);
    if runs == 0 {
        return Err(Error::data("no run samples to summarize"));
    }
    let mut mean_impact = Vec::with_capacity(samples_per_node.len());
    let mut ci_low = Vec::with_capacity(samples_per_node.len());
    let mut ci_high = Vec::with_capacity(samples_per_node.len());
    for series in samples_per_node {
        if series.len() != runs {
            return Err(Error::data("ragged run samples"));
        }
        let mean = series.iter().sum::<f64>() / runs as f64;
        let dist = EmpiricalDistribution::new(series.clone())?;
        let low = dist.quantile(0.025)?.min(mean);
        let high = dist.quantile(0.975)?.max(mean);
        mean_impact.push(mean);
        ci_low.push(low);
        ci_high.push(high);
    }
    Ok(McSummary {
        mean_impact,
        ci_low,
        ci_high,
        runs,
        failed_runs: 0,
    })
}

/// Writes `node,mean,ci_low,ci_high` CSV.
pub fn write_mc_csv(
    summary: &McSummary,
    w: &mut impl std::io::Write,
    header_comments: &[String],
) -> Result<()> {
    for line in header_comments {
        writeln!(w, "# {line}")?;
    }
    writeln!(w, "node,mean,ci_low,ci_high")?;
    for i in 0..summary.mean_impact.len() {
        writeln!(
            w,
            "{},{:.16e},{:.16e},{:.16e}",
            i, summary.mean_impact[i], summary.ci_low[i], summary.ci_high[i]
        )?;
    }
    Ok(())
}

/// Writes the long-format per-run report: `run,node,impact`.
pub fn write_mc_runs_csv(
    samples_per_node: &[Vec<f64>],
    w: &mut impl std::io::Write,
    header_comments: &[String],
) -> Result<()> {
    for line in header_comments {
        writeln!(w, "# {line}")?;
    }
    writeln!(w, "run,node,impact")?;
    let runs = samples_per_node.first().map_or(0, Vec::len);
    for run in 0..runs {
        for (node, series) in samples_per_node.iter().enumerate() {
            writeln!(w, "{},{},{:.16e}", run, node, series[run])?;
        }
    }
    Ok(())
}
