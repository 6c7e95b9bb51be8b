//! End-to-end experiment assembly: configuration, the generate/derive/rank
//! pipeline, approximation-vs-oracle comparison rows and the
//! degree-perturbation experiment.

use std::io::Write;
use std::time::Instant;

use rand::seq::index::sample;
use rand::Rng;
use rand_distr::{Distribution, Pareto};
use serde::{Deserialize, Serialize};

use crate::balance::{self, BalanceParams, BalanceSheet, ParetoParams};
use crate::error::{Error, Result};
use crate::impact::{self, ImpactVector, ToleranceMode};
use crate::netcore::{self, DirectedFinancialNetwork, DistanceMode};
use crate::oracle;
use crate::rng;
use crate::shockmc::{self, ImpactEngine, McSummary, ShockConfig, ShockSign};
use crate::sinkrank;
use crate::stats;

/// Network source.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NetworkKind {
    Ba,
    Complete,
    File,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NetworkConfig {
    pub kind: NetworkKind,
    #[serde(default)]
    pub n: Option<usize>,
    #[serde(default)]
    pub m0: Option<usize>,
    #[serde(default)]
    pub k: Option<usize>,
    #[serde(default)]
    pub path: Option<String>,
    /// Optional balance-sheet CSV; when absent, sheets are simulated from
    /// the root seed.
    #[serde(default)]
    pub sheets_path: Option<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolvencyConfig {
    /// Loss-given-default fraction applied to interbank assets.
    pub phi: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolverConfig {
    pub tolerance: f64,
    pub max_iter: usize,
    #[serde(default = "default_tolerance_mode")]
    pub tolerance_mode: ToleranceMode,
    #[serde(default = "default_distance_mode")]
    pub distance_mode: DistanceMode,
    /// When set, replaces the `k/(k+1)` schedule with a fixed weight.
    #[serde(default)]
    pub fixed_alpha: Option<f64>,
}

fn default_tolerance_mode() -> ToleranceMode {
    ToleranceMode::RelativeToInitial
}

fn default_distance_mode() -> DistanceMode {
    DistanceMode::Unit
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ShockSection {
    pub fraction_hit: f64,
    pub magnitude_mean: f64,
    pub magnitude_sd: f64,
    /// Monte-Carlo runs draw their shock fraction from this grid; defaults
    /// to the single configured fraction.
    #[serde(default)]
    pub fraction_grid: Option<Vec<f64>>,
}

impl ShockSection {
    pub fn grid(&self) -> Vec<f64> {
        self.fraction_grid
            .clone()
            .unwrap_or_else(|| vec![self.fraction_hit])
    }

    pub fn to_shock_config(&self, root_seed: u64) -> ShockConfig {
        ShockConfig {
            fraction_hit: self.fraction_hit,
            magnitude_mean: self.magnitude_mean,
            magnitude_sd: self.magnitude_sd,
            sign: ShockSign::Negative,
            rng_seed: rng::subseed(root_seed, "shock-mc", 0),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ClassificationConfig {
    pub bucket_quantiles: Vec<f64>,
    pub alpha_prime: f64,
}

/// Optional settings for the degree-perturbation experiment command.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PerturbSection {
    /// Target node; defaults to the mid-ranked institution.
    #[serde(default)]
    pub target: Option<usize>,
    /// Edges added or removed per edit.
    #[serde(default = "default_perturb_edges")]
    pub m: usize,
    /// Seed replications averaged in the report.
    #[serde(default = "default_perturb_replications")]
    pub replications: usize,
}

fn default_perturb_edges() -> usize {
    10
}

fn default_perturb_replications() -> usize {
    5
}

impl Default for PerturbSection {
    fn default() -> Self {
        PerturbSection {
            target: None,
            m: default_perturb_edges(),
            replications: default_perturb_replications(),
        }
    }
}

/// Complete experiment configuration. A single root seed drives every
/// random draw via named sub-seeds.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PipelineConfig {
    pub network: NetworkConfig,
    pub exposures: ParetoParams,
    pub balance: BalanceParams,
    pub solvency: SolvencyConfig,
    pub shocks: ShockSection,
    pub solver: SolverConfig,
    pub classification: ClassificationConfig,
    #[serde(default)]
    pub perturb: Option<PerturbSection>,
    pub runs: usize,
    pub seed: u64,
}

impl PipelineConfig {
    /// A ready-to-run configuration for a generated network.
    pub fn example(kind: NetworkKind, n: usize, seed: u64) -> Self {
        PipelineConfig {
            network: NetworkConfig {
                kind,
                n: Some(n),
                m0: Some(3),
                k: Some(2),
                path: None,
                sheets_path: None,
            },
            exposures: ParetoParams {
                shape: 2.0,
                scale: 10.0,
            },
            balance: BalanceParams {
                capital_ratio_low: 0.01,
                capital_ratio_high: 0.02,
                external_asset_multiplier: 100.0,
            },
            solvency: SolvencyConfig { phi: 0.5 },
            shocks: ShockSection {
                fraction_hit: 0.05,
                magnitude_mean: 10.0,
                magnitude_sd: 5.0,
                fraction_grid: Some(vec![0.02, 0.04, 0.06, 0.08, 0.10]),
            },
            solver: SolverConfig {
                tolerance: 1e-5,
                max_iter: impact::DEFAULT_MAX_ITER,
                tolerance_mode: ToleranceMode::RelativeToInitial,
                distance_mode: DistanceMode::Unit,
                fixed_alpha: None,
            },
            classification: ClassificationConfig {
                bucket_quantiles: vec![0.5, 0.9],
                alpha_prime: 0.05,
            },
            perturb: None,
            runs: 100,
            seed,
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.exposures.validate()?;
        self.balance.validate()?;
        if !(0.0..=1.0).contains(&self.solvency.phi) {
            return Err(Error::config(format!(
                "phi must lie in [0, 1], got {}",
                self.solvency.phi
            )));
        }
        if !(self.solver.tolerance > 0.0) {
            return Err(Error::config("solver tolerance must be > 0"));
        }
        if self.solver.max_iter == 0 {
            return Err(Error::config("solver max_iter must be >= 1"));
        }
        match self.network.kind {
            NetworkKind::Ba => {
                let (n, m0, k) = (
                    self.network.n.ok_or_else(|| Error::config("ba network needs n"))?,
                    self.network.m0.ok_or_else(|| Error::config("ba network needs m0"))?,
                    self.network.k.ok_or_else(|| Error::config("ba network needs k"))?,
                );
                if !(n >= m0 && m0 >= k && k >= 1) {
                    return Err(Error::config(format!(
                        "ba network requires n >= m0 >= k >= 1, got n={n}, m0={m0}, k={k}"
                    )));
                }
            }
            NetworkKind::Complete => {
                let n = self
                    .network
                    .n
                    .ok_or_else(|| Error::config("complete network needs n"))?;
                if n < 2 {
                    return Err(Error::config("complete network needs n >= 2"));
                }
            }
            NetworkKind::File => {
                if self.network.path.is_none() {
                    return Err(Error::config("file network needs a path"));
                }
            }
        }
        Ok(())
    }
}

/// Builds the configured network with configured exposures.
pub fn build_network(cfg: &PipelineConfig) -> Result<DirectedFinancialNetwork> {
    cfg.validate()?;
    let structure_seed = rng::subseed(cfg.seed, "network", 0);
    let exposure_seed = rng::subseed(cfg.seed, "exposures", 0);
    match cfg.network.kind {
        NetworkKind::Ba => {
            let net = netcore::generate_ba(
                cfg.network.n.unwrap(),
                cfg.network.m0.unwrap(),
                cfg.network.k.unwrap(),
                structure_seed,
            )?;
            balance::simulate_exposures(&net, cfg.exposures, exposure_seed)
        }
        NetworkKind::Complete => {
            let net = netcore::generate_complete(cfg.network.n.unwrap(), structure_seed)?;
            balance::simulate_exposures(&net, cfg.exposures, exposure_seed)
        }
        NetworkKind::File => {
            DirectedFinancialNetwork::read_edge_csv_path(cfg.network.path.as_ref().unwrap())
        }
    }
}

/// Builds a payment-network realization: the configured structure with
/// gross bilateral flows, i.e. every link carries an independent exposure
/// draw in each direction. Banks in payment data both send and receive;
/// one-way nodes would be artifacts of the orientation coin.
pub fn payment_network(cfg: &PipelineConfig) -> Result<DirectedFinancialNetwork> {
    let net = build_network(cfg)?;
    let mut rng = rng::stream(cfg.seed, "payment-reverse", 0);
    let pareto = Pareto::new(cfg.exposures.scale, cfg.exposures.shape)
        .map_err(|e| Error::config(format!("pareto: {e}")))?;
    let mut edges: Vec<(usize, usize, f64)> = net
        .edges()
        .iter()
        .map(|e| (e.src, e.dst, e.exposure))
        .collect();
    let reversed: Vec<(usize, usize, f64)> = net
        .edges()
        .iter()
        .filter(|e| !net.has_edge(e.dst, e.src))
        .map(|e| (e.dst, e.src, pareto.sample(&mut rng)))
        .collect();
    edges.extend(reversed);
    DirectedFinancialNetwork::from_edges(net.node_count(), edges)
}

/// Shock-free pipeline state: network, sheets, solver engine and the
/// baseline impact vector.
#[derive(Debug, Clone)]
pub struct BaseRun {
    pub net: DirectedFinancialNetwork,
    pub sheets: Vec<BalanceSheet>,
    pub engine: ImpactEngine,
    pub impact: ImpactVector,
}

/// Derives sheets and solves the impact iteration without shocks.
pub fn run_base(cfg: &PipelineConfig) -> Result<BaseRun> {
    let net = build_network(cfg)?;
    run_base_on(cfg, net)
}

/// Loads or simulates sheets for a network per the configuration.
fn sheets_for(cfg: &PipelineConfig, net: &DirectedFinancialNetwork) -> Result<Vec<BalanceSheet>> {
    match &cfg.network.sheets_path {
        Some(path) => {
            let sheets = balance::read_balance_csv(std::fs::File::open(path)?)?;
            if sheets.len() != net.node_count() {
                return Err(Error::data(format!(
                    "balance CSV has {} rows but the network has {} nodes",
                    sheets.len(),
                    net.node_count()
                )));
            }
            for (i, s) in sheets.iter().enumerate() {
                let a_in = net.in_strength(i);
                let l_out = net.out_strength(i);
                if (s.interbank_assets - a_in).abs() > 1e-6 * a_in.max(1.0)
                    || (s.interbank_liabilities - l_out).abs() > 1e-6 * l_out.max(1.0)
                {
                    return Err(Error::data(format!(
                        "node {i}: balance CSV interbank positions do not match the network"
                    )));
                }
            }
            Ok(sheets)
        }
        None => balance::derive_balance_sheets(net, cfg.balance, rng::subseed(cfg.seed, "balance", 0)),
    }
}

/// [`run_base`] on an already-built network.
pub fn run_base_on(cfg: &PipelineConfig, net: DirectedFinancialNetwork) -> Result<BaseRun> {
    let sheets = sheets_for(cfg, &net)?;
    run_base_with_sheets(cfg, net, sheets)
}

/// [`run_base`] with explicit sheets.
pub fn run_base_with_sheets(
    cfg: &PipelineConfig,
    net: DirectedFinancialNetwork,
    sheets: Vec<BalanceSheet>,
) -> Result<BaseRun> {
    let engine = ImpactEngine::prepare(
        &net,
        &sheets,
        cfg.solvency.phi,
        cfg.solver.tolerance,
        cfg.solver.max_iter,
        cfg.solver.tolerance_mode,
        cfg.solver.distance_mode,
    )?;
    let zero_shocks = vec![0.0; net.node_count()];
    let impact = match cfg.solver.fixed_alpha {
        None => engine.impact_for_shocks(&net, &sheets, &zero_shocks)?,
        Some(alpha) => {
            let mats = engine.matrices_for_shocks(&net, &sheets, &zero_shocks)?;
            impact::iterate_impact_fixed_alpha(&mats, alpha, cfg.solver.tolerance, cfg.solver.max_iter)?
        }
    };
    Ok(BaseRun {
        net,
        sheets,
        engine,
        impact,
    })
}

/// Rejects grid fractions that cannot select a node on an `n`-node network.
fn validate_grid(grid: &[f64], n: usize) -> Result<()> {
    let infeasible: Vec<f64> = grid
        .iter()
        .copied()
        .filter(|f| f * (n as f64) < 1.0)
        .collect();
    if !infeasible.is_empty() {
        return Err(Error::config(format!(
            "shock fractions {infeasible:?} select no nodes on a {n}-node network"
        )));
    }
    Ok(())
}

/// Shock Monte-Carlo under the configured grid.
pub fn monte_carlo(cfg: &PipelineConfig) -> Result<(BaseRun, McSummary)> {
    let base = run_base(cfg)?;
    let grid = cfg.shocks.grid();
    validate_grid(&grid, base.net.node_count())?;
    let shock_cfg = cfg.shocks.to_shock_config(cfg.seed);
    let summary = shockmc::monte_carlo_impact(
        &base.net,
        &base.sheets,
        &base.engine,
        &shock_cfg,
        cfg.runs,
        &grid,
    )?;
    Ok((base, summary))
}

/// One row of the approximation-vs-oracle comparison.
#[derive(Debug, Clone, PartialEq)]
pub struct CompareRow {
    pub network_kind: String,
    pub n: usize,
    pub interconnections: usize,
    pub tolerance: f64,
    pub iterations: usize,
    pub cpu_time_s: f64,
    pub err_alg: f64,
    pub err_opt: f64,
    pub rel_err: f64,
}

/// Runs the iteration at each tolerance and benchmarks it against the
/// projected-gradient oracle on the same combined matrix.
///
/// The oracle is warm-started from the iteration's own normalized solution
/// (plus the uniform vector), so its objective can only improve on the
/// approximation and the relative error is non-negative up to float noise.
pub fn comparison_rows(cfg: &PipelineConfig, tolerances: &[f64]) -> Result<Vec<CompareRow>> {
    let base = run_base(cfg)?;
    let zero_shocks = vec![0.0; base.net.node_count()];
    let mats = base
        .engine
        .matrices_for_shocks(&base.net, &base.sheets, &zero_shocks)?;
    let kind = match cfg.network.kind {
        NetworkKind::Ba => "ba",
        NetworkKind::Complete => "complete",
        NetworkKind::File => "file",
    };
    let mut rows = Vec::with_capacity(tolerances.len());
    for &tol in tolerances {
        let started = Instant::now();
        let iv = impact::iterate_impact_with(
            &mats,
            tol,
            cfg.solver.max_iter,
            cfg.solver.tolerance_mode,
        )?;
        let cpu_time_s = started.elapsed().as_secs_f64();
        if !iv.converged {
            return Err(Error::numeric(format!(
                "impact iteration did not converge at tolerance {tol}"
            )));
        }
        let err_alg = impact::residual_norm(&mats, &iv)?;

        let m = mats.combined(iv.iterations.max(1));
        let scale = crate::linalg::norm1(&iv.p).max(1e-300);
        let warm = oracle::project_to_simplex(
            &iv.p.iter().map(|v| v / scale).collect::<Vec<_>>(),
        )?;
        let sol_warm =
            oracle::solve_optimal_from(&m, warm, oracle::StepRule::default(), 20_000, 1e-10)?;
        let sol_uniform = oracle::solve_optimal(&m, oracle::StepRule::default(), 20_000, 1e-10)?;
        let err_opt = sol_warm.objective.min(sol_uniform.objective);
        let rel_err = if err_opt > 0.0 {
            oracle::relative_error(err_alg, err_opt)?
        } else {
            err_alg
        };
        rows.push(CompareRow {
            network_kind: kind.to_string(),
            n: base.net.node_count(),
            interconnections: base.net.edge_count(),
            tolerance: tol,
            iterations: iv.iterations,
            cpu_time_s,
            err_alg,
            err_opt,
            rel_err,
        });
    }
    Ok(rows)
}

pub fn write_compare_csv(
    rows: &[CompareRow],
    w: &mut impl Write,
    header_comments: &[String],
) -> Result<()> {
    for line in header_comments {
        writeln!(w, "# {line}")?;
    }
    writeln!(
        w,
        "network_kind,n,interconnections,tolerance,iterations,cpu_time_s,err_alg,err_opt,rel_err"
    )?;
    for r in rows {
        writeln!(
            w,
            "{},{},{},{:.16e},{},{:.16e},{:.16e},{:.16e},{:.16e}",
            r.network_kind,
            r.n,
            r.interconnections,
            r.tolerance,
            r.iterations,
            r.cpu_time_s,
            r.err_alg,
            r.err_opt,
            r.rel_err
        )?;
    }
    Ok(())
}

/// SinkRank comparison rows for the configured network.
pub fn sinkrank_rows(cfg: &PipelineConfig) -> Result<Vec<sinkrank::ComparisonRow>> {
    let base = run_base(cfg)?;
    let tm = sinkrank::to_transition(&base.net)?;
    let inv = sinkrank::inv_sinkrank_scores(&tm)?;
    let profile = base.net.degrees();
    Ok((0..base.net.node_count())
        .map(|i| sinkrank::ComparisonRow {
            name: format!("bank{i}"),
            deg_out: profile.out_degree[i],
            deg_in: profile.in_degree[i],
            impact_index: base.impact.p[i],
            inv_sinkrank: inv[i],
            total_received: base.net.in_strength(i),
            total_sent: base.net.out_strength(i),
            equity: base.sheets[i].capital,
        })
        .collect())
}

/// Structural edit applied to one node's neighborhood.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NetworkEdit {
    AddInEdges(usize),
    AddOutEdges(usize),
    RemoveInEdges(usize),
    RemoveOutEdges(usize),
}

impl NetworkEdit {
    pub fn label(&self) -> &'static str {
        match self {
            NetworkEdit::AddInEdges(_) => "add_in_edges",
            NetworkEdit::AddOutEdges(_) => "add_out_edges",
            NetworkEdit::RemoveInEdges(_) => "remove_in_edges",
            NetworkEdit::RemoveOutEdges(_) => "remove_out_edges",
        }
    }

    pub fn count(&self) -> usize {
        match *self {
            NetworkEdit::AddInEdges(m)
            | NetworkEdit::AddOutEdges(m)
            | NetworkEdit::RemoveInEdges(m)
            | NetworkEdit::RemoveOutEdges(m) => m,
        }
    }
}

/// Applies a degree edit to `target`: added counterparties are chosen
/// uniformly among non-neighbors and their exposures drawn from the given
/// Pareto law; removals pick uniformly among existing edges.
pub fn edited_network(
    net: &DirectedFinancialNetwork,
    target: usize,
    edit: NetworkEdit,
    exposures: ParetoParams,
    rng_seed: u64,
) -> Result<DirectedFinancialNetwork> {
    let n = net.node_count();
    if target >= n {
        return Err(Error::config(format!("target {target} outside 0..{n}")));
    }
    exposures.validate()?;
    let mut edit_rng = rng::stream(rng_seed, "perturb-edit", 0);
    let pareto = Pareto::new(exposures.scale, exposures.shape)
        .map_err(|e| Error::config(format!("pareto: {e}")))?;

    let mut raw: Vec<(usize, usize, f64)> = net
        .edges()
        .iter()
        .map(|e| (e.src, e.dst, e.exposure))
        .collect();

    let pick = |rng: &mut rand_chacha::ChaCha8Rng, pool: &[usize], m: usize| -> Vec<usize> {
        sample(rng, pool.len(), m).into_iter().map(|i| pool[i]).collect()
    };

    match edit {
        NetworkEdit::AddOutEdges(m) => {
            let candidates: Vec<usize> = (0..n)
                .filter(|&v| v != target && !net.has_edge(target, v))
                .collect();
            if m > candidates.len() {
                return Err(Error::config(format!(
                    "cannot add {m} out-edges: only {} non-neighbors",
                    candidates.len()
                )));
            }
            for v in pick(&mut edit_rng, &candidates, m) {
                raw.push((target, v, pareto.sample(&mut edit_rng)));
            }
        }
        NetworkEdit::AddInEdges(m) => {
            let candidates: Vec<usize> = (0..n)
                .filter(|&u| u != target && !net.has_edge(u, target))
                .collect();
            if m > candidates.len() {
                return Err(Error::config(format!(
                    "cannot add {m} in-edges: only {} non-neighbors",
                    candidates.len()
                )));
            }
            for u in pick(&mut edit_rng, &candidates, m) {
                raw.push((u, target, pareto.sample(&mut edit_rng)));
            }
        }
        NetworkEdit::RemoveOutEdges(m) => {
            let existing: Vec<usize> = net.out_neighbors(target).map(|e| e.dst).collect();
            if m > existing.len() {
                return Err(Error::config(format!(
                    "cannot remove {m} out-edges: node has {}",
                    existing.len()
                )));
            }
            let victims = pick(&mut edit_rng, &existing, m);
            raw.retain(|&(s, d, _)| !(s == target && victims.contains(&d)));
        }
        NetworkEdit::RemoveInEdges(m) => {
            let existing: Vec<usize> = net.in_neighbors(target).map(|e| e.src).collect();
            if m > existing.len() {
                return Err(Error::config(format!(
                    "cannot remove {m} in-edges: node has {}",
                    existing.len()
                )));
            }
            let victims = pick(&mut edit_rng, &existing, m);
            raw.retain(|&(s, d, _)| !(d == target && victims.contains(&s)));
        }
    }
    DirectedFinancialNetwork::from_edges(n, raw)
}

/// Outcome of one perturbation experiment.
#[derive(Debug, Clone, PartialEq)]
pub struct PerturbationOutcome {
    pub delta_log_odds: f64,
    pub original_mean_log_odds: f64,
    pub edited_mean_log_odds: f64,
    /// Paired runs that succeeded on both networks.
    pub paired_runs: usize,
}

/// Runs the Monte-Carlo pipeline on the original and edited networks with
/// identical sub-seeds and returns the change in the target's mean log-odds
/// of ranking as a SIFI.
pub fn perturbation_experiment(
    cfg: &PipelineConfig,
    target: usize,
    edit: NetworkEdit,
    runs: usize,
) -> Result<PerturbationOutcome> {
    if runs < 1 {
        return Err(Error::config("perturbation experiment needs runs >= 1"));
    }
    let net = build_network(cfg)?;
    let edited = edited_network(
        &net,
        target,
        edit,
        cfg.exposures,
        rng::subseed(cfg.seed, "perturb", 0),
    )?;

    let original = prepare_mc_state(cfg, net)?;
    let edited = prepare_mc_state(cfg, edited)?;
    let shock_cfg = cfg.shocks.to_shock_config(cfg.seed);
    let grid = cfg.shocks.grid();
    validate_grid(&grid, original.net.node_count())?;

    let mut sum_orig = 0.0;
    let mut sum_edit = 0.0;
    let mut paired = 0usize;
    let mut failed = 0usize;
    for run in 0..runs {
        let orig_odds = mc_run_log_odds(&original, cfg, &shock_cfg, &grid, run, target);
        let edit_odds = mc_run_log_odds(&edited, cfg, &shock_cfg, &grid, run, target);
        match (orig_odds, edit_odds) {
            (Ok(a), Ok(b)) => {
                sum_orig += a;
                sum_edit += b;
                paired += 1;
            }
            _ => failed += 1,
        }
    }
    if paired == 0 || (failed as f64) > 0.2 * runs as f64 {
        return Err(Error::Experiment(format!(
            "{failed} of {runs} paired perturbation runs failed"
        )));
    }
    let original_mean = sum_orig / paired as f64;
    let edited_mean = sum_edit / paired as f64;
    Ok(PerturbationOutcome {
        delta_log_odds: edited_mean - original_mean,
        original_mean_log_odds: original_mean,
        edited_mean_log_odds: edited_mean,
        paired_runs: paired,
    })
}

struct McState {
    net: DirectedFinancialNetwork,
    sheets: Vec<BalanceSheet>,
    engine: ImpactEngine,
}

fn prepare_mc_state(cfg: &PipelineConfig, net: DirectedFinancialNetwork) -> Result<McState> {
    let sheets = sheets_for(cfg, &net)?;
    let engine = ImpactEngine::prepare(
        &net,
        &sheets,
        cfg.solvency.phi,
        cfg.solver.tolerance,
        cfg.solver.max_iter,
        cfg.solver.tolerance_mode,
        cfg.solver.distance_mode,
    )?;
    Ok(McState { net, sheets, engine })
}

fn mc_run_log_odds(
    state: &McState,
    cfg: &PipelineConfig,
    shock_cfg: &ShockConfig,
    grid: &[f64],
    run: usize,
    target: usize,
) -> Result<f64> {
    let n = state.net.node_count();
    let mut run_rng = rng::stream(shock_cfg.rng_seed, "mc-run", run as u64);
    let fraction = grid[run_rng.random_range(0..grid.len())];
    let run_cfg = ShockConfig {
        fraction_hit: fraction,
        ..*shock_cfg
    };
    let eps = shockmc::draw_shocks_with(n, &run_cfg, &mut run_rng)?;
    let iv = state.engine.impact_for_shocks(&state.net, &state.sheets, &eps)?;
    if !iv.converged {
        return Err(Error::numeric("impact iteration did not converge"));
    }
    let classification = stats::classify_scores(&iv.p, &cfg.classification.bucket_quantiles)?;
    Ok(classification.log_odds[target])
}

/// A target for degree edits: the node at the middle of the baseline
/// ranking.
pub fn mid_ranked_node(base: &BaseRun) -> usize {
    let ranking = impact::rank_institutions(&base.impact);
    ranking[ranking.len() / 2].0
}

/// One row of the perturbation report CSV.
#[derive(Debug, Clone, PartialEq)]
pub struct PerturbReportRow {
    pub edit_kind: String,
    pub m: usize,
    pub runs: usize,
    pub mean_delta_log_odds: f64,
    pub sign_agreement_fraction: f64,
}

pub fn write_perturb_csv(
    rows: &[PerturbReportRow],
    w: &mut impl Write,
    header_comments: &[String],
) -> Result<()> {
    for line in header_comments {
        writeln!(w, "# {line}")?;
    }
    writeln!(w, "edit_kind,m,runs,mean_delta_log_odds,sign_agreement_fraction")?;
    for r in rows {
        writeln!(
            w,
            "{},{},{},{:.16e},{:.16e}",
            r.edit_kind, r.m, r.runs, r.mean_delta_log_odds, r.sign_agreement_fraction
        )?;
    }
    Ok(())
}
