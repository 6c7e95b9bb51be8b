//! Balance sheets, solvency indices, vulnerability weights and the
//! solvency-ratio vector.
//!
//! Sheets are simulated to be consistent with the network: interbank assets
//! equal the column sums of the exposure matrix, interbank liabilities the
//! row sums, capital is a 1-2% style fraction of total assets and deposits
//! balance the account.

use std::io::{BufRead, BufReader, Write};

use rand::Rng;
use rand_distr::{Distribution, Pareto};

use crate::error::{Error, Result};
use crate::linalg::Matrix;
use crate::netcore::DirectedFinancialNetwork;
use crate::rng;

/// Per-institution stylized balance sheet.
///
/// Accounting identity: `external_assets + interbank_assets =
/// interbank_liabilities + deposits + capital`.
#[derive(Debug, Clone, PartialEq)]
pub struct BalanceSheet {
    pub external_assets: f64,
    pub interbank_assets: f64,
    pub interbank_liabilities: f64,
    pub deposits: f64,
    pub capital: f64,
}

impl BalanceSheet {
    pub fn total_assets(&self) -> f64 {
        self.external_assets + self.interbank_assets
    }

    /// Signed accounting-identity residual relative to total assets.
    pub fn identity_residual(&self) -> f64 {
        let lhs = self.total_assets();
        let rhs = self.interbank_liabilities + self.deposits + self.capital;
        (lhs - rhs) / lhs.max(1e-300)
    }
}

/// Solvency state of one institution under a given loss-given-default
/// fraction and deposit shock.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolvencyState {
    /// Raw solvency ratio before capping.
    pub chi: f64,
    /// `min(chi, 1)`.
    pub solvency_index: f64,
    pub phi: f64,
    pub shock: f64,
    /// Set when the institution has no interbank liabilities, in which case
    /// the solvency condition cannot bind and the index is defined as 1.
    pub no_interbank_liabilities: bool,
}

/// Parameters of the exposure law.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ParetoParams {
    #[serde(rename = "pareto_shape")]
    pub shape: f64,
    #[serde(rename = "pareto_scale")]
    pub scale: f64,
}

impl ParetoParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.shape > 1.0) {
            return Err(Error::config(format!(
                "pareto shape must be > 1 (finite mean), got {}",
                self.shape
            )));
        }
        if !(self.scale > 0.0) {
            return Err(Error::config(format!("pareto scale must be > 0, got {}", self.scale)));
        }
        Ok(())
    }
}

/// Re-draws every edge exposure independently from `Pareto(shape, scale)`.
/// The structure is unchanged and the result is deterministic per seed.
pub fn simulate_exposures(
    net: &DirectedFinancialNetwork,
    params: ParetoParams,
    rng_seed: u64,
) -> Result<DirectedFinancialNetwork> {
    params.validate()?;
    let mut rng = rng::stream(rng_seed, "exposures", 0);
    let pareto = Pareto::new(params.scale, params.shape)
        .map_err(|e| Error::config(format!("pareto: {e}")))?;
    let draws: Vec<f64> = net.edges().iter().map(|_| pareto.sample(&mut rng)).collect();
    net.with_exposures(&draws)
}

/// Sheet-simulation parameters.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BalanceParams {
    /// Lower bound of the capital-to-total-assets draw.
    #[serde(rename = "cap_low")]
    pub capital_ratio_low: f64,
    /// Upper bound of the capital-to-total-assets draw.
    #[serde(rename = "cap_high")]
    pub capital_ratio_high: f64,
    /// Scales external assets relative to a node's interbank activity.
    #[serde(rename = "ext_multiplier")]
    pub external_asset_multiplier: f64,
}

impl BalanceParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.capital_ratio_low > 0.0
            && self.capital_ratio_low <= self.capital_ratio_high
            && self.capital_ratio_high < 1.0)
        {
            return Err(Error::config(format!(
                "capital ratios must satisfy 0 < low <= high < 1, got [{}, {}]",
                self.capital_ratio_low, self.capital_ratio_high
            )));
        }
        if !(self.external_asset_multiplier > 0.0) {
            return Err(Error::config(format!(
                "external asset multiplier must be > 0, got {}",
                self.external_asset_multiplier
            )));
        }
        Ok(())
    }
}

const REDRAW_LIMIT: u32 = 32;

/// Simulates one balance sheet per node.
///
/// Interbank assets and liabilities come from the exposure matrix. External
/// assets are drawn as `multiplier * mean_incident_exposure * max(deg_in, 1)`
/// with Uniform[0.5, 1.5] noise; capital is a Uniform[low, high] fraction of
/// total assets and deposits are the balancing residual. When the residual
/// would be negative the external-asset draw is repeated with a doubled
/// base (bounded), so heavily indebted nodes still balance.
pub fn derive_balance_sheets(
    net: &DirectedFinancialNetwork,
    params: BalanceParams,
    rng_seed: u64,
) -> Result<Vec<BalanceSheet>> {
    params.validate()?;
    let n = net.node_count();
    let mut rng = rng::stream(rng_seed, "balance", 0);
    let global_mean = if net.edge_count() > 0 {
        net.total_exposure() / net.edge_count() as f64
    } else {
        1.0
    };

    let mut sheets = Vec::with_capacity(n);
    for node in 0..n {
        let a_int = net.in_strength(node);
        let l_int = net.out_strength(node);
        let deg_in = net.in_degree(node);
        let incident = deg_in + net.out_degree(node);
        let mean_exposure = if incident > 0 {
            (a_int + l_int) / incident as f64
        } else {
            global_mean
        };
        let base = params.external_asset_multiplier * mean_exposure * deg_in.max(1) as f64;

        let capital_ratio = rng.random_range(params.capital_ratio_low..=params.capital_ratio_high);
        let mut accepted = None;
        for attempt in 0..REDRAW_LIMIT {
            let noise = rng.random_range(0.5..=1.5);
            let a_ext = base * noise * f64::from(1u32 << attempt.min(30));
            let capital = capital_ratio * (a_ext + a_int);
            let deposits = a_ext + a_int - l_int - capital;
            if deposits >= 0.0 && capital > 0.0 && a_ext.is_finite() {
                accepted = Some(BalanceSheet {
                    external_assets: a_ext,
                    interbank_assets: a_int,
                    interbank_liabilities: l_int,
                    deposits,
                    capital,
                });
                break;
            }
        }
        match accepted {
            Some(sheet) => sheets.push(sheet),
            None => {
                return Err(Error::config(format!(
                    "node {node}: could not draw non-negative deposits after {REDRAW_LIMIT} attempts"
                )))
            }
        }
    }
    Ok(sheets)
}

/// Solvency index: `chi = ((1 - phi) * A_int + A_ext - deposits + shock) / L_int`,
/// capped above at 1. Institutions without interbank liabilities get index 1
/// with a flag, since the solvency condition cannot bind.
pub fn solvency_index(sheet: &BalanceSheet, phi: f64, shock: f64) -> Result<SolvencyState> {
    if !(0.0..=1.0).contains(&phi) {
        return Err(Error::config(format!("phi must lie in [0, 1], got {phi}")));
    }
    if !shock.is_finite() {
        return Err(Error::data(format!("shock must be finite, got {shock}")));
    }
    if sheet.interbank_liabilities <= 0.0 {
        return Ok(SolvencyState {
            chi: 1.0,
            solvency_index: 1.0,
            phi,
            shock,
            no_interbank_liabilities: true,
        });
    }
    let numerator =
        (1.0 - phi) * sheet.interbank_assets + sheet.external_assets - sheet.deposits + shock;
    let chi = numerator / sheet.interbank_liabilities;
    Ok(SolvencyState {
        chi,
        solvency_index: chi.min(1.0),
        phi,
        shock,
        no_interbank_liabilities: false,
    })
}

/// Convenience: solvency indices for all nodes under per-node shocks.
pub fn solvency_indices(
    sheets: &[BalanceSheet],
    phi: f64,
    shocks: &[f64],
) -> Result<Vec<SolvencyState>> {
    if shocks.len() != sheets.len() {
        return Err(Error::data("shock vector length does not match sheet count"));
    }
    sheets
        .iter()
        .zip(shocks)
        .map(|(s, &eps)| solvency_index(s, phi, eps))
        .collect()
}

/// Vulnerability weights `w_ij = min(exposure_ij / capital_i, 1)` on edges,
/// 0 elsewhere. Requires strictly positive capital everywhere.
pub fn vulnerability_weights(
    net: &DirectedFinancialNetwork,
    sheets: &[BalanceSheet],
) -> Result<Matrix> {
    let n = net.node_count();
    if sheets.len() != n {
        return Err(Error::data("sheet count does not match node count"));
    }
    for (i, s) in sheets.iter().enumerate() {
        if !(s.capital > 0.0) {
            return Err(Error::data(format!(
                "node {i} has non-positive capital {}",
                s.capital
            )));
        }
    }
    let mut w = Matrix::zeros(n, n);
    for e in net.edges() {
        w.set(e.src, e.dst, (e.exposure / sheets[e.src].capital).min(1.0));
    }
    Ok(w)
}

/// Solvency ratios with degeneracy accounting.
#[derive(Debug, Clone, PartialEq)]
pub struct SolvencyRatios {
    pub values: Vec<f64>,
    /// Nodes whose out-neighborhood solvency sum was non-positive, making
    /// the ratio fall back to `1 / deg_out`.
    pub fallback_nodes: Vec<usize>,
}

/// `r_i = Solv_i / sum of Solv_j over out-neighbors j`. Nodes with no
/// out-neighbors get 0; a non-positive denominator falls back to
/// `1 / deg_out(i)` and the node is reported.
pub fn solvency_ratio(net: &DirectedFinancialNetwork, solvency: &[f64]) -> Result<SolvencyRatios> {
    let n = net.node_count();
    if solvency.len() != n {
        return Err(Error::data("solvency vector length does not match node count"));
    }
    let mut values = vec![0.0; n];
    let mut fallback_nodes = Vec::new();
    for i in 0..n {
        let deg_out = net.out_degree(i);
        if deg_out == 0 {
            continue;
        }
        let denom: f64 = net.out_neighbors(i).map(|e| solvency[e.dst]).sum();
        if denom > 0.0 {
            values[i] = solvency[i] / denom;
        } else {
            values[i] = 1.0 / deg_out as f64;
            fallback_nodes.push(i);
        }
    }
    Ok(SolvencyRatios {
        values,
        fallback_nodes,
    })
}

/// Writes sheets as CSV with header `node,a_ext,a_int,l_int,deposits,capital`.
pub fn write_balance_csv(
    sheets: &[BalanceSheet],
    w: &mut impl Write,
    header_comments: &[String],
) -> Result<()> {
    for line in header_comments {
        writeln!(w, "# {line}")?;
    }
    writeln!(w, "node,a_ext,a_int,l_int,deposits,capital")?;
    for (i, s) in sheets.iter().enumerate() {
        writeln!(
            w,
            "{},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e}",
            i, s.external_assets, s.interbank_assets, s.interbank_liabilities, s.deposits, s.capital
        )?;
    }
    Ok(())
}

/// Loads a balance-sheet CSV written by [`write_balance_csv`]. Rows must be
/// sorted by node id starting at 0.
pub fn read_balance_csv(r: impl std::io::Read) -> Result<Vec<BalanceSheet>> {
    const HEADER: &str = "node,a_ext,a_int,l_int,deposits,capital";
    let reader = BufReader::new(r);
    let mut sheets = Vec::new();
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
        let node: usize = f[0].parse().map_err(|_| bad("node"))?;
        if node != sheets.len() {
            return Err(Error::Parse(format!(
                "line {}: expected node {}, got {node}",
                lineno + 1,
                sheets.len()
            )));
        }
        sheets.push(BalanceSheet {
            external_assets: f[1].parse().map_err(|_| bad("a_ext"))?,
            interbank_assets: f[2].parse().map_err(|_| bad("a_int"))?,
            interbank_liabilities: f[3].parse().map_err(|_| bad("l_int"))?,
            deposits: f[4].parse().map_err(|_| bad("deposits"))?,
            capital: f[5].parse().map_err(|_| bad("capital"))?,
        });
    }
    if !saw_header {
        return Err(Error::Parse("empty balance CSV".into()));
    }
    Ok(sheets)
}
