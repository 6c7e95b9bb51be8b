//! Command-line front end: generate networks and balance sheets, rank
//! institutions, benchmark the solver against the simplex oracle, classify
//! SIFIs, run degree-perturbation experiments and the SinkRank comparison.
//!
//! Exit codes: 0 ok, 1 configuration, 2 I/O, 3 numeric/data.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use serde_json::json;

use sifirank_core::error::Error;
use sifirank_core::impact;
use sifirank_core::pipeline::{self, NetworkEdit, PerturbReportRow, PipelineConfig};
use sifirank_core::{balance, sinkrank, stats};

#[derive(Parser)]
#[command(name = "sifirank", version, about = "Systemic-risk ranking engine for interbank networks")]
struct Cli {
    /// Experiment configuration (strict JSON; unknown keys are errors).
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Root seed override.
    #[arg(long, global = true)]
    seed: Option<u64>,

    /// Output directory.
    #[arg(long, global = true, default_value = ".")]
    out: PathBuf,

    /// Output format.
    #[arg(long, global = true, value_enum, default_value_t = Format::Csv)]
    format: Format,

    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Csv,
    Json,
}

#[derive(Subcommand)]
enum Command {
    /// Generate the configured network and balance sheets.
    Generate,
    /// Compute and rank impact indices.
    Rank,
    /// Benchmark the iteration against the simplex oracle at several
    /// tolerances.
    Compare,
    /// Classify institutions into SIFI buckets with probabilities and
    /// log-odds.
    Classify,
    /// Degree-perturbation experiment: change in the target's log-odds.
    Perturb,
    /// SinkRank baseline comparison.
    Sinkrank,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err}");
            ExitCode::from(exit_code(&err))
        }
    }
}

fn exit_code(err: &Error) -> u8 {
    match err {
        Error::Config(_) => 1,
        Error::Io(_) | Error::Parse(_) => 2,
        Error::Data(_) | Error::Numeric(_) | Error::Estimation(_) | Error::Experiment(_) => 3,
    }
}

fn run(cli: &Cli) -> Result<(), Error> {
    let cfg = load_config(cli)?;
    let hash = config_hash(&cfg)?;
    let header = vec![format!("config_hash={hash} seed={}", cfg.seed)];
    fs::create_dir_all(&cli.out)?;
    match cli.command {
        Command::Generate => cmd_generate(cli, &cfg, &header),
        Command::Rank => cmd_rank(cli, &cfg, &header),
        Command::Compare => cmd_compare(cli, &cfg, &header),
        Command::Classify => cmd_classify(cli, &cfg, &header),
        Command::Perturb => cmd_perturb(cli, &cfg, &header),
        Command::Sinkrank => cmd_sinkrank(cli, &cfg, &header),
    }
}

fn load_config(cli: &Cli) -> Result<PipelineConfig, Error> {
    let mut cfg = match &cli.config {
        Some(path) => {
            let text = fs::read_to_string(path)?;
            serde_json::from_str(&text)
                .map_err(|e| Error::Config(format!("config {}: {e}", path.display())))?
        }
        None => PipelineConfig::example(pipeline::NetworkKind::Ba, 50, 42),
    };
    if let Some(seed) = cli.seed {
        cfg.seed = seed;
    }
    cfg.validate()?;
    Ok(cfg)
}

/// FNV-1a over the canonical JSON encoding (sorted keys), so the hash
/// changes exactly when a semantic field changes.
fn config_hash(cfg: &PipelineConfig) -> Result<String, Error> {
    let value = serde_json::to_value(cfg)
        .map_err(|e| Error::Config(format!("config serialization: {e}")))?;
    let canonical = value.to_string();
    let mut hash: u64 = 0xcbf2_9ce4_8422_2325;
    for b in canonical.as_bytes() {
        hash ^= u64::from(*b);
        hash = hash.wrapping_mul(0x0000_0100_0000_01b3);
    }
    Ok(format!("{hash:016x}"))
}

fn out_path(cli: &Cli, base: &str) -> PathBuf {
    let ext = match cli.format {
        Format::Csv => "csv",
        Format::Json => "json",
    };
    cli.out.join(format!("{base}.{ext}"))
}

fn write_json(path: &Path, value: &serde_json::Value) -> Result<(), Error> {
    let mut text = serde_json::to_string_pretty(value)
        .map_err(|e| Error::Config(format!("json encoding: {e}")))?;
    text.push('\n');
    fs::write(path, text)?;
    Ok(())
}

fn cmd_generate(cli: &Cli, cfg: &PipelineConfig, header: &[String]) -> Result<(), Error> {
    let net = pipeline::build_network(cfg)?;
    let sheets = balance::derive_balance_sheets(
        &net,
        cfg.balance,
        sifirank_core::rng::subseed(cfg.seed, "balance", 0),
    )?;
    let profile = net.degrees();
    match cli.format {
        Format::Csv => {
            let mut edges = Vec::new();
            net.write_edge_csv(&mut edges, header)?;
            fs::write(out_path(cli, "edges"), edges)?;
            let mut bal = Vec::new();
            balance::write_balance_csv(&sheets, &mut bal, header)?;
            fs::write(out_path(cli, "balance"), bal)?;
        }
        Format::Json => {
            let edges: Vec<_> = net
                .edges()
                .iter()
                .map(|e| json!({"src": e.src, "dst": e.dst, "exposure": e.exposure}))
                .collect();
            write_json(
                &out_path(cli, "edges"),
                &json!({"config_hash": header_hash(header), "seed": cfg.seed, "edges": edges}),
            )?;
            let rows: Vec<_> = sheets
                .iter()
                .enumerate()
                .map(|(i, s)| {
                    json!({
                        "node": i,
                        "a_ext": s.external_assets,
                        "a_int": s.interbank_assets,
                        "l_int": s.interbank_liabilities,
                        "deposits": s.deposits,
                        "capital": s.capital,
                    })
                })
                .collect();
            write_json(
                &out_path(cli, "balance"),
                &json!({"config_hash": header_hash(header), "seed": cfg.seed, "sheets": rows}),
            )?;
        }
    }
    println!(
        "generated: n={} edges={} max_in={} max_out={}",
        net.node_count(),
        net.edge_count(),
        profile.max_in(),
        profile.max_out()
    );
    Ok(())
}

fn header_hash(header: &[String]) -> String {
    header
        .first()
        .and_then(|line| line.split_whitespace().next())
        .and_then(|kv| kv.strip_prefix("config_hash="))
        .unwrap_or_default()
        .to_string()
}

fn cmd_rank(cli: &Cli, cfg: &PipelineConfig, header: &[String]) -> Result<(), Error> {
    let base = pipeline::run_base(cfg)?;
    match cli.format {
        Format::Csv => {
            let mut buf = Vec::new();
            impact::write_impact_csv(&base.impact, &mut buf, header)?;
            fs::write(out_path(cli, "impact"), buf)?;
        }
        Format::Json => {
            let ranking = impact::rank_institutions(&base.impact);
            let rows: Vec<_> = ranking
                .iter()
                .enumerate()
                .map(|(rank, (node, score))| {
                    json!({"node": node, "impact_index": score, "rank": rank + 1})
                })
                .collect();
            write_json(
                &out_path(cli, "impact"),
                &json!({
                    "config_hash": header_hash(header),
                    "seed": cfg.seed,
                    "converged": base.impact.converged,
                    "iterations": base.impact.iterations,
                    "ranking": rows,
                }),
            )?;
        }
    }
    println!(
        "ranked {} institutions in {} iterations (converged: {})",
        base.net.node_count(),
        base.impact.iterations,
        base.impact.converged
    );
    Ok(())
}

const COMPARE_TOLERANCES: [f64; 3] = [1e-3, 1e-4, 1e-5];

fn cmd_compare(cli: &Cli, cfg: &PipelineConfig, header: &[String]) -> Result<(), Error> {
    let rows = pipeline::comparison_rows(cfg, &COMPARE_TOLERANCES)?;
    match cli.format {
        Format::Csv => {
            let mut buf = Vec::new();
            pipeline::write_compare_csv(&rows, &mut buf, header)?;
            fs::write(out_path(cli, "compare"), buf)?;
        }
        Format::Json => {
            let items: Vec<_> = rows
                .iter()
                .map(|r| {
                    json!({
                        "network_kind": r.network_kind,
                        "n": r.n,
                        "interconnections": r.interconnections,
                        "tolerance": r.tolerance,
                        "iterations": r.iterations,
                        "cpu_time_s": r.cpu_time_s,
                        "err_alg": r.err_alg,
                        "err_opt": r.err_opt,
                        "rel_err": r.rel_err,
                    })
                })
                .collect();
            write_json(
                &out_path(cli, "compare"),
                &json!({"config_hash": header_hash(header), "seed": cfg.seed, "rows": items}),
            )?;
        }
    }
    for r in &rows {
        println!(
            "tol={:.0e}: iterations={} rel_err={:.4}",
            r.tolerance, r.iterations, r.rel_err
        );
    }
    Ok(())
}

fn cmd_classify(cli: &Cli, cfg: &PipelineConfig, header: &[String]) -> Result<(), Error> {
    let base = pipeline::run_base(cfg)?;
    let classification = stats::classify(&base.impact, &cfg.classification.bucket_quantiles)?;
    match cli.format {
        Format::Csv => {
            let mut buf = Vec::new();
            stats::write_classification_csv(&base.impact.p, &classification, &mut buf, header)?;
            fs::write(out_path(cli, "classification"), buf)?;
        }
        Format::Json => {
            let rows: Vec<_> = (0..base.impact.p.len())
                .map(|i| {
                    json!({
                        "node": i,
                        "impact": base.impact.p[i],
                        "bucket": classification.buckets[i],
                        "p_sifi": classification.probabilities[i],
                        "log_odds": classification.log_odds[i],
                    })
                })
                .collect();
            write_json(
                &out_path(cli, "classification"),
                &json!({
                    "config_hash": header_hash(header),
                    "seed": cfg.seed,
                    "thresholds": classification.thresholds,
                    "rows": rows,
                }),
            )?;
        }
    }
    let top = classification.buckets.iter().filter(|&&b| b == cfg.classification.bucket_quantiles.len()).count();
    println!(
        "classified {} institutions, {top} in the top bucket",
        base.impact.p.len()
    );
    Ok(())
}

fn cmd_perturb(cli: &Cli, cfg: &PipelineConfig, header: &[String]) -> Result<(), Error> {
    let section = cfg.perturb.clone().unwrap_or_default();
    let mut rows = Vec::new();
    for edit_kind in [NetworkEdit::AddOutEdges(section.m), NetworkEdit::AddInEdges(section.m)] {
        let mut deltas = Vec::new();
        for rep in 0..section.replications {
            let mut rep_cfg = cfg.clone();
            rep_cfg.seed = sifirank_core::rng::subseed(cfg.seed, "perturb-replication", rep as u64);
            let base = pipeline::run_base(&rep_cfg)?;
            let target = section
                .target
                .unwrap_or_else(|| pipeline::mid_ranked_node(&base));
            let outcome =
                pipeline::perturbation_experiment(&rep_cfg, target, edit_kind, cfg.runs)?;
            deltas.push(outcome.delta_log_odds);
        }
        let mean = deltas.iter().sum::<f64>() / deltas.len() as f64;
        let agreement = deltas.iter().filter(|&&d| d.signum() == mean.signum()).count() as f64
            / deltas.len() as f64;
        rows.push(PerturbReportRow {
            edit_kind: edit_kind.label().to_string(),
            m: section.m,
            runs: cfg.runs,
            mean_delta_log_odds: mean,
            sign_agreement_fraction: agreement,
        });
    }
    match cli.format {
        Format::Csv => {
            let mut buf = Vec::new();
            pipeline::write_perturb_csv(&rows, &mut buf, header)?;
            fs::write(out_path(cli, "perturbation"), buf)?;
        }
        Format::Json => {
            let items: Vec<_> = rows
                .iter()
                .map(|r| {
                    json!({
                        "edit_kind": r.edit_kind,
                        "m": r.m,
                        "runs": r.runs,
                        "mean_delta_log_odds": r.mean_delta_log_odds,
                        "sign_agreement_fraction": r.sign_agreement_fraction,
                    })
                })
                .collect();
            write_json(
                &out_path(cli, "perturbation"),
                &json!({"config_hash": header_hash(header), "seed": cfg.seed, "rows": items}),
            )?;
        }
    }
    for r in &rows {
        println!(
            "{}: mean delta log-odds {:+.4} (sign agreement {:.0}%)",
            r.edit_kind,
            r.mean_delta_log_odds,
            100.0 * r.sign_agreement_fraction
        );
    }
    Ok(())
}

fn cmd_sinkrank(cli: &Cli, cfg: &PipelineConfig, header: &[String]) -> Result<(), Error> {
    let rows = pipeline::sinkrank_rows(cfg)?;
    match cli.format {
        Format::Csv => {
            let mut buf = Vec::new();
            sinkrank::write_comparison_csv(&rows, &mut buf, header)?;
            fs::write(out_path(cli, "sinkrank"), buf)?;
        }
        Format::Json => {
            let items: Vec<_> = rows
                .iter()
                .map(|r| {
                    json!({
                        "name": r.name,
                        "deg_out": r.deg_out,
                        "deg_in": r.deg_in,
                        "impact_index": r.impact_index,
                        "inv_sinkrank": r.inv_sinkrank,
                        "total_received": r.total_received,
                        "total_sent": r.total_sent,
                        "equity": r.equity,
                    })
                })
                .collect();
            write_json(
                &out_path(cli, "sinkrank"),
                &json!({"config_hash": header_hash(header), "seed": cfg.seed, "rows": items}),
            )?;
        }
    }
    let impact_scores: Vec<f64> = rows.iter().map(|r| r.impact_index).collect();
    let sink_scores: Vec<f64> = rows.iter().map(|r| r.inv_sinkrank).collect();
    match sinkrank::rank_correlation(&sink_scores, &impact_scores) {
        Ok((rho, tau)) => println!("spearman={rho:+.3} kendall={tau:+.3} over {} nodes", rows.len()),
        Err(e) => println!("rank correlation unavailable: {e}"),
    }
    Ok(())
}
