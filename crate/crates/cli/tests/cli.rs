//! End-to-end tests of the binary: generated files, determinism, the
//! config hash and exit codes.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};
use std::sync::atomic::{AtomicU64, Ordering};

static DIR_COUNTER: AtomicU64 = AtomicU64::new(0);

fn scratch_dir(tag: &str) -> PathBuf {
    let id = DIR_COUNTER.fetch_add(1, Ordering::SeqCst);
    let dir = std::env::temp_dir().join(format!(
        "sifirank-cli-{tag}-{}-{id}",
        std::process::id()
    ));
    fs::create_dir_all(&dir).unwrap();
    dir
}

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_sifirank"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn assert_ok(out: &Output) {
    assert!(
        out.status.success(),
        "stdout: {}\nstderr: {}",
        String::from_utf8_lossy(&out.stdout),
        String::from_utf8_lossy(&out.stderr)
    );
}

fn read(path: &Path) -> String {
    fs::read_to_string(path).unwrap_or_else(|e| panic!("read {}: {e}", path.display()))
}

#[test]
fn generate_is_deterministic_and_round_trips() {
    let dir_a = scratch_dir("gen-a");
    let dir_b = scratch_dir("gen-b");
    let out = run(&["--out", dir_a.to_str().unwrap(), "--seed", "7", "generate"]);
    assert_ok(&out);
    let summary = String::from_utf8_lossy(&out.stdout).to_string();
    assert_ok(&run(&["--out", dir_b.to_str().unwrap(), "--seed", "7", "generate"]));

    let edges_a = read(&dir_a.join("edges.csv"));
    let edges_b = read(&dir_b.join("edges.csv"));
    assert_eq!(edges_a, edges_b, "same seed must give byte-identical edges");
    assert_eq!(
        read(&dir_a.join("balance.csv")),
        read(&dir_b.join("balance.csv"))
    );

    // Round-trip: reload the file and recount the degree extremes printed
    // in the summary.
    let net =
        sifirank_core::DirectedFinancialNetwork::read_edge_csv(edges_a.as_bytes()).unwrap();
    let profile = net.degrees();
    assert!(summary.contains(&format!("edges={}", net.edge_count())));
    assert!(summary.contains(&format!("max_in={}", profile.max_in())));
    assert!(summary.contains(&format!("max_out={}", profile.max_out())));

    // A different seed changes the data.
    let dir_c = scratch_dir("gen-c");
    assert_ok(&run(&["--out", dir_c.to_str().unwrap(), "--seed", "8", "generate"]));
    assert_ne!(edges_a, read(&dir_c.join("edges.csv")));
}

#[test]
fn compare_emits_three_rows_with_increasing_iterations() {
    let dir = scratch_dir("compare");
    assert_ok(&run(&["--out", dir.to_str().unwrap(), "--seed", "3", "compare"]));
    let text = read(&dir.join("compare.csv"));
    let rows: Vec<&str> = text
        .lines()
        .filter(|l| !l.starts_with('#') && !l.starts_with("network_kind") && !l.is_empty())
        .collect();
    assert_eq!(rows.len(), 3);
    let iters: Vec<usize> = rows
        .iter()
        .map(|r| r.split(',').nth(4).unwrap().parse().unwrap())
        .collect();
    assert!(iters[0] < iters[1] && iters[1] < iters[2], "{iters:?}");
}

#[test]
fn classify_respects_top_bucket_size() {
    let dir = scratch_dir("classify");
    assert_ok(&run(&["--out", dir.to_str().unwrap(), "--seed", "5", "classify"]));
    let text = read(&dir.join("classification.csv"));
    let top = text
        .lines()
        .filter(|l| !l.starts_with('#') && !l.starts_with("node"))
        .filter(|l| l.split(',').nth(2) == Some("2"))
        .count();
    // Quantile 0.9 на 50 nodes: at most ceil(0.1 * 50) above the threshold.
    assert!(top <= 5, "top bucket has {top} rows");
}

#[test]
fn rank_on_symmetric_two_node_fixture_gives_equal_scores() {
    let dir = scratch_dir("fixture");
    let edges = "src,dst,exposure\n0,1,1.0e1\n1,0,1.0e1\n";
    let sheets = "node,a_ext,a_int,l_int,deposits,capital\n\
                  0,1.0e3,1.0e1,1.0e1,9.85e2,1.5e1\n\
                  1,1.0e3,1.0e1,1.0e1,9.85e2,1.5e1\n";
    fs::write(dir.join("edges.csv"), edges).unwrap();
    fs::write(dir.join("balance.csv"), sheets).unwrap();
    let config = format!(
        r#"{{
  "network": {{ "kind": "file", "path": "{}", "sheets_path": "{}" }},
  "exposures": {{ "pareto_shape": 2.0, "pareto_scale": 10.0 }},
  "balance": {{ "cap_low": 0.01, "cap_high": 0.02, "ext_multiplier": 100.0 }},
  "solvency": {{ "phi": 0.5 }},
  "shocks": {{ "fraction_hit": 0.5, "magnitude_mean": 10.0, "magnitude_sd": 5.0 }},
  "solver": {{ "tolerance": 1e-7, "max_iter": 100000 }},
  "classification": {{ "bucket_quantiles": [0.5, 0.9], "alpha_prime": 0.05 }},
  "runs": 10,
  "seed": 1
}}"#,
        dir.join("edges.csv").display(),
        dir.join("balance.csv").display()
    );
    let cfg_path = dir.join("config.json");
    fs::write(&cfg_path, config).unwrap();
    assert_ok(&run(&[
        "--config",
        cfg_path.to_str().unwrap(),
        "--out",
        dir.to_str().unwrap(),
        "rank",
    ]));
    let text = read(&dir.join("impact.csv"));
    let scores: Vec<&str> = text
        .lines()
        .filter(|l| !l.starts_with('#') && !l.starts_with("node"))
        .map(|l| l.split(',').nth(1).unwrap())
        .collect();
    assert_eq!(scores.len(), 2);
    assert_eq!(scores[0], scores[1], "symmetric fixture must score equally");
}

#[test]
fn config_hash_ignores_key_order_and_tracks_semantics() {
    let dir = scratch_dir("hash");
    let base = r#"{
  "network": { "kind": "ba", "n": 20, "m0": 3, "k": 2 },
  "exposures": { "pareto_shape": 2.0, "pareto_scale": 10.0 },
  "balance": { "cap_low": 0.01, "cap_high": 0.02, "ext_multiplier": 100.0 },
  "solvency": { "phi": 0.5 },
  "shocks": { "fraction_hit": 0.1, "magnitude_mean": 10.0, "magnitude_sd": 5.0 },
  "solver": { "tolerance": 1e-5, "max_iter": 100000 },
  "classification": { "bucket_quantiles": [0.5, 0.9], "alpha_prime": 0.05 },
  "runs": 10,
  "seed": 4
}"#;
    // Same fields, different key order inside sections.
    let reordered = r#"{
  "seed": 4,
  "runs": 10,
  "classification": { "alpha_prime": 0.05, "bucket_quantiles": [0.5, 0.9] },
  "solver": { "max_iter": 100000, "tolerance": 1e-5 },
  "shocks": { "magnitude_sd": 5.0, "magnitude_mean": 10.0, "fraction_hit": 0.1 },
  "solvency": { "phi": 0.5 },
  "balance": { "ext_multiplier": 100.0, "cap_high": 0.02, "cap_low": 0.01 },
  "exposures": { "pareto_scale": 10.0, "pareto_shape": 2.0 },
  "network": { "k": 2, "m0": 3, "n": 20, "kind": "ba" }
}"#;
    let changed = base.replace("\"phi\": 0.5", "\"phi\": 0.6");

    let hash_of = |name: &str, cfg: &str| -> String {
        let path = dir.join(name);
        fs::write(&path, cfg).unwrap();
        let out = run(&[
            "--config",
            path.to_str().unwrap(),
            "--out",
            dir.to_str().unwrap(),
            "generate",
        ]);
        assert_ok(&out);
        let edges = read(&dir.join("edges.csv"));
        edges
            .lines()
            .next()
            .unwrap()
            .split_whitespace()
            .find_map(|kv| kv.strip_prefix("config_hash="))
            .unwrap()
            .to_string()
    };

    let h_base = hash_of("a.json", base);
    let h_reordered = hash_of("b.json", reordered);
    let h_changed = hash_of("c.json", &changed);
    assert_eq!(h_base, h_reordered, "key order must not affect the hash");
    assert_ne!(h_base, h_changed, "semantic change must change the hash");
}

#[test]
fn rank_is_idempotent_for_a_fixed_seed() {
    let dir = scratch_dir("rank-idem");
    assert_ok(&run(&["--out", dir.to_str().unwrap(), "--seed", "11", "rank"]));
    let first = read(&dir.join("impact.csv"));
    assert_ok(&run(&["--out", dir.to_str().unwrap(), "--seed", "11", "rank"]));
    assert_eq!(first, read(&dir.join("impact.csv")));
}

#[test]
fn seed_flag_overrides_config() {
    let dir = scratch_dir("seed-override");
    assert_ok(&run(&["--out", dir.to_str().unwrap(), "--seed", "100", "generate"]));
    let first = read(&dir.join("edges.csv"));
    assert_ok(&run(&["--out", dir.to_str().unwrap(), "--seed", "101", "generate"]));
    let second = read(&dir.join("edges.csv"));
    assert_ne!(first, second);
    assert!(first.contains("seed=100"));
    assert!(second.contains("seed=101"));
}

#[test]
fn exit_codes_follow_error_classes() {
    let dir = scratch_dir("exit");

    // Unknown key -> configuration error (1).
    let bad_cfg = dir.join("bad.json");
    fs::write(
        &bad_cfg,
        r#"{ "network": { "kind": "ba", "n": 10, "m0": 3, "k": 2 }, "typo": 1 }"#,
    )
    .unwrap();
    let out = run(&[
        "--config",
        bad_cfg.to_str().unwrap(),
        "--out",
        dir.to_str().unwrap(),
        "generate",
    ]);
    assert_eq!(out.status.code(), Some(1));

    // Missing config file -> I/O error (2).
    let out = run(&[
        "--config",
        dir.join("missing.json").to_str().unwrap(),
        "--out",
        dir.to_str().unwrap(),
        "generate",
    ]);
    assert_eq!(out.status.code(), Some(2));

    // Invalid generator parameters -> configuration error (1).
    let bad_params = dir.join("params.json");
    let cfg = r#"{
  "network": { "kind": "ba", "n": 2, "m0": 5, "k": 4 },
  "exposures": { "pareto_shape": 2.0, "pareto_scale": 10.0 },
  "balance": { "cap_low": 0.01, "cap_high": 0.02, "ext_multiplier": 100.0 },
  "solvency": { "phi": 0.5 },
  "shocks": { "fraction_hit": 0.5, "magnitude_mean": 10.0, "magnitude_sd": 5.0 },
  "solver": { "tolerance": 1e-5, "max_iter": 100000 },
  "classification": { "bucket_quantiles": [0.5, 0.9], "alpha_prime": 0.05 },
  "runs": 10,
  "seed": 4
}"#;
    fs::write(&bad_params, cfg).unwrap();
    let out = run(&[
        "--config",
        bad_params.to_str().unwrap(),
        "--out",
        dir.to_str().unwrap(),
        "generate",
    ]);
    assert_eq!(out.status.code(), Some(1));
}

fn write_small_complete_config(dir: &Path, n: usize) -> PathBuf {
    let cfg = format!(
        r#"{{
  "network": {{ "kind": "complete", "n": {n} }},
  "exposures": {{ "pareto_shape": 2.0, "pareto_scale": 10.0 }},
  "balance": {{ "cap_low": 0.01, "cap_high": 0.02, "ext_multiplier": 100.0 }},
  "solvency": {{ "phi": 0.5 }},
  "shocks": {{ "fraction_hit": 0.5, "magnitude_mean": 10.0, "magnitude_sd": 5.0 }},
  "solver": {{ "tolerance": 1e-5, "max_iter": 100000 }},
  "classification": {{ "bucket_quantiles": [0.5, 0.9], "alpha_prime": 0.05 }},
  "perturb": {{ "m": 2, "replications": 2 }},
  "runs": 10,
  "seed": 2
}}"#
    );
    let path = dir.join("config.json");
    fs::write(&path, cfg).unwrap();
    path
}

#[test]
fn generate_complete_two_nodes_writes_two_edge_rows() {
    let dir = scratch_dir("complete2");
    let cfg = write_small_complete_config(&dir, 2);
    assert_ok(&run(&[
        "--config",
        cfg.to_str().unwrap(),
        "--out",
        dir.to_str().unwrap(),
        "generate",
    ]));
    let rows = read(&dir.join("edges.csv"))
        .lines()
        .filter(|l| !l.starts_with('#') && !l.starts_with("src,"))
        .count();
    assert_eq!(rows, 2);
}

#[test]
fn perturb_command_reports_both_edit_kinds() {
    let dir = scratch_dir("perturb");
    let cfg_text = r#"{
  "network": { "kind": "ba", "n": 20, "m0": 3, "k": 2 },
  "exposures": { "pareto_shape": 2.0, "pareto_scale": 10.0 },
  "balance": { "cap_low": 0.01, "cap_high": 0.02, "ext_multiplier": 100.0 },
  "solvency": { "phi": 0.5 },
  "shocks": { "fraction_hit": 0.2, "magnitude_mean": 10.0, "magnitude_sd": 5.0 },
  "solver": { "tolerance": 1e-5, "max_iter": 100000 },
  "classification": { "bucket_quantiles": [0.5, 0.9], "alpha_prime": 0.05 },
  "perturb": { "m": 2, "replications": 2 },
  "runs": 10,
  "seed": 2
}"#;
    let cfg = dir.join("config.json");
    fs::write(&cfg, cfg_text).unwrap();
    assert_ok(&run(&[
        "--config",
        cfg.to_str().unwrap(),
        "--out",
        dir.to_str().unwrap(),
        "perturb",
    ]));
    let text = read(&dir.join("perturbation.csv"));
    assert!(text.contains("edit_kind,m,runs,mean_delta_log_odds,sign_agreement_fraction"));
    assert!(text.contains("add_out_edges,2,10,"));
    assert!(text.contains("add_in_edges,2,10,"));
}

#[test]
fn sinkrank_command_writes_comparison_rows() {
    let dir = scratch_dir("sinkrank");
    let cfg = write_small_complete_config(&dir, 8);
    assert_ok(&run(&[
        "--config",
        cfg.to_str().unwrap(),
        "--out",
        dir.to_str().unwrap(),
        "sinkrank",
    ]));
    let text = read(&dir.join("sinkrank.csv"));
    assert!(text
        .contains("name,deg_out,deg_in,impact_index,inv_sinkrank,total_received,total_sent,equity"));
    let rows = text
        .lines()
        .filter(|l| !l.starts_with('#') && !l.starts_with("name,"))
        .count();
    assert_eq!(rows, 8);
}

#[test]
fn data_errors_exit_with_code_three() {
    let dir = scratch_dir("exit3");
    // Two disconnected components: every sink is unreachable from the other
    // pair, so the sinkrank command must fail with a data error.
    let edges = "src,dst,exposure\n0,1,5.0\n1,0,5.0\n2,3,5.0\n3,2,5.0\n";
    fs::write(dir.join("edges.csv"), edges).unwrap();
    let cfg = format!(
        r#"{{
  "network": {{ "kind": "file", "path": "{}" }},
  "exposures": {{ "pareto_shape": 2.0, "pareto_scale": 10.0 }},
  "balance": {{ "cap_low": 0.01, "cap_high": 0.02, "ext_multiplier": 100.0 }},
  "solvency": {{ "phi": 0.5 }},
  "shocks": {{ "fraction_hit": 0.5, "magnitude_mean": 10.0, "magnitude_sd": 5.0 }},
  "solver": {{ "tolerance": 1e-5, "max_iter": 100000 }},
  "classification": {{ "bucket_quantiles": [0.5, 0.9], "alpha_prime": 0.05 }},
  "runs": 10,
  "seed": 2
}}"#,
        dir.join("edges.csv").display()
    );
    let cfg_path = dir.join("config.json");
    fs::write(&cfg_path, cfg).unwrap();
    let out = run(&[
        "--config",
        cfg_path.to_str().unwrap(),
        "--out",
        dir.to_str().unwrap(),
        "sinkrank",
    ]);
    assert_eq!(out.status.code(), Some(3));
}

#[test]
fn json_format_emits_parseable_documents() {
    let dir = scratch_dir("json");
    assert_ok(&run(&[
        "--out",
        dir.to_str().unwrap(),
        "--seed",
        "6",
        "--format",
        "json",
        "rank",
    ]));
    let text = read(&dir.join("impact.json"));
    let doc: serde_json::Value = serde_json::from_str(&text).unwrap();
    assert_eq!(doc["seed"], 6);
    assert!(doc["ranking"].as_array().unwrap().len() == 50);
}
