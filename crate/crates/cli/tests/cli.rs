//! End-to-end tests of the `ncsim` binary: schema, determinism, seed
//! resolution and error exits.

use std::fs;
use std::process::{Command, Output};

const HEADER: &str = "topology,N,d,power_w,noise_w,z_db,eta,q,protocol,trials,\
    mean_slots,std_slots,ci95_lo,ci95_hi,bound_slots,bound_degenerate,connectivity_class,seed";

fn ncsim(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_ncsim"))
        .args(args)
        .env_remove("NCSIM_SEED")
        .output()
        .expect("binary runs")
}

fn ncsim_env(args: &[&str], key: &str, value: &str) -> Output {
    Command::new(env!("CARGO_BIN_EXE_ncsim"))
        .args(args)
        .env_remove("NCSIM_SEED")
        .env(key, value)
        .output()
        .expect("binary runs")
}

fn stdout(output: &Output) -> String {
    assert!(
        output.status.success(),
        "stderr: {}",
        String::from_utf8_lossy(&output.stderr)
    );
    String::from_utf8(output.stdout.clone()).unwrap()
}

fn field<'a>(row: &'a str, name: &str) -> &'a str {
    let idx = HEADER.split(',').position(|h| h == name).expect("known column");
    row.split(',').nth(idx).unwrap()
}

#[test]
fn sweep_n_schema_and_micro_oracles() {
    let out = stdout(&ncsim(&[
        "sweep-n",
        "--sizes",
        "2",
        "--power-w",
        "inf",
        "--trials",
        "4000",
        "--seed",
        "9",
        "--protocol",
        "both",
    ]));
    let mut lines = out.lines();
    assert_eq!(lines.next().unwrap(), HEADER);
    let nc = lines.next().unwrap();
    let base = lines.next().unwrap();
    assert!(lines.next().is_none());

    assert_eq!(field(nc, "protocol"), "nc");
    assert_eq!(field(base, "protocol"), "random_selection");
    assert_eq!(field(nc, "connectivity_class"), "fully_connected");
    let nc_mean: f64 = field(nc, "mean_slots").parse().unwrap();
    let base_mean: f64 = field(base, "mean_slots").parse().unwrap();
    assert!((nc_mean - 3.0).abs() <= 0.15, "nc mean {nc_mean}");
    assert!((base_mean - 5.0).abs() <= 0.25, "baseline mean {base_mean}");
    assert_eq!(field(nc, "bound_slots"), "8");
    assert_eq!(field(nc, "bound_degenerate"), "false");
    assert_eq!(field(nc, "seed"), "9");
}

/// Every column of a populated row parses back to its schema type.
fn assert_row_types(row: &str) {
    field(row, "N").parse::<usize>().unwrap();
    field(row, "d").parse::<f64>().unwrap();
    field(row, "power_w").parse::<f64>().unwrap();
    field(row, "noise_w").parse::<f64>().unwrap();
    field(row, "z_db").parse::<f64>().unwrap();
    field(row, "eta").parse::<f64>().unwrap();
    field(row, "q").parse::<u8>().unwrap();
    field(row, "trials").parse::<u64>().unwrap();
    field(row, "mean_slots").parse::<f64>().unwrap();
    field(row, "std_slots").parse::<f64>().unwrap();
    field(row, "ci95_lo").parse::<f64>().unwrap();
    field(row, "ci95_hi").parse::<f64>().unwrap();
    field(row, "bound_slots").parse::<f64>().unwrap();
    field(row, "bound_degenerate").parse::<bool>().unwrap();
    field(row, "seed").parse::<u64>().unwrap();
    assert!(["line", "grid", "file"].contains(&field(row, "topology")));
    assert!(["nc", "random_selection"].contains(&field(row, "protocol")));
    assert!([
        "fully_connected",
        "sparsely_connected",
        "intermediate",
        "disconnected"
    ]
    .contains(&field(row, "connectivity_class")));
}

#[test]
fn rows_parse_back_into_schema_types() {
    let out = stdout(&ncsim(&[
        "sweep-n", "--sizes", "2,3", "--power-w", "2e-5", "--d", "30", "--trials", "25",
        "--seed", "8", "--protocol", "both",
    ]));
    let rows: Vec<&str> = out.lines().skip(1).collect();
    assert_eq!(rows.len(), 4);
    for row in rows {
        assert_row_types(row);
    }
}

#[test]
fn single_node_completes_instantly_with_undefined_bound() {
    let out = stdout(&ncsim(&[
        "simulate", "--n", "1", "--power-w", "inf", "--trials", "3", "--seed", "1",
    ]));
    let row = out.lines().nth(1).unwrap();
    assert_eq!(field(row, "mean_slots"), "0");
    assert_eq!(field(row, "std_slots"), "0");
    assert_eq!(field(row, "bound_slots"), "");
    assert_eq!(field(row, "bound_degenerate"), "false");
}

#[test]
fn identical_invocations_produce_identical_bytes() {
    let args = [
        "sweep-n",
        "--sizes",
        "2,3",
        "--power-w",
        "inf",
        "--trials",
        "50",
        "--seed",
        "1234",
        "--protocol",
        "both",
    ];
    let first = stdout(&ncsim(&args));
    let second = stdout(&ncsim(&args));
    assert_eq!(first, second);
    let other_seed = stdout(&ncsim(&[
        "sweep-n",
        "--sizes",
        "2,3",
        "--power-w",
        "inf",
        "--trials",
        "50",
        "--seed",
        "1235",
        "--protocol",
        "both",
    ]));
    assert_ne!(first, other_seed);
}

#[test]
fn sweep_power_emits_one_row_per_power_and_protocol() {
    let out = stdout(&ncsim(&[
        "sweep-power",
        "--n",
        "3",
        "--d",
        "5",
        "--power-dbm",
        "0,-5,-10,-15,-20,-25,-30,-35,-40",
        "--trials",
        "20",
        "--seed",
        "2",
        "--protocol",
        "both",
    ]));
    let rows: Vec<&str> = out.lines().skip(1).collect();
    assert_eq!(rows.len(), 18);
    // rows come in power order, nc first within each power
    let first_power: f64 = field(rows[0], "power_w").parse().unwrap();
    assert!((first_power - 1e-3).abs() < 1e-12, "0 dBm is 1 mW");
    let last_power: f64 = field(rows[17], "power_w").parse().unwrap();
    assert!((last_power - 1e-7).abs() < 1e-16, "-40 dBm is 0.1 uW");
}

#[test]
fn compare_appends_ratio_column() {
    let out = stdout(&ncsim(&[
        "compare",
        "--sizes",
        "2",
        "--power-w",
        "inf",
        "--trials",
        "3000",
        "--seed",
        "4",
    ]));
    let mut lines = out.lines();
    assert_eq!(lines.next().unwrap(), format!("{HEADER},ratio"));
    let nc = lines.next().unwrap();
    let base = lines.next().unwrap();
    let ratio: f64 = nc.rsplit(',').next().unwrap().parse().unwrap();
    let ratio_base: f64 = base.rsplit(',').next().unwrap().parse().unwrap();
    assert_eq!(ratio, ratio_base);
    assert!((ratio - 5.0 / 3.0).abs() < 0.2, "ratio {ratio}");
}

#[test]
fn compare_rejects_single_protocol() {
    let out = ncsim(&["compare", "--sizes", "2", "--protocol", "nc"]);
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("both protocols"));
}

#[test]
fn bound_on_disconnected_environment_fails() {
    let dir = tempfile::tempdir().unwrap();
    let positions = dir.path().join("far.csv");
    fs::write(&positions, "node_id,x,y\n0,0,0\n1,1000000,0\n").unwrap();
    let out = ncsim(&[
        "bound",
        "--topology",
        "file",
        "--positions",
        positions.to_str().unwrap(),
        "--power-w",
        "1e-9",
    ]);
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("zero"));
}

#[test]
fn bound_verbose_dumps_exact_stage_values() {
    let out = ncsim(&["bound", "--n", "3", "--power-w", "inf", "--verbose"]);
    assert!(out.status.success());
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("p[1] = 5/12"), "stderr: {err}");
    assert!(err.contains("p[2] = 5/6"));
    let text = String::from_utf8(out.stdout).unwrap();
    let row = text.lines().nth(1).unwrap();
    let bound: f64 = field(row, "bound_slots").parse().unwrap();
    assert!((bound - 150.0 / 7.0).abs() < 1e-9);
}

#[test]
fn seed_resolution_order() {
    let base = [
        "sweep-n", "--sizes", "2", "--power-w", "inf", "--trials", "5",
    ];
    // env fallback applies when no flag or config seed is given
    let out = stdout(&ncsim_env(&base, "NCSIM_SEED", "123"));
    assert_eq!(field(out.lines().nth(1).unwrap(), "seed"), "123");

    // the flag beats the environment
    let mut with_flag = base.to_vec();
    with_flag.extend(["--seed", "77"]);
    let out = stdout(&ncsim_env(&with_flag, "NCSIM_SEED", "123"));
    assert_eq!(field(out.lines().nth(1).unwrap(), "seed"), "77");

    // unparseable env values are rejected rather than ignored
    let out = ncsim_env(&base, "NCSIM_SEED", "not-a-number");
    assert!(!out.status.success());
}

#[test]
fn config_file_fields_and_flag_override() {
    let dir = tempfile::tempdir().unwrap();
    let config = dir.path().join("spec.json");
    fs::write(
        &config,
        r#"{
            "topology": {"kind": "line", "d": 30.0, "sizes": [2]},
            "channel": {"power_w": 1e300},
            "sim": {"q": 8, "r": 2, "trials": 6, "seed": 1, "protocols": ["nc"]}
        }"#,
    )
    .unwrap();
    let out = stdout(&ncsim(&[
        "sweep-n",
        "--config",
        config.to_str().unwrap(),
        "--seed",
        "2",
    ]));
    let row = out.lines().nth(1).unwrap();
    assert_eq!(field(row, "seed"), "2", "flag beats config");
    assert_eq!(field(row, "trials"), "6", "config supplies trials");
    assert_eq!(field(row, "N"), "2", "config supplies sizes");

    let bad = dir.path().join("bad.json");
    fs::write(&bad, r#"{"unknown_field": 1}"#).unwrap();
    let out = ncsim(&["sweep-n", "--config", bad.to_str().unwrap(), "--sizes", "2"]);
    assert!(!out.status.success());
}

#[test]
fn simulate_writes_trace_sidecar() {
    let dir = tempfile::tempdir().unwrap();
    let out_csv = dir.path().join("run.csv");
    let out = ncsim(&[
        "simulate",
        "--n",
        "4",
        "--power-w",
        "inf",
        "--trials",
        "5",
        "--seed",
        "6",
        "--trace",
        "--out",
        out_csv.to_str().unwrap(),
    ]);
    assert!(out.status.success());
    let sidecar = dir.path().join("run.trace.csv");
    let trace = fs::read_to_string(&sidecar).unwrap();
    let mut lines = trace.lines();
    assert_eq!(lines.next().unwrap(), "N,protocol,trial,slot,total_dim_increase");
    // each trial's trace starts at zero and ends at N(N-1)
    let mut last_by_trial = std::collections::BTreeMap::new();
    for line in lines {
        let parts: Vec<&str> = line.split(',').collect();
        let trial: u32 = parts[2].parse().unwrap();
        let slot: u64 = parts[3].parse().unwrap();
        let d: u64 = parts[4].parse().unwrap();
        if slot == 0 {
            assert_eq!(d, 0);
        }
        last_by_trial.insert(trial, d);
    }
    assert_eq!(last_by_trial.len(), 5);
    assert!(last_by_trial.values().all(|&d| d == 12));

    let main_csv = fs::read_to_string(&out_csv).unwrap();
    assert!(main_csv.starts_with("topology,"));

    // --trace without --out has nowhere to put the sidecar
    let out = ncsim(&["simulate", "--n", "4", "--power-w", "inf", "--trials", "2", "--trace"]);
    assert!(!out.status.success());
}

#[test]
fn positions_file_drives_simulation() {
    let dir = tempfile::tempdir().unwrap();
    let positions = dir.path().join("pos.csv");
    fs::write(&positions, "node_id,x,y\n0,0,0\n1,10,0\n2,20,0\n").unwrap();
    let out = stdout(&ncsim(&[
        "simulate",
        "--topology",
        "file",
        "--positions",
        positions.to_str().unwrap(),
        "--power-w",
        "inf",
        "--trials",
        "10",
        "--seed",
        "3",
    ]));
    let row = out.lines().nth(1).unwrap();
    assert_eq!(field(row, "topology"), "file");
    assert_eq!(field(row, "N"), "3");
    assert_eq!(field(row, "d"), "0");
}

#[test]
fn missing_required_size_errors() {
    let out = ncsim(&["sweep-n", "--power-w", "inf"]);
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("--sizes"));
}

#[test]
fn grid_sizes_must_be_square_or_divisible() {
    let out = ncsim(&[
        "sweep-n", "--topology", "grid", "--sizes", "12", "--power-w", "inf", "--trials", "2",
    ]);
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("perfect square"));

    let ok = ncsim(&[
        "sweep-n", "--topology", "grid", "--sizes", "12", "--grid-cols", "4", "--power-w", "inf",
        "--trials", "2",
    ]);
    assert!(ok.status.success(), "{}", String::from_utf8_lossy(&ok.stderr));
    let text = String::from_utf8(ok.stdout).unwrap();
    assert_eq!(field(text.lines().nth(1).unwrap(), "topology"), "grid");
}

#[test]
fn all_incomplete_experiment_sets_failure_exit() {
    // two nodes far out of range: no trial can complete
    let dir = tempfile::tempdir().unwrap();
    let positions = dir.path().join("far.csv");
    fs::write(&positions, "node_id,x,y\n0,0,0\n1,1000000,0\n").unwrap();
    let out = ncsim(&[
        "simulate",
        "--topology",
        "file",
        "--positions",
        positions.to_str().unwrap(),
        "--power-w",
        "1e-9",
        "--trials",
        "2",
    ]);
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("no trial completed"));
    // the row is still written, with empty statistics
    let text = String::from_utf8(out.stdout).unwrap();
    let row = text.lines().nth(1).unwrap();
    assert_eq!(field(row, "mean_slots"), "");
}
