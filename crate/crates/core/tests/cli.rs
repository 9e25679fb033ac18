//! End-to-end runs of the `mamdi` binary.

use std::process::{Command, Output};

use mamdi::config::parse_config;
use mamdi::presets::{preset, PresetName};
use mamdi::rates::{evaluate, Protocol};

fn mamdi(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_mamdi"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout(args: &[&str]) -> String {
    let out = mamdi(args);
    assert!(
        out.status.success(),
        "mamdi {args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout).unwrap()
}

fn column(csv_text: &str, name: &str) -> Vec<String> {
    let mut rd = csv::Reader::from_reader(csv_text.as_bytes());
    let idx = rd.headers().unwrap().iter().position(|h| h == name).unwrap();
    rd.records().map(|r| r.unwrap()[idx].to_string()).collect()
}

#[test]
fn rate_column_is_the_engine_value() {
    let text = stdout(&["--preset", "fig6b", "rate", "--protocol", "ma-mdi-indirect", "--distance", "300"]);
    let col = column(&text, "rate_per_second");
    assert_eq!(col.len(), 1);
    let c = preset(PresetName::Fig6b).curves[0].config.with_total_distance(300.0).unwrap();
    let want = evaluate(&c, Protocol::MaMdiIndirect).unwrap().rate_per_second;
    assert_eq!(col[0].parse::<f64>().unwrap(), want);
}

#[test]
fn sweep_has_one_row_per_grid_point() {
    let text = stdout(&["sweep", "--grid", "0:100:10", "--protocol", "bb84", "--protocol", "ma-mdi-direct"]);
    assert_eq!(column(&text, "distance_km").len(), 11);
    assert!(text.lines().next().unwrap().contains("ma-mdi-direct.e11x"));
}

#[test]
fn dumped_preset_reproduces_preset_run() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("fig6a.toml");
    let p = path.to_str().unwrap();
    stdout(&["preset", "fig6a", "--out", p]);
    let text = std::fs::read_to_string(&path).unwrap();
    assert_eq!(parse_config(&text).unwrap(), preset(PresetName::Fig6a).curves[0].config);
    let args = ["rate", "--protocol", "ma-mdi-indirect", "--distance", "150"];
    let from_file = stdout(&[&["--config", p][..], &args[..]].concat());
    let from_preset = stdout(&[&["--preset", "fig6a"][..], &args[..]].concat());
    assert_eq!(from_file, from_preset);
}

#[test]
fn overrides_apply() {
    let base = stdout(&["rate", "--distance", "100"]);
    let over = stdout(&["--set", "memory.coherence_time=1e-6", "rate", "--distance", "100"]);
    assert_ne!(column(&base, "e11x"), column(&over, "e11x"));
    assert_eq!(column(&base, "e11z"), column(&over, "e11z"));
}

#[test]
fn mc_validate_json_is_reproducible() {
    let args = ["--format", "json", "mc-validate", "--seed", "4", "--trials", "20000"];
    let a = stdout(&args);
    assert_eq!(a, stdout(&args));
    let v: serde_json::Value = serde_json::from_str(&a).unwrap();
    assert_eq!(v["metadata"]["seed"], 4);
    assert_eq!(v["metadata"]["trials"], 20000);
    let check = &v["result"][0]["report"]["checks"][0];
    for key in ["closed_form", "estimate", "std_error", "z_score", "pass"] {
        assert!(!check[key].is_null(), "{key}");
    }
}

#[test]
fn json_rate_mirrors_fields() {
    let v: serde_json::Value =
        serde_json::from_str(&stdout(&["--format", "json", "rate", "--source", "decoy", "--distance", "50"])).unwrap();
    let b = &v["result"][0]["breakdown"];
    assert_eq!(b["protocol"], "ma-mdi-direct");
    assert_eq!(b["source"], "decoy");
    assert!(b["gain_z"].is_number());
    assert!(v["metadata"]["config"][0]["channel"].is_object());
}

#[test]
fn crossover_and_storage_time() {
    let text = stdout(&["--preset", "fig3", "--curve", "3", "crossover", "--kind", "storage-time", "--bracket", "1:1000"]);
    let at: f64 = column(&text, "location_km")[0].parse().unwrap();
    assert!(at > 300.0);
    let text = stdout(&["--preset", "fig3", "storage-time", "--grid", "0:200:100"]);
    assert_eq!(column(&text, "curve").len(), 12);
}

#[test]
fn exit_codes() {
    let code = |args: &[&str]| mamdi(args).status.code().unwrap();
    assert_eq!(code(&["--preset", "fig9", "rate"]), 2);
    assert_eq!(code(&["sweep"]), 2);
    assert_eq!(code(&["rate", "--nonsense"]), 2);
    assert_eq!(code(&["--set", "detector.efficiency=1.2", "rate"]), 3);
    assert_eq!(code(&["--set", "detector.bogus=1", "rate"]), 2);
    assert_eq!(code(&["crossover", "--kind", "storage-time", "--bracket", "1:2"]), 4);
    assert_eq!(code(&["rate", "--out", "/nonexistent/dir/x.csv"]), 1);
    assert_eq!(code(&["--config", "/nonexistent/config.toml", "rate"]), 1);
    assert_eq!(code(&["mc-validate", "--trials", "3", "--seed", "1"]), 5);
}
