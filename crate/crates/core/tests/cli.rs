use std::process::{Command, Output};

use degraded_polar::config::{flag_value, key_info, RunConfig};
use degraded_polar::polar::{PolarCode, PolarCodeDocument};

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_degraded-polar"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout(args: &[&str]) -> String {
    let out = run(args);
    assert!(out.status.success(), "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
    String::from_utf8(out.stdout).unwrap()
}

fn exit_code(args: &[&str]) -> i32 {
    run(args).status.code().expect("exit code")
}

/// `(flag, key, default)` for every option in a subcommand's help.
fn help_defaults(sub: &str) -> Vec<(String, String, String)> {
    stdout(&[sub, "--help"])
        .lines()
        .filter_map(|line| {
            let flag = line.trim_start().strip_prefix("--")?.split_whitespace().next()?.to_string();
            let (_, rest) = line.rsplit_once("] [default: ")?;
            let key = line[..line.len() - rest.len() - "] [default: ".len()].rsplit_once('[')?.1.to_string();
            Some((flag, key, rest.trim_end_matches(']').to_string()))
        })
        .collect()
}

#[test]
fn help_lists_every_default_and_they_match_behavior() {
    let cases: [(&str, &[&str]); 6] = [
        ("construct", &[]),
        ("bler", &["--trials", "500", "--seed", "3"]),
        ("rate-sweep", &["--n-list", "2,3", "--trials", "300", "--seed", "3"]),
        ("erasure", &["--blocks", "40", "--seed", "3"]),
        ("tradeoff", &[]),
        ("end-to-end", &["--trials", "300", "--blocks", "40", "--seed", "3"]),
    ];
    for (sub, base) in cases {
        let defaults = help_defaults(sub);
        assert!(defaults.len() >= 5, "{sub}: {defaults:?}");
        let mut explicit: Vec<String> = vec![sub.to_string()];
        explicit.extend(base.iter().map(|s| s.to_string()));
        for (flag, key, shown) in &defaults {
            assert_eq!(shown, &RunConfig::display_default(key), "{sub} --{flag}");
            let info = key_info(key).unwrap();
            if base.contains(&format!("--{flag}").as_str()) || flag_value(info, shown).is_err() {
                continue;
            }
            if shown == "false" {
                continue;
            }
            explicit.push(format!("--{flag}"));
            explicit.push(shown.clone());
        }
        let mut implicit = vec![sub];
        implicit.extend(base);
        let explicit: Vec<&str> = explicit.iter().map(String::as_str).collect();
        assert_eq!(stdout(&implicit), stdout(&explicit), "{sub}");
    }
}

#[test]
fn construct_examples() {
    let out = stdout(&["construct", "--n", "2", "--epsilon", "0.5", "--k", "2"]);
    assert!(out.contains("information set: 3 4\n"), "{out}");
    assert!(out.contains("union bound on BLER: 0.5\n"), "{out}");

    let out = stdout(&["construct", "--n", "1", "--epsilon", "0"]);
    assert!(out.contains("K = 2,") && out.contains("information set: 1 2\n"), "{out}");

    let out = stdout(&["construct", "--n", "4", "--epsilon", "0.054"]);
    assert!(out.contains("K = 15,"), "{out}");
}

#[test]
fn construct_json_loads_back() {
    let out = stdout(&["construct", "--n", "5", "--epsilon", "0.3", "--k", "20", "--format", "json"]);
    let mut value: serde_json::Value = serde_json::from_str(&out).unwrap();
    value.as_object_mut().unwrap().remove("union_bound_bler");
    let doc: PolarCodeDocument = serde_json::from_value(value).unwrap();
    let code = PolarCode::from_document(&doc).unwrap();
    assert_eq!(code, PolarCode::new(5, 0.3, 20).unwrap());
}

#[test]
fn bler_matches_exact_value() {
    let out = stdout(&["bler", "--n", "1", "--k", "1", "--epsilon", "0.5", "--trials", "1000000", "--seed", "7", "--exact"]);
    let mut lines = out.lines();
    let header: Vec<&str> = lines.next().unwrap().split(',').collect();
    let row: Vec<&str> = lines.next().unwrap().split(',').collect();
    let col = |name: &str| row[header.iter().position(|h| *h == name).unwrap()];
    let point: f64 = col("bler_point").parse().unwrap();
    assert!((point - 0.25).abs() < 3.0 * (0.25f64 * 0.75 / 1e6).sqrt(), "{point}");
    assert_eq!(col("exact_bler"), "0.25");
    assert_eq!(col("seed"), "7");
}

#[test]
fn rate_sweep_emits_one_row_per_cell() {
    let out = stdout(&["rate-sweep", "--n-list", "4,8,10,12", "--trials", "100", "--seed", "1"]);
    let lines: Vec<&str> = out.lines().collect();
    assert_eq!(lines[0], "n,N,target_bler,epsilon,K,rate,bler_point,bler_lo,bler_hi,trials,seed");
    assert_eq!(lines.len() - 1, 4 * 3 * 6);
}

#[test]
fn exit_codes() {
    assert_eq!(exit_code(&["construct", "--n", "2", "--epsilon", "1.5"]), 2);
    assert_eq!(exit_code(&["construct", "--n", "2", "--k", "9"]), 2);
    assert_eq!(exit_code(&["bler", "--no-such-flag"]), 2);
    assert_eq!(exit_code(&["bler", "--trials", "ten"]), 2);
    assert_eq!(exit_code(&["bler", "--format", "xml"]), 2);
    assert_eq!(exit_code(&["construct", "--config", "/nonexistent/config.json"]), 2);
    assert_eq!(exit_code(&["tradeoff", "--points", "0.75:0.7,0.5:0.8"]), 2);
    assert_eq!(exit_code(&["end-to-end", "--epsilon-source", "reference", "--speed", "20"]), 2);
    assert_eq!(exit_code(&["bler", "--n", "5", "--exact", "--seed", "1"]), 3);
    assert_eq!(exit_code(&["construct"]), 0);
}

#[test]
fn config_file_is_applied_and_flags_override_it() {
    let dir = std::env::temp_dir().join(format!("degraded-polar-cli-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let config = dir.join("config.json");
    std::fs::write(&config, r#"{"polar.n": 3, "polar.epsilon": 0.5, "polar.k": 4}"#).unwrap();
    let config = config.to_str().unwrap();

    let out = stdout(&["construct", "--config", config]);
    assert!(out.starts_with("n = 3, N = 8, K = 4,"), "{out}");
    let out = stdout(&["construct", "--config", config, "--k", "2"]);
    assert!(out.starts_with("n = 3, N = 8, K = 2,"), "{out}");

    std::fs::write(dir.join("bad.json"), r#"{"polar.n": 3, "polar.size": 8}"#).unwrap();
    let bad = dir.join("bad.json");
    assert_eq!(exit_code(&["construct", "--config", bad.to_str().unwrap()]), 2);
    std::fs::remove_dir_all(&dir).unwrap();
}

#[test]
fn output_file_matches_stdout_and_path_is_reported() {
    let dir = std::env::temp_dir().join(format!("degraded-polar-out-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let path = dir.join("tradeoff.csv");
    let out = run(&["tradeoff", "--output", path.to_str().unwrap()]);
    assert!(out.status.success());
    assert!(out.stdout.is_empty());
    let stderr = String::from_utf8(out.stderr).unwrap();
    assert!(stderr.contains(path.to_str().unwrap()) && stderr.contains("elapsed"), "{stderr}");
    assert_eq!(std::fs::read_to_string(&path).unwrap(), stdout(&["tradeoff"]));
    std::fs::remove_dir_all(&dir).unwrap();
}

#[test]
fn missing_seed_is_drawn_and_printed() {
    let out = run(&["bler", "--trials", "100"]);
    assert!(out.status.success());
    let stderr = String::from_utf8(out.stderr).unwrap();
    let seed = stderr.lines().find_map(|l| l.strip_prefix("seed: ")).expect("seed printed");
    let csv = String::from_utf8(out.stdout).unwrap();
    assert!(csv.trim_end().ends_with(&format!(",{seed}")));
    assert_eq!(csv, stdout(&["bler", "--trials", "100", "--seed", seed]));
}

#[test]
fn documented_configs_and_schema_match_the_parser() {
    let docs = std::path::Path::new(env!("CARGO_MANIFEST_DIR")).join("../../docs");
    for sub in ["construct", "bler", "rate-sweep", "erasure", "tradeoff", "end-to-end"] {
        let text = std::fs::read_to_string(docs.join("examples").join(format!("{sub}.json"))).unwrap();
        RunConfig::default().apply_json_text(&text).unwrap_or_else(|e| panic!("{sub}: {e}"));
    }
    let schema: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(docs.join("config.schema.json")).unwrap()).unwrap();
    let mut documented: Vec<&str> = schema["properties"].as_object().unwrap().keys().map(String::as_str).collect();
    let mut known: Vec<&str> = degraded_polar::config::KEYS.iter().map(|k| k.key).collect();
    documented.sort();
    known.sort();
    assert_eq!(documented, known);
}
