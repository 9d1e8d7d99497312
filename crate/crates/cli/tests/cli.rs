use std::path::PathBuf;
use std::process::{Command, Output};

use framecert_cli::config::{Grid, Step};
use framecert_cli::{parse_config, run, serialize_config, Format};
use serde_json::Value;

fn fixture(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures").join(name)
}

fn framecert(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_framecert"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8(o.stderr.clone()).unwrap()
}

#[test]
fn every_node_kind_round_trips() {
    let text = std::fs::read_to_string(fixture("every_node.json")).unwrap();
    let cfg = parse_config(&text).unwrap();
    let again = serialize_config(&cfg);
    assert_eq!(parse_config(&again).unwrap(), cfg);
    assert_eq!(serialize_config(&parse_config(&again).unwrap()), again);
    assert_eq!(cfg.steps.len(), 10);
    assert!(matches!(cfg.grid, Some(Grid::Linear { count: 5, .. })));
    assert!(matches!(cfg.steps[9], Step::Translate { .. }));
    for tag in [
        "lebesgue", "lebesgue_on_set", "atomic", "ifs_invariant", "density", "restrict", "scale", "sum",
        "convolve", "translate", "normalize",
    ] {
        assert!(again.contains(&format!("\"node\": \"{tag}\"")), "{tag}");
    }
}

#[test]
fn unknown_node_is_named() {
    let err = parse_config(r#"{"command": "describe", "measure": {"node": "gaussian"}}"#).unwrap_err();
    let msg = err.to_string();
    assert!(msg.contains("gaussian") && msg.contains("measure"), "{msg}");
}

#[test]
fn unknown_field_is_rejected() {
    let err = parse_config(r#"{"command": "catalog", "colour": 1}"#).unwrap_err();
    assert!(err.to_string().contains("colour"));
}

#[test]
fn invalid_measure_reports_path() {
    let cfg = r#"{"command": "describe", "measure": {"node": "scale", "alpha": 1.0,
        "base": {"node": "atomic", "atoms": [{"point": [0.0], "weight": -1.0}]}}}"#;
    let msg = parse_config(cfg).unwrap_err().to_string();
    assert!(msg.contains("measure") && msg.contains("weight"), "{msg}");
}

#[test]
fn catalog_lists_four_pairs() {
    let o = framecert(&["catalog"]);
    assert!(o.status.success());
    let v: Value = serde_json::from_str(&stdout(&o)).unwrap();
    let entries = v.as_array().unwrap();
    assert_eq!(entries.len(), 4);
    for (i, e) in entries.iter().enumerate() {
        assert_eq!(e["index"], i + 1);
        assert_eq!(e["cert"]["kind"], "plancherel");
    }
    let csv = framecert(&["catalog", "--format", "csv"]);
    assert_eq!(stdout(&csv).lines().count(), 5);
}

#[test]
fn verify_plancherel_pair_exits_zero() {
    let o = framecert(&["--config", fixture("pair1_verify.json").to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let v: Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(v["verdict"], "consistent");
}

#[test]
fn verify_matches_recorded_output() {
    let o = framecert(&["--config", fixture("pair1_verify.json").to_str().unwrap()]);
    let want = std::fs::read_to_string(fixture("pair1_verify.expected.json")).unwrap();
    assert_eq!(stdout(&o), want);
}

#[test]
fn wrong_cert_exits_two() {
    let cfg = r#"{"command": "verify",
        "pair": {"catalog": 1, "cert": {"A": 2.0, "B": 2.0, "kind": "tight",
                 "provenance": [{"rule": "stated", "a": 2.0, "b": 2.0}]}},
        "family": {"kind": "step", "count": 4, "max_degree": 3}}"#;
    let o = framecert(&["--inline", cfg, "--seed", "1"]);
    assert_eq!(o.status.code(), Some(2), "{}", stderr(&o));
    let v: Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(v["verdict"], "lower-violated");
}

#[test]
fn verify_needs_seed() {
    let cfg = r#"{"command": "verify", "pair": {"catalog": 1}, "family": {"kind": "trig", "count": 2}}"#;
    let o = framecert(&["--inline", cfg]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("seed"));
}

#[test]
fn empty_family_gives_header_and_summary() {
    let cfg = r#"{"command": "verify", "pair": {"catalog": 1}, "family": {"kind": "trig", "count": 0, "seed": 1}}"#;
    let o = framecert(&["--inline", cfg, "--format", "csv"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let text = stdout(&o);
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "id,ratio,error,tail");
    assert!(lines[1].starts_with("emp_lower,"));
    assert!(lines.iter().any(|l| *l == "verdict,consistent" || *l == "verdict,inconclusive"));
}

#[test]
fn csv_and_json_agree() {
    let cfg_path = fixture("pair1_verify.json");
    let cfg_path = cfg_path.to_str().unwrap();
    let json: Value = serde_json::from_str(&stdout(&framecert(&["--config", cfg_path]))).unwrap();
    let csv_text = stdout(&framecert(&["--config", cfg_path, "--format", "csv"]));
    let mut reader = csv::ReaderBuilder::new()
        .flexible(true)
        .from_reader(csv_text.as_bytes());
    let ratios = json["ratios"].as_array().unwrap();
    let mut summary = std::collections::BTreeMap::new();
    let mut rows = 0;
    for rec in reader.records() {
        let rec = rec.unwrap();
        if rec.len() == 4 {
            let r = &ratios[rows];
            assert_eq!(rec[0], r["id"].to_string());
            assert_eq!(&rec[1], r["ratio"].as_str().unwrap());
            assert_eq!(&rec[2], r["error"].as_str().unwrap());
            assert_eq!(&rec[3], r["tail"].as_str().unwrap());
            rows += 1;
        } else {
            summary.insert(rec[0].to_string(), rec[1].to_string());
        }
    }
    assert_eq!(rows, ratios.len());
    assert_eq!(summary["emp_lower"], json["emp_lower"].as_str().unwrap());
    assert_eq!(summary["emp_upper"], json["emp_upper"].as_str().unwrap());
    assert_eq!(summary["A"], json["cert"]["A"].as_str().unwrap());
    assert_eq!(summary["B"], json["cert"]["B"].as_str().unwrap());
    assert_eq!(summary["cert_kind"], json["cert"]["kind"].as_str().unwrap());
    assert_eq!(summary["verdict"], json["verdict"].as_str().unwrap());
}

#[test]
fn describe_and_transform_from_library() {
    let text = std::fs::read_to_string(fixture("every_node.json")).unwrap();
    let mut cfg = parse_config(&text).unwrap();
    cfg.output.format = Format::Json;
    let out = run(&cfg).unwrap();
    let v: Value = serde_json::from_str(&out.artifact).unwrap();
    assert_eq!(v["dim"], 1);
    assert_eq!(v["mass"], "1.0000000000000000e0");

    cfg.command = Some(framecert_cli::Command::Transform);
    let out = run(&cfg).unwrap();
    let rows: Value = serde_json::from_str(&out.artifact).unwrap();
    assert_eq!(rows.as_array().unwrap().len(), 5);
}

#[test]
fn construct_applies_every_step() {
    let text = std::fs::read_to_string(fixture("every_node.json")).unwrap();
    let mut cfg = parse_config(&text).unwrap();
    cfg.command = Some(framecert_cli::Command::Construct);
    cfg.steps.retain(|s| !matches!(s, Step::ConvolutionChain { .. } | Step::SmoothBase { .. }));
    cfg.steps.retain(|s| !matches!(s, Step::Mix { .. } | Step::SumBessel { .. }));
    cfg.output.format = Format::Json;
    let out = run(&cfg).unwrap();
    let v: Value = serde_json::from_str(&out.artifact).unwrap();
    assert_eq!(v["cert"]["provenance"].as_array().unwrap().len(), 1 + cfg.steps.len());
}

#[test]
fn chain_on_catalog_pair() {
    let cfg = r#"{"command": "construct", "pair": {"catalog": 1},
        "steps": [{"op": "convolution_chain",
                   "phi": {"form": {"form": "piecewise_constant", "breaks": [0.3, 0.7], "values": [2.0, 0.5, 2.0]},
                           "domain": {"kind": "line"}, "lower": 0.5, "upper": 2.0},
                   "sets": [[{"lo": 0.0, "hi": 0.5}], [{"lo": 0.0, "hi": 0.25}]]}]}"#;
    let o = framecert(&["--inline", cfg]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let v: Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(v["cert"]["A"], "5.0000000000000000e-1");
    assert_eq!(v["cert"]["B"], "2.0000000000000000e0");
}

#[test]
fn limit_check_runs() {
    let cfg = r#"{"command": "limit-check", "pair": {"catalog": 2},
        "family": {"kind": "trig", "count": 4, "max_degree": 2, "seed": 5},
        "limit": {"identity": {"kind": "i"}, "n": [1, 2]}}"#;
    let o = framecert(&["--inline", cfg]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let v: Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(v["entries"].as_array().unwrap().len(), 2);
    assert_eq!(v["all_consistent"], true);
}

#[test]
fn command_conflict_is_an_error() {
    let o = framecert(&["verify", "--inline", r#"{"command": "catalog"}"#]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("conflicts"));
}

#[test]
fn out_flag_writes_file() {
    let path = std::env::temp_dir().join(format!("framecert-cli-{}.csv", std::process::id()));
    let o = framecert(&["catalog", "--format", "csv", "--out", path.to_str().unwrap()]);
    assert!(o.status.success());
    assert!(o.stdout.is_empty());
    let text = std::fs::read_to_string(&path).unwrap();
    std::fs::remove_file(&path).unwrap();
    assert!(text.starts_with("index,A,B,kind,provenance,mu,nu,truncation\n"));
}
