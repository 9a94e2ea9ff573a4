use std::process::{Command, Output};

use serde_json::Value;
use suq2_walk::central::green_central;
use suq2_walk::{DeformationParams, IrrepLabel, WeightFunctional};

fn suq2(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_suq2")).args(args).output().expect("run suq2")
}

fn json(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout).expect("valid json")
}

#[test]
fn green_table_schema() {
    let out = suq2(&["green", "--q", "0.5", "--phi", "1:1.0", "--target", "0", "--s-max", "20"]);
    assert_eq!(out.status.code(), Some(0));
    let v = json(&out);
    assert_eq!(v["q"], 0.5);
    assert_eq!(v["phi"], serde_json::json!([[1, 1.0]]));
    assert_eq!(v["command"], "green");
    let rows = v["rows"].as_array().unwrap();
    assert_eq!(rows.len(), 21);
    for (i, row) in rows.iter().enumerate() {
        assert_eq!(row["s2"], i);
        assert!(row["value"].as_f64().unwrap() >= 0.0);
        assert!(row["tail_bound"].as_f64().unwrap() <= 1e-8);
    }
}

#[test]
fn json_values_round_trip_bit_exactly() {
    let out = suq2(&["green", "--q", "0.3", "--phi", "1:0.5,2:0.5", "--s-max", "30"]);
    let v = json(&out);
    let phi = WeightFunctional::new([(IrrepLabel::from_twice_spin(1), 0.5), (IrrepLabel::from_twice_spin(2), 0.5)]).unwrap();
    let table = green_central(&phi, IrrepLabel::TRIVIAL, IrrepLabel::from_twice_spin(30), &DeformationParams::new(0.3).unwrap())
        .unwrap();
    for (row, expected) in v["rows"].as_array().unwrap().iter().zip(&table.rows) {
        assert_eq!(row["value"].as_f64().unwrap().to_bits(), expected.value.to_bits());
        assert_eq!(row["tail_bound"].as_f64().unwrap().to_bits(), expected.tail_bound.to_bits());
    }
}

#[test]
fn output_is_deterministic() {
    let args = ["ratio", "--q", "0.8", "--phi", "1:0.3,3:0.7", "--s-max", "20", "--format", "csv"];
    let (a, b) = (suq2(&args), suq2(&args));
    assert_eq!(a.status.code(), Some(0));
    assert_eq!(a.stdout, b.stdout);
    let verify = ["verify", "--seed", "7"];
    assert_eq!(suq2(&verify).stdout, suq2(&verify).stdout);
}

#[test]
fn delta_example() {
    let v = json(&suq2(&["delta", "--q", "0.5", "--phi", "1:1.0"]));
    assert_eq!(v["rows"][0]["delta"], 0.0);
    assert!((v["rows"][0]["lambda_phi"].as_f64().unwrap() + 0.6).abs() <= 1e-14);
}

#[test]
fn csv_header_and_rows() {
    let out = suq2(&["green", "--s-max", "3", "--format", "csv"]);
    let text = String::from_utf8(out.stdout).unwrap();
    let lines: Vec<_> = text.lines().collect();
    assert_eq!(lines[0], "s2,value,tail_bound");
    assert_eq!(lines.len(), 5);
    assert!(lines[1].starts_with("0,1.24999"));
}

#[test]
fn verify_all_passes() {
    let out = suq2(&["verify", "--suite", "all", "--q", "0.5"]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stdout));
    let v = json(&out);
    assert_eq!(v["passed"], true);
    assert_eq!(v["seed"], 42);
    let suites: std::collections::BTreeSet<_> =
        v["rows"].as_array().unwrap().iter().map(|r| r["suite"].as_str().unwrap().to_string()).collect();
    assert_eq!(suites.len(), 4);
}

#[test]
fn invalid_input_exits_with_two() {
    for (args, needle) in [
        (vec!["green", "--phi", "1:-0.5"], "1:-0.5"),
        (vec!["green", "--phi", "x:1"], "'x'"),
        (vec!["green", "--phi", "1:0.8,2:0.8"], "above 1"),
        (vec!["green", "--q", "1.2"], "q = 1.2"),
        (vec!["martin-central", "--phi", "2:1.0"], "not generating"),
        (vec!["verify", "--suite", "nope"], "unknown suite"),
        (vec!["balayage", "--Y", "0,200", "--s-max", "10"], "beyond the cutoff"),
        (vec!["frobnicate"], "unrecognized subcommand"),
    ] {
        let out = suq2(&args);
        assert_eq!(out.status.code(), Some(2), "{args:?}");
        let err = String::from_utf8_lossy(&out.stderr);
        assert!(err.contains(needle), "{args:?}: {err}");
    }
}

#[test]
fn resource_limit_exits_with_one() {
    let out = suq2(&["martin-block", "--q", "0.95", "--n", "1", "--r-max", "4"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("block budget"));
}

#[test]
fn every_command_runs() {
    for args in [
        vec!["podles", "--s-max", "4"],
        vec!["martin-central", "--target", "1", "--s-max", "20"],
        vec!["martin-block", "--n", "1", "--r-max", "6"],
        vec!["balayage", "--Y", "0,1", "--x", "green", "--s-max", "30"],
        vec!["zerotwo", "--n", "20", "--k", "2"],
    ] {
        let out = suq2(&args);
        assert_eq!(out.status.code(), Some(0), "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
        assert!(!json(&out)["rows"].as_array().unwrap().is_empty());
    }
}
