use std::path::PathBuf;
use std::process::Command;

use serde_json::{json, Value};

fn scratch(name: &str, contents: &Value) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("mcocycle-cli-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let p = dir.join(name);
    std::fs::write(&p, serde_json::to_string(contents).unwrap()).unwrap();
    p
}

fn mcocycle(args: &[&str]) -> (i32, String) {
    let out = Command::new(env!("CARGO_BIN_EXE_mcocycle"))
        .args(args)
        .output()
        .expect("binary runs");
    (out.status.code().unwrap(), String::from_utf8(out.stdout).unwrap())
}

fn cocycle_pair() -> Value {
    // x climbs 0, 1 away from the centre; y raises the centre to 2.
    let x: Vec<u32> = (0..25).map(|i| ((i / 5 + i % 5) % 2) as u32).collect();
    let mut y = x.clone();
    y[12] = 2;
    json!({
        "x": {"r": 3, "dims": [5, 5], "offset": [-2, -2], "cells": x},
        "y": {"r": 3, "dims": [5, 5], "offset": [-2, -2], "cells": y},
    })
}

#[test]
fn cocycle_eval_reports_basis_and_value() {
    let pair = scratch("pair.json", &cocycle_pair());
    let alphas = scratch("alphas.json", &json!({"r": 3, "coeffs": [0.5, 1.0, -2.0]}));
    let (code, out) = mcocycle(&["cocycle-eval", "--alphas", alphas.to_str().unwrap(), "--pair", pair.to_str().unwrap()]);
    assert_eq!(code, 0);
    let v: Value = serde_json::from_str(&out).unwrap();
    assert_eq!(v["basis"], json!([1, 0, 0]));
    assert_eq!(v["hat"], 2);
    assert_eq!(v["value"], 0.5);
}

#[test]
fn invalid_configuration_exits_with_one() {
    let bad = scratch("bad.json", &json!({"r": 3, "dims": [2, 2], "offset": [0, 0], "cells": [0, 0, 1, 2]}));
    let (code, out) = mcocycle(&["validate", "--model", "xr", "--config", bad.to_str().unwrap()]);
    assert_eq!(code, 1);
    let v: Value = serde_json::from_str(&out).unwrap();
    assert_eq!(v["valid"], false);
}

#[test]
fn domain_errors_are_json() {
    let z = scratch("r4.json", &json!({"r": 4, "dims": [2, 2], "offset": [0, 0], "cells": [0, 1, 1, 2]}));
    let (code, out) = mcocycle(&["validate", "--model", "xr", "--config", z.to_str().unwrap()]);
    assert_eq!(code, 1);
    let v: Value = serde_json::from_str(&out).unwrap();
    assert_eq!(v["error"], "unsupported_model");
}

#[test]
fn heat_bath_is_reproducible() {
    let cells: Vec<u32> = (0..81).map(|i| ((i / 9 + i % 9) % 2) as u32).collect();
    let b = scratch("frame.json", &json!({"r": 3, "dims": [9, 9], "offset": [-4, -4], "cells": cells}));
    let a = scratch("zero.json", &json!({"r": 3, "coeffs": [0.0, 0.0, 0.0]}));
    let args = [
        "heat-bath", "--alphas", a.to_str().unwrap(), "--window", "7x7", "--boundary", b.to_str().unwrap(),
        "--sweeps", "200", "--seed", "7",
    ];
    let (c1, o1) = mcocycle(&args);
    let (c2, o2) = mcocycle(&args);
    assert_eq!((c1, c2), (0, 0));
    assert_eq!(o1, o2);
    let (code, _) = mcocycle(&args[..args.len() - 2]);
    assert_eq!(code, 2, "sampling without --seed is a usage error");
}

#[test]
fn generated_tilings_pass_validation() {
    let (code, out) = mcocycle(&["tiles-generate", "--window", "15x15", "--density", "0.4", "--seed", "3"]);
    assert_eq!(code, 0);
    let t: Value = serde_json::from_str(&out).unwrap();
    assert_eq!(t["alphabet"], "x18");
    let p = scratch("tiles.json", &t);
    let (code, out) = mcocycle(&["tiles-validate", "--tiles", p.to_str().unwrap()]);
    assert_eq!(code, 0, "{out}");
    let (code, out) = mcocycle(&["tiles-islands", "--tiles", p.to_str().unwrap()]);
    assert_eq!(code, 0);
    let v: Value = serde_json::from_str(&out).unwrap();
    assert!(!v["islands"].as_array().unwrap().is_empty());
}

#[test]
fn usage_errors_exit_with_two() {
    assert_eq!(mcocycle(&["no-such-command"]).0, 2);
    assert_eq!(mcocycle(&["lift"]).0, 2);
}
