use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;

fn qrm(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_qrm")).args(args).output().expect("binary runs")
}

fn json_ok(args: &[&str]) -> Value {
    let out = qrm(args);
    assert!(out.status.success(), "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
    serde_json::from_slice(&out.stdout).expect("stdout is JSON")
}

fn error_of(args: &[&str]) -> (i32, Value) {
    let out = qrm(args);
    let code = out.status.code().expect("exit code");
    let err: Value = serde_json::from_slice(&out.stderr).expect("stderr is JSON");
    (code, err)
}

fn scratch(name: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("qrm-cli-test-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    dir.join(name)
}

fn schema(name: &str) -> Value {
    let path = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../schemas").join(format!("{name}.schema.json"));
    serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap()
}

// Covers the keywords the bundled schemas use.
fn conforms(v: &Value, s: &Value, at: &str) -> Result<(), String> {
    if let Some(t) = s.get("type") {
        let types: Vec<&str> = match t {
            Value::String(one) => vec![one.as_str()],
            Value::Array(many) => many.iter().filter_map(Value::as_str).collect(),
            _ => vec![],
        };
        let ok = types.iter().any(|t| match *t {
            "object" => v.is_object(),
            "array" => v.is_array(),
            "number" => v.is_number(),
            "integer" => v.is_u64() || v.is_i64(),
            "boolean" => v.is_boolean(),
            "string" => v.is_string(),
            "null" => v.is_null(),
            _ => false,
        });
        if !ok {
            return Err(format!("{at}: {v} is not {t}"));
        }
    }
    if let Some(c) = s.get("const") {
        if v != c {
            return Err(format!("{at}: {v} != {c}"));
        }
    }
    if let Some(Value::Array(options)) = s.get("enum") {
        if !options.contains(v) {
            return Err(format!("{at}: {v} not in {options:?}"));
        }
    }
    if let Some(min) = s.get("minimum").and_then(Value::as_f64) {
        if v.as_f64().is_some_and(|x| x < min) {
            return Err(format!("{at}: {v} < {min}"));
        }
    }
    if let Value::Object(map) = v {
        if let Some(Value::Array(req)) = s.get("required") {
            for key in req.iter().filter_map(Value::as_str) {
                if !map.contains_key(key) {
                    return Err(format!("{at}: missing '{key}'"));
                }
            }
        }
        if let Some(Value::Object(props)) = s.get("properties") {
            for (key, sub) in props {
                if let Some(x) = map.get(key) {
                    conforms(x, sub, &format!("{at}.{key}"))?;
                }
            }
        }
    }
    if let (Value::Array(items), Some(sub)) = (v, s.get("items")) {
        for (i, x) in items.iter().enumerate() {
            conforms(x, sub, &format!("{at}[{i}]"))?;
        }
    }
    Ok(())
}

fn assert_schema(doc: &Value, name: &str) {
    if let Err(e) = conforms(doc, &schema(name), "$") {
        panic!("{name}: {e}");
    }
}

#[test]
fn overlap_at_zero_coupling_is_sqrt_pi() {
    let doc = json_ok(&["overlap", "--N", "1", "--k", "1", "--alpha", "0"]);
    let v = doc["result"]["value"].as_f64().unwrap();
    assert!((v - std::f64::consts::PI.sqrt()).abs() < 1e-14);
    assert_eq!(doc["command"], "overlap");
    assert_eq!(doc["config"]["method"], "closed_form");
}

#[test]
fn quadrature_route_agrees_with_closed_form() {
    let closed = json_ok(&["overlap", "--N", "7", "--k", "4", "--alpha", "0.8"]);
    let quad = json_ok(&["overlap", "--N", "7", "--k", "4", "--alpha", "0.8", "--method", "quadrature"]);
    let (a, b) = (closed["result"]["value"].as_f64().unwrap(), quad["result"]["value"].as_f64().unwrap());
    assert!((a - b).abs() <= 1e-12 * a.abs().max(1.0), "{a} vs {b}");
    assert_eq!(quad["config"]["nodes"], qrm_core::overlaps::required_nodes(7, 4) + 20);
}

#[test]
fn laguerre_zeros_csv() {
    let out = qrm(&["laguerre-zeros", "--degree", "2", "--format", "csv"]);
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "zero_1,zero_2");
    let zeros: Vec<f64> = lines[1].split(',').map(|c| c.parse().unwrap()).collect();
    assert!((zeros[0] - (2.0 - 2f64.sqrt())).abs() < 1e-14);
    assert!((zeros[1] - (2.0 + 2f64.sqrt())).abs() < 1e-14);
    assert!(!text.contains('\r'));
}

#[test]
fn braak_verdicts_hold_for_default_model() {
    let doc = json_ok(&["braak", "--eps", "0.05", "--nmax", "9"]);
    assert_eq!(doc["result"]["all_verdicts"], true);
    for row in doc["result"]["report"]["per_interval"].as_array().unwrap() {
        assert_eq!(row["total_count"], 2);
    }
}

#[test]
fn exit_codes_by_error_kind() {
    let cases: &[(&[&str], i32, &str)] = &[
        (&["spectrum", "--nope"], 2, "usage"),
        (&["overlap", "--k", "1", "--alpha", "0"], 2, "usage"),
        (&["spectrum", "--family", "qr", "--gamma", "-1,1"], 3, "spec"),
        (&["weyl", "--family", "xi", "--alpha", "1,0", "--gamma", "0,0", "--cutoff", "6"], 3, "spec"),
        (&["smges-check", "--family", "qr"], 3, "spec"),
        (&["avoid-seq", "--x0", "0.585786437626905"], 4, "degenerate_input"),
        (&["overlap", "--N", "10", "--k", "10", "--alpha", "1", "--method", "quadrature", "--nodes", "3"], 5, "insufficient_nodes"),
        (&["quasimode", "--N", "1", "--alpha", "1"], 9, "domain"),
        (&["overlap", "--N", "100", "--k", "30", "--alpha", "1"], 7, "precision"),
        (&["braak", "--nmax", "10", "--m", "4"], 6, "coverage"),
        (&["spectrum", "--out", "/nonexistent-dir/x.json"], 11, "io"),
    ];
    for (args, code, kind) in cases {
        let (c, err) = error_of(args);
        assert_eq!(c, *code, "{args:?}: {err}");
        assert_eq!(err["error"]["kind"], *kind, "{args:?}");
        assert_eq!(err["error"]["code"], *code);
        assert_schema(&err, "error");
    }
}

#[test]
fn degenerate_input_carries_details() {
    let (_, err) = error_of(&["avoid-seq", "--x0", "0.585786437626905"]);
    let d = &err["error"]["details"];
    assert_eq!(d["degree"], 2);
    assert!(d["distance"].as_f64().unwrap() < 1e-10);
}

#[test]
fn config_file_and_flag_precedence() {
    let cfg = scratch("precedence.toml");
    std::fs::write(&cfg, "x0 = 3.7\njmax = 2\n").unwrap();
    let c = cfg.to_str().unwrap();
    let doc = json_ok(&["avoid-seq", "--config", c]);
    assert_eq!(doc["config"]["x0"], 3.7);
    assert_eq!(doc["config"]["jmax"], 2);
    assert_eq!(doc["config"]["kcap"], 20000);
    assert_eq!(doc["result"]["entries"].as_array().unwrap().len(), 2);
    let doc = json_ok(&["avoid-seq", "--config", c, "--jmax", "3"]);
    assert_eq!(doc["config"]["jmax"], 3);
    let ks: Vec<u64> = doc["result"]["entries"].as_array().unwrap().iter().map(|e| e["k"].as_u64().unwrap()).collect();
    assert_eq!(ks, [9, 77, 345]);
}

#[test]
fn config_scalar_for_list_key() {
    let cfg = scratch("scalar.toml");
    std::fs::write(&cfg, "family = \"qrabi\"\nalpha = 1.0\ngamma = 1.0\ncutoff = 30\nm = 4\n").unwrap();
    let doc = json_ok(&["spectrum", "--config", cfg.to_str().unwrap()]);
    assert_eq!(doc["config"]["alpha"], serde_json::json!([1.0]));
    assert_eq!(doc["result"]["model"]["family"], "qrabi");
}

#[test]
fn unknown_config_key_is_rejected() {
    let cfg = scratch("unknown.toml");
    std::fs::write(&cfg, "x0 = 0.5\nbogus = 1\n").unwrap();
    let (code, err) = error_of(&["avoid-seq", "--config", cfg.to_str().unwrap()]);
    assert_eq!(code, 2);
    assert_eq!(err["error"]["kind"], "config");
    assert!(err["error"]["message"].as_str().unwrap().contains("bogus"));
}

#[test]
fn nested_config_is_rejected() {
    let cfg = scratch("nested.toml");
    std::fs::write(&cfg, "[model]\nalpha = 1.0\n").unwrap();
    let (code, err) = error_of(&["spectrum", "--config", cfg.to_str().unwrap()]);
    assert_eq!(code, 2);
    assert_eq!(err["error"]["kind"], "config");
}

#[test]
fn output_is_deterministic() {
    for args in [
        &["weyl", "--family", "xi", "--alpha", "1,1,1", "--gamma", "0,0,0", "--cutoff", "6", "--lambda", "2,3"][..],
        &["smges-check", "--samples", "200", "--seed", "7"][..],
        &["spectrum", "--m", "6", "--parity"][..],
    ] {
        let a = qrm(args);
        let b = qrm(args);
        assert!(a.status.success());
        assert_eq!(a.stdout, b.stdout, "{args:?}");
    }
}

#[test]
fn results_round_trip_into_core_types() {
    let doc = json_ok(&["spectrum", "--m", "6", "--parity"]);
    let s: qrm_core::spectral::Spectrum = serde_json::from_value(doc["result"].clone()).unwrap();
    assert!(s.converged_count >= 6);
    assert_eq!(serde_json::to_value(&s).unwrap(), doc["result"]);

    let doc = json_ok(&["perturb", "--N", "0", "--alpha", "1"]);
    let f: qrm_core::FirstOrderSplit = serde_json::from_value(doc["result"]["first_order"].clone()).unwrap();
    assert!((f.mu_plus - (-1f64).exp()).abs() < 1e-15);

    let doc = json_ok(&["avoid-seq", "--x0", "0.5"]);
    let seq: qrm_core::AvoidanceSequence = serde_json::from_value(doc["result"].clone()).unwrap();
    let ks: Vec<usize> = seq.entries.iter().map(|e| e.k).collect();
    assert_eq!(ks, [2, 15, 37, 681]);
}

#[test]
fn csv_out_writes_config_sidecar() {
    let out = scratch("levels.csv");
    let o = out.to_str().unwrap();
    let run = qrm(&["laguerre-zeros", "--degree", "3", "--format", "csv", "--out", o]);
    assert!(run.status.success());
    assert!(run.stdout.is_empty());
    assert!(std::fs::read_to_string(&out).unwrap().starts_with("zero_1,zero_2,zero_3\n"));
    let side: Value = serde_json::from_str(&std::fs::read_to_string(format!("{o}.config.json")).unwrap()).unwrap();
    assert_eq!(side["command"], "laguerre-zeros");
    assert_eq!(side["config"]["degree"], 3);
    assert_eq!(side["config"]["format"], "csv");
}

#[test]
fn every_command_matches_its_schema() {
    let alpha = format!("{}", (0.5f64).sqrt());
    let runs: Vec<(&str, Vec<&str>)> = vec![
        ("overlap", vec!["overlap", "--N", "3", "--k", "5", "--alpha", "0.4"]),
        ("laguerre-zeros", vec!["laguerre-zeros", "--degree", "5"]),
        ("avoid-seq", vec!["avoid-seq", "--x0", "3.7"]),
        ("spectrum", vec!["spectrum", "--family", "qrabi", "--m", "6", "--parity"]),
        ("perturb", vec!["perturb", "--N", "2", "--alpha", "0.9", "--check"]),
        ("quasimode", vec!["quasimode", "--N", "1", "--alpha", &alpha, "--vectors"]),
        ("braak", vec!["braak", "--nmax", "5"]),
        ("weyl", vec!["weyl", "--cutoff", "120", "--lambda", "10,20,80"]),
        ("smges-check", vec!["smges-check", "--mode", "grid", "--samples", "50"]),
    ];
    for (name, args) in runs {
        let doc = json_ok(&args);
        assert_schema(&doc, name);
    }
}

#[test]
fn quasimode_residual_scales_cubically() {
    let alpha = format!("{}", (0.5f64).sqrt());
    let doc = json_ok(&["quasimode", "--N", "1", "--alpha", &alpha]);
    let slope = doc["result"]["residual_slope"].as_f64().unwrap();
    assert!((slope - 3.0).abs() < 0.05, "{slope}");
    assert_eq!(doc["result"]["sigma_calibration"]["sigma"], -1.0);
}

#[test]
fn help_and_version_exit_zero() {
    assert!(qrm(&["--help"]).status.success());
    assert!(qrm(&["--version"]).status.success());
}
