use std::io::Write;
use std::process::{Command, Output};

use serde_json::Value;
use thermolux_cli::envelope::render_json;

fn thermolux(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_thermolux"))
        .args(args)
        .env_remove("THERMOLUX_THREADS")
        .output()
        .expect("binary runs")
}

fn json(args: &[&str]) -> (String, Value) {
    let out = thermolux(args);
    assert_eq!(
        out.status.code(),
        Some(0),
        "{args:?}: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    let text = String::from_utf8(out.stdout).unwrap();
    let value = serde_json::from_str(&text).unwrap();
    (text, value)
}

fn value(env: &Value, key: &str) -> f64 {
    env["results"][key]["value"]
        .as_f64()
        .unwrap_or_else(|| panic!("missing numeric result {key}"))
}

fn schema() -> jsonschema::Validator {
    let text = include_str!("../schema/envelope.schema.json");
    jsonschema::validator_for(&serde_json::from_str(text).unwrap()).unwrap()
}

fn assert_valid(env: &Value) {
    let v = schema();
    let errors: Vec<String> = v.iter_errors(env).map(|e| e.to_string()).collect();
    assert!(errors.is_empty(), "{errors:?}");
}

#[test]
fn capacity_reports_closed_form_and_solver() {
    let (_, env) = json(&["capacity", "--xm", "0.9"]);
    assert_valid(&env);
    assert!((value(&env, "closed_form_nats") - 0.5289).abs() < 2e-4);
    assert!((value(&env, "closed_form_nats") - 0.528_766_115_076_167_3).abs() < 1e-15);
    // An interior atom lifts the solver above the two-level value here.
    let excess = value(&env, "solver_minus_closed_form_nats");
    assert!(excess > 3.9e-5 && excess < 4.1e-5, "{excess}");
    assert_eq!(
        env["results"]["two_point_optimal"]["value"],
        Value::Bool(false)
    );
    assert!(!env["warnings"].as_array().unwrap().is_empty());

    let (_, env) = json(&["capacity", "--xm", "0.5"]);
    assert!(value(&env, "solver_minus_closed_form_nats").abs() < 1e-6);
    assert_eq!(
        env["results"]["support_levels"]["value"],
        serde_json::json!([0.0, 0.5])
    );
}

#[test]
fn capacity_domain_and_usage_errors() {
    assert_eq!(thermolux(&["capacity", "--xm", "0"]).status.code(), Some(2));
    assert_eq!(
        thermolux(&["capacity", "--xm", "1.5"]).status.code(),
        Some(2)
    );
    assert_eq!(
        thermolux(&["capacity", "--xm", "-0.2"]).status.code(),
        Some(2)
    );
    assert_eq!(thermolux(&["capacity"]).status.code(), Some(64));
    assert_eq!(
        thermolux(&["capacity", "--xm", "abc"]).status.code(),
        Some(64)
    );
    assert_eq!(
        thermolux(&["capacity", "--xm", "0.5", "--bogus"])
            .status
            .code(),
        Some(64)
    );
    assert_eq!(
        thermolux(&["capacity", "--xm", "0.5", "--grid", "1"])
            .status
            .code(),
        Some(2)
    );
    assert_eq!(thermolux(&["nonsense"]).status.code(), Some(64));
    assert_eq!(thermolux(&["--help"]).status.code(), Some(0));
}

#[test]
fn csv_matches_json_to_full_precision() {
    let out = thermolux(&["capacity", "--xm", "0.5", "--format", "csv"]);
    assert_eq!(out.status.code(), Some(0));
    let text = String::from_utf8(out.stdout).unwrap();
    let mut rdr = csv::Reader::from_reader(text.as_bytes());
    let header = rdr.headers().unwrap().clone();
    let rows: Vec<csv::StringRecord> = rdr.records().map(Result::unwrap).collect();
    assert_eq!(rows.len(), 1);
    assert!(header.iter().all(|h| h.ends_with(']') && h.contains(" [")));

    let (_, env) = json(&["capacity", "--xm", "0.5"]);
    for (h, cell) in header.iter().zip(rows[0].iter()) {
        let key = h.split(" [").next().unwrap();
        let unit = &h[key.len() + 2..h.len() - 1];
        assert_eq!(env["results"][key]["unit"], unit);
        if let Some(x) = env["results"][key]["value"].as_f64() {
            assert_eq!(cell.parse::<f64>().unwrap(), x, "{key}");
        }
    }
}

#[test]
fn constants_match_published_values() {
    let (a, env) = json(&["constants"]);
    assert_valid(&env);
    assert!((value(&env, "sigma") - 0.772).abs() <= 0.002);
    assert!((value(&env, "eta") - 0.909).abs() <= 0.002);
    assert!((value(&env, "nats_per_photon") - 0.849).abs() <= 0.002);
    assert!((value(&env, "bits_per_photon") - 1.225).abs() <= 0.003);
    assert!(env["provenance"]["notes"]["printed_form_differs"].is_string());
    let (b, _) = json(&["constants"]);
    assert_eq!(a, b);
    let (_, fresh) = json(&["constants", "--recompute"]);
    assert_eq!(value(&fresh, "sigma"), value(&env, "sigma"));
}

#[test]
fn radiometry_planck_ratio_and_rate() {
    let (_, env) = json(&["radiometry", "--model", "planck:6000"]);
    assert_valid(&env);
    assert!((value(&env, "nats_per_photon") - 0.849).abs() <= 0.002);
    let (_, consts) = json(&["constants"]);
    assert!(
        (value(&env, "nats_per_photon") / value(&consts, "nats_per_photon") - 1.0).abs() < 1e-8
    );
    let direct = value(&env, "max_rate");
    assert!((direct / value(&env, "max_rate_from_flux") - 1.0).abs() < 1e-10);
    assert!(env["provenance"]["notes"]["degrees_of_freedom"].is_string());
}

#[test]
fn radiometry_time_doubles_information() {
    let base = [
        "radiometry",
        "--model",
        "planck:3000",
        "--nu-lo",
        "1e13",
        "--nu-hi",
        "5e14",
        "--solid-angle",
        "0.5",
    ];
    let (_, one) = json(&base);
    let mut doubled = base.to_vec();
    doubled.extend(["--tau", "2"]);
    let (_, two) = json(&doubled);
    assert_eq!(value(&two, "jm_nats"), 2.0 * value(&one, "jm_nats"));
    assert!(
        (value(&two, "degrees_of_freedom") / value(&one, "degrees_of_freedom") - 2.0).abs() < 1e-12
    );
}

#[test]
fn radiometry_warns_on_high_occupation() {
    // rP/hν ≈ 15 at 1e11 Hz
    let (_, env) = json(&[
        "radiometry",
        "--model",
        "flat:1e-21",
        "--nu-lo",
        "1e11",
        "--nu-hi",
        "1.1e11",
        "--solid-angle",
        "1",
    ]);
    assert_valid(&env);
    let warnings = env["warnings"].as_array().unwrap();
    assert!(
        warnings
            .iter()
            .any(|w| w.as_str().unwrap().contains("occupation")),
        "{warnings:?}"
    );
}

#[test]
fn radiometry_rejects_invalid_scene() {
    assert_eq!(
        thermolux(&["radiometry", "--model", "planck:-5"])
            .status
            .code(),
        Some(2)
    );
    assert_eq!(
        thermolux(&["radiometry", "--model", "planck:300", "--area", "0"])
            .status
            .code(),
        Some(2)
    );
    assert_eq!(
        thermolux(&["radiometry", "--model", "flat:1e-20"])
            .status
            .code(),
        Some(2)
    );
    assert_eq!(
        thermolux(&["radiometry", "--model", "grey:1"])
            .status
            .code(),
        Some(64)
    );
}

#[test]
fn threshold_defaults_and_nesting() {
    let (_, env) = json(&["threshold"]);
    assert_valid(&env);
    let x = value(&env, "threshold_level");
    assert!((0.88..=0.92).contains(&x));
    assert_eq!(value(&env, "threshold_mean_occupation"), x / (1.0 - x));
    let (_, fine) = json(&["threshold", "--resolution", "1e-4"]);
    assert!(value(&fine, "interval_lo") >= value(&env, "interval_lo"));
    assert!(value(&fine, "interval_hi") <= value(&env, "interval_hi"));
    let bad = thermolux(&["threshold", "--lo", "0.5", "--hi", "0.6"]);
    assert_eq!(bad.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&bad.stderr).contains("bracket"));
}

#[test]
fn simulate_is_reproducible() {
    let args = [
        "simulate",
        "--xm",
        "0.9",
        "--samples",
        "1000000",
        "--seed",
        "42",
    ];
    let (a, env) = json(&args);
    let (b, _) = json(&args);
    assert_eq!(a, b);
    assert_valid(&env);
    let dev = value(&env, "empirical_mi_nats") - value(&env, "analytic_capacity_nats");
    assert!(dev.abs() <= 3.0 * value(&env, "mi_standard_error"));
    assert_eq!(
        thermolux(&["simulate", "--xm", "0.9", "--samples", "0"])
            .status
            .code(),
        Some(64)
    );
    assert_eq!(
        thermolux(&["simulate", "--xm", "1.0"]).status.code(),
        Some(2)
    );
}

#[test]
fn envelopes_round_trip_byte_identically() {
    for args in [
        vec!["capacity", "--xm", "0.3"],
        vec!["constants"],
        vec![
            "radiometry",
            "--model",
            "planck:300",
            "--nu-lo",
            "1e12",
            "--nu-hi",
            "1e14",
        ],
        vec!["threshold", "--resolution", "1e-2"],
        vec!["simulate", "--xm", "0.4", "--samples", "5000"],
    ] {
        let (text, env) = json(&args);
        assert_valid(&env);
        assert_eq!(render_json(&env), text, "{args:?}");
        assert!(!text.contains('\r'));
    }
}

#[test]
fn config_file_supplies_flags() {
    let mut f = tempfile::NamedTempFile::new().unwrap();
    writeln!(f, "# capacity run\nxm = 0.5\nformat = csv").unwrap();
    let path = f.path().to_str().unwrap();
    let out = thermolux(&["capacity", "--config", path]);
    assert_eq!(out.status.code(), Some(0));
    assert!(String::from_utf8(out.stdout)
        .unwrap()
        .starts_with("closed_form_bits [bits]"));

    let (_, env) = json(&[
        "capacity", "--config", path, "--xm", "0.6", "--format", "json",
    ]);
    assert_eq!(env["inputs"]["xm"], 0.6);

    assert_eq!(
        thermolux(&["capacity", "--config", "/nonexistent/cfg"])
            .status
            .code(),
        Some(64)
    );
}

#[test]
fn thread_cap_from_environment() {
    let run = |threads: &str| {
        Command::new(env!("CARGO_BIN_EXE_thermolux"))
            .args([
                "simulate",
                "--xm",
                "0.7",
                "--samples",
                "200000",
                "--seed",
                "3",
            ])
            .env("THERMOLUX_THREADS", threads)
            .output()
            .unwrap()
    };
    let one = run("1");
    let four = run("4");
    assert_eq!(one.status.code(), Some(0));
    assert_eq!(one.stdout, four.stdout);
    assert_eq!(run("0").status.code(), Some(64));
    assert_eq!(run("many").status.code(), Some(64));
}
