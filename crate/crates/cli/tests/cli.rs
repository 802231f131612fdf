use std::path::PathBuf;
use std::process::{Command, Output};

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_bellsdp"))
        .args(args)
        .output()
        .unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn tmp(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_TARGET_TMPDIR")).join(name)
}

fn json(o: &Output) -> serde_json::Value {
    serde_json::from_str(&stdout(o)).unwrap()
}

/// `(v, bound, status)` rows of a curve, without the header or timings.
fn rows(csv: &str) -> Vec<(f64, Option<f64>, String)> {
    let mut lines = csv.lines().filter(|l| !l.starts_with('#'));
    assert_eq!(lines.next(), Some("v,bound,status,gap,seconds"));
    lines
        .map(|l| {
            let f: Vec<&str> = l.split(',').collect();
            assert_eq!(f.len(), 5, "{l}");
            (f[0].parse().unwrap(), f[1].parse().ok(), f[2].to_string())
        })
        .collect()
}

#[test]
fn tsirelson_reports_json_with_header() {
    let o = run(&["tsirelson", "CHSH"]);
    assert!(o.status.success());
    let j = json(&o);
    assert_eq!(j["status"], "optimal");
    assert!((j["value"].as_f64().unwrap() - 2.0 * 2f64.sqrt()).abs() < 1e-7);
    assert_eq!(j["header"]["inequality"], "CHSH");
    assert_eq!(j["header"]["symmetry"], "real");
}

#[test]
fn unknown_inequality_lists_builtins() {
    let o = run(&["tsirelson", "NOPE"]);
    assert_eq!(o.status.code(), Some(1));
    let err = String::from_utf8(o.stderr).unwrap();
    assert!(err.contains("CHSH") && err.contains("I3322"), "{err}");
}

#[test]
fn malformed_arguments_exit_one() {
    for args in [
        &["negativity-curve", "CHSH", "--grid", "2:x"][..],
        &["negativity-curve", "CHSH", "--grid", "2:3:0"],
        &["ppt-tsirelson", "CHSH", "--partitions", "0,1"],
        &["tsirelson", "CHSH", "--tol=-1"],
        &["tsirelson", "CHSH", "--bogus"],
        &["dimension-witness", "CHSH", "--d", "1"],
    ] {
        assert_eq!(run(args).status.code(), Some(1), "{args:?}");
    }
}

#[test]
fn chsh_negativity_curve_is_the_line() {
    let args = [
        "negativity-curve",
        "CHSH",
        "--level",
        "3",
        "--grid",
        "2:2.828:9",
    ];
    let o = run(&args);
    assert!(o.status.success());
    let csv = stdout(&o);
    assert!(csv.starts_with("# "));
    let r = rows(&csv);
    assert_eq!(r.len(), 9);
    let s = 0.5 / (2.0 * 2f64.sqrt() - 2.0);
    for w in r.windows(2) {
        assert!(w[0].0 < w[1].0);
    }
    for (v, bound, status) in &r {
        assert_eq!(status, "optimal");
        let bound = bound.unwrap();
        assert!((bound - s * (v - 2.0)).abs() < 5e-6, "v = {v}: {bound}");
    }

    let again = rows(&stdout(&run(&args)));
    assert_eq!(again, r);
    let mut parallel = args.to_vec();
    parallel.extend(["--jobs", "2"]);
    assert_eq!(rows(&stdout(&run(&parallel))), r);
}

#[test]
fn super_quantum_points_are_infeasible_rows() {
    let o = run(&["negativity-curve", "CHSH", "--grid", "2.9:3:2"]);
    assert_eq!(o.status.code(), Some(0));
    let r = rows(&stdout(&o));
    assert!(
        r.iter().all(|row| row.1.is_none() && row.2 == "infeasible"),
        "{r:?}"
    );
}

#[test]
fn exhausted_budget_exits_two() {
    let o = run(&[
        "negativity-curve",
        "CHSH",
        "--grid",
        "2:2.5:2",
        "--time-limit",
        "1e-12",
    ]);
    assert_eq!(o.status.code(), Some(2));
    let r = rows(&stdout(&o));
    assert!(
        r.len() == 2 && r.iter().all(|row| row.2 == "numerical_limit"),
        "{r:?}"
    );
}

#[test]
fn curve_written_to_file() {
    let path = tmp("curve.csv");
    let o = run(&[
        "negativity-curve",
        "CHSH",
        "--grid",
        "2:2.8:3",
        "--out",
        path.to_str().unwrap(),
    ]);
    assert!(o.status.success());
    assert_eq!(rows(&std::fs::read_to_string(&path).unwrap()).len(), 3);
}

#[test]
fn other_programs() {
    let j = json(&run(&["ppt-tsirelson", "CHSH"]));
    assert!((j["value"].as_f64().unwrap() - 2.0).abs() < 1e-7);
    let j = json(&run(&["dimension-witness", "CHSH", "--d", "2"]));
    assert!((j["value"].as_f64().unwrap() - 2.0 * 2f64.sqrt()).abs() < 1e-7);
    let j = json(&run(&["tsirelson", "CHSH", "--level", "2", "--swap"]));
    assert!((j["value"].as_f64().unwrap() - 2.0 * 2f64.sqrt()).abs() < 1e-7);
    assert!(j["header"]["symmetry"].as_str().unwrap().contains("swap"));
}

#[test]
fn export_sdpa_is_deterministic() {
    let a = tmp("chsh_a.dat-s");
    let b = tmp("chsh_b.dat-s");
    for p in [&a, &b] {
        let o = run(&[
            "export-sdpa",
            "CHSH",
            "--program",
            "tsirelson",
            "--out",
            p.to_str().unwrap(),
        ]);
        assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    }
    let text = std::fs::read_to_string(&a).unwrap();
    assert_eq!(text, std::fs::read_to_string(&b).unwrap());
    assert!(text.lines().count() > 4);
}

#[test]
fn seesaw_model_round_trips_through_validation() {
    let model = tmp("chsh_model.json");
    let o = run(&[
        "seesaw",
        "CHSH",
        "--dims",
        "2,2",
        "--restarts",
        "3",
        "--model-out",
        model.to_str().unwrap(),
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let v = json(&o)["value"].as_f64().unwrap();
    assert!((v - 2.0 * 2f64.sqrt()).abs() < 1e-6, "{v}");

    let o = run(&[
        "validate-model",
        model.to_str().unwrap(),
        "--inequality",
        "CHSH",
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let j = json(&o);
    assert!((j["bell_value"].as_f64().unwrap() - v).abs() < 1e-9);
    assert!(j["moment_min_eigenvalue"].as_f64().unwrap() > -1e-9);

    std::fs::write(tmp("broken.json"), "{\"dims\": [2]}").unwrap();
    assert_eq!(
        run(&["validate-model", tmp("broken.json").to_str().unwrap()])
            .status
            .code(),
        Some(1)
    );
}
