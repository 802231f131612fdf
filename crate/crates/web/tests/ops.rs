use bellsdp_web::{names, negativity_json, sdpa_text, tsirelson_json};
use serde_json::Value;

fn parse(s: &str) -> Value {
    serde_json::from_str(s).unwrap()
}

#[test]
fn lists_builtins() {
    let v = parse(&names());
    assert!(v.as_array().unwrap().iter().any(|n| n == "CHSH"));
}

#[test]
fn chsh_bound() {
    let v = parse(&tsirelson_json("CHSH", 1).unwrap());
    assert_eq!(v["status"], "optimal");
    assert!((v["value"].as_f64().unwrap() - 2.0 * 2f64.sqrt()).abs() < 1e-7);
    assert_eq!(v["side"], 9);
}

#[test]
fn chsh_negativity_point() {
    let v = parse(&negativity_json("CHSH", 2, 2.0 * 2f64.sqrt()).unwrap());
    assert!((v["value"].as_f64().unwrap() - 0.5).abs() < 1e-6);
    let v = parse(&negativity_json("CHSH", 1, 3.5).unwrap());
    assert_eq!(v["status"], "infeasible");
    assert!(v["value"].is_null());
}

#[test]
fn export_matches_between_calls() {
    let a = sdpa_text("CHSH", 1, None).unwrap();
    assert_eq!(a, sdpa_text("CHSH", 1, None).unwrap());
    assert_ne!(a, sdpa_text("CHSH", 1, Some(2.5)).unwrap());
}

#[test]
fn rejects_bad_input() {
    assert!(tsirelson_json("nope", 1).unwrap_err().contains("CHSH"));
    assert!(tsirelson_json("CHSH", 0).is_err());
    assert!(tsirelson_json("CHSH", 9).is_err());
}
