use serde_json::Value;
use symreeb_web::{ellipsoid_return_map, loop_spectrum, rotation_index};

#[test]
fn rotation_index_reports_three() {
    let v: Value = serde_json::from_str(&rotation_index(9.42477796, 1.0)).unwrap();
    assert_eq!(v["mu"]["num"], 3);
    assert_eq!(v["mu"]["den"], 1);
}

#[test]
fn full_turn_is_an_error() {
    let v: Value = serde_json::from_str(&rotation_index(2.0 * std::f64::consts::PI, 1.0)).unwrap();
    assert_eq!(v["error"], "DegeneratePath");
}

#[test]
fn spectrum_of_a_loop() {
    let v: Value = serde_json::from_str(&loop_spectrum(3.0, 0.5, 0.3, 2.0, "I", -15.0, 15.0)).unwrap();
    let entries = v["entries"].as_array().unwrap();
    assert!(!entries.is_empty());
    assert!(entries.windows(2).all(|w| w[0]["lambda"].as_f64() < w[1]["lambda"].as_f64()));
}

#[test]
fn ellipsoid_map_is_reversible() {
    let v: Value = serde_json::from_str(&ellipsoid_return_map(1.0, 1.3, 6)).unwrap();
    assert!(v["reversibility"].as_f64().unwrap() < 1e-6);
    let n = v["samples"].as_array().unwrap().len();
    assert!(n > 0 && n <= 36, "{n}");
}
