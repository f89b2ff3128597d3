use serde_json::Value;
use symreeb::cli::run;

fn call(args: &[&str]) -> (i32, String, String) {
    let mut argv = vec!["symreeb"];
    argv.extend_from_slice(args);
    let (mut out, mut err) = (Vec::new(), Vec::new());
    let code = run(argv, &mut out, &mut err);
    (code, String::from_utf8(out).unwrap(), String::from_utf8(err).unwrap())
}

fn json(args: &[&str]) -> Value {
    let (code, out, err) = call(args);
    assert_eq!(code, 0, "{err}");
    serde_json::from_str(&out).unwrap()
}

fn half(v: &Value) -> (i64, i64) {
    (v["num"].as_i64().unwrap(), v["den"].as_i64().unwrap())
}

#[test]
fn index_cz_of_rotation() {
    let v = json(&["index", "cz", "--path", "rotation:c=9.42477796,T=1"]);
    assert_eq!(half(&v["mu"]), (3, 1));
    assert!(v["crossings"].as_array().unwrap().iter().all(|c| c["signature"].is_i64()));
}

#[test]
fn index_rs_of_quarter_turn() {
    let v = json(&["index", "rs", "--path", "rotation-lagrangian:span=0..0.7853981,axis=real"]);
    assert_eq!(half(&v["mu"]), (1, 2));
}

#[test]
fn degenerate_rotation_exits_two() {
    let (code, _, err) = call(&["index", "cz", "--path", "rotation:c=6.28318530,T=1"]);
    assert_eq!(code, 2);
    assert!(err.contains("DegeneratePath"), "{err}");
}

#[test]
fn hormander_of_rotation() {
    let v = json(&["index", "hormander", "--path", "rotation:c=9.42477796,T=1"]);
    assert_eq!(half(&v["mu"]), (0, 1));
}

#[test]
fn constant_spectrum_on_real_axis() {
    let v = json(&["spectrum", "--loop", "constant:c=9.42477796,T=1", "--bc", "I", "--window", "-15,15"]);
    assert_eq!(half(&v["mu"]), (3, 2));
    let lambdas: Vec<f64> = v["entries"].as_array().unwrap().iter().map(|e| e["lambda"].as_f64().unwrap()).collect();
    let pi = std::f64::consts::PI;
    let expected = [-3.0 * pi, -pi, pi, 3.0 * pi];
    assert_eq!(lambdas.len(), expected.len());
    for (a, b) in lambdas.iter().zip(expected) {
        assert!((a - b).abs() < 1e-6, "{a} vs {b}");
    }
}

#[test]
fn spectrum_csv_columns() {
    let (code, out, _) = call(&["spectrum", "--loop", "constant:c=3,T=1", "--window", "-7,7", "--emit", "csv"]);
    assert_eq!(code, 0);
    let mut rows = out.lines();
    assert_eq!(rows.next(), Some("lambda,winding_num,winding_den,multiplicity"));
    let first: Vec<&str> = rows.next().unwrap().split(',').collect();
    assert!((first[0].parse::<f64>().unwrap() + 3.0).abs() < 1e-8);
    assert_eq!(&first[1..], ["0", "1", "2"]);
}

#[test]
fn json_loop_file() {
    let dir = std::env::temp_dir().join(format!("symreeb-cli-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let path = dir.join("loop.json");
    std::fs::write(&path, r#"{"kind": "trig", "T": 1.0, "a_cos": [3.0, 0.4], "c_cos": [3.0], "b_sin": [0.2]}"#).unwrap();
    let p = path.to_str().unwrap();
    let whole = json(&["spectrum", "--loop", p]);
    let real = json(&["spectrum", "--loop", p, "--bc", "I"]);
    let imag = json(&["spectrum", "--loop", p, "--bc", "-I"]);
    let (a, b) = (half(&real["mu"]), half(&imag["mu"]));
    let sum = if a.1 == b.1 { (a.0 + b.0) / a.1 } else { panic!("{a:?} {b:?}") };
    assert_eq!(half(&whole["mu"]), (sum, 1));
    std::fs::remove_dir_all(&dir).unwrap();
}

#[test]
fn ellipsoid_orbit_search() {
    let v = json(&["orbit", "find", "--surface", "ellipsoid:1,1.3", "--symmetric"]);
    let orbits = v.as_array().unwrap();
    assert_eq!(orbits.len(), 2);
    let pi = std::f64::consts::PI;
    assert!((orbits[0]["T"].as_f64().unwrap() - pi).abs() < 1e-7);
    assert!((orbits[1]["T"].as_f64().unwrap() - 1.69 * pi).abs() < 1e-7);
    assert_eq!(half(&orbits[0]["mu_cz"]), (3, 1));
    assert_eq!(half(&orbits[1]["mu_cz"]), (5, 1));
    assert_eq!(half(&orbits[0]["mu_rs"]), (3, 2));
}

#[test]
fn iterated_orbit_index() {
    let v = json(&["orbit", "index", "--surface", "ellipsoid:1,1.3", "--symmetric", "--start", "1,0,0,0", "--period", "3.141592653589793", "--m", "2"]);
    assert_eq!(half(&v[0]["mu_cz"]), (7, 1));
    assert_eq!(half(&v[0]["mu_rs"]), (7, 2));
}

#[test]
fn ellipsoid_page_area() {
    let v = json(&["section", "area", "--surface", "ellipsoid:1,1.3", "--theta", "1"]);
    assert!((v["area"].as_f64().unwrap() - std::f64::consts::PI).abs() < 1e-4);
}

#[test]
fn non_real_page_is_rejected_for_return_maps() {
    let (code, _, err) = call(&["section", "return", "--theta", "i", "--grid", "4"]);
    assert_eq!(code, 2);
    assert!(err.contains("PreconditionViolated"), "{err}");
}

#[test]
fn round_ellipsoid_page_is_degenerate() {
    let (code, _, err) = call(&["section", "page", "--surface", "ellipsoid:1,1"]);
    assert_eq!(code, 2);
    assert!(err.contains("DegenerateRatio"), "{err}");
}

#[test]
fn usage_errors_exit_one() {
    assert_eq!(call(&["index", "cz", "--path", "spiral:c=1"]).0, 1);
    assert_eq!(call(&["frobnicate"]).0, 1);
    let (code, _, err) = call(&["verify", "--only", "no_such_key"]);
    assert_eq!(code, 1);
    assert!(err.contains("InvalidInput"));
    assert_eq!(call(&["section", "page", "--emit", "csv"]).0, 1);
}

#[test]
fn verify_subset_text_and_json() {
    let (code, out, _) = call(&["verify", "--only", "cz_normalization,loop_properties"]);
    assert_eq!(code, 0);
    let lines: Vec<&str> = out.lines().collect();
    assert_eq!(lines.len(), 2);
    assert!(lines[0].starts_with("cz_normalization") && lines[0].ends_with("6/6 PASS"), "{}", lines[0]);
    let v = json(&["verify", "--only", "cz_normalization", "--emit", "json"]);
    assert_eq!(v["entries"][0]["ok"], Value::Bool(true));
}

#[test]
fn verify_subset_is_independent_of_jobs() {
    let args = ["verify", "--only", "kernel_test", "--emit", "json"];
    let (_, a, _) = call(&args);
    let mut with_jobs = args.to_vec();
    with_jobs.extend(["--jobs", "3"]);
    let (_, b, _) = call(&with_jobs);
    assert_eq!(a, b);
}

#[test]
fn output_file() {
    let path = std::env::temp_dir().join(format!("symreeb-out-{}.json", std::process::id()));
    let (code, out, _) = call(&["index", "cz", "--path", "rotation:c=1,T=1", "--out", path.to_str().unwrap()]);
    assert_eq!(code, 0);
    assert!(out.is_empty());
    let v: Value = serde_json::from_str(&std::fs::read_to_string(&path).unwrap()).unwrap();
    assert_eq!(half(&v["mu"]), (1, 1));
    std::fs::remove_file(&path).unwrap();
}
