use std::process::Command;

use pv_distance::cli::{run, EXIT_OK, EXIT_USAGE, EXIT_VALIDATION};
use pv_distance::curve::DistributionCurve;

fn call(args: &[&str]) -> (i32, String, String) {
    let mut out = Vec::new();
    let mut err = Vec::new();
    let mut full = vec!["pv-distance"];
    full.extend_from_slice(args);
    let code = run(full, &mut out, &mut err);
    (code, String::from_utf8(out).unwrap(), String::from_utf8(err).unwrap())
}

fn curve(args: &[&str]) -> DistributionCurve {
    let (code, out, err) = call(args);
    assert_eq!(code, EXIT_OK, "{err}");
    DistributionCurve::from_csv(out.as_bytes()).unwrap()
}

#[test]
fn contact_cdf_csv() {
    let (code, out, _) = call(&["contact-cdf", "--d", "2", "--lambda", "1", "--grid", "0:2:201"]);
    assert_eq!(code, EXIT_OK);
    let rows: Vec<&str> = out.lines().skip_while(|l| *l != "r,value").skip(1).collect();
    assert_eq!(rows.len(), 201);
    assert_eq!(rows[0], "0,0");
    let c = DistributionCurve::from_csv(out.as_bytes()).unwrap();
    assert_eq!(c.metadata["d"], "2");
    assert_eq!(c.metadata["command"], "contact-cdf");
    assert!(c.metadata.contains_key("version"));
    // 1 − e^{−π r²} at r = 0.5
    let oracle = 1.0 - (-std::f64::consts::PI * 0.25f64).exp();
    // CSV keeps 12 significant digits
    assert!((c.value[50] - oracle).abs() < 1e-11 * oracle);
    assert!((c.value[50] - 0.54406).abs() < 1e-5);
}

#[test]
fn json_output_round_trips() {
    let (code, out, _) = call(&["contact-cdf", "--d", "3", "--grid", "0:1:11", "--format", "json"]);
    assert_eq!(code, EXIT_OK);
    let c = DistributionCurve::from_json(&out).unwrap();
    assert_eq!(c.len(), 11);
    assert_eq!(DistributionCurve::from_json(&c.to_json().unwrap()).unwrap(), c);
}

#[test]
fn line_closed_form() {
    let c = curve(&["typical-cdf", "--method", "d1-closed", "--d", "1", "--grid", "0:1:11"]);
    assert!((c.value[5] - 0.78062).abs() < 1e-5);
    // exact on the line delegates to the closed form
    let e = curve(&["typical-cdf", "--method", "exact", "--d", "1", "--grid", "0:1:11"]);
    assert_eq!(e.method, "d1-closed");
    assert_eq!(e.value, c.value);
}

#[test]
fn approx_mean_in_the_plane() {
    let c = curve(&["typical-cdf", "--method", "approx", "--d", "2", "--grid", "0:4:4001"]);
    let mean = c.mean_from_cdf();
    assert!((mean - 0.442).abs() < 0.002, "{mean}");
    let rho: f64 = c.metadata["rho"].parse().unwrap();
    assert!(rho > 1.0);
}

#[test]
fn simulate_is_reproducible_through_files() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a.csv");
    let b = dir.path().join("b.csv");
    for p in [&a, &b] {
        let (code, _, err) = call(&[
            "typical-cdf",
            "--method",
            "simulate",
            "--d",
            "2",
            "--samples",
            "500",
            "--seed",
            "9",
            "--grid",
            "0:2:41",
            "--out",
            p.to_str().unwrap(),
        ]);
        assert_eq!(code, EXIT_OK, "{err}");
    }
    let (ta, tb) = (
        std::fs::read_to_string(&a).unwrap(),
        std::fs::read_to_string(&b).unwrap(),
    );
    assert_eq!(ta, tb);
    assert!(ta.contains("# seed: 9") && ta.contains("# samples: 500"));
}

#[test]
fn exact_curve_metadata() {
    let c = curve(&[
        "typical-cdf",
        "--method",
        "exact",
        "--d",
        "2",
        "--samples",
        "100",
        "--inner-samples",
        "100",
        "--ell",
        "1.6",
        "--grid",
        "0:2:21",
    ]);
    assert!(c.is_cdf_like(1e-12));
    assert_eq!(c.metadata["ell"], "1.6");
    assert!(c.metadata["k_max"].parse::<usize>().unwrap() > 32);
    assert!(c.metadata["tail_mass"].parse::<f64>().unwrap() < 1e-6);
    assert_eq!(*c.value.last().unwrap(), 1.0);
}

#[test]
fn moment_table_refuses_small_budgets() {
    let (code, _, err) = call(&["moment-table", "--dims", "1,2", "--samples", "100"]);
    assert_eq!(code, EXIT_USAGE);
    assert!(err.contains("needs at least"), "{err}");
    let (code, out, _) = call(&["moment-table", "--dims", "1"]);
    assert_eq!(code, EXIT_OK);
    let row: Vec<&str> = out.lines().nth(1).unwrap().split(',').collect();
    assert_eq!(row[0], "1");
    assert!((row[1].parse::<f64>().unwrap() - 1.5).abs() < 1e-9);
    assert!((row[2].parse::<f64>().unwrap() - 1.0 / 3.0).abs() < 1e-9);
}

#[test]
fn limit_shape_curves() {
    let c = curve(&["limit-shape", "--d", "2", "--eps", "0.1", "--log", "--grid", "1:1000:4"]);
    assert!(*c.value.last().unwrap() > 0.999);
    let slope: f64 = c.metadata["h_slope"].parse().unwrap();
    assert!((slope - 0.5).abs() < 0.05, "{slope}");
    let zero = curve(&["limit-shape", "--d", "3", "--lambda", "0", "--grid", "1:5:5"]);
    for (r, q) in zero.r.iter().zip(&zero.value) {
        let c = pv_distance::limitshape::InballCondition::new(*r, 0.1, 3, 0.0).unwrap();
        let p0 = pv_distance::limitshape::cap0_hit_probability(&c).unwrap();
        assert!((q - p0).abs() <= 5e-12 * p0);
    }
}

#[test]
fn usage_errors() {
    assert_eq!(call(&["contact-cdf", "--grid", "0:2:1"]).0, EXIT_USAGE);
    assert_eq!(call(&["contact-cdf", "--d", "0"]).0, EXIT_USAGE);
    assert_eq!(
        call(&["typical-cdf", "--method", "d1-closed", "--d", "2"]).0,
        EXIT_USAGE
    );
    assert_eq!(call(&["typical-cdf", "--method", "nope"]).0, EXIT_USAGE);
    assert_eq!(call(&["frobnicate"]).0, EXIT_USAGE);
    assert_eq!(call(&["--help"]).0, EXIT_OK);
}

#[test]
fn validate_exit_codes() {
    let (code, out, _) = call(&["validate", "--only", "6,7"]);
    assert_eq!(code, EXIT_OK);
    assert_eq!(out.lines().filter(|l| l.starts_with("PASS criterion")).count(), 2);
    let (code, out, _) = call(&["validate", "--only", "10"]);
    assert_eq!(code, EXIT_VALIDATION);
    assert!(out.starts_with("FAIL criterion 10"));
}

#[test]
fn binary_exit_codes() {
    let bin = env!("CARGO_BIN_EXE_pv-distance");
    let ok = Command::new(bin)
        .args(["contact-cdf", "--grid", "0:1:3"])
        .output()
        .unwrap();
    assert_eq!(ok.status.code(), Some(EXIT_OK));
    assert!(String::from_utf8_lossy(&ok.stdout).contains("r,value"));
    let bad = Command::new(bin)
        .args(["contact-cdf", "--lambda", "-1"])
        .output()
        .unwrap();
    assert_eq!(bad.status.code(), Some(EXIT_USAGE));
}
