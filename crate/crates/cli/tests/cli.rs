use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn chentype(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_chentype")).args(args).output().expect("binary runs")
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exit code")
}

fn json(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout).expect("JSON report")
}

fn close(v: &Value, want: f64, tol: f64) -> bool {
    v.as_f64().is_some_and(|x| (x - want).abs() <= tol)
}

#[test]
fn sphere_two_type_report() {
    let out = chentype(&["verify", "--family", "p1k", "--m", "2", "--k", "0", "--radius", "0.785398", "--checks", "table1,chen2"]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let rep = json(&out);
    assert_eq!(rep["summary"]["total"], 2);
    assert_eq!(rep["summary"]["pass"], true);
    let chen2 = &rep["records"][1];
    assert_eq!(chen2["check"], "chen2");
    assert_eq!(chen2["expected"]["value"]["verdict"], "two-type");
    let lambda = &chen2["expected"]["value"]["lambda"];
    assert!(close(&lambda[0], 32.0, 1e-4) && close(&lambda[1], 20.0, 1e-4), "{lambda}");
    let fitted = &chen2["measured"]["lambda"];
    assert!(close(&fitted[0], 32.0, 1e-3) && close(&fitted[1], 20.0, 1e-3), "{fitted}");
    for key in ["check", "family", "params", "residuals", "tolerances", "expected", "pass"] {
        assert!(chen2.get(key).is_some(), "record lacks {key}");
    }
    assert!(chen2["expected"]["provenance"].is_string());
}

#[test]
fn horosphere_report_is_constant_bilaplacian() {
    let out = chentype(&["verify", "--family", "h3", "--m", "2", "--checks", "horosphere"]);
    assert_eq!(code(&out), 0);
    let rep = json(&out);
    let r = &rep["records"][0];
    assert_eq!(r["check"], "horosphere");
    assert!(r["residuals"]["spread"].as_f64().unwrap() <= 1e-5);
    assert!(r["residuals"]["bilaplacian_norm"].as_f64().unwrap() >= 1.0);
    assert!(r["params"].get("radius").is_none());
}

#[test]
fn named_two_type_radii_of_complex_tubes() {
    let out = chentype(&["verify", "--family", "p2", "--m", "2", "--radius", "auto:two-type", "--checks", "chen2"]);
    assert_eq!(code(&out), 0);
    let rep = json(&out);
    let records = rep["records"].as_array().unwrap();
    assert_eq!(records.len(), 2);
    let r_i = 0.5 * 2.0f64.sqrt().atan();
    let r_ii = 0.5 * (1.0 / ((3.0 + 369.0f64.sqrt()) / 30.0).sqrt()).atan();
    assert!(close(&records[0]["params"]["radius"], r_ii, 1e-14));
    assert!(close(&records[1]["params"]["radius"], r_i, 1e-14));
    assert!(records.iter().all(|r| r["pass"] == true));
}

#[test]
fn reports_are_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let paths: Vec<_> = (0..2).map(|i| dir.path().join(format!("r{i}.json"))).collect();
    for p in &paths {
        let out = chentype(&[
            "verify", "--family", "p1k,h1k", "--m", "2", "--radius", "0.6", "--checks", "table1,beltrami,minimality,special-radii",
            "--seed", "11", "--out", p.to_str().unwrap(),
        ]);
        assert_eq!(code(&out), 0);
        assert!(out.stdout.is_empty());
    }
    let a = std::fs::read(&paths[0]).unwrap();
    assert!(!a.is_empty());
    assert_eq!(a, std::fs::read(&paths[1]).unwrap());
}

#[test]
fn config_file_mirrors_flags() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.cfg");
    std::fs::write(&cfg, "# sphere\nfamily = p1k\nm = 2\nk = 0\nradius = 0.9\nchecks = table1, minimality\nseed = 3\n").unwrap();
    let from_file = chentype(&["verify", "--config", cfg.to_str().unwrap()]);
    let from_flags = chentype(&["verify", "--family", "p1k", "--m", "2", "--k", "0", "--radius", "0.9", "--checks", "table1,minimality", "--seed", "3"]);
    assert_eq!(code(&from_file), 0);
    assert_eq!(from_file.stdout, from_flags.stdout);
    let overridden = chentype(&["verify", "--config", cfg.to_str().unwrap(), "--checks", "table1"]);
    assert_eq!(json(&overridden)["summary"]["total"], 1);
}

#[test]
fn failing_check_exits_one() {
    let out = chentype(&["verify", "--family", "p1k", "--m", "2", "--k", "0", "--radius", "0.9", "--checks", "beltrami", "--fd-step", "0.05"]);
    assert_eq!(code(&out), 1);
    let rep = json(&out);
    assert_eq!(rep["summary"]["failed"], 1);
    assert_eq!(rep["records"][0]["pass"], false);
}

#[test]
fn configuration_errors_exit_two() {
    let dir = tempfile::tempdir().unwrap();
    let bad_cfg = dir.path().join("bad.cfg");
    std::fs::write(&bad_cfg, "colour = red\n").unwrap();
    let cases: Vec<Vec<&str>> = vec![
        vec!["verify", "--family", "q9", "--radius", "0.5"],
        vec!["verify", "--family", "p1k", "--radius", "0.5", "--checks", "chen7"],
        vec!["verify", "--family", "p1k", "--radius", "2.0"],
        vec!["verify", "--family", "p1k", "--m", "2", "--k", "3", "--radius", "0.5"],
        vec!["verify", "--family", "p1k", "--radius", "auto:largest"],
        vec!["verify", "--family", "p1k"],
        vec!["verify", "--config", bad_cfg.to_str().unwrap()],
        vec!["verify", "--family", "p1k", "--radius", "0.5", "--format", "xml"],
        vec!["frobnicate"],
    ];
    for args in cases {
        let out = chentype(&args);
        assert_eq!(code(&out), 2, "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
    }
}

#[test]
fn unwritable_output_exits_three() {
    let dir = tempfile::tempdir().unwrap();
    let target = dir.path().join("missing").join("atlas.csv");
    let out = chentype(&["atlas", "--family", "h3", "--out", target.to_str().unwrap()]);
    assert_eq!(code(&out), 3);
    assert!(!Path::new(&target).exists());
}

fn atlas_rows(csv: &str) -> Vec<Vec<String>> {
    csv.lines().skip(1).map(|l| l.split(',').map(String::from).collect()).collect()
}

#[test]
fn projective_atlas_lists_special_radii() {
    let out = chentype(&["atlas", "--family", "p1k,p2", "--m", "3"]);
    assert_eq!(code(&out), 0);
    let text = String::from_utf8(out.stdout).unwrap();
    assert_eq!(text.lines().next().unwrap(), "family,m,k,radius,type,lambda_u,lambda_v,mass_symmetric,minimal");
    let rows = atlas_rows(&text);
    let two_type = |fam: &str, k: &str| rows.iter().filter(|r| r[0] == fam && r[2] == k && r[4] == "2-type").count();
    // Spheres: 2-type at the mass-symmetric and minimal radii.
    assert_eq!(two_type("p1k", "0"), 2);
    // Tubes about the quaternionic line: both A2 roots.
    assert_eq!(two_type("p1k", "1"), 2);
    assert_eq!(two_type("p2", "0"), 2);
    let a2 = rows.iter().find(|r| r[0] == "p1k" && r[2] == "1" && r[4] == "2-type" && r[7] == "true").unwrap();
    assert!((a2[3].parse::<f64>().unwrap() - std::f64::consts::FRAC_PI_4).abs() < 1e-15);
    assert_eq!((a2[5].as_str(), a2[6].as_str(), a2[8].as_str()), ("32", "28", "true"));
}

#[test]
fn hyperbolic_atlas_has_only_spheres_and_hyperplane_tubes_as_two_type() {
    let out = chentype(&["atlas", "--family", "h1k,h2,h3", "--m", "2,3", "--radius", "0.4,1.1"]);
    assert_eq!(code(&out), 0);
    let rows = atlas_rows(&String::from_utf8(out.stdout).unwrap());
    assert!(!rows.is_empty());
    for r in &rows {
        let m: usize = r[1].parse().unwrap();
        let k: usize = r[2].parse().unwrap();
        let sphere_or_hyperplane = r[0] == "h1k" && (k == 0 || k == m - 1);
        assert_eq!(r[4] == "2-type", sphere_or_hyperplane, "{r:?}");
    }
}

#[test]
fn empty_grid_gives_header_only_csv() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("atlas.csv");
    let cfg = dir.path().join("atlas.cfg");
    std::fs::write(&cfg, format!("family =\nout = {}\n", path.display())).unwrap();
    let out = chentype(&["atlas", "--config", cfg.to_str().unwrap()]);
    assert_eq!(code(&out), 0);
    assert_eq!(std::fs::read_to_string(&path).unwrap(), "family,m,k,radius,type,lambda_u,lambda_v,mass_symmetric,minimal\n");
}

#[test]
fn markdown_and_csv_projections() {
    let args = ["verify", "--family", "p1k", "--m", "2", "--k", "0", "--radius", "0.9", "--checks", "table1,minimality"];
    let md = chentype(&[&args[..], &["--format", "md"]].concat());
    let md = String::from_utf8(md.stdout).unwrap();
    assert!(md.contains("| table1 | p1k | 2 | 0 | 0.9 | pass |"));
    let csv = chentype(&[&args[..], &["--format", "csv"]].concat());
    let csv = String::from_utf8(csv.stdout).unwrap();
    assert_eq!(csv.lines().next().unwrap(), "check,family,m,k,radius,quantity,value,bound,pass");
    assert!(csv.lines().skip(1).all(|l| l.ends_with(",true")));
    assert_eq!(csv.lines().count(), 1 + 1 + 2);
}
