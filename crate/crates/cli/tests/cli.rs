use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn bcblab(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_bcblab")).args(args).output().expect("spawn bcblab")
}

fn configs() -> &'static Path {
    Path::new(concat!(env!("CARGO_MANIFEST_DIR"), "/../../configs"))
}

fn config(name: &str) -> String {
    configs().join(name).to_string_lossy().into_owned()
}

fn json(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout).expect("json on stdout")
}

fn csv_rows(out: &Output) -> (Vec<String>, Vec<Vec<String>>) {
    let mut r = csv::Reader::from_reader(out.stdout.as_slice());
    let header = r.headers().unwrap().iter().map(String::from).collect();
    let rows = r.records().map(|rec| rec.unwrap().iter().map(String::from).collect()).collect();
    (header, rows)
}

#[test]
fn count_examples() {
    let out = bcblab(&["count", "--k", "4", "--n", "3"]);
    assert!(out.status.success());
    let v = json(&out);
    assert_eq!(v["N"], 6);
    assert_eq!(v["a"], 3);
    assert_eq!(v["orbit_sizes"], serde_json::json!([12, 12, 12, 12, 12, 4]));
    assert_eq!(json(&bcblab(&["count", "--k", "10", "--n", "6"]))["N"], 16670);
    assert_eq!(json(&bcblab(&["count", "--k", "1", "--n", "1"]))["N"], 1);
    let big = json(&bcblab(&["count", "--k", "10", "--n", "9"]));
    assert!(big["orbit_sizes"].is_null());
    assert_eq!(big["N"], 11_111_134);
}

#[test]
fn table_cells() {
    let out = bcblab(&["table"]);
    assert!(out.status.success());
    let (header, rows) = csv_rows(&out);
    assert_eq!(header, vec!["k", "n2", "n3", "n4", "n5", "n6"]);
    assert_eq!(rows.len(), 9);
    let cell = |k: usize, n: usize| rows[k - 2][n - 1].clone();
    assert_eq!(cell(2, 6), "6");
    assert_eq!(cell(9, 4), "185");
    assert_eq!(cell(5, 5), "125");
    let j = json(&bcblab(&["table", "--format", "json"]));
    assert_eq!(j.as_array().unwrap().len(), 45);
}

#[test]
fn region_check_examples() {
    let check = |k: &str, a_l: &str, a_r: &str| json(&bcblab(&["region-check", "--k", k, "--a-l", a_l, "--a-r", a_r]));
    let v = check("3", "0.62", "-3");
    assert_eq!(v["report"]["in_region"], true);
    assert_eq!(v["intervals"].as_array().unwrap().len(), 3);
    assert_eq!(check("4", "0.47", "-10")["report"]["in_region"], true);
    let v = check("3", "0.62", "-2.0");
    assert_eq!(v["report"]["in_region"], false);
    assert!(v.get("intervals").is_none());
}

#[test]
fn build_verify_exhaustive() {
    let out = bcblab(&["build-verify", "--k", "3", "--n", "2", "--a-l", "0.62", "--a-r", "-3"]);
    assert!(out.status.success());
    let v = json(&out);
    assert_eq!(v["regions"], 2);
    assert_eq!(v["simple"]["passed"], 9);
    let regions = v["geometry"]["regions"].as_array().unwrap();
    let mut sizes: Vec<usize> = regions.iter().map(|r| r["boxes"].as_array().unwrap().len()).collect();
    sizes.sort();
    assert_eq!(sizes, vec![3, 6]);

    let v = json(&bcblab(&["build-verify", "--config", &config("four_band_3d.json")]));
    assert_eq!(v["regions"], 6);
    assert_eq!(v["simple"]["passed"], 64);
    assert_eq!(v["simple"]["total"], 64);
}

#[test]
fn build_verify_failure_still_writes_artifact() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("quadratic_2d.json");
    let out = bcblab(&["build-verify", "--config", &config("quadratic_2d.json"), "--out", path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(3));
    let v: Value = serde_json::from_str(&std::fs::read_to_string(&path).unwrap()).unwrap();
    assert_eq!(v["simple"]["passed"], 9);
    assert_eq!(v["pass"], false);
    assert!(v["perturbed"]["worst_margin"].as_f64().unwrap() < 0.0);
}

#[test]
fn invalid_configs_exit_4() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.json");
    std::fs::write(&bad, r#"{"k": 3, "a_l": 0.62, "a_r": -3, "nn": 2}"#).unwrap();
    let out = bcblab(&["build-verify", "--config", bad.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(4));
    assert!(String::from_utf8_lossy(&out.stderr).contains("nn"));

    let out = bcblab(&["build-verify", "--k", "3", "--a-l", "0.62", "--a-r", "-3"]);
    assert_eq!(out.status.code(), Some(4));
    assert!(String::from_utf8_lossy(&out.stderr).contains("`n`"));

    assert_eq!(bcblab(&["count", "--k", "3"]).status.code(), Some(4));
    assert_eq!(bcblab(&["count", "--k", "x", "--n", "2"]).status.code(), Some(4));
    assert_eq!(bcblab(&["region-check", "--k", "3", "--a-l", "0.62", "--a-r", "-3", "--format", "csv"]).status.code(), Some(4));
    assert_eq!(bcblab(&["fixed-point", "--config", &config("quadratic_2d.json")]).status.code(), Some(4));
    assert_eq!(bcblab(&["build-verify", "--k", "3", "--n", "2", "--a-l", "0.62", "--a-r", "-2"]).status.code(), Some(4));
}

#[test]
fn bifurcate_linear_branch_is_scaled_y_star() {
    let out = bcblab(&[
        "bifurcate", "--k", "3", "--n", "2", "--a-l", "0.62", "--a-r", "-3", "--mu-min", "-0.01", "--mu-max", "0.01",
        "--mu-steps", "5", "--sample", "50", "--transient", "100",
    ]);
    assert!(out.status.success());
    let (header, rows) = csv_rows(&out);
    assert_eq!(header, vec!["mu", "seed_id", "step", "x_1", "x_2", "region", "status"]);
    let y = [-1.0 / 0.38, -0.62 / 0.38];
    for row in &rows {
        let mu: f64 = row[0].parse().unwrap();
        if mu < 0.0 {
            assert_eq!(row[6], "fixed_point");
            for (j, &yj) in y.iter().enumerate() {
                let x: f64 = row[3 + j].parse().unwrap();
                assert!((x - mu.abs() * yj).abs() < 1e-10);
            }
        } else if mu == 0.0 {
            assert_eq!(row[6], "origin");
            assert_eq!((row[3].as_str(), row[4].as_str()), ("0", "0"));
        } else {
            assert_eq!(row[6], "ok");
        }
    }
    let positive: Vec<_> = rows.iter().filter(|r| r[0].parse::<f64>().unwrap() > 0.0).collect();
    assert_eq!(positive.len(), 2 * 2 * 2 * 50);
}

#[test]
fn bifurcate_quadratic_two_clouds() {
    let out = bcblab(&["bifurcate", "--config", &config("quadratic_2d.json"), "--mu-steps", "23"]);
    assert!(out.status.success());
    let (_, rows) = csv_rows(&out);
    let mut regions: BTreeMap<String, BTreeSet<String>> = BTreeMap::new();
    for row in &rows {
        let mu: f64 = row[0].parse().unwrap();
        if mu < 0.0 {
            assert_eq!(row[6], "fixed_point");
        } else if mu > 0.0 && mu <= 0.009 && row[6] == "ok" {
            regions.entry(row[0].clone()).or_default().insert(row[5].clone());
        }
    }
    assert!(!regions.is_empty());
    for set in regions.values() {
        assert_eq!(set.len(), 2);
    }
}

fn footprints(rows: &[Vec<String>], n: usize) -> Vec<usize> {
    let mut by_region: BTreeMap<String, BTreeSet<String>> = BTreeMap::new();
    for row in rows.iter().filter(|r| r.last().unwrap() == "ok") {
        by_region.entry(row[2 + n].clone()).or_default().insert(row[3 + n].clone());
    }
    let mut f: Vec<usize> = by_region.values().map(BTreeSet::len).collect();
    f.sort();
    f
}

#[test]
fn phase_portraits_in_two_and_three_dimensions() {
    let out = bcblab(&["phase", "--config", &config("quadratic_2d.json"), "--sample", "2000", "--transient", "1000"]);
    assert!(out.status.success());
    let (header, rows) = csv_rows(&out);
    assert_eq!(header, vec!["seed_id", "step", "x_1", "x_2", "region", "box_index", "status"]);
    assert_eq!(footprints(&rows, 2), vec![3, 6]);

    let out = bcblab(&["phase", "--config", &config("four_band_3d.json"), "--sample", "1000", "--transient", "200"]);
    assert!(out.status.success());
    let (_, rows) = csv_rows(&out);
    let groups: BTreeSet<&str> = rows.iter().map(|r| r[5].as_str()).collect();
    assert_eq!(groups.len(), 6);
}

#[test]
fn phase_without_seeds_is_empty() {
    let out = bcblab(&["phase", "--config", &config("quadratic_2d.json"), "--seeds", "0"]);
    assert!(out.status.success());
    assert!(out.stdout.is_empty());
}

#[test]
fn output_is_identical_across_thread_counts() {
    let args = ["phase", "--config", &config("quadratic_2d.json"), "--sample", "500", "--transient", "100", "--seed", "7"];
    let one = bcblab(&[&args[..], &["--threads", "1"]].concat());
    let four = bcblab(&[&args[..], &["--threads", "4"]].concat());
    assert!(one.status.success() && four.status.success());
    assert_eq!(one.stdout, four.stdout);
    let env = Command::new(env!("CARGO_BIN_EXE_bcblab")).args(args).env("BCBLAB_THREADS", "3").output().unwrap();
    assert_eq!(env.stdout, one.stdout);
    let other = bcblab(&["phase", "--config", &config("quadratic_2d.json"), "--sample", "500", "--transient", "100", "--seed", "8"]);
    assert_ne!(other.stdout, one.stdout);
}

#[test]
fn lyapunov_and_fixed_point() {
    let v = json(&bcblab(&["lyapunov", "--config", &config("quadratic_2d.json")]));
    assert!(v["exponents"].as_array().unwrap().iter().all(|e| e.as_f64().unwrap() > 0.0));
    let v = json(&bcblab(&["lyapunov", "--config", &config("quadratic_2d.json"), "--mu", "-0.005"]));
    assert!(v["exponents"].as_array().unwrap().iter().all(|e| e.as_f64().unwrap() < 0.0));
    let out = bcblab(&["fixed-point", "--config", &config("quadratic_2d.json"), "--mu", "-0.005"]);
    assert!(out.status.success());
    let v = json(&out);
    assert_eq!(v["report"]["converged"], true);
    assert_eq!(bcblab(&["lyapunov", "--config", &config("quadratic_2d.json"), "--steps", "10"]).status.code(), Some(4));
}
