use std::path::{Path, PathBuf};
use std::process::Command as Proc;

use hodge_vhs::cli::plot::{emit_plot_data, GridResults, LocusPoint, ResidualPoint};
use hodge_vhs::cli::scenario::validate_scenario;
use hodge_vhs::cli::{run, Command};
use hodge_vhs::{Error, C64};
use serde_json::{json, Value};

fn scenarios() -> Vec<PathBuf> {
    let dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("scenarios");
    let mut v: Vec<PathBuf> = std::fs::read_dir(dir).unwrap().map(|e| e.unwrap().path()).collect();
    v.sort();
    v
}

fn scenario(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("scenarios").join(name)
}

fn torus_scenario() -> Value {
    json!({
        "model": {"torus": {"d": 2, "tau": {"rows": 2, "cols": 2, "data": [[0.0, 1.0], [0.0, 0.0], [0.0, 0.0], [0.0, 1.0]]}, "weight": 2}},
        "truncation": 3,
        "family": {"kind": "torus_full"},
        "grid": {"radius": 0.1, "steps": 3},
        "seed": 1
    })
}

fn write(dir: &Path, v: &Value) -> PathBuf {
    let p = dir.join("scenario.json");
    std::fs::write(&p, serde_json::to_string_pretty(v).unwrap()).unwrap();
    p
}

fn scenario_path_of<T>(res: Result<T, Error>) -> String {
    match res {
        Ok(_) => panic!("scenario unexpectedly valid"),
        Err(Error::Scenario { path, .. }) => path,
        Err(other) => panic!("expected a scenario error, got {other}"),
    }
}

#[test]
fn shipped_scenarios_are_valid() {
    let all = scenarios();
    assert!(all.len() >= 10);
    for p in all {
        validate_scenario(&p).unwrap_or_else(|e| panic!("{}: {e}", p.display()));
    }
}

#[test]
fn validation_errors_name_the_field() {
    let tmp = tempfile::tempdir().unwrap();
    let mut v = torus_scenario();
    v["model"]["torus"]["weight"] = json!(5);
    assert_eq!(scenario_path_of(validate_scenario(&write(tmp.path(), &v))), "model.torus.weight");

    let mut v = torus_scenario();
    v["model"]["torus"]["tau"]["data"] = json!([[1.0, 0.0], [1.0, 0.0], [1.0, 0.0], [1.0, 0.0]]);
    assert_eq!(scenario_path_of(validate_scenario(&write(tmp.path(), &v))), "model.torus.tau");

    let mut v = torus_scenario();
    v["truncation"] = json!(0);
    assert_eq!(scenario_path_of(validate_scenario(&write(tmp.path(), &v))), "truncation");
}

#[test]
fn unknown_fields_are_rejected() {
    let tmp = tempfile::tempdir().unwrap();
    let mut v = torus_scenario();
    v["bogus"] = json!(1);
    assert!(matches!(validate_scenario(&write(tmp.path(), &v)), Err(Error::Scenario { .. })));
}

#[test]
fn zero_family_periods_are_the_identity() {
    let tmp = tempfile::tempdir().unwrap();
    run(Command::PeriodMap, Some(&scenario("torus2_zero_period_map.json")), tmp.path()).unwrap();
    let mut rdr = csv::Reader::from_path(tmp.path().join("periods.csv")).unwrap();
    let headers = rdr.headers().unwrap().clone();
    assert_eq!(headers.iter().next_back(), Some("status"));
    let col = |name: &str| headers.iter().position(|h| h == name).unwrap();
    let (bi, bj, r, cc, re, im) = (col("block_i"), col("block_j"), col("row"), col("col"), col("re"), col("im"));
    let mut rows = 0;
    for rec in rdr.records() {
        let rec = rec.unwrap();
        let want = if rec[bi] == rec[bj] && rec[r] == rec[cc] { 1.0 } else { 0.0 };
        assert_eq!(rec[re].parse::<f64>().unwrap(), want);
        assert_eq!(rec[im].parse::<f64>().unwrap(), 0.0);
        assert_eq!(&rec[rec.len() - 1], "ok");
        rows += 1;
    }
    assert!(rows > 0);
}

#[test]
fn every_shipped_scenario_runs_its_command() {
    let cases = [
        ("torus2_period_map.json", Command::PeriodMap, "periods.csv"),
        ("torus2_hodge_map.json", Command::HodgeMap, "hodge_map.csv"),
        ("torus2_extend_kahler.json", Command::ExtendKahler, "extend_kahler.csv"),
        ("torus2_stability.json", Command::StabilityRadius, "plot_margins.csv"),
        ("torus2_green_check.json", Command::GreenCheck, "green.json"),
        ("torus3_pp_check.json", Command::PpCheck, "pp.json"),
        ("torus2_hodge_locus.json", Command::HodgeLocus, "plot_locus-slice.csv"),
        ("torus2_vhc_check.json", Command::VhcCheck, "vhc.csv"),
        ("torus2_rationality_scan.json", Command::RationalityScan, "rational.csv"),
    ];
    for (file, cmd, artefact) in cases {
        let tmp = tempfile::tempdir().unwrap();
        assert!(run(cmd, Some(&scenario(file)), tmp.path()).unwrap(), "{file}");
        assert!(tmp.path().join(artefact).exists(), "{file}: missing {artefact}");
        let manifest: Value = serde_json::from_slice(&std::fs::read(tmp.path().join("manifest.json")).unwrap()).unwrap();
        assert_eq!(manifest["command"], cmd.name());
        assert_eq!(manifest["config_sha256"].as_str().unwrap().len(), 64);
    }
}

#[test]
fn outputs_are_reproducible() {
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    let sc = scenario("torus2_hodge_locus.json");
    run(Command::HodgeLocus, Some(&sc), a.path()).unwrap();
    run(Command::HodgeLocus, Some(&sc), b.path()).unwrap();
    for name in ["locus.csv", "locus.json", "plot_locus-slice.csv", "manifest.json"] {
        assert_eq!(std::fs::read(a.path().join(name)).unwrap(), std::fs::read(b.path().join(name)).unwrap(), "{name}");
    }
}

#[test]
fn plot_data_rejects_unknown_kinds() {
    let tmp = tempfile::tempdir().unwrap();
    let pts: Vec<ResidualPoint> = Vec::new();
    let err = emit_plot_data(&GridResults::Residuals(&pts), "scatter", tmp.path()).unwrap_err();
    assert!(matches!(err, Error::Input(_)));
    let err = emit_plot_data(&GridResults::Residuals(&pts), "margins", tmp.path()).unwrap_err();
    assert!(matches!(err, Error::Input(_)));
}

#[test]
fn empty_grids_give_header_only_tables() {
    let tmp = tempfile::tempdir().unwrap();
    let pts: Vec<LocusPoint> = Vec::new();
    let path = emit_plot_data(&GridResults::Locus { points: &pts, active: &[0, 2] }, "locus-slice", tmp.path()).unwrap();
    let text = std::fs::read_to_string(path).unwrap();
    assert_eq!(text.lines().count(), 1);
    assert!(text.starts_with("t0_re,t0_im,t2_re,t2_im,residual,member"));
}

#[test]
fn failed_points_keep_their_rows() {
    let tmp = tempfile::tempdir().unwrap();
    let pts = vec![
        ResidualPoint { id: 0, t: vec![C64::new(0.1, 0.0)], residual: 1e-12, error: None },
        ResidualPoint { id: 1, t: vec![C64::new(0.9, 0.0)], residual: f64::NAN, error: Some("outside_neighborhood".into()) },
    ];
    let path = emit_plot_data(&GridResults::Residuals(&pts), "residual-heatmap", tmp.path()).unwrap();
    let text = std::fs::read_to_string(path).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines.len(), 3);
    assert!(lines[1].ends_with(",ok"));
    assert!(lines[2].ends_with(",,outside_neighborhood"));
    assert!(!text.contains("NaN"));
}

#[test]
fn binary_reports_errors_as_json() {
    let tmp = tempfile::tempdir().unwrap();
    let mut v = torus_scenario();
    v["model"]["torus"]["weight"] = json!(7);
    let sc = write(tmp.path(), &v);
    let out = tmp.path().join("out");
    let res = Proc::new(env!("CARGO_BIN_EXE_vhs"))
        .args(["period-map", "--scenario"])
        .arg(&sc)
        .arg("--out")
        .arg(&out)
        .output()
        .unwrap();
    assert_eq!(res.status.code(), Some(2));
    let err: Value = serde_json::from_slice(&std::fs::read(out.join("error.json")).unwrap()).unwrap();
    assert_eq!(err["error"], "scenario");
    assert_eq!(err["path"], "model.torus.weight");
    assert!(String::from_utf8_lossy(&res.stderr).contains("model.torus.weight"));
}

#[test]
fn missing_scenario_is_an_input_error() {
    let tmp = tempfile::tempdir().unwrap();
    assert!(matches!(run(Command::HodgeMap, None, tmp.path()), Err(Error::Input(_))));
}
