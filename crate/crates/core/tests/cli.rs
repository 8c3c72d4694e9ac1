use std::fs;
use std::path::Path;

use glmcf::cli::run;
use glmcf::immersion::snapshot::Snapshot;

fn glmcf(args: &[&str]) -> i32 {
    run(std::iter::once("glmcf").chain(args.iter().copied()))
}

fn write_config(dir: &Path, name: &str, body: &str) -> String {
    let path = dir.join(name);
    fs::write(&path, body).unwrap();
    path.to_str().unwrap().to_string()
}

fn summary_value(text: &str, key: &str) -> f64 {
    text.lines()
        .find_map(|l| l.strip_prefix(&format!("{key}: ")))
        .unwrap_or_else(|| panic!("no {key} in summary"))
        .parse()
        .unwrap()
}

const CIRCLE: &str = r#"{
  "ambient": { "n": 1 },
  "initial": { "kind": "curve", "fixture": "circle", "resolution": 256 },
  "flow": { "kind": "mcf", "t_end": 0.4 },
  "output": { "snapshot_every": 0, "snapshots": false }
}"#;

#[test]
fn circle_config_shrinks_to_the_exact_radius() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), "circle.json", CIRCLE);
    let out = tmp.path().join("out");
    assert_eq!(glmcf(&["flow", &cfg, "--out", out.to_str().unwrap(), "--expect-completion"]), 0);

    let summary = fs::read_to_string(out.join("summary.txt")).unwrap();
    assert!(summary.starts_with("termination: reached_t_end\n"));
    assert!((summary_value(&summary, "mean_radius") - 0.2f64.sqrt()).abs() < 1e-3);

    // radius from the length column of the last trace row
    let mut reader = csv::Reader::from_path(out.join("trace.csv")).unwrap();
    let header = reader.headers().unwrap().clone();
    let (ti, li) = (header.iter().position(|h| h == "t").unwrap(), header.iter().position(|h| h == "vol_bar").unwrap());
    let last = reader.records().last().unwrap().unwrap();
    let t: f64 = last[ti].parse().unwrap();
    let r = last[li].parse::<f64>().unwrap() / std::f64::consts::TAU;
    assert_eq!(t, 0.4);
    assert!((r - 0.2f64.sqrt()).abs() < 1e-3, "{r}");
}

#[test]
fn stationary_special_lagrangian_stays_put() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(
        tmp.path(),
        "sl.json",
        r#"{
          "ambient": { "n": 2, "coefficients": [[[1, 0], 0.3, 0.0], [[0, 1], 0.2, 0.0]] },
          "initial": { "kind": "graph", "fixture": "plane", "resolution": 16 },
          "flow": { "kind": "scalar", "t_end": 1.0 },
          "output": { "directory": "run", "snapshot_every": 100 }
        }"#,
    );
    assert_eq!(glmcf(&["flow", &cfg]), 0);
    let run_dir = tmp.path().join("run");
    let summary = fs::read_to_string(run_dir.join("summary.txt")).unwrap();
    assert!(summary_value(&summary, "max_abs_u") <= 1e-12);
    let snaps: Vec<_> = fs::read_dir(&run_dir)
        .unwrap()
        .map(|e| e.unwrap().file_name().into_string().unwrap())
        .filter(|n| n.starts_with("snap_"))
        .collect();
    assert!(snaps.len() >= 2, "{snaps:?}");
    assert!(snaps.contains(&"snap_0.csv".to_string()));
}

#[test]
fn malformed_configs_exit_2_without_output() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("never");
    let cases = [
        // missing n
        r#"{ "ambient": {}, "initial": { "kind": "curve", "fixture": "circle" }, "flow": { "kind": "mcf", "t_end": 0.1 } }"#,
        // unknown key
        r#"{ "ambient": { "n": 1, "colour": 3 }, "initial": { "kind": "curve", "fixture": "circle" }, "flow": { "kind": "mcf", "t_end": 0.1 } }"#,
        // fixture of the wrong kind
        r#"{ "ambient": { "n": 1 }, "initial": { "kind": "graph", "fixture": "circle" }, "flow": { "kind": "mcf", "t_end": 0.1 } }"#,
        // flow incompatible with the state
        r#"{ "ambient": { "n": 1 }, "initial": { "kind": "curve", "fixture": "circle" }, "flow": { "kind": "scalar", "t_end": 0.1 } }"#,
        // cfl out of range
        r#"{ "ambient": { "n": 1 }, "initial": { "kind": "curve", "fixture": "circle" }, "flow": { "kind": "mcf", "t_end": 0.1, "cfl": 2.0 } }"#,
        "not json",
    ];
    for (k, body) in cases.iter().enumerate() {
        let cfg = write_config(tmp.path(), &format!("bad{k}.json"), body);
        assert_eq!(glmcf(&["flow", &cfg, "--out", out.to_str().unwrap()]), 2, "case {k}");
        assert!(!out.exists(), "case {k} wrote output");
    }
    assert_eq!(glmcf(&["flow", tmp.path().join("absent.json").to_str().unwrap()]), 2);
}

#[test]
fn expect_completion_reports_early_termination() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(
        tmp.path(),
        "cap.json",
        r#"{
          "ambient": { "n": 1 },
          "initial": { "kind": "curve", "fixture": "circle", "resolution": 64 },
          "flow": { "kind": "mcf", "t_end": 0.45, "max_velocity": 2.0 },
          "output": { "snapshots": false }
        }"#,
    );
    let out = tmp.path().join("o");
    let out = out.to_str().unwrap();
    assert_eq!(glmcf(&["flow", &cfg, "--out", out, "--expect-completion"]), 1);
    assert_eq!(glmcf(&["flow", &cfg, "--out", out]), 0);
    let summary = fs::read_to_string(Path::new(out).join("summary.txt")).unwrap();
    assert!(summary.starts_with("termination: singularity\n"));
}

#[test]
fn identical_configs_give_identical_bytes_and_no_temp_files() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(
        tmp.path(),
        "mesh.json",
        r#"{
          "ambient": { "n": 2, "coefficients": [[[1, 0], 0.0, 0.2]] },
          "initial": { "kind": "mesh", "fixture": "graph_mesh_2d", "resolution": 12 },
          "flow": { "kind": "gmcf", "t_end": 0.02 },
          "output": { "snapshot_every": 5 }
        }"#,
    );
    let (a, b) = (tmp.path().join("a"), tmp.path().join("b"));
    assert_eq!(glmcf(&["flow", &cfg, "--out", a.to_str().unwrap()]), 0);
    assert_eq!(glmcf(&["flow", &cfg, "--out", b.to_str().unwrap()]), 0);
    let mut names: Vec<_> = fs::read_dir(&a).unwrap().map(|e| e.unwrap().file_name()).collect();
    names.sort();
    assert!(names.len() >= 4);
    for name in &names {
        let s = name.to_str().unwrap();
        assert!(s.ends_with(".csv") || s == "summary.txt", "stray file {s}");
        assert_eq!(fs::read(a.join(name)).unwrap(), fs::read(b.join(name)).unwrap(), "{s}");
    }
}

#[test]
fn fixtures_command_writes_snapshots() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().to_str().unwrap();
    assert_eq!(glmcf(&["fixtures", "circle", "--out", out]), 0);
    let snap = Snapshot::read_csv(fs::File::open(tmp.path().join("circle.csv")).unwrap()).unwrap();
    assert_eq!(snap.rows.len(), 256);
    for r in &snap.rows {
        assert!((r.position[0].hypot(r.position[1]) - 1.0).abs() < 1e-15);
    }

    assert_eq!(glmcf(&["fixtures", "plane", "--out", out]), 0);
    let snap = Snapshot::read_csv(fs::File::open(tmp.path().join("plane.csv")).unwrap()).unwrap();
    assert!(snap.has_u());
    assert!(snap.rows.iter().all(|r| r.u == Some(0.0)));

    assert_eq!(glmcf(&["fixtures", "shear_mesh", "--out", out, "--resolution", "8"]), 0);
    assert_eq!(glmcf(&["fixtures", "nosuch", "--out", out]), 2);
}

#[test]
fn fixture_snapshot_feeds_back_into_a_run() {
    let tmp = tempfile::tempdir().unwrap();
    assert_eq!(glmcf(&["fixtures", "sine_graph_1d", "--out", tmp.path().to_str().unwrap()]), 0);
    let cfg = write_config(
        tmp.path(),
        "from_file.json",
        r#"{
          "ambient": { "n": 1 },
          "initial": { "kind": "graph", "file": "sine_graph_1d.csv" },
          "flow": { "kind": "scalar", "t_end": 0.01 },
          "output": { "snapshots": false }
        }"#,
    );
    assert_eq!(glmcf(&["flow", &cfg, "--out", tmp.path().join("o").to_str().unwrap(), "--expect-completion"]), 0);
}

#[test]
fn verify_exit_codes() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().to_str().unwrap();
    assert_eq!(glmcf(&["verify", "--suite", "nosuch", "--out", out]), 2);
    assert_eq!(glmcf(&["verify", "--suite", "identities", "--ladder", "32,x", "--out", out]), 2);
    assert_eq!(glmcf(&["verify", "--suite", "identities", "--ladder", "4", "--out", out]), 2);
    assert!(!tmp.path().join("report.csv").exists());

    assert_eq!(glmcf(&["verify", "--suite", "identities", "--ladder", "32,64", "--out", out]), 0);
    let report = fs::read_to_string(tmp.path().join("report.csv")).unwrap();
    assert!(report.starts_with("check_id,resolution,residual,order,pass,expected_fail\n"));
    assert!(report.lines().skip(1).all(|l| l.contains(",true,false")), "{report}");
}

#[test]
fn preservation_suite_passes_with_flagged_control() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().to_str().unwrap();
    assert_eq!(glmcf(&["verify", "--suite", "preservation", "--out", out]), 0);
    let report = fs::read_to_string(tmp.path().join("report.csv")).unwrap();
    let control: Vec<&str> = report.lines().filter(|l| l.contains("negative_control")).collect();
    assert!(!control.is_empty());
    assert!(control.iter().all(|l| l.ends_with(",false,true")), "{control:?}");
}

#[test]
fn usage_errors_exit_2() {
    assert_eq!(glmcf(&[]), 2);
    assert_eq!(glmcf(&["bogus"]), 2);
    assert_eq!(glmcf(&["verify"]), 2);
}
