use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;

fn write_config(dir: &Path, name: &str, text: &str) -> PathBuf {
    let p = dir.join(name);
    std::fs::write(&p, text).unwrap();
    p
}

fn sdskit(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_sdskit")).args(args).output().unwrap()
}

fn run(config: &Path, out: &Path, extra: &[&str]) -> Output {
    let mut args = vec!["run", config.to_str().unwrap(), "--out", out.to_str().unwrap()];
    args.extend_from_slice(extra);
    sdskit(&args)
}

fn read_json(path: &Path) -> Value {
    serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap()
}

#[test]
fn dyadic_distance_is_two_thirds_at_every_epoch() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(
        tmp.path(),
        "dyadic.toml",
        "kind = \"dyadic\"\nseed = 5\n\n[dyadic]\nx = \"1\"\ny = \"1/3\"\nepochs = 10\npaths = 3\n",
    );
    let out = tmp.path().join("out");
    let o = run(&cfg, &out, &[]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let report = read_json(&out.join("report.json"));
    for path in report["paths"].as_array().unwrap() {
        let epochs = path["epochs"].as_array().unwrap();
        if path["complete"].as_bool().unwrap() {
            assert_eq!(epochs.len(), 10);
        }
        assert!(!epochs.is_empty());
        for e in epochs {
            assert_eq!(e["distance"], "2/3");
        }
    }
    let manifest = read_json(&out.join("manifest.json"));
    assert_eq!(manifest["status"], "ok");
    assert_eq!(manifest["seed"], 5);
    assert_eq!(manifest["config"]["dyadic"]["y"], "1/3");
    assert!(out.join("ladder_distances.csv").exists());
}

#[test]
fn dyadic_start_outside_unit_interval_is_rejected() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(
        tmp.path(),
        "d.toml",
        "kind = \"dyadic\"\n[dyadic]\nx = \"5\"\ny = \"1/3\"\nepochs = 10\n",
    );
    let o = run(&cfg, &tmp.path().join("out"), &[]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("[0, 1]"));
}

#[test]
fn negative_horizon_is_a_config_error() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(
        tmp.path(),
        "bad.toml",
        "kind = \"simulate\"\nhorizon = -5\nreplicas = 2\nstarting_points = [0.0]\n\n[system]\nfamily = \"reflected_rw\"\nb_law = { type = \"exponential\", rate = 1.0 }\n",
    );
    let o = run(&cfg, &tmp.path().join("out"), &[]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("horizon"));
}

#[test]
fn unknown_keys_and_bad_workers_are_config_errors() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), "typo.toml", "kind = \"probe\"\nsede = 3\n");
    let o = run(&cfg, &tmp.path().join("out"), &[]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("sede"));

    let cfg = write_config(
        tmp.path(),
        "probe.toml",
        "kind = \"probe\"\n[probe]\nbase = 2\ndepth = 4\nseeds = [\"0\"]\n",
    );
    let o = run(&cfg, &tmp.path().join("out"), &["--workers", "0"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn invariant_exponential_matches_closed_form() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(
        tmp.path(),
        "inv.toml",
        "kind = \"invariant\"\nseed = 3\nhorizon = 1000\nreplicas = 40000\nstarting_points = [0.0]\n\n\
         [system]\nfamily = \"reflected_rw\"\nb_law = { type = \"exponential\", rate = 1.0 }\n\n\
         [invariant]\nbins = 50\nhi = 8.0\n",
    );
    let out = tmp.path().join("out");
    let o = run(&cfg, &out, &[]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let report = read_json(&out.join("report.json"));
    let ks = report["ks"].as_f64().unwrap();
    assert!(ks <= 0.02, "ks = {ks}");
    let hist = std::fs::read_to_string(out.join("histogram.csv")).unwrap();
    assert!(hist.starts_with("edge_lo,edge_hi,mass\n"));
    assert_eq!(hist.lines().count(), 51);
}

const SIMULATE: &str = "kind = \"simulate\"\nseed = 9\nhorizon = 300\nreplicas = 70\nstarting_points = [0.0, 2.5]\n\n\
    [system]\nfamily = \"reflected_affine\"\njoint_pairs = [{ a = 2.0, b = 1.0, weight = 0.5 }, { a = 0.5, b = 1.0, weight = 0.5 }]\n";

#[test]
fn reruns_are_byte_identical_across_worker_counts() {
    let tmp = tempfile::tempdir().unwrap();
    for (name, extra) in [("csv", ""), ("bin", "\n[simulate]\nformat = \"binary\"\nrecord = { strided = 7 }\n")] {
        let cfg = write_config(tmp.path(), &format!("{name}.toml"), &format!("{SIMULATE}{extra}"));
        let a = tmp.path().join(format!("{name}-a"));
        let b = tmp.path().join(format!("{name}-b"));
        assert_eq!(run(&cfg, &a, &["--workers", "1"]).status.code(), Some(0));
        assert_eq!(run(&cfg, &b, &["--workers", "3"]).status.code(), Some(0));
        let files = read_json(&a.join("manifest.json"))["data_files"].clone();
        let mut names: Vec<String> = files.as_array().unwrap().iter().map(|v| v.as_str().unwrap().to_string()).collect();
        assert!(names.len() >= 2);
        names.push("report.json".into());
        for f in names {
            let (x, y) = (std::fs::read(a.join(&f)).unwrap(), std::fs::read(b.join(&f)).unwrap());
            assert!(x == y, "{f} differs between runs");
        }
    }
}

#[test]
fn seed_override_changes_results_and_is_recorded() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), "sim.toml", SIMULATE);
    let a = tmp.path().join("a");
    let b = tmp.path().join("b");
    assert_eq!(run(&cfg, &a, &[]).status.code(), Some(0));
    assert_eq!(run(&cfg, &b, &["--seed-override", "10"]).status.code(), Some(0));
    let m = read_json(&b.join("manifest.json"));
    assert_eq!(m["seed"], 10);
    assert_eq!(m["seed_overridden"], true);
    assert_ne!(
        std::fs::read(a.join("trajectories.csv")).unwrap(),
        std::fs::read(b.join("trajectories.csv")).unwrap()
    );
}

#[test]
fn default_output_root_comes_from_the_environment() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(
        tmp.path(),
        "probe.toml",
        "kind = \"probe\"\n[probe]\nbase = 2\ndepth = 6\nseeds = [\"0\", \"1\"]\n",
    );
    let root = tmp.path().join("root");
    let o = Command::new(env!("CARGO_BIN_EXE_sdskit"))
        .args(["run", cfg.to_str().unwrap()])
        .env("SDSKIT_OUT_ROOT", &root)
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let report = read_json(&root.join("probe").join("report.json"));
    assert_eq!(report["result"]["base"], 2);
    assert!(root.join("probe").join("points.csv").exists());
}

#[test]
fn criteria_and_ratio_reports() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(
        tmp.path(),
        "crit.toml",
        "kind = \"criteria\"\n[criteria]\nlaw = { type = \"pareto_type\", a = 0.6 }\n",
    );
    let out = tmp.path().join("crit");
    assert_eq!(run(&cfg, &out, &[]).status.code(), Some(0));
    let r = read_json(&out.join("report.json"));
    assert_eq!(r["chain"], serde_json::json!(["fails", "holds", "holds", "holds"]));

    let cfg = write_config(
        tmp.path(),
        "ratio.toml",
        "kind = \"ratio\"\nseed = 1\nhorizon = 200000\nstarting_points = [0.0]\n\n\
         [system]\nfamily = \"reflected_rw\"\nb_law = { type = \"uniform\", lo = 0.0, hi = 1.0 }\n\n\
         [ratio]\nphi = [0.0, 0.5]\npsi = [0.5, 1.0]\nstride = 50000\n",
    );
    let out = tmp.path().join("ratio");
    assert_eq!(run(&cfg, &out, &[]).status.code(), Some(0));
    let r = read_json(&out.join("report.json"));
    assert!((r["prediction"].as_f64().unwrap() - 3.0).abs() < 1e-9);
    assert!((r["final_value"].as_f64().unwrap() / 3.0 - 1.0).abs() < 0.05);
    assert_eq!(std::fs::read_to_string(out.join("ratio.csv")).unwrap().lines().count(), 5);
}
