use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use phlab_core::experiment::{verify_manifest, MANIFEST_FILE};

fn phlab(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_phlab"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn write_config(dir: &Path, name: &str, text: &str) -> PathBuf {
    let path = dir.join(name);
    std::fs::write(&path, text).unwrap();
    path
}

fn periodic_config(divisions: usize) -> String {
    format!(
        r#"{{
  "schema_version": 1,
  "map": {{"variant": "LinearToral", "matrix": [[2, 1], [1, 1]]}},
  "experiment": "periodic",
  "parameters": {{"seed_grid": {{"divisions": {divisions}}}, "k_max": 3}},
  "seed": 5,
  "output_dir": "unused"
}}"#
    )
}

fn stderr_line(out: &Output) -> String {
    let text = String::from_utf8(out.stderr.clone()).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines.len(), 1, "stderr: {text}");
    lines[0].to_string()
}

fn artifact_bytes(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut files: Vec<_> = std::fs::read_dir(dir)
        .unwrap()
        .map(|e| e.unwrap().file_name().into_string().unwrap())
        .filter(|f| f != MANIFEST_FILE)
        .collect();
    files.sort();
    files
        .into_iter()
        .map(|f| {
            let bytes = std::fs::read(dir.join(&f)).unwrap();
            (f, bytes)
        })
        .collect()
}

/// Manifest text without the wall clock and output directory lines.
fn manifest_without_run_details(dir: &Path) -> String {
    let text = std::fs::read_to_string(dir.join(MANIFEST_FILE)).unwrap();
    text.lines()
        .filter(|l| !l.contains("\"wall_clock_seconds\"") && !l.contains("\"output_dir\""))
        .collect::<Vec<_>>()
        .join("\n")
}

#[test]
fn successful_run_writes_a_verified_manifest() {
    let tmp = tempfile::tempdir().unwrap();
    let config = write_config(tmp.path(), "c.json", &periodic_config(8));
    let out = tmp.path().join("run");
    let o = phlab(&[
        "periodic",
        "--config",
        config.to_str().unwrap(),
        "--out",
        out.to_str().unwrap(),
    ]);
    assert_eq!(
        o.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&o.stderr)
    );
    let manifest = verify_manifest(&out).unwrap();
    assert_eq!(manifest.config.output_dir, out);
    assert_eq!(manifest.config.seed, 5);
    assert!(out.join("periodic.csv").exists());
}

#[test]
fn output_bytes_do_not_depend_on_thread_count() {
    let tmp = tempfile::tempdir().unwrap();
    let config = write_config(tmp.path(), "c.json", &periodic_config(8));
    let mut dirs = Vec::new();
    for threads in ["1", "3", "3"] {
        let out = tmp.path().join(format!("run{}", dirs.len()));
        let o = phlab(&[
            "periodic",
            "--config",
            config.to_str().unwrap(),
            "--out",
            out.to_str().unwrap(),
            "--threads",
            threads,
        ]);
        assert_eq!(o.status.code(), Some(0));
        dirs.push(out);
    }
    let first = artifact_bytes(&dirs[0]);
    for d in &dirs[1..] {
        assert_eq!(artifact_bytes(d), first);
        assert_eq!(
            manifest_without_run_details(d),
            manifest_without_run_details(&dirs[0])
        );
    }
}

#[test]
fn seed_flag_overrides_the_config() {
    let tmp = tempfile::tempdir().unwrap();
    let config = write_config(tmp.path(), "c.json", &periodic_config(8));
    let out = tmp.path().join("run");
    let o = phlab(&[
        "periodic",
        "--config",
        config.to_str().unwrap(),
        "--out",
        out.to_str().unwrap(),
        "--seed",
        "99",
    ]);
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(verify_manifest(&out).unwrap().config.seed, 99);
}

#[test]
fn invalid_parameters_exit_with_code_two() {
    let tmp = tempfile::tempdir().unwrap();
    // 10 is not an allowed grid resolution
    let config = write_config(tmp.path(), "c.json", &periodic_config(10));
    let out = tmp.path().join("run");
    let o = phlab(&[
        "periodic",
        "--config",
        config.to_str().unwrap(),
        "--out",
        out.to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr_line(&o).starts_with("error: validation: "));
    assert!(!out.exists(), "validation must precede any output");
}

#[test]
fn malformed_config_and_wrong_subcommand_exit_with_code_two() {
    let tmp = tempfile::tempdir().unwrap();
    let broken = write_config(tmp.path(), "broken.json", "{\"schema_version\": 1,");
    let o = phlab(&["periodic", "--config", broken.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr_line(&o).starts_with("error: validation: "));

    let good = write_config(tmp.path(), "c.json", &periodic_config(8));
    let o = phlab(&["mixing", "--config", good.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr_line(&o).contains("periodic"));

    let singular = periodic_config(8).replace("[[2, 1], [1, 1]]", "[[2, 0], [0, 1]]");
    let singular = write_config(tmp.path(), "s.json", &singular);
    let o = phlab(&["periodic", "--config", singular.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn io_failures_exit_with_code_three() {
    let tmp = tempfile::tempdir().unwrap();
    let missing = tmp.path().join("absent.json");
    let o = phlab(&["periodic", "--config", missing.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(3));
    assert!(stderr_line(&o).starts_with("error: io: "));

    // output directory below a regular file
    let blocker = write_config(tmp.path(), "file", "x");
    let config = write_config(tmp.path(), "c.json", &periodic_config(8));
    let out = blocker.join("run");
    let o = phlab(&[
        "periodic",
        "--config",
        config.to_str().unwrap(),
        "--out",
        out.to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(3));
}

#[test]
fn render_subcommand() {
    let tmp = tempfile::tempdir().unwrap();
    let leaf = write_config(
        tmp.path(),
        "leaf.csv",
        "arclength,x0,x1\n0,0.9,0.5\n0.1,0.0,0.55\n0.2,0.1,0.6\n",
    );
    let svg = tmp.path().join("leaf.svg");
    let o = phlab(&[
        "render",
        leaf.to_str().unwrap(),
        "--projection",
        "0,1",
        "--out",
        svg.to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(0));
    let text = std::fs::read_to_string(&svg).unwrap();
    // one wrap across x = 1 gives two pieces
    assert_eq!(text.matches("<polyline").count(), 2);

    let o = phlab(&["render", leaf.to_str().unwrap(), "--projection", "0,2"]);
    assert_eq!(o.status.code(), Some(2));

    let bad = write_config(tmp.path(), "bad.csv", "arclength,x0,x1\n0,abc,0.5\n");
    let o = phlab(&["render", bad.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));

    let o = phlab(&["render", tmp.path().join("none.csv").to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(3));
}

#[test]
fn render_flag_adds_svgs_to_the_manifest() {
    let tmp = tempfile::tempdir().unwrap();
    let config = write_config(
        tmp.path(),
        "leaf.json",
        r#"{
  "schema_version": 1,
  "map": {"variant": "LinearToral", "matrix": [[1, -1, -1], [-1, 1, 0], [-1, 0, 2]]},
  "experiment": "leaf",
  "parameters": {"point": [0.1, 0.2, 0.3], "bundle": "uu", "radius": 1.0, "step": 0.01},
  "seed": 1,
  "output_dir": "unused"
}"#,
    );
    let out = tmp.path().join("run");
    let o = phlab(&[
        "leaf",
        "--config",
        config.to_str().unwrap(),
        "--out",
        out.to_str().unwrap(),
        "--render",
        "0,2",
    ]);
    assert_eq!(
        o.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&o.stderr)
    );
    let manifest = verify_manifest(&out).unwrap();
    assert!(manifest.artifacts.iter().any(|a| a.file == "leaf.svg"));

    let o = phlab(&[
        "leaf",
        "--config",
        config.to_str().unwrap(),
        "--out",
        tmp.path().join("run2").to_str().unwrap(),
        "--render",
        "0,3",
    ]);
    assert_eq!(o.status.code(), Some(2));
}
