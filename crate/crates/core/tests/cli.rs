use std::fs;
use std::path::Path;
use std::process::{Command, Output};

const SQUARE: &str = r#"{"outer": {"kind": "rectangle", "x0": 0, "y0": 0, "x1": 1, "y1": 1},
    "inclusions": [{"kind": "disk", "cx": 0.5, "cy": 0.5, "r": 0.2}], "target_h": 0.08}"#;

fn hicontrast(args: &[&str], config: Option<&Path>, out: &Path) -> Output {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_hicontrast"));
    cmd.args(args).arg("--out").arg(out);
    if let Some(c) = config {
        cmd.arg("--config").arg(c);
    }
    cmd.output().expect("binary runs")
}

fn write_config(dir: &Path, name: &str, text: &str) -> std::path::PathBuf {
    let path = dir.join(name);
    fs::write(&path, text).unwrap();
    path
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn entries(dir: &Path) -> Vec<String> {
    let mut names: Vec<String> =
        fs::read_dir(dir).unwrap().map(|e| e.unwrap().file_name().to_string_lossy().into_owned()).collect();
    names.sort();
    names
}

#[test]
fn successful_run_writes_csv_and_manifest() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_config(dir.path(), "c.json", &format!(r#"{{"geometry": {SQUARE}, "jmax": 4}}"#));
    let out = dir.path().join("out");
    let o = hicontrast(&["expand", "pressure"], Some(&config), &out);
    assert!(o.status.success(), "{}", stderr(&o));
    assert_eq!(entries(&out), ["constants.csv", "diagnostics.csv", "manifest.json", "terms.csv"]);
    let manifest: serde_json::Value = serde_json::from_str(&fs::read_to_string(out.join("manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest["command"], "expand pressure");
    assert_eq!(manifest["artifacts"].as_array().unwrap().len(), 3);
    let terms = fs::read_to_string(out.join("terms.csv")).unwrap();
    assert!(terms.starts_with("node,x,y,u00,u0,u1,u2,u3,u4\n"), "{}", &terms[..60]);
    assert!(!terms.contains('\r'));
}

#[test]
fn config_errors_exit_2_with_a_pointer() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("out");
    let unknown = write_config(dir.path(), "a.json", r#"{"contrast": [10]}"#);
    let o = hicontrast(&["solve", "direct"], Some(&unknown), &out);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("contrast"), "{}", stderr(&o));

    let bad_value = write_config(dir.path(), "b.json", &format!(r#"{{"geometry": {SQUARE}, "contrasts": [10, 0.5]}}"#));
    let o = hicontrast(&["solve", "direct"], Some(&bad_value), &out);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("/contrasts/1"), "{}", stderr(&o));

    let o = hicontrast(&["solve", "direct"], Some(&dir.path().join("missing.json")), &out);
    assert_eq!(o.status.code(), Some(2));
    assert!(!out.exists());
}

#[test]
fn geometry_errors_exit_4() {
    let dir = tempfile::tempdir().unwrap();
    let outside = r#"{"geometry": {"outer": {"kind": "rectangle", "x0": 0, "y0": 0, "x1": 1, "y1": 1},
        "inclusions": [{"kind": "disk", "cx": 0.95, "cy": 0.5, "r": 0.2}], "target_h": 0.05}}"#;
    let config = write_config(dir.path(), "c.json", outside);
    let o = hicontrast(&["mesh", "gen"], Some(&config), &dir.path().join("out"));
    assert_eq!(o.status.code(), Some(4), "{}", stderr(&o));
}

#[test]
fn unsupported_requests_exit_2_and_leave_no_partial_output() {
    let dir = tempfile::tempdir().unwrap();
    let two = r#"{"geometry": {"outer": {"kind": "rectangle", "x0": 0, "y0": 0, "x1": 1, "y1": 1},
        "inclusions": [{"kind": "disk", "cx": 0.3, "cy": 0.5, "r": 0.1}, {"kind": "disk", "cx": 0.7, "cy": 0.5, "r": 0.1}],
        "target_h": 0.05}, "physics": "elastic"}"#;
    let config = write_config(dir.path(), "c.json", two);
    let out = dir.path().join("out");
    fs::create_dir_all(&out).unwrap();
    fs::write(out.join("keep.txt"), "earlier run").unwrap();
    let o = hicontrast(&["expand", "elastic"], Some(&config), &out);
    assert_eq!(o.status.code(), Some(2), "{}", stderr(&o));
    assert_eq!(entries(&out), ["keep.txt"]);
}

#[test]
fn energy_report_rejects_boundary_data() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_config(
        dir.path(),
        "c.json",
        &format!(r#"{{"geometry": {SQUARE}, "boundary": {{"kind": "x1"}}}}"#),
    );
    let out = dir.path().join("out");
    let o = hicontrast(&["report", "energy"], Some(&config), &out);
    assert_eq!(o.status.code(), Some(2), "{}", stderr(&o));
    assert!(entries(&out).is_empty());
}

#[test]
fn saved_mesh_is_reusable_relative_to_the_config() {
    let dir = tempfile::tempdir().unwrap();
    let gen = write_config(dir.path(), "gen.json", &format!(r#"{{"geometry": {SQUARE}}}"#));
    let o = hicontrast(&["mesh", "gen"], Some(&gen), dir.path());
    assert!(o.status.success(), "{}", stderr(&o));
    assert!(dir.path().join("mesh.json").exists());

    let reuse = write_config(dir.path(), "reuse.json", r#"{"mesh": "mesh.json", "contrasts": [10]}"#);
    let out = dir.path().join("direct");
    let o = hicontrast(&["solve", "direct"], Some(&reuse), &out);
    assert!(o.status.success(), "{}", stderr(&o));
    let from_file = fs::read(out.join("direct.csv")).unwrap();

    let inline = write_config(dir.path(), "inline.json", &format!(r#"{{"geometry": {SQUARE}, "contrasts": [10]}}"#));
    let out2 = dir.path().join("direct2");
    assert!(hicontrast(&["solve", "direct"], Some(&inline), &out2).status.success());
    assert_eq!(from_file, fs::read(out2.join("direct.csv")).unwrap());
}

#[test]
fn cache_hits_and_corruption_give_identical_results() {
    let dir = tempfile::tempdir().unwrap();
    let cache = dir.path().join("cache");
    let text = format!(r#"{{"geometry": {SQUARE}, "jmax": 3, "cache_dir": {:?}}}"#, cache.to_str().unwrap());
    let config = write_config(dir.path(), "c.json", &text);
    let plain = write_config(dir.path(), "p.json", &format!(r#"{{"geometry": {SQUARE}, "jmax": 3}}"#));

    let run = |cfg: &Path, name: &str| {
        let out = dir.path().join(name);
        let o = hicontrast(&["report", "error"], Some(cfg), &out);
        assert!(o.status.success(), "{}", stderr(&o));
        (fs::read(out.join("errors.csv")).unwrap(), stderr(&o))
    };
    let (cold, _) = run(&config, "cold");
    let cached_files = entries(&cache);
    assert!(cached_files.iter().any(|f| f.ends_with(".json")));
    assert!(cached_files.iter().any(|f| f.ends_with(".bin")));
    let (warm, _) = run(&config, "warm");
    assert_eq!(cold, warm);

    for f in cached_files.iter().filter(|f| !f.ends_with(".sha256")) {
        let path = cache.join(f);
        let mut bytes = fs::read(&path).unwrap();
        let mid = bytes.len() / 2;
        bytes[mid] ^= 0x5a;
        fs::write(&path, bytes).unwrap();
    }
    let (rebuilt, warnings) = run(&config, "rebuilt");
    assert!(warnings.contains("hash check"), "{warnings}");
    assert_eq!(cold, rebuilt);

    let (uncached, _) = run(&plain, "uncached");
    assert_eq!(cold, uncached);
}

#[test]
fn one_dimensional_example_needs_no_geometry() {
    let dir = tempfile::tempdir().unwrap();
    let o = hicontrast(&["run", "1d-example", "--jmax", "3"], None, dir.path());
    assert!(o.status.success(), "{}", stderr(&o));
    let constants = fs::read_to_string(dir.path().join("1d_constants.csv")).unwrap();
    assert_eq!(constants, "term,constant,compatibility\n0,2,0\n1,0,0\n2,0,0\n3,0,0\n");
}

#[test]
fn invalid_overrides_are_config_errors() {
    let dir = tempfile::tempdir().unwrap();
    let o = hicontrast(&["run", "1d-example", "--threads", "0"], None, dir.path());
    assert_eq!(o.status.code(), Some(2));
    let o = hicontrast(&["run", "1d-example", "--tol", "2"], None, dir.path());
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn relative_cache_dir_follows_the_config_file() {
    let dir = tempfile::tempdir().unwrap();
    let nested = dir.path().join("configs");
    fs::create_dir_all(&nested).unwrap();
    let config = write_config(&nested, "c.json", &format!(r#"{{"geometry": {SQUARE}, "jmax": 2, "cache_dir": "cache"}}"#));
    let o = hicontrast(&["report", "error"], Some(&config), &dir.path().join("out"));
    assert!(o.status.success(), "{}", stderr(&o));
    assert!(!entries(&nested.join("cache")).is_empty());
}
