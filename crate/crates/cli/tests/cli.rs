use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn ddw(args: &[&str], root: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_ddw"))
        .args(args)
        .env("DDW_OUTPUT_ROOT", root)
        .env_remove("RUST_LOG")
        .output()
        .expect("ddw runs")
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn manifest(dir: &Path) -> Value {
    serde_json::from_str(&fs::read_to_string(dir.join("manifest.json")).unwrap()).unwrap()
}

#[test]
fn negative_damping_names_the_field() {
    let root = tempfile::tempdir().unwrap();
    let o = ddw(&["dissipate", "--damping", "-1e-6"], root.path());
    assert!(!o.status.success());
    assert!(stderr(&o).contains("bath.damping"), "{}", stderr(&o));

    let cfg = root.path().join("neg.toml");
    fs::write(&cfg, "task = \"dissipate\"\n[bath]\ndamping = -1e-6\n").unwrap();
    let o = ddw(&["run", "-c", cfg.to_str().unwrap()], root.path());
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("bath.damping"));
    assert!(!root.path().join("dissipate").exists());
}

#[test]
fn malformed_config_reports_line_and_key() {
    let root = tempfile::tempdir().unwrap();
    let cfg = root.path().join("bad.toml");
    fs::write(&cfg, "[system]\nomega = 0.982\nbarier_height = 4\n").unwrap();
    let o = ddw(&["run", "-c", cfg.to_str().unwrap()], root.path());
    assert_eq!(o.status.code(), Some(2));
    let err = stderr(&o);
    assert!(err.contains("line 3") && err.contains("barier_height"), "{err}");
}

#[test]
fn decreasing_temperature_list_is_rejected() {
    let root = tempfile::tempdir().unwrap();
    let o = ddw(&["attractor", "--temperatures", "1e-3,1e-4"], root.path());
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("attractor.temperatures"));
}

#[test]
fn validate_reports() {
    let root = tempfile::tempdir().unwrap();
    let report = |args: &[&str]| -> Value {
        let o = ddw(args, root.path());
        assert!(o.status.success(), "{}", stderr(&o));
        serde_json::from_slice(&o.stdout).unwrap()
    };
    let clean = report(&["validate", "--task", "dissipate"]);
    assert_eq!(clean["warnings"], Value::Array(vec![]));
    assert_eq!(clean["notes"], Value::Array(vec![]));

    let strong = report(&["validate", "--task", "dissipate", "--damping", "1e-3", "--temperature", "1e-2"]);
    let warnings = strong["warnings"].as_array().unwrap();
    assert_eq!(warnings.len(), 1);
    assert!(warnings[0].as_str().unwrap().contains("quasienergy gap"));

    let cold = report(&["validate", "--task", "attractor", "--temperatures", "0,1e-4"]);
    assert!(cold["notes"][0].as_str().unwrap().contains("upward"));
    assert!(!root.path().join("attractor").exists());
}

#[test]
fn defaults_page_is_a_valid_config() {
    let root = tempfile::tempdir().unwrap();
    let o = ddw(&["defaults"], root.path());
    assert!(o.status.success());
    let cfg = root.path().join("defaults.toml");
    fs::write(&cfg, &o.stdout).unwrap();
    let v = ddw(&["validate", "-c", cfg.to_str().unwrap()], root.path());
    assert!(v.status.success(), "{}", stderr(&v));
}

#[test]
fn outputs_are_deterministic_and_carry_the_config_hash() {
    let root = tempfile::tempdir().unwrap();
    let a = root.path().join("a");
    let b = root.path().join("b");
    for dir in [&a, &b] {
        let o = ddw(&["tunnel", "--amplitude", "0.0145", "--samples", "101", "-o", dir.to_str().unwrap()], root.path());
        assert!(o.status.success(), "{}", stderr(&o));
    }
    let (ma, mb) = (manifest(&a), manifest(&b));
    assert_eq!(ma["config_hash"], mb["config_hash"]);
    assert_eq!(ma["artifacts"], mb["artifacts"]);
    let hash = ma["config_hash"].as_str().unwrap();
    for entry in ma["artifacts"].as_array().unwrap() {
        let name = entry["file"].as_str().unwrap();
        let (x, y) = (fs::read(a.join(name)).unwrap(), fs::read(b.join(name)).unwrap());
        assert_eq!(x, y, "{name} differs between runs");
        let text = String::from_utf8(x).unwrap();
        if name.ends_with(".csv") {
            let header = text.lines().next().unwrap();
            assert!(header.starts_with("# schema=") && header.contains(hash), "{header}");
        } else {
            let v: Value = serde_json::from_str(&text).unwrap();
            assert_eq!(v["config_hash"], hash);
        }
    }

    let tunnel: Value = serde_json::from_slice(&fs::read(a.join("tunnel.json")).unwrap()).unwrap();
    let p = &tunnel["partners"];
    assert_eq!([&p["even"]["index"], &p["odd"]["index"], &p["chaotic"]["index"]], [0, 1, 13]);
}

#[test]
fn output_root_from_environment_and_flag_overrides_file() {
    let root = tempfile::tempdir().unwrap();
    let cfg = root.path().join("classical.toml");
    fs::write(
        &cfg,
        "task = \"classical\"\n[system]\namplitude = 0.02\n[classical]\nnx = 3\nnp = 1\nperiods = 10\n",
    )
    .unwrap();
    let o = ddw(&["run", "-c", cfg.to_str().unwrap(), "--amplitude", "0.015029", "--threads", "2"], root.path());
    assert!(o.status.success(), "{}", stderr(&o));
    let dir = root.path().join("classical");
    let m = manifest(&dir);
    assert_eq!(m["config"]["system"]["amplitude"], 0.015029);
    assert_eq!(m["config"]["threads"], 2);
    assert!(m["created"].as_str().unwrap().contains('T'));
    let csv = fs::read_to_string(dir.join("portrait.csv")).unwrap();
    // Header comment, column names, 3 seeds × (1 + 10) points.
    assert_eq!(csv.lines().count(), 2 + 33);
    assert_eq!(csv.lines().nth(1), Some("seed_id,n,x,p"));
}
