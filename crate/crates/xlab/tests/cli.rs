use std::path::Path;
use std::process::Command;

fn dysonlab(args: &[&str], out: &Path) -> std::process::Output {
    Command::new(env!("CARGO_BIN_EXE_dysonlab"))
        .args(args)
        .arg("--out")
        .arg(out)
        .output()
        .expect("binary runs")
}

const SMALL_T1: &[&str] = &[
    "t1-scaling", "--size", "32", "--radius", "4", "--tgrid", "1,2", "--trials", "3", "--quad-h", "1", "--quad-nodes", "12",
];

#[test]
fn identical_specs_give_identical_csv_bytes() {
    let dir = tempfile::tempdir().unwrap();
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    for out in [&a, &b] {
        let run = dysonlab(SMALL_T1, out);
        assert!(run.status.code().is_some(), "{}", String::from_utf8_lossy(&run.stderr));
    }
    let first = std::fs::read(a.join("t1_scaling.csv")).unwrap();
    assert_eq!(first, std::fs::read(b.join("t1_scaling.csv")).unwrap());
    let text = String::from_utf8(first).unwrap();
    assert!(text.starts_with("trial,t,norm_T1,norm_V_inf\n"));
    assert_eq!(text.lines().count(), 1 + 3 * 2);
}

#[test]
fn different_seeds_change_the_payload() {
    let dir = tempfile::tempdir().unwrap();
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    dysonlab(SMALL_T1, &a);
    let mut args = SMALL_T1.to_vec();
    args.extend(["--seed", "7"]);
    dysonlab(&args, &b);
    assert_ne!(
        std::fs::read(a.join("t1_scaling.csv")).unwrap(),
        std::fs::read(b.join("t1_scaling.csv")).unwrap()
    );
}

#[test]
fn injected_nan_exhausts_the_failure_budget() {
    let dir = tempfile::tempdir().unwrap();
    let mut args = SMALL_T1.to_vec();
    args.push("--inject-nan");
    let run = dysonlab(&args, dir.path());
    assert_eq!(run.status.code(), Some(1));
    let manifest: serde_json::Value =
        serde_json::from_slice(&std::fs::read(dir.path().join("manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest["failures"].as_array().unwrap().len(), 1);
    // The two healthy trials still emit their rows.
    let csv = std::fs::read_to_string(dir.path().join("t1_scaling.csv")).unwrap();
    assert_eq!(csv.lines().count(), 1 + 2 * 2);

    let mut tolerant = args.clone();
    tolerant.extend(["--failure-budget", "1"]);
    let out = dir.path().join("tolerant");
    dysonlab(&tolerant, &out);
    let manifest: serde_json::Value =
        serde_json::from_slice(&std::fs::read(out.join("manifest.json")).unwrap()).unwrap();
    let checks = manifest["checks"].as_array().unwrap();
    assert!(checks.iter().all(|c| c["name"] != "failure_budget"));
}

#[test]
fn invalid_specs_exit_with_a_usage_error() {
    let dir = tempfile::tempdir().unwrap();
    let run = dysonlab(&["floquet-localization", "--dim", "1"], dir.path());
    assert_eq!(run.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&run.stderr).contains("dim = 2"));
}

#[test]
fn manifest_echoes_spec_and_libraries() {
    let dir = tempfile::tempdir().unwrap();
    let run = dysonlab(&["oracle-selftest"], dir.path());
    assert_eq!(run.status.code(), Some(0), "{}", String::from_utf8_lossy(&run.stderr));
    let manifest: serde_json::Value =
        serde_json::from_slice(&std::fs::read(dir.path().join("manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest["spec"]["mode"], "oracle-selftest");
    assert!(manifest["libraries"].is_object() || manifest["libraries"].is_array());
    assert!(manifest["version"].as_str().unwrap().starts_with("dysonlab-xlab"));
}

#[test]
fn tau_sets_the_drive_frequency() {
    let dir = tempfile::tempdir().unwrap();
    let run = dysonlab(&["oracle-selftest", "--tau", "6.283185307179586"], dir.path());
    assert_eq!(run.status.code(), Some(0));
    let manifest: serde_json::Value =
        serde_json::from_slice(&std::fs::read(dir.path().join("manifest.json")).unwrap()).unwrap();
    assert!((manifest["spec"]["omega"].as_f64().unwrap() - 1.0).abs() < 1e-15);
}
