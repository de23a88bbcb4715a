//! End-to-end checks of the command-line interface: scenario loading errors,
//! exit codes, report files and CSV layout.

use std::path::Path;
use std::process::Command;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_nucheck"))
}

/// A deliberately small scenario so CLI round trips stay fast.
fn tiny_scenario(dir: &Path) -> std::path::PathBuf {
    let path = dir.join("tiny.toml");
    std::fs::write(
        &path,
        r#"
r = 1.2
e_max = 4.0

[grid]
n = 8
pmax = 4.0

[family]
m = 4

[refine]
grid_ns = [8]

[corr]
eig_count = 2
fit_lo = 1.0
fit_hi = 2.8
n_radii = 4
"#,
    )
    .unwrap();
    path
}

#[test]
fn shipped_scenarios_load() {
    let root = Path::new(env!("CARGO_MANIFEST_DIR")).join("../..");
    let default = nucheck::scenario::Scenario::load(&root.join("scenarios/default.toml")).unwrap();
    assert_eq!(default.grid.n, nucheck::scenario::Scenario::default().grid.n);
    let wide = nucheck::scenario::Scenario::load(&root.join("scenarios/wide.toml")).unwrap();
    let builtin = nucheck::scenario::Scenario::wide();
    assert_eq!(wide.r, builtin.r);
    assert_eq!(wide.grid.pmax, builtin.grid.pmax);
    assert_eq!(wide.configs.len(), builtin.configs.len());
}

#[test]
fn spectrum_runs_and_writes_report() {
    let dir = tempfile::tempdir().unwrap();
    let scenario = tiny_scenario(dir.path());
    let out = dir.path().join("out");
    let status = bin()
        .args(["spectrum", "--scenario"])
        .arg(&scenario)
        .arg("--out")
        .arg(&out)
        .status()
        .unwrap();
    assert!(status.success(), "spectrum exited with {status:?}");
    let report: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(out.join("spectrum.json")).unwrap())
            .unwrap();
    assert_eq!(report["schema_version"], 1);
    assert_eq!(report["command"], "spectrum");
    assert_eq!(report["pass"], true);
    assert!(report["data"]["eigenvalues"].as_array().unwrap().len() > 1);
}

#[test]
fn unknown_scenario_keys_fail_loading() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("typo.toml");
    std::fs::write(&path, "grids = { n = 8 }").unwrap();
    let output = bin()
        .args(["spectrum", "--scenario"])
        .arg(&path)
        .output()
        .unwrap();
    assert_eq!(output.status.code(), Some(1));
    let stderr = String::from_utf8_lossy(&output.stderr);
    assert!(stderr.contains("scenario parse"), "stderr: {stderr}");
}

#[test]
fn gamma_boundary_fails_loading() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("gamma.toml");
    std::fs::write(&path, "gamma = 1.0").unwrap();
    let output = bin()
        .args(["spectrum", "--scenario"])
        .arg(&path)
        .output()
        .unwrap();
    assert_eq!(output.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&output.stderr).contains("gamma"));
}

#[test]
fn two_dimensional_scenario_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("s2.toml");
    std::fs::write(&path, "s = 2\ngamma = 0.5\nconfigs = []").unwrap();
    let output = bin()
        .args(["nuclearity", "--scenario"])
        .arg(&path)
        .output()
        .unwrap();
    assert_eq!(output.status.code(), Some(1));
    let stderr = String::from_utf8_lossy(&output.stderr);
    assert!(stderr.contains("infrared"), "stderr: {stderr}");
}

#[test]
fn failed_positivity_certificate_exits_with_code_two() {
    // an energy ball reaching the far momentum corners drives the smearing
    // transform below the certificate threshold
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("cert.toml");
    std::fs::write(
        &path,
        "r = 1.0\ne_max = 200.0\n\n[grid]\nn = 32\npmax = 50.0\n\n[family]\nm = 3\n\n[refine]\ngrid_ns = [32]\n",
    )
    .unwrap();
    let output = bin()
        .args(["spectrum", "--scenario"])
        .arg(&path)
        .output()
        .unwrap();
    assert_eq!(output.status.code(), Some(2));
    let stderr = String::from_utf8_lossy(&output.stderr);
    assert!(stderr.contains("certificate"), "stderr: {stderr}");
}

#[test]
fn corr_scan_csv_has_fixed_columns() {
    let dir = tempfile::tempdir().unwrap();
    let scenario = {
        // a grid whose wrap limit leaves room beyond 4r for the support scan
        let path = dir.path().join("scan.toml");
        std::fs::write(
            &path,
            r#"
r = 0.5
e_max = 4.0

[grid]
n = 12
pmax = 4.0

[family]
m = 3

[refine]
grid_ns = [12]

[corr]
eig_count = 1
fit_lo = 1.0
fit_hi = 4.2
n_radii = 5
support_samples = 60
"#,
        )
        .unwrap();
        path
    };
    let out = dir.path().join("out");
    let status = bin()
        .args(["corr-scan", "--eig", "0", "--sign", "plus", "--scenario"])
        .arg(&scenario)
        .arg("--out")
        .arg(&out)
        .status()
        .unwrap();
    assert!(status.success(), "corr-scan exited with {status:?}");
    let csv = std::fs::read_to_string(out.join("corr_scan.csv")).unwrap();
    let header = csv.lines().next().unwrap();
    assert_eq!(header, "x0,x1,x2,x3,re,im,modulus,bound,margin");
    assert!(csv.lines().count() > 5);
}
