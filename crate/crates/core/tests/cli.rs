//! End-to-end tests of the `llb` binary: each subcommand on a small
//! problem, plus the output files it promises.

use std::process::Command;

fn llb() -> Command {
    Command::new(env!("CARGO_BIN_EXE_llb"))
}

#[test]
fn presets_lists_both_experiments() {
    let out = llb().arg("presets").output().unwrap();
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.contains("simulation1"));
    assert!(text.contains("simulation2"));
}

#[test]
fn check_passes() {
    let out = llb().arg("check").output().unwrap();
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(out.status.success(), "check failed:\n{text}");
    assert!(text.contains("PASS"));
    assert!(!text.contains("FAIL"));
}

#[test]
fn run_writes_energy_csv_and_vtk() {
    let dir = tempfile::tempdir().unwrap();
    let config = dir.path().join("run.cfg");
    std::fs::write(&config, "preset = simulation1\nvtk_stride = 5\n").unwrap();
    let out = llb()
        .args(["run", "--preset", "simulation1"])
        .args(["--n", "8", "--k", "1e-3", "--T", "1e-2"])
        .arg("--config")
        .arg(&config)
        .arg("--out")
        .arg(dir.path())
        .output()
        .unwrap();
    assert!(
        out.status.success(),
        "stderr: {}",
        String::from_utf8_lossy(&out.stderr)
    );

    let energy = dir.path().join("energy.csv");
    let text = std::fs::read_to_string(&energy).unwrap();
    let mut lines = text.lines();
    assert_eq!(
        lines.next().unwrap(),
        "step,t,E,E_modified,H_norm_sq,r,r_drift"
    );
    assert_eq!(lines.count(), 11); // initial state + 10 steps

    let vtk: Vec<_> = std::fs::read_dir(dir.path())
        .unwrap()
        .filter_map(|e| {
            let name = e.unwrap().file_name().into_string().unwrap();
            name.ends_with(".vtk").then_some(name)
        })
        .collect();
    assert!(!vtk.is_empty(), "expected VTK snapshots at stride 5");
}

#[test]
fn study_prints_rates_and_writes_csv() {
    let dir = tempfile::tempdir().unwrap();
    let out = llb()
        .args(["study", "--preset", "simulation1"])
        .args(["--n", "4", "--levels", "3", "--k", "1e-3", "--T", "2e-3"])
        .arg("--out")
        .arg(dir.path())
        .output()
        .unwrap();
    assert!(
        out.status.success(),
        "stderr: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.contains("rate_L2"), "missing rate table:\n{text}");

    let rates = std::fs::read_to_string(dir.path().join("rates.csv")).unwrap();
    assert!(rates.starts_with("coarse_n,h,k,err_l2,err_h1,err_linf"));
    assert_eq!(rates.lines().count(), 3); // header + 2 pairs
}

#[test]
fn bad_flags_are_rejected() {
    let out = llb()
        .args(["run", "--scheme", "rk4"])
        .output()
        .unwrap();
    assert!(!out.status.success());

    let out = llb().arg("frobnicate").output().unwrap();
    assert!(!out.status.success());
}
