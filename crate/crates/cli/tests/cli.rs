use std::path::Path;
use std::process::Command;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_trimshell"))
}

fn write_config(dir: &Path, extra: &str) -> std::path::PathBuf {
    let path = dir.join("run.cfg");
    let text = format!(
        "# small smoke problem\nexample.id = plate_trimmed\ndisc.p = 2\ndisc.elements = 6\ntime.t1 = 1.0\nout.dir = {}\n{extra}",
        dir.join("out").display()
    );
    std::fs::write(&path, text).unwrap();
    path
}

#[test]
fn run_writes_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "out.vtk_n = 8\n");
    let out = bin().arg("run").arg(&cfg).output().unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let errors = std::fs::read_to_string(dir.path().join("out/errors.csv")).unwrap();
    assert!(errors.starts_with("t,l2_u,linf_u,l2_theta,linf_theta\n"));
    assert!(dir.path().join("out/summary.csv").exists());
    assert!(dir.path().join("out/config.resolved").exists());
    let vtk = std::fs::read_to_string(dir.path().join("out/snapshot_0.vtk")).unwrap();
    assert!(vtk.starts_with("# vtk DataFile Version"));
}

#[test]
fn sweep_records_failures_per_row() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "");
    let out = bin()
        .args(["sweep"])
        .arg(&cfg)
        .args(["--axis", "p", "--values", "2,0", "--kinds", "lumped,stabilized_lumped"])
        .output()
        .unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let csv = std::fs::read_to_string(dir.path().join("out/sweep.csv")).unwrap();
    let lines: Vec<&str> = csv.lines().collect();
    assert_eq!(lines[0], "disc.p,mass_kind,status,l2_u,linf_u,l2_theta,linf_theta,dt_crit,omega_max_sq,min_eig");
    assert_eq!(lines.len(), 5);
    assert!(lines[1].starts_with("2,lumped,ok,"));
    assert!(lines[3].starts_with("0,lumped,") && !lines[3].contains(",ok,"));
}

#[test]
fn spectrum_and_convergence() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "spec.min_eigs = 2\n");
    let out = bin().arg("spectrum").arg(&cfg).output().unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let csv = std::fs::read_to_string(dir.path().join("out/spectrum.csv")).unwrap();
    assert!(csv.starts_with("mass_kind,omega_max_sq,dt_crit,"));
    assert_eq!(csv.lines().count(), 5);

    let cfg = write_config(dir.path(), "trim.fitted = true\nmass.kind = consistent\n");
    let out = bin().arg("convergence").arg(&cfg).args(["--levels", "2"]).output().unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    assert_eq!(String::from_utf8_lossy(&out.stdout).lines().count(), 3);
}

#[test]
fn bad_input_exits_nonzero() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "no.such_key = 1\n");
    let out = bin().arg("run").arg(&cfg).output().unwrap();
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("no.such_key"));

    let out = bin().arg("run").arg(dir.path().join("missing.cfg")).output().unwrap();
    assert!(!out.status.success());
}

#[test]
fn shipped_configs_parse() {
    let dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs");
    let mut n = 0;
    for entry in std::fs::read_dir(dir).unwrap() {
        let path = entry.unwrap().path();
        let cfg = trimshell::harness::ExperimentConfig::from_file(&path).unwrap();
        cfg.validate().unwrap_or_else(|e| panic!("{}: {e}", path.display()));
        n += 1;
    }
    assert_eq!(n, 4);
}
