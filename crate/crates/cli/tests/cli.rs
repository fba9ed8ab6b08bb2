use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn bin() -> Command {
    let mut c = Command::new(env!("CARGO_BIN_EXE_freefall"));
    c.env_remove("RUST_LOG");
    c
}

fn config(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("../../configs")
        .join(name)
}

fn run(cfg: &Path, out: &Path, extra: &[&str]) -> Output {
    bin()
        .arg("run")
        .arg(cfg)
        .arg("--out-dir")
        .arg(out)
        .args(extra)
        .output()
        .unwrap()
}

fn summary(out: &Path, prefix: &str) -> serde_json::Value {
    let text = std::fs::read_to_string(out.join(format!("{prefix}_summary.json"))).unwrap();
    serde_json::from_str(&text).unwrap()
}

#[test]
fn ep_a_cat_passes() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(&config("ep-a-cat.toml"), dir.path(), &[]);
    assert_eq!(
        out.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let s = summary(dir.path(), "ep-a");
    assert_eq!(s["passed"], true);
    assert!(s["results"]["max_density_mismatch"].as_f64().unwrap() < 1e-10);

    let csv = std::fs::read_to_string(dir.path().join("ep-a_density.csv")).unwrap();
    let mut lines = csv.lines();
    assert_eq!(
        lines.next().unwrap(),
        "x,rho_free_shifted,rho_gravity,abs_diff"
    );
    assert_eq!(lines.count(), 1024);
}

#[test]
fn qubit_phase_si_reports_u() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(&config("qubit-phase-si.toml"), dir.path(), &[]);
    assert_eq!(out.status.code(), Some(0));
    let s = summary(dir.path(), "qubit-phase");
    // first height is 1 m; the 100 m row is last
    let rows = s["results"]["heights"].as_array().unwrap();
    let u100 = rows[2]["u"].as_f64().unwrap();
    let expect = 2.0 / 3.0 * 9.81 * 100.0 / (2.99792458e8f64).powi(2);
    assert!(((u100 - expect) / expect).abs() < 1e-14);
    assert_eq!(rows[2]["u_2sf"].as_f64().unwrap(), 7.3e-15);
}

#[test]
fn si_flag_overrides_units() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(&config("cat-phase.toml"), dir.path(), &["--si"]);
    assert_eq!(out.status.code(), Some(0));
    let s = summary(dir.path(), "cat-phase");
    assert_eq!(s["config"]["units"], "si");
    assert!(s["results"]["u"].as_f64().unwrap() < 1e-16);
}

#[test]
fn malformed_config_exits_2() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("bad.toml");
    let text = std::fs::read_to_string(config("ep-a-cat.toml"))
        .unwrap()
        .replace("t = 2.0", "tee = 2.0");
    std::fs::write(&path, text).unwrap();
    let out = run(&path, dir.path(), &[]);
    assert_eq!(out.status.code(), Some(2));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("tee"), "{err}");
    assert!(err.contains("line"), "{err}");

    std::fs::write(
        &path,
        "scenario = \"ep-a\"\n[grid]\nx_min = 0.0\nx_max = 1.0\nn = 100\n",
    )
    .unwrap();
    let out = bin().arg("validate").arg(&path).output().unwrap();
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn guard_trip_exits_3() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("misaligned.toml");
    let text = std::fs::read_to_string(config("ep-a-cat.toml"))
        .unwrap()
        .replace("g = 1.171875", "g = 1.17");
    std::fs::write(&path, text).unwrap();
    let out = run(&path, dir.path(), &[]);
    assert_eq!(out.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&out.stderr).contains("[grid-alignment]"));
}

#[test]
fn ep_violation_exits_1() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(&config("ep-b-violation.toml"), dir.path(), &[]);
    assert_eq!(out.status.code(), Some(1));
    assert_eq!(summary(dir.path(), "ep-b-violation")["passed"], false);
}

#[test]
fn repeated_runs_are_byte_identical() {
    for (cfg, files) in [
        (
            "dephase.toml",
            vec!["dephase_gamma.csv", "dephase_summary.json"],
        ),
        (
            "evolve.toml",
            vec![
                "evolve_density.csv",
                "evolve_moments.csv",
                "evolve_summary.json",
            ],
        ),
    ] {
        let a = tempfile::tempdir().unwrap();
        let b = tempfile::tempdir().unwrap();
        assert_eq!(
            run(&config(cfg), a.path(), &["--threads", "1"])
                .status
                .code(),
            Some(0)
        );
        assert_eq!(
            run(&config(cfg), b.path(), &["--threads", "4"])
                .status
                .code(),
            Some(0)
        );
        for f in files {
            let x = std::fs::read(a.path().join(f)).unwrap();
            let y = std::fs::read(b.path().join(f)).unwrap();
            assert!(x == y, "{f} differs");
        }
    }
}

#[test]
fn dephase_columns() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(
        run(&config("dephase.toml"), dir.path(), &[]).status.code(),
        Some(0)
    );
    let mut rdr = csv::Reader::from_path(dir.path().join("dephase_gamma.csv")).unwrap();
    let header: Vec<String> = rdr.headers().unwrap().iter().map(String::from).collect();
    assert_eq!(
        header,
        [
            "t",
            "delta_x",
            "re_gamma",
            "im_gamma",
            "abs_gamma",
            "gaussian_approx"
        ]
    );
    let rows: Vec<csv::StringRecord> = rdr.records().map(|r| r.unwrap()).collect();
    assert_eq!(rows.len(), 3 * 201);
    // Γ(0) = 1 and every entry is written with 17 significant digits
    assert_eq!(&rows[0][4], "1.0000000000000000e0");
    for v in rows[0].iter() {
        assert_eq!(
            v.split('e').next().unwrap().trim_start_matches('-').len(),
            18
        );
    }
}

#[test]
fn every_bundled_config_validates() {
    let dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs");
    let mut n = 0;
    for entry in std::fs::read_dir(dir).unwrap() {
        let path = entry.unwrap().path();
        if path.extension().is_some_and(|e| e == "toml") {
            let out = bin().arg("validate").arg(&path).output().unwrap();
            assert_eq!(out.status.code(), Some(0), "{}", path.display());
            n += 1;
        }
    }
    assert!(n >= 9);
}

#[test]
fn scenario_runs_pass() {
    for (cfg, prefix) in [
        ("echo.toml", "echo"),
        ("wigner.toml", "wigner"),
        ("ep-b.toml", "ep-b"),
    ] {
        let dir = tempfile::tempdir().unwrap();
        let out = run(&config(cfg), dir.path(), &[]);
        assert_eq!(
            out.status.code(),
            Some(0),
            "{cfg}: {}",
            String::from_utf8_lossy(&out.stdout)
        );
        assert_eq!(summary(dir.path(), prefix)["passed"], true);
    }
}

#[test]
fn list_scenarios() {
    let out = bin().arg("list-scenarios").output().unwrap();
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    for s in [
        "ep-a",
        "ep-b",
        "dephase",
        "echo",
        "qubit-phase",
        "wigner",
        "evolve",
    ] {
        assert!(text.lines().any(|l| l.starts_with(s)), "{s}");
    }
}
