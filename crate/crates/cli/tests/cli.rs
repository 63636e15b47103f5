use pinch_core::config::{Algorithm, Placement};
use pinch_core::experiment;
use std::path::Path;
use std::process::{Command, Output};

fn pinch(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_pinch"))
        .args(args)
        .env_remove("PASS_SEED")
        .env_remove("PASS_OUT_DIR")
        .output()
        .expect("binary runs")
}

/// One PA, one user: every algorithm finishes in well under a second.
fn write_small_config(dir: &Path) -> String {
    write_config(dir, Placement::Explicit)
}

fn write_config(dir: &Path, placement: Placement) -> String {
    let mut cfg = experiment::tiny_continuous_config(7, 0);
    cfg.users.placement = placement;
    cfg.drops = 2;
    cfg.algorithms = vec![Algorithm::Continuous, Algorithm::ConventionalMimo];
    let path = dir.join("small.toml");
    std::fs::write(&path, cfg.to_toml_string()).unwrap();
    path.to_str().unwrap().to_string()
}

#[test]
fn run_prints_both_tables() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_small_config(dir.path());
    let out = pinch(&["run", "--config", &cfg]);
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.starts_with(&experiment::RUN_COLUMNS.join(",")));
    assert!(text.contains(&experiment::SUMMARY_COLUMNS.join(",")));
    assert!(text.contains(",continuous,converged,true,"));
}

#[test]
fn sweep_output_is_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_small_config(dir.path());
    let mut tables = Vec::new();
    for sub in ["a", "b"] {
        let out_dir = dir.path().join(sub);
        let out = pinch(&[
            "sweep",
            "--config",
            &cfg,
            "--axis",
            "speed",
            "--values",
            "0.5,1",
            "--seed",
            "3",
            "--out",
            out_dir.to_str().unwrap(),
        ]);
        assert!(
            out.status.success(),
            "{}",
            String::from_utf8_lossy(&out.stderr)
        );
        tables.push((
            std::fs::read(out_dir.join("runs.csv")).unwrap(),
            std::fs::read(out_dir.join("summary.csv")).unwrap(),
        ));
    }
    assert_eq!(tables[0], tables[1]);
    let runs = String::from_utf8(tables[0].0.clone()).unwrap();
    // Two values, two drops, two algorithms, plus the header.
    assert_eq!(runs.lines().count(), 9);
}

#[test]
fn records_survive_an_audit() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_small_config(dir.path());
    let out = pinch(&[
        "sweep",
        "--config",
        &cfg,
        "--axis",
        "motion-power",
        "--values",
        "0.05",
        "--format",
        "records",
        "--out",
        dir.path().to_str().unwrap(),
    ]);
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let records = dir.path().join("records.toml");
    let out = pinch(&[
        "audit",
        "--config",
        &cfg,
        "--design",
        records.to_str().unwrap(),
    ]);
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stdout)
    );
    let text = String::from_utf8(out.stdout).unwrap();
    assert_eq!(text.lines().filter(|l| l.ends_with(",true")).count(), 4);
}

#[test]
fn tampered_design_fails_the_audit() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_small_config(dir.path());
    let out = pinch(&[
        "run",
        "--config",
        &cfg,
        "--algo",
        "continuous",
        "--format",
        "records",
    ]);
    assert!(out.status.success());
    let mut records = experiment::parse_records(&String::from_utf8(out.stdout).unwrap()).unwrap();
    let design = records[0].design.as_mut().unwrap();
    for row in &mut design.beamformer {
        for w in row {
            w[0] *= 0.5;
            w[1] *= 0.5;
        }
    }
    let path = dir.path().join("tampered.toml");
    std::fs::write(&path, experiment::records_toml(&records)).unwrap();
    let out = pinch(&[
        "audit",
        "--config",
        &cfg,
        "--design",
        path.to_str().unwrap(),
    ]);
    assert!(!out.status.success());
}

#[test]
fn environment_sets_seed_and_output() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), Placement::Uniform);
    let run = |seed: &str, sub: &str| {
        let out = Command::new(env!("CARGO_BIN_EXE_pinch"))
            .args([
                "sweep",
                "--config",
                &cfg,
                "--axis",
                "speed",
                "--values",
                "1",
                "--algo",
                "conventional-mimo",
            ])
            .env("PASS_SEED", seed)
            .env("PASS_OUT_DIR", dir.path().join(sub))
            .output()
            .unwrap();
        assert!(out.status.success());
        std::fs::read_to_string(dir.path().join(sub).join("runs.csv")).unwrap()
    };
    assert_eq!(run("1", "x"), run("1", "y"));
    assert_ne!(run("1", "x"), run("2", "z"));
}

#[test]
fn invalid_input_exits_nonzero() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.toml");
    std::fs::write(&bad, "drops = 0\n").unwrap();
    assert!(!pinch(&["run", "--config", bad.to_str().unwrap()])
        .status
        .success());
    assert!(!pinch(&["run", "--config", "/nonexistent/config.toml"])
        .status
        .success());
    assert!(!pinch(&["run", "--algo", "simplex"]).status.success());
    assert!(
        !pinch(&["sweep", "--axis", "grid-density", "--values", "2.5"])
            .status
            .success()
    );
}
