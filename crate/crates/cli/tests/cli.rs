use std::f64::consts::PI;
use std::path::Path;
use std::process::{Command, Output};

fn warpnls(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_warpnls"))
        .current_dir(dir)
        .args(args)
        .output()
        .expect("binary runs")
}

fn stderr(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

#[test]
fn eps_outside_the_admissible_range_is_a_validation_error() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("run.cfg"), "solver.eps = 0.1\n").unwrap();
    let out = warpnls(dir.path(), &["--config", "run.cfg", "solve"]);
    assert_eq!(out.status.code(), Some(2), "{}", stderr(&out));
    assert!(stderr(&out).contains("(0, 1/16)"), "{}", stderr(&out));
}

#[test]
fn unknown_keys_and_missing_files_fail_with_distinct_codes() {
    let dir = tempfile::tempdir().unwrap();
    let out = warpnls(dir.path(), &["--set", "solver.epsilon=0.01", "describe"]);
    assert_eq!(out.status.code(), Some(2));
    let out = warpnls(dir.path(), &["--config", "missing.cfg", "describe"]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn substitution_suite_passes_and_writes_reports() {
    let dir = tempfile::tempdir().unwrap();
    let out = warpnls(dir.path(), &["--out", "o", "verify", "substitution"]);
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    let csv = std::fs::read_to_string(dir.path().join("o/verify_substitution.csv")).unwrap();
    let mut lines = csv.lines();
    let header: Vec<&str> = lines.next().unwrap().split(',').collect();
    let status = header.iter().position(|h| *h == "status").unwrap();
    let rows: Vec<&str> = lines.collect();
    assert!(!rows.is_empty());
    for row in rows {
        assert_eq!(row.split(',').nth(status), Some("pass"), "{row}");
    }
    let json: serde_json::Value = serde_json::from_str(
        &std::fs::read_to_string(dir.path().join("o/verify_substitution.json")).unwrap(),
    )
    .unwrap();
    assert_eq!(json["metadata"]["config_hash"].as_str().unwrap().len(), 64);
}

#[test]
fn plane_wave_solve_matches_the_closed_form() {
    let dir = tempfile::tempdir().unwrap();
    let config = "problem.dim = 2\nproblem.power = 3\nproblem.warp = cubic\n\
                  problem.datum = plane\nproblem.mode = 2,1\nproblem.amplitude = 0.7\n\
                  problem.radius = 3\nsolver.t_start = -1\nsolver.t_end = 1\nsolver.nodes = 11\n";
    std::fs::write(dir.path().join("run.cfg"), config).unwrap();
    let out = warpnls(dir.path(), &["--config", "run.cfg", "--out", "o", "solve"]);
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));

    let text = std::fs::read_to_string(dir.path().join("o/trajectory.txt")).unwrap();
    let rows: Vec<Vec<f64>> = text
        .lines()
        .filter(|l| !l.starts_with('#'))
        .map(|l| l.split_whitespace().map(|v| v.parse().unwrap()).collect())
        .collect();
    let last = rows.iter().map(|r| r[0]).fold(f64::MIN, f64::max);
    assert_eq!(last, 1.0);
    let slice: Vec<&Vec<f64>> = rows.iter().filter(|r| r[0] == last).collect();
    assert_eq!(slice.len(), 1, "a plane wave stays on one mode");
    let r = slice[0];
    assert_eq!((r[1], r[2]), (2.0, 1.0));

    // u = A e^{i(k·x - (|k|² + A²) t³/3)}; coefficients carry the torus volume.
    let (amp, t) = (0.7, 1.0);
    let phase = -(5.0 + amp * amp) * t * t * t / 3.0;
    let scale = amp * 4.0 * PI * PI;
    let error =
        ((r[3] - scale * phase.cos()).powi(2) + (r[4] - scale * phase.sin()).powi(2)).sqrt();
    assert!(error / scale < 1e-6, "relative error {}", error / scale);
}

#[test]
fn describe_is_deterministic_and_seed_changes_one_line() {
    let dir = tempfile::tempdir().unwrap();
    let a = warpnls(dir.path(), &["describe"]);
    let b = warpnls(dir.path(), &["describe"]);
    let c = warpnls(dir.path(), &["--seed", "7", "describe"]);
    assert_eq!(a.status.code(), Some(0), "{}", stderr(&a));
    assert_eq!(a.stdout, b.stdout);
    let (a, c) = (
        String::from_utf8(a.stdout).unwrap(),
        String::from_utf8(c.stdout).unwrap(),
    );
    let differing: Vec<(&str, &str)> = a.lines().zip(c.lines()).filter(|(x, y)| x != y).collect();
    assert_eq!(a.lines().count(), c.lines().count());
    assert_eq!(differing, vec![("seed = 20240601", "seed = 7")]);
}

#[test]
fn picard_solve_reports_iterations() {
    let dir = tempfile::tempdir().unwrap();
    let out = warpnls(
        dir.path(),
        &[
            "--out",
            "o",
            "--set",
            "solver.method=picard",
            "--set",
            "problem.amplitude=0.05",
            "--set",
            "solver.delta=0.05",
            "solve",
        ],
    );
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    let json: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("o/solve.json")).unwrap())
            .unwrap();
    assert_eq!(json["iterations"]["converged"], true);
    assert!(json["plane_wave_error"].as_f64().unwrap() < 1e-8);
}
