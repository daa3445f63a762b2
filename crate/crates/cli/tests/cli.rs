use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use beam_soliton::Grid;
use beam_soliton_cli::ProfileSnapshot;
use tempfile::TempDir;

const BIN: &str = env!("CARGO_BIN_EXE_beam-soliton");

const SOLITON_CONFIG: &str = r#"
seed = 11
[minimize]
delta = [0.001]
initial_R = 22.3
initial_lambda = 6.0
[evolve]
epsilon = [0.0, 1e-3]
"#;

fn run(dir: &Path, args: &[&str]) -> (i32, String, String) {
    let Output { status, stdout, stderr } =
        Command::new(BIN).current_dir(dir).args(args).output().expect("binary runs");
    (status.code().expect("exited normally"), String::from_utf8(stdout).unwrap(), String::from_utf8(stderr).unwrap())
}

fn with_config(text: &str) -> (TempDir, PathBuf) {
    let dir = TempDir::new().unwrap();
    let path = dir.path().join("run.toml");
    fs::write(&path, text).unwrap();
    (dir, path)
}

/// Runs find-soliton at δ = 0.001 into `out` and returns the snapshot path.
fn soliton(dir: &Path, out: &str) -> PathBuf {
    let (code, stdout, stderr) = run(dir, &["--config", "run.toml", "--output", out, "find-soliton"]);
    assert_eq!(code, 0, "{stdout}{stderr}");
    dir.join(out).join("profile_delta_0.001.json")
}

#[test]
fn check_potential_exit_codes() {
    let (dir, _) = with_config("[potential]\nkind = \"bridge_piecewise\"\n");
    let (code, stdout, _) = run(dir.path(), &["check-potential"]);
    assert_eq!(code, 0);
    assert_eq!(stdout.matches("): pass").count(), 3, "{stdout}");
    let (code, stdout, _) = run(dir.path(), &["--config", "run.toml", "check-potential"]);
    assert_eq!(code, 0, "{stdout}");
    assert!(stdout.contains("eta = 0.5"), "{stdout}");
    assert!(dir.path().join("out/check_potential.txt").exists());

    fs::write(dir.path().join("q.toml"), "[potential]\nkind = \"custom\"\ncustom_form = \"quartic\"\n").unwrap();
    let (code, stdout, _) = run(dir.path(), &["--config", "q.toml", "check-potential"]);
    assert_eq!(code, 1);
    assert!(stdout.lines().any(|l| l.starts_with("hylomorphy") && l.contains("FAIL")), "{stdout}");

    fs::write(dir.path().join("bad.toml"), "[grid]\nhalf_length = 40.0\nn_points = \"many\"\n").unwrap();
    let (code, _, stderr) = run(dir.path(), &["--config", "bad.toml", "check-potential"]);
    assert_eq!(code, 2);
    assert!(stderr.contains("line 3"), "{stderr}");

    let (code, _, _) = run(dir.path(), &["no-such-command"]);
    assert_eq!(code, 2);
    let (code, _, stderr) = run(dir.path(), &["--config", "missing.toml", "check-potential"]);
    assert_eq!(code, 2, "{stderr}");
}

#[test]
fn lambda_bounds_summaries() {
    let (dir, _) = with_config("[scan]\nR = [0.01, 0.05, 0.1]\nlambda = [2.0, 8.0, 16.0]\n");
    let (code, stdout, _) = run(dir.path(), &["--config", "run.toml", "lambda-bounds"]);
    assert_eq!(code, 0);
    assert!(stdout.contains("no certificate at these parameters"), "{stdout}");
    let csv = fs::read_to_string(dir.path().join("out/lambda_bounds.csv")).unwrap();
    assert_eq!(csv.lines().next(), Some("R,lambda,ratio,lambda0_ratio,uu_ok"));
    assert_eq!(csv.lines().count(), 10);

    fs::write(dir.path().join("big.toml"), "[scan]\nlambda = [50.0]\n").unwrap();
    let (code, _, stderr) = run(dir.path(), &["--config", "big.toml", "lambda-bounds"]);
    assert_eq!(code, 2);
    assert!(stderr.contains("reduce lambda"), "{stderr}");

    fs::write(dir.path().join("good.toml"), "[scan]\nR = [50.0, 100.0, 200.0]\nlambda = [8.0, 9.0]\n").unwrap();
    let (code, stdout, _) = run(dir.path(), &["--config", "good.toml", "lambda-bounds"]);
    assert_eq!(code, 0);
    assert!(stdout.contains("best_ratio < 1: yes"), "{stdout}");
}

#[test]
fn find_soliton_is_reproducible_and_round_trips() {
    let (dir, _) = with_config(SOLITON_CONFIG);
    let a = soliton(dir.path(), "a");
    let b = soliton(dir.path(), "b");
    for name in ["profile_delta_0.001.json", "minimize_delta_0.001.csv", "find_soliton.csv", "find_soliton.txt"] {
        let x = fs::read(dir.path().join("a").join(name)).unwrap();
        let y = fs::read(dir.path().join("b").join(name)).unwrap();
        assert_eq!(x, y, "{name} differs between identical runs");
    }
    assert_eq!(a.parent().unwrap().join("profile_delta_0.001.json"), a);
    assert_ne!(a, b);

    let snap = ProfileSnapshot::load(&a).unwrap();
    assert_eq!(snap.delta, 0.001);
    assert!(snap.grad_norm <= 1e-8);
    let again = dir.path().join("again.json");
    snap.save(&again).unwrap();
    assert_eq!(fs::read(&a).unwrap(), fs::read(&again).unwrap());

    let history = fs::read_to_string(dir.path().join("a/minimize_delta_0.001.csv")).unwrap();
    assert_eq!(history.lines().next(), Some("iter,J,E,C,grad_norm,step"));
}

#[test]
fn sweep_reports_each_delta() {
    let (dir, _) = with_config(
        "[minimize]\ndelta = [0.001, 1000.0, 0.002]\nmax_iters = 2000\ninitial_R = 22.3\ninitial_lambda = 6.0\n",
    );
    let (code, stdout, stderr) = run(dir.path(), &["--config", "run.toml", "find-soliton"]);
    assert_eq!(code, 1, "{stdout}{stderr}");
    assert!(stdout.contains("delta = 1000: degenerate or non-convergent"), "{stdout}");
    assert!(stdout.contains("2 of 3 runs converged"), "{stdout}");
    let out = dir.path().join("out");
    assert!(out.join("profile_delta_0.001.json").exists());
    assert!(out.join("profile_delta_0.002.json").exists());
    assert!(!out.join("profile_delta_1000.json").exists());

    let sweep = fs::read_to_string(out.join("find_soliton.csv")).unwrap();
    let rows: Vec<&str> = sweep.lines().collect();
    assert_eq!(rows.len(), 4);
    assert!(rows[1].starts_with("0.001,converged,"));
    assert!(rows[2].starts_with("1000,"), "{}", rows[2]);
    assert_ne!(rows[2].split(',').nth(1), Some("converged"));
    let dist = fs::read_to_string(out.join("distinctness.csv")).unwrap();
    let gap: f64 = dist.lines().nth(1).unwrap().rsplit(',').next().unwrap().parse().unwrap();
    assert!(gap > 1e-6);
}

#[test]
fn evolve_transports_the_soliton() {
    let (dir, _) = with_config(SOLITON_CONFIG);
    let snap = soliton(dir.path(), "s");
    let snap = snap.to_str().unwrap();
    let (code, stdout, stderr) =
        run(dir.path(), &["--config", "run.toml", "--output", "e1", "evolve", "--snapshot", snap]);
    assert_eq!(code, 0, "{stdout}{stderr}");
    assert!(stdout.contains("transport certificate: pass"), "{stdout}");
    let (code, _, _) = run(dir.path(), &["--config", "run.toml", "--output", "e2", "evolve", "--snapshot", snap]);
    assert_eq!(code, 0);
    let csv = fs::read(dir.path().join("e1/evolve.csv")).unwrap();
    assert_eq!(csv, fs::read(dir.path().join("e2/evolve.csv")).unwrap());
    assert!(String::from_utf8(csv).unwrap().starts_with("t,E,C,xi,shape_err,orbit_dist,V\n"));
}

#[test]
fn zero_snapshot_has_zero_diagnostics() {
    let (dir, _) = with_config("[evolve]\nt_final = 1.0\nsample_stride = 50\n");
    let grid = Grid::new(40.0, 1024).unwrap();
    let path = dir.path().join("zero.json");
    ProfileSnapshot::zero(&grid, 0.1).save(&path).unwrap();
    let (code, stdout, stderr) =
        run(dir.path(), &["--config", "run.toml", "evolve", "--snapshot", path.to_str().unwrap()]);
    assert_eq!(code, 0, "{stdout}{stderr}");
    let csv = fs::read_to_string(dir.path().join("out/evolve.csv")).unwrap();
    let mut rows = 0;
    for line in csv.lines().skip(1) {
        let cols: Vec<f64> = line.split(',').map(|c| c.parse().unwrap()).collect();
        assert!(cols[1..].iter().all(|&x| x == 0.0), "{line}");
        rows += 1;
    }
    assert!(rows > 2);
}

#[test]
fn bad_snapshots_are_load_errors() {
    let (dir, _) = with_config("[grid]\nn_points = 512\n");
    let grid = Grid::new(40.0, 1024).unwrap();
    let mut snap = ProfileSnapshot::zero(&grid, 0.1);
    snap.u[3] = 1e-3;
    let good = dir.path().join("good.json");
    snap.save(&good).unwrap();

    let text = fs::read_to_string(&good).unwrap();
    let corrupt = dir.path().join("corrupt.json");
    let idx = text.find("\"u\": \"").unwrap() + 6;
    let mut bytes = text.into_bytes();
    bytes[idx] = if bytes[idx] == b'0' { b'1' } else { b'0' };
    fs::write(&corrupt, bytes).unwrap();
    let (code, _, stderr) = run(dir.path(), &["evolve", "--snapshot", corrupt.to_str().unwrap()]);
    assert_eq!(code, 2);
    assert!(stderr.contains("checksum mismatch"), "{stderr}");

    let (code, _, stderr) = run(dir.path(), &["--config", "run.toml", "evolve", "--snapshot", good.to_str().unwrap()]);
    assert_eq!(code, 2);
    assert!(stderr.contains("does not match the configured grid"), "{stderr}");

    let (code, _, _) = run(dir.path(), &["evolve", "--snapshot", "nowhere.json"]);
    assert_eq!(code, 2);
    let (code, _, _) = run(dir.path(), &["evolve"]);
    assert_eq!(code, 2);
}

#[test]
fn stability_table_and_seed_override() {
    let (dir, _) = with_config(SOLITON_CONFIG);
    let snap = soliton(dir.path(), "s");
    let snap = snap.to_str().unwrap();
    let (code, stdout, stderr) =
        run(dir.path(), &["--config", "run.toml", "--output", "a", "stability", "--snapshot", snap]);
    assert_eq!(code, 0, "{stdout}{stderr}");
    assert!(stdout.contains("transport-only baseline"), "{stdout}");
    let table = fs::read_to_string(dir.path().join("a/stability.csv")).unwrap();
    let rows: Vec<&str> = table.lines().collect();
    assert_eq!(rows[0], "epsilon,sup_orbit_distance,ratio,liapunov_spread,verdict");
    assert!(rows[1].starts_with("0,") && rows[1].contains(",baseline,"), "{}", rows[1]);
    let ratio: f64 = rows[2].split(',').nth(2).unwrap().parse().unwrap();
    assert!(ratio <= 5.0, "{ratio}");

    run(dir.path(), &["--config", "run.toml", "--output", "b", "stability", "--snapshot", snap]);
    run(dir.path(), &["--config", "run.toml", "--output", "c", "--seed", "12", "stability", "--snapshot", snap]);
    let read = |d: &str| fs::read(dir.path().join(d).join("stability_eps_0.001.csv")).unwrap();
    assert_eq!(read("a"), read("b"));
    assert_ne!(read("a"), read("c"));

    fs::write(dir.path().join("none.toml"), "[evolve]\nepsilon = []\n").unwrap();
    let (code, _, _) = run(dir.path(), &["--config", "none.toml", "stability", "--snapshot", snap]);
    assert_eq!(code, 2);
}

#[test]
fn large_perturbations_are_flagged_not_failed() {
    let (dir, _) = with_config(&SOLITON_CONFIG.replace("epsilon = [0.0, 1e-3]", "epsilon = [0.5]"));
    let snap = soliton(dir.path(), "s");
    let (code, stdout, stderr) =
        run(dir.path(), &["--config", "run.toml", "stability", "--snapshot", snap.to_str().unwrap()]);
    assert_eq!(code, 0, "{stdout}{stderr}");
    assert!(stdout.contains("outside_small_perturbation_regime"), "{stdout}");
}
