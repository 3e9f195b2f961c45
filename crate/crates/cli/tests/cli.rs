use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use twostate_cli::table::Table;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_twostate"))
}

fn scenario(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("scenarios").join(format!("{name}.toml"))
}

fn run_text(dir: &Path, text: &str) -> (Output, PathBuf) {
    let cfg = dir.join("cfg.toml");
    let out = dir.join("out.csv");
    std::fs::write(&cfg, text).unwrap();
    let o = bin().args(["run", "--config"]).arg(&cfg).arg("--out").arg(&out).output().unwrap();
    (o, out)
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

/// Rows of a CSV as floats, skipping the header; empty fields become NaN.
fn rows(path: &Path) -> (Vec<String>, Vec<Vec<f64>>) {
    let text = std::fs::read_to_string(path).unwrap();
    let mut lines = text.lines();
    let header = lines.next().unwrap().split(',').map(str::to_string).collect();
    let body = lines.map(|l| l.split(',').map(|f| f.parse().unwrap_or(f64::NAN)).collect()).collect();
    (header, body)
}

fn col(header: &[String], name: &str) -> usize {
    header.iter().position(|h| h == name).unwrap()
}

const EXACT: &str = r#"
scenario = "spinbath_exact"
observable = "sigma_z"

[time]
t1 = 0.0
t2 = 1.0
samples = 11

[spinbath]
a = [0.6, 0.0]
b = [0.0, 0.8]
a_post = [0.8, 0.0]
b_post = [0.6, 0.0]
g = [0.7, 1.1, 1.9, 2.6]
alpha = [[0.6, 0.0], [0.8, 0.0], [0.28, 0.0], [0.0, 1.0]]
beta = [[0.8, 0.0], [0.0, 0.6], [0.96, 0.0], [0.0, 0.0]]
alpha_post = [[1.0, 0.0], [0.6, 0.0], [0.8, 0.0], [0.6, 0.0]]
beta_post = [[0.0, 0.0], [0.8, 0.0], [0.0, -0.6], [0.8, 0.0]]
"#;

#[test]
fn generic_four_spin_bath_recoheres() {
    let dir = tempfile::tempdir().unwrap();
    let (o, out) = run_text(dir.path(), EXACT);
    assert!(o.status.success(), "{}", stderr(&o));
    let (h, body) = rows(&out);
    let (s1, s2) = (col(&h, "sv1"), col(&h, "sv2"));
    let ratio: Vec<f64> = body.iter().map(|r| r[s2] / r[s1]).collect();
    assert!(ratio[0] < 1e-9 && ratio[ratio.len() - 1] < 1e-9);
    assert!(ratio.iter().any(|r| *r > 1e-3));
    let stdout = String::from_utf8_lossy(&o.stdout);
    assert!(stdout.contains("boundary schmidt rank") && stdout.contains("max a-independence"));
}

#[test]
fn uncoupled_bath_stays_generic() {
    let dir = tempfile::tempdir().unwrap();
    let (o, out) = run_text(dir.path(), &EXACT.replace("g = [0.7, 1.1, 1.9, 2.6]", "g = [0.0, 0.0, 0.0, 0.0]"));
    assert!(o.status.success(), "{}", stderr(&o));
    let (h, body) = rows(&out);
    let (s1, s2) = (col(&h, "sv1"), col(&h, "sv2"));
    assert!(body.iter().all(|r| r[s2] / r[s1] < 1e-9));
}

#[test]
fn burst_coherence_stays_within_bound() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("burst.csv");
    let o = bin().args(["run", "--config"]).arg(scenario("burst")).arg("--out").arg(&out).output().unwrap();
    assert!(o.status.success(), "{}", stderr(&o));
    let (h, body) = rows(&out);
    let c = col(&h, "coh_mag");
    // 4 bursts over 20 intervals: boundaries every 5 rows, λτ = 0.02
    let bound = 5.0 * 0.02f64.powi(2);
    for k in (0..body.len()).step_by(5) {
        assert!((body[k][c] - body[0][c]).abs() <= bound);
    }
}

#[test]
fn column_count_fixed_and_header_present() {
    let dir = tempfile::tempdir().unwrap();
    for (name, cols) in [("spinbath_exact", 14), ("spinbath_env_post", 22), ("perturbative_spin", 14), ("burst", 14)] {
        let out = dir.path().join(format!("{name}.csv"));
        let o = bin().args(["run", "--config"]).arg(scenario(name)).arg("--out").arg(&out).output().unwrap();
        assert!(o.status.success(), "{name}: {}", stderr(&o));
        let text = std::fs::read_to_string(&out).unwrap();
        assert!(text.starts_with("t,"));
        assert!(!text.contains('\r'));
        for line in text.lines() {
            assert_eq!(line.split(',').count(), cols, "{name}: {line}");
        }
    }
}

#[test]
fn csv_floats_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("p.csv");
    let o = bin().args(["run", "--config"]).arg(scenario("perturbative_spin")).arg("--out").arg(&out).output().unwrap();
    assert!(o.status.success());
    let text = std::fs::read_to_string(&out).unwrap();
    let field = text.lines().nth(3).unwrap().split(',').nth(4).unwrap();
    let v: f64 = field.parse().unwrap();
    assert_eq!(format!("{v:.16e}"), field);
    assert!(Table::new(vec!["x".into()]).to_csv().ends_with(b"\n"));
}

#[test]
fn unknown_key_exits_2_with_single_line() {
    let dir = tempfile::tempdir().unwrap();
    let (o, _) = run_text(dir.path(), &EXACT.replace("samples = 11", "samples = 11\nsamplez = 3"));
    assert_eq!(o.status.code(), Some(2));
    let e = stderr(&o);
    assert_eq!(e.lines().count(), 1, "{e}");
    assert!(e.starts_with("error: ") && e.contains("samplez"), "{e}");
}

#[test]
fn bad_normalization_names_field() {
    let dir = tempfile::tempdir().unwrap();
    let (o, _) = run_text(dir.path(), &EXACT.replace("b = [0.0, 0.8]", "b = [0.0, 0.9]"));
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("spinbath.a/b"), "{}", stderr(&o));
}

#[test]
fn missing_config_exits_2() {
    let o = bin().args(["run", "--config", "/nonexistent/cfg.toml", "--out", "x.csv"]).output().unwrap();
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).starts_with("error: io:"));
}

#[test]
fn orthogonal_bath_conditions_exit_3() {
    let dir = tempfile::tempdir().unwrap();
    let text = EXACT
        .replace("alpha_post = [[1.0, 0.0]", "alpha_post = [[0.0, 0.0]")
        .replace("beta_post = [[0.0, 0.0]", "beta_post = [[1.0, 0.0]");
    let text =
        text.replace("alpha = [[0.6, 0.0]", "alpha = [[1.0, 0.0]").replace("beta = [[0.8, 0.0]", "beta = [[0.0, 0.0]");
    let (o, _) = run_text(dir.path(), &text);
    assert_eq!(o.status.code(), Some(3), "{}", stderr(&o));
    assert!(stderr(&o).starts_with("error: formalism:"));
}

#[test]
fn strong_coupling_needs_acknowledgement() {
    let dir = tempfile::tempdir().unwrap();
    let text = std::fs::read_to_string(scenario("perturbative_spin")).unwrap().replace("lambda = 0.1", "lambda = 3.0");
    let (o, _) = run_text(dir.path(), &text);
    assert_eq!(o.status.code(), Some(3));
    let (o, out) = run_text(dir.path(), &text.replace("lambda = 3.0", "lambda = 3.0\nallow_strong_coupling = true"));
    assert!(o.status.success(), "{}", stderr(&o));
    assert!(stderr(&o).starts_with("warning:"));
    assert!(out.exists());
}

#[test]
fn out_flag_overrides_output_path() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("elsewhere.csv");
    let o = bin().args(["run", "--config"]).arg(scenario("spinbath_env_post")).arg("--out").arg(&out).output().unwrap();
    assert!(o.status.success());
    assert!(out.exists());
    let (o, _) = run_text(dir.path(), EXACT);
    assert!(o.status.success());
    let cfg = dir.path().join("cfg.toml");
    let o = bin().args(["run", "--config"]).arg(&cfg).output().unwrap();
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("output_path"));
}

#[test]
fn verify_reports_and_exits_0() {
    let o = bin().args(["verify", "--scenario", "spinbath_exact", "--seed", "3", "--trials", "10"]).output().unwrap();
    assert!(o.status.success(), "{}", stderr(&o));
    let s = String::from_utf8_lossy(&o.stdout);
    assert!(s.contains("max entrywise |closed - joint|"), "{s}");
    let o = bin().args(["verify", "--scenario", "perturbative", "--seed", "3", "--trials", "5"]).output().unwrap();
    assert!(o.status.success(), "{}", stderr(&o));
}

#[test]
fn verify_rejects_unknown_check() {
    let o = bin().args(["verify", "--scenario", "nonsense", "--seed", "1", "--trials", "2"]).output().unwrap();
    assert_eq!(o.status.code(), Some(2));
}
