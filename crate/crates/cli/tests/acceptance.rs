//! Acceptance suite: one PASS/FAIL line per criterion, non-zero exit on any
//! failure.

use std::path::{Path, PathBuf};
use std::process::{Command, ExitCode};
use std::time::{Duration, Instant};

use twostate_cli::verify::{run_check, Check, CheckReport};

const SEED: u64 = 1;

struct Outcome {
    passed: bool,
    detail: String,
}

fn from_report(report: &CheckReport, budget: Option<Duration>, elapsed: Duration) -> Outcome {
    let mut passed = report.passed();
    let mut parts: Vec<String> =
        report.metrics.iter().map(|m| format!("{} {:.3e} ({})", m.name, m.value, m.limit)).collect();
    if let Some(b) = budget {
        passed &= elapsed <= b;
        parts.push(format!("runtime {:.2}s (<= {}s)", elapsed.as_secs_f64(), b.as_secs()));
    }
    for f in report.failure_lines().iter().take(3) {
        parts.push(f.clone());
    }
    Outcome { passed, detail: parts.join("; ") }
}

fn check(check: Check, trials: usize, budget: Option<Duration>) -> Outcome {
    let start = Instant::now();
    let report = run_check(check, SEED, trials);
    from_report(&report, budget, start.elapsed())
}

fn scenario_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("scenarios")
}

fn golden_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests").join("golden")
}

fn run_binary(config: &Path, out: &Path) -> Result<Vec<u8>, String> {
    let status = Command::new(env!("CARGO_BIN_EXE_twostate"))
        .args(["run", "--config"])
        .arg(config)
        .arg("--out")
        .arg(out)
        .output()
        .map_err(|e| e.to_string())?;
    if !status.status.success() {
        return Err(format!("{} exited with {}", config.display(), status.status));
    }
    std::fs::read(out).map_err(|e| e.to_string())
}

fn determinism() -> Outcome {
    let dir = match tempfile::tempdir() {
        Ok(d) => d,
        Err(e) => return Outcome { passed: false, detail: e.to_string() },
    };
    let mut configs: Vec<PathBuf> = std::fs::read_dir(scenario_dir())
        .map(|rd| {
            rd.filter_map(|e| e.ok().map(|e| e.path())).filter(|p| p.extension().is_some_and(|x| x == "toml")).collect()
        })
        .unwrap_or_default();
    configs.sort();
    let mut passed = configs.len() == 5;
    let mut parts = vec![format!("{} scenario configs", configs.len())];
    for cfg in &configs {
        let name = cfg.file_stem().expect("file name").to_string_lossy().into_owned();
        let first = run_binary(cfg, &dir.path().join(format!("{name}_a.csv")));
        let second = run_binary(cfg, &dir.path().join(format!("{name}_b.csv")));
        let golden = std::fs::read(golden_dir().join(format!("{name}.csv"))).map_err(|e| e.to_string());
        let verdict = match (first, second, golden) {
            (Ok(a), Ok(b), Ok(g)) if a == b && a == g => "identical to golden".to_string(),
            (Ok(a), Ok(b), Ok(_)) if a == b => "repeatable, differs from golden".to_string(),
            (Ok(_), Ok(_), Ok(_)) => "runs differ".to_string(),
            (Err(e), _, _) | (_, Err(e), _) | (_, _, Err(e)) => e,
        };
        passed &= verdict == "identical to golden";
        parts.push(format!("{name}: {verdict}"));
    }
    Outcome { passed, detail: parts.join("; ") }
}

type Criterion = (&'static str, Box<dyn Fn() -> Outcome>);

fn main() -> ExitCode {
    let criteria: Vec<Criterion> = vec![
        (
            "exact spin-bath model vs joint-space oracle",
            Box::new(|| check(Check::SpinbathExact, 100, Some(Duration::from_secs(30)))),
        ),
        ("recoherence at t1 and t2, entanglement in between", Box::new(|| check(Check::Recoherence, 100, None))),
        ("probability rules consistent", Box::new(|| check(Check::Probability, 200, None))),
        ("environment post-selection basis independence", Box::new(|| check(Check::BasisIndependence, 50, None))),
        ("effective pure state at post-selection", Box::new(|| check(Check::EffectivePurity, 50, None))),
        ("decoherence suppression", Box::new(|| check(Check::Suppression, 50, None))),
        (
            "perturbative closed form is third-order accurate",
            Box::new(|| check(Check::Perturbative, 20, Some(Duration::from_secs(10)))),
        ),
        ("integrator fidelity", Box::new(|| check(Check::Integrator, 20, None))),
        ("burst recoherence", Box::new(|| check(Check::Burst, 20, None))),
        ("CLI determinism and goldens", Box::new(determinism)),
    ];
    let mut failed = 0;
    for (i, (name, f)) in criteria.iter().enumerate() {
        let o = f();
        if !o.passed {
            failed += 1;
        }
        println!("{} criterion {:>2} {}: {}", if o.passed { "PASS" } else { "FAIL" }, i + 1, name, o.detail);
    }
    println!("{} of {} criteria passed", criteria.len() - failed, criteria.len());
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
