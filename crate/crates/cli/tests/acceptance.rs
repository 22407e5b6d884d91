//! Acceptance gate: one PASS/FAIL line per criterion, nonzero exit if any fail.
//! Runs without the libtest harness so the lines are always printed.

use std::process::Command;
use std::time::{Duration, Instant};

use npt_core::validation::{run_suite, Check, Suite, SuiteReport, ValidationConfig};

type Criterion<'a> = (&'static str, Box<dyn Fn() -> Outcome + 'a>);

struct Outcome {
    passed: bool,
    detail: String,
}

fn check<'a>(report: &'a SuiteReport, name: &str) -> &'a Check {
    report
        .check(name)
        .unwrap_or_else(|| panic!("{:?} has no check {name:?}", report.suite))
}

fn within(elapsed: Duration, limit_s: u64) -> (bool, String) {
    (
        elapsed.as_secs_f64() < limit_s as f64,
        format!("{:.1} s (limit {limit_s} s)", elapsed.as_secs_f64()),
    )
}

fn timed(suite: Suite, cfg: &ValidationConfig) -> (SuiteReport, Duration) {
    let start = Instant::now();
    let report = run_suite(suite, cfg).unwrap_or_else(|e| panic!("{}: {e}", suite.name()));
    (report, start.elapsed())
}

fn wronskian(cfg: &ValidationConfig) -> Outcome {
    let (r, t) = timed(Suite::Wronskian, cfg);
    let c = check(&r, "max relative residual");
    let (fast, time) = within(t, 30);
    Outcome {
        passed: c.passed && fast,
        detail: format!("max residual {:.2e}, {time}", c.value),
    }
}

fn symmetry(cfg: &ValidationConfig) -> Outcome {
    let (r, _) = timed(Suite::Symmetry, cfg);
    let a = check(&r, "negative-order relation");
    let b = check(&r, "degree symmetry");
    Outcome {
        passed: a.passed && b.passed,
        detail: format!("negative order {:.2e}, degree {:.2e}", a.value, b.value),
    }
}

fn derivatives(cfg: &ValidationConfig) -> Outcome {
    let (r, _) = timed(Suite::Deriv, cfg);
    let fd = check(&r, "recurrence vs finite differences");
    let printed = check(&r, "uncorrected form, Wronskian relative residual");
    Outcome {
        passed: fd.passed,
        detail: format!(
            "vs finite differences {:.2e}; uncorrected form residual {:.2e} (recorded)",
            fd.value, printed.value
        ),
    }
}

fn jump(cfg: &ValidationConfig) -> Outcome {
    let (r, t) = timed(Suite::Jump, cfg);
    let c = check(&r, "jump (exterior - interior) vs density");
    let (fast, time) = within(t, 300);
    Outcome {
        passed: c.passed && fast,
        detail: format!("max relative error {:.2e}, {time}", c.value),
    }
}

fn oracle(cfg: &ValidationConfig) -> Outcome {
    let (r, t) = timed(Suite::Oracle, cfg);
    let worst = r.checks.iter().map(|c| c.value).fold(0.0, f64::max);
    let (fast, time) = within(t, 900);
    Outcome {
        passed: r.passed && fast,
        detail: format!("max abs error {worst:.2e}, {time}"),
    }
}

fn theorem(cfg: &ValidationConfig) -> Outcome {
    let (r, _) = timed(Suite::TheoremDelta, cfg);
    let names = [
        "delta off-diagonal",
        "delta diagonal vs closed form",
        "oracle vs assembled diagonal",
        "theorem diagonal minus oracle vs predicted offset",
        "theorem diagonal vs oracle",
    ];
    let checks: Vec<&Check> = names.iter().map(|n| check(&r, n)).collect();
    Outcome {
        passed: checks.iter().all(|c| c.passed),
        detail: format!(
            "off-diagonal {:.1e}, oracle vs diagonal {:.1e}, predicted offset residual {:.1e}",
            checks[0].value, checks[2].value, checks[3].value
        ),
    }
}

fn containment(spectrum: &SuiteReport) -> Outcome {
    let re = check(spectrum, "max |Re lambda| - 1/2");
    let im = check(spectrum, "max |Im lambda|");
    Outcome {
        passed: re.passed && im.passed,
        detail: format!(
            "max |Re| - 1/2 = {:.2e}, max |Im| = {:.2e}",
            re.value, im.value
        ),
    }
}

fn both_signs(spectrum: &SuiteReport) -> Outcome {
    let c = check(spectrum, "fewest eigenvalues of one sign per block");
    Outcome {
        passed: c.passed,
        detail: format!("fewest of either sign in a block: {}", c.value),
    }
}

fn convergence(cfg: &ValidationConfig) -> Outcome {
    let (r, _) = timed(Suite::Convergence, cfg);
    let deltas: Vec<&Check> = r
        .checks
        .iter()
        .filter(|c| c.name.contains("N=12->16"))
        .collect();
    let worst = deltas.iter().map(|c| c.value).fold(0.0, f64::max);
    Outcome {
        passed: deltas.iter().all(|c| c.value < 1e-8),
        detail: format!(
            "worst top-10 change {worst:.2e} (limit 1e-8); {}",
            deltas
                .iter()
                .map(|c| format!("{:.1e}", c.value))
                .collect::<Vec<_>>()
                .join(", ")
        ),
    }
}

fn determinism() -> Outcome {
    let dir = tempfile::tempdir().expect("temp dir");
    let mut outputs = Vec::new();
    for threads in ["1", "8"] {
        let path = dir.path().join(format!("report-{threads}.json"));
        let status = Command::new(env!("CARGO_BIN_EXE_npt"))
            .args(["validate", "--suite", "all", "--out"])
            .arg(&path)
            .env("NPT_THREADS", threads)
            .stderr(std::process::Stdio::null())
            .status()
            .expect("npt runs");
        outputs.push((status.code(), std::fs::read(&path).unwrap_or_default()));
    }
    let identical = !outputs[0].1.is_empty() && outputs[0].1 == outputs[1].1;
    Outcome {
        passed: identical,
        detail: format!(
            "reports {} ({} bytes), exit codes {:?} / {:?}",
            if identical { "identical" } else { "differ" },
            outputs[0].1.len(),
            outputs[0].0,
            outputs[1].0
        ),
    }
}

fn main() {
    // `cargo test -- --list` and filters are not meaningful here.
    if std::env::args().any(|a| a == "--list") {
        println!("acceptance: test");
        return;
    }
    let cfg = ValidationConfig::default();
    let (spectrum, _) = timed(Suite::Spectrum, &cfg);
    let criteria: Vec<Criterion> = vec![
        ("wronskian relation", Box::new(|| wronskian(&cfg))),
        (
            "negative order and degree symmetry",
            Box::new(|| symmetry(&cfg)),
        ),
        ("derivative recurrence", Box::new(|| derivatives(&cfg))),
        ("single-layer jump", Box::new(|| jump(&cfg))),
        (
            "quadrature oracle vs assembled blocks",
            Box::new(|| oracle(&cfg)),
        ),
        (
            "theorem-form delta adjudication",
            Box::new(|| theorem(&cfg)),
        ),
        ("spectral containment", Box::new(|| containment(&spectrum))),
        (
            "both signs in every block",
            Box::new(|| both_signs(&spectrum)),
        ),
        ("truncation convergence", Box::new(|| convergence(&cfg))),
        ("determinism across thread counts", Box::new(determinism)),
    ];
    let mut failed = 0;
    for (k, (name, run)) in criteria.iter().enumerate() {
        let o = run();
        if !o.passed {
            failed += 1;
        }
        println!(
            "{} criterion {:>2} {name}: {}",
            if o.passed { "PASS" } else { "FAIL" },
            k + 1,
            o.detail
        );
    }
    println!(
        "\nacceptance: {} passed, {failed} failed",
        criteria.len() - failed
    );
    if failed > 0 {
        std::process::exit(1);
    }
}
