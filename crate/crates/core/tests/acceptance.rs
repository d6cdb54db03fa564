//! Acceptance gate. Prints one PASS/FAIL line per criterion, followed by the
//! measured counts, and exits nonzero if any criterion fails.

use std::process::ExitCode;
use std::time::{Duration, Instant};

use sqrtnuc::harness::{run_experiment, verify_suite, ExperimentConfig, LambdaMode, Mode, VerifyOptions};
use sqrtnuc::solve_sqrt_shrinkage;

const SEED: u64 = 20240607;

struct Verdict {
    passed: bool,
    details: Vec<String>,
}

fn suites(names: &[&str], opts: &VerifyOptions) -> Verdict {
    let mut passed = true;
    let mut details = Vec::new();
    for name in names {
        match verify_suite(name, opts) {
            Ok(report) => {
                passed &= report.passed;
                details.extend(report.lines.into_iter().map(|l| format!("{name}: {l}")));
            }
            Err(e) => {
                passed = false;
                details.push(format!("{name}: error: {e}"));
            }
        }
    }
    Verdict { passed, details }
}

fn hand_instance() -> Verdict {
    let (sigma, lambda, c): ([f64; 2], f64, f64) = ([3.0, 1.0], 0.5, 2.0);
    // One active value: stationarity gives σ₁ − s₁ = λ R with
    // R² = (σ₁ − s₁)² + σ₂² + c², so σ₁ − s₁ = λ √((σ₂² + c²) / (1 − λ²)).
    let shrink = lambda * ((sigma[1] * sigma[1] + c * c) / (1.0 - lambda * lambda)).sqrt();
    let expected = [sigma[0] - shrink, 0.0];
    let radius = ((shrink * shrink) + sigma[1] * sigma[1] + c * c).sqrt();
    let inactive_ok = sigma[1] / radius <= lambda;
    match solve_sqrt_shrinkage(&sigma, lambda, c) {
        Ok(sol) => {
            let err = sol.s.iter().zip(&expected).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
            let exact = (3.0 - (5.0f64 / 3.0).sqrt() - sol.s[0]).abs();
            Verdict {
                passed: err <= 1e-6 && exact <= 1e-6 && inactive_ok,
                details: vec![format!(
                    "s=({:.9}, {:.9}) expected=({:.9}, 0) max error={err:.2e} second value inactive: {inactive_ok}",
                    sol.s[0], sol.s[1], expected[0]
                )],
            }
        }
        Err(e) => Verdict {
            passed: false,
            details: vec![format!("error: {e}")],
        },
    }
}

fn determinism() -> Verdict {
    let mut details = Vec::new();
    let mut passed = true;

    for name in ["thm1", "thmr1", "lemma1"] {
        let run = |threads| {
            verify_suite(
                name,
                &VerifyOptions {
                    seed: SEED,
                    threads: Some(threads),
                    trials: Some(24),
                },
            )
            .map(|r| r.to_csv())
        };
        match (run(1), run(4), run(4)) {
            (Ok(a), Ok(b), Ok(c)) => {
                let same = a == b && b == c;
                passed &= same;
                details.push(format!("{name}: {} bytes, identical across reruns and thread counts: {same}", a.len()));
            }
            _ => {
                passed = false;
                details.push(format!("{name}: suite failed to run"));
            }
        }
    }

    let mut cfg = ExperimentConfig::new(Mode::SimulateCompletion);
    cfg.m1 = 40;
    cfg.m2 = 30;
    cfg.n = 400;
    cfg.trials = 8;
    cfg.seed = SEED;
    cfg.lambda = LambdaMode::Oracle;
    let first = run_experiment(&cfg).map(|o| o.to_csv());
    cfg.threads = Some(3);
    let second = run_experiment(&cfg).map(|o| o.to_csv());
    match (first, second) {
        (Ok(a), Ok(b)) => {
            passed &= a == b;
            details.push(format!("simulate completion: identical: {}", a == b));
        }
        _ => {
            passed = false;
            details.push("simulate completion: failed to run".into());
        }
    }
    Verdict { passed, details }
}

fn main() -> ExitCode {
    let opts = VerifyOptions {
        seed: SEED,
        threads: None,
        trials: None,
    };
    type Check<'a> = Box<dyn Fn() -> Verdict + 'a>;
    let criteria: Vec<(&str, &str, u64, Check)> = vec![
        ("1", "shrinkage closed form matches grid oracle", 10, Box::new(|| suites(&["shrinkage-oracle"], &opts))),
        ("2", "hand-verified shrinkage instance", 1, Box::new(hand_instance)),
        ("3", "rank bounds for completion and regression", 60, Box::new(|| suites(&["lemma1", "lr1"], &opts))),
        ("4", "collision tail and expectation", 30, Box::new(|| suites(&["lemma4"], &opts))),
        ("5", "noise-norm sandwich clauses", 120, Box::new(|| suites(&["lemmaL"], &opts))),
        ("6", "completion oracle inequality", 120, Box::new(|| suites(&["thm1"], &opts))),
        ("7", "completion rate scaling in n", 600, Box::new(|| suites(&["cor1-scaling"], &opts))),
        ("8", "square-root vs known-sigma baseline", 180, Box::new(|| suites(&["baseline-compare"], &opts))),
        ("9", "regression oracle inequality", 120, Box::new(|| suites(&["thmr1"], &opts))),
        ("10", "regression rate scaling in m2", 300, Box::new(|| suites(&["thmr2-scaling"], &opts))),
        ("11", "residual lower bounds", 240, Box::new(|| suites(&["lemma2", "lr2"], &opts))),
        ("12", "byte-identical reruns", 120, Box::new(determinism)),
        ("S1", "operator-norm tail bound (rectangular design)", 300, Box::new(|| suites(&["lemma3"], &opts))),
    ];

    let mut failed = Vec::new();
    for (id, title, budget, check) in &criteria {
        let start = Instant::now();
        let verdict = check();
        let elapsed = start.elapsed();
        let in_time = elapsed <= Duration::from_secs(*budget);
        let ok = verdict.passed && in_time;
        println!(
            "[{}] criterion {id}: {title} ({:.1}s, budget {budget}s)",
            if ok { "PASS" } else { "FAIL" },
            elapsed.as_secs_f64()
        );
        for line in &verdict.details {
            println!("       {line}");
        }
        if !in_time {
            println!("       runtime budget exceeded");
        }
        if !ok {
            failed.push(*id);
        }
    }
    if failed.is_empty() {
        println!("acceptance: all {} criteria passed", criteria.len());
        ExitCode::SUCCESS
    } else {
        println!("acceptance: {} of {} criteria failed: {}", failed.len(), criteria.len(), failed.join(", "));
        ExitCode::FAILURE
    }
}
