//! Full-scale acceptance run. Prints one PASS/FAIL line per criterion,
//! followed by its individual checks.

use std::fs;
use std::process::Command;

use qosprice_cli::validation::{Check, Scale, CRITERIA, DETERMINISM_SCENARIO};

fn simulate_via_binary() -> Check {
    let dir = tempfile::tempdir().unwrap();
    let scenario = dir.path().join("determinism.txt");
    fs::write(&scenario, DETERMINISM_SCENARIO).unwrap();
    let run = |name: &str| {
        let out = dir.path().join(name);
        let status = Command::new(env!("CARGO_BIN_EXE_qosprice"))
            .args([
                "simulate",
                scenario.to_str().unwrap(),
                "--out",
                out.to_str().unwrap(),
            ])
            .output()
            .unwrap()
            .status;
        assert!(status.success());
        (
            fs::read(out.join("trace.csv")).unwrap(),
            fs::read(out.join("summary.csv")).unwrap(),
        )
    };
    let same = run("a") == run("b");
    Check {
        criterion: 9,
        name: "two binary runs write identical trace.csv and summary.csv".into(),
        target: "identical".into(),
        observed: if same { "identical" } else { "different" }.into(),
        tolerance: "bit-exact".into(),
        passed: same,
    }
}

fn main() {
    let plan = Scale::Full.plan();
    let mut failed = Vec::new();
    for (id, title, criterion) in CRITERIA {
        let mut checks = criterion(&plan);
        if id == 9 {
            checks.push(simulate_via_binary());
        }
        let passed = checks.iter().all(|c| c.passed);
        println!(
            "{} criterion {id}: {title}",
            if passed { "PASS" } else { "FAIL" }
        );
        for c in &checks {
            println!("    {c}");
        }
        if !passed {
            failed.push(id);
        }
    }
    if !failed.is_empty() {
        eprintln!("failed criteria: {failed:?}");
        std::process::exit(1);
    }
}
