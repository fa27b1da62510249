//! Acceptance criteria, one PASS/FAIL line each.
//!
//! Criteria 1-14 are the verification catalog entries; 15 reruns the catalog
//! and compares the report bytes.

use std::fs;
use std::path::Path;
use std::process::ExitCode;

use phfock_cli::config::RunConfig;
use phfock_cli::verify::cmd_verify;
use serde_json::Value;

const CRITERIA: [(usize, &str); 14] = [
    (1, "orthonormality"),
    (2, "identity-operator"),
    (3, "kernel-trace-closed-form"),
    (4, "trace-formula-consistency"),
    (5, "trace-sandwich"),
    (6, "radial-diagonality"),
    (7, "carleson-necessity"),
    (8, "carleson-sufficiency"),
    (9, "vanishing-compactness"),
    (10, "berezin-bounds"),
    (11, "berezin-power-inequality"),
    (12, "symbol-schatten-bound"),
    (13, "schatten-diagonal"),
    (14, "point-evaluation-lemmas"),
];

fn run_into(dir: &Path) -> Vec<u8> {
    let config = RunConfig {
        out: dir.to_path_buf(),
        ..RunConfig::default()
    };
    // a failing check still writes the report
    let _ = cmd_verify(&config);
    fs::read(dir.join("verify.json")).expect("verify.json written")
}

fn main() -> ExitCode {
    let tmp = tempfile::tempdir().expect("temp dir");
    let dir = tmp.path().join("report");
    let first = run_into(&dir);
    let report: Value = serde_json::from_slice(&first).expect("valid json");
    let checks = report["checks"].as_array().expect("checks array");

    let mut failed = Vec::new();
    for (number, id) in CRITERIA {
        let check = checks.iter().find(|c| c["id"] == id);
        let pass = check.is_some_and(|c| c["status"] == "pass");
        println!("{} criterion {number:>2} {id}", if pass { "PASS" } else { "FAIL" });
        if let Some(c) = check {
            for f in c["failures"].as_array().into_iter().flatten() {
                println!("        {}", f.as_str().unwrap_or_default());
            }
            if let Some(e) = c["error"].as_str() {
                println!("        error: {e}");
            }
            for n in c["notes"].as_array().into_iter().flatten() {
                println!("        note: {}", n.as_str().unwrap_or_default());
            }
        }
        if !pass {
            failed.push(number);
        }
    }

    let second = run_into(&dir);
    let identical = first == second;
    println!("{} criterion 15 determinism", if identical { "PASS" } else { "FAIL" });
    if !identical {
        failed.push(15);
    }

    println!("{} of 15 criteria pass", 15 - failed.len());
    if failed.is_empty() {
        ExitCode::SUCCESS
    } else {
        println!("failing: {failed:?}");
        ExitCode::FAILURE
    }
}
