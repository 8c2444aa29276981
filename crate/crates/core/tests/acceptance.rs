//! Acceptance suite at full scale. Each test prints one line per check,
//! straight to stderr so the lines survive output capture.

use std::io::Write;

use svip_core::verification::{run_criterion, Tier, VerifyOptions};

const OPTS: VerifyOptions = VerifyOptions { tier: Tier::Full, seed: 7, workers: 1 };

fn criterion(n: u32) {
    let outcomes = run_criterion(n, &OPTS);
    let mut err = std::io::stderr().lock();
    for o in &outcomes {
        let _ = writeln!(err, "{o}");
    }
    drop(err);
    let failed: Vec<_> = outcomes.iter().filter(|o| !o.passed).map(|o| o.id.as_str()).collect();
    assert!(failed.is_empty(), "failed: {}", failed.join(", "));
}

#[test]
fn c01_leading_constant_a2() {
    criterion(1);
}

#[test]
fn c02_leading_constant_a4() {
    criterion(2);
}

#[test]
fn c03_exact_vs_monte_carlo() {
    criterion(3);
}

#[test]
fn c04_combinatorial_identities() {
    criterion(4);
}

#[test]
fn c05_tail_moment_closed_form() {
    criterion(5);
}

#[test]
fn c06_line_scaling_exponents() {
    criterion(6);
}

#[test]
fn c07_grid_scaling_exponents() {
    criterion(7);
}

#[test]
fn c08_threshold_shape() {
    criterion(8);
}

#[test]
fn c09_bound_sums() {
    criterion(9);
}

#[test]
fn c10_interference_postconditions() {
    criterion(10);
}

#[test]
fn c11_determinism() {
    criterion(11);
}
