//! The release acceptance gate: one test per criterion, each printing its
//! measured pass/fail line (visible with `--nocapture`; the line is also
//! the panic message on failure).

use qdmft::acceptance;

fn check(index: usize) {
    let report = acceptance::criterion(index);
    println!("{}", report.line());
    assert!(report.passed, "{}", report.line());
}

#[test]
fn criterion_01_fidelity_floor() {
    check(1);
}

#[test]
fn criterion_02_method_ordering() {
    check(2);
}

#[test]
fn criterion_03_trotter_scaling() {
    check(3);
}

#[test]
fn criterion_04_interferometry_oracle() {
    check(4);
}

#[test]
fn criterion_05_jw_algebra() {
    check(5);
}

#[test]
fn criterion_06_zz_decomposition() {
    check(6);
}

#[test]
fn criterion_07_gate_counts() {
    check(7);
}

#[test]
fn criterion_08_self_energy_poles() {
    check(8);
}

#[test]
fn criterion_09_insulating_point() {
    check(9);
}

#[test]
fn criterion_10_mott_transition() {
    check(10);
}

#[test]
fn criterion_11_green_sum_rule() {
    check(11);
}

#[test]
fn criterion_12_fit_round_trip() {
    check(12);
}
