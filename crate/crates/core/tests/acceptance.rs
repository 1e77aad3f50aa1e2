//! Acceptance gate: the ten numbered claims from [`qslab_core::checklist`],
//! one test per claim at the canonical resolution and sweep sizes. Every
//! test prints a single `criterion NN PASS/FAIL` scoreboard line (visible
//! with `--nocapture`; on failure the same line is the panic message), so a
//! full run doubles as a verification report.
//!
//! Default resolution is subdivision level 6 (40,962 vertices); the oracle
//! check states its own level. Sweeps are seeded, so reruns are
//! bit-identical.

use qslab_core::checklist::{self, ClaimOutcome};

fn verdict(outcome: ClaimOutcome) {
    let line = format!(
        "criterion {:02} {}: {}",
        outcome.number,
        outcome.status(),
        outcome.detail
    );
    println!("{line}");
    assert!(outcome.pass, "{line}");
}

#[test]
fn criterion_01_coordinate_square_values() {
    verdict(checklist::coordinate_square_values(6).unwrap());
}

#[test]
fn criterion_02_model_bracket_norm() {
    verdict(checklist::model_bracket_norm(6).unwrap());
}

#[test]
fn criterion_03_bracket_inequality_sweep() {
    verdict(checklist::bracket_inequality_sweep(6, 200, 3).unwrap());
}

#[test]
fn criterion_04_robustness_curve() {
    verdict(checklist::robustness_curve(6).unwrap());
}

#[test]
fn criterion_05_oracle_equivalence() {
    verdict(checklist::median_oracle_agreement(5, 50, 5).unwrap());
}

#[test]
fn criterion_06_quasi_state_axioms() {
    verdict(checklist::quasi_state_axioms(6, 200, 6).unwrap());
}

#[test]
fn criterion_07_flow_composition_bound() {
    verdict(checklist::flow_composition_bound(6).unwrap());
}

#[test]
fn criterion_08_measurement_protocol() {
    verdict(checklist::measurement_protocol(6).unwrap());
}

#[test]
fn criterion_09_partition_scaling() {
    verdict(checklist::partition_scaling(6).unwrap());
}

#[test]
fn criterion_10_errors_shrink_under_refinement() {
    verdict(checklist::refinement_convergence(6).unwrap());
}
