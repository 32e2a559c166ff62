//! Acceptance gate: one test per criterion, each printing a pass/fail line.
//! Run with `cargo test -p moran-pdmp-core --test acceptance -- --nocapture`
//! to see every line; sizes and tolerances are pinned inside the criterion
//! functions.

use moran_pdmp_core::experiments::criteria;

const SEED: u64 = 0;

fn assert_criterion(outcome: moran_pdmp_core::experiments::CriterionOutcome) {
    println!("{}", outcome.line());
    assert!(outcome.pass, "{}", outcome.line());
}

#[test]
fn criterion_01_regime_reproduction() {
    assert_criterion(criteria::criterion_regimes(SEED, 1.0).unwrap());
}

#[test]
fn criterion_02_degenerate_balance() {
    assert_criterion(criteria::criterion_degenerate_balance().unwrap());
}

#[test]
fn criterion_03_density_law() {
    assert_criterion(criteria::criterion_density_law(SEED).unwrap());
}

#[test]
fn criterion_04_density_boundary_regimes() {
    assert_criterion(criteria::criterion_density_boundary_regimes().unwrap());
}

#[test]
fn criterion_05_neutral_invasion() {
    assert_criterion(criteria::criterion_neutral_invasion(SEED, 1.0).unwrap());
}

#[test]
fn criterion_06_three_env_persistence() {
    assert_criterion(criteria::criterion_three_env_persistence(SEED, 1.0).unwrap());
}

#[test]
fn criterion_07_two_env_impossibility() {
    assert_criterion(criteria::criterion_impossibility(SEED, 1.0).unwrap());
}

#[test]
fn criterion_08_convergence_rate() {
    assert_criterion(criteria::criterion_convergence_rate(SEED, 1.0).unwrap());
}

#[test]
fn criterion_09_moment_scaling() {
    assert_criterion(criteria::criterion_moment_scaling(SEED, 1.0).unwrap());
}

#[test]
fn criterion_10_structural_properties() {
    assert_criterion(criteria::criterion_structural_properties(SEED, 1.0).unwrap());
}
