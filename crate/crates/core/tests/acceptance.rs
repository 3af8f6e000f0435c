//! One line per acceptance check. Run with `--nocapture` to see the table.

use atomroute::verify::{self, Check};

fn gate(n: u8, checks: atomroute::Result<Vec<Check>>) {
    let checks = checks.unwrap_or_else(|e| panic!("FAIL [{n}] error: {e}"));
    for c in &checks {
        println!("{}", c.line());
    }
    let failed: Vec<String> = checks.iter().filter(|c| !c.passed).map(Check::line).collect();
    assert!(failed.is_empty(), "{}", failed.join("\n"));
}

#[test]
fn criterion_01_charges_commute() {
    gate(1, verify::criterion_1());
}

#[test]
fn criterion_02_reduction_matches_full_model() {
    gate(2, verify::criterion_2());
}

#[test]
fn criterion_03_resonant_transfer_follows_closed_form() {
    gate(3, verify::criterion_3());
}

#[test]
fn criterion_04_fidelity_plateau() {
    gate(4, verify::criterion_4());
}

#[test]
fn criterion_05_demux_efficiency() {
    gate(5, verify::criterion_5());
}

#[test]
fn criterion_06_mux_drain() {
    gate(6, verify::criterion_6());
}

#[test]
fn criterion_07_amplitude_demux_imbalance() {
    gate(7, verify::criterion_7());
}

#[test]
fn criterion_08_amplitude_mux_readout() {
    gate(8, verify::criterion_8());
}

#[test]
fn criterion_09_mode_sums() {
    gate(9, verify::criterion_9());
}

#[test]
fn criterion_10_uniform_band() {
    gate(10, verify::criterion_10());
}

#[test]
fn criterion_11_lattice_closed_forms() {
    gate(11, verify::criterion_11());
}

#[test]
fn lattice_diagnostics_are_reported() {
    // soft checks, never gating
    for c in verify::lattice_diagnostics().unwrap() {
        println!("{}", c.line());
    }
}
