//! Cross-transport and golden-file checks for the scenario harness.

use castaudit_harness::{run_scenario, GroupChoice, ScenarioSpec, TransportKind};

#[test]
fn transports_produce_identical_reports() {
    for name in ["all_honest", "vd_flip_vote", "vs_bad_proof", "vs_withhold_record"] {
        let spec = ScenarioSpec::catalog(name, GroupChoice::Tiny).unwrap();
        let in_process = run_scenario(&spec, 7, TransportKind::InProcess).unwrap();
        let socket = run_scenario(&spec, 7, TransportKind::Socket).unwrap();
        assert_eq!(in_process, socket, "scenario {name}");
    }
}

#[test]
fn production_group_honest_scenario() {
    let mut spec = ScenarioSpec::catalog("all_honest", GroupChoice::Production).unwrap();
    spec.voters = 2;
    let report = run_scenario(&spec, 11, TransportKind::InProcess).unwrap();
    assert!(report.all_clean());
}

#[test]
fn golden_report_all_honest_seed_7() {
    let spec = ScenarioSpec::catalog("all_honest", GroupChoice::Tiny).unwrap();
    let report = run_scenario(&spec, 7, TransportKind::InProcess).unwrap();
    let expected = include_str!("golden/all_honest_tiny_seed7.json");
    assert_eq!(report.to_json().trim(), expected.trim());
}

#[test]
fn every_catalog_scenario_terminates() {
    for name in ScenarioSpec::catalog_names() {
        let spec = ScenarioSpec::catalog(name, GroupChoice::Tiny).unwrap();
        let report = run_scenario(&spec, 3, TransportKind::InProcess).unwrap();
        assert_eq!(report.voters.len(), spec.voters as usize, "scenario {name}");
    }
}
