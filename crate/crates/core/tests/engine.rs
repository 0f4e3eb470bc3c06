mod common;

use episim::engine::{
    check_step, records_to_csv, run, run_scenario, summarize, RegionSource, Scenario, SimConfig, SimError, SimState,
};
use episim::epi::{Compartment, DiseaseState};
use episim::geo::RegionSpec;
use episim::policy::{Measure, Policy, QuarantineKind, TestingStrategy};
use episim::BuildingId;

use common::{hand_region, person, scenario};

fn quiet_config() -> SimConfig {
    let mut c = SimConfig {
        initial_infected: 0,
        n_cycles: 48,
        assert_invariants: true,
        ..SimConfig::default()
    };
    c.epi.env.env_beta = 0.0;
    c
}

fn symptomatic_forever() -> DiseaseState {
    DiseaseState {
        compartment: Compartment::Symptomatic,
        since: 0,
        next: None,
    }
}

/// One symptomatic and two susceptibles sharing a house with certain
/// transmission: both are infected in the first hour.
fn three_agents() -> Scenario {
    let home = BuildingId(0);
    scenario(
        hand_region(1, 3),
        vec![
            person(0, 0, home, symptomatic_forever()),
            person(1, 0, home, DiseaseState::susceptible()),
            person(2, 0, home, DiseaseState::susceptible()),
        ],
    )
}

#[test]
fn three_agent_hand_trace() {
    let mut config = quiet_config();
    config.epi.h2h.beta_h = 1.0;
    config.n_cycles = 3;
    let records = run_scenario(&three_agents(), &config).unwrap();
    assert_eq!(records.len(), 4);

    let r0 = &records[0];
    assert_eq!(
        (r0.count(Compartment::Susceptible), r0.count(Compartment::Symptomatic)),
        (2, 1)
    );
    assert_eq!(r0.new_infections, 0);

    let r1 = &records[1];
    assert_eq!(r1.count(Compartment::Latent), 2);
    assert_eq!(r1.count(Compartment::Susceptible), 0);
    assert_eq!(r1.new_infections, 2);
    assert!(records[2..].iter().all(|r| r.new_infections == 0));
    assert_eq!(summarize(&records).attack_rate, 1.0);
}

#[test]
fn zero_beta_nobody_gets_infected() {
    let mut config = quiet_config();
    config.epi.h2h.beta_h = 0.0;
    let records = run_scenario(&three_agents(), &config).unwrap();
    assert!(records.iter().all(|r| r.count(Compartment::Susceptible) == 2));
}

#[test]
fn scheduled_recovery_lands_on_its_cycle() {
    let home = BuildingId(0);
    let agent = person(
        0,
        0,
        home,
        DiseaseState {
            compartment: Compartment::Asymptomatic,
            since: 0,
            next: Some((Compartment::Recovered, 10)),
        },
    );
    let config = quiet_config();
    let records = run_scenario(&scenario(hand_region(1, 1), vec![agent]), &config).unwrap();
    assert_eq!(records[9].count(Compartment::Asymptomatic), 1);
    assert_eq!(records[10].count(Compartment::Recovered), 1);
    assert!(records[10..].iter().all(|r| r.count(Compartment::Recovered) == 1));
}

#[test]
fn null_model_without_seeds() {
    let config = SimConfig {
        initial_infected: 0,
        n_cycles: 200,
        assert_invariants: true,
        ..SimConfig::default()
    };
    let records = run(&config).unwrap();
    assert_eq!(records.len(), 201);
    for r in &records {
        assert_eq!(r.count(Compartment::Susceptible), 1000);
        assert_eq!(r.new_infections, 0);
        assert_eq!(r.cumulative_deaths, 0);
    }
}

#[test]
fn full_run_is_deterministic_and_conserves() {
    let config = SimConfig {
        seed: 11,
        n_cycles: 600,
        assert_invariants: true,
        ..SimConfig::default()
    };
    let a = run(&config).unwrap();
    let b = run(&config).unwrap();
    assert_eq!(records_to_csv(&a), records_to_csv(&b));
    for w in a.windows(2) {
        check_step(&w[0], &w[1], 1000).unwrap();
    }
    let other = run(&SimConfig { seed: 12, ..config }).unwrap();
    assert_ne!(records_to_csv(&a), records_to_csv(&other));
}

#[test]
fn check_step_catches_broken_records() {
    let config = SimConfig {
        n_cycles: 2,
        ..SimConfig::default()
    };
    let records = run(&config).unwrap();
    let mut bad = records[1].clone();
    bad.counts[Compartment::Susceptible as usize] += 1;
    assert!(matches!(
        check_step(&records[0], &bad, 1000),
        Err(SimError::Invariant { .. })
    ));
    let mut skipped = records[1].clone();
    skipped.cycle += 1;
    assert!(check_step(&records[0], &skipped, 1000).is_err());
}

#[test]
fn loaded_region_runs() {
    let config = SimConfig {
        region: RegionSource::Load(common::fixture_dir("gwalior_mini")),
        n_cycles: 100,
        assert_invariants: true,
        ..SimConfig::default()
    };
    let records = run(&config).unwrap();
    assert_eq!(records.last().unwrap().population(), 1000);
}

#[test]
fn config_errors() {
    let bad_seeds = SimConfig {
        initial_infected: 5000,
        ..SimConfig::default()
    };
    assert!(run(&bad_seeds).unwrap_err().is_config());
    let zero = SimConfig {
        n_cycles: 0,
        ..SimConfig::default()
    };
    assert!(run(&zero).unwrap_err().is_config());
    let missing = SimConfig {
        region: RegionSource::Load("/nonexistent/region".into()),
        ..SimConfig::default()
    };
    assert!(run(&missing).is_err());
    let empty = SimConfig {
        region: RegionSource::Generate(RegionSpec {
            buildings: 0,
            ..RegionSpec::default()
        }),
        ..SimConfig::default()
    };
    assert!(run(&empty).is_err());
}

#[test]
fn dead_agents_are_nowhere() {
    let home = BuildingId(0);
    let dead = DiseaseState {
        compartment: Compartment::Dead,
        since: 0,
        next: None,
    };
    let sc = scenario(
        hand_region(1, 2),
        vec![
            person(0, 0, home, dead),
            person(1, 0, home, DiseaseState::susceptible()),
        ],
    );
    // A pre-dead agent is outside the death ledger, so skip invariant checks.
    let config = SimConfig {
        assert_invariants: false,
        ..quiet_config()
    };
    let mut state = SimState::new(&sc, &config).unwrap();
    state.step().unwrap();
    assert_eq!(state.locations(), &[None, Some(home)]);
}

#[test]
fn forced_lock_confines_residents() {
    let config = SimConfig {
        n_cycles: 100,
        initial_infected: 0,
        policy: Policy::new(
            Measure::DynamicSpatialLockdown(Default::default()),
            TestingStrategy::NoTesting,
        ),
        assert_invariants: true,
        ..SimConfig::default()
    };
    let sc = Scenario::build(&config).unwrap();
    let mut state = SimState::new(&sc, &config).unwrap();
    let block = episim::BlockId(1);
    state.force_lock(block, 50);
    while state.cycle() < 60 {
        state.step().unwrap();
        let cycle = state.cycle();
        for ind in state.individuals() {
            if state.mobility().home_block(ind.id) != block {
                continue;
            }
            if cycle < 50 {
                assert_eq!(ind.quarantine.kind, QuarantineKind::BlockLockdown);
                // Locations are those chosen for the hour just stepped.
                assert_eq!(state.locations()[ind.id.index()], Some(ind.home));
            }
        }
        if cycle < 50 {
            assert_eq!(state.record().locked_blocks, 1);
        } else {
            assert_eq!(state.record().locked_blocks, 0);
        }
    }
}
