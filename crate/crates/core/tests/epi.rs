mod common;

use episim::epi::{
    advance_disease, effective_infectious_count, enter_compartment, h2h_infection_probability, infect, sample_duration,
    step_environmental, step_h2h, Compartment, DiseaseState, Duration, EpiParams, Occupancy, Occupant,
};
use episim::rng::{substream, SimRng, Stream};
use episim::{BuildingId, PersonId};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use common::sigma;

fn beta(b: f64) -> EpiParams {
    let mut p = EpiParams::default();
    p.h2h.beta_h = b;
    p
}

fn occ(id: u32, compartment: Compartment, masked: bool) -> Occupant {
    Occupant {
        id: PersonId(id),
        compartment,
        masked,
    }
}

#[test]
fn effective_count_examples() {
    let p = EpiParams::default();
    assert_eq!(
        effective_infectious_count(&[occ(0, Compartment::Susceptible, false)], &p),
        0.0
    );
    assert_eq!(
        effective_infectious_count(&[occ(0, Compartment::Symptomatic, false)], &p),
        1.0
    );
    let pair = [
        occ(0, Compartment::Symptomatic, true),
        occ(1, Compartment::Asymptomatic, false),
    ];
    assert!((effective_infectious_count(&pair, &p) - 1.05).abs() < 1e-12);
}

#[test]
fn h2h_closed_forms() {
    assert_eq!(h2h_infection_probability(0.0, false, &beta(0.05)), 0.0);
    assert_eq!(h2h_infection_probability(1.0, false, &beta(1.0)), 1.0);
    let p = h2h_infection_probability(3.0, false, &beta(0.05));
    assert!((p - 0.142625).abs() < 1e-12, "{p}");
    assert!((p - (1.0 - 0.95f64.powi(3))).abs() < 1e-15);
}

/// Brute force: `k` independent per-contact Bernoulli(beta) draws; infected
/// iff any succeeds.
fn brute_force_rate(k: u32, beta_h: f64, trials: usize, rng: &mut ChaCha8Rng) -> f64 {
    let hits = (0..trials)
        .filter(|_| {
            let mut any = false;
            for _ in 0..k {
                any |= rng.random::<f64>() < beta_h;
            }
            any
        })
        .count();
    hits as f64 / trials as f64
}

#[test]
fn h2h_matches_bernoulli_oracle() {
    let trials = 10_000;
    let params = beta(0.05);
    let mut oracle_rng = ChaCha8Rng::seed_from_u64(2024);
    let mut sim_rng = substream(5, Stream::PersonToPerson);
    for k in [1u32, 2, 5] {
        let p = h2h_infection_probability(f64::from(k), false, &params);
        let s = sigma(p, trials);
        let oracle = brute_force_rate(k, 0.05, trials, &mut oracle_rng);
        assert!((oracle - p).abs() < 3.0 * s, "k={k}: oracle {oracle} vs {p}");

        // The stepping function itself, one susceptible per trial.
        let mut occupancy = Occupancy::new(1);
        for i in 0..k {
            occupancy.push(BuildingId(0), occ(i, Compartment::Symptomatic, false));
        }
        occupancy.push(BuildingId(0), occ(k, Compartment::Susceptible, false));
        let hits: usize = (0..trials)
            .map(|_| step_h2h(&occupancy, &params, &mut sim_rng).len())
            .sum();
        let rate = hits as f64 / trials as f64;
        assert!((rate - p).abs() < 3.0 * s, "k={k}: step_h2h {rate} vs {p}");
    }
}

#[test]
fn one_symptomatic_thousand_susceptibles() {
    let params = beta(0.05);
    let mut occupancy = Occupancy::new(1);
    occupancy.push(BuildingId(0), occ(0, Compartment::Symptomatic, false));
    for i in 1..=1000 {
        occupancy.push(BuildingId(0), occ(i, Compartment::Susceptible, false));
    }
    let mut rng = substream(1, Stream::PersonToPerson);
    let trials = 10_000;
    let hits: usize = (0..trials).map(|_| step_h2h(&occupancy, &params, &mut rng).len()).sum();
    let n = trials * 1000;
    let rate = hits as f64 / n as f64;
    assert!((rate - 0.05).abs() < 3.0 * sigma(0.05, n), "{rate}");
}

#[test]
fn h2h_edge_cases() {
    let mut only_s = Occupancy::new(1);
    for i in 0..10 {
        only_s.push(BuildingId(0), occ(i, Compartment::Susceptible, false));
    }
    let mut rng = substream(0, Stream::PersonToPerson);
    assert!(step_h2h(&only_s, &beta(1.0), &mut rng).is_empty());
    only_s.push(BuildingId(0), occ(10, Compartment::Symptomatic, false));
    assert_eq!(step_h2h(&only_s, &beta(1.0), &mut rng).len(), 10);
}

#[test]
fn environmental_recurrence() {
    let mut p = EpiParams::default();
    p.env.decay_per_hour = 0.2;
    p.env.deposit_per_infectious_hour = 1.0;
    p.env.env_beta = 0.0;
    let mut rng = substream(0, Stream::Environmental);

    let mut loads = vec![10.0];
    let mut empty = Occupancy::new(1);
    empty.push(BuildingId(0), occ(0, Compartment::Susceptible, false));
    step_environmental(&mut loads, &empty, &p, &mut rng);
    assert!((loads[0] - 8.0).abs() < 1e-12);

    let mut occupancy = Occupancy::new(1);
    occupancy.push(BuildingId(0), occ(0, Compartment::Symptomatic, false));
    occupancy.push(BuildingId(0), occ(1, Compartment::Susceptible, false));
    let mut loads = vec![0.0];
    let mut trace = Vec::new();
    for _ in 0..3 {
        let infected = step_environmental(&mut loads, &occupancy, &p, &mut rng);
        assert!(infected.is_empty(), "env_beta 0 never infects");
        trace.push(loads[0]);
    }
    let expected = [1.0, 1.8, 2.44];
    for (got, want) in trace.iter().zip(expected) {
        assert!((got - want).abs() < 1e-12, "{trace:?}");
    }
}

#[test]
fn environmental_rate_matches_exponential() {
    let mut p = EpiParams::default();
    p.env.decay_per_hour = 0.5;
    p.env.env_beta = 0.1;
    let mut occupancy = Occupancy::new(1);
    for i in 0..100 {
        occupancy.push(BuildingId(0), occ(i, Compartment::Susceptible, false));
    }
    let mut rng = substream(3, Stream::Environmental);
    let trials = 2000;
    let mut hits = 0;
    for _ in 0..trials {
        // (4 * 0.5) + 0 deposit = 2 load units.
        let mut loads = vec![4.0];
        hits += step_environmental(&mut loads, &occupancy, &p, &mut rng).len();
    }
    let expected = 1.0 - (-0.1f64 * 2.0).exp();
    let n = trials * 100;
    let rate = hits as f64 / n as f64;
    assert!(
        (rate - expected).abs() < 3.0 * sigma(expected, n),
        "{rate} vs {expected}"
    );
}

#[test]
fn hospitalization_fraction() {
    let mut p = EpiParams::default();
    p.severity.p_hosp = [0.2; 3];
    let mut rng = substream(4, Stream::Disease);
    let n = 10_000;
    let mut hosp = 0;
    for _ in 0..n {
        let mut s = DiseaseState {
            compartment: Compartment::Presymptomatic,
            since: 0,
            next: Some((Compartment::Symptomatic, 1)),
        };
        enter_compartment(&mut s, Compartment::Symptomatic, 30, 1, &p, &mut rng).unwrap();
        if s.next.unwrap().0 == Compartment::Hospitalized {
            hosp += 1;
        }
    }
    let f = hosp as f64 / n as f64;
    assert!((f - 0.2).abs() < 3.0 * sigma(0.2, n), "{f}");
}

#[test]
fn certain_asymptomatic_branch() {
    let mut p = EpiParams::default();
    p.severity.p_asym = [1.0; 3];
    let mut rng = substream(2, Stream::Disease);
    for age in [5u8, 30, 70] {
        let mut s = DiseaseState::susceptible();
        infect(&mut s, age, 0, &p, &mut rng).unwrap();
        assert_eq!(s.next.unwrap().0, Compartment::Asymptomatic);
    }
}

/// Lognormal mean of the continuous draw is `mean_hours`; rounding up adds
/// at most one hour.
#[test]
fn duration_mean() {
    let d = Duration::new(120.0, 0.5);
    let mut rng = substream(8, Stream::Disease);
    let n = 20_000;
    let samples: Vec<f64> = (0..n).map(|_| sample_duration(d, &mut rng) as f64).collect();
    let mean = samples.iter().sum::<f64>() / n as f64;
    let sd = 120.0 * (0.25f64.exp() - 1.0).sqrt();
    let se = sd / (n as f64).sqrt();
    assert!(mean > 120.0 - 3.0 * se && mean < 121.0 + 3.0 * se, "{mean}");
    assert!(samples.iter().all(|&s| s >= 1.0));
}

fn run_to_absorption(age: u8, params: &EpiParams, rng: &mut SimRng) -> Vec<Compartment> {
    let mut s = DiseaseState::susceptible();
    infect(&mut s, age, 0, params, rng).unwrap();
    let mut path = vec![Compartment::Latent];
    let mut cycle = 0;
    while let Some((_, at)) = s.next {
        assert!(at > cycle, "transitions move forward in time");
        cycle = at;
        advance_disease(&mut s, age, cycle, params, rng).unwrap();
        path.push(s.compartment);
        assert_eq!(s.since, cycle);
    }
    path
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn progression_paths_are_legal(seed in any::<u64>(), age in 0u8..100, p_hosp in 0.0f64..=1.0, p_icu in 0.0f64..=1.0) {
        let mut params = EpiParams::default();
        params.severity.p_hosp = [p_hosp; 3];
        params.severity.p_icu = p_icu;
        let mut rng = substream(seed, Stream::Disease);
        let path = run_to_absorption(age, &params, &mut rng);
        for w in path.windows(2) {
            prop_assert!(w[0].can_move_to(w[1]), "{:?} -> {:?}", w[0], w[1]);
        }
        prop_assert!(path.last().unwrap().is_absorbing());
    }

    #[test]
    fn h2h_probability_bounded_and_monotone(b in 0.0f64..=1.0, k in 0.0f64..20.0, dk in 0.0f64..5.0, masked: bool) {
        let params = beta(b);
        let p = h2h_infection_probability(k, masked, &params);
        let q = h2h_infection_probability(k + dk, masked, &params);
        prop_assert!((0.0..=1.0).contains(&p));
        prop_assert!(q >= p - 1e-15);
        if masked {
            prop_assert!(p <= h2h_infection_probability(k, false, &params) + 1e-15);
        }
    }

    #[test]
    fn loads_stay_non_negative(decay in 0.01f64..0.99, n_inf in 0usize..5, hours in 1usize..50) {
        let mut p = EpiParams::default();
        p.env.decay_per_hour = decay;
        let mut occupancy = Occupancy::new(1);
        for i in 0..n_inf {
            occupancy.push(BuildingId(0), occ(i as u32, Compartment::Symptomatic, false));
        }
        let mut loads = vec![0.0];
        let mut rng = substream(0, Stream::Environmental);
        for _ in 0..hours {
            step_environmental(&mut loads, &occupancy, &p, &mut rng);
            prop_assert!(loads[0] >= 0.0);
            prop_assert!(loads[0] <= n_inf as f64 / decay + 1e-9);
        }
    }
}
