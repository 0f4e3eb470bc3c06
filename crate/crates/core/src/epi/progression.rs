//! Within-host progression. Each compartment samples its exit (target and
//! cycle) on entry; `advance_disease` applies it when the cycle arrives.

use rand::Rng;
use rand_distr::{Distribution, LogNormal};

use super::{Compartment, DiseaseEvent, DiseaseState, Duration, EpiError, EpiParams};
use crate::ids::Cycle;
use crate::rng::SimRng;
use crate::synthpop::AgeBand;

/// Lognormal with the given mean, rounded up to whole hours, at least 1.
pub fn sample_duration(d: Duration, rng: &mut SimRng) -> u64 {
    if d.sigma == 0.0 {
        return (d.mean_hours.ceil() as u64).max(1);
    }
    let mu = d.mean_hours.ln() - d.sigma * d.sigma / 2.0;
    let dist = LogNormal::new(mu, d.sigma).expect("checked parameters");
    (dist.sample(rng).ceil() as u64).max(1)
}

/// Moves `state` into `to` at `cycle` and samples the next transition.
///
/// Draws: Latent, Symptomatic, Hospitalized and Icu take one uniform for
/// their branch then one duration; Presymptomatic and Asymptomatic take one
/// duration; absorbing states take none.
pub fn enter_compartment(
    state: &mut DiseaseState,
    to: Compartment,
    age: u8,
    cycle: Cycle,
    params: &EpiParams,
    rng: &mut SimRng,
) -> Result<Option<DiseaseEvent>, EpiError> {
    if !state.compartment.can_move_to(to) {
        return Err(EpiError::IllegalTransition {
            from: state.compartment,
            to,
        });
    }
    let sev = &params.severity;
    let band = AgeBand::of(age);
    let branch = |rng: &mut SimRng, p: f64, yes: Compartment, no: Compartment| {
        if rng.random::<f64>() < p {
            yes
        } else {
            no
        }
    };
    let next = match to {
        Compartment::Latent => {
            let target = branch(
                rng,
                sev.p_asym(band),
                Compartment::Asymptomatic,
                Compartment::Presymptomatic,
            );
            Some((target, sev.latent))
        }
        Compartment::Presymptomatic => Some((Compartment::Symptomatic, sev.presym)),
        Compartment::Asymptomatic => Some((Compartment::Recovered, sev.asym)),
        Compartment::Symptomatic => {
            let target = branch(rng, sev.p_hosp(band), Compartment::Hospitalized, Compartment::Recovered);
            Some((target, sev.sym))
        }
        Compartment::Hospitalized => Some((
            branch(rng, sev.p_icu, Compartment::Icu, Compartment::Recovered),
            sev.hosp,
        )),
        Compartment::Icu => Some((
            branch(rng, sev.p_death_icu, Compartment::Dead, Compartment::Recovered),
            sev.icu,
        )),
        Compartment::Recovered | Compartment::Dead | Compartment::Susceptible => None,
    };
    state.compartment = to;
    state.since = cycle;
    state.next = next.map(|(target, d)| (target, cycle + sample_duration(d, rng)));
    Ok(match to {
        Compartment::Hospitalized => Some(DiseaseEvent::Hospitalized),
        Compartment::Dead => Some(DiseaseEvent::Death),
        _ => None,
    })
}

/// Susceptible to Latent at `cycle`.
pub fn infect(
    state: &mut DiseaseState,
    age: u8,
    cycle: Cycle,
    params: &EpiParams,
    rng: &mut SimRng,
) -> Result<(), EpiError> {
    enter_compartment(state, Compartment::Latent, age, cycle, params, rng).map(|_| ())
}

/// Applies the scheduled transition if it falls on `cycle`. Susceptible and
/// absorbing states are left alone.
pub fn advance_disease(
    state: &mut DiseaseState,
    age: u8,
    cycle: Cycle,
    params: &EpiParams,
    rng: &mut SimRng,
) -> Result<Option<DiseaseEvent>, EpiError> {
    match state.next {
        Some((to, at)) if at == cycle => enter_compartment(state, to, age, cycle, params, rng),
        Some((to, at)) if at < cycle => Err(EpiError::MissedTransition { to, at, now: cycle }),
        _ => Ok(None),
    }
}
