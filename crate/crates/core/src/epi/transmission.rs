//! Building-level transmission. Both routes read the occupancy snapshot
//! taken at the start of the hour; infections they produce only take effect
//! at the next cycle.

use rand::Rng;

use super::{Compartment, EpiParams};
use crate::ids::{BuildingId, PersonId};
use crate::rng::SimRng;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Occupant {
    pub id: PersonId,
    pub compartment: Compartment,
    pub masked: bool,
}

/// Who is in which building this hour. Occupants are pushed in ascending id
/// order, which fixes the draw order of both transmission steps.
#[derive(Clone, Debug, Default)]
pub struct Occupancy {
    by_building: Vec<Vec<Occupant>>,
}

impl Occupancy {
    pub fn new(buildings: usize) -> Self {
        Occupancy {
            by_building: vec![Vec::new(); buildings],
        }
    }

    pub fn clear(&mut self) {
        self.by_building.iter_mut().for_each(Vec::clear);
    }

    pub fn push(&mut self, building: BuildingId, occupant: Occupant) {
        self.by_building[building.index()].push(occupant);
    }

    pub fn building_count(&self) -> usize {
        self.by_building.len()
    }

    pub fn occupants(&self, building: BuildingId) -> &[Occupant] {
        &self.by_building[building.index()]
    }

    pub fn iter(&self) -> impl Iterator<Item = (BuildingId, &[Occupant])> {
        self.by_building
            .iter()
            .enumerate()
            .map(|(i, v)| (BuildingId(i as u32), v.as_slice()))
    }
}

/// Σ over infectious occupants of asymptomatic weight × mask weight.
pub fn effective_infectious_count<'a>(occupants: impl IntoIterator<Item = &'a Occupant>, params: &EpiParams) -> f64 {
    occupants
        .into_iter()
        .filter(|o| o.compartment.is_infectious())
        .map(|o| {
            let w = if o.compartment == Compartment::Asymptomatic {
                params.h2h.asym_factor
            } else {
                1.0
            };
            let m = if o.masked { params.h2h.mask_factor } else { 1.0 };
            w * m
        })
        .sum()
}

/// `1 - (1 - beta_h * m)^k_eff`, clamped to [0, 1].
pub fn h2h_infection_probability(k_eff: f64, susceptible_masked: bool, params: &EpiParams) -> f64 {
    if k_eff <= 0.0 {
        return 0.0;
    }
    let m = if susceptible_masked {
        params.h2h.mask_factor
    } else {
        1.0
    };
    let per_contact = (params.h2h.beta_h * m).clamp(0.0, 1.0);
    (1.0 - (1.0 - per_contact).powf(k_eff)).clamp(0.0, 1.0)
}

/// Decays and replenishes every building's viral load, then exposes each
/// susceptible occupant to `1 - exp(-env_beta * load)`. One draw per
/// susceptible, in building then occupant order.
pub fn step_environmental(
    loads: &mut [f64],
    occupancy: &Occupancy,
    params: &EpiParams,
    rng: &mut SimRng,
) -> Vec<PersonId> {
    debug_assert_eq!(loads.len(), occupancy.building_count());
    let mut infected = Vec::new();
    for (building, occupants) in occupancy.iter() {
        let load = &mut loads[building.index()];
        *load *= 1.0 - params.env.decay_per_hour;
        *load += params.env.deposit_per_infectious_hour * effective_infectious_count(occupants, params);
        let p = 1.0 - (-params.env.env_beta * *load).exp();
        for o in occupants.iter().filter(|o| o.compartment == Compartment::Susceptible) {
            if rng.random::<f64>() < p {
                infected.push(o.id);
            }
        }
    }
    infected
}

/// Person-to-person infections within each building. One draw per
/// susceptible occupant, in building then occupant order.
pub fn step_h2h(occupancy: &Occupancy, params: &EpiParams, rng: &mut SimRng) -> Vec<PersonId> {
    let mut infected = Vec::new();
    for (_, occupants) in occupancy.iter() {
        let k_eff = effective_infectious_count(occupants, params);
        for o in occupants.iter().filter(|o| o.compartment == Compartment::Susceptible) {
            let p = h2h_infection_probability(k_eff, o.masked, params);
            if rng.random::<f64>() < p {
                infected.push(o.id);
            }
        }
    }
    infected
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::{substream, Stream};

    fn occ(id: u32, c: Compartment, masked: bool) -> Occupant {
        Occupant {
            id: PersonId(id),
            compartment: c,
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
        let mixed = [
            occ(0, Compartment::Symptomatic, true),
            occ(1, Compartment::Asymptomatic, false),
            occ(2, Compartment::Latent, false),
        ];
        assert!((effective_infectious_count(&mixed, &p) - 1.05).abs() < 1e-12);
    }

    #[test]
    fn probability_examples() {
        let mut p = EpiParams::default();
        assert_eq!(h2h_infection_probability(0.0, false, &p), 0.0);
        p.h2h.beta_h = 1.0;
        assert_eq!(h2h_infection_probability(1.0, false, &p), 1.0);
        p.h2h.beta_h = 0.05;
        assert!((h2h_infection_probability(3.0, false, &p) - 0.142625).abs() < 1e-12);
        // masked susceptible halves the per-contact probability
        assert!((h2h_infection_probability(1.0, true, &p) - 0.025).abs() < 1e-12);
    }

    #[test]
    fn environmental_recurrence() {
        let mut p = EpiParams::default();
        p.env.decay_per_hour = 0.2;
        p.env.deposit_per_infectious_hour = 1.0;
        let mut rng = substream(1, Stream::Environmental);

        let mut loads = vec![10.0];
        let empty = Occupancy::new(1);
        step_environmental(&mut loads, &empty, &p, &mut rng);
        assert!((loads[0] - 8.0).abs() < 1e-12);

        let mut loads = vec![0.0];
        let mut one = Occupancy::new(1);
        one.push(BuildingId(0), occ(0, Compartment::Symptomatic, false));
        let mut trace = Vec::new();
        for _ in 0..3 {
            step_environmental(&mut loads, &one, &p, &mut rng);
            trace.push(loads[0]);
        }
        for (got, want) in trace.iter().zip([1.0, 1.8, 2.44]) {
            assert!((got - want).abs() < 1e-12, "{trace:?}");
        }
    }

    #[test]
    fn zero_env_beta_never_infects() {
        let mut p = EpiParams::default();
        p.env.env_beta = 0.0;
        let mut occupancy = Occupancy::new(1);
        occupancy.push(BuildingId(0), occ(0, Compartment::Symptomatic, false));
        for i in 1..50 {
            occupancy.push(BuildingId(0), occ(i, Compartment::Susceptible, false));
        }
        let mut loads = vec![1e6];
        let mut rng = substream(3, Stream::Environmental);
        for _ in 0..100 {
            assert!(step_environmental(&mut loads, &occupancy, &p, &mut rng).is_empty());
        }
    }

    #[test]
    fn certain_h2h_infects_everyone_present() {
        let mut p = EpiParams::default();
        p.h2h.beta_h = 1.0;
        let mut occupancy = Occupancy::new(2);
        occupancy.push(BuildingId(0), occ(0, Compartment::Symptomatic, false));
        for i in 1..=6 {
            occupancy.push(BuildingId(0), occ(i, Compartment::Susceptible, false));
        }
        occupancy.push(BuildingId(1), occ(7, Compartment::Susceptible, false));
        let mut rng = substream(3, Stream::PersonToPerson);
        let got = step_h2h(&occupancy, &p, &mut rng);
        assert_eq!(got, (1..=6).map(PersonId).collect::<Vec<_>>());
    }

    #[test]
    fn only_susceptibles_no_events() {
        let p = EpiParams::default();
        let mut occupancy = Occupancy::new(1);
        for i in 0..10 {
            occupancy.push(BuildingId(0), occ(i, Compartment::Susceptible, false));
        }
        let mut rng = substream(3, Stream::PersonToPerson);
        assert!(step_h2h(&occupancy, &p, &mut rng).is_empty());
    }
}
