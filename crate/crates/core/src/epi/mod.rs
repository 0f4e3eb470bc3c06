//! Disease state machine, parameters and the two transmission routes.

mod params;
mod progression;
mod transmission;

use std::fmt;

use thiserror::Error;

use crate::ids::Cycle;

pub use params::{Duration, EnvironmentalParams, EpiParams, SeverityParams, TestingParams, TransmissionParams};
pub use progression::{advance_disease, enter_compartment, infect, sample_duration};
pub use transmission::{
    effective_infectious_count, h2h_infection_probability, step_environmental, step_h2h, Occupancy, Occupant,
};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Compartment {
    Susceptible,
    Latent,
    Presymptomatic,
    Asymptomatic,
    Symptomatic,
    Hospitalized,
    Icu,
    Recovered,
    Dead,
}

impl Compartment {
    pub const ALL: [Compartment; 9] = [
        Compartment::Susceptible,
        Compartment::Latent,
        Compartment::Presymptomatic,
        Compartment::Asymptomatic,
        Compartment::Symptomatic,
        Compartment::Hospitalized,
        Compartment::Icu,
        Compartment::Recovered,
        Compartment::Dead,
    ];

    pub fn is_infectious(self) -> bool {
        matches!(
            self,
            Compartment::Presymptomatic
                | Compartment::Asymptomatic
                | Compartment::Symptomatic
                | Compartment::Hospitalized
                | Compartment::Icu
        )
    }

    pub fn is_absorbing(self) -> bool {
        matches!(self, Compartment::Recovered | Compartment::Dead)
    }

    /// Held in a hospital bed rather than following the agenda.
    pub fn is_hospitalized(self) -> bool {
        matches!(self, Compartment::Hospitalized | Compartment::Icu)
    }

    /// Edges of the state graph.
    pub fn can_move_to(self, to: Compartment) -> bool {
        use Compartment::*;
        matches!(
            (self, to),
            (Susceptible, Latent)
                | (Latent, Presymptomatic | Asymptomatic)
                | (Presymptomatic, Symptomatic)
                | (Asymptomatic, Recovered)
                | (Symptomatic, Recovered | Hospitalized)
                | (Hospitalized, Recovered | Icu)
                | (Icu, Recovered | Dead)
        )
    }

    /// Column label used in time-series output.
    pub fn short_label(self) -> &'static str {
        match self {
            Compartment::Susceptible => "S",
            Compartment::Latent => "L",
            Compartment::Presymptomatic => "PreSym",
            Compartment::Asymptomatic => "Asym",
            Compartment::Symptomatic => "Sym",
            Compartment::Hospitalized => "Hosp",
            Compartment::Icu => "ICU",
            Compartment::Recovered => "R",
            Compartment::Dead => "D",
        }
    }
}

impl fmt::Display for Compartment {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Debug::fmt(self, f)
    }
}

/// Current compartment, when it was entered, and the transition sampled on
/// entry.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct DiseaseState {
    pub compartment: Compartment,
    pub since: Cycle,
    pub next: Option<(Compartment, Cycle)>,
}

impl DiseaseState {
    pub fn susceptible() -> Self {
        DiseaseState {
            compartment: Compartment::Susceptible,
            since: 0,
            next: None,
        }
    }

    pub fn is_infectious(&self) -> bool {
        self.compartment.is_infectious()
    }
}

#[derive(Debug, Error, PartialEq)]
pub enum EpiError {
    #[error("illegal transition {from} -> {to}")]
    IllegalTransition { from: Compartment, to: Compartment },
    #[error("transition to {to} scheduled at cycle {at} was missed (now {now})")]
    MissedTransition { to: Compartment, at: Cycle, now: Cycle },
    #[error("invalid epidemiological parameters: {0}")]
    InvalidParams(String),
}

/// Emitted when a state change matters outside the individual.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum DiseaseEvent {
    Hospitalized,
    Death,
}
