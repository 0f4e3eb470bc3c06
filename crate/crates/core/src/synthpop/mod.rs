//! Synthetic population: demographics, households, school/work attachment
//! and hourly agendas.

mod agenda;
mod io;

use std::fmt;
use std::str::FromStr;

use rand::seq::index::sample;
use rand::Rng;
use rand_distr::{weighted::WeightedIndex, Distribution};
use thiserror::Error;

use crate::epi::DiseaseState;
use crate::geo::{BuildingType, Region};
use crate::ids::{BuildingId, HouseholdId, PersonId};
use crate::kv::{KvError, KvFile};
use crate::policy::QuarantineStatus;
use crate::rng::{substream, SimRng, Stream};

pub use agenda::{build_agenda, ActivityKind, Agenda, AgendaBuilder, AgendaParams, DayKind, Slot};
pub use io::{agendas_to_csv, population_to_csv};

pub const MAX_HOUSEHOLD_SIZE: usize = 12;

#[derive(Debug, Error)]
pub enum PopulationError {
    #[error("infeasible population parameters: {0}")]
    InfeasibleParams(String),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Sex {
    F,
    M,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Employment {
    Student,
    Worker,
    EssentialWorker,
    Unemployed,
    Retired,
}

impl Employment {
    pub fn is_worker(self) -> bool {
        matches!(self, Employment::Worker | Employment::EssentialWorker)
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Employment::Student => "student",
            Employment::Worker => "worker",
            Employment::EssentialWorker => "essential_worker",
            Employment::Unemployed => "unemployed",
            Employment::Retired => "retired",
        }
    }

    /// Building type required for the attachment, if any.
    pub fn attachment_type(self) -> Option<BuildingType> {
        match self {
            Employment::Student => Some(BuildingType::School),
            Employment::Worker | Employment::EssentialWorker => Some(BuildingType::Workplace),
            Employment::Unemployed | Employment::Retired => None,
        }
    }
}

impl fmt::Display for Employment {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Age bands shared by demographics and severity parameters.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum AgeBand {
    Child,
    Adult,
    Senior,
}

impl AgeBand {
    pub const ALL: [AgeBand; 3] = [AgeBand::Child, AgeBand::Adult, AgeBand::Senior];

    pub fn of(age: u8) -> AgeBand {
        match age {
            0..=17 => AgeBand::Child,
            18..=59 => AgeBand::Adult,
            _ => AgeBand::Senior,
        }
    }

    pub fn range(self) -> (u8, u8) {
        match self {
            AgeBand::Child => (0, 17),
            AgeBand::Adult => (18, 59),
            AgeBand::Senior => (60, 99),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Individual {
    pub id: PersonId,
    pub age: u8,
    pub sex: Sex,
    pub employment: Employment,
    pub household_id: HouseholdId,
    pub home: BuildingId,
    pub attachment: Option<BuildingId>,
    pub agenda: Agenda,
    pub state: DiseaseState,
    pub quarantine: QuarantineStatus,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Household {
    pub id: HouseholdId,
    /// Ascending.
    pub member_ids: Vec<PersonId>,
    pub home: BuildingId,
}

#[derive(Clone, Debug, PartialEq)]
pub struct PopulationParams {
    /// Weights for the 0–17, 18–59 and 60–99 bands.
    pub age_band_weights: [f64; 3],
    /// Probability of sizes 1, 2, ... (at most 12 entries).
    pub household_size_pmf: Vec<f64>,
    pub essential_worker_fraction: f64,
    /// Share of 18–59 year olds (not in tertiary education) who work.
    pub employment_rate: f64,
    /// Share of 60–65 year olds still working.
    pub senior_employment_rate: f64,
    /// Share of 18–22 year olds who are students.
    pub tertiary_student_rate: f64,
    pub agenda: AgendaParams,
}

impl Default for PopulationParams {
    fn default() -> Self {
        PopulationParams {
            age_band_weights: [0.35, 0.55, 0.10],
            household_size_pmf: vec![0.05, 0.10, 0.15, 0.22, 0.20, 0.13, 0.08, 0.07],
            essential_worker_fraction: 0.10,
            employment_rate: 0.6,
            senior_employment_rate: 0.3,
            tertiary_student_rate: 0.4,
            agenda: AgendaParams::default(),
        }
    }
}

impl PopulationParams {
    pub const KEYS: [&'static str; 11] = [
        "age_band_weights",
        "household_size_pmf",
        "essential_worker_fraction",
        "employment_rate",
        "senior_employment_rate",
        "tertiary_student_rate",
        "evening_home_p",
        "evening_shop_p",
        "evening_leisure_p",
        "trip_radius_m",
        "nearest_school_p",
    ];

    pub fn apply_kv(&mut self, kv: &KvFile) -> Result<(), KvError> {
        if let Some(w) = kv.get_list("age_band_weights")? {
            self.age_band_weights = w
                .try_into()
                .map_err(|_| KvError::Invalid("age_band_weights needs 3 weights".into()))?;
        }
        if let Some(p) = kv.get_list("household_size_pmf")? {
            self.household_size_pmf = p;
        }
        kv.set("essential_worker_fraction", &mut self.essential_worker_fraction)?;
        kv.set("employment_rate", &mut self.employment_rate)?;
        kv.set("senior_employment_rate", &mut self.senior_employment_rate)?;
        kv.set("tertiary_student_rate", &mut self.tertiary_student_rate)?;
        kv.set("evening_home_p", &mut self.agenda.evening_home_p)?;
        kv.set("evening_shop_p", &mut self.agenda.evening_shop_p)?;
        kv.set("evening_leisure_p", &mut self.agenda.evening_leisure_p)?;
        kv.set("trip_radius_m", &mut self.agenda.trip_radius_m)?;
        kv.set("nearest_school_p", &mut self.agenda.nearest_school_p)?;
        Ok(())
    }

    pub fn check(&self) -> Result<(), PopulationError> {
        let bad = |m: String| Err(PopulationError::InfeasibleParams(m));
        let prob = |p: f64| (0.0..=1.0).contains(&p);
        if self.age_band_weights.iter().any(|&w| w < 0.0) || self.age_band_weights[1..].iter().sum::<f64>() <= 0.0 {
            return bad("age band weights must be non-negative with some adult mass".into());
        }
        let pmf = &self.household_size_pmf;
        if pmf.is_empty()
            || pmf.len() > MAX_HOUSEHOLD_SIZE
            || pmf.iter().any(|&p| p < 0.0)
            || pmf.iter().sum::<f64>() <= 0.0
        {
            return bad(format!(
                "household_size_pmf must have 1..={MAX_HOUSEHOLD_SIZE} non-negative entries with positive mass"
            ));
        }
        for (name, p) in [
            ("essential_worker_fraction", self.essential_worker_fraction),
            ("employment_rate", self.employment_rate),
            ("senior_employment_rate", self.senior_employment_rate),
            ("tertiary_student_rate", self.tertiary_student_rate),
            ("nearest_school_p", self.agenda.nearest_school_p),
        ] {
            if !prob(p) {
                return bad(format!("{name} = {p} is not a probability"));
            }
        }
        self.agenda.check().map_err(PopulationError::InfeasibleParams)
    }
}

fn sample_age(rng: &mut SimRng, bands: &WeightedIndex<f64>) -> u8 {
    let (lo, hi) = AgeBand::ALL[bands.sample(rng)].range();
    rng.random_range(lo..=hi)
}

fn sample_employment(age: u8, params: &PopulationParams, rng: &mut SimRng) -> Employment {
    match age {
        0..=2 => Employment::Unemployed,
        3..=17 => Employment::Student,
        18..=22 if rng.random::<f64>() < params.tertiary_student_rate => Employment::Student,
        18..=59 => {
            if rng.random::<f64>() < params.employment_rate {
                Employment::Worker
            } else {
                Employment::Unemployed
            }
        }
        60..=65 => {
            if rng.random::<f64>() < params.senior_employment_rate {
                Employment::Worker
            } else {
                Employment::Retired
            }
        }
        _ => Employment::Retired,
    }
}

/// Household-size sampler; exposed so distribution checks can reuse it.
pub fn household_size_distribution(params: &PopulationParams) -> Result<WeightedIndex<f64>, PopulationError> {
    WeightedIndex::new(&params.household_size_pmf)
        .map_err(|e| PopulationError::InfeasibleParams(format!("household_size_pmf: {e}")))
}

/// Weight of each residential building: its grid cell's count split evenly
/// among the residential buildings in that cell.
fn residential_weights(region: &Region) -> Vec<(BuildingId, f64)> {
    let homes: Vec<_> = region.buildings_of(BuildingType::Residential).collect();
    let cells: Vec<Option<(usize, usize)>> = homes.iter().map(|b| region.grid.cell_of(b.centroid())).collect();
    homes
        .iter()
        .zip(&cells)
        .map(|(b, cell)| {
            let w = match cell {
                Some((r, c)) => {
                    let sharing = cells.iter().filter(|x| *x == cell).count() as f64;
                    f64::from(region.grid.count(*r, *c)) / sharing
                }
                None => 0.0,
            };
            (b.id, w)
        })
        .collect()
}

/// Builds `region.total_population` individuals grouped into households,
/// with attachments and agendas. Deterministic in `(region, params, seed)`.
pub fn generate_population(
    region: &Region,
    params: &PopulationParams,
    seed: u64,
) -> Result<(Vec<Individual>, Vec<Household>), PopulationError> {
    params.check()?;
    let homes = residential_weights(region);
    let home_index = WeightedIndex::new(homes.iter().map(|(_, w)| *w))
        .map_err(|_| PopulationError::InfeasibleParams("no population mass on residential buildings".into()))?;
    let sizes = household_size_distribution(params)?;
    let bands = WeightedIndex::new(params.age_band_weights)
        .map_err(|e| PopulationError::InfeasibleParams(format!("age_band_weights: {e}")))?;
    let mut adult_weights = params.age_band_weights;
    adult_weights[0] = 0.0;
    let adult_bands = WeightedIndex::new(adult_weights)
        .map_err(|e| PopulationError::InfeasibleParams(format!("age_band_weights: {e}")))?;

    let mut rng = substream(seed, Stream::Demographics);
    let total = region.total_population as usize;
    let mut individuals: Vec<Individual> = Vec::with_capacity(total);
    let mut households = Vec::new();
    while individuals.len() < total {
        let size = (sizes.sample(&mut rng) + 1).min(total - individuals.len());
        let hid = HouseholdId(households.len() as u32);
        let home = homes[home_index.sample(&mut rng)].0;
        let mut members = Vec::with_capacity(size);
        for k in 0..size {
            // The first member heads the household and is an adult.
            let age = sample_age(&mut rng, if k == 0 { &adult_bands } else { &bands });
            let sex = if rng.random::<bool>() { Sex::F } else { Sex::M };
            let employment = sample_employment(age, params, &mut rng);
            let id = PersonId(individuals.len() as u32);
            members.push(id);
            individuals.push(Individual {
                id,
                age,
                sex,
                employment,
                household_id: hid,
                home,
                attachment: None,
                agenda: Agenda::all_home(home),
                state: DiseaseState::susceptible(),
                quarantine: QuarantineStatus::free(),
            });
        }
        households.push(Household {
            id: hid,
            member_ids: members,
            home,
        });
    }

    // Exact essential-worker share among workers.
    let workers: Vec<usize> = (0..total).filter(|&i| individuals[i].employment.is_worker()).collect();
    let n_essential = (params.essential_worker_fraction * workers.len() as f64).round() as usize;
    for k in sample(&mut rng, workers.len(), n_essential) {
        individuals[workers[k]].employment = Employment::EssentialWorker;
    }

    assign_attachments(&mut individuals, region, &params.agenda, seed)?;
    let builder = AgendaBuilder::new(region, &params.agenda);
    for ind in &mut individuals {
        ind.agenda = builder.build(ind, seed);
    }
    Ok((individuals, households))
}

/// Nearest school to `home`, ties to the lowest id.
pub fn nearest_school(region: &Region, home: BuildingId) -> Option<BuildingId> {
    let origin = region.building(home).centroid();
    region
        .buildings_of(BuildingType::School)
        .map(|s| (s.centroid().distance(origin), s.id))
        .min_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)))
        .map(|(_, id)| id)
}

/// Students: nearest school with probability `nearest_school_p`, else a
/// uniform school. Workers: workplace drawn proportional to capacity.
///
/// Draw order, in ascending individual id: a student consumes one uniform
/// and, when it exceeds `nearest_school_p`, one index draw; a worker
/// consumes one weighted-index draw.
pub fn assign_attachments(
    individuals: &mut [Individual],
    region: &Region,
    params: &AgendaParams,
    seed: u64,
) -> Result<(), PopulationError> {
    let schools: Vec<BuildingId> = region.buildings_of(BuildingType::School).map(|b| b.id).collect();
    let workplaces: Vec<(BuildingId, u32)> = region
        .buildings_of(BuildingType::Workplace)
        .map(|b| (b.id, b.capacity))
        .collect();
    let needs_school = individuals.iter().any(|i| i.employment == Employment::Student);
    let needs_work = individuals.iter().any(|i| i.employment.is_worker());
    if needs_school && schools.is_empty() {
        return Err(PopulationError::InfeasibleParams("region has no school".into()));
    }
    let work_index = if needs_work {
        Some(
            WeightedIndex::new(workplaces.iter().map(|(_, c)| f64::from(*c)))
                .map_err(|_| PopulationError::InfeasibleParams("region has no workplace capacity".into()))?,
        )
    } else {
        None
    };
    let mut rng = substream(seed, Stream::Attachments);
    for ind in individuals.iter_mut() {
        ind.attachment = match ind.employment {
            Employment::Student => {
                if rng.random::<f64>() < params.nearest_school_p {
                    nearest_school(region, ind.home)
                } else {
                    Some(schools[rng.random_range(0..schools.len())])
                }
            }
            Employment::Worker | Employment::EssentialWorker => {
                let idx = work_index.as_ref().expect("built when workers exist").sample(&mut rng);
                Some(workplaces[idx].0)
            }
            Employment::Unemployed | Employment::Retired => None,
        };
    }
    Ok(())
}

/// One broken invariant. `individual` is set when the problem is specific
/// to a person.
#[derive(Clone, Debug, PartialEq)]
pub struct Violation {
    pub individual: Option<PersonId>,
    pub household: Option<HouseholdId>,
    pub message: String,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match (self.individual, self.household) {
            (Some(p), _) => write!(f, "individual {p}: {}", self.message),
            (None, Some(h)) => write!(f, "household {h}: {}", self.message),
            (None, None) => f.write_str(&self.message),
        }
    }
}

/// Every population invariant that does not hold. Never mutates inputs.
pub fn validate_population(individuals: &[Individual], households: &[Household], region: &Region) -> Vec<Violation> {
    let mut out = Vec::new();
    let person = |id: PersonId, message: String| Violation {
        individual: Some(id),
        household: None,
        message,
    };
    let building_type = |id: BuildingId| region.buildings.get(id.index()).map(|b| b.btype);

    if individuals.len() != region.total_population as usize {
        out.push(Violation {
            individual: None,
            household: None,
            message: format!(
                "{} individuals for a region population of {}",
                individuals.len(),
                region.total_population
            ),
        });
    }

    let mut membership = vec![0usize; individuals.len()];
    for h in households {
        if h.member_ids.is_empty() || h.member_ids.len() > MAX_HOUSEHOLD_SIZE {
            out.push(Violation {
                individual: None,
                household: Some(h.id),
                message: format!("size {} outside 1..={MAX_HOUSEHOLD_SIZE}", h.member_ids.len()),
            });
        }
        if building_type(h.home) != Some(BuildingType::Residential) {
            out.push(Violation {
                individual: None,
                household: Some(h.id),
                message: format!("home {} is not residential", h.home),
            });
        }
        for &m in &h.member_ids {
            match individuals.get(m.index()) {
                Some(ind) => {
                    membership[m.index()] += 1;
                    if ind.household_id != h.id {
                        out.push(person(
                            m,
                            format!("listed in household {} but records {}", h.id, ind.household_id),
                        ));
                    }
                    if ind.home != h.home {
                        out.push(person(
                            m,
                            format!("home {} differs from household home {}", ind.home, h.home),
                        ));
                    }
                }
                None => out.push(Violation {
                    individual: None,
                    household: Some(h.id),
                    message: format!("unknown member {m}"),
                }),
            }
        }
    }

    for (i, ind) in individuals.iter().enumerate() {
        if ind.id.index() != i {
            out.push(person(ind.id, format!("stored at position {i}")));
        }
        if membership.get(i).copied() != Some(1) {
            out.push(person(
                ind.id,
                format!("belongs to {} households", membership.get(i).copied().unwrap_or(0)),
            ));
        }
        let age_ok = match ind.employment {
            Employment::Student => (3..=22).contains(&ind.age),
            Employment::Worker | Employment::EssentialWorker => (18..=65).contains(&ind.age),
            Employment::Retired => ind.age >= 60,
            Employment::Unemployed => ind.age <= 99,
        };
        if !age_ok || ind.age > 99 {
            out.push(person(
                ind.id,
                format!("age {} invalid for {}", ind.age, ind.employment),
            ));
        }
        if building_type(ind.home) != Some(BuildingType::Residential) {
            out.push(person(ind.id, format!("home {} is not residential", ind.home)));
        }
        match (ind.employment.attachment_type(), ind.attachment) {
            (None, None) => {}
            (Some(want), Some(b)) if building_type(b) == Some(want) => {}
            (want, got) => out.push(person(
                ind.id,
                format!(
                    "{} attached to {:?} ({:?}), expected {:?}",
                    ind.employment,
                    got,
                    got.and_then(building_type),
                    want
                ),
            )),
        }
        let agenda = ind.agenda.problems(ind, region);
        if !agenda.is_empty() {
            out.push(person(ind.id, format!("agenda: {}", agenda.join("; "))));
        }
    }
    out
}

impl FromStr for Employment {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        [
            Employment::Student,
            Employment::Worker,
            Employment::EssentialWorker,
            Employment::Unemployed,
            Employment::Retired,
        ]
        .into_iter()
        .find(|e| e.as_str() == s)
        .ok_or_else(|| format!("unknown employment `{s}`"))
    }
}
