//! The hourly simulation loop.
//!
//! Each step processes the hour starting at `cycle` in a fixed order:
//!
//! 1. mobility: every living agent moves to the building the policy allows
//!    for its agenda slot;
//! 2. environmental transmission;
//! 3. person-to-person transmission (same occupancy snapshot as step 2);
//! 4. disease progression to `cycle + 1`: new infections enter Latent,
//!    scheduled transitions fire, deaths are credited to the home block;
//! 5. authority hooks: due test results, daily testing at hour 8, lockdown
//!    review at hour 0;
//! 6. `cycle += 1` and a [`TimeSeriesRecord`] is emitted.
//!
//! Randomness comes from one substream per subsystem (init, environment,
//! person-to-person, disease, testing), so policy arms sharing a seed draw
//! identical numbers until their histories diverge.

mod record;

use std::path::PathBuf;
use std::sync::Arc;

use rand::seq::index::sample;
use rand::Rng;
use thiserror::Error;

use crate::epi::{
    advance_disease, infect, step_environmental, step_h2h, Compartment, DiseaseEvent, EpiError, EpiParams, Occupancy,
    Occupant,
};
use crate::geo::{generate_synthetic_region, load_region, GeoError, Region, RegionSpec};
use crate::ids::{hour_of_day, BlockId, BuildingId, Cycle, PersonId, HOURS_PER_DAY};
use crate::policy::{
    allowed_destination, apply_positive, run_daily_tests, update_dynamic_lockdown, AuthorityState, Measure,
    MobilityContext, Policy, PolicyError, QuarantineKind, QuarantineStatus,
};
use crate::rng::{substream, SimRng, Stream};
use crate::synthpop::{generate_population, Household, Individual, PopulationError, PopulationParams};

pub use record::{
    block_deaths_to_csv, parse_records_csv, records_to_csv, summarize, write_csv_row, Summary, TimeSeriesRecord,
    CSV_HEADER,
};

pub const TESTING_HOUR: usize = 8;
pub const REVIEW_HOUR: usize = 0;

#[derive(Debug, Error)]
pub enum SimError {
    #[error(transparent)]
    Geo(#[from] GeoError),
    #[error(transparent)]
    Population(#[from] PopulationError),
    #[error(transparent)]
    Epi(#[from] EpiError),
    #[error(transparent)]
    Policy(#[from] PolicyError),
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("invariant violated at cycle {cycle}: {message}")]
    Invariant { cycle: Cycle, message: String },
}

impl SimError {
    /// Errors caused by the configuration rather than by running it.
    pub fn is_config(&self) -> bool {
        match self {
            SimError::Config(_) | SimError::Population(_) => true,
            SimError::Geo(e) => !matches!(e, GeoError::Io { .. }),
            SimError::Epi(e) => matches!(e, EpiError::InvalidParams(_)),
            SimError::Policy(e) => matches!(e, PolicyError::Invalid(_)),
            SimError::Invariant { .. } => false,
        }
    }
}

#[derive(Clone, Debug)]
pub enum RegionSource {
    Generate(RegionSpec),
    /// Directory with `buildings.json`, `blocks.json` and `grid.csv`.
    Load(PathBuf),
}

#[derive(Clone, Debug)]
pub struct SimConfig {
    pub seed: u64,
    pub n_cycles: u64,
    pub initial_infected: u32,
    pub region: RegionSource,
    pub population: PopulationParams,
    pub epi: EpiParams,
    pub policy: Policy,
    /// Check conservation and monotonicity after every step.
    pub assert_invariants: bool,
}

impl Default for SimConfig {
    fn default() -> Self {
        SimConfig {
            seed: 0,
            n_cycles: 5500,
            initial_infected: 5,
            region: RegionSource::Generate(RegionSpec::desk()),
            population: PopulationParams::default(),
            epi: EpiParams::default(),
            policy: Policy::none(),
            assert_invariants: false,
        }
    }
}

impl SimConfig {
    pub fn validate(&self) -> Result<(), SimError> {
        if self.n_cycles == 0 {
            return Err(SimError::Config("n_cycles must be at least 1".into()));
        }
        self.epi.check()?;
        self.population.check()?;
        self.policy.check()?;
        let mut measure = &self.policy.measure;
        if let Measure::LateLockdown { inner, .. } = measure {
            measure = inner;
        }
        if let Measure::RealisticLockdown { essential_fraction, .. } = measure {
            if (essential_fraction - self.population.essential_worker_fraction).abs() > 1e-12 {
                return Err(SimError::Config(format!(
                    "realistic lockdown essential_fraction {essential_fraction} differs from the population's \
                     essential_worker_fraction {}",
                    self.population.essential_worker_fraction
                )));
            }
        }
        if let Measure::DynamicSpatialLockdown(d) = measure {
            if d.review_interval_hours == 0 {
                return Err(SimError::Config("review_interval_hours must be positive".into()));
            }
        }
        Ok(())
    }
}

/// Region and population shared by every arm run with one seed.
#[derive(Clone, Debug)]
pub struct Scenario {
    pub region: Arc<Region>,
    pub individuals: Arc<Vec<Individual>>,
    pub households: Arc<Vec<Household>>,
}

impl Scenario {
    pub fn build(config: &SimConfig) -> Result<Scenario, SimError> {
        let region = match &config.region {
            RegionSource::Generate(spec) => generate_synthetic_region(spec, config.seed)?,
            RegionSource::Load(dir) => load_region(dir)?,
        };
        let (individuals, households) = generate_population(&region, &config.population, config.seed)?;
        Ok(Scenario {
            region: Arc::new(region),
            individuals: Arc::new(individuals),
            households: Arc::new(households),
        })
    }
}

pub struct SimState {
    cycle: Cycle,
    n_cycles: Cycle,
    policy: Policy,
    epi: EpiParams,
    assert_invariants: bool,
    region: Arc<Region>,
    households: Arc<Vec<Household>>,
    individuals: Vec<Individual>,
    ctx: MobilityContext,
    mask_wearer: Vec<bool>,
    locations: Vec<Option<BuildingId>>,
    loads: Vec<f64>,
    occupancy: Occupancy,
    newly_infected: Vec<bool>,
    authority: AuthorityState,
    env_rng: SimRng,
    h2h_rng: SimRng,
    disease_rng: SimRng,
    testing_rng: SimRng,
    cumulative_deaths: u32,
    tests_today: u32,
    last: TimeSeriesRecord,
}

/// Builds the scenario and the cycle-0 state.
pub fn init_sim(config: &SimConfig) -> Result<SimState, SimError> {
    config.validate()?;
    let scenario = Scenario::build(config)?;
    SimState::new(&scenario, config)
}

impl SimState {
    pub fn new(scenario: &Scenario, config: &SimConfig) -> Result<SimState, SimError> {
        config.validate()?;
        let individuals: Vec<Individual> = scenario.individuals.as_ref().clone();
        let n = individuals.len();
        if config.initial_infected as usize > n {
            return Err(SimError::Config(format!(
                "initial_infected {} exceeds population {n}",
                config.initial_infected
            )));
        }
        let region = Arc::clone(&scenario.region);
        let ctx = MobilityContext::new(&region, &individuals, &scenario.households);
        let mut init_rng = substream(config.seed, Stream::SimInit);
        let mut seeds: Vec<usize> = sample(&mut init_rng, n, config.initial_infected as usize).into_vec();
        seeds.sort_unstable();
        let adherence = config.epi.testing.mask_adherence;
        let mask_wearer = (0..n).map(|_| init_rng.random::<f64>() < adherence).collect();

        let mut state = SimState {
            cycle: 0,
            n_cycles: config.n_cycles,
            policy: config.policy.clone(),
            epi: config.epi.clone(),
            assert_invariants: config.assert_invariants,
            households: Arc::clone(&scenario.households),
            ctx,
            mask_wearer,
            locations: vec![None; n],
            loads: vec![0.0; region.buildings.len()],
            occupancy: Occupancy::new(region.buildings.len()),
            newly_infected: vec![false; n],
            authority: AuthorityState::new(region.blocks.len()),
            env_rng: substream(config.seed, Stream::Environmental),
            h2h_rng: substream(config.seed, Stream::PersonToPerson),
            disease_rng: substream(config.seed, Stream::Disease),
            testing_rng: substream(config.seed, Stream::Testing),
            cumulative_deaths: 0,
            tests_today: 0,
            last: TimeSeriesRecord {
                cycle: 0,
                counts: [0; 9],
                new_infections: 0,
                cumulative_deaths: 0,
                per_block_cum_deaths: Vec::new(),
                tests_today: 0,
                locked_blocks: 0,
            },
            region,
            individuals,
        };
        for &i in &seeds {
            let ind = &mut state.individuals[i];
            infect(&mut ind.state, ind.age, 0, &state.epi, &mut state.disease_rng)?;
        }
        state.last = state.snapshot(seeds.len() as u32);
        Ok(state)
    }

    pub fn cycle(&self) -> Cycle {
        self.cycle
    }

    pub fn is_finished(&self) -> bool {
        self.cycle >= self.n_cycles
    }

    pub fn individuals(&self) -> &[Individual] {
        &self.individuals
    }

    pub fn households(&self) -> &[Household] {
        &self.households
    }

    pub fn region(&self) -> &Region {
        &self.region
    }

    pub fn authority(&self) -> &AuthorityState {
        &self.authority
    }

    pub fn mobility(&self) -> &MobilityContext {
        &self.ctx
    }

    /// Where each agent spent the most recently processed hour; `None` for
    /// the dead and before the first step.
    pub fn locations(&self) -> &[Option<BuildingId>] {
        &self.locations
    }

    pub fn record(&self) -> &TimeSeriesRecord {
        &self.last
    }

    /// Delivers a positive result for `id` now, bypassing testing.
    pub fn force_positive(&mut self, id: PersonId) -> Result<Vec<PersonId>, SimError> {
        Ok(apply_positive(
            id,
            &mut self.individuals,
            &self.households,
            &self.policy,
            &mut self.authority,
            self.cycle,
        )?)
    }

    /// Locks `block` from now until `until`, confining its residents.
    pub fn force_lock(&mut self, block: BlockId, until: Cycle) {
        self.authority.lock_block(block, until);
        self.confine_residents(&[block], until);
    }

    fn confine_residents(&mut self, blocks: &[BlockId], until: Cycle) {
        let now = self.cycle;
        for ind in &mut self.individuals {
            if blocks.contains(&self.ctx.home_block(ind.id)) && !ind.quarantine.is_home_quarantined(now) {
                ind.quarantine = QuarantineStatus {
                    kind: QuarantineKind::BlockLockdown,
                    until: Some(until),
                };
            }
        }
    }

    fn snapshot(&self, new_infections: u32) -> TimeSeriesRecord {
        let mut counts = [0u32; 9];
        for ind in &self.individuals {
            counts[ind.state.compartment as usize] += 1;
        }
        TimeSeriesRecord {
            cycle: self.cycle,
            counts,
            new_infections,
            cumulative_deaths: self.cumulative_deaths,
            per_block_cum_deaths: self.authority.per_block_cum_deaths.clone(),
            tests_today: self.tests_today,
            locked_blocks: self.authority.locked_count(self.cycle) as u32,
        }
    }

    fn move_agents(&mut self) {
        let cycle = self.cycle;
        self.occupancy.clear();
        for ind in &self.individuals {
            let i = ind.id.index();
            if ind.state.compartment == Compartment::Dead {
                self.locations[i] = None;
                continue;
            }
            let slot = ind.agenda.slot_at(cycle);
            let dest = allowed_destination(ind, slot, &self.policy, &self.authority, cycle, &self.ctx);
            self.locations[i] = Some(dest);
            self.occupancy.push(
                dest,
                Occupant {
                    id: ind.id,
                    compartment: ind.state.compartment,
                    masked: self.mask_wearer[i] && dest != ind.home,
                },
            );
        }
    }

    fn progress(&mut self, infected: &[PersonId]) -> Result<u32, SimError> {
        let next = self.cycle + 1;
        for &id in infected {
            self.newly_infected[id.index()] = true;
        }
        let mut new_infections = 0;
        for ind in &mut self.individuals {
            let i = ind.id.index();
            if std::mem::take(&mut self.newly_infected[i]) {
                infect(&mut ind.state, ind.age, next, &self.epi, &mut self.disease_rng)?;
                new_infections += 1;
            } else if let Some(DiseaseEvent::Death) =
                advance_disease(&mut ind.state, ind.age, next, &self.epi, &mut self.disease_rng)?
            {
                self.cumulative_deaths += 1;
                self.authority.record_death(self.ctx.home_block(ind.id));
            }
        }
        Ok(new_infections)
    }

    fn run_hooks(&mut self) -> Result<(), SimError> {
        let cycle = self.cycle;
        for id in self.authority.take_due_results(cycle) {
            if self.individuals[id.index()].state.compartment == Compartment::Dead {
                self.authority.known_positives.insert(id);
                continue;
            }
            apply_positive(
                id,
                &mut self.individuals,
                &self.households,
                &self.policy,
                &mut self.authority,
                cycle,
            )?;
        }
        let hour = hour_of_day(cycle);
        if hour == TESTING_HOUR {
            let outcome = run_daily_tests(
                &self.individuals,
                &self.policy.testing,
                &mut self.authority,
                &self.epi,
                &mut self.testing_rng,
                cycle,
            );
            self.tests_today += outcome.tested;
        }
        if hour == REVIEW_HOUR {
            if let Some(d) = self.policy.measure.dynamic_lockdown(cycle).copied() {
                if cycle.is_multiple_of(d.review_interval_hours) {
                    let newly = update_dynamic_lockdown(&mut self.authority, &self.region.blocks, &d, cycle);
                    if !newly.is_empty() {
                        self.confine_residents(&newly, cycle + d.lockdown_duration_hours);
                    }
                }
            }
        }
        Ok(())
    }

    /// Advances one hour and returns the record for the new cycle.
    pub fn step(&mut self) -> Result<&TimeSeriesRecord, SimError> {
        if self.is_finished() {
            return Err(SimError::Config(format!("already at final cycle {}", self.n_cycles)));
        }
        self.move_agents();
        let mut infected = step_environmental(&mut self.loads, &self.occupancy, &self.epi, &mut self.env_rng);
        infected.extend(step_h2h(&self.occupancy, &self.epi, &mut self.h2h_rng));
        let new_infections = self.progress(&infected)?;
        self.run_hooks()?;

        self.cycle += 1;
        if self.cycle.is_multiple_of(HOURS_PER_DAY) {
            self.authority.reset_day();
            self.tests_today = 0;
        }
        let record = self.snapshot(new_infections);
        if self.assert_invariants {
            check_step(&self.last, &record, self.individuals.len())?;
        }
        self.last = record;
        Ok(&self.last)
    }
}

/// Conservation and monotonicity between consecutive records.
pub fn check_step(prev: &TimeSeriesRecord, cur: &TimeSeriesRecord, population: usize) -> Result<(), SimError> {
    let fail = |message: String| {
        Err(SimError::Invariant {
            cycle: cur.cycle,
            message,
        })
    };
    if cur.cycle != prev.cycle + 1 {
        return fail(format!("cycle jumped from {} to {}", prev.cycle, cur.cycle));
    }
    if cur.population() as usize != population {
        return fail(format!("compartments sum to {} not {population}", cur.population()));
    }
    if cur.cumulative_deaths < prev.cumulative_deaths {
        return fail("cumulative deaths decreased".into());
    }
    if cur.count(Compartment::Dead) != cur.cumulative_deaths {
        return fail("dead compartment differs from cumulative deaths".into());
    }
    if cur.per_block_cum_deaths.iter().sum::<u32>() != cur.cumulative_deaths {
        return fail("per-block deaths do not sum to the total".into());
    }
    if cur
        .per_block_cum_deaths
        .iter()
        .zip(&prev.per_block_cum_deaths)
        .any(|(c, p)| c < p)
    {
        return fail("a block's cumulative deaths decreased".into());
    }
    if cur.ever_infected() < prev.ever_infected() {
        return fail("ever-infected decreased".into());
    }
    if cur.ever_infected() != prev.ever_infected() + cur.new_infections {
        return fail("new infections do not match the susceptible decrease".into());
    }
    Ok(())
}

/// Runs an already-built scenario; `n_cycles + 1` records.
pub fn run_scenario(scenario: &Scenario, config: &SimConfig) -> Result<Vec<TimeSeriesRecord>, SimError> {
    let mut state = SimState::new(scenario, config)?;
    let mut records = Vec::with_capacity(config.n_cycles as usize + 1);
    records.push(state.record().clone());
    while !state.is_finished() {
        records.push(state.step()?.clone());
    }
    Ok(records)
}

/// `n_cycles + 1` records, cycle 0 first. Pure in `config`.
pub fn run(config: &SimConfig) -> Result<Vec<TimeSeriesRecord>, SimError> {
    config.validate()?;
    let scenario = Scenario::build(config)?;
    run_scenario(&scenario, config)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small(n_cycles: u64) -> SimConfig {
        SimConfig {
            seed: 3,
            n_cycles,
            region: RegionSource::Generate(RegionSpec {
                total_population: 200,
                ..RegionSpec::default()
            }),
            assert_invariants: true,
            ..SimConfig::default()
        }
    }

    #[test]
    fn record_count_and_cycle0() {
        let recs = run(&small(10)).unwrap();
        assert_eq!(recs.len(), 11);
        assert_eq!(recs[0].count(Compartment::Latent), 5);
        assert_eq!(recs[0].count(Compartment::Susceptible), 195);
        assert_eq!(recs[0].new_infections, 5);
    }

    #[test]
    fn zero_initial_infected_all_susceptible() {
        let cfg = SimConfig {
            initial_infected: 0,
            ..small(48)
        };
        let recs = run(&cfg).unwrap();
        assert!(recs.iter().all(|r| r.count(Compartment::Susceptible) == 200));
    }

    #[test]
    fn null_dynamics_records_identical_but_cycle() {
        let cfg = SimConfig {
            initial_infected: 0,
            epi: EpiParams::zero_transmission(),
            ..small(100)
        };
        let recs = run(&cfg).unwrap();
        for r in &recs {
            let mut r = r.clone();
            r.cycle = 0;
            assert_eq!(r, recs[0]);
        }
    }

    #[test]
    fn too_many_seeds_is_config_error() {
        let cfg = SimConfig {
            initial_infected: 201,
            ..small(1)
        };
        let err = run(&cfg).unwrap_err();
        assert!(err.is_config());
    }

    #[test]
    fn essential_fraction_mismatch_rejected() {
        let cfg = SimConfig {
            policy: Policy::new(
                Measure::RealisticLockdown {
                    essential_fraction: 0.2,
                    daily_tests: 20,
                    start_cycle: 0,
                },
                crate::policy::TestingStrategy::NoTesting,
            ),
            ..small(1)
        };
        assert!(matches!(run(&cfg), Err(SimError::Config(_))));
    }

    #[test]
    fn deterministic() {
        let a = records_to_csv(&run(&small(200)).unwrap());
        let b = records_to_csv(&run(&small(200)).unwrap());
        assert_eq!(a, b);
    }
}
