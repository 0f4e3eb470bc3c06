//! The authority agent: daily testing, result delivery, household
//! quarantine and per-block lockdown bookkeeping.

use std::collections::{BTreeMap, BTreeSet};

use rand::Rng;

use super::{DynamicLockdown, Policy, PolicyError, QuarantineKind, QuarantineStatus, TestingStrategy};
use crate::epi::{Compartment, EpiParams};
use crate::geo::AdminBlock;
use crate::ids::{BlockId, Cycle, PersonId};
use crate::rng::SimRng;
use crate::synthpop::{Household, Individual};

/// Home quarantine after a positive result: 14 days.
pub const QUARANTINE_HOURS: Cycle = 14 * 24;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub struct PendingResult {
    pub due: Cycle,
    pub person: PersonId,
}

#[derive(Clone, Debug, PartialEq)]
pub struct AuthorityState {
    pub tests_used_today: u32,
    pub known_positives: BTreeSet<PersonId>,
    pub per_block_cum_deaths: Vec<u32>,
    /// Locked block to the cycle the lock ends (exclusive).
    pub locked_blocks: BTreeMap<BlockId, Cycle>,
    /// Number of locks each block has had so far.
    pub lock_counts: Vec<u32>,
    /// Positive results not yet delivered, ordered by due cycle then id.
    pub pending: BTreeSet<PendingResult>,
}

impl AuthorityState {
    pub fn new(blocks: usize) -> Self {
        AuthorityState {
            tests_used_today: 0,
            known_positives: BTreeSet::new(),
            per_block_cum_deaths: vec![0; blocks],
            locked_blocks: BTreeMap::new(),
            lock_counts: vec![0; blocks],
            pending: BTreeSet::new(),
        }
    }

    pub fn is_locked(&self, block: BlockId, cycle: Cycle) -> bool {
        self.locked_blocks.get(&block).is_some_and(|&until| cycle < until)
    }

    pub fn locked_count(&self, cycle: Cycle) -> usize {
        self.locked_blocks.values().filter(|&&u| cycle < u).count()
    }

    /// Locks `block` until `until`, counting it as a lock event.
    pub fn lock_block(&mut self, block: BlockId, until: Cycle) {
        self.locked_blocks.insert(block, until);
        self.lock_counts[block.index()] += 1;
    }

    pub fn record_death(&mut self, home_block: BlockId) {
        self.per_block_cum_deaths[home_block.index()] += 1;
    }

    pub fn reset_day(&mut self) {
        self.tests_used_today = 0;
    }

    /// Removes and returns results due at or before `cycle`, in id order.
    pub fn take_due_results(&mut self, cycle: Cycle) -> Vec<PersonId> {
        let mut due: Vec<PersonId> = Vec::new();
        while let Some(first) = self.pending.first().copied() {
            if first.due > cycle {
                break;
            }
            self.pending.pop_first();
            due.push(first.person);
        }
        due.sort();
        due.dedup();
        due
    }

    fn awaiting_result(&self, person: PersonId) -> bool {
        self.pending.iter().any(|r| r.person == person)
    }
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct TestOutcome {
    pub tested: u32,
    /// Positive results, delivered after the configured delay.
    pub positives: Vec<PersonId>,
}

/// Runs one day's tests and schedules positive results.
///
/// Partial testing takes symptomatic people not already known or awaiting a
/// result, in ascending id, up to the budget. Mass testing tests every
/// living person. One uniform draw per tested person; only infectious
/// people can test positive.
pub fn run_daily_tests(
    individuals: &[Individual],
    strategy: &TestingStrategy,
    authority: &mut AuthorityState,
    params: &EpiParams,
    rng: &mut SimRng,
    cycle: Cycle,
) -> TestOutcome {
    let candidates: Vec<&Individual> = match strategy {
        TestingStrategy::NoTesting => return TestOutcome::default(),
        TestingStrategy::PartialTesting { daily_tests } => {
            let remaining = daily_tests
                .resolve(individuals.len())
                .saturating_sub(authority.tests_used_today);
            individuals
                .iter()
                .filter(|i| {
                    i.state.compartment == Compartment::Symptomatic
                        && !authority.known_positives.contains(&i.id)
                        && !authority.awaiting_result(i.id)
                })
                .take(remaining as usize)
                .collect()
        }
        TestingStrategy::MassTesting => individuals
            .iter()
            .filter(|i| i.state.compartment != Compartment::Dead)
            .collect(),
    };
    let mut outcome = TestOutcome {
        tested: candidates.len() as u32,
        positives: Vec::new(),
    };
    let due = cycle + params.testing.test_delay_hours;
    for ind in candidates {
        let detected = rng.random::<f64>() < params.testing.test_sensitivity;
        if detected && ind.state.is_infectious() && !authority.known_positives.contains(&ind.id) {
            outcome.positives.push(ind.id);
            authority.pending.insert(PendingResult { due, person: ind.id });
        }
    }
    authority.tests_used_today += outcome.tested;
    outcome
}

fn quarantine_until(q: &mut QuarantineStatus, until: Cycle) {
    let extended = match (q.kind, q.until) {
        (QuarantineKind::HomeQuarantine, None) => None,
        (QuarantineKind::HomeQuarantine, Some(u)) => Some(u.max(until)),
        _ => Some(until),
    };
    *q = QuarantineStatus {
        kind: QuarantineKind::HomeQuarantine,
        until: extended,
    };
}

/// Registers a delivered positive result: the person enters home quarantine
/// for 14 days, and so does the whole household when the policy in force
/// quarantines households. Returns everyone whose quarantine was set.
pub fn apply_positive(
    id: PersonId,
    individuals: &mut [Individual],
    households: &[Household],
    policy: &Policy,
    authority: &mut AuthorityState,
    cycle: Cycle,
) -> Result<Vec<PersonId>, PolicyError> {
    let ind = individuals
        .get(id.index())
        .ok_or(PolicyError::UnknownIndividual(id.0))?;
    let household = ind.household_id;
    authority.known_positives.insert(id);
    let until = cycle + QUARANTINE_HOURS;
    let targets: Vec<PersonId> = if policy.measure.quarantines_households(cycle) {
        households
            .get(household.index())
            .map(|h| h.member_ids.clone())
            .ok_or(PolicyError::UnknownIndividual(id.0))?
    } else {
        vec![id]
    };
    for &t in &targets {
        quarantine_until(&mut individuals[t.index()].quarantine, until);
    }
    Ok(targets)
}

/// Expires finished locks and locks every block whose cumulative deaths
/// reached its current threshold. Returns the newly locked blocks.
pub fn update_dynamic_lockdown(
    authority: &mut AuthorityState,
    blocks: &[AdminBlock],
    params: &DynamicLockdown,
    cycle: Cycle,
) -> Vec<BlockId> {
    authority.locked_blocks.retain(|_, until| cycle < *until);
    let mut newly = Vec::new();
    for b in blocks {
        if authority.is_locked(b.id, cycle) {
            continue;
        }
        let k = authority.lock_counts[b.id.index()];
        let threshold = if k == 0 {
            params.death_threshold
        } else {
            2 * k * params.death_threshold
        };
        if authority.per_block_cum_deaths[b.id.index()] >= threshold {
            authority.lock_block(b.id, cycle + params.lockdown_duration_hours);
            newly.push(b.id);
        }
    }
    newly
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::epi::DiseaseState;
    use crate::geo::polygon::rectangle;
    use crate::ids::{BuildingId, HouseholdId};
    use crate::policy::{Measure, TestBudget};
    use crate::rng::{substream, Stream};
    use crate::synthpop::{Agenda, Employment, Sex};

    fn person(id: u32, household: u32, c: Compartment) -> Individual {
        Individual {
            id: PersonId(id),
            age: 30,
            sex: Sex::F,
            employment: Employment::Unemployed,
            household_id: HouseholdId(household),
            home: BuildingId(0),
            attachment: None,
            agenda: Agenda::all_home(BuildingId(0)),
            state: DiseaseState {
                compartment: c,
                since: 0,
                next: None,
            },
            quarantine: QuarantineStatus::free(),
        }
    }

    fn blocks(n: u32) -> Vec<AdminBlock> {
        (0..n)
            .map(|i| AdminBlock {
                id: BlockId(i),
                name: String::new(),
                polygon: rectangle(f64::from(i), 0.0, f64::from(i + 1), 1.0),
            })
            .collect()
    }

    #[test]
    fn no_testing_finds_nothing() {
        let inds: Vec<_> = (0..10).map(|i| person(i, 0, Compartment::Symptomatic)).collect();
        let mut auth = AuthorityState::new(1);
        let mut rng = substream(1, Stream::Testing);
        let out = run_daily_tests(
            &inds,
            &TestingStrategy::NoTesting,
            &mut auth,
            &EpiParams::default(),
            &mut rng,
            8,
        );
        assert_eq!(out, TestOutcome::default());
    }

    #[test]
    fn mass_testing_perfect_sensitivity() {
        let mut inds: Vec<_> = (0..20).map(|i| person(i, 0, Compartment::Susceptible)).collect();
        for k in [1, 3, 4, 8, 11, 15, 19] {
            inds[k].state.compartment = Compartment::Symptomatic;
        }
        inds[2].state.compartment = Compartment::Latent;
        let mut params = EpiParams::default();
        params.testing.test_sensitivity = 1.0;
        let mut auth = AuthorityState::new(1);
        let mut rng = substream(1, Stream::Testing);
        let out = run_daily_tests(&inds, &TestingStrategy::MassTesting, &mut auth, &params, &mut rng, 8);
        assert_eq!(out.tested, 20);
        assert_eq!(out.positives.len(), 7);
        assert_eq!(auth.take_due_results(31), vec![]);
        assert_eq!(auth.take_due_results(32).len(), 7);
    }

    #[test]
    fn partial_testing_respects_budget_and_order() {
        let inds: Vec<_> = (0..50).map(|i| person(i, 0, Compartment::Symptomatic)).collect();
        let mut params = EpiParams::default();
        params.testing.test_sensitivity = 1.0;
        let mut auth = AuthorityState::new(1);
        let mut rng = substream(1, Stream::Testing);
        let strat = TestingStrategy::PartialTesting {
            daily_tests: TestBudget::Absolute(20),
        };
        let out = run_daily_tests(&inds, &strat, &mut auth, &params, &mut rng, 8);
        assert_eq!(out.tested, 20);
        assert_eq!(out.positives, (0..20).map(PersonId).collect::<Vec<_>>());
        // same day: budget exhausted
        let again = run_daily_tests(&inds, &strat, &mut auth, &params, &mut rng, 9);
        assert_eq!(again.tested, 0);
        // next day: the pending ones are skipped
        auth.reset_day();
        let next = run_daily_tests(&inds, &strat, &mut auth, &params, &mut rng, 32);
        assert_eq!(next.positives.first(), Some(&PersonId(20)));
    }

    fn household_of(n: u32) -> (Vec<Individual>, Vec<Household>) {
        let inds: Vec<_> = (0..n).map(|i| person(i, 0, Compartment::Susceptible)).collect();
        let hh = vec![Household {
            id: HouseholdId(0),
            member_ids: (0..n).map(PersonId).collect(),
            home: BuildingId(0),
        }];
        (inds, hh)
    }

    #[test]
    fn family_containment_quarantines_household() {
        let (mut inds, hh) = household_of(5);
        let policy = Policy::new(Measure::FamilyContainment, TestingStrategy::partial(20));
        let mut auth = AuthorityState::new(1);
        let q = apply_positive(PersonId(2), &mut inds, &hh, &policy, &mut auth, 100).unwrap();
        assert_eq!(q.len(), 5);
        for i in &inds {
            assert_eq!(i.quarantine.kind, QuarantineKind::HomeQuarantine);
            assert_eq!(i.quarantine.until, Some(100 + 336));
        }
        assert!(auth.known_positives.contains(&PersonId(2)));
    }

    #[test]
    fn individual_quarantine_without_family_policy() {
        let (mut inds, hh) = household_of(5);
        let mut auth = AuthorityState::new(1);
        apply_positive(PersonId(2), &mut inds, &hh, &Policy::none(), &mut auth, 100).unwrap();
        let confined: Vec<_> = inds
            .iter()
            .filter(|i| i.quarantine.is_confined(101))
            .map(|i| i.id)
            .collect();
        assert_eq!(confined, vec![PersonId(2)]);
    }

    #[test]
    fn second_positive_extends_quarantine() {
        let (mut inds, hh) = household_of(3);
        let policy = Policy::new(Measure::FamilyContainment, TestingStrategy::NoTesting);
        let mut auth = AuthorityState::new(1);
        apply_positive(PersonId(0), &mut inds, &hh, &policy, &mut auth, 100).unwrap();
        apply_positive(PersonId(1), &mut inds, &hh, &policy, &mut auth, 150).unwrap();
        assert!(inds.iter().all(|i| i.quarantine.until == Some(150 + 336)));
        assert!(matches!(
            apply_positive(PersonId(9), &mut inds, &hh, &policy, &mut auth, 150),
            Err(PolicyError::UnknownIndividual(9))
        ));
    }

    #[test]
    fn dynamic_lockdown_threshold_and_expiry() {
        let bl = blocks(4);
        let params = DynamicLockdown {
            death_threshold: 3,
            lockdown_duration_hours: 336,
            review_interval_hours: 24,
        };
        let mut auth = AuthorityState::new(4);
        assert!(update_dynamic_lockdown(&mut auth, &bl, &params, 0).is_empty());
        auth.per_block_cum_deaths[2] = 3;
        assert_eq!(update_dynamic_lockdown(&mut auth, &bl, &params, 24), vec![BlockId(2)]);
        assert_eq!(auth.locked_blocks[&BlockId(2)], 24 + 336);
        assert!(auth.is_locked(BlockId(2), 24 + 335));
        assert!(!auth.is_locked(BlockId(2), 24 + 336));
    }

    #[test]
    fn relock_needs_doubled_threshold() {
        let bl = blocks(1);
        let params = DynamicLockdown {
            death_threshold: 3,
            lockdown_duration_hours: 48,
            review_interval_hours: 24,
        };
        let mut auth = AuthorityState::new(1);
        auth.per_block_cum_deaths[0] = 3;
        assert_eq!(update_dynamic_lockdown(&mut auth, &bl, &params, 0), vec![BlockId(0)]);
        // lock expires at 48; deaths still 3 -> no relock at expiry
        assert!(update_dynamic_lockdown(&mut auth, &bl, &params, 48).is_empty());
        auth.per_block_cum_deaths[0] = 5;
        assert!(update_dynamic_lockdown(&mut auth, &bl, &params, 72).is_empty());
        auth.per_block_cum_deaths[0] = 6;
        assert_eq!(update_dynamic_lockdown(&mut auth, &bl, &params, 96), vec![BlockId(0)]);
        // third lock needs 2*2*3 = 12
        auth.per_block_cum_deaths[0] = 11;
        assert!(update_dynamic_lockdown(&mut auth, &bl, &params, 200).is_empty());
        auth.per_block_cum_deaths[0] = 12;
        assert_eq!(update_dynamic_lockdown(&mut auth, &bl, &params, 224), vec![BlockId(0)]);
    }
}
