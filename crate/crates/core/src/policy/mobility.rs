use super::{AuthorityState, Measure, Policy};
use crate::geo::{locate_block, BuildingType, Region};
use crate::ids::{hour_of_day, BlockId, BuildingId, Cycle, PersonId};
use crate::synthpop::{ActivityKind, DayKind, Employment, Household, Individual, Slot};

/// Static lookups shared by every mobility decision in a run.
#[derive(Clone, Debug)]
pub struct MobilityContext {
    building_block: Vec<BlockId>,
    home_block: Vec<BlockId>,
    hospital: Vec<BuildingId>,
    /// Member allowed to shop under a realistic lockdown.
    household_shopper: Vec<PersonId>,
}

impl MobilityContext {
    pub fn new(region: &Region, individuals: &[Individual], households: &[Household]) -> Self {
        let hospitals: Vec<_> = region.buildings_of(BuildingType::Hospital).collect();
        let hospital = individuals
            .iter()
            .map(|i| {
                let origin = region.building(i.home).centroid();
                hospitals
                    .iter()
                    .map(|h| (h.centroid().distance(origin), h.id))
                    .min_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)))
                    .expect("region has a hospital")
                    .1
            })
            .collect();
        MobilityContext {
            building_block: region.buildings.iter().map(|b| b.block_id).collect(),
            home_block: individuals
                .iter()
                .map(|i| {
                    let b = region.building(i.home).block_id;
                    debug_assert_eq!(
                        Some(b),
                        locate_block(region.building(i.home).centroid(), &region.blocks)
                    );
                    b
                })
                .collect(),
            hospital,
            household_shopper: households
                .iter()
                .map(|h| *h.member_ids.iter().min().expect("non-empty household"))
                .collect(),
        }
    }

    pub fn block_of(&self, building: BuildingId) -> BlockId {
        self.building_block[building.index()]
    }

    pub fn home_block(&self, person: PersonId) -> BlockId {
        self.home_block[person.index()]
    }

    pub fn hospital(&self, person: PersonId) -> BuildingId {
        self.hospital[person.index()]
    }
}

/// Where `ind` actually goes for this agenda slot.
///
/// Precedence: hospital, quarantine, block lockdown, measure-specific rules,
/// agenda.
pub fn allowed_destination(
    ind: &Individual,
    slot: Slot,
    policy: &Policy,
    authority: &AuthorityState,
    cycle: Cycle,
    ctx: &MobilityContext,
) -> BuildingId {
    if ind.state.compartment.is_hospitalized() {
        return ctx.hospital(ind.id);
    }
    let home = ind.home;
    if ind.quarantine.is_confined(cycle) {
        return home;
    }
    if authority.is_locked(ctx.home_block(ind.id), cycle) || authority.is_locked(ctx.block_of(slot.building), cycle) {
        return home;
    }
    let stays_home = match policy.measure.active(cycle) {
        Measure::NoContainment | Measure::FamilyContainment | Measure::DynamicSpatialLockdown(_) => false,
        Measure::SchoolClosure => slot.activity == ActivityKind::School,
        Measure::HomeContainment => ind.employment != Employment::EssentialWorker,
        Measure::RealisticLockdown { start_cycle, .. } => {
            cycle >= *start_cycle && !realistic_lockdown_exempt(ind, slot, cycle, ctx)
        }
        Measure::AgeContainment { min_age } => ind.age >= *min_age,
        Measure::LateLockdown { .. } => unreachable!("active() resolves late lockdowns"),
    };
    if stays_home {
        home
    } else {
        slot.building
    }
}

/// Essential work, or the household's one shopping trip of the day: the
/// designated shopper's first shopping hour.
fn realistic_lockdown_exempt(ind: &Individual, slot: Slot, cycle: Cycle, ctx: &MobilityContext) -> bool {
    match slot.activity {
        ActivityKind::Work => ind.employment == Employment::EssentialWorker,
        ActivityKind::Shopping => {
            ctx.household_shopper[ind.household_id.index()] == ind.id
                && ind.agenda.first_shopping_hour(DayKind::of(cycle)) == Some(hour_of_day(cycle))
        }
        _ => slot.building == ind.home,
    }
}
