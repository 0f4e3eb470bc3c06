//! Template-plus-noise hourly agendas.
//!
//! Night hours are spent at home, attachments fix the school (9–15) and work
//! (9–17) blocks, and the remaining discretionary hours are drawn
//! independently as home, shopping or leisure. Discretionary hours are
//! 18–21 on weekdays (plus 9–17 for people without an attachment) and 10–21
//! at weekends.

use std::cell::RefCell;
use std::collections::HashMap;

use rand::Rng;

use super::{Employment, Individual};
use crate::geo::{BuildingType, Region};
use crate::ids::{is_weekend, BuildingId, Cycle};
use crate::rng::{substream, SimRng, Stream};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum ActivityKind {
    Home,
    Work,
    School,
    Shopping,
    Leisure,
    HospitalVisit,
}

impl ActivityKind {
    pub fn permitted(self) -> &'static [BuildingType] {
        match self {
            ActivityKind::Home => &[BuildingType::Residential],
            ActivityKind::Work => &[BuildingType::Workplace, BuildingType::Shop, BuildingType::Hospital],
            ActivityKind::School => &[BuildingType::School],
            ActivityKind::Shopping => &[BuildingType::Shop],
            ActivityKind::Leisure => &[BuildingType::Leisure, BuildingType::Outdoor],
            ActivityKind::HospitalVisit => &[BuildingType::Hospital],
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            ActivityKind::Home => "home",
            ActivityKind::Work => "work",
            ActivityKind::School => "school",
            ActivityKind::Shopping => "shopping",
            ActivityKind::Leisure => "leisure",
            ActivityKind::HospitalVisit => "hospital_visit",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Slot {
    pub activity: ActivityKind,
    pub building: BuildingId,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum DayKind {
    Weekday,
    Weekend,
}

impl DayKind {
    pub fn of(cycle: Cycle) -> DayKind {
        if is_weekend(cycle) {
            DayKind::Weekend
        } else {
            DayKind::Weekday
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            DayKind::Weekday => "weekday",
            DayKind::Weekend => "weekend",
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Agenda {
    pub weekday: [Slot; 24],
    pub weekend: [Slot; 24],
}

impl Agenda {
    pub fn all_home(home: BuildingId) -> Agenda {
        let slot = Slot {
            activity: ActivityKind::Home,
            building: home,
        };
        Agenda {
            weekday: [slot; 24],
            weekend: [slot; 24],
        }
    }

    pub fn day(&self, kind: DayKind) -> &[Slot; 24] {
        match kind {
            DayKind::Weekday => &self.weekday,
            DayKind::Weekend => &self.weekend,
        }
    }

    pub fn slot_at(&self, cycle: Cycle) -> Slot {
        self.day(DayKind::of(cycle))[crate::ids::hour_of_day(cycle)]
    }

    /// First hour of the day with a shopping slot.
    pub fn first_shopping_hour(&self, kind: DayKind) -> Option<usize> {
        self.day(kind).iter().position(|s| s.activity == ActivityKind::Shopping)
    }

    /// Agenda invariants that `ind`'s agenda breaks.
    pub fn problems(&self, ind: &Individual, region: &Region) -> Vec<String> {
        let mut out = Vec::new();
        for kind in [DayKind::Weekday, DayKind::Weekend] {
            for (h, slot) in self.day(kind).iter().enumerate() {
                match region.buildings.get(slot.building.index()) {
                    None => out.push(format!(
                        "{} hour {h}: unknown building {}",
                        kind.as_str(),
                        slot.building
                    )),
                    Some(b) if !slot.activity.permitted().contains(&b.btype) => out.push(format!(
                        "{} hour {h}: {} at {} building {}",
                        kind.as_str(),
                        slot.activity.as_str(),
                        b.btype,
                        b.id
                    )),
                    Some(_) => {}
                }
                if h <= 5 && (slot.activity != ActivityKind::Home || slot.building != ind.home) {
                    out.push(format!("{} hour {h}: not at home during the night", kind.as_str()));
                }
            }
        }
        let mandatory = match ind.employment {
            Employment::Student => Some((ActivityKind::School, 9..=15)),
            Employment::Worker | Employment::EssentialWorker => Some((ActivityKind::Work, 9..=17)),
            _ => None,
        };
        // A wrongly typed attachment is the population's problem, not the agenda's.
        let attachment_ok = |att: BuildingId, activity: ActivityKind| {
            region
                .buildings
                .get(att.index())
                .is_some_and(|b| activity.permitted().contains(&b.btype))
        };
        if let (Some((activity, hours)), Some(att)) = (mandatory, ind.attachment) {
            if !attachment_ok(att, activity) {
                return out;
            }
            for h in hours {
                let s = self.weekday[h];
                if s.activity != activity || s.building != att {
                    out.push(format!("weekday hour {h}: expected {} at {att}", activity.as_str()));
                }
            }
        }
        out
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct AgendaParams {
    pub evening_home_p: f64,
    pub evening_shop_p: f64,
    pub evening_leisure_p: f64,
    /// Discretionary trips go to buildings within this distance of home.
    pub trip_radius_m: f64,
    pub nearest_school_p: f64,
}

impl Default for AgendaParams {
    fn default() -> Self {
        AgendaParams {
            evening_home_p: 0.6,
            evening_shop_p: 0.2,
            evening_leisure_p: 0.2,
            trip_radius_m: 2000.0,
            nearest_school_p: 0.8,
        }
    }
}

impl AgendaParams {
    pub fn check(&self) -> Result<(), String> {
        let ps = [self.evening_home_p, self.evening_shop_p, self.evening_leisure_p];
        if ps.iter().any(|p| !(0.0..=1.0).contains(p)) || (ps.iter().sum::<f64>() - 1.0).abs() > 1e-9 {
            return Err(format!(
                "evening probabilities {ps:?} must be probabilities summing to 1"
            ));
        }
        if self.trip_radius_m.is_nan() || self.trip_radius_m < 0.0 {
            return Err("trip_radius_m must be non-negative".into());
        }
        Ok(())
    }
}

const WEEKDAY_EVENING: std::ops::RangeInclusive<usize> = 18..=21;
const WEEKDAY_DAYTIME: std::ops::RangeInclusive<usize> = 9..=17;
const WEEKEND_OUTING: std::ops::RangeInclusive<usize> = 10..=21;

/// Caches per-home discretionary destination lists.
pub struct AgendaBuilder<'a> {
    region: &'a Region,
    params: &'a AgendaParams,
    cache: RefCell<HashMap<(BuildingId, ActivityKind), Vec<BuildingId>>>,
}

impl<'a> AgendaBuilder<'a> {
    pub fn new(region: &'a Region, params: &'a AgendaParams) -> Self {
        AgendaBuilder {
            region,
            params,
            cache: RefCell::new(HashMap::new()),
        }
    }

    /// Permitted buildings within the trip radius, or the single nearest one
    /// when none is in range. Ascending id.
    fn destinations(&self, home: BuildingId, kind: ActivityKind) -> Vec<BuildingId> {
        if let Some(v) = self.cache.borrow().get(&(home, kind)) {
            return v.clone();
        }
        let origin = self.region.building(home).centroid();
        let permitted = kind.permitted();
        let candidates: Vec<(f64, BuildingId)> = self
            .region
            .buildings
            .iter()
            .filter(|b| permitted.contains(&b.btype))
            .map(|b| (b.centroid().distance(origin), b.id))
            .collect();
        let mut near: Vec<BuildingId> = candidates
            .iter()
            .filter(|(d, _)| *d <= self.params.trip_radius_m)
            .map(|(_, id)| *id)
            .collect();
        if near.is_empty() {
            if let Some((_, id)) = candidates.iter().min_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1))) {
                near.push(*id);
            }
        }
        self.cache.borrow_mut().insert((home, kind), near.clone());
        near
    }

    fn discretionary(&self, home: BuildingId, rng: &mut SimRng) -> Slot {
        let u: f64 = rng.random();
        let kind = if u < self.params.evening_home_p {
            ActivityKind::Home
        } else if u < self.params.evening_home_p + self.params.evening_shop_p {
            ActivityKind::Shopping
        } else {
            ActivityKind::Leisure
        };
        if kind == ActivityKind::Home {
            return Slot {
                activity: kind,
                building: home,
            };
        }
        let options = self.destinations(home, kind);
        if options.is_empty() {
            // Region has no building of that kind at all.
            return Slot {
                activity: ActivityKind::Home,
                building: home,
            };
        }
        let building = options[rng.random_range(0..options.len())];
        Slot {
            activity: kind,
            building,
        }
    }

    /// Deterministic in `(ind.id, seed)`; draws come from the individual's
    /// own agenda stream, weekday hours first, then weekend hours.
    pub fn build(&self, ind: &Individual, seed: u64) -> Agenda {
        let mut rng = substream(seed, Stream::Agenda(ind.id.0));
        let mut agenda = Agenda::all_home(ind.home);
        let mandatory = match (ind.employment, ind.attachment) {
            (Employment::Student, Some(att)) => Some((ActivityKind::School, att, 9..=15)),
            (Employment::Worker | Employment::EssentialWorker, Some(att)) => Some((ActivityKind::Work, att, 9..=17)),
            _ => None,
        };
        match &mandatory {
            Some((activity, building, hours)) => {
                for h in hours.clone() {
                    agenda.weekday[h] = Slot {
                        activity: *activity,
                        building: *building,
                    };
                }
            }
            None => {
                for h in WEEKDAY_DAYTIME {
                    agenda.weekday[h] = self.discretionary(ind.home, &mut rng);
                }
            }
        }
        for h in WEEKDAY_EVENING {
            agenda.weekday[h] = self.discretionary(ind.home, &mut rng);
        }
        for h in WEEKEND_OUTING {
            agenda.weekend[h] = self.discretionary(ind.home, &mut rng);
        }
        agenda
    }
}

/// One-off agenda construction; see [`AgendaBuilder::build`].
pub fn build_agenda(ind: &Individual, region: &Region, params: &AgendaParams, seed: u64) -> Agenda {
    AgendaBuilder::new(region, params).build(ind, seed)
}
