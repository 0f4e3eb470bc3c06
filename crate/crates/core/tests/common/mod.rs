#![allow(dead_code)]

use std::path::PathBuf;
use std::sync::Arc;

use episim::engine::Scenario;
use episim::epi::DiseaseState;
use episim::geo::polygon::rectangle;
use episim::geo::{locate_block, AdminBlock, BuildingFootprint, BuildingType, Point2D, PopulationGrid, Region};
use episim::policy::QuarantineStatus;
use episim::synthpop::{Agenda, Employment, Household, Individual, Sex};
use episim::{BlockId, BuildingId, HouseholdId, PersonId};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn fixture_dir(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("tests/fixtures")
        .join(name)
}

pub fn square(id: u32, btype: BuildingType, x: f64, y: f64) -> BuildingFootprint {
    BuildingFootprint {
        id: BuildingId(id),
        name: format!("{} {id}", btype.as_str()),
        polygon: rectangle(x, y, x + 10.0, y + 10.0),
        btype,
        block_id: BlockId(0),
        capacity: 10,
    }
}

/// One 100 m block: a house at each x in `houses`, then a school, a
/// workplace and a hospital. `population` people live in the single cell.
pub fn hand_region(houses: usize, population: u32) -> Region {
    let mut buildings: Vec<BuildingFootprint> = (0..houses)
        .map(|i| {
            square(
                i as u32,
                BuildingType::Residential,
                2.0 + 12.0 * (i % 6) as f64,
                2.0 + 12.0 * (i / 6) as f64,
            )
        })
        .collect();
    let n = houses as u32;
    buildings.push(square(n, BuildingType::School, 10.0, 80.0));
    buildings.push(square(n + 1, BuildingType::Workplace, 30.0, 80.0));
    buildings.push(square(n + 2, BuildingType::Hospital, 60.0, 80.0));
    let blocks = vec![AdminBlock {
        id: BlockId(0),
        name: "only".into(),
        polygon: rectangle(0.0, 0.0, 100.0, 100.0),
    }];
    let grid = PopulationGrid {
        origin: Point2D::new(0.0, 0.0),
        cell_size: 100.0,
        rows: 1,
        cols: 1,
        counts: vec![population],
    };
    Region::from_parts(buildings, blocks, grid).expect("hand region is valid")
}

pub fn person(id: u32, household: u32, home: BuildingId, state: DiseaseState) -> Individual {
    Individual {
        id: PersonId(id),
        age: 30,
        sex: Sex::F,
        employment: Employment::Unemployed,
        household_id: HouseholdId(household),
        home,
        attachment: None,
        agenda: Agenda::all_home(home),
        state,
        quarantine: QuarantineStatus::free(),
    }
}

/// Households are formed from consecutive runs of equal `household_id`.
pub fn scenario(region: Region, individuals: Vec<Individual>) -> Scenario {
    let mut households: Vec<Household> = Vec::new();
    for ind in &individuals {
        match households.last_mut() {
            Some(h) if h.id == ind.household_id => h.member_ids.push(ind.id),
            _ => households.push(Household {
                id: ind.household_id,
                member_ids: vec![ind.id],
                home: ind.home,
            }),
        }
    }
    Scenario {
        region: Arc::new(region),
        individuals: Arc::new(individuals),
        households: Arc::new(households),
    }
}

/// Standard error of a Bernoulli(p) mean over `n` trials.
pub fn sigma(p: f64, n: usize) -> f64 {
    (p * (1.0 - p) / n as f64).sqrt()
}

/// Exact collinearity and bounding-box test, written independently of the
/// library's boundary helper.
pub fn on_edge(p: Point2D, a: Point2D, b: Point2D) -> bool {
    let cross = (b.x - a.x) * (p.y - a.y) - (b.y - a.y) * (p.x - a.x);
    cross == 0.0 && p.x >= a.x.min(b.x) && p.x <= a.x.max(b.x) && p.y >= a.y.min(b.y) && p.y <= a.y.max(b.y)
}

/// Winding number of `ring` around `p`.
pub fn winding(p: Point2D, ring: &[Point2D]) -> i32 {
    let mut w = 0;
    for i in 0..ring.len() {
        let a = ring[i];
        let b = ring[(i + 1) % ring.len()];
        let side = (b.x - a.x) * (p.y - a.y) - (p.x - a.x) * (b.y - a.y);
        if a.y <= p.y {
            if b.y > p.y && side > 0.0 {
                w += 1;
            }
        } else if b.y <= p.y && side < 0.0 {
            w -= 1;
        }
    }
    w
}

pub fn reference_locate(p: Point2D, blocks: &[AdminBlock]) -> Option<BlockId> {
    blocks
        .iter()
        .filter(|b| {
            let n = b.polygon.len();
            (0..n).any(|i| on_edge(p, b.polygon[i], b.polygon[(i + 1) % n])) || winding(p, &b.polygon) != 0
        })
        .map(|b| b.id)
        .min()
}

fn bbox(blocks: &[AdminBlock]) -> (Point2D, Point2D) {
    let pts = blocks.iter().flat_map(|b| b.polygon.iter());
    let (mut lo, mut hi) = (Point2D::new(f64::MAX, f64::MAX), Point2D::new(f64::MIN, f64::MIN));
    for p in pts {
        lo = Point2D::new(lo.x.min(p.x), lo.y.min(p.y));
        hi = Point2D::new(hi.x.max(p.x), hi.y.max(p.y));
    }
    (lo, hi)
}

/// 1,000 points: 800 uniform over a padded bounding box, 200 snapped to a
/// coarse lattice so that edges and vertices get exercised.
pub fn check_against_reference(blocks: &[AdminBlock], seed: u64) -> usize {
    let (lo, hi) = bbox(blocks);
    let pad = 0.1 * (hi.x - lo.x).max(hi.y - lo.y);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut mismatches = 0;
    for i in 0..1000 {
        let p = if i < 800 {
            Point2D::new(
                rng.random_range(lo.x - pad..hi.x + pad),
                rng.random_range(lo.y - pad..hi.y + pad),
            )
        } else {
            let step_x = (hi.x - lo.x) / 8.0;
            let step_y = (hi.y - lo.y) / 8.0;
            Point2D::new(
                lo.x + step_x * f64::from(rng.random_range(-1..=9)),
                lo.y + step_y * f64::from(rng.random_range(-1..=9)),
            )
        };
        if locate_block(p, blocks) != reference_locate(p, blocks) {
            mismatches += 1;
        }
    }
    mismatches
}
