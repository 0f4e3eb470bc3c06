//! Desk-scale synthetic region generator.
//!
//! Blocks partition a rectangle into rows of equal-width cells. Building
//! types are apportioned from the mix, dealt round-robin over blocks, and
//! placed uniformly inside their block. The population grid is filled in
//! proportion to residential footprint area per cell.

use rand::Rng;

use super::{
    capacity_for_area, polygon, AdminBlock, BuildingFootprint, BuildingType, GeoError, Point2D, PopulationGrid, Region,
};
use crate::ids::{BlockId, BuildingId};
use crate::kv::{KvError, KvFile};
use crate::rng::{substream, Stream};

/// Share of buildings per type, in [`BuildingType::ALL`] order.
#[derive(Clone, Debug, PartialEq)]
pub struct TypeMix(pub [f64; 7]);

impl Default for TypeMix {
    fn default() -> Self {
        // residential, school, workplace, shop, leisure, hospital, outdoor
        TypeMix([0.55, 0.075, 0.15, 0.10, 0.05, 0.025, 0.05])
    }
}

impl TypeMix {
    pub fn share(&self, t: BuildingType) -> f64 {
        self.0[t as usize]
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct RegionSpec {
    pub total_population: u32,
    pub blocks: u32,
    pub buildings: u32,
    pub width_m: f64,
    pub height_m: f64,
    pub grid_cell_m: f64,
    pub mix: TypeMix,
}

impl Default for RegionSpec {
    /// The `gwalior_mini` desk region: 1,000 people over four blocks.
    fn default() -> Self {
        RegionSpec {
            total_population: 1000,
            blocks: 4,
            buildings: 40,
            width_m: 4000.0,
            height_m: 4000.0,
            grid_cell_m: 500.0,
            mix: TypeMix::default(),
        }
    }
}

impl RegionSpec {
    /// Buildings in the default simulation region: about one residential
    /// building per household at 1,000 people.
    pub const DESK_BUILDINGS: u32 = 400;

    /// The region simulations run on by default. Same extent, population and
    /// blocks as `gwalior_mini`, but with houses rather than apartment blocks,
    /// so a household shares its building with few other households.
    pub fn desk() -> Self {
        RegionSpec {
            buildings: Self::DESK_BUILDINGS,
            ..RegionSpec::default()
        }
    }

    pub const KEYS: [&'static str; 7] = [
        "region.population",
        "region.blocks",
        "region.buildings",
        "region.width_m",
        "region.height_m",
        "region.grid_cell_m",
        "region.type_mix",
    ];

    pub fn apply_kv(&mut self, kv: &KvFile) -> Result<(), KvError> {
        kv.set("region.population", &mut self.total_population)?;
        kv.set("region.blocks", &mut self.blocks)?;
        kv.set("region.buildings", &mut self.buildings)?;
        kv.set("region.width_m", &mut self.width_m)?;
        kv.set("region.height_m", &mut self.height_m)?;
        kv.set("region.grid_cell_m", &mut self.grid_cell_m)?;
        if let Some(mix) = kv.get_list("region.type_mix")? {
            let arr: [f64; 7] = mix
                .try_into()
                .map_err(|_| KvError::Invalid("region.type_mix needs 7 shares".into()))?;
            self.mix = TypeMix(arr);
        }
        Ok(())
    }

    pub fn check(&self) -> Result<(), GeoError> {
        let fail = |m: String| Err(GeoError::Spec(m));
        if self.total_population < 10 {
            return fail(format!("total_population {} < 10", self.total_population));
        }
        if self.blocks == 0 {
            return fail("need at least one block".into());
        }
        if self.mix.0.iter().any(|&s| !(0.0..=1.0).contains(&s)) {
            return fail("type shares must lie in [0, 1]".into());
        }
        let sum: f64 = self.mix.0.iter().sum();
        if (sum - 1.0).abs() > 1e-9 {
            return fail(format!("type mix sums to {sum}, expected 1"));
        }
        if self.mix.share(BuildingType::Residential) <= 0.0 {
            return fail("residential share must be positive".into());
        }
        if (self.buildings as usize) < BuildingType::REQUIRED.len() {
            return fail(format!("need at least {} buildings", BuildingType::REQUIRED.len()));
        }
        if !(self.width_m > 0.0 && self.height_m > 0.0 && self.grid_cell_m > 0.0) {
            return fail("extents and grid cell must be positive".into());
        }
        Ok(())
    }
}

/// Largest-remainder apportionment of `total` over `weights`; ties go to
/// the lower index.
pub(crate) fn apportion(total: u64, weights: &[f64]) -> Vec<u64> {
    let sum: f64 = weights.iter().sum();
    if sum <= 0.0 {
        return vec![0; weights.len()];
    }
    let quotas: Vec<f64> = weights.iter().map(|w| w / sum * total as f64).collect();
    let mut out: Vec<u64> = quotas.iter().map(|q| q.floor() as u64).collect();
    let assigned: u64 = out.iter().sum();
    let mut order: Vec<usize> = (0..weights.len()).collect();
    order.sort_by(|&a, &b| {
        let ra = quotas[a] - quotas[a].floor();
        let rb = quotas[b] - quotas[b].floor();
        rb.total_cmp(&ra).then(a.cmp(&b))
    });
    for &i in order.iter().take((total - assigned) as usize) {
        out[i] += 1;
    }
    out
}

fn type_counts(spec: &RegionSpec) -> Vec<u64> {
    let mut counts = apportion(u64::from(spec.buildings), &spec.mix.0);
    for t in BuildingType::REQUIRED {
        if counts[t as usize] == 0 {
            let donor = (0..counts.len())
                .filter(|&i| counts[i] > 1)
                .max_by(|&a, &b| counts[a].cmp(&counts[b]).then(b.cmp(&a)))
                .expect("spec guarantees enough buildings");
            counts[donor] -= 1;
            counts[t as usize] = 1;
        }
    }
    counts
}

fn footprint_side(t: BuildingType) -> f64 {
    match t {
        BuildingType::Residential => 15.0,
        BuildingType::School => 35.0,
        BuildingType::Workplace => 25.0,
        BuildingType::Shop => 12.0,
        BuildingType::Leisure => 20.0,
        BuildingType::Hospital => 40.0,
        BuildingType::Outdoor => 50.0,
    }
}

fn block_layout(spec: &RegionSpec) -> Vec<AdminBlock> {
    let n = spec.blocks as usize;
    let rows = ((n as f64).sqrt().floor() as usize).max(1);
    let base = n / rows;
    let extra = n % rows;
    let row_h = spec.height_m / rows as f64;
    let mut blocks = Vec::with_capacity(n);
    for r in 0..rows {
        // The last `extra` rows carry one more block.
        let in_row = base + usize::from(r >= rows - extra);
        let w = spec.width_m / in_row as f64;
        for c in 0..in_row {
            let id = blocks.len() as u32;
            blocks.push(AdminBlock {
                id: BlockId(id),
                name: format!("block-{id}"),
                polygon: polygon::rectangle(
                    c as f64 * w,
                    r as f64 * row_h,
                    (c + 1) as f64 * w,
                    (r + 1) as f64 * row_h,
                ),
            });
        }
    }
    blocks
}

fn bounds(ring: &[Point2D]) -> (Point2D, Point2D) {
    let mut lo = Point2D::new(f64::INFINITY, f64::INFINITY);
    let mut hi = Point2D::new(f64::NEG_INFINITY, f64::NEG_INFINITY);
    for p in ring {
        lo.x = lo.x.min(p.x);
        lo.y = lo.y.min(p.y);
        hi.x = hi.x.max(p.x);
        hi.y = hi.y.max(p.y);
    }
    (lo, hi)
}

/// Deterministic in `(spec, seed)`.
pub fn generate_synthetic_region(spec: &RegionSpec, seed: u64) -> Result<Region, GeoError> {
    spec.check()?;
    let mut rng = substream(seed, Stream::RegionLayout);
    let blocks = block_layout(spec);
    let counts = type_counts(spec);

    let mut buildings = Vec::with_capacity(spec.buildings as usize);
    let mut deal = 0usize;
    for t in BuildingType::ALL {
        for k in 0..counts[t as usize] {
            let block = &blocks[deal % blocks.len()];
            deal += 1;
            let (lo, hi) = bounds(&block.polygon);
            let side = footprint_side(t).min((hi.x - lo.x) / 4.0).min((hi.y - lo.y) / 4.0);
            let half = side / 2.0;
            let margin = half + side * 0.05;
            let cx = rng.random_range((lo.x + margin)..(hi.x - margin));
            let cy = rng.random_range((lo.y + margin)..(hi.y - margin));
            let ring = polygon::rectangle(cx - half, cy - half, cx + half, cy + half);
            let id = buildings.len() as u32;
            buildings.push(BuildingFootprint {
                id: BuildingId(id),
                name: format!("{t} {}", k + 1),
                capacity: capacity_for_area(polygon::area(&ring)),
                polygon: ring,
                btype: t,
                block_id: block.id,
            });
        }
    }

    let cols = (spec.width_m / spec.grid_cell_m).ceil() as usize;
    let rows = (spec.height_m / spec.grid_cell_m).ceil() as usize;
    let mut grid = PopulationGrid {
        origin: Point2D::new(0.0, 0.0),
        cell_size: spec.grid_cell_m,
        rows,
        cols,
        counts: vec![0; rows * cols],
    };
    let mut mass = vec![0.0; rows * cols];
    for b in buildings.iter().filter(|b| b.btype == BuildingType::Residential) {
        let (r, c) = grid.cell_of(b.centroid()).expect("residential centroid inside grid");
        mass[r * cols + c] += b.area();
    }
    grid.counts = apportion(u64::from(spec.total_population), &mass)
        .into_iter()
        .map(|c| c as u32)
        .collect();

    Region::from_parts(buildings, blocks, grid)
}
