//! Spatial substrate: typed building footprints, administrative blocks and a
//! population density grid, in local planar coordinates (meters).

mod canonical;
mod io;
pub mod polygon;
mod synth;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::ids::{BlockId, BuildingId};

pub use canonical::region_to_canonical_json;
pub use io::{
    assign_building_types, blocks_to_string, buildings_to_string, grid_to_string, load_blocks, load_buildings,
    load_population_grid, load_region, load_type_rules, parse_blocks, parse_buildings, parse_population_grid,
    write_blocks, write_buildings, write_population_grid, write_region, BuildingLoad, SkippedFeature, TypeRule,
    BLOCKS_FILE, BUILDINGS_FILE, GRID_FILE, RULES_FILE,
};
pub use synth::{generate_synthetic_region, RegionSpec, TypeMix};

#[derive(Debug, Error)]
pub enum GeoError {
    #[error("parse error in {source_name}: {message}")]
    Parse { source_name: String, message: String },
    #[error("no usable buildings in {0}")]
    EmptyRegion(String),
    #[error("grid cell ({row}, {col}) has negative count {value}")]
    NegativeCount { row: usize, col: usize, value: i64 },
    #[error("invalid region spec: {0}")]
    Spec(String),
    #[error("invalid region: {0}")]
    Invalid(String),
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

impl GeoError {
    pub(crate) fn parse(source_name: impl Into<String>, message: impl Into<String>) -> Self {
        GeoError::Parse {
            source_name: source_name.into(),
            message: message.into(),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Point2D {
    pub x: f64,
    pub y: f64,
}

impl Point2D {
    pub const fn new(x: f64, y: f64) -> Self {
        Point2D { x, y }
    }

    pub fn distance(self, other: Point2D) -> f64 {
        ((self.x - other.x).powi(2) + (self.y - other.y).powi(2)).sqrt()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum BuildingType {
    Residential,
    School,
    Workplace,
    Shop,
    Leisure,
    Hospital,
    Outdoor,
}

impl BuildingType {
    pub const ALL: [BuildingType; 7] = [
        BuildingType::Residential,
        BuildingType::School,
        BuildingType::Workplace,
        BuildingType::Shop,
        BuildingType::Leisure,
        BuildingType::Hospital,
        BuildingType::Outdoor,
    ];

    /// Types every region must contain.
    pub const REQUIRED: [BuildingType; 4] = [
        BuildingType::Residential,
        BuildingType::Workplace,
        BuildingType::School,
        BuildingType::Hospital,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            BuildingType::Residential => "residential",
            BuildingType::School => "school",
            BuildingType::Workplace => "workplace",
            BuildingType::Shop => "shop",
            BuildingType::Leisure => "leisure",
            BuildingType::Hospital => "hospital",
            BuildingType::Outdoor => "outdoor",
        }
    }
}

impl fmt::Display for BuildingType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for BuildingType {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let lower = s.trim().to_ascii_lowercase();
        BuildingType::ALL
            .into_iter()
            .find(|t| t.as_str() == lower)
            .ok_or_else(|| format!("unknown building type `{s}`"))
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct BuildingFootprint {
    pub id: BuildingId,
    pub name: String,
    /// Closed ring without the repeated closing vertex.
    pub polygon: Vec<Point2D>,
    pub btype: BuildingType,
    /// Block containing the centroid. Loaders leave this at 0 until
    /// [`Region::from_parts`] resolves it.
    pub block_id: BlockId,
    /// Nominal occupancy used to weight workplace sampling.
    pub capacity: u32,
}

impl BuildingFootprint {
    pub fn area(&self) -> f64 {
        polygon::area(&self.polygon)
    }

    pub fn centroid(&self) -> Point2D {
        polygon::centroid(&self.polygon)
    }
}

/// Footprint area per nominal occupant.
pub(crate) const SQ_METERS_PER_OCCUPANT: f64 = 10.0;

pub(crate) fn capacity_for_area(area: f64) -> u32 {
    ((area / SQ_METERS_PER_OCCUPANT).round() as u32).max(1)
}

#[derive(Clone, Debug, PartialEq)]
pub struct AdminBlock {
    pub id: BlockId,
    pub name: String,
    pub polygon: Vec<Point2D>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct PopulationGrid {
    pub origin: Point2D,
    pub cell_size: f64,
    pub rows: usize,
    pub cols: usize,
    /// Row-major; row 0 starts at `origin.y`.
    pub counts: Vec<u32>,
}

impl PopulationGrid {
    pub fn total(&self) -> u64 {
        self.counts.iter().map(|&c| u64::from(c)).sum()
    }

    pub fn count(&self, row: usize, col: usize) -> u32 {
        self.counts[row * self.cols + col]
    }

    /// Cell containing `p`, or none when outside the grid.
    pub fn cell_of(&self, p: Point2D) -> Option<(usize, usize)> {
        let cx = ((p.x - self.origin.x) / self.cell_size).floor();
        let cy = ((p.y - self.origin.y) / self.cell_size).floor();
        if cx < 0.0 || cy < 0.0 {
            return None;
        }
        let (row, col) = (cy as usize, cx as usize);
        (row < self.rows && col < self.cols).then_some((row, col))
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Region {
    pub buildings: Vec<BuildingFootprint>,
    pub blocks: Vec<AdminBlock>,
    pub grid: PopulationGrid,
    pub total_population: u32,
}

impl Region {
    /// Resolves each building's block from its centroid and checks every
    /// region invariant.
    pub fn from_parts(
        mut buildings: Vec<BuildingFootprint>,
        blocks: Vec<AdminBlock>,
        grid: PopulationGrid,
    ) -> Result<Region, GeoError> {
        for (i, b) in blocks.iter().enumerate() {
            if b.id.index() != i {
                return Err(GeoError::Invalid(format!(
                    "block ids must be 0..n in order; found {} at position {i}",
                    b.id
                )));
            }
        }
        for b in &mut buildings {
            b.block_id = locate_block(b.centroid(), &blocks)
                .ok_or_else(|| GeoError::Invalid(format!("building {} centroid lies outside every block", b.id)))?;
        }
        let total =
            u32::try_from(grid.total()).map_err(|_| GeoError::Invalid("population grid total overflows u32".into()))?;
        let region = Region {
            buildings,
            blocks,
            grid,
            total_population: total,
        };
        let problems = region.validate();
        if !problems.is_empty() {
            return Err(GeoError::Invalid(problems.join("; ")));
        }
        Ok(region)
    }

    pub fn building(&self, id: BuildingId) -> &BuildingFootprint {
        &self.buildings[id.index()]
    }

    pub fn buildings_of(&self, t: BuildingType) -> impl Iterator<Item = &BuildingFootprint> + '_ {
        self.buildings.iter().filter(move |b| b.btype == t)
    }

    pub fn count_of(&self, t: BuildingType) -> usize {
        self.buildings_of(t).count()
    }

    /// Every region invariant that does not hold, as readable messages.
    pub fn validate(&self) -> Vec<String> {
        let mut problems = Vec::new();
        if self.total_population == 0 {
            problems.push("total population is zero".to_string());
        }
        if self.grid.total() != u64::from(self.total_population) {
            problems.push(format!(
                "grid sum {} differs from total population {}",
                self.grid.total(),
                self.total_population
            ));
        }
        for t in BuildingType::REQUIRED {
            if self.count_of(t) == 0 {
                problems.push(format!("region has no {t} building"));
            }
        }
        for (i, b) in self.buildings.iter().enumerate() {
            if b.id.index() != i {
                problems.push(format!("building at position {i} has id {}", b.id));
            }
            if b.polygon.len() < 3 || b.area() <= 0.0 || !polygon::is_simple(&b.polygon) {
                problems.push(format!("building {} has degenerate geometry", b.id));
            }
            let c = b.centroid();
            match locate_block(c, &self.blocks) {
                Some(found) if found == b.block_id => {}
                other => problems.push(format!(
                    "building {} records block {} but centroid locates to {:?}",
                    b.id, b.block_id, other
                )),
            }
            if b.btype == BuildingType::Residential && self.grid.cell_of(c).is_none() {
                problems.push(format!("residential building {} lies outside the grid", b.id));
            }
        }
        for i in 0..self.blocks.len() {
            for j in (i + 1)..self.blocks.len() {
                if blocks_overlap(&self.blocks[i].polygon, &self.blocks[j].polygon) {
                    problems.push(format!(
                        "blocks {} and {} overlap",
                        self.blocks[i].id, self.blocks[j].id
                    ));
                }
            }
        }
        problems
    }
}

/// Interior overlap test: a vertex or centroid of one ring strictly inside
/// the other.
fn blocks_overlap(a: &[Point2D], b: &[Point2D]) -> bool {
    let strictly_inside = |ring: &[Point2D], p: Point2D| polygon::contains(ring, p) && !polygon::on_boundary(p, ring);
    a.iter().any(|&p| strictly_inside(b, p))
        || b.iter().any(|&p| strictly_inside(a, p))
        || strictly_inside(b, polygon::centroid(a))
        || strictly_inside(a, polygon::centroid(b))
}

/// Block containing `p`. Points on a shared boundary go to the lowest id.
pub fn locate_block(p: Point2D, blocks: &[AdminBlock]) -> Option<BlockId> {
    let mut best: Option<BlockId> = None;
    for b in blocks {
        if polygon::contains(&b.polygon, p) && best.is_none_or(|cur| b.id < cur) {
            best = Some(b.id);
        }
    }
    best
}
