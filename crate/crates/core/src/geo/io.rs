//! Text formats for buildings, blocks and the population grid.
//!
//! Buildings: `{"features":[{"name":..,"type":..,"ring":[[x,y],..]},..]}`.
//! Blocks: `{"blocks":[{"id":..,"name":..,"ring":[[x,y],..]},..]}`.
//! Grid: header `origin_x,origin_y,cell_size,rows,cols`, then `rows` lines
//! of `cols` comma-separated non-negative integers.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use log::warn;
use serde::{Deserialize, Serialize};

use super::{
    capacity_for_area, polygon, AdminBlock, BuildingFootprint, BuildingType, GeoError, Point2D, PopulationGrid, Region,
};
use crate::ids::{BlockId, BuildingId};

pub const BUILDINGS_FILE: &str = "buildings.json";
pub const BLOCKS_FILE: &str = "blocks.json";
pub const GRID_FILE: &str = "grid.csv";
pub const RULES_FILE: &str = "type_rules.txt";

#[derive(Serialize, Deserialize)]
struct FeatureFile {
    features: Vec<Feature>,
}

#[derive(Serialize, Deserialize)]
struct Feature {
    #[serde(default)]
    name: String,
    #[serde(rename = "type", default, skip_serializing_if = "Option::is_none")]
    btype: Option<String>,
    ring: Vec<[f64; 2]>,
}

#[derive(Serialize, Deserialize)]
struct BlockFile {
    blocks: Vec<BlockFeature>,
}

#[derive(Serialize, Deserialize)]
struct BlockFeature {
    id: u32,
    #[serde(default)]
    name: String,
    ring: Vec<[f64; 2]>,
}

/// A feature rejected by the building loader.
#[derive(Clone, Debug, PartialEq)]
pub struct SkippedFeature {
    pub index: usize,
    pub name: String,
    pub reason: String,
}

#[derive(Clone, Debug)]
pub struct BuildingLoad {
    pub buildings: Vec<BuildingFootprint>,
    pub skipped: Vec<SkippedFeature>,
}

fn read(path: &Path) -> Result<String, GeoError> {
    fs::read_to_string(path).map_err(|source| GeoError::Io {
        path: path.display().to_string(),
        source,
    })
}

fn write(path: &Path, text: &str) -> Result<(), GeoError> {
    fs::write(path, text).map_err(|source| GeoError::Io {
        path: path.display().to_string(),
        source,
    })
}

fn to_ring(raw: &[[f64; 2]]) -> Vec<Point2D> {
    polygon::normalize_ring(&raw.iter().map(|&[x, y]| Point2D::new(x, y)).collect::<Vec<_>>())
}

fn ring_problem(ring: &[Point2D]) -> Option<String> {
    if ring.iter().any(|p| !p.x.is_finite() || !p.y.is_finite()) {
        return Some("non-finite coordinate".into());
    }
    let distinct = polygon::distinct_vertices(ring);
    if distinct < 3 {
        return Some(format!("ring has {distinct} distinct vertices"));
    }
    if polygon::area(ring) <= 0.0 {
        return Some("ring has zero area".into());
    }
    if !polygon::is_simple(ring) {
        return Some("ring self-intersects".into());
    }
    None
}

/// Parses a building document. Features with degenerate rings are skipped
/// with a warning; a missing `type` defaults to residential. Ids follow file
/// order over the kept features, starting at 0.
pub fn parse_buildings(text: &str, source_name: &str) -> Result<BuildingLoad, GeoError> {
    let file: FeatureFile = serde_json::from_str(text).map_err(|e| GeoError::parse(source_name, e.to_string()))?;
    let mut buildings = Vec::with_capacity(file.features.len());
    let mut skipped = Vec::new();
    for (index, f) in file.features.into_iter().enumerate() {
        let ring = to_ring(&f.ring);
        if let Some(reason) = ring_problem(&ring) {
            warn!("{source_name}: skipping feature {index} ({:?}): {reason}", f.name);
            skipped.push(SkippedFeature {
                index,
                name: f.name,
                reason,
            });
            continue;
        }
        let btype = match f.btype.as_deref() {
            None => BuildingType::Residential,
            Some(t) => t
                .parse()
                .map_err(|e: String| GeoError::parse(source_name, format!("feature {index}: {e}")))?,
        };
        let area = polygon::area(&ring);
        buildings.push(BuildingFootprint {
            id: BuildingId(buildings.len() as u32),
            name: f.name,
            polygon: ring,
            btype,
            block_id: BlockId(0),
            capacity: capacity_for_area(area),
        });
    }
    if buildings.is_empty() {
        return Err(GeoError::EmptyRegion(source_name.to_string()));
    }
    Ok(BuildingLoad { buildings, skipped })
}

pub fn load_buildings(path: &Path) -> Result<BuildingLoad, GeoError> {
    parse_buildings(&read(path)?, &path.display().to_string())
}

pub fn parse_blocks(text: &str, source_name: &str) -> Result<Vec<AdminBlock>, GeoError> {
    let file: BlockFile = serde_json::from_str(text).map_err(|e| GeoError::parse(source_name, e.to_string()))?;
    let mut blocks: Vec<AdminBlock> = file
        .blocks
        .into_iter()
        .map(|b| {
            let ring = to_ring(&b.ring);
            match ring_problem(&ring) {
                Some(reason) => Err(GeoError::parse(source_name, format!("block {}: {reason}", b.id))),
                None => Ok(AdminBlock {
                    id: BlockId(b.id),
                    name: b.name,
                    polygon: ring,
                }),
            }
        })
        .collect::<Result<_, _>>()?;
    blocks.sort_by_key(|b| b.id);
    Ok(blocks)
}

pub fn load_blocks(path: &Path) -> Result<Vec<AdminBlock>, GeoError> {
    parse_blocks(&read(path)?, &path.display().to_string())
}

pub fn parse_population_grid(text: &str, source_name: &str) -> Result<PopulationGrid, GeoError> {
    let err = |m: String| GeoError::parse(source_name, m);
    let mut lines = text.lines().filter(|l| !l.trim().is_empty());
    let header = lines.next().ok_or_else(|| err("empty grid file".into()))?;
    let h: Vec<&str> = header.split(',').map(str::trim).collect();
    if h.len() != 5 {
        return Err(err(format!("header has {} fields, expected 5", h.len())));
    }
    let num = |s: &str, what: &str| s.parse::<f64>().map_err(|_| err(format!("bad {what} `{s}`")));
    let int = |s: &str, what: &str| s.parse::<usize>().map_err(|_| err(format!("bad {what} `{s}`")));
    let origin = Point2D::new(num(h[0], "origin_x")?, num(h[1], "origin_y")?);
    let cell_size = num(h[2], "cell_size")?;
    if !(cell_size > 0.0 && cell_size.is_finite()) {
        return Err(err(format!("cell_size must be positive, got {cell_size}")));
    }
    let rows = int(h[3], "rows")?;
    let cols = int(h[4], "cols")?;
    let mut counts = Vec::with_capacity(rows * cols);
    for row in 0..rows {
        let line = lines
            .next()
            .ok_or_else(|| err(format!("expected {rows} rows, found {row}")))?;
        let cells: Vec<&str> = line.split(',').map(str::trim).collect();
        if cells.len() != cols {
            return Err(err(format!("row {row} has {} cells, expected {cols}", cells.len())));
        }
        for (col, c) in cells.iter().enumerate() {
            let value: i64 = c
                .parse()
                .map_err(|_| err(format!("bad count `{c}` at ({row}, {col})")))?;
            if value < 0 {
                return Err(GeoError::NegativeCount { row, col, value });
            }
            let value = u32::try_from(value).map_err(|_| err(format!("count {value} too large")))?;
            counts.push(value);
        }
    }
    if lines.next().is_some() {
        return Err(err(format!("more than {rows} rows")));
    }
    Ok(PopulationGrid {
        origin,
        cell_size,
        rows,
        cols,
        counts,
    })
}

pub fn load_population_grid(path: &Path) -> Result<PopulationGrid, GeoError> {
    parse_population_grid(&read(path)?, &path.display().to_string())
}

/// Case-insensitive literal substring rule applied to building names.
#[derive(Clone, Debug, PartialEq)]
pub struct TypeRule {
    pub pattern: String,
    pub btype: BuildingType,
}

impl TypeRule {
    pub fn new(pattern: &str, btype: BuildingType) -> Self {
        TypeRule {
            pattern: pattern.to_lowercase(),
            btype,
        }
    }
}

/// First matching rule wins; unmatched buildings keep their type.
pub fn assign_building_types(mut buildings: Vec<BuildingFootprint>, rules: &[TypeRule]) -> Vec<BuildingFootprint> {
    for b in &mut buildings {
        let name = b.name.to_lowercase();
        if let Some(rule) = rules.iter().find(|r| name.contains(&r.pattern.to_lowercase())) {
            b.btype = rule.btype;
        }
    }
    buildings
}

/// Rules file: one `pattern = type` per line, in priority order.
pub fn load_type_rules(path: &Path) -> Result<Vec<TypeRule>, GeoError> {
    let source = path.display().to_string();
    let mut rules = Vec::new();
    for (i, line) in read(path)?.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (pat, t) = line
            .split_once('=')
            .ok_or_else(|| GeoError::parse(&source, format!("line {}: expected `pattern = type`", i + 1)))?;
        let btype = t
            .parse()
            .map_err(|e: String| GeoError::parse(&source, format!("line {}: {e}", i + 1)))?;
        rules.push(TypeRule::new(pat.trim(), btype));
    }
    Ok(rules)
}

/// Loads `buildings.json`, `blocks.json` and `grid.csv` from `dir`, applying
/// `type_rules.txt` when present.
pub fn load_region(dir: &Path) -> Result<Region, GeoError> {
    let load = load_buildings(&dir.join(BUILDINGS_FILE))?;
    let rules_path = dir.join(RULES_FILE);
    let buildings = if rules_path.exists() {
        assign_building_types(load.buildings, &load_type_rules(&rules_path)?)
    } else {
        load.buildings
    };
    let blocks = load_blocks(&dir.join(BLOCKS_FILE))?;
    let grid = load_population_grid(&dir.join(GRID_FILE))?;
    Region::from_parts(buildings, blocks, grid)
}

fn ring_out(ring: &[Point2D]) -> Vec<[f64; 2]> {
    let mut out: Vec<[f64; 2]> = ring.iter().map(|p| [p.x, p.y]).collect();
    if let Some(&first) = out.first() {
        out.push(first);
    }
    out
}

pub fn buildings_to_string(buildings: &[BuildingFootprint]) -> String {
    let file = FeatureFile {
        features: buildings
            .iter()
            .map(|b| Feature {
                name: b.name.clone(),
                btype: Some(b.btype.as_str().to_string()),
                ring: ring_out(&b.polygon),
            })
            .collect(),
    };
    serde_json::to_string_pretty(&file).expect("feature file serializes") + "\n"
}

pub fn blocks_to_string(blocks: &[AdminBlock]) -> String {
    let file = BlockFile {
        blocks: blocks
            .iter()
            .map(|b| BlockFeature {
                id: b.id.0,
                name: b.name.clone(),
                ring: ring_out(&b.polygon),
            })
            .collect(),
    };
    serde_json::to_string_pretty(&file).expect("block file serializes") + "\n"
}

pub fn grid_to_string(grid: &PopulationGrid) -> String {
    let mut out = format!(
        "{},{},{},{},{}\n",
        grid.origin.x, grid.origin.y, grid.cell_size, grid.rows, grid.cols
    );
    for row in grid.counts.chunks(grid.cols.max(1)) {
        let line: Vec<String> = row.iter().map(u32::to_string).collect();
        let _ = writeln!(out, "{}", line.join(","));
    }
    out
}

pub fn write_buildings(path: &Path, buildings: &[BuildingFootprint]) -> Result<(), GeoError> {
    write(path, &buildings_to_string(buildings))
}

pub fn write_blocks(path: &Path, blocks: &[AdminBlock]) -> Result<(), GeoError> {
    write(path, &blocks_to_string(blocks))
}

pub fn write_population_grid(path: &Path, grid: &PopulationGrid) -> Result<(), GeoError> {
    write(path, &grid_to_string(grid))
}

/// Writes the three region files plus `manifest.txt` with the type
/// histogram and total population.
pub fn write_region(dir: &Path, region: &Region) -> Result<(), GeoError> {
    fs::create_dir_all(dir).map_err(|source| GeoError::Io {
        path: dir.display().to_string(),
        source,
    })?;
    write_buildings(&dir.join(BUILDINGS_FILE), &region.buildings)?;
    write_blocks(&dir.join(BLOCKS_FILE), &region.blocks)?;
    write_population_grid(&dir.join(GRID_FILE), &region.grid)?;
    let mut manifest = String::new();
    let _ = writeln!(manifest, "buildings = {}", region.buildings.len());
    let _ = writeln!(manifest, "blocks = {}", region.blocks.len());
    let _ = writeln!(manifest, "total_population = {}", region.total_population);
    for t in BuildingType::ALL {
        let _ = writeln!(manifest, "type.{t} = {}", region.count_of(t));
    }
    write(&dir.join("manifest.txt"), &manifest)
}
