//! Building-hole rasterization and buffer rings.

use std::fmt;

use serde::{Deserialize, Serialize};

use super::TerrainGrid;
use crate::geometry::Polygon;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum UseClass {
    Commercial,
    Residential,
}

impl UseClass {
    pub fn as_str(self) -> &'static str {
        match self {
            UseClass::Commercial => "commercial",
            UseClass::Residential => "residential",
        }
    }
}

impl fmt::Display for UseClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for UseClass {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "commercial" => Ok(UseClass::Commercial),
            "residential" => Ok(UseClass::Residential),
            other => Err(format!(
                "use_class must be 'commercial' or 'residential', got '{other}'"
            )),
        }
    }
}

/// A building as read from vector input, before rasterization.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BuildingInput {
    pub id: String,
    pub use_class: UseClass,
    pub polygons: Vec<Polygon>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BuildingFootprint {
    pub id: String,
    pub use_class: UseClass,
    pub polygons: Vec<Polygon>,
    /// Sorted cell indices removed from the flow domain.
    pub footprint_cells: Vec<usize>,
    /// Sorted active cells within one cell (8-neighbourhood) of the footprint.
    pub buffer_cells: Vec<usize>,
}

impl BuildingFootprint {
    pub fn footprint_area(&self) -> f64 {
        self.polygons.iter().map(Polygon::area).sum()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum RasterizeWarning {
    Degenerate { id: String },
    OutsideGrid { id: String },
    /// Cells already claimed by an earlier building.
    Overlap { id: String, cells: usize },
    /// Building enclosed by other buildings; classified low by definition.
    NoBuffer { id: String },
}

#[derive(Debug, Clone)]
pub struct RasterizedBuildings {
    pub buildings: Vec<BuildingFootprint>,
    /// Input grid with footprint cells deactivated.
    pub grid: TerrainGrid,
    pub warnings: Vec<RasterizeWarning>,
}

/// Cells whose centers fall inside any of the polygons, restricted to the
/// polygon bounding boxes.
pub fn cells_in_polygons(grid: &TerrainGrid, polygons: &[Polygon]) -> Vec<usize> {
    let mut cells = Vec::new();
    for poly in polygons {
        let Some((lo, hi)) = poly.bbox() else { continue };
        let cs = grid.cell_size;
        let top = grid.origin_y + grid.height();
        let col_lo = (((lo[0] - grid.origin_x) / cs - 0.5).ceil().max(0.0)) as usize;
        let col_hi = ((hi[0] - grid.origin_x) / cs - 0.5).floor();
        let row_lo = (((top - hi[1]) / cs - 0.5).ceil().max(0.0)) as usize;
        let row_hi = ((top - lo[1]) / cs - 0.5).floor();
        if col_hi < 0.0 || row_hi < 0.0 {
            continue;
        }
        let col_hi = (col_hi as usize).min(grid.n_cols - 1);
        let row_hi = (row_hi as usize).min(grid.n_rows - 1);
        for r in row_lo..=row_hi {
            for c in col_lo..=col_hi {
                let (x, y) = grid.cell_center(r, c);
                if poly.contains(x, y) {
                    cells.push(grid.index(r, c));
                }
            }
        }
    }
    cells.sort_unstable();
    cells.dedup();
    cells
}

/// Remove building footprints from the flow domain and compute buffers.
///
/// Cells claimed by more than one polygon belong to the first building in
/// input order.
pub fn rasterize_buildings(inputs: &[BuildingInput], grid: &TerrainGrid) -> RasterizedBuildings {
    let mut owner: Vec<u32> = vec![u32::MAX; grid.n_cells()];
    let mut warnings = Vec::new();
    let mut buildings = Vec::with_capacity(inputs.len());

    for (bi, input) in inputs.iter().enumerate() {
        let degenerate = input.polygons.iter().all(Polygon::is_degenerate);
        let mut cells = cells_in_polygons(grid, &input.polygons);
        let before = cells.len();
        cells.retain(|&c| owner[c] == u32::MAX);
        if cells.len() < before {
            warnings.push(RasterizeWarning::Overlap {
                id: input.id.clone(),
                cells: before - cells.len(),
            });
        }
        for &c in &cells {
            owner[c] = bi as u32;
        }
        if cells.is_empty() && before == 0 {
            let w = if degenerate {
                RasterizeWarning::Degenerate { id: input.id.clone() }
            } else {
                RasterizeWarning::OutsideGrid { id: input.id.clone() }
            };
            tracing::warn!(?w, "building has no footprint cells");
            warnings.push(w);
        }
        buildings.push(BuildingFootprint {
            id: input.id.clone(),
            use_class: input.use_class,
            polygons: input.polygons.clone(),
            footprint_cells: cells,
            buffer_cells: Vec::new(),
        });
    }

    let mut out = grid.clone();
    for b in &buildings {
        for &c in &b.footprint_cells {
            out.active[c] = false;
        }
    }

    for b in &mut buildings {
        let mut ring: Vec<usize> = b
            .footprint_cells
            .iter()
            .flat_map(|&c| out.neighbours8(c))
            .filter(|&n| out.active[n])
            .collect();
        ring.sort_unstable();
        ring.dedup();
        if ring.is_empty() && !b.footprint_cells.is_empty() {
            tracing::warn!(id = %b.id, "building has no buffer cells; classified low");
            warnings.push(RasterizeWarning::NoBuffer { id: b.id.clone() });
        }
        b.buffer_cells = ring;
    }

    RasterizedBuildings {
        buildings,
        grid: out,
        warnings,
    }
}
