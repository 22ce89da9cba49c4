//! Square tile partition used as the unit of rainfall capture and ranking.

use serde::{Deserialize, Serialize};

use super::{GeoError, LandClass, LandUseMap, TerrainGrid};
use crate::geometry::Polygon;

pub type TileId = u32;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Tile {
    pub id: TileId,
    pub x_min: f64,
    pub y_min: f64,
    pub x_max: f64,
    pub y_max: f64,
    /// Cells of the domain (active or building) whose centers fall in the tile.
    pub n_cells: usize,
}

impl Tile {
    pub fn polygon(&self) -> Polygon {
        Polygon::rect(self.x_min, self.y_min, self.x_max, self.y_max)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TilePartition {
    pub tile_size: f64,
    pub tiles: Vec<Tile>,
    /// Tile id per cell; 0 for nodata cells outside the domain.
    pub cell_to_tile: Vec<TileId>,
    /// Green fraction per tile, aligned with `tiles`.
    pub green_fraction: Vec<f64>,
}

impl TilePartition {
    pub fn tile(&self, id: TileId) -> Option<&Tile> {
        self.position(id).map(|i| &self.tiles[i])
    }

    pub fn position(&self, id: TileId) -> Option<usize> {
        // Ids are 1..=T in order.
        let i = (id as usize).checked_sub(1)?;
        (i < self.tiles.len()).then_some(i)
    }

    pub fn ids(&self) -> impl Iterator<Item = TileId> + '_ {
        self.tiles.iter().map(|t| t.id)
    }

    pub fn green_fraction_of(&self, id: TileId) -> Option<f64> {
        self.position(id).map(|i| self.green_fraction[i])
    }

    pub fn set_green_fraction(&mut self, landuse: &LandUseMap) {
        self.green_fraction = compute_green_fraction(landuse, self);
    }
}

/// Lay out tiles row-major from the lower-left origin: ids increase eastward,
/// then northward. Tiles with no domain cells are dropped and ids are
/// assigned to the remaining (populated) tiles in order. Domain membership is
/// a finite elevation, so building-hole cells still belong to their tile.
pub fn partition_tiles(grid: &TerrainGrid, tile_size: f64) -> Result<TilePartition, GeoError> {
    if !(tile_size >= 2.0 * grid.cell_size) {
        return Err(GeoError::Config(format!(
            "tile size {tile_size} m must be at least twice the cell size {} m",
            grid.cell_size
        )));
    }
    let nx = (grid.width() / tile_size).ceil().max(1.0) as usize;
    let ny = (grid.height() / tile_size).ceil().max(1.0) as usize;

    let slot_of = |r: usize, c: usize| -> usize {
        let (x, y) = grid.cell_center(r, c);
        let tx = (((x - grid.origin_x) / tile_size).floor() as usize).min(nx - 1);
        let ty = (((y - grid.origin_y) / tile_size).floor() as usize).min(ny - 1);
        ty * nx + tx
    };

    let mut counts = vec![0usize; nx * ny];
    for r in 0..grid.n_rows {
        for c in 0..grid.n_cols {
            if grid.elevation[grid.index(r, c)].is_finite() {
                counts[slot_of(r, c)] += 1;
            }
        }
    }

    let mut slot_to_id = vec![0 as TileId; nx * ny];
    let mut tiles = Vec::new();
    let x_end = grid.origin_x + grid.width();
    let y_end = grid.origin_y + grid.height();
    for ty in 0..ny {
        for tx in 0..nx {
            let slot = ty * nx + tx;
            if counts[slot] == 0 {
                continue;
            }
            let id = tiles.len() as TileId + 1;
            slot_to_id[slot] = id;
            let x_min = grid.origin_x + tx as f64 * tile_size;
            let y_min = grid.origin_y + ty as f64 * tile_size;
            tiles.push(Tile {
                id,
                x_min,
                y_min,
                x_max: (x_min + tile_size).min(x_end),
                y_max: (y_min + tile_size).min(y_end),
                n_cells: counts[slot],
            });
        }
    }

    let mut cell_to_tile = vec![0 as TileId; grid.n_cells()];
    for r in 0..grid.n_rows {
        for c in 0..grid.n_cols {
            let i = grid.index(r, c);
            if grid.elevation[i].is_finite() {
                cell_to_tile[i] = slot_to_id[slot_of(r, c)];
            }
        }
    }
    let green_fraction = vec![0.0; tiles.len()];
    Ok(TilePartition {
        tile_size,
        tiles,
        cell_to_tile,
        green_fraction,
    })
}

/// Green cells over all domain cells of each tile (building cells included in
/// the denominator).
pub fn compute_green_fraction(landuse: &LandUseMap, partition: &TilePartition) -> Vec<f64> {
    let mut green = vec![0usize; partition.tiles.len()];
    for (cell, &tile) in partition.cell_to_tile.iter().enumerate() {
        if tile == 0 {
            continue;
        }
        if landuse.get(cell) == LandClass::Green {
            green[tile as usize - 1] += 1;
        }
    }
    partition
        .tiles
        .iter()
        .zip(green)
        .map(|(t, g)| if t.n_cells == 0 { 0.0 } else { g as f64 / t.n_cells as f64 })
        .collect()
}
