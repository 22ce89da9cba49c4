//! Terrain, building and land-use ingestion; masks, buffers and tiles.

mod ascii;
mod buildings;
mod geotiff;
mod grid;
mod landuse;
mod tiles;
mod vector;

use std::fs::File;
use std::io::BufReader;
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use ascii::{read_esri_ascii, write_esri_ascii};
pub use buildings::{
    cells_in_polygons, rasterize_buildings, BuildingFootprint, BuildingInput, RasterizeWarning,
    RasterizedBuildings, UseClass,
};
pub use geotiff::{read_geotiff, write_geotiff};
pub use grid::{GridGeoref, TerrainGrid};
pub use landuse::{LandClass, LandUseMap, LandUseZone};
pub use tiles::{compute_green_fraction, partition_tiles, Tile, TileId, TilePartition};
pub use vector::{parse_buildings, parse_landuse, polygons_of, polygons_to_geojson};

#[derive(Debug, Error)]
pub enum GeoError {
    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("unsupported format: {0}")]
    Unsupported(String),
    #[error("invalid grid: {0}")]
    InvalidGrid(String),
    #[error("configuration error: {0}")]
    Config(String),
    #[error("vector input: {0}")]
    Vector(String),
    #[error("io: {0}")]
    Io(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TerrainFormat {
    EsriAscii,
    Geotiff,
}

impl TerrainFormat {
    /// Guess from the file extension (`.asc` / `.tif`, `.tiff`).
    pub fn from_path(path: &Path) -> Option<Self> {
        match path.extension()?.to_str()?.to_ascii_lowercase().as_str() {
            "asc" | "txt" => Some(Self::EsriAscii),
            "tif" | "tiff" => Some(Self::Geotiff),
            _ => None,
        }
    }
}

pub fn load_terrain(path: &Path, format: TerrainFormat) -> Result<TerrainGrid, GeoError> {
    let file = File::open(path).map_err(|e| GeoError::Io(format!("{}: {e}", path.display())))?;
    match format {
        TerrainFormat::EsriAscii => read_esri_ascii(BufReader::new(file)),
        TerrainFormat::Geotiff => read_geotiff(BufReader::new(file)),
    }
}
