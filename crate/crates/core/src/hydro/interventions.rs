//! Blue-green interventions applied to the terrain and surface properties.

use serde::{Deserialize, Serialize};

use super::{HydroError, SurfaceParams, SurfaceProperties};
use crate::geodata::{cells_in_polygons, TerrainGrid, TileId};
use crate::geometry::Polygon;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum InterventionKind {
    PermeablePavement,
    DetentionPond { volume_m3: f64 },
    /// Idealized rainfall interception over a tile; not buildable.
    RainCapture { tile_id: TileId, fraction: f64 },
}

impl InterventionKind {
    pub fn name(&self) -> &'static str {
        match self {
            Self::PermeablePavement => "permeable_pavement",
            Self::DetentionPond { .. } => "detention_pond",
            Self::RainCapture { .. } => "rain_capture",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InterventionSpec {
    pub id: String,
    #[serde(flatten)]
    pub kind: InterventionKind,
    /// GeoJSON Polygon or MultiPolygon in the project CRS.
    #[serde(default, with = "geometry_json", skip_serializing_if = "Vec::is_empty")]
    pub geometry: Vec<Polygon>,
    /// Overrides the polygon area, e.g. when the quoted area is not the
    /// drawn one.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub area_m2: Option<f64>,
}

impl InterventionSpec {
    pub fn area(&self) -> f64 {
        self.area_m2
            .unwrap_or_else(|| self.geometry.iter().map(Polygon::area).sum())
    }

    pub fn is_geometric(&self) -> bool {
        !matches!(self.kind, InterventionKind::RainCapture { .. })
    }

    pub fn validate(&self) -> Result<(), HydroError> {
        let bad = |m: String| Err(HydroError::Geometry(format!("intervention '{}': {m}", self.id)));
        match &self.kind {
            InterventionKind::RainCapture { fraction, .. } => {
                if !(0.0..=1.0).contains(fraction) {
                    return bad(format!("capture fraction {fraction} outside [0, 1]"));
                }
                return Ok(());
            }
            InterventionKind::DetentionPond { volume_m3 } if !(*volume_m3 > 0.0) => {
                return bad(format!("pond volume must be positive, got {volume_m3}"));
            }
            _ => {}
        }
        if self.geometry.is_empty() {
            return bad("missing geometry".into());
        }
        if self.geometry.iter().any(|p| p.exterior.len() < 3) {
            return bad("polygon ring with fewer than 3 vertices".into());
        }
        let area = self.area();
        if !(area > 0.0) || !area.is_finite() {
            return bad(format!("area must be positive, got {area}"));
        }
        Ok(())
    }
}

mod geometry_json {
    use serde::{de::Error, Deserialize, Deserializer, Serializer};

    use crate::geodata::polygons_to_geojson;
    use crate::geometry::Polygon;

    pub fn serialize<S: Serializer>(polys: &[Polygon], s: S) -> Result<S::Ok, S::Error> {
        serde::Serialize::serialize(&polygons_to_geojson(polys), s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Vec<Polygon>, D::Error> {
        let json = serde_json::Value::deserialize(d)?;
        if json.is_null() {
            return Ok(Vec::new());
        }
        let value = geojson::Value::from_json_value(json).map_err(D::Error::custom)?;
        crate::geodata::polygons_of(&value).map_err(D::Error::custom)
    }
}

/// What an intervention did to the grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AppliedIntervention {
    pub id: String,
    pub cells: Vec<usize>,
    pub area_m2: f64,
    /// Pond carving depth.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub depth_m: Option<f64>,
}

/// Pure transformation: returns modified copies. Rain-capture specs do not
/// touch the grid and are skipped.
pub fn apply_interventions(
    grid: &TerrainGrid,
    props: &SurfaceProperties,
    specs: &[InterventionSpec],
    params: &SurfaceParams,
) -> Result<(TerrainGrid, SurfaceProperties, Vec<AppliedIntervention>), HydroError> {
    let mut grid = grid.clone();
    let mut props = props.clone();
    let mut applied = Vec::new();
    for spec in specs {
        spec.validate()?;
        if !spec.is_geometric() {
            continue;
        }
        let cells = cells_in_polygons(&grid, &spec.geometry);
        let on_building = cells
            .iter()
            .any(|&c| !grid.active[c] && grid.elevation[c].is_finite());
        let cells: Vec<usize> = cells.into_iter().filter(|&c| grid.active[c]).collect();
        let area = spec.area();
        match spec.kind {
            InterventionKind::DetentionPond { volume_m3 } => {
                if on_building {
                    return Err(HydroError::Geometry(format!(
                        "pond '{}' overlaps a building footprint",
                        spec.id
                    )));
                }
                if cells.is_empty() {
                    return Err(HydroError::Geometry(format!(
                        "pond '{}' covers no active cells",
                        spec.id
                    )));
                }
                let depth = volume_m3 / area;
                for &c in &cells {
                    grid.elevation[c] -= depth;
                    props.set(c, params.pond);
                    props.pond[c] = true;
                }
                applied.push(AppliedIntervention {
                    id: spec.id.clone(),
                    cells,
                    area_m2: area,
                    depth_m: Some(depth),
                });
            }
            InterventionKind::PermeablePavement => {
                if cells.is_empty() {
                    return Err(HydroError::Geometry(format!(
                        "pavement '{}' covers no active cells",
                        spec.id
                    )));
                }
                for &c in &cells {
                    props.set(c, params.permeable_pavement);
                }
                applied.push(AppliedIntervention {
                    id: spec.id.clone(),
                    cells,
                    area_m2: area,
                    depth_m: None,
                });
            }
            InterventionKind::RainCapture { .. } => unreachable!(),
        }
    }
    Ok((grid, props, applied))
}
