use serde::Serialize;
use sha2::{Digest, Sha256};

use super::{CostModel, PlanError};
use crate::damage::DamageCurves;
use crate::geodata::{
    partition_tiles, rasterize_buildings, BuildingFootprint, BuildingInput, LandUseMap, LandUseZone,
    RasterizeWarning, TerrainGrid, TilePartition,
};
use crate::hydro::{SolverConfig, SurfaceParams, SurfaceProperties};
use crate::storm::{build_redirection, Hyetograph, RainRedirection};

/// Raw inputs of a study area.
#[derive(Debug, Clone)]
pub struct CatchmentInput {
    pub terrain: TerrainGrid,
    pub buildings: Vec<BuildingInput>,
    pub landuse: Vec<LandUseZone>,
    pub tile_size: f64,
    pub surface: SurfaceParams,
    pub solver: SolverConfig,
    pub storms: Vec<Hyetograph>,
    pub curves: DamageCurves,
    pub costs: CostModel,
}

/// Prepared study area shared read-only by every scenario run.
#[derive(Debug, Clone)]
pub struct Catchment {
    /// Terrain with building holes deactivated.
    pub grid: TerrainGrid,
    pub buildings: Vec<BuildingFootprint>,
    pub landuse: LandUseMap,
    pub partition: TilePartition,
    pub props: SurfaceProperties,
    pub redirection: RainRedirection,
    pub surface: SurfaceParams,
    pub solver: SolverConfig,
    /// Sorted by return period.
    pub storms: Vec<Hyetograph>,
    pub curves: DamageCurves,
    pub costs: CostModel,
    pub warnings: Vec<RasterizeWarning>,
    fingerprint: String,
}

impl Catchment {
    pub fn build(input: CatchmentInput) -> Result<Self, PlanError> {
        let CatchmentInput {
            terrain,
            buildings,
            landuse,
            tile_size,
            surface,
            solver,
            mut storms,
            curves,
            costs,
        } = input;
        solver.validate().map_err(|e| PlanError::Config(e.to_string()))?;
        costs.validate()?;
        let rasterized = rasterize_buildings(&buildings, &terrain);
        for w in &rasterized.warnings {
            tracing::warn!(?w, "building rasterization");
        }
        let grid = rasterized.grid;
        let mut partition = partition_tiles(&grid, tile_size).map_err(|e| PlanError::Config(e.to_string()))?;
        let landuse = LandUseMap::from_zones(&grid, &landuse, &rasterized.buildings);
        partition.set_green_fraction(&landuse);
        let props = SurfaceProperties::from_landuse(&landuse, &surface);
        props.validate(&grid).map_err(|e| PlanError::Config(e.to_string()))?;
        let redirection = build_redirection(&rasterized.buildings, &grid).map_err(|e| PlanError::Config(e.to_string()))?;

        storms.sort_by(|a, b| a.return_period.total_cmp(&b.return_period));
        if storms.windows(2).any(|w| w[0].return_period == w[1].return_period) {
            return Err(PlanError::Config("two storms share a return period".into()));
        }
        if let Some(s) = storms.iter().find(|s| !(s.return_period > 0.0)) {
            return Err(PlanError::Config(format!("return period must be positive, got {}", s.return_period)));
        }

        let mut c = Self {
            grid,
            buildings: rasterized.buildings,
            landuse,
            partition,
            props,
            redirection,
            surface,
            solver,
            storms,
            curves,
            costs,
            warnings: rasterized.warnings,
            fingerprint: String::new(),
        };
        c.fingerprint = c.compute_fingerprint();
        Ok(c)
    }

    pub fn storm(&self, return_period: f64) -> Result<&Hyetograph, PlanError> {
        self.storms
            .iter()
            .find(|s| s.return_period.to_bits() == return_period.to_bits())
            .ok_or(PlanError::UnknownReturnPeriod(return_period))
    }

    pub fn return_periods(&self) -> Vec<f64> {
        self.storms.iter().map(|s| s.return_period).collect()
    }

    /// Content hash of everything a run result depends on, except the
    /// scenario itself.
    pub fn fingerprint(&self) -> &str {
        &self.fingerprint
    }

    pub fn footprint_areas(&self) -> Vec<f64> {
        self.buildings.iter().map(BuildingFootprint::footprint_area).collect()
    }

    fn compute_fingerprint(&self) -> String {
        let mut h = Sha256::new();
        let g = &self.grid;
        h.update(b"grid");
        for v in [g.origin_x, g.origin_y, g.cell_size] {
            h.update(v.to_le_bytes());
        }
        h.update((g.n_rows as u64).to_le_bytes());
        h.update((g.n_cols as u64).to_le_bytes());
        feed_f64s(&mut h, &g.elevation);
        h.update(g.active.iter().map(|&a| a as u8).collect::<Vec<u8>>());
        h.update(b"props");
        feed_f64s(&mut h, &self.props.manning_n);
        feed_f64s(&mut h, &self.props.infiltration_rate);
        feed_f64s(&mut h, &self.props.infiltration_capacity);
        h.update(self.props.pond.iter().map(|&a| a as u8).collect::<Vec<u8>>());
        h.update(b"tiles");
        h.update(self.partition.cell_to_tile.iter().flat_map(|t| t.to_le_bytes()).collect::<Vec<u8>>());
        feed_json(&mut h, &self.redirection);
        feed_json(&mut h, &self.buildings);
        feed_json(&mut h, &self.surface);
        feed_json(&mut h, &self.solver);
        feed_json(&mut h, &self.curves);
        hex::encode(h.finalize())
    }
}

fn feed_f64s(h: &mut Sha256, values: &[f64]) {
    let bytes: Vec<u8> = values.iter().flat_map(|v| v.to_bits().to_le_bytes()).collect();
    h.update((values.len() as u64).to_le_bytes());
    h.update(bytes);
}

pub(super) fn feed_json<T: Serialize>(h: &mut Sha256, value: &T) {
    let s = serde_json::to_vec(value).expect("serializable");
    h.update((s.len() as u64).to_le_bytes());
    h.update(s);
}
