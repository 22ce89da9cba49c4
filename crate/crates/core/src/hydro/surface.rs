//! Per-cell friction and infiltration parameters.

use serde::{Deserialize, Serialize};

use super::HydroError;
use crate::geodata::{LandClass, LandUseMap, TerrainGrid};
use crate::storm::MM_PER_H_TO_M_PER_S;

/// Parameters for one surface type, in user units.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SurfaceClass {
    pub manning_n: f64,
    pub infiltration_mm_per_h: f64,
    pub capacity_mm: f64,
}

impl SurfaceClass {
    pub const fn new(manning_n: f64, infiltration_mm_per_h: f64, capacity_mm: f64) -> Self {
        Self {
            manning_n,
            infiltration_mm_per_h,
            capacity_mm,
        }
    }
}

/// Defaults are stand-ins; calibrate per project.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SurfaceParams {
    pub paved: SurfaceClass,
    pub green: SurfaceClass,
    pub pond: SurfaceClass,
    /// Applied by a permeable-pavement intervention.
    pub permeable_pavement: SurfaceClass,
}

impl Default for SurfaceParams {
    fn default() -> Self {
        Self {
            paved: SurfaceClass::new(0.02, 0.0, 0.0),
            green: SurfaceClass::new(0.035, 12.5, 50.0),
            pond: SurfaceClass::new(0.035, 0.0, 0.0),
            permeable_pavement: SurfaceClass::new(0.02, 200.0, 150.0),
        }
    }
}

impl SurfaceParams {
    pub fn for_class(&self, class: LandClass) -> SurfaceClass {
        match class {
            LandClass::Green => self.green,
            LandClass::Paved | LandClass::Building => self.paved,
            LandClass::Pond => self.pond,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SurfaceProperties {
    pub manning_n: Vec<f64>,
    /// m/s
    pub infiltration_rate: Vec<f64>,
    /// m of storage available at the start of a run.
    pub infiltration_capacity: Vec<f64>,
    /// Cells counted in the ledger's pond storage.
    pub pond: Vec<bool>,
}

impl SurfaceProperties {
    pub fn from_landuse(landuse: &LandUseMap, params: &SurfaceParams) -> Self {
        let n = landuse.classes.len();
        let mut props = Self::uniform(n, 0.0, 0.0, 0.0);
        for (i, &class) in landuse.classes.iter().enumerate() {
            props.set(i, params.for_class(class));
            props.pond[i] = class == LandClass::Pond;
        }
        props
    }

    pub fn uniform(n_cells: usize, manning_n: f64, rate_mm_per_h: f64, capacity_mm: f64) -> Self {
        Self {
            manning_n: vec![manning_n; n_cells],
            infiltration_rate: vec![rate_mm_per_h * MM_PER_H_TO_M_PER_S; n_cells],
            infiltration_capacity: vec![capacity_mm / 1000.0; n_cells],
            pond: vec![false; n_cells],
        }
    }

    pub fn set(&mut self, cell: usize, class: SurfaceClass) {
        self.manning_n[cell] = class.manning_n;
        self.infiltration_rate[cell] = class.infiltration_mm_per_h * MM_PER_H_TO_M_PER_S;
        self.infiltration_capacity[cell] = class.capacity_mm / 1000.0;
    }

    pub fn len(&self) -> usize {
        self.manning_n.len()
    }

    pub fn is_empty(&self) -> bool {
        self.manning_n.is_empty()
    }

    /// n = 0 is accepted and means frictionless.
    pub fn validate(&self, grid: &TerrainGrid) -> Result<(), HydroError> {
        let n = grid.n_cells();
        if self.manning_n.len() != n
            || self.infiltration_rate.len() != n
            || self.infiltration_capacity.len() != n
            || self.pond.len() != n
        {
            return Err(HydroError::Config(format!(
                "surface properties have {} cells, grid has {n}",
                self.len()
            )));
        }
        for i in 0..n {
            if !grid.active[i] {
                continue;
            }
            let (m, r, c) = (
                self.manning_n[i],
                self.infiltration_rate[i],
                self.infiltration_capacity[i],
            );
            if !(m >= 0.0 && m.is_finite()) || !(r >= 0.0 && r.is_finite()) || !(c >= 0.0) {
                return Err(HydroError::Config(format!(
                    "invalid surface parameters at cell {i}: n={m}, rate={r}, capacity={c}"
                )));
            }
        }
        Ok(())
    }
}
