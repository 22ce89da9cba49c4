//! Project files: where the inputs live and how to run them.

use std::fs;
use std::path::{Path, PathBuf};

use bluegreen_core::damage::{CurveUnit, DamageCurve, DamageCurves};
use bluegreen_core::fixtures::{self, SyntheticOptions};
use bluegreen_core::geodata::{
    load_terrain, parse_buildings, parse_landuse, polygons_to_geojson, write_esri_ascii, TerrainFormat, UseClass,
};
use bluegreen_core::hydro::{SolverConfig, SurfaceParams};
use bluegreen_core::planner::{Catchment, CatchmentInput, CostModel, DEFAULT_GF_THRESHOLD};
use bluegreen_core::storm::{parse_storm_config, StormConfig, StormProfile};
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::error::{io_err, ServiceError, SCHEMA_VERSION};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum StormSource {
    File(PathBuf),
    Inline(Vec<StormConfig>),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CurveFiles {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub commercial: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub residential: Option<PathBuf>,
    #[serde(default)]
    pub unit: CurveUnit,
}

fn default_gf_threshold() -> f64 {
    DEFAULT_GF_THRESHOLD
}

fn default_registry() -> PathBuf {
    PathBuf::from("registry")
}

/// On-disk project description. Relative paths resolve against the
/// directory holding the project file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProjectFile {
    pub schema_version: u32,
    pub id: String,
    pub terrain: PathBuf,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub terrain_format: Option<TerrainFormat>,
    pub buildings: PathBuf,
    pub landuse: PathBuf,
    pub storms: StormSource,
    pub curves: CurveFiles,
    #[serde(default)]
    pub costs: CostModel,
    pub tile_size: f64,
    #[serde(default)]
    pub surface: SurfaceParams,
    #[serde(default)]
    pub solver: SolverConfig,
    #[serde(default = "default_gf_threshold")]
    pub gf_threshold: f64,
    /// Run registry directory.
    #[serde(default = "default_registry")]
    pub registry: PathBuf,
}

pub struct Project {
    pub path: PathBuf,
    pub dir: PathBuf,
    pub file: ProjectFile,
    pub catchment: Catchment,
}

fn read_text(path: &Path) -> Result<String, ServiceError> {
    fs::read_to_string(path).map_err(|e| io_err(path.display(), e))
}

impl Project {
    pub fn resolve(&self, p: &Path) -> PathBuf {
        self.dir.join(p)
    }

    pub fn registry_dir(&self) -> PathBuf {
        self.resolve(&self.file.registry)
    }

    pub fn load(path: &Path) -> Result<Self, ServiceError> {
        if !path.is_file() {
            return Err(ServiceError::MissingFile(path.display().to_string()));
        }
        let file: ProjectFile = serde_json::from_str(&read_text(path)?)
            .map_err(|e| ServiceError::Project(format!("{}: {e}", path.display())))?;
        if file.schema_version != SCHEMA_VERSION {
            return Err(ServiceError::Project(format!(
                "unsupported schema_version {} (expected {SCHEMA_VERSION})",
                file.schema_version
            )));
        }
        let dir = path.parent().map(Path::to_path_buf).unwrap_or_default();
        let at = |p: &Path| dir.join(p);

        let mut inputs: Vec<&Path> = vec![&file.terrain, &file.buildings, &file.landuse];
        if let StormSource::File(p) = &file.storms {
            inputs.push(p);
        }
        inputs.extend(file.curves.commercial.as_deref());
        inputs.extend(file.curves.residential.as_deref());
        for p in inputs {
            if !at(p).is_file() {
                return Err(ServiceError::MissingFile(at(p).display().to_string()));
            }
        }

        let terrain_path = at(&file.terrain);
        let format = file
            .terrain_format
            .or_else(|| TerrainFormat::from_path(&terrain_path))
            .ok_or_else(|| ServiceError::Project(format!("cannot tell the format of {}", terrain_path.display())))?;
        let project_err = |what: &Path, e: &dyn std::fmt::Display| ServiceError::Project(format!("{}: {e}", what.display()));
        let terrain = load_terrain(&terrain_path, format).map_err(|e| project_err(&terrain_path, &e))?;
        let buildings =
            parse_buildings(&read_text(&at(&file.buildings))?).map_err(|e| project_err(&file.buildings, &e))?;
        let landuse = parse_landuse(&read_text(&at(&file.landuse))?).map_err(|e| project_err(&file.landuse, &e))?;
        let storm_configs = match &file.storms {
            StormSource::File(p) => parse_storm_config(&read_text(&at(p))?).map_err(|e| project_err(p, &e))?,
            StormSource::Inline(v) => v.clone(),
        };
        let storms = storm_configs
            .iter()
            .map(|s| s.to_hyetograph())
            .collect::<Result<Vec<_>, _>>()
            .map_err(|e| ServiceError::Project(format!("storms: {e}")))?;

        let curve = |p: &Option<PathBuf>, class: UseClass| -> Result<Option<DamageCurve>, ServiceError> {
            let Some(p) = p else { return Ok(None) };
            let f = fs::File::open(at(p)).map_err(|e| io_err(at(p).display(), e))?;
            let c = DamageCurve::from_csv(f, class).map_err(|e| project_err(p, &e))?;
            Ok(Some(c.with_unit(file.curves.unit)))
        };
        let curves = DamageCurves {
            commercial: curve(&file.curves.commercial, UseClass::Commercial)?,
            residential: curve(&file.curves.residential, UseClass::Residential)?,
        };
        for class in [UseClass::Commercial, UseClass::Residential] {
            if buildings.iter().any(|b| b.use_class == class) && curves.get(class).is_err() {
                return Err(ServiceError::Project(format!("{class} buildings present but no {class} curve configured")));
            }
        }
        if !(0.0..=1.0).contains(&file.gf_threshold) {
            return Err(ServiceError::Project(format!("gf_threshold {} outside [0, 1]", file.gf_threshold)));
        }

        let catchment = Catchment::build(CatchmentInput {
            terrain,
            buildings,
            landuse,
            tile_size: file.tile_size,
            surface: file.surface.clone(),
            solver: file.solver.clone(),
            storms,
            curves,
            costs: file.costs.clone(),
        })?;
        Ok(Self {
            path: path.to_path_buf(),
            dir,
            file,
            catchment,
        })
    }

    pub fn summary(&self) -> Value {
        let c = &self.catchment;
        let g = c.grid.georef();
        json!({
            "schema_version": SCHEMA_VERSION,
            "id": self.file.id,
            "georef": g,
            "cells": c.grid.n_cells(),
            "active_cells": c.grid.active_count(),
            "tile_size": c.partition.tile_size,
            "tiles": c.partition.tiles.len(),
            "buildings": c.buildings.len(),
            "return_periods": c.return_periods(),
            "storms": c.storms.iter().map(|s| json!({
                "return_period": s.return_period,
                "duration_s": s.duration(),
                "total_depth_mm": s.total_depth(),
            })).collect::<Vec<_>>(),
            "costs": c.costs,
            "gf_threshold": self.file.gf_threshold,
            "fingerprint": c.fingerprint(),
            "warnings": c.warnings.iter().map(|w| format!("{w:?}")).collect::<Vec<_>>(),
        })
    }
}

fn write(path: &Path, bytes: impl AsRef<[u8]>) -> Result<(), ServiceError> {
    if let Some(parent) = path.parent() {
        fs::create_dir_all(parent).map_err(|e| io_err(parent.display(), e))?;
    }
    fs::write(path, bytes).map_err(|e| io_err(path.display(), e))
}

fn curve_csv(c: &DamageCurve) -> String {
    let mut s = String::from("depth_m,damage_gbp\n");
    for (d, v) in &c.points {
        s.push_str(&format!("{d},{v}\n"));
    }
    s
}

/// Write the synthetic valley catchment as a project under `dir`; returns
/// the project file path.
pub fn write_demo(dir: &Path, opts: &SyntheticOptions) -> Result<PathBuf, ServiceError> {
    let input = fixtures::synthetic_catchment(opts);

    let mut terrain = Vec::new();
    write_esri_ascii(&mut terrain, &input.terrain.georef(), &input.terrain.elevation, -9999.0)
        .map_err(|e| io_err("terrain", e))?;
    write(&dir.join("terrain.asc"), terrain)?;

    let buildings: Vec<Value> = input
        .buildings
        .iter()
        .map(|b| {
            json!({
                "type": "Feature",
                "geometry": polygons_to_geojson(&b.polygons),
                "properties": { "id": b.id, "use_class": b.use_class },
            })
        })
        .collect();
    write(
        &dir.join("buildings.geojson"),
        serde_json::to_vec_pretty(&json!({"type": "FeatureCollection", "features": buildings})).expect("json"),
    )?;
    let zones: Vec<Value> = input
        .landuse
        .iter()
        .map(|z| {
            json!({
                "type": "Feature",
                "geometry": polygons_to_geojson(&z.polygons),
                "properties": { "landuse": z.class },
            })
        })
        .collect();
    write(
        &dir.join("landuse.geojson"),
        serde_json::to_vec_pretty(&json!({"type": "FeatureCollection", "features": zones})).expect("json"),
    )?;

    let storms: Vec<StormConfig> = opts
        .storms
        .iter()
        .map(|&(rp, depth)| StormConfig {
            return_period_years: rp,
            duration_s: opts.storm_duration_s,
            dt_s: 300.0,
            profile: StormProfile::Uniform,
            depth_mm: Some(depth),
            intensities_mm_per_h: None,
        })
        .collect();
    write(&dir.join("storms.json"), serde_json::to_vec_pretty(&storms).expect("json"))?;
    write(&dir.join("curves/commercial.csv"), curve_csv(&fixtures::commercial_curve()))?;
    write(&dir.join("curves/residential.csv"), curve_csv(&fixtures::residential_curve()))?;

    let project = ProjectFile {
        schema_version: SCHEMA_VERSION,
        id: "synthetic-valley".into(),
        terrain: "terrain.asc".into(),
        terrain_format: None,
        buildings: "buildings.geojson".into(),
        landuse: "landuse.geojson".into(),
        storms: StormSource::File("storms.json".into()),
        curves: CurveFiles {
            commercial: Some("curves/commercial.csv".into()),
            residential: Some("curves/residential.csv".into()),
            unit: CurveUnit::PerBuilding,
        },
        costs: input.costs,
        tile_size: input.tile_size,
        surface: input.surface,
        solver: input.solver,
        gf_threshold: DEFAULT_GF_THRESHOLD,
        registry: default_registry(),
    };
    let path = dir.join("project.json");
    write(&path, serde_json::to_vec_pretty(&project).expect("json"))?;
    Ok(path)
}
