//! Depth-damage curves and scenario damage totals.

use std::io::Read;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::exposure::{ClassCounts, ExposureClass, ExposureRecord};
use crate::geodata::UseClass;

#[derive(Debug, Error, PartialEq)]
pub enum DamageError {
    #[error("depth must be non-negative, got {0}")]
    Domain(f64),
    #[error("invalid damage curve: {0}")]
    Curve(String),
    #[error("no damage curve for use class {0}")]
    MissingCurve(UseClass),
    #[error("curve file: {0}")]
    Csv(String),
}

/// How a curve value turns into a building's damage.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CurveUnit {
    /// Curve gives £ per building.
    #[default]
    PerBuilding,
    /// Curve gives £/m², multiplied by footprint area.
    PerSquareMetre,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DamageCurve {
    pub use_class: UseClass,
    /// (depth m, damage £), depths strictly increasing from 0.
    pub points: Vec<(f64, f64)>,
    #[serde(default)]
    pub unit: CurveUnit,
}

impl DamageCurve {
    pub fn new(use_class: UseClass, points: Vec<(f64, f64)>) -> Result<Self, DamageError> {
        let curve = Self {
            use_class,
            points,
            unit: CurveUnit::PerBuilding,
        };
        curve.validate()?;
        Ok(curve)
    }

    pub fn with_unit(mut self, unit: CurveUnit) -> Self {
        self.unit = unit;
        self
    }

    pub fn validate(&self) -> Result<(), DamageError> {
        let p = &self.points;
        let Some(&(d0, v0)) = p.first() else {
            return Err(DamageError::Curve("no points".into()));
        };
        if d0 != 0.0 {
            return Err(DamageError::Curve(format!("first depth must be 0, got {d0}")));
        }
        if !(v0 >= 0.0) {
            return Err(DamageError::Curve(format!("damage at depth 0 must be >= 0, got {v0}")));
        }
        for w in p.windows(2) {
            let ((da, va), (db, vb)) = (w[0], w[1]);
            if !(db > da) || !db.is_finite() {
                return Err(DamageError::Curve(format!("depths not strictly increasing at {db}")));
            }
            if !(vb >= va) || !vb.is_finite() {
                return Err(DamageError::Curve(format!("damage decreases at depth {db}")));
            }
        }
        Ok(())
    }

    /// CSV with header `depth_m,damage_gbp`.
    pub fn from_csv<R: Read>(reader: R, use_class: UseClass) -> Result<Self, DamageError> {
        #[derive(Deserialize)]
        struct Row {
            depth_m: f64,
            damage_gbp: f64,
        }
        let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
        let points = rdr
            .deserialize::<Row>()
            .map(|r| r.map(|r| (r.depth_m, r.damage_gbp)))
            .collect::<Result<Vec<_>, _>>()
            .map_err(|e| DamageError::Csv(e.to_string()))?;
        Self::new(use_class, points)
    }

    /// Piecewise-linear; clamps beyond the last point.
    pub fn interp(&self, depth: f64) -> Result<f64, DamageError> {
        interp_damage(self, depth)
    }
}

pub fn interp_damage(curve: &DamageCurve, depth: f64) -> Result<f64, DamageError> {
    if !(depth >= 0.0) {
        return Err(DamageError::Domain(depth));
    }
    let p = &curve.points;
    let k = p.partition_point(|(d, _)| *d <= depth);
    if k == p.len() {
        return Ok(p[k - 1].1);
    }
    // p[k-1].0 <= depth < p[k].0
    let (d0, v0) = p[k - 1];
    let (d1, v1) = p[k];
    let w = (depth - d0) / (d1 - d0);
    Ok(v0 + w * (v1 - v0))
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct DamageCurves {
    pub commercial: Option<DamageCurve>,
    pub residential: Option<DamageCurve>,
}

impl DamageCurves {
    pub fn get(&self, class: UseClass) -> Result<&DamageCurve, DamageError> {
        match class {
            UseClass::Commercial => self.commercial.as_ref(),
            UseClass::Residential => self.residential.as_ref(),
        }
        .ok_or(DamageError::MissingCurve(class))
    }
}

/// Low-class buildings cost nothing; otherwise the curve at the p90 depth.
/// `footprint_area` is used only by per-m² curves.
pub fn building_damage(
    record: &ExposureRecord,
    curves: &DamageCurves,
    footprint_area: f64,
) -> Result<f64, DamageError> {
    let curve = curves.get(record.use_class)?;
    if record.exposure_class == ExposureClass::Low {
        return Ok(0.0);
    }
    let v = curve.interp(record.p90_depth)?;
    Ok(match curve.unit {
        CurveUnit::PerBuilding => v,
        CurveUnit::PerSquareMetre => v * footprint_area,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BuildingDamage {
    pub building_id: String,
    pub use_class: UseClass,
    pub exposure_class: ExposureClass,
    pub p90_depth: f64,
    pub damage: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioDamages {
    pub scenario_id: String,
    pub return_period: f64,
    /// Sorted by building id.
    pub buildings: Vec<BuildingDamage>,
    pub commercial: f64,
    pub residential: f64,
    pub total: f64,
    pub counts: ClassCounts,
}

impl ScenarioDamages {
    /// Totals only, e.g. for published figures.
    pub fn from_totals(scenario_id: &str, return_period: f64, commercial: f64, residential: f64, total: f64) -> Self {
        Self {
            scenario_id: scenario_id.to_string(),
            return_period,
            buildings: Vec::new(),
            commercial,
            residential,
            total,
            counts: ClassCounts::default(),
        }
    }
}

/// Sum per use class in building-id order, so the result does not depend
/// on input order.
pub fn aggregate(scenario_id: &str, return_period: f64, mut buildings: Vec<BuildingDamage>) -> ScenarioDamages {
    buildings.sort_by(|a, b| a.building_id.cmp(&b.building_id));
    let (mut commercial, mut residential) = (0.0, 0.0);
    let mut counts = ClassCounts::default();
    for b in &buildings {
        match b.use_class {
            UseClass::Commercial => commercial += b.damage,
            UseClass::Residential => residential += b.damage,
        }
        match b.exposure_class {
            ExposureClass::Low => counts.low += 1,
            ExposureClass::Medium => counts.medium += 1,
            ExposureClass::High => counts.high += 1,
        }
    }
    ScenarioDamages {
        scenario_id: scenario_id.to_string(),
        return_period,
        buildings,
        commercial,
        residential,
        total: commercial + residential,
        counts,
    }
}

/// Exposure records (aligned with `areas`) to scenario damages.
pub fn assess(
    scenario_id: &str,
    return_period: f64,
    records: &[ExposureRecord],
    areas: &[f64],
    curves: &DamageCurves,
) -> Result<ScenarioDamages, DamageError> {
    let buildings = records
        .iter()
        .zip(areas)
        .map(|(r, &a)| {
            Ok(BuildingDamage {
                building_id: r.building_id.clone(),
                use_class: r.use_class,
                exposure_class: r.exposure_class,
                p90_depth: r.p90_depth,
                damage: building_damage(r, curves, a)?,
            })
        })
        .collect::<Result<Vec<_>, DamageError>>()?;
    Ok(aggregate(scenario_id, return_period, buildings))
}

fn csv_string(header: &[&str], rows: Vec<Vec<String>>) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(header).expect("in-memory write");
    for r in rows {
        w.write_record(&r).expect("in-memory write");
    }
    String::from_utf8(w.into_inner().expect("flush")).expect("utf8")
}

/// Inundated buildings per scenario: scenario, medium, high, total.
pub fn counts_table_csv(rows: &[&ScenarioDamages]) -> String {
    csv_string(
        &["scenario", "medium", "high", "total"],
        rows.iter()
            .map(|d| {
                vec![
                    d.scenario_id.clone(),
                    d.counts.medium.to_string(),
                    d.counts.high.to_string(),
                    d.counts.inundated().to_string(),
                ]
            })
            .collect(),
    )
}

/// Damage totals per scenario: scenario, commercial, residential, total (£).
pub fn totals_table_csv(rows: &[&ScenarioDamages]) -> String {
    csv_string(
        &["scenario", "commercial_gbp", "residential_gbp", "total_gbp"],
        rows.iter()
            .map(|d| {
                vec![
                    d.scenario_id.clone(),
                    d.commercial.to_string(),
                    d.residential.to_string(),
                    d.total.to_string(),
                ]
            })
            .collect(),
    )
}

/// Per-building damages of one scenario.
pub fn buildings_csv(d: &ScenarioDamages) -> String {
    csv_string(
        &["id", "use_class", "class", "p90_depth_m", "damage_gbp"],
        d.buildings
            .iter()
            .map(|b| {
                vec![
                    b.building_id.clone(),
                    b.use_class.as_str().to_string(),
                    b.exposure_class.as_str().to_string(),
                    b.p90_depth.to_string(),
                    b.damage.to_string(),
                ]
            })
            .collect(),
    )
}
