//! Building exposure from buffer depth statistics.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geodata::{polygons_to_geojson, BuildingFootprint, UseClass};
use crate::hydro::MaxDepthRaster;

pub const MEAN_THRESHOLD: f64 = 0.10;
pub const P90_THRESHOLD: f64 = 0.30;

#[derive(Debug, Error, PartialEq)]
pub enum ExposureError {
    #[error("depth statistic must be a non-negative number, got {0}")]
    Domain(f64),
    #[error("building '{id}' references cell {cell} outside the raster")]
    CellOutOfRange { id: String, cell: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ExposureClass {
    Low,
    Medium,
    High,
}

impl ExposureClass {
    pub fn as_str(self) -> &'static str {
        match self {
            Self::Low => "low",
            Self::Medium => "medium",
            Self::High => "high",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExposureFlag {
    /// No active cell around the footprint; low by definition.
    NoBuffer,
    /// mean >= 0.30 with p90 < 0.30, a combination the decision table leaves
    /// blank; classified high.
    TableGap,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExposureRecord {
    pub building_id: String,
    pub use_class: UseClass,
    pub mean_depth: f64,
    pub p90_depth: f64,
    pub exposure_class: ExposureClass,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub flags: Vec<ExposureFlag>,
}

/// Mean and nearest-rank 90th percentile of a set of depths. Empty input
/// gives (0, 0).
pub fn depth_stats(depths: &[f64]) -> Result<(f64, f64), ExposureError> {
    if let Some(bad) = depths.iter().find(|d| !(**d >= 0.0)) {
        return Err(ExposureError::Domain(*bad));
    }
    let k = depths.len();
    if k == 0 {
        return Ok((0.0, 0.0));
    }
    let mean = depths.iter().sum::<f64>() / k as f64;
    // ceil(0.9 k) as a 1-based rank.
    let rank = (9 * k).div_ceil(10);
    let mut work = depths.to_vec();
    let (_, p90, _) = work.select_nth_unstable_by(rank - 1, f64::total_cmp);
    Ok((mean, *p90))
}

/// Statistics over the building's buffer cells.
pub fn buffer_stats(
    max_depth: &MaxDepthRaster,
    building: &BuildingFootprint,
) -> Result<(f64, f64), ExposureError> {
    let depths = building
        .buffer_cells
        .iter()
        .map(|&c| {
            max_depth.depth.get(c).copied().ok_or_else(|| ExposureError::CellOutOfRange {
                id: building.id.clone(),
                cell: c,
            })
        })
        .collect::<Result<Vec<_>, _>>()?;
    depth_stats(&depths)
}

/// Decision table on (mean, p90); both thresholds are inclusive lower bounds.
pub fn classify(mean: f64, p90: f64) -> Result<ExposureClass, ExposureError> {
    for v in [mean, p90] {
        if !(v >= 0.0) {
            return Err(ExposureError::Domain(v));
        }
    }
    let deep = p90 >= P90_THRESHOLD;
    Ok(if mean < MEAN_THRESHOLD {
        if deep {
            ExposureClass::Medium
        } else {
            ExposureClass::Low
        }
    } else if deep || mean >= P90_THRESHOLD {
        ExposureClass::High
    } else {
        ExposureClass::Medium
    })
}

fn is_table_gap(mean: f64, p90: f64) -> bool {
    mean >= P90_THRESHOLD && p90 < P90_THRESHOLD
}

pub fn classify_all(
    max_depth: &MaxDepthRaster,
    buildings: &[BuildingFootprint],
) -> Result<Vec<ExposureRecord>, ExposureError> {
    buildings
        .iter()
        .map(|b| {
            let mut flags = Vec::new();
            let (mean, p90) = buffer_stats(max_depth, b)?;
            let class = if b.buffer_cells.is_empty() {
                flags.push(ExposureFlag::NoBuffer);
                tracing::info!(building = %b.id, "no buffer cells; classified low");
                ExposureClass::Low
            } else {
                if is_table_gap(mean, p90) {
                    flags.push(ExposureFlag::TableGap);
                }
                classify(mean, p90)?
            };
            Ok(ExposureRecord {
                building_id: b.id.clone(),
                use_class: b.use_class,
                mean_depth: mean,
                p90_depth: p90,
                exposure_class: class,
                flags,
            })
        })
        .collect()
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ClassCounts {
    pub low: usize,
    pub medium: usize,
    pub high: usize,
}

impl ClassCounts {
    pub fn of(records: &[ExposureRecord]) -> Self {
        let mut c = Self::default();
        for r in records {
            match r.exposure_class {
                ExposureClass::Low => c.low += 1,
                ExposureClass::Medium => c.medium += 1,
                ExposureClass::High => c.high += 1,
            }
        }
        c
    }

    /// Inundated buildings: medium plus high.
    pub fn inundated(&self) -> usize {
        self.medium + self.high
    }
}

pub fn exposure_csv(records: &[ExposureRecord]) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["id", "use_class", "mean_depth_m", "p90_depth_m", "class", "flags"])
        .expect("in-memory write");
    for r in records {
        let flags: Vec<&str> = r
            .flags
            .iter()
            .map(|f| match f {
                ExposureFlag::NoBuffer => "no_buffer",
                ExposureFlag::TableGap => "table_gap",
            })
            .collect();
        w.write_record([
            r.building_id.as_str(),
            r.use_class.as_str(),
            &r.mean_depth.to_string(),
            &r.p90_depth.to_string(),
            r.exposure_class.as_str(),
            &flags.join(";"),
        ])
        .expect("in-memory write");
    }
    String::from_utf8(w.into_inner().expect("flush")).expect("utf8")
}

/// FeatureCollection of building polygons carrying class and statistics.
pub fn exposure_geojson(records: &[ExposureRecord], buildings: &[BuildingFootprint]) -> serde_json::Value {
    let features: Vec<serde_json::Value> = records
        .iter()
        .zip(buildings)
        .map(|(r, b)| {
            serde_json::json!({
                "type": "Feature",
                "geometry": polygons_to_geojson(&b.polygons),
                "properties": {
                    "id": r.building_id,
                    "use_class": r.use_class,
                    "mean_depth_m": r.mean_depth,
                    "p90_depth_m": r.p90_depth,
                    "class": r.exposure_class,
                    "flags": r.flags,
                }
            })
        })
        .collect();
    serde_json::json!({"type": "FeatureCollection", "features": features})
}
