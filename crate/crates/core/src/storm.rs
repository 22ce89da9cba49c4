//! Design-storm hyetographs, per-tile rainfall capture and roof-rain
//! redistribution.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geodata::{BuildingFootprint, TerrainGrid, TileId, TilePartition};

/// mm/h to m/s.
pub const MM_PER_H_TO_M_PER_S: f64 = 1.0 / 3_600_000.0;

#[derive(Debug, Error, PartialEq)]
pub enum StormError {
    #[error("configuration error: {0}")]
    Config(String),
    #[error("capture fraction {0} outside [0, 1]")]
    Fraction(f64),
    #[error("tile {0} is captured more than once")]
    DuplicateCapture(TileId),
    #[error("tile {0} does not exist")]
    UnknownTile(TileId),
    #[error("domain has no active cells")]
    NoActiveCells,
}

/// Rainfall intensity as a step function of time.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Hyetograph {
    pub return_period: f64,
    pub dt: f64,
    pub intensity: Vec<f64>,
}

impl Hyetograph {
    pub fn stepped(return_period: f64, dt: f64, intensity: Vec<f64>) -> Result<Self, StormError> {
        if !(dt > 0.0) {
            return Err(StormError::Config(format!("dt must be positive, got {dt}")));
        }
        if intensity.is_empty() {
            return Err(StormError::Config("hyetograph has no steps".into()));
        }
        if let Some(bad) = intensity.iter().find(|i| !(**i >= 0.0) || !i.is_finite()) {
            return Err(StormError::Config(format!("negative or non-finite intensity {bad}")));
        }
        Ok(Self {
            return_period,
            dt,
            intensity,
        })
    }

    pub fn duration(&self) -> f64 {
        self.dt * self.intensity.len() as f64
    }

    /// Total depth in mm.
    pub fn total_depth(&self) -> f64 {
        self.intensity.iter().map(|i| i * self.dt / 3600.0).sum()
    }

    /// Intensity in mm/h at time `t` (seconds); zero outside the storm.
    pub fn intensity_at(&self, t: f64) -> f64 {
        if t < 0.0 || t >= self.duration() {
            return 0.0;
        }
        let k = ((t / self.dt).floor() as usize).min(self.intensity.len() - 1);
        self.intensity[k]
    }

    /// The first step boundary strictly after `t`, if any.
    pub fn next_break(&self, t: f64) -> Option<f64> {
        if t >= self.duration() {
            return None;
        }
        let k = if t < 0.0 { 0 } else { (t / self.dt).floor() as usize + 1 };
        let mut b = k as f64 * self.dt;
        if b <= t {
            b = (k + 1) as f64 * self.dt;
        }
        Some(b.min(self.duration()))
    }
}

pub fn make_uniform_hyetograph(
    depth_mm: f64,
    duration: f64,
    dt: f64,
    return_period: f64,
) -> Result<Hyetograph, StormError> {
    if !(depth_mm >= 0.0) {
        return Err(StormError::Config(format!("depth must be non-negative, got {depth_mm}")));
    }
    if !(duration > 0.0) || !(dt > 0.0) {
        return Err(StormError::Config("duration and dt must be positive".into()));
    }
    let steps = duration / dt;
    let n = steps.round();
    if (steps - n).abs() > 1e-9 * steps.max(1.0) || n < 1.0 {
        return Err(StormError::Config(format!(
            "dt {dt} s does not divide duration {duration} s"
        )));
    }
    let intensity = depth_mm / (duration / 3600.0);
    Hyetograph::stepped(return_period, dt, vec![intensity; n as usize])
}

/// One entry of the storm config file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StormConfig {
    pub return_period_years: f64,
    pub duration_s: f64,
    pub dt_s: f64,
    pub profile: StormProfile,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub depth_mm: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub intensities_mm_per_h: Option<Vec<f64>>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum StormProfile {
    Uniform,
    Stepped,
}

impl StormConfig {
    pub fn to_hyetograph(&self) -> Result<Hyetograph, StormError> {
        match self.profile {
            StormProfile::Uniform => {
                let depth = self
                    .depth_mm
                    .ok_or_else(|| StormError::Config("uniform storm needs depth_mm".into()))?;
                make_uniform_hyetograph(depth, self.duration_s, self.dt_s, self.return_period_years)
            }
            StormProfile::Stepped => {
                let series = self.intensities_mm_per_h.clone().ok_or_else(|| {
                    StormError::Config("stepped storm needs intensities_mm_per_h".into())
                })?;
                let h = Hyetograph::stepped(self.return_period_years, self.dt_s, series)?;
                if (h.duration() - self.duration_s).abs() > 1e-9 * self.duration_s.max(1.0) {
                    return Err(StormError::Config(format!(
                        "{} steps of {} s do not span duration {} s",
                        h.intensity.len(),
                        self.dt_s,
                        self.duration_s
                    )));
                }
                Ok(h)
            }
        }
    }
}

pub fn parse_storm_config(text: &str) -> Result<Vec<StormConfig>, StormError> {
    serde_json::from_str(text).map_err(|e| StormError::Config(e.to_string()))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CaptureSpec {
    pub tile_id: TileId,
    pub fraction: f64,
}

impl CaptureSpec {
    pub fn new(tile_id: TileId, fraction: f64) -> Result<Self, StormError> {
        if !(0.0..=1.0).contains(&fraction) {
            return Err(StormError::Fraction(fraction));
        }
        Ok(Self { tile_id, fraction })
    }
}

/// Building cell to the surface cell that receives its roof rain.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct RainRedirection {
    /// Sorted building cells.
    pub sources: Vec<usize>,
    pub targets: Vec<usize>,
}

impl RainRedirection {
    pub fn pairs(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.sources.iter().copied().zip(self.targets.iter().copied())
    }

    pub fn target_of(&self, cell: usize) -> Option<usize> {
        self.sources.binary_search(&cell).ok().map(|i| self.targets[i])
    }
}

/// Map each building cell to the nearest active cell by center distance,
/// ties to the lowest row-major index.
pub fn build_redirection(
    buildings: &[BuildingFootprint],
    grid: &TerrainGrid,
) -> Result<RainRedirection, StormError> {
    if !grid.active.iter().any(|a| *a) {
        return Err(StormError::NoActiveCells);
    }
    let mut sources: Vec<usize> = buildings
        .iter()
        .flat_map(|b| b.footprint_cells.iter().copied())
        .collect();
    sources.sort_unstable();
    sources.dedup();
    let targets = sources.iter().map(|&s| nearest_active(grid, s)).collect();
    Ok(RainRedirection { sources, targets })
}

fn nearest_active(grid: &TerrainGrid, cell: usize) -> usize {
    let (r0, c0) = grid.row_col(cell);
    let (r0, c0) = (r0 as i64, c0 as i64);
    let (nr, nc) = (grid.n_rows as i64, grid.n_cols as i64);
    let max_radius = nr.max(nc);
    let mut best: Option<(i64, usize)> = None;
    for k in 1..=max_radius {
        if let Some((d2, _)) = best {
            // Every cell on ring k is at least k away.
            if k * k > d2 {
                break;
            }
        }
        for dr in -k..=k {
            let r = r0 + dr;
            if r < 0 || r >= nr {
                continue;
            }
            let step = if dr.abs() == k { 1 } else { 2 * k };
            let mut dc = -k;
            while dc <= k {
                let c = c0 + dc;
                if c >= 0 && c < nc {
                    let idx = (r * nc + c) as usize;
                    if grid.active[idx] {
                        let d2 = dr * dr + dc * dc;
                        let better = match best {
                            None => true,
                            Some((bd, bi)) => d2 < bd || (d2 == bd && idx < bi),
                        };
                        if better {
                            best = Some((d2, idx));
                        }
                    }
                }
                dc += step;
            }
        }
    }
    best.map(|(_, i)| i).expect("grid has an active cell")
}

/// Static per-cell multiplier on storm intensity combining own rain, roof
/// rain received, and capture.
#[derive(Debug, Clone, PartialEq)]
pub struct RainField {
    pub weight: Vec<f64>,
    /// Sum of `weight` in cell order.
    pub total_weight: f64,
}

impl RainField {
    pub fn new(
        grid: &TerrainGrid,
        partition: &TilePartition,
        redirection: &RainRedirection,
        captures: &[CaptureSpec],
    ) -> Result<Self, StormError> {
        let mut kept = vec![1.0; partition.tiles.len() + 1];
        let mut seen = vec![false; partition.tiles.len() + 1];
        for cap in captures {
            if !(0.0..=1.0).contains(&cap.fraction) {
                return Err(StormError::Fraction(cap.fraction));
            }
            let slot = partition
                .position(cap.tile_id)
                .ok_or(StormError::UnknownTile(cap.tile_id))?
                + 1;
            if seen[slot] {
                return Err(StormError::DuplicateCapture(cap.tile_id));
            }
            seen[slot] = true;
            kept[slot] = 1.0 - cap.fraction;
        }
        let factor = |cell: usize| kept[partition.cell_to_tile[cell] as usize];
        let mut weight: Vec<f64> = (0..grid.n_cells())
            .map(|c| if grid.active[c] { factor(c) } else { 0.0 })
            .collect();
        for (src, dst) in redirection.pairs() {
            weight[dst] += factor(src);
        }
        Ok(Self::from_weights(weight))
    }

    pub fn from_weights(weight: Vec<f64>) -> Self {
        let total_weight = weight.iter().sum();
        Self {
            weight,
            total_weight,
        }
    }

    /// Uniform rain on every active cell, no redirection.
    pub fn uniform(grid: &TerrainGrid) -> Self {
        Self::from_weights(grid.active.iter().map(|&a| if a { 1.0 } else { 0.0 }).collect())
    }
}

/// Per-cell rain source in m/s at time `t`.
pub fn rain_rate(
    hyetograph: &Hyetograph,
    captures: &[CaptureSpec],
    redirection: &RainRedirection,
    partition: &TilePartition,
    grid: &TerrainGrid,
    t: f64,
) -> Result<Vec<f64>, StormError> {
    let field = RainField::new(grid, partition, redirection, captures)?;
    let i = hyetograph.intensity_at(t) * MM_PER_H_TO_M_PER_S;
    Ok(field.weight.iter().map(|w| w * i).collect())
}
