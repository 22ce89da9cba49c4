//! Synthetic test catchment.
//!
//! A square domain sloping south to an open outlet, with a V-shaped valley
//! down the middle. A paved district straddles the valley in the central
//! tile; the rest is highly permeable green space, so almost all runoff
//! comes from the central tile. A street of buildings lines the valley in
//! the tile south of it, where that runoff passes on its way out.

use crate::damage::{DamageCurve, DamageCurves};
use crate::geodata::{BuildingInput, LandClass, LandUseZone, TerrainGrid, UseClass};
use crate::geometry::Polygon;
use crate::hydro::{Boundaries, EdgeKind, SolverConfig, SurfaceClass, SurfaceParams};
use crate::planner::{CatchmentInput, CostModel};
use crate::storm::{make_uniform_hyetograph, Hyetograph};

#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticOptions {
    /// Domain side (m).
    pub extent: f64,
    pub cell_size: f64,
    pub tile_size: f64,
    /// (return period, depth mm) pairs.
    pub storms: Vec<(f64, f64)>,
    pub storm_duration_s: f64,
    pub drain_down_s: f64,
}

impl Default for SyntheticOptions {
    fn default() -> Self {
        Self {
            extent: 800.0,
            cell_size: 2.0,
            tile_size: 300.0,
            storms: vec![(10.0, 18.0), (20.0, 21.0), (50.0, 25.0), (100.0, 28.0)],
            storm_duration_s: 900.0,
            drain_down_s: 600.0,
        }
    }
}

impl SyntheticOptions {
    /// Same layout on an 8 m grid, for quick tests.
    pub fn coarse() -> Self {
        Self {
            cell_size: 8.0,
            ..Self::default()
        }
    }
}

/// Id of the tile holding the paved district.
pub const SOURCE_TILE: u32 = 5;
/// Id of the tile holding the valley street.
pub const RECEPTOR_TILE: u32 = 2;

pub fn valley_elevation(x: f64, y: f64, extent: f64) -> f64 {
    let mid = extent / 2.0;
    let bell = |s: f64| (1.0 - s * s).max(0.0);
    // A sag in the street where water ponds before spilling on.
    let sag = 0.8 * bell((y - 150.0) / 40.0) * bell((x - mid) / 30.0);
    10.0 + 0.01 * y + 0.02 * (x - mid).abs() - sag
}

pub fn residential_curve() -> DamageCurve {
    DamageCurve::new(
        UseClass::Residential,
        vec![(0.0, 0.0), (0.1, 5_000.0), (0.3, 20_000.0), (0.6, 35_000.0), (1.2, 50_000.0)],
    )
    .expect("valid curve")
}

pub fn commercial_curve() -> DamageCurve {
    DamageCurve::new(
        UseClass::Commercial,
        vec![(0.0, 0.0), (0.1, 10_000.0), (0.3, 50_000.0), (1.0, 120_000.0), (2.0, 160_000.0)],
    )
    .expect("valid curve")
}

pub fn surface_params() -> SurfaceParams {
    SurfaceParams {
        // Sandy soil that swallows every storm in the set.
        green: SurfaceClass::new(0.035, 120.0, 200.0),
        ..SurfaceParams::default()
    }
}

pub fn buildings(extent: f64) -> Vec<BuildingInput> {
    let mid = extent / 2.0;
    let mut out = Vec::new();
    let mut n = 0;
    let mut push = |poly: Polygon, class: UseClass, out: &mut Vec<BuildingInput>| {
        n += 1;
        out.push(BuildingInput {
            id: format!("b{n:02}"),
            use_class: class,
            polygons: vec![poly],
        });
    };
    // Valley street, both sides, 4 m apart.
    for (i, y0) in (60..=260).step_by(40).enumerate() {
        let y0 = y0 as f64;
        let (west, east) = if i % 2 == 0 {
            (UseClass::Residential, UseClass::Commercial)
        } else {
            (UseClass::Commercial, UseClass::Residential)
        };
        push(Polygon::rect(mid - 14.0, y0, mid - 4.0, y0 + 10.0), west, &mut out);
        push(Polygon::rect(mid + 4.0, y0, mid + 14.0, y0 + 10.0), east, &mut out);
    }
    // Hillside houses away from any flow path.
    push(Polygon::rect(100.0, 420.0, 112.0, 432.0), UseClass::Residential, &mut out);
    push(Polygon::rect(extent - 112.0, 420.0, extent - 100.0, 432.0), UseClass::Residential, &mut out);
    out
}

pub fn landuse(extent: f64, tile_size: f64) -> Vec<LandUseZone> {
    let mid = extent / 2.0;
    vec![
        LandUseZone {
            class: LandClass::Green,
            polygons: vec![Polygon::rect(0.0, 0.0, extent, extent)],
        },
        // Valley road.
        LandUseZone {
            class: LandClass::Paved,
            polygons: vec![Polygon::rect(mid - 5.0, 0.0, mid + 5.0, extent)],
        },
        // Paved district over the central tile.
        LandUseZone {
            class: LandClass::Paved,
            polygons: vec![Polygon::rect(mid - 60.0, tile_size, mid + 60.0, 2.0 * tile_size)],
        },
    ]
}

pub fn storms(opts: &SyntheticOptions) -> Vec<Hyetograph> {
    opts.storms
        .iter()
        .map(|&(rp, depth)| make_uniform_hyetograph(depth, opts.storm_duration_s, 300.0, rp).expect("valid storm"))
        .collect()
}

pub fn synthetic_catchment(opts: &SyntheticOptions) -> CatchmentInput {
    let n = (opts.extent / opts.cell_size).round() as usize;
    let cs = opts.cell_size;
    let terrain = TerrainGrid::from_fn(0.0, 0.0, cs, n, n, |r, c| {
        let x = (c as f64 + 0.5) * cs;
        let y = (n as f64 - r as f64 - 0.5) * cs;
        valley_elevation(x, y, opts.extent)
    })
    .expect("valid grid");
    let solver = SolverConfig {
        boundaries: Boundaries {
            south: EdgeKind::Open,
            ..Boundaries::CLOSED
        },
        drain_down_s: opts.drain_down_s,
        ..SolverConfig::default()
    };
    CatchmentInput {
        terrain,
        buildings: buildings(opts.extent),
        landuse: landuse(opts.extent, opts.tile_size),
        tile_size: opts.tile_size,
        surface: surface_params(),
        solver,
        storms: storms(opts),
        curves: DamageCurves {
            commercial: Some(commercial_curve()),
            residential: Some(residential_curve()),
        },
        costs: CostModel::default(),
    }
}
