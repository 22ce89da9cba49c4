//! Shallow-water flood solver producing max-depth rasters per scenario.

pub mod flux;
mod interventions;
mod raster;
mod run;
mod solver;
mod surface;

use thiserror::Error;

pub use interventions::{apply_interventions, AppliedIntervention, InterventionKind, InterventionSpec};
pub use raster::{
    decode_binary, encode_binary, read_depth_binary, write_depth_ascii, write_depth_binary,
    BINARY_MAGIC, BINARY_VERSION,
};
pub use run::{run_scenario, run_with_field, MaxDepthRaster, RunOutput, StormScenario, VolumeLedger};
pub use solver::{cfl_dt, step, Boundaries, EdgeKind, FlowState, Rain, Solver, SolverConfig, StepVolumes};
pub use surface::{SurfaceClass, SurfaceParams, SurfaceProperties};

use crate::storm::StormError;

#[derive(Debug, Error)]
pub enum HydroError {
    #[error("configuration error: {0}")]
    Config(String),
    #[error("solver diverged at cell {cell}, t = {t} s")]
    Divergence { cell: usize, t: f64 },
    #[error("volume ledger does not close: relative error {relative_error:e}")]
    Conservation {
        relative_error: f64,
        ledger: Box<VolumeLedger>,
    },
    #[error("geometry error: {0}")]
    Geometry(String),
    #[error(transparent)]
    Storm(#[from] StormError),
}
