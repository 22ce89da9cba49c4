//! Scenario matrix, benefits, tile ranking and intervention costing.

mod catchment;
mod cost;
mod ead;
mod key;
mod matrix;
mod ranking;
mod registry;
mod scenario;

use thiserror::Error;

pub use catchment::{Catchment, CatchmentInput};
pub use cost::{cost_intervention, CostModel, CostReport};
pub use ead::{expected_annual_damage, DamagePoint};
pub use key::{valid_set_id, ScenarioKey, ScenarioKind};
pub use matrix::{
    evaluate_intervention, intervention_table_csv, ranking_from_registry, ranking_from_results, run_keys,
    run_matrix, worker_pool, InterventionEvaluation, InterventionRow, MatrixOutcome, MatrixRequest,
};
pub use ranking::{
    benefit, rank_tiles, ranking_csv, score, suggest_intervention, RankRow, Suggestion, TileBenefit,
    TileRanking, DEFAULT_GF_THRESHOLD,
};
pub use registry::{RunRegistry, INDEX_SCHEMA_VERSION};
pub use scenario::{content_hash, evaluate_scenario, ResultMeta, ScenarioResult};

use crate::damage::DamageError;
use crate::exposure::ExposureError;
use crate::geodata::TileId;
use crate::hydro::HydroError;

#[derive(Debug, Error)]
pub enum PlanError {
    #[error("usage: {0}")]
    Usage(String),
    #[error("configuration error: {0}")]
    Config(String),
    /// Rejected intervention or scenario input.
    #[error("invalid input: {0}")]
    Invalid(String),
    #[error("no storm configured for return period {0}")]
    UnknownReturnPeriod(f64),
    #[error("tile {0} does not exist")]
    UnknownTile(TileId),
    #[error("not found: {0}")]
    NotFound(String),
    #[error("io: {0}")]
    Io(String),
    #[error(transparent)]
    Hydro(#[from] HydroError),
    #[error(transparent)]
    Exposure(#[from] ExposureError),
    #[error(transparent)]
    Damage(#[from] DamageError),
}
