//! Flood-risk planning engine: terrain ingestion, storm forcing, a 2D
//! shallow-water solver, building exposure, damages and tile ranking.

pub mod geodata;
pub mod geometry;
pub mod hydro;
pub mod storm;
pub mod exposure;
pub mod damage;
pub mod planner;
pub mod fixtures;
