use bluegreen_core::planner::PlanError;
use serde_json::json;
use thiserror::Error;

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Error)]
pub enum ServiceError {
    #[error("project: {0}")]
    Project(String),
    #[error("missing file: {0}")]
    MissingFile(String),
    #[error("usage: {0}")]
    Usage(String),
    #[error("not found: {0}")]
    NotFound(String),
    #[error("conflict: {0}")]
    Conflict(String),
    #[error("invalid: {0}")]
    Invalid(String),
    #[error("busy: {0}")]
    Busy(String),
    #[error("io: {0}")]
    Io(String),
    #[error(transparent)]
    Plan(#[from] PlanError),
}

impl ServiceError {
    pub fn kind(&self) -> &'static str {
        match self {
            Self::Project(_) => "project",
            Self::MissingFile(_) => "missing_file",
            Self::Usage(_) => "usage",
            Self::NotFound(_) => "not_found",
            Self::Conflict(_) => "conflict",
            Self::Invalid(_) => "invalid",
            Self::Busy(_) => "busy",
            Self::Io(_) => "io",
            Self::Plan(e) => match e {
                PlanError::Usage(_) => "usage",
                PlanError::Config(_) => "config",
                PlanError::Invalid(_) => "invalid",
                PlanError::UnknownReturnPeriod(_) | PlanError::UnknownTile(_) | PlanError::NotFound(_) => "not_found",
                PlanError::Io(_) => "io",
                PlanError::Hydro(_) => "hydro",
                PlanError::Exposure(_) => "exposure",
                PlanError::Damage(_) => "damage",
            },
        }
    }

    /// HTTP status code for API responses.
    pub fn status(&self) -> u16 {
        match self.kind() {
            "not_found" => 404,
            "conflict" => 409,
            "invalid" | "usage" => 422,
            "busy" => 503,
            _ => 500,
        }
    }

    /// Process exit code for the CLI.
    pub fn exit_code(&self) -> i32 {
        match self.kind() {
            "usage" => 2,
            "project" | "missing_file" | "config" => 3,
            "not_found" => 4,
            "invalid" => 5,
            _ => 1,
        }
    }

    pub fn to_json(&self) -> serde_json::Value {
        json!({
            "schema_version": SCHEMA_VERSION,
            "error": { "kind": self.kind(), "message": self.to_string() },
        })
    }
}

pub fn io_err(what: impl std::fmt::Display, e: impl std::fmt::Display) -> ServiceError {
    ServiceError::Io(format!("{what}: {e}"))
}
