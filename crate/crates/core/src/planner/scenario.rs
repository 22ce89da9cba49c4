use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::catchment::feed_json;
use super::{Catchment, PlanError, ScenarioKey, ScenarioKind};
use crate::damage::{assess, ScenarioDamages};
use crate::exposure::{classify_all, ExposureRecord};
use crate::hydro::{
    apply_interventions, run_with_field, AppliedIntervention, FlowState, InterventionKind, InterventionSpec,
    MaxDepthRaster, StormScenario, VolumeLedger,
};
use crate::storm::{CaptureSpec, RainField};

/// Everything one solver run produces, down to damages.
#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioResult {
    pub meta: ResultMeta,
    pub max_depth: MaxDepthRaster,
}

/// The JSON-serializable part of a result.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResultMeta {
    pub key: ScenarioKey,
    pub content_hash: String,
    /// Simulated end time (s).
    pub end_time: f64,
    pub ledger: VolumeLedger,
    pub exposure: Vec<ExposureRecord>,
    pub damages: ScenarioDamages,
    #[serde(default)]
    pub applied: Vec<AppliedIntervention>,
}

impl ScenarioResult {
    pub fn key(&self) -> &ScenarioKey {
        &self.meta.key
    }

    pub fn damages(&self) -> &ScenarioDamages {
        &self.meta.damages
    }

    pub fn ledger(&self) -> &VolumeLedger {
        &self.meta.ledger
    }
}

fn check_specs(key: &ScenarioKey, specs: &[InterventionSpec]) -> Result<(), PlanError> {
    match key.kind {
        ScenarioKind::Intervention { .. } => {
            for s in specs {
                s.validate().map_err(|e| PlanError::Invalid(e.to_string()))?;
            }
            Ok(())
        }
        _ if specs.is_empty() => Ok(()),
        _ => Err(PlanError::Usage(format!("scenario {key} takes no interventions"))),
    }
}

/// Hash of the catchment, the storm, the scenario and its interventions.
pub fn content_hash(c: &Catchment, key: &ScenarioKey, specs: &[InterventionSpec]) -> Result<String, PlanError> {
    let storm = c.storm(key.return_period)?;
    let mut h = Sha256::new();
    h.update(c.fingerprint().as_bytes());
    feed_json(&mut h, &key.to_string());
    feed_json(&mut h, storm);
    feed_json(&mut h, &specs);
    Ok(hex::encode(h.finalize()))
}

/// Run one scenario through hydro, exposure and damage.
pub fn evaluate_scenario(
    c: &Catchment,
    key: &ScenarioKey,
    specs: &[InterventionSpec],
    progress: Option<&(dyn Fn(f64) + Sync)>,
) -> Result<ScenarioResult, PlanError> {
    check_specs(key, specs)?;
    let hyetograph = c.storm(key.return_period)?.clone();
    let mut captures = Vec::new();
    match &key.kind {
        ScenarioKind::Baseline => {}
        ScenarioKind::Capture { tile_id, fraction } => {
            captures.push(CaptureSpec::new(*tile_id, *fraction).map_err(|e| PlanError::Usage(e.to_string()))?)
        }
        ScenarioKind::Intervention { .. } => {
            for s in specs {
                if let InterventionKind::RainCapture { tile_id, fraction } = s.kind {
                    captures.push(CaptureSpec::new(tile_id, fraction).map_err(|e| PlanError::Invalid(e.to_string()))?);
                }
            }
        }
    }
    let content_hash = content_hash(c, key, specs)?;

    let (grid, props, applied) = if specs.is_empty() {
        (None, None, Vec::new())
    } else {
        let (g, p, a) =
            apply_interventions(&c.grid, &c.props, specs, &c.surface).map_err(|e| PlanError::Invalid(e.to_string()))?;
        (Some(g), Some(p), a)
    };
    let grid = grid.as_ref().unwrap_or(&c.grid);
    let props = props.as_ref().unwrap_or(&c.props);

    let field = RainField::new(grid, &c.partition, &c.redirection, &captures).map_err(|e| PlanError::Usage(e.to_string()))?;
    let scenario = StormScenario {
        id: key.to_string(),
        hyetograph,
        captures,
        sim_end: None,
    };
    let out = run_with_field(&scenario, &field, grid, props, &c.solver, FlowState::dry(grid.n_cells()), progress)?;
    let exposure = classify_all(&out.max_depth, &c.buildings)?;
    let damages = assess(&scenario.id, key.return_period, &exposure, &c.footprint_areas(), &c.curves)?;
    Ok(ScenarioResult {
        meta: ResultMeta {
            key: key.clone(),
            content_hash,
            end_time: out.max_depth.end_time,
            ledger: out.ledger,
            exposure,
            damages,
            applied,
        },
        max_depth: out.max_depth,
    })
}
