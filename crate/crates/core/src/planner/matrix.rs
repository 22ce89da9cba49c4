use std::collections::BTreeMap;
use std::sync::Arc;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::cost::{cost_intervention, CostReport};
use super::ranking::{benefit, rank_tiles, TileBenefit, TileRanking};
use super::{Catchment, PlanError, RunRegistry, ScenarioKey, ScenarioKind, ScenarioResult};
use crate::geodata::TileId;
use crate::hydro::InterventionSpec;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MatrixRequest {
    pub return_periods: Vec<f64>,
    pub tiles: Vec<TileId>,
    pub capture_fraction: f64,
}

impl MatrixRequest {
    /// Every tile at every configured storm, full capture.
    pub fn full(c: &Catchment) -> Self {
        Self {
            return_periods: c.return_periods(),
            tiles: c.partition.ids().collect(),
            capture_fraction: 1.0,
        }
    }

    /// Baselines first, then captures, in key order.
    pub fn keys(&self) -> Vec<ScenarioKey> {
        let mut keys: Vec<ScenarioKey> = self.return_periods.iter().map(|&rp| ScenarioKey::baseline(rp)).collect();
        for &rp in &self.return_periods {
            for &t in &self.tiles {
                keys.push(ScenarioKey::capture(t, self.capture_fraction, rp));
            }
        }
        keys
    }
}

#[derive(Debug, Clone, Default)]
pub struct MatrixOutcome {
    pub results: BTreeMap<ScenarioKey, Arc<ScenarioResult>>,
    pub failures: BTreeMap<ScenarioKey, String>,
}

pub fn worker_pool(workers: usize) -> Result<rayon::ThreadPool, PlanError> {
    rayon::ThreadPoolBuilder::new()
        .num_threads(workers.max(1))
        .build()
        .map_err(|e| PlanError::Config(format!("worker pool: {e}")))
}

/// Run the given keys on a bounded pool. Failures are recorded per key and
/// do not stop the others.
pub fn run_keys(
    c: &Catchment,
    registry: &RunRegistry,
    keys: &[ScenarioKey],
    workers: usize,
) -> Result<MatrixOutcome, PlanError> {
    for k in keys {
        if matches!(k.kind, ScenarioKind::Intervention { .. }) {
            return Err(PlanError::Usage(format!("{k}: intervention runs need their specs")));
        }
        c.storm(k.return_period)?;
    }
    let pool = worker_pool(workers)?;
    let done: Vec<(ScenarioKey, Result<Arc<ScenarioResult>, PlanError>)> = pool.install(|| {
        keys.par_iter()
            .map(|k| (k.clone(), registry.get_or_run(c, k, &[], None)))
            .collect()
    });
    let mut out = MatrixOutcome::default();
    for (k, r) in done {
        match r {
            Ok(r) => {
                out.results.insert(k, r);
            }
            Err(e) => {
                tracing::error!(scenario = %k, error = %e, "scenario failed");
                out.failures.insert(k, e.to_string());
            }
        }
    }
    Ok(out)
}

/// Baselines plus one capture run per tile and return period.
pub fn run_matrix(
    c: &Catchment,
    registry: &RunRegistry,
    req: &MatrixRequest,
    workers: usize,
) -> Result<MatrixOutcome, PlanError> {
    if !(0.0..=1.0).contains(&req.capture_fraction) {
        return Err(PlanError::Usage(format!("capture fraction {} outside [0, 1]", req.capture_fraction)));
    }
    for &t in &req.tiles {
        if c.partition.tile(t).is_none() {
            return Err(PlanError::UnknownTile(t));
        }
    }
    run_keys(c, registry, &req.keys(), workers)
}

/// Rank tiles at one return period from completed baseline and capture runs.
pub fn ranking_from_results(
    c: &Catchment,
    results: &BTreeMap<ScenarioKey, Arc<ScenarioResult>>,
    return_period: f64,
    capture_fraction: f64,
    gf_threshold: f64,
) -> Result<TileRanking, PlanError> {
    let base = results
        .get(&ScenarioKey::baseline(return_period))
        .ok_or_else(|| PlanError::NotFound(ScenarioKey::baseline(return_period).to_string()))?;
    let mut input = Vec::new();
    for tile in &c.partition.tiles {
        let key = ScenarioKey::capture(tile.id, capture_fraction, return_period);
        let Some(var) = results.get(&key) else { continue };
        let d = var.damages();
        let mut row = TileBenefit::new(tile.id, benefit(base.damages(), d)?, c.partition.green_fraction_of(tile.id).unwrap_or(0.0));
        row.commercial = Some(d.commercial);
        row.residential = Some(d.residential);
        row.total = Some(d.total);
        input.push(row);
    }
    if input.is_empty() {
        return Err(PlanError::NotFound(format!("no capture runs at {return_period} y")));
    }
    Ok(rank_tiles(return_period, capture_fraction, &input, gf_threshold))
}

/// Rank from whatever the registry holds.
pub fn ranking_from_registry(
    c: &Catchment,
    registry: &RunRegistry,
    return_period: f64,
    capture_fraction: f64,
    gf_threshold: f64,
) -> Result<TileRanking, PlanError> {
    let mut results = BTreeMap::new();
    let mut keys = vec![ScenarioKey::baseline(return_period)];
    keys.extend(c.partition.ids().map(|t| ScenarioKey::capture(t, capture_fraction, return_period)));
    for k in keys {
        if let Some(r) = registry.lookup(&k)? {
            results.insert(k, r);
        }
    }
    ranking_from_results(c, &results, return_period, capture_fraction, gf_threshold)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InterventionRow {
    pub key: ScenarioKey,
    pub return_period: f64,
    pub commercial: f64,
    pub residential: f64,
    pub total: f64,
    pub baseline_total: f64,
    pub benefit: f64,
    pub installation: f64,
    pub benefit_minus_installation: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InterventionEvaluation {
    pub set_id: String,
    pub costs: Vec<CostReport>,
    pub area_m2: f64,
    pub installation: f64,
    pub annual_operation: f64,
    pub rows: Vec<InterventionRow>,
}

/// Cost an intervention set and compare its runs against the baselines.
pub fn evaluate_intervention(
    c: &Catchment,
    registry: &RunRegistry,
    set_id: &str,
    specs: &[InterventionSpec],
    return_periods: &[f64],
    workers: usize,
) -> Result<InterventionEvaluation, PlanError> {
    if !super::key::valid_set_id(set_id) {
        return Err(PlanError::Usage(format!("invalid intervention set id '{set_id}'")));
    }
    let costs = specs
        .iter()
        .map(|s| cost_intervention(s, &c.costs))
        .collect::<Result<Vec<_>, _>>()?;
    let installation: f64 = costs.iter().map(|r| r.installation).sum();
    let annual_operation = costs.iter().map(|r| r.annual_operation).sum();
    let area_m2 = costs.iter().map(|r| r.area_m2).sum();
    for &rp in return_periods {
        c.storm(rp)?;
    }

    let pool = worker_pool(workers)?;
    let pairs = pool.install(|| {
        return_periods
            .par_iter()
            .map(|&rp| {
                let base = registry.get_or_run(c, &ScenarioKey::baseline(rp), &[], None)?;
                let key = ScenarioKey::intervention(set_id, rp);
                let var = registry.get_or_run(c, &key, specs, None)?;
                Ok((key, base, var))
            })
            .collect::<Result<Vec<_>, PlanError>>()
    })?;
    let rows = pairs
        .into_iter()
        .map(|(key, base, var)| {
            let d = var.damages();
            let b = benefit(base.damages(), d)?;
            Ok(InterventionRow {
                return_period: key.return_period,
                key,
                commercial: d.commercial,
                residential: d.residential,
                total: d.total,
                baseline_total: base.damages().total,
                benefit: b,
                installation,
                benefit_minus_installation: b - installation,
            })
        })
        .collect::<Result<Vec<_>, PlanError>>()?;
    Ok(InterventionEvaluation {
        set_id: set_id.to_string(),
        costs,
        area_m2,
        installation,
        annual_operation,
        rows,
    })
}

/// Intervention damages, benefit, area and costs per scenario.
pub fn intervention_table_csv(evals: &[&InterventionEvaluation]) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record([
        "scenario",
        "commercial_gbp",
        "residential_gbp",
        "total_gbp",
        "benefit_gbp",
        "area_m2",
        "installation_gbp",
        "annual_operation_gbp",
        "benefit_minus_installation_gbp",
    ])
    .expect("in-memory write");
    for e in evals {
        for r in &e.rows {
            w.write_record([
                r.key.to_string(),
                r.commercial.to_string(),
                r.residential.to_string(),
                r.total.to_string(),
                r.benefit.to_string(),
                e.area_m2.to_string(),
                r.installation.to_string(),
                e.annual_operation.to_string(),
                r.benefit_minus_installation.to_string(),
            ])
            .expect("in-memory write");
        }
    }
    String::from_utf8(w.into_inner().expect("flush")).expect("utf8")
}
