//! Payloads shared by `report` and the HTTP API. Each builder returns the
//! exact bytes or JSON value both sides emit.

use std::collections::BTreeMap;

use bluegreen_core::damage::ScenarioDamages;
use bluegreen_core::exposure::exposure_geojson;
use bluegreen_core::geodata::polygons_to_geojson;
use bluegreen_core::hydro::{encode_binary, write_depth_ascii};
use bluegreen_core::planner::{
    benefit, suggest_intervention, Catchment, CostReport, ScenarioKey, ScenarioResult, TileRanking,
};
use serde_json::{json, Value};

use crate::engine::InterventionSet;
use crate::error::{ServiceError, SCHEMA_VERSION};

/// JSON bytes as written to disk and sent over HTTP.
pub fn to_bytes(v: &Value) -> Vec<u8> {
    let mut b = serde_json::to_vec_pretty(v).expect("json");
    b.push(b'\n');
    b
}

/// File-name form of a key: `capture:5:1@10` becomes `capture_5_1_rp10`.
pub fn key_slug(key: &ScenarioKey) -> String {
    key.to_string().replace(':', "_").replace('@', "_rp")
}

pub fn damages_json(r: &ScenarioResult) -> Value {
    let d = r.damages();
    json!({
        "schema_version": SCHEMA_VERSION,
        "key": r.key(),
        "content_hash": r.meta.content_hash,
        "return_period": d.return_period,
        "commercial": d.commercial,
        "residential": d.residential,
        "total": d.total,
        "counts": d.counts,
        "buildings": d.buildings,
        "ledger": r.ledger(),
        "applied": r.meta.applied,
    })
}

pub fn exposure_json(c: &Catchment, r: &ScenarioResult) -> Value {
    let mut v = exposure_geojson(&r.meta.exposure, &c.buildings);
    v["schema_version"] = json!(SCHEMA_VERSION);
    v["key"] = json!(r.key());
    v
}

pub fn depth_bgdr(r: &ScenarioResult) -> Vec<u8> {
    encode_binary(&r.max_depth.georef, &r.max_depth.depth)
}

pub fn depth_asc(r: &ScenarioResult) -> Vec<u8> {
    let mut out = Vec::new();
    write_depth_ascii(&mut out, &r.max_depth).expect("in-memory write");
    out
}

pub fn ranking_json(r: &TileRanking) -> Value {
    let mut v = serde_json::to_value(r).expect("json");
    v["schema_version"] = json!(SCHEMA_VERSION);
    v
}

pub fn tiles_json(c: &Catchment, gf_threshold: f64) -> Value {
    let features: Vec<Value> = c
        .partition
        .tiles
        .iter()
        .zip(&c.partition.green_fraction)
        .map(|(t, &gf)| {
            json!({
                "type": "Feature",
                "geometry": polygons_to_geojson(&[t.polygon()]),
                "properties": {
                    "id": t.id,
                    "green_fraction": gf,
                    "n_cells": t.n_cells,
                    "suggestion": suggest_intervention(gf, gf_threshold),
                },
            })
        })
        .collect();
    json!({
        "schema_version": SCHEMA_VERSION,
        "type": "FeatureCollection",
        "features": features,
    })
}

pub fn set_json(set: &InterventionSet, costs: &[CostReport]) -> Value {
    let installation: f64 = costs.iter().map(|c| c.installation).sum();
    let annual: f64 = costs.iter().map(|c| c.annual_operation).sum();
    let area: f64 = costs.iter().map(|c| c.area_m2).sum();
    json!({
        "schema_version": SCHEMA_VERSION,
        "set_id": set.set_id,
        "version": set.version,
        "specs": set.specs,
        "costs": costs,
        "area_m2": area,
        "installation": installation,
        "annual_operation": annual,
    })
}

/// Totals, benefit and the buildings whose damage changed.
pub fn diff_json(base: &ScenarioResult, variant: &ScenarioResult) -> Result<Value, ServiceError> {
    let (b, v) = (base.damages(), variant.damages());
    let delta_benefit = benefit(b, v)?;
    let before: BTreeMap<&str, _> = b.buildings.iter().map(|x| (x.building_id.as_str(), x)).collect();
    let mut buildings = Vec::new();
    for after in &v.buildings {
        let Some(prev) = before.get(after.building_id.as_str()) else {
            return Err(ServiceError::Invalid(format!("building {} missing from base", after.building_id)));
        };
        if prev.damage.to_bits() != after.damage.to_bits() || prev.exposure_class != after.exposure_class {
            buildings.push(json!({
                "id": after.building_id,
                "use_class": after.use_class,
                "base_class": prev.exposure_class,
                "variant_class": after.exposure_class,
                "base_damage": prev.damage,
                "variant_damage": after.damage,
                "delta": after.damage - prev.damage,
            }));
        }
    }
    let totals = |d: &ScenarioDamages| json!({"commercial": d.commercial, "residential": d.residential, "total": d.total});
    Ok(json!({
        "schema_version": SCHEMA_VERSION,
        "base": base.key(),
        "variant": variant.key(),
        "return_period": b.return_period,
        "base_totals": totals(b),
        "variant_totals": totals(v),
        "benefit": delta_benefit,
        "buildings": buildings,
    }))
}
