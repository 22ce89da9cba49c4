//! GeoJSON input for buildings and land-use zones.

use geojson::{FeatureCollection, GeoJson, Value};
use serde_json::Value as Json;

use super::{BuildingInput, GeoError, LandClass, LandUseZone};
use crate::geometry::Polygon;

fn ring(coords: &[Vec<f64>]) -> Result<Vec<[f64; 2]>, GeoError> {
    coords
        .iter()
        .map(|p| match p.as_slice() {
            [x, y, ..] => Ok([*x, *y]),
            _ => Err(GeoError::Vector("position with fewer than 2 coordinates".into())),
        })
        .collect()
}

fn polygon(rings: &[Vec<Vec<f64>>]) -> Result<Polygon, GeoError> {
    let mut it = rings.iter();
    let exterior = ring(it.next().ok_or_else(|| GeoError::Vector("polygon without rings".into()))?)?;
    let holes = it.map(|r| ring(r)).collect::<Result<_, _>>()?;
    Ok(Polygon { exterior, holes })
}

pub fn polygons_of(value: &Value) -> Result<Vec<Polygon>, GeoError> {
    match value {
        Value::Polygon(rings) => Ok(vec![polygon(rings)?]),
        Value::MultiPolygon(polys) => polys.iter().map(|p| polygon(p)).collect(),
        other => Err(GeoError::Vector(format!(
            "expected Polygon or MultiPolygon, got {}",
            other.type_name()
        ))),
    }
}

fn collection(text: &str) -> Result<FeatureCollection, GeoError> {
    match text.parse::<GeoJson>() {
        Ok(GeoJson::FeatureCollection(fc)) => Ok(fc),
        Ok(_) => Err(GeoError::Vector("expected a FeatureCollection".into())),
        Err(e) => Err(GeoError::Vector(e.to_string())),
    }
}

fn json_to_id(v: &Json) -> Option<String> {
    match v {
        Json::String(s) => Some(s.clone()),
        Json::Number(n) => Some(n.to_string()),
        _ => None,
    }
}

/// Parse buildings. Each feature needs `id` (property or feature id) and
/// `use_class` in {"commercial", "residential"}.
pub fn parse_buildings(text: &str) -> Result<Vec<BuildingInput>, GeoError> {
    let fc = collection(text)?;
    let mut out = Vec::with_capacity(fc.features.len());
    let mut seen = std::collections::HashSet::new();
    for (i, f) in fc.features.iter().enumerate() {
        let props = f.properties.as_ref();
        let id = props
            .and_then(|p| p.get("id"))
            .and_then(json_to_id)
            .or_else(|| {
                f.id.as_ref().map(|id| match id {
                    geojson::feature::Id::String(s) => s.clone(),
                    geojson::feature::Id::Number(n) => n.to_string(),
                })
            })
            .ok_or_else(|| GeoError::Vector(format!("building feature {i} has no id")))?;
        if !seen.insert(id.clone()) {
            return Err(GeoError::Vector(format!("duplicate building id '{id}'")));
        }
        let use_class = props
            .and_then(|p| p.get("use_class"))
            .and_then(Json::as_str)
            .ok_or_else(|| GeoError::Vector(format!("building '{id}' has no use_class")))?
            .parse()
            .map_err(|e| GeoError::Vector(format!("building '{id}': {e}")))?;
        let geom = f
            .geometry
            .as_ref()
            .ok_or_else(|| GeoError::Vector(format!("building '{id}' has no geometry")))?;
        out.push(BuildingInput {
            id,
            use_class,
            polygons: polygons_of(&geom.value)?,
        });
    }
    Ok(out)
}

/// Parse land-use zones; each feature carries `landuse` (or `class`) in
/// {"green", "paved", "pond"}.
pub fn parse_landuse(text: &str) -> Result<Vec<LandUseZone>, GeoError> {
    let fc = collection(text)?;
    fc.features
        .iter()
        .enumerate()
        .map(|(i, f)| {
            let props = f.properties.as_ref();
            let class: LandClass = props
                .and_then(|p| p.get("landuse").or_else(|| p.get("class")))
                .and_then(Json::as_str)
                .ok_or_else(|| GeoError::Vector(format!("land-use feature {i} has no landuse")))?
                .parse()
                .map_err(|e| GeoError::Vector(format!("land-use feature {i}: {e}")))?;
            let geom = f
                .geometry
                .as_ref()
                .ok_or_else(|| GeoError::Vector(format!("land-use feature {i} has no geometry")))?;
            Ok(LandUseZone {
                class,
                polygons: polygons_of(&geom.value)?,
            })
        })
        .collect()
}

/// GeoJSON geometry object for a set of polygons.
pub fn polygons_to_geojson(polys: &[Polygon]) -> Json {
    let ring = |r: &[[f64; 2]]| Json::Array(r.iter().map(|p| serde_json::json!([p[0], p[1]])).collect());
    let poly = |p: &Polygon| {
        let mut rings = vec![ring(&p.exterior)];
        rings.extend(p.holes.iter().map(|h| ring(h)));
        Json::Array(rings)
    };
    if polys.len() == 1 {
        serde_json::json!({"type": "Polygon", "coordinates": poly(&polys[0])})
    } else {
        serde_json::json!({
            "type": "MultiPolygon",
            "coordinates": Json::Array(polys.iter().map(poly).collect())
        })
    }
}
