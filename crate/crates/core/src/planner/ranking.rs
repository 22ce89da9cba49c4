use std::cmp::Ordering;

use serde::{Deserialize, Serialize};

use super::PlanError;
use crate::damage::ScenarioDamages;
use crate::geodata::TileId;

pub const DEFAULT_GF_THRESHOLD: f64 = 0.5;

/// FD(rp) − FD(rp, variant). Negative when the variant floods more.
pub fn benefit(base: &ScenarioDamages, variant: &ScenarioDamages) -> Result<f64, PlanError> {
    if base.return_period.to_bits() != variant.return_period.to_bits() {
        return Err(PlanError::Usage(format!(
            "return periods differ: {} vs {}",
            base.return_period, variant.return_period
        )));
    }
    Ok(base.total - variant.total)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Suggestion {
    DetentionPond,
    PermeablePavement,
}

/// Advisory: ponds where green space is plentiful.
pub fn suggest_intervention(green_fraction: f64, gf_threshold: f64) -> Suggestion {
    if green_fraction >= gf_threshold {
        Suggestion::DetentionPond
    } else {
        Suggestion::PermeablePavement
    }
}

/// Input row for ranking one tile at one return period.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TileBenefit {
    pub tile_id: TileId,
    pub benefit: f64,
    pub green_fraction: f64,
    /// Damages of the capture run, when known.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub commercial: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub residential: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub total: Option<f64>,
}

impl TileBenefit {
    pub fn new(tile_id: TileId, benefit: f64, green_fraction: f64) -> Self {
        Self {
            tile_id,
            benefit,
            green_fraction,
            commercial: None,
            residential: None,
            total: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RankRow {
    pub rank: usize,
    pub tile_id: TileId,
    pub green_fraction: f64,
    pub benefit: f64,
    /// Benefit in £M times green fraction.
    pub score: f64,
    pub suggestion: Suggestion,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub commercial: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub residential: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub total: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TileRanking {
    pub return_period: f64,
    pub capture_fraction: f64,
    pub rows: Vec<RankRow>,
}

pub fn score(benefit: f64, green_fraction: f64) -> f64 {
    benefit / 1e6 * green_fraction
}

/// Descending score; ties to the larger benefit, then the lower tile id.
pub fn rank_tiles(return_period: f64, capture_fraction: f64, input: &[TileBenefit], gf_threshold: f64) -> TileRanking {
    let mut rows: Vec<RankRow> = input
        .iter()
        .map(|t| RankRow {
            rank: 0,
            tile_id: t.tile_id,
            green_fraction: t.green_fraction,
            benefit: t.benefit,
            score: score(t.benefit, t.green_fraction),
            suggestion: suggest_intervention(t.green_fraction, gf_threshold),
            commercial: t.commercial,
            residential: t.residential,
            total: t.total,
        })
        .collect();
    rows.sort_by(|a, b| {
        b.score
            .total_cmp(&a.score)
            .then_with(|| b.benefit.total_cmp(&a.benefit))
            .then_with(|| a.tile_id.cmp(&b.tile_id))
            .then(Ordering::Equal)
    });
    for (i, r) in rows.iter_mut().enumerate() {
        r.rank = i + 1;
    }
    TileRanking {
        return_period,
        capture_fraction,
        rows,
    }
}

fn opt(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

/// Ranking rows: rank, tile, scenario, green fraction, damages, benefit, score.
pub fn ranking_csv(r: &TileRanking) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record([
        "rank",
        "tile_id",
        "scenario",
        "green_fraction",
        "commercial_gbp",
        "residential_gbp",
        "total_gbp",
        "benefit_gbp",
        "score",
        "suggestion",
    ])
    .expect("in-memory write");
    for row in &r.rows {
        let key = super::ScenarioKey::capture(row.tile_id, r.capture_fraction, r.return_period);
        w.write_record([
            row.rank.to_string(),
            row.tile_id.to_string(),
            key.to_string(),
            row.green_fraction.to_string(),
            opt(row.commercial),
            opt(row.residential),
            opt(row.total),
            row.benefit.to_string(),
            row.score.to_string(),
            match row.suggestion {
                Suggestion::DetentionPond => "detention_pond".into(),
                Suggestion::PermeablePavement => "permeable_pavement".into(),
            },
        ])
        .expect("in-memory write");
    }
    String::from_utf8(w.into_inner().expect("flush")).expect("utf8")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ties_break_on_benefit_then_id() {
        let input = vec![
            TileBenefit::new(5, 2e6, 0.5),
            TileBenefit::new(2, 1e6, 1.0),
            TileBenefit::new(1, 1e6, 1.0),
            TileBenefit::new(9, 4e6, 0.0),
            TileBenefit::new(3, 0.0, 0.0),
        ];
        let r = rank_tiles(10.0, 1.0, &input, DEFAULT_GF_THRESHOLD);
        let ids: Vec<TileId> = r.rows.iter().map(|x| x.tile_id).collect();
        assert_eq!(ids, [5, 1, 2, 9, 3]);
        assert_eq!(r.rows[3].score, 0.0);
    }

    #[test]
    fn suggestion_threshold_is_inclusive() {
        assert_eq!(suggest_intervention(0.5, 0.5), Suggestion::DetentionPond);
        assert_eq!(suggest_intervention(0.4999, 0.5), Suggestion::PermeablePavement);
    }

    #[test]
    fn benefit_requires_same_return_period() {
        let a = ScenarioDamages::from_totals("a", 10.0, 1.0, 1.0, 2.0);
        let b = ScenarioDamages::from_totals("b", 20.0, 1.0, 0.0, 1.0);
        assert!(benefit(&a, &b).is_err());
        assert_eq!(benefit(&a, &a).unwrap(), 0.0);
    }
}
