//! Expected annual damage over the simulated return periods.
//!
//! Trapezoid rule over annual exceedance probability 1/rp. Only the
//! probability range covered by the storms is integrated; no tail is added.

use serde::{Deserialize, Serialize};

use super::PlanError;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DamagePoint {
    pub return_period: f64,
    pub damage: f64,
}

pub fn expected_annual_damage(points: &[DamagePoint]) -> Result<f64, PlanError> {
    let mut pts: Vec<(f64, f64)> = Vec::with_capacity(points.len());
    for p in points {
        if !(p.return_period > 0.0) || !p.damage.is_finite() {
            return Err(PlanError::Usage(format!("invalid damage point {p:?}")));
        }
        pts.push((1.0 / p.return_period, p.damage));
    }
    pts.sort_by(|a, b| a.0.total_cmp(&b.0));
    if pts.windows(2).any(|w| w[0].0 == w[1].0) {
        return Err(PlanError::Usage("duplicate return period".into()));
    }
    Ok(pts
        .windows(2)
        .map(|w| (w[1].0 - w[0].0) * (w[0].1 + w[1].1) / 2.0)
        .sum())
}
