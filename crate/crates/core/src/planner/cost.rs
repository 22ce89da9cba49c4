use serde::{Deserialize, Serialize};

use super::PlanError;
use crate::hydro::{InterventionKind, InterventionSpec};

/// Unit rates in £.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct CostModel {
    pub pavement_per_m2: f64,
    pub pavement_annual_per_m2: f64,
    pub pavement_life_years: f64,
    /// Pond construction quoted as a cost per reference volume.
    pub pond_reference_cost: f64,
    pub pond_reference_volume_m3: f64,
    pub pond_annual_per_m2: f64,
    pub pond_life_years: f64,
}

impl Default for CostModel {
    fn default() -> Self {
        Self {
            pavement_per_m2: 30.0,
            pavement_annual_per_m2: 0.40,
            pavement_life_years: 40.0,
            pond_reference_cost: 80_000.0,
            pond_reference_volume_m3: 5_000.0,
            pond_annual_per_m2: 0.60,
            pond_life_years: 15.0,
        }
    }
}

impl CostModel {
    pub fn pond_per_m3(&self) -> f64 {
        self.pond_reference_cost / self.pond_reference_volume_m3
    }

    pub fn validate(&self) -> Result<(), PlanError> {
        let all = [
            self.pavement_per_m2,
            self.pavement_annual_per_m2,
            self.pavement_life_years,
            self.pond_reference_cost,
            self.pond_annual_per_m2,
            self.pond_life_years,
        ];
        if all.iter().any(|v| !(*v >= 0.0) || !v.is_finite()) || !(self.pond_reference_volume_m3 > 0.0) {
            return Err(PlanError::Config("cost rates must be finite and non-negative".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CostReport {
    pub intervention_id: String,
    pub intervention_type: String,
    pub area_m2: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub volume_m3: Option<f64>,
    pub installation: f64,
    pub annual_operation: f64,
    pub lifetime_years: f64,
    /// Idealized capture: reported at zero cost, cannot be built.
    #[serde(default)]
    pub not_buildable: bool,
}

impl CostReport {
    /// Installation plus operation over the service life.
    pub fn whole_life(&self) -> f64 {
        self.installation + self.annual_operation * self.lifetime_years
    }
}

pub fn cost_intervention(spec: &InterventionSpec, rates: &CostModel) -> Result<CostReport, PlanError> {
    spec.validate().map_err(|e| PlanError::Invalid(e.to_string()))?;
    let area = if spec.is_geometric() { spec.area() } else { 0.0 };
    let mut report = CostReport {
        intervention_id: spec.id.clone(),
        intervention_type: spec.kind.name().to_string(),
        area_m2: area,
        volume_m3: None,
        installation: 0.0,
        annual_operation: 0.0,
        lifetime_years: 0.0,
        not_buildable: false,
    };
    match spec.kind {
        InterventionKind::PermeablePavement => {
            report.installation = area * rates.pavement_per_m2;
            report.annual_operation = area * rates.pavement_annual_per_m2;
            report.lifetime_years = rates.pavement_life_years;
        }
        InterventionKind::DetentionPond { volume_m3 } => {
            report.volume_m3 = Some(volume_m3);
            report.installation = volume_m3 * rates.pond_reference_cost / rates.pond_reference_volume_m3;
            report.annual_operation = area * rates.pond_annual_per_m2;
            report.lifetime_years = rates.pond_life_years;
        }
        InterventionKind::RainCapture { .. } => report.not_buildable = true,
    }
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::Polygon;

    fn pond(volume_m3: f64, area: f64) -> InterventionSpec {
        InterventionSpec {
            id: "p".into(),
            kind: InterventionKind::DetentionPond { volume_m3 },
            geometry: vec![Polygon::rect(0.0, 0.0, 100.0, area / 100.0)],
            area_m2: None,
        }
    }

    #[test]
    fn pond_costs() {
        let r = cost_intervention(&pond(10_000.0, 8_000.0), &CostModel::default()).unwrap();
        assert_eq!(r.installation, 160_000.0);
        assert_eq!(r.annual_operation, 4_800.0);
        assert_eq!(r.lifetime_years, 15.0);
    }

    #[test]
    fn capture_is_free_and_flagged() {
        let spec = InterventionSpec {
            id: "c".into(),
            kind: InterventionKind::RainCapture { tile_id: 3, fraction: 1.0 },
            geometry: vec![],
            area_m2: None,
        };
        let r = cost_intervention(&spec, &CostModel::default()).unwrap();
        assert!(r.not_buildable);
        assert_eq!(r.installation, 0.0);
    }

    #[test]
    fn zero_area_rejected() {
        let mut spec = pond(100.0, 100.0);
        spec.area_m2 = Some(0.0);
        assert!(cost_intervention(&spec, &CostModel::default()).is_err());
    }
}
