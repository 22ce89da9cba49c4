use serde::{Deserialize, Serialize};

use super::{cells_in_polygons, BuildingFootprint, TerrainGrid};
use crate::geometry::Polygon;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LandClass {
    Green,
    Paved,
    Building,
    Pond,
}

impl std::str::FromStr for LandClass {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "green" => Ok(LandClass::Green),
            "paved" => Ok(LandClass::Paved),
            "pond" => Ok(LandClass::Pond),
            "building" => Ok(LandClass::Building),
            other => Err(format!("unknown land class '{other}'")),
        }
    }
}

/// A land-use polygon from vector input.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LandUseZone {
    pub class: LandClass,
    pub polygons: Vec<Polygon>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LandUseMap {
    pub classes: Vec<LandClass>,
}

impl LandUseMap {
    /// Every cell paved unless a zone says otherwise; later zones override
    /// earlier ones; building footprints always win.
    pub fn from_zones(
        grid: &TerrainGrid,
        zones: &[LandUseZone],
        buildings: &[BuildingFootprint],
    ) -> Self {
        let mut classes = vec![LandClass::Paved; grid.n_cells()];
        for zone in zones {
            if zone.class == LandClass::Building {
                continue;
            }
            for c in cells_in_polygons(grid, &zone.polygons) {
                classes[c] = zone.class;
            }
        }
        let mut map = Self { classes };
        map.mark_buildings(buildings);
        map
    }

    pub fn uniform(n_cells: usize, class: LandClass) -> Self {
        Self {
            classes: vec![class; n_cells],
        }
    }

    pub fn mark_buildings(&mut self, buildings: &[BuildingFootprint]) {
        for b in buildings {
            for &c in &b.footprint_cells {
                self.classes[c] = LandClass::Building;
            }
        }
    }

    #[inline]
    pub fn get(&self, idx: usize) -> LandClass {
        self.classes[idx]
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geodata::{rasterize_buildings, BuildingInput, UseClass};

    #[test]
    fn later_zone_overrides_and_buildings_win() {
        let g = TerrainGrid::from_fn(0.0, 0.0, 1.0, 4, 4, |_, _| 0.0).unwrap();
        let r = rasterize_buildings(
            &[BuildingInput {
                id: "b".into(),
                use_class: UseClass::Commercial,
                polygons: vec![Polygon::rect(0.0, 0.0, 1.0, 1.0)],
            }],
            &g,
        );
        let zones = vec![
            LandUseZone {
                class: LandClass::Green,
                polygons: vec![Polygon::rect(0.0, 0.0, 4.0, 2.0)],
            },
            LandUseZone {
                class: LandClass::Pond,
                polygons: vec![Polygon::rect(3.0, 0.0, 4.0, 1.0)],
            },
        ];
        let lu = LandUseMap::from_zones(&g, &zones, &r.buildings);
        // Row 3 is the southern row.
        assert_eq!(lu.get(g.index(3, 0)), LandClass::Building);
        assert_eq!(lu.get(g.index(3, 1)), LandClass::Green);
        assert_eq!(lu.get(g.index(3, 3)), LandClass::Pond);
        assert_eq!(lu.get(g.index(0, 0)), LandClass::Paved);
    }
}
