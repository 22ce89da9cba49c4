use std::cmp::Ordering;
use std::fmt;
use std::hash::{Hash, Hasher};
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use super::PlanError;
use crate::geodata::TileId;

#[derive(Debug, Clone)]
pub enum ScenarioKind {
    Baseline,
    Capture { tile_id: TileId, fraction: f64 },
    /// A named intervention set.
    Intervention { set_id: String },
}

/// Identifies one solver run. Text form: `baseline@10`,
/// `capture:17:1@10`, `intervention:ponds@50`.
#[derive(Debug, Clone)]
pub struct ScenarioKey {
    pub kind: ScenarioKind,
    pub return_period: f64,
}

impl ScenarioKey {
    pub fn baseline(return_period: f64) -> Self {
        Self {
            kind: ScenarioKind::Baseline,
            return_period,
        }
    }

    pub fn capture(tile_id: TileId, fraction: f64, return_period: f64) -> Self {
        Self {
            kind: ScenarioKind::Capture { tile_id, fraction },
            return_period,
        }
    }

    pub fn intervention(set_id: &str, return_period: f64) -> Self {
        Self {
            kind: ScenarioKind::Intervention {
                set_id: set_id.to_string(),
            },
            return_period,
        }
    }

    pub fn is_baseline(&self) -> bool {
        matches!(self.kind, ScenarioKind::Baseline)
    }

    fn rank(&self) -> (u8, u64, u32, &str) {
        match &self.kind {
            ScenarioKind::Baseline => (0, 0, 0, ""),
            ScenarioKind::Capture { tile_id, fraction } => (1, fraction.to_bits(), *tile_id, ""),
            ScenarioKind::Intervention { set_id } => (2, 0, 0, set_id.as_str()),
        }
    }
}

impl PartialEq for ScenarioKey {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for ScenarioKey {}

impl Hash for ScenarioKey {
    fn hash<H: Hasher>(&self, state: &mut H) {
        self.rank().hash(state);
        self.return_period.to_bits().hash(state);
    }
}

impl PartialOrd for ScenarioKey {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// Return period first, then baseline < capture < intervention.
impl Ord for ScenarioKey {
    fn cmp(&self, other: &Self) -> Ordering {
        self.return_period
            .total_cmp(&other.return_period)
            .then_with(|| {
                let (a, b) = (self.rank(), other.rank());
                a.0.cmp(&b.0)
                    .then(a.2.cmp(&b.2))
                    .then(f64::from_bits(a.1).total_cmp(&f64::from_bits(b.1)))
                    .then(a.3.cmp(b.3))
            })
    }
}

impl fmt::Display for ScenarioKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.kind {
            ScenarioKind::Baseline => write!(f, "baseline")?,
            ScenarioKind::Capture { tile_id, fraction } => write!(f, "capture:{tile_id}:{fraction}")?,
            ScenarioKind::Intervention { set_id } => write!(f, "intervention:{set_id}")?,
        }
        write!(f, "@{}", self.return_period)
    }
}

impl FromStr for ScenarioKey {
    type Err = PlanError;

    fn from_str(s: &str) -> Result<Self, PlanError> {
        let bad = || PlanError::Usage(format!("malformed scenario key '{s}'"));
        let (kind, rp) = s.rsplit_once('@').ok_or_else(bad)?;
        let return_period: f64 = rp.parse().map_err(|_| bad())?;
        if !(return_period > 0.0) || !return_period.is_finite() {
            return Err(bad());
        }
        let mut parts = kind.splitn(3, ':');
        let kind = match (parts.next(), parts.next(), parts.next()) {
            (Some("baseline"), None, None) => ScenarioKind::Baseline,
            (Some("capture"), Some(tile), Some(frac)) => {
                let tile_id = tile.parse().map_err(|_| bad())?;
                let fraction: f64 = frac.parse().map_err(|_| bad())?;
                if !(0.0..=1.0).contains(&fraction) {
                    return Err(bad());
                }
                ScenarioKind::Capture { tile_id, fraction }
            }
            (Some("intervention"), Some(set), None) if valid_set_id(set) => ScenarioKind::Intervention {
                set_id: set.to_string(),
            },
            _ => return Err(bad()),
        };
        Ok(Self { kind, return_period })
    }
}

/// Set ids go into keys and file names.
pub fn valid_set_id(id: &str) -> bool {
    !id.is_empty()
        && id.len() <= 64
        && id
            .chars()
            .all(|c| c.is_ascii_alphanumeric() || c == '_' || c == '-' || c == '.')
}

impl Serialize for ScenarioKey {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for ScenarioKey {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn text_roundtrip() {
        for s in ["baseline@10", "capture:17:1@10", "capture:3:0.05@2.5", "intervention:ponds_9-12@50"] {
            let k: ScenarioKey = s.parse().unwrap();
            assert_eq!(k.to_string(), s);
        }
        assert_eq!(ScenarioKey::capture(17, 1.0, 10.0).to_string(), "capture:17:1@10");
    }

    #[test]
    fn malformed_keys() {
        for s in ["", "baseline", "baseline@x", "baseline@-1", "capture:1@10", "capture:1:2@10", "intervention:a/b@10", "flood@10"] {
            assert!(s.parse::<ScenarioKey>().is_err(), "{s}");
        }
    }

    #[test]
    fn ordering_groups_by_return_period() {
        let mut keys = vec![
            ScenarioKey::capture(2, 1.0, 10.0),
            ScenarioKey::baseline(20.0),
            ScenarioKey::capture(1, 1.0, 10.0),
            ScenarioKey::baseline(10.0),
        ];
        keys.sort();
        let s: Vec<String> = keys.iter().map(|k| k.to_string()).collect();
        assert_eq!(s, ["baseline@10", "capture:1:1@10", "capture:2:1@10", "baseline@20"]);
    }
}
