//! One loaded project with its run registry and intervention sets. Both the
//! CLI and the HTTP service go through here.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::sync::{Arc, Mutex};

use bluegreen_core::hydro::{apply_interventions, InterventionSpec};
use bluegreen_core::planner::{
    content_hash, cost_intervention, PlanError, ranking_from_results, valid_set_id, CostReport, RunRegistry, ScenarioKey,
    ScenarioKind, ScenarioResult, TileRanking,
};
use serde::{Deserialize, Serialize};

use crate::error::{io_err, ServiceError, SCHEMA_VERSION};
use crate::project::Project;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InterventionSet {
    pub set_id: String,
    /// Starts at 1 and grows by one per accepted write.
    pub version: u64,
    pub specs: Vec<InterventionSpec>,
}

#[derive(Debug, Default, Serialize, Deserialize)]
struct StoreFile {
    schema_version: u32,
    sets: BTreeMap<String, InterventionSet>,
}

/// Versioned intervention sets, saved next to the registry.
pub struct InterventionStore {
    path: Option<PathBuf>,
    sets: Mutex<BTreeMap<String, InterventionSet>>,
}

impl InterventionStore {
    pub fn in_memory() -> Self {
        Self {
            path: None,
            sets: Mutex::new(BTreeMap::new()),
        }
    }

    pub fn open(path: &Path) -> Result<Self, ServiceError> {
        let sets = if path.exists() {
            let text = fs::read_to_string(path).map_err(|e| io_err(path.display(), e))?;
            let f: StoreFile = serde_json::from_str(&text).map_err(|e| io_err(path.display(), e))?;
            f.sets
        } else {
            BTreeMap::new()
        };
        Ok(Self {
            path: Some(path.to_path_buf()),
            sets: Mutex::new(sets),
        })
    }

    pub fn get(&self, set_id: &str) -> Option<InterventionSet> {
        self.sets.lock().expect("store lock").get(set_id).cloned()
    }

    pub fn list(&self) -> Vec<InterventionSet> {
        self.sets.lock().expect("store lock").values().cloned().collect()
    }

    /// Compare-and-set: `expected` must match the stored version (0 when
    /// the set does not exist yet). `None` skips the check.
    pub fn put(
        &self,
        set_id: &str,
        expected: Option<u64>,
        specs: Vec<InterventionSpec>,
    ) -> Result<InterventionSet, ServiceError> {
        let mut sets = self.sets.lock().expect("store lock");
        let current = sets.get(set_id).map_or(0, |s| s.version);
        if let Some(want) = expected {
            if want != current {
                return Err(ServiceError::Conflict(format!(
                    "intervention set '{set_id}' is at version {current}, not {want}"
                )));
            }
        }
        let set = InterventionSet {
            set_id: set_id.to_string(),
            version: current + 1,
            specs,
        };
        let mut next = sets.clone();
        next.insert(set_id.to_string(), set.clone());
        if let Some(path) = &self.path {
            let file = StoreFile {
                schema_version: SCHEMA_VERSION,
                sets: next.clone(),
            };
            let tmp = path.with_extension("tmp");
            fs::write(&tmp, serde_json::to_vec_pretty(&file).expect("json")).map_err(|e| io_err(tmp.display(), e))?;
            fs::rename(&tmp, path).map_err(|e| io_err(path.display(), e))?;
        }
        *sets = next;
        Ok(set)
    }
}

pub struct Engine {
    pub project: Project,
    pub registry: RunRegistry,
    pub interventions: InterventionStore,
}

impl Engine {
    /// Load the project and open its registry (or `registry` when given).
    pub fn open(project: &Path, registry: Option<&Path>) -> Result<Self, ServiceError> {
        let project = Project::load(project)?;
        let dir = registry.map(Path::to_path_buf).unwrap_or_else(|| project.registry_dir());
        let reg = RunRegistry::open(&dir)?;
        let interventions = InterventionStore::open(&dir.join("interventions.json"))?;
        Ok(Self {
            project,
            registry: reg,
            interventions,
        })
    }

    pub fn in_memory(project: Project) -> Self {
        Self {
            project,
            registry: RunRegistry::in_memory(),
            interventions: InterventionStore::in_memory(),
        }
    }

    pub fn catchment(&self) -> &bluegreen_core::planner::Catchment {
        &self.project.catchment
    }

    /// Parse a key and check it can run on this project.
    pub fn parse_key(&self, text: &str) -> Result<ScenarioKey, ServiceError> {
        let key: ScenarioKey = text.parse()?;
        self.catchment().storm(key.return_period)?;
        match &key.kind {
            ScenarioKind::Capture { tile_id, .. } if self.catchment().partition.tile(*tile_id).is_none() => {
                Err(PlanError::UnknownTile(*tile_id).into())
            }
            ScenarioKind::Intervention { set_id } if self.interventions.get(set_id).is_none() => {
                Err(ServiceError::NotFound(format!("intervention set '{set_id}'")))
            }
            _ => Ok(key),
        }
    }

    pub fn specs_for(&self, key: &ScenarioKey) -> Result<Vec<InterventionSpec>, ServiceError> {
        match &key.kind {
            ScenarioKind::Intervention { set_id } => self
                .interventions
                .get(set_id)
                .map(|s| s.specs)
                .ok_or_else(|| ServiceError::NotFound(format!("intervention set '{set_id}'"))),
            _ => Ok(Vec::new()),
        }
    }

    pub fn run(
        &self,
        key: &ScenarioKey,
        progress: Option<&(dyn Fn(f64) + Sync)>,
    ) -> Result<Arc<ScenarioResult>, ServiceError> {
        let specs = self.specs_for(key)?;
        Ok(self.registry.get_or_run(self.catchment(), key, &specs, progress)?)
    }

    /// The stored result for `key`, only if it matches the current inputs.
    pub fn result(&self, key: &ScenarioKey) -> Result<Arc<ScenarioResult>, ServiceError> {
        let missing = || ServiceError::NotFound(format!("no completed run for {key}"));
        let specs = self.specs_for(key)?;
        let hash = content_hash(self.catchment(), key, &specs)?;
        match self.registry.lookup(key)? {
            Some(r) if r.meta.content_hash == hash => Ok(r),
            _ => Err(missing()),
        }
    }

    /// Every registered key whose result matches the current inputs.
    pub fn current_results(&self) -> Result<BTreeMap<ScenarioKey, Arc<ScenarioResult>>, ServiceError> {
        let mut out = BTreeMap::new();
        for k in self.registry.keys() {
            match self.result(&k) {
                Ok(r) => {
                    out.insert(k, r);
                }
                Err(e @ ServiceError::Io(_)) | Err(e @ ServiceError::Plan(PlanError::Io(_))) => return Err(e),
                // Stale: storm removed, set deleted or inputs changed.
                Err(_) => {}
            }
        }
        Ok(out)
    }

    pub fn ranking(&self, return_period: f64, capture_fraction: f64) -> Result<TileRanking, ServiceError> {
        let c = self.catchment();
        c.storm(return_period)?;
        let mut results = BTreeMap::new();
        let mut keys = vec![ScenarioKey::baseline(return_period)];
        keys.extend(c.partition.ids().map(|t| ScenarioKey::capture(t, capture_fraction, return_period)));
        for k in keys {
            if let Ok(r) = self.result(&k) {
                results.insert(k, r);
            }
        }
        Ok(ranking_from_results(c, &results, return_period, capture_fraction, self.project.file.gf_threshold)?)
    }

    /// Check a set against the catchment and price it.
    pub fn check_set(&self, set_id: &str, specs: &[InterventionSpec]) -> Result<Vec<CostReport>, ServiceError> {
        if !valid_set_id(set_id) {
            return Err(ServiceError::Usage(format!("invalid intervention set id '{set_id}'")));
        }
        if specs.is_empty() {
            return Err(ServiceError::Invalid(format!("intervention set '{set_id}' is empty")));
        }
        let c = self.catchment();
        for s in specs {
            s.validate().map_err(|e| ServiceError::Invalid(e.to_string()))?;
        }
        apply_interventions(&c.grid, &c.props, specs, &c.surface).map_err(|e| ServiceError::Invalid(e.to_string()))?;
        self.costs(specs)
    }

    pub fn costs(&self, specs: &[InterventionSpec]) -> Result<Vec<CostReport>, ServiceError> {
        let rates = &self.catchment().costs;
        Ok(specs
            .iter()
            .map(|s| cost_intervention(s, rates))
            .collect::<Result<Vec<_>, _>>()?)
    }

    pub fn put_set(
        &self,
        set_id: &str,
        expected_version: Option<u64>,
        specs: Vec<InterventionSpec>,
    ) -> Result<InterventionSet, ServiceError> {
        self.check_set(set_id, &specs)?;
        self.interventions.put(set_id, expected_version, specs)
    }
}
