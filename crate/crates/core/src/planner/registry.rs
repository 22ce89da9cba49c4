//! Completed runs keyed by content hash, optionally persisted to disk.
//!
//! Layout: `index.json` maps scenario keys to hashes; `runs/<hash>/` holds
//! `result.json` and `depth.bgdr`. A run directory is complete before the
//! index mentions it.

use std::collections::{BTreeMap, HashMap};
use std::fs;
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::{Arc, Mutex};

use serde::{Deserialize, Serialize};

use super::scenario::{content_hash, evaluate_scenario, ResultMeta, ScenarioResult};
use super::{Catchment, PlanError, ScenarioKey};
use crate::hydro::{decode_binary, encode_binary, InterventionSpec, MaxDepthRaster};

pub const INDEX_SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Serialize, Deserialize)]
struct IndexFile {
    schema_version: u32,
    entries: BTreeMap<ScenarioKey, String>,
}

#[derive(Default)]
struct State {
    by_hash: HashMap<String, Arc<ScenarioResult>>,
    index: BTreeMap<ScenarioKey, String>,
}

pub struct RunRegistry {
    dir: Option<PathBuf>,
    state: Mutex<State>,
    solver_runs: AtomicU64,
}

fn io_err(path: &Path, e: impl std::fmt::Display) -> PlanError {
    PlanError::Io(format!("{}: {e}", path.display()))
}

fn write_atomic(path: &Path, bytes: &[u8]) -> Result<(), PlanError> {
    let tmp = path.with_extension("tmp");
    fs::write(&tmp, bytes).map_err(|e| io_err(&tmp, e))?;
    fs::rename(&tmp, path).map_err(|e| io_err(path, e))
}

impl RunRegistry {
    pub fn in_memory() -> Self {
        Self {
            dir: None,
            state: Mutex::new(State::default()),
            solver_runs: AtomicU64::new(0),
        }
    }

    /// Open or create an on-disk registry.
    pub fn open(dir: &Path) -> Result<Self, PlanError> {
        fs::create_dir_all(dir.join("runs")).map_err(|e| io_err(dir, e))?;
        let index_path = dir.join("index.json");
        let index = if index_path.exists() {
            let text = fs::read_to_string(&index_path).map_err(|e| io_err(&index_path, e))?;
            let file: IndexFile = serde_json::from_str(&text).map_err(|e| io_err(&index_path, e))?;
            if file.schema_version != INDEX_SCHEMA_VERSION {
                return Err(io_err(&index_path, format!("unsupported schema_version {}", file.schema_version)));
            }
            file.entries
        } else {
            BTreeMap::new()
        };
        Ok(Self {
            dir: Some(dir.to_path_buf()),
            state: Mutex::new(State {
                by_hash: HashMap::new(),
                index,
            }),
            solver_runs: AtomicU64::new(0),
        })
    }

    pub fn dir(&self) -> Option<&Path> {
        self.dir.as_deref()
    }

    /// Solver runs performed through this registry instance.
    pub fn solver_runs(&self) -> u64 {
        self.solver_runs.load(Ordering::SeqCst)
    }

    pub fn keys(&self) -> Vec<ScenarioKey> {
        self.state.lock().expect("registry lock").index.keys().cloned().collect()
    }

    /// Latest result registered under `key`.
    pub fn lookup(&self, key: &ScenarioKey) -> Result<Option<Arc<ScenarioResult>>, PlanError> {
        let hash = match self.state.lock().expect("registry lock").index.get(key) {
            Some(h) => h.clone(),
            None => return Ok(None),
        };
        self.by_hash(&hash)
    }

    fn by_hash(&self, hash: &str) -> Result<Option<Arc<ScenarioResult>>, PlanError> {
        if let Some(r) = self.state.lock().expect("registry lock").by_hash.get(hash) {
            return Ok(Some(r.clone()));
        }
        let Some(found) = self.load(hash)? else {
            return Ok(None);
        };
        let found = Arc::new(found);
        let mut st = self.state.lock().expect("registry lock");
        Ok(Some(st.by_hash.entry(hash.to_string()).or_insert(found).clone()))
    }

    fn run_dir(&self, hash: &str) -> Option<PathBuf> {
        self.dir.as_ref().map(|d| d.join("runs").join(hash))
    }

    fn load(&self, hash: &str) -> Result<Option<ScenarioResult>, PlanError> {
        let Some(dir) = self.run_dir(hash) else {
            return Ok(None);
        };
        let meta_path = dir.join("result.json");
        let depth_path = dir.join("depth.bgdr");
        if !meta_path.exists() || !depth_path.exists() {
            return Ok(None);
        }
        let text = fs::read_to_string(&meta_path).map_err(|e| io_err(&meta_path, e))?;
        let meta: ResultMeta = serde_json::from_str(&text).map_err(|e| io_err(&meta_path, e))?;
        let bytes = fs::read(&depth_path).map_err(|e| io_err(&depth_path, e))?;
        let (georef, depth) = decode_binary(&bytes).map_err(|e| io_err(&depth_path, e))?;
        let max_depth = MaxDepthRaster {
            scenario_id: meta.key.to_string(),
            end_time: meta.end_time,
            georef,
            depth,
        };
        Ok(Some(ScenarioResult { meta, max_depth }))
    }

    fn store(&self, result: &ScenarioResult) -> Result<(), PlanError> {
        let Some(dir) = self.run_dir(&result.meta.content_hash) else {
            return Ok(());
        };
        fs::create_dir_all(&dir).map_err(|e| io_err(&dir, e))?;
        let bytes = encode_binary(&result.max_depth.georef, &result.max_depth.depth);
        write_atomic(&dir.join("depth.bgdr"), &bytes)?;
        let json = serde_json::to_vec_pretty(&result.meta).expect("serializable");
        write_atomic(&dir.join("result.json"), &json)
    }

    fn save_index(&self, index: &BTreeMap<ScenarioKey, String>) -> Result<(), PlanError> {
        let Some(dir) = &self.dir else { return Ok(()) };
        let file = IndexFile {
            schema_version: INDEX_SCHEMA_VERSION,
            entries: index.clone(),
        };
        write_atomic(&dir.join("index.json"), &serde_json::to_vec_pretty(&file).expect("serializable"))
    }

    fn register(&self, key: &ScenarioKey, result: Arc<ScenarioResult>) -> Result<Arc<ScenarioResult>, PlanError> {
        let mut st = self.state.lock().expect("registry lock");
        let hash = result.meta.content_hash.clone();
        let result = st.by_hash.entry(hash.clone()).or_insert(result).clone();
        if st.index.get(key) != Some(&hash) {
            st.index.insert(key.clone(), hash);
            self.save_index(&st.index)?;
        }
        Ok(result)
    }

    /// Reuse a completed run with the same content hash, otherwise run it.
    pub fn get_or_run(
        &self,
        catchment: &Catchment,
        key: &ScenarioKey,
        specs: &[InterventionSpec],
        progress: Option<&(dyn Fn(f64) + Sync)>,
    ) -> Result<Arc<ScenarioResult>, PlanError> {
        let hash = content_hash(catchment, key, specs)?;
        if let Some(found) = self.by_hash(&hash)? {
            return self.register(key, found);
        }
        self.solver_runs.fetch_add(1, Ordering::SeqCst);
        let result = evaluate_scenario(catchment, key, specs, progress)?;
        self.store(&result)?;
        self.register(key, Arc::new(result))
    }
}
