//! Run jobs: a bounded FIFO queue drained by a fixed set of worker threads.
//! Each job is saved as JSON so a restarted service picks up where it was.

use std::collections::{BTreeMap, VecDeque};
use std::fs;
use std::path::{Path, PathBuf};
use std::sync::{Arc, Condvar, Mutex};
use std::thread;
use std::time::{Duration, Instant};

use bluegreen_core::planner::ScenarioKey;
use serde::{Deserialize, Serialize};

use crate::engine::Engine;
use crate::error::{io_err, ServiceError, SCHEMA_VERSION};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum JobState {
    Queued,
    Running,
    Done,
    Failed,
}

impl JobState {
    pub fn finished(self) -> bool {
        matches!(self, Self::Done | Self::Failed)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Job {
    pub schema_version: u32,
    pub id: String,
    pub keys: Vec<ScenarioKey>,
    pub state: JobState,
    pub progress: f64,
    /// Content hash of each finished key.
    pub artifacts: BTreeMap<ScenarioKey, String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
    /// Times the job was picked up again after a service restart.
    #[serde(default)]
    pub restarts: u32,
}

struct Queue {
    pending: VecDeque<String>,
    stop: bool,
}

struct Inner {
    engine: Arc<Engine>,
    dir: Option<PathBuf>,
    capacity: usize,
    jobs: Mutex<BTreeMap<String, Job>>,
    queue: Mutex<Queue>,
    ready: Condvar,
    changed: Condvar,
    next_id: Mutex<u64>,
}

#[derive(Clone)]
pub struct JobManager {
    inner: Arc<Inner>,
}

fn job_number(id: &str) -> Option<u64> {
    id.strip_prefix("job-")?.parse().ok()
}

impl JobManager {
    /// Load saved jobs from `dir` (if any), re-queue unfinished ones and
    /// start `workers` threads.
    pub fn start(
        engine: Arc<Engine>,
        dir: Option<&Path>,
        workers: usize,
        capacity: usize,
    ) -> Result<Self, ServiceError> {
        let mut jobs = BTreeMap::new();
        if let Some(dir) = dir {
            fs::create_dir_all(dir).map_err(|e| io_err(dir.display(), e))?;
            for entry in fs::read_dir(dir).map_err(|e| io_err(dir.display(), e))? {
                let path = entry.map_err(|e| io_err(dir.display(), e))?.path();
                if path.extension().and_then(|e| e.to_str()) != Some("json") {
                    continue;
                }
                let text = fs::read_to_string(&path).map_err(|e| io_err(path.display(), e))?;
                let job: Job = serde_json::from_str(&text).map_err(|e| io_err(path.display(), e))?;
                jobs.insert(job.id.clone(), job);
            }
        }
        let next = jobs.keys().filter_map(|id| job_number(id)).max().unwrap_or(0) + 1;
        let mut pending: Vec<(u64, String)> = Vec::new();
        for job in jobs.values_mut() {
            if !job.state.finished() {
                if job.state == JobState::Running {
                    job.restarts += 1;
                }
                job.state = JobState::Queued;
                pending.push((job_number(&job.id).unwrap_or(0), job.id.clone()));
            }
        }
        pending.sort();
        let inner = Arc::new(Inner {
            engine,
            dir: dir.map(Path::to_path_buf),
            capacity,
            jobs: Mutex::new(jobs),
            queue: Mutex::new(Queue {
                pending: pending.into_iter().map(|p| p.1).collect(),
                stop: false,
            }),
            ready: Condvar::new(),
            changed: Condvar::new(),
            next_id: Mutex::new(next),
        });
        let m = Self { inner };
        for id in m.inner.queue.lock().expect("queue lock").pending.iter() {
            m.inner.save(&m.inner.jobs.lock().expect("jobs lock")[id])?;
        }
        for _ in 0..workers.max(1) {
            let inner = m.inner.clone();
            thread::spawn(move || inner.work());
        }
        Ok(m)
    }

    pub fn engine(&self) -> &Arc<Engine> {
        &self.inner.engine
    }

    pub fn submit(&self, keys: Vec<ScenarioKey>) -> Result<Job, ServiceError> {
        if keys.is_empty() {
            return Err(ServiceError::Usage("no scenario keys given".into()));
        }
        let mut queue = self.inner.queue.lock().expect("queue lock");
        if queue.pending.len() >= self.inner.capacity {
            return Err(ServiceError::Busy(format!("run queue is full ({} jobs)", self.inner.capacity)));
        }
        let id = {
            let mut n = self.inner.next_id.lock().expect("id lock");
            let id = format!("job-{:06}", *n);
            *n += 1;
            id
        };
        let job = Job {
            schema_version: SCHEMA_VERSION,
            id: id.clone(),
            keys,
            state: JobState::Queued,
            progress: 0.0,
            artifacts: BTreeMap::new(),
            error: None,
            restarts: 0,
        };
        self.inner.save(&job)?;
        self.inner.jobs.lock().expect("jobs lock").insert(id.clone(), job.clone());
        queue.pending.push_back(id);
        self.inner.ready.notify_one();
        Ok(job)
    }

    pub fn get(&self, id: &str) -> Option<Job> {
        self.inner.jobs.lock().expect("jobs lock").get(id).cloned()
    }

    /// Block until the job finishes or `timeout` passes.
    pub fn wait(&self, id: &str, timeout: Duration) -> Option<Job> {
        let deadline = Instant::now() + timeout;
        let mut jobs = self.inner.jobs.lock().expect("jobs lock");
        loop {
            let job = jobs.get(id)?;
            let left = deadline.saturating_duration_since(Instant::now());
            if job.state.finished() || left.is_zero() {
                return Some(job.clone());
            }
            jobs = self.inner.changed.wait_timeout(jobs, left).expect("jobs lock").0;
        }
    }

    /// Stop taking jobs; running ones finish in the background.
    pub fn shutdown(&self) {
        self.inner.queue.lock().expect("queue lock").stop = true;
        self.inner.ready.notify_all();
    }
}

impl Inner {
    fn save(&self, job: &Job) -> Result<(), ServiceError> {
        let Some(dir) = &self.dir else { return Ok(()) };
        let path = dir.join(format!("{}.json", job.id));
        let tmp = path.with_extension("tmp");
        fs::write(&tmp, serde_json::to_vec_pretty(job).expect("json")).map_err(|e| io_err(tmp.display(), e))?;
        fs::rename(&tmp, &path).map_err(|e| io_err(path.display(), e))
    }

    fn update(&self, id: &str, persist: bool, f: impl FnOnce(&mut Job)) {
        let mut jobs = self.jobs.lock().expect("jobs lock");
        let Some(job) = jobs.get_mut(id) else { return };
        f(job);
        if persist {
            if let Err(e) = self.save(job) {
                tracing::error!(job = id, error = %e, "cannot save job");
            }
        }
        self.changed.notify_all();
    }

    fn next(&self) -> Option<String> {
        let mut q = self.queue.lock().expect("queue lock");
        loop {
            if q.stop {
                return None;
            }
            if let Some(id) = q.pending.pop_front() {
                return Some(id);
            }
            q = self.ready.wait(q).expect("queue lock");
        }
    }

    fn work(&self) {
        while let Some(id) = self.next() {
            let Some(keys) = self.jobs.lock().expect("jobs lock").get(&id).map(|j| j.keys.clone()) else {
                continue;
            };
            self.update(&id, true, |j| j.state = JobState::Running);
            tracing::info!(job = %id, runs = keys.len(), "job started");
            let n = keys.len() as f64;
            let mut failed = None;
            for (i, key) in keys.iter().enumerate() {
                let progress = |f: f64| self.update(&id, false, |j| j.progress = (i as f64 + f.clamp(0.0, 1.0)) / n);
                match self.engine.run(key, Some(&progress)) {
                    Ok(r) => self.update(&id, true, |j| {
                        j.artifacts.insert(key.clone(), r.meta.content_hash.clone());
                        j.progress = (i + 1) as f64 / n;
                    }),
                    Err(e) => {
                        failed = Some(format!("{key}: {e}"));
                        break;
                    }
                }
            }
            match failed {
                None => self.update(&id, true, |j| {
                    j.state = JobState::Done;
                    j.progress = 1.0;
                }),
                Some(msg) => {
                    tracing::error!(job = %id, error = %msg, "job failed");
                    self.update(&id, true, |j| {
                        j.state = JobState::Failed;
                        j.error = Some(msg);
                    })
                }
            }
        }
    }
}
