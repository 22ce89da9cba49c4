#![allow(dead_code)]

use std::path::{Path, PathBuf};
use std::process::{Command, Output};
use std::sync::Arc;

use axum::body::Body;
use axum::http::{Request, StatusCode};
use bluegreen_core::fixtures::SyntheticOptions;
use bluegreen_service::api::{router, AppState};
use bluegreen_service::engine::Engine;
use bluegreen_service::jobs::JobManager;
use bluegreen_service::project::write_demo;
use http_body_util::BodyExt;
use serde_json::Value;
use tower::ServiceExt;

pub fn demo(dir: &Path) -> PathBuf {
    write_demo(dir, &SyntheticOptions::coarse()).unwrap()
}

pub fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_bluegreen"))
}

pub fn cli(project: &Path, args: &[&str]) -> Output {
    bin().arg("--project").arg(project).args(args).output().unwrap()
}

pub fn stdout_json(o: &Output) -> Value {
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    serde_json::from_slice(&o.stdout).unwrap()
}

/// Last stderr line parsed as the error document.
pub fn stderr_json(o: &Output) -> Value {
    let text = String::from_utf8_lossy(&o.stderr);
    serde_json::from_str(text.trim().lines().last().unwrap()).unwrap()
}

pub struct Api {
    pub app: axum::Router,
    pub jobs: JobManager,
}

impl Api {
    pub fn start(project: &Path, workers: usize) -> Self {
        let engine = Arc::new(Engine::open(project, None).unwrap());
        let jobs = JobManager::start(engine.clone(), bluegreen_service::job_dir(&engine).as_deref(), workers, 16).unwrap();
        Self {
            app: router(AppState { jobs: jobs.clone() }),
            jobs,
        }
    }

    pub async fn call(&self, method: &str, uri: &str, body: Option<Value>) -> (StatusCode, Vec<u8>) {
        let req = Request::builder().method(method).uri(uri);
        let req = match body {
            Some(b) => req
                .header("content-type", "application/json")
                .body(Body::from(serde_json::to_vec(&b).unwrap())),
            None => req.body(Body::empty()),
        }
        .unwrap();
        let resp = self.app.clone().oneshot(req).await.unwrap();
        let status = resp.status();
        (status, resp.into_body().collect().await.unwrap().to_bytes().to_vec())
    }

    pub async fn json(&self, method: &str, uri: &str, body: Option<Value>) -> (StatusCode, Value) {
        let (s, b) = self.call(method, uri, body).await;
        (s, serde_json::from_slice(&b).unwrap())
    }

    /// Submit keys and block until the job finishes.
    pub async fn run(&self, keys: &[&str]) -> Value {
        let (s, v) = self.json("POST", "/runs", Some(serde_json::json!({ "keys": keys }))).await;
        assert_eq!(s, StatusCode::ACCEPTED, "{v}");
        let id = v["job_id"].as_str().unwrap().to_string();
        let jobs = self.jobs.clone();
        tokio::task::spawn_blocking(move || jobs.wait(&id, std::time::Duration::from_secs(600)))
            .await
            .unwrap();
        let (_, job) = self.json("GET", &format!("/runs/{}", v["job_id"].as_str().unwrap()), None).await;
        job
    }
}
