//! CLI and HTTP front ends over the planning engine.

pub mod api;
pub mod artifacts;
pub mod cli;
pub mod engine;
pub mod error;
pub mod jobs;
pub mod project;
pub mod render;

use std::net::SocketAddr;
use std::sync::Arc;

use crate::api::{router, AppState};
use crate::engine::Engine;
use crate::error::{io_err, ServiceError, SCHEMA_VERSION};
use crate::jobs::JobManager;

/// Job files live under the registry so they travel with the runs.
pub fn job_dir(engine: &Engine) -> Option<std::path::PathBuf> {
    engine.registry.dir().map(|d| d.join("jobs"))
}

/// Serve until interrupted. Prints the bound address as a JSON line on
/// stdout once listening.
pub fn serve(engine: Arc<Engine>, bind: &str, queue: usize, workers: usize) -> Result<(), ServiceError> {
    let port = api::port_from_env()?;
    let addr: SocketAddr = format!("{bind}:{port}")
        .parse()
        .map_err(|_| ServiceError::Usage(format!("bad bind address {bind}:{port}")))?;
    let jobs = JobManager::start(engine.clone(), job_dir(&engine).as_deref(), workers, queue)?;
    let rt = tokio::runtime::Builder::new_multi_thread()
        .enable_all()
        .build()
        .map_err(|e| io_err("runtime", e))?;
    rt.block_on(async move {
        let listener = tokio::net::TcpListener::bind(addr).await.map_err(|e| io_err(addr, e))?;
        let local = listener.local_addr().map_err(|e| io_err(addr, e))?;
        println!("{}", serde_json::json!({"schema_version": SCHEMA_VERSION, "listening": local.to_string()}));
        tracing::info!(%local, "listening");
        let app = router(AppState { jobs: jobs.clone() });
        axum::serve(listener, app)
            .with_graceful_shutdown(async {
                let _ = tokio::signal::ctrl_c().await;
            })
            .await
            .map_err(|e| io_err("server", e))?;
        jobs.shutdown();
        Ok(())
    })
}
