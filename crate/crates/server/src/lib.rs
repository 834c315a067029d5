//! HTTP service over collections, components and pipeline runs.
//!
//! All API routes live under `/api/v1` and answer with JSON, errors
//! included. A static asset directory, when configured, is served at `/`.

mod error;
mod routes;
mod state;

use std::future::Future;
use std::net::{IpAddr, Ipv4Addr, SocketAddr};
use std::path::PathBuf;
use std::sync::Arc;

use axum::extract::DefaultBodyLimit;
use axum::routing::{delete, get, post, put};
use axum::Router;
use thiserror::Error;
use tokio::net::TcpListener;
use tower_http::services::ServeDir;

use annotium::component::System;
use annotium::engine::Engine;
use annotium::storage::StorageError;

pub use error::{ApiError, ApiResult};
pub use state::AppState;

pub const DEFAULT_PORT: u16 = 7720;
pub const DEFAULT_MAX_UPLOAD: usize = 16 * 1024 * 1024;

#[derive(Clone, Debug)]
pub struct ServerConfig {
    pub bind: IpAddr,
    /// 0 picks a free port.
    pub port: u16,
    pub root: PathBuf,
    pub max_upload: usize,
    pub static_dir: Option<PathBuf>,
}

impl ServerConfig {
    pub fn new(root: impl Into<PathBuf>) -> Self {
        ServerConfig {
            bind: IpAddr::V4(Ipv4Addr::LOCALHOST),
            port: DEFAULT_PORT,
            root: root.into(),
            max_upload: DEFAULT_MAX_UPLOAD,
            static_dir: None,
        }
    }
}

#[derive(Debug, Error)]
pub enum ServeError {
    #[error("cannot bind {addr}: {source}")]
    Bind {
        addr: SocketAddr,
        #[source]
        source: std::io::Error,
    },
    #[error("collection root {path} is not usable: {message}")]
    Root { path: PathBuf, message: String },
    #[error(transparent)]
    Storage(#[from] StorageError),
    #[error("server failed: {0}")]
    Io(#[from] std::io::Error),
}

pub fn router(state: Arc<AppState>, config: &ServerConfig) -> Router {
    let docs = "/collections/{c}/documents/{d}";
    let api = Router::new()
        .route("/collections", post(routes::create_collection).get(routes::list_collections))
        .route(
            "/collections/{c}/documents",
            post(routes::upload).get(routes::list_documents),
        )
        .route(docs, get(routes::get_document).delete(routes::delete_document))
        .route(
            &format!("{docs}/annotations"),
            get(routes::query).post(routes::create_annotation),
        )
        .route(&format!("{docs}/annotations/{{a}}"), delete(routes::delete_annotation))
        .route(
            &format!("{docs}/annotations/{{a}}/attributes"),
            put(routes::put_attributes),
        )
        .route(
            &format!("{docs}/annotations/{{a}}/attributes/{{name}}"),
            delete(routes::delete_attribute),
        )
        .route(&format!("{docs}/run"), post(routes::run))
        .route("/components", get(routes::components))
        .route("/systems", get(routes::systems))
        .fallback(routes::not_found);
    let app = Router::new()
        .route("/healthz", get(routes::healthz))
        .nest("/api/v1", api)
        .layer(DefaultBodyLimit::max(config.max_upload))
        .with_state(state);
    match &config.static_dir {
        Some(dir) => app.fallback_service(ServeDir::new(dir)),
        None => app.fallback(routes::not_found),
    }
}

fn check_root(config: &ServerConfig) -> Result<(), ServeError> {
    let root_err = |message: String| ServeError::Root {
        path: config.root.clone(),
        message,
    };
    std::fs::create_dir_all(&config.root).map_err(|e| root_err(e.to_string()))?;
    // Writable is checked by writing, not by inspecting mode bits.
    let probe = config.root.join(".annotium-write-probe");
    std::fs::write(&probe, b"").map_err(|e| root_err(e.to_string()))?;
    let _ = std::fs::remove_file(&probe);
    Ok(())
}

/// Systems offered by name through the API.
pub fn builtin_systems() -> Vec<System> {
    vec![annotium::builtin::standard_system(None)]
}

/// A bound, running service.
pub struct ServerHandle {
    pub addr: SocketAddr,
    shutdown: Option<tokio::sync::oneshot::Sender<()>>,
    task: tokio::task::JoinHandle<std::io::Result<()>>,
}

impl ServerHandle {
    /// Stops accepting connections and waits for in-flight requests,
    /// including their saves, to finish.
    pub async fn shutdown(mut self) -> std::io::Result<()> {
        if let Some(tx) = self.shutdown.take() {
            let _ = tx.send(());
        }
        self.task.await.unwrap_or_else(|e| Err(std::io::Error::other(e)))
    }
}

/// Loads the collections under the configured root and starts serving.
pub async fn serve(config: ServerConfig, engine: Engine) -> Result<ServerHandle, ServeError> {
    serve_with(config, engine, builtin_systems()).await
}

pub async fn serve_with(
    config: ServerConfig,
    engine: Engine,
    systems: Vec<System>,
) -> Result<ServerHandle, ServeError> {
    check_root(&config)?;
    let root = config.root.clone();
    let state = tokio::task::spawn_blocking(move || AppState::load(&root, engine, systems))
        .await
        .map_err(|e| ServeError::Root {
            path: config.root.clone(),
            message: e.to_string(),
        })??;
    let addr = SocketAddr::new(config.bind, config.port);
    let listener = TcpListener::bind(addr)
        .await
        .map_err(|source| ServeError::Bind { addr, source })?;
    let addr = listener.local_addr().map_err(|source| ServeError::Bind { addr, source })?;
    let app = router(Arc::new(state), &config);
    let (tx, rx) = tokio::sync::oneshot::channel::<()>();
    let task = tokio::spawn(async move {
        axum::serve(listener, app)
            .with_graceful_shutdown(async {
                let _ = rx.await;
            })
            .await
    });
    tracing::info!("listening on http://{addr}");
    Ok(ServerHandle {
        addr,
        shutdown: Some(tx),
        task,
    })
}

/// Serves until `signal` resolves.
pub async fn serve_until(
    config: ServerConfig,
    engine: Engine,
    signal: impl Future<Output = ()>,
) -> Result<(), ServeError> {
    let handle = serve(config, engine).await?;
    signal.await;
    Ok(handle.shutdown().await?)
}
