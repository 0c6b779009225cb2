//! HTTP API for the pupillometry cleaning platform.
//!
//! All endpoints live under `/api/v1` and speak JSON; failures carry
//! `{"error": {"code", "message"}}` with stable codes.

pub mod config;
pub mod error;
pub mod routes;
pub mod state;

pub use config::ServiceConfig;
pub use error::ApiError;
pub use routes::{router, API_PREFIX};
pub use state::AppState;

/// Serves until the process is stopped.
pub async fn serve(config: ServiceConfig) -> std::io::Result<()> {
    let state = AppState::open(&config).map_err(std::io::Error::other)?;
    let app = router(state, config.max_upload_bytes);
    let listener = tokio::net::TcpListener::bind(&config.listen).await?;
    log::info!("listening on {}", listener.local_addr()?);
    axum::serve(listener, app).await
}

/// Blocking entry point for binaries.
pub fn run(config: ServiceConfig) -> std::io::Result<()> {
    tokio::runtime::Builder::new_multi_thread()
        .enable_all()
        .build()?
        .block_on(serve(config))
}
