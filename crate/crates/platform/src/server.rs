//! Running the API: bind, serve until a shutdown signal, then snapshot.

use std::future::Future;

use tokio::net::TcpListener;

use crate::api::{router, system_clock, AppState, SharedState};
use crate::config::Config;
use crate::error::{PlatformError, Result};

/// Serves on `listener` until `shutdown` resolves. In-flight requests finish
/// first; the snapshot is written after the last of them.
pub async fn serve_on(listener: TcpListener, state: SharedState, shutdown: impl Future<Output = ()> + Send + 'static) -> Result<()> {
    let address = listener.local_addr().map(|a| a.to_string()).unwrap_or_default();
    axum::serve(listener, router(state.clone()))
        .with_graceful_shutdown(shutdown)
        .await
        .map_err(|e| PlatformError::io(address, e))?;
    state.flush()
}

pub async fn serve(config: Config) -> Result<()> {
    let state = AppState::open(&config, system_clock())?;
    let listener = TcpListener::bind(&config.bind)
        .await
        .map_err(|e| PlatformError::Bind { address: config.bind.clone(), message: e.to_string() })?;
    tracing::info!(address = %config.bind, storage = %config.storage.display(), "serving");
    serve_on(listener, state, shutdown_signal()).await?;
    tracing::info!("event log flushed, bye");
    Ok(())
}

async fn shutdown_signal() {
    let interrupt = async {
        let _ = tokio::signal::ctrl_c().await;
    };
    #[cfg(unix)]
    let terminate = async {
        match tokio::signal::unix::signal(tokio::signal::unix::SignalKind::terminate()) {
            Ok(mut s) => {
                s.recv().await;
            }
            Err(_) => std::future::pending::<()>().await,
        }
    };
    #[cfg(not(unix))]
    let terminate = std::future::pending::<()>();
    tokio::select! {
        _ = interrupt => {}
        _ = terminate => {}
    }
}
