//! HTTP service over the cached metric fields of one or more cities.
//!
//! Every city is a directory under the data root (see `uf_core::store`).
//! Structured payloads are JSON; `/raster` returns
//! `[u32 LE header length][JSON header][f32 LE values]`. Errors are
//! `{"code", "message"}` with 404 for unknown names and 422 for bad input.

pub mod error;
mod extract;
pub mod params;
pub mod routes;
pub mod snapshot;

use std::net::SocketAddr;

pub use error::{ApiError, ApiResult};
pub use routes::raster::{decode as decode_raster, RasterHeader};
pub use routes::router;
pub use snapshot::{AppState, CityData, Snapshot};

pub const DATA_DIR_ENV: &str = "UF_DATA_DIR";
pub const PORT_ENV: &str = "UF_PORT";
pub const DEFAULT_PORT: u16 = 8080;

/// Serves `state` on `addr` until ctrl-c.
pub async fn serve(addr: SocketAddr, state: AppState) -> std::io::Result<()> {
    let listener = tokio::net::TcpListener::bind(addr).await?;
    tracing::info!(addr = %listener.local_addr()?, data = %state.data_dir().display(), "listening");
    axum::serve(listener, router(state))
        .with_graceful_shutdown(async {
            let _ = tokio::signal::ctrl_c().await;
        })
        .await
}
