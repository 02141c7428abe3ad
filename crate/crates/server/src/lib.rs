//! Persistence and the HTTP API.
//!
//! Documents live as `<doc_id>.treedoc.json` files under one directory. The
//! service keeps each open document behind its own lock; every mutation is
//! written back before the response is sent.

pub mod api;
pub mod store;

use std::net::SocketAddr;
use std::sync::Arc;

pub use api::{router, ApiError, AppState};
pub use store::{load_document, save_document, save_with_hook, DocumentStore, StoreError};

pub const DEFAULT_ADDR: &str = "127.0.0.1:7340";

/// `TREEDOC_ADDR`, or the default.
pub fn addr_from_env() -> String {
    std::env::var("TREEDOC_ADDR").ok().filter(|s| !s.is_empty()).unwrap_or_else(|| DEFAULT_ADDR.to_string())
}

/// Binds `addr` and serves until the process ends.
pub async fn serve(addr: SocketAddr, state: Arc<AppState>) -> std::io::Result<()> {
    let listener = tokio::net::TcpListener::bind(addr).await?;
    axum::serve(listener, router(state)).await
}
