//! HTTP session service and command-line driver for action networks.

pub mod api;
pub mod cli;
pub mod session;

pub use api::router;
pub use session::Store;

/// Serves the API on `addr` until the process is stopped.
pub async fn serve(addr: std::net::SocketAddr) -> std::io::Result<()> {
    let listener = tokio::net::TcpListener::bind(addr).await?;
    eprintln!("listening on http://{}", listener.local_addr()?);
    axum::serve(listener, router(Store::default())).await
}
