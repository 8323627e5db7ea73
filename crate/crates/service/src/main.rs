use std::net::SocketAddr;
use std::sync::Arc;
use std::time::Duration;

use clap::Parser;
use dataprep_service::{router, AppState, ServiceConfig, SystemClock};

#[derive(Parser)]
#[command(name = "dataprep-service", version, about = "Serve the dataprep session API")]
struct Args {
    #[arg(long, default_value = "127.0.0.1:8080")]
    addr: SocketAddr,
    /// Largest accepted upload.
    #[arg(long, default_value_t = 100)]
    max_upload_mb: usize,
    /// Idle time after which a session expires.
    #[arg(long, default_value_t = 60)]
    idle_minutes: u64,
}

#[tokio::main]
async fn main() -> std::io::Result<()> {
    let args = Args::parse();
    let config = ServiceConfig {
        max_upload_bytes: args.max_upload_mb * 1024 * 1024,
        idle_timeout: Duration::from_secs(args.idle_minutes * 60),
        ..ServiceConfig::default()
    };
    let state = Arc::new(AppState::new(config, Arc::new(SystemClock)));
    let sweeper = state.clone();
    tokio::spawn(async move {
        let mut tick = tokio::time::interval(Duration::from_secs(60));
        loop {
            tick.tick().await;
            sweeper.store.sweep();
        }
    });
    let listener = tokio::net::TcpListener::bind(args.addr).await?;
    eprintln!("dataprep-service listening on {}", listener.local_addr()?);
    axum::serve(listener, router(state)).await
}
