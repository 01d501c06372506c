use std::net::SocketAddr;
use std::num::NonZeroUsize;

use clap::Parser;
use subsearch_service::{router, ServiceConfig};

/// Serves the sub-image search HTTP API.
#[derive(Debug, Parser)]
#[command(version)]
struct Args {
    #[arg(long, default_value = "127.0.0.1:8080")]
    addr: SocketAddr,
    /// Images kept in memory before the least recently used is dropped.
    #[arg(long, default_value = "16")]
    max_images: NonZeroUsize,
    /// Largest accepted upload in MiB.
    #[arg(long, default_value = "32")]
    max_upload_mib: usize,
    /// Origin allowed by CORS (default: any).
    #[arg(long)]
    allow_origin: Option<String>,
    /// Worker threads for searches (default: one per core).
    #[arg(long)]
    threads: Option<usize>,
}

#[tokio::main]
async fn main() -> std::io::Result<()> {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let args = Args::parse();
    if let Some(n) = args.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(std::io::Error::other)?;
    }
    let config = ServiceConfig {
        max_images: args.max_images,
        max_upload_bytes: args.max_upload_mib * 1024 * 1024,
        allow_origin: args.allow_origin,
    };
    let listener = tokio::net::TcpListener::bind(args.addr).await?;
    log::info!("listening on {}", listener.local_addr()?);
    axum::serve(listener, router(&config))
        .with_graceful_shutdown(async {
            let _ = tokio::signal::ctrl_c().await;
        })
        .await
}
