use clap::Parser;
use tracing_subscriber::EnvFilter;
use uf_cli::{run, Cli};

fn main() {
    let cli = Cli::parse();
    tracing_subscriber::fmt()
        .with_env_filter(EnvFilter::try_from_default_env().unwrap_or_else(|_| EnvFilter::new("info")))
        .with_writer(std::io::stderr)
        .init();
    if let Err(e) = run(&cli, &mut std::io::stdout().lock()) {
        eprintln!("uf: {e}");
        std::process::exit(e.exit_code());
    }
}
