#[tokio::main]
async fn main() {
    tracing_subscriber::fmt()
        .with_env_filter(tracing_subscriber::EnvFilter::try_from_default_env().unwrap_or_else(|_| "info".into()))
        .with_writer(std::io::stderr)
        .init();
    let code = scideator_service::cli::main_with(std::env::args_os(), &mut std::io::stdout(), &mut std::io::stderr()).await;
    std::process::exit(code);
}
