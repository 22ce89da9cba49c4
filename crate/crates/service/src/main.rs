fn main() {
    let serving = std::env::args().skip(1).any(|a| a == "serve");
    tracing_subscriber::fmt()
        .with_writer(std::io::stderr)
        .with_max_level(if serving { tracing::Level::INFO } else { tracing::Level::WARN })
        .with_target(false)
        .init();
    std::process::exit(bluegreen_service::cli::main_with_args(std::env::args_os()));
}
