fn main() {
    env_logger::Builder::from_env(
        env_logger::Env::new().filter_or("SKYLINK_LOG", "error"),
    )
    .init();
    std::process::exit(skylink::cli::dispatch(std::env::args_os()));
}
