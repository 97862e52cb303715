use clap::Parser;

fn main() {
    env_logger::Builder::from_env(env_logger::Env::new().filter_or("R2G_LOG", "warn")).init();
    let cli = r2g_cli::Cli::parse();
    if let Err(e) = r2g_cli::run(cli) {
        eprintln!("r2g: {e}");
        std::process::exit(e.exit_code());
    }
}
