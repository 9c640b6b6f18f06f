use clap::Parser;

use jabberprobe_cli::{run, Cli};

fn main() {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = Cli::parse();
    if let Err(err) = run(&cli) {
        eprintln!("jabberprobe: {err}");
        std::process::exit(err.exit_code());
    }
}
