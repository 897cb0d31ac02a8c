use std::process::exit;

use priordec::cli::{self, CliError};

fn main() {
    env_logger::init();
    let config = match cli::parse_config(std::env::args_os()) {
        Ok(config) => config,
        // clap handles help/version (exit 0) and usage errors (exit 2).
        Err(CliError::Usage(err)) => err.exit(),
        Err(err @ CliError::Invalid(_)) => {
            eprintln!("error: {err}");
            exit(2);
        }
    };
    if let Err(err) = cli::execute(&config) {
        eprintln!("error: {err:#}");
        exit(1);
    }
}
