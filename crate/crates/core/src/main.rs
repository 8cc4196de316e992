use clap::Parser;

use pourlab::harness::cli::{run, Cli};

fn main() {
    let cli = Cli::parse();
    if let Err(e) = run(cli) {
        eprintln!("pourlab: {e}");
        std::process::exit(e.exit_code());
    }
}
