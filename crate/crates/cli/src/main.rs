use std::io;
use std::process::ExitCode;

use clap::Parser;

use geoinr_cli::{run, thread_cap, Cli};

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(thread_cap()).build_global() {
        eprintln!("warning: {e}");
    }
    let stdin = io::stdin();
    let stdout = io::stdout();
    match run(cli, &mut stdin.lock(), &mut stdout.lock()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
