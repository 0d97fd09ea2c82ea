use std::process::ExitCode;

use clap::Parser;
use shgcat::{run_cli, Cli};

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match run_cli(&cli) {
        Ok(out) => {
            let dir = &out.manifest.config.out;
            println!(
                "{}: wrote {} table(s) and manifest.json to {} in {:.2} s",
                out.manifest.scenario,
                out.tables.len(),
                dir.display(),
                out.manifest.wall_time_seconds
            );
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
