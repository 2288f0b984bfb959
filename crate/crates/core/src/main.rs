use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::process::ExitCode;

use clap::Parser;
use ebnc::cli::{exit_code, run, RunConfig};

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::new().filter("EBNC_LOG"))
        .target(env_logger::Target::Stderr)
        .init();
    let cfg = RunConfig::parse();
    let result = match &cfg.out {
        Some(path) => File::create(path)
            .map_err(ebnc::Error::from)
            .and_then(|f| run(&cfg, &mut BufWriter::new(f))),
        None => run(&cfg, &mut BufWriter::new(io::stdout().lock())),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            let _ = writeln!(io::stderr(), "error: {e}");
            ExitCode::from(exit_code(&e) as u8)
        }
    }
}
