mod config;
mod run;

use std::process::ExitCode;

use clap::Parser;
use gaugetn::Error;

use config::Cli;
use run::Failure;

const EXIT_VALIDATION: u8 = 2;
const EXIT_MISMATCH: u8 = 3;
const EXIT_BUDGET: u8 = 4;

fn main() -> ExitCode {
    let cli = Cli::parse();
    let cfg = match config::load(cli) {
        Ok(c) => c,
        Err(e) => return report(Failure::Lib(e)),
    };
    if let Some(n) = cfg.opts.workers {
        if n == 0 {
            return report(Failure::Lib(Error::Validation("--workers must be at least 1".into())));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .expect("thread pool is configured once");
    }
    match run::execute(&cfg) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => report(f),
    }
}

fn report(f: Failure) -> ExitCode {
    let code = match &f {
        Failure::Lib(Error::Budget(_)) => EXIT_BUDGET,
        Failure::Lib(_) | Failure::Io(_) => EXIT_VALIDATION,
        Failure::Mismatch(_) => EXIT_MISMATCH,
    };
    match f {
        Failure::Lib(e) => eprintln!("gaugetn: {e}"),
        Failure::Io(e) => eprintln!("gaugetn: i/o error: {e}"),
        Failure::Mismatch(m) => eprintln!("gaugetn: verification failed: {}", m.0),
    }
    ExitCode::from(code)
}
