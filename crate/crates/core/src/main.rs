use std::io;
use std::process::ExitCode;

use momentum_margin::cli::{run_cli, THREADS_ENV};

fn main() -> ExitCode {
    if let Some(threads) = std::env::var(THREADS_ENV).ok().and_then(|v| v.trim().parse::<usize>().ok()) {
        if threads > 0 {
            // the global pool can only be configured once; a failure here just keeps the default
            let _ = rayon::ThreadPoolBuilder::new().num_threads(threads).build_global();
        }
    }
    let code = run_cli(std::env::args_os(), &mut io::stdout().lock(), &mut io::stderr().lock());
    ExitCode::from(code as u8)
}
