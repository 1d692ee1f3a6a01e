use std::process::ExitCode;

use vemrcp_cli::{run_main, THREADS_ENV};

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let threads = std::env::var(THREADS_ENV).ok();
    let code = run_main(
        std::env::args_os(),
        threads.as_deref(),
        &mut std::io::stdout().lock(),
        &mut std::io::stderr().lock(),
    );
    ExitCode::from(code)
}
