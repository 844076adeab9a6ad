use std::io::Write;
use std::net::SocketAddr;
use std::process::ExitCode;

use anet::cli::{execute, Cli, Command};
use clap::Parser;

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Command::Serve { port, host } = cli.command {
        let runtime = tokio::runtime::Runtime::new().expect("tokio runtime");
        return match runtime.block_on(anet::serve(SocketAddr::new(host, port))) {
            Ok(()) => ExitCode::SUCCESS,
            Err(e) => {
                eprintln!("error: {e}");
                ExitCode::FAILURE
            }
        };
    }
    match execute(&cli.command) {
        Ok(out) => {
            let _ = std::io::stdout().write_all(out.as_bytes());
            ExitCode::SUCCESS
        }
        Err(failure) => {
            for line in failure.0 {
                eprintln!("error: {line}");
            }
            ExitCode::FAILURE
        }
    }
}
