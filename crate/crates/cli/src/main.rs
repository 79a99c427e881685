use std::process::ExitCode;

use clap::Parser;
use linsel_cli::app::UsageError;
use linsel_cli::Cli;
use serde_json::json;

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match linsel_cli::run(cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(err) => {
            let usage = err.downcast_ref::<UsageError>().is_some();
            let chain: Vec<String> = err.chain().skip(1).map(|e| e.to_string()).collect();
            let kind = if usage { "usage" } else { "error" };
            let obj =
                json!({ "error": { "kind": kind, "message": err.to_string(), "causes": chain } });
            eprintln!("{obj}");
            ExitCode::from(if usage { 2 } else { 1 })
        }
    }
}
