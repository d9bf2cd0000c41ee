mod args;
mod commands;
mod config;
mod table;

use std::process::ExitCode;

use serde_json::json;

fn error_code(e: &anyhow::Error) -> &'static str {
    for cause in e.chain() {
        if let Some(err) = cause.downcast_ref::<wfcarbon::Error>() {
            return err.code();
        }
        if let Some(err) = cause.downcast_ref::<commands::CliError>() {
            return err.code;
        }
    }
    "INTERNAL"
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();

    let cli = match config::parse(std::env::args_os().collect()) {
        Ok(cli) => cli,
        Err(e) => e.exit(),
    };
    match commands::run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            let record = json!({ "error": { "code": error_code(&e), "message": format!("{e:#}") } });
            eprintln!("{record}");
            ExitCode::FAILURE
        }
    }
}
