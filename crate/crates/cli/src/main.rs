use clap::Parser;
use dcm_cli::{effective_config, run, Cli};
use std::process::ExitCode;

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = effective_config(&cli).and_then(|cfg| run(cli.command, &cfg));
    match result {
        Ok(summary) => {
            if summary.get("command").and_then(|c| c.as_str()) != Some("config") {
                println!("{}", serde_json::to_string_pretty(&summary).expect("summary serializes"));
            }
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("dcm: {e}");
            ExitCode::from(e.class.exit_code() as u8)
        }
    }
}
