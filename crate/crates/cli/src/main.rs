use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;
use qhd_lab::config::DEFAULT_OUTPUT_DIR;
use qhd_lab::{exit, parse_config, resolve_output_dir, run_stage, Stage, OUTPUT_ENV};
use qhd_lab_core::export::to_sorted_json;

/// Viscous–dispersive QHD shock profiles, Fredholm borders, point spectrum
/// and energy certificates.
#[derive(Debug, Parser)]
#[command(name = "qhd-lab", version)]
struct Cli {
    /// pipeline stage to run
    #[arg(value_enum)]
    stage: Stage,
    /// `key = value` run configuration
    #[arg(long)]
    config: PathBuf,
    /// output directory (overrides $QHD_LAB_OUTPUT and the config's output_dir)
    #[arg(long)]
    output: Option<PathBuf>,
    /// concurrent sweep members
    #[arg(long, default_value_t = 1)]
    jobs: usize,
}

fn write_error(dir: &std::path::Path, record: &serde_json::Value) {
    let text = match to_sorted_json(record) {
        Ok(t) => t,
        Err(_) => return,
    };
    if std::fs::create_dir_all(dir).is_ok() {
        let _ = std::fs::write(dir.join("error.json"), text);
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let env = std::env::var(OUTPUT_ENV).ok();

    let cfg = std::fs::read_to_string(&cli.config)
        .map_err(|e| format!("{}: {e}", cli.config.display()))
        .and_then(|text| parse_config(&text).map_err(|e| format!("{}: {e}", cli.config.display())));
    let cfg = match cfg {
        Ok(c) => c,
        Err(msg) => {
            eprintln!("error: {msg}");
            let dir = resolve_output_dir(cli.output.as_deref(), env.as_deref(), DEFAULT_OUTPUT_DIR.as_ref());
            write_error(&dir, &serde_json::json!({"error": "config", "message": msg, "stage": cli.stage.name()}));
            return ExitCode::from(exit::ERROR as u8);
        }
    };
    let dir = resolve_output_dir(cli.output.as_deref(), env.as_deref(), &cfg.output_dir);

    match run_stage(cli.stage, &cfg, &dir, cli.jobs) {
        Ok(outcomes) => {
            let mut pass = true;
            for o in &outcomes {
                for v in &o.verdicts {
                    if !v.pass {
                        pass = false;
                        eprintln!("[{}] {}", o.stage.name(), v.describe());
                    }
                }
            }
            println!("{} {}: {}", cli.stage.name(), if pass { "PASS" } else { "FAIL" }, dir.display());
            ExitCode::from(if pass { exit::PASS } else { exit::FAIL } as u8)
        }
        Err(e) => {
            eprintln!("error: {e}");
            write_error(&dir, &e.record(cli.stage));
            ExitCode::from(exit::ERROR as u8)
        }
    }
}
