use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;

use qgas_spin::config::RawConfig;
use qgas_spin::runner::{exit_code, run, VALIDATION_FAILED};
use qgas_spin::Error;

/// Collective-spin fluctuations and singlet witnesses of ideal quantum gases.
#[derive(Debug, Parser)]
#[command(name = "qgas-spin", version)]
struct Cli {
    /// Flat `key = value` configuration file.
    #[arg(long)]
    config: Option<PathBuf>,
    /// freespace, trap, lattice, validate or threshold.
    #[arg(long)]
    workflow: Option<String>,
    /// Output file (lattice runs derive two sibling files from it).
    #[arg(long)]
    out: Option<PathBuf>,
    /// csv or json.
    #[arg(long)]
    format: Option<String>,
    /// Seed for the validation sampler.
    #[arg(long)]
    seed: Option<u64>,
    /// Extra `key=value` overrides, applied last.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    overrides: Vec<String>,
}

fn load(cli: &Cli) -> Result<RawConfig, Error> {
    let mut raw = match &cli.config {
        Some(path) => {
            let text = std::fs::read_to_string(path)
                .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
            RawConfig::parse(&text)?
        }
        None => RawConfig::default(),
    };
    if let Some(w) = &cli.workflow {
        raw.set("workflow", w)?;
    }
    if let Some(o) = &cli.out {
        raw.set("output", &o.display().to_string())?;
    }
    if let Some(f) = &cli.format {
        raw.set("format", f)?;
    }
    if let Some(s) = cli.seed {
        raw.set("seed", &s.to_string())?;
    }
    for item in &cli.overrides {
        let (k, v) =
            item.split_once('=').ok_or_else(|| Error::Config(format!("--set expects KEY=VALUE, got `{item}`")))?;
        raw.set(k.trim(), v.trim())?;
    }
    Ok(raw)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = load(&cli).and_then(|raw| raw.resolve()).and_then(|cfg| run(&cfg));
    match result {
        Ok(summary) => {
            for f in &summary.files {
                println!("wrote {}", f.display());
            }
            if summary.failures > 0 {
                eprintln!("validation: {} failed comparisons", summary.failures);
                return ExitCode::from(VALIDATION_FAILED as u8);
            }
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e) as u8)
        }
    }
}
