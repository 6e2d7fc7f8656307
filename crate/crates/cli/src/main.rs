use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;

use polariton_cli::{
    parse_config_with, run_experiment, CliError, ExperimentKind, OutputFormat, Preset,
};

/// Polariton Bose-Hubbard simulator for coupled cavity arrays.
#[derive(Debug, Parser)]
#[command(name = "polariton-bh", version)]
struct Args {
    /// params, ground-scan, ramp or validate-micro
    kind: ExperimentKind,
    /// `key = value` experiment file; defaults apply when omitted
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output file (stdout when omitted)
    #[arg(long)]
    out: Option<PathBuf>,
    /// csv or json
    #[arg(long)]
    format: Option<OutputFormat>,
    /// toroidal-2005, pbg or none
    #[arg(long)]
    preset: Option<Preset>,
    /// Exit with status 2 when the polariton mapping fails its validity gate
    #[arg(long)]
    strict_validity: bool,
}

fn run(args: Args) -> Result<u8, CliError> {
    let text = match &args.config {
        Some(path) => std::fs::read_to_string(path)?,
        None => String::new(),
    };
    let mut config = parse_config_with(&text, args.preset)?;
    if let Some(kind) = config.kind {
        if kind != args.kind {
            return Err(CliError::Usage(format!(
                "config is for `{}` but `{}` was requested",
                kind.name(),
                args.kind.name()
            )));
        }
    }
    if let Some(format) = args.format {
        config.format = format;
    }
    if let Some(out) = args.out {
        config.out = Some(out);
    }

    let outcome = match &config.out {
        Some(path) => {
            let mut w = BufWriter::new(File::create(path)?);
            let outcome = run_experiment(&config, args.kind, &mut w)?;
            w.flush()?;
            outcome
        }
        None => {
            let mut w = io::stdout().lock();
            let outcome = run_experiment(&config, args.kind, &mut w)?;
            w.flush()?;
            outcome
        }
    };
    for warning in outcome.warnings() {
        eprintln!("warning: {warning}");
    }
    Ok(outcome.exit_code(args.strict_validity))
}

fn main() -> ExitCode {
    match run(Args::parse()) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}
