use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, ValueEnum};
use nonlocal_wave_lab::io::{self, Run, RunConfig};
use nonlocal_wave_lab::Result;

#[derive(Clone, Copy, Debug, ValueEnum)]
enum Command {
    Wave,
    Evolve,
    Dc,
    Stability,
    Blowup,
    Exact,
}

/// Nonlocal nonlinear wave laboratory.
#[derive(Parser, Debug)]
#[command(version, about)]
struct Cli {
    #[arg(value_enum)]
    command: Command,
    /// JSON run configuration; built-in defaults when omitted.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output root (overrides `output_dir` and $NONLOCAL_WAVE_LAB_OUT).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Dot-path override, e.g. `--set wave.c=0.5`; repeatable.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    overrides: Vec<String>,
    /// Worker threads for curves and sweeps (default: all cores).
    #[arg(long)]
    workers: Option<usize>,
}

fn run(cli: &Cli) -> Result<PathBuf> {
    let cfg = match &cli.config {
        Some(p) => RunConfig::from_file(p, &cli.overrides)?,
        None => RunConfig::load(None, &cli.overrides)?,
    };
    let root = io::output_root(cli.out.as_deref(), &cfg);
    let (name, f): (&'static str, fn(&Run) -> Result<()>) = match cli.command {
        Command::Wave => ("wave", io::cmd_wave),
        Command::Evolve => ("evolve", io::cmd_evolve),
        Command::Dc => ("dc", io::cmd_dc),
        Command::Stability => ("stability", io::cmd_stability),
        Command::Blowup => ("blowup", io::cmd_blowup),
        Command::Exact => ("exact", io::cmd_exact),
    };
    let r = Run::new(name, cfg, &root, cli.workers)?;
    f(&r)?;
    Ok(r.dir)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(dir) => {
            println!("{}", dir.display());
            ExitCode::SUCCESS
        }
        Err(e) => {
            let (code, doc) = io::error_report(&e);
            eprintln!("{doc}");
            ExitCode::from(code as u8)
        }
    }
}
