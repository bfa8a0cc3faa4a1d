mod commands;
mod config;
mod output;
mod verify;

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use config::{Format, Loaded};

#[derive(Parser)]
#[command(name = "kuramoto", version, about = "Kuramoto oscillator and spin-model experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Integrate one system and record observables over time.
    Simulate(Common),
    /// Long-time order parameter, solver and expansion across a coupling grid.
    Sweep(Common),
    /// Relaxation of a single spin towards the mean field.
    Kink(Common),
    /// Run invariant suites; exits with status 1 if any check fails.
    Verify {
        #[command(flatten)]
        common: Common,
        /// Suite to run (repeatable): algebra, dynamics, energy, curl, solver, kink, gaudin, all.
        #[arg(long = "suite")]
        suites: Vec<String>,
    },
    /// Semiclassical pairing ground state of the mapped spectrum.
    Gaudin(Common),
}

#[derive(Args)]
struct Common {
    /// TOML config, or a previous CSV/JSON output to rerun from its manifest.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    /// Output file; stdout when absent.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum)]
    format: Option<Format>,
}

fn emit(common: &Common, loaded: &mut Loaded, command: &str, seed: u64, table: &output::Table, default: Format) -> anyhow::Result<()> {
    let out_path = common.out.clone().or_else(|| loaded.config.output.path.clone());
    let inferred = out_path.as_ref().and_then(|p| match p.extension().and_then(|e| e.to_str()) {
        Some("json") => Some(Format::Json),
        Some("csv") => Some(Format::Csv),
        _ => None,
    });
    let format = common.format.or(loaded.config.output.format).or(inferred).unwrap_or(default);
    loaded.config.seed = Some(seed);
    loaded.config.output.format = Some(format);
    let manifest = output::manifest(command, seed, &loaded.config, table);
    match out_path {
        Some(p) => {
            let file = File::create(&p).map_err(|e| anyhow::anyhow!("{}: {e}", p.display()))?;
            let mut w = BufWriter::new(file);
            output::write(&mut w, format, &manifest, table)?;
            w.flush()?;
        }
        None => {
            let stdout = std::io::stdout();
            let mut w = stdout.lock();
            output::write(&mut w, format, &manifest, table)?;
        }
    }
    Ok(())
}

fn run(cli: Cli) -> anyhow::Result<ExitCode> {
    let (common, name) = match &cli.command {
        Command::Simulate(c) => (c, "simulate"),
        Command::Sweep(c) => (c, "sweep"),
        Command::Kink(c) => (c, "kink"),
        Command::Verify { common, .. } => (common, "verify"),
        Command::Gaudin(c) => (c, "gaudin"),
    };
    let mut loaded = match &common.config {
        Some(p) => config::load(p)?,
        None if name == "verify" => Loaded::default_config(),
        None => anyhow::bail!("{name} needs --config <path>"),
    };
    loaded.validate()?;
    let seed = common.seed.or(loaded.config.seed).unwrap_or(0);
    let table = match &cli.command {
        Command::Simulate(_) => commands::simulate(&loaded, seed)?,
        Command::Sweep(_) => commands::sweep(&loaded, seed)?,
        Command::Kink(_) => commands::kink(&loaded, seed)?,
        Command::Gaudin(_) => commands::gaudin(&loaded, seed)?,
        Command::Verify { suites, .. } => {
            let selected = if suites.is_empty() { loaded.config.verify.suites.clone() } else { suites.clone() };
            let checks = verify::run(&selected, loaded.config.verify.samples, seed).map_err(anyhow::Error::msg)?;
            for c in checks.iter().filter(|c| !c.passed()) {
                eprintln!("FAIL {}.{}: {:?} (bound {} {:?})", c.suite, c.name, c.value, if c.at_least { ">=" } else { "<=" }, c.threshold);
            }
            let table = verify::table(&checks);
            emit(common, &mut loaded, name, seed, &table, Format::Json)?;
            return Ok(if checks.iter().all(verify::Check::passed) { ExitCode::SUCCESS } else { ExitCode::from(1) });
        }
    };
    emit(common, &mut loaded, name, seed, &table, Format::Csv)?;
    Ok(ExitCode::SUCCESS)
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
