use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use sps_cli::{execute, load_config, presets, schema, CliError, Command, Format};

#[derive(Parser)]
#[command(name = "cavity-sps", version, about = "Cavity-enhanced diamond single-photon sources and BB84 links")]
struct Cli {
    #[command(subcommand)]
    command: Cmd,
    /// Scenario configuration (JSON).
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Bundled preset instead of a configuration file.
    #[arg(long, global = true)]
    preset: Option<String>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Directory for the output file; standard output when absent.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Worker threads; all cores when absent.
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[arg(long, global = true, value_enum, default_value_t = OutputFormat::Csv)]
    format: OutputFormat,
}

#[derive(Clone, Copy, ValueEnum)]
enum OutputFormat {
    Csv,
    Json,
}

#[derive(Subcommand)]
enum Cmd {
    /// Populations and waveguide flux through one excitation cycle.
    Emit,
    /// P1 against cavity quality factor.
    SweepQ,
    /// P1 and Pm over a (pulse width, pump rate) grid with closed-form bounds.
    SweepExcitation,
    /// Quantum-trajectory HBT coincidence histogram.
    Hbt,
    /// Secure key rates over loss, distance or altitude.
    Keyrate,
    /// Tables I-III as JSON.
    Tables,
    /// Print the configuration JSON Schema.
    Schema,
    /// List bundled presets.
    Presets,
}

fn run(cli: Cli) -> Result<(), CliError> {
    let command = match cli.command {
        Cmd::Schema => {
            print!("{}", schema());
            return Ok(());
        }
        Cmd::Presets => {
            for name in presets::names() {
                println!("{name}");
            }
            return Ok(());
        }
        Cmd::Emit => Command::Emit,
        Cmd::SweepQ => Command::SweepQ,
        Cmd::SweepExcitation => Command::SweepExcitation,
        Cmd::Hbt => Command::Hbt,
        Cmd::Keyrate => Command::Keyrate,
        Cmd::Tables => Command::Tables,
    };
    if let Some(n) = cli.threads {
        if n == 0 {
            return Err(CliError::Config("--threads must be at least 1".into()));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| CliError::Config(e.to_string()))?;
    }
    let config = load_config(cli.config.as_deref(), cli.preset.as_deref())?;
    let format = match cli.format {
        OutputFormat::Csv => Format::Csv,
        OutputFormat::Json => Format::Json,
    };
    let rendered = execute(command, &config, cli.seed, format)?;
    match cli.out.or_else(|| config.output_dir.as_ref().map(PathBuf::from)) {
        Some(dir) => {
            std::fs::create_dir_all(&dir)?;
            std::fs::write(dir.join(&rendered.file_name), rendered.contents)?;
        }
        None => print!("{}", rendered.contents),
    }
    Ok(())
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("cavity-sps: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
