//! Scenario runner for the `cavity-sps` command-line tool: JSON configuration,
//! bundled presets, parallel sweeps and deterministic CSV/JSON output.

pub mod commands;
pub mod config;
mod error;
pub mod link;
pub mod presets;
pub mod table;

use std::path::Path;

pub use config::ScenarioConfig;
pub use error::{CliError, Result};
pub use table::ResultTable;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Command {
    Emit,
    SweepQ,
    SweepExcitation,
    Hbt,
    Keyrate,
    Tables,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::Emit => "emit",
            Command::SweepQ => "sweep-q",
            Command::SweepExcitation => "sweep-excitation",
            Command::Hbt => "hbt",
            Command::Keyrate => "keyrate",
            Command::Tables => "tables",
        }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum Format {
    #[default]
    Csv,
    Json,
}

/// Rendered command output and its file name.
#[derive(Clone, Debug, PartialEq)]
pub struct Rendered {
    pub file_name: String,
    pub contents: String,
}

/// Read a configuration file, or a bundled preset by name.
pub fn load_config(path: Option<&Path>, preset: Option<&str>) -> Result<ScenarioConfig> {
    match (path, preset) {
        (Some(_), Some(_)) => Err(CliError::Config("give either --config or --preset".into())),
        (Some(p), None) => {
            let text = std::fs::read_to_string(p)
                .map_err(|e| CliError::Config(format!("{}: {e}", p.display())))?;
            ScenarioConfig::parse(&text)
        }
        (None, Some(name)) => presets::preset(name),
        (None, None) => Ok(ScenarioConfig::default()),
    }
}

/// Run `command`. The seed defaults to the configuration's, then 0.
/// `tables` always renders JSON.
pub fn execute(command: Command, config: &ScenarioConfig, seed: Option<u64>, format: Format) -> Result<Rendered> {
    let seed = seed.or(config.seed).unwrap_or(0);
    let table = match command {
        Command::Emit => commands::emit(config, seed)?,
        Command::SweepQ => commands::sweep_q(config, seed)?,
        Command::SweepExcitation => commands::sweep_excitation(config, seed)?,
        Command::Hbt => commands::hbt(config, seed)?,
        Command::Keyrate => commands::keyrate(config, seed)?,
        Command::Tables => {
            return Ok(Rendered {
                file_name: "tables.json".into(),
                contents: commands::tables(config, seed)?.to_json(),
            })
        }
    };
    Ok(match format {
        Format::Csv => Rendered {
            file_name: format!("{}.csv", command.name()),
            contents: table.to_csv()?,
        },
        Format::Json => Rendered {
            file_name: format!("{}.json", command.name()),
            contents: table.to_json(),
        },
    })
}

/// JSON Schema of [`ScenarioConfig`].
pub fn schema() -> String {
    let mut s = serde_json::to_string_pretty(&schemars::schema_for!(ScenarioConfig)).expect("schema serializes");
    s.push('\n');
    s
}
