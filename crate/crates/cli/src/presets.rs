//! Scenario presets bundled with the binary.

use crate::config::ScenarioConfig;
use crate::error::{CliError, Result};

pub const PRESETS: &[(&str, &str)] = &[
    ("ne8", include_str!("../presets/ne8.json")),
    ("siv", include_str!("../presets/siv.json")),
    ("nv", include_str!("../presets/nv.json")),
    ("ne8-short", include_str!("../presets/ne8-short.json")),
    ("siv-short", include_str!("../presets/siv-short.json")),
    ("ne8-hbt", include_str!("../presets/ne8-hbt.json")),
    ("siv-hbt", include_str!("../presets/siv-hbt.json")),
    ("fiber", include_str!("../presets/fiber.json")),
    ("terrestrial", include_str!("../presets/terrestrial.json")),
    ("uplink", include_str!("../presets/uplink.json")),
    ("downlink", include_str!("../presets/downlink.json")),
];

pub fn names() -> impl Iterator<Item = &'static str> {
    PRESETS.iter().map(|(n, _)| *n)
}

pub fn preset(name: &str) -> Result<ScenarioConfig> {
    let (_, text) = PRESETS
        .iter()
        .find(|(n, _)| *n == name)
        .ok_or_else(|| {
            let known: Vec<_> = names().collect();
            CliError::Config(format!("unknown preset `{name}` (known: {})", known.join(", ")))
        })?;
    ScenarioConfig::parse(text)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn every_preset_parses() {
        for name in names() {
            preset(name).unwrap_or_else(|e| panic!("{name}: {e}"));
        }
        assert!(preset("nope").is_err());
    }
}
