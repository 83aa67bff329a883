//! Scenario ingestion with provenance.

use std::fs;
use std::path::{Path, PathBuf};

use ltlnav_core::fixtures;
use ltlnav_core::workspace::Scenario;

use crate::CliError;

/// Highest config schema version this build understands.
pub const SCHEMA_VERSION: u64 = 1;

/// A parsed scenario plus where it came from.
#[derive(Debug, Clone)]
pub struct LoadedScenario {
    pub scenario: Scenario,
    /// `None` for bundled fixtures.
    pub path: Option<PathBuf>,
    pub schema: u64,
    pub source: String,
}

/// Loads `builtin:NAME` from the bundled fixtures or a JSON file from disk.
pub fn load(spec: &str) -> Result<LoadedScenario, CliError> {
    if let Some(name) = spec.strip_prefix("builtin:") {
        let text = fixtures::ALL
            .iter()
            .find(|(n, _)| *n == name)
            .map(|(_, t)| *t)
            .ok_or_else(|| CliError::Input(format!("no bundled fixture named {name:?}")))?;
        return parse(text, None, spec);
    }
    let path = Path::new(spec);
    let text = fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    parse(&text, Some(path.to_path_buf()), spec)
}

/// Parses scenario text. An optional top-level `"schema"` number selects the
/// format version and defaults to 1.
pub fn parse(text: &str, path: Option<PathBuf>, source: &str) -> Result<LoadedScenario, CliError> {
    let mut doc: serde_json::Value =
        serde_json::from_str(text).map_err(|e| CliError::Input(format!("{source}: {e}")))?;
    let schema = match doc.as_object_mut().and_then(|m| m.remove("schema")) {
        None => 1,
        Some(v) => v
            .as_u64()
            .filter(|&v| (1..=SCHEMA_VERSION).contains(&v))
            .ok_or_else(|| CliError::Input(format!("{source}: unsupported schema version {v}")))?,
    };
    let scenario = Scenario::from_json(&doc.to_string()).map_err(|e| CliError::Input(format!("{source}: {e}")))?;
    scenario.validate(false).map_err(|e| CliError::Input(format!("{source}: {e}")))?;
    Ok(LoadedScenario { scenario, path, schema, source: source.to_string() })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn builtins_load() {
        for (name, _) in fixtures::ALL {
            let s = load(&format!("builtin:{name}")).unwrap();
            assert_eq!(s.schema, 1);
            assert!(s.path.is_none());
        }
        assert!(load("builtin:nope").is_err());
    }

    #[test]
    fn schema_versions() {
        let text = fixtures::EXPERIMENT_1.replacen('{', "{ \"schema\": 1,", 1);
        assert_eq!(parse(&text, None, "x").unwrap().schema, 1);
        let text = fixtures::EXPERIMENT_1.replacen('{', "{ \"schema\": 7,", 1);
        assert!(parse(&text, None, "x").is_err());
        assert!(parse("{", None, "x").is_err());
    }
}
