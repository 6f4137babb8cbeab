use std::path::Path;

use obfusc_core::filtering::FilterPreset;
use obfusc_core::pipeline::{GridSpec, PipelineConfig};

use crate::{io_error, CliError, ObfuscateArgs};

pub const CONFIG_HELP: &str = "TOML configuration file. Top-level keys: `backend` (same syntax as \
--backend), `preset` (filtering preset), `seed`, `context_sentences` (left-context size, unset for \
the whole paragraph), `batch_size`, and the tables [keywords], [decode], [filter], [stylo] and \
[grid]. Unknown keys are rejected. Run `obfusc defaults` to print every key with its default \
value. Command-line flags override the file; `preset` is applied before [filter] keys.";

/// Settings gathered from the config file and flags.
#[derive(Debug)]
pub struct Settings {
    pub pipeline: PipelineConfig,
    pub backend: Option<String>,
}

pub fn parse_preset(name: &str) -> Result<FilterPreset, CliError> {
    name.parse::<FilterPreset>().map_err(|e| CliError::Usage(e.to_string()))
}

/// Reads a config file. `backend` and `preset` are lifted out; everything
/// else must deserialize into a pipeline configuration.
fn load_file(path: &Path) -> Result<(PipelineConfig, Option<String>, Option<FilterPreset>), CliError> {
    let source = std::fs::read_to_string(path).map_err(|e| io_error("read config", path, e))?;
    let bad = |e: &dyn std::fmt::Display| CliError::Usage(format!("config {}: {e}", path.display()));
    let mut table: toml::Table = toml::from_str(&source).map_err(|e| bad(&e))?;
    let backend = match table.remove("backend") {
        Some(toml::Value::String(s)) => Some(s),
        Some(_) => return Err(bad(&"`backend` must be a string")),
        None => None,
    };
    let preset = match table.remove("preset") {
        Some(toml::Value::String(s)) => Some(parse_preset(&s)?),
        Some(_) => return Err(bad(&"`preset` must be a string")),
        None => None,
    };
    if let Some(p) = preset {
        // preset thresholds first, explicit [filter] keys on top
        let base = toml::Table::try_from(p.config()).map_err(|e| bad(&e))?;
        let mut merged = base;
        if let Some(toml::Value::Table(f)) = table.remove("filter") {
            merged.extend(f);
        }
        table.insert("filter".into(), toml::Value::Table(merged));
    }
    let cfg: PipelineConfig = table.try_into().map_err(|e| bad(&e))?;
    Ok((cfg, backend, preset))
}

pub fn settings(args: &ObfuscateArgs) -> Result<Settings, CliError> {
    let (mut pipeline, file_backend, _) = match &args.config {
        Some(p) => load_file(p)?,
        None => (PipelineConfig::default(), None, None),
    };
    if let Some(p) = &args.preset {
        pipeline.filter = parse_preset(p)?.config();
    }
    if let Some(s) = args.seed {
        pipeline.seed = s;
    }
    if let Some(g) = &args.grid {
        pipeline.grid = GridSpec::parse(g).map_err(|e| CliError::Usage(e.to_string()))?;
    }
    if let Some(k) = args.beam_width {
        pipeline.decode.beam_width = k;
    }
    pipeline.validate().map_err(|e| CliError::Usage(e.to_string()))?;
    Ok(Settings {
        pipeline,
        backend: args.backend.backend.clone().or(file_backend),
    })
}

pub fn print_defaults() -> Result<(), CliError> {
    let text = toml::to_string(&PipelineConfig::default()).map_err(|e| CliError::Usage(e.to_string()))?;
    crate::print_stdout(&format!("# backend = \"mock:fixtures/tiny.tbl\"\n# preset = \"amt\"\n{text}\n"));
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn write(text: &str) -> tempfile::NamedTempFile {
        let f = tempfile::NamedTempFile::new().unwrap();
        std::fs::write(f.path(), text).unwrap();
        f
    }

    #[test]
    fn unknown_keys_are_rejected() {
        assert!(load_file(write("sed = 3\n").path()).is_err());
        assert!(load_file(write("[decode]\nbeam = 3\n").path()).is_err());
    }

    #[test]
    fn preset_then_filter_keys() {
        let f = write("preset = \"amt-stylo\"\nbackend = \"mock:x\"\n[filter]\nnli_threshold = 0.5\n");
        let (cfg, backend, preset) = load_file(f.path()).unwrap();
        assert_eq!(backend.as_deref(), Some("mock:x"));
        assert_eq!(preset, Some(FilterPreset::AmtStylo));
        assert_eq!(cfg.filter.nli_threshold, 0.5);
        assert_eq!(cfg.filter.cola_threshold, 0.40);
        assert_eq!(cfg.filter.second_cola_threshold, 0.70);
    }

    #[test]
    fn defaults_round_trip() {
        let text = toml::to_string(&PipelineConfig::default()).unwrap();
        let (cfg, _, _) = load_file(write(&text).path()).unwrap();
        assert_eq!(cfg, PipelineConfig::default());
    }
}
