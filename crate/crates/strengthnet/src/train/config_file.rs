//! Flat key=value config files covering the model and training configs.
//!
//! Keys carry a `model.` or `train.` prefix. Lines that are blank or
//! start with `#` are skipped. Unknown keys are errors; omitted keys
//! keep their defaults.

use std::fs;
use std::path::Path;

use crate::model::StrengthNetConfig;

use super::{TrainError, TrainResult, TrainingConfig};

/// Parse a config file into (model config, training config).
pub fn parse_config_file(path: &Path) -> TrainResult<(StrengthNetConfig, TrainingConfig)> {
    parse_config_str(&fs::read_to_string(path)?)
}

/// Parse config text; see the module docs for the format.
pub fn parse_config_str(text: &str) -> TrainResult<(StrengthNetConfig, TrainingConfig)> {
    let mut model = StrengthNetConfig::default();
    let mut train = TrainingConfig::default();
    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let at = |msg: String| TrainError::BadConfig(format!("line {}: {msg}", lineno + 1));
        let (key, value) =
            line.split_once('=').ok_or_else(|| at(format!("expected key=value, got '{line}'")))?;
        let key = key.trim();
        let value = value.trim();
        if let Some(field) = key.strip_prefix("model.") {
            model.set_field(field, value).map_err(|e| at(e.to_string()))?;
        } else if let Some(field) = key.strip_prefix("train.") {
            train.set_field(field, value).map_err(|e| at(e.to_string()))?;
        } else {
            return Err(at(format!("key '{key}' needs a 'model.' or 'train.' prefix")));
        }
    }
    model.validate()?;
    train.validate()?;
    Ok((model, train))
}

/// Write both configs with every field spelled out.
pub fn write_config_file(
    path: &Path,
    model: &StrengthNetConfig,
    train: &TrainingConfig,
) -> TrainResult<()> {
    let mut out = String::new();
    for (k, v) in model.to_pairs() {
        out.push_str(&format!("model.{k} = {v}\n"));
    }
    for (k, v) in train.to_pairs() {
        out.push_str(&format!("train.{k} = {v}\n"));
    }
    fs::write(path, out)?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn full_file_roundtrips_both_configs() {
        let model = StrengthNetConfig {
            mel_channels: 40,
            bilstm_hidden: 32,
            dropout: 0.25,
            ..StrengthNetConfig::default()
        };
        let train = TrainingConfig {
            batch_size: 8,
            lr: 0.002,
            max_epochs: 17,
            seed: 5,
            ..TrainingConfig::default()
        };
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("run.cfg");
        write_config_file(&path, &model, &train).unwrap();
        let (m2, t2) = parse_config_file(&path).unwrap();
        assert_eq!(m2, model);
        assert_eq!(t2, train);
    }

    #[test]
    fn partial_overrides_keep_defaults_elsewhere() {
        let text = "# comment\n\ntrain.batch_size = 4\nmodel.bilstm_hidden = 16\n";
        let (model, train) = parse_config_str(text).unwrap();
        assert_eq!(train.batch_size, 4);
        assert_eq!(model.bilstm_hidden, 16);
        assert_eq!(train.patience, TrainingConfig::default().patience);
        assert_eq!(model.mel_channels, 80);
    }

    #[test]
    fn unknown_and_unprefixed_keys_are_rejected_with_line_numbers() {
        let err = parse_config_str("model.not_a_field = 3\n").unwrap_err();
        assert!(err.to_string().contains("line 1"), "{err}");
        let err = parse_config_str("\nbatch_size = 4\n").unwrap_err();
        assert!(err.to_string().contains("line 2"), "{err}");
        let err = parse_config_str("train.lr\n").unwrap_err();
        assert!(err.to_string().contains("key=value"), "{err}");
    }

    #[test]
    fn parsed_configs_are_still_validated() {
        assert!(parse_config_str("train.dropout = 1.5\n").is_err());
        assert!(parse_config_str("model.num_emotions = 0\n").is_err());
    }
}
