//! Architecture hyperparameters.

use super::{ModelError, ModelResult};

/// Shape of the network. The defaults give the reference architecture:
/// four conv blocks of three 3x3 layers with filter counts 16/32/64/128,
/// frequency downsampled 3x by the last layer of each block
/// (80 -> 27 -> 9 -> 3 -> 1), a 128-per-direction BiLSTM in each head,
/// and a 4-way emotion classifier.
#[derive(Debug, Clone, PartialEq)]
pub struct StrengthNetConfig {
    pub mel_channels: usize,
    pub conv_block_filters: Vec<usize>,
    pub layers_per_block: usize,
    /// (time, frequency) stride of each layer within a block.
    pub block_strides: Vec<(usize, usize)>,
    pub kernel: (usize, usize),
    pub bilstm_hidden: usize,
    pub fc_hidden: usize,
    pub num_emotions: usize,
    pub dropout: f64,
}

impl Default for StrengthNetConfig {
    fn default() -> Self {
        StrengthNetConfig {
            mel_channels: 80,
            conv_block_filters: vec![16, 32, 64, 128],
            layers_per_block: 3,
            block_strides: vec![(1, 1), (1, 1), (1, 3)],
            kernel: (3, 3),
            bilstm_hidden: 128,
            fc_hidden: 128,
            num_emotions: 4,
            dropout: 0.3,
        }
    }
}

impl StrengthNetConfig {
    /// Frequency size after each block, starting from the input size.
    /// Same padding makes each strided layer a ceil division.
    pub fn frequency_chain(&self) -> Vec<usize> {
        let mut chain = vec![self.mel_channels];
        let mut f = self.mel_channels;
        for _ in &self.conv_block_filters {
            for &(_, sf) in &self.block_strides {
                f = f.div_ceil(sf);
            }
            chain.push(f);
        }
        chain
    }

    /// Per-frame feature width out of the encoder: remaining frequency
    /// bins times final filter count.
    pub fn encoder_out_dim(&self) -> usize {
        let f = *self.frequency_chain().last().unwrap();
        f * self.conv_block_filters.last().copied().unwrap_or(0)
    }

    pub fn validate(&self) -> ModelResult<()> {
        let bad = |msg: String| Err(ModelError::BadConfig(msg));
        if self.mel_channels == 0 {
            return bad("mel_channels must be positive".into());
        }
        if self.conv_block_filters.is_empty() || self.conv_block_filters.contains(&0) {
            return bad(format!("bad filter counts {:?}", self.conv_block_filters));
        }
        if self.layers_per_block == 0 || self.block_strides.len() != self.layers_per_block {
            return bad(format!(
                "need one stride per layer: {} layers, {} strides",
                self.layers_per_block,
                self.block_strides.len()
            ));
        }
        if self.block_strides.iter().any(|&(st, sf)| st != 1 || sf == 0) {
            return bad(format!(
                "strides {:?}: time stride must be 1, frequency stride positive",
                self.block_strides
            ));
        }
        if self.kernel.0 == 0 || self.kernel.1 == 0 {
            return bad(format!("bad kernel {:?}", self.kernel));
        }
        if *self.frequency_chain().last().unwrap() < 1 {
            return bad("frequency dimension collapses to zero".into());
        }
        if self.bilstm_hidden == 0 || self.fc_hidden == 0 {
            return bad("hidden sizes must be positive".into());
        }
        if self.num_emotions < 2 {
            return bad(format!("need at least 2 emotion classes, got {}", self.num_emotions));
        }
        if !(0.0..1.0).contains(&self.dropout) {
            return bad(format!("dropout {} outside [0,1)", self.dropout));
        }
        Ok(())
    }

    /// Stable key/value form used by checkpoints and config files.
    pub fn to_pairs(&self) -> Vec<(String, String)> {
        let strides = self
            .block_strides
            .iter()
            .map(|&(t, f)| format!("{t}x{f}"))
            .collect::<Vec<_>>()
            .join(",");
        let filters = self
            .conv_block_filters
            .iter()
            .map(usize::to_string)
            .collect::<Vec<_>>()
            .join(",");
        vec![
            ("mel_channels".into(), self.mel_channels.to_string()),
            ("conv_block_filters".into(), filters),
            ("layers_per_block".into(), self.layers_per_block.to_string()),
            ("block_strides".into(), strides),
            ("kernel".into(), format!("{}x{}", self.kernel.0, self.kernel.1)),
            ("bilstm_hidden".into(), self.bilstm_hidden.to_string()),
            ("fc_hidden".into(), self.fc_hidden.to_string()),
            ("num_emotions".into(), self.num_emotions.to_string()),
            ("dropout".into(), format!("{}", self.dropout)),
        ]
    }

    /// Parse the key/value form. Every field must appear exactly once;
    /// unknown keys are an error.
    pub fn from_pairs(pairs: &[(String, String)]) -> ModelResult<Self> {
        let mut config = StrengthNetConfig::default();
        let mut seen = std::collections::BTreeSet::new();
        for (key, value) in pairs {
            if !seen.insert(key.clone()) {
                return Err(ModelError::BadConfig(format!("duplicate key '{key}'")));
            }
            config.set_field(key, value)?;
        }
        let expected: Vec<String> = config.to_pairs().into_iter().map(|(k, _)| k).collect();
        for key in &expected {
            if !seen.contains(key) {
                return Err(ModelError::BadConfig(format!("missing key '{key}'")));
            }
        }
        config.validate()?;
        Ok(config)
    }

    /// Assign one field from its textual form. Shared by checkpoint
    /// loading and config-file parsing.
    pub fn set_field(&mut self, key: &str, value: &str) -> ModelResult<()> {
        let bad = |msg: String| ModelError::BadConfig(msg);
        let parse_usize = |v: &str, key: &str| {
            v.trim().parse::<usize>().map_err(|_| bad(format!("{key}: bad integer '{v}'")))
        };
        match key {
            "mel_channels" => self.mel_channels = parse_usize(value, key)?,
            "conv_block_filters" => {
                self.conv_block_filters = value
                    .split(',')
                    .map(|v| parse_usize(v, key))
                    .collect::<ModelResult<Vec<_>>>()?;
            }
            "layers_per_block" => self.layers_per_block = parse_usize(value, key)?,
            "block_strides" => {
                self.block_strides = value
                    .split(',')
                    .map(|v| parse_pair(v).ok_or_else(|| bad(format!("{key}: bad stride '{v}'"))))
                    .collect::<ModelResult<Vec<_>>>()?;
            }
            "kernel" => {
                self.kernel =
                    parse_pair(value).ok_or_else(|| bad(format!("{key}: bad kernel '{value}'")))?;
            }
            "bilstm_hidden" => self.bilstm_hidden = parse_usize(value, key)?,
            "fc_hidden" => self.fc_hidden = parse_usize(value, key)?,
            "num_emotions" => self.num_emotions = parse_usize(value, key)?,
            "dropout" => {
                self.dropout = value
                    .trim()
                    .parse::<f64>()
                    .map_err(|_| bad(format!("{key}: bad number '{value}'")))?;
            }
            other => return Err(bad(format!("unknown key '{other}'"))),
        }
        Ok(())
    }
}

fn parse_pair(v: &str) -> Option<(usize, usize)> {
    let (a, b) = v.trim().split_once('x')?;
    Some((a.parse().ok()?, b.parse().ok()?))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_frequency_chain_collapses_to_one() {
        let config = StrengthNetConfig::default();
        assert_eq!(config.frequency_chain(), vec![80, 27, 9, 3, 1]);
        assert_eq!(config.encoder_out_dim(), 128);
        config.validate().unwrap();
    }

    #[test]
    fn pairs_roundtrip() {
        let config = StrengthNetConfig::default();
        let back = StrengthNetConfig::from_pairs(&config.to_pairs()).unwrap();
        assert_eq!(back, config);
    }

    #[test]
    fn unknown_and_missing_keys_are_rejected() {
        let mut pairs = StrengthNetConfig::default().to_pairs();
        pairs.push(("bogus".into(), "1".into()));
        assert!(matches!(
            StrengthNetConfig::from_pairs(&pairs),
            Err(ModelError::BadConfig(_))
        ));
        let short = &StrengthNetConfig::default().to_pairs()[1..];
        assert!(StrengthNetConfig::from_pairs(short).is_err());
    }

    #[test]
    fn invalid_configs_are_rejected() {
        let mut config = StrengthNetConfig::default();
        config.num_emotions = 1;
        assert!(config.validate().is_err());

        let mut config = StrengthNetConfig::default();
        config.block_strides = vec![(2, 1), (1, 1), (1, 3)];
        assert!(config.validate().is_err());

        let mut config = StrengthNetConfig::default();
        config.dropout = 1.0;
        assert!(config.validate().is_err());
    }

    #[test]
    fn nondefault_geometry_chains_correctly() {
        let mut config = StrengthNetConfig::default();
        config.mel_channels = 40;
        assert_eq!(config.frequency_chain(), vec![40, 14, 5, 2, 1]);
        assert_eq!(config.encoder_out_dim(), 128);
    }
}
