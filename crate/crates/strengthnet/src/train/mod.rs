//! Training loop: batched gradient descent with Adam, per-epoch
//! validation MAE, best-checkpoint retention, and patience-based early
//! stopping. Runs are fully determined by config and seed.

mod config_file;
mod fit;

pub use config_file::{parse_config_file, parse_config_str, write_config_file};
pub use fit::{
    fit, read_training_log, write_training_log, EpochLog, FitOptions, FitOutcome,
};

use crate::data::DataError;
use crate::model::ModelError;

#[derive(Debug, thiserror::Error)]
pub enum TrainError {
    #[error("non-finite loss at epoch {epoch}, batch {batch}: {detail}")]
    NonFiniteLoss { epoch: usize, batch: usize, detail: String },
    #[error("bad training config: {0}")]
    BadConfig(String),
    #[error("no validation utterances carry a strength score")]
    NoValidationData,
    #[error(transparent)]
    Data(#[from] DataError),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Diff(#[from] crate::autodiff::DiffError),
    #[error(transparent)]
    Eval(#[from] crate::eval::EvalError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type TrainResult<V> = Result<V, TrainError>;

/// Hyperparameters of one training run.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainingConfig {
    pub batch_size: usize,
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub dropout: f64,
    pub split_ratio: (u32, u32, u32),
    pub patience: usize,
    pub max_epochs: usize,
    pub seed: u64,
}

impl Default for TrainingConfig {
    fn default() -> Self {
        TrainingConfig {
            batch_size: 64,
            lr: 1e-4,
            beta1: 0.9,
            beta2: 0.98,
            dropout: 0.3,
            split_ratio: (8, 1, 1),
            patience: 30,
            max_epochs: 300,
            seed: 0,
        }
    }
}

impl TrainingConfig {
    pub fn validate(&self) -> TrainResult<()> {
        let bad = |msg: String| Err(TrainError::BadConfig(msg));
        if self.batch_size == 0 {
            return bad("batch_size must be positive".into());
        }
        if !self.lr.is_finite() || self.lr < 0.0 {
            return bad(format!("lr {} must be finite and non-negative", self.lr));
        }
        for (name, beta) in [("beta1", self.beta1), ("beta2", self.beta2)] {
            if !(0.0..1.0).contains(&beta) {
                return bad(format!("{name} {beta} outside [0,1)"));
            }
        }
        if !(0.0..1.0).contains(&self.dropout) {
            return bad(format!("dropout {} outside [0,1)", self.dropout));
        }
        let (tr, va, te) = self.split_ratio;
        if tr == 0 || tr + va + te == 0 {
            return bad(format!("split ratio {tr}:{va}:{te} needs a positive train part"));
        }
        if self.patience == 0 {
            return bad("patience must be at least 1".into());
        }
        if self.max_epochs == 0 {
            return bad("max_epochs must be at least 1".into());
        }
        Ok(())
    }

    /// Stable key/value form used by config files.
    pub fn to_pairs(&self) -> Vec<(String, String)> {
        let (tr, va, te) = self.split_ratio;
        vec![
            ("batch_size".into(), self.batch_size.to_string()),
            ("lr".into(), format!("{}", self.lr)),
            ("beta1".into(), format!("{}", self.beta1)),
            ("beta2".into(), format!("{}", self.beta2)),
            ("dropout".into(), format!("{}", self.dropout)),
            ("split_ratio".into(), format!("{tr}:{va}:{te}")),
            ("patience".into(), self.patience.to_string()),
            ("max_epochs".into(), self.max_epochs.to_string()),
            ("seed".into(), self.seed.to_string()),
        ]
    }

    /// Assign one field from its textual form.
    pub fn set_field(&mut self, key: &str, value: &str) -> TrainResult<()> {
        let bad = |msg: String| TrainError::BadConfig(msg);
        let int = |v: &str, key: &str| {
            v.trim().parse::<usize>().map_err(|_| bad(format!("{key}: bad integer '{v}'")))
        };
        let num = |v: &str, key: &str| {
            v.trim().parse::<f64>().map_err(|_| bad(format!("{key}: bad number '{v}'")))
        };
        match key {
            "batch_size" => self.batch_size = int(value, key)?,
            "lr" => self.lr = num(value, key)?,
            "beta1" => self.beta1 = num(value, key)?,
            "beta2" => self.beta2 = num(value, key)?,
            "dropout" => self.dropout = num(value, key)?,
            "split_ratio" => {
                let parts: Vec<u32> = value
                    .trim()
                    .split(':')
                    .map(|p| p.parse().map_err(|_| bad(format!("split_ratio: bad part '{p}'"))))
                    .collect::<TrainResult<_>>()?;
                if parts.len() != 3 {
                    return Err(bad(format!("split_ratio '{value}' needs three parts")));
                }
                self.split_ratio = (parts[0], parts[1], parts[2]);
            }
            "patience" => self.patience = int(value, key)?,
            "max_epochs" => self.max_epochs = int(value, key)?,
            "seed" => {
                self.seed = value
                    .trim()
                    .parse::<u64>()
                    .map_err(|_| bad(format!("seed: bad integer '{value}'")))?;
            }
            other => return Err(bad(format!("unknown key '{other}'"))),
        }
        Ok(())
    }
}

/// Tracks the best validation MAE and decides when to stop. Only a
/// strictly lower MAE counts as improvement.
#[derive(Debug, Clone)]
pub struct EarlyStopper {
    patience: usize,
    best_mae: f64,
    best_epoch: usize,
    since_best: usize,
}

/// Outcome of one observed epoch.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StopDecision {
    Improved,
    Continue,
    Stop,
}

impl EarlyStopper {
    pub fn new(patience: usize) -> Self {
        assert!(patience > 0, "patience must be at least 1");
        EarlyStopper { patience, best_mae: f64::INFINITY, best_epoch: 0, since_best: 0 }
    }

    pub fn best_mae(&self) -> f64 {
        self.best_mae
    }

    pub fn best_epoch(&self) -> usize {
        self.best_epoch
    }

    pub fn observe(&mut self, epoch: usize, val_mae: f64) -> StopDecision {
        if val_mae < self.best_mae {
            self.best_mae = val_mae;
            self.best_epoch = epoch;
            self.since_best = 0;
            return StopDecision::Improved;
        }
        self.since_best += 1;
        if self.since_best >= self.patience {
            StopDecision::Stop
        } else {
            StopDecision::Continue
        }
    }
}

/// Deterministic combination of seed words for derived RNG streams.
pub(crate) fn mix_seed(parts: &[u64]) -> u64 {
    let mut h: u64 = 0x9E37_79B9_7F4A_7C15;
    for &p in parts {
        h ^= p;
        h = (h ^ (h >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
        h = (h ^ (h >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
        h ^= h >> 31;
    }
    h
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn config_pairs_roundtrip() {
        let config = TrainingConfig {
            batch_size: 16,
            lr: 0.00025,
            beta1: 0.85,
            beta2: 0.999,
            dropout: 0.1,
            split_ratio: (6, 2, 2),
            patience: 5,
            max_epochs: 42,
            seed: 99,
        };
        let mut back = TrainingConfig::default();
        for (k, v) in config.to_pairs() {
            back.set_field(&k, &v).unwrap();
        }
        assert_eq!(back, config);
        assert!(back.set_field("nonsense", "1").is_err());
        assert!(back.set_field("split_ratio", "8:1").is_err());
    }

    #[test]
    fn config_validation_rejects_bad_fields() {
        let ok = TrainingConfig::default();
        ok.validate().unwrap();
        let cases: Vec<(&str, Box<dyn Fn(&mut TrainingConfig)>)> = vec![
            ("batch", Box::new(|c| c.batch_size = 0)),
            ("lr", Box::new(|c| c.lr = -1.0)),
            ("beta1", Box::new(|c| c.beta1 = 1.0)),
            ("dropout", Box::new(|c| c.dropout = 1.0)),
            ("ratio", Box::new(|c| c.split_ratio = (0, 1, 1))),
            ("patience", Box::new(|c| c.patience = 0)),
            ("epochs", Box::new(|c| c.max_epochs = 0)),
        ];
        for (name, poke) in cases {
            let mut config = TrainingConfig::default();
            poke(&mut config);
            assert!(config.validate().is_err(), "{name} should fail validation");
        }
        let mut zero_lr = TrainingConfig::default();
        zero_lr.lr = 0.0;
        zero_lr.validate().unwrap();
    }

    #[test]
    fn fifty_improving_epochs_with_patience_thirty_stop_at_eighty() {
        let mut stopper = EarlyStopper::new(30);
        let mut stopped_at = None;
        for epoch in 1..=200 {
            let mae = if epoch <= 50 { 1.0 / epoch as f64 } else { 1.0 / 50.0 };
            match stopper.observe(epoch, mae) {
                StopDecision::Stop => {
                    stopped_at = Some(epoch);
                    break;
                }
                _ => continue,
            }
        }
        assert_eq!(stopped_at, Some(80));
        assert_eq!(stopper.best_epoch(), 50);
        assert!((stopper.best_mae() - 0.02).abs() < 1e-15);
    }

    #[test]
    fn equal_mae_is_not_improvement() {
        let mut stopper = EarlyStopper::new(2);
        assert_eq!(stopper.observe(1, 0.5), StopDecision::Improved);
        assert_eq!(stopper.observe(2, 0.5), StopDecision::Continue);
        assert_eq!(stopper.observe(3, 0.5), StopDecision::Stop);
        assert_eq!(stopper.best_epoch(), 1);
    }

    #[test]
    fn mixed_seeds_differ_across_positions() {
        let a = mix_seed(&[1, 2, 3]);
        let b = mix_seed(&[1, 3, 2]);
        let c = mix_seed(&[1, 2, 3]);
        assert_eq!(a, c);
        assert_ne!(a, b);
        assert_ne!(mix_seed(&[0]), mix_seed(&[1]));
    }
}
