//! TOML run and grid configurations.
//!
//! ```toml
//! split_seed = 0
//! manifest = "data/mini_sites.toml"
//!
//! [model]
//! window = 5
//! lstm_sizes = [32, 8]
//! mlp_size = 0
//!
//! [train]
//! epochs = 30
//! lr = 0.005
//! weight_decay = 0.01
//! batch_size = 128
//! seed = 0
//! loss = { kind = "diff_mcc", w = 2.0, gamma = 2.0 }
//! ```

use std::path::{Path, PathBuf};

use focalmcc_core::harness::{GridSpec, LstmLearner};
use focalmcc_core::metrics::default_thresholds;
use focalmcc_core::model::ModelConfig;
use focalmcc_core::train::{FineTune, TrainConfig};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::error::{IoError, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    /// Seed of the train/test split and CV folds.
    #[serde(default)]
    pub split_seed: u64,
    /// Dataset manifest checked before training, relative to the config.
    #[serde(default)]
    pub manifest: Option<PathBuf>,
    #[serde(default)]
    pub thresholds: Option<Vec<f64>>,
    pub model: ModelConfig,
    pub train: TrainConfig,
    #[serde(default)]
    pub fine_tune: Option<FineTune>,
}

impl RunConfig {
    pub fn learner(&self) -> LstmLearner {
        LstmLearner {
            model: self.model.clone(),
            train: self.train.clone(),
            fine_tune: self.fine_tune,
        }
    }

    pub fn thresholds(&self) -> Vec<f64> {
        self.thresholds.clone().unwrap_or_else(default_thresholds)
    }

    pub fn validate(&self, path: &Path) -> Result<()> {
        self.learner().validate().map_err(|e| IoError::Format {
            path: path.to_path_buf(),
            message: e.to_string(),
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridConfig {
    #[serde(default)]
    pub split_seed: u64,
    #[serde(default)]
    pub manifest: Option<PathBuf>,
    #[serde(default)]
    pub thresholds: Option<Vec<f64>>,
    /// Drops candidates whose largest LSTM layer exceeds this size.
    #[serde(default)]
    pub max_hidden: Option<usize>,
    pub grid: GridSpec,
}

impl GridConfig {
    pub fn thresholds(&self) -> Vec<f64> {
        self.thresholds.clone().unwrap_or_else(default_thresholds)
    }

    /// Pruning predicate built from the config.
    pub fn keep(&self, c: &LstmLearner) -> bool {
        match self.max_hidden {
            Some(m) => c.model.lstm_sizes.iter().all(|&h| h <= m),
            None => true,
        }
    }
}

/// Parses a TOML file into `T`.
pub fn load<T: DeserializeOwned>(path: &Path) -> Result<T> {
    let text = crate::read_text(path)?;
    toml::from_str(&text).map_err(|e| IoError::Format {
        path: path.to_path_buf(),
        message: e.to_string(),
    })
}

/// Resolves `p` against the directory of `config_path`.
pub fn relative_to(config_path: &Path, p: &Path) -> PathBuf {
    match config_path.parent() {
        Some(dir) if p.is_relative() => dir.join(p),
        _ => p.to_path_buf(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use focalmcc_core::losses::LossSpec;

    #[test]
    fn parses_the_documented_example() {
        let text = r#"
split_seed = 0
manifest = "data/mini_sites.toml"

[model]
window = 5
lstm_sizes = [32, 8]
mlp_size = 0

[train]
epochs = 30
lr = 0.005
weight_decay = 0.01
batch_size = 128
seed = 0
loss = { kind = "diff_mcc", w = 2.0, gamma = 2.0 }

[fine_tune]
lr = 0.001
epochs = 5
loss = { kind = "weighted_ce", w_pos = 3.0 }
"#;
        let c: RunConfig = toml::from_str(text).unwrap();
        assert_eq!(c.model.lstm_sizes, vec![32, 8]);
        assert_eq!(c.train.loss, LossSpec::DiffMcc { w: 2.0, gamma: 2.0 });
        assert!(c.train.shuffle);
        assert_eq!(c.fine_tune.unwrap().epochs, 5);
        assert_eq!(c.thresholds().len(), 19);
        c.validate(Path::new("x")).unwrap();
    }

    #[test]
    fn unknown_keys_are_rejected() {
        let text = "bogus = 1\n[model]\nwindow = 5\nlstm_sizes = [4]\n[train]\nepochs = 1\nlr = 0.1\nbatch_size = 4\nloss = { kind = \"focal\", alpha = 0.9, gamma = 2.0 }\n";
        assert!(toml::from_str::<RunConfig>(text).is_err());
    }

    #[test]
    fn grid_config_and_pruning() {
        let text = r#"
max_hidden = 8
[grid]
windows = [5]
lstm_sizes = [[4], [16]]
mlp_sizes = [0]
lrs = [0.01]
weight_decays = [0.0]
batch_sizes = [32]
epochs = 2
losses = [{ kind = "diff_mcc", w = 2.0, gamma = 2.0 }]
"#;
        let g: GridConfig = toml::from_str(text).unwrap();
        let c = g.grid.candidates().unwrap();
        assert_eq!(c.iter().filter(|x| g.keep(x)).count(), 1);
    }
}
