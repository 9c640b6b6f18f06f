//! Experiment configuration: one flat TOML file, overridable from flags.

use std::path::{Path, PathBuf};

use jabberprobe::metrics::{DsprMode, DsprOptions};
use jabberprobe::probes::{DropoutTarget, ProbeKind, TrainConfig};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{CliError, Result};

/// Model id whose embeddings are composed from word vectors and a position
/// table instead of being read from the extractor's output.
pub const FAST_POS: &str = "fastpos";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Config {
    pub seed: u64,
    #[serde(default = "defaults::output_dir")]
    pub output_dir: PathBuf,

    pub treebank_train: Option<PathBuf>,
    pub treebank_dev: Option<PathBuf>,
    pub treebank_test: Option<PathBuf>,
    /// Defaults to the corpus written by `generate`.
    pub jabberwocky_test: Option<PathBuf>,
    pub lexicon: Option<PathBuf>,
    #[serde(default)]
    pub past_tense: bool,
    #[serde(default = "defaults::one")]
    pub substitution_probability: f64,

    pub embeddings_dir: Option<PathBuf>,
    pub word_vectors: Option<PathBuf>,
    pub position_table: Option<PathBuf>,
    #[serde(default)]
    pub models: Vec<String>,
    #[serde(default = "defaults::layers")]
    pub layers: Vec<u32>,
    #[serde(default = "defaults::probes")]
    pub probes: Vec<ProbeKind>,

    #[serde(default = "defaults::trials")]
    pub trials: usize,
    #[serde(default = "defaults::learning_rate")]
    pub learning_rate: f64,
    /// Probe rank for `train`; the embedding width when absent.
    pub rank: Option<usize>,
    #[serde(default)]
    pub dropout: f64,
    #[serde(default = "defaults::batch_size")]
    pub batch_size: usize,
    #[serde(default = "defaults::max_epochs")]
    pub max_epochs: usize,
    #[serde(default = "defaults::patience")]
    pub patience: usize,
    #[serde(default = "defaults::checkpoint_every")]
    pub checkpoint_every: usize,
    #[serde(default)]
    pub dropout_target: DropoutTarget,

    #[serde(default)]
    pub exclude_punct: bool,
    #[serde(default)]
    pub dspr_mode: DsprMode,
    /// Score DSpr only on sentences of 5 to 50 words.
    #[serde(default)]
    pub dspr_length_filter: bool,
    #[serde(default)]
    pub uuas_macro: bool,
}

mod defaults {
    use std::path::PathBuf;

    use jabberprobe::probes::{sweep_layers, ProbeKind};

    pub fn output_dir() -> PathBuf {
        PathBuf::from("out")
    }
    pub fn one() -> f64 {
        1.0
    }
    pub fn layers() -> Vec<u32> {
        sweep_layers(24)
    }
    pub fn probes() -> Vec<ProbeKind> {
        vec![ProbeKind::Structural, ProbeKind::Perceptron]
    }
    pub fn trials() -> usize {
        10
    }
    pub fn learning_rate() -> f64 {
        1e-3
    }
    pub fn batch_size() -> usize {
        64
    }
    pub fn max_epochs() -> usize {
        20
    }
    pub fn patience() -> usize {
        15
    }
    pub fn checkpoint_every() -> usize {
        100
    }
}

impl Config {
    pub fn parse(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| CliError::Config(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("cannot read config {}: {e}", path.display())))?;
        Self::parse(&text)
    }

    /// Hex SHA-256 of the canonical JSON form, after flag overrides.
    pub fn hash(&self) -> String {
        let canonical = serde_json::to_vec(self).expect("config serializes");
        hex::encode(Sha256::digest(&canonical))
    }

    /// A required path, which must exist.
    pub fn require(&self, field: &'static str) -> Result<&Path> {
        let value = match field {
            "treebank_train" => &self.treebank_train,
            "treebank_dev" => &self.treebank_dev,
            "treebank_test" => &self.treebank_test,
            "lexicon" => &self.lexicon,
            "embeddings_dir" => &self.embeddings_dir,
            "word_vectors" => &self.word_vectors,
            "position_table" => &self.position_table,
            other => unreachable!("unknown path field {other}"),
        };
        let path = value
            .as_deref()
            .ok_or_else(|| CliError::Config(format!("`{field}` is not set")))?;
        if !path.exists() {
            return Err(CliError::Config(format!(
                "`{field}` path {} does not exist",
                path.display()
            )));
        }
        Ok(path)
    }

    pub fn jabberwocky_path(&self) -> PathBuf {
        self.jabberwocky_test
            .clone()
            .unwrap_or_else(|| self.output_dir.join("jabberwocky").join("test.conllu"))
    }

    /// Layers probed for a model; the composed baseline has only layer 0.
    pub fn layers_for(&self, model: &str) -> Vec<u32> {
        if model == FAST_POS {
            vec![0]
        } else {
            self.layers.clone()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.substitution_probability) {
            return Err(CliError::Config(format!(
                "`substitution_probability` {} is outside [0, 1]",
                self.substitution_probability
            )));
        }
        if self.layers.is_empty() {
            return Err(CliError::Config("`layers` is empty".into()));
        }
        let mut seen = std::collections::HashSet::new();
        for model in &self.models {
            if model.is_empty() || model.contains(['/', '\\']) || !seen.insert(model) {
                return Err(CliError::Config(format!("bad or repeated model id `{model}`")));
            }
        }
        Ok(())
    }

    /// Training settings shared by `train` and as the base for `search`.
    pub fn train_config(&self, dim: usize) -> TrainConfig {
        TrainConfig {
            learning_rate: self.learning_rate,
            rank: self.rank.unwrap_or(dim),
            dropout: self.dropout,
            batch_size: self.batch_size,
            max_epochs: self.max_epochs,
            patience: self.patience,
            checkpoint_every: self.checkpoint_every,
            seed: self.seed,
            dropout_target: self.dropout_target,
        }
    }

    pub fn dspr_options(&self) -> DsprOptions {
        DsprOptions {
            mode: self.dspr_mode,
            length_filter: self.dspr_length_filter.then_some((5, 50)),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn minimal_config() {
        let c = Config::parse("seed = 7\n").unwrap();
        assert_eq!(c.layers, vec![0, 4, 8, 12, 16, 20, 24]);
        assert_eq!(c.trials, 10);
        assert_eq!(c.batch_size, 64);
        assert!(c.models.is_empty());
    }

    #[test]
    fn seed_is_required_and_keys_are_checked() {
        assert!(matches!(
            Config::parse("output_dir = \"x\"\n"),
            Err(CliError::Config(_))
        ));
        assert!(matches!(
            Config::parse("seed = 1\nsede = 2\n"),
            Err(CliError::Config(_))
        ));
    }

    #[test]
    fn hash_tracks_content() {
        let a = Config::parse("seed = 7\n").unwrap();
        let b = Config::parse("seed = 8\n").unwrap();
        assert_eq!(a.hash(), Config::parse("seed = 7\n").unwrap().hash());
        assert_ne!(a.hash(), b.hash());
        assert_eq!(a.hash().len(), 64);
    }

    #[test]
    fn missing_path_names_field() {
        let c = Config::parse("seed = 1\nlexicon = \"/nonexistent/lex.tsv\"\n").unwrap();
        let err = c.require("lexicon").unwrap_err();
        assert!(err.to_string().contains("`lexicon`"));
        assert_eq!(err.exit_code(), 2);
        assert!(c
            .require("treebank_test")
            .unwrap_err()
            .to_string()
            .contains("`treebank_test`"));
    }

    #[test]
    fn fast_pos_uses_layer_zero() {
        let c = Config::parse("seed = 1\nlayers = [0, 12]\n").unwrap();
        assert_eq!(c.layers_for(FAST_POS), vec![0]);
        assert_eq!(c.layers_for("bert-large"), vec![0, 12]);
    }
}
