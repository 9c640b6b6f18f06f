//! Probe artifacts on disk.
//!
//! A probe directory holds `params.jprb`, `history.json` and the sidecar
//! `params.json`. The sidecar is written last, so its presence marks a
//! finished job; it records the SHA-256 of the parameter file and a key
//! identifying the job's inputs, which together decide whether a rerun may
//! skip the job.

use std::path::{Path, PathBuf};

use jabberprobe::probes::{read_params, write_params, ProbeKind, ProbeParams, TrainConfig, TrainHistory};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::config::Config;
use crate::error::{CliError, Result};

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

/// Writes through a temporary file so readers never see partial output.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let fail = |e: std::io::Error| CliError::data(path.display(), e);
    if let Some(parent) = path.parent() {
        std::fs::create_dir_all(parent).map_err(fail)?;
    }
    let mut tmp = path.as_os_str().to_owned();
    tmp.push(".tmp");
    let tmp = PathBuf::from(tmp);
    std::fs::write(&tmp, bytes).map_err(fail)?;
    std::fs::rename(&tmp, path).map_err(fail)
}

pub fn probe_dir(output_dir: &Path, model: &str, layer: u32, probe: ProbeKind) -> PathBuf {
    output_dir
        .join("probes")
        .join(model)
        .join(format!("L{layer}"))
        .join(probe.as_str())
}

pub fn trial_dir(output_dir: &Path, model: &str, layer: u32, probe: ProbeKind, trial: usize) -> PathBuf {
    output_dir
        .join("search")
        .join(model)
        .join(probe.as_str())
        .join(format!("L{layer}"))
        .join(format!("trial{trial:02}"))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Sidecar {
    pub model_id: String,
    pub layer: u32,
    pub probe: ProbeKind,
    pub trial: Option<usize>,
    pub seed: u64,
    pub config_hash: String,
    pub job_key: String,
    pub train_config: TrainConfig,
    pub params_sha256: String,
    pub best_dev_loss: f64,
    pub best_step: usize,
    pub chosen_epoch: usize,
    pub dev_sentences: usize,
}

#[derive(Serialize)]
struct HistoryFile<'a> {
    config_hash: &'a str,
    seed: u64,
    model_id: &'a str,
    layer: u32,
    probe: ProbeKind,
    trial: Option<usize>,
    history: &'a TrainHistory,
}

/// Identifies everything a training job depends on, so that a changed
/// setting forces retraining while unrelated edits (e.g. evaluation flags)
/// do not.
pub fn job_key(config: &Config, model: &str, layer: u32, probe: ProbeKind, trial: Option<usize>) -> String {
    let key = serde_json::json!({
        "model": model,
        "layer": layer,
        "probe": probe,
        "trial": trial,
        "trials": trial.map(|_| config.trials),
        "seed": config.seed,
        "treebank_train": config.treebank_train,
        "treebank_dev": config.treebank_dev,
        "embeddings_dir": config.embeddings_dir,
        "word_vectors": config.word_vectors,
        "position_table": config.position_table,
        "learning_rate": trial.is_none().then_some(config.learning_rate),
        "rank": trial.is_none().then_some(config.rank),
        "dropout": trial.is_none().then_some(config.dropout),
        "batch_size": config.batch_size,
        "max_epochs": config.max_epochs,
        "patience": config.patience,
        "checkpoint_every": config.checkpoint_every,
        "dropout_target": config.dropout_target,
    });
    sha256_hex(key.to_string().as_bytes())
}

#[derive(Debug)]
pub enum Status {
    Missing,
    /// Finished for a different job key.
    Stale,
    /// The parameter file does not match its recorded checksum.
    Corrupt(String),
    Complete(Box<Sidecar>),
}

pub fn status(dir: &Path, key: &str) -> Status {
    let Ok(text) = std::fs::read_to_string(dir.join("params.json")) else {
        return Status::Missing;
    };
    let sidecar: Sidecar = match serde_json::from_str(&text) {
        Ok(s) => s,
        Err(e) => return Status::Corrupt(format!("unreadable sidecar: {e}")),
    };
    let bytes = match std::fs::read(dir.join("params.jprb")) {
        Ok(b) => b,
        Err(e) => return Status::Corrupt(format!("parameter file: {e}")),
    };
    let actual = sha256_hex(&bytes);
    if actual != sidecar.params_sha256 {
        return Status::Corrupt(format!(
            "checksum mismatch: recorded {}, found {actual}",
            sidecar.params_sha256
        ));
    }
    if sidecar.job_key != key {
        return Status::Stale;
    }
    Status::Complete(Box::new(sidecar))
}

/// Whether a job can be skipped, logging why not.
pub fn is_complete(dir: &Path, key: &str) -> bool {
    match status(dir, key) {
        Status::Complete(_) => {
            log::info!("skipping {}: already trained", dir.display());
            true
        }
        Status::Corrupt(why) => {
            log::warn!("retraining {}: {why}", dir.display());
            false
        }
        Status::Stale => {
            log::info!("retraining {}: settings changed", dir.display());
            false
        }
        Status::Missing => false,
    }
}

pub struct Trained<'a> {
    pub model_id: &'a str,
    pub layer: u32,
    pub trial: Option<usize>,
    pub train_config: &'a TrainConfig,
    pub params: &'a ProbeParams,
    pub history: &'a TrainHistory,
    pub dev_sentences: usize,
}

pub fn save(dir: &Path, config: &Config, key: &str, t: &Trained) -> Result<Sidecar> {
    let mut params_bytes = Vec::new();
    write_params(t.params, &mut params_bytes)?;
    write_atomic(&dir.join("params.jprb"), &params_bytes)?;
    let config_hash = config.hash();
    let history = HistoryFile {
        config_hash: &config_hash,
        seed: config.seed,
        model_id: t.model_id,
        layer: t.layer,
        probe: t.params.kind,
        trial: t.trial,
        history: t.history,
    };
    write_atomic(
        &dir.join("history.json"),
        &serde_json::to_vec_pretty(&history).expect("history serializes"),
    )?;
    let sidecar = Sidecar {
        model_id: t.model_id.to_string(),
        layer: t.layer,
        probe: t.params.kind,
        trial: t.trial,
        seed: config.seed,
        config_hash,
        job_key: key.to_string(),
        train_config: t.train_config.clone(),
        params_sha256: sha256_hex(&params_bytes),
        best_dev_loss: t.history.best_dev_loss,
        best_step: t.history.best_step,
        chosen_epoch: t.history.chosen_epoch,
        dev_sentences: t.dev_sentences,
    };
    write_sidecar(dir, &sidecar)?;
    Ok(sidecar)
}

pub fn write_sidecar(dir: &Path, sidecar: &Sidecar) -> Result<()> {
    write_atomic(
        &dir.join("params.json"),
        &serde_json::to_vec_pretty(sidecar).expect("sidecar serializes"),
    )
}

/// Reads a finished probe, verifying its checksum.
pub fn load(dir: &Path) -> Result<(Sidecar, ProbeParams)> {
    let text = std::fs::read_to_string(dir.join("params.json")).map_err(|e| CliError::data(dir.display(), e))?;
    let sidecar: Sidecar = serde_json::from_str(&text).map_err(|e| CliError::data(dir.display(), e))?;
    let bytes = std::fs::read(dir.join("params.jprb")).map_err(|e| CliError::data(dir.display(), e))?;
    if sha256_hex(&bytes) != sidecar.params_sha256 {
        return Err(CliError::Data(format!(
            "{}: parameter checksum mismatch",
            dir.display()
        )));
    }
    let params = read_params(&bytes[..]).map_err(|e| CliError::data(dir.display(), e))?;
    Ok((sidecar, params))
}
