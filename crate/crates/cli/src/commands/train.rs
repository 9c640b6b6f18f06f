use jabberprobe::probes::{sample_configs, train_probe, ProbeKind, SearchSpace, TrainConfig};
use rayon::prelude::*;
use serde::Serialize;

use crate::artifacts::{self, is_complete, job_key, probe_dir, trial_dir, Trained};
use crate::config::Config;
use crate::data::{DataSource, Examples, Split};
use crate::error::{CliError, Result};
use crate::is_baseline;

struct LayerData {
    train: Examples,
    dev: Examples,
    dim: usize,
}

fn load_layer(source: &DataSource, model: &str, layer: u32) -> Result<LayerData> {
    let train = source.examples(model, Split::Train, layer)?;
    let dev = source.examples(model, Split::Dev, layer)?;
    let dim = train
        .items
        .first()
        .map(|e| e.embeddings.ncols())
        .ok_or_else(|| CliError::Data(format!("{model} layer {layer}: no training sentences")))?;
    Ok(LayerData { train, dev, dim })
}

/// Trains one probe per (model, layer, probe kind) with the configured
/// hyperparameters, skipping jobs that are already complete.
pub fn run_train(config: &Config, pool: &rayon::ThreadPool) -> Result<()> {
    let source = DataSource::new(config);
    for model in config.models.iter().filter(|m| !is_baseline(m)) {
        for layer in config.layers_for(model) {
            let pending: Vec<ProbeKind> = config
                .probes
                .iter()
                .copied()
                .filter(|&p| {
                    let key = job_key(config, model, layer, p, None);
                    !is_complete(&probe_dir(&config.output_dir, model, layer, p), &key)
                })
                .collect();
            if pending.is_empty() {
                continue;
            }
            let data = load_layer(&source, model, layer)?;
            let train_config = config.train_config(data.dim);
            let results: Vec<_> = pool.install(|| {
                pending
                    .par_iter()
                    .map(|&kind| train_probe(kind, &data.train.items, &data.dev.items, &train_config))
                    .collect()
            });
            for (kind, result) in pending.into_iter().zip(results) {
                let (params, history) = result?;
                log::info!(
                    "{model} layer {layer} {kind}: dev loss {:.6} after {} steps",
                    history.best_dev_loss,
                    history.total_steps
                );
                artifacts::save(
                    &probe_dir(&config.output_dir, model, layer, kind),
                    config,
                    &job_key(config, model, layer, kind, None),
                    &Trained {
                        model_id: model,
                        layer,
                        trial: None,
                        train_config: &train_config,
                        params: &params,
                        history: &history,
                        dev_sentences: data.dev.items.len(),
                    },
                )?;
            }
        }
    }
    Ok(())
}

#[derive(Serialize)]
struct LayerBest {
    layer: u32,
    trial: usize,
    dev_loss: f64,
    config: TrainConfig,
}

#[derive(Serialize)]
struct SearchSummary {
    config_hash: String,
    seed: u64,
    model_id: String,
    probe: ProbeKind,
    trials: usize,
    /// Best trial per layer.
    layers: Vec<LayerBest>,
    /// Index into `layers` with the lowest dev loss.
    best: usize,
}

/// Random search: the same sampled configurations are tried on every layer.
/// Each trial is saved under `search/`; the best trial of each layer is
/// copied to the layer's probe directory for evaluation.
pub fn run_search(config: &Config, pool: &rayon::ThreadPool) -> Result<()> {
    if config.trials == 0 {
        return Err(CliError::Config("`trials` must be at least 1".into()));
    }
    let source = DataSource::new(config);
    for model in config.models.iter().filter(|m| !is_baseline(m)) {
        let mut best_per_probe: Vec<Vec<LayerBest>> = config.probes.iter().map(|_| Vec::new()).collect();
        for layer in config.layers_for(model) {
            let jobs: Vec<(usize, ProbeKind, usize)> = config
                .probes
                .iter()
                .enumerate()
                .flat_map(|(pi, &p)| (0..config.trials).map(move |t| (pi, p, t)))
                .collect();
            let pending: Vec<_> = jobs
                .iter()
                .copied()
                .filter(|&(_, p, t)| {
                    let key = job_key(config, model, layer, p, Some(t));
                    !is_complete(&trial_dir(&config.output_dir, model, layer, p, t), &key)
                })
                .collect();
            if !pending.is_empty() {
                let data = load_layer(&source, model, layer)?;
                let configs = sample_configs(
                    &SearchSpace::standard(data.dim),
                    config.trials,
                    &config.train_config(data.dim),
                );
                let results: Vec<_> = pool.install(|| {
                    pending
                        .par_iter()
                        .map(|&(_, kind, t)| train_probe(kind, &data.train.items, &data.dev.items, &configs[t]))
                        .collect()
                });
                for (&(_, kind, t), result) in pending.iter().zip(results) {
                    let (params, history) = result?;
                    log::info!(
                        "{model} layer {layer} {kind} trial {t}: dev loss {:.6}",
                        history.best_dev_loss
                    );
                    artifacts::save(
                        &trial_dir(&config.output_dir, model, layer, kind, t),
                        config,
                        &job_key(config, model, layer, kind, Some(t)),
                        &Trained {
                            model_id: model,
                            layer,
                            trial: Some(t),
                            train_config: &configs[t],
                            params: &params,
                            history: &history,
                            dev_sentences: data.dev.items.len(),
                        },
                    )?;
                }
            }

            for (pi, &kind) in config.probes.iter().enumerate() {
                let mut best: Option<(usize, artifacts::Sidecar)> = None;
                for t in 0..config.trials {
                    let (sidecar, _) = artifacts::load(&trial_dir(&config.output_dir, model, layer, kind, t))?;
                    if best
                        .as_ref()
                        .is_none_or(|(_, b)| sidecar.best_dev_loss < b.best_dev_loss)
                    {
                        best = Some((t, sidecar));
                    }
                }
                let (t, sidecar) = best.expect("at least one trial");
                let from = trial_dir(&config.output_dir, model, layer, kind, t);
                let to = probe_dir(&config.output_dir, model, layer, kind);
                for name in ["params.jprb", "history.json"] {
                    let bytes = std::fs::read(from.join(name)).map_err(|e| CliError::data(from.display(), e))?;
                    artifacts::write_atomic(&to.join(name), &bytes)?;
                }
                artifacts::write_sidecar(&to, &sidecar)?;
                best_per_probe[pi].push(LayerBest {
                    layer,
                    trial: t,
                    dev_loss: sidecar.best_dev_loss,
                    config: sidecar.train_config,
                });
            }
        }
        for (layers, &kind) in best_per_probe.into_iter().zip(&config.probes) {
            let best = (0..layers.len()).fold(0, |b, i| if layers[i].dev_loss < layers[b].dev_loss { i } else { b });
            let summary = SearchSummary {
                config_hash: config.hash(),
                seed: config.seed,
                model_id: model.clone(),
                probe: kind,
                trials: config.trials,
                layers,
                best,
            };
            let path = config
                .output_dir
                .join("search")
                .join(model)
                .join(kind.as_str())
                .join("summary.json");
            artifacts::write_atomic(&path, &serde_json::to_vec_pretty(&summary).expect("summary serializes"))?;
        }
    }
    Ok(())
}
