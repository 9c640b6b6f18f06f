use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::train::{train_probe, TrainConfig, TrainHistory};
use super::{ProbeError, ProbeExample, ProbeKind, ProbeParams};

/// Ranges for random hyperparameter search.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SearchSpace {
    pub learning_rate: (f64, f64),
    pub rank: (usize, usize),
    pub dropout: (f64, f64),
}

impl SearchSpace {
    /// Learning rate log-uniform in [5e-5, 5e-3], rank in [1, dim], dropout
    /// in [0.1, 0.8].
    pub fn standard(dim: usize) -> Self {
        SearchSpace {
            learning_rate: (5e-5, 5e-3),
            rank: (1, dim),
            dropout: (0.1, 0.8),
        }
    }
}

/// Layers probed for a model with `num_layers` transformer layers: every
/// fourth layer starting from the embedding layer 0.
pub fn sweep_layers(num_layers: u32) -> Vec<u32> {
    (0..=num_layers).step_by(4).collect()
}

/// Draws `trials` configurations. Everything not searched over is copied
/// from `base`; trial `t` trains with seed `base.seed + t`.
pub fn sample_configs(space: &SearchSpace, trials: usize, base: &TrainConfig) -> Vec<TrainConfig> {
    let mut rng = ChaCha8Rng::seed_from_u64(base.seed);
    let (lr_lo, lr_hi) = (space.learning_rate.0.ln(), space.learning_rate.1.ln());
    (0..trials)
        .map(|t| {
            let learning_rate = rng
                .random_range(lr_lo..=lr_hi)
                .exp()
                .clamp(space.learning_rate.0, space.learning_rate.1);
            let rank = rng.random_range(space.rank.0..=space.rank.1);
            let dropout = rng.random_range(space.dropout.0..=space.dropout.1);
            TrainConfig {
                learning_rate,
                rank,
                dropout,
                seed: base.seed.wrapping_add(t as u64),
                ..base.clone()
            }
        })
        .collect()
}

#[derive(Debug, Clone)]
pub struct TrialResult {
    pub layer: u32,
    pub trial: usize,
    pub config: TrainConfig,
    pub params: ProbeParams,
    pub history: TrainHistory,
}

#[derive(Debug, Clone)]
pub struct SearchResult {
    pub trials: Vec<TrialResult>,
    /// Index into `trials` of the lowest dev loss (earliest on ties).
    pub best: usize,
}

impl SearchResult {
    pub fn best(&self) -> &TrialResult {
        &self.trials[self.best]
    }
}

/// Runs the same sampled configurations on every layer and keeps the trial
/// with the lowest dev loss. `load` supplies the train and dev examples for
/// a layer, so only one layer's embeddings need to be resident at a time.
pub fn random_search<F>(
    kind: ProbeKind,
    layers: &[u32],
    configs: &[TrainConfig],
    mut load: F,
) -> Result<SearchResult, ProbeError>
where
    F: FnMut(u32) -> Result<(Vec<ProbeExample>, Vec<ProbeExample>), ProbeError>,
{
    if layers.is_empty() || configs.is_empty() {
        return Err(ProbeError::BadConfig(
            "search needs at least one layer and one trial".into(),
        ));
    }
    let mut trials = Vec::with_capacity(layers.len() * configs.len());
    for &layer in layers {
        let (train, dev) = load(layer)?;
        for (t, config) in configs.iter().enumerate() {
            let (params, history) = train_probe(kind, &train, &dev, config)?;
            log::info!(
                "{kind} layer {layer} trial {t}: dev loss {:.6} (lr {:.2e}, rank {}, dropout {:.2})",
                history.best_dev_loss,
                config.learning_rate,
                config.rank,
                config.dropout
            );
            trials.push(TrialResult {
                layer,
                trial: t,
                config: config.clone(),
                params,
                history,
            });
        }
    }
    let best = trials.iter().enumerate().fold(0, |best, (i, t)| {
        if t.history.best_dev_loss < trials[best].history.best_dev_loss {
            i
        } else {
            best
        }
    });
    Ok(SearchResult { trials, best })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn layer_sweep() {
        assert_eq!(sweep_layers(24), vec![0, 4, 8, 12, 16, 20, 24]);
        assert_eq!(sweep_layers(0), vec![0]);
    }

    #[test]
    fn sampled_configs_in_range() {
        let space = SearchSpace::standard(1024);
        let base = TrainConfig::new(1e-3, 1, 0.0, 11);
        let configs = sample_configs(&space, 500, &base);
        for c in &configs {
            assert!((5e-5..=5e-3).contains(&c.learning_rate));
            assert!((1..=1024).contains(&c.rank));
            assert!((0.1..=0.8).contains(&c.dropout));
            assert_eq!(c.batch_size, 64);
        }
        assert_eq!(configs, sample_configs(&space, 500, &base));
        // Log-uniform: about half the mass lies below the geometric midpoint.
        let below = configs.iter().filter(|c| c.learning_rate < 5e-4).count();
        assert!((200..300).contains(&below), "{below}");
    }
}
