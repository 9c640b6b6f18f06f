use std::time::Instant;

use ndarray::{Array2, ArrayView2};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::adam::Adam;
use super::loss::{perceptron_objective, structural_objective, LossAndGrad};
use super::{ProbeError, ProbeExample, ProbeKind, ProbeParams};

/// Where dropout masks are applied while training.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DropoutTarget {
    /// Coordinates of the input embeddings.
    #[default]
    Input,
    /// Coordinates of the rank-k projections.
    Projection,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrainConfig {
    pub learning_rate: f64,
    pub rank: usize,
    pub dropout: f64,
    #[serde(default = "defaults::batch_size")]
    pub batch_size: usize,
    #[serde(default = "defaults::max_epochs")]
    pub max_epochs: usize,
    /// Consecutive non-improving dev checkpoints tolerated before stopping.
    #[serde(default = "defaults::patience")]
    pub patience: usize,
    /// Optimizer steps between dev-loss checkpoints.
    #[serde(default = "defaults::checkpoint_every")]
    pub checkpoint_every: usize,
    pub seed: u64,
    #[serde(default)]
    pub dropout_target: DropoutTarget,
}

mod defaults {
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

impl TrainConfig {
    pub fn new(learning_rate: f64, rank: usize, dropout: f64, seed: u64) -> Self {
        TrainConfig {
            learning_rate,
            rank,
            dropout,
            batch_size: defaults::batch_size(),
            max_epochs: defaults::max_epochs(),
            patience: defaults::patience(),
            checkpoint_every: defaults::checkpoint_every(),
            seed,
            dropout_target: DropoutTarget::Input,
        }
    }

    pub fn validate(&self, dim: usize) -> Result<(), ProbeError> {
        let bad = |m: String| Err(ProbeError::BadConfig(m));
        if !(self.learning_rate.is_finite() && self.learning_rate > 0.0) {
            return bad(format!("learning rate {} must be positive", self.learning_rate));
        }
        if self.rank == 0 || self.rank > dim {
            return bad(format!("rank {} must lie in [1, {dim}]", self.rank));
        }
        if !(0.0..1.0).contains(&self.dropout) {
            return bad(format!("dropout {} must lie in [0, 1)", self.dropout));
        }
        if self.batch_size == 0 || self.max_epochs == 0 || self.checkpoint_every == 0 {
            return bad("batch_size, max_epochs and checkpoint_every must be positive".into());
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Checkpoint {
    pub step: usize,
    pub epoch: usize,
    /// Mean batch loss since the previous checkpoint.
    pub train_loss: f64,
    pub dev_loss: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StopReason {
    MaxEpochs,
    Patience,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainHistory {
    pub checkpoints: Vec<Checkpoint>,
    pub best_step: usize,
    /// Epoch (1-based) of the checkpoint whose parameters were returned.
    pub chosen_epoch: usize,
    pub best_dev_loss: f64,
    pub total_steps: usize,
    pub stop_reason: StopReason,
    pub wall_clock_secs: f64,
}

impl TrainHistory {
    /// The history with timing removed, for comparing runs.
    pub fn without_timing(&self) -> TrainHistory {
        TrainHistory {
            wall_clock_secs: 0.0,
            ..self.clone()
        }
    }
}

fn objective(
    kind: ProbeKind,
    b: &Array2<f64>,
    h: ArrayView2<f64>,
    ex: &ProbeExample,
    mask: Option<&Array2<f64>>,
) -> LossAndGrad {
    match kind {
        ProbeKind::Structural => structural_objective(b, h, &ex.distances, mask),
        ProbeKind::Perceptron => perceptron_objective(b, h, &ex.tree, mask),
    }
}

/// Mean per-sentence loss without dropout.
pub(crate) fn mean_loss(kind: ProbeKind, b: &Array2<f64>, data: &[&ProbeExample]) -> f64 {
    let total: f64 = data
        .iter()
        .map(|ex| objective(kind, b, ex.embeddings.view(), ex, None).loss)
        .sum();
    total / data.len() as f64
}

fn dropout_mask(rng: &mut ChaCha8Rng, shape: (usize, usize), rate: f64) -> Array2<f64> {
    let keep = 1.0 / (1.0 - rate);
    Array2::from_shape_simple_fn(shape, || if rng.random::<f64>() < rate { 0.0 } else { keep })
}

fn usable<'a>(data: &'a [ProbeExample], what: &'static str, dim: usize) -> Result<Vec<&'a ProbeExample>, ProbeError> {
    let mut out = Vec::with_capacity(data.len());
    for ex in data {
        if ex.embeddings.ncols() != dim {
            return Err(ProbeError::DimMismatch {
                expected: dim,
                found: ex.embeddings.ncols(),
            });
        }
        if ex.len() >= 2 {
            out.push(ex);
        }
    }
    if out.is_empty() {
        return Err(ProbeError::EmptyData(what));
    }
    Ok(out)
}

/// Trains a probe with Adam on mean per-sentence batch losses.
///
/// Dev loss is measured every `checkpoint_every` optimizer steps and after
/// the final step. Training ends after `max_epochs` or once `patience`
/// consecutive checkpoints fail to improve on the best dev loss; the
/// parameters from the best checkpoint are returned. Sentences shorter than
/// two words carry no pairwise signal and are ignored.
pub fn train_probe(
    kind: ProbeKind,
    train: &[ProbeExample],
    dev: &[ProbeExample],
    config: &TrainConfig,
) -> Result<(ProbeParams, TrainHistory), ProbeError> {
    let started = Instant::now();
    let dim = train
        .first()
        .map(|ex| ex.embeddings.ncols())
        .ok_or(ProbeError::EmptyData("train"))?;
    config.validate(dim)?;
    let train = usable(train, "train", dim)?;
    let dev = usable(dev, "dev", dim)?;

    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut b = Array2::from_shape_simple_fn((config.rank, dim), || rng.random_range(-0.05..0.05));
    let mut adam = Adam::new(config.learning_rate, b.dim());
    let mut order: Vec<usize> = (0..train.len()).collect();

    let mut checkpoints = Vec::new();
    let mut best = (f64::INFINITY, b.clone(), 0usize, 0usize);
    let mut stale = 0usize;
    let mut step = 0usize;
    let mut since_checkpoint = (0.0, 0usize);
    let mut stop_reason = StopReason::MaxEpochs;

    let mut checkpoint = |step: usize,
                          epoch: usize,
                          b: &Array2<f64>,
                          since: &mut (f64, usize),
                          checkpoints: &mut Vec<Checkpoint>|
     -> bool {
        let dev_loss = mean_loss(kind, b, &dev);
        checkpoints.push(Checkpoint {
            step,
            epoch,
            train_loss: since.0 / since.1.max(1) as f64,
            dev_loss,
        });
        log::debug!("{kind} step {step} epoch {epoch}: dev loss {dev_loss:.6}");
        *since = (0.0, 0);
        if dev_loss < best.0 {
            best = (dev_loss, b.clone(), step, epoch);
            stale = 0;
            false
        } else {
            stale += 1;
            stale > config.patience
        }
    };

    'epochs: for epoch in 1..=config.max_epochs {
        order.shuffle(&mut rng);
        for batch in order.chunks(config.batch_size) {
            let mut loss = 0.0;
            let mut grad = Array2::zeros(b.dim());
            for &i in batch {
                let ex = train[i];
                let out = if config.dropout == 0.0 {
                    objective(kind, &b, ex.embeddings.view(), ex, None)
                } else {
                    match config.dropout_target {
                        DropoutTarget::Input => {
                            let mask = dropout_mask(&mut rng, ex.embeddings.dim(), config.dropout);
                            let h = &ex.embeddings * &mask;
                            objective(kind, &b, h.view(), ex, None)
                        }
                        DropoutTarget::Projection => {
                            let mask = dropout_mask(&mut rng, (ex.len(), config.rank), config.dropout);
                            objective(kind, &b, ex.embeddings.view(), ex, Some(&mask))
                        }
                    }
                };
                loss += out.loss;
                grad += &out.grad;
            }
            let scale = 1.0 / batch.len() as f64;
            loss *= scale;
            grad *= scale;
            step += 1;
            if !loss.is_finite() || grad.iter().any(|g| !g.is_finite()) {
                return Err(ProbeError::NumericalAbort {
                    step,
                    learning_rate: config.learning_rate,
                    loss,
                });
            }
            adam.step(&mut b, &grad);
            since_checkpoint.0 += loss;
            since_checkpoint.1 += 1;
            if step.is_multiple_of(config.checkpoint_every)
                && checkpoint(step, epoch, &b, &mut since_checkpoint, &mut checkpoints)
            {
                stop_reason = StopReason::Patience;
                break 'epochs;
            }
        }
    }
    if checkpoints.last().map(|c| c.step) != Some(step) {
        let epoch = if stop_reason == StopReason::MaxEpochs {
            config.max_epochs
        } else {
            checkpoints.last().map_or(0, |c| c.epoch)
        };
        checkpoint(step, epoch, &b, &mut since_checkpoint, &mut checkpoints);
    }

    let (best_dev_loss, best_b, best_step, chosen_epoch) = best;
    let history = TrainHistory {
        checkpoints,
        best_step,
        chosen_epoch,
        best_dev_loss,
        total_steps: step,
        stop_reason,
        wall_clock_secs: started.elapsed().as_secs_f64(),
    };
    Ok((ProbeParams::new(kind, best_b)?, history))
}

#[cfg(test)]
mod tests {
    use ndarray::array;

    use super::*;
    use crate::metrics::{dspr, DsprOptions};
    use crate::probes::synthetic::planted_examples;

    fn small_config(seed: u64) -> TrainConfig {
        let mut cfg = TrainConfig::new(5e-3, 5, 0.2, seed);
        cfg.batch_size = 8;
        cfg.max_epochs = 3;
        cfg.checkpoint_every = 5;
        cfg
    }

    #[test]
    fn deterministic_for_fixed_seed() {
        let train = planted_examples(40, 2, 6, 1);
        let dev = planted_examples(10, 2, 6, 2);
        for kind in [ProbeKind::Structural, ProbeKind::Perceptron] {
            for target in [DropoutTarget::Input, DropoutTarget::Projection] {
                let cfg = TrainConfig {
                    dropout_target: target,
                    ..small_config(4)
                };
                let (p1, h1) = train_probe(kind, &train, &dev, &cfg).unwrap();
                let (p2, h2) = train_probe(kind, &train, &dev, &cfg).unwrap();
                assert_eq!(h1.without_timing(), h2.without_timing());
                assert!(p1.b.iter().zip(p2.b.iter()).all(|(a, b)| a.to_bits() == b.to_bits()));
            }
        }
        let (a, _) = train_probe(ProbeKind::Structural, &train, &dev, &small_config(4)).unwrap();
        let (b, _) = train_probe(ProbeKind::Structural, &train, &dev, &small_config(5)).unwrap();
        assert_ne!(a, b);
    }

    #[test]
    fn history_is_consistent() {
        let train = planted_examples(40, 2, 6, 1);
        let dev = planted_examples(10, 2, 6, 2);
        let (params, h) = train_probe(ProbeKind::Structural, &train, &dev, &small_config(1)).unwrap();
        assert!(h.checkpoints.windows(2).all(|w| w[0].step < w[1].step));
        assert_eq!(h.checkpoints.last().unwrap().step, h.total_steps);
        assert_eq!(h.total_steps, 3 * 5);
        assert_eq!(h.stop_reason, StopReason::MaxEpochs);
        let best = h.checkpoints.iter().find(|c| c.step == h.best_step).unwrap();
        assert_eq!(best.dev_loss, h.best_dev_loss);
        assert_eq!(best.epoch, h.chosen_epoch);
        assert!(h.checkpoints.iter().all(|c| c.dev_loss >= h.best_dev_loss));
        let refs: Vec<_> = dev.iter().collect();
        assert_eq!(mean_loss(ProbeKind::Structural, &params.b, &refs), h.best_dev_loss);
    }

    #[test]
    fn patience_zero_stops_at_first_regression() {
        let train = planted_examples(40, 2, 6, 1);
        let dev = planted_examples(10, 2, 6, 2);
        // A step size this large overshoots quickly, so dev loss regresses.
        let cfg = TrainConfig {
            learning_rate: 0.5,
            patience: 0,
            checkpoint_every: 1,
            max_epochs: 50,
            ..small_config(3)
        };
        let (_, h) = train_probe(ProbeKind::Structural, &train, &dev, &cfg).unwrap();
        assert_eq!(h.stop_reason, StopReason::Patience);
        let losses: Vec<f64> = h.checkpoints.iter().map(|c| c.dev_loss).collect();
        let (last, before) = losses.split_last().unwrap();
        assert!(before.windows(2).all(|w| w[1] < w[0]));
        assert!(last >= before.last().unwrap());
    }

    #[test]
    fn planted_solution_is_recovered() {
        let train = planted_examples(200, 2, 12, 1);
        let dev = planted_examples(50, 2, 12, 2);
        let mut cfg = TrainConfig::new(5e-3, 11, 0.0, 5);
        cfg.batch_size = 8;
        let (p, h) = train_probe(ProbeKind::Structural, &train, &dev, &cfg).unwrap();
        assert!(h.best_dev_loss < 0.05, "{}", h.best_dev_loss);
        let preds: Vec<_> = dev.iter().map(|e| p.predict_distances(e.embeddings.view())).collect();
        let score = dspr(
            dev.iter().zip(&preds).map(|(e, d)| (d.view(), &e.distances, None)),
            DsprOptions::default(),
        );
        assert!(score.value >= 0.95, "{}", score.value);
    }

    #[test]
    fn dropout_leaves_gold_untouched() {
        let train = planted_examples(20, 2, 6, 1);
        let dev = planted_examples(5, 2, 6, 2);
        let before = (train.clone(), dev.clone());
        let cfg = TrainConfig {
            dropout: 0.8,
            ..small_config(2)
        };
        train_probe(ProbeKind::Perceptron, &train, &dev, &cfg).unwrap();
        assert_eq!((train, dev), before);
    }

    #[test]
    fn errors() {
        let train = planted_examples(4, 2, 4, 1);
        let dev = planted_examples(2, 2, 4, 2);
        let cfg = TrainConfig {
            rank: 2,
            dropout: 0.0,
            ..small_config(1)
        };
        assert!(matches!(
            train_probe(ProbeKind::Structural, &[], &dev, &cfg),
            Err(ProbeError::EmptyData("train"))
        ));
        assert!(matches!(
            train_probe(ProbeKind::Structural, &train, &[], &cfg),
            Err(ProbeError::EmptyData("dev"))
        ));
        let too_wide = TrainConfig { rank: 9, ..cfg.clone() };
        assert!(matches!(
            train_probe(ProbeKind::Structural, &train, &dev, &too_wide),
            Err(ProbeError::BadConfig(_))
        ));

        let pair = crate::probes::synthetic::random_sentence(&mut ChaCha8Rng::seed_from_u64(0), 2, "x");
        let mut huge = ProbeExample::new(&pair, &Array2::zeros((2, 3))).unwrap();
        huge.embeddings = array![[1e200, 0.0, 0.0], [-1e200, 0.0, 0.0]];
        let err = train_probe(ProbeKind::Structural, &[huge], &dev, &cfg).unwrap_err();
        assert!(matches!(err, ProbeError::NumericalAbort { step: 1, .. }), "{err}");
    }
}
