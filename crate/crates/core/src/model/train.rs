use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{init_params, Example, ModelParams, ModelSpec};
use crate::error::{Error, Result};

/// Mini-batch SGD settings. The learning rate is constant.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub epochs: usize,
    pub batch_size: usize,
    pub learning_rate: f64,
    pub seed: u64,
    pub checkpoint_every: usize,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            epochs: 30,
            batch_size: 32,
            learning_rate: 0.1,
            seed: 0,
            checkpoint_every: 1,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidArgument(m));
        if self.batch_size == 0 {
            return bad("batch_size must be positive".into());
        }
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return bad(format!("learning_rate must be positive, got {}", self.learning_rate));
        }
        if self.checkpoint_every == 0 {
            return bad("checkpoint_every must be positive".into());
        }
        if self.epochs > 0 && self.checkpoint_every > self.epochs {
            return bad(format!(
                "checkpoint_every ({}) exceeds epochs ({})",
                self.checkpoint_every, self.epochs
            ));
        }
        Ok(())
    }
}

/// Parameters after epoch `step` together with the learning rate used to
/// reach them.
#[derive(Debug, Clone, PartialEq)]
pub struct Checkpoint {
    pub step: usize,
    pub eta: f64,
    pub params: ModelParams,
}

/// Trains from `init_params(spec, cfg.seed)`.
///
/// Every epoch visits the examples in a fresh seeded permutation. Within a
/// batch, gradients are summed in permutation order, so the result is
/// bit-identical for a fixed seed. Checkpoints are taken every
/// `checkpoint_every` epochs and after the last epoch; with zero epochs the
/// single checkpoint is the initialization at step 0.
pub fn train(examples: &[Example], spec: &ModelSpec, cfg: &TrainConfig) -> Result<(ModelParams, Vec<Checkpoint>)> {
    cfg.validate()?;
    if examples.is_empty() {
        return Err(Error::EmptyCorpus);
    }
    if let Some(e) = examples.iter().find(|e| e.label >= spec.num_classes) {
        return Err(Error::InvalidArgument(format!(
            "label {} outside [0, {})",
            e.label, spec.num_classes
        )));
    }
    if let Some(e) = examples.iter().find(|e| e.features.dim() != spec.dim) {
        return Err(Error::DimensionMismatch {
            expected: spec.dim,
            actual: e.features.dim(),
        });
    }

    let mut params = init_params(spec, cfg.seed);
    let mut checkpoints = Vec::new();
    if cfg.epochs == 0 {
        checkpoints.push(Checkpoint {
            step: 0,
            eta: cfg.learning_rate,
            params: params.clone(),
        });
        return Ok((params, checkpoints));
    }

    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    rng.set_stream(1);
    let mut order: Vec<usize> = (0..examples.len()).collect();
    let mut grad = vec![0.0; params.len()];
    let eta = cfg.learning_rate;

    for epoch in 1..=cfg.epochs {
        order.shuffle(&mut rng);
        for (batch_no, batch) in order.chunks(cfg.batch_size).enumerate() {
            grad.iter_mut().for_each(|g| *g = 0.0);
            let scale = 1.0 / batch.len() as f64;
            let mut batch_loss = 0.0;
            for &i in batch {
                batch_loss += params.accumulate_data_grad(&examples[i], scale, &mut grad);
            }
            if !batch_loss.is_finite() {
                return Err(Error::NonFiniteLoss {
                    epoch,
                    batch: batch_no,
                });
            }
            params.accumulate_reg_grad(1.0, &mut grad);
            for (t, g) in params.theta.iter_mut().zip(&grad) {
                *t -= eta * g;
            }
        }
        if epoch % cfg.checkpoint_every == 0 || epoch == cfg.epochs {
            checkpoints.push(Checkpoint {
                step: epoch,
                eta,
                params: params.clone(),
            });
        }
    }
    if params.theta.iter().any(|t| !t.is_finite()) {
        return Err(Error::NonFiniteLoss {
            epoch: cfg.epochs,
            batch: 0,
        });
    }
    Ok((params, checkpoints))
}
