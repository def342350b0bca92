use std::io::Write;

use log::{debug, info};
use rand::seq::SliceRandom;
use rand_chacha::ChaCha8Rng;

use super::{build_forward, init_params, joint_loss_graph, predict_batch, Batch, LossParts, ModelConfig, ModelError, ModelParameters};
use crate::data::WindowSample;
use crate::numcore::{adam_step, AdamConfig, AdamState, Graph, Real, RngStream, SeedSplitter, Tensor, TensorError};

/// Averages over one completed epoch.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EpochRecord {
    pub epoch: usize,
    pub loss: f64,
    pub reconstruction: f64,
    pub rul: f64,
    pub valid_rmse: Option<f64>,
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct TrainHistory {
    pub epochs: Vec<EpochRecord>,
}

impl TrainHistory {
    /// CSV with header `epoch,loss,reconstruction_loss,rul_loss,valid_rmse`;
    /// the last field is empty without validation data.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<(), ModelError> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["epoch", "loss", "reconstruction_loss", "rul_loss", "valid_rmse"])?;
        for r in &self.epochs {
            let valid = r.valid_rmse.map(|v| v.to_string()).unwrap_or_default();
            w.write_record([r.epoch.to_string(), r.loss.to_string(), r.reconstruction.to_string(), r.rul.to_string(), valid])?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Adam over mini-batches of windows, with seeded dropout and shuffling.
pub struct Trainer<T> {
    params: ModelParameters<T>,
    config: ModelConfig,
    adam: AdamState<T>,
    dropout_rng: ChaCha8Rng,
    batch_rng: ChaCha8Rng,
    epochs_done: usize,
}

impl<T: Real> Trainer<T> {
    pub fn new(config: &ModelConfig, params: ModelParameters<T>) -> Result<Self, ModelError> {
        let issues = config.validate();
        if !issues.is_empty() {
            return Err(ModelError::Config(issues));
        }
        let seeds = SeedSplitter::new(config.seed);
        let owned: Vec<Tensor<T>> = params.tensors().into_iter().cloned().collect();
        Ok(Self {
            adam: AdamState::new(&owned, AdamConfig::default()),
            params,
            config: config.clone(),
            dropout_rng: seeds.stream(RngStream::Dropout),
            batch_rng: seeds.stream(RngStream::Batching),
            epochs_done: 0,
        })
    }

    /// Freshly initialised parameters from the config's seed.
    pub fn from_seed(config: &ModelConfig) -> Result<Self, ModelError> {
        let params = init_params(config, &mut SeedSplitter::new(config.seed).stream(RngStream::Init));
        Self::new(config, params)
    }

    pub fn params(&self) -> &ModelParameters<T> {
        &self.params
    }

    pub fn into_params(self) -> ModelParameters<T> {
        self.params
    }

    /// Loss and parameter gradients of one batch, without updating.
    pub fn gradients(&mut self, batch: &Batch<T>) -> Result<(LossParts, Vec<Tensor<T>>), ModelError> {
        let mut g = Graph::new();
        let vars = self.params.bind(&mut g, true);
        let teacher = self.config.teacher_forcing();
        let nodes = build_forward(&mut g, &vars, batch, &self.config, teacher, Some(&mut self.dropout_rng))?;
        let targets: Vec<_> = batch.targets.iter().map(|t| g.constant(t.clone())).collect();
        let labels = g.constant(batch.labels.clone());
        let loss = joint_loss_graph(&mut g, &nodes.y_hat, &targets, nodes.rul, labels, self.config.effective_alpha())?;
        let parts = LossParts {
            total: g.value(loss.total).item()?.as_f64(),
            reconstruction: g.value(loss.reconstruction).item()?.as_f64(),
            rul: g.value(loss.rul).item()?.as_f64(),
        };
        let mut grads = g.backward(loss.total)?;
        let grads = vars.vars().into_iter().map(|v| grads.take(v).expect("parameter leaves carry gradients")).collect();
        Ok((parts, grads))
    }

    /// One optimiser update on `batch`; returns the pre-update loss.
    pub fn step(&mut self, batch: &Batch<T>) -> Result<LossParts, ModelError> {
        let (parts, mut grads) = self.gradients(batch)?;
        if !parts.total.is_finite() {
            return Err(ModelError::Divergence(format!("loss {}", parts.total)));
        }
        if let Some(limit) = self.config.grad_clip {
            clip_global_norm(&mut grads, limit);
        }
        let mut owned: Vec<Tensor<T>> = self.params.tensors().into_iter().cloned().collect();
        adam_step(&mut owned, &grads, &mut self.adam, self.config.learning_rate)?;
        for (slot, value) in self.params.tensors_mut().into_iter().zip(owned) {
            *slot = value;
        }
        Ok(parts)
    }

    /// One shuffled pass; the final batch may be smaller than `batch_size`.
    pub fn epoch(&mut self, samples: &[WindowSample]) -> Result<LossParts, ModelError> {
        if samples.is_empty() {
            return Err(ModelError::EmptyDataset);
        }
        let mut order: Vec<usize> = (0..samples.len()).collect();
        order.shuffle(&mut self.batch_rng);
        let mut sum = LossParts::default();
        for (k, chunk) in order.chunks(self.config.batch_size).enumerate() {
            let picked: Vec<&WindowSample> = chunk.iter().map(|&i| &samples[i]).collect();
            let batch = Batch::from_samples(&picked)?;
            let parts = self.step(&batch).map_err(|e| match e {
                ModelError::Tensor(TensorError::NonFinite { op }) => {
                    ModelError::Divergence(format!("epoch {}, batch {k}: {op} produced a non-finite value", self.epochs_done + 1))
                }
                ModelError::Divergence(msg) => ModelError::Divergence(format!("epoch {}, batch {k}: {msg}", self.epochs_done + 1)),
                other => other,
            })?;
            let w = picked.len() as f64;
            sum.total += parts.total * w;
            sum.reconstruction += parts.reconstruction * w;
            sum.rul += parts.rul * w;
            debug!("batch {k}: loss {:.6}", parts.total);
        }
        self.epochs_done += 1;
        let n = samples.len() as f64;
        Ok(LossParts { total: sum.total / n, reconstruction: sum.reconstruction / n, rul: sum.rul / n })
    }
}

fn clip_global_norm<T: Real>(grads: &mut [Tensor<T>], limit: f64) {
    let norm = grads.iter().flat_map(|g| g.values()).map(|v| v.as_f64().powi(2)).sum::<f64>().sqrt();
    if norm > limit {
        let factor = T::from_f64(limit / norm);
        for g in grads.iter_mut() {
            g.values_mut().iter_mut().for_each(|v| *v *= factor);
        }
    }
}

/// Root mean squared error of clamped estimates against window labels.
pub fn window_rmse<T: Real>(params: &ModelParameters<T>, config: &ModelConfig, samples: &[WindowSample]) -> Result<f64, ModelError> {
    if samples.is_empty() {
        return Err(ModelError::EmptyDataset);
    }
    let refs: Vec<&WindowSample> = samples.iter().collect();
    let preds = predict_batch(params, config, &refs)?;
    let sq: f64 = preds.iter().zip(samples).map(|(p, s)| (p - s.rul as f64).powi(2)).sum();
    Ok((sq / samples.len() as f64).sqrt())
}

/// Trains from seeded initial parameters for `config.epochs` epochs.
pub fn fit<T: Real>(
    train: &[WindowSample],
    valid: Option<&[WindowSample]>,
    config: &ModelConfig,
) -> Result<(ModelParameters<T>, TrainHistory), ModelError> {
    if train.is_empty() {
        return Err(ModelError::EmptyDataset);
    }
    let mut trainer = Trainer::<T>::from_seed(config)?;
    let mut history = TrainHistory::default();
    for epoch in 1..=config.epochs {
        let parts = trainer.epoch(train)?;
        let valid_rmse = match valid {
            Some(v) if !v.is_empty() => Some(window_rmse(trainer.params(), config, v)?),
            _ => None,
        };
        info!(
            "epoch {epoch}/{}: loss {:.4} (rec {:.4}, rul {:.4}){}",
            config.epochs,
            parts.total,
            parts.reconstruction,
            parts.rul,
            valid_rmse.map(|r| format!(", valid rmse {r:.3}")).unwrap_or_default()
        );
        history.epochs.push(EpochRecord { epoch, loss: parts.total, reconstruction: parts.reconstruction, rul: parts.rul, valid_rmse });
    }
    Ok((trainer.into_params(), history))
}
