use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use super::{adam_step, loss_and_grad, predict, AdamConfig, AdamState, Dims, Encoded, LrSchedule, ModelWeights};
use crate::rng::{seeded, SeededRng};
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainConfig {
    pub epochs: usize,
    pub batch_size: usize,
    pub peak_lr: f64,
    /// Warmup length as a fraction of the total number of optimizer steps.
    pub warmup_ratio: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
    pub embed_dim: usize,
    pub hidden_dim: usize,
}

impl Default for TrainConfig {
    fn default() -> Self {
        let adam = AdamConfig::default();
        TrainConfig {
            epochs: 5,
            batch_size: 16,
            peak_lr: 3e-2,
            warmup_ratio: 0.05,
            beta1: adam.beta1,
            beta2: adam.beta2,
            epsilon: adam.epsilon,
            embed_dim: 32,
            hidden_dim: 32,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |field: &str, why: &str| Err(Error::input(format!("train.{field}: {why}")));
        if self.epochs == 0 {
            return bad("epochs", "must be at least 1");
        }
        if self.batch_size == 0 {
            return bad("batch_size", "must be at least 1");
        }
        if !(self.peak_lr > 0.0 && self.peak_lr.is_finite()) {
            return bad("peak_lr", "must be a positive finite number");
        }
        if !(0.0..1.0).contains(&self.warmup_ratio) {
            return bad("warmup_ratio", "must lie in [0, 1)");
        }
        if !(0.0..1.0).contains(&self.beta1) || !(0.0..1.0).contains(&self.beta2) {
            return bad("beta1/beta2", "must lie in [0, 1)");
        }
        if !(self.epsilon > 0.0) {
            return bad("epsilon", "must be positive");
        }
        if self.embed_dim == 0 || self.hidden_dim == 0 {
            return bad("embed_dim/hidden_dim", "must be at least 1");
        }
        Ok(())
    }

    pub fn adam(&self) -> AdamConfig {
        AdamConfig {
            beta1: self.beta1,
            beta2: self.beta2,
            epsilon: self.epsilon,
        }
    }

    pub fn dims(&self, vocab_size: usize) -> Dims {
        Dims::new(vocab_size, self.embed_dim, self.hidden_dim)
    }

    pub fn steps_per_epoch(&self, n_train: usize) -> usize {
        n_train.div_ceil(self.batch_size)
    }

    pub fn total_steps(&self, n_train: usize) -> usize {
        self.epochs * self.steps_per_epoch(n_train)
    }

    pub fn warmup_steps(&self, n_train: usize) -> usize {
        (self.warmup_ratio * self.total_steps(n_train) as f64).round() as usize
    }

    /// Warmup then linear decay to zero over the whole run.
    pub fn vanilla_schedule(&self, n_train: usize) -> LrSchedule {
        LrSchedule::warmup_linear_decay(self.warmup_steps(n_train), self.peak_lr, self.total_steps(n_train))
    }
}

/// Step-by-step training state. Weight init and every epoch shuffle draw from
/// one generator seeded with the run seed, so two trainers built with the same
/// seed and fed the same schedule stay bit-identical.
pub struct Trainer<'a> {
    config: &'a TrainConfig,
    adam_cfg: AdamConfig,
    train: &'a [Encoded],
    weights: ModelWeights,
    adam: AdamState,
    rng: SeededRng,
    order: Vec<usize>,
    epoch: usize,
    step: usize,
    lr_trace: Vec<f64>,
}

impl<'a> Trainer<'a> {
    pub fn new(config: &'a TrainConfig, vocab_size: usize, train: &'a [Encoded], seed: u64) -> Result<Self> {
        config.validate()?;
        if train.is_empty() {
            return Err(Error::input("training set is empty"));
        }
        if let Some(ex) = train
            .iter()
            .find(|ex| ex.label > 1 || ex.tokens.is_empty() || ex.tokens.iter().any(|&t| t >= vocab_size))
        {
            return Err(Error::input(format!("training example not encoded with this vocabulary: {ex:?}")));
        }
        let mut rng = seeded(seed);
        let dims = config.dims(vocab_size);
        let weights = ModelWeights::init(dims, &mut rng);
        Ok(Trainer {
            config,
            adam_cfg: config.adam(),
            train,
            adam: AdamState::new(dims.n_params()),
            weights,
            rng,
            order: Vec::with_capacity(train.len()),
            epoch: 0,
            step: 0,
            lr_trace: Vec::new(),
        })
    }

    /// Runs one shuffled pass over the training set and returns its mean batch loss.
    pub fn run_epoch(&mut self, schedule: &LrSchedule) -> Result<f64> {
        self.epoch += 1;
        self.order.clear();
        self.order.extend(0..self.train.len());
        self.order.shuffle(&mut self.rng);

        let mut loss_sum = 0.0;
        let mut n_batches = 0usize;
        let mut batch: Vec<&Encoded> = Vec::with_capacity(self.config.batch_size);
        for chunk in self.order.chunks(self.config.batch_size) {
            batch.clear();
            batch.extend(chunk.iter().map(|&i| &self.train[i]));
            let diverged = |step| Error::Diverged {
                epoch: self.epoch,
                step,
                loss: f64::NAN,
            };
            let (loss, grad) = match loss_and_grad(&self.weights, &batch) {
                Ok(v) => v,
                Err(Error::Numeric { .. }) => return Err(diverged(self.step)),
                Err(e) => return Err(e),
            };
            if !loss.is_finite() {
                return Err(Error::Diverged {
                    epoch: self.epoch,
                    step: self.step,
                    loss,
                });
            }
            let lr = schedule.lr_at(self.step);
            match adam_step(&mut self.adam, &mut self.weights, &grad, lr, &self.adam_cfg) {
                Ok(()) => {}
                Err(Error::Numeric { .. }) => return Err(diverged(self.step)),
                Err(e) => return Err(e),
            }
            if !self.weights.is_finite() {
                return Err(diverged(self.step));
            }
            self.lr_trace.push(lr);
            self.step += 1;
            loss_sum += loss;
            n_batches += 1;
        }
        Ok(loss_sum / n_batches as f64)
    }

    pub fn weights(&self) -> &ModelWeights {
        &self.weights
    }

    pub fn epoch(&self) -> usize {
        self.epoch
    }

    pub fn step(&self) -> usize {
        self.step
    }

    pub fn lr_trace(&self) -> &[f64] {
        &self.lr_trace
    }

    pub fn into_weights(self) -> ModelWeights {
        self.weights
    }
}

#[derive(Debug, Clone)]
pub struct TrainOutcome {
    pub weights: ModelWeights,
    /// Copy of the live weights at the end of every epoch, in order.
    pub snapshots: Vec<ModelWeights>,
    pub dev_accuracy: Vec<f64>,
    pub epoch_loss: Vec<f64>,
    /// Learning rate used at every optimizer step.
    pub lr_trace: Vec<f64>,
}

pub fn accuracy(weights: &ModelWeights, examples: &[Encoded]) -> Result<f64> {
    if examples.is_empty() {
        return Err(Error::input("cannot compute accuracy on an empty set"));
    }
    let mut correct = 0usize;
    for ex in examples {
        if predict(weights, &ex.tokens)?.label == ex.label {
            correct += 1;
        }
    }
    Ok(correct as f64 / examples.len() as f64)
}

/// Mini-batch Adam training for `config.epochs` epochs under `schedule`.
pub fn train(
    config: &TrainConfig,
    schedule: &LrSchedule,
    vocab_size: usize,
    train: &[Encoded],
    dev: &[Encoded],
    seed: u64,
) -> Result<TrainOutcome> {
    let mut trainer = Trainer::new(config, vocab_size, train, seed)?;
    let mut snapshots = Vec::with_capacity(config.epochs);
    let mut dev_accuracy = Vec::with_capacity(config.epochs);
    let mut epoch_loss = Vec::with_capacity(config.epochs);
    for _ in 0..config.epochs {
        epoch_loss.push(trainer.run_epoch(schedule)?);
        snapshots.push(trainer.weights().clone());
        dev_accuracy.push(accuracy(trainer.weights(), dev)?);
    }
    let lr_trace = trainer.lr_trace().to_vec();
    Ok(TrainOutcome {
        weights: trainer.into_weights(),
        snapshots,
        dev_accuracy,
        epoch_loss,
        lr_trace,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn toy() -> (Vec<Encoded>, usize) {
        // token 2 => positive, token 3 => negative, 4/5 are noise
        let mut v = Vec::new();
        for i in 0..64 {
            let label = (i % 2) as u8;
            let signal = if label == 1 { 2 } else { 3 };
            v.push(Encoded {
                tokens: vec![signal, 4 + (i / 2) % 2],
                label,
            });
        }
        (v, 6)
    }

    fn config() -> TrainConfig {
        TrainConfig {
            epochs: 3,
            batch_size: 8,
            embed_dim: 4,
            hidden_dim: 4,
            ..TrainConfig::default()
        }
    }

    #[test]
    fn same_seed_is_bit_identical() {
        let (data, v) = toy();
        let cfg = config();
        let sched = cfg.vanilla_schedule(data.len());
        let a = train(&cfg, &sched, v, &data, &data, 11).unwrap();
        let b = train(&cfg, &sched, v, &data, &data, 11).unwrap();
        assert_eq!(a.weights, b.weights);
        assert_eq!(a.lr_trace, b.lr_trace);
        let c = train(&cfg, &sched, v, &data, &data, 12).unwrap();
        assert_ne!(a.weights, c.weights);
    }

    #[test]
    fn one_snapshot_per_epoch_and_last_equals_final() {
        let (data, v) = toy();
        let cfg = config();
        let out = train(&cfg, &cfg.vanilla_schedule(data.len()), v, &data, &data, 0).unwrap();
        assert_eq!(out.snapshots.len(), 3);
        assert_eq!(out.dev_accuracy.len(), 3);
        assert_eq!(out.snapshots[2], out.weights);
        assert_ne!(out.snapshots[0], out.snapshots[1]);
        assert_eq!(out.lr_trace.len(), cfg.total_steps(data.len()));
    }

    #[test]
    fn learns_a_separable_toy_task() {
        let (data, v) = toy();
        let cfg = TrainConfig { epochs: 10, ..config() };
        let out = train(&cfg, &cfg.vanilla_schedule(data.len()), v, &data, &data, 5).unwrap();
        assert_eq!(*out.dev_accuracy.last().unwrap(), 1.0);
    }

    #[test]
    fn divergence_is_reported_with_position() {
        let (data, v) = toy();
        let cfg = TrainConfig {
            peak_lr: 1e300,
            warmup_ratio: 0.0,
            ..config()
        };
        let err = train(&cfg, &cfg.vanilla_schedule(data.len()), v, &data, &data, 0).unwrap_err();
        assert!(matches!(err, Error::Diverged { epoch: 1, .. }), "{err:?}");
    }

    #[test]
    fn config_validation() {
        assert!(TrainConfig { epochs: 0, ..config() }.validate().is_err());
        assert!(TrainConfig { peak_lr: 0.0, ..config() }.validate().is_err());
        assert!(TrainConfig { warmup_ratio: 1.0, ..config() }.validate().is_err());
        assert!(config().validate().is_ok());
    }

    #[test]
    fn out_of_vocab_index_is_rejected() {
        let data = vec![Encoded { tokens: vec![9], label: 0 }];
        let cfg = config();
        assert!(Trainer::new(&cfg, 4, &data, 0).is_err());
    }
}
