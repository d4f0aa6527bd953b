//! Stochastic weight averaging.
//!
//! An SWA run trains exactly like a vanilla run up to `cutoff_epoch`, then
//! holds the learning rate at `constant_lr` and folds the weights at the end of
//! every later epoch into a running mean. The Adam moments carry over across
//! the switch. The model has no normalization layers, so there is no
//! batch-statistics refresh after averaging.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::textmodel::{accuracy, Encoded, LrSchedule, ModelWeights, TrainConfig, Trainer};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Variant {
    Vanilla,
    Swa,
}

impl Variant {
    pub const ALL: [Variant; 2] = [Variant::Vanilla, Variant::Swa];

    pub fn as_str(&self) -> &'static str {
        match self {
            Variant::Vanilla => "vanilla",
            Variant::Swa => "swa",
        }
    }
}

impl fmt::Display for Variant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Variant {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "vanilla" => Ok(Variant::Vanilla),
            "swa" => Ok(Variant::Swa),
            other => Err(Error::input(format!("unknown variant '{other}'"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SwaConfig {
    /// Epochs trained on the vanilla schedule before averaging starts.
    pub cutoff_epoch: usize,
    pub constant_lr: f64,
    pub candidate_lrs: Vec<f64>,
    /// Pick `constant_lr` per seed from `candidate_lrs` by dev accuracy.
    pub select_lr: bool,
}

impl Default for SwaConfig {
    fn default() -> Self {
        SwaConfig {
            cutoff_epoch: 2,
            constant_lr: 1.8e-2,
            candidate_lrs: vec![1.8e-2, 2.25e-2],
            select_lr: true,
        }
    }
}

impl SwaConfig {
    pub fn validate(&self, epochs: usize) -> Result<()> {
        if self.cutoff_epoch == 0 || self.cutoff_epoch >= epochs {
            return Err(Error::input(format!(
                "swa.cutoff_epoch must satisfy 1 <= cutoff_epoch < epochs ({epochs}), got {}",
                self.cutoff_epoch
            )));
        }
        let lr_ok = |lr: f64| lr >= 0.0 && lr.is_finite();
        if !lr_ok(self.constant_lr) {
            return Err(Error::input("swa.constant_lr must be a finite number >= 0"));
        }
        if self.select_lr {
            if self.candidate_lrs.is_empty() {
                return Err(Error::input("swa.candidate_lrs is empty but swa.select_lr is set"));
            }
            if !self.candidate_lrs.iter().all(|&lr| lr_ok(lr)) {
                return Err(Error::input("swa.candidate_lrs must be finite numbers >= 0"));
            }
        }
        Ok(())
    }

    /// The vanilla schedule with the constant tail starting at the first step
    /// of epoch `cutoff_epoch + 1`.
    pub fn schedule(&self, train: &TrainConfig, n_train: usize, constant_lr: f64) -> LrSchedule {
        let cutoff_step = self.cutoff_epoch * train.steps_per_epoch(n_train);
        train.vanilla_schedule(n_train).with_constant_after(cutoff_step, constant_lr)
    }
}

/// Running element-wise mean of weight snapshots.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct SwaState {
    avg: Option<ModelWeights>,
    n_averaged: usize,
}

impl SwaState {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn n_averaged(&self) -> usize {
        self.n_averaged
    }

    pub fn average(&self) -> Option<&ModelWeights> {
        self.avg.as_ref()
    }

    pub fn into_average(self) -> Option<ModelWeights> {
        self.avg
    }

    /// `avg <- (avg * n + new) / (n + 1)`; the first update copies `new`.
    pub fn update(&mut self, new: &ModelWeights) -> Result<()> {
        match &mut self.avg {
            None => self.avg = Some(new.clone()),
            Some(avg) => {
                if avg.dims() != new.dims() {
                    return Err(Error::input(format!(
                        "cannot average weights of shape {:?} into {:?}",
                        new.dims(),
                        avg.dims()
                    )));
                }
                let n = self.n_averaged as f64;
                for (a, x) in avg.params_mut().iter_mut().zip(new.params()) {
                    *a = (*a * n + x) / (n + 1.0);
                }
            }
        }
        self.n_averaged += 1;
        Ok(())
    }
}

pub fn swa_update(mut state: SwaState, new: &ModelWeights) -> Result<SwaState> {
    state.update(new)?;
    Ok(state)
}

#[derive(Debug, Clone)]
pub struct SwaOutcome {
    /// Averaged weights.
    pub weights: ModelWeights,
    /// Snapshots that entered the average (epochs `cutoff + 1 ..= epochs`).
    pub contributing: Vec<ModelWeights>,
    /// Live weights at the end of every epoch.
    pub epoch_snapshots: Vec<ModelWeights>,
    /// Dev accuracy of the live weights per epoch.
    pub epoch_dev_accuracy: Vec<f64>,
    /// Dev accuracy of the averaged model.
    pub dev_accuracy: f64,
    pub n_averaged: usize,
    pub constant_lr: f64,
    pub lr_trace: Vec<f64>,
}

pub fn train_swa(
    config: &TrainConfig,
    swa: &SwaConfig,
    constant_lr: f64,
    vocab_size: usize,
    train: &[Encoded],
    dev: &[Encoded],
    seed: u64,
) -> Result<SwaOutcome> {
    swa.validate(config.epochs)?;
    let schedule = swa.schedule(config, train.len(), constant_lr);
    let mut trainer = Trainer::new(config, vocab_size, train, seed)?;
    let mut state = SwaState::new();
    let mut epoch_snapshots = Vec::with_capacity(config.epochs);
    let mut epoch_dev_accuracy = Vec::with_capacity(config.epochs);
    for epoch in 1..=config.epochs {
        trainer.run_epoch(&schedule)?;
        if epoch > swa.cutoff_epoch {
            state.update(trainer.weights())?;
        }
        epoch_snapshots.push(trainer.weights().clone());
        epoch_dev_accuracy.push(accuracy(trainer.weights(), dev)?);
    }
    let lr_trace = trainer.lr_trace().to_vec();
    let n_averaged = state.n_averaged();
    let weights = state.into_average().expect("cutoff_epoch < epochs");
    let dev_accuracy = accuracy(&weights, dev)?;
    Ok(SwaOutcome {
        contributing: epoch_snapshots[swa.cutoff_epoch..].to_vec(),
        weights,
        epoch_snapshots,
        epoch_dev_accuracy,
        dev_accuracy,
        n_averaged,
        constant_lr,
        lr_trace,
    })
}

/// Candidate with the highest dev accuracy; ties go to the smaller learning rate.
pub fn select_swa_lr(results: &[(f64, f64)]) -> Result<f64> {
    let mut best: Option<(f64, f64)> = None;
    for &(lr, acc) in results {
        best = match best {
            None => Some((lr, acc)),
            Some((blr, bacc)) if acc > bacc || (acc == bacc && lr < blr) => Some((lr, acc)),
            keep => keep,
        };
    }
    best.map(|(lr, _)| lr)
        .ok_or_else(|| Error::input("no SWA learning-rate candidates to select from"))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::textmodel::{train, Dims};

    fn w(values: &[f64]) -> ModelWeights {
        // 1 x 0 x 0 dims has 2 params (the output bias); pad others via from_params
        let dims = Dims::new(0, 0, 0);
        let mut p = vec![0.0; dims.n_params()];
        p[..values.len()].copy_from_slice(values);
        ModelWeights::from_params(dims, p).unwrap()
    }

    #[test]
    fn first_update_copies() {
        let s = swa_update(SwaState::new(), &w(&[1.5, -2.0])).unwrap();
        assert_eq!(s.n_averaged(), 1);
        assert_eq!(s.average().unwrap(), &w(&[1.5, -2.0]));
    }

    #[test]
    fn running_mean_arithmetic() {
        let s = swa_update(SwaState::new(), &w(&[0.0, 0.0])).unwrap();
        let s = swa_update(s, &w(&[2.0, 4.0])).unwrap();
        assert_eq!(s.n_averaged(), 2);
        assert_eq!(s.average().unwrap().params(), &[1.0, 2.0]);

        let s = SwaState {
            avg: Some(w(&[3.0])),
            n_averaged: 2,
        };
        let s = swa_update(s, &w(&[0.0])).unwrap();
        assert_eq!(s.n_averaged(), 3);
        assert_eq!(s.average().unwrap().params()[0], 2.0);
    }

    #[test]
    fn shape_mismatch_is_rejected() {
        let s = swa_update(SwaState::new(), &ModelWeights::zeros(Dims::new(2, 1, 1))).unwrap();
        assert!(swa_update(s, &ModelWeights::zeros(Dims::new(3, 1, 1))).is_err());
    }

    #[test]
    fn lr_selection() {
        assert_eq!(select_swa_lr(&[(6e-06, 0.94), (7.5e-06, 0.95)]).unwrap(), 7.5e-06);
        assert_eq!(select_swa_lr(&[(7.5e-06, 0.94), (6e-06, 0.94)]).unwrap(), 6e-06);
        assert_eq!(select_swa_lr(&[(6e-06, 0.5)]).unwrap(), 6e-06);
        assert!(select_swa_lr(&[]).is_err());
    }

    #[test]
    fn config_validation() {
        let cfg = SwaConfig::default();
        assert!(cfg.validate(5).is_ok());
        assert!(cfg.validate(2).is_err());
        assert!(SwaConfig { cutoff_epoch: 0, ..cfg.clone() }.validate(5).is_err());
        assert!(SwaConfig { candidate_lrs: vec![], ..cfg }.validate(5).is_err());
    }

    fn toy() -> Vec<Encoded> {
        (0..40)
            .map(|i| Encoded {
                tokens: vec![2 + (i % 2), 4 + (i / 2) % 3],
                label: (i % 2) as u8,
            })
            .collect()
    }

    fn small_config() -> TrainConfig {
        TrainConfig {
            epochs: 5,
            batch_size: 8,
            embed_dim: 3,
            hidden_dim: 4,
            ..TrainConfig::default()
        }
    }

    #[test]
    fn three_snapshots_after_cutoff_two_of_five() {
        let data = toy();
        let cfg = small_config();
        let out = train_swa(&cfg, &SwaConfig::default(), 6e-3, 7, &data, &data, 1).unwrap();
        assert_eq!(out.n_averaged, 3);
        assert_eq!(out.contributing.len(), 3);
        assert_eq!(out.contributing[..], out.epoch_snapshots[2..]);
        let spe = cfg.steps_per_epoch(data.len());
        assert!(out.lr_trace[2 * spe..].iter().all(|&lr| lr == 6e-3));
    }

    #[test]
    fn zero_constant_lr_freezes_the_cutoff_weights() {
        let data = toy();
        let cfg = small_config();
        let out = train_swa(&cfg, &SwaConfig::default(), 0.0, 7, &data, &data, 4).unwrap();
        for snap in &out.contributing {
            assert_eq!(snap, &out.epoch_snapshots[1]);
        }
        let frozen = out.epoch_snapshots[1].params();
        for (a, b) in out.weights.params().iter().zip(frozen) {
            assert!((a - b).abs() <= 1e-15 * b.abs().max(1.0));
        }
    }

    #[test]
    fn matches_vanilla_up_to_cutoff() {
        let data = toy();
        let cfg = small_config();
        let vanilla = train(&cfg, &cfg.vanilla_schedule(data.len()), 7, &data, &data, 9).unwrap();
        let swa = train_swa(&cfg, &SwaConfig::default(), 6e-3, 7, &data, &data, 9).unwrap();
        assert_eq!(vanilla.snapshots[..2], swa.epoch_snapshots[..2]);
        assert_ne!(vanilla.snapshots[2], swa.epoch_snapshots[2]);
    }
}
