use serde::{Deserialize, Serialize};

/// Learning rate as a function of the optimizer step (0-based).
///
/// Both variants warm up linearly from 0 to `peak_lr` over `warmup_steps`
/// and then decay linearly to 0 at `total_steps`. The constant variant
/// follows the same curve until `cutoff_step` and stays at `constant_lr`
/// from there on.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum LrSchedule {
    WarmupLinearDecay {
        warmup_steps: usize,
        peak_lr: f64,
        total_steps: usize,
    },
    WarmupThenConstant {
        warmup_steps: usize,
        peak_lr: f64,
        total_steps: usize,
        cutoff_step: usize,
        constant_lr: f64,
    },
}

impl LrSchedule {
    pub fn warmup_linear_decay(warmup_steps: usize, peak_lr: f64, total_steps: usize) -> Self {
        LrSchedule::WarmupLinearDecay {
            warmup_steps,
            peak_lr,
            total_steps,
        }
    }

    /// The same decay curve with a switch to `constant_lr` at `cutoff_step`.
    pub fn with_constant_after(self, cutoff_step: usize, constant_lr: f64) -> Self {
        let (warmup_steps, peak_lr, total_steps) = self.base();
        LrSchedule::WarmupThenConstant {
            warmup_steps,
            peak_lr,
            total_steps,
            cutoff_step,
            constant_lr,
        }
    }

    fn base(&self) -> (usize, f64, usize) {
        match *self {
            LrSchedule::WarmupLinearDecay {
                warmup_steps,
                peak_lr,
                total_steps,
            }
            | LrSchedule::WarmupThenConstant {
                warmup_steps,
                peak_lr,
                total_steps,
                ..
            } => (warmup_steps, peak_lr, total_steps),
        }
    }

    pub fn peak_lr(&self) -> f64 {
        self.base().1
    }

    pub fn lr_at(&self, step: usize) -> f64 {
        if let LrSchedule::WarmupThenConstant {
            cutoff_step,
            constant_lr,
            ..
        } = *self
        {
            if step >= cutoff_step {
                return constant_lr;
            }
        }
        let (warmup, peak, total) = self.base();
        if step < warmup {
            peak * (step as f64 / warmup as f64)
        } else if step < total {
            peak * ((total - step) as f64 / (total - warmup) as f64)
        } else {
            0.0
        }
    }
}
