//! Scoring heads, their training loop and the trained scoring function.

mod head;
mod optim;
mod persist;
mod train;

pub use head::{sigmoid, Head, HeadConfig, HeadKind};
pub use optim::{replay_schedule, EarlyStopping, RmsProp, StopDecision};
pub use persist::{load_model, save_model, MODEL_MAGIC, MODEL_VERSION};
pub use train::{check_labels, encode_samples, fit_head, mean_loss, train, EpochRecord, Fit, Loss, TrainConfig};

use crate::corpus::DocumentRecord;
use crate::encoder::EncoderBinding;
use crate::error::{Error, Result};
use crate::textproc::TokenSequence;

/// Anything that scores a summary against a document.
pub trait PairScorer: Sync {
    fn score(&self, doc: &DocumentRecord, summary: &TokenSequence) -> Result<f64>;
    fn identity(&self) -> String;
}

/// A trained head plus the encoder it was trained with.
#[derive(Debug, Clone)]
pub struct TrainedScorer {
    head: Head,
    binding: EncoderBinding,
    train_config: TrainConfig,
    history: Vec<EpochRecord>,
    best_epoch: usize,
}

impl TrainedScorer {
    pub fn new(
        head: Head,
        binding: EncoderBinding,
        train_config: TrainConfig,
        history: Vec<EpochRecord>,
        best_epoch: usize,
    ) -> Self {
        Self {
            head,
            binding,
            train_config,
            history,
            best_epoch,
        }
    }

    /// Score of `summary` against `doc`, in `[0, 1]`.
    pub fn predict(&self, doc: &DocumentRecord, summary: &TokenSequence) -> Result<f64> {
        let encoding = self.binding.encode(doc, summary)?;
        self.predict_encoded(encoding.as_matrix().2)
    }

    pub fn predict_encoded(&self, x: &[f64]) -> Result<f64> {
        let width = self.head.rows * self.head.cols;
        if x.len() != width {
            return Err(Error::Dimension(format!("encoding has {} values, head expects {width}", x.len())));
        }
        Ok(self.head.score(x))
    }

    pub fn head(&self) -> &Head {
        &self.head
    }

    pub fn binding(&self) -> &EncoderBinding {
        &self.binding
    }

    /// For re-attaching in-process encoder adapters after loading.
    pub fn binding_mut(&mut self) -> &mut EncoderBinding {
        &mut self.binding
    }

    pub fn train_config(&self) -> &TrainConfig {
        &self.train_config
    }

    pub fn history(&self) -> &[EpochRecord] {
        &self.history
    }

    pub fn best_epoch(&self) -> usize {
        self.best_epoch
    }
}

impl PairScorer for TrainedScorer {
    fn score(&self, doc: &DocumentRecord, summary: &TokenSequence) -> Result<f64> {
        self.predict(doc, summary)
    }

    fn identity(&self) -> String {
        format!("{}+{}", self.head.config.kind, self.binding.identity())
    }
}
