//! Mini-batch training with RMSProp and early stopping.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::head::{sigmoid, Head, HeadConfig};
use super::optim::{EarlyStopping, RmsProp, StopDecision};
use super::TrainedScorer;
use crate::corpus::Corpus;
use crate::encoder::EncoderBinding;
use crate::error::{Error, Result};
use crate::rng::{derive_seed, seeded};
use crate::sampler::{LabeledSample, Provenance};
use rand::seq::SliceRandom;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Loss {
    Mse,
    Bce,
}

impl Loss {
    /// `(loss, d loss / d logit)` for a sigmoid output with logit `z`.
    pub fn of_logit(self, z: f64, y: f64) -> (f64, f64) {
        let p = sigmoid(z);
        match self {
            Loss::Mse => ((p - y).powi(2), 2.0 * (p - y) * p * (1.0 - p)),
            // log(1 + e^z) - y·z, written to avoid overflow
            Loss::Bce => (z.max(0.0) - y * z + (-z.abs()).exp().ln_1p(), p - y),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrainConfig {
    pub loss: Loss,
    #[serde(default = "defaults::learning_rate")]
    pub learning_rate: f64,
    #[serde(default = "defaults::rho")]
    pub rho: f64,
    #[serde(default = "defaults::epsilon")]
    pub epsilon: f64,
    #[serde(default = "defaults::patience")]
    pub early_stop_patience: usize,
    #[serde(default = "defaults::max_epochs")]
    pub max_epochs: usize,
    #[serde(default = "defaults::batch_size")]
    pub batch_size: usize,
    #[serde(default)]
    pub seed: u64,
}

mod defaults {
    pub fn learning_rate() -> f64 {
        1e-3
    }
    pub fn rho() -> f64 {
        0.9
    }
    pub fn epsilon() -> f64 {
        1e-7
    }
    pub fn patience() -> usize {
        3
    }
    pub fn max_epochs() -> usize {
        50
    }
    pub fn batch_size() -> usize {
        32
    }
}

impl TrainConfig {
    pub fn new(loss: Loss, seed: u64) -> Self {
        Self {
            loss,
            learning_rate: defaults::learning_rate(),
            rho: defaults::rho(),
            epsilon: defaults::epsilon(),
            early_stop_patience: defaults::patience(),
            max_epochs: defaults::max_epochs(),
            batch_size: defaults::batch_size(),
            seed,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::Config(m.to_string()));
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return bad("learning_rate must be positive");
        }
        if !(0.0..1.0).contains(&self.rho) || self.epsilon <= 0.0 {
            return bad("rho must lie in [0, 1) and epsilon must be positive");
        }
        if self.early_stop_patience == 0 || self.max_epochs == 0 || self.batch_size == 0 {
            return bad("patience, max_epochs and batch_size must be at least 1");
        }
        Ok(())
    }
}

/// Rejects label sets the loss is not meant for: cross-entropy needs hard
/// 0/1 labels, squared error is reserved for mutation-labeled data.
pub fn check_labels(loss: Loss, samples: &[LabeledSample]) -> Result<()> {
    match loss {
        Loss::Bce => match samples.iter().find(|s| s.label != 0.0 && s.label != 1.0) {
            Some(s) => Err(Error::LabelLossMismatch(format!(
                "bce needs 0/1 labels, found {} for {}",
                s.label, s.doc_id
            ))),
            None => Ok(()),
        },
        Loss::Mse => match samples.iter().find(|s| s.provenance == Provenance::Crosspair) {
            Some(_) => Err(Error::LabelLossMismatch(
                "mse is for mutation-labeled samples, found cross-paired negatives".into(),
            )),
            None => Ok(()),
        },
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EpochRecord {
    pub epoch: usize,
    pub train_loss: f64,
    pub val_loss: f64,
}

#[derive(Debug, Clone)]
pub struct Fit {
    pub head: Head,
    pub history: Vec<EpochRecord>,
    pub best_epoch: usize,
}

/// Encodes every sample against its document, in sample order.
pub fn encode_samples(corpus: &Corpus, samples: &[LabeledSample], binding: &EncoderBinding) -> Result<Vec<Vec<f64>>> {
    samples
        .par_iter()
        .map(|s| {
            let doc = corpus.require_document(&s.doc_id)?;
            binding.encode(doc, &s.summary_tokens).map(|e| e.into_data())
        })
        .collect()
}

/// Gradients are summed over fixed chunks, then chunk sums in order, so the
/// result does not depend on the number of worker threads.
const CHUNK: usize = 4;

fn batch_gradient(head: &Head, loss: Loss, xs: &[Vec<f64>], ys: &[f64], batch: &[usize]) -> (Vec<f64>, f64) {
    let n = head.params.len();
    let partials: Vec<(Vec<f64>, f64)> = batch
        .par_chunks(CHUNK)
        .map(|chunk| {
            let mut g = vec![0.0; n];
            let mut l = 0.0;
            for &i in chunk {
                l += head.accumulate_gradient(&xs[i], |z| loss.of_logit(z, ys[i]), &mut g);
            }
            (g, l)
        })
        .collect();
    let mut grad = vec![0.0; n];
    let mut total = 0.0;
    for (g, l) in partials {
        grad.iter_mut().zip(g).for_each(|(a, b)| *a += b);
        total += l;
    }
    let scale = 1.0 / batch.len() as f64;
    grad.iter_mut().for_each(|g| *g *= scale);
    (grad, total)
}

pub fn mean_loss(head: &Head, loss: Loss, xs: &[Vec<f64>], ys: &[f64]) -> f64 {
    let losses: Vec<f64> = xs
        .par_iter()
        .zip(ys)
        .map(|(x, &y)| loss.of_logit(head.logit(x), y).0)
        .collect();
    losses.iter().sum::<f64>() / losses.len() as f64
}

/// Trains a fresh head on pre-encoded inputs and returns the parameters of
/// the epoch with the lowest validation loss, rounded to `f32`.
pub fn fit_head(
    train: (&[Vec<f64>], &[f64]),
    validation: (&[Vec<f64>], &[f64]),
    shape: (usize, usize),
    head_config: HeadConfig,
    config: &TrainConfig,
) -> Result<Fit> {
    config.validate()?;
    let (xs, ys) = train;
    let (vx, vy) = validation;
    if xs.is_empty() || vx.is_empty() {
        return Err(Error::InsufficientData(
            "training needs at least one training and one validation sample".into(),
        ));
    }
    let width = shape.0 * shape.1;
    if let Some(x) = xs.iter().chain(vx).find(|x| x.len() != width) {
        return Err(Error::Dimension(format!(
            "encoding has {} values, head expects {width}",
            x.len()
        )));
    }
    let mut head = Head::build(shape, head_config, derive_seed(config.seed, "init"))?;
    let mut opt = RmsProp::new(head.params.len(), config.learning_rate, config.rho, config.epsilon);
    let mut stopper = EarlyStopping::new(config.early_stop_patience);
    let mut order_rng = seeded(derive_seed(config.seed, "batches"));
    let mut order: Vec<usize> = (0..xs.len()).collect();
    let mut best = head.params.clone();
    let mut history = Vec::new();
    for epoch in 1..=config.max_epochs {
        order.shuffle(&mut order_rng);
        let mut train_loss = 0.0;
        for batch in order.chunks(config.batch_size) {
            let (grad, batch_loss) = batch_gradient(&head, config.loss, xs, ys, batch);
            train_loss += batch_loss;
            opt.step(&mut head.params, &grad);
        }
        let val_loss = mean_loss(&head, config.loss, vx, vy);
        history.push(EpochRecord {
            epoch,
            train_loss: train_loss / xs.len() as f64,
            val_loss,
        });
        match stopper.observe(epoch, val_loss) {
            StopDecision::Improved => best.clone_from(&head.params),
            StopDecision::Continue => {}
            StopDecision::Stop => break,
        }
    }
    head.params = best.into_iter().map(|p| p as f32 as f64).collect();
    Ok(Fit {
        head,
        history,
        best_epoch: stopper.best_epoch().unwrap_or(0),
    })
}

/// Encodes the samples with `binding` and fits a head on them.
pub fn train(
    corpus: &Corpus,
    train_samples: &[LabeledSample],
    validation_samples: &[LabeledSample],
    binding: &EncoderBinding,
    head_config: HeadConfig,
    config: &TrainConfig,
) -> Result<TrainedScorer> {
    config.validate()?;
    check_labels(config.loss, train_samples)?;
    check_labels(config.loss, validation_samples)?;
    let xs = encode_samples(corpus, train_samples, binding)?;
    let vx = encode_samples(corpus, validation_samples, binding)?;
    let ys: Vec<f64> = train_samples.iter().map(|s| s.label).collect();
    let vy: Vec<f64> = validation_samples.iter().map(|s| s.label).collect();
    let fit = fit_head((&xs, &ys), (&vx, &vy), binding.input_shape(), head_config, config)?;
    Ok(TrainedScorer::new(fit.head, binding.clone(), config.clone(), fit.history, fit.best_epoch))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::HeadKind;

    #[test]
    fn bce_matches_direct_formula() {
        for (z, y) in [(0.3, 1.0), (-2.0, 0.0), (4.0, 0.0)] {
            let p = sigmoid(z);
            let direct = -(y * p.ln() + (1.0 - y) * (1.0 - p).ln());
            assert!((Loss::Bce.of_logit(z, y).0 - direct).abs() < 1e-12);
        }
        assert!(Loss::Bce.of_logit(800.0, 0.0).0.is_finite());
    }

    #[test]
    fn constant_target_is_learned() {
        let mut rng = seeded(5);
        let xs: Vec<Vec<f64>> = (0..64)
            .map(|_| (0..6).map(|_| rand::Rng::random_range(&mut rng, -1.0..1.0)).collect())
            .collect();
        let ys = vec![1.0; 64];
        let mut cfg = TrainConfig::new(Loss::Mse, 1);
        cfg.learning_rate = 1e-2;
        let head = HeadConfig {
            fc_hidden: 8,
            ..HeadConfig::new(HeadKind::FcOnly)
        };
        let fit = fit_head((&xs, &ys), (&xs[..16], &ys[..16]), (2, 3), head, &cfg).unwrap();
        for x in &xs {
            assert!(fit.head.score(x) > 0.95);
        }
    }

    #[test]
    fn seeded_runs_are_identical() {
        let xs: Vec<Vec<f64>> = (0..40).map(|i| vec![(i % 7) as f64 / 7.0, (i % 3) as f64]).collect();
        let ys: Vec<f64> = (0..40).map(|i| ((i % 7) < 3) as u8 as f64).collect();
        let head = HeadConfig {
            fc_hidden: 5,
            ..HeadConfig::new(HeadKind::FcOnly)
        };
        let mut cfg = TrainConfig::new(Loss::Bce, 3);
        cfg.max_epochs = 6;
        let a = fit_head((&xs, &ys), (&xs, &ys), (1, 2), head, &cfg).unwrap();
        let b = fit_head((&xs, &ys), (&xs, &ys), (1, 2), head, &cfg).unwrap();
        assert_eq!(a.head, b.head);
        assert_eq!(a.history, b.history);
        assert!(!a.history.is_empty());
    }
}
