//! RMSProp and patience-based early stopping.

use serde::{Deserialize, Serialize};

/// RMSProp with a running mean of squared gradients.
#[derive(Debug, Clone)]
pub struct RmsProp {
    pub learning_rate: f64,
    pub rho: f64,
    pub epsilon: f64,
    mean_square: Vec<f64>,
}

impl RmsProp {
    pub fn new(n: usize, learning_rate: f64, rho: f64, epsilon: f64) -> Self {
        Self {
            learning_rate,
            rho,
            epsilon,
            mean_square: vec![0.0; n],
        }
    }

    pub fn step(&mut self, params: &mut [f64], grad: &[f64]) {
        for ((p, g), ms) in params.iter_mut().zip(grad).zip(&mut self.mean_square) {
            *ms = self.rho * *ms + (1.0 - self.rho) * g * g;
            *p -= self.learning_rate * g / (ms.sqrt() + self.epsilon);
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StopDecision {
    /// New best loss; keep these parameters.
    Improved,
    Continue,
    Stop,
}

/// Stops once `patience` consecutive epochs fail to lower the best
/// validation loss. Any strict decrease counts as an improvement.
#[derive(Debug, Clone)]
pub struct EarlyStopping {
    patience: usize,
    best: f64,
    best_epoch: Option<usize>,
    stale: usize,
}

impl EarlyStopping {
    pub fn new(patience: usize) -> Self {
        assert!(patience >= 1, "patience must be at least one epoch");
        Self {
            patience,
            best: f64::INFINITY,
            best_epoch: None,
            stale: 0,
        }
    }

    /// Records the validation loss of `epoch` (1-based).
    pub fn observe(&mut self, epoch: usize, loss: f64) -> StopDecision {
        if loss < self.best {
            self.best = loss;
            self.best_epoch = Some(epoch);
            self.stale = 0;
            return StopDecision::Improved;
        }
        self.stale += 1;
        if self.stale >= self.patience {
            StopDecision::Stop
        } else {
            StopDecision::Continue
        }
    }

    pub fn best_epoch(&self) -> Option<usize> {
        self.best_epoch
    }

    pub fn best_loss(&self) -> f64 {
        self.best
    }
}

/// Runs the stopping rule over a scripted loss sequence and returns
/// `(last epoch run, epoch whose parameters are kept)`.
pub fn replay_schedule(losses: &[f64], patience: usize, max_epochs: usize) -> (usize, Option<usize>) {
    let mut es = EarlyStopping::new(patience);
    let mut last = 0;
    for (i, &loss) in losses.iter().take(max_epochs).enumerate() {
        last = i + 1;
        if es.observe(last, loss) == StopDecision::Stop {
            break;
        }
    }
    (last, es.best_epoch())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn plateau_stops_after_patience() {
        assert_eq!(replay_schedule(&[0.9, 0.8, 0.8, 0.8, 0.8], 3, 50), (5, Some(2)));
    }

    #[test]
    fn rmsprop_first_step_is_scaled_sign() {
        let mut opt = RmsProp::new(2, 1e-3, 0.9, 1e-7);
        let mut p = [0.0, 0.0];
        opt.step(&mut p, &[4.0, -0.01]);
        // ms = 0.1 g², so the step is lr·g/(|g|·√0.1)
        let expect = 1e-3 / 0.1f64.sqrt();
        assert!((p[0] + expect).abs() < 1e-9);
        assert!((p[1] - expect).abs() < 1e-6);
    }
}
