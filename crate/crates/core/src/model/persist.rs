//! Model files.
//!
//! Layout, all integers little-endian:
//!
//! ```text
//! b"RSQM" | u32 version | u32 header length | JSON header | f32 parameters
//! ```
//!
//! The header records the head configuration and input shape, the encoder
//! spec and identity, the training configuration and the loss history.

use std::path::Path;

use serde::{Deserialize, Serialize};

use super::head::{Head, HeadConfig};
use super::train::{EpochRecord, TrainConfig};
use super::TrainedScorer;
use crate::encoder::{EncoderBinding, EncoderSpec};
use crate::error::{Error, Result};

pub const MODEL_MAGIC: &[u8; 4] = b"RSQM";
pub const MODEL_VERSION: u32 = 1;

#[derive(Serialize, Deserialize)]
struct Header {
    head: HeadConfig,
    rows: usize,
    cols: usize,
    param_count: usize,
    encoder: EncoderSpec,
    encoder_identity: String,
    train_config: TrainConfig,
    history: Vec<EpochRecord>,
    best_epoch: usize,
}

impl TrainedScorer {
    pub fn to_bytes(&self) -> Result<Vec<u8>> {
        let head = self.head();
        let header = Header {
            head: head.config,
            rows: head.rows,
            cols: head.cols,
            param_count: head.params.len(),
            encoder: self.binding().spec().clone(),
            encoder_identity: self.binding().identity(),
            train_config: self.train_config().clone(),
            history: self.history().to_vec(),
            best_epoch: self.best_epoch(),
        };
        let json = serde_json::to_vec(&header).map_err(|e| Error::Format(e.to_string()))?;
        let mut out = Vec::with_capacity(12 + json.len() + 4 * head.params.len());
        out.extend_from_slice(MODEL_MAGIC);
        out.extend_from_slice(&MODEL_VERSION.to_le_bytes());
        out.extend_from_slice(&(json.len() as u32).to_le_bytes());
        out.extend_from_slice(&json);
        for p in &head.params {
            out.extend_from_slice(&(*p as f32).to_le_bytes());
        }
        Ok(out)
    }

    /// Parses a model file. An encoder that cannot be rebuilt does not fail
    /// here; predictions then fail with [`Error::EncoderUnavailable`].
    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        let incompatible = |m: &str| Error::IncompatibleModel(m.to_string());
        if bytes.len() < 12 || &bytes[..4] != MODEL_MAGIC {
            return Err(incompatible("not a model file (bad magic header)"));
        }
        let u32_at = |i: usize| u32::from_le_bytes(bytes[i..i + 4].try_into().expect("4 bytes"));
        let version = u32_at(4);
        if version != MODEL_VERSION {
            return Err(Error::IncompatibleModel(format!(
                "file version {version}, this build reads version {MODEL_VERSION}"
            )));
        }
        let header_end = 12 + u32_at(8) as usize;
        let json = bytes.get(12..header_end).ok_or_else(|| incompatible("truncated header"))?;
        let header: Header = serde_json::from_slice(json).map_err(|e| Error::Format(format!("model header: {e}")))?;
        let body = &bytes[header_end..];
        if body.len() != 4 * header.param_count
            || header.head.param_count(header.rows, header.cols) != header.param_count
        {
            return Err(Error::Format(format!(
                "model body holds {} bytes for {} parameters",
                body.len(),
                header.param_count
            )));
        }
        let params = body
            .chunks_exact(4)
            .map(|c| f32::from_le_bytes(c.try_into().expect("4 bytes")) as f64)
            .collect();
        let head = Head {
            config: header.head,
            rows: header.rows,
            cols: header.cols,
            params,
        };
        Ok(TrainedScorer::new(
            head,
            EncoderBinding::from_spec(header.encoder),
            header.train_config,
            header.history,
            header.best_epoch,
        ))
    }
}

pub fn save_model(scorer: &TrainedScorer, path: &Path) -> Result<()> {
    std::fs::write(path, scorer.to_bytes()?).map_err(|e| Error::io(path, e))
}

pub fn load_model(path: &Path) -> Result<TrainedScorer> {
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    TrainedScorer::from_bytes(&bytes)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::encoder::PaddingPolicy;
    use crate::model::{HeadKind, Loss};

    fn scorer() -> TrainedScorer {
        let binding = EncoderBinding::hashed(4, 2, PaddingPolicy::sentence(3, 2)).unwrap();
        let cfg = HeadConfig {
            fc_hidden: 6,
            ..HeadConfig::new(HeadKind::FcOnly)
        };
        let mut head = Head::build(binding.input_shape(), cfg, 1).unwrap();
        head.params.iter_mut().for_each(|p| *p = *p as f32 as f64);
        let history = vec![EpochRecord {
            epoch: 1,
            train_loss: 0.5,
            val_loss: 0.4,
        }];
        TrainedScorer::new(head, binding, TrainConfig::new(Loss::Bce, 0), history, 1)
    }

    #[test]
    fn bytes_round_trip() {
        let s = scorer();
        let back = TrainedScorer::from_bytes(&s.to_bytes().unwrap()).unwrap();
        assert_eq!(back.head(), s.head());
        assert_eq!(back.binding().identity(), s.binding().identity());
        assert_eq!(back.history(), s.history());
    }

    #[test]
    fn bad_magic_and_version() {
        let mut bytes = scorer().to_bytes().unwrap();
        let mut wrong = bytes.clone();
        wrong[0] = b'X';
        assert!(matches!(TrainedScorer::from_bytes(&wrong), Err(Error::IncompatibleModel(_))));
        bytes[4] = 9;
        assert!(matches!(TrainedScorer::from_bytes(&bytes), Err(Error::IncompatibleModel(_))));
    }

    #[test]
    fn truncated_body_is_rejected() {
        let bytes = scorer().to_bytes().unwrap();
        assert!(matches!(
            TrainedScorer::from_bytes(&bytes[..bytes.len() - 2]),
            Err(Error::Format(_))
        ));
    }
}
