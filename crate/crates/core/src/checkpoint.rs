//! Serialized sampler state for exact resumption.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::chain::{ChainSnapshot, ModalHistogram};
use crate::corpus::{read_file, write_file};
use crate::error::{Error, Result};
use crate::hyper::AcceptanceStats;
use crate::SamplerRng;

pub const CHECKPOINT_VERSION: u32 = 1;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Checkpoint {
    pub version: u32,
    pub model: String,
    pub epoch: usize,
    /// one generator per random stream, in model-defined order
    pub rngs: Vec<SamplerRng>,
    pub chains: Vec<ChainSnapshot>,
    pub histograms: Vec<ModalHistogram>,
    #[serde(default)]
    pub omega: Option<(f64, AcceptanceStats)>,
    /// superlingual value per alignment set
    #[serde(default)]
    pub values: Option<Vec<u32>>,
    #[serde(default)]
    pub active_history: Vec<usize>,
}

impl Checkpoint {
    pub fn to_json(&self) -> Result<String> {
        serde_json::to_string(self).map_err(|e| Error::Checkpoint(e.to_string()))
    }

    pub fn from_json(raw: &str) -> Result<Self> {
        let cp: Checkpoint = serde_json::from_str(raw).map_err(|e| Error::Checkpoint(e.to_string()))?;
        if cp.version != CHECKPOINT_VERSION {
            return Err(Error::Checkpoint(format!("unsupported version {}", cp.version)));
        }
        Ok(cp)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        write_file(path, &self.to_json()?)
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_json(&read_file(path)?)
    }

    pub(crate) fn expect_model(&self, model: &str, languages: usize) -> Result<()> {
        if self.model != model {
            return Err(Error::Checkpoint(format!("checkpoint is for model `{}`, not `{model}`", self.model)));
        }
        if self.chains.len() != languages || self.histograms.len() != languages {
            return Err(Error::Checkpoint(format!(
                "checkpoint holds {} languages, expected {languages}",
                self.chains.len()
            )));
        }
        Ok(())
    }
}
