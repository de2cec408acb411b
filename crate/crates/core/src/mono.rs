//! The monolingual Bayesian trigram HMM.

use crate::chain::{Chain, ModalHistogram};
use crate::checkpoint::{Checkpoint, CHECKPOINT_VERSION};
use crate::counts::LanguageObs;
use crate::error::Result;
use crate::tags::TagId;
use crate::{stream_rng, SamplerRng};

#[derive(Clone, Debug, PartialEq)]
pub struct SamplerConfig {
    pub epochs: usize,
    /// Hyperparameter-only MH iterations run after initialization.
    pub mh_warmup: usize,
    pub resample_hyperparameters: bool,
    pub theta0: f64,
    pub phi0: f64,
    /// Modal tags come from the last `modal_window` epochs; 0 means all.
    pub modal_window: usize,
}

impl SamplerConfig {
    pub fn mono() -> Self {
        SamplerConfig {
            epochs: 200,
            mh_warmup: 200,
            resample_hyperparameters: true,
            theta0: 1.0,
            phi0: 1.0,
            modal_window: 0,
        }
    }

    pub fn latent() -> Self {
        SamplerConfig {
            epochs: 1000,
            modal_window: 100,
            ..Self::mono()
        }
    }

    /// Whether epoch `epoch` (0-based) counts toward the modal tags.
    pub fn records(&self, epoch: usize) -> bool {
        self.modal_window == 0 || epoch + self.modal_window >= self.epochs
    }
}

impl Default for SamplerConfig {
    fn default() -> Self {
        Self::mono()
    }
}

/// Final state of one language after training.
#[derive(Clone, Debug, PartialEq)]
pub struct LanguageResult {
    pub modal_tags: Vec<Vec<TagId>>,
    pub final_tags: Vec<Vec<TagId>>,
    pub theta: f64,
    pub phi: f64,
    pub acceptance: crate::hyper::AcceptanceStats,
}

impl LanguageResult {
    pub(crate) fn from_chain(chain: &Chain, hist: &ModalHistogram) -> Result<Self> {
        Ok(LanguageResult {
            modal_tags: hist.modal()?,
            final_tags: chain.tags.clone(),
            theta: chain.theta,
            phi: chain.phi,
            acceptance: chain.acceptance(),
        })
    }
}

pub struct MonoSampler<'a> {
    obs: &'a LanguageObs,
    config: SamplerConfig,
    chain: Chain,
    hist: ModalHistogram,
    rng: SamplerRng,
    epoch: usize,
}

impl<'a> MonoSampler<'a> {
    pub fn new(obs: &'a LanguageObs, config: SamplerConfig, seed: u64) -> Result<Self> {
        let mut rng = stream_rng(seed, &obs.id);
        let mut chain = Chain::random(obs, config.theta0, config.phi0, &mut rng)?;
        if config.resample_hyperparameters {
            for _ in 0..config.mh_warmup {
                chain.resample_hyperparameters(obs, &mut rng)?;
            }
        }
        Ok(MonoSampler {
            obs,
            hist: ModalHistogram::new(obs),
            config,
            chain,
            rng,
            epoch: 0,
        })
    }

    pub fn resume(obs: &'a LanguageObs, config: SamplerConfig, checkpoint: Checkpoint) -> Result<Self> {
        checkpoint.expect_model("mono", 1)?;
        let mut chains = checkpoint.chains.into_iter();
        let chain = Chain::restore(obs, chains.next().expect("one chain"))?;
        Ok(MonoSampler {
            obs,
            config,
            chain,
            hist: checkpoint.histograms.into_iter().next().expect("one histogram"),
            rng: checkpoint.rngs.into_iter().next().ok_or_else(|| crate::Error::Checkpoint("missing generator".into()))?,
            epoch: checkpoint.epoch,
        })
    }

    pub fn checkpoint(&self) -> Checkpoint {
        Checkpoint {
            version: CHECKPOINT_VERSION,
            model: "mono".into(),
            epoch: self.epoch,
            rngs: vec![self.rng.clone()],
            chains: vec![self.chain.snapshot()],
            histograms: vec![self.hist.clone()],
            omega: None,
            values: None,
            active_history: Vec::new(),
        }
    }

    pub fn epoch(&self) -> usize {
        self.epoch
    }

    pub fn chain(&self) -> &Chain {
        &self.chain
    }

    pub fn tags(&self) -> &[Vec<TagId>] {
        &self.chain.tags
    }

    /// Gibbs sweep, hyperparameter update and histogram update.
    pub fn step(&mut self) -> Result<()> {
        self.chain.sweep_mono(self.obs, &mut self.rng)?;
        if self.config.resample_hyperparameters {
            self.chain.resample_hyperparameters(self.obs, &mut self.rng)?;
        }
        if self.config.records(self.epoch) {
            self.hist.record(&self.chain.tags);
        }
        self.epoch += 1;
        Ok(())
    }

    pub fn run(&mut self) -> Result<()> {
        while self.epoch < self.config.epochs {
            self.step()?;
        }
        Ok(())
    }

    pub fn result(&self) -> Result<LanguageResult> {
        LanguageResult::from_chain(&self.chain, &self.hist)
    }
}

pub fn train_mono(obs: &LanguageObs, config: &SamplerConfig, seed: u64) -> Result<LanguageResult> {
    let mut sampler = MonoSampler::new(obs, config.clone(), seed)?;
    sampler.run()?;
    sampler.result()
}
