//! Run configuration: a flat, versioned TOML file whose values can be
//! overridden from the command line.

use std::path::{Path, PathBuf};

use multitag::latent::CrpDenominator;
use multitag::lexicon::LexiconMode;
use multitag::pipeline::ModelKind;
use serde::{Deserialize, Serialize};

use crate::CliError;

pub const CONFIG_VERSION: u32 = 1;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    pub version: u32,
    pub model: String,
    pub languages: Vec<String>,
    pub lexicon: String,
    /// Unset means the model default (200, or 1000 for latent).
    #[serde(skip_serializing_if = "Option::is_none")]
    pub epochs: Option<usize>,
    /// Unset means the model default.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seeds: Option<Vec<u64>>,
    pub train_fraction: f64,
    pub halve_training: bool,
    pub supervised_languages: Vec<String>,
    pub theta0: f64,
    pub phi0: f64,
    pub omega0: f64,
    pub alpha: f64,
    pub psi0: f64,
    pub crp_denominator: String,
    pub resample_hyperparameters: bool,
    /// `infer` or `multext-east`
    pub tagset: String,
    pub tag_column: usize,
    pub msd_first_letter: bool,
    pub corpus_dir: PathBuf,
    pub align_dir: PathBuf,
    pub work_dir: PathBuf,
    /// 0 uses every core.
    pub workers: usize,
    pub sequential: bool,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            version: CONFIG_VERSION,
            model: "mono".into(),
            languages: Vec::new(),
            lexicon: "full".into(),
            epochs: None,
            seeds: None,
            train_fraction: 0.75,
            halve_training: false,
            supervised_languages: Vec::new(),
            theta0: 1.0,
            phi0: 1.0,
            omega0: 1.0,
            alpha: 1.0,
            psi0: 1.0,
            crp_denominator: "active-values".into(),
            resample_hyperparameters: true,
            tagset: "infer".into(),
            tag_column: 1,
            msd_first_letter: false,
            corpus_dir: "corpus".into(),
            align_dir: "align".into(),
            work_dir: "work".into(),
            workers: 0,
            sequential: false,
        }
    }
}

/// Command-line values that replace configuration entries when given.
#[derive(Clone, Debug, Default, clap::Args)]
pub struct Overrides {
    #[arg(long, global = true)]
    pub model: Option<String>,
    /// Comma-separated language ids.
    #[arg(long, global = true, value_delimiter = ',')]
    pub languages: Option<Vec<String>>,
    /// full, count>K or top-K
    #[arg(long, global = true)]
    pub lexicon: Option<String>,
    #[arg(long, global = true)]
    pub epochs: Option<usize>,
    /// Comma-separated seeds.
    #[arg(long, global = true, value_delimiter = ',')]
    pub seeds: Option<Vec<u64>>,
    #[arg(long, global = true)]
    pub train_fraction: Option<f64>,
    #[arg(long, global = true)]
    pub halve_training: Option<bool>,
    #[arg(long, global = true, value_delimiter = ',')]
    pub supervised_languages: Option<Vec<String>>,
    #[arg(long, global = true)]
    pub theta0: Option<f64>,
    #[arg(long, global = true)]
    pub phi0: Option<f64>,
    #[arg(long, global = true)]
    pub omega0: Option<f64>,
    #[arg(long, global = true)]
    pub tagset: Option<String>,
    #[arg(long, global = true)]
    pub corpus_dir: Option<PathBuf>,
    #[arg(long, global = true)]
    pub align_dir: Option<PathBuf>,
    #[arg(long, global = true)]
    pub work_dir: Option<PathBuf>,
    #[arg(long, global = true)]
    pub workers: Option<usize>,
    #[arg(long, global = true)]
    pub sequential: Option<bool>,
}

macro_rules! apply {
    ($cfg:ident, $ov:ident, $($field:ident),*) => {
        $( if let Some(v) = $ov.$field.clone() { $cfg.$field = v; } )*
    };
}

impl RunConfig {
    pub fn parse(raw: &str, source: &Path) -> Result<Self, CliError> {
        let cfg: RunConfig =
            toml::from_str(raw).map_err(|e| CliError::Invalid(format!("{}: {}", source.display(), e.message())))?;
        if cfg.version != CONFIG_VERSION {
            return Err(CliError::Invalid(format!(
                "{}: unsupported config version {} (expected {CONFIG_VERSION})",
                source.display(),
                cfg.version
            )));
        }
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let raw = std::fs::read_to_string(path).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
        Self::parse(&raw, path)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    pub fn apply(&mut self, ov: &Overrides) {
        apply!(self, ov, model, languages, lexicon, train_fraction, halve_training, supervised_languages, theta0, phi0, omega0, tagset, corpus_dir, align_dir, work_dir, workers, sequential);
        if ov.epochs.is_some() {
            self.epochs = ov.epochs;
        }
        if ov.seeds.is_some() {
            self.seeds = ov.seeds.clone();
        }
    }

    pub fn model_kind(&self) -> Result<ModelKind, CliError> {
        self.model.parse().map_err(CliError::from)
    }

    pub fn lexicon_mode(&self) -> Result<LexiconMode, CliError> {
        self.lexicon.parse().map_err(CliError::from)
    }

    pub fn denominator(&self) -> Result<CrpDenominator, CliError> {
        match self.crp_denominator.as_str() {
            "active-values" => Ok(CrpDenominator::ActiveValues),
            "customers" => Ok(CrpDenominator::Customers),
            other => Err(CliError::Invalid(format!("unknown crp_denominator `{other}`"))),
        }
    }

    pub fn epochs_for(&self, model: ModelKind) -> usize {
        self.epochs.unwrap_or(match model {
            ModelKind::Latent => 1000,
            ModelKind::Supervised => 0,
            _ => 200,
        })
    }

    pub fn seeds_for(&self, model: ModelKind) -> Vec<u64> {
        match &self.seeds {
            Some(s) => s.clone(),
            None => match model {
                ModelKind::Supervised => vec![0],
                ModelKind::Merged => (0..3).collect(),
                _ => (0..5).collect(),
            },
        }
    }

    /// Checks everything that does not need the corpus.
    pub fn validate(&self) -> Result<(), CliError> {
        let model = self.model_kind()?;
        model.validate_languages(self.languages.len())?;
        self.lexicon_mode()?;
        self.denominator()?;
        let mut seen = self.languages.clone();
        seen.sort();
        seen.dedup();
        if seen.len() != self.languages.len() {
            return Err(CliError::Invalid("duplicate language in `languages`".into()));
        }
        if !(self.train_fraction > 0.0 && self.train_fraction <= 1.0) {
            return Err(CliError::Invalid(format!("train_fraction {} outside (0, 1]", self.train_fraction)));
        }
        for (name, v) in [
            ("theta0", self.theta0),
            ("phi0", self.phi0),
            ("omega0", self.omega0),
            ("alpha", self.alpha),
            ("psi0", self.psi0),
        ] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(CliError::Invalid(format!("{name} must be positive, got {v}")));
            }
        }
        if !self.supervised_languages.is_empty() && model != ModelKind::Latent {
            return Err(CliError::Invalid("supervised_languages only applies to the latent model".into()));
        }
        for l in &self.supervised_languages {
            if !self.languages.contains(l) {
                return Err(CliError::Invalid(format!("supervised language `{l}` is not in `languages`")));
            }
        }
        if self.supervised_languages.len() == self.languages.len() && model == ModelKind::Latent {
            return Err(CliError::Invalid("at least one language must be unsupervised".into()));
        }
        if self.seeds_for(model).is_empty() {
            return Err(CliError::Invalid("no seeds".into()));
        }
        match self.tagset.as_str() {
            "infer" | "multext-east" => {}
            other => return Err(CliError::Invalid(format!("unknown tagset source `{other}`"))),
        }
        Ok(())
    }
}
