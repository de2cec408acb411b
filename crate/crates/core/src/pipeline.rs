//! End-to-end runs: build observations from a corpus and lexicon, train one
//! model, extract tables and decode the test split.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use crate::alignments::{build_alignment_sets, remove_crossing_edges, AlignmentSet, BilingualAlignment};
use crate::corpus::TaggedCorpus;
use crate::counts::LanguageObs;
use crate::error::{Error, Result};
use crate::eval::accuracy;
use crate::hyper::AcceptanceStats;
use crate::checkpoint::Checkpoint;
use crate::latent::{LatentParams, LatentResult, LatentSampler, LatentSet};
use crate::lexicon::Lexicon;
use crate::merged::{MergedSampler, PairLinks};
use crate::mono::{train_mono, LanguageResult, MonoSampler, SamplerConfig};
use crate::par::Parallelism;
use crate::params::{ParamTables, SUPERVISED_PSEUDO_COUNT};
use crate::tags::{SharedCategories, TagId};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum ModelKind {
    Mono,
    Merged,
    Latent,
    Supervised,
}

impl ModelKind {
    pub fn name(self) -> &'static str {
        match self {
            ModelKind::Mono => "mono",
            ModelKind::Merged => "merged",
            ModelKind::Latent => "latent",
            ModelKind::Supervised => "supervised",
        }
    }

    /// Checks the number of languages the model needs.
    pub fn validate_languages(self, n: usize) -> Result<()> {
        let ok = match self {
            ModelKind::Mono | ModelKind::Supervised => n == 1,
            ModelKind::Merged => n == 2,
            ModelKind::Latent => n >= 2,
        };
        if ok {
            Ok(())
        } else {
            let need = match self {
                ModelKind::Mono | ModelKind::Supervised => "exactly 1 language",
                ModelKind::Merged => "exactly 2 languages",
                ModelKind::Latent => "at least 2 languages",
            };
            Err(Error::Config(format!("model `{}` needs {need}, got {n}", self.name())))
        }
    }
}

impl fmt::Display for ModelKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ModelKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "mono" => Ok(ModelKind::Mono),
            "merged" => Ok(ModelKind::Merged),
            "latent" => Ok(ModelKind::Latent),
            "supervised" => Ok(ModelKind::Supervised),
            other => Err(Error::Config(format!("unknown model `{other}`"))),
        }
    }
}

/// Pairwise alignments keyed by corpus language indices `(a, b)` with
/// `a < b`; edges are `(position in a, position in b)`.
pub type PairwiseAlignments = BTreeMap<(usize, usize), Vec<BilingualAlignment>>;

/// Alignment sets of every sentence from pairwise alignments among
/// `languages` (corpus indices). Set members use positions in `languages`
/// as their language ids.
pub fn alignment_sets_for(
    num_sentences: usize,
    languages: &[usize],
    alignments: &PairwiseAlignments,
    par: Parallelism,
) -> Vec<AlignmentSet> {
    let mut per_sentence: Vec<Vec<(u16, u16, &BilingualAlignment)>> = vec![Vec::new(); num_sentences];
    for (x, &a) in languages.iter().enumerate() {
        for (y, &b) in languages.iter().enumerate() {
            if x >= y {
                continue;
            }
            let key = (a.min(b), a.max(b));
            if let Some(list) = alignments.get(&key) {
                for al in list.iter().filter(|al| al.sentence < num_sentences) {
                    let (first, second) = if a < b { (x as u16, y as u16) } else { (y as u16, x as u16) };
                    per_sentence[al.sentence].push((first, second, al));
                }
            }
        }
    }
    par.map_range(num_sentences, |s| build_alignment_sets(s, &per_sentence[s]))
        .into_iter()
        .flatten()
        .collect()
}

#[derive(Clone, Debug, PartialEq)]
pub struct RunSpec {
    pub model: ModelKind,
    /// corpus language indices, in run order
    pub languages: Vec<usize>,
    pub seed: u64,
    pub mono: SamplerConfig,
    /// sampler settings of the merged or latent model
    pub joint: SamplerConfig,
    pub omega0: f64,
    pub latent: LatentParams,
    /// per run language: clamp to gold (latent only)
    pub supervised: Vec<bool>,
}

impl RunSpec {
    pub fn new(model: ModelKind, languages: Vec<usize>, seed: u64) -> Self {
        let n = languages.len();
        RunSpec {
            model,
            languages,
            seed,
            mono: SamplerConfig::mono(),
            joint: if model == ModelKind::Latent {
                SamplerConfig::latent()
            } else {
                SamplerConfig::mono()
            },
            omega0: 1.0,
            latent: LatentParams::default(),
            supervised: vec![false; n],
        }
    }

    /// Epoch count reported for the run.
    pub fn epochs(&self) -> usize {
        match self.model {
            ModelKind::Mono => self.mono.epochs,
            ModelKind::Merged | ModelKind::Latent => self.joint.epochs,
            ModelKind::Supervised => 0,
        }
    }
}

#[derive(Clone, Debug)]
pub struct RunOutput {
    /// per run language
    pub tables: Vec<ParamTables>,
    pub predictions: Vec<Vec<Vec<TagId>>>,
    /// test accuracy per run language, when the test split has gold tags
    pub accuracies: Vec<Option<f64>>,
    pub acceptance: AcceptanceStats,
    pub latent: Option<LatentResult>,
    /// final sampler state (none for the supervised baseline)
    pub checkpoint: Option<Checkpoint>,
}

fn tables_for(
    corpus: &TaggedCorpus,
    obs: &[LanguageObs],
    languages: &[usize],
    results: &[LanguageResult],
) -> Result<Vec<ParamTables>> {
    languages
        .iter()
        .zip(obs)
        .zip(results)
        .map(|((&l, o), r)| ParamTables::from_tags(corpus.text(l), o, &r.modal_tags, r.theta, r.phi))
        .collect()
}

pub fn run_model(
    corpus: &TaggedCorpus,
    lexicon: &Lexicon,
    alignments: &PairwiseAlignments,
    spec: &RunSpec,
    par: Parallelism,
) -> Result<RunOutput> {
    spec.model.validate_languages(spec.languages.len())?;
    let train = corpus.train_range();
    let obs: Vec<LanguageObs> = spec
        .languages
        .iter()
        .map(|&l| LanguageObs::build(corpus.text(l), lexicon.language(l), train.clone()))
        .collect();
    let mut acceptance = AcceptanceStats::default();
    let mut latent = None;
    let mut checkpoint = None;
    let tables = match spec.model {
        ModelKind::Supervised => vec![ParamTables::supervised(corpus.text(spec.languages[0]), &obs[0], SUPERVISED_PSEUDO_COUNT)?],
        ModelKind::Mono => {
            let mut sampler = MonoSampler::new(&obs[0], spec.mono.clone(), spec.seed)?;
            sampler.run()?;
            checkpoint = Some(sampler.checkpoint());
            let r = sampler.result()?;
            acceptance.merge(&r.acceptance);
            tables_for(corpus, &obs, &spec.languages, &[r])?
        }
        ModelKind::Merged => {
            let (a, b) = (spec.languages[0], spec.languages[1]);
            let key = (a.min(b), a.max(b));
            let raw = alignments.get(&key).map(Vec::as_slice).unwrap_or(&[]);
            let edges: Vec<BilingualAlignment> = raw
                .iter()
                .map(|al| {
                    let oriented = if a < b { al.clone() } else { al.transposed() };
                    remove_crossing_edges(&oriented)
                })
                .collect();
            let links = PairLinks::for_corpus(&obs[0], &obs[1], &edges)?;
            let mut sampler = MergedSampler::new([&obs[0], &obs[1]], links, spec.joint.clone(), spec.omega0, spec.seed)?;
            sampler.run()?;
            checkpoint = Some(sampler.checkpoint());
            let r = sampler.result()?;
            for l in &r.languages {
                acceptance.merge(&l.acceptance);
            }
            acceptance.merge(&r.omega_acceptance);
            tables_for(corpus, &obs, &spec.languages, &r.languages)?
        }
        ModelKind::Latent => {
            if spec.supervised.len() != spec.languages.len() {
                return Err(Error::LengthMismatch("supervision flags per language".into()));
            }
            let sets = alignment_sets_for(train.end, &spec.languages, alignments, par);
            let sets = LatentSet::from_alignment_sets(&sets, train.end, spec.languages.len())?;
            let tagsets: Vec<_> = spec.languages.iter().map(|&l| &corpus.text(l).language.tagset).collect();
            let categories = SharedCategories::for_tagsets(&tagsets);
            let initial = par
                .map_range(obs.len(), |l| -> Result<Vec<Vec<TagId>>> {
                    if spec.supervised[l] {
                        obs[l].gold.clone().ok_or_else(|| Error::NoGoldTags(obs[l].id.clone()))
                    } else {
                        Ok(train_mono(&obs[l], &spec.mono, spec.seed)?.modal_tags)
                    }
                })
                .into_iter()
                .collect::<Result<Vec<_>>>()?;
            let refs: Vec<&LanguageObs> = obs.iter().collect();
            let mut sampler = LatentSampler::new(
                refs,
                sets,
                spec.joint.clone(),
                &spec.latent,
                initial,
                &spec.supervised,
                &categories,
                spec.seed,
            )?;
            sampler.run()?;
            checkpoint = Some(sampler.checkpoint());
            let r = sampler.result()?;
            for l in &r.languages {
                acceptance.merge(&l.acceptance);
            }
            let t = tables_for(corpus, &obs, &spec.languages, &r.languages)?;
            latent = Some(r);
            t
        }
    };
    let test = corpus.test_range();
    let mut predictions = Vec::with_capacity(tables.len());
    let mut accuracies = Vec::with_capacity(tables.len());
    for (t, &l) in tables.iter().zip(&spec.languages) {
        let text = corpus.text(l);
        let pred = t.decode(text, test.clone(), lexicon.language(l), par)?;
        let acc = match text.gold_tags(test.clone()) {
            Some(gold) if !test.is_empty() => accuracy(&pred, &gold, text.language.tagset.punct()).ok(),
            _ => None,
        };
        predictions.push(pred);
        accuracies.push(acc);
    }
    Ok(RunOutput {
        tables,
        predictions,
        accuracies,
        acceptance,
        latent,
        checkpoint,
    })
}

