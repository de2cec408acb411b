#![allow(dead_code)]

use multitag::corpus::{parse_language, CorpusFormat, LanguageText, TagsetSource, TaggedCorpus};
use multitag::counts::LanguageObs;
use multitag::lexicon::{build_lexicon, Lexicon, LexiconMode};
use multitag::synthetic::{generate, SyntheticConfig, SyntheticCorpus};
use multitag::tags::Tagset;

pub fn toy_tagset() -> Tagset {
    Tagset::with_punctuation(["A", "N", "V"]).unwrap()
}

pub fn toy_text(id: &str, raw: &str) -> LanguageText {
    parse_language(id, raw, id, &TagsetSource::Explicit(toy_tagset()), &CorpusFormat::default()).unwrap()
}

/// A small synthetic corpus with its lexicon and training observations.
pub struct Fixture {
    pub synth: SyntheticCorpus,
    pub corpus: TaggedCorpus,
    pub lexicon: Lexicon,
    pub obs: Vec<LanguageObs>,
}

pub fn fixture(sentences: usize, mode: LexiconMode, seed: u64) -> Fixture {
    let cfg = SyntheticConfig {
        sentences,
        seed,
        ..SyntheticConfig::default()
    };
    let synth = generate(&cfg).unwrap();
    let corpus = synth.corpus.clone();
    let lexicon = build_lexicon(&corpus, mode).unwrap();
    let obs = (0..corpus.num_languages())
        .map(|l| LanguageObs::build(corpus.text(l), lexicon.language(l), corpus.train_range()))
        .collect();
    Fixture {
        synth,
        corpus,
        lexicon,
        obs,
    }
}
