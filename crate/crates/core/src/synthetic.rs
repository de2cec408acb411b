//! Synthetic parallel corpora drawn from a known coupled HMM.
//!
//! Both languages share one latent tag chain. Language B copies each tag
//! with a small amount of noise, and every aligned token pair shares its
//! position. Each language confuses different tag pairs at the word level
//! (two tags drawing partly from the same words), so each language's
//! ambiguities can be resolved by looking at the other.

use rand::Rng;
use rand_distr::{Distribution, Gamma};

use crate::alignments::BilingualAlignment;
use crate::corpus::{Language, LanguageText, TaggedCorpus, Token, Vocabulary};
use crate::error::{Error, Result};
use crate::tags::{TagId, Tagset};
use crate::SamplerRng;

#[derive(Clone, Debug, PartialEq)]
pub struct SyntheticConfig {
    pub sentences: usize,
    pub tags: usize,
    pub words_per_language: usize,
    /// Fraction of tokens that are aligned.
    pub alignment_density: f64,
    pub min_len: usize,
    pub max_len: usize,
    /// Probability that language B draws a fresh tag instead of copying.
    pub tag_noise: f64,
    /// Share of a confused tag's tail emissions drawn from its partner's
    /// tail.
    pub confusion: f64,
    /// Share of a confused tag's emissions on words no other tag emits.
    pub anchor_mass: f64,
    /// Zipf exponent of the emission distributions.
    pub zipf: f64,
    /// Dirichlet concentration of the transition rows.
    pub transition_concentration: f64,
    pub seed: u64,
}

impl Default for SyntheticConfig {
    fn default() -> Self {
        SyntheticConfig {
            sentences: 500,
            tags: 5,
            words_per_language: 50,
            alignment_density: 0.5,
            min_len: 6,
            max_len: 14,
            tag_noise: 0.05,
            confusion: 0.45,
            anchor_mass: 0.5,
            zipf: 1.0,
            transition_concentration: 10.0,
            seed: 7,
        }
    }
}

#[derive(Clone, Debug)]
pub struct SyntheticCorpus {
    pub corpus: TaggedCorpus,
    /// Alignments between language 0 and language 1, monotone and
    /// one-to-one.
    pub alignments: Vec<BilingualAlignment>,
}

pub const LANGUAGE_IDS: [&str; 2] = ["sa", "sb"];

fn dirichlet_row<R: Rng>(n: usize, conc: f64, rng: &mut R) -> Vec<f64> {
    let g = Gamma::new(conc, 1.0).expect("positive concentration");
    let mut row: Vec<f64> = (0..n).map(|_| g.sample(rng) + 1e-12).collect();
    let s: f64 = row.iter().sum();
    row.iter_mut().for_each(|x| *x /= s);
    row
}

fn draw<R: Rng>(p: &[f64], rng: &mut R) -> usize {
    crate::chain::sample_categorical(p, rng).expect("proper distribution")
}

/// Emission distributions of one language. Each tag owns a block of words:
/// the head of the block is exclusive to the tag and carries `anchor_mass`
/// of its emissions, the tail is shared with the tag's confusion partner,
/// which draws `confusion` of its tail mass from it. Unconfused tags spread
/// their mass over their own block.
fn emissions(cfg: &SyntheticConfig, partners: &[Option<usize>]) -> Vec<Vec<f64>> {
    let block = cfg.words_per_language / cfg.tags;
    let tail = block / 2;
    let head = block - tail;
    let zipf = |n: usize| -> Vec<f64> {
        let w: Vec<f64> = (0..n).map(|r| 1.0 / ((r + 1) as f64).powf(cfg.zipf)).collect();
        let z: f64 = w.iter().sum();
        w.into_iter().map(|x| x / z).collect()
    };
    let (zh, zt, zb) = (zipf(head), zipf(tail), zipf(block));
    let rest = 1.0 - cfg.anchor_mass;
    (0..cfg.tags)
        .map(|t| {
            let mut row = vec![0.0; cfg.words_per_language];
            match partners[t] {
                Some(p) if tail > 0 => {
                    for r in 0..head {
                        row[t * block + r] += cfg.anchor_mass * zh[r];
                    }
                    for r in 0..tail {
                        row[t * block + head + r] += rest * (1.0 - cfg.confusion) * zt[r];
                        row[p * block + head + r] += rest * cfg.confusion * zt[r];
                    }
                }
                _ => {
                    for r in 0..block {
                        row[t * block + r] += zb[r];
                    }
                }
            }
            row
        })
        .collect()
}

/// Confusion partners: language A pairs tags (0,1), (2,3), …; language B
/// pairs (1,2), (3,4), ….
fn partners(tags: usize, offset: usize) -> Vec<Option<usize>> {
    let mut p = vec![None; tags];
    let mut t = offset;
    while t + 1 < tags {
        p[t] = Some(t + 1);
        p[t + 1] = Some(t);
        t += 2;
    }
    p
}

pub fn generate(cfg: &SyntheticConfig) -> Result<SyntheticCorpus> {
    use rand::SeedableRng;
    if cfg.tags == 0 || cfg.tags >= crate::tags::MAX_TAGS || cfg.words_per_language < cfg.tags {
        return Err(Error::Config("synthetic corpus needs 1..63 tags and at least one word per tag".into()));
    }
    if cfg.min_len == 0 || cfg.max_len < cfg.min_len {
        return Err(Error::Config("synthetic sentence lengths must satisfy 1 <= min <= max".into()));
    }
    let mut rng = SamplerRng::seed_from_u64(cfg.seed);
    let k = cfg.tags;
    let start = dirichlet_row(k, 1.0, &mut rng);
    let trans: Vec<Vec<f64>> = (0..k)
        .map(|_| dirichlet_row(k, cfg.transition_concentration, &mut rng))
        .collect();
    let em = [emissions(cfg, &partners(k, 0)), emissions(cfg, &partners(k, 1))];

    let symbols: Vec<String> = (0..k).map(|t| format!("T{t}")).collect();
    let tagset = Tagset::with_punctuation(symbols)?;
    let mut vocabs = [Vocabulary::default(), Vocabulary::default()];
    for (l, v) in vocabs.iter_mut().enumerate() {
        for w in 0..cfg.words_per_language {
            v.intern(&format!("{}{w}", LANGUAGE_IDS[l]));
        }
    }
    let mut sentences: [Vec<Vec<Token>>; 2] = [Vec::new(), Vec::new()];
    let mut alignments = Vec::with_capacity(cfg.sentences);
    for s in 0..cfg.sentences {
        let len = rng.random_range(cfg.min_len..=cfg.max_len);
        let mut chain = Vec::with_capacity(len);
        let mut t = draw(&start, &mut rng);
        for _ in 0..len {
            chain.push(t);
            t = draw(&trans[t], &mut rng);
        }
        let copy: Vec<usize> = chain
            .iter()
            .map(|&t| {
                if rng.random::<f64>() < cfg.tag_noise {
                    rng.random_range(0..k)
                } else {
                    t
                }
            })
            .collect();
        for (l, tags) in [&chain, &copy].into_iter().enumerate() {
            let toks = tags
                .iter()
                .map(|&t| Token {
                    word: draw(&em[l][t], &mut rng) as u32,
                    gold: Some(t as TagId),
                    is_punct: false,
                })
                .collect();
            sentences[l].push(toks);
        }
        let edges: Vec<(u32, u32)> = (0..len as u32)
            .filter(|_| rng.random::<f64>() < cfg.alignment_density)
            .map(|i| (i, i))
            .collect();
        alignments.push(BilingualAlignment::new(s, edges)?);
    }
    let [sa, sb] = sentences;
    let [va, vb] = vocabs;
    let texts = vec![
        LanguageText {
            language: Language {
                id: LANGUAGE_IDS[0].into(),
                tagset: tagset.clone(),
            },
            vocab: va,
            sentences: sa,
        },
        LanguageText {
            language: Language {
                id: LANGUAGE_IDS[1].into(),
                tagset,
            },
            vocab: vb,
            sentences: sb,
        },
    ];
    Ok(SyntheticCorpus {
        corpus: TaggedCorpus::new(texts)?,
        alignments,
    })
}
