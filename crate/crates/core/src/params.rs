//! Point estimates of the transition and emission distributions, their
//! plain-text export, and Viterbi decoding with them.

use std::collections::HashMap;
use std::fmt::Write as _;
use std::ops::Range;
use std::path::Path;

use crate::corpus::{read_file, write_file, LanguageText, Sentence, Vocabulary};
use crate::counts::{collapsed_ratio, LanguageCounts, LanguageObs};
use crate::error::{Error, Result};
use crate::lexicon::LanguageLexicon;
use crate::par::Parallelism;
use crate::tags::{TagId, Tagset};
use crate::viterbi::viterbi;

pub const START_SYMBOL: &str = "<s>";
pub const END_SYMBOL: &str = "</s>";

/// Pseudo-count used by the supervised estimator.
pub const SUPERVISED_PSEUDO_COUNT: f64 = 1e-3;

#[derive(Clone, Debug)]
pub struct ParamTables {
    pub language: String,
    pub tagset: Tagset,
    words: Vec<String>,
    index: HashMap<String, u32>,
    /// `(T+1)^3`, indexed `[c1][c2][o]`
    trans: Vec<f64>,
    /// `T × V`; zero where the word may not take the tag
    emit: Vec<f64>,
    /// emission of a word outside the vocabulary, per tag
    unk: Vec<f64>,
    log_trans: Vec<f64>,
}

impl PartialEq for ParamTables {
    fn eq(&self, other: &Self) -> bool {
        self.to_strings() == other.to_strings()
    }
}

impl ParamTables {
    fn assemble(
        language: String,
        tagset: Tagset,
        words: Vec<String>,
        trans: Vec<f64>,
        emit: Vec<f64>,
        unk: Vec<f64>,
    ) -> Self {
        let index = words
            .iter()
            .enumerate()
            .map(|(i, w)| (w.clone(), i as u32))
            .collect();
        let log_trans = trans.iter().map(|p| p.ln()).collect();
        ParamTables {
            language,
            tagset,
            words,
            index,
            trans,
            emit,
            unk,
            log_trans,
        }
    }

    /// MAP tables from tag assignments: the collapsed ratios at the counts of
    /// `tags`, smoothed by the given hyperparameters.
    pub fn from_tags(
        text: &LanguageText,
        obs: &LanguageObs,
        tags: &[Vec<TagId>],
        theta: f64,
        phi: f64,
    ) -> Result<Self> {
        crate::error::check_positive("theta0", theta)?;
        crate::error::check_positive("phi0", phi)?;
        let counts = LanguageCounts::from_tags(obs, tags);
        let tagset = &text.language.tagset;
        let c = tagset.len() + 1;
        let mut trans = Vec::with_capacity(c * c * c);
        for c1 in 0..c {
            for c2 in 0..c {
                for o in 0..c {
                    trans.push(counts.transition_weight_at(c1, c2, o, phi));
                }
            }
        }
        let v = text.vocab.len();
        let mut emit = vec![0.0; tagset.len() * v];
        let mut unk = Vec::with_capacity(tagset.len());
        for t in 0..tagset.len() as TagId {
            let n_t = counts.tag_total(t) as f64;
            let dim = obs.type_sizes[t as usize] as f64;
            for w in 0..v {
                if obs.type_masks[w].contains(t) {
                    let n = counts.emission_count(t, w as u32) as f64;
                    emit[t as usize * v + w] = collapsed_ratio(n, n_t, dim, theta);
                }
            }
            unk.push(collapsed_ratio(0.0, n_t, dim, theta));
        }
        Ok(Self::assemble(
            text.language.id.clone(),
            tagset.clone(),
            text.vocab.words().to_vec(),
            trans,
            emit,
            unk,
        ))
    }

    /// Supervised estimates: relative frequencies of the gold tags with a
    /// small pseudo-count, and a tag-independent emission for unknown words
    /// so that transitions alone decide their tags.
    pub fn supervised(text: &LanguageText, obs: &LanguageObs, pseudo: f64) -> Result<Self> {
        crate::error::check_positive("pseudo-count", pseudo)?;
        let gold = obs
            .gold
            .as_ref()
            .ok_or_else(|| Error::NoGoldTags(text.language.id.clone()))?;
        let supervised = Self::from_tags(text, obs, gold, pseudo, pseudo)?;
        let uniform = 1.0 / (text.vocab.len().max(1) as f64 + 1.0);
        let unk = vec![uniform; text.language.tagset.len()];
        Ok(Self::assemble(
            supervised.language,
            supervised.tagset,
            supervised.words,
            supervised.trans,
            supervised.emit,
            unk,
        ))
    }

    pub fn num_tags(&self) -> usize {
        self.tagset.len()
    }

    pub fn transition(&self, c1: usize, c2: usize, o: usize) -> f64 {
        let c = self.num_tags() + 1;
        self.trans[(c1 * c + c2) * c + o]
    }

    /// Emission of `surface` under `tag`, falling back to the unknown-word
    /// estimate for words outside the tables or outside the tag's support.
    pub fn emission(&self, tag: TagId, surface: &str) -> f64 {
        match self.index.get(surface) {
            Some(&w) => {
                let e = self.emit[tag as usize * self.words.len() + w as usize];
                if e > 0.0 {
                    e
                } else {
                    self.unk[tag as usize]
                }
            }
            None => self.unk[tag as usize],
        }
    }

    pub fn unknown_emission(&self, tag: TagId) -> f64 {
        self.unk[tag as usize]
    }

    pub fn words(&self) -> &[String] {
        &self.words
    }

    /// Viterbi decoding of one sentence with the lexicon-permitted tags.
    pub fn decode_sentence(
        &self,
        text: &LanguageText,
        sentence: &Sentence,
        lexicon: &LanguageLexicon,
        sentence_index: usize,
    ) -> Result<Vec<TagId>> {
        let candidates: Vec<Vec<(TagId, f64)>> = sentence
            .iter()
            .map(|tok| {
                let surface = text.surface(tok);
                lexicon
                    .allowed(surface, tok.is_punct)
                    .iter()
                    .map(|t| (t, self.emission(t, surface).ln()))
                    .collect()
            })
            .collect();
        let c = self.num_tags() + 1;
        let (tags, _) = viterbi(
            self.num_tags(),
            |c1, c2, o| self.log_trans[(c1 * c + c2) * c + o],
            &candidates,
            sentence_index,
        )?;
        Ok(tags)
    }

    /// Decodes sentences `range` of `text`.
    pub fn decode(
        &self,
        text: &LanguageText,
        range: Range<usize>,
        lexicon: &LanguageLexicon,
        par: Parallelism,
    ) -> Result<Vec<Vec<TagId>>> {
        let start = range.start;
        let sentences: Vec<(usize, &Sentence)> = text.sentences[range].iter().enumerate().collect();
        par.map(&sentences, |&(k, s)| self.decode_sentence(text, s, lexicon, start + k))
            .into_iter()
            .collect()
    }

    /// The three text files: transitions, emissions, unknown-word emissions.
    pub fn to_strings(&self) -> (String, String, String) {
        let t = self.num_tags();
        let sym = |k: usize, end: bool| -> &str {
            if k == t {
                if end {
                    END_SYMBOL
                } else {
                    START_SYMBOL
                }
            } else {
                self.tagset.symbol(k as TagId)
            }
        };
        let mut trans = String::new();
        for c1 in 0..=t {
            for c2 in 0..=t {
                for o in 0..=t {
                    let _ = writeln!(
                        trans,
                        "{}\t{}\t{}\t{}",
                        sym(c1, false),
                        sym(c2, false),
                        sym(o, true),
                        self.transition(c1, c2, o)
                    );
                }
            }
        }
        let v = self.words.len();
        // lexicographic order keeps the file independent of word indices
        let mut order: Vec<usize> = (0..v).collect();
        order.sort_by(|&a, &b| self.words[a].cmp(&self.words[b]));
        let mut emit = String::new();
        for tag in 0..t {
            for &w in &order {
                let p = self.emit[tag * v + w];
                if p > 0.0 {
                    let _ = writeln!(emit, "{}\t{}\t{}", sym(tag, false), self.words[w], p);
                }
            }
        }
        let mut unk = String::new();
        for tag in 0..t {
            let _ = writeln!(unk, "{}\t{}", sym(tag, false), self.unk[tag]);
        }
        (trans, emit, unk)
    }

    pub fn write_dir(&self, dir: &Path) -> Result<()> {
        let (trans, emit, unk) = self.to_strings();
        let base = |ext: &str| dir.join(format!("{}.{ext}", self.language));
        write_file(&base("trans"), &trans)?;
        write_file(&base("emit"), &emit)?;
        write_file(&base("unk"), &unk)?;
        let mut tags = self.tagset.symbols().join("\n");
        tags.push('\n');
        write_file(&base("tags"), &tags)
    }

    pub fn read_dir(dir: &Path, language: &str) -> Result<Self> {
        let base = |ext: &str| dir.join(format!("{language}.{ext}"));
        let tags_path = base("tags");
        let tagset = Tagset::new(read_file(&tags_path)?.lines().filter(|l| !l.is_empty()))?;
        let t = tagset.len();
        let c = t + 1;
        let sym_id = |s: &str, path: &Path, line: usize| -> Result<usize> {
            if s == START_SYMBOL || s == END_SYMBOL {
                Ok(t)
            } else {
                tagset
                    .id(s)
                    .map(|x| x as usize)
                    .ok_or_else(|| Error::parse(path.display().to_string(), line, format!("unknown tag `{s}`")))
            }
        };
        let prob = |s: &str, path: &Path, line: usize| -> Result<f64> {
            s.parse::<f64>()
                .map_err(|_| Error::parse(path.display().to_string(), line, format!("bad probability `{s}`")))
        };

        let trans_path = base("trans");
        let mut trans = vec![0.0; c * c * c];
        for (n, line) in read_file(&trans_path)?.lines().enumerate() {
            let f: Vec<&str> = line.split('\t').collect();
            if f.len() != 4 {
                return Err(Error::parse(trans_path.display().to_string(), n + 1, "expected 4 fields"));
            }
            let (a, b, o) = (
                sym_id(f[0], &trans_path, n + 1)?,
                sym_id(f[1], &trans_path, n + 1)?,
                sym_id(f[2], &trans_path, n + 1)?,
            );
            trans[(a * c + b) * c + o] = prob(f[3], &trans_path, n + 1)?;
        }

        let emit_path = base("emit");
        let raw = read_file(&emit_path)?;
        let mut vocab = Vocabulary::default();
        let mut rows = Vec::new();
        for (n, line) in raw.lines().enumerate() {
            let f: Vec<&str> = line.split('\t').collect();
            if f.len() != 3 {
                return Err(Error::parse(emit_path.display().to_string(), n + 1, "expected 3 fields"));
            }
            let tag = sym_id(f[0], &emit_path, n + 1)?;
            let w = vocab.intern(f[1]);
            rows.push((tag, w, prob(f[2], &emit_path, n + 1)?));
        }
        let v = vocab.len();
        let mut emit = vec![0.0; t * v];
        for (tag, w, p) in rows {
            emit[tag * v + w as usize] = p;
        }

        let unk_path = base("unk");
        let mut unk = vec![0.0; t];
        for (n, line) in read_file(&unk_path)?.lines().enumerate() {
            let f: Vec<&str> = line.split('\t').collect();
            if f.len() != 2 {
                return Err(Error::parse(unk_path.display().to_string(), n + 1, "expected 2 fields"));
            }
            unk[sym_id(f[0], &unk_path, n + 1)?] = prob(f[1], &unk_path, n + 1)?;
        }
        Ok(Self::assemble(language.to_string(), tagset, vocab.words().to_vec(), trans, emit, unk))
    }
}
