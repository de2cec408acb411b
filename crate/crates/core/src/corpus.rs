//! Sentence-aligned multilingual corpora in a vertical (one token per line)
//! format.

use std::collections::{BTreeSet, HashMap};
use std::ops::Range;
use std::path::{Path, PathBuf};

use crate::error::{Error, Result};
use crate::tags::{TagId, Tagset, PUNCT_TAG};

pub type WordId = u32;

/// Interned word types of one language.
#[derive(Clone, Debug, Default)]
pub struct Vocabulary {
    words: Vec<String>,
    index: HashMap<String, WordId>,
}

impl PartialEq for Vocabulary {
    fn eq(&self, other: &Self) -> bool {
        self.words == other.words
    }
}

impl Vocabulary {
    pub fn intern(&mut self, word: &str) -> WordId {
        if let Some(&id) = self.index.get(word) {
            return id;
        }
        let id = self.words.len() as WordId;
        self.words.push(word.to_string());
        self.index.insert(word.to_string(), id);
        id
    }

    pub fn get(&self, word: &str) -> Option<WordId> {
        self.index.get(word).copied()
    }

    pub fn word(&self, id: WordId) -> &str {
        &self.words[id as usize]
    }

    pub fn words(&self) -> &[String] {
        &self.words
    }

    pub fn len(&self) -> usize {
        self.words.len()
    }

    pub fn is_empty(&self) -> bool {
        self.words.is_empty()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Token {
    pub word: WordId,
    pub gold: Option<TagId>,
    pub is_punct: bool,
}

pub type Sentence = Vec<Token>;

#[derive(Clone, Debug, PartialEq)]
pub struct Language {
    pub id: String,
    pub tagset: Tagset,
}

/// All sentences of one language together with its vocabulary.
#[derive(Clone, Debug, PartialEq)]
pub struct LanguageText {
    pub language: Language,
    pub vocab: Vocabulary,
    pub sentences: Vec<Sentence>,
}

impl LanguageText {
    pub fn token_count(&self) -> usize {
        self.sentences.iter().map(Vec::len).sum()
    }

    pub fn surface(&self, token: &Token) -> &str {
        self.vocab.word(token.word)
    }

    pub fn has_gold(&self) -> bool {
        self.sentences.iter().flatten().any(|t| t.gold.is_some() && !t.is_punct)
    }

    /// Gold tag sequences for a range of sentences.
    pub fn gold_tags(&self, range: Range<usize>) -> Option<Vec<Vec<TagId>>> {
        self.sentences[range]
            .iter()
            .map(|s| s.iter().map(|t| t.gold).collect::<Option<Vec<_>>>())
            .collect()
    }
}

/// Train/test partition of sentence indices.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Split {
    pub train: Range<usize>,
    pub test: Range<usize>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct TaggedCorpus {
    texts: Vec<LanguageText>,
    split: Split,
}

impl TaggedCorpus {
    /// Validates sentence alignment and orders languages by id. Every
    /// sentence starts out in the training partition.
    pub fn new(mut texts: Vec<LanguageText>) -> Result<Self> {
        if texts.is_empty() {
            return Err(Error::EmptyInput("corpus has no languages".into()));
        }
        texts.sort_by(|a, b| a.language.id.cmp(&b.language.id));
        for w in texts.windows(2) {
            if w[0].language.id == w[1].language.id {
                return Err(Error::Config(format!(
                    "language `{}` given twice",
                    w[0].language.id
                )));
            }
        }
        let n = texts[0].sentences.len();
        if texts.iter().any(|t| t.sentences.len() != n) {
            let counts: Vec<String> = texts
                .iter()
                .map(|t| format!("{}={}", t.language.id, t.sentences.len()))
                .collect();
            return Err(Error::MismatchedSentenceCounts(counts.join(", ")));
        }
        Ok(TaggedCorpus {
            texts,
            split: Split {
                train: 0..n,
                test: n..n,
            },
        })
    }

    pub fn texts(&self) -> &[LanguageText] {
        &self.texts
    }

    pub fn text(&self, lang: usize) -> &LanguageText {
        &self.texts[lang]
    }

    pub fn num_languages(&self) -> usize {
        self.texts.len()
    }

    pub fn language_ids(&self) -> Vec<&str> {
        self.texts.iter().map(|t| t.language.id.as_str()).collect()
    }

    pub fn language_index(&self, id: &str) -> Result<usize> {
        self.texts
            .iter()
            .position(|t| t.language.id == id)
            .ok_or_else(|| Error::UnknownLanguage(id.to_string()))
    }

    pub fn num_sentences(&self) -> usize {
        self.texts[0].sentences.len()
    }

    pub fn split(&self) -> &Split {
        &self.split
    }

    pub fn train_range(&self) -> Range<usize> {
        self.split.train.clone()
    }

    pub fn test_range(&self) -> Range<usize> {
        self.split.test.clone()
    }

    /// Marks the first `⌈fraction · N⌉` sentences as training data and the
    /// rest as test data.
    pub fn split_train_test(mut self, fraction: f64) -> Result<Self> {
        if !(fraction > 0.0 && fraction <= 1.0) {
            return Err(Error::InvalidFraction(fraction));
        }
        let n = self.num_sentences();
        // the epsilon absorbs products like 0.7 * 10 = 7.000000000000001
        let train = (((fraction * n as f64) - 1e-9).ceil().max(0.0) as usize).min(n);
        self.split = Split {
            train: 0..train,
            test: train..n,
        };
        Ok(self)
    }

    /// Keeps the first half (rounded up) of the training sentences. The test
    /// partition is untouched.
    pub fn halve_training_data(mut self) -> Self {
        let train = self.split.train.clone();
        let kept = train.len().div_ceil(2);
        self.split.train = train.start..train.start + kept;
        self
    }

    pub fn with_split(mut self, split: Split) -> Result<Self> {
        let n = self.num_sentences();
        if split.train.end > n || split.test.end > n || split.train.start > split.train.end {
            return Err(Error::Config(format!("split {split:?} out of range for {n} sentences")));
        }
        self.split = split;
        Ok(self)
    }

    /// Restricts the corpus to the named languages (kept in id order).
    pub fn select_languages(&self, ids: &[&str]) -> Result<Self> {
        let mut texts = Vec::with_capacity(ids.len());
        for id in ids {
            texts.push(self.texts[self.language_index(id)?].clone());
        }
        let mut corpus = TaggedCorpus::new(texts)?;
        corpus.split = self.split.clone();
        Ok(corpus)
    }
}

/// Where a language's tagset comes from when loading.
#[derive(Clone, Debug)]
pub enum TagsetSource {
    Explicit(Tagset),
    MultextEast,
    /// Sorted gold symbols seen in the file, plus the punctuation tag.
    Infer,
}

#[derive(Clone, Debug)]
pub struct LanguageSource {
    pub id: String,
    pub path: PathBuf,
    pub tagset: TagsetSource,
}

/// Column layout of the vertical format.
#[derive(Clone, Debug)]
pub struct CorpusFormat {
    /// Zero-based column holding the gold tag; the surface is column 0.
    pub tag_column: usize,
    /// Keep only the first character of the tag column (the main category of
    /// a morphosyntactic descriptor).
    pub msd_first_letter: bool,
}

impl Default for CorpusFormat {
    fn default() -> Self {
        CorpusFormat {
            tag_column: 1,
            msd_first_letter: false,
        }
    }
}

/// Surface forms made only of non-alphanumeric characters.
pub fn looks_like_punctuation(surface: &str) -> bool {
    !surface.is_empty() && surface.chars().all(|c| !c.is_alphanumeric())
}

pub fn load_corpus(sources: &[LanguageSource], format: &CorpusFormat) -> Result<TaggedCorpus> {
    let mut texts = Vec::with_capacity(sources.len());
    for src in sources {
        let raw = std::fs::read_to_string(&src.path).map_err(|e| Error::io(&src.path, e))?;
        texts.push(parse_language(
            &src.id,
            &raw,
            &src.path.display().to_string(),
            &src.tagset,
            format,
        )?);
    }
    TaggedCorpus::new(texts)
}

struct RawToken<'a> {
    surface: &'a str,
    tag: Option<String>,
    line: usize,
}

pub fn parse_language(
    id: &str,
    raw: &str,
    source_name: &str,
    tagset: &TagsetSource,
    format: &CorpusFormat,
) -> Result<LanguageText> {
    let mut sentences: Vec<Vec<RawToken>> = Vec::new();
    let mut current: Vec<RawToken> = Vec::new();
    // first blank line that does not close a sentence; only an error if
    // another sentence follows
    let mut stray_blank: Option<usize> = None;
    for (i, line) in raw.lines().enumerate() {
        let lineno = i + 1;
        if line.trim().is_empty() {
            if !current.is_empty() {
                sentences.push(std::mem::take(&mut current));
            } else if stray_blank.is_none() {
                stray_blank = Some(lineno);
            }
            continue;
        }
        if let Some(line) = stray_blank {
            return Err(Error::EmptySentence {
                source_name: source_name.to_string(),
                line,
            });
        }
        let fields: Vec<&str> = line.split('\t').collect();
        let surface = fields[0];
        if surface.is_empty() {
            return Err(Error::parse(source_name, lineno, "empty surface form"));
        }
        let tag = match fields.get(format.tag_column) {
            None => None,
            Some(&"_") | Some(&"") => None,
            Some(t) => {
                let t = if format.msd_first_letter {
                    t.chars().next().map(String::from).unwrap_or_default()
                } else {
                    t.to_string()
                };
                Some(t)
            }
        };
        current.push(RawToken {
            surface,
            tag,
            line: lineno,
        });
    }
    if !current.is_empty() {
        sentences.push(current);
    }

    let tagset = match tagset {
        TagsetSource::Explicit(ts) => ts.clone(),
        TagsetSource::MultextEast => Tagset::multext_east(id).ok_or_else(|| {
            Error::InvalidTagset(format!("no Multext-East repository for `{id}`"))
        })?,
        TagsetSource::Infer => {
            let seen: BTreeSet<&str> = sentences
                .iter()
                .flatten()
                .filter_map(|t| t.tag.as_deref())
                .filter(|t| *t != PUNCT_TAG)
                .collect();
            Tagset::with_punctuation(seen)?
        }
    };

    let mut vocab = Vocabulary::default();
    let mut out = Vec::with_capacity(sentences.len());
    for raw_sentence in sentences {
        let mut sentence = Vec::with_capacity(raw_sentence.len());
        for rt in raw_sentence {
            let gold = match &rt.tag {
                // unannotated punctuation belongs to the punctuation tag
                None if looks_like_punctuation(rt.surface) => Some(tagset.punct()),
                None => None,
                Some(sym) => Some(tagset.id(sym).ok_or_else(|| Error::UnknownTag {
                    source_name: source_name.to_string(),
                    line: rt.line,
                    language: id.to_string(),
                    symbol: sym.clone(),
                })?),
            };
            let is_punct = match gold {
                Some(g) => g == tagset.punct(),
                None => looks_like_punctuation(rt.surface),
            };
            sentence.push(Token {
                word: vocab.intern(rt.surface),
                gold,
                is_punct,
            });
        }
        out.push(sentence);
    }
    Ok(LanguageText {
        language: Language {
            id: id.to_string(),
            tagset,
        },
        vocab,
        sentences: out,
    })
}

/// Writes sentences as `surface<TAB>tag` lines with a blank line between
/// sentences. `tags` overrides the gold column when given.
pub fn write_sentences<'a>(
    text: &LanguageText,
    sentences: impl IntoIterator<Item = (&'a Sentence, Option<&'a [TagId]>)>,
) -> String {
    let mut out = String::new();
    for (k, (sentence, tags)) in sentences.into_iter().enumerate() {
        if k > 0 {
            out.push('\n');
        }
        for (i, token) in sentence.iter().enumerate() {
            out.push_str(text.surface(token));
            out.push('\t');
            let tag = match tags {
                Some(t) => Some(t[i]),
                None => token.gold,
            };
            match tag {
                Some(t) => out.push_str(text.language.tagset.symbol(t)),
                None => out.push('_'),
            }
            out.push('\n');
        }
    }
    out
}

pub fn write_language(text: &LanguageText) -> String {
    write_sentences(text, text.sentences.iter().map(|s| (s, None)))
}

pub fn write_file(path: &Path, contents: &str) -> Result<()> {
    if let Some(parent) = path.parent() {
        std::fs::create_dir_all(parent).map_err(|e| Error::io(parent, e))?;
    }
    std::fs::write(path, contents).map_err(|e| Error::io(path, e))
}

pub fn read_file(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).map_err(|e| Error::io(path, e))
}
