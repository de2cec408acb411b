//! Tag dictionaries: the set of tags each word type may take.

use std::collections::{BTreeMap, HashMap};
use std::fmt;
use std::str::FromStr;

use crate::corpus::{LanguageText, TaggedCorpus, Token};
use crate::error::{Error, Result};
use crate::tags::{TagMask, Tagset};

/// How much of the full dictionary is retained.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum LexiconMode {
    Full,
    /// Entries only for word types occurring more than `k` times.
    CountAbove(u32),
    /// Entries only for the `k` most frequent word types.
    TopFrequent(usize),
}

impl fmt::Display for LexiconMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            LexiconMode::Full => write!(f, "full"),
            LexiconMode::CountAbove(k) => write!(f, "count>{k}"),
            LexiconMode::TopFrequent(k) => write!(f, "top-{k}"),
        }
    }
}

impl FromStr for LexiconMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::Config(format!("unknown lexicon mode `{s}`"));
        if s == "full" {
            Ok(LexiconMode::Full)
        } else if let Some(k) = s.strip_prefix("count>") {
            k.parse().map(LexiconMode::CountAbove).map_err(|_| bad())
        } else if let Some(k) = s.strip_prefix("top-") {
            k.parse().map(LexiconMode::TopFrequent).map_err(|_| bad())
        } else {
            Err(bad())
        }
    }
}

/// Retained dictionary entries for one language.
#[derive(Clone, Debug, PartialEq)]
pub struct LanguageLexicon {
    pub language: String,
    pub tagset: Tagset,
    entries: BTreeMap<String, TagMask>,
}

impl LanguageLexicon {
    pub fn new(language: impl Into<String>, tagset: Tagset) -> Self {
        LanguageLexicon {
            language: language.into(),
            tagset,
            entries: BTreeMap::new(),
        }
    }

    pub fn entries(&self) -> &BTreeMap<String, TagMask> {
        &self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn insert(&mut self, surface: impl Into<String>, tags: TagMask) -> Result<()> {
        if tags.is_empty() || !tags.is_subset_of(self.tagset.all()) {
            return Err(Error::InvalidTagset(format!(
                "entry tags {tags:?} not within the tagset of `{}`",
                self.language
            )));
        }
        self.entries.insert(surface.into(), tags);
        Ok(())
    }

    /// Permitted tags for a token. Punctuation takes only the punctuation
    /// tag; words without an entry take every other tag.
    pub fn allowed(&self, surface: &str, is_punct: bool) -> TagMask {
        if is_punct {
            return TagMask::single(self.tagset.punct());
        }
        self.entries
            .get(surface)
            .copied()
            .unwrap_or_else(|| self.tagset.open_class())
    }

    pub fn allowed_token(&self, text: &LanguageText, token: &Token) -> TagMask {
        self.allowed(text.surface(token), token.is_punct)
    }

    /// `surface<TAB>tag1,tag2,...` lines sorted by surface.
    pub fn to_file_string(&self) -> String {
        let mut out = String::new();
        for (surface, mask) in &self.entries {
            out.push_str(surface);
            out.push('\t');
            out.push_str(&self.tagset.format_mask(*mask));
            out.push('\n');
        }
        out
    }

    pub fn parse(language: &str, tagset: Tagset, raw: &str, source_name: &str) -> Result<Self> {
        let mut lex = LanguageLexicon::new(language, tagset);
        for (i, line) in raw.lines().enumerate() {
            if line.is_empty() {
                continue;
            }
            let (surface, tags) = line
                .split_once('\t')
                .ok_or_else(|| Error::parse(source_name, i + 1, "expected surface<TAB>tags"))?;
            let mask = lex
                .tagset
                .parse_list(tags)
                .map_err(|m| Error::parse(source_name, i + 1, m))?;
            lex.insert(surface, mask)
                .map_err(|e| Error::parse(source_name, i + 1, e.to_string()))?;
        }
        Ok(lex)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Lexicon {
    pub mode: LexiconMode,
    languages: Vec<LanguageLexicon>,
}

impl Lexicon {
    pub fn from_languages(mode: LexiconMode, languages: Vec<LanguageLexicon>) -> Self {
        Lexicon { mode, languages }
    }

    pub fn language(&self, lang: usize) -> &LanguageLexicon {
        &self.languages[lang]
    }

    pub fn languages(&self) -> &[LanguageLexicon] {
        &self.languages
    }

    pub fn get(&self, id: &str) -> Option<&LanguageLexicon> {
        self.languages.iter().find(|l| l.language == id)
    }

    /// Restricts to the named languages, in the given order.
    pub fn select(&self, ids: &[&str]) -> Result<Self> {
        let languages = ids
            .iter()
            .map(|id| {
                self.get(id)
                    .cloned()
                    .ok_or_else(|| Error::UnknownLanguage(id.to_string()))
            })
            .collect::<Result<_>>()?;
        Ok(Lexicon {
            mode: self.mode,
            languages,
        })
    }
}

/// Derives a dictionary from the gold annotations of the whole corpus and
/// applies the reduction rule of `mode`.
pub fn build_lexicon(corpus: &TaggedCorpus, mode: LexiconMode) -> Result<Lexicon> {
    let languages = corpus
        .texts()
        .iter()
        .map(|text| build_language_lexicon(text, mode))
        .collect::<Result<_>>()?;
    Ok(Lexicon { mode, languages })
}

pub fn build_language_lexicon(text: &LanguageText, mode: LexiconMode) -> Result<LanguageLexicon> {
    if !text.has_gold() {
        return Err(Error::NoGoldTags(text.language.id.clone()));
    }
    let mut full: HashMap<u32, TagMask> = HashMap::new();
    let mut freq: HashMap<u32, u32> = HashMap::new();
    for token in text.sentences.iter().flatten().filter(|t| !t.is_punct) {
        *freq.entry(token.word).or_default() += 1;
        if let Some(g) = token.gold {
            full.entry(token.word).or_default().insert(g);
        }
    }
    let retained: Vec<u32> = match mode {
        LexiconMode::Full => full.keys().copied().collect(),
        LexiconMode::CountAbove(k) => full.keys().copied().filter(|w| freq[w] > k).collect(),
        LexiconMode::TopFrequent(k) => {
            let mut ranked: Vec<u32> = full.keys().copied().collect();
            ranked.sort_by(|a, b| {
                freq[b]
                    .cmp(&freq[a])
                    .then_with(|| text.vocab.word(*a).cmp(text.vocab.word(*b)))
            });
            ranked.truncate(k);
            ranked
        }
    };
    let mut lex = LanguageLexicon::new(text.language.id.clone(), text.language.tagset.clone());
    for w in retained {
        lex.insert(text.vocab.word(w), full[&w])?;
    }
    Ok(lex)
}

/// Mean number of permitted tags per token.
pub fn mean_ambiguity(text: &LanguageText, lexicon: &LanguageLexicon) -> f64 {
    let (sum, n) = text
        .sentences
        .iter()
        .flatten()
        .fold((0usize, 0usize), |(s, n), t| {
            (s + lexicon.allowed_token(text, t).len(), n + 1)
        });
    if n == 0 {
        0.0
    } else {
        sum as f64 / n as f64
    }
}
