//! Tag identifiers, tag sets and bit masks over them.

use std::collections::HashMap;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Reserved symbol added to every tagset for punctuation tokens.
pub const PUNCT_TAG: &str = "PUNCT";

/// Upper bound on tagset size, so that a tag set fits in a `u64` mask.
pub const MAX_TAGS: usize = 64;

pub type TagId = u8;

/// A set of tags of one language, stored as a bit mask.
#[derive(Clone, Copy, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct TagMask(u64);

impl TagMask {
    pub const EMPTY: TagMask = TagMask(0);

    pub fn single(tag: TagId) -> Self {
        TagMask(1 << tag)
    }

    /// All tags `0..n`.
    pub fn full(n: usize) -> Self {
        debug_assert!(n <= MAX_TAGS);
        if n == MAX_TAGS {
            TagMask(u64::MAX)
        } else {
            TagMask((1u64 << n) - 1)
        }
    }

    pub fn from_bits(bits: u64) -> Self {
        TagMask(bits)
    }

    pub fn bits(self) -> u64 {
        self.0
    }

    pub fn contains(self, tag: TagId) -> bool {
        (tag as usize) < MAX_TAGS && self.0 & (1 << tag) != 0
    }

    pub fn insert(&mut self, tag: TagId) {
        self.0 |= 1 << tag;
    }

    pub fn without(self, tag: TagId) -> Self {
        TagMask(self.0 & !(1 << tag))
    }

    pub fn union(self, other: TagMask) -> Self {
        TagMask(self.0 | other.0)
    }

    pub fn is_subset_of(self, other: TagMask) -> bool {
        self.0 & !other.0 == 0
    }

    pub fn len(self) -> usize {
        self.0.count_ones() as usize
    }

    pub fn is_empty(self) -> bool {
        self.0 == 0
    }

    /// Tags in ascending id order.
    pub fn iter(self) -> impl Iterator<Item = TagId> {
        let mut bits = self.0;
        std::iter::from_fn(move || {
            if bits == 0 {
                None
            } else {
                let tag = bits.trailing_zeros() as TagId;
                bits &= bits - 1;
                Some(tag)
            }
        })
    }

    pub fn first(self) -> Option<TagId> {
        self.iter().next()
    }
}

impl fmt::Debug for TagMask {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_set().entries(self.iter()).finish()
    }
}

impl FromIterator<TagId> for TagMask {
    fn from_iter<I: IntoIterator<Item = TagId>>(iter: I) -> Self {
        let mut mask = TagMask::EMPTY;
        for tag in iter {
            mask.insert(tag);
        }
        mask
    }
}

/// Ordered list of tag symbols for one language. Always contains
/// [`PUNCT_TAG`] exactly once.
#[derive(Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "Vec<String>", into = "Vec<String>")]
pub struct Tagset {
    symbols: Vec<String>,
    punct: TagId,
    #[serde(skip)]
    index: HashMap<String, TagId>,
}

impl Tagset {
    pub fn new<S: Into<String>>(symbols: impl IntoIterator<Item = S>) -> Result<Self> {
        let symbols: Vec<String> = symbols.into_iter().map(Into::into).collect();
        if symbols.is_empty() {
            return Err(Error::InvalidTagset("tagset is empty".into()));
        }
        if symbols.len() > MAX_TAGS {
            return Err(Error::InvalidTagset(format!(
                "{} tags exceeds the limit of {MAX_TAGS}",
                symbols.len()
            )));
        }
        let mut index = HashMap::with_capacity(symbols.len());
        for (i, s) in symbols.iter().enumerate() {
            if s.is_empty() || s.contains(|c: char| c.is_whitespace() || c == ',') {
                return Err(Error::InvalidTagset(format!("malformed tag symbol `{s}`")));
            }
            if index.insert(s.clone(), i as TagId).is_some() {
                return Err(Error::InvalidTagset(format!("duplicate tag `{s}`")));
            }
        }
        let punct = *index
            .get(PUNCT_TAG)
            .ok_or_else(|| Error::InvalidTagset(format!("missing reserved tag `{PUNCT_TAG}`")))?;
        Ok(Tagset {
            symbols,
            punct,
            index,
        })
    }

    /// Builds a tagset from content tags, appending the punctuation tag if it
    /// is not already present.
    pub fn with_punctuation<S: Into<String>>(symbols: impl IntoIterator<Item = S>) -> Result<Self> {
        let mut symbols: Vec<String> = symbols.into_iter().map(Into::into).collect();
        if !symbols.iter().any(|s| s == PUNCT_TAG) {
            symbols.push(PUNCT_TAG.to_string());
        }
        Tagset::new(symbols)
    }

    /// The Multext-East main-category repository for one of the eight
    /// languages of the Orwell parallel corpus, plus the punctuation tag.
    pub fn multext_east(language: &str) -> Option<Self> {
        const ALL: [&str; 14] = [
            "A", "C", "D", "I", "M", "N", "P", "Q", "R", "S", "T", "V", "X", "Y",
        ];
        let (has_d, has_q, has_t) = match language {
            "bg" | "cs" | "sl" | "sr" => (false, true, false),
            "en" => (true, false, false),
            "et" => (false, false, false),
            "hu" => (false, false, true),
            "ro" => (true, true, true),
            _ => return None,
        };
        let symbols = ALL.iter().copied().filter(|s| match *s {
            "D" => has_d,
            "Q" => has_q,
            "T" => has_t,
            _ => true,
        });
        Some(Tagset::with_punctuation(symbols).expect("static tagset is valid"))
    }

    pub fn len(&self) -> usize {
        self.symbols.len()
    }

    pub fn is_empty(&self) -> bool {
        self.symbols.is_empty()
    }

    pub fn punct(&self) -> TagId {
        self.punct
    }

    pub fn id(&self, symbol: &str) -> Option<TagId> {
        self.index.get(symbol).copied()
    }

    pub fn symbol(&self, tag: TagId) -> &str {
        &self.symbols[tag as usize]
    }

    pub fn symbols(&self) -> &[String] {
        &self.symbols
    }

    pub fn all(&self) -> TagMask {
        TagMask::full(self.len())
    }

    /// Every tag except punctuation: the set an uncovered word may take.
    pub fn open_class(&self) -> TagMask {
        self.all().without(self.punct)
    }

    pub fn parse_list(&self, list: &str) -> std::result::Result<TagMask, String> {
        let mut mask = TagMask::EMPTY;
        for sym in list.split(',') {
            match self.id(sym) {
                Some(t) => mask.insert(t),
                None => return Err(format!("unknown tag symbol `{sym}`")),
            }
        }
        Ok(mask)
    }

    pub fn format_mask(&self, mask: TagMask) -> String {
        let parts: Vec<&str> = mask.iter().map(|t| self.symbol(t)).collect();
        parts.join(",")
    }
}

impl fmt::Debug for Tagset {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_list().entries(&self.symbols).finish()
    }
}

impl TryFrom<Vec<String>> for Tagset {
    type Error = Error;

    fn try_from(symbols: Vec<String>) -> Result<Self> {
        Tagset::new(symbols)
    }
}

impl From<Tagset> for Vec<String> {
    fn from(t: Tagset) -> Self {
        t.symbols
    }
}

/// Global category list used to seed the initial superlingual values: one
/// value per shared part-of-speech category.
#[derive(Clone, Debug)]
pub struct SharedCategories {
    names: Vec<String>,
    /// per language, per tag: category index
    maps: Vec<Vec<usize>>,
}

impl SharedCategories {
    const MULTEXT_EAST: [&'static str; 14] = [
        "A", "C", "D/T", "I", "M", "N", "P", "Q", "R", "S", "V", "X", "Y", PUNCT_TAG,
    ];

    /// With Multext-East tagsets this yields the 14 categories (the 11
    /// shared ones, particle, determiner/article, punctuation). Any other
    /// tagsets use the union of their symbols in first-seen order.
    pub fn for_tagsets(tagsets: &[&Tagset]) -> Self {
        let is_me = tagsets.iter().all(|ts| {
            ts.symbols()
                .iter()
                .all(|s| s == PUNCT_TAG || (s.len() == 1 && "ACDIMNPQRSTVXY".contains(s.as_str())))
        });
        let canonical = |s: &str| -> String {
            if is_me && (s == "D" || s == "T") {
                "D/T".to_string()
            } else {
                s.to_string()
            }
        };
        let mut names: Vec<String> = if is_me {
            Self::MULTEXT_EAST.iter().map(|s| s.to_string()).collect()
        } else {
            Vec::new()
        };
        let mut maps = Vec::with_capacity(tagsets.len());
        for ts in tagsets {
            let mut map = Vec::with_capacity(ts.len());
            for s in ts.symbols() {
                let c = canonical(s);
                let idx = match names.iter().position(|n| *n == c) {
                    Some(i) => i,
                    None => {
                        names.push(c);
                        names.len() - 1
                    }
                };
                map.push(idx);
            }
            maps.push(map);
        }
        SharedCategories { names, maps }
    }

    pub fn len(&self) -> usize {
        self.names.len()
    }

    pub fn is_empty(&self) -> bool {
        self.names.is_empty()
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn category(&self, language: usize, tag: TagId) -> usize {
        self.maps[language][tag as usize]
    }
}
