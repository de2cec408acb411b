//! Word-alignment processing: symmetrisation of directional alignments,
//! crossing-edge removal, and construction of densely connected multilingual
//! alignment sets.

use std::collections::{BTreeMap, BTreeSet};

use crate::corpus::TaggedCorpus;
use crate::error::{Error, Result};

/// `(i, j)`: token `i` of the first language aligned to token `j` of the
/// second.
pub type Edge = (u32, u32);

/// Links of one directional alignment for one sentence, in file order.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct DirectionalAlignment {
    pub sentence: usize,
    pub links: Vec<Edge>,
}

/// One-to-one alignment between the same sentence in two languages. Edges
/// are kept sorted.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct BilingualAlignment {
    pub sentence: usize,
    edges: Vec<Edge>,
}

impl BilingualAlignment {
    pub fn new(sentence: usize, mut edges: Vec<Edge>) -> Result<Self> {
        edges.sort_unstable();
        edges.dedup();
        if !is_one_to_one(&edges) {
            return Err(Error::NotOneToOne(sentence));
        }
        Ok(BilingualAlignment { sentence, edges })
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    pub fn len(&self) -> usize {
        self.edges.len()
    }

    pub fn is_empty(&self) -> bool {
        self.edges.is_empty()
    }

    /// The same alignment seen from the second language.
    pub fn transposed(&self) -> Self {
        let mut edges: Vec<Edge> = self.edges.iter().map(|&(i, j)| (j, i)).collect();
        edges.sort_unstable();
        BilingualAlignment {
            sentence: self.sentence,
            edges,
        }
    }
}

pub fn is_one_to_one(edges: &[Edge]) -> bool {
    let mut left = BTreeSet::new();
    let mut right = BTreeSet::new();
    edges
        .iter()
        .all(|&(i, j)| left.insert(i) && right.insert(j))
}

/// Strictly monotone: for any two edges `i < i'` iff `j < j'`, and no shared
/// coordinate.
pub fn is_monotone(edges: &[Edge]) -> bool {
    for (k, &(i, j)) in edges.iter().enumerate() {
        for &(i2, j2) in &edges[k + 1..] {
            if i == i2 || j == j2 || ((i < i2) != (j < j2)) {
                return false;
            }
        }
    }
    true
}

/// Intersects the two directional alignments of a sentence pair. `fwd` holds
/// `(i, j)` links from the first language to the second; `rev` holds links
/// of the reverse run in its own orientation, `(j, i)`.
pub fn intersect_directional(
    sentence: usize,
    fwd: &[Edge],
    rev: &[Edge],
    first_len: usize,
    second_len: usize,
) -> Result<BilingualAlignment> {
    let check = |links: &[Edge], a_len: usize, b_len: usize| -> Result<()> {
        for &(a, b) in links {
            if a as usize >= a_len {
                return Err(Error::IndexOutOfRange {
                    sentence,
                    index: a,
                    len: a_len,
                });
            }
            if b as usize >= b_len {
                return Err(Error::IndexOutOfRange {
                    sentence,
                    index: b,
                    len: b_len,
                });
            }
        }
        Ok(())
    };
    check(fwd, first_len, second_len)?;
    check(rev, second_len, first_len)?;
    let reverse: BTreeSet<Edge> = rev.iter().map(|&(j, i)| (i, j)).collect();
    let edges: Vec<Edge> = fwd
        .iter()
        .copied()
        .filter(|e| reverse.contains(e))
        .collect();
    BilingualAlignment::new(sentence, edges)
}

/// Scans edges left to right (by `i`, then `j`) and keeps an edge only if it
/// lies strictly after every edge kept so far in both languages.
pub fn remove_crossing_edges(alignment: &BilingualAlignment) -> BilingualAlignment {
    let mut kept: Vec<Edge> = Vec::with_capacity(alignment.edges.len());
    for &(i, j) in &alignment.edges {
        match kept.last() {
            Some(&(pi, pj)) if i <= pi || j <= pj => {}
            _ => kept.push((i, j)),
        }
    }
    BilingualAlignment {
        sentence: alignment.sentence,
        edges: kept,
    }
}

/// A token of one language within one parallel sentence.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct TokenRef {
    pub lang: u16,
    pub pos: u32,
}

/// A densely connected group of mutually aligned tokens: the site of one
/// superlingual tag.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct AlignmentSet {
    pub sentence: usize,
    /// sorted
    pub members: Vec<TokenRef>,
    pub links: Vec<(TokenRef, TokenRef)>,
}

impl AlignmentSet {
    pub fn languages(&self) -> BTreeSet<u16> {
        self.members.iter().map(|m| m.lang).collect()
    }

    pub fn is_dense(&self) -> bool {
        dense_enough(self.members.len(), self.links.len())
    }
}

/// `links / C(n, 2) >= 2/3`, in integer arithmetic.
pub fn dense_enough(members: usize, links: usize) -> bool {
    members >= 2 && 3 * links >= members * (members - 1)
}

/// An undirected alignment graph over the tokens of one parallel sentence.
#[derive(Clone, Debug, Default)]
pub struct AlignmentGraph {
    adjacency: BTreeMap<TokenRef, BTreeSet<TokenRef>>,
}

impl AlignmentGraph {
    pub fn add_pair(&mut self, first: u16, second: u16, alignment: &BilingualAlignment) {
        for &(i, j) in alignment.edges() {
            self.add_link(TokenRef { lang: first, pos: i }, TokenRef { lang: second, pos: j });
        }
    }

    pub fn add_link(&mut self, a: TokenRef, b: TokenRef) {
        if a == b {
            return;
        }
        self.adjacency.entry(a).or_default().insert(b);
        self.adjacency.entry(b).or_default().insert(a);
    }

    pub fn linked(&self, a: TokenRef, b: TokenRef) -> bool {
        self.adjacency.get(&a).is_some_and(|n| n.contains(&b))
    }

    pub fn aligned_tokens(&self) -> impl Iterator<Item = TokenRef> + '_ {
        self.adjacency.keys().copied()
    }

    fn links_within(&self, members: &[TokenRef]) -> Vec<(TokenRef, TokenRef)> {
        let mut links = Vec::new();
        for (k, &a) in members.iter().enumerate() {
            for &b in &members[k + 1..] {
                if self.linked(a, b) {
                    links.push((a, b));
                }
            }
        }
        links
    }

    /// Seed plus its neighbours, shrunk greedily until dense: the member with
    /// the fewest links into the candidate goes first, ties broken by
    /// `(lang, pos)`; the seed itself is never removed.
    fn dense_set_for(&self, seed: TokenRef) -> Vec<TokenRef> {
        let mut members: Vec<TokenRef> = std::iter::once(seed)
            .chain(self.adjacency[&seed].iter().copied())
            .collect();
        members.sort_unstable();
        loop {
            let links = self.links_within(&members).len();
            if dense_enough(members.len(), links) {
                return members;
            }
            let weakest = members
                .iter()
                .copied()
                .filter(|&m| m != seed)
                .min_by_key(|&m| {
                    let degree = members.iter().filter(|&&o| self.linked(m, o)).count();
                    (degree, m)
                })
                .expect("a candidate that is not dense has at least two non-seed members");
            members.retain(|&m| m != weakest);
        }
    }

    /// Builds the alignment sets of this sentence. Seeds are visited in
    /// `(lang, pos)` order; a newly admitted set evicts earlier sets that are
    /// strict subsets of it, and an identical set is only created once.
    pub fn alignment_sets(&self, sentence: usize) -> Vec<AlignmentSet> {
        let mut admitted: Vec<Vec<TokenRef>> = Vec::new();
        for seed in self.aligned_tokens() {
            let candidate = self.dense_set_for(seed);
            if admitted.contains(&candidate) {
                continue;
            }
            admitted.retain(|old| !(old.len() < candidate.len() && is_subset(old, &candidate)));
            admitted.push(candidate);
        }
        admitted
            .into_iter()
            .map(|members| AlignmentSet {
                sentence,
                links: self.links_within(&members),
                members,
            })
            .collect()
    }
}

fn is_subset(small: &[TokenRef], large: &[TokenRef]) -> bool {
    small.iter().all(|m| large.binary_search(m).is_ok())
}

/// Alignment sets for one sentence from all its pairwise alignments. Each
/// entry is `(first language, second language, alignment)`.
pub fn build_alignment_sets(
    sentence: usize,
    pairwise: &[(u16, u16, &BilingualAlignment)],
) -> Vec<AlignmentSet> {
    let mut graph = AlignmentGraph::default();
    for (a, b, alignment) in pairwise {
        graph.add_pair(*a, *b, alignment);
    }
    graph.alignment_sets(sentence)
}

/// Fraction of each language's tokens that take part in at least one edge.
/// `alignments` covers any subset of the corpus sentences; tokens of all
/// sentences count in the denominator.
pub fn alignment_density(
    corpus: &TaggedCorpus,
    first: usize,
    second: usize,
    alignments: &[BilingualAlignment],
) -> (f64, f64) {
    let total = |lang: usize| corpus.text(lang).token_count();
    let aligned: usize = alignments.iter().map(BilingualAlignment::len).sum();
    let frac = |n: usize, d: usize| if d == 0 { 0.0 } else { n as f64 / d as f64 };
    (frac(aligned, total(first)), frac(aligned, total(second)))
}

/// Summary of alignment-set construction over a corpus.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct CoverageStats {
    pub sets: usize,
    pub covered_tokens: usize,
    pub total_tokens: usize,
    /// number of covering sets -> number of tokens
    pub sets_per_token: BTreeMap<usize, usize>,
    /// number of languages -> number of sets
    pub languages_per_set: BTreeMap<usize, usize>,
}

impl CoverageStats {
    pub fn coverage(&self) -> f64 {
        if self.total_tokens == 0 {
            0.0
        } else {
            self.covered_tokens as f64 / self.total_tokens as f64
        }
    }

    /// Share of covered tokens in exactly `k` sets, or `k` or more when
    /// `at_least` is set.
    pub fn token_share(&self, k: usize, at_least: bool) -> f64 {
        share(&self.sets_per_token, self.covered_tokens, k, at_least)
    }

    pub fn set_share(&self, k: usize, at_least: bool) -> f64 {
        share(&self.languages_per_set, self.sets, k, at_least)
    }

    pub fn report(&self) -> String {
        format!(
            "sets\t{}\ncovered_tokens\t{}\ntotal_tokens\t{}\ncoverage\t{:.4}\n\
             tokens_in_1_set\t{:.4}\ntokens_in_2_sets\t{:.4}\ntokens_in_3+_sets\t{:.4}\n\
             sets_with_2_languages\t{:.4}\nsets_with_3_languages\t{:.4}\nsets_with_4+_languages\t{:.4}\n",
            self.sets,
            self.covered_tokens,
            self.total_tokens,
            self.coverage(),
            self.token_share(1, false),
            self.token_share(2, false),
            self.token_share(3, true),
            self.set_share(2, false),
            self.set_share(3, false),
            self.set_share(4, true),
        )
    }
}

fn share(hist: &BTreeMap<usize, usize>, total: usize, k: usize, at_least: bool) -> f64 {
    if total == 0 {
        return 0.0;
    }
    let n: usize = hist
        .iter()
        .filter(|(&key, _)| if at_least { key >= k } else { key == k })
        .map(|(_, &v)| v)
        .sum();
    n as f64 / total as f64
}

pub fn coverage_stats(sets: &[AlignmentSet], total_tokens: usize) -> CoverageStats {
    let mut per_token: BTreeMap<(usize, TokenRef), usize> = BTreeMap::new();
    let mut languages_per_set = BTreeMap::new();
    for set in sets {
        for &m in &set.members {
            *per_token.entry((set.sentence, m)).or_default() += 1;
        }
        *languages_per_set.entry(set.languages().len()).or_default() += 1;
    }
    let mut sets_per_token = BTreeMap::new();
    for &count in per_token.values() {
        *sets_per_token.entry(count).or_default() += 1;
    }
    CoverageStats {
        sets: sets.len(),
        covered_tokens: per_token.len(),
        total_tokens,
        sets_per_token,
        languages_per_set,
    }
}

/// Parses `sentIdx i-j i-j ...` lines (0-based indices).
pub fn parse_alignment_file(raw: &str, source_name: &str) -> Result<Vec<DirectionalAlignment>> {
    let mut out = Vec::new();
    for (n, line) in raw.lines().enumerate() {
        let lineno = n + 1;
        let mut fields = line.split_whitespace();
        let Some(first) = fields.next() else {
            continue;
        };
        let sentence: usize = first
            .parse()
            .map_err(|_| Error::parse(source_name, lineno, format!("bad sentence index `{first}`")))?;
        let mut links = Vec::new();
        for field in fields {
            let bad = || Error::parse(source_name, lineno, format!("malformed link `{field}`"));
            let (i, j) = field.split_once('-').ok_or_else(bad)?;
            links.push((i.parse().map_err(|_| bad())?, j.parse().map_err(|_| bad())?));
        }
        out.push(DirectionalAlignment { sentence, links });
    }
    Ok(out)
}

pub fn write_alignment_file<'a>(alignments: impl IntoIterator<Item = (usize, &'a [Edge])>) -> String {
    let mut out = String::new();
    for (sentence, edges) in alignments {
        out.push_str(&sentence.to_string());
        for (i, j) in edges {
            out.push_str(&format!(" {i}-{j}"));
        }
        out.push('\n');
    }
    out
}

/// `sentIdx<TAB>lang:pos,lang:pos,...`, one set per line.
pub fn write_sets_file(sets: &[AlignmentSet], language_ids: &[&str]) -> String {
    let mut out = String::new();
    for set in sets {
        let members: Vec<String> = set
            .members
            .iter()
            .map(|m| format!("{}:{}", language_ids[m.lang as usize], m.pos))
            .collect();
        out.push_str(&format!("{}\t{}\n", set.sentence, members.join(",")));
    }
    out
}

/// Reads a sets file. Links are not stored in the file, so they are left
/// empty.
pub fn parse_sets_file(raw: &str, language_ids: &[&str], source_name: &str) -> Result<Vec<AlignmentSet>> {
    let mut out = Vec::new();
    for (n, line) in raw.lines().enumerate() {
        if line.is_empty() {
            continue;
        }
        let lineno = n + 1;
        let (sent, members) = line
            .split_once('\t')
            .ok_or_else(|| Error::parse(source_name, lineno, "expected sentIdx<TAB>members"))?;
        let sentence = sent
            .parse()
            .map_err(|_| Error::parse(source_name, lineno, format!("bad sentence index `{sent}`")))?;
        let mut refs = Vec::new();
        for m in members.split(',') {
            let bad = || Error::parse(source_name, lineno, format!("malformed member `{m}`"));
            let (lang, pos) = m.split_once(':').ok_or_else(bad)?;
            let lang = language_ids
                .iter()
                .position(|l| *l == lang)
                .ok_or_else(|| Error::parse(source_name, lineno, format!("unknown language `{lang}`")))?;
            refs.push(TokenRef {
                lang: lang as u16,
                pos: pos.parse().map_err(|_| bad())?,
            });
        }
        refs.sort_unstable();
        out.push(AlignmentSet {
            sentence,
            members: refs,
            links: Vec::new(),
        });
    }
    Ok(out)
}
