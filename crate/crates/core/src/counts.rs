//! Sufficient statistics of one language's trigram HMM and the collapsed
//! (Dirichlet-integrated) emission and transition probabilities.
//!
//! Tags are `0..T`. Transition outcomes are the tags plus an end state at
//! index `T`; contexts are pairs over the tags plus a start symbol, also at
//! index `T`. Every sentence is padded with two start symbols and
//! terminated by one end outcome.

use statrs::function::gamma::ln_gamma;

use std::ops::Range;

use crate::corpus::{LanguageText, WordId};
use crate::error::{Error, Result};
use crate::lexicon::LanguageLexicon;
use crate::tags::{TagId, TagMask};

/// Observed side of one language's training data, prepared for sampling.
#[derive(Clone, Debug)]
pub struct LanguageObs {
    pub id: String,
    pub num_tags: usize,
    pub vocab_size: usize,
    /// `|W_t|`: number of word types in the vocabulary that may take tag `t`.
    pub type_sizes: Vec<u32>,
    /// Permitted tags of every word type.
    pub type_masks: Vec<TagMask>,
    pub sentences: Vec<Vec<Slot>>,
    /// Gold tags of the same sentences, when annotated.
    pub gold: Option<Vec<Vec<TagId>>>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Slot {
    pub word: WordId,
    pub allowed: TagMask,
}

impl LanguageObs {
    /// Sentences `range` of `text` with the permitted tags from `lexicon`.
    /// Type sizes cover the whole vocabulary, test sentences included.
    pub fn build(text: &LanguageText, lexicon: &LanguageLexicon, range: Range<usize>) -> Self {
        let num_tags = text.language.tagset.len();
        let mut type_masks = vec![TagMask::EMPTY; text.vocab.len()];
        for token in text.sentences.iter().flatten() {
            let m = &mut type_masks[token.word as usize];
            *m = m.union(lexicon.allowed_token(text, token));
        }
        let sentences = text.sentences[range.clone()]
            .iter()
            .map(|s| {
                s.iter()
                    .map(|t| Slot {
                        word: t.word,
                        allowed: lexicon.allowed_token(text, t),
                    })
                    .collect()
            })
            .collect();
        LanguageObs {
            id: text.language.id.clone(),
            num_tags,
            vocab_size: text.vocab.len(),
            type_sizes: Self::type_sizes_from_masks(num_tags, &type_masks),
            type_masks,
            sentences,
            gold: text.gold_tags(range),
        }
    }

    pub fn token_count(&self) -> usize {
        self.sentences.iter().map(Vec::len).sum()
    }

    /// Builds `type_sizes` from the permitted-tag mask of every word type.
    pub fn type_sizes_from_masks(num_tags: usize, type_masks: &[TagMask]) -> Vec<u32> {
        let mut sizes = vec![0u32; num_tags];
        for mask in type_masks {
            for t in mask.iter() {
                sizes[t as usize] += 1;
            }
        }
        sizes
    }
}

#[inline]
pub fn collapsed_ratio(count: f64, total: f64, dim: f64, prior: f64) -> f64 {
    (count + prior) / (total + dim * prior)
}

/// `(n(t,w) + θ₀) / (n(t) + |W_t|·θ₀)`.
pub fn emission_prob(n_tw: u32, n_t: u32, type_size: u32, theta: f64) -> Result<f64> {
    crate::error::check_positive("theta0", theta)?;
    Ok(collapsed_ratio(n_tw as f64, n_t as f64, type_size as f64, theta))
}

/// `(n(t₁,t₂,t₃) + φ₀) / (n(t₁,t₂) + |T|·φ₀)` with `|T|` counting the end
/// state.
pub fn transition_prob(n_tri: u32, n_ctx: u32, outcomes: usize, phi: f64) -> Result<f64> {
    crate::error::check_positive("phi0", phi)?;
    Ok(collapsed_ratio(n_tri as f64, n_ctx as f64, outcomes as f64, phi))
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LanguageCounts {
    num_tags: usize,
    vocab_size: usize,
    trigram: Vec<u32>,
    context: Vec<u32>,
    emission: Vec<u32>,
    tag_total: Vec<u32>,
}

impl LanguageCounts {
    pub fn new(num_tags: usize, vocab_size: usize) -> Self {
        let c = num_tags + 1;
        LanguageCounts {
            num_tags,
            vocab_size,
            trigram: vec![0; c * c * c],
            context: vec![0; c * c],
            emission: vec![0; num_tags * vocab_size],
            tag_total: vec![0; num_tags],
        }
    }

    /// Counts of every sentence under `tags`.
    pub fn from_tags(obs: &LanguageObs, tags: &[Vec<TagId>]) -> Self {
        let mut counts = LanguageCounts::new(obs.num_tags, obs.vocab_size);
        for (sentence, t) in obs.sentences.iter().zip(tags) {
            counts.add_sentence(sentence, t);
        }
        counts
    }

    pub fn num_tags(&self) -> usize {
        self.num_tags
    }

    /// Number of transition outcomes: tags plus the end state.
    pub fn outcomes(&self) -> usize {
        self.num_tags + 1
    }

    pub fn start(&self) -> usize {
        self.num_tags
    }

    pub fn end(&self) -> usize {
        self.num_tags
    }

    #[inline]
    fn ctx_index(&self, c1: usize, c2: usize) -> usize {
        c1 * (self.num_tags + 1) + c2
    }

    #[inline]
    fn tri_index(&self, c1: usize, c2: usize, o: usize) -> usize {
        self.ctx_index(c1, c2) * (self.num_tags + 1) + o
    }

    pub fn trigram_count(&self, c1: usize, c2: usize, o: usize) -> u32 {
        self.trigram[self.tri_index(c1, c2, o)]
    }

    pub fn context_total(&self, c1: usize, c2: usize) -> u32 {
        self.context[self.ctx_index(c1, c2)]
    }

    pub fn emission_count(&self, tag: TagId, word: WordId) -> u32 {
        self.emission[tag as usize * self.vocab_size + word as usize]
    }

    pub fn tag_total(&self, tag: TagId) -> u32 {
        self.tag_total[tag as usize]
    }

    pub fn total_tokens(&self) -> u64 {
        self.tag_total.iter().map(|&n| n as u64).sum()
    }

    /// Context symbol at position `k` (start symbol before the sentence),
    /// with position `sub.0` read as tag `sub.1`.
    #[inline]
    fn symbol(&self, tags: &[TagId], k: isize, sub: Option<(usize, TagId)>) -> usize {
        if k < 0 {
            self.start()
        } else {
            match sub {
                Some((p, t)) if p == k as usize => t as usize,
                _ => tags[k as usize] as usize,
            }
        }
    }

    /// Outcome at position `k`; `k == len` is the end state.
    #[inline]
    fn outcome(&self, tags: &[TagId], k: usize, sub: Option<(usize, TagId)>) -> usize {
        if k == tags.len() {
            self.end()
        } else {
            self.symbol(tags, k as isize, sub)
        }
    }

    /// The trigram predicting position `k` as `(context index, trigram index)`.
    #[inline]
    pub(crate) fn trigram_at(&self, tags: &[TagId], k: usize, sub: Option<(usize, TagId)>) -> (usize, usize) {
        let k = k as isize;
        let c1 = self.symbol(tags, k - 2, sub);
        let c2 = self.symbol(tags, k - 1, sub);
        let o = self.outcome(tags, k as usize, sub);
        (self.ctx_index(c1, c2), self.tri_index(c1, c2, o))
    }

    /// Context pair `(c1, c2)` preceding position `k`.
    pub(crate) fn context_at(&self, tags: &[TagId], k: usize, sub: Option<(usize, TagId)>) -> (usize, usize) {
        let k = k as isize;
        (self.symbol(tags, k - 2, sub), self.symbol(tags, k - 1, sub))
    }

    /// Positions whose trigram includes position `i`.
    #[inline]
    pub(crate) fn affected(len: usize, i: usize) -> std::ops::RangeInclusive<usize> {
        i..=(i + 2).min(len)
    }

    fn bump_trigram(&mut self, ctx: usize, tri: usize, up: bool) -> Result<()> {
        if up {
            self.trigram[tri] += 1;
            self.context[ctx] += 1;
        } else {
            if self.trigram[tri] == 0 || self.context[ctx] == 0 {
                return Err(Error::CountUnderflow("transition counts"));
            }
            self.trigram[tri] -= 1;
            self.context[ctx] -= 1;
        }
        Ok(())
    }

    pub fn add_emission(&mut self, tag: TagId, word: WordId) {
        self.emission[tag as usize * self.vocab_size + word as usize] += 1;
        self.tag_total[tag as usize] += 1;
    }

    pub fn remove_emission(&mut self, tag: TagId, word: WordId) -> Result<()> {
        let idx = tag as usize * self.vocab_size + word as usize;
        if self.emission[idx] == 0 || self.tag_total[tag as usize] == 0 {
            return Err(Error::CountUnderflow("emission counts"));
        }
        self.emission[idx] -= 1;
        self.tag_total[tag as usize] -= 1;
        Ok(())
    }

    pub fn add_sentence(&mut self, slots: &[Slot], tags: &[TagId]) {
        for (slot, &t) in slots.iter().zip(tags) {
            self.add_emission(t, slot.word);
        }
        for k in 0..=tags.len() {
            let (ctx, tri) = self.trigram_at(tags, k, None);
            self.trigram[tri] += 1;
            self.context[ctx] += 1;
        }
    }

    /// Removes the emission at `i` and every trigram that contains `i`.
    pub fn remove_position(&mut self, slots: &[Slot], tags: &[TagId], i: usize) -> Result<()> {
        self.remove_emission(tags[i], slots[i].word)?;
        for k in Self::affected(tags.len(), i) {
            let (ctx, tri) = self.trigram_at(tags, k, None);
            self.bump_trigram(ctx, tri, false)?;
        }
        Ok(())
    }

    pub fn add_position(&mut self, slots: &[Slot], tags: &[TagId], i: usize) {
        self.add_emission(tags[i], slots[i].word);
        for k in Self::affected(tags.len(), i) {
            let (ctx, tri) = self.trigram_at(tags, k, None);
            self.trigram[tri] += 1;
            self.context[ctx] += 1;
        }
    }

    #[inline]
    pub fn emission_weight(&self, tag: TagId, word: WordId, type_sizes: &[u32], theta: f64) -> f64 {
        collapsed_ratio(
            self.emission_count(tag, word) as f64,
            self.tag_total[tag as usize] as f64,
            type_sizes[tag as usize] as f64,
            theta,
        )
    }

    /// Plug-in transition distribution over all outcomes for context
    /// `(c1, c2)`.
    pub fn transition_row(&self, c1: usize, c2: usize, phi: f64, out: &mut Vec<f64>) {
        out.clear();
        let ctx = self.ctx_index(c1, c2);
        let denom = self.context[ctx] as f64 + self.outcomes() as f64 * phi;
        let base = self.tri_index(c1, c2, 0);
        out.extend(
            self.trigram[base..base + self.outcomes()]
                .iter()
                .map(|&n| (n as f64 + phi) / denom),
        );
    }

    pub fn transition_weight_at(&self, c1: usize, c2: usize, o: usize, phi: f64) -> f64 {
        collapsed_ratio(
            self.trigram_count(c1, c2, o) as f64,
            self.context_total(c1, c2) as f64,
            self.outcomes() as f64,
            phi,
        )
    }

    /// Product of the collapsed transition factors of every trigram that
    /// contains position `i`, with `i` read as `candidate`. Counts must
    /// exclude those trigrams. Factors are taken in sequence, each seeing the
    /// trigrams before it as already generated, which makes the product the
    /// exact collapsed conditional even when trigrams repeat.
    #[inline]
    pub fn transition_weight(&self, tags: &[TagId], i: usize, candidate: TagId, phi: f64) -> f64 {
        let outcomes = self.outcomes() as f64;
        let mut seen: [(usize, usize); 3] = [(usize::MAX, usize::MAX); 3];
        let mut w = 1.0;
        for (n, k) in Self::affected(tags.len(), i).enumerate() {
            let (ctx, tri) = self.trigram_at(tags, k, Some((i, candidate)));
            let mut extra_tri = 0u32;
            let mut extra_ctx = 0u32;
            for &(c, t) in &seen[..n] {
                extra_ctx += (c == ctx) as u32;
                extra_tri += (t == tri) as u32;
            }
            seen[n] = (ctx, tri);
            w *= collapsed_ratio(
                (self.trigram[tri] + extra_tri) as f64,
                (self.context[ctx] + extra_ctx) as f64,
                outcomes,
                phi,
            );
        }
        w
    }

    /// Sufficient statistics of the emission counts for hyperparameter
    /// resampling.
    pub fn emission_stats(&self, type_sizes: &[u32]) -> DirMultStats {
        let groups = self
            .tag_total
            .iter()
            .zip(type_sizes)
            .map(|(&n, &dim)| (n as u64, dim as f64))
            .collect();
        DirMultStats::new(groups, &self.emission)
    }

    pub fn transition_stats(&self) -> DirMultStats {
        let dim = self.outcomes() as f64;
        let groups = self.context.iter().map(|&n| (n as u64, dim)).collect();
        DirMultStats::new(groups, &self.trigram)
    }
}

/// Summary of a family of symmetric Dirichlet-multinomial groups sufficient
/// to evaluate their joint log marginal likelihood at any prior value.
#[derive(Clone, Debug)]
pub struct DirMultStats {
    /// (total count, dimension) per group with a nonzero total
    groups: Vec<(u64, f64)>,
    /// (cell count, number of cells with that count)
    cells: Vec<(u32, u64)>,
}

impl DirMultStats {
    pub fn new(groups: Vec<(u64, f64)>, cells: &[u32]) -> Self {
        let groups = groups.into_iter().filter(|&(n, _)| n > 0).collect();
        let mut hist: std::collections::BTreeMap<u32, u64> = Default::default();
        for &c in cells.iter().filter(|&&c| c > 0) {
            *hist.entry(c).or_default() += 1;
        }
        DirMultStats {
            groups,
            cells: hist.into_iter().collect(),
        }
    }

    /// `Σ_g [lnΓ(d·a) − lnΓ(n_g + d·a)] + Σ_cells [lnΓ(n + a) − lnΓ(a)]`.
    pub fn log_marginal(&self, prior: f64) -> f64 {
        if prior <= 0.0 {
            return f64::NEG_INFINITY;
        }
        let mut ll = 0.0;
        for &(n, dim) in &self.groups {
            ll += ln_gamma(dim * prior) - ln_gamma(n as f64 + dim * prior);
        }
        let lg = ln_gamma(prior);
        for &(c, mult) in &self.cells {
            ll += mult as f64 * (ln_gamma(c as f64 + prior) - lg);
        }
        ll
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn obs(words: &[&[u32]], num_tags: usize, vocab: usize) -> LanguageObs {
        LanguageObs {
            id: "xx".into(),
            num_tags,
            vocab_size: vocab,
            type_sizes: vec![vocab as u32; num_tags],
            type_masks: vec![TagMask::full(num_tags); vocab],
            sentences: words
                .iter()
                .map(|s| {
                    s.iter()
                        .map(|&w| Slot {
                            word: w,
                            allowed: TagMask::full(num_tags),
                        })
                        .collect()
                })
                .collect(),
            gold: None,
        }
    }

    #[test]
    fn emission_examples() {
        assert_eq!(emission_prob(0, 0, 3, 1.0).unwrap(), 1.0 / 3.0);
        assert_eq!(emission_prob(4, 9, 3, 1.0).unwrap(), 5.0 / 12.0);
        assert!(emission_prob(0, 0, 3, 0.0).is_err());
        assert!(emission_prob(0, 0, 3, -1.0).is_err());
    }

    #[test]
    fn emission_sums_to_one_over_permitted_words() {
        // 5-word vocabulary, arbitrary counts
        let counts = [3u32, 0, 7, 1, 2];
        let n_t: u32 = counts.iter().sum();
        for theta in [0.01, 0.5, 1.0, 3.0] {
            let total: f64 = counts
                .iter()
                .map(|&c| emission_prob(c, n_t, 5, theta).unwrap())
                .sum();
            assert!((total - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn transition_examples() {
        assert_eq!(transition_prob(0, 0, 4, 1.0).unwrap(), 0.25);
        assert_eq!(transition_prob(2, 5, 4, 0.5).unwrap(), 2.5 / 7.0);
        assert!(transition_prob(0, 0, 4, 0.0).is_err());
        let row = [2u32, 0, 1, 2];
        let total: f64 = row
            .iter()
            .map(|&n| transition_prob(n, 5, 4, 0.5).unwrap())
            .sum();
        assert!((total - 1.0).abs() < 1e-12);
    }

    #[test]
    fn remove_and_add_restore_counts() {
        let o = obs(&[&[0, 1, 2, 1]], 3, 3);
        let tags = vec![vec![0u8, 1, 2, 1]];
        let full = LanguageCounts::from_tags(&o, &tags);
        let mut c = full.clone();
        c.remove_position(&o.sentences[0], &tags[0], 2).unwrap();
        assert_ne!(c, full);
        c.add_position(&o.sentences[0], &tags[0], 2);
        assert_eq!(c, full);
    }

    #[test]
    fn underflow_is_an_error() {
        let o = obs(&[&[0]], 2, 1);
        let mut c = LanguageCounts::new(2, 1);
        assert!(matches!(
            c.remove_position(&o.sentences[0], &[0], 0),
            Err(Error::CountUnderflow(_))
        ));
    }

    /// Closed-form collapsed joint of tags and words.
    fn closed_form(o: &LanguageObs, tags: &[Vec<TagId>], theta: f64, phi: f64) -> f64 {
        let c = LanguageCounts::from_tags(o, tags);
        c.emission_stats(&o.type_sizes).log_marginal(theta) + c.transition_stats().log_marginal(phi)
    }

    /// The same joint built up one token at a time in a given order, each
    /// step applying the collapsed predictive formulas.
    fn sequential(o: &LanguageObs, tags: &[Vec<TagId>], order: &[(usize, usize)], theta: f64, phi: f64) -> f64 {
        let mut counts = LanguageCounts::new(o.num_tags, o.vocab_size);
        let mut lp = 0.0;
        // generate sentence ends last: trigram k == len is attached to the
        // final token of the sentence in `order`
        let mut done: Vec<Vec<bool>> = tags.iter().map(|t| vec![false; t.len()]).collect();
        for &(s, i) in order {
            let t = tags[s][i];
            let w = o.sentences[s][i].word;
            lp += counts.emission_weight(t, w, &o.type_sizes, theta).ln();
            counts.add_emission(t, w);
            done[s][i] = true;
            // any trigram whose three positions are now all generated
            for k in 0..=tags[s].len() {
                let lo = k.saturating_sub(2);
                let hi = k.min(tags[s].len() - 1);
                let complete = (lo..=hi).all(|p| done[s][p]);
                let newly = (lo..=hi).contains(&i);
                if complete && newly {
                    let (ctx, tri) = counts.trigram_at(&tags[s], k, None);
                    lp += collapsed_ratio(
                        counts.trigram[tri] as f64,
                        counts.context[ctx] as f64,
                        counts.outcomes() as f64,
                        phi,
                    )
                    .ln();
                    counts.trigram[tri] += 1;
                    counts.context[ctx] += 1;
                }
            }
        }
        lp
    }

    #[test]
    fn collapsed_joint_is_exchangeable() {
        let o = obs(&[&[0, 1, 0], &[1]], 2, 2);
        let tags = vec![vec![0u8, 0, 1], vec![0u8]];
        let exact = closed_form(&o, &tags, 0.7, 1.3);
        let slots = [(0usize, 0usize), (0, 1), (0, 2), (1, 0)];
        let orders: [[usize; 4]; 5] = [[0, 1, 2, 3], [3, 2, 1, 0], [1, 3, 0, 2], [2, 0, 3, 1], [3, 0, 2, 1]];
        for ord in orders {
            let order: Vec<(usize, usize)> = ord.iter().map(|&k| slots[k]).collect();
            let lp = sequential(&o, &tags, &order, 0.7, 1.3);
            assert!((lp - exact).abs() < 1e-10, "{lp} vs {exact}");
        }
    }

    #[test]
    fn sequential_transition_weight_matches_joint_ratio() {
        // P(y_i = t | rest) ∝ joint(y with y_i = t); verify on a sentence
        // with repeated trigrams
        let o = obs(&[&[0, 0, 0, 0]], 2, 1);
        let base = vec![0u8, 0, 0, 0];
        let phi = 0.4;
        for i in 0..4 {
            let mut counts = LanguageCounts::from_tags(&o, std::slice::from_ref(&base));
            counts.remove_position(&o.sentences[0], &base, i).unwrap();
            let w: Vec<f64> = (0..2)
                .map(|t| counts.transition_weight(&base, i, t, phi))
                .collect();
            let joint: Vec<f64> = (0..2u8)
                .map(|t| {
                    let mut y = base.clone();
                    y[i] = t;
                    LanguageCounts::from_tags(&o, &[y]).transition_stats().log_marginal(phi).exp()
                })
                .collect();
            assert!((w[0] / w[1] - joint[0] / joint[1]).abs() < 1e-10);
        }
    }
}
