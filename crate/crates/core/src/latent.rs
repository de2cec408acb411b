//! The multilingual latent-variable model. Every alignment set carries a
//! superlingual value drawn from a Dirichlet process (sampled through its
//! Chinese restaurant process marginal); each value holds one tag
//! distribution per language, combined with the HMM transitions as a product
//! of experts.

use std::collections::BTreeSet;
use std::fmt::Write as _;
use std::ops::{Add, Div, Mul};

use num_rational::Ratio;
use serde::{Deserialize, Serialize};

use crate::alignments::AlignmentSet;
use crate::chain::{sample_categorical, Chain, ModalHistogram};
use crate::checkpoint::{Checkpoint, CHECKPOINT_VERSION};
use crate::counts::{collapsed_ratio, LanguageObs};
use crate::error::{Error, Result};
use crate::mono::{train_mono, LanguageResult, SamplerConfig};
use crate::par::Parallelism;
use crate::tags::{SharedCategories, TagId, Tagset};
use crate::{stream_rng, SamplerRng};

pub const SUPERLINGUAL_STREAM: &str = "superlingual";

/// Arithmetic needed by the seating rule, so it can run both in floating
/// point and in exact rationals.
pub trait Weight: Copy + PartialEq + Add<Output = Self> + Mul<Output = Self> + Div<Output = Self> {
    fn from_u32(n: u32) -> Self;
}

impl Weight for f64 {
    fn from_u32(n: u32) -> Self {
        n as f64
    }
}

impl Weight for Ratio<i64> {
    fn from_u32(n: u32) -> Self {
        Ratio::from_integer(n as i64)
    }
}

/// Reading of `k` in the `k + α` denominator of the seating rule.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub enum CrpDenominator {
    /// number of currently active values
    #[default]
    ActiveValues,
    /// number of other alignment sets currently seated
    Customers,
}

/// Normalized seating distribution: existing values in the order given,
/// then a fresh value. `usage[k]` is the number of sets holding value `k`,
/// `existing[k]` the likelihood of the set's tags under it and `fresh` the
/// likelihood under an empty value.
pub fn crp_probabilities<W: Weight>(
    usage: &[u32],
    existing: &[W],
    fresh: W,
    alpha: W,
    denominator: CrpDenominator,
    customers: u32,
) -> Vec<W> {
    let k = match denominator {
        CrpDenominator::ActiveValues => usage.len() as u32,
        CrpDenominator::Customers => customers,
    };
    let denom = W::from_u32(k) + alpha;
    let mut out: Vec<W> = usage
        .iter()
        .zip(existing)
        .map(|(&n, &lik)| W::from_u32(n) / denom * lik)
        .collect();
    out.push(alpha / denom * fresh);
    let mut total = out[0];
    for &w in &out[1..] {
        total = total + w;
    }
    out.into_iter().map(|w| w / total).collect()
}

/// `(n(z,t,ℓ) + ψ₀) / (n(z,ℓ) + |T^ℓ|·ψ₀)`.
pub fn superlingual_prob(n_ztl: u32, n_zl: u32, tagset_size: usize, psi: f64) -> Result<f64> {
    crate::error::check_positive("psi0", psi)?;
    Ok(collapsed_ratio(n_ztl as f64, n_zl as f64, tagset_size as f64, psi))
}

/// Counts of the superlingual values and of the tags seen with them.
#[derive(Clone, Debug, PartialEq)]
pub struct SuperlingualTable {
    tag_sizes: Vec<usize>,
    psi: Vec<f64>,
    alpha: f64,
    denominator: CrpDenominator,
    usage: Vec<u32>,
    tag_counts: Vec<Vec<u32>>,
    lang_totals: Vec<Vec<u32>>,
    retired: BTreeSet<u32>,
    customers: u32,
}

impl SuperlingualTable {
    pub fn new(tag_sizes: Vec<usize>, alpha: f64, psi: Vec<f64>, denominator: CrpDenominator) -> Result<Self> {
        crate::error::check_positive("alpha", alpha)?;
        for &p in &psi {
            crate::error::check_positive("psi0", p)?;
        }
        let n = tag_sizes.len();
        Ok(SuperlingualTable {
            psi,
            alpha,
            denominator,
            usage: Vec::new(),
            tag_counts: vec![Vec::new(); n],
            lang_totals: vec![Vec::new(); n],
            retired: BTreeSet::new(),
            customers: 0,
            tag_sizes,
        })
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn psi(&self, lang: usize) -> f64 {
        self.psi[lang]
    }

    pub fn capacity(&self) -> usize {
        self.usage.len()
    }

    pub fn usage(&self, z: u32) -> u32 {
        self.usage.get(z as usize).copied().unwrap_or(0)
    }

    pub fn customers(&self) -> u32 {
        self.customers
    }

    pub fn active_values(&self) -> impl Iterator<Item = u32> + '_ {
        self.usage
            .iter()
            .enumerate()
            .filter(|(_, &n)| n > 0)
            .map(|(z, _)| z as u32)
    }

    pub fn active_count(&self) -> usize {
        self.usage.iter().filter(|&&n| n > 0).count()
    }

    pub fn tag_count(&self, z: u32, lang: usize, tag: TagId) -> u32 {
        let t = self.tag_sizes[lang];
        self.tag_counts[lang]
            .get(z as usize * t + tag as usize)
            .copied()
            .unwrap_or(0)
    }

    pub fn lang_total(&self, z: u32, lang: usize) -> u32 {
        self.lang_totals[lang].get(z as usize).copied().unwrap_or(0)
    }

    fn ensure(&mut self, z: u32) {
        let need = z as usize + 1;
        if self.usage.len() < need {
            for id in self.usage.len()..need {
                self.retired.insert(id as u32);
            }
            self.usage.resize(need, 0);
            for (l, &t) in self.tag_sizes.iter().enumerate() {
                self.tag_counts[l].resize(need * t, 0);
                self.lang_totals[l].resize(need, 0);
            }
        }
    }

    /// The id a fresh value would take: the lowest retired id, else the next
    /// unused one.
    pub fn fresh_id(&self) -> u32 {
        self.retired
            .first()
            .copied()
            .unwrap_or(self.usage.len() as u32)
    }

    #[inline]
    pub fn factor(&self, z: u32, lang: usize, tag: TagId) -> f64 {
        self.factor_with(z, lang, tag, 0, 0)
    }

    /// Factor with `extra_tag` and `extra_total` pending counts added.
    #[inline]
    fn factor_with(&self, z: u32, lang: usize, tag: TagId, extra_tag: u32, extra_total: u32) -> f64 {
        collapsed_ratio(
            (self.tag_count(z, lang, tag) + extra_tag) as f64,
            (self.lang_total(z, lang) + extra_total) as f64,
            self.tag_sizes[lang] as f64,
            self.psi[lang],
        )
    }

    pub fn seat(&mut self, z: u32) {
        self.ensure(z);
        self.usage[z as usize] += 1;
        self.retired.remove(&z);
        self.customers += 1;
    }

    /// Removes one set from value `z`, retiring the value when it empties.
    /// Member counts must already be removed.
    pub fn unseat(&mut self, z: u32) -> Result<()> {
        let n = self
            .usage
            .get_mut(z as usize)
            .filter(|n| **n > 0)
            .ok_or(Error::CountUnderflow("superlingual usage"))?;
        *n -= 1;
        self.customers -= 1;
        if *n == 0 {
            if self.lang_totals.iter().any(|t| t[z as usize] != 0) {
                return Err(Error::InconsistentAlignment(format!(
                    "retired superlingual value {z} still holds tag counts"
                )));
            }
            self.retired.insert(z);
        }
        Ok(())
    }

    pub fn add_member(&mut self, z: u32, lang: usize, tag: TagId) {
        self.ensure(z);
        let t = self.tag_sizes[lang];
        self.tag_counts[lang][z as usize * t + tag as usize] += 1;
        self.lang_totals[lang][z as usize] += 1;
    }

    pub fn remove_member(&mut self, z: u32, lang: usize, tag: TagId) -> Result<()> {
        let t = self.tag_sizes[lang];
        let idx = z as usize * t + tag as usize;
        match self.tag_counts[lang].get(idx) {
            Some(&c) if c > 0 && self.lang_totals[lang][z as usize] > 0 => {
                self.tag_counts[lang][idx] -= 1;
                self.lang_totals[lang][z as usize] -= 1;
                Ok(())
            }
            _ => Err(Error::CountUnderflow("superlingual tag counts")),
        }
    }

    /// Product of factors for `members` under value `z` (`None` for a fresh
    /// value), each member seeing earlier members with equal language and
    /// value as already generated.
    pub fn set_likelihood(&self, z: Option<u32>, members: &[(usize, TagId)]) -> f64 {
        let mut lik = 1.0;
        for (m, &(lang, tag)) in members.iter().enumerate() {
            let earlier = &members[..m];
            let extra_total = earlier.iter().filter(|&&(l, _)| l == lang).count() as u32;
            let extra_tag = earlier.iter().filter(|&&(l, t)| l == lang && t == tag).count() as u32;
            lik *= match z {
                Some(z) => self.factor_with(z, lang, tag, extra_tag, extra_total),
                None => collapsed_ratio(
                    extra_tag as f64,
                    extra_total as f64,
                    self.tag_sizes[lang] as f64,
                    self.psi[lang],
                ),
            };
        }
        lik
    }

    /// Seating distribution for a set with the given member tags. Returns
    /// the candidate values (`None` for fresh) with their probabilities.
    pub fn seating_distribution(&self, members: &[(usize, TagId)]) -> Vec<(Option<u32>, f64)> {
        let active: Vec<u32> = self.active_values().collect();
        let usage: Vec<u32> = active.iter().map(|&z| self.usage(z)).collect();
        let existing: Vec<f64> = active.iter().map(|&z| self.set_likelihood(Some(z), members)).collect();
        let fresh = self.set_likelihood(None, members);
        let probs = crp_probabilities(&usage, &existing, fresh, self.alpha, self.denominator, self.customers);
        active.into_iter().map(Some).chain([None]).zip(probs).collect()
    }

    /// Draws a value for a set with the given member tags, seats the set and
    /// adds its member counts.
    pub fn sample_value<R: rand::Rng + ?Sized>(&mut self, members: &[(usize, TagId)], rng: &mut R) -> Result<u32> {
        let dist = self.seating_distribution(members);
        let weights: Vec<f64> = dist.iter().map(|&(_, p)| p).collect();
        let k = sample_categorical(&weights, rng).ok_or(Error::NonFiniteLikelihood(f64::NAN))?;
        let z = dist[k].0.unwrap_or_else(|| self.fresh_id());
        self.seat(z);
        for &(lang, tag) in members {
            self.add_member(z, lang, tag);
        }
        Ok(z)
    }

    /// Smoothed tag distribution of value `z` for language `lang`.
    pub fn distribution(&self, z: u32, lang: usize) -> Vec<f64> {
        (0..self.tag_sizes[lang])
            .map(|t| self.factor(z, lang, t as TagId))
            .collect()
    }
}

/// An alignment set restricted to training data, with members as
/// `(language index in the run, position)`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LatentSet {
    pub sentence: usize,
    pub members: Vec<(usize, usize)>,
}

impl LatentSet {
    /// Keeps sets of the first `num_sentences` sentences. Token languages
    /// must index the run's languages.
    pub fn from_alignment_sets(sets: &[AlignmentSet], num_sentences: usize, num_languages: usize) -> Result<Vec<Self>> {
        let mut out = Vec::new();
        for set in sets.iter().filter(|s| s.sentence < num_sentences) {
            let mut members = Vec::with_capacity(set.members.len());
            for m in &set.members {
                if m.lang as usize >= num_languages {
                    return Err(Error::InconsistentAlignment(format!(
                        "alignment set in sentence {} names language {} of {num_languages}",
                        set.sentence, m.lang
                    )));
                }
                members.push((m.lang as usize, m.pos as usize));
            }
            out.push(LatentSet {
                sentence: set.sentence,
                members,
            });
        }
        Ok(out)
    }
}

/// For every token of every language, the sets covering it.
#[derive(Clone, Debug)]
struct CoverIndex {
    offsets: Vec<Vec<usize>>,
    starts: Vec<Vec<usize>>,
    ids: Vec<Vec<u32>>,
}

impl CoverIndex {
    fn new(obs: &[&LanguageObs], sets: &[LatentSet]) -> Result<Self> {
        let mut offsets = Vec::with_capacity(obs.len());
        let mut lists: Vec<Vec<Vec<u32>>> = Vec::with_capacity(obs.len());
        for o in obs {
            let mut off = vec![0];
            for s in &o.sentences {
                off.push(off.last().unwrap() + s.len());
            }
            lists.push(vec![Vec::new(); *off.last().unwrap()]);
            offsets.push(off);
        }
        for (c, set) in sets.iter().enumerate() {
            for &(l, pos) in &set.members {
                let len = obs[l].sentences.get(set.sentence).map_or(0, Vec::len);
                if pos >= len {
                    return Err(Error::IndexOutOfRange {
                        sentence: set.sentence,
                        index: pos as u32,
                        len,
                    });
                }
                lists[l][offsets[l][set.sentence] + pos].push(c as u32);
            }
        }
        let (mut starts, mut ids) = (Vec::new(), Vec::new());
        for l in lists {
            let mut st = vec![0];
            let mut flat = Vec::new();
            for v in l {
                flat.extend(v);
                st.push(flat.len());
            }
            starts.push(st);
            ids.push(flat);
        }
        Ok(CoverIndex { offsets, starts, ids })
    }

    fn covering(&self, lang: usize, s: usize, i: usize) -> &[u32] {
        let slot = self.offsets[lang][s] + i;
        &self.ids[lang][self.starts[lang][slot]..self.starts[lang][slot + 1]]
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct LatentParams {
    pub alpha: f64,
    pub psi0: f64,
    pub denominator: CrpDenominator,
}

impl Default for LatentParams {
    fn default() -> Self {
        LatentParams {
            alpha: 1.0,
            psi0: 1.0,
            denominator: CrpDenominator::ActiveValues,
        }
    }
}

pub struct LatentSampler<'a> {
    obs: Vec<&'a LanguageObs>,
    sets: Vec<LatentSet>,
    cover: CoverIndex,
    config: SamplerConfig,
    chains: Vec<Chain>,
    table: SuperlingualTable,
    values: Vec<u32>,
    hists: Vec<ModalHistogram>,
    /// one per language, then the superlingual stream
    rngs: Vec<SamplerRng>,
    epoch: usize,
    active_history: Vec<usize>,
}

fn latent_stream(id: &str) -> String {
    format!("latent/{id}")
}

impl<'a> LatentSampler<'a> {
    /// Starts from given tags (monolingual estimates, or gold for clamped
    /// languages) and one initial value per shared category, each set
    /// taking the category of the majority of its members' tags.
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        obs: Vec<&'a LanguageObs>,
        sets: Vec<LatentSet>,
        config: SamplerConfig,
        params: &LatentParams,
        initial_tags: Vec<Vec<Vec<TagId>>>,
        clamped: &[bool],
        categories: &SharedCategories,
        seed: u64,
    ) -> Result<Self> {
        if initial_tags.len() != obs.len() || clamped.len() != obs.len() {
            return Err(Error::LengthMismatch("initial tags or clamp flags per language".into()));
        }
        let cover = CoverIndex::new(&obs, &sets)?;
        let mut chains = Vec::with_capacity(obs.len());
        for ((o, tags), &c) in obs.iter().zip(initial_tags).zip(clamped) {
            let mut chain = Chain::from_tags(o, tags, config.theta0, config.phi0)?;
            chain.clamped = c;
            chains.push(chain);
        }
        let mut table = SuperlingualTable::new(
            obs.iter().map(|o| o.num_tags).collect(),
            params.alpha,
            vec![params.psi0; obs.len()],
            params.denominator,
        )?;
        if !categories.is_empty() {
            table.ensure(categories.len() as u32 - 1);
        }
        let mut values = Vec::with_capacity(sets.len());
        for set in &sets {
            let mut votes = vec![0u32; categories.len()];
            for &(l, pos) in &set.members {
                votes[categories.category(l, chains[l].tags[set.sentence][pos])] += 1;
            }
            let mut best = 0;
            for (c, &v) in votes.iter().enumerate() {
                if v > votes[best] {
                    best = c;
                }
            }
            let z = best as u32;
            table.seat(z);
            for &(l, pos) in &set.members {
                table.add_member(z, l, chains[l].tags[set.sentence][pos]);
            }
            values.push(z);
        }
        let mut rngs: Vec<SamplerRng> = obs.iter().map(|o| stream_rng(seed, &latent_stream(&o.id))).collect();
        rngs.push(stream_rng(seed, SUPERLINGUAL_STREAM));
        let mut sampler = LatentSampler {
            hists: obs.iter().map(|o| ModalHistogram::new(o)).collect(),
            obs,
            sets,
            cover,
            config,
            chains,
            table,
            values,
            rngs,
            epoch: 0,
            active_history: Vec::new(),
        };
        if sampler.config.resample_hyperparameters {
            for _ in 0..sampler.config.mh_warmup {
                sampler.resample_hyperparameters()?;
            }
        }
        Ok(sampler)
    }

    pub fn resume(
        obs: Vec<&'a LanguageObs>,
        sets: Vec<LatentSet>,
        config: SamplerConfig,
        params: &LatentParams,
        checkpoint: Checkpoint,
    ) -> Result<Self> {
        checkpoint.expect_model("latent", obs.len())?;
        let cover = CoverIndex::new(&obs, &sets)?;
        let chains = obs
            .iter()
            .zip(checkpoint.chains)
            .map(|(o, snap)| Chain::restore(o, snap))
            .collect::<Result<Vec<_>>>()?;
        let values = checkpoint
            .values
            .ok_or_else(|| Error::Checkpoint("missing superlingual values".into()))?;
        if values.len() != sets.len() || checkpoint.rngs.len() != obs.len() + 1 {
            return Err(Error::Checkpoint("checkpoint does not match the alignment sets".into()));
        }
        let table = Self::recount_table(&obs, &sets, &chains, &values, params)?;
        Ok(LatentSampler {
            obs,
            sets,
            cover,
            config,
            chains,
            table,
            values,
            hists: checkpoint.histograms,
            rngs: checkpoint.rngs,
            epoch: checkpoint.epoch,
            active_history: checkpoint.active_history,
        })
    }

    fn recount_table(
        obs: &[&LanguageObs],
        sets: &[LatentSet],
        chains: &[Chain],
        values: &[u32],
        params: &LatentParams,
    ) -> Result<SuperlingualTable> {
        let mut table = SuperlingualTable::new(
            obs.iter().map(|o| o.num_tags).collect(),
            params.alpha,
            vec![params.psi0; obs.len()],
            params.denominator,
        )?;
        if let Some(&max) = values.iter().max() {
            table.ensure(max);
        }
        for (set, &z) in sets.iter().zip(values) {
            table.seat(z);
            for &(l, pos) in &set.members {
                table.add_member(z, l, chains[l].tags[set.sentence][pos]);
            }
        }
        Ok(table)
    }

    pub fn checkpoint(&self) -> Checkpoint {
        Checkpoint {
            version: CHECKPOINT_VERSION,
            model: "latent".into(),
            epoch: self.epoch,
            rngs: self.rngs.clone(),
            chains: self.chains.iter().map(Chain::snapshot).collect(),
            histograms: self.hists.clone(),
            omega: None,
            values: Some(self.values.clone()),
            active_history: self.active_history.clone(),
        }
    }

    pub fn chains(&self) -> &[Chain] {
        &self.chains
    }

    pub fn table(&self) -> &SuperlingualTable {
        &self.table
    }

    pub fn values(&self) -> &[u32] {
        &self.values
    }

    pub fn sets(&self) -> &[LatentSet] {
        &self.sets
    }

    pub fn epoch(&self) -> usize {
        self.epoch
    }

    pub fn active_history(&self) -> &[usize] {
        &self.active_history
    }

    /// Unnormalized conditional of tag `(lang, s, i)`: the monolingual
    /// conditional times one superlingual factor per covering set. Counts
    /// (tag and superlingual) must exclude the position.
    pub fn tag_weights(&self, lang: usize, s: usize, i: usize, out: &mut Vec<(TagId, f64)>) {
        self.chains[lang].mono_weights(self.obs[lang], s, i, out);
        let cover = self.cover.covering(lang, s, i);
        if cover.is_empty() {
            return;
        }
        for (t, w) in out.iter_mut() {
            for (m, &c) in cover.iter().enumerate() {
                let z = self.values[c as usize];
                let repeats = cover[..m].iter().filter(|&&d| self.values[d as usize] == z).count() as u32;
                *w *= self.table.factor_with(z, lang, *t, repeats, repeats);
            }
        }
    }

    /// Removes position `(lang, s, i)` from all counts.
    pub fn remove_tag(&mut self, lang: usize, s: usize, i: usize) -> Result<()> {
        let old = self.chains[lang].tags[s][i];
        self.chains[lang].remove(self.obs[lang], s, i)?;
        for &c in self.cover.covering(lang, s, i) {
            self.table.remove_member(self.values[c as usize], lang, old)?;
        }
        Ok(())
    }

    fn assign_tag(&mut self, lang: usize, s: usize, i: usize, tag: TagId) {
        self.chains[lang].assign(self.obs[lang], s, i, tag);
        for &c in self.cover.covering(lang, s, i) {
            self.table.add_member(self.values[c as usize], lang, tag);
        }
    }

    pub fn sample_tag(&mut self, lang: usize, s: usize, i: usize, buf: &mut Vec<(TagId, f64)>, scratch: &mut Vec<f64>) -> Result<TagId> {
        self.remove_tag(lang, s, i)?;
        self.tag_weights(lang, s, i, buf);
        scratch.clear();
        scratch.extend(buf.iter().map(|&(_, w)| w));
        let k = sample_categorical(scratch, &mut self.rngs[lang]).ok_or(Error::EmptySupport { sentence: s, position: i })?;
        let tag = buf[k].0;
        self.assign_tag(lang, s, i, tag);
        Ok(tag)
    }

    fn member_tags(&self, c: usize) -> Vec<(usize, TagId)> {
        let set = &self.sets[c];
        set.members
            .iter()
            .map(|&(l, pos)| (l, self.chains[l].tags[set.sentence][pos]))
            .collect()
    }

    /// Removes set `c` from its value, returning its member tags.
    pub fn unseat_set(&mut self, c: usize) -> Result<Vec<(usize, TagId)>> {
        let members = self.member_tags(c);
        let z = self.values[c];
        for &(l, t) in &members {
            self.table.remove_member(z, l, t)?;
        }
        self.table.unseat(z)?;
        Ok(members)
    }

    pub fn sample_superlingual(&mut self, c: usize) -> Result<u32> {
        let members = self.unseat_set(c)?;
        let rng = self.rngs.last_mut().expect("superlingual stream");
        let z = self.table.sample_value(&members, rng)?;
        self.values[c] = z;
        Ok(z)
    }

    /// Tag slots of every unclamped language in corpus order, then every
    /// superlingual value in set order.
    pub fn sweep(&mut self) -> Result<()> {
        let mut buf = Vec::new();
        let mut scratch = Vec::new();
        for l in 0..self.obs.len() {
            if self.chains[l].clamped {
                continue;
            }
            for s in 0..self.obs[l].sentences.len() {
                for i in 0..self.obs[l].sentences[s].len() {
                    self.sample_tag(l, s, i, &mut buf, &mut scratch)?;
                }
            }
        }
        for c in 0..self.sets.len() {
            self.sample_superlingual(c)?;
        }
        Ok(())
    }

    pub fn resample_hyperparameters(&mut self) -> Result<()> {
        for l in 0..self.obs.len() {
            self.chains[l].resample_hyperparameters(self.obs[l], &mut self.rngs[l])?;
        }
        Ok(())
    }

    pub fn step(&mut self) -> Result<()> {
        self.sweep()?;
        if self.config.resample_hyperparameters {
            self.resample_hyperparameters()?;
        }
        if self.config.records(self.epoch) {
            for l in 0..self.obs.len() {
                self.hists[l].record(&self.chains[l].tags);
            }
        }
        self.active_history.push(self.table.active_count());
        self.epoch += 1;
        Ok(())
    }

    pub fn run(&mut self) -> Result<()> {
        while self.epoch < self.config.epochs {
            self.step()?;
        }
        Ok(())
    }

    /// Full recount of tags and superlingual counts against the running
    /// tables.
    pub fn counts_consistent(&self, params: &LatentParams) -> bool {
        let chains_ok = self
            .chains
            .iter()
            .zip(&self.obs)
            .all(|(c, o)| c.counts_consistent(o));
        let Ok(recount) = Self::recount_table(&self.obs, &self.sets, &self.chains, &self.values, params) else {
            return false;
        };
        let usage_ok = (0..self.table.capacity().max(recount.capacity()) as u32).all(|z| self.table.usage(z) == recount.usage(z));
        let tags_ok = (0..self.table.capacity().max(recount.capacity()) as u32).all(|z| {
            (0..self.obs.len()).all(|l| {
                self.table.lang_total(z, l) == recount.lang_total(z, l)
                    && (0..self.obs[l].num_tags).all(|t| self.table.tag_count(z, l, t as TagId) == recount.tag_count(z, l, t as TagId))
            })
        });
        let customers_ok = self.table.customers() as usize == self.sets.len();
        chains_ok && usage_ok && tags_ok && customers_ok
    }

    pub fn result(&self) -> Result<LatentResult> {
        Ok(LatentResult {
            languages: self
                .chains
                .iter()
                .zip(&self.hists)
                .map(|(c, h)| LanguageResult::from_chain(c, h))
                .collect::<Result<_>>()?,
            active_history: self.active_history.clone(),
            table: self.table.clone(),
        })
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct LatentResult {
    pub languages: Vec<LanguageResult>,
    /// active superlingual values after each epoch
    pub active_history: Vec<usize>,
    pub table: SuperlingualTable,
}

impl LatentResult {
    pub fn final_active(&self) -> usize {
        self.active_history.last().copied().unwrap_or(0)
    }

    /// Per-epoch active-value counts followed by the tag distribution of
    /// every active value in every language.
    pub fn superlingual_report(&self, languages: &[(&str, &Tagset)]) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "# active values per epoch");
        for (e, n) in self.active_history.iter().enumerate() {
            let _ = writeln!(out, "{}\t{n}", e + 1);
        }
        let _ = writeln!(out, "# value\tsets\tlanguage\tdistribution");
        for z in self.table.active_values() {
            for (l, (id, tagset)) in languages.iter().enumerate() {
                let dist = self.table.distribution(z, l);
                let cells: Vec<String> = dist
                    .iter()
                    .enumerate()
                    .map(|(t, p)| format!("{}:{:.4}", tagset.symbol(t as TagId), p))
                    .collect();
                let _ = writeln!(out, "{z}\t{}\t{id}\t{}", self.table.usage(z), cells.join(" "));
            }
        }
        out
    }
}

/// Trains monolingual models for the unclamped languages, then the latent
/// model from their modal tags. Languages flagged in `supervised` are
/// clamped to their gold tags throughout.
#[allow(clippy::too_many_arguments)]
pub fn train_latent_semisupervised(
    obs: &[&LanguageObs],
    sets: Vec<LatentSet>,
    supervised: &[bool],
    categories: &SharedCategories,
    mono_config: &SamplerConfig,
    config: &SamplerConfig,
    params: &LatentParams,
    seed: u64,
    par: Parallelism,
) -> Result<LatentResult> {
    if supervised.len() != obs.len() {
        return Err(Error::LengthMismatch("supervision flags per language".into()));
    }
    let initial = par.map_range(obs.len(), |l| -> Result<Vec<Vec<TagId>>> {
        if supervised[l] {
            obs[l].gold.clone().ok_or_else(|| Error::NoGoldTags(obs[l].id.clone()))
        } else {
            Ok(train_mono(obs[l], mono_config, seed)?.modal_tags)
        }
    });
    let initial = initial.into_iter().collect::<Result<Vec<_>>>()?;
    initialize_and_run(obs, sets, initial, supervised, categories, config, params, seed)
}

#[allow(clippy::too_many_arguments)]
pub fn train_latent(
    obs: &[&LanguageObs],
    sets: Vec<LatentSet>,
    categories: &SharedCategories,
    mono_config: &SamplerConfig,
    config: &SamplerConfig,
    params: &LatentParams,
    seed: u64,
    par: Parallelism,
) -> Result<LatentResult> {
    let none = vec![false; obs.len()];
    train_latent_semisupervised(obs, sets, &none, categories, mono_config, config, params, seed, par)
}

/// Latent training from already available monolingual results (`None`
/// entries must be supervised languages).
#[allow(clippy::too_many_arguments)]
pub fn train_latent_from_mono(
    obs: &[&LanguageObs],
    sets: Vec<LatentSet>,
    mono: &[Option<&LanguageResult>],
    supervised: &[bool],
    categories: &SharedCategories,
    config: &SamplerConfig,
    params: &LatentParams,
    seed: u64,
) -> Result<LatentResult> {
    let mut initial = Vec::with_capacity(obs.len());
    for (l, o) in obs.iter().enumerate() {
        if supervised.get(l).copied().unwrap_or(false) {
            initial.push(o.gold.clone().ok_or_else(|| Error::NoGoldTags(o.id.clone()))?);
        } else {
            let m = mono
                .get(l)
                .copied()
                .flatten()
                .ok_or_else(|| Error::Config(format!("no monolingual result for `{}`", o.id)))?;
            initial.push(m.modal_tags.clone());
        }
    }
    initialize_and_run(obs, sets, initial, supervised, categories, config, params, seed)
}

#[allow(clippy::too_many_arguments)]
fn initialize_and_run(
    obs: &[&LanguageObs],
    sets: Vec<LatentSet>,
    initial: Vec<Vec<Vec<TagId>>>,
    supervised: &[bool],
    categories: &SharedCategories,
    config: &SamplerConfig,
    params: &LatentParams,
    seed: u64,
) -> Result<LatentResult> {
    let mut sampler = LatentSampler::new(obs.to_vec(), sets, config.clone(), params, initial, supervised, categories, seed)?;
    sampler.run()?;
    sampler.result()
}
