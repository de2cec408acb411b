//! The bilingual merged-node model. Aligned word pairs form joint bi-tag
//! nodes whose tags are drawn from the renormalized product of both
//! languages' transition distributions and a coupling distribution over tag
//! pairs.

use crate::alignments::BilingualAlignment;
use crate::chain::{sample_categorical, Chain, ModalHistogram};
use crate::checkpoint::{Checkpoint, CHECKPOINT_VERSION};
use crate::counts::{collapsed_ratio, DirMultStats, LanguageCounts, LanguageObs};
use crate::error::{Error, Result};
use crate::hyper::{mh_step, AcceptanceStats};
use crate::mono::{LanguageResult, SamplerConfig};
use crate::tags::TagId;
use crate::{stream_rng, SamplerRng};

/// `(n(t,t') + ω₀) / (N(a) + |T×T'|·ω₀)`.
pub fn coupling_prob(n: u32, total: u32, pairs: usize, omega: f64) -> Result<f64> {
    crate::error::check_positive("omega0", omega)?;
    Ok(collapsed_ratio(n as f64, total as f64, pairs as f64, omega))
}

#[derive(Clone, Debug, PartialEq)]
pub struct CouplingTable {
    na: usize,
    nb: usize,
    counts: Vec<u32>,
    total: u32,
    pub omega: f64,
}

impl CouplingTable {
    pub fn new(na: usize, nb: usize, omega: f64) -> Result<Self> {
        crate::error::check_positive("omega0", omega)?;
        Ok(CouplingTable {
            na,
            nb,
            counts: vec![0; na * nb],
            total: 0,
            omega,
        })
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.na, self.nb)
    }

    pub fn count(&self, t: TagId, u: TagId) -> u32 {
        self.counts[t as usize * self.nb + u as usize]
    }

    pub fn total(&self) -> u32 {
        self.total
    }

    pub fn add(&mut self, t: TagId, u: TagId) {
        self.counts[t as usize * self.nb + u as usize] += 1;
        self.total += 1;
    }

    /// Adds `n` to one cell; handy for building test states.
    pub fn add_many(&mut self, t: TagId, u: TagId, n: u32) {
        self.counts[t as usize * self.nb + u as usize] += n;
        self.total += n;
    }

    pub fn remove(&mut self, t: TagId, u: TagId) -> Result<()> {
        let c = &mut self.counts[t as usize * self.nb + u as usize];
        if *c == 0 {
            return Err(Error::CountUnderflow("coupling counts"));
        }
        *c -= 1;
        self.total -= 1;
        Ok(())
    }

    #[inline]
    pub fn prob(&self, t: TagId, u: TagId) -> f64 {
        collapsed_ratio(
            self.count(t, u) as f64,
            self.total as f64,
            (self.na * self.nb) as f64,
            self.omega,
        )
    }

    /// Coupling weight over outcomes including each language's end state;
    /// pairs involving an end state take the zero-count value.
    fn extended(&self) -> Vec<f64> {
        let (oa, ob) = (self.na + 1, self.nb + 1);
        let base = collapsed_ratio(0.0, self.total as f64, (self.na * self.nb) as f64, self.omega);
        let mut m = vec![base; oa * ob];
        for t in 0..self.na {
            for u in 0..self.nb {
                m[t * ob + u] = self.prob(t as TagId, u as TagId);
            }
        }
        m
    }

    pub fn stats(&self) -> DirMultStats {
        DirMultStats::new(vec![(self.total as u64, (self.na * self.nb) as f64)], &self.counts)
    }

    pub fn from_tags(
        na: usize,
        nb: usize,
        omega: f64,
        links: &[PairLinks],
        tags_a: &[Vec<TagId>],
        tags_b: &[Vec<TagId>],
    ) -> Result<Self> {
        let mut table = Self::new(na, nb, omega)?;
        for (s, l) in links.iter().enumerate() {
            for (i, j) in l.pairs() {
                table.add(tags_a[s][i], tags_b[s][j]);
            }
        }
        Ok(table)
    }
}

/// One-to-one links of one sentence pair as lookup tables in both
/// directions.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct PairLinks {
    pub a_to_b: Vec<Option<u32>>,
    pub b_to_a: Vec<Option<u32>>,
}

impl PairLinks {
    pub fn unaligned(len_a: usize, len_b: usize) -> Self {
        PairLinks {
            a_to_b: vec![None; len_a],
            b_to_a: vec![None; len_b],
        }
    }

    pub fn new(len_a: usize, len_b: usize, edges: &[(u32, u32)]) -> Result<Self> {
        let mut links = Self::unaligned(len_a, len_b);
        for &(i, j) in edges {
            let (iu, ju) = (i as usize, j as usize);
            if iu >= len_a || ju >= len_b {
                return Err(Error::InconsistentAlignment(format!(
                    "edge {i}-{j} outside sentence lengths {len_a} and {len_b}"
                )));
            }
            if links.a_to_b[iu].is_some() || links.b_to_a[ju].is_some() {
                return Err(Error::InconsistentAlignment(format!("edge {i}-{j} is not one-to-one")));
            }
            links.a_to_b[iu] = Some(j);
            links.b_to_a[ju] = Some(i);
        }
        Ok(links)
    }

    /// Links for every training sentence. Alignments missing a sentence
    /// leave it unaligned.
    pub fn for_corpus(obs_a: &LanguageObs, obs_b: &LanguageObs, alignments: &[BilingualAlignment]) -> Result<Vec<Self>> {
        let n = obs_a.sentences.len();
        if obs_b.sentences.len() != n {
            return Err(Error::InconsistentAlignment("languages differ in sentence count".into()));
        }
        let mut links: Vec<PairLinks> = (0..n)
            .map(|s| Self::unaligned(obs_a.sentences[s].len(), obs_b.sentences[s].len()))
            .collect();
        for a in alignments {
            if a.sentence >= n {
                continue;
            }
            let s = a.sentence;
            links[s] = Self::new(obs_a.sentences[s].len(), obs_b.sentences[s].len(), a.edges())?;
        }
        Ok(links)
    }

    pub fn pairs(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.a_to_b
            .iter()
            .enumerate()
            .filter_map(|(i, j)| j.map(|j| (i, j as usize)))
    }

    pub fn transposed(&self) -> Self {
        PairLinks {
            a_to_b: self.b_to_a.clone(),
            b_to_a: self.a_to_b.clone(),
        }
    }

    /// Aligned pairs whose contexts include A position `i` or B position
    /// `j`, i.e. with an A side in `i+1..=i+2` or a B side in `j+1..=j+2`.
    pub fn successor_pairs(&self, i: Option<usize>, j: Option<usize>) -> Vec<(usize, usize)> {
        let mut out: Vec<(usize, usize)> = Vec::new();
        if let Some(i) = i {
            for k in i + 1..=i + 2 {
                if let Some(Some(kb)) = self.a_to_b.get(k) {
                    out.push((k, *kb as usize));
                }
            }
        }
        if let Some(j) = j {
            for k in j + 1..=j + 2 {
                if let Some(Some(ka)) = self.b_to_a.get(k) {
                    out.push((*ka as usize, k));
                }
            }
        }
        out.sort_unstable();
        out.dedup();
        out
    }
}

/// Borrowed view of a bilingual state, enough to evaluate conditionals.
#[derive(Clone, Copy)]
pub struct MergedView<'s> {
    pub obs: [&'s LanguageObs; 2],
    pub chains: [&'s Chain; 2],
    pub coupling: &'s CouplingTable,
}

fn context_row(counts: &LanguageCounts, tags: &[TagId], k: usize, sub: Option<(usize, TagId)>, phi: f64, out: &mut Vec<f64>) {
    let (c1, c2) = counts.context_at(tags, k, sub);
    counts.transition_row(c1, c2, phi, out);
}

impl MergedView<'_> {
    /// `Π 1/Z` over `succ` for every candidate pair. `sub_a` and `sub_b`
    /// give the positions being sampled and their candidate tags; a side
    /// whose candidate list is `None` keeps its current tags.
    fn inverse_normalizers(
        &self,
        s: usize,
        succ: &[(usize, usize)],
        cand_a: (Option<usize>, &[TagId]),
        cand_b: (Option<usize>, &[TagId]),
    ) -> Vec<f64> {
        let (ca, cb) = (cand_a.1.len().max(1), cand_b.1.len().max(1));
        let mut inv = vec![1.0; ca * cb];
        if succ.is_empty() {
            return inv;
        }
        let omega = self.coupling.extended();
        let [ch_a, ch_b] = self.chains;
        let (oa, ob) = (ch_a.counts.outcomes(), ch_b.counts.outcomes());
        let mut row = Vec::with_capacity(oa.max(ob));
        let mut z = vec![1.0; ca * cb];
        for &(k, kb) in succ {
            // B side: Ω·row_B(u), one per candidate when it depends on j
            let dep_b = cand_b.0.is_some_and(|j| kb > j && kb <= j + 2);
            let nb_rows = if dep_b { cb } else { 1 };
            let mut vb = vec![0.0; nb_rows * oa];
            for ub in 0..nb_rows {
                let sub = if dep_b {
                    Some((cand_b.0.unwrap(), cand_b.1[ub]))
                } else {
                    None
                };
                context_row(&ch_b.counts, &ch_b.tags[s], kb, sub, ch_b.phi, &mut row);
                for a in 0..oa {
                    let mut acc = 0.0;
                    for (b, &p) in row.iter().enumerate() {
                        acc += omega[a * ob + b] * p;
                    }
                    vb[ub * oa + a] = acc;
                }
            }
            let dep_a = cand_a.0.is_some_and(|i| k > i && k <= i + 2);
            let na_rows = if dep_a { ca } else { 1 };
            for ta in 0..na_rows {
                let sub = if dep_a {
                    Some((cand_a.0.unwrap(), cand_a.1[ta]))
                } else {
                    None
                };
                context_row(&ch_a.counts, &ch_a.tags[s], k, sub, ch_a.phi, &mut row);
                for ub in 0..nb_rows {
                    let v = &vb[ub * oa..(ub + 1) * oa];
                    let zz: f64 = row.iter().zip(v).map(|(p, q)| p * q).sum();
                    // broadcast over candidates this pair does not depend on
                    for t2 in 0..ca {
                        if dep_a && t2 != ta {
                            continue;
                        }
                        for u2 in 0..cb {
                            if dep_b && u2 != ub {
                                continue;
                            }
                            z[t2 * cb + u2] *= zz;
                        }
                    }
                }
            }
        }
        for (w, zz) in inv.iter_mut().zip(&z) {
            *w = 1.0 / zz;
        }
        inv
    }

    /// Unnormalized joint conditional of the aligned pair `(i, j)` of
    /// sentence `s` over all permitted tag pairs, row-major in ascending
    /// tag order. Counts must exclude both positions and their coupling
    /// count.
    pub fn pair_weights(&self, links: &PairLinks, s: usize, i: usize, j: usize, out: &mut Vec<(TagId, TagId, f64)>) {
        out.clear();
        let [oa, ob] = self.obs;
        let [ch_a, ch_b] = self.chains;
        let slot_a = oa.sentences[s][i];
        let slot_b = ob.sentences[s][j];
        let ta: Vec<TagId> = slot_a.allowed.iter().collect();
        let tb: Vec<TagId> = slot_b.allowed.iter().collect();
        let side = |ch: &Chain, obs: &LanguageObs, word, pos, t: TagId| {
            ch.counts.emission_weight(t, word, &obs.type_sizes, ch.theta) * ch.counts.transition_weight(&ch.tags[s], pos, t, ch.phi)
        };
        let wa: Vec<f64> = ta.iter().map(|&t| side(ch_a, oa, slot_a.word, i, t)).collect();
        let wb: Vec<f64> = tb.iter().map(|&u| side(ch_b, ob, slot_b.word, j, u)).collect();
        let succ = links.successor_pairs(Some(i), Some(j));
        let inv = self.inverse_normalizers(s, &succ, (Some(i), &ta), (Some(j), &tb));
        for (x, &t) in ta.iter().enumerate() {
            for (y, &u) in tb.iter().enumerate() {
                let w = self.coupling.prob(t, u) * wa[x] * wb[y] * inv[x * tb.len() + y];
                out.push((t, u, w));
            }
        }
    }

    /// Unnormalized conditional of an unaligned position of language `side`.
    /// Equals the monolingual conditional, corrected by the normalizers of
    /// aligned successor pairs whose contexts include the position.
    pub fn single_weights(&self, links: &PairLinks, side: usize, s: usize, i: usize, out: &mut Vec<(TagId, f64)>) {
        self.chains[side].mono_weights(self.obs[side], s, i, out);
        let succ = if side == 0 {
            links.successor_pairs(Some(i), None)
        } else {
            links.successor_pairs(None, Some(i))
        };
        if succ.is_empty() {
            return;
        }
        let cands: Vec<TagId> = out.iter().map(|&(t, _)| t).collect();
        let inv = if side == 0 {
            self.inverse_normalizers(s, &succ, (Some(i), &cands), (None, &[]))
        } else {
            self.inverse_normalizers(s, &succ, (None, &[]), (Some(i), &cands))
        };
        for (w, f) in out.iter_mut().zip(inv) {
            w.1 *= f;
        }
    }
}

pub struct MergedSampler<'a> {
    obs: [&'a LanguageObs; 2],
    links: Vec<PairLinks>,
    config: SamplerConfig,
    resample_omega: bool,
    chains: [Chain; 2],
    coupling: CouplingTable,
    omega_acceptance: AcceptanceStats,
    hists: [ModalHistogram; 2],
    /// language A, language B, coupling prior
    rngs: [SamplerRng; 3],
    epoch: usize,
}

pub const COUPLING_STREAM: &str = "coupling";

impl<'a> MergedSampler<'a> {
    pub fn new(
        obs: [&'a LanguageObs; 2],
        links: Vec<PairLinks>,
        config: SamplerConfig,
        omega0: f64,
        seed: u64,
    ) -> Result<Self> {
        let mut rngs = [
            stream_rng(seed, &obs[0].id),
            stream_rng(seed, &obs[1].id),
            stream_rng(seed, COUPLING_STREAM),
        ];
        let chains = [
            Chain::random(obs[0], config.theta0, config.phi0, &mut rngs[0])?,
            Chain::random(obs[1], config.theta0, config.phi0, &mut rngs[1])?,
        ];
        let coupling = CouplingTable::from_tags(
            obs[0].num_tags,
            obs[1].num_tags,
            omega0,
            &links,
            &chains[0].tags,
            &chains[1].tags,
        )?;
        let mut sampler = MergedSampler {
            obs,
            links,
            resample_omega: config.resample_hyperparameters,
            hists: [ModalHistogram::new(obs[0]), ModalHistogram::new(obs[1])],
            config,
            chains,
            coupling,
            omega_acceptance: AcceptanceStats::default(),
            rngs,
            epoch: 0,
        };
        if sampler.config.resample_hyperparameters {
            for _ in 0..sampler.config.mh_warmup {
                sampler.resample_hyperparameters()?;
            }
        }
        Ok(sampler)
    }

    pub fn resume(obs: [&'a LanguageObs; 2], links: Vec<PairLinks>, config: SamplerConfig, checkpoint: Checkpoint) -> Result<Self> {
        checkpoint.expect_model("merged", 2)?;
        let (omega, omega_acceptance) = checkpoint
            .omega
            .ok_or_else(|| Error::Checkpoint("missing coupling prior".into()))?;
        let mut snaps = checkpoint.chains.into_iter();
        let chains = [
            Chain::restore(obs[0], snaps.next().expect("two chains"))?,
            Chain::restore(obs[1], snaps.next().expect("two chains"))?,
        ];
        let coupling = CouplingTable::from_tags(obs[0].num_tags, obs[1].num_tags, omega, &links, &chains[0].tags, &chains[1].tags)?;
        let rngs: [SamplerRng; 3] = checkpoint
            .rngs
            .try_into()
            .map_err(|_| Error::Checkpoint("expected three generators".into()))?;
        let hists: [ModalHistogram; 2] = checkpoint
            .histograms
            .try_into()
            .map_err(|_| Error::Checkpoint("expected two histograms".into()))?;
        Ok(MergedSampler {
            obs,
            links,
            resample_omega: config.resample_hyperparameters,
            config,
            chains,
            coupling,
            omega_acceptance,
            hists,
            rngs,
            epoch: checkpoint.epoch,
        })
    }

    pub fn checkpoint(&self) -> Checkpoint {
        Checkpoint {
            version: CHECKPOINT_VERSION,
            model: "merged".into(),
            epoch: self.epoch,
            rngs: self.rngs.to_vec(),
            chains: self.chains.iter().map(Chain::snapshot).collect(),
            histograms: self.hists.to_vec(),
            omega: Some((self.coupling.omega, self.omega_acceptance)),
            values: None,
            active_history: Vec::new(),
        }
    }

    pub fn view(&self) -> MergedView<'_> {
        MergedView {
            obs: self.obs,
            chains: [&self.chains[0], &self.chains[1]],
            coupling: &self.coupling,
        }
    }

    pub fn chains(&self) -> &[Chain; 2] {
        &self.chains
    }

    pub fn coupling(&self) -> &CouplingTable {
        &self.coupling
    }

    pub fn epoch(&self) -> usize {
        self.epoch
    }

    pub fn omega_acceptance(&self) -> AcceptanceStats {
        self.omega_acceptance
    }

    fn sample_pair(&mut self, s: usize, i: usize, j: usize, buf: &mut Vec<(TagId, TagId, f64)>, scratch: &mut Vec<f64>) -> Result<()> {
        let [oa, ob] = self.obs;
        let (old_a, old_b) = (self.chains[0].tags[s][i], self.chains[1].tags[s][j]);
        self.chains[0].remove(oa, s, i)?;
        self.chains[1].remove(ob, s, j)?;
        self.coupling.remove(old_a, old_b)?;
        self.view().pair_weights(&self.links[s], s, i, j, buf);
        scratch.clear();
        scratch.extend(buf.iter().map(|&(_, _, w)| w));
        let k = sample_categorical(scratch, &mut self.rngs[0]).ok_or(Error::EmptySupport { sentence: s, position: i })?;
        let (t, u, _) = buf[k];
        self.chains[0].assign(oa, s, i, t);
        self.chains[1].assign(ob, s, j, u);
        self.coupling.add(t, u);
        Ok(())
    }

    fn sample_single(&mut self, side: usize, s: usize, i: usize, buf: &mut Vec<(TagId, f64)>, scratch: &mut Vec<f64>) -> Result<()> {
        let obs = self.obs[side];
        self.chains[side].remove(obs, s, i)?;
        self.view().single_weights(&self.links[s], side, s, i, buf);
        let rng = &mut self.rngs[side];
        scratch.clear();
        scratch.extend(buf.iter().map(|&(_, w)| w));
        let k = sample_categorical(scratch, rng).ok_or(Error::EmptySupport { sentence: s, position: i })?;
        let tag = buf[k].0;
        self.chains[side].assign(obs, s, i, tag);
        Ok(())
    }

    /// One sweep over every sentence pair: A positions in order, sampling
    /// aligned pairs jointly when their A side is reached, then the
    /// remaining B positions in order.
    pub fn sweep(&mut self) -> Result<()> {
        let mut pair_buf = Vec::new();
        let mut buf = Vec::new();
        let mut scratch = Vec::new();
        for s in 0..self.links.len() {
            for i in 0..self.obs[0].sentences[s].len() {
                match self.links[s].a_to_b[i] {
                    Some(j) => self.sample_pair(s, i, j as usize, &mut pair_buf, &mut scratch)?,
                    None => self.sample_single(0, s, i, &mut buf, &mut scratch)?,
                }
            }
            for j in 0..self.obs[1].sentences[s].len() {
                if self.links[s].b_to_a[j].is_none() {
                    self.sample_single(1, s, j, &mut buf, &mut scratch)?;
                }
            }
        }
        Ok(())
    }

    pub fn resample_hyperparameters(&mut self) -> Result<()> {
        for side in 0..2 {
            self.chains[side].resample_hyperparameters(self.obs[side], &mut self.rngs[side])?;
        }
        if self.resample_omega {
            let stats = self.coupling.stats();
            let step = mh_step("omega0", self.coupling.omega, |a| stats.log_marginal(a), &mut self.rngs[2])?;
            self.omega_acceptance.record(&step);
            self.coupling.omega = step.value;
        }
        Ok(())
    }

    pub fn step(&mut self) -> Result<()> {
        self.sweep()?;
        if self.config.resample_hyperparameters {
            self.resample_hyperparameters()?;
        }
        if self.config.records(self.epoch) {
            for side in 0..2 {
                self.hists[side].record(&self.chains[side].tags);
            }
        }
        self.epoch += 1;
        Ok(())
    }

    pub fn run(&mut self) -> Result<()> {
        while self.epoch < self.config.epochs {
            self.step()?;
        }
        Ok(())
    }

    pub fn counts_consistent(&self) -> bool {
        let c = CouplingTable::from_tags(
            self.obs[0].num_tags,
            self.obs[1].num_tags,
            self.coupling.omega,
            &self.links,
            &self.chains[0].tags,
            &self.chains[1].tags,
        );
        self.chains[0].counts_consistent(self.obs[0])
            && self.chains[1].counts_consistent(self.obs[1])
            && c.is_ok_and(|c| c == self.coupling)
    }

    pub fn result(&self) -> Result<MergedResult> {
        Ok(MergedResult {
            languages: [
                LanguageResult::from_chain(&self.chains[0], &self.hists[0])?,
                LanguageResult::from_chain(&self.chains[1], &self.hists[1])?,
            ],
            omega: self.coupling.omega,
            omega_acceptance: self.omega_acceptance,
        })
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct MergedResult {
    pub languages: [LanguageResult; 2],
    pub omega: f64,
    pub omega_acceptance: AcceptanceStats,
}

pub fn train_merged(
    obs: [&LanguageObs; 2],
    alignments: &[BilingualAlignment],
    config: &SamplerConfig,
    omega0: f64,
    seed: u64,
) -> Result<MergedResult> {
    let links = PairLinks::for_corpus(obs[0], obs[1], alignments)?;
    let mut sampler = MergedSampler::new(obs, links, config.clone(), omega0, seed)?;
    sampler.run()?;
    sampler.result()
}
