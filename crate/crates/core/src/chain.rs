//! Per-language Gibbs state shared by all three models.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::counts::{LanguageCounts, LanguageObs};
use crate::error::{Error, Result};
use crate::hyper::{mh_step, AcceptanceStats};
use crate::tags::TagId;

/// Draws an index with probability proportional to `weights`. Returns
/// `None` when the weights do not form a proper distribution.
pub fn sample_categorical<R: Rng + ?Sized>(weights: &[f64], rng: &mut R) -> Option<usize> {
    let total: f64 = weights.iter().sum();
    if !(total > 0.0 && total.is_finite()) {
        return None;
    }
    debug_assert!(
        (weights.iter().map(|w| w / total).sum::<f64>() - 1.0).abs() < 1e-9,
        "conditional does not normalize"
    );
    let u: f64 = rng.random::<f64>() * total;
    let mut acc = 0.0;
    for (k, &w) in weights.iter().enumerate() {
        acc += w;
        if u < acc {
            return Some(k);
        }
    }
    // rounding at the top end
    weights.iter().rposition(|&w| w > 0.0)
}

/// Per-slot counts of sampled tags, for modal extraction.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ModalHistogram {
    num_tags: usize,
    offsets: Vec<usize>,
    counts: Vec<u32>,
    samples: u32,
}

impl ModalHistogram {
    pub fn new(obs: &LanguageObs) -> Self {
        let mut offsets = Vec::with_capacity(obs.sentences.len() + 1);
        let mut total = 0;
        offsets.push(0);
        for s in &obs.sentences {
            total += s.len();
            offsets.push(total);
        }
        ModalHistogram {
            num_tags: obs.num_tags,
            offsets,
            counts: vec![0; total * obs.num_tags],
            samples: 0,
        }
    }

    pub fn record(&mut self, tags: &[Vec<TagId>]) {
        for (s, sent) in tags.iter().enumerate() {
            let base = self.offsets[s];
            for (i, &t) in sent.iter().enumerate() {
                self.counts[(base + i) * self.num_tags + t as usize] += 1;
            }
        }
        self.samples += 1;
    }

    pub fn samples(&self) -> u32 {
        self.samples
    }

    /// Most frequent tag per slot; ties go to the lower tag id.
    pub fn modal(&self) -> Result<Vec<Vec<TagId>>> {
        if self.samples == 0 {
            return Err(Error::EmptyInput("no samples recorded for modal extraction".into()));
        }
        Ok(self
            .offsets
            .windows(2)
            .map(|w| {
                (w[0]..w[1])
                    .map(|slot| {
                        let row = &self.counts[slot * self.num_tags..(slot + 1) * self.num_tags];
                        let mut best = 0;
                        for (t, &n) in row.iter().enumerate() {
                            if n > row[best] {
                                best = t;
                            }
                        }
                        best as TagId
                    })
                    .collect()
            })
            .collect())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Chain {
    pub tags: Vec<Vec<TagId>>,
    pub counts: LanguageCounts,
    pub theta: f64,
    pub phi: f64,
    /// Clamped chains keep their tags fixed.
    pub clamped: bool,
    pub theta_acceptance: AcceptanceStats,
    pub phi_acceptance: AcceptanceStats,
}

/// Serializable part of a [`Chain`]; counts are rebuilt on restore.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ChainSnapshot {
    pub tags: Vec<Vec<TagId>>,
    pub theta: f64,
    pub phi: f64,
    pub clamped: bool,
    pub theta_acceptance: AcceptanceStats,
    pub phi_acceptance: AcceptanceStats,
}

impl Chain {
    pub fn from_tags(obs: &LanguageObs, tags: Vec<Vec<TagId>>, theta: f64, phi: f64) -> Result<Self> {
        crate::error::check_positive("theta0", theta)?;
        crate::error::check_positive("phi0", phi)?;
        validate_tags(obs, &tags)?;
        Ok(Chain {
            counts: LanguageCounts::from_tags(obs, &tags),
            tags,
            theta,
            phi,
            clamped: false,
            theta_acceptance: AcceptanceStats::default(),
            phi_acceptance: AcceptanceStats::default(),
        })
    }

    /// Tags drawn uniformly from each slot's permitted set.
    pub fn random<R: Rng + ?Sized>(obs: &LanguageObs, theta: f64, phi: f64, rng: &mut R) -> Result<Self> {
        let mut tags = Vec::with_capacity(obs.sentences.len());
        for (s, sent) in obs.sentences.iter().enumerate() {
            let mut row = Vec::with_capacity(sent.len());
            for (i, slot) in sent.iter().enumerate() {
                let n = slot.allowed.len();
                if n == 0 {
                    return Err(Error::EmptySupport { sentence: s, position: i });
                }
                let k = rng.random_range(0..n);
                row.push(slot.allowed.iter().nth(k).expect("k < len"));
            }
            tags.push(row);
        }
        Self::from_tags(obs, tags, theta, phi)
    }

    pub fn gold(obs: &LanguageObs, theta: f64, phi: f64) -> Result<Self> {
        let gold = obs.gold.clone().ok_or_else(|| Error::NoGoldTags(obs.id.clone()))?;
        let mut chain = Self::from_tags(obs, gold, theta, phi)?;
        chain.clamped = true;
        Ok(chain)
    }

    pub fn snapshot(&self) -> ChainSnapshot {
        ChainSnapshot {
            tags: self.tags.clone(),
            theta: self.theta,
            phi: self.phi,
            clamped: self.clamped,
            theta_acceptance: self.theta_acceptance,
            phi_acceptance: self.phi_acceptance,
        }
    }

    pub fn restore(obs: &LanguageObs, snap: ChainSnapshot) -> Result<Self> {
        let mut chain = Self::from_tags(obs, snap.tags, snap.theta, snap.phi)?;
        chain.clamped = snap.clamped;
        chain.theta_acceptance = snap.theta_acceptance;
        chain.phi_acceptance = snap.phi_acceptance;
        Ok(chain)
    }

    /// Unnormalized monolingual conditional at `(s, i)` over the permitted
    /// tags, in ascending tag order. Counts must exclude position `i`.
    pub fn mono_weights(&self, obs: &LanguageObs, s: usize, i: usize, out: &mut Vec<(TagId, f64)>) {
        out.clear();
        let slot = obs.sentences[s][i];
        let tags = &self.tags[s];
        for t in slot.allowed.iter() {
            let e = self.counts.emission_weight(t, slot.word, &obs.type_sizes, self.theta);
            out.push((t, e * self.counts.transition_weight(tags, i, t, self.phi)));
        }
    }

    pub fn remove(&mut self, obs: &LanguageObs, s: usize, i: usize) -> Result<()> {
        self.counts.remove_position(&obs.sentences[s], &self.tags[s], i)
    }

    pub fn assign(&mut self, obs: &LanguageObs, s: usize, i: usize, tag: TagId) {
        self.tags[s][i] = tag;
        self.counts.add_position(&obs.sentences[s], &self.tags[s], i);
    }

    /// Draws from `weights` and assigns the drawn tag.
    pub fn draw_and_assign<R: Rng + ?Sized>(
        &mut self,
        obs: &LanguageObs,
        s: usize,
        i: usize,
        weights: &[(TagId, f64)],
        scratch: &mut Vec<f64>,
        rng: &mut R,
    ) -> Result<TagId> {
        scratch.clear();
        scratch.extend(weights.iter().map(|&(_, w)| w));
        let k = sample_categorical(scratch, rng).ok_or(Error::EmptySupport { sentence: s, position: i })?;
        let tag = weights[k].0;
        self.assign(obs, s, i, tag);
        Ok(tag)
    }

    /// One monolingual Gibbs update of slot `(s, i)`.
    pub fn resample_mono<R: Rng + ?Sized>(
        &mut self,
        obs: &LanguageObs,
        s: usize,
        i: usize,
        buf: &mut Vec<(TagId, f64)>,
        scratch: &mut Vec<f64>,
        rng: &mut R,
    ) -> Result<TagId> {
        self.remove(obs, s, i)?;
        self.mono_weights(obs, s, i, buf);
        self.draw_and_assign(obs, s, i, buf, scratch, rng)
    }

    /// One left-to-right sweep over every training token.
    pub fn sweep_mono<R: Rng + ?Sized>(&mut self, obs: &LanguageObs, rng: &mut R) -> Result<()> {
        if self.clamped {
            return Ok(());
        }
        let mut buf = Vec::with_capacity(obs.num_tags);
        let mut scratch = Vec::with_capacity(obs.num_tags);
        for s in 0..obs.sentences.len() {
            for i in 0..obs.sentences[s].len() {
                self.resample_mono(obs, s, i, &mut buf, &mut scratch, rng)?;
            }
        }
        Ok(())
    }

    /// One Metropolis-Hastings update each of θ₀ and φ₀.
    pub fn resample_hyperparameters<R: Rng + ?Sized>(&mut self, obs: &LanguageObs, rng: &mut R) -> Result<()> {
        if self.clamped {
            return Ok(());
        }
        let em = self.counts.emission_stats(&obs.type_sizes);
        let step = mh_step("theta0", self.theta, |a| em.log_marginal(a), rng)?;
        self.theta_acceptance.record(&step);
        self.theta = step.value;
        let tr = self.counts.transition_stats();
        let step = mh_step("phi0", self.phi, |a| tr.log_marginal(a), rng)?;
        self.phi_acceptance.record(&step);
        self.phi = step.value;
        Ok(())
    }

    /// Whether the counts equal a full recount from the tags.
    pub fn counts_consistent(&self, obs: &LanguageObs) -> bool {
        LanguageCounts::from_tags(obs, &self.tags) == self.counts
    }

    pub fn acceptance(&self) -> AcceptanceStats {
        let mut a = self.theta_acceptance;
        a.merge(&self.phi_acceptance);
        a
    }
}

fn validate_tags(obs: &LanguageObs, tags: &[Vec<TagId>]) -> Result<()> {
    if tags.len() != obs.sentences.len() {
        return Err(Error::LengthMismatch(format!(
            "{} tag sequences for {} sentences in `{}`",
            tags.len(),
            obs.sentences.len(),
            obs.id
        )));
    }
    for (s, (t, sent)) in tags.iter().zip(&obs.sentences).enumerate() {
        if t.len() != sent.len() {
            return Err(Error::LengthMismatch(format!("sentence {s} of `{}`", obs.id)));
        }
        for (i, (&tag, slot)) in t.iter().zip(sent).enumerate() {
            if !slot.allowed.contains(tag) {
                return Err(Error::ForbiddenTag {
                    language: obs.id.clone(),
                    sentence: s,
                    position: i,
                });
            }
        }
    }
    Ok(())
}
