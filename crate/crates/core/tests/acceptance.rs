//! Acceptance suite: one pass/fail line per criterion.

use std::collections::{BTreeMap, BTreeSet};
use std::time::Instant;

use num_rational::Ratio;
use rand::seq::SliceRandom;
use rand::Rng;
use statrs::distribution::{ContinuousCDF, Gamma};
use statrs::function::gamma::ln_gamma;

use multitag::alignments::{build_alignment_sets, remove_crossing_edges, BilingualAlignment, Edge};
use multitag::chain::Chain;
use multitag::counts::{LanguageObs, Slot};
use multitag::eval::{format_metrics, MetricsRecord};
use multitag::hyper::{mh_step, AcceptanceStats};
use multitag::latent::{crp_probabilities, CrpDenominator, LatentParams, LatentSampler, SuperlingualTable};
use multitag::lexicon::{build_lexicon, LexiconMode};
use multitag::merged::{CouplingTable, MergedView, PairLinks};
use multitag::mono::{MonoSampler, SamplerConfig};
use multitag::par::Parallelism;
use multitag::pipeline::{run_model, ModelKind, PairwiseAlignments, RunOutput, RunSpec};
use multitag::synthetic::{generate, SyntheticConfig};
use multitag::tags::{SharedCategories, TagId, TagMask, Tagset};
use multitag::viterbi::viterbi;
use multitag::{stream_rng, SamplerRng};

type Outcome = Result<String, String>;

fn check(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

// ---------------------------------------------------------------- toys

fn toy_obs(id: &str, num_tags: usize, vocab: usize, sentences: &[Vec<u32>]) -> LanguageObs {
    let masks = vec![TagMask::full(num_tags); vocab];
    LanguageObs {
        id: id.into(),
        num_tags,
        vocab_size: vocab,
        type_sizes: LanguageObs::type_sizes_from_masks(num_tags, &masks),
        type_masks: masks,
        sentences: sentences
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

/// Random observations with random permitted-tag masks.
fn random_obs(rng: &mut impl Rng, id: &str, num_tags: usize, sentences: usize, max_len: usize) -> LanguageObs {
    let vocab = rng.random_range(2..=6);
    let masks: Vec<TagMask> = (0..vocab)
        .map(|_| TagMask::from_bits(rng.random_range(1..(1u64 << num_tags))))
        .collect();
    let sents = (0..sentences)
        .map(|_| {
            let len = rng.random_range(1..=max_len);
            (0..len)
                .map(|_| {
                    let w = rng.random_range(0..vocab) as u32;
                    Slot {
                        word: w,
                        allowed: masks[w as usize],
                    }
                })
                .collect()
        })
        .collect();
    LanguageObs {
        id: id.into(),
        num_tags,
        vocab_size: vocab,
        type_sizes: LanguageObs::type_sizes_from_masks(num_tags, &masks),
        type_masks: masks,
        sentences: sents,
        gold: None,
    }
}

fn random_tags(rng: &mut impl Rng, obs: &LanguageObs) -> Vec<Vec<TagId>> {
    obs.sentences
        .iter()
        .map(|s| {
            s.iter()
                .map(|slot| {
                    let allowed: Vec<TagId> = slot.allowed.iter().collect();
                    allowed[rng.random_range(0..allowed.len())]
                })
                .collect()
        })
        .collect()
}

fn normalize(w: &[f64]) -> Vec<f64> {
    let z: f64 = w.iter().sum();
    w.iter().map(|x| x / z).collect()
}

// ------------------------------------------- closed-form collapsed joints

/// Log Dirichlet-multinomial marginal of grouped counts with symmetric
/// prior `a`; each group is `(dimension, cell counts)`.
fn log_dm(groups: &BTreeMap<Vec<usize>, BTreeMap<usize, u32>>, dim: impl Fn(&[usize]) -> f64, a: f64) -> f64 {
    let mut ll = 0.0;
    for (key, cells) in groups {
        let d = dim(key);
        let n: u32 = cells.values().sum();
        ll += ln_gamma(d * a) - ln_gamma(n as f64 + d * a);
        for &c in cells.values() {
            ll += ln_gamma(c as f64 + a) - ln_gamma(a);
        }
    }
    ll
}

/// Log collapsed probability of tags and words: emissions grouped by tag
/// with `|W_t|` cells, trigram outcomes grouped by context with `|T|+1`.
fn log_joint(obs: &LanguageObs, tags: &[Vec<TagId>], theta: f64, phi: f64) -> f64 {
    let n = obs.num_tags;
    let (start, end) = (n, n);
    let mut emit: BTreeMap<Vec<usize>, BTreeMap<usize, u32>> = BTreeMap::new();
    let mut trans: BTreeMap<Vec<usize>, BTreeMap<usize, u32>> = BTreeMap::new();
    for (s, sent) in obs.sentences.iter().enumerate() {
        let t = &tags[s];
        for (i, slot) in sent.iter().enumerate() {
            *emit.entry(vec![t[i] as usize]).or_default().entry(slot.word as usize).or_default() += 1;
        }
        let sym = |k: isize| if k < 0 { start } else { t[k as usize] as usize };
        for k in 0..=t.len() {
            let o = if k == t.len() { end } else { t[k] as usize };
            let ctx = vec![sym(k as isize - 2), sym(k as isize - 1)];
            *trans.entry(ctx).or_default().entry(o).or_default() += 1;
        }
    }
    log_dm(&emit, |k| obs.type_sizes[k[0]] as f64, theta) + log_dm(&trans, |_| (n + 1) as f64, phi)
}

// ------------------------------------------------------------ criterion 1

fn enumerate_configs(lengths: &[usize], num_tags: usize) -> Vec<Vec<Vec<TagId>>> {
    let total: usize = lengths.iter().sum();
    let count = num_tags.pow(total as u32);
    (0..count)
        .map(|mut code| {
            lengths
                .iter()
                .map(|&len| {
                    (0..len)
                        .map(|_| {
                            let t = (code % num_tags) as TagId;
                            code /= num_tags;
                            t
                        })
                        .collect()
                })
                .collect()
        })
        .collect()
}

fn criterion_1() -> Outcome {
    let obs = toy_obs("toy", 2, 3, &[vec![0, 1, 2], vec![2, 0]]);
    let lengths: Vec<usize> = obs.sentences.iter().map(Vec::len).collect();
    let configs = enumerate_configs(&lengths, 2);
    let logs: Vec<f64> = configs.iter().map(|c| log_joint(&obs, c, 1.0, 1.0)).collect();
    let max = logs.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let exact = normalize(&logs.iter().map(|l| (l - max).exp()).collect::<Vec<_>>());
    let index: BTreeMap<Vec<Vec<TagId>>, usize> = configs.into_iter().enumerate().map(|(k, c)| (c, k)).collect();

    let (burn, samples) = (2_000, 50_000);
    let cfg = SamplerConfig {
        epochs: burn + samples,
        mh_warmup: 0,
        resample_hyperparameters: false,
        theta0: 1.0,
        phi0: 1.0,
        modal_window: 0,
    };
    let mut sampler = MonoSampler::new(&obs, cfg, 2024).map_err(|e| e.to_string())?;
    let mut hist = vec![0u64; exact.len()];
    for epoch in 0..burn + samples {
        sampler.step().map_err(|e| e.to_string())?;
        if epoch >= burn {
            hist[index[sampler.tags()]] += 1;
        }
    }
    let tv: f64 = hist
        .iter()
        .zip(&exact)
        .map(|(&h, &p)| (h as f64 / samples as f64 - p).abs())
        .sum::<f64>()
        / 2.0;
    check(tv < 0.02, || format!("TV {tv:.4} over {} configurations", exact.len()))?;
    Ok(format!("TV {tv:.4} over {} configurations, {samples} samples", exact.len()))
}

// ------------------------------------------------------------ criterion 2

struct PairToy {
    obs: [LanguageObs; 2],
    tags: [Vec<Vec<TagId>>; 2],
    theta: [f64; 2],
    phi: [f64; 2],
    omega: f64,
    coupling: [[u32; 2]; 2],
    edges: Vec<Edge>,
    pair: (usize, usize),
}

fn random_words(rng: &mut impl Rng, sentences: usize) -> Vec<Vec<u32>> {
    (0..sentences)
        .map(|_| {
            let len = rng.random_range(3..=5);
            (0..len).map(|_| rng.random_range(0..3)).collect()
        })
        .collect()
}

impl PairToy {
    fn random(rng: &mut impl Rng, shape: Option<usize>) -> Self {
        let sentences = 3;
        let (wa, wb) = (random_words(rng, sentences), random_words(rng, sentences));
        let obs = [toy_obs("a", 2, 3, &wa), toy_obs("b", 2, 3, &wb)];
        let tags = [random_tags(rng, &obs[0]), random_tags(rng, &obs[1])];
        let (la, lb) = (wa[0].len(), wb[0].len());
        // aligned pair in sentence 0 plus a successor configuration
        let i = rng.random_range(0..la - 1);
        let j = rng.random_range(0..lb - 1);
        let shape = shape.unwrap_or_else(|| rng.random_range(0..3));
        let mut edges = vec![(i as u32, j as u32)];
        match shape {
            1 => edges.push((i as u32 + 1, j as u32 + 1)),
            2 => {
                if j + 2 < lb {
                    edges.push((i as u32 + 1, j as u32 + 2));
                } else if i + 2 < la {
                    edges.push((i as u32 + 2, j as u32 + 1));
                } else {
                    edges.push((i as u32 + 1, j as u32 + 1));
                }
            }
            _ => {}
        }
        let mut coupling = [[0u32; 2]; 2];
        for row in &mut coupling {
            for c in row.iter_mut() {
                *c = rng.random_range(0..6);
            }
        }
        PairToy {
            obs,
            tags,
            theta: [rng.random_range(0.05..3.0), rng.random_range(0.05..3.0)],
            phi: [rng.random_range(0.05..3.0), rng.random_range(0.05..3.0)],
            omega: rng.random_range(0.05..3.0),
            coupling,
            edges,
            pair: (i, j),
        }
    }

    fn coupling_table(&self) -> CouplingTable {
        let mut c = CouplingTable::new(2, 2, self.omega).unwrap();
        for t in 0..2 {
            for u in 0..2 {
                c.add_many(t as TagId, u as TagId, self.coupling[t][u]);
            }
        }
        c
    }

    /// Normalized pair distribution from the sampler's view.
    fn sampler_distribution(&self, links: &PairLinks) -> BTreeMap<(TagId, TagId), f64> {
        let (i, j) = self.pair;
        let mut a = Chain::from_tags(&self.obs[0], self.tags[0].clone(), self.theta[0], self.phi[0]).unwrap();
        let mut b = Chain::from_tags(&self.obs[1], self.tags[1].clone(), self.theta[1], self.phi[1]).unwrap();
        a.remove(&self.obs[0], 0, i).unwrap();
        b.remove(&self.obs[1], 0, j).unwrap();
        let coupling = self.coupling_table();
        let view = MergedView {
            obs: [&self.obs[0], &self.obs[1]],
            chains: [&a, &b],
            coupling: &coupling,
        };
        let mut out = Vec::new();
        view.pair_weights(links, 0, i, j, &mut out);
        let z: f64 = out.iter().map(|x| x.2).sum();
        out.into_iter().map(|(t, u, w)| ((t, u), w / z)).collect()
    }

    fn links(&self) -> PairLinks {
        PairLinks::new(self.obs[0].sentences[0].len(), self.obs[1].sentences[0].len(), &self.edges).unwrap()
    }

    /// Plug-in transition table of one language with the trigrams touching
    /// `(0, pos)` removed, as `(c1, c2) -> outcome counts`.
    fn removed_trigrams(&self, side: usize, pos: usize) -> BTreeMap<(usize, usize), Vec<u32>> {
        let n = 2;
        let mut table: BTreeMap<(usize, usize), Vec<u32>> = BTreeMap::new();
        for (s, t) in self.tags[side].iter().enumerate() {
            let sym = |k: isize| if k < 0 { n } else { t[k as usize] as usize };
            for k in 0..=t.len() {
                if s == 0 && k >= pos && k <= pos + 2 {
                    continue;
                }
                let o = if k == t.len() { n } else { t[k] as usize };
                table.entry((sym(k as isize - 2), sym(k as isize - 1))).or_insert_with(|| vec![0; n + 1])[o] += 1;
            }
        }
        table
    }

    /// Independent evaluation: collapsed joints of both languages with the
    /// candidate pair filled in, the coupling predictive, and one inverse
    /// normalizer per aligned pair whose context sees the candidates.
    fn oracle_distribution(&self) -> BTreeMap<(TagId, TagId), f64> {
        let (i, j) = self.pair;
        let n_total: u32 = self.coupling.iter().flatten().sum();
        let omega = |t: usize, u: usize| -> f64 {
            let c = if t < 2 && u < 2 { self.coupling[t][u] } else { 0 };
            (c as f64 + self.omega) / (n_total as f64 + 4.0 * self.omega)
        };
        let rows = [self.removed_trigrams(0, i), self.removed_trigrams(1, j)];
        let plug = |side: usize, c: (usize, usize), o: usize| -> f64 {
            let counts = rows[side].get(&c).cloned().unwrap_or_else(|| vec![0; 3]);
            let total: u32 = counts.iter().sum();
            (counts[o] as f64 + self.phi[side]) / (total as f64 + 3.0 * self.phi[side])
        };
        let succ: Vec<(usize, usize)> = self
            .edges
            .iter()
            .map(|&(k, kb)| (k as usize, kb as usize))
            .filter(|&(k, kb)| (k > i && k <= i + 2) || (kb > j && kb <= j + 2))
            .collect();
        let mut logs = BTreeMap::new();
        for t in 0..2u8 {
            for u in 0..2u8 {
                let mut ta = self.tags[0].clone();
                let mut tb = self.tags[1].clone();
                ta[0][i] = t;
                tb[0][j] = u;
                let mut lw = log_joint(&self.obs[0], &ta, self.theta[0], self.phi[0])
                    + log_joint(&self.obs[1], &tb, self.theta[1], self.phi[1])
                    + omega(t as usize, u as usize).ln();
                for &(k, kb) in &succ {
                    let ctx = |tags: &[TagId], k: usize| -> (usize, usize) {
                        let sym = |x: isize| if x < 0 { 2 } else { tags[x as usize] as usize };
                        (sym(k as isize - 2), sym(k as isize - 1))
                    };
                    let (ca, cb) = (ctx(&ta[0], k), ctx(&tb[0], kb));
                    let mut z = 0.0;
                    for x in 0..3 {
                        for y in 0..3 {
                            z += plug(0, ca, x) * plug(1, cb, y) * omega(x, y);
                        }
                    }
                    lw -= z.ln();
                }
                logs.insert((t, u), lw);
            }
        }
        let max = logs.values().cloned().fold(f64::NEG_INFINITY, f64::max);
        let z: f64 = logs.values().map(|l| (l - max).exp()).sum();
        logs.into_iter().map(|(k, l)| (k, (l - max).exp() / z)).collect()
    }
}

fn criterion_2() -> Outcome {
    let mut rng: SamplerRng = stream_rng(2, "merged-oracle");
    let mut worst = 0.0f64;
    let mut cases = [0usize; 3];
    let configs = 300;
    for _ in 0..configs {
        let toy = PairToy::random(&mut rng, None);
        let (i, j) = toy.pair;
        let succ_case = match toy.edges.get(1) {
            None => 0,
            Some(&(k, kb)) if k as usize == i + 1 && kb as usize == j + 1 => 1,
            Some(_) => 2,
        };
        cases[succ_case] += 1;
        let got = toy.sampler_distribution(&toy.links());
        let want = toy.oracle_distribution();
        for (k, &p) in &want {
            let rel = (got[k] - p).abs() / p;
            worst = worst.max(rel);
        }
    }
    check(worst < 1e-10, || format!("max relative error {worst:e}"))?;
    check(cases.iter().all(|&c| c >= 20), || format!("case coverage {cases:?}"))?;

    // uniform coupling: successor normalizer is constant, so aligned
    // successors change nothing relative to unaligned ones
    let mut uniform_dev = 0.0f64;
    let mut conc_spread = 0.0f64;
    for _ in 0..50 {
        let mut toy = PairToy::random(&mut rng, Some(1));
        toy.coupling = [[0; 2]; 2];
        let (i, j) = toy.pair;
        let with_succ = toy.sampler_distribution(&toy.links());
        let plain_links = PairLinks::new(toy.obs[0].sentences[0].len(), toy.obs[1].sentences[0].len(), &[(i as u32, j as u32)]).unwrap();
        let without = toy.sampler_distribution(&plain_links);
        for (k, &p) in &with_succ {
            uniform_dev = uniform_dev.max((p - without[k]).abs() / p);
        }

        // concentrated coupling on the successor tags: the successor factor
        // divided by its normalizer tends to one for every candidate pair
        let (ts, us) = (toy.tags[0][0][i + 1], toy.tags[1][0][j + 1]);
        toy.coupling = [[0; 2]; 2];
        toy.coupling[ts as usize][us as usize] = 10_000_000;
        toy.omega = 1e-4;
        let w_succ = toy.sampler_distribution(&toy.links());
        let w_plain = toy.sampler_distribution(&plain_links);
        let rows = [toy.removed_trigrams(0, i), toy.removed_trigrams(1, j)];
        let plug = |side: usize, c: (usize, usize), o: usize| -> f64 {
            let counts = rows[side].get(&c).cloned().unwrap_or_else(|| vec![0; 3]);
            let total: u32 = counts.iter().sum();
            (counts[o] as f64 + toy.phi[side]) / (total as f64 + 3.0 * toy.phi[side])
        };
        let ctx = |tags: &[TagId], k: usize, sub: TagId| -> (usize, usize) {
            let sym = |x: isize| {
                if x < 0 {
                    2
                } else if x as usize == k - 1 {
                    sub as usize
                } else {
                    tags[x as usize] as usize
                }
            };
            (sym(k as isize - 2), sym(k as isize - 1))
        };
        let brackets: Vec<f64> = w_succ
            .iter()
            .map(|(&(t, u), &p)| {
                let inv_z = p / w_plain[&(t, u)];
                plug(0, ctx(&toy.tags[0][0], i + 1, t), ts as usize) * plug(1, ctx(&toy.tags[1][0], j + 1, u), us as usize) * inv_z
            })
            .collect();
        let (lo, hi) = brackets
            .iter()
            .fold((f64::INFINITY, 0.0f64), |(lo, hi), &b| (lo.min(b), hi.max(b)));
        conc_spread = conc_spread.max(hi / lo - 1.0);
    }
    check(uniform_dev < 1e-12, || format!("uniform limit deviates by {uniform_dev:e}"))?;
    check(conc_spread < 0.01, || format!("concentrated limit spread {conc_spread:.4}"))?;
    Ok(format!(
        "{configs} configs (cases {cases:?}), max rel err {worst:.1e}; uniform dev {uniform_dev:.1e}, concentrated spread {conc_spread:.1e}"
    ))
}

// ------------------------------------------------------------ criterion 3

fn criterion_3() -> Outcome {
    let mut rng: SamplerRng = stream_rng(3, "reduction");
    let states = 1000;
    let mut compared = 0usize;
    for _ in 0..states {
        let sentences = rng.random_range(1..=3);
        let na = rng.random_range(2..=4);
        let nb = rng.random_range(2..=4);
        let oa = random_obs(&mut rng, "a", na, sentences, 6);
        let ob = random_obs(&mut rng, "b", nb, sentences, 6);
        let tags = [random_tags(&mut rng, &oa), random_tags(&mut rng, &ob)];
        let theta = rng.random_range(0.05..3.0);
        let phi = rng.random_range(0.05..3.0);
        let obs = [&oa, &ob];
        let side = rng.random_range(0..2);
        let s = rng.random_range(0..sentences);
        let i = rng.random_range(0..obs[side].sentences[s].len());

        let chains: Vec<Chain> = (0..2)
            .map(|l| Chain::from_tags(obs[l], tags[l].clone(), theta, phi).unwrap())
            .collect();
        let mut mono = chains[side].clone();
        mono.remove(obs[side], s, i).map_err(|e| e.to_string())?;
        let mut reference = Vec::new();
        mono.mono_weights(obs[side], s, i, &mut reference);

        // merged with no alignment edges
        let mut pair = [chains[0].clone(), chains[1].clone()];
        pair[side].remove(obs[side], s, i).map_err(|e| e.to_string())?;
        let coupling = CouplingTable::new(na, nb, rng.random_range(0.05..3.0)).unwrap();
        let view = MergedView {
            obs,
            chains: [&pair[0], &pair[1]],
            coupling: &coupling,
        };
        let links = PairLinks::unaligned(oa.sentences[s].len(), ob.sentences[s].len());
        let mut merged = Vec::new();
        view.single_weights(&links, side, s, i, &mut merged);

        // latent with no alignment sets
        let cfg = SamplerConfig {
            epochs: 1,
            mh_warmup: 0,
            resample_hyperparameters: false,
            theta0: theta,
            phi0: phi,
            modal_window: 0,
        };
        let tagsets = [
            Tagset::with_punctuation((1..na).map(|t| format!("T{t}"))).unwrap(),
            Tagset::with_punctuation((1..nb).map(|t| format!("T{t}"))).unwrap(),
        ];
        let categories = SharedCategories::for_tagsets(&[&tagsets[0], &tagsets[1]]);
        let mut latent = LatentSampler::new(
            vec![&oa, &ob],
            Vec::new(),
            cfg,
            &LatentParams::default(),
            vec![tags[0].clone(), tags[1].clone()],
            &[false, false],
            &categories,
            0,
        )
        .map_err(|e| e.to_string())?;
        latent.remove_tag(side, s, i).map_err(|e| e.to_string())?;
        let mut lat = Vec::new();
        latent.tag_weights(side, s, i, &mut lat);

        let bits = |v: &[(TagId, f64)]| -> Vec<(TagId, u64)> { v.iter().map(|&(t, w)| (t, w.to_bits())).collect() };
        let norm_bits = |v: &[(TagId, f64)]| -> Vec<u64> {
            normalize(&v.iter().map(|x| x.1).collect::<Vec<_>>()).iter().map(|x| x.to_bits()).collect()
        };
        check(bits(&merged) == bits(&reference), || format!("merged differs at state {compared}"))?;
        check(bits(&lat) == bits(&reference), || format!("latent differs at state {compared}"))?;
        check(norm_bits(&merged) == norm_bits(&reference) && norm_bits(&lat) == norm_bits(&reference), || {
            format!("normalized distributions differ at state {compared}")
        })?;
        compared += 1;
    }
    Ok(format!("{compared} random states bitwise equal (merged and latent)"))
}

// ------------------------------------------------------------ criterion 4

fn set_partitions(n: usize) -> Vec<Vec<usize>> {
    // restricted growth strings
    let mut out = Vec::new();
    let mut cur = vec![0usize; n];
    fn rec(k: usize, max: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if k == cur.len() {
            out.push(cur.clone());
            return;
        }
        for b in 0..=max + 1 {
            cur[k] = b;
            rec(k + 1, max.max(b), cur, out);
        }
    }
    if n > 0 {
        rec(1, 0, &mut cur, &mut out);
    }
    out
}

fn ewens(blocks: &[usize], alpha: f64) -> f64 {
    let n: usize = blocks.len();
    let mut sizes = BTreeMap::new();
    for &b in blocks {
        *sizes.entry(b).or_insert(0usize) += 1;
    }
    let mut p = alpha.powi(sizes.len() as i32);
    for &s in sizes.values() {
        p *= (1..s).product::<usize>() as f64;
    }
    for k in 0..n {
        p /= alpha + k as f64;
    }
    p
}

/// Sequential seating probability of `blocks` visited in `order`.
fn sequential_ratio(blocks: &[usize], order: &[usize], alpha: Ratio<i64>, denominator: CrpDenominator) -> Ratio<i64> {
    let mut opened: Vec<usize> = Vec::new();
    let mut usage: Vec<u32> = Vec::new();
    let mut p = Ratio::from_integer(1);
    for (seated, &item) in order.iter().enumerate() {
        let existing = vec![Ratio::from_integer(1); usage.len()];
        let probs = crp_probabilities(&usage, &existing, Ratio::from_integer(1), alpha, denominator, seated as u32);
        match opened.iter().position(|&b| b == blocks[item]) {
            Some(k) => {
                p *= probs[k];
                usage[k] += 1;
            }
            None => {
                p *= probs[usage.len()];
                opened.push(blocks[item]);
                usage.push(1);
            }
        }
    }
    p
}

fn permutations(n: usize) -> Vec<Vec<usize>> {
    if n == 0 {
        return vec![Vec::new()];
    }
    let mut out = Vec::new();
    for p in permutations(n - 1) {
        for k in 0..=p.len() {
            let mut q = p.clone();
            q.insert(k, n - 1);
            out.push(q);
        }
    }
    out
}

fn criterion_4() -> Outcome {
    let alpha = 0.7;
    let runs = 100_000;
    let partitions = set_partitions(3);
    let mut report = Vec::new();
    for denominator in [CrpDenominator::ActiveValues, CrpDenominator::Customers] {
        let mut rng: SamplerRng = stream_rng(4, "crp");
        let mut hist: BTreeMap<Vec<usize>, u64> = BTreeMap::new();
        for _ in 0..runs {
            let mut table = SuperlingualTable::new(vec![2], alpha, vec![1.0], denominator).unwrap();
            let mut seen: Vec<u32> = Vec::new();
            let mut key = Vec::new();
            for _ in 0..3 {
                let z = table.sample_value(&[], &mut rng).map_err(|e| e.to_string())?;
                let b = match seen.iter().position(|&v| v == z) {
                    Some(b) => b,
                    None => {
                        seen.push(z);
                        seen.len() - 1
                    }
                };
                key.push(b);
            }
            *hist.entry(key).or_default() += 1;
        }
        check(hist.len() == 5, || format!("{} distinct partitions", hist.len()))?;
        let tv: f64 = partitions
            .iter()
            .map(|p| (*hist.get(p).unwrap_or(&0) as f64 / runs as f64 - ewens(p, alpha)).abs())
            .sum::<f64>()
            / 2.0;
        check(tv < 0.02, || format!("{denominator:?}: TV {tv:.4}"))?;
        report.push(format!("{denominator:?} TV {tv:.4}"));
    }

    let alpha = Ratio::new(7, 10);
    let mut checked = 0;
    for n in 3..=5 {
        for denominator in [CrpDenominator::ActiveValues, CrpDenominator::Customers] {
            let mut total = Ratio::from_integer(0);
            for blocks in set_partitions(n) {
                let identity: Vec<usize> = (0..n).collect();
                let base = sequential_ratio(&blocks, &identity, alpha, denominator);
                for order in permutations(n) {
                    let p = sequential_ratio(&blocks, &order, alpha, denominator);
                    check(p == base, || format!("order {order:?} of {blocks:?}: {p} vs {base}"))?;
                    checked += 1;
                }
                total += base;
            }
            check(total == Ratio::from_integer(1), || format!("partition probabilities sum to {total}"))?;
        }
    }
    Ok(format!("{}; {checked} orderings exactly exchangeable", report.join(", ")))
}

// ------------------------------------------------------------ criterion 5

fn criterion_5() -> Outcome {
    // languages in id order: en et hu sl sr
    let one = BilingualAlignment::new(0, vec![(0, 0)]).unwrap();
    let (en, et, hu, sl, sr) = (0u16, 1u16, 2u16, 3u16, 4u16);
    let pairs = [(en, sr, &one), (en, et, &one), (en, sl, &one), (et, sl, &one), (hu, sr, &one)];
    let sets = build_alignment_sets(0, &pairs);
    let got: BTreeSet<BTreeSet<u16>> = sets.iter().map(|s| s.languages()).collect();
    let want: BTreeSet<BTreeSet<u16>> = [vec![sr, hu, en], vec![en, sr, et, sl], vec![et, sl, en]]
        .into_iter()
        .map(|v| v.into_iter().collect())
        .collect();
    check(sets.len() == 3 && got == want, || format!("fixture sets {got:?}"))?;

    // density recount on random multi-language graphs
    let mut rng: SamplerRng = stream_rng(5, "alignments");
    let mut recounted = 0usize;
    for sentence in 0..2000 {
        let langs = rng.random_range(2..=5u16);
        let lens: Vec<u32> = (0..langs).map(|_| rng.random_range(1..=6)).collect();
        let mut owned = Vec::new();
        for a in 0..langs {
            for b in a + 1..langs {
                let edges = random_edges(&mut rng, lens[a as usize], lens[b as usize]);
                let al = remove_crossing_edges(&BilingualAlignment::new(sentence, edges).unwrap());
                owned.push((a, b, al));
            }
        }
        let pairwise: Vec<(u16, u16, &BilingualAlignment)> = owned.iter().map(|(a, b, al)| (*a, *b, al)).collect();
        let linked = |x: (u16, u32), y: (u16, u32)| -> bool {
            owned.iter().any(|(a, b, al)| {
                (*a == x.0 && *b == y.0 && al.edges().contains(&(x.1, y.1)))
                    || (*a == y.0 && *b == x.0 && al.edges().contains(&(y.1, x.1)))
            })
        };
        for set in build_alignment_sets(sentence, &pairwise) {
            let m: Vec<(u16, u32)> = set.members.iter().map(|t| (t.lang, t.pos)).collect();
            let mut links = 0usize;
            for a in 0..m.len() {
                for b in a + 1..m.len() {
                    links += linked(m[a], m[b]) as usize;
                }
            }
            let n = m.len();
            check(n >= 2 && 3 * links >= 2 * (n * (n - 1) / 2), || {
                format!("set {m:?} has {links} links among {n} members")
            })?;
            recounted += 1;
        }
    }

    // crossing removal
    let trials = 10_000;
    for sentence in 0..trials {
        let (la, lb) = (rng.random_range(1..=12), rng.random_range(1..=12));
        let al = BilingualAlignment::new(sentence, random_edges(&mut rng, la, lb)).unwrap();
        let out = remove_crossing_edges(&al);
        let strictly_monotone = out.edges().windows(2).all(|w| w[0].0 < w[1].0 && w[0].1 < w[1].1);
        check(strictly_monotone, || format!("not monotone: {:?}", out.edges()))?;
        check(out.edges().iter().all(|e| al.edges().contains(e)), || "edge invented".into())?;
        check(remove_crossing_edges(&out) == out, || format!("not idempotent on {:?}", al.edges()))?;
    }
    Ok(format!("fixture yields 3 sets; {recounted} sets pass the density recount; {trials} crossing removals monotone and idempotent"))
}

/// Random one-to-one edges between sentences of the given lengths.
fn random_edges(rng: &mut impl Rng, la: u32, lb: u32) -> Vec<Edge> {
    let mut targets: Vec<u32> = (0..lb).collect();
    targets.shuffle(rng);
    (0..la)
        .zip(targets)
        .filter(|_| rng.random_bool(0.6))
        .collect()
}

// ------------------------------------------------------------ criterion 6

fn criterion_6() -> Outcome {
    let mut rng: SamplerRng = stream_rng(6, "viterbi");
    let cases = 500;
    let mut ties = 0;
    for case in 0..cases {
        let n = rng.random_range(1..=5usize);
        let max_len = match n {
            1 => 8,
            2 => 16,
            3 => 10,
            4 => 8,
            _ => 7,
        };
        let len = rng.random_range(1..=max_len);
        let syms = n + 1;
        let table: Vec<f64> = (0..syms * syms * syms).map(|_| rng.random_range(1e-3..1.0f64).ln()).collect();
        let log_trans = |c1: usize, c2: usize, o: usize| table[(c1 * syms + c2) * syms + o];
        let candidates: Vec<Vec<(TagId, f64)>> = (0..len)
            .map(|_| {
                let mut c: Vec<(TagId, f64)> = Vec::new();
                for t in 0..n as TagId {
                    if rng.random_bool(0.7) {
                        c.push((t, rng.random_range(1e-3..1.0f64).ln()));
                    }
                }
                if c.is_empty() {
                    c.push((rng.random_range(0..n) as TagId, rng.random_range(1e-3..1.0f64).ln()));
                }
                c.shuffle(&mut rng);
                c
            })
            .collect();
        let (tags, score) = viterbi(n, log_trans, &candidates, case).map_err(|e| e.to_string())?;
        let (best_tags, best) = exhaustive(n, &log_trans, &candidates);
        check((score - best).abs() < 1e-9, || format!("case {case}: score {score} vs {best}"))?;
        if tags != best_tags {
            ties += 1;
            let own = path_score(n, &log_trans, &candidates, &tags);
            check((own - best).abs() < 1e-9, || format!("case {case}: {tags:?} vs {best_tags:?}"))?;
        }
    }
    Ok(format!("{cases} cases match exhaustive argmax ({ties} exact ties)"))
}

fn path_score(n: usize, log_trans: &impl Fn(usize, usize, usize) -> f64, cands: &[Vec<(TagId, f64)>], tags: &[TagId]) -> f64 {
    let sym = |k: isize| if k < 0 { n } else { tags[k as usize] as usize };
    let mut s = 0.0;
    for (k, &t) in tags.iter().enumerate() {
        let e = cands[k].iter().find(|c| c.0 == t).map_or(f64::NEG_INFINITY, |c| c.1);
        s += log_trans(sym(k as isize - 2), sym(k as isize - 1), t as usize) + e;
    }
    let k = tags.len() as isize;
    s + log_trans(sym(k - 2), sym(k - 1), n)
}

fn exhaustive(n: usize, log_trans: &impl Fn(usize, usize, usize) -> f64, cands: &[Vec<(TagId, f64)>]) -> (Vec<TagId>, f64) {
    let mut idx = vec![0usize; cands.len()];
    let mut best = (Vec::new(), f64::NEG_INFINITY);
    loop {
        let tags: Vec<TagId> = idx.iter().enumerate().map(|(k, &x)| cands[k][x].0).collect();
        let s = path_score(n, log_trans, cands, &tags);
        if s > best.1 {
            best = (tags, s);
        }
        let mut k = 0;
        loop {
            if k == idx.len() {
                return best;
            }
            idx[k] += 1;
            if idx[k] < cands[k].len() {
                break;
            }
            idx[k] = 0;
            k += 1;
        }
    }
}

// ------------------------------------------------------------ criterion 7

fn criterion_7(acceptance: &AcceptanceStats) -> Outcome {
    // Poisson counts summing to 40 over 20 observations with a flat prior:
    // the rate posterior is Gamma(41, 20)
    let (sum, count) = (40.0, 20.0);
    let log_lik = |x: f64| sum * x.ln() - count * x;
    let posterior = Gamma::new(sum + 1.0, count).unwrap();
    let mut rng: SamplerRng = stream_rng(7, "mh");
    let mut x = 1.0;
    for _ in 0..2_000 {
        x = mh_step("rate", x, log_lik, &mut rng).map_err(|e| e.to_string())?.value;
    }
    let n = 100_000;
    let mut samples = Vec::with_capacity(n);
    for _ in 0..n {
        x = mh_step("rate", x, log_lik, &mut rng).map_err(|e| e.to_string())?.value;
        samples.push(x);
    }
    samples.sort_by(f64::total_cmp);
    let ks = samples
        .iter()
        .enumerate()
        .map(|(k, &v)| {
            let f = posterior.cdf(v);
            (f - k as f64 / n as f64).abs().max(((k + 1) as f64 / n as f64 - f).abs())
        })
        .fold(0.0, f64::max);
    check(ks < 0.05, || format!("KS {ks:.4}"))?;
    let rate = acceptance.rate();
    check((0.08..=0.30).contains(&rate), || {
        format!("KS {ks:.4} ok; synthetic-run acceptance {rate:.3} outside [0.08, 0.30]")
    })?;
    Ok(format!(
        "KS {ks:.4} over {n} samples; synthetic-run acceptance {rate:.3} ({} proposals)",
        acceptance.proposed
    ))
}

// ------------------------------------------------------------ criterion 8

struct Synthetic {
    corpus: multitag::corpus::TaggedCorpus,
    lexicon: multitag::lexicon::Lexicon,
    alignments: PairwiseAlignments,
}

fn synthetic(sentences: usize) -> Synthetic {
    let synth = generate(&SyntheticConfig {
        sentences,
        ..SyntheticConfig::default()
    })
    .unwrap();
    let corpus = synth.corpus.split_train_test(0.75).unwrap();
    let lexicon = build_lexicon(&corpus, LexiconMode::TopFrequent(20)).unwrap();
    let mut alignments = PairwiseAlignments::new();
    alignments.insert((0, 1), synth.alignments);
    Synthetic {
        corpus,
        lexicon,
        alignments,
    }
}

fn mean(xs: &[f64]) -> f64 {
    xs.iter().sum::<f64>() / xs.len() as f64
}

fn criterion_8(acceptance: &mut AcceptanceStats) -> Outcome {
    let started = Instant::now();
    let data = synthetic(500);
    let par = Parallelism::default();
    let seeds: Vec<u64> = (0..5).collect();
    let jobs: Vec<(ModelKind, Vec<usize>, u64)> = seeds
        .iter()
        .flat_map(|&s| {
            [
                (ModelKind::Mono, vec![0], s),
                (ModelKind::Mono, vec![1], s),
                (ModelKind::Merged, vec![0, 1], s),
                (ModelKind::Latent, vec![0, 1], s),
            ]
        })
        .collect();
    let outputs: Vec<multitag::Result<RunOutput>> = par.map(&jobs, |(model, langs, seed)| {
        run_model(&data.corpus, &data.lexicon, &data.alignments, &RunSpec::new(*model, langs.clone(), *seed), par)
    });
    let mut accs: BTreeMap<&str, Vec<f64>> = BTreeMap::new();
    for ((model, _, _), out) in jobs.iter().zip(outputs) {
        let out = out.map_err(|e| e.to_string())?;
        acceptance.merge(&out.acceptance);
        for a in &out.accuracies {
            accs.entry(model.name()).or_default().push(a.ok_or("no test gold")?);
        }
    }
    let mono = mean(&accs["mono"]);
    let merged = mean(&accs["merged"]);
    let latent = mean(&accs["latent"]);
    let secs = started.elapsed().as_secs_f64();
    let line = format!(
        "mono {:.2}, merged {:.2} ({:+.2}), latent {:.2} ({:+.2}) over 5 seeds in {secs:.0}s",
        100.0 * mono,
        100.0 * merged,
        100.0 * (merged - mono),
        100.0 * latent,
        100.0 * (latent - mono)
    );
    check(merged - mono >= 0.02 && latent - mono >= 0.02 && secs < 600.0, || line.clone())?;
    Ok(line)
}

// ------------------------------------------------------------ criterion 9

fn rows_and_tables(data: &Synthetic, par: Parallelism) -> multitag::Result<(String, Vec<String>)> {
    let mut rows = Vec::new();
    let mut tables = Vec::new();
    for (model, langs) in [
        (ModelKind::Mono, vec![1]),
        (ModelKind::Merged, vec![0, 1]),
        (ModelKind::Latent, vec![0, 1]),
        (ModelKind::Supervised, vec![0]),
    ] {
        let mut spec = RunSpec::new(model, langs.clone(), 17);
        spec.mono.epochs = 20;
        spec.joint.epochs = if model == ModelKind::Latent { 40 } else { 20 };
        spec.joint.modal_window = if model == ModelKind::Latent { 10 } else { 0 };
        let out = run_model(&data.corpus, &data.lexicon, &data.alignments, &spec, par)?;
        for (k, &l) in langs.iter().enumerate() {
            rows.push(MetricsRecord {
                model: model.name().into(),
                languages: langs.iter().map(|&x| data.corpus.text(x).language.id.clone()).collect(),
                lexicon: LexiconMode::TopFrequent(20).to_string(),
                seed: spec.seed,
                language: data.corpus.text(l).language.id.clone(),
                accuracy: out.accuracies[k].unwrap_or(f64::NAN),
                epochs: spec.epochs(),
                active_values: out.latent.as_ref().map(|r| r.final_active()),
            });
            let (t, e, u) = out.tables[k].to_strings();
            tables.push(format!("{t}{e}{u}"));
        }
    }
    Ok((format_metrics(&rows), tables))
}

fn criterion_9() -> Outcome {
    let data = synthetic(120);
    let first = rows_and_tables(&data, Parallelism::default()).map_err(|e| e.to_string())?;
    let second = rows_and_tables(&data, Parallelism::default()).map_err(|e| e.to_string())?;
    let sequential = rows_and_tables(&data, Parallelism::Sequential).map_err(|e| e.to_string())?;
    check(first == second, || "repeated runs differ".into())?;
    check(first == sequential, || "sequential and parallel runs differ".into())?;
    let bytes: usize = first.0.len() + first.1.iter().map(String::len).sum::<usize>();
    Ok(format!(
        "{} metrics rows and {} tables ({bytes} bytes) identical across reruns and parallelism modes",
        first.0.lines().count() - 1,
        first.1.len()
    ))
}

// ------------------------------------------------------------------ main

fn main() {
    let mut acceptance = AcceptanceStats::default();
    let c8 = criterion_8(&mut acceptance);
    let results: Vec<(usize, &str, Outcome)> = vec![
        (1, "collapsed Gibbs matches enumerated posterior", criterion_1()),
        (2, "merged-node conditional oracle and limits", criterion_2()),
        (3, "reduction to the monolingual sampler", criterion_3()),
        (4, "CRP partitions and exchangeability", criterion_4()),
        (5, "alignment pipeline", criterion_5()),
        (6, "Viterbi exactness", criterion_6()),
        (7, "MH sanity", criterion_7(&acceptance)),
        (8, "synthetic separation", c8),
        (9, "determinism", criterion_9()),
    ];
    let mut failed = 0;
    for (n, name, outcome) in &results {
        match outcome {
            Ok(detail) => println!("criterion {n} PASS  {name}: {detail}"),
            Err(detail) => {
                failed += 1;
                println!("criterion {n} FAIL  {name}: {detail}");
            }
        }
    }
    if failed > 0 {
        println!("{failed} of {} criteria failed", results.len());
        std::process::exit(1);
    }
    println!("all {} criteria passed", results.len());
}
