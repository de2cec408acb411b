mod common;

use common::{fixture, toy_text};
use multitag::chain::Chain;
use multitag::checkpoint::Checkpoint;
use multitag::corpus::TaggedCorpus;
use multitag::counts::LanguageObs;
use multitag::eval::accuracy;
use multitag::latent::{LatentParams, LatentSampler, LatentSet};
use multitag::lexicon::{build_lexicon, LexiconMode};
use multitag::merged::{train_merged, CouplingTable, MergedSampler, MergedView, PairLinks};
use multitag::mono::{train_mono, MonoSampler, SamplerConfig};
use multitag::par::Parallelism;
use multitag::params::{ParamTables, SUPERVISED_PSEUDO_COUNT};
use multitag::pipeline::alignment_sets_for;
use multitag::tags::{SharedCategories, TagId};
use multitag::{stream_rng, SamplerRng};

fn short(epochs: usize) -> SamplerConfig {
    SamplerConfig {
        epochs,
        mh_warmup: 5,
        ..SamplerConfig::mono()
    }
}

#[test]
fn mono_counts_track_tags() {
    let f = fixture(30, LexiconMode::TopFrequent(20), 1);
    let mut s = MonoSampler::new(&f.obs[0], short(5), 3).unwrap();
    for _ in 0..5 {
        s.step().unwrap();
        assert!(s.chain().counts_consistent(&f.obs[0]));
    }
}

#[test]
fn mono_resume_continues_the_same_trajectory() {
    let f = fixture(30, LexiconMode::TopFrequent(20), 2);
    let cfg = short(10);
    let mut straight = MonoSampler::new(&f.obs[0], cfg.clone(), 11).unwrap();
    straight.run().unwrap();

    let mut first = MonoSampler::new(&f.obs[0], cfg.clone(), 11).unwrap();
    for _ in 0..5 {
        first.step().unwrap();
    }
    let json = first.checkpoint().to_json().unwrap();
    let mut second = MonoSampler::resume(&f.obs[0], cfg, Checkpoint::from_json(&json).unwrap()).unwrap();
    second.run().unwrap();
    assert_eq!(second.epoch(), 10);
    assert_eq!(straight.result().unwrap(), second.result().unwrap());
}

#[test]
fn mono_recovers_unambiguous_tags() {
    let raw = "the\tA\ndog\tN\nruns\tV\n.\t_\n\nthe\tA\ncat\tN\nsleeps\tV\n\n";
    let t = toy_text("xx", &raw.repeat(5));
    let corpus = TaggedCorpus::new(vec![t]).unwrap();
    let lexicon = build_lexicon(&corpus, LexiconMode::Full).unwrap();
    let obs = LanguageObs::build(corpus.text(0), lexicon.language(0), corpus.train_range());
    let r = train_mono(&obs, &short(20), 5).unwrap();
    let gold = obs.gold.clone().unwrap();
    assert_eq!(accuracy(&r.modal_tags, &gold, 3).unwrap(), 1.0);
}

#[test]
fn merged_without_alignments_follows_mono_trajectories() {
    let f = fixture(25, LexiconMode::TopFrequent(20), 3);
    let cfg = short(6);
    let merged = train_merged([&f.obs[0], &f.obs[1]], &[], &cfg, 1.0, 9).unwrap();
    for l in 0..2 {
        let mono = train_mono(&f.obs[l], &cfg, 9).unwrap();
        assert_eq!(merged.languages[l], mono);
    }
}

#[test]
fn merged_counts_track_tags() {
    let f = fixture(30, LexiconMode::TopFrequent(20), 4);
    let links = PairLinks::for_corpus(&f.obs[0], &f.obs[1], &f.synth.alignments).unwrap();
    let mut s = MergedSampler::new([&f.obs[0], &f.obs[1]], links, short(4), 1.0, 2).unwrap();
    for _ in 0..4 {
        s.step().unwrap();
        assert!(s.counts_consistent());
    }
}

#[test]
fn merged_resume_continues_the_same_trajectory() {
    let f = fixture(30, LexiconMode::TopFrequent(20), 5);
    let links = PairLinks::for_corpus(&f.obs[0], &f.obs[1], &f.synth.alignments).unwrap();
    let cfg = short(10);
    let obs = [&f.obs[0], &f.obs[1]];
    let mut straight = MergedSampler::new(obs, links.clone(), cfg.clone(), 1.0, 4).unwrap();
    straight.run().unwrap();
    let mut first = MergedSampler::new(obs, links.clone(), cfg.clone(), 1.0, 4).unwrap();
    for _ in 0..5 {
        first.step().unwrap();
    }
    let json = first.checkpoint().to_json().unwrap();
    let mut second = MergedSampler::resume(obs, links, cfg, Checkpoint::from_json(&json).unwrap()).unwrap();
    second.run().unwrap();
    assert_eq!(straight.result().unwrap(), second.result().unwrap());
}

#[test]
fn swapping_languages_transposes_pair_distributions() {
    let f = fixture(20, LexiconMode::TopFrequent(20), 6);
    let mut rng: SamplerRng = stream_rng(0, "swap");
    let chains = [
        Chain::random(&f.obs[0], 0.7, 0.4, &mut rng).unwrap(),
        Chain::random(&f.obs[1], 1.3, 0.9, &mut rng).unwrap(),
    ];
    let links = PairLinks::for_corpus(&f.obs[0], &f.obs[1], &f.synth.alignments).unwrap();
    let rev_links: Vec<PairLinks> = links.iter().map(PairLinks::transposed).collect();
    let (na, nb) = (f.obs[0].num_tags, f.obs[1].num_tags);
    let mut checked = 0;
    for (s, l) in links.iter().enumerate() {
        for (i, j) in l.pairs() {
            let mut a = chains[0].clone();
            let mut b = chains[1].clone();
            a.remove(&f.obs[0], s, i).unwrap();
            b.remove(&f.obs[1], s, j).unwrap();
            let mut fwd_tags = [a.tags.clone(), b.tags.clone()];
            // coupling counts exclude the pair being sampled
            fwd_tags[0][s][i] = TagId::MAX;
            let coupling = coupling_without(na, nb, 0.8, &links, &chains[0].tags, &chains[1].tags, (s, i, j));
            let rev = coupling_without(nb, na, 0.8, &rev_links, &chains[1].tags, &chains[0].tags, (s, j, i));
            let fwd_view = MergedView {
                obs: [&f.obs[0], &f.obs[1]],
                chains: [&a, &b],
                coupling: &coupling,
            };
            let rev_view = MergedView {
                obs: [&f.obs[1], &f.obs[0]],
                chains: [&b, &a],
                coupling: &rev,
            };
            let (mut p, mut q) = (Vec::new(), Vec::new());
            fwd_view.pair_weights(l, s, i, j, &mut p);
            rev_view.pair_weights(&rev_links[s], s, j, i, &mut q);
            let zp: f64 = p.iter().map(|x| x.2).sum();
            let zq: f64 = q.iter().map(|x| x.2).sum();
            for &(t, u, w) in &p {
                let &(_, _, v) = q.iter().find(|x| x.0 == u && x.1 == t).unwrap();
                let (x, y) = (w / zp, v / zq);
                assert!((x - y).abs() <= 1e-12 * x.max(y).max(1e-300), "{x} vs {y}");
            }
            checked += 1;
        }
    }
    assert!(checked > 20);
}

fn coupling_without(
    na: usize,
    nb: usize,
    omega: f64,
    links: &[PairLinks],
    a: &[Vec<TagId>],
    b: &[Vec<TagId>],
    skip: (usize, usize, usize),
) -> CouplingTable {
    let mut c = CouplingTable::from_tags(na, nb, omega, links, a, b).unwrap();
    let (s, i, j) = skip;
    c.remove(a[s][i], b[s][j]).unwrap();
    c
}

fn latent_parts(f: &common::Fixture) -> (Vec<LatentSet>, SharedCategories) {
    let n = f.corpus.num_sentences();
    let mut aligns = multitag::pipeline::PairwiseAlignments::new();
    aligns.insert((0, 1), f.synth.alignments.clone());
    let sets = alignment_sets_for(n, &[0, 1], &aligns, Parallelism::Sequential);
    let sets = LatentSet::from_alignment_sets(&sets, n, 2).unwrap();
    let tagsets: Vec<_> = f.corpus.texts().iter().map(|t| &t.language.tagset).collect();
    (sets, SharedCategories::for_tagsets(&tagsets))
}

#[test]
fn latent_counts_track_tags_and_seating() {
    let f = fixture(30, LexiconMode::TopFrequent(20), 7);
    let (sets, cats) = latent_parts(&f);
    assert!(!sets.is_empty());
    let params = LatentParams::default();
    let init: Vec<_> = f.obs.iter().map(|o| o.gold.clone().unwrap()).collect();
    let obs: Vec<&LanguageObs> = f.obs.iter().collect();
    let mut s = LatentSampler::new(obs, sets, short(4), &params, init, &[false, false], &cats, 8).unwrap();
    assert!(s.counts_consistent(&params));
    for _ in 0..4 {
        s.step().unwrap();
        assert!(s.counts_consistent(&params));
    }
    assert_eq!(s.active_history().len(), 4);
}

#[test]
fn latent_clamped_language_keeps_gold_tags() {
    let f = fixture(30, LexiconMode::TopFrequent(20), 8);
    let (sets, cats) = latent_parts(&f);
    let params = LatentParams::default();
    let gold0 = f.obs[0].gold.clone().unwrap();
    let mut rng: SamplerRng = stream_rng(1, "init");
    let init = vec![gold0.clone(), Chain::random(&f.obs[1], 1.0, 1.0, &mut rng).unwrap().tags];
    let obs: Vec<&LanguageObs> = f.obs.iter().collect();
    let mut s = LatentSampler::new(obs, sets, short(3), &params, init, &[true, false], &cats, 3).unwrap();
    s.run().unwrap();
    assert_eq!(s.chains()[0].tags, gold0);
    assert_eq!(s.chains()[0].theta, 1.0);
}

#[test]
fn latent_resume_continues_the_same_trajectory() {
    let f = fixture(30, LexiconMode::TopFrequent(20), 9);
    let (sets, cats) = latent_parts(&f);
    let params = LatentParams::default();
    let cfg = SamplerConfig {
        modal_window: 4,
        ..short(10)
    };
    let init: Vec<_> = f.obs.iter().map(|o| o.gold.clone().unwrap()).collect();
    let obs: Vec<&LanguageObs> = f.obs.iter().collect();
    let build = || LatentSampler::new(obs.clone(), sets.clone(), cfg.clone(), &params, init.clone(), &[false, false], &cats, 6).unwrap();
    let mut straight = build();
    straight.run().unwrap();
    let mut first = build();
    for _ in 0..5 {
        first.step().unwrap();
    }
    let json = first.checkpoint().to_json().unwrap();
    let mut second = LatentSampler::resume(obs.clone(), sets.clone(), cfg.clone(), &params, Checkpoint::from_json(&json).unwrap()).unwrap();
    second.run().unwrap();
    let (a, b) = (straight.result().unwrap(), second.result().unwrap());
    assert_eq!(a.languages, b.languages);
    assert_eq!(a.active_history, b.active_history);
    assert_eq!(straight.values(), second.values());
}

#[test]
fn map_tables_are_normalized() {
    let f = fixture(40, LexiconMode::TopFrequent(20), 10);
    let text = f.corpus.text(0);
    let r = train_mono(&f.obs[0], &short(3), 1).unwrap();
    let t = ParamTables::from_tags(text, &f.obs[0], &r.modal_tags, r.theta, r.phi).unwrap();
    let k = t.num_tags();
    for c1 in 0..=k {
        for c2 in 0..=k {
            let s: f64 = (0..=k).map(|o| t.transition(c1, c2, o)).sum();
            assert!((s - 1.0).abs() < 1e-12);
        }
    }
    for tag in 0..k as TagId {
        let s: f64 = t.words().iter().map(|w| t.emission(tag, w)).filter(|_| true).sum::<f64>();
        let masked: f64 = text
            .vocab
            .words()
            .iter()
            .enumerate()
            .filter(|(w, _)| f.obs[0].type_masks[*w].contains(tag))
            .map(|(_, w)| t.emission(tag, w))
            .sum();
        assert!(s >= masked);
        if f.obs[0].type_sizes[tag as usize] > 0 {
            assert!((masked - 1.0).abs() < 1e-12, "tag {tag}: {masked}");
        }
    }
}

#[test]
fn map_tables_round_trip_through_files() {
    let f = fixture(40, LexiconMode::TopFrequent(20), 11);
    let text = f.corpus.text(1);
    let r = train_mono(&f.obs[1], &short(3), 1).unwrap();
    let t = ParamTables::from_tags(text, &f.obs[1], &r.modal_tags, r.theta, r.phi).unwrap();
    let dir = std::env::temp_dir().join(format!("multitag-tables-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    t.write_dir(&dir).unwrap();
    let back = ParamTables::read_dir(&dir, &text.language.id).unwrap();
    std::fs::remove_dir_all(&dir).unwrap();
    assert_eq!(t, back);
}

#[test]
fn supervised_unknown_words_follow_transitions() {
    let raw = "the\tA\ndog\tN\nruns\tV\n\nthe\tA\ncat\tN\nsleeps\tV\n\nthe\tA\nbird\tN\nsings\tV\n\nthe\tA\nzebra\tN\nwalks\tV\n\n";
    let t = toy_text("xx", raw);
    let corpus = TaggedCorpus::new(vec![t]).unwrap().split_train_test(0.75).unwrap();
    let lexicon = build_lexicon(&corpus, LexiconMode::TopFrequent(1)).unwrap();
    let obs = LanguageObs::build(corpus.text(0), lexicon.language(0), corpus.train_range());
    let tables = ParamTables::supervised(corpus.text(0), &obs, SUPERVISED_PSEUDO_COUNT).unwrap();
    let pred = tables
        .decode(corpus.text(0), corpus.test_range(), lexicon.language(0), Parallelism::Sequential)
        .unwrap();
    assert_eq!(pred, vec![vec![0, 1, 2]]);
}
