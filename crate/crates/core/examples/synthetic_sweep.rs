//! Compares the three models on synthetic corpora across seeds.
//!
//! Settings come from environment variables (`CONFUSION`, `ZIPF`, `NOISE`,
//! `CONC`, `DENSITY`, `SENTENCES`, `TOP`, `SEEDS`, `EPOCHS`, `LATENT_EPOCHS`).

use std::time::Instant;

use multitag::lexicon::{build_lexicon, LexiconMode};
use multitag::par::Parallelism;
use multitag::pipeline::{run_model, ModelKind, PairwiseAlignments, RunSpec};
use multitag::synthetic::{generate, SyntheticConfig};

fn env<T: std::str::FromStr>(name: &str, default: T) -> T {
    std::env::var(name).ok().and_then(|v| v.parse().ok()).unwrap_or(default)
}

fn main() -> multitag::Result<()> {
    let mut cfg = SyntheticConfig::default();
    cfg.confusion = env("CONFUSION", cfg.confusion);
    cfg.anchor_mass = env("ANCHOR", cfg.anchor_mass);
    cfg.zipf = env("ZIPF", cfg.zipf);
    cfg.tag_noise = env("NOISE", cfg.tag_noise);
    cfg.transition_concentration = env("CONC", cfg.transition_concentration);
    cfg.alignment_density = env("DENSITY", cfg.alignment_density);
    cfg.sentences = env("SENTENCES", cfg.sentences);
    cfg.seed = env("GEN_SEED", cfg.seed);
    let top: usize = env("TOP", 20);
    let seeds: u64 = env("SEEDS", 5);
    let epochs: usize = env("EPOCHS", 200);
    let latent_epochs: usize = env("LATENT_EPOCHS", 1000);

    let synth = generate(&cfg)?;
    let corpus = synth.corpus.split_train_test(0.75)?;
    let lexicon = build_lexicon(&corpus, LexiconMode::TopFrequent(top))?;
    let mut aligns = PairwiseAlignments::new();
    aligns.insert((0, 1), synth.alignments);
    let par = Parallelism::default();

    let mut sums = [0.0f64; 3];
    for seed in 0..seeds {
        let started = Instant::now();
        let mut row = Vec::new();
        for (k, model) in [ModelKind::Mono, ModelKind::Merged, ModelKind::Latent].into_iter().enumerate() {
            let langs = if model == ModelKind::Mono { vec![0] } else { vec![0, 1] };
            let mut accs = Vec::new();
            let runs: Vec<Vec<usize>> = if model == ModelKind::Mono { vec![vec![0], vec![1]] } else { vec![langs] };
            for langs in runs {
                let mut spec = RunSpec::new(model, langs, seed);
                spec.mono.epochs = epochs;
                spec.joint.epochs = if model == ModelKind::Latent { latent_epochs } else { epochs };
                let out = run_model(&corpus, &lexicon, &aligns, &spec, par)?;
                accs.extend(out.accuracies.iter().map(|a| a.unwrap_or(f64::NAN)));
            }
            let mean = accs.iter().sum::<f64>() / accs.len() as f64;
            sums[k] += mean;
            row.push(format!("{}={:.4} {:?}", model, mean, accs.iter().map(|a| format!("{a:.3}")).collect::<Vec<_>>()));
        }
        println!("seed {seed}: {}  ({:.1}s)", row.join("  "), started.elapsed().as_secs_f64());
    }
    let n = seeds as f64;
    println!("mean mono {:.4} merged {:.4} latent {:.4}", sums[0] / n, sums[1] / n, sums[2] / n);
    Ok(())
}
