//! Implementation of the subcommands.

use std::collections::BTreeMap;
use std::path::Path;
use std::time::Instant;

use multitag::alignments::{
    alignment_density, coverage_stats, intersect_directional, parse_alignment_file, write_alignment_file,
    write_sets_file, BilingualAlignment, Edge,
};
use multitag::corpus::{
    load_corpus, parse_language, write_language, write_sentences, CorpusFormat, LanguageSource, LanguageText, Split,
    TaggedCorpus, TagsetSource,
};
use multitag::eval::{accuracy, format_metrics, parse_metrics, report as table_report, sign_test, vote as majority_vote, MetricsRecord};
use multitag::latent::LatentParams;
use multitag::lexicon::{build_lexicon, mean_ambiguity, LanguageLexicon, Lexicon};
use multitag::mono::SamplerConfig;
use multitag::par::Parallelism;
use multitag::params::ParamTables;
use multitag::pipeline::{alignment_sets_for, run_model, ModelKind, PairwiseAlignments, RunOutput, RunSpec};
use multitag::synthetic::{generate, SyntheticConfig};
use multitag::tags::{TagId, Tagset};

use crate::config::RunConfig;
use crate::layout::{self, read, write};
use crate::CliError;

fn parallelism(cfg: &RunConfig) -> Parallelism {
    if cfg.sequential {
        Parallelism::Sequential
    } else {
        Parallelism::Parallel
    }
}

fn sorted(langs: &[String]) -> Vec<String> {
    let mut l = langs.to_vec();
    l.sort();
    l
}

fn io_err(path: &Path, e: std::io::Error) -> CliError {
    CliError::Io(format!("{}: {e}", path.display()))
}

pub fn synth(cfg: &RunConfig, sentences: usize, seed: u64) -> Result<(), CliError> {
    let synth = generate(&SyntheticConfig {
        sentences,
        seed,
        ..SyntheticConfig::default()
    })?;
    let ids = synth.corpus.language_ids();
    for (l, id) in ids.iter().enumerate() {
        write(&cfg.corpus_dir.join(format!("{id}.txt")), &write_language(synth.corpus.text(l)))?;
    }
    let (fwd, rev) = layout::directional_files(&cfg.align_dir, ids[0], ids[1]);
    let edges: Vec<(usize, Vec<Edge>)> = synth.alignments.iter().map(|a| (a.sentence, a.edges().to_vec())).collect();
    let back: Vec<(usize, Vec<Edge>)> = synth
        .alignments
        .iter()
        .map(|a| (a.sentence, a.transposed().edges().to_vec()))
        .collect();
    write(&fwd, &write_alignment_file(edges.iter().map(|(s, e)| (*s, e.as_slice()))))?;
    write(&rev, &write_alignment_file(back.iter().map(|(s, e)| (*s, e.as_slice()))))?;
    println!("wrote {} sentences for {} to {}", sentences, ids.join(","), cfg.corpus_dir.display());
    Ok(())
}

fn corpus_languages(cfg: &RunConfig) -> Result<Vec<String>, CliError> {
    if !cfg.languages.is_empty() {
        return Ok(sorted(&cfg.languages));
    }
    let dir = &cfg.corpus_dir;
    let mut langs = Vec::new();
    for entry in std::fs::read_dir(dir).map_err(|e| io_err(dir, e))? {
        let path = entry.map_err(|e| io_err(dir, e))?.path();
        if path.extension().is_some_and(|x| x == "txt") {
            if let Some(stem) = path.file_stem().and_then(|s| s.to_str()) {
                langs.push(stem.to_string());
            }
        }
    }
    langs.sort();
    if langs.is_empty() {
        return Err(CliError::Invalid(format!("no *.txt corpus files in {}", dir.display())));
    }
    Ok(langs)
}

pub fn prepare(cfg: &RunConfig) -> Result<(), CliError> {
    let mode = cfg.lexicon_mode()?;
    if !(cfg.train_fraction > 0.0 && cfg.train_fraction <= 1.0) {
        return Err(CliError::Invalid(format!("train_fraction {} outside (0, 1]", cfg.train_fraction)));
    }
    let langs = corpus_languages(cfg)?;
    let source = match cfg.tagset.as_str() {
        "infer" => TagsetSource::Infer,
        "multext-east" => TagsetSource::MultextEast,
        other => return Err(CliError::Invalid(format!("unknown tagset source `{other}`"))),
    };
    let sources: Vec<LanguageSource> = langs
        .iter()
        .map(|id| LanguageSource {
            id: id.clone(),
            path: cfg.corpus_dir.join(format!("{id}.txt")),
            tagset: source.clone(),
        })
        .collect();
    let format = CorpusFormat {
        tag_column: cfg.tag_column,
        msd_first_letter: cfg.msd_first_letter,
    };
    let mut corpus = load_corpus(&sources, &format)?.split_train_test(cfg.train_fraction)?;
    if cfg.halve_training {
        corpus = corpus.halve_training_data();
    }
    let lexicon = build_lexicon(&corpus, mode)?;
    let work = &cfg.work_dir;
    let split = corpus.split();
    write(
        &layout::split_file(work),
        &format!("train\t{}\t{}\ntest\t{}\t{}\n", split.train.start, split.train.end, split.test.start, split.test.end),
    )?;
    let mut stats = String::from("language\tsentences\ttokens\ttrain_sentences\tlexicon_entries\tmean_ambiguity\n");
    for (l, text) in corpus.texts().iter().enumerate() {
        let id = &text.language.id;
        write(&layout::corpus_file(work, id), &write_language(text))?;
        let mut symbols = text.language.tagset.symbols().join("\n");
        symbols.push('\n');
        write(&layout::tags_file(work, id), &symbols)?;
        let lex = lexicon.language(l);
        write(&layout::lexicon_file(work, mode, id), &lex.to_file_string())?;
        stats.push_str(&format!(
            "{id}\t{}\t{}\t{}\t{}\t{:.4}\n",
            text.sentences.len(),
            text.token_count(),
            split.train.len(),
            lex.len(),
            mean_ambiguity(text, lex)
        ));
    }
    write(&work.join("corpus").join("stats.tsv"), &stats)?;
    print!("{stats}");
    Ok(())
}

fn parse_range(field: &str, path: &Path, line: usize) -> Result<usize, CliError> {
    field
        .parse()
        .map_err(|_| CliError::Invalid(format!("{}:{line}: bad index `{field}`", path.display())))
}

fn read_split(work: &Path) -> Result<Split, CliError> {
    let path = layout::split_file(work);
    let raw = read(&path)?;
    let mut ranges = BTreeMap::new();
    for (n, line) in raw.lines().enumerate() {
        let f: Vec<&str> = line.split('\t').collect();
        if f.len() != 3 {
            return Err(CliError::Invalid(format!("{}:{}: expected name<TAB>start<TAB>end", path.display(), n + 1)));
        }
        ranges.insert(f[0].to_string(), parse_range(f[1], &path, n + 1)?..parse_range(f[2], &path, n + 1)?);
    }
    match (ranges.remove("train"), ranges.remove("test")) {
        (Some(train), Some(test)) => Ok(Split { train, test }),
        _ => Err(CliError::Invalid(format!("{}: missing train or test range", path.display()))),
    }
}

fn read_tagset(work: &Path, lang: &str) -> Result<Tagset, CliError> {
    let raw = read(&layout::tags_file(work, lang))?;
    Ok(Tagset::new(raw.lines().filter(|l| !l.is_empty()))?)
}

/// Prepared corpus restricted to `langs` (ids in sorted order).
fn load_prepared_corpus(cfg: &RunConfig, langs: &[String]) -> Result<TaggedCorpus, CliError> {
    let work = &cfg.work_dir;
    let mut texts = Vec::with_capacity(langs.len());
    for id in langs {
        let tagset = read_tagset(work, id)?;
        let path = layout::corpus_file(work, id);
        let raw = read(&path)?;
        texts.push(parse_language(
            id,
            &raw,
            &path.display().to_string(),
            &TagsetSource::Explicit(tagset),
            &CorpusFormat::default(),
        )?);
    }
    Ok(TaggedCorpus::new(texts)?.with_split(read_split(work)?)?)
}

/// Prepared corpus and the lexicon of the configured mode.
fn load_prepared(cfg: &RunConfig, langs: &[String]) -> Result<(TaggedCorpus, Lexicon), CliError> {
    let corpus = load_prepared_corpus(cfg, langs)?;
    let mode = cfg.lexicon_mode()?;
    let mut lexicons = Vec::with_capacity(langs.len());
    for text in corpus.texts() {
        let id = &text.language.id;
        let path = layout::lexicon_file(&cfg.work_dir, mode, id);
        let raw = read(&path)?;
        lexicons.push(LanguageLexicon::parse(id, text.language.tagset.clone(), &raw, &path.display().to_string())?);
    }
    Ok((corpus, Lexicon::from_languages(mode, lexicons)))
}

fn prepared_languages(work: &Path) -> Result<Vec<String>, CliError> {
    let dir = work.join("corpus");
    let mut langs = Vec::new();
    for entry in std::fs::read_dir(&dir).map_err(|e| io_err(&dir, e))? {
        let path = entry.map_err(|e| io_err(&dir, e))?.path();
        if path.extension().is_some_and(|x| x == "tags") {
            if let Some(stem) = path.file_stem().and_then(|s| s.to_str()) {
                langs.push(stem.to_string());
            }
        }
    }
    langs.sort();
    Ok(langs)
}

fn by_sentence(path: &Path, n: usize) -> Result<Vec<Vec<Edge>>, CliError> {
    let raw = read(path)?;
    let mut out = vec![Vec::new(); n];
    for d in parse_alignment_file(&raw, &path.display().to_string())? {
        if d.sentence >= n {
            return Err(CliError::Invalid(format!(
                "{}: sentence {} out of range ({n} sentences)",
                path.display(),
                d.sentence
            )));
        }
        out[d.sentence].extend(d.links);
    }
    Ok(out)
}

pub fn align_sets(cfg: &RunConfig) -> Result<(), CliError> {
    let langs = if cfg.languages.is_empty() {
        prepared_languages(&cfg.work_dir)?
    } else {
        sorted(&cfg.languages)
    };
    if langs.len() < 2 {
        return Err(CliError::Invalid("align-sets needs at least 2 languages".into()));
    }
    let corpus = load_prepared_corpus(cfg, &langs)?;
    let n = corpus.num_sentences();
    let mut pairwise = PairwiseAlignments::new();
    for a in 0..langs.len() {
        for b in a + 1..langs.len() {
            let (fwd, rev) = layout::directional_files(&cfg.align_dir, &langs[a], &langs[b]);
            let alignments: Vec<BilingualAlignment> = match (fwd.exists(), rev.exists()) {
                (false, false) => {
                    eprintln!("warning: no alignments for {}-{}", langs[a], langs[b]);
                    (0..n).map(|s| BilingualAlignment::new(s, Vec::new())).collect::<Result<_, _>>()?
                }
                _ => {
                    let f = by_sentence(&fwd, n)?;
                    let r = by_sentence(&rev, n)?;
                    (0..n)
                        .map(|s| {
                            intersect_directional(
                                s,
                                &f[s],
                                &r[s],
                                corpus.text(a).sentences[s].len(),
                                corpus.text(b).sentences[s].len(),
                            )
                        })
                        .collect::<Result<_, _>>()?
                }
            };
            let (da, db) = alignment_density(&corpus, a, b, &alignments);
            println!("density\t{}\t{}\t{da:.4}\t{db:.4}", langs[a], langs[b]);
            write(
                &layout::alignment_file(&cfg.work_dir, &langs[a], &langs[b]),
                &write_alignment_file(alignments.iter().map(|al| (al.sentence, al.edges()))),
            )?;
            pairwise.insert((a, b), alignments);
        }
    }
    let indices: Vec<usize> = (0..langs.len()).collect();
    let sets = alignment_sets_for(n, &indices, &pairwise, parallelism(cfg));
    let ids: Vec<&str> = langs.iter().map(String::as_str).collect();
    let sets_path = layout::sets_file(&cfg.work_dir, &langs);
    write(&sets_path, &write_sets_file(&sets, &ids))?;
    let total: usize = corpus.texts().iter().map(LanguageText::token_count).sum();
    let coverage = coverage_stats(&sets, total).report();
    write(&sets_path.with_extension("coverage"), &coverage)?;
    print!("{coverage}");
    Ok(())
}

/// Symmetrized alignments of every pair of the corpus languages.
fn load_alignments(cfg: &RunConfig, corpus: &TaggedCorpus) -> Result<PairwiseAlignments, CliError> {
    let ids = corpus.language_ids();
    let mut out = PairwiseAlignments::new();
    for a in 0..ids.len() {
        for b in a + 1..ids.len() {
            let path = layout::alignment_file(&cfg.work_dir, ids[a], ids[b]);
            if !path.exists() {
                return Err(CliError::Io(format!("{}: not found (run align-sets first)", path.display())));
            }
            let raw = read(&path)?;
            let list = parse_alignment_file(&raw, &path.display().to_string())?
                .into_iter()
                .map(|d| BilingualAlignment::new(d.sentence, d.links))
                .collect::<Result<Vec<_>, _>>()?;
            out.insert((a, b), list);
        }
    }
    Ok(out)
}

fn run_spec(cfg: &RunConfig, model: ModelKind, langs: &[String], seed: u64) -> Result<RunSpec, CliError> {
    let mut spec = RunSpec::new(model, (0..langs.len()).collect(), seed);
    let base = SamplerConfig {
        theta0: cfg.theta0,
        phi0: cfg.phi0,
        resample_hyperparameters: cfg.resample_hyperparameters,
        ..SamplerConfig::mono()
    };
    spec.mono = SamplerConfig {
        epochs: if model == ModelKind::Mono { cfg.epochs_for(model) } else { 200 },
        ..base.clone()
    };
    spec.joint = SamplerConfig {
        epochs: cfg.epochs_for(model),
        modal_window: if model == ModelKind::Latent { 100 } else { 0 },
        ..base
    };
    spec.omega0 = cfg.omega0;
    spec.latent = LatentParams {
        alpha: cfg.alpha,
        psi0: cfg.psi0,
        denominator: cfg.denominator()?,
    };
    spec.supervised = langs.iter().map(|l| cfg.supervised_languages.contains(l)).collect();
    Ok(spec)
}

fn metrics_rows(
    model: ModelKind,
    langs: &[String],
    lexicon: &str,
    seed: u64,
    epochs: usize,
    out: &RunOutput,
) -> Vec<MetricsRecord> {
    let active = out.latent.as_ref().map(|r| r.final_active());
    langs
        .iter()
        .zip(&out.accuracies)
        .filter_map(|(lang, acc)| {
            acc.map(|accuracy| MetricsRecord {
                model: model.name().to_string(),
                languages: langs.to_vec(),
                lexicon: lexicon.to_string(),
                seed,
                language: lang.clone(),
                accuracy,
                epochs,
                active_values: active,
            })
        })
        .collect()
}

pub fn train(cfg: &RunConfig) -> Result<(), CliError> {
    cfg.validate()?;
    let model = cfg.model_kind()?;
    let mode = cfg.lexicon_mode()?;
    let langs = sorted(&cfg.languages);
    let (corpus, lexicon) = load_prepared(cfg, &langs)?;
    if corpus.train_range().is_empty() {
        return Err(CliError::Invalid("empty training split".into()));
    }
    let alignments = match model {
        ModelKind::Merged | ModelKind::Latent => load_alignments(cfg, &corpus)?,
        _ => PairwiseAlignments::new(),
    };
    let seeds = cfg.seeds_for(model);
    let specs = seeds
        .iter()
        .map(|&s| run_spec(cfg, model, &langs, s))
        .collect::<Result<Vec<_>, _>>()?;
    let par = parallelism(cfg);
    let results = par.install(cfg.workers, || {
        par.map(&specs, |spec| {
            let started = Instant::now();
            let out = run_model(&corpus, &lexicon, &alignments, spec, par);
            (out, started.elapsed().as_secs_f64())
        })
    });
    let name = layout::model_run_name(model, &langs, mode);
    let work = &cfg.work_dir;
    let mut rows = Vec::new();
    let mut runtime = String::from("seed\tseconds\tmh_acceptance\n");
    let tagsets: Vec<(&str, &Tagset)> = corpus
        .texts()
        .iter()
        .map(|t| (t.language.id.as_str(), &t.language.tagset))
        .collect();
    for (spec, (out, secs)) in specs.iter().zip(results) {
        let out = out?;
        let dir = layout::seed_dir(work, &name, spec.seed);
        for t in &out.tables {
            t.write_dir(&dir)?;
        }
        if let Some(cp) = &out.checkpoint {
            write(&dir.join("checkpoint.json"), &cp.to_json()?)?;
        }
        if let Some(lat) = &out.latent {
            write(&dir.join("superlingual.txt"), &lat.superlingual_report(&tagsets))?;
            let mut hist = String::from("epoch\tactive_values\n");
            for (e, k) in lat.active_history.iter().enumerate() {
                hist.push_str(&format!("{}\t{k}\n", e + 1));
            }
            write(&dir.join("active_values.tsv"), &hist)?;
        }
        runtime.push_str(&format!("{}\t{secs:.3}\t{:.4}\n", spec.seed, out.acceptance.rate()));
        rows.extend(metrics_rows(model, &langs, &mode.to_string(), spec.seed, spec.epochs(), &out));
    }
    if rows.is_empty() {
        eprintln!("warning: test split is empty or unannotated, no metrics written");
    }
    let metrics = format_metrics(&rows);
    write(&layout::run_dir(work, &name).join("metrics.tsv"), &metrics)?;
    write(&layout::run_dir(work, &name).join("runtime.tsv"), &runtime)?;
    print!("{metrics}");
    Ok(())
}

fn run_seeds(cfg: &RunConfig, name: &str) -> Result<Vec<u64>, CliError> {
    let dir = layout::run_dir(&cfg.work_dir, name);
    if !dir.exists() {
        return Err(CliError::Io(format!("{}: not found (run train first)", dir.display())));
    }
    let mut seeds = Vec::new();
    for entry in std::fs::read_dir(&dir).map_err(|e| io_err(&dir, e))? {
        let entry = entry.map_err(|e| io_err(&dir, e))?;
        if let Some(s) = entry.file_name().to_str().and_then(|n| n.strip_prefix("seed")).and_then(|n| n.parse().ok()) {
            seeds.push(s);
        }
    }
    seeds.sort_unstable();
    Ok(seeds)
}

fn predictions_file(cfg: &RunConfig, name: &str, seed: u64, lang: &str) -> std::path::PathBuf {
    layout::seed_dir(&cfg.work_dir, name, seed).join(format!("{lang}.test.txt"))
}

pub fn tag(cfg: &RunConfig) -> Result<(), CliError> {
    cfg.validate()?;
    let model = cfg.model_kind()?;
    let mode = cfg.lexicon_mode()?;
    let langs = sorted(&cfg.languages);
    let (corpus, lexicon) = load_prepared(cfg, &langs)?;
    let name = layout::model_run_name(model, &langs, mode);
    let test = corpus.test_range();
    let par = parallelism(cfg);
    for seed in run_seeds(cfg, &name)? {
        let dir = layout::seed_dir(&cfg.work_dir, &name, seed);
        for (l, id) in langs.iter().enumerate() {
            let tables = ParamTables::read_dir(&dir, id)?;
            let text = corpus.text(l);
            let pred = tables.decode(text, test.clone(), lexicon.language(l), par)?;
            let body = write_sentences(
                text,
                text.sentences[test.clone()].iter().zip(&pred).map(|(s, p)| (s, Some(p.as_slice()))),
            );
            write(&predictions_file(cfg, &name, seed, id), &body)?;
        }
        println!("tagged {name} seed {seed}");
    }
    Ok(())
}

/// Predicted tags of a tagged test file, checked against the gold tokens.
fn read_predictions(path: &Path, gold_text: &LanguageText, range: std::ops::Range<usize>) -> Result<Vec<Vec<TagId>>, CliError> {
    if !path.exists() {
        return Err(CliError::Invalid(format!("{}: missing (run tag first)", path.display())));
    }
    let raw = read(path)?;
    let text = parse_language(
        &gold_text.language.id,
        &raw,
        &path.display().to_string(),
        &TagsetSource::Explicit(gold_text.language.tagset.clone()),
        &CorpusFormat::default(),
    )?;
    let gold = &gold_text.sentences[range];
    if text.sentences.len() != gold.len() {
        return Err(CliError::Invalid(format!(
            "{}: {} sentences, expected {}",
            path.display(),
            text.sentences.len(),
            gold.len()
        )));
    }
    let mut out = Vec::with_capacity(gold.len());
    for (k, (p, g)) in text.sentences.iter().zip(gold).enumerate() {
        let same = p.len() == g.len() && p.iter().zip(g).all(|(a, b)| text.surface(a) == gold_text.surface(b));
        if !same {
            return Err(CliError::Invalid(format!("{}: sentence {k} does not match the test split", path.display())));
        }
        let tags = p
            .iter()
            .map(|t| t.gold)
            .collect::<Option<Vec<_>>>()
            .ok_or_else(|| CliError::Invalid(format!("{}: sentence {k} has untagged tokens", path.display())))?;
        out.push(tags);
    }
    Ok(out)
}

fn gold_test(corpus: &TaggedCorpus, l: usize) -> Result<Vec<Vec<TagId>>, CliError> {
    let text = corpus.text(l);
    text.gold_tags(corpus.test_range())
        .ok_or_else(|| CliError::Invalid(format!("test split of `{}` has no gold tags", text.language.id)))
}

pub fn eval(cfg: &RunConfig) -> Result<(), CliError> {
    cfg.validate()?;
    let model = cfg.model_kind()?;
    let mode = cfg.lexicon_mode()?;
    let langs = sorted(&cfg.languages);
    let corpus = load_prepared_corpus(cfg, &langs)?;
    let name = layout::model_run_name(model, &langs, mode);
    let trained = read_metrics(&layout::run_dir(&cfg.work_dir, &name).join("metrics.tsv")).unwrap_or_default();
    let mut rows = Vec::new();
    for seed in run_seeds(cfg, &name)? {
        for (l, id) in langs.iter().enumerate() {
            let pred = read_predictions(&predictions_file(cfg, &name, seed, id), corpus.text(l), corpus.test_range())?;
            let gold = gold_test(&corpus, l)?;
            let acc = accuracy(&pred, &gold, corpus.text(l).language.tagset.punct())?;
            let prior = trained.iter().find(|r| r.seed == seed && r.language == *id);
            rows.push(MetricsRecord {
                model: model.name().to_string(),
                languages: langs.clone(),
                lexicon: mode.to_string(),
                seed,
                language: id.clone(),
                accuracy: acc,
                epochs: prior.map_or(cfg.epochs_for(model), |r| r.epochs),
                active_values: prior.and_then(|r| r.active_values),
            });
        }
    }
    let body = format_metrics(&rows);
    write(&layout::run_dir(&cfg.work_dir, &name).join("eval.tsv"), &body)?;
    print!("{body}");
    print!("{}", table_report(&rows));
    Ok(())
}

fn read_metrics(path: &Path) -> Result<Vec<MetricsRecord>, CliError> {
    let raw = read(path)?;
    Ok(parse_metrics(&raw, &path.display().to_string())?)
}

pub fn vote(cfg: &RunConfig, target: &str) -> Result<(), CliError> {
    let mode = cfg.lexicon_mode()?;
    let langs = sorted(&cfg.languages);
    if !langs.iter().any(|l| l == target) {
        return Err(CliError::Invalid(format!("vote target `{target}` is not in `languages`")));
    }
    let partners: Vec<&String> = langs.iter().filter(|l| *l != target).collect();
    if partners.is_empty() {
        return Err(CliError::Invalid("voting needs at least one partner language".into()));
    }
    let corpus = load_prepared_corpus(cfg, &[target.to_string()])?;
    let gold = gold_test(&corpus, 0)?;
    let punct = corpus.text(0).language.tagset.punct();
    let mut rows = Vec::new();
    for seed in cfg.seeds_for(ModelKind::Merged) {
        let mut preds = Vec::with_capacity(partners.len());
        for p in &partners {
            let name = layout::run_name("merged", &sorted(&[target.to_string(), (*p).clone()]), mode);
            let path = predictions_file(cfg, &name, seed, target);
            if !path.exists() {
                return Err(CliError::Invalid(format!(
                    "missing partner run {name} seed {seed}: voting needs all {} partner runs",
                    partners.len()
                )));
            }
            preds.push(read_predictions(&path, corpus.text(0), corpus.test_range())?);
        }
        let refs: Vec<&[Vec<TagId>]> = preds.iter().map(Vec::as_slice).collect();
        let voted = majority_vote(&refs)?;
        rows.push(MetricsRecord {
            model: "merged-vote".into(),
            languages: langs.clone(),
            lexicon: mode.to_string(),
            seed,
            language: target.to_string(),
            accuracy: accuracy(&voted, &gold, punct)?,
            epochs: cfg.epochs_for(ModelKind::Merged),
            active_values: None,
        });
    }
    let body = format_metrics(&rows);
    let name = layout::run_name("merged-vote", &[target.to_string()], mode);
    write(&layout::run_dir(&cfg.work_dir, &name).join("metrics.tsv"), &body)?;
    print!("{body}");
    Ok(())
}

pub fn compare(cfg: &RunConfig, run_a: &str, run_b: &str, lang: &str) -> Result<(), CliError> {
    let corpus = load_prepared_corpus(cfg, &[lang.to_string()])?;
    let gold = gold_test(&corpus, 0)?;
    let punct = corpus.text(0).language.tagset.punct();
    let seeds_b = run_seeds(cfg, run_b)?;
    let seeds: Vec<u64> = run_seeds(cfg, run_a)?.into_iter().filter(|s| seeds_b.contains(s)).collect();
    if seeds.is_empty() {
        return Err(CliError::Invalid(format!("runs {run_a} and {run_b} share no seeds")));
    }
    let (mut pa, mut pb, mut g) = (Vec::new(), Vec::new(), Vec::new());
    for &seed in &seeds {
        pa.extend(read_predictions(&predictions_file(cfg, run_a, seed, lang), corpus.text(0), corpus.test_range())?);
        pb.extend(read_predictions(&predictions_file(cfg, run_b, seed, lang), corpus.text(0), corpus.test_range())?);
        g.extend(gold.iter().cloned());
    }
    let p = sign_test(&pa, &pb, &g, punct)?;
    let line = format!("run_a\trun_b\tlanguage\tseeds\tsign_test_p\n{run_a}\t{run_b}\t{lang}\t{}\t{p}\n", seeds.len());
    write(&cfg.work_dir.join("signtests").join(format!("{run_a}__{run_b}__{lang}.tsv")), &line)?;
    print!("{line}");
    Ok(())
}

pub fn report(cfg: &RunConfig) -> Result<(), CliError> {
    let runs = cfg.work_dir.join("runs");
    let mut files = Vec::new();
    if runs.exists() {
        for entry in std::fs::read_dir(&runs).map_err(|e| io_err(&runs, e))? {
            let path = entry.map_err(|e| io_err(&runs, e))?.path().join("metrics.tsv");
            if path.exists() {
                files.push(path);
            }
        }
    }
    files.sort();
    let mut rows = Vec::new();
    for f in &files {
        rows.extend(read_metrics(f)?);
    }
    if rows.is_empty() {
        return Err(CliError::Invalid(format!("no metrics under {}", runs.display())));
    }
    let table = table_report(&rows);
    write(&cfg.work_dir.join("report.txt"), &table)?;
    print!("{table}");
    Ok(())
}
