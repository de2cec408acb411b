//! Scoring, model combination, significance and analysis metrics.

use std::collections::{BTreeMap, HashMap};
use std::fmt::{self, Write as _};
use std::str::FromStr;

use statrs::function::factorial::ln_binomial;

use crate::error::{Error, Result};
use crate::tags::TagId;

fn check_shapes(name: &str, a: &[Vec<TagId>], b: &[Vec<TagId>]) -> Result<()> {
    if a.len() != b.len() {
        return Err(Error::LengthMismatch(format!("{name}: {} vs {} sentences", a.len(), b.len())));
    }
    for (s, (x, y)) in a.iter().zip(b).enumerate() {
        if x.len() != y.len() {
            return Err(Error::LengthMismatch(format!("{name}: sentence {s} has {} vs {} tokens", x.len(), y.len())));
        }
    }
    Ok(())
}

/// Correct and total counts over tokens whose gold tag is not `punct`.
pub fn accuracy_counts(predicted: &[Vec<TagId>], gold: &[Vec<TagId>], punct: TagId) -> Result<(usize, usize)> {
    check_shapes("accuracy", predicted, gold)?;
    let mut correct = 0;
    let mut total = 0;
    for (p, g) in predicted.iter().zip(gold) {
        for (&pt, &gt) in p.iter().zip(g) {
            if gt != punct {
                total += 1;
                correct += (pt == gt) as usize;
            }
        }
    }
    Ok((correct, total))
}

/// Fraction of non-punctuation tokens tagged correctly.
pub fn accuracy(predicted: &[Vec<TagId>], gold: &[Vec<TagId>], punct: TagId) -> Result<f64> {
    let (correct, total) = accuracy_counts(predicted, gold, punct)?;
    if total == 0 {
        return Err(Error::EmptyInput("no non-punctuation tokens to score".into()));
    }
    Ok(correct as f64 / total as f64)
}

/// Per-token plurality over several predictions; ties go to the lowest tag
/// id.
pub fn vote(predictions: &[&[Vec<TagId>]]) -> Result<Vec<Vec<TagId>>> {
    let first = predictions
        .first()
        .ok_or_else(|| Error::EmptyInput("no predictions to vote over".into()))?;
    for p in &predictions[1..] {
        check_shapes("vote", first, p)?;
    }
    let mut tally = [0u32; crate::tags::MAX_TAGS];
    Ok((0..first.len())
        .map(|s| {
            (0..first[s].len())
                .map(|i| {
                    tally.iter_mut().for_each(|c| *c = 0);
                    for p in predictions {
                        tally[p[s][i] as usize] += 1;
                    }
                    let mut best = 0;
                    for (t, &c) in tally.iter().enumerate() {
                        if c > tally[best] {
                            best = t;
                        }
                    }
                    best as TagId
                })
                .collect()
        })
        .collect())
}

/// The partner with the highest accuracy; the first listed wins ties.
pub fn best_pair_oracle<S: AsRef<str>>(pairs: &[(S, f64)]) -> Result<(String, f64)> {
    let mut best: Option<&(S, f64)> = None;
    for p in pairs {
        if best.is_none_or(|b| p.1 > b.1) {
            best = Some(p);
        }
    }
    best.map(|(s, a)| (s.as_ref().to_string(), *a))
        .ok_or_else(|| Error::EmptyInput("no evaluated pairs".into()))
}

/// Exact two-sided binomial sign test, `wins_a` against `wins_b`.
pub fn sign_test_counts(wins_a: u64, wins_b: u64) -> f64 {
    let n = wins_a + wins_b;
    if n == 0 {
        return 1.0;
    }
    let k = wins_a.max(wins_b);
    let ln_half_n = n as f64 * 0.5f64.ln();
    let tail: f64 = (k..=n).map(|j| (ln_binomial(n, j) + ln_half_n).exp()).sum();
    (2.0 * tail).min(1.0)
}

/// Sign test over the non-punctuation tokens where exactly one system is
/// correct. With no such token the p-value is 1.
pub fn sign_test(pred_a: &[Vec<TagId>], pred_b: &[Vec<TagId>], gold: &[Vec<TagId>], punct: TagId) -> Result<f64> {
    check_shapes("sign test", pred_a, gold)?;
    check_shapes("sign test", pred_b, gold)?;
    let (mut wa, mut wb) = (0u64, 0u64);
    for ((a, b), g) in pred_a.iter().zip(pred_b).zip(gold) {
        for ((&x, &y), &t) in a.iter().zip(b).zip(g) {
            if t == punct {
                continue;
            }
            match (x == t, y == t) {
                (true, false) => wa += 1,
                (false, true) => wb += 1,
                _ => {}
            }
        }
    }
    Ok(sign_test_counts(wa, wb))
}

fn entropy_bits(counts: impl IntoIterator<Item = u64>) -> f64 {
    let counts: Vec<u64> = counts.into_iter().filter(|&c| c > 0).collect();
    let n: u64 = counts.iter().sum();
    if n == 0 {
        return 0.0;
    }
    let n = n as f64;
    -counts
        .iter()
        .map(|&c| {
            let p = c as f64 / n;
            p * p.log2()
        })
        .sum::<f64>()
}

/// Conditional entropy in bits of the first element given the second,
/// estimated from observed `(target, partner)` tag pairs.
pub fn conditional_entropy<T: Ord, U: Ord>(pairs: impl IntoIterator<Item = (T, U)>) -> Result<f64> {
    let mut joint: BTreeMap<U, BTreeMap<T, u64>> = BTreeMap::new();
    let mut n = 0u64;
    for (t, u) in pairs {
        *joint.entry(u).or_default().entry(t).or_default() += 1;
        n += 1;
    }
    if n == 0 {
        return Err(Error::EmptyInput("no observations".into()));
    }
    Ok(joint
        .values()
        .map(|row| {
            let m: u64 = row.values().sum();
            m as f64 / n as f64 * entropy_bits(row.values().copied())
        })
        .sum())
}

/// H(T_target | T_partner) over aligned token pairs `(target, partner)`.
pub fn cross_lingual_entropy(pairs: &[(TagId, TagId)]) -> Result<f64> {
    conditional_entropy(pairs.iter().copied()).map_err(|_| Error::EmptyInput("no aligned pairs".into()))
}

/// H(t₃ | t₁, t₂) over the trigrams inside each sentence.
pub fn trigram_entropy(gold: &[Vec<TagId>]) -> Result<f64> {
    let trigrams = gold
        .iter()
        .flat_map(|s| s.windows(3).map(|w| (w[2], (w[0], w[1]))))
        .collect::<Vec<_>>();
    conditional_entropy(trigrams).map_err(|_| Error::EmptyInput("no tag trigrams".into()))
}

/// Ranks with 1 for the highest score; tied scores share their average
/// rank.
pub fn ranks(scores: &[f64]) -> Vec<f64> {
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[b].total_cmp(&scores[a]));
    let mut out = vec![0.0; scores.len()];
    let mut start = 0;
    while start < order.len() {
        let mut end = start + 1;
        while end < order.len() && scores[order[end]] == scores[order[start]] {
            end += 1;
        }
        let avg = (start + 1 + end) as f64 / 2.0;
        for &k in &order[start..end] {
            out[k] = avg;
        }
        start = end;
    }
    out
}

pub fn pearson(x: &[f64], y: &[f64]) -> Result<f64> {
    if x.len() != y.len() {
        return Err(Error::LengthMismatch(format!("{} vs {} items", x.len(), y.len())));
    }
    if x.len() < 2 {
        return Err(Error::EmptyInput("correlation needs at least two items".into()));
    }
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (a, b) in x.iter().zip(y) {
        sxy += (a - mx) * (b - my);
        sxx += (a - mx) * (a - mx);
        syy += (b - my) * (b - my);
    }
    if sxx == 0.0 {
        return Err(Error::ZeroVariance("first ranking"));
    }
    if syy == 0.0 {
        return Err(Error::ZeroVariance("second ranking"));
    }
    Ok((sxy / (sxx * syy).sqrt()).clamp(-1.0, 1.0))
}

/// Pearson coefficient between the rank vectors of two score lists over the
/// same items.
pub fn pearson_rank_correlation(scores_a: &[f64], scores_b: &[f64]) -> Result<f64> {
    pearson(&ranks(scores_a), &ranks(scores_b))
}

/// Header line for [`MetricsRecord`] rows.
pub const METRICS_HEADER: &str = "model\tlanguages\tlexicon\tseed\tlanguage\taccuracy\tepochs\tactive_values";

/// One evaluated language of one training run. Serialized as a tab-separated
/// row with the columns of [`METRICS_HEADER`]; `languages` is the
/// comma-joined language subset of the run and `active_values` is `-` for
/// models without superlingual values.
#[derive(Clone, Debug, PartialEq)]
pub struct MetricsRecord {
    pub model: String,
    pub languages: Vec<String>,
    pub lexicon: String,
    pub seed: u64,
    pub language: String,
    pub accuracy: f64,
    pub epochs: usize,
    pub active_values: Option<usize>,
}

impl fmt::Display for MetricsRecord {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}",
            self.model,
            self.languages.join(","),
            self.lexicon,
            self.seed,
            self.language,
            self.accuracy,
            self.epochs,
            self.active_values.map_or("-".to_string(), |n| n.to_string())
        )
    }
}

impl FromStr for MetricsRecord {
    type Err = String;

    fn from_str(row: &str) -> std::result::Result<Self, String> {
        let f: Vec<&str> = row.split('\t').collect();
        if f.len() != 8 {
            return Err(format!("expected 8 fields, found {}", f.len()));
        }
        let accuracy: f64 = f[5].parse().map_err(|_| format!("bad accuracy `{}`", f[5]))?;
        if !(0.0..=1.0).contains(&accuracy) {
            return Err(format!("accuracy {accuracy} outside [0, 1]"));
        }
        Ok(MetricsRecord {
            model: f[0].to_string(),
            languages: f[1].split(',').map(str::to_string).collect(),
            lexicon: f[2].to_string(),
            seed: f[3].parse().map_err(|_| format!("bad seed `{}`", f[3]))?,
            language: f[4].to_string(),
            accuracy,
            epochs: f[6].parse().map_err(|_| format!("bad epoch count `{}`", f[6]))?,
            active_values: match f[7] {
                "-" => None,
                v => Some(v.parse().map_err(|_| format!("bad value count `{v}`"))?),
            },
        })
    }
}

pub fn parse_metrics(raw: &str, source_name: &str) -> Result<Vec<MetricsRecord>> {
    raw.lines()
        .enumerate()
        .filter(|(_, l)| !l.is_empty() && *l != METRICS_HEADER)
        .map(|(n, l)| l.parse().map_err(|e: String| Error::parse(source_name, n + 1, e)))
        .collect()
}

pub fn format_metrics(records: &[MetricsRecord]) -> String {
    let mut out = String::from(METRICS_HEADER);
    out.push('\n');
    for r in records {
        let _ = writeln!(out, "{r}");
    }
    out
}

fn mean(xs: &[f64]) -> f64 {
    xs.iter().sum::<f64>() / xs.len() as f64
}

/// Collapses per-subset seed accuracies of one language into a cell.
type Summary = Box<dyn Fn(&BTreeMap<String, Vec<f64>>) -> f64>;

/// Aggregates metrics rows into one accuracy table per lexicon mode: a row
/// per model, a column per language plus the average. Bilingual models get
/// two rows: the mean over all partners and the best partner. Cells are
/// percentages averaged over seeds; the last column counts runs.
pub fn report(records: &[MetricsRecord]) -> String {
    let order = |m: &str| match m {
        "supervised" => 0,
        "mono" => 1,
        "merged" => 2,
        "merged-vote" => 3,
        "latent" => 4,
        _ => 5,
    };
    let mut by_lexicon: BTreeMap<&str, Vec<&MetricsRecord>> = BTreeMap::new();
    for r in records {
        by_lexicon.entry(r.lexicon.as_str()).or_default().push(r);
    }
    let mut out = String::new();
    for (lexicon, rows) in by_lexicon {
        let langs: Vec<&str> = {
            let mut l: Vec<&str> = rows.iter().map(|r| r.language.as_str()).collect();
            l.sort_unstable();
            l.dedup();
            l
        };
        let mut models: Vec<&str> = rows.iter().map(|r| r.model.as_str()).collect();
        models.sort_by_key(|m| (order(m), *m));
        models.dedup();
        let _ = writeln!(out, "lexicon: {lexicon}");
        let _ = writeln!(out, "model\t{}\tavg\truns", langs.join("\t"));
        for model in models {
            let mrows: Vec<&&MetricsRecord> = rows.iter().filter(|r| r.model == model).collect();
            // language -> partner subset -> seed accuracies
            let mut cells: HashMap<&str, BTreeMap<String, Vec<f64>>> = HashMap::new();
            for r in &mrows {
                cells
                    .entry(r.language.as_str())
                    .or_default()
                    .entry(r.languages.join(","))
                    .or_default()
                    .push(r.accuracy);
            }
            let mut variants: Vec<(String, Summary)> = Vec::new();
            if model == "merged" {
                variants.push(("merged: average".into(), Box::new(|m| mean(&m.values().map(|v| mean(v)).collect::<Vec<_>>()))));
                variants.push((
                    "merged: best pair".into(),
                    Box::new(|m| m.values().map(|v| mean(v)).fold(f64::NEG_INFINITY, f64::max)),
                ));
            } else {
                variants.push((model.to_string(), Box::new(|m| mean(&m.values().map(|v| mean(v)).collect::<Vec<_>>()))));
            }
            for (name, agg) in variants {
                let mut line = name;
                let mut vals = Vec::new();
                for l in &langs {
                    match cells.get(l) {
                        Some(m) => {
                            let v = agg(m) * 100.0;
                            vals.push(v);
                            let _ = write!(line, "\t{v:.1}");
                        }
                        None => line.push_str("\t-"),
                    }
                }
                let avg = if vals.is_empty() { "-".to_string() } else { format!("{:.1}", mean(&vals)) };
                let _ = writeln!(out, "{line}\t{avg}\t{}", mrows.len());
            }
        }
        out.push('\n');
    }
    out
}
