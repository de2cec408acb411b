//! Exact second-order Viterbi decoding restricted to permitted tags.

use crate::error::{Error, Result};
use crate::tags::TagId;

/// Most probable tag sequence for one sentence.
///
/// `log_trans(c1, c2, o)` is the log transition probability, where context
/// symbol `num_tags` is the start pad and outcome `num_tags` the end state.
/// `candidates[i]` lists the permitted tags at position `i` with their log
/// emission probabilities. Ties go to the lower tag id.
pub fn viterbi(
    num_tags: usize,
    log_trans: impl Fn(usize, usize, usize) -> f64,
    candidates: &[Vec<(TagId, f64)>],
    sentence: usize,
) -> Result<(Vec<TagId>, f64)> {
    let n = candidates.len();
    if n == 0 {
        return Ok((Vec::new(), log_trans(num_tags, num_tags, num_tags)));
    }
    if let Some(position) = candidates.iter().position(Vec::is_empty) {
        return Err(Error::EmptySupport { sentence, position });
    }
    let start = num_tags;
    // candidate lists sorted by tag id so strict comparisons pick lower ids
    let cands: Vec<Vec<(usize, f64)>> = candidates
        .iter()
        .map(|c| {
            let mut c: Vec<(usize, f64)> = c.iter().map(|&(t, e)| (t as usize, e)).collect();
            c.sort_by_key(|&(t, _)| t);
            c
        })
        .collect();
    let prev_syms = |i: usize| -> Vec<usize> {
        if i == 0 {
            vec![start]
        } else {
            cands[i - 1].iter().map(|&(t, _)| t).collect()
        }
    };

    // delta[i][a * len(i) + b]: best score with position i-1 at prev index a
    // and position i at candidate index b
    let mut delta: Vec<Vec<f64>> = Vec::with_capacity(n);
    let mut back: Vec<Vec<usize>> = Vec::with_capacity(n);
    {
        let row: Vec<f64> = cands[0]
            .iter()
            .map(|&(b, e)| log_trans(start, start, b) + e)
            .collect();
        delta.push(row);
        back.push(vec![0; cands[0].len()]);
    }
    for i in 1..n {
        let pp = prev_syms(i - 1);
        let pa = prev_syms(i);
        let cur = &cands[i];
        let prev_len = pa.len();
        let mut row = vec![f64::NEG_INFINITY; prev_len * cur.len()];
        let mut bp = vec![0usize; prev_len * cur.len()];
        for (ai, &a) in pa.iter().enumerate() {
            for (bi, &(b, e)) in cur.iter().enumerate() {
                let mut best = f64::NEG_INFINITY;
                let mut arg = 0;
                for (zi, &z) in pp.iter().enumerate() {
                    let s = delta[i - 1][zi * prev_len + ai] + log_trans(z, a, b);
                    if s > best {
                        best = s;
                        arg = zi;
                    }
                }
                row[ai * cur.len() + bi] = best + e;
                bp[ai * cur.len() + bi] = arg;
            }
        }
        delta.push(row);
        back.push(bp);
    }

    let pa = prev_syms(n - 1);
    let cur = &cands[n - 1];
    let mut best = f64::NEG_INFINITY;
    let mut arg = (0, 0);
    for (ai, &a) in pa.iter().enumerate() {
        for (bi, &(b, _)) in cur.iter().enumerate() {
            let s = delta[n - 1][ai * cur.len() + bi] + log_trans(a, b, num_tags);
            if s > best {
                best = s;
                arg = (ai, bi);
            }
        }
    }
    if best == f64::NEG_INFINITY {
        // every path has zero probability; fall back to the first candidates
        return Ok((cands.iter().map(|c| c[0].0 as TagId).collect(), best));
    }
    let mut idx = vec![0usize; n];
    let (mut a, mut b) = arg;
    for i in (0..n).rev() {
        idx[i] = b;
        if i == 0 {
            break;
        }
        let z = back[i][a * cands[i].len() + b];
        b = a;
        a = z;
    }
    let tags = idx
        .iter()
        .enumerate()
        .map(|(i, &k)| cands[i][k].0 as TagId)
        .collect();
    Ok((tags, best))
}

/// Log joint probability of one tag sequence under the same model.
pub fn sequence_log_prob(
    num_tags: usize,
    log_trans: impl Fn(usize, usize, usize) -> f64,
    candidates: &[Vec<(TagId, f64)>],
    tags: &[TagId],
) -> f64 {
    let sym = |k: isize| if k < 0 { num_tags } else { tags[k as usize] as usize };
    let mut lp = 0.0;
    for (i, &t) in tags.iter().enumerate() {
        let e = candidates[i]
            .iter()
            .find(|&&(c, _)| c == t)
            .map_or(f64::NEG_INFINITY, |&(_, e)| e);
        lp += e + log_trans(sym(i as isize - 2), sym(i as isize - 1), t as usize);
    }
    let n = tags.len() as isize;
    lp + log_trans(sym(n - 2), sym(n - 1), num_tags)
}
