//! Answer-quality metrics. All take several references and report the best
//! match; all return values in `[0, 1]`.

use std::collections::HashMap;

use crate::text::tokenize;

const MAX_ORDER: usize = 4;

/// Lowercases, strips ASCII punctuation, removes the articles a/an/the and
/// collapses whitespace.
pub fn normalize_answer(s: &str) -> String {
    let lowered = s.to_lowercase();
    let no_punct: String = lowered.chars().filter(|c| !c.is_ascii_punctuation()).collect();
    let mut out = String::with_capacity(no_punct.len());
    let mut word = String::new();
    let flush = |word: &mut String, out: &mut String| {
        if !matches!(word.as_str(), "a" | "an" | "the") {
            out.push_str(word);
        } else {
            out.push(' ');
        }
        word.clear();
    };
    // Articles are whole runs of word characters.
    for c in no_punct.chars() {
        if c.is_alphanumeric() || c == '_' {
            word.push(c);
        } else {
            flush(&mut word, &mut out);
            out.push(c);
        }
    }
    flush(&mut word, &mut out);
    out.split_whitespace().collect::<Vec<_>>().join(" ")
}

/// 1.0 when the normalized prediction equals any normalized gold answer.
pub fn exact_match<S: AsRef<str>>(prediction: &str, gold: &[S]) -> f64 {
    let p = normalize_answer(prediction);
    if gold.iter().any(|g| normalize_answer(g.as_ref()) == p) {
        1.0
    } else {
        0.0
    }
}

fn ngram_counts<'a>(tokens: &'a [&'a str], n: usize) -> HashMap<&'a [&'a str], usize> {
    let mut counts = HashMap::new();
    if tokens.len() >= n {
        for w in tokens.windows(n) {
            *counts.entry(w).or_insert(0) += 1;
        }
    }
    counts
}

/// Sentence BLEU up to 4-grams with add-one smoothing on the 2- to 4-gram
/// precisions and the standard brevity penalty against the closest
/// reference length.
///
/// Unigram precision is not smoothed, so a prediction sharing no token with
/// any reference scores 0.
pub fn bleu<S: AsRef<str>>(prediction: &str, references: &[S]) -> f64 {
    let hyp = tokenize(prediction);
    if hyp.is_empty() || references.is_empty() {
        return 0.0;
    }
    let refs: Vec<Vec<&str>> = references.iter().map(|r| tokenize(r.as_ref())).collect();

    let mut log_sum = 0.0;
    for n in 1..=MAX_ORDER {
        let hyp_counts = ngram_counts(&hyp, n);
        let mut max_ref: HashMap<&[&str], usize> = HashMap::new();
        for r in &refs {
            for (g, c) in ngram_counts(r, n) {
                let e = max_ref.entry(g).or_insert(0);
                *e = (*e).max(c);
            }
        }
        let matched: usize = hyp_counts
            .iter()
            .map(|(g, &c)| c.min(max_ref.get(g).copied().unwrap_or(0)))
            .sum();
        let total = hyp.len().saturating_sub(n - 1);
        let (m, t) = if n == 1 {
            (matched as f64, total as f64)
        } else {
            (matched as f64 + 1.0, total as f64 + 1.0)
        };
        if m == 0.0 {
            return 0.0;
        }
        log_sum += (m / t).ln();
    }

    let c = hyp.len();
    let r = refs
        .iter()
        .map(Vec::len)
        .min_by_key(|&len| (len.abs_diff(c), len))
        .unwrap_or(0);
    let bp = if c < r {
        (1.0 - r as f64 / c as f64).exp()
    } else {
        1.0
    };
    (bp * (log_sum / MAX_ORDER as f64).exp()).clamp(0.0, 1.0)
}

pub(crate) fn lcs_len(a: &[&str], b: &[&str]) -> usize {
    if a.is_empty() || b.is_empty() {
        return 0;
    }
    let mut prev = vec![0usize; b.len() + 1];
    let mut cur = vec![0usize; b.len() + 1];
    for x in a {
        for (j, y) in b.iter().enumerate() {
            cur[j + 1] = if x == y {
                prev[j] + 1
            } else {
                cur[j].max(prev[j + 1])
            };
        }
        std::mem::swap(&mut prev, &mut cur);
    }
    prev[b.len()]
}

/// Longest-common-subsequence F1 between two token sequences.
pub fn rouge_l_pair(prediction: &str, reference: &str) -> f64 {
    let p = tokenize(prediction);
    let r = tokenize(reference);
    let lcs = lcs_len(&p, &r);
    if lcs == 0 {
        return 0.0;
    }
    let precision = lcs as f64 / p.len() as f64;
    let recall = lcs as f64 / r.len() as f64;
    2.0 * precision * recall / (precision + recall)
}

/// [`rouge_l_pair`] against the best-matching reference.
pub fn rouge_l<S: AsRef<str>>(prediction: &str, references: &[S]) -> f64 {
    references
        .iter()
        .map(|r| rouge_l_pair(prediction, r.as_ref()))
        .fold(0.0, f64::max)
}
