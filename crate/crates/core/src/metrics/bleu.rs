//! Corpus and sentence BLEU with the usual clipped n-gram precision.

use std::collections::HashMap;

use super::MetricsError;

/// Uniform weights over 1- to 4-grams.
pub const COMPOSITE_WEIGHTS: [f64; 4] = [0.25; 4];

/// Substitute count for zero n-gram matches in sentence scores.
pub const SENTENCE_EPSILON: f64 = 0.1;

/// What to do with an n-gram order that has no matches.
#[derive(Clone, Copy, Debug, PartialEq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase", tag = "mode", content = "epsilon")]
pub enum Smoothing {
    /// The score is 0.
    None,
    /// The match count becomes this value instead.
    Epsilon(f64),
}

impl std::str::FromStr for Smoothing {
    type Err = String;

    /// `none`, `epsilon` (with [`SENTENCE_EPSILON`]) or `epsilon:<value>`.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.split_once(':') {
            None if s == "none" => Ok(Smoothing::None),
            None if s == "epsilon" => Ok(Smoothing::Epsilon(SENTENCE_EPSILON)),
            Some(("epsilon", v)) => match v.parse::<f64>() {
                Ok(e) if e > 0.0 && e.is_finite() => Ok(Smoothing::Epsilon(e)),
                _ => Err(format!("bad epsilon `{v}`")),
            },
            _ => Err(format!(
                "unknown smoothing `{s}` (expected `none`, `epsilon` or `epsilon:<value>`)"
            )),
        }
    }
}

impl std::fmt::Display for Smoothing {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Smoothing::None => f.write_str("none"),
            Smoothing::Epsilon(e) => write!(f, "epsilon:{e}"),
        }
    }
}

/// Weights with only order `n` (1-based) switched on.
pub fn single_order_weights(n: usize) -> Vec<f64> {
    let mut w = vec![0.0; n];
    w[n - 1] = 1.0;
    w
}

fn ngram_counts<S: AsRef<str>>(words: &[S], n: usize) -> HashMap<Vec<&str>, usize> {
    let mut m = HashMap::new();
    if words.len() >= n {
        for g in words.windows(n) {
            *m.entry(g.iter().map(AsRef::as_ref).collect()).or_default() += 1;
        }
    }
    m
}

/// Matched and total n-gram counts for one pair, per order. The total is at
/// least 1 even when the candidate is shorter than `n`.
fn pair_counts<S: AsRef<str>>(cand: &[S], reference: &[S], max_n: usize) -> Vec<(usize, usize)> {
    (1..=max_n)
        .map(|n| {
            let c = ngram_counts(cand, n);
            let r = ngram_counts(reference, n);
            let matched = c
                .iter()
                .map(|(g, &k)| k.min(r.get(g).copied().unwrap_or(0)))
                .sum();
            let total: usize = c.values().sum();
            (matched, total.max(1))
        })
        .collect()
}

fn validate_weights(weights: &[f64]) -> Result<(), MetricsError> {
    if weights.is_empty()
        || weights.iter().any(|w| !w.is_finite() || *w < 0.0)
        || weights.iter().all(|&w| w == 0.0)
    {
        return Err(MetricsError::Weights(weights.to_vec()));
    }
    Ok(())
}

/// Corpus BLEU on the 0..100 scale: summed clipped n-gram matches over
/// summed candidate n-grams per order, combined by the weighted geometric
/// mean, times the brevity penalty `exp(1 - r/c)` when `c <= r`.
///
/// No unigram matches at all gives 0 regardless of smoothing. Orders with
/// zero weight do not affect the score.
pub fn corpus_bleu<S: AsRef<str>>(
    candidates: &[Vec<S>],
    references: &[Vec<S>],
    weights: &[f64],
    smoothing: Smoothing,
) -> Result<f64, MetricsError> {
    if candidates.len() != references.len() {
        return Err(MetricsError::LengthMismatch {
            candidates: candidates.len(),
            references: references.len(),
        });
    }
    validate_weights(weights)?;
    let max_n = weights.len();
    let mut matched = vec![0usize; max_n];
    let mut total = vec![0usize; max_n];
    let (mut c, mut r) = (0usize, 0usize);
    for (cand, reference) in candidates.iter().zip(references) {
        for (k, (m, t)) in pair_counts(cand, reference, max_n).into_iter().enumerate() {
            matched[k] += m;
            total[k] += t;
        }
        c += cand.len();
        r += reference.len();
    }
    if matched[0] == 0 || c == 0 {
        return Ok(0.0);
    }
    let mut log_sum = 0.0;
    for k in 0..max_n {
        if weights[k] == 0.0 {
            continue;
        }
        let m = match (matched[k], smoothing) {
            (0, Smoothing::None) => return Ok(0.0),
            (0, Smoothing::Epsilon(e)) => e,
            (m, _) => m as f64,
        };
        log_sum += weights[k] * (m / total[k] as f64).ln();
    }
    Ok(100.0 * brevity_penalty(c, r) * log_sum.exp())
}

/// `1` when the candidate side is longer, else `exp(1 - r/c)`; `0` for an
/// empty candidate side.
pub fn brevity_penalty(c: usize, r: usize) -> f64 {
    if c == 0 {
        0.0
    } else if c > r {
        1.0
    } else {
        (1.0 - r as f64 / c as f64).exp()
    }
}

/// Composite BLEU of one pair with [`SENTENCE_EPSILON`] smoothing.
pub fn sentence_bleu<S: AsRef<str>>(candidate: &[S], reference: &[S]) -> f64 {
    let c: Vec<&str> = candidate.iter().map(AsRef::as_ref).collect();
    let r: Vec<&str> = reference.iter().map(AsRef::as_ref).collect();
    corpus_bleu(
        &[c],
        &[r],
        &COMPOSITE_WEIGHTS,
        Smoothing::Epsilon(SENTENCE_EPSILON),
    )
    .expect("fixed weights are valid")
}
