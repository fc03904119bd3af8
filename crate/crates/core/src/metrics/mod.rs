//! BLEU scores, per-method comparisons between systems, and first-word
//! accuracy. All scores are on the 0..100 scale except accuracies.

mod bleu;

use std::collections::BTreeMap;

use serde::Serialize;

pub use bleu::{
    brevity_penalty, corpus_bleu, sentence_bleu, single_order_weights, Smoothing,
    COMPOSITE_WEIGHTS, SENTENCE_EPSILON,
};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum MetricsError {
    #[error("{candidates} candidates but {references} references")]
    LengthMismatch {
        candidates: usize,
        references: usize,
    },
    #[error("method ids differ: {missing} without a prediction, {extra} without a reference (first: {first})")]
    KeyMismatch {
        missing: usize,
        extra: usize,
        first: u64,
    },
    #[error("invalid BLEU weights {0:?}")]
    Weights(Vec<f64>),
    #[error("line {line}: {message}")]
    Format { line: usize, message: String },
}

/// Word sequences keyed by method id.
pub type Keyed = BTreeMap<u64, Vec<String>>;

fn check_keys(preds: &Keyed, refs: &Keyed) -> Result<(), MetricsError> {
    let missing: Vec<u64> = refs
        .keys()
        .filter(|k| !preds.contains_key(k))
        .copied()
        .collect();
    let extra: Vec<u64> = preds
        .keys()
        .filter(|k| !refs.contains_key(k))
        .copied()
        .collect();
    if missing.is_empty() && extra.is_empty() {
        return Ok(());
    }
    Err(MetricsError::KeyMismatch {
        missing: missing.len(),
        extra: extra.len(),
        first: missing
            .first()
            .or(extra.first())
            .copied()
            .unwrap_or_default(),
    })
}

type Aligned<'a> = (Vec<&'a [String]>, Vec<&'a [String]>);

fn aligned<'a>(preds: &'a Keyed, refs: &'a Keyed) -> Result<Aligned<'a>, MetricsError> {
    check_keys(preds, refs)?;
    Ok(refs
        .iter()
        .map(|(k, r)| (preds[k].as_slice(), r.as_slice()))
        .unzip())
}

/// Corpus BLEU over predictions and references matched by id.
pub fn corpus_bleu_keyed(
    preds: &Keyed,
    refs: &Keyed,
    weights: &[f64],
    smoothing: Smoothing,
) -> Result<f64, MetricsError> {
    let (c, r) = aligned(preds, refs)?;
    let c: Vec<Vec<&str>> = c
        .iter()
        .map(|s| s.iter().map(String::as_str).collect())
        .collect();
    let r: Vec<Vec<&str>> = r
        .iter()
        .map(|s| s.iter().map(String::as_str).collect())
        .collect();
    corpus_bleu(&c, &r, weights, smoothing)
}

/// Share of methods whose first predicted word equals the reference's. An
/// empty prediction never matches. Zero methods give 0.
pub fn first_word_accuracy(preds: &Keyed, refs: &Keyed) -> Result<f64, MetricsError> {
    let (c, r) = aligned(preds, refs)?;
    if r.is_empty() {
        return Ok(0.0);
    }
    let hits = c
        .iter()
        .zip(&r)
        .filter(|(c, r)| !c.is_empty() && c.first() == r.first())
        .count();
    Ok(hits as f64 / r.len() as f64)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct EvalReport {
    pub composite: f64,
    /// BLEU-1 to BLEU-4, each on a single n-gram order.
    pub bleu: [f64; 4],
    pub first_word_accuracy: f64,
    pub methods: usize,
    /// Smoothed sentence BLEU per method id.
    #[serde(skip)]
    pub per_method: Vec<(u64, f64)>,
}

/// Unsmoothed corpus scores plus per-method sentence BLEU.
pub fn evaluate(preds: &Keyed, refs: &Keyed) -> Result<EvalReport, MetricsError> {
    evaluate_with(preds, refs, Smoothing::None)
}

/// [`evaluate`] with a chosen smoothing for the corpus-level scores.
/// Per-method scores always use [`sentence_bleu`].
pub fn evaluate_with(
    preds: &Keyed,
    refs: &Keyed,
    smoothing: Smoothing,
) -> Result<EvalReport, MetricsError> {
    let composite = corpus_bleu_keyed(preds, refs, &COMPOSITE_WEIGHTS, smoothing)?;
    let mut bleu = [0.0; 4];
    for (n, b) in bleu.iter_mut().enumerate() {
        *b = corpus_bleu_keyed(preds, refs, &single_order_weights(n + 1), smoothing)?;
    }
    Ok(EvalReport {
        composite,
        bleu,
        first_word_accuracy: first_word_accuracy(preds, refs)?,
        methods: refs.len(),
        per_method: refs
            .iter()
            .map(|(k, r)| (*k, sentence_bleu(&preds[k], r)))
            .collect(),
    })
}

/// How two systems compare method by method.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Orthogonality {
    pub a_better: usize,
    pub b_better: usize,
    pub ties: usize,
    /// `(id, sentence BLEU of A, sentence BLEU of B)`.
    #[serde(skip)]
    pub rows: Vec<(u64, f64, f64)>,
}

/// Counts methods where A's smoothed sentence BLEU beats B's, the reverse,
/// and exact ties. Both systems are scored the same way.
pub fn orthogonality(a: &Keyed, b: &Keyed, refs: &Keyed) -> Result<Orthogonality, MetricsError> {
    check_keys(a, refs)?;
    check_keys(b, refs)?;
    let mut out = Orthogonality {
        a_better: 0,
        b_better: 0,
        ties: 0,
        rows: Vec::with_capacity(refs.len()),
    };
    for (k, r) in refs {
        let (sa, sb) = (sentence_bleu(&a[k], r), sentence_bleu(&b[k], r));
        match sa.partial_cmp(&sb) {
            Some(std::cmp::Ordering::Greater) => out.a_better += 1,
            Some(std::cmp::Ordering::Less) => out.b_better += 1,
            _ => out.ties += 1,
        }
        out.rows.push((*k, sa, sb));
    }
    Ok(out)
}

/// `id \t space-separated words` per line. Duplicate ids are an error.
pub fn read_keyed_tsv(text: &str) -> Result<Keyed, MetricsError> {
    let mut out = Keyed::new();
    for (n, line) in text.lines().enumerate() {
        if line.is_empty() {
            continue;
        }
        let bad = |message: String| MetricsError::Format {
            line: n + 1,
            message,
        };
        let (id, words) = line.split_once('\t').unwrap_or((line, ""));
        let id: u64 = id
            .trim()
            .parse()
            .map_err(|_| bad(format!("bad id `{id}`")))?;
        if out
            .insert(id, words.split_whitespace().map(String::from).collect())
            .is_some()
        {
            return Err(bad(format!("duplicate id {id}")));
        }
    }
    Ok(out)
}

pub fn write_keyed_tsv(rows: &Keyed) -> String {
    let mut s = String::new();
    for (id, words) in rows {
        s.push_str(&format!("{id}\t{}\n", words.join(" ")));
    }
    s
}

#[cfg(test)]
mod tests {
    use super::*;

    fn keyed(rows: &[(u64, &str)]) -> Keyed {
        rows.iter()
            .map(|(k, s)| (*k, s.split_whitespace().map(String::from).collect()))
            .collect()
    }

    #[test]
    fn key_mismatch() {
        let a = keyed(&[(1, "a b"), (2, "c")]);
        let b = keyed(&[(1, "a b"), (3, "c")]);
        let e = corpus_bleu_keyed(&a, &b, &COMPOSITE_WEIGHTS, Smoothing::None).unwrap_err();
        assert_eq!(
            e,
            MetricsError::KeyMismatch {
                missing: 1,
                extra: 1,
                first: 3
            }
        );
    }

    #[test]
    fn first_word() {
        let refs = keyed(&[
            (1, "sets the url"),
            (2, "returns the url"),
            (3, "closes it"),
            (4, "gets x"),
        ]);
        assert_eq!(first_word_accuracy(&refs, &refs).unwrap(), 1.0);
        let empty = keyed(&[(1, ""), (2, ""), (3, ""), (4, "")]);
        assert_eq!(first_word_accuracy(&empty, &refs).unwrap(), 0.0);
        let mixed = keyed(&[
            (1, "sets a value"),
            (2, "sets the url"),
            (3, "closes the connection"),
            (4, ""),
        ]);
        assert_eq!(first_word_accuracy(&mixed, &refs).unwrap(), 0.5);
        assert_eq!(
            first_word_accuracy(&Keyed::new(), &Keyed::new()).unwrap(),
            0.0
        );
    }

    #[test]
    fn orthogonality_counts() {
        let refs = keyed(&[
            (1, "sets the token url"),
            (2, "returns the value"),
            (3, "closes the connection"),
        ]);
        let same = orthogonality(&refs, &refs, &refs).unwrap();
        assert_eq!((same.a_better, same.b_better, same.ties), (0, 0, 3));
        let mut b = refs.clone();
        b.insert(1, vec![]);
        let o = orthogonality(&refs, &b, &refs).unwrap();
        assert_eq!((o.a_better, o.b_better, o.ties), (1, 0, 2));
        assert_eq!(o.rows[0].0, 1);
        assert!((o.rows[0].1 - 100.0).abs() < 1e-9 && o.rows[0].2 == 0.0);
    }

    #[test]
    fn orthogonality_mixed_tally() {
        // Winners by hand: A wins where it copies the reference, B where it does.
        let refs = keyed(
            &(0..10)
                .map(|i| (i, "sets the value of the field"))
                .collect::<Vec<_>>(),
        );
        let good = "sets the value of the field";
        let poor = "returns a count";
        let a = keyed(
            &(0..10)
                .map(|i| {
                    (
                        i,
                        if i < 4 {
                            good
                        } else if i < 7 {
                            poor
                        } else {
                            good
                        },
                    )
                })
                .collect::<Vec<_>>(),
        );
        let b = keyed(
            &(0..10)
                .map(|i| (i, if i < 4 { poor } else { good }))
                .collect::<Vec<_>>(),
        );
        let o = orthogonality(&a, &b, &refs).unwrap();
        assert_eq!((o.a_better, o.b_better, o.ties), (4, 3, 3));
    }

    #[test]
    fn report() {
        let refs = keyed(&[
            (1, "sets the token url"),
            (2, "returns the value of the field"),
        ]);
        let r = evaluate(&refs, &refs).unwrap();
        assert!((r.composite - 100.0).abs() < 1e-9);
        assert!(r.bleu.iter().all(|b| (b - 100.0).abs() < 1e-9));
        assert_eq!(r.methods, 2);
        assert_eq!(r.first_word_accuracy, 1.0);
        assert_eq!(r.per_method.len(), 2);
        let preds = keyed(&[(1, "sets the url"), (2, "")]);
        let r = evaluate(&preds, &refs).unwrap();
        assert!(r.composite >= 0.0 && r.composite <= 100.0);
        assert!(r.bleu[0] > 0.0);
    }

    #[test]
    fn keyed_tsv() {
        let rows = keyed(&[(3, "a b"), (1, "")]);
        assert_eq!(read_keyed_tsv(&write_keyed_tsv(&rows)).unwrap(), rows);
        assert_eq!(read_keyed_tsv("7").unwrap()[&7], Vec::<String>::new());
        assert!(read_keyed_tsv("1\ta\n1\tb\n").is_err());
        assert!(read_keyed_tsv("x\ta\n").is_err());
    }
}
