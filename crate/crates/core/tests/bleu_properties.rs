use codesum::metrics::{corpus_bleu, single_order_weights, Smoothing, COMPOSITE_WEIGHTS};
use proptest::prelude::*;

type Corpus = Vec<Vec<String>>;

fn grams(s: &[String], n: usize) -> Vec<Vec<String>> {
    let mut out = Vec::new();
    let mut i = 0;
    while i + n <= s.len() {
        out.push(s[i..i + n].to_vec());
        i += 1;
    }
    out
}

/// Clipped matches and candidate n-gram total (at least 1 per sentence),
/// clipping by removing matched items from a copy of the reference n-grams.
fn precision(cands: &Corpus, refs: &Corpus, n: usize) -> (usize, usize) {
    let (mut num, mut den) = (0, 0);
    for (c, r) in cands.iter().zip(refs) {
        let mut pool = grams(r, n);
        let cg = grams(c, n);
        for g in &cg {
            if let Some(pos) = pool.iter().position(|x| x == g) {
                pool.remove(pos);
                num += 1;
            }
        }
        den += cg.len().max(1);
    }
    (num, den)
}

/// BLEU computed the slow way.
fn oracle(cands: &Corpus, refs: &Corpus, weights: &[f64], smoothing: Smoothing) -> f64 {
    let c: usize = cands.iter().map(Vec::len).sum();
    let r: usize = refs.iter().map(Vec::len).sum();
    if c == 0 || precision(cands, refs, 1).0 == 0 {
        return 0.0;
    }
    let mut log_sum = 0.0;
    for (k, &w) in weights.iter().enumerate() {
        if w == 0.0 {
            continue;
        }
        let (num, den) = precision(cands, refs, k + 1);
        let m = match (num, smoothing) {
            (0, Smoothing::None) => return 0.0,
            (0, Smoothing::Epsilon(e)) => e,
            (m, _) => m as f64,
        };
        log_sum += w * (m / den as f64).ln();
    }
    let bp = if c > r {
        1.0
    } else {
        (1.0 - r as f64 / c as f64).exp()
    };
    100.0 * bp * log_sum.exp()
}

fn sentence() -> impl Strategy<Value = Vec<String>> {
    prop::collection::vec(
        prop::sample::select(vec!["a", "b", "c", "d"]).prop_map(String::from),
        0..8,
    )
}

fn corpus_pair() -> impl Strategy<Value = (Corpus, Corpus)> {
    (1usize..6).prop_flat_map(|n| {
        (
            prop::collection::vec(sentence(), n),
            prop::collection::vec(sentence(), n),
        )
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(300))]

    #[test]
    fn matches_brute_force_oracle((cands, refs) in corpus_pair()) {
        let mut weight_sets = vec![COMPOSITE_WEIGHTS.to_vec()];
        weight_sets.extend((1..=4).map(single_order_weights));
        for w in &weight_sets {
            for s in [Smoothing::None, Smoothing::Epsilon(0.1)] {
                let got = corpus_bleu(&cands, &refs, w, s).unwrap();
                let want = oracle(&cands, &refs, w, s);
                prop_assert!((got - want).abs() <= 1e-9, "{got} vs {want} for {w:?} {s:?}");
                prop_assert!((0.0..=100.0 + 1e-9).contains(&got));
            }
        }
    }

    #[test]
    fn duplication_leaves_scores_unchanged((cands, refs) in corpus_pair()) {
        // Unsmoothed only: a fixed epsilon does not scale with the totals.
        let twice = |c: &Corpus| c.iter().chain(c).cloned().collect::<Corpus>();
        let mut weight_sets = vec![COMPOSITE_WEIGHTS.to_vec()];
        weight_sets.extend((1..=4).map(single_order_weights));
        for w in &weight_sets {
            let once = corpus_bleu(&cands, &refs, w, Smoothing::None).unwrap();
            let dup = corpus_bleu(&twice(&cands), &twice(&refs), w, Smoothing::None).unwrap();
            prop_assert!((once - dup).abs() <= 1e-9);
        }
    }

    #[test]
    fn identical_corpora_score_100(refs in prop::collection::vec(prop::collection::vec("[a-e]", 4..9), 1..6)) {
        let s = corpus_bleu(&refs, &refs, &COMPOSITE_WEIGHTS, Smoothing::None).unwrap();
        prop_assert!((s - 100.0).abs() <= 1e-9);
    }

    #[test]
    fn no_brevity_penalty_for_long_candidates((cands, refs) in corpus_pair()) {
        let c: usize = cands.iter().map(Vec::len).sum();
        let r: usize = refs.iter().map(Vec::len).sum();
        prop_assume!(c >= r && c > 0);
        // The score is then exactly the clipped unigram precision.
        let got = corpus_bleu(&cands, &refs, &single_order_weights(1), Smoothing::None).unwrap();
        let (num, den) = precision(&cands, &refs, 1);
        prop_assert!((got - 100.0 * num as f64 / den as f64).abs() <= 1e-9);
    }
}
