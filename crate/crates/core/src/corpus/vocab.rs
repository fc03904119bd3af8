//! Word/index maps and fixed-length framing.

use std::collections::{BTreeMap, HashMap};

use super::CorpusError;

pub const PAD: &str = "<PAD>";
pub const UNK: &str = "<UNK>";
pub const START: &str = "<s>";
pub const END: &str = "</s>";

pub const PAD_INDEX: usize = 0;
pub const UNK_INDEX: usize = 1;
pub const START_INDEX: usize = 2;
pub const END_INDEX: usize = 3;

/// Reserved words, in index order.
pub const RESERVED: [&str; 4] = [PAD, UNK, START, END];

/// Bidirectional word/index map. Indices 0..4 are [`RESERVED`].
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Vocab {
    words: Vec<String>,
    index: HashMap<String, usize>,
}

impl Default for Vocab {
    fn default() -> Self {
        Self::from_words(Vec::<String>::new())
    }
}

impl Vocab {
    /// Reserved words followed by `words`, skipping repeats and reserved words.
    pub fn from_words<I, S>(words: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        let mut v = Vocab {
            words: Vec::new(),
            index: HashMap::new(),
        };
        for w in RESERVED
            .iter()
            .map(|w| w.to_string())
            .chain(words.into_iter().map(Into::into))
        {
            if !v.index.contains_key(&w) {
                v.index.insert(w.clone(), v.words.len());
                v.words.push(w);
            }
        }
        v
    }

    /// Number of words including the reserved ones.
    pub fn len(&self) -> usize {
        self.words.len()
    }

    /// Never true: the reserved words are always present.
    pub fn is_empty(&self) -> bool {
        self.words.is_empty()
    }

    pub fn get(&self, word: &str) -> Option<usize> {
        self.index.get(word).copied()
    }

    /// Index of `word`, or [`UNK_INDEX`].
    pub fn index_of(&self, word: &str) -> usize {
        self.get(word).unwrap_or(UNK_INDEX)
    }

    pub fn word(&self, index: usize) -> Option<&str> {
        self.words.get(index).map(String::as_str)
    }

    pub fn words(&self) -> &[String] {
        &self.words
    }

    /// `word \t index` lines in index order.
    pub fn to_tsv(&self) -> String {
        let mut s = String::new();
        for (i, w) in self.words.iter().enumerate() {
            s.push_str(w);
            s.push('\t');
            s.push_str(&i.to_string());
            s.push('\n');
        }
        s
    }

    /// Parses [`Vocab::to_tsv`] output; indices must run 0, 1, 2, ... and
    /// start with the reserved words.
    pub fn from_tsv(text: &str) -> Result<Self, CorpusError> {
        let mut words = Vec::new();
        for (n, line) in text.lines().enumerate() {
            let bad = |msg: &str| CorpusError::Format {
                line: n + 1,
                message: msg.to_string(),
            };
            let (w, i) = line
                .split_once('\t')
                .ok_or_else(|| bad("expected `word<TAB>index`"))?;
            let i: usize = i.parse().map_err(|_| bad("index is not a number"))?;
            if i != n {
                return Err(bad(&format!("index {i} out of order")));
            }
            if n < RESERVED.len() && w != RESERVED[n] {
                return Err(bad(&format!("index {n} must be `{}`", RESERVED[n])));
            }
            words.push(w.to_string());
        }
        let v = Self::from_words(words.iter().skip(RESERVED.len().min(words.len())).cloned());
        if v.len() != words.len().max(RESERVED.len()) {
            return Err(CorpusError::Format {
                line: 0,
                message: "duplicate word in vocabulary".into(),
            });
        }
        Ok(v)
    }
}

/// Counts words across `sequences` and keeps the most frequent, ties broken
/// lexicographically, until the vocabulary holds `max_size` entries
/// (reserved words included). Reserved words in the input are not counted.
pub fn build_vocab<I, T, S>(sequences: I, max_size: usize) -> Vocab
where
    I: IntoIterator<Item = T>,
    T: AsRef<[S]>,
    S: AsRef<str>,
{
    let mut counts: BTreeMap<String, usize> = BTreeMap::new();
    for seq in sequences {
        for w in seq.as_ref() {
            let w = w.as_ref();
            if !RESERVED.contains(&w) {
                *counts.entry(w.to_string()).or_default() += 1;
            }
        }
    }
    let mut ranked: Vec<(String, usize)> = counts.into_iter().collect();
    ranked.sort_by(|a, b| b.1.cmp(&a.1).then(a.0.cmp(&b.0)));
    Vocab::from_words(
        ranked
            .into_iter()
            .take(max_size.saturating_sub(RESERVED.len()))
            .map(|(w, _)| w),
    )
}

/// Maps words to indices, truncating to `target_len` or right-padding with
/// [`PAD_INDEX`].
pub fn frame_sequence<S: AsRef<str>>(tokens: &[S], target_len: usize, vocab: &Vocab) -> Vec<usize> {
    let mut out: Vec<usize> = tokens
        .iter()
        .take(target_len)
        .map(|w| vocab.index_of(w.as_ref()))
        .collect();
    out.resize(target_len, PAD_INDEX);
    out
}

/// Words for `indices` up to the first pad or end token, without the start
/// token.
pub fn unframe(indices: &[usize], vocab: &Vocab) -> Vec<String> {
    indices
        .iter()
        .take_while(|&&i| i != PAD_INDEX && i != END_INDEX)
        .filter(|&&i| i != START_INDEX)
        .map(|&i| vocab.word(i).unwrap_or(UNK).to_string())
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn seqs(s: &[&str]) -> Vec<Vec<String>> {
        s.iter()
            .map(|l| l.split_whitespace().map(String::from).collect())
            .collect()
    }

    #[test]
    fn frequency_then_lexicographic() {
        let v = build_vocab(seqs(&["a a b"]), 10);
        assert_eq!(v.get("a"), Some(4));
        assert_eq!(v.get("b"), Some(5));
        let v = build_vocab(seqs(&["c b a", "b", "<s> d </s>"]), 100);
        assert_eq!(&v.words()[4..], ["b", "a", "c", "d"]);
        assert_eq!(v.word(0), Some(PAD));
        assert_eq!(v.get(END), Some(END_INDEX));
    }

    #[test]
    fn max_size_drops_rare_words() {
        let v = build_vocab(seqs(&["x x x y y z"]), 6);
        assert_eq!(v.len(), 6);
        assert_eq!(v.index_of("z"), UNK_INDEX);
        assert_eq!(build_vocab(seqs(&["x"]), 2).len(), 4);
    }

    #[test]
    fn train_only_words() {
        let train = seqs(&["sets the url", "gets the url"]);
        let test = ["closes", "the", "url"];
        let v = build_vocab(&train, 100);
        assert_eq!(
            frame_sequence(&test, 3, &v),
            [UNK_INDEX, v.index_of("the"), v.index_of("url")]
        );
    }

    #[test]
    fn framing() {
        let v = Vocab::from_words(["a", "b", "c"]);
        assert_eq!(frame_sequence(&["a", "b", "c"], 5, &v), [4, 5, 6, 0, 0]);
        let long: Vec<String> = (0..101)
            .map(|i| if i % 2 == 0 { "a" } else { "b" }.to_string())
            .collect();
        let framed = frame_sequence(&long, 100, &v);
        assert_eq!(framed.len(), 100);
        assert_eq!(framed[99], 5);
        assert_eq!(frame_sequence(&["q"], 2, &v), [UNK_INDEX, PAD_INDEX]);
        assert_eq!(
            unframe(&[START_INDEX, 4, UNK_INDEX, END_INDEX, 0, 5], &v),
            ["a", UNK]
        );
    }

    #[test]
    fn tsv_round_trip_and_validation() {
        let v = build_vocab(seqs(&["sets the url the"]), 50);
        assert_eq!(Vocab::from_tsv(&v.to_tsv()).unwrap(), v);
        assert!(Vocab::from_tsv("<PAD>\t0\n<UNK>\t2\n").is_err());
        assert!(Vocab::from_tsv("x\t0\n").is_err());
        assert!(Vocab::from_tsv("<PAD>\t0\n<UNK>\t1\n<s>\t2\n</s>\t3\na\t4\na\t5\n").is_err());
        assert!(Vocab::from_tsv("<PAD> 0\n").is_err());
    }
}
