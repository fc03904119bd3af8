//! Comment and code text handling: summary extraction, language and
//! generator filters, and word tokenization.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

/// Which kind of text is being tokenized. Both kinds currently follow the
/// same rules; the distinction is kept so callers state their intent.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum TextKind {
    Code,
    Comment,
}

/// Splits on camelCase and on every non-letter, then lowercases.
///
/// Only ASCII letters survive, so the output is stable under re-tokenizing
/// its own space-joined form.
pub fn tokenize(text: &str, _kind: TextKind) -> Vec<String> {
    let mut out = Vec::new();
    for run in text
        .split(|c: char| !c.is_ascii_alphabetic())
        .filter(|r| !r.is_empty())
    {
        split_camel(run, &mut out);
    }
    out
}

/// `tokenURL` → `token url`, `XMLParser` → `xml parser`, `getX` → `get x`.
fn split_camel(run: &str, out: &mut Vec<String>) {
    let b = run.as_bytes();
    let mut start = 0;
    for i in 1..b.len() {
        let boundary = (b[i - 1].is_ascii_lowercase() && b[i].is_ascii_uppercase())
            || (b[i - 1].is_ascii_uppercase()
                && b[i].is_ascii_uppercase()
                && b.get(i + 1).is_some_and(u8::is_ascii_lowercase));
        if boundary {
            out.push(run[start..i].to_ascii_lowercase());
            start = i;
        }
    }
    out.push(run[start..].to_ascii_lowercase());
}

/// The first sentence of a JavaDoc comment, or `None` when the comment is
/// not a JavaDoc or has no description.
///
/// Markup goes first: the `/** */` fence, leading asterisks, everything from
/// the first `@tag` line on, HTML tags, and the braces of inline tags such as
/// `{@code x}`. The sentence then ends at the first period followed by
/// whitespace, or at the first line break when there is no such period.
pub fn extract_summary(javadoc_raw: &str) -> Option<String> {
    let body = javadoc_raw.trim_start().strip_prefix("/**")?;
    let body = match body.rfind("*/") {
        Some(end) => &body[..end],
        None => body,
    };
    let mut lines = Vec::new();
    for line in body.lines() {
        let line = line.trim().trim_start_matches('*').trim();
        if line.starts_with('@') {
            break;
        }
        lines.push(strip_markup(line));
    }
    let text = lines.join("\n");
    let text = text.trim();
    let cut = first_sentence_end(text)
        .or_else(|| text.find('\n'))
        .unwrap_or(text.len());
    let sentence = text[..cut].split_whitespace().collect::<Vec<_>>().join(" ");
    (!sentence.is_empty()).then_some(sentence)
}

fn first_sentence_end(text: &str) -> Option<usize> {
    let b = text.as_bytes();
    (0..b.len()).find(|&i| b[i] == b'.' && b.get(i + 1).is_none_or(|c| c.is_ascii_whitespace()))
}

/// Drops `<tag>`s and unwraps `{@tag content}` to `content`.
fn strip_markup(line: &str) -> String {
    let mut out = String::with_capacity(line.len());
    let mut rest = line;
    while let Some(i) = rest.find(['<', '{']) {
        out.push_str(&rest[..i]);
        let tail = &rest[i..];
        if tail.starts_with('<')
            && tail.find('>').is_some()
            && tail[1..].starts_with(|c: char| c.is_ascii_alphabetic() || c == '/')
        {
            rest = &tail[tail.find('>').unwrap() + 1..];
            out.push(' ');
        } else if tail.starts_with("{@") && tail.contains('}') {
            let end = tail.find('}').unwrap();
            let inner = &tail[2..end];
            out.push_str(inner.split_once(char::is_whitespace).map_or("", |(_, c)| c));
            rest = &tail[end + 1..];
        } else {
            out.push_str(&tail[..1]);
            rest = &tail[1..];
        }
    }
    out.push_str(rest);
    out
}

const STOPWORDS: &str = include_str!("../../data/english_stopwords.txt");

fn data_lines(text: &str) -> impl Iterator<Item = &str> {
    text.lines()
        .map(str::trim)
        .filter(|l| !l.is_empty() && !l.starts_with('#'))
}

/// Thresholds for [`is_english`].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct EnglishFilter {
    /// Minimum number of words found in the stopword list.
    pub min_stopword_hits: usize,
    /// Minimum share of ASCII letters among the characters left after
    /// removing whitespace, ASCII punctuation, and digits.
    pub min_ascii_ratio: f64,
}

impl Default for EnglishFilter {
    fn default() -> Self {
        EnglishFilter {
            min_stopword_hits: 1,
            min_ascii_ratio: 0.8,
        }
    }
}

/// Deterministic stopword-and-alphabet test for English text.
pub fn is_english(text: &str, filter: &EnglishFilter) -> bool {
    let stopwords: BTreeSet<&str> = data_lines(STOPWORDS).collect();
    let kept: Vec<char> = text
        .chars()
        .filter(|c| !c.is_whitespace() && !c.is_ascii_punctuation() && !c.is_ascii_digit())
        .collect();
    if kept.is_empty() {
        return false;
    }
    let ascii = kept.iter().filter(|c| c.is_ascii_alphabetic()).count();
    if (ascii as f64) < filter.min_ascii_ratio * kept.len() as f64 {
        return false;
    }
    let hits = text
        .split(|c: char| !c.is_alphabetic())
        .filter(|w| stopwords.contains(w.to_lowercase().as_str()))
        .count();
    hits >= filter.min_stopword_hits
}

/// Phrases that mark a file as machine-generated.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct AutogenPhrases {
    phrases: Vec<String>,
}

const AUTOGEN: &str = include_str!("../../data/autogen_phrases.txt");

impl Default for AutogenPhrases {
    fn default() -> Self {
        Self::parse(AUTOGEN)
    }
}

impl AutogenPhrases {
    /// One phrase per line; blank lines and `#` lines are skipped.
    pub fn parse(text: &str) -> Self {
        AutogenPhrases {
            phrases: data_lines(text).map(str::to_lowercase).collect(),
        }
    }

    pub fn load(path: &std::path::Path) -> std::io::Result<Self> {
        Ok(Self::parse(&std::fs::read_to_string(path)?))
    }

    pub fn phrases(&self) -> &[String] {
        &self.phrases
    }
}

/// True when some line of the file contains a listed phrase, ignoring case.
/// A phrase broken across two lines does not match.
pub fn is_autogenerated(file_text: &str, phrases: &AutogenPhrases) -> bool {
    file_text.lines().any(|line| {
        let line = line.to_lowercase();
        phrases.phrases.iter().any(|p| line.contains(p.as_str()))
    })
}

/// Rejects summaries that are too short or open with something that is not
/// a word, such as `{@inheritDoc}` leftovers, numbers, or symbols.
pub fn passes_quality(summary: &str, tokens: &[String], min_tokens: usize) -> bool {
    tokens.len() >= min_tokens && summary.starts_with(|c: char| c.is_ascii_alphabetic())
}
