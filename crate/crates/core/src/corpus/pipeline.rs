//! Raw methods in, split and vocabularies out.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use super::split::{reinstate_unique_autogen, split_by_project, SplitCorpus, SplitRatios};
use super::text::{
    extract_summary, is_autogenerated, is_english, passes_quality, tokenize, AutogenPhrases,
    EnglishFilter, TextKind,
};
use super::vocab::{build_vocab, Vocab, END, START};
use super::{CorpusError, MethodRecord, ProcessedExample};
use crate::ast::{parse_method, sbt_ao_flatten, sbt_flatten_with, ApiWhitelist, LeafMode};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct CorpusConfig {
    /// Code/text length, delimiters included.
    pub txtlen: usize,
    /// SBT-AO and SBT length.
    pub astlen: usize,
    /// Comment length, delimiters included.
    pub comlen: usize,
    pub txt_vocab_size: usize,
    pub ast_vocab_size: usize,
    pub com_vocab_size: usize,
    pub sbt_vocab_size: usize,
    pub ratios: SplitRatios,
    pub seed: u64,
    /// Summaries with fewer words are dropped.
    pub min_comment_tokens: usize,
    pub english: EnglishFilter,
    pub leaf_mode: LeafMode,
}

impl Default for CorpusConfig {
    fn default() -> Self {
        CorpusConfig {
            txtlen: 100,
            astlen: 100,
            comlen: 13,
            txt_vocab_size: 50_000,
            ast_vocab_size: 10_000,
            com_vocab_size: 10_000,
            sbt_vocab_size: 50_000,
            ratios: SplitRatios::default(),
            seed: 1,
            min_comment_tokens: 2,
            english: EnglishFilter::default(),
            leaf_mode: LeafMode::default(),
        }
    }
}

impl CorpusConfig {
    pub fn validate(&self) -> Result<(), CorpusError> {
        if self.txtlen == 0 || self.astlen == 0 || self.comlen < 2 {
            return Err(CorpusError::Config(
                "txtlen and astlen must be positive and comlen at least 2".into(),
            ));
        }
        self.ratios.validate()
    }
}

/// Why a record did not become an example.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Rejection {
    NoSummary,
    NotEnglish,
    LowQuality,
    Unparseable,
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize)]
pub struct PrepStats {
    pub records: usize,
    pub no_summary: usize,
    pub not_english: usize,
    pub low_quality: usize,
    pub unparseable: usize,
    pub autogenerated: usize,
    pub reinstated: usize,
    pub reinstated_dropped: usize,
    pub train: usize,
    pub valid: usize,
    pub test: usize,
    /// Project counts for train, validation, test.
    pub projects: [usize; 3],
}

/// One vocabulary per input stream.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Vocabs {
    pub txt: Vocab,
    pub ast: Vocab,
    pub com: Vocab,
    pub sbt: Vocab,
}

#[derive(Clone, Debug, PartialEq)]
pub struct PreparedCorpus {
    pub split: SplitCorpus,
    pub vocabs: Vocabs,
    pub stats: PrepStats,
}

/// `<s> words </s>`, cut to `len`.
fn delimit(words: Vec<String>, len: usize) -> Vec<String> {
    let mut out = Vec::with_capacity(words.len() + 2);
    out.push(START.to_string());
    out.extend(words);
    out.push(END.to_string());
    out.truncate(len);
    out
}

/// Filters and tokenizes one record. Pure; does not look at `file_text`.
pub fn process_record(
    rec: &MethodRecord,
    cfg: &CorpusConfig,
    whitelist: &ApiWhitelist,
) -> Result<ProcessedExample, Rejection> {
    let summary = extract_summary(&rec.javadoc_raw).ok_or(Rejection::NoSummary)?;
    if !is_english(&summary, &cfg.english) {
        return Err(Rejection::NotEnglish);
    }
    let comment = tokenize(&summary, TextKind::Comment);
    if !passes_quality(&summary, &comment, cfg.min_comment_tokens) {
        return Err(Rejection::LowQuality);
    }
    let ast = parse_method(&rec.method_source).map_err(|_| Rejection::Unparseable)?;
    let mut ast_tokens = sbt_ao_flatten(&ast, whitelist);
    ast_tokens.truncate(cfg.astlen);
    let mut sbt_tokens = sbt_flatten_with(&ast, cfg.leaf_mode);
    sbt_tokens.truncate(cfg.astlen);
    Ok(ProcessedExample {
        id: rec.id,
        project_id: rec.project_id.clone(),
        code_tokens: delimit(tokenize(&rec.method_source, TextKind::Code), cfg.txtlen),
        ast_tokens,
        sbt_tokens,
        comment_tokens: delimit(comment, cfg.comlen),
        reinstated: false,
    })
}

/// Runs the whole preparation: filtering, auto-generated file handling,
/// project split, and train-only vocabularies.
pub fn prepare(
    records: &[MethodRecord],
    cfg: &CorpusConfig,
    whitelist: &ApiWhitelist,
    phrases: &AutogenPhrases,
) -> Result<PreparedCorpus, CorpusError> {
    cfg.validate()?;
    let mut ids = BTreeSet::new();
    for r in records {
        if !ids.insert(r.id) {
            return Err(CorpusError::DuplicateId(r.id));
        }
        if r.project_id.is_empty() {
            return Err(CorpusError::EmptyProject(r.id));
        }
    }
    let mut stats = PrepStats {
        records: records.len(),
        ..PrepStats::default()
    };
    let mut kept = Vec::new();
    let mut removed = Vec::new();
    for r in records {
        match process_record(r, cfg, whitelist) {
            Ok(ex) if is_autogenerated(&r.file_text, phrases) => removed.push(ex),
            Ok(ex) => kept.push(ex),
            Err(Rejection::NoSummary) => stats.no_summary += 1,
            Err(Rejection::NotEnglish) => stats.not_english += 1,
            Err(Rejection::LowQuality) => stats.low_quality += 1,
            Err(Rejection::Unparseable) => stats.unparseable += 1,
        }
    }
    stats.autogenerated = removed.len();
    let reinstated = reinstate_unique_autogen(removed);
    stats.reinstated = reinstated.len();
    kept.extend(reinstated);
    kept.sort_by_key(|e| e.id);

    let split = split_by_project(kept, cfg.ratios, cfg.seed)?;
    let vocab = |f: fn(&ProcessedExample) -> &Vec<String>, size| {
        build_vocab(split.train.iter().map(f), size)
    };
    let vocabs = Vocabs {
        txt: vocab(|e| &e.code_tokens, cfg.txt_vocab_size),
        ast: vocab(|e| &e.ast_tokens, cfg.ast_vocab_size),
        com: vocab(|e| &e.comment_tokens, cfg.com_vocab_size),
        sbt: vocab(|e| &e.sbt_tokens, cfg.sbt_vocab_size),
    };
    stats.reinstated_dropped = split.dropped_reinstated;
    (stats.train, stats.valid, stats.test) =
        (split.train.len(), split.valid.len(), split.test.len());
    let sets = split.project_sets();
    stats.projects = [sets[0].len(), sets[1].len(), sets[2].len()];
    Ok(PreparedCorpus {
        split,
        vocabs,
        stats,
    })
}
