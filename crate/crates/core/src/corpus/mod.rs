//! From raw Java methods and their JavaDoc to filtered, tokenized,
//! project-disjoint datasets.

mod io;
mod java;
mod pipeline;
mod split;
mod text;
mod vocab;

pub use io::{
    examples_from_tsv, examples_to_tsv, load_dataset, read_methods_tsv, write_atomic,
    write_dataset, write_methods_tsv, Dataset, TEST_FILE, TRAIN_FILE, VALID_FILE, VOCAB_FILES,
};
pub use java::{extract_methods, ExtractedMethod};
pub use pipeline::{
    prepare, process_record, CorpusConfig, PrepStats, PreparedCorpus, Rejection, Vocabs,
};
pub use split::{reinstate_unique_autogen, split_by_project, SplitCorpus, SplitRatios};
pub use text::{
    extract_summary, is_autogenerated, is_english, passes_quality, tokenize, AutogenPhrases,
    EnglishFilter, TextKind,
};
pub use vocab::{
    build_vocab, frame_sequence, unframe, Vocab, END, END_INDEX, PAD, PAD_INDEX, RESERVED, START,
    START_INDEX, UNK, UNK_INDEX,
};

#[derive(Debug, thiserror::Error)]
pub enum CorpusError {
    #[error("invalid corpus config: {0}")]
    Config(String),
    #[error("need at least 3 projects to split, found {0}")]
    TooFewProjects(usize),
    #[error("duplicate method id {0}")]
    DuplicateId(u64),
    #[error("method {0} has an empty project id")]
    EmptyProject(u64),
    #[error("line {line}: {message}")]
    Format { line: usize, message: String },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// One method as found in a source tree.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct MethodRecord {
    pub id: u64,
    pub project_id: String,
    pub file_text: String,
    pub method_source: String,
    pub javadoc_raw: String,
}

/// A method after filtering and tokenization, cut to the configured lengths.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ProcessedExample {
    pub id: u64,
    pub project_id: String,
    /// `<s>` code words `</s>`.
    pub code_tokens: Vec<String>,
    /// Structure-only SBT.
    pub ast_tokens: Vec<String>,
    /// SBT with words.
    pub sbt_tokens: Vec<String>,
    /// `<s>` summary words `</s>`.
    pub comment_tokens: Vec<String>,
    /// Came back from the auto-generated pool; may only be used for training.
    pub reinstated: bool,
}
