//! Framing examples for a model and teacher-forcing pair expansion.

use crate::corpus::{
    frame_sequence, ProcessedExample, Vocab, Vocabs, END, END_INDEX, PAD_INDEX, START, START_INDEX,
};
use crate::models::{EncoderInput, InputSource, ModelConfig, ModelKind};

/// One method ready for a particular model: encoder indices plus the framed
/// comment.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FramedExample {
    pub id: u64,
    pub input: EncoderInput,
    /// `comlen` indices starting with the start token.
    pub comment: Vec<usize>,
    /// Reference summary words without delimiters.
    pub reference: Vec<String>,
}

/// A comment prefix and the word that follows it.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TrainingPair {
    /// `comlen` indices: the known prefix, then padding.
    pub prefix: Vec<usize>,
    pub target: usize,
}

/// The vocabulary of the primary encoder input.
pub fn primary_vocab(input: InputSource, vocabs: &Vocabs) -> &Vocab {
    match input {
        InputSource::Code => &vocabs.txt,
        InputSource::Sbt => &vocabs.sbt,
        InputSource::Sbtao => &vocabs.ast,
    }
}

/// Full-size config for `kind` reading `input`, sized to the vocabularies.
pub fn model_config(kind: ModelKind, input: InputSource, vocabs: &Vocabs) -> ModelConfig {
    let mut c = ModelConfig::new(
        kind,
        primary_vocab(input, vocabs).len(),
        vocabs.ast.len(),
        vocabs.com.len(),
    );
    c.input = input;
    c
}

fn primary_tokens(ex: &ProcessedExample, input: InputSource) -> &[String] {
    match input {
        InputSource::Code => &ex.code_tokens,
        InputSource::Sbt => &ex.sbt_tokens,
        InputSource::Sbtao => &ex.ast_tokens,
    }
}

pub fn encoder_input(ex: &ProcessedExample, config: &ModelConfig, vocabs: &Vocabs) -> EncoderInput {
    EncoderInput {
        primary: frame_sequence(
            primary_tokens(ex, config.input),
            config.txtlen,
            primary_vocab(config.input, vocabs),
        ),
        ast: config
            .kind
            .has_ast_encoder()
            .then(|| frame_sequence(&ex.ast_tokens, config.astlen, &vocabs.ast)),
    }
}

pub fn frame_example(
    ex: &ProcessedExample,
    config: &ModelConfig,
    vocabs: &Vocabs,
) -> FramedExample {
    FramedExample {
        id: ex.id,
        input: encoder_input(ex, config, vocabs),
        comment: frame_sequence(&ex.comment_tokens, config.comlen, &vocabs.com),
        reference: ex
            .comment_tokens
            .iter()
            .filter(|w| *w != START && *w != END)
            .cloned()
            .collect(),
    }
}

pub fn frame_examples(
    examples: &[ProcessedExample],
    config: &ModelConfig,
    vocabs: &Vocabs,
) -> Vec<FramedExample> {
    examples
        .iter()
        .map(|e| frame_example(e, config, vocabs))
        .collect()
}

/// One pair per comment position after the start token, up to and
/// including the end token (or the last non-padding slot when the comment
/// was truncated). A comment that does not open with the start token, or
/// has nothing after it, gives no pairs.
pub fn expand_pairs(comment: &[usize]) -> Vec<TrainingPair> {
    if comment.first() != Some(&START_INDEX) {
        return Vec::new();
    }
    let mut out = Vec::new();
    for k in 1..comment.len() {
        let target = comment[k];
        if target == PAD_INDEX {
            break;
        }
        let mut prefix = comment[..k].to_vec();
        prefix.resize(comment.len(), PAD_INDEX);
        out.push(TrainingPair { prefix, target });
        if target == END_INDEX {
            break;
        }
    }
    out
}
