//! Run settings: command-line flags over `CODESUM_*` environment variables
//! over a TOML config file over built-in defaults.

use std::path::{Path, PathBuf};

use anyhow::Context;
use clap::Args;
use codesum::ast::LeafMode;
use codesum::corpus::CorpusConfig;
use codesum::infer::TrainConfig;
use codesum::metrics::Smoothing;
use codesum::models::{InputSource, ModelConfig, ModelKind};
use codesum::nn::AdamConfig;
use serde::{Deserialize, Serialize};

/// Every tunable, optional at each layer. Clap fills flags and environment
/// variables; the config file fills the same fields by name.
#[derive(Args, Clone, Debug, Default, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Settings {
    #[arg(long, env = "CODESUM_SEED", global = true)]
    pub seed: Option<u64>,
    #[arg(long, env = "CODESUM_KIND", global = true)]
    pub kind: Option<ModelKind>,
    /// Primary encoder input: code, sbt or sbtao.
    #[arg(long, env = "CODESUM_ENCODER_INPUT", global = true)]
    pub encoder_input: Option<InputSource>,
    #[arg(long, env = "CODESUM_EPOCHS", global = true)]
    pub epochs: Option<usize>,
    #[arg(long, env = "CODESUM_BATCH_SIZE", global = true)]
    pub batch_size: Option<usize>,
    #[arg(long, env = "CODESUM_LR", global = true)]
    pub lr: Option<f64>,
    #[arg(long, env = "CODESUM_VALID_CAP", global = true)]
    pub valid_cap: Option<usize>,
    #[arg(long, env = "CODESUM_EMBDIMS", global = true)]
    pub embdims: Option<usize>,
    #[arg(long, env = "CODESUM_RNNDIMS", global = true)]
    pub rnndims: Option<usize>,
    #[arg(long, env = "CODESUM_TXTLEN", global = true)]
    pub txtlen: Option<usize>,
    #[arg(long, env = "CODESUM_ASTLEN", global = true)]
    pub astlen: Option<usize>,
    #[arg(long, env = "CODESUM_COMLEN", global = true)]
    pub comlen: Option<usize>,
    #[arg(long, env = "CODESUM_TXT_VOCAB", global = true)]
    pub txt_vocab: Option<usize>,
    #[arg(long, env = "CODESUM_AST_VOCAB", global = true)]
    pub ast_vocab: Option<usize>,
    #[arg(long, env = "CODESUM_COM_VOCAB", global = true)]
    pub com_vocab: Option<usize>,
    #[arg(long, env = "CODESUM_SBT_VOCAB", global = true)]
    pub sbt_vocab: Option<usize>,
    /// Corpus-level BLEU smoothing: none, epsilon or epsilon:<value>.
    #[arg(long, env = "CODESUM_SMOOTHING", global = true)]
    pub smoothing: Option<String>,
    /// Leaf rendering in plain SBT: both or closing.
    #[arg(long, env = "CODESUM_SBT_MODE", global = true)]
    pub sbt_mode: Option<LeafMode>,
    /// File of API class names kept in SBT-AO, one per line.
    #[arg(long, env = "CODESUM_WHITELIST", global = true)]
    pub whitelist: Option<PathBuf>,
}

macro_rules! layer {
    ($top:expr, $below:expr, $($f:ident),*) => {
        Settings { $($f: $top.$f.or($below.$f)),* }
    };
}

impl Settings {
    /// Fields set here win; the rest come from `below`.
    pub fn over(self, below: Settings) -> Settings {
        layer!(
            self,
            below,
            seed,
            kind,
            encoder_input,
            epochs,
            batch_size,
            lr,
            valid_cap,
            embdims,
            rnndims,
            txtlen,
            astlen,
            comlen,
            txt_vocab,
            ast_vocab,
            com_vocab,
            sbt_vocab,
            smoothing,
            sbt_mode,
            whitelist
        )
    }

    pub fn load(path: &Path) -> anyhow::Result<Settings> {
        let text = std::fs::read_to_string(path)
            .with_context(|| format!("reading config {}", path.display()))?;
        toml::from_str(&text).with_context(|| format!("parsing config {}", path.display()))
    }

    pub fn resolve(self) -> anyhow::Result<Resolved> {
        let corpus = CorpusConfig::default();
        let train = TrainConfig::default();
        let kind = self.kind.unwrap_or(ModelKind::AstAttendGru);
        let smoothing: Smoothing = match &self.smoothing {
            Some(s) => s.parse().map_err(anyhow::Error::msg)?,
            None => Smoothing::None,
        };
        Ok(Resolved {
            seed: self.seed.unwrap_or(corpus.seed),
            kind,
            input: self.encoder_input.unwrap_or(kind.default_input()),
            epochs: self.epochs.unwrap_or(train.epochs),
            batch_size: self.batch_size.unwrap_or(train.batch_size),
            lr: self.lr.unwrap_or(train.adam.lr),
            valid_cap: self.valid_cap.unwrap_or(train.valid_cap),
            embdims: self.embdims.unwrap_or(100),
            rnndims: self.rnndims.unwrap_or(256),
            txtlen: self.txtlen.unwrap_or(corpus.txtlen),
            astlen: self.astlen.unwrap_or(corpus.astlen),
            comlen: self.comlen.unwrap_or(corpus.comlen),
            txt_vocab: self.txt_vocab.unwrap_or(corpus.txt_vocab_size),
            ast_vocab: self.ast_vocab.unwrap_or(corpus.ast_vocab_size),
            com_vocab: self.com_vocab.unwrap_or(corpus.com_vocab_size),
            sbt_vocab: self.sbt_vocab.unwrap_or(corpus.sbt_vocab_size),
            smoothing: smoothing.to_string(),
            sbt_mode: self.sbt_mode.unwrap_or(corpus.leaf_mode),
            whitelist: self.whitelist,
        })
    }
}

/// Fully resolved settings, echoed into every `run.json`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Resolved {
    pub seed: u64,
    pub kind: ModelKind,
    pub input: InputSource,
    pub epochs: usize,
    pub batch_size: usize,
    pub lr: f64,
    pub valid_cap: usize,
    pub embdims: usize,
    pub rnndims: usize,
    pub txtlen: usize,
    pub astlen: usize,
    pub comlen: usize,
    pub txt_vocab: usize,
    pub ast_vocab: usize,
    pub com_vocab: usize,
    pub sbt_vocab: usize,
    pub smoothing: String,
    pub sbt_mode: LeafMode,
    pub whitelist: Option<PathBuf>,
}

impl Resolved {
    pub fn smoothing(&self) -> Smoothing {
        self.smoothing.parse().expect("validated while resolving")
    }

    pub fn corpus_config(&self) -> CorpusConfig {
        CorpusConfig {
            txtlen: self.txtlen,
            astlen: self.astlen,
            comlen: self.comlen,
            txt_vocab_size: self.txt_vocab,
            ast_vocab_size: self.ast_vocab,
            com_vocab_size: self.com_vocab,
            sbt_vocab_size: self.sbt_vocab,
            seed: self.seed,
            leaf_mode: self.sbt_mode,
            ..CorpusConfig::default()
        }
    }

    pub fn train_config(&self, checkpoint_dir: PathBuf) -> TrainConfig {
        TrainConfig {
            epochs: self.epochs,
            batch_size: self.batch_size,
            seed: self.seed,
            adam: AdamConfig {
                lr: self.lr,
                ..AdamConfig::default()
            },
            valid_cap: self.valid_cap,
            checkpoint_dir: Some(checkpoint_dir),
        }
    }

    /// Overrides the dims and lengths of a vocabulary-sized config.
    pub fn shape_model(&self, mut c: ModelConfig) -> ModelConfig {
        c.txtlen = self.txtlen;
        c.astlen = self.astlen;
        c.comlen = self.comlen;
        c.embdims = self.embdims;
        c.rnndims = self.rnndims;
        c
    }
}
