//! The training loop with per-epoch validation and best-epoch selection,
//! plus batched prediction helpers.

use std::path::{Path, PathBuf};

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::decode::greedy_decode;
use super::pairs::{expand_pairs, FramedExample};
use super::InferError;
use crate::corpus::{Vocab, PAD_INDEX, START_INDEX};
use crate::metrics::{corpus_bleu, Keyed, Smoothing, COMPOSITE_WEIGHTS};
use crate::models::{save_checkpoint, EncoderInput, Model, ModelError};
use crate::nn::{Adam, AdamConfig, Gradients, NnError, Tensor};

/// Methods per encoder batch when decoding or scoring without gradients.
pub const DECODE_CHUNK: usize = 64;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrainConfig {
    pub epochs: usize,
    /// Methods per optimizer step. Every teacher-forcing pair of a method
    /// lands in the same batch.
    pub batch_size: usize,
    pub seed: u64,
    pub adam: AdamConfig,
    /// Validation methods scored per epoch, taken from the front.
    pub valid_cap: usize,
    /// Where to write one checkpoint per epoch, if anywhere.
    pub checkpoint_dir: Option<PathBuf>,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            epochs: 10,
            batch_size: 32,
            seed: 1,
            adam: AdamConfig::default(),
            valid_cap: 2000,
            checkpoint_dir: None,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct EpochReport {
    /// 1-based.
    pub epoch: usize,
    /// Mean cross-entropy per training pair.
    pub train_loss: f64,
    /// Composite corpus BLEU of greedy decodes on the validation subsample.
    pub valid_bleu: f64,
    /// Mean cross-entropy per validation pair.
    pub valid_loss: f64,
    pub checkpoint: Option<PathBuf>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct TrainRunReport {
    pub epochs: Vec<EpochReport>,
    /// 1-based epoch with the highest validation BLEU; ties go to the lower
    /// validation loss, then the earlier epoch.
    pub selected_epoch: usize,
    /// Loss of the first batch before any update.
    pub initial_loss: f64,
    /// Training methods without a usable comment.
    pub skipped_examples: usize,
}

impl TrainRunReport {
    pub fn selected(&self) -> &EpochReport {
        &self.epochs[self.selected_epoch - 1]
    }
}

#[derive(Clone, Debug)]
pub struct TrainRun {
    pub report: TrainRunReport,
    /// Parameters as they were after the selected epoch.
    pub best: Model<f32>,
    /// Parameters after the last epoch.
    pub last: Model<f32>,
}

/// Inputs, encoded-row indices, flat prefixes and targets for a batch.
struct Batch {
    inputs: Vec<EncoderInput>,
    rows: Vec<usize>,
    prefixes: Vec<usize>,
    targets: Vec<usize>,
}

fn make_batch<'a>(examples: impl IntoIterator<Item = &'a FramedExample>) -> Batch {
    let mut b = Batch {
        inputs: Vec::new(),
        rows: Vec::new(),
        prefixes: Vec::new(),
        targets: Vec::new(),
    };
    for ex in examples {
        let pairs = expand_pairs(&ex.comment);
        if pairs.is_empty() {
            continue;
        }
        let row = b.inputs.len();
        b.inputs.push(ex.input.clone());
        for p in pairs {
            b.rows.push(row);
            b.prefixes.extend(p.prefix);
            b.targets.push(p.target);
        }
    }
    b
}

fn check_params(
    model: &Model<f32>,
    epoch: usize,
    batch: usize,
    loss: f64,
) -> Result<(), InferError> {
    let norms = model.params().value_norms();
    if loss.is_finite() && norms.iter().all(|(_, n)| n.is_finite()) {
        return Ok(());
    }
    Err(InferError::NonFinite {
        epoch,
        batch,
        loss,
        norms,
    })
}

/// Mean cross-entropy per pair over `examples`, without gradients.
fn mean_loss(model: &Model<f32>, examples: &[FramedExample]) -> Result<f64, InferError> {
    let (mut sum, mut count) = (0.0, 0usize);
    for chunk in examples.chunks(DECODE_CHUNK) {
        let b = make_batch(chunk);
        if b.targets.is_empty() {
            continue;
        }
        let l = model.loss(&b.inputs, &b.rows, &b.prefixes, &b.targets, None)?;
        sum += l as f64 * b.targets.len() as f64;
        count += b.targets.len();
    }
    Ok(if count == 0 { 0.0 } else { sum / count as f64 })
}

/// Greedy summaries as words, decoding [`DECODE_CHUNK`] methods at a time.
pub fn decode_words(
    model: &Model<f32>,
    inputs: &[EncoderInput],
    com: &Vocab,
) -> Result<Vec<Vec<String>>, InferError> {
    let mut out = Vec::with_capacity(inputs.len());
    for chunk in inputs.chunks(DECODE_CHUNK) {
        for seq in greedy_decode(model, chunk)? {
            out.push(
                seq.iter()
                    .map(|&i| com.word(i).unwrap_or(crate::corpus::UNK).to_string())
                    .collect(),
            );
        }
    }
    Ok(out)
}

/// Greedy summaries keyed by method id.
pub fn predict(
    model: &Model<f32>,
    examples: &[FramedExample],
    com: &Vocab,
) -> Result<Keyed, InferError> {
    let inputs: Vec<EncoderInput> = examples.iter().map(|e| e.input.clone()).collect();
    let words = decode_words(model, &inputs, com)?;
    Ok(examples.iter().map(|e| e.id).zip(words).collect())
}

/// Attention weights recorded while generating `predicted` (word indices
/// without delimiters). `txt` is `[comlen, txtlen]` and `ast`, for models
/// with an AST encoder, `[comlen, astlen]`; row `t` produced output word `t`.
#[derive(Clone, Debug)]
pub struct AttentionMaps {
    pub txt: Tensor<f32>,
    pub ast: Option<Tensor<f32>>,
}

pub fn attention_maps(
    model: &Model<f32>,
    input: &EncoderInput,
    predicted: &[usize],
) -> Result<AttentionMaps, InferError> {
    let c = model.config();
    let mut prefix = vec![PAD_INDEX; c.comlen];
    prefix[0] = START_INDEX;
    for (slot, &w) in prefix[1..].iter_mut().zip(predicted) {
        *slot = w;
    }
    let dec = model.forward(std::slice::from_ref(input), &prefix)?;
    let txt = Tensor::from_vec(&[c.comlen, c.txtlen], dec.txt_attn.data().to_vec())
        .map_err(ModelError::from)?;
    let ast = match dec.ast_attn {
        Some(a) => Some(
            Tensor::from_vec(&[c.comlen, c.astlen], a.data().to_vec()).map_err(ModelError::from)?,
        ),
        None => None,
    };
    Ok(AttentionMaps { txt, ast })
}

fn valid_bleu(model: &Model<f32>, valid: &[FramedExample], com: &Vocab) -> Result<f64, InferError> {
    let inputs: Vec<EncoderInput> = valid.iter().map(|e| e.input.clone()).collect();
    let preds = decode_words(model, &inputs, com)?;
    let refs: Vec<Vec<String>> = valid.iter().map(|e| e.reference.clone()).collect();
    Ok(corpus_bleu(
        &preds,
        &refs,
        &COMPOSITE_WEIGHTS,
        Smoothing::None,
    )?)
}

fn checkpoint_path(dir: &Path, epoch: usize) -> PathBuf {
    dir.join(format!("epoch-{epoch:03}.ckpt"))
}

/// Trains with seeded per-epoch shuffles and Adam, scores the validation
/// subsample after every epoch, and keeps the best epoch's parameters.
/// `on_epoch` sees each epoch's report as soon as it is complete.
pub fn train(
    mut model: Model<f32>,
    train_set: &[FramedExample],
    valid_set: &[FramedExample],
    com: &Vocab,
    cfg: &TrainConfig,
    mut on_epoch: impl FnMut(&EpochReport),
) -> Result<TrainRun, InferError> {
    if cfg.epochs == 0 || cfg.batch_size == 0 {
        return Err(InferError::Config(
            "epochs and batch_size must be positive".into(),
        ));
    }
    if valid_set.is_empty() {
        return Err(InferError::Config("the validation set is empty".into()));
    }
    if com.len() != model.config().comvocabsize {
        return Err(InferError::Config(format!(
            "comment vocabulary has {} words but the model expects {}",
            com.len(),
            model.config().comvocabsize
        )));
    }
    let usable: Vec<&FramedExample> = train_set
        .iter()
        .filter(|e| !expand_pairs(&e.comment).is_empty())
        .collect();
    if usable.is_empty() {
        return Err(InferError::Config(
            "no training method has a usable comment".into(),
        ));
    }
    let valid = &valid_set[..valid_set.len().min(cfg.valid_cap.max(1))];
    if let Some(dir) = &cfg.checkpoint_dir {
        std::fs::create_dir_all(dir).map_err(|source| InferError::Io {
            path: dir.clone(),
            source,
        })?;
    }

    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut adam = Adam::new(cfg.adam);
    let mut order: Vec<usize> = (0..usable.len()).collect();
    let mut epochs = Vec::with_capacity(cfg.epochs);
    let mut initial_loss = None;
    let mut best: Option<(f64, f64, Model<f32>)> = None;

    for epoch in 1..=cfg.epochs {
        order.shuffle(&mut rng);
        let (mut sum, mut count) = (0.0, 0usize);
        for (bi, idx) in order.chunks(cfg.batch_size).enumerate() {
            let b = make_batch(idx.iter().map(|&i| usable[i]));
            let mut grads = Gradients::new();
            let loss = match model.loss(
                &b.inputs,
                &b.rows,
                &b.prefixes,
                &b.targets,
                Some(&mut grads),
            ) {
                Ok(l) => l as f64,
                Err(ModelError::Nn(NnError::NonFinite(_))) => f64::NAN,
                Err(e) => return Err(e.into()),
            };
            check_params(&model, epoch, bi + 1, loss)?;
            initial_loss.get_or_insert(loss);
            model
                .params_mut()
                .accumulate(&grads)
                .map_err(ModelError::from)?;
            adam.step(model.params_mut());
            check_params(&model, epoch, bi + 1, loss)?;
            sum += loss * b.targets.len() as f64;
            count += b.targets.len();
        }
        let checkpoint = match &cfg.checkpoint_dir {
            Some(dir) => {
                let p = checkpoint_path(dir, epoch);
                save_checkpoint(&model, &p)?;
                Some(p)
            }
            None => None,
        };
        let report = EpochReport {
            epoch,
            train_loss: sum / count as f64,
            valid_bleu: valid_bleu(&model, valid, com)?,
            valid_loss: mean_loss(&model, valid)?,
            checkpoint,
        };
        let better = match &best {
            None => true,
            Some((bleu, loss, _)) => {
                report.valid_bleu > *bleu
                    || (report.valid_bleu == *bleu && report.valid_loss < *loss)
            }
        };
        if better {
            best = Some((report.valid_bleu, report.valid_loss, model.clone()));
        }
        on_epoch(&report);
        epochs.push(report);
    }

    let (bleu, loss, best_model) = best.expect("at least one epoch ran");
    let selected_epoch = epochs
        .iter()
        .position(|e| e.valid_bleu == bleu && e.valid_loss == loss)
        .expect("best epoch is recorded")
        + 1;
    Ok(TrainRun {
        report: TrainRunReport {
            epochs,
            selected_epoch,
            initial_loss: initial_loss.unwrap_or(0.0),
            skipped_examples: train_set.len() - usable.len(),
        },
        best: best_model,
        last: model,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::{build_vocab, frame_sequence};
    use crate::models::{ModelConfig, ModelKind};

    fn toy() -> (Vec<FramedExample>, Vocab, ModelConfig) {
        let comments = [
            "sets the name",
            "gets the name",
            "closes the stream",
            "opens a file",
        ];
        let codes = ["set name", "get name", "close stream", "open file"];
        let txt = build_vocab(codes.iter().map(|c| c.split(' ').collect::<Vec<_>>()), 100);
        let com = build_vocab(
            comments.iter().map(|c| c.split(' ').collect::<Vec<_>>()),
            100,
        );
        let mut cfg = ModelConfig::new(ModelKind::AttendGru, txt.len(), 4, com.len());
        (cfg.txtlen, cfg.comlen, cfg.embdims, cfg.rnndims) = (4, 5, 8, 12);
        let framed = codes
            .iter()
            .zip(comments)
            .enumerate()
            .map(|(i, (code, comment))| {
                let words: Vec<&str> = comment.split(' ').collect();
                let framed_comment: Vec<&str> = ["<s>"]
                    .into_iter()
                    .chain(words.iter().copied())
                    .chain(["</s>"])
                    .collect();
                FramedExample {
                    id: i as u64,
                    input: EncoderInput {
                        primary: frame_sequence(&code.split(' ').collect::<Vec<_>>(), 4, &txt),
                        ast: None,
                    },
                    comment: frame_sequence(&framed_comment, 5, &com),
                    reference: words.iter().map(|w| w.to_string()).collect(),
                }
            })
            .collect();
        (framed, com, cfg)
    }

    fn run(seed: u64, epochs: usize) -> TrainRun {
        let (data, com, mc) = toy();
        let cfg = TrainConfig {
            epochs,
            batch_size: 2,
            seed,
            adam: AdamConfig {
                lr: 0.02,
                ..AdamConfig::default()
            },
            ..TrainConfig::default()
        };
        train(
            Model::init(mc, 7).unwrap(),
            &data,
            &data,
            &com,
            &cfg,
            |_| {},
        )
        .unwrap()
    }

    #[test]
    fn same_seed_same_losses() {
        let a = run(3, 3);
        let b = run(3, 3);
        let bits = |r: &TrainRun| {
            r.report
                .epochs
                .iter()
                .map(|e| e.train_loss.to_bits())
                .collect::<Vec<_>>()
        };
        assert_eq!(bits(&a), bits(&b));
        assert_ne!(bits(&a), bits(&run(4, 3)));
    }

    #[test]
    fn overfits_and_selects_an_epoch() {
        let r = run(1, 60);
        let last = r.report.epochs.last().unwrap();
        assert!(
            last.train_loss < 0.1 * r.report.initial_loss,
            "{} vs {}",
            last.train_loss,
            r.report.initial_loss
        );
        assert!((1..=60).contains(&r.report.selected_epoch));
        let sel = r.report.selected();
        assert!(r
            .report
            .epochs
            .iter()
            .all(|e| e.valid_bleu <= sel.valid_bleu));
        let (data, com, _) = toy();
        let preds = predict(&r.best, &data, &com).unwrap();
        for ex in &data {
            assert_eq!(preds[&ex.id], ex.reference);
        }
    }

    #[test]
    fn checkpoints_and_errors() {
        let (data, com, mc) = toy();
        let dir = tempfile::tempdir().unwrap();
        let cfg = TrainConfig {
            epochs: 2,
            checkpoint_dir: Some(dir.path().to_path_buf()),
            ..TrainConfig::default()
        };
        let mut seen = 0;
        let r = train(
            Model::init(mc.clone(), 1).unwrap(),
            &data,
            &data,
            &com,
            &cfg,
            |_| seen += 1,
        )
        .unwrap();
        assert_eq!(seen, 2);
        for e in &r.report.epochs {
            assert!(e.checkpoint.as_ref().unwrap().exists());
        }
        let empty = train(
            Model::init(mc.clone(), 1).unwrap(),
            &data,
            &[],
            &com,
            &cfg,
            |_| {},
        );
        assert!(matches!(empty, Err(InferError::Config(_))));
        let mut blank = data.clone();
        blank[0].comment = vec![PAD_INDEX; 5];
        let r = train(
            Model::init(mc, 1).unwrap(),
            &blank,
            &data,
            &com,
            &TrainConfig {
                epochs: 1,
                ..TrainConfig::default()
            },
            |_| {},
        )
        .unwrap();
        assert_eq!(r.report.skipped_examples, 1);
    }

    #[test]
    fn non_finite_loss_aborts_with_diagnostics() {
        let (data, com, mc) = toy();
        let mut model = Model::init(mc, 1).unwrap();
        model
            .params_mut()
            .value_mut("out_dense.kernel")
            .unwrap()
            .data_mut()[0] = f32::NAN;
        let cfg = TrainConfig {
            epochs: 1,
            ..TrainConfig::default()
        };
        match train(model, &data, &data, &com, &cfg, |_| {}) {
            Err(InferError::NonFinite {
                epoch,
                batch,
                norms,
                ..
            }) => {
                assert_eq!((epoch, batch), (1, 1));
                assert!(norms
                    .iter()
                    .any(|(n, v)| n == "out_dense.kernel" && v.is_nan()));
            }
            other => panic!("expected NonFinite, got {other:?}"),
        }
    }

    #[test]
    fn attention_rows_are_distributions() {
        let (data, _, mut mc) = toy();
        let model = Model::init(mc.clone(), 2).unwrap();
        let a = attention_maps(&model, &data[0].input, &[4, 5]).unwrap();
        assert_eq!(a.txt.shape(), [5, 4]);
        assert!(a.ast.is_none());
        for t in 0..5 {
            let s: f32 = a.txt.row(t).iter().sum();
            assert!((s - 1.0).abs() < 1e-5);
        }
        (mc.kind, mc.astlen, mc.astvocabsize) = (ModelKind::AstAttendGru, 3, 6);
        let model = Model::init(mc, 2).unwrap();
        let mut input = data[0].input.clone();
        input.ast = Some(vec![4, 5, 0]);
        let a = attention_maps(&model, &input, &[]).unwrap();
        let ast = a.ast.unwrap();
        assert_eq!(ast.shape(), [5, 3]);
        assert!((0..5).all(|t| (ast.row(t).iter().sum::<f32>() - 1.0).abs() < 1e-5));
    }
}
