use std::path::{Path, PathBuf};

use anyhow::{bail, ensure, Context};
use clap::{Args, ValueEnum};
use codesum::ast::ApiWhitelist;
use codesum::corpus::{
    load_dataset, prepare, write_atomic, write_dataset, AutogenPhrases, Dataset, ProcessedExample,
    Vocabs, END, START, UNK,
};
use codesum::infer::{
    attention_maps, ensemble_decode, frame_examples, greedy_decode, model_config,
    predict as predict_split, primary_vocab, train as train_model, DECODE_CHUNK,
};
use codesum::metrics::{evaluate_with, orthogonality, read_keyed_tsv, write_keyed_tsv, Keyed};
use codesum::models::{load_checkpoint, save_checkpoint, Model};
use codesum::nn::Tensor;
use serde::Serialize;

use crate::java_tree::read_records;
use crate::settings::Resolved;

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Split {
    Train,
    Valid,
    Test,
}

#[derive(Args, Debug, Serialize)]
pub struct PrepArgs {
    /// A directory of Java sources (one project per top-level directory) or a methods TSV.
    #[arg(long)]
    pub input: PathBuf,
    /// Dataset directory to write.
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Args, Debug, Serialize)]
pub struct TrainArgs {
    #[arg(long)]
    pub dataset: PathBuf,
    /// Run directory for checkpoints, the report and the selected model.
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Args, Debug, Serialize)]
pub struct PredictArgs {
    #[arg(long)]
    pub checkpoint: PathBuf,
    #[arg(long)]
    pub dataset: PathBuf,
    #[arg(long, value_enum, default_value = "test")]
    pub split: Split,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Args, Debug, Serialize)]
pub struct EvalArgs {
    /// `id \t words` predictions.
    #[arg(long)]
    pub predictions: PathBuf,
    /// `id \t words` references.
    #[arg(long)]
    pub references: PathBuf,
    /// A second system's predictions to compare method by method.
    #[arg(long)]
    pub versus: Option<PathBuf>,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Args, Debug, Serialize)]
pub struct EnsembleArgs {
    /// Member checkpoints; repeat the flag for each.
    #[arg(long = "checkpoint", required = true)]
    pub checkpoints: Vec<PathBuf>,
    #[arg(long)]
    pub dataset: PathBuf,
    #[arg(long, value_enum, default_value = "test")]
    pub split: Split,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Args, Debug, Serialize)]
pub struct AttentionArgs {
    #[arg(long)]
    pub checkpoint: PathBuf,
    #[arg(long)]
    pub dataset: PathBuf,
    #[arg(long, value_enum, default_value = "test")]
    pub split: Split,
    #[arg(long)]
    pub method_id: u64,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Serialize)]
struct RunRecord<'a, A: Serialize> {
    command: &'a str,
    settings: &'a Resolved,
    paths: &'a A,
}

fn write_json(path: &Path, value: &impl Serialize) -> anyhow::Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    write_atomic(path, text.as_bytes()).with_context(|| format!("writing {}", path.display()))
}

fn write_text(path: &Path, text: &str) -> anyhow::Result<()> {
    write_atomic(path, text.as_bytes()).with_context(|| format!("writing {}", path.display()))
}

fn start(out: &Path, command: &str, run: &Resolved, paths: &impl Serialize) -> anyhow::Result<()> {
    std::fs::create_dir_all(out).with_context(|| format!("creating {}", out.display()))?;
    write_json(
        &out.join("run.json"),
        &RunRecord {
            command,
            settings: run,
            paths,
        },
    )
}

fn load(dataset: &Path) -> anyhow::Result<Dataset> {
    load_dataset(dataset).with_context(|| format!("loading dataset {}", dataset.display()))
}

fn pick(ds: &Dataset, split: Split) -> &[ProcessedExample] {
    match split {
        Split::Train => &ds.train,
        Split::Valid => &ds.valid,
        Split::Test => &ds.test,
    }
}

fn load_model(path: &Path, vocabs: &Vocabs) -> anyhow::Result<Model<f32>> {
    let m =
        load_checkpoint(path).with_context(|| format!("loading checkpoint {}", path.display()))?;
    let c = m.config();
    let want = (primary_vocab(c.input, vocabs).len(), vocabs.com.len());
    ensure!(
        (c.txtvocabsize, c.comvocabsize) == want
            && (!c.kind.has_ast_encoder() || c.astvocabsize == vocabs.ast.len()),
        "{} was trained with different vocabularies than this dataset",
        path.display()
    );
    Ok(m)
}

fn references(examples: &[ProcessedExample]) -> Keyed {
    examples
        .iter()
        .map(|e| {
            let words = e
                .comment_tokens
                .iter()
                .filter(|w| *w != START && *w != END)
                .cloned()
                .collect();
            (e.id, words)
        })
        .collect()
}

pub fn prep(run: &Resolved, a: &PrepArgs) -> anyhow::Result<()> {
    start(&a.out, "prep", run, a)?;
    let records = read_records(&a.input)?;
    let whitelist = match &run.whitelist {
        Some(p) => {
            ApiWhitelist::load(p).with_context(|| format!("reading whitelist {}", p.display()))?
        }
        None => ApiWhitelist::java_lang(),
    };
    let prepared = prepare(
        &records,
        &run.corpus_config(),
        &whitelist,
        &AutogenPhrases::default(),
    )?;
    write_dataset(&a.out, &prepared.split, &prepared.vocabs)?;
    write_json(&a.out.join("prep_stats.json"), &prepared.stats)?;
    let s = &prepared.split;
    eprintln!(
        "prep: {} records -> train {}, valid {}, test {}",
        records.len(),
        s.train.len(),
        s.valid.len(),
        s.test.len()
    );
    eprintln!("prep: {}", serde_json::to_string(&prepared.stats)?);
    Ok(())
}

pub fn train(run: &Resolved, a: &TrainArgs) -> anyhow::Result<()> {
    start(&a.out, "train", run, a)?;
    let ds = load(&a.dataset)?;
    let config = run.shape_model(model_config(run.kind, run.input, &ds.vocabs));
    let model = Model::init(config.clone(), run.seed)?;
    let train_set = frame_examples(&ds.train, &config, &ds.vocabs);
    let valid_set = frame_examples(&ds.valid, &config, &ds.vocabs);
    eprintln!(
        "train: {} on {} with {} training and {} validation methods",
        run.kind,
        run.input,
        train_set.len(),
        valid_set.len()
    );
    let cfg = run.train_config(a.out.join("checkpoints"));
    let result = train_model(model, &train_set, &valid_set, &ds.vocabs.com, &cfg, |e| {
        eprintln!(
            "epoch {:>3}: train loss {:.4}, valid loss {:.4}, valid BLEU {:.2}",
            e.epoch, e.train_loss, e.valid_loss, e.valid_bleu
        );
    })?;
    save_checkpoint(&result.best, &a.out.join("model.ckpt"))?;
    write_json(&a.out.join("report.json"), &result.report)?;
    eprintln!("train: selected epoch {}", result.report.selected_epoch);
    Ok(())
}

pub fn predict(run: &Resolved, a: &PredictArgs) -> anyhow::Result<()> {
    start(&a.out, "predict", run, a)?;
    let ds = load(&a.dataset)?;
    let model = load_model(&a.checkpoint, &ds.vocabs)?;
    let examples = pick(&ds, a.split);
    let framed = frame_examples(examples, model.config(), &ds.vocabs);
    let preds = predict_split(&model, &framed, &ds.vocabs.com)?;
    write_text(&a.out.join("predictions.tsv"), &write_keyed_tsv(&preds))?;
    write_text(
        &a.out.join("references.tsv"),
        &write_keyed_tsv(&references(examples)),
    )?;
    eprintln!("predict: {} methods", preds.len());
    Ok(())
}

fn read_keyed(path: &Path) -> anyhow::Result<Keyed> {
    let text =
        std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    read_keyed_tsv(&text).with_context(|| format!("parsing {}", path.display()))
}

#[derive(Serialize)]
struct EvalJson {
    #[serde(flatten)]
    report: codesum::metrics::EvalReport,
    smoothing: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    versus: Option<codesum::metrics::Orthogonality>,
}

pub fn eval(run: &Resolved, a: &EvalArgs) -> anyhow::Result<()> {
    start(&a.out, "eval", run, a)?;
    let preds = read_keyed(&a.predictions)?;
    let refs = read_keyed(&a.references)?;
    let report = evaluate_with(&preds, &refs, run.smoothing())?;
    let versus = match &a.versus {
        Some(p) => Some(orthogonality(&preds, &read_keyed(p)?, &refs)?),
        None => None,
    };
    let mut rows = String::from("id\tsentence_bleu\tprediction\treference\n");
    for (id, score) in &report.per_method {
        rows.push_str(&format!(
            "{id}\t{score:.6}\t{}\t{}\n",
            preds[id].join(" "),
            refs[id].join(" ")
        ));
    }
    write_text(&a.out.join("permethod.tsv"), &rows)?;
    if let Some(o) = &versus {
        let mut rows = String::from("id\tsentence_bleu_a\tsentence_bleu_b\n");
        for (id, x, y) in &o.rows {
            rows.push_str(&format!("{id}\t{x:.6}\t{y:.6}\n"));
        }
        write_text(&a.out.join("versus.tsv"), &rows)?;
    }
    eprintln!(
        "eval: composite {:.2}, BLEU1-4 {:.2}/{:.2}/{:.2}/{:.2} over {} methods",
        report.composite,
        report.bleu[0],
        report.bleu[1],
        report.bleu[2],
        report.bleu[3],
        report.methods
    );
    write_json(
        &a.out.join("eval.json"),
        &EvalJson {
            report,
            smoothing: run.smoothing.clone(),
            versus,
        },
    )
}

pub fn ensemble(run: &Resolved, a: &EnsembleArgs) -> anyhow::Result<()> {
    start(&a.out, "ensemble", run, a)?;
    let ds = load(&a.dataset)?;
    let models = a
        .checkpoints
        .iter()
        .map(|p| load_model(p, &ds.vocabs))
        .collect::<anyhow::Result<Vec<_>>>()?;
    let examples = pick(&ds, a.split);
    let framed: Vec<_> = models
        .iter()
        .map(|m| frame_examples(examples, m.config(), &ds.vocabs))
        .collect();
    let members: Vec<&Model<f32>> = models.iter().collect();
    let mut preds = Keyed::new();
    for start in (0..examples.len()).step_by(DECODE_CHUNK) {
        let end = (start + DECODE_CHUNK).min(examples.len());
        let inputs: Vec<Vec<_>> = framed
            .iter()
            .map(|f| f[start..end].iter().map(|e| e.input.clone()).collect())
            .collect();
        for (ex, seq) in examples[start..end]
            .iter()
            .zip(ensemble_decode(&members, &inputs)?)
        {
            preds.insert(
                ex.id,
                seq.iter()
                    .map(|&i| ds.vocabs.com.word(i).unwrap_or(UNK).to_string())
                    .collect(),
            );
        }
    }
    write_text(&a.out.join("predictions.tsv"), &write_keyed_tsv(&preds))?;
    write_text(
        &a.out.join("references.tsv"),
        &write_keyed_tsv(&references(examples)),
    )?;
    eprintln!(
        "ensemble: {} members, {} methods",
        members.len(),
        preds.len()
    );
    Ok(())
}

fn csv(t: &Tensor<f32>) -> String {
    let mut s = String::new();
    for r in 0..t.shape()[0] {
        let row: Vec<String> = t.row(r).iter().map(|v| v.to_string()).collect();
        s.push_str(&row.join(","));
        s.push('\n');
    }
    s
}

#[derive(Serialize)]
struct AttentionJson {
    id: u64,
    prediction: Vec<String>,
    reference: Vec<String>,
    code: Vec<String>,
}

pub fn attention(run: &Resolved, a: &AttentionArgs) -> anyhow::Result<()> {
    start(&a.out, "attention", run, a)?;
    let ds = load(&a.dataset)?;
    let model = load_model(&a.checkpoint, &ds.vocabs)?;
    let examples = pick(&ds, a.split);
    let Some(ex) = examples.iter().find(|e| e.id == a.method_id) else {
        let ids: Vec<String> = examples.iter().take(50).map(|e| e.id.to_string()).collect();
        let more = if examples.len() > ids.len() {
            ", ..."
        } else {
            ""
        };
        bail!(
            "method {} is not in the {:?} split; available ids ({}): {}{more}",
            a.method_id,
            a.split,
            examples.len(),
            ids.join(", ")
        );
    };
    let framed = &frame_examples(std::slice::from_ref(ex), model.config(), &ds.vocabs)[0];
    let predicted = greedy_decode(&model, std::slice::from_ref(&framed.input))?.remove(0);
    let maps = attention_maps(&model, &framed.input, &predicted)?;
    write_text(&a.out.join("txt_attn.csv"), &csv(&maps.txt))?;
    if let Some(ast) = &maps.ast {
        write_text(&a.out.join("ast_attn.csv"), &csv(ast))?;
    }
    let vocab = primary_vocab(model.config().input, &ds.vocabs);
    write_json(
        &a.out.join("attention.json"),
        &AttentionJson {
            id: ex.id,
            prediction: predicted
                .iter()
                .map(|&i| ds.vocabs.com.word(i).unwrap_or(UNK).to_string())
                .collect(),
            reference: framed.reference.clone(),
            code: framed
                .input
                .primary
                .iter()
                .map(|&i| vocab.word(i).unwrap_or(UNK).to_string())
                .collect(),
        },
    )?;
    eprintln!("attention: method {} -> {}", ex.id, a.out.display());
    Ok(())
}
