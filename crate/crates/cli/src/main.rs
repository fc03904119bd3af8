mod commands;
mod java_tree;
mod settings;

use std::path::PathBuf;

use clap::{Parser, Subcommand};
use settings::Settings;

#[derive(Parser, Debug)]
#[command(
    name = "codesum",
    version,
    about = "Summarize Java methods with attentional GRU encoder-decoders"
)]
struct Cli {
    /// TOML file with default settings; flags and environment win over it.
    #[arg(long, env = "CODESUM_CONFIG", global = true)]
    config: Option<PathBuf>,
    #[command(flatten)]
    settings: Settings,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Filter, tokenize and split raw methods into a dataset directory.
    Prep(commands::PrepArgs),
    /// Train a model on a dataset and keep the best validation epoch.
    Train(commands::TrainArgs),
    /// Greedy summaries for one dataset split.
    Predict(commands::PredictArgs),
    /// BLEU scores and first-word accuracy of predictions.
    Eval(commands::EvalArgs),
    /// Summaries from the averaged outputs of several models.
    Ensemble(commands::EnsembleArgs),
    /// Attention weights for one method, as CSV matrices.
    Attention(commands::AttentionArgs),
}

fn main() -> anyhow::Result<()> {
    let cli = Cli::parse();
    let file = match &cli.config {
        Some(p) => Settings::load(p)?,
        None => Settings::default(),
    };
    let run = cli.settings.over(file).resolve()?;
    match cli.command {
        Command::Prep(a) => commands::prep(&run, &a),
        Command::Train(a) => commands::train(&run, &a),
        Command::Predict(a) => commands::predict(&run, &a),
        Command::Eval(a) => commands::eval(&run, &a),
        Command::Ensemble(a) => commands::ensemble(&run, &a),
        Command::Attention(a) => commands::attention(&run, &a),
    }
}
