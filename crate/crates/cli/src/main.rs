//! `pivotmt`, the command-line driver.
//!
//! Every subcommand reads the pipeline configuration (defaults, then
//! `--config FILE`, then `--set KEY=VALUE` overrides, then `--seed`), does one
//! stage of work and records what it wrote in `<run_dir>/manifest.txt`.

mod commands;

use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

#[derive(Parser, Debug)]
#[command(name = "pivotmt", version, about = "Pivot-language statistical machine translation")]
struct Cli {
    /// Config file of `key = value` lines.
    #[arg(long, global = true, value_name = "FILE")]
    config: Option<PathBuf>,

    /// Master seed; every stage derives its own seed from it.
    #[arg(long, global = true, value_name = "N")]
    seed: Option<u64>,

    /// Override one config key. Repeatable; applied after the config file.
    #[arg(long = "set", global = true, value_name = "KEY=VALUE")]
    overrides: Vec<String>,

    /// Directory for default outputs and the manifest.
    #[arg(long, global = true, value_name = "DIR")]
    run_dir: Option<PathBuf>,

    /// Only log warnings and errors.
    #[arg(long, short, global = true)]
    quiet: bool,

    #[command(subcommand)]
    command: Command,
}

/// Languages of a parallel corpus stem (`stem.<src>`, `stem.<tgt>`).
/// Defaults come from `src_lang` / `tgt_lang` in the config.
#[derive(Args, Debug, Clone)]
pub struct LangPair {
    #[arg(long, value_name = "LANG")]
    pub src_lang: Option<String>,
    #[arg(long, value_name = "LANG")]
    pub tgt_lang: Option<String>,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Drop empty, overlong, badly length-matched and copied pairs.
    Clean {
        #[arg(long, value_name = "STEM")]
        input: PathBuf,
        #[arg(long, value_name = "STEM")]
        output: Option<PathBuf>,
        #[command(flatten)]
        langs: LangPair,
    },
    /// Seeded train/valid/test split of a parallel corpus.
    Split {
        #[arg(long, value_name = "STEM")]
        input: PathBuf,
        #[arg(long, value_name = "DIR")]
        output_dir: Option<PathBuf>,
        #[command(flatten)]
        langs: LangPair,
    },
    /// Print pair, token and provenance counts of a parallel corpus.
    Stats {
        #[arg(long, value_name = "STEM")]
        input: PathBuf,
        #[command(flatten)]
        langs: LangPair,
        /// One JSON line instead of `key: value` lines.
        #[arg(long)]
        json: bool,
    },
    /// Generate the synthetic trilingual corpora of the experiment.
    GenData {
        #[arg(long, value_name = "DIR")]
        output_dir: Option<PathBuf>,
    },
    /// Learn a joint BPE model over one or more text files.
    BpeLearn {
        #[arg(long, value_name = "FILE", required = true, num_args = 1..)]
        input: Vec<PathBuf>,
        #[arg(long, value_name = "FILE")]
        output: Option<PathBuf>,
        #[arg(long, value_name = "N")]
        merges: Option<usize>,
    },
    /// Segment (or with `--decode`, restore) a text file.
    BpeApply {
        #[arg(long, value_name = "FILE")]
        model: PathBuf,
        #[arg(long, value_name = "FILE")]
        input: PathBuf,
        #[arg(long, value_name = "FILE")]
        output: Option<PathBuf>,
        #[arg(long)]
        decode: bool,
    },
    /// IBM Model 1 word alignment of a parallel corpus.
    Align {
        #[arg(long, value_name = "STEM")]
        input: PathBuf,
        #[arg(long, value_name = "FILE")]
        output: Option<PathBuf>,
        #[command(flatten)]
        langs: LangPair,
        #[arg(long, value_name = "N")]
        iterations: Option<usize>,
    },
    /// Extract a phrase table from a corpus and its alignments.
    Extract {
        #[arg(long, value_name = "STEM")]
        input: PathBuf,
        #[arg(long, value_name = "FILE")]
        alignments: PathBuf,
        #[arg(long, value_name = "FILE")]
        output: Option<PathBuf>,
        #[command(flatten)]
        langs: LangPair,
        #[arg(long, value_name = "N")]
        max_phrase_len: Option<usize>,
    },
    /// Compose source-pivot and pivot-target phrase tables.
    Triangulate {
        #[arg(long, value_name = "FILE")]
        src_pivot: PathBuf,
        #[arg(long, value_name = "FILE")]
        pivot_tgt: PathBuf,
        #[arg(long, value_name = "FILE")]
        output: Option<PathBuf>,
        #[arg(long, value_name = "P")]
        floor: Option<f64>,
    },
    /// Keep the top-k targets per source phrase.
    Prune {
        #[arg(long, value_name = "FILE")]
        input: PathBuf,
        #[arg(long, value_name = "FILE")]
        output: Option<PathBuf>,
        #[arg(long, value_name = "K")]
        top_k: Option<usize>,
        #[arg(long, value_name = "P")]
        floor: Option<f64>,
    },
    /// Train an interpolated n-gram language model on a text file.
    LmTrain {
        #[arg(long, value_name = "FILE")]
        input: PathBuf,
        #[arg(long, value_name = "FILE")]
        output: Option<PathBuf>,
        #[arg(long, value_name = "N")]
        order: Option<usize>,
    },
    /// Train a complete translation model directory from a parallel corpus.
    Train {
        #[arg(long, value_name = "STEM")]
        input: PathBuf,
        #[arg(long, value_name = "DIR")]
        output: Option<PathBuf>,
        #[command(flatten)]
        langs: LangPair,
    },
    /// Translate a text file with one model.
    Decode {
        #[arg(long, value_name = "DIR")]
        model: PathBuf,
        #[arg(long, value_name = "FILE")]
        input: PathBuf,
        #[arg(long, value_name = "FILE")]
        output: Option<PathBuf>,
        /// Also write the k best translations per line to `<output>.nbest`.
        #[arg(long, value_name = "K")]
        nbest: Option<usize>,
        #[arg(long, value_name = "N")]
        beam: Option<usize>,
    },
    /// Translate through the pivot with two models.
    Transfer {
        #[arg(long, value_name = "DIR")]
        src_pivot: PathBuf,
        #[arg(long, value_name = "DIR")]
        pivot_tgt: PathBuf,
        #[arg(long, value_name = "FILE")]
        input: PathBuf,
        #[arg(long, value_name = "FILE")]
        output: Option<PathBuf>,
        /// Pivot hypotheses per sentence.
        #[arg(long, value_name = "N")]
        n: Option<usize>,
        /// Target hypotheses per pivot.
        #[arg(long, value_name = "M")]
        m: Option<usize>,
        /// Word-level target LM added to the combined score.
        #[arg(long, value_name = "FILE")]
        rescore_lm: Option<PathBuf>,
        /// Write every candidate to `<output>.trace`.
        #[arg(long)]
        trace: bool,
    },
    /// Translate the pivot side of a pivot-target corpus into the source.
    SynthSrc {
        /// Pivot-to-source model.
        #[arg(long, value_name = "DIR")]
        model: PathBuf,
        #[arg(long, value_name = "STEM")]
        input: PathBuf,
        #[arg(long, value_name = "STEM")]
        output: Option<PathBuf>,
        #[command(flatten)]
        langs: LangPair,
    },
    /// Translate the pivot side of a source-pivot corpus into the target.
    SynthTgt {
        /// Pivot-to-target model.
        #[arg(long, value_name = "DIR")]
        model: PathBuf,
        #[arg(long, value_name = "STEM")]
        input: PathBuf,
        #[arg(long, value_name = "STEM")]
        output: Option<PathBuf>,
        #[command(flatten)]
        langs: LangPair,
    },
    /// Pair monolingual text with its translation by a reverse model.
    Backtranslate {
        /// Model translating from the monolingual text's language.
        #[arg(long, value_name = "DIR")]
        model: PathBuf,
        #[arg(long, value_name = "FILE")]
        input: PathBuf,
        #[arg(long, value_name = "STEM")]
        output: Option<PathBuf>,
        /// Real corpus to append the synthetic pairs to; the combined corpus
        /// is written to `<output>-augmented`.
        #[arg(long, value_name = "STEM")]
        real: Option<PathBuf>,
    },
    /// Corpus BLEU of a hypothesis file against a reference file.
    Bleu {
        #[arg(long, value_name = "FILE")]
        hyp: PathBuf,
        #[arg(long, visible_alias = "ref", value_name = "FILE")]
        reference: PathBuf,
        /// `tokenized` or `detokenized`.
        #[arg(long, value_name = "MODE")]
        mode: Option<String>,
        #[arg(long)]
        smooth: bool,
    },
    /// Run the direct-versus-pivot experiment on generated data.
    Experiment {
        /// Equal corpus sizes and identical source and pivot words.
        #[arg(long)]
        control: bool,
        /// Comma-separated systems; overrides `systems` in the config.
        #[arg(long, value_name = "LIST", value_delimiter = ',')]
        systems: Option<Vec<String>>,
        /// List the available systems and exit.
        #[arg(long)]
        list_systems: bool,
    },
}

fn init_logging(quiet: bool) {
    let default = if quiet { "warn" } else { "info" };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(default))
        .format(|buf, record| writeln!(buf, "[pivotmt {}] {}", record.level(), record.args()))
        .init();
}

/// The error and its causes joined by `: `. A cause already spelled out by
/// the message before it is skipped.
fn one_line(e: &anyhow::Error) -> String {
    let mut out = String::new();
    for cause in e.chain() {
        let text = cause.to_string();
        if !out.contains(&text) {
            if !out.is_empty() {
                out.push_str(": ");
            }
            out.push_str(&text);
        }
    }
    out.replace('\n', " ")
}

fn main() -> ExitCode {
    // A panic is a bug, but the user still gets one line rather than a trace.
    std::panic::set_hook(Box::new(|info| {
        let msg = info
            .payload()
            .downcast_ref::<&str>()
            .map(|s| s.to_string())
            .or_else(|| info.payload().downcast_ref::<String>().cloned())
            .unwrap_or_else(|| "unknown panic".into());
        eprintln!("error: internal error: {msg}");
    }));

    let cli = Cli::parse();
    init_logging(cli.quiet);
    let result = commands::load_config(
        cli.config.as_deref(),
        &cli.overrides,
        cli.seed,
        cli.run_dir.as_deref(),
    )
    .and_then(|cfg| commands::run(cli.command, cfg));
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {}", one_line(&e));
            ExitCode::FAILURE
        }
    }
}
