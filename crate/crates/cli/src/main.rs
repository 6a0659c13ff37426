//! `xalign` command-line front end.

use std::collections::BTreeMap;
use std::fs::File;
use std::io::{self, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{anyhow, bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use rayon::prelude::*;
use xalign::align::{
    self_label, write_pharaoh, AlignError, AlignSet, AlignerConfig, CoveredCells, FilterMode, Indexing,
};
use xalign::corpus::{
    attach_word_maps, gen_synthetic_corpus, read_bitext, read_word_maps, write_bitext, CorpusError, Reordering,
    SentencePair, SyntheticSpec, Vocab, VocabMode,
};
use xalign::emb::{EmbError, EmbReader, PairEmbeddings};
use xalign::eval::{evaluate_corpus, project_subword_to_word, read_gold, sure_only, write_gold, EvalError};
use xalign::neural::Checkpoint;
use xalign::train::{label_pair, train, Corpora, TrainConfig, TrainError};

const EXIT_USAGE: u8 = 2;
const EXIT_DATA: u8 = 3;
const EXIT_NUMERICAL: u8 = 4;

#[derive(Parser)]
#[command(name = "xalign", version, about = "Optimal-transport word alignment and self-labeled pre-training")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Align a bitext from EMB1 embeddings or a trained checkpoint; writes Pharaoh lines.
    Align(AlignArgs),
    /// Score Pharaoh hypotheses against gold links.
    EvalAer(EvalArgs),
    /// Train from a `key = value` config file.
    Train(TrainArgs),
    /// Write a synthetic bitext with planted gold alignments.
    GenSynth(SynthArgs),
    /// Print the default training config.
    ExportConfig(ExportArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum Base {
    Zero,
    One,
}

impl From<Base> for Indexing {
    fn from(b: Base) -> Self {
        match b {
            Base::Zero => Indexing::ZeroBased,
            Base::One => Indexing::OneBased,
        }
    }
}

#[derive(Args)]
struct AlignArgs {
    /// Bitext, one `src ||| tgt` pair per line.
    #[arg(long)]
    bitext: PathBuf,
    /// EMB1 file with one record per bitext line.
    #[arg(long, conflicts_with = "checkpoint", required_unless_present = "checkpoint")]
    embeddings: Option<PathBuf>,
    /// Checkpoint whose encoder produces the hidden states.
    #[arg(long)]
    checkpoint: Option<PathBuf>,
    /// Word-map sidecar; links are projected from tokens to words.
    #[arg(long)]
    word_maps: Option<PathBuf>,
    /// Output path; standard output when omitted.
    #[arg(long, short)]
    output: Option<PathBuf>,
    /// Index base of the written links.
    #[arg(long, value_enum, default_value = "zero")]
    indexing: Base,
    /// Encoder layer for `--checkpoint`; top layer when omitted.
    #[arg(long)]
    layer: Option<usize>,
    /// Entropic regularization weight.
    #[arg(long, default_value_t = 1.0)]
    mu: f64,
    /// Similarity floor before the log.
    #[arg(long, default_value_t = 1e-4)]
    epsilon: f64,
    #[arg(long, default_value_t = 2)]
    sinkhorn_iters: usize,
    #[arg(long, default_value_t = 2)]
    filter_iters: usize,
    /// Discount for cells sharing a row or column with an accepted link.
    #[arg(long, default_value_t = 0.9)]
    alpha: f64,
    /// Emit the union of forward and backward argmax links instead of filtering.
    #[arg(long)]
    union: bool,
    /// Cells whose row and column are both linked: excluded, or discounted
    /// by alpha like other covered cells.
    #[arg(long, value_enum, default_value = "exclude")]
    covered_cells: Covered,
}

#[derive(Clone, Copy, ValueEnum)]
enum Covered {
    Exclude,
    Discount,
}

#[derive(Args)]
struct EvalArgs {
    /// Pharaoh hypotheses; line k is pair k.
    #[arg(long)]
    hyp: PathBuf,
    /// Gold as `sent_id i j [S|P]` lines with 1-based sentence ids.
    #[arg(long)]
    gold: PathBuf,
    #[arg(long, value_enum, default_value = "zero")]
    hyp_indexing: Base,
    #[arg(long, value_enum, default_value = "one")]
    gold_indexing: Base,
}

#[derive(Args)]
struct TrainArgs {
    /// Config file of `key = value` lines.
    config: PathBuf,
    /// Extra `key=value` settings applied after the file.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    overrides: Vec<String>,
}

#[derive(Args)]
struct SynthArgs {
    /// Output bitext path.
    #[arg(long)]
    bitext: PathBuf,
    /// Output gold path (1-based, all links sure).
    #[arg(long)]
    gold: PathBuf,
    #[arg(long, default_value_t = 200)]
    vocab: usize,
    #[arg(long, default_value_t = 5)]
    min_len: usize,
    #[arg(long, default_value_t = 12)]
    max_len: usize,
    /// Adjacent-swap probability; 0 keeps the source order.
    #[arg(long, default_value_t = 0.3)]
    swap_prob: f64,
    #[arg(long, default_value_t = 2000)]
    pairs: usize,
    #[arg(long, default_value_t = 7)]
    seed: u64,
    #[arg(long, default_value_t = 0)]
    bijection_seed: u64,
}

#[derive(Args)]
struct ExportArgs {
    /// Output path; standard output when omitted.
    #[arg(long, short)]
    output: Option<PathBuf>,
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(EXIT_USAGE) } else { ExitCode::SUCCESS };
        }
    };
    let result = match cli.command {
        Command::Align(a) => cmd_align(a),
        Command::EvalAer(a) => cmd_eval_aer(a),
        Command::Train(a) => cmd_train(a),
        Command::GenSynth(a) => cmd_gen_synth(a),
        Command::ExportConfig(a) => cmd_export_config(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_code(&e))
        }
    }
}

fn exit_code(e: &anyhow::Error) -> u8 {
    for cause in e.chain() {
        if let Some(AlignError::Numerical { .. }) = cause.downcast_ref::<AlignError>() {
            return EXIT_NUMERICAL;
        }
        if let Some(TrainError::NonFinite { .. }) = cause.downcast_ref::<TrainError>() {
            return EXIT_NUMERICAL;
        }
        if let Some(Usage(_)) = cause.downcast_ref::<Usage>() {
            return EXIT_USAGE;
        }
    }
    EXIT_DATA
}

/// Bad flag values detected after parsing.
#[derive(Debug)]
struct Usage(String);

impl std::fmt::Display for Usage {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for Usage {}

fn open_output(path: Option<&Path>) -> Result<Box<dyn Write>> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(
            File::create(p).with_context(|| format!("creating {}", p.display()))?,
        )),
        None => Box::new(BufWriter::new(io::stdout().lock())),
    })
}

fn aligner_config(a: &AlignArgs) -> Result<AlignerConfig> {
    let cfg = AlignerConfig {
        mu: a.mu,
        epsilon: a.epsilon,
        sinkhorn_iters: a.sinkhorn_iters,
        filter_iters: a.filter_iters,
        alpha: a.alpha,
        layer: a.layer,
        filter: if a.union { FilterMode::Union } else { FilterMode::Itermax },
        covered: match a.covered_cells {
            Covered::Exclude => CoveredCells::Exclude,
            Covered::Discount => CoveredCells::Discount,
        },
    };
    cfg.validate().map_err(|e| Usage(e.to_string()))?;
    Ok(cfg)
}

fn align_from_embeddings(
    pairs: &[SentencePair],
    path: &Path,
    cfg: &AlignerConfig,
) -> Result<Vec<AlignSet>> {
    let file = File::open(path).with_context(|| format!("opening {}", path.display()))?;
    let reader = EmbReader::new(BufReader::new(file)).with_context(|| path.display().to_string())?;
    let records: Vec<PairEmbeddings> = reader
        .collect::<Result<_, EmbError>>()
        .with_context(|| path.display().to_string())?;
    if records.len() != pairs.len() {
        bail!("pairs: bitext={} embeddings={}", pairs.len(), records.len());
    }
    for (k, (pair, rec)) in pairs.iter().zip(&records).enumerate() {
        if (pair.src_len(), pair.tgt_len()) != (rec.src_len(), rec.tgt_len()) {
            bail!(
                "pair {}: bitext has {}x{} tokens, embeddings have {}x{}",
                k + 1,
                pair.src_len(),
                pair.tgt_len(),
                rec.src_len(),
                rec.tgt_len()
            );
        }
    }
    records
        .par_iter()
        .map(|rec| {
            let rows: Vec<&[f64]> = rec.src_rows().into_iter().chain(rec.tgt_rows()).collect();
            self_label(&rows, rec.src_len(), cfg)
        })
        .collect::<Result<Vec<_>, AlignError>>()
        .map_err(Into::into)
}

fn cmd_align(a: AlignArgs) -> Result<()> {
    let cfg = aligner_config(&a)?;
    let (pairs, sets) = match (&a.embeddings, &a.checkpoint) {
        (Some(emb), None) => {
            let mut vocab = Vocab::new();
            let pairs = read_bitext(&a.bitext, &mut vocab, VocabMode::Extend)?;
            let sets = align_from_embeddings(&pairs, emb, &cfg)?;
            (pairs, sets)
        }
        (None, Some(ckpt)) => {
            let ck = Checkpoint::load(ckpt).with_context(|| ckpt.display().to_string())?;
            let mut vocab = ck
                .vocab
                .clone()
                .ok_or_else(|| anyhow!("{}: checkpoint carries no vocabulary", ckpt.display()))?;
            let pairs = read_bitext(&a.bitext, &mut vocab, VocabMode::Frozen)?;
            let sets = pairs
                .par_iter()
                .map(|p| label_pair(&ck.weights, p, &cfg))
                .collect::<Result<Vec<_>, TrainError>>()?;
            (pairs, sets)
        }
        _ => return Err(Usage("give exactly one of --embeddings or --checkpoint".into()).into()),
    };
    let sets = match &a.word_maps {
        Some(path) => {
            let pairs = attach_word_maps(pairs, read_word_maps(path)?)?;
            pairs
                .iter()
                .zip(&sets)
                .map(|(p, s)| {
                    let (sm, tm) = (p.src_word_map.as_deref(), p.tgt_word_map.as_deref());
                    match (sm, tm) {
                        (Some(sm), Some(tm)) => project_subword_to_word(s, sm, tm),
                        _ => Ok(s.clone()),
                    }
                })
                .collect::<Result<Vec<_>, EvalError>>()?
        }
        None => sets,
    };
    let mut out = open_output(a.output.as_deref())?;
    write_pharaoh(&mut out, &sets, a.indexing.into())?;
    out.flush()?;
    Ok(())
}

fn cmd_eval_aer(a: EvalArgs) -> Result<()> {
    let file = File::open(&a.hyp).with_context(|| format!("opening {}", a.hyp.display()))?;
    let hyps = xalign::align::read_pharaoh(BufReader::new(file), a.hyp_indexing.into())
        .with_context(|| a.hyp.display().to_string())?;
    let hyps: BTreeMap<usize, AlignSet> = hyps.into_iter().enumerate().map(|(k, s)| (k + 1, s)).collect();
    let gold = read_gold(&a.gold, a.gold_indexing.into()).with_context(|| a.gold.display().to_string())?;
    let (total, per_pair) = evaluate_corpus(&hyps, &gold);
    println!("{}", total.summary(per_pair.len()));
    Ok(())
}

fn cmd_train(a: TrainArgs) -> Result<()> {
    let mut text = std::fs::read_to_string(&a.config).with_context(|| format!("reading {}", a.config.display()))?;
    for o in &a.overrides {
        text.push('\n');
        text.push_str(o);
    }
    let cfg = TrainConfig::parse(&text).with_context(|| a.config.display().to_string())?;
    let data = Corpora::from_config(&cfg)?;
    let out = train(&cfg, &data)?;
    if let Some(report) = &out.heldout {
        println!("heldout {}", report.summary(data.heldout.len()));
    }
    if let Some(path) = &cfg.checkpoint {
        println!("checkpoint {}", path.display());
    }
    Ok(())
}

fn cmd_gen_synth(a: SynthArgs) -> Result<()> {
    if !(0.0..=1.0).contains(&a.swap_prob) {
        return Err(Usage(format!("--swap-prob must be in [0, 1], got {}", a.swap_prob)).into());
    }
    let spec = SyntheticSpec {
        vocab_size: a.vocab,
        min_len: a.min_len,
        max_len: a.max_len,
        bijection_seed: a.bijection_seed,
        reordering: if a.swap_prob == 0.0 {
            Reordering::Identity
        } else {
            Reordering::AdjacentSwap { p: a.swap_prob }
        },
        pairs: a.pairs,
        seed: a.seed,
    };
    let corpus = gen_synthetic_corpus(&spec).map_err(|e| match e {
        CorpusError::InvalidSpec(m) => anyhow::Error::new(Usage(m)),
        other => other.into(),
    })?;
    let pairs: Vec<SentencePair> = corpus.pairs.iter().map(|(p, _)| p.clone()).collect();
    let mut bitext = open_output(Some(&a.bitext))?;
    write_bitext(&mut bitext, &pairs, &corpus.vocab)?;
    bitext.flush()?;
    let gold: BTreeMap<usize, _> = corpus
        .pairs
        .iter()
        .enumerate()
        .map(|(k, (_, links))| (k + 1, sure_only(links)))
        .collect();
    let mut gold_out = open_output(Some(&a.gold))?;
    write_gold(&mut gold_out, &gold, Indexing::OneBased)?;
    gold_out.flush()?;
    println!("seed={} bijection_seed={} pairs={}", a.seed, a.bijection_seed, pairs.len());
    Ok(())
}

fn cmd_export_config(a: ExportArgs) -> Result<()> {
    let mut out = open_output(a.output.as_deref())?;
    out.write_all(TrainConfig::default().to_text().as_bytes())?;
    out.flush()?;
    Ok(())
}
