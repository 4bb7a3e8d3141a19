//! Batch command-line interface. The binary is a thin shim over this
//! module; every subcommand is a library call plus file I/O, so the same
//! behavior is available programmatically.

use std::path::{Path, PathBuf};

use clap::error::ErrorKind;
use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use crate::augment::{
    integrate_corpora, make_noisy_sample, select_corpus, span_mask, token_mask, CorpusLevel,
    CorpusSpec, MaskAction, ShuffleBound,
};
use crate::coach::{CoachConfig, CoachModel, DescriptionMatrix, EntityEncoderKind};
use crate::embed_align::{read_seed_dictionary, refine, EmbeddingTable, DEFAULT_SEED_PAIRS};
use crate::encoders::PositionalMode;
use crate::nn::write_matrix_file;
use crate::parse_repr::{
    decode_flat, decode_flat_with_repair, encode_flat, serialize, FlatRecord, ParseRecord,
    RepairCounts, DEFAULT_MAX_FERTILITY,
};
use crate::x2parser::{X2Config, X2Parser};

use super::bench::bench_latency;
use super::config::RunConfig;
use super::formats::{
    load_conll, load_jsonl, load_parse_jsonl, write_conll, write_corpus_lines, write_jsonl,
    TaggedSequence,
};
use super::formats::load_corpus_lines;
use super::metrics::{
    bio_f1, exact_match_accuracy, flat_labels_match, nested_split, EvalReport, NestedBreakdown,
};
use super::tagger::{SequenceTagger, TaggerConfig, TaggerEncoderKind};
use super::HarnessError;

#[derive(Parser)]
#[command(name = "lowres-nlu", version, about = "Low-resource NLU toolkit batch interface")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Convert between hierarchical parses and flattened labels (JSONL).
    Convert(ConvertArgs),
    /// Train a model and write its checkpoint and training report.
    Train(TrainArgs),
    /// Evaluate predictions against gold data.
    Eval(EvalArgs),
    /// Data augmentation and corpus procedures.
    #[command(subcommand)]
    Augment(AugmentCommand),
    /// Refine cross-lingual embeddings with a seed dictionary.
    Refine(RefineArgs),
    /// Benchmark parser latency per output-length bucket.
    Bench(BenchArgs),
}

#[derive(Args)]
struct ConvertArgs {
    #[arg(long)]
    input: PathBuf,
    #[arg(long)]
    output: PathBuf,
    /// `tree-to-flat` or `flat-to-tree`.
    #[arg(long)]
    direction: String,
    #[arg(long, default_value_t = DEFAULT_MAX_FERTILITY)]
    max_fertility: usize,
    /// Repair malformed labels instead of failing (flat-to-tree only).
    #[arg(long)]
    repair: bool,
}

#[derive(Args)]
struct TrainArgs {
    /// `x2parser`, `coach`, or `tagger`.
    #[arg(long)]
    task: String,
    #[arg(long)]
    train: PathBuf,
    /// Key/value config file.
    #[arg(long)]
    config: Option<PathBuf>,
    /// `key=value` overrides applied after the config file.
    #[arg(long = "set")]
    overrides: Vec<String>,
    /// Slot-description file (coach only).
    #[arg(long)]
    descriptions: Option<PathBuf>,
    /// Output directory for the checkpoint and report.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct EvalArgs {
    /// `parse` or `tagging`.
    #[arg(long)]
    task: String,
    #[arg(long)]
    gold: PathBuf,
    #[arg(long)]
    pred: PathBuf,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Subcommand)]
enum AugmentCommand {
    /// k-constrained word-order shuffling of labeled data.
    Shuffle(ShuffleArgs),
    /// Token- or span-level mask plans for pretraining.
    Mask(MaskArgs),
    /// Entity/task-level corpus selection.
    Select(SelectArgs),
    /// Integrate entity- and task-level corpora.
    Integrate(IntegrateArgs),
}

#[derive(Args)]
struct ShuffleArgs {
    #[arg(long)]
    input: PathBuf,
    #[arg(long)]
    output: PathBuf,
    /// Displacement bound; `inf` for unconstrained shuffling.
    #[arg(long, default_value = "inf")]
    k: String,
    #[arg(long, default_value_t = 1)]
    copies: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Args)]
struct MaskArgs {
    #[arg(long)]
    input: PathBuf,
    #[arg(long)]
    output: PathBuf,
    /// `token` or `span`.
    #[arg(long, default_value = "span")]
    mode: String,
    #[arg(long, default_value_t = 0.15)]
    rate: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Args)]
struct SelectArgs {
    #[arg(long)]
    input: PathBuf,
    #[arg(long)]
    output: PathBuf,
    /// `domain`, `entity`, or `task`.
    #[arg(long)]
    level: String,
    #[arg(long)]
    entities: Option<PathBuf>,
    #[arg(long, default_value_t = 2)]
    min_entities: usize,
}

#[derive(Args)]
struct IntegrateArgs {
    #[arg(long)]
    entity_corpus: PathBuf,
    #[arg(long)]
    task_corpus: PathBuf,
    #[arg(long)]
    output: PathBuf,
    #[arg(long, default_value_t = 2)]
    factor: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Args)]
struct RefineArgs {
    #[arg(long)]
    source: PathBuf,
    #[arg(long)]
    target: PathBuf,
    /// Two-column TSV seed dictionary; defaults to the built-in
    /// 11-keyword domain list.
    #[arg(long)]
    dict: Option<PathBuf>,
    #[arg(long, default_value_t = 0.25)]
    threshold: f64,
    #[arg(long, default_value_t = 10)]
    max_iters: usize,
    /// Where the d x d mapping matrix is written.
    #[arg(long)]
    out_mapping: PathBuf,
    #[arg(long)]
    report: Option<PathBuf>,
}

#[derive(Args)]
struct BenchArgs {
    /// Parse JSONL supplying the vocabulary and label inventories.
    #[arg(long)]
    train: PathBuf,
    #[arg(long, default_value = "5,10,20,40")]
    buckets: String,
    #[arg(long, default_value_t = 31)]
    repeats: usize,
    /// Training steps before benchmarking (0 benchmarks a fresh model).
    #[arg(long, default_value_t = 0)]
    steps: usize,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

enum CliError {
    Usage(String),
    Validation(String),
    Runtime(String),
}

impl CliError {
    fn code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 64,
            CliError::Validation(_) => 2,
            CliError::Runtime(_) => 1,
        }
    }

    fn message(&self) -> &str {
        match self {
            CliError::Usage(m) | CliError::Validation(m) | CliError::Runtime(m) => m,
        }
    }
}

impl From<HarnessError> for CliError {
    fn from(e: HarnessError) -> Self {
        match e {
            HarnessError::Io(_, _) => CliError::Runtime(e.to_string()),
            _ => CliError::Validation(e.to_string()),
        }
    }
}

/// Entry point: parses `argv` (without the program name), runs the
/// subcommand, and returns the process exit code: 0 on success, 2 on
/// validation failure, 1 on runtime error, 64 for usage errors.
pub fn run(args: &[String]) -> i32 {
    let mut argv = vec!["lowres-nlu".to_string()];
    argv.extend(args.iter().cloned());
    let cli = match Cli::try_parse_from(&argv) {
        Ok(cli) => cli,
        Err(e) => {
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => {
                    print!("{e}");
                    0
                }
                _ => {
                    eprint!("{e}");
                    64
                }
            }
        }
    };
    match dispatch(cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {}", e.message());
            e.code()
        }
    }
}

fn dispatch(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Convert(args) => convert(args),
        Command::Train(args) => train(args),
        Command::Eval(args) => eval(args),
        Command::Augment(args) => augment(args),
        Command::Refine(args) => refine_cmd(args),
        Command::Bench(args) => bench(args),
    }
}

fn convert(args: ConvertArgs) -> Result<(), CliError> {
    match args.direction.as_str() {
        "tree-to-flat" => {
            let records = load_parse_jsonl(&args.input)?;
            let mut out = Vec::with_capacity(records.len());
            for (tree, record) in records {
                let flat = encode_flat(&tree, args.max_fertility)
                    .map_err(|e| CliError::Validation(e.to_string()))?;
                out.push(FlatRecord::from_labels(&record.tokens, &flat));
            }
            write_jsonl(&args.output, &out)?;
            Ok(())
        }
        "flat-to-tree" => {
            let records: Vec<FlatRecord> = load_jsonl(&args.input)?;
            let mut out = Vec::with_capacity(records.len());
            for record in records {
                let flat = record.to_labels();
                let tree = if args.repair {
                    decode_flat_with_repair(&flat, &record.tokens)
                        .map_err(|e| CliError::Validation(e.to_string()))?
                        .0
                } else {
                    decode_flat(&flat, &record.tokens)
                        .map_err(|e| CliError::Validation(e.to_string()))?
                };
                out.push(ParseRecord { tokens: record.tokens, parse: serialize(&tree) });
            }
            write_jsonl(&args.output, &out)?;
            Ok(())
        }
        other => Err(CliError::Usage(format!(
            "unknown direction {other:?}; expected tree-to-flat or flat-to-tree"
        ))),
    }
}

#[derive(Serialize)]
struct TrainSummary<T: Serialize> {
    task: String,
    seed: u64,
    report: T,
    train_metric: f64,
}

fn load_config(args: &TrainArgs) -> Result<RunConfig, CliError> {
    let mut cfg = match &args.config {
        Some(path) => RunConfig::from_file(path)?,
        None => RunConfig::default(),
    };
    cfg.apply_overrides(&args.overrides)?;
    Ok(cfg)
}

fn train(args: TrainArgs) -> Result<(), CliError> {
    std::fs::create_dir_all(&args.out)
        .map_err(|e| CliError::Runtime(format!("cannot create {}: {e}", args.out.display())))?;
    let cfg = load_config(&args)?;
    let seed = cfg.seed(0)?;
    match args.task.as_str() {
        "x2parser" => {
            let trees: Vec<_> =
                load_parse_jsonl(&args.train)?.into_iter().map(|(t, _)| t).collect();
            let x2cfg = X2Config {
                hidden: cfg.get_usize("hidden", 64)?,
                encoder_layers: cfg.get_usize("encoder_layers", 2)?,
                encoder_heads: cfg.get_usize("encoder_heads", 4)?,
                kernel: cfg.get_usize("kernel", 3)?,
                positional: cfg
                    .get("positional")
                    .map(|s| {
                        PositionalMode::parse(s).ok_or_else(|| {
                            CliError::Validation(format!("unknown positional mode {s:?}"))
                        })
                    })
                    .transpose()?
                    .unwrap_or(PositionalMode::Sinusoid),
                slot_layers: cfg.get_usize("slot_layers", 1)?,
                slot_heads: cfg.get_usize("slot_heads", 4)?,
                slot_filter: cfg.get_usize("slot_filter", 64)?,
                max_fertility: cfg.get_usize("max_fertility", DEFAULT_MAX_FERTILITY)?,
                max_len: cfg.get_usize("max_len", 64)?,
                learning_rate: cfg.get_f64("learning_rate", 1e-3)?,
                batch_size: cfg.get_usize("batch_size", 16)?,
                seed,
            };
            let steps = cfg.get_usize("steps", 300)?;
            let mut parser = X2Parser::new(x2cfg, &trees)
                .map_err(|e| CliError::Validation(e.to_string()))?;
            let report =
                parser.train(&trees, steps).map_err(|e| CliError::Validation(e.to_string()))?;
            let em = parser
                .exact_match(&trees)
                .map_err(|e| CliError::Validation(e.to_string()))?;
            let predictions = parser
                .export_predictions(&trees)
                .map_err(|e| CliError::Validation(e.to_string()))?;
            write_jsonl(&args.out.join("predictions.jsonl"), &predictions)?;
            parser
                .store
                .save(&args.out.join("model.json"))
                .map_err(|e| CliError::Runtime(e.to_string()))?;
            write_report(
                &args.out.join("report.json"),
                &TrainSummary { task: "x2parser".into(), seed, report, train_metric: em * 100.0 },
            )
        }
        "coach" => {
            let data = load_conll(&args.train)?;
            let desc_path = args.descriptions.as_ref().ok_or_else(|| {
                CliError::Usage("coach training requires --descriptions".to_string())
            })?;
            let desc_text = std::fs::read_to_string(desc_path)
                .map_err(|e| CliError::Runtime(format!("{}: {e}", desc_path.display())))?;
            let desc = DescriptionMatrix::parse(&desc_text)
                .map_err(|e| CliError::Validation(e.to_string()))?;
            let coach_cfg = CoachConfig {
                embed_dim: cfg.get_usize("embed_dim", 24)?,
                hidden: cfg.get_usize("hidden", 24)?,
                template_hidden: cfg.get_usize("template_hidden", 24)?,
                entity_encoder: cfg
                    .get("entity_encoder")
                    .map(|s| {
                        EntityEncoderKind::parse(s).ok_or_else(|| {
                            CliError::Validation(format!("unknown entity encoder {s:?}"))
                        })
                    })
                    .transpose()?
                    .unwrap_or(EntityEncoderKind::Recurrent),
                use_template_reg: cfg.get_bool("use_template_reg", true)?,
                beta: cfg.get_f64("beta", 1.0)?,
                warmup_epochs: cfg.get_usize("warmup_epochs", 2)?,
                epochs: cfg.get_usize("epochs", 8)?,
                batch_size: cfg.get_usize("batch_size", 8)?,
                learning_rate: cfg.get_f64("learning_rate", 5e-3)?,
                seed,
            };
            let pairs: Vec<(Vec<String>, Vec<String>)> =
                data.iter().map(|s| (s.tokens.clone(), s.labels.clone())).collect();
            let mut model = CoachModel::new(coach_cfg, &pairs, &desc, &desc)
                .map_err(|e| CliError::Validation(e.to_string()))?;
            let report = model.train(&pairs);
            let gold: Vec<Vec<String>> = pairs.iter().map(|(_, l)| l.clone()).collect();
            let pred: Vec<Vec<String>> = pairs.iter().map(|(t, _)| model.predict(t)).collect();
            let f1 = bio_f1(&gold, &pred)?.f1;
            model
                .store
                .save(&args.out.join("model.json"))
                .map_err(|e| CliError::Runtime(e.to_string()))?;
            write_report(
                &args.out.join("report.json"),
                &TrainSummary { task: "coach".into(), seed, report, train_metric: f1 },
            )
        }
        "tagger" => {
            let data = load_conll(&args.train)?;
            let tagger_cfg = TaggerConfig {
                encoder: cfg
                    .get("encoder")
                    .map(|s| {
                        TaggerEncoderKind::parse(s).ok_or_else(|| {
                            CliError::Validation(format!("unknown encoder {s:?}"))
                        })
                    })
                    .transpose()?
                    .unwrap_or(TaggerEncoderKind::Ort),
                embed_dim: cfg.get_usize("embed_dim", 32)?,
                hidden: cfg.get_usize("hidden", 32)?,
                layers: cfg.get_usize("layers", 1)?,
                heads: cfg.get_usize("heads", 4)?,
                kernel: cfg.get_usize("kernel", 3)?,
                use_crf: cfg.get_bool("use_crf", true)?,
                noise_variance: cfg.get_f64("noise_variance", 0.0)?,
                delexicalize: cfg.get_bool("delexicalize", false)?,
                epochs: cfg.get_usize("epochs", 10)?,
                batch_size: cfg.get_usize("batch_size", 8)?,
                learning_rate: cfg.get_f64("learning_rate", 5e-3)?,
                seed,
            };
            let mut tagger = SequenceTagger::new(tagger_cfg, &data)?;
            let report = tagger.train(&data);
            let gold: Vec<Vec<String>> = data.iter().map(|s| s.labels.clone()).collect();
            let pred: Vec<Vec<String>> = data.iter().map(|s| tagger.predict(&s.tokens)).collect();
            let f1 = bio_f1(&gold, &pred)?.f1;
            tagger
                .store
                .save(&args.out.join("model.json"))
                .map_err(|e| CliError::Runtime(e.to_string()))?;
            write_report(
                &args.out.join("report.json"),
                &TrainSummary { task: "tagger".into(), seed, report, train_metric: f1 },
            )
        }
        other => Err(CliError::Usage(format!(
            "unknown task {other:?}; expected x2parser, coach, or tagger"
        ))),
    }
}

fn write_report<T: Serialize>(path: &Path, report: &T) -> Result<(), CliError> {
    let json = serde_json::to_string_pretty(report)
        .map_err(|e| CliError::Runtime(e.to_string()))?;
    std::fs::write(path, json + "\n")
        .map_err(|e| CliError::Runtime(format!("{}: {e}", path.display())))
}

fn eval(args: EvalArgs) -> Result<(), CliError> {
    let report = match args.task.as_str() {
        "parse" => {
            let gold = load_parse_jsonl(&args.gold)?;
            let pred = load_parse_jsonl(&args.pred)?;
            if gold.len() != pred.len() {
                return Err(CliError::Validation(format!(
                    "gold has {} records, pred has {}",
                    gold.len(),
                    pred.len()
                )));
            }
            let mut pairs = Vec::with_capacity(gold.len());
            let mut repair_counts = RepairCounts::default();
            for ((g_tree, _), (p_tree, _)) in gold.iter().zip(&pred) {
                let g = encode_flat(g_tree, usize::MAX)
                    .map_err(|e| CliError::Validation(e.to_string()))?;
                let p = encode_flat(p_tree, usize::MAX)
                    .map_err(|e| CliError::Validation(e.to_string()))?;
                let _ = &mut repair_counts;
                pairs.push((g, p));
            }
            let em = exact_match_accuracy(&pairs);
            let gold_flats: Vec<_> = pairs.iter().map(|(g, _)| g.clone()).collect();
            let (nested_idx, non_nested_idx) = nested_split(&gold_flats);
            let em_of = |idx: &[usize]| {
                if idx.is_empty() {
                    return 0.0;
                }
                let hits =
                    idx.iter().filter(|&&i| flat_labels_match(&pairs[i].0, &pairs[i].1)).count();
                hits as f64 * 100.0 / idx.len() as f64
            };
            EvalReport {
                exact_match: Some(em),
                bio: None,
                nested: Some(NestedBreakdown {
                    nested_count: nested_idx.len(),
                    non_nested_count: non_nested_idx.len(),
                    nested_exact_match: em_of(&nested_idx),
                    non_nested_exact_match: em_of(&non_nested_idx),
                }),
                latency: vec![],
                repair_counts,
                samples: pairs.len(),
            }
        }
        "tagging" => {
            let gold = load_conll(&args.gold)?;
            let pred = load_conll(&args.pred)?;
            let gold_labels: Vec<Vec<String>> = gold.iter().map(|s| s.labels.clone()).collect();
            let pred_labels: Vec<Vec<String>> = pred.iter().map(|s| s.labels.clone()).collect();
            let bio = bio_f1(&gold_labels, &pred_labels)?;
            EvalReport {
                exact_match: None,
                bio: Some(bio),
                nested: None,
                latency: vec![],
                repair_counts: RepairCounts::default(),
                samples: gold.len(),
            }
        }
        other => {
            return Err(CliError::Usage(format!(
                "unknown eval task {other:?}; expected parse or tagging"
            )))
        }
    };
    print!("{}", report.to_text());
    if let Some(path) = args.out {
        write_report(&path, &report)?;
    }
    Ok(())
}

#[derive(Serialize)]
struct MaskRecord {
    tokens: Vec<String>,
    masked: Vec<usize>,
    actions: Vec<MaskAction>,
}

fn augment(cmd: AugmentCommand) -> Result<(), CliError> {
    match cmd {
        AugmentCommand::Shuffle(args) => {
            let bound = ShuffleBound::parse(&args.k)
                .ok_or_else(|| CliError::Usage(format!("bad k {:?}", args.k)))?;
            let data = load_conll(&args.input)?;
            let mut out = Vec::with_capacity(data.len() * args.copies.max(1));
            for (i, seq) in data.iter().enumerate() {
                for copy in 0..args.copies.max(1) {
                    let seed = args
                        .seed
                        .wrapping_add(i as u64)
                        .wrapping_mul(1000)
                        .wrapping_add(copy as u64);
                    let (tokens, labels) =
                        make_noisy_sample(&seq.tokens, &seq.labels, bound, seed)
                            .map_err(|e| CliError::Validation(e.to_string()))?;
                    out.push(TaggedSequence { tokens, labels, intent: seq.intent.clone() });
                }
            }
            write_conll(&args.output, &out)?;
            Ok(())
        }
        AugmentCommand::Mask(args) => {
            let sentences = load_corpus_lines(&args.input)?;
            let mut records = Vec::with_capacity(sentences.len());
            for (i, sentence) in sentences.iter().enumerate() {
                let tokens: Vec<String> =
                    sentence.split_whitespace().map(|t| t.to_string()).collect();
                let seed = args.seed.wrapping_add(i as u64);
                let plan = match args.mode.as_str() {
                    "token" => token_mask(tokens.len(), args.rate, seed),
                    "span" => span_mask(tokens.len(), args.rate, seed),
                    other => {
                        return Err(CliError::Usage(format!(
                            "unknown mask mode {other:?}; expected token or span"
                        )))
                    }
                };
                records.push(MaskRecord { tokens, masked: plan.masked, actions: plan.actions });
            }
            write_jsonl(&args.output, &records)?;
            Ok(())
        }
        AugmentCommand::Select(args) => {
            let level = CorpusLevel::parse(&args.level)
                .ok_or_else(|| CliError::Usage(format!("bad level {:?}", args.level)))?;
            let sentences = load_corpus_lines(&args.input)?;
            let entities = match &args.entities {
                Some(path) => load_corpus_lines(path)?
                    .into_iter()
                    .filter(|l| !l.trim().is_empty())
                    .collect(),
                None => vec![],
            };
            let spec = CorpusSpec {
                level,
                entities,
                min_entities: args.min_entities,
                upsample_factor: 2,
            };
            let selected =
                select_corpus(&sentences, &spec).map_err(|e| CliError::Validation(e.to_string()))?;
            let ratio = if sentences.is_empty() {
                0.0
            } else {
                selected.len() as f64 / sentences.len() as f64
            };
            println!("selected {} of {} sentences ({ratio:.3}x)", selected.len(), sentences.len());
            write_corpus_lines(&args.output, &selected)?;
            Ok(())
        }
        AugmentCommand::Integrate(args) => {
            if args.factor < 1 {
                return Err(CliError::Usage("--factor must be >= 1".into()));
            }
            let entity = load_corpus_lines(&args.entity_corpus)?;
            let task = load_corpus_lines(&args.task_corpus)?;
            let merged = integrate_corpora(&entity, &task, args.factor, args.seed);
            write_corpus_lines(&args.output, &merged)?;
            Ok(())
        }
    }
}

#[derive(Serialize)]
struct RefineReport {
    iterations: usize,
    converged: bool,
    objectives: Vec<f64>,
    seed_distances: Vec<f64>,
}

fn refine_cmd(args: RefineArgs) -> Result<(), CliError> {
    let source = EmbeddingTable::read(&args.source)
        .map_err(|e| CliError::Validation(e.to_string()))?;
    let target = EmbeddingTable::read(&args.target)
        .map_err(|e| CliError::Validation(e.to_string()))?;
    let dict = match &args.dict {
        Some(path) => read_seed_dictionary(path).map_err(|e| CliError::Validation(e.to_string()))?,
        None => DEFAULT_SEED_PAIRS
            .iter()
            .map(|(s, t)| (s.to_string(), t.to_string()))
            .collect(),
    };
    let (mapping, history) = refine(&source, &target, &dict, args.threshold, args.max_iters)
        .map_err(|e| CliError::Validation(e.to_string()))?;
    write_matrix_file(&args.out_mapping, &mapping)
        .map_err(|e| CliError::Runtime(e.to_string()))?;
    if let Some(path) = args.report {
        write_report(
            &path,
            &RefineReport {
                iterations: history.objectives.len(),
                converged: history.converged,
                objectives: history.objectives,
                seed_distances: history.seed_distances,
            },
        )?;
    }
    Ok(())
}

fn bench(args: BenchArgs) -> Result<(), CliError> {
    let trees: Vec<_> = load_parse_jsonl(&args.train)?.into_iter().map(|(t, _)| t).collect();
    let buckets: Vec<usize> = args
        .buckets
        .split(',')
        .map(|b| b.trim().parse::<usize>())
        .collect::<Result<_, _>>()
        .map_err(|_| CliError::Usage(format!("bad buckets {:?}", args.buckets)))?;
    let max_bucket = buckets.iter().copied().max().unwrap_or(40);
    let cfg = X2Config {
        hidden: 64,
        encoder_layers: 2,
        encoder_heads: 4,
        max_len: max_bucket.max(64),
        seed: args.seed,
        ..X2Config::tiny()
    };
    let mut parser =
        X2Parser::new(cfg, &trees).map_err(|e| CliError::Validation(e.to_string()))?;
    if args.steps > 0 {
        parser.train(&trees, args.steps).map_err(|e| CliError::Validation(e.to_string()))?;
    }
    let pool: Vec<String> = trees.iter().flat_map(|t| t.tokens.iter().cloned()).collect();
    let rows = bench_latency(&parser, &pool, &buckets, args.repeats);
    let report = EvalReport {
        exact_match: None,
        bio: None,
        nested: None,
        latency: rows,
        repair_counts: RepairCounts::default(),
        samples: trees.len(),
    };
    print!("{}", report.to_text());
    if let Some(path) = args.out {
        write_report(&path, &report)?;
    }
    Ok(())
}
