//! Command-line entry point. Exit codes: 0 success, 1 invalid input or
//! usage, 2 runtime failure.

use std::ffi::OsString;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use pseudobridge_core::corpus::{filter_corpus, split_corpus};
use pseudobridge_core::experiment::Arm;
use pseudobridge_core::metrics::{evaluate_with, EvalOptions};
use pseudobridge_core::optim::AdamState;
use pseudobridge_core::synth::OfflineBackend;
use pseudobridge_core::toy::{toy_corpus, Dialect};
use pseudobridge_core::train::{train_stage1, train_stage2_from, TrainError, TrainRun};
use pseudobridge_core::{build_index, EncoderParams, Sample};

use crate::config::{BackendKind, Overrides, ToolConfig};
use crate::error::ToolError;
use crate::experiment::{run_experiment, ReportFile, VERSION};
use crate::io::{self, load_checkpoint, load_index, load_jsonl, ENCODER_FILE};
use crate::pipeline::{resume_from, run_concurrent};
use crate::remote::{Backend, RemoteBackend};
use crate::search::par_search;
use crate::templates::Templates;

pub const INDEX_FILE: &str = "index.bin";
pub const SNAPSHOT_FILE: &str = "resolved_config.toml";

#[derive(Debug, Parser)]
#[command(name = "pseudobridge", version = VERSION, about = "Pseudo-code bridged code retrieval toolkit")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Clone, Default, Args)]
struct Common {
    /// TOML configuration file; flags override its values.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output directory.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Stage {
    #[value(name = "1")]
    One,
    #[value(name = "2")]
    Two,
    Both,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Language {
    Python,
    Javascript,
}

fn parse_arm(s: &str) -> Result<Arm, String> {
    Arm::parse(s).ok_or_else(|| format!("unknown arm {s:?}; expected one of full, wo_stage1, wo_stage2, wo_code_style"))
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Drop samples whose query breaks the length, markup, or language rules.
    Filter {
        #[command(flatten)]
        common: Common,
        #[arg(long = "in")]
        input: PathBuf,
    },
    /// Seeded train/test split.
    Split {
        #[command(flatten)]
        common: Common,
        #[arg(long = "in")]
        input: PathBuf,
    },
    /// Add pseudo-code and style variants; resumes from earlier output.
    Synth {
        #[command(flatten)]
        common: Common,
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long, value_enum)]
        backend: Option<BackendKind>,
        #[arg(long)]
        n: Option<usize>,
        #[arg(long)]
        threshold: Option<f64>,
    },
    /// Train the encoder on a synthesized corpus.
    Train {
        #[command(flatten)]
        common: Common,
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long, value_enum, default_value = "both")]
        stage: Stage,
        /// Checkpoint to start from; stage 2 also resumes its optimizer state.
        #[arg(long)]
        init: Option<PathBuf>,
    },
    /// Embed every sample's code into an index.
    Index {
        #[command(flatten)]
        common: Common,
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long)]
        checkpoint: PathBuf,
    },
    /// Top-k code for a query, one `id<TAB>score` line per hit.
    Search {
        #[command(flatten)]
        common: Common,
        /// Index directory written by `index`, or a bare index file.
        #[arg(long)]
        index: PathBuf,
        /// Encoder checkpoint; defaults to the one stored with the index.
        #[arg(long)]
        checkpoint: Option<PathBuf>,
        #[arg(long)]
        query: String,
        #[arg(long, default_value_t = 10)]
        k: usize,
    },
    /// MRR and Recall@k of a checkpoint on a corpus.
    Eval {
        #[command(flatten)]
        common: Common,
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long)]
        checkpoint: PathBuf,
        #[arg(long, value_delimiter = ',')]
        k: Option<Vec<usize>>,
    },
    /// Train and evaluate the ablation arms.
    Experiment {
        #[command(flatten)]
        common: Common,
        #[arg(long, value_delimiter = ',', value_parser = parse_arm)]
        arm: Option<Vec<Arm>>,
        #[arg(long, value_delimiter = ',')]
        k: Option<Vec<usize>>,
        #[arg(long, value_enum)]
        backend: Option<BackendKind>,
    },
    /// Write `id,kind,v1,...,vd` lines for queries, pseudo-code, and code.
    DumpEmbeddings {
        #[command(flatten)]
        common: Common,
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long)]
        checkpoint: PathBuf,
    },
    /// Generate a synthetic corpus.
    Toy {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value_t = 500)]
        count: usize,
        #[arg(long, value_enum, default_value = "python")]
        language: Language,
    },
}

/// Parses `args` (program name first) and runs the command.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return match e.kind() {
                clap::error::ErrorKind::DisplayHelp | clap::error::ErrorKind::DisplayVersion => 0,
                _ => 1,
            };
        }
    };
    match execute(cli.command) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

fn resolve(common: &Common, overrides: Overrides) -> Result<ToolConfig, ToolError> {
    let mut config = match &common.config {
        Some(path) => ToolConfig::load(path).map_err(ToolError::Invalid)?,
        None => ToolConfig::default(),
    };
    config.apply(&Overrides { seed: common.seed, out: common.out.clone(), ..overrides });
    config.validate().map_err(ToolError::Invalid)?;
    Ok(config)
}

fn out_dir(config: &ToolConfig) -> Result<PathBuf, ToolError> {
    let out = config.out_dir.clone().ok_or_else(|| ToolError::Invalid("--out (or out_dir in the config) is required".into()))?;
    io::create_dir(&out)?;
    io::write_atomic(&out.join(SNAPSHOT_FILE), config.to_toml().as_bytes())?;
    Ok(out)
}

fn load_input(path: &Path) -> Result<Vec<Sample>, ToolError> {
    load_jsonl(path).map_err(ToolError::invalid)
}

fn load_params(path: &Path) -> Result<(EncoderParams, Option<AdamState>), ToolError> {
    load_checkpoint(path).map_err(ToolError::invalid)
}

fn train_error(e: TrainError) -> ToolError {
    match e {
        TrainError::Step { .. } => ToolError::runtime(e),
        _ => ToolError::invalid(e),
    }
}

fn execute(command: Command) -> Result<(), ToolError> {
    match command {
        Command::Filter { common, input } => {
            let config = resolve(&common, Overrides::default())?;
            let out = out_dir(&config)?;
            let corpus = load_input(&input)?;
            let (kept, report) = filter_corpus(&corpus, &config.filter);
            io::save_jsonl(&kept, &out.join("filtered.jsonl"))?;
            io::write_json(&out.join("filter_report.json"), &report)?;
            eprintln!("kept {} of {}", report.kept, report.total_in);
        }
        Command::Split { common, input } => {
            let config = resolve(&common, Overrides::default())?;
            let out = out_dir(&config)?;
            let corpus = load_input(&input)?;
            let (train, test) = split_corpus(&corpus, config.corpus.train_fraction, config.seed).map_err(ToolError::invalid)?;
            io::save_jsonl(&train, &out.join("train.jsonl"))?;
            io::save_jsonl(&test, &out.join("test.jsonl"))?;
        }
        Command::Synth { common, input, backend, n, threshold } => {
            let config = resolve(&common, Overrides { backend, n, threshold, ..Overrides::default() })?;
            let out = out_dir(&config)?;
            let corpus = load_input(&input)?;
            let target = out.join("synthesized.jsonl");
            let corpus = if target.exists() { resume_from(&corpus, &load_input(&target)?) } else { corpus };
            let backend = match config.backend.kind {
                BackendKind::Offline => Backend::Offline(OfflineBackend::new(config.seed)),
                BackendKind::Remote => {
                    let templates =
                        Templates::load(config.backend.remote.template_dir.as_deref()).map_err(ToolError::invalid)?;
                    Backend::Remote(RemoteBackend::new(config.backend.remote.clone(), templates))
                }
            };
            let (_, report) = run_concurrent(&corpus, &backend, &config.synth, |state| io::save_jsonl(state, &target))
                .map_err(ToolError::runtime)?;
            for (id, e) in &report.failures {
                eprintln!("skipped {id}: {e}");
            }
            io::write_json(&out.join("synth_report.json"), &report)?;
            eprintln!(
                "populated {}, already done {}, failed {}, forced {}",
                report.populated,
                report.already_populated,
                report.failures.len(),
                report.forced
            );
        }
        Command::Train { common, input, stage, init } => {
            let config = resolve(&common, Overrides::default())?;
            let out = out_dir(&config)?;
            let corpus = load_input(&input)?;
            let (params, optimizer) = match &init {
                Some(path) => load_params(path)?,
                None => (EncoderParams::init(&config.encoder, config.seed).map_err(ToolError::invalid)?, None),
            };
            let mut log = Vec::new();
            let mut last: Option<TrainRun> = None;
            if stage != Stage::Two {
                let run = train_stage1(&corpus, params.clone(), &config.train).map_err(train_error)?;
                eprintln!("stage 1 epoch losses {:?}", run.epoch_means());
                last = Some(run);
            }
            if stage != Stage::One {
                let (start, state) = match last.take() {
                    Some(run) => {
                        log.extend(run.log);
                        (run.params, Some(run.optimizer))
                    }
                    None => (params, optimizer),
                };
                let run = train_stage2_from(&corpus, start, state, &config.train).map_err(train_error)?;
                eprintln!("stage 2 epoch losses {:?}", run.epoch_means());
                last = Some(run);
            }
            let run = last.expect("at least one stage ran");
            log.extend(run.log.iter().cloned());
            io::save_checkpoint(&out.join("checkpoint"), &run.params, Some(&run.optimizer))?;
            io::write_atomic(&out.join("metrics.jsonl"), io::step_log_jsonl(&log).as_bytes())?;
        }
        Command::Index { common, input, checkpoint } => {
            let config = resolve(&common, Overrides::default())?;
            let out = out_dir(&config)?;
            let corpus = load_input(&input)?;
            let (params, _) = load_params(&checkpoint)?;
            let index = build_index(&params, &corpus).map_err(ToolError::invalid)?;
            io::save_index(&out.join(INDEX_FILE), &index)?;
            io::write_atomic(&out.join(ENCODER_FILE), &params.to_bytes())?;
            eprintln!("indexed {} samples", index.len());
        }
        Command::Search { common, index, checkpoint, query, k } => {
            let config = resolve(&common, Overrides::default())?;
            let (index_file, default_encoder) =
                if index.is_dir() { (index.join(INDEX_FILE), Some(index.join(ENCODER_FILE))) } else { (index.clone(), None) };
            let encoder = checkpoint
                .or(default_encoder)
                .ok_or_else(|| ToolError::Invalid("--checkpoint is required with a bare index file".into()))?;
            let idx = load_index(&index_file).map_err(ToolError::invalid)?;
            let (params, _) = load_params(&encoder)?;
            let q = params.encode(&query).map_err(ToolError::invalid)?;
            let result = par_search(&idx, &q, k, config.eval.block_rows).map_err(ToolError::invalid)?;
            let mut text = String::new();
            for hit in &result.hits {
                let _ = writeln!(text, "{}\t{:.6}", hit.id, hit.score);
            }
            print!("{text}");
            if config.out_dir.is_some() {
                let out = out_dir(&config)?;
                io::write_atomic(&out.join("results.tsv"), text.as_bytes())?;
            }
        }
        Command::Eval { common, input, checkpoint, k } => {
            let config = resolve(&common, Overrides { k, ..Overrides::default() })?;
            let out = out_dir(&config)?;
            let corpus = load_input(&input)?;
            let (params, _) = load_params(&checkpoint)?;
            let options = EvalOptions { max_pool: config.eval.max_pool };
            let evaluation = evaluate_with(&params, &corpus, &config.eval.k, &options).map_err(ToolError::invalid)?;
            let split = input.file_stem().map_or_else(|| "eval".into(), |s| s.to_string_lossy().into_owned());
            let file = ReportFile {
                version: VERSION.into(),
                arm: "checkpoint".into(),
                split,
                report: evaluation.report.clone(),
                config: config.echo(),
            };
            io::write_json(&out.join("report.json"), &file)?;
            io::write_atomic(&out.join("ranks.csv"), &io::rank_csv(&evaluation.rows))?;
            println!("mrr\t{:.4}", evaluation.report.mrr);
            for (k, r) in &evaluation.report.recall_at_k {
                println!("recall@{k}\t{r:.4}");
            }
        }
        Command::Experiment { common, arm, k, backend } => {
            let config = resolve(&common, Overrides { arms: arm, k, backend, ..Overrides::default() })?;
            let out = out_dir(&config)?;
            let outcome = run_experiment(&config, &out)?;
            for (arm, o) in &outcome.arms {
                let cells: Vec<String> = o.evaluations.iter().map(|(s, e)| format!("{s} {:.4}", e.report.mrr)).collect();
                println!("{}\t{}", arm.name(), cells.join("\t"));
            }
        }
        Command::DumpEmbeddings { common, input, checkpoint } => {
            let config = resolve(&common, Overrides::default())?;
            let out = out_dir(&config)?;
            let corpus = load_input(&input)?;
            let (params, _) = load_params(&checkpoint)?;
            let mut text = String::new();
            for s in &corpus {
                let kinds = [("query", Some(&s.query)), ("pseudo", s.pseudo_code.as_ref()), ("code", Some(&s.code))];
                for (kind, body) in kinds {
                    let Some(body) = body else { continue };
                    let e = params.encode(body).map_err(ToolError::invalid)?;
                    let values: Vec<String> = e.as_slice().iter().map(f64::to_string).collect();
                    let _ = writeln!(text, "{},{kind},{}", s.id, values.join(","));
                }
            }
            io::write_atomic(&out.join("embeddings.csv"), text.as_bytes())?;
        }
        Command::Toy { common, count, language } => {
            let config = resolve(&common, Overrides::default())?;
            let out = out_dir(&config)?;
            let dialect = match language {
                Language::Python => Dialect::Python,
                Language::Javascript => Dialect::JavaScript,
            };
            io::save_jsonl(&toy_corpus(count, config.seed, dialect), &out.join("toy.jsonl"))?;
        }
    }
    Ok(())
}
