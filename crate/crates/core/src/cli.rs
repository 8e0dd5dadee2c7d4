//! The `setprog` command line. Every subcommand writes line-delimited JSON
//! records to standard output and diagnostics to standard error.
//!
//! Exit codes: 0 on success, 1 when a domain error was reported as an
//! `{"error", "message"}` record, 2 on a usage error.

use std::ffi::OsString;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::datagen::{generate_dataset, GenConfig};
use crate::records::{exec_record, parse_record, score_record, to_line, ErrorRecord, Response};
use crate::reward::{evaluate_dataset, RewardVariant};
use crate::scene::{load_dataset, load_kb, load_scenes, KnowledgeBase, Scene, Split};
use crate::trainer::{run_demo, DemoConfig};

#[derive(Debug, Parser)]
#[command(name = "setprog", version, about = "Set-operation programs: parse, execute, score, generate, evaluate, train")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Canonicalize a program and list its sub-programs.
    Parse {
        #[arg(long)]
        program: String,
    },
    /// Execute a program against a scene.
    Exec {
        #[arg(long)]
        program: String,
        #[command(flatten)]
        scene: SceneArgs,
    },
    /// Score a generated program against a reference program.
    Score {
        #[arg(long)]
        gen: String,
        #[arg(long)]
        gt: String,
        #[command(flatten)]
        scene: SceneArgs,
        #[arg(long, default_value = "full")]
        variant: RewardVariant,
    },
    /// Generate a dataset into a directory.
    Gen {
        /// JSON generation config; defaults apply to missing fields.
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Score predicted programs against a dataset.
    Eval {
        #[arg(long)]
        dataset: PathBuf,
        /// One prediction per line: a JSON string or {"program": ...}.
        #[arg(long)]
        predictions: PathBuf,
        #[arg(long)]
        scenes: PathBuf,
        #[arg(long)]
        kb: PathBuf,
    },
    /// Compare reward variants by training a grammar policy.
    TrainDemo {
        /// JSON demo config; defaults apply to missing fields.
        #[arg(long)]
        config: Option<PathBuf>,
        /// Run this single seed instead of the configured ones.
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        steps: Option<usize>,
    },
}

#[derive(Debug, clap::Args)]
struct SceneArgs {
    /// Line-delimited scene file.
    #[arg(long)]
    scene: PathBuf,
    /// Scene to use when the file holds several.
    #[arg(long)]
    scene_id: Option<String>,
    #[arg(long)]
    kb: Option<PathBuf>,
}

#[derive(Deserialize)]
#[serde(untagged)]
enum Prediction {
    Text(String),
    Record { program: String },
}

#[derive(Serialize)]
struct GenSummary {
    out: String,
    scenes: usize,
    train: usize,
    val: usize,
    test: usize,
}

#[derive(Serialize)]
struct DemoStep<'a> {
    seed: u64,
    variant: RewardVariant,
    #[serde(flatten)]
    record: &'a crate::trainer::StepRecord,
}

#[derive(Serialize)]
struct Comparison {
    first: RewardVariant,
    second: RewardVariant,
    /// Seeds on which `first` ends with strictly higher probe PA.
    first_wins: usize,
    seeds: usize,
}

#[derive(Serialize)]
struct DemoReport {
    summary: crate::trainer::DemoSummary,
    comparison: Option<Comparison>,
}

/// Run the command line on `args` (program name first).
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let text = e.render().to_string();
            return if e.use_stderr() {
                let _ = write!(err, "{text}");
                2
            } else {
                let _ = write!(out, "{text}");
                0
            };
        }
    };
    let mut emit = |line: String| {
        let _ = writeln!(out, "{line}");
    };
    match dispatch(cli.command, &mut emit) {
        Ok(()) => 0,
        Err(e) => {
            let _ = writeln!(err, "error: {}: {}", e.error, e.message);
            emit(to_line::<()>(&Err(e)));
            1
        }
    }
}

fn dispatch(command: Command, emit: &mut dyn FnMut(String)) -> Response<()> {
    match command {
        Command::Parse { program } => {
            let r = parse_record(&program)?;
            emit(to_line(&Ok(r)));
        }
        Command::Exec { program, scene } => {
            let (scene, kb) = load_scene(&scene)?;
            let r = exec_record(&program, &scene, &kb)?;
            emit(to_line(&Ok(r)));
        }
        Command::Score { gen, gt, scene, variant } => {
            let (scene, kb) = load_scene(&scene)?;
            let r = score_record(&gen, &gt, &scene, &kb, variant)?;
            emit(to_line(&Ok(r)));
        }
        Command::Gen { config, out, seed } => {
            let mut cfg: GenConfig = load_config(config.as_deref())?;
            if let Some(seed) = seed {
                cfg.seed = seed;
            }
            let ds = generate_dataset(&cfg).map_err(|e| ErrorRecord::new(e.name(), &e))?;
            ds.write(&out).map_err(|e| ErrorRecord::new(e.name(), &e))?;
            let summary = GenSummary {
                out: out.display().to_string(),
                scenes: ds.scenes.len(),
                train: ds.split(Split::Train).count(),
                val: ds.split(Split::Val).count(),
                test: ds.split(Split::Test).count(),
            };
            emit(to_line(&Ok(summary)));
        }
        Command::Eval { dataset, predictions, scenes, kb } => {
            let records = load_dataset(&dataset).map_err(|e| ErrorRecord::new(e.name(), &e))?;
            let scenes = load_scenes(&scenes).map_err(|e| ErrorRecord::new(e.name(), &e))?;
            let kb = load_kb(&kb).map_err(|e| ErrorRecord::new(e.name(), &e))?;
            let predictions = read_predictions(&predictions)?;
            let report = evaluate_dataset(&records, &predictions, &scenes, &kb)
                .map_err(|e| ErrorRecord::new(e.name(), &e))?;
            emit(to_line(&Ok(report)));
        }
        Command::TrainDemo { config, seed, steps } => {
            let mut cfg: DemoConfig = load_config(config.as_deref())?;
            if let Some(seed) = seed {
                cfg.seeds = vec![seed];
            }
            if let Some(steps) = steps {
                cfg.train.steps = steps;
            }
            let summary = run_demo(&cfg, |seed, variant, record| {
                emit(to_line(&Ok(DemoStep { seed, variant, record })));
            })
            .map_err(|e| ErrorRecord::new(e.name(), &e))?;
            let comparison = match cfg.variants.as_slice() {
                [a, b, ..] => Some(Comparison { first: *a, second: *b, first_wins: summary.wins(*a, *b), seeds: cfg.seeds.len() }),
                _ => None,
            };
            emit(to_line(&Ok(DemoReport { summary, comparison })));
        }
    }
    Ok(())
}

fn read_text(path: &Path) -> Response<String> {
    fs::read_to_string(path).map_err(|e| ErrorRecord::new("IoError", format!("{}: {e}", path.display())))
}

fn load_config<T: DeserializeOwned + Default>(path: Option<&Path>) -> Response<T> {
    match path {
        None => Ok(T::default()),
        Some(p) => serde_json::from_str(&read_text(p)?)
            .map_err(|e| ErrorRecord::new("ConfigError", format!("{}: {e}", p.display()))),
    }
}

fn load_scene(args: &SceneArgs) -> Response<(Scene, KnowledgeBase)> {
    let scenes = load_scenes(&args.scene).map_err(|e| ErrorRecord::new(e.name(), &e))?;
    let scene = match &args.scene_id {
        Some(id) => scenes.into_iter().find(|s| &s.scene_id == id).ok_or_else(|| {
            ErrorRecord::new("UnknownScene", format!("no scene '{id}' in {}", args.scene.display()))
        })?,
        None => {
            let n = scenes.len();
            let mut it = scenes.into_iter();
            match (it.next(), n) {
                (Some(s), 1) => s,
                _ => {
                    return Err(ErrorRecord::new(
                        "AmbiguousScene",
                        format!("{} holds {n} scenes; pass --scene-id", args.scene.display()),
                    ))
                }
            }
        }
    };
    let kb = match &args.kb {
        Some(p) => load_kb(p).map_err(|e| ErrorRecord::new(e.name(), &e))?,
        None => KnowledgeBase::new(),
    };
    Ok((scene, kb))
}

fn read_predictions(path: &Path) -> Response<Vec<String>> {
    read_text(path)?
        .lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, l)| match serde_json::from_str::<Prediction>(l) {
            Ok(Prediction::Text(s)) | Ok(Prediction::Record { program: s }) => Ok(s),
            Err(e) => Err(ErrorRecord::new("SchemaError", format!("{} line {}: {e}", path.display(), i + 1))),
        })
        .collect()
}
