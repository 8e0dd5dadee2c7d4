//! Program-first synthetic data: draw a program from the grammar, build a
//! symbolic shelf scene that grounds it with an unambiguous answer, and phrase
//! a question for it.
//!
//! Five nested structures ([`TemplateTag::HELD_OUT`]) can be kept out of the
//! train and validation splits and planted in the test split to probe
//! compositional generalization.

mod config;
pub mod grammar;
mod question;
mod sampler;
mod synth;
mod templates;

use std::path::Path;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

pub use config::{GenConfig, NumericSpec, ShelfLayout, Vocabulary};
pub use grammar::{Chooser, Context, Decision, DecisionKey, Grammar, OutOfGrammar, Site};
pub use question::render_question;
pub use sampler::{sample_program, PriorChooser};
pub use synth::synthesize_scene;
pub use templates::{classify_template, held_out_structures, instantiate, TemplateTag};

use crate::dsl::Program;
use crate::scene::{save_dataset, save_kb, save_scenes, DatasetRecord, KnowledgeBase, Scene, SceneError, Split};

/// Programs drawn per record before giving up.
const MAX_PROGRAM_DRAWS: usize = 200;

#[derive(Debug, Error)]
pub enum GenError {
    #[error("invalid generation config: {0}")]
    InvalidConfig(String),
    #[error("no valid scene for {program} after {attempts} attempts")]
    GenerationRetryExhausted { program: String, attempts: usize },
    #[error(transparent)]
    Scene(#[from] SceneError),
}

impl GenError {
    pub fn name(&self) -> &'static str {
        match self {
            GenError::InvalidConfig(_) => "InvalidConfig",
            GenError::GenerationRetryExhausted { .. } => "GenerationRetryExhausted",
            GenError::Scene(e) => e.name(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GeneratedDataset {
    pub scenes: Vec<Scene>,
    pub kb: KnowledgeBase,
    pub records: Vec<DatasetRecord>,
}

impl GeneratedDataset {
    pub fn split(&self, split: Split) -> impl Iterator<Item = &DatasetRecord> {
        self.records.iter().filter(move |r| r.split == split)
    }

    /// Write `scenes.jsonl`, `kb.json` and `dataset.jsonl` into `dir`.
    pub fn write(&self, dir: impl AsRef<Path>) -> Result<(), GenError> {
        let dir = dir.as_ref();
        std::fs::create_dir_all(dir).map_err(|source| SceneError::Io { path: dir.to_path_buf(), source })?;
        save_scenes(dir.join("scenes.jsonl"), &self.scenes)?;
        save_kb(dir.join("kb.json"), &self.kb)?;
        save_dataset(dir.join("dataset.jsonl"), &self.records)?;
        Ok(())
    }
}

/// Generator state for record `index` of `split`; independent of every other
/// record, so generation order does not matter.
pub fn record_rng(seed: u64, split: Split, index: usize) -> ChaCha8Rng {
    let mut key = [0u8; 32];
    key[..8].copy_from_slice(&seed.to_le_bytes());
    key[8] = split as u8;
    key[16..24].copy_from_slice(&(index as u64).to_le_bytes());
    ChaCha8Rng::from_seed(key)
}

pub fn generate_dataset(cfg: &GenConfig) -> Result<GeneratedDataset, GenError> {
    cfg.validate()?;
    let grammar = Grammar::new(cfg.vocabulary.clone(), cfg.max_depth);
    let kb = cfg.vocabulary.knowledge_base();
    let quota = cfg.holdout_quota;
    let mut scenes = Vec::new();
    let mut records = Vec::new();
    for split in Split::ALL {
        for index in 0..cfg.count(split) {
            let mut rng = record_rng(cfg.seed, split, index);
            let planted = (split == Split::Test && quota > 0)
                .then(|| cfg.holdout_templates.get(index / quota).copied())
                .flatten();
            let draw = |rng: &mut ChaCha8Rng| -> Program {
                if let Some(tag) = planted {
                    if let Some(p) = instantiate(tag, &cfg.vocabulary, rng) {
                        return p;
                    }
                }
                loop {
                    let p = grammar.generate(&mut PriorChooser::new(&grammar, rng)).0;
                    let leaks = split != Split::Test
                        && held_out_structures(&p).iter().any(|t| cfg.holdout_templates.contains(t));
                    if !leaks {
                        return p;
                    }
                }
            };
            let scene_id = format!("{}_{index:05}", split.as_str());
            let mut last_err = None;
            let mut made = None;
            for _ in 0..MAX_PROGRAM_DRAWS {
                let program = draw(&mut rng);
                match synthesize_scene(&program, cfg, &kb, &scene_id, &mut rng) {
                    Ok((scene, answer)) => {
                        made = Some((program, scene, answer));
                        break;
                    }
                    Err(e) => last_err = Some(e),
                }
            }
            let Some((program, scene, answer)) = made else {
                return Err(last_err.expect("at least one draw"));
            };
            records.push(DatasetRecord {
                image_id: scene_id,
                query: render_question(&program, &cfg.vocabulary),
                program: program.canonical(),
                final_answer: answer,
                split,
                template_tag: Some(classify_template(&program).to_string()),
            });
            scenes.push(scene);
        }
    }
    Ok(GeneratedDataset { scenes, kb, records })
}
