//! Group-relative policy optimization of a grammar policy.
//!
//! The policy derives programs through the same grammar the dataset sampler
//! uses, with every decision a softmax conditioned on the question. Training
//! samples a group of programs for one question, scores them with a reward
//! variant, z-scores the rewards within the group and takes one exact
//! gradient step, regularized toward a frozen reference policy.

mod demo;
mod grpo;
mod policy;
mod sft;

use std::collections::HashMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use demo::{run_demo, DemoConfig, DemoRun, DemoSummary};
pub use grpo::{advantages, grpo_step, objective, Objective, StepStats, ADVANTAGE_EPS};
pub use policy::{question_features, shared, Features, Gradient, GrammarPolicy, ParamId, Sample, Table};
pub use sft::sft_initialize;

use crate::dsl::{parse, DslError, Program};
use crate::reward::{evaluate_dataset, reward_for, EvalError, RewardVariant};
use crate::scene::{DatasetRecord, KnowledgeBase, Scene};

#[derive(Debug, Error)]
pub enum TrainError {
    #[error("group of {expected} expected, got {samples} samples and {rewards} rewards")]
    BatchSizeMismatch { expected: usize, samples: usize, rewards: usize },
    #[error("no record in the corpus can be derived by the grammar")]
    EmptyCorpus,
    #[error("the task set is empty")]
    EmptyTask,
    #[error("record references unknown scene '{0}'")]
    UnknownScene(String),
    #[error("reference program '{program}' does not parse: {source}")]
    InvalidReference { program: String, source: DslError },
    #[error("invalid training config: {0}")]
    InvalidConfig(String),
    #[error(transparent)]
    Eval(#[from] EvalError),
    #[error(transparent)]
    Gen(#[from] crate::datagen::GenError),
}

impl TrainError {
    pub fn name(&self) -> &'static str {
        match self {
            TrainError::BatchSizeMismatch { .. } => "BatchSizeMismatch",
            TrainError::EmptyCorpus => "EmptyCorpus",
            TrainError::EmptyTask => "EmptyTask",
            TrainError::UnknownScene(_) => "UnknownScene",
            TrainError::InvalidReference { .. } => "InvalidReference",
            TrainError::InvalidConfig(_) => "InvalidConfig",
            TrainError::Eval(e) => e.name(),
            TrainError::Gen(e) => e.name(),
        }
    }
}

/// GRPO settings. The reference policy is the policy passed to [`train`]
/// before its first update, frozen for the whole run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrainConfig {
    /// Group size.
    pub k: usize,
    pub beta: f64,
    pub learning_rate: f64,
    pub steps: usize,
    pub variant: RewardVariant,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig { k: 8, beta: 0.05, learning_rate: 0.1, steps: 300, variant: RewardVariant::Full, seed: 0 }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<(), TrainError> {
        if self.k < 2 {
            return Err(TrainError::InvalidConfig("k must be at least 2".into()));
        }
        if !(self.beta >= 0.0) || !(self.learning_rate > 0.0) {
            return Err(TrainError::InvalidConfig("beta must be >= 0 and learning_rate > 0".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StepRecord {
    pub step: usize,
    pub mean_reward: f64,
    pub probe_pa: f64,
    pub probe_aa: f64,
    pub kl: f64,
    pub grad_norm: f64,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct TrainTrace {
    pub steps: Vec<StepRecord>,
}

impl TrainTrace {
    pub fn final_pa(&self) -> Option<f64> {
        self.steps.last().map(|s| s.probe_pa)
    }
}

/// Greedy predictions of `policy` scored on `probe`.
pub fn probe_accuracy(
    policy: &GrammarPolicy,
    probe: &[DatasetRecord],
    scenes: &[Scene],
    kb: &KnowledgeBase,
) -> Result<(f64, f64), TrainError> {
    if probe.is_empty() {
        return Ok((0.0, 0.0));
    }
    let predictions: Vec<String> = probe.iter().map(|r| policy.greedy(&r.query).canonical()).collect();
    let report = evaluate_dataset(probe, &predictions, scenes, kb)?;
    Ok((report.pa, report.aa))
}

/// Run `cfg.steps` GRPO steps on questions drawn from `task`, logging greedy
/// PA/AA on `probe` after every step. `policy` is updated in place; its state
/// on entry is the reference.
pub fn train(
    cfg: &TrainConfig,
    policy: &mut GrammarPolicy,
    task: &[DatasetRecord],
    probe: &[DatasetRecord],
    scenes: &[Scene],
    kb: &KnowledgeBase,
) -> Result<TrainTrace, TrainError> {
    train_with(cfg, policy, task, probe, scenes, kb, |_| {})
}

/// [`train`] with a callback invoked after every step.
pub fn train_with(
    cfg: &TrainConfig,
    policy: &mut GrammarPolicy,
    task: &[DatasetRecord],
    probe: &[DatasetRecord],
    scenes: &[Scene],
    kb: &KnowledgeBase,
    mut on_step: impl FnMut(&StepRecord),
) -> Result<TrainTrace, TrainError> {
    cfg.validate()?;
    let mut trace = TrainTrace::default();
    if cfg.steps == 0 {
        return Ok(trace);
    }
    if task.is_empty() {
        return Err(TrainError::EmptyTask);
    }
    let by_id: HashMap<&str, &Scene> = scenes.iter().map(|s| (s.scene_id.as_str(), s)).collect();
    let mut items: Vec<(&DatasetRecord, Program, &Scene)> = Vec::with_capacity(task.len());
    for r in task {
        let gt = parse(&r.program)
            .map_err(|source| TrainError::InvalidReference { program: r.program.clone(), source })?;
        let scene = by_id.get(r.image_id.as_str()).ok_or_else(|| TrainError::UnknownScene(r.image_id.clone()))?;
        items.push((r, gt, scene));
    }
    let reference = policy.clone();
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    for step in 0..cfg.steps {
        let (record, gt, scene) = &items[rng.gen_range(0..items.len())];
        let samples: Vec<Sample> = (0..cfg.k).map(|_| policy.sample(&record.query, &mut rng)).collect();
        let rewards: Vec<f64> = samples
            .iter()
            .map(|s| reward_for(&s.program, gt, &record.final_answer, scene, kb, cfg.variant))
            .collect();
        let stats = grpo_step(policy, &reference, &record.query, &samples, &rewards, cfg)?;
        assert!(stats.kl.is_finite() && stats.loss.is_finite(), "non-finite objective at step {step}");
        let (probe_pa, probe_aa) = probe_accuracy(policy, probe, scenes, kb)?;
        let rec = StepRecord {
            step,
            mean_reward: stats.mean_reward,
            probe_pa,
            probe_aa,
            kl: stats.kl,
            grad_norm: stats.grad_norm,
        };
        on_step(&rec);
        trace.steps.push(rec);
    }
    Ok(trace)
}
