use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::{sft_initialize, train_with, GrammarPolicy, StepRecord, TrainConfig, TrainError, TrainTrace};
use crate::datagen::{generate_dataset, GenConfig, Grammar, TemplateTag};
use crate::dsl::parse;
use crate::reward::RewardVariant;
use crate::scene::{DatasetRecord, Split};

/// Paired comparison of reward variants on a small generated task.
///
/// For every seed a dataset is generated with that seed and the policy is
/// fitted to the train split. The held-out-structure test records are dealt
/// round-robin across templates; the first `task_size` form the task set
/// (trained on) and the next `probe_size` the probe set (scored). Each variant
/// then trains from the same fitted policy with the same seed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct DemoConfig {
    pub dataset: GenConfig,
    pub seeds: Vec<u64>,
    pub variants: Vec<RewardVariant>,
    pub sft_epochs: usize,
    pub sft_learning_rate: f64,
    pub task_size: usize,
    pub probe_size: usize,
    pub max_task_depth: usize,
    pub train: TrainConfig,
}

impl Default for DemoConfig {
    fn default() -> Self {
        DemoConfig {
            dataset: GenConfig { train: 400, val: 10, test: 200, holdout_quota: 40, ..GenConfig::default() },
            seeds: vec![0, 1, 2, 3, 4],
            variants: vec![RewardVariant::Full, RewardVariant::Rlvr],
            sft_epochs: 3,
            sft_learning_rate: 1.0,
            task_size: 20,
            probe_size: 100,
            max_task_depth: 3,
            train: TrainConfig::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DemoRun {
    pub seed: u64,
    pub variant: RewardVariant,
    pub initial_pa: f64,
    pub final_pa: f64,
    pub final_aa: f64,
    #[serde(skip)]
    pub trace: TrainTrace,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct DemoSummary {
    pub runs: Vec<DemoRun>,
}

impl DemoSummary {
    pub fn final_pa(&self, seed: u64, variant: RewardVariant) -> Option<f64> {
        self.runs.iter().find(|r| r.seed == seed && r.variant == variant).map(|r| r.final_pa)
    }

    /// Seeds on which `a` ends with strictly higher probe PA than `b`.
    pub fn wins(&self, a: RewardVariant, b: RewardVariant) -> usize {
        let mut seeds: Vec<u64> = self.runs.iter().map(|r| r.seed).collect();
        seeds.dedup();
        seeds
            .into_iter()
            .filter(|s| matches!((self.final_pa(*s, a), self.final_pa(*s, b)), (Some(x), Some(y)) if x > y))
            .count()
    }
}

fn split_task(cfg: &DemoConfig, records: &[DatasetRecord]) -> (Vec<DatasetRecord>, Vec<DatasetRecord>) {
    let held_out: Vec<&DatasetRecord> = records
        .iter()
        .filter(|r| r.split == Split::Test)
        .filter(|r| {
            let tag = r.template_tag.as_deref().and_then(|t| t.parse::<TemplateTag>().ok());
            tag.is_some_and(|t| cfg.dataset.holdout_templates.contains(&t))
        })
        .filter(|r| parse(&r.program).is_ok_and(|p| p.depth() <= cfg.max_task_depth))
        .collect();
    let mut seen: BTreeMap<Option<&str>, usize> = BTreeMap::new();
    let mut dealt: Vec<(usize, &DatasetRecord)> = held_out
        .into_iter()
        .map(|r| {
            let n = seen.entry(r.template_tag.as_deref()).or_default();
            *n += 1;
            (*n, r)
        })
        .collect();
    dealt.sort_by_key(|(n, _)| *n);
    let mut rest = dealt.into_iter().map(|(_, r)| r.clone());
    let task = rest.by_ref().take(cfg.task_size).collect();
    let probe = rest.take(cfg.probe_size).collect();
    (task, probe)
}

pub fn run_demo(
    cfg: &DemoConfig,
    mut on_step: impl FnMut(u64, RewardVariant, &StepRecord),
) -> Result<DemoSummary, TrainError> {
    let mut summary = DemoSummary::default();
    for &seed in &cfg.seeds {
        let gen = GenConfig { seed, ..cfg.dataset.clone() };
        let ds = generate_dataset(&gen)?;
        let train_split: Vec<DatasetRecord> = ds.split(Split::Train).cloned().collect();
        let grammar = Grammar::new(gen.vocabulary.clone(), gen.max_depth);
        let reference = sft_initialize(&GrammarPolicy::new(grammar), &train_split, cfg.sft_epochs, cfg.sft_learning_rate)?;
        let (task, probe) = split_task(cfg, &ds.records);
        let initial_pa = super::probe_accuracy(&reference, &probe, &ds.scenes, &ds.kb)?.0;
        for &variant in &cfg.variants {
            let tc = TrainConfig { variant, seed, ..cfg.train.clone() };
            let mut policy = reference.clone();
            let trace = train_with(&tc, &mut policy, &task, &probe, &ds.scenes, &ds.kb, |s| on_step(seed, variant, s))?;
            let last = trace.steps.last();
            summary.runs.push(DemoRun {
                seed,
                variant,
                initial_pa,
                final_pa: last.map_or(initial_pa, |s| s.probe_pa),
                final_aa: last.map_or(0.0, |s| s.probe_aa),
                trace,
            });
        }
    }
    Ok(summary)
}
