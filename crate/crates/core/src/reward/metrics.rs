use std::collections::{BTreeMap, HashMap};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::dsl::{parse, DslError};
use crate::exec::{answer_equal, execute};
use crate::scene::{DatasetRecord, KnowledgeBase, Scene};

/// Key used in the per-template breakdown for records without a tag.
pub const UNTAGGED: &str = "untagged";

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct TemplateScore {
    pub count: usize,
    pub pa: f64,
    pub aa: f64,
}

/// Program accuracy (canonical string match) and answer accuracy (executed
/// answer match) over a batch of predictions.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub count: usize,
    pub pa: f64,
    pub aa: f64,
    pub per_template: BTreeMap<String, TemplateScore>,
}

#[derive(Debug, Error)]
pub enum EvalError {
    #[error("{records} records but {predictions} predictions")]
    LengthMismatch { records: usize, predictions: usize },
    #[error("record {index}: no scene with id '{image_id}'")]
    UnknownScene { index: usize, image_id: String },
    #[error("record {index}: reference program does not parse: {source}")]
    InvalidReference { index: usize, source: DslError },
}

impl EvalError {
    pub fn name(&self) -> &'static str {
        match self {
            EvalError::LengthMismatch { .. } => "LengthMismatch",
            EvalError::UnknownScene { .. } => "UnknownScene",
            EvalError::InvalidReference { .. } => "InvalidReference",
        }
    }
}

/// Score `predictions[i]` against `records[i]`. Predictions that do not parse
/// count as wrong on both metrics, and so do programs that fault.
pub fn evaluate_dataset(
    records: &[DatasetRecord],
    predictions: &[String],
    scenes: &[Scene],
    kb: &KnowledgeBase,
) -> Result<EvalReport, EvalError> {
    if records.len() != predictions.len() {
        return Err(EvalError::LengthMismatch { records: records.len(), predictions: predictions.len() });
    }
    let by_id: HashMap<&str, &Scene> = scenes.iter().map(|s| (s.scene_id.as_str(), s)).collect();
    let mut hits: BTreeMap<String, (usize, usize, usize)> = BTreeMap::new();
    let (mut pa, mut aa) = (0usize, 0usize);
    for (index, (record, prediction)) in records.iter().zip(predictions).enumerate() {
        let scene = by_id
            .get(record.image_id.as_str())
            .ok_or_else(|| EvalError::UnknownScene { index, image_id: record.image_id.clone() })?;
        let gt = parse(&record.program).map_err(|source| EvalError::InvalidReference { index, source })?;
        let (p, a) = match parse(prediction) {
            Ok(pred) => {
                let program_hit = pred.canonical() == gt.canonical();
                let answer_hit = answer_equal(&execute(&pred, scene, kb), &record.final_answer);
                (program_hit as usize, answer_hit as usize)
            }
            Err(_) => (0, 0),
        };
        pa += p;
        aa += a;
        let tag = record.template_tag.clone().unwrap_or_else(|| UNTAGGED.to_string());
        let entry = hits.entry(tag).or_default();
        entry.0 += 1;
        entry.1 += p;
        entry.2 += a;
    }
    let frac = |k: usize, n: usize| if n == 0 { 0.0 } else { k as f64 / n as f64 };
    let n = records.len();
    Ok(EvalReport {
        count: n,
        pa: frac(pa, n),
        aa: frac(aa, n),
        per_template: hits
            .into_iter()
            .map(|(tag, (c, p, a))| (tag, TemplateScore { count: c, pa: frac(p, c), aa: frac(a, c) }))
            .collect(),
    })
}
