//! Line-delimited record schemas shared by the command line and any
//! foreign-function layer. Every response is either a result record or an
//! [`ErrorRecord`], serialized with [`to_line`] so that both entry points emit
//! byte-identical text.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::dsl::{parse_typed, Program, ResultType};
use crate::exec::execute;
use crate::reward::{align, RewardVariant};
use crate::scene::{Answer, KnowledgeBase, Scene};

/// Structured failure: the originating error's stable name and its message.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ErrorRecord {
    pub error: String,
    pub message: String,
}

impl ErrorRecord {
    pub fn new(name: &str, message: impl fmt::Display) -> Self {
        ErrorRecord { error: name.to_string(), message: message.to_string() }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParseRecord {
    pub canonical: String,
    pub nodes: usize,
    pub result_type: ResultType,
    /// Canonical text of every sub-program, indexed by pre-order node id.
    pub subprograms: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExecRecord {
    pub answer: Answer,
    pub result_type: ResultType,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoreRecord {
    pub reward: f64,
    pub variant: RewardVariant,
    /// Matched `[gen node, gt node, similarity]` triples.
    pub matching: Vec<(usize, usize, f64)>,
    pub gen_nodes: usize,
    pub gt_nodes: usize,
    /// Set when the generated program does not parse or type-check; the
    /// reward is then 0.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gen_error: Option<String>,
}

pub type Response<T> = Result<T, ErrorRecord>;

fn program(text: &str) -> Response<(Program, ResultType)> {
    parse_typed(text).map_err(|e| ErrorRecord::new(e.name(), e))
}

pub fn parse_record(text: &str) -> Response<ParseRecord> {
    let (p, result_type) = program(text)?;
    Ok(ParseRecord {
        canonical: p.canonical(),
        nodes: p.node_count(),
        result_type,
        subprograms: p.nodes().iter().map(|n| n.canonical()).collect(),
    })
}

/// Execute program text; a faulting program is an error record named after
/// the fault.
pub fn exec_record(text: &str, scene: &Scene, kb: &KnowledgeBase) -> Response<ExecRecord> {
    let (p, _) = program(text)?;
    let value = execute(&p, scene, kb).map_err(|f| ErrorRecord::new(f.name(), &f))?;
    Ok(ExecRecord { answer: value.to_answer(), result_type: value.result_type() })
}

/// Score generated text against reference text. Only a broken reference is an
/// error; a broken generated program scores 0.
pub fn score_record(
    gen: &str,
    gt: &str,
    scene: &Scene,
    kb: &KnowledgeBase,
    variant: RewardVariant,
) -> Response<ScoreRecord> {
    let (gt, _) = program(gt)?;
    let gen = match program(gen) {
        Ok((p, _)) => p,
        Err(e) => {
            return Ok(ScoreRecord {
                reward: 0.0,
                variant,
                matching: Vec::new(),
                gen_nodes: 0,
                gt_nodes: gt.node_count(),
                gen_error: Some(e.error),
            })
        }
    };
    let a = align(&gen, &gt, scene, kb, variant);
    Ok(ScoreRecord {
        reward: a.reward,
        variant,
        matching: a.matching.pairs.iter().map(|m| (m.row, m.col, m.similarity)).collect(),
        gen_nodes: a.gen_nodes,
        gt_nodes: a.gt_nodes,
        gen_error: None,
    })
}

/// [`score_record`] for a group of generated programs, in input order.
pub fn score_batch(
    gens: &[&str],
    gt: &str,
    scene: &Scene,
    kb: &KnowledgeBase,
    variant: RewardVariant,
) -> Vec<Response<ScoreRecord>> {
    gens.iter().map(|g| score_record(g, gt, scene, kb, variant)).collect()
}

/// One JSON line (without the trailing newline) for a response.
pub fn to_line<T: Serialize>(response: &Response<T>) -> String {
    let encoded = match response {
        Ok(v) => serde_json::to_string(v),
        Err(e) => serde_json::to_string(e),
    };
    encoded.expect("records serialize")
}
