//! Rewards for generated programs.
//!
//! The dense reward executes every sub-program of the generated and the
//! reference program, scores each pair of nodes by how much their outputs
//! agree ([`node_similarity`]), and takes the weight of the best one-to-one
//! node alignment ([`optimal_matching`]). Identical programs therefore score
//! their node count. The sparse reward only checks the final answer.

mod matching;
mod metrics;
mod similarity;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::dsl::{parse, validate_types, Program};
use crate::exec::{answer_equal, execute, execute_subprograms, SubprogramTrace};
use crate::scene::{Answer, KnowledgeBase, Scene};

pub use matching::{optimal_matching, MatchedPair, Matching, SimilarityMatrix};
pub use metrics::{evaluate_dataset, EvalError, EvalReport, TemplateScore};
pub use similarity::{jaccard, node_similarity};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum RewardVariant {
    /// Jaccard similarity, any operator may align with any other.
    #[serde(rename = "full")]
    Full,
    /// Node similarity is 1 only for identical object sets.
    #[serde(rename = "binary")]
    BinaryNode,
    /// Nodes only align with nodes of the same operator.
    #[serde(rename = "type-only")]
    TypeOnly,
    /// `Full` divided by the reference node count.
    #[serde(rename = "normalized")]
    Normalized,
    /// 1 when the final answer is right, else 0.
    #[serde(rename = "rlvr")]
    Rlvr,
}

impl RewardVariant {
    pub const ALL: [RewardVariant; 5] = [
        RewardVariant::Full,
        RewardVariant::BinaryNode,
        RewardVariant::TypeOnly,
        RewardVariant::Normalized,
        RewardVariant::Rlvr,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            RewardVariant::Full => "full",
            RewardVariant::BinaryNode => "binary",
            RewardVariant::TypeOnly => "type-only",
            RewardVariant::Normalized => "normalized",
            RewardVariant::Rlvr => "rlvr",
        }
    }
}

impl fmt::Display for RewardVariant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for RewardVariant {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        RewardVariant::ALL
            .into_iter()
            .find(|v| v.as_str() == s)
            .ok_or_else(|| format!("unknown reward variant '{s}' (expected full, binary, type-only, normalized or rlvr)"))
    }
}

/// Pairwise node similarities between two execution traces; rows follow the
/// generated program's pre-order, columns the reference's.
pub fn trace_similarity(
    gen: &Program,
    gen_trace: &SubprogramTrace,
    gt: &Program,
    gt_trace: &SubprogramTrace,
    variant: RewardVariant,
) -> SimilarityMatrix {
    let gen_kinds: Vec<_> = gen.nodes().iter().map(|n| n.kind()).collect();
    let gt_kinds: Vec<_> = gt.nodes().iter().map(|n| n.kind()).collect();
    let mut s = SimilarityMatrix::zeros(gen_kinds.len(), gt_kinds.len());
    for (i, a) in gen_trace.iter().enumerate() {
        for (j, b) in gt_trace.iter().enumerate() {
            s.set(i, j, node_similarity(a, b, variant, gen_kinds[i], gt_kinds[j]));
        }
    }
    s
}

pub fn similarity_matrix(
    gen: &Program,
    gt: &Program,
    scene: &Scene,
    kb: &KnowledgeBase,
    variant: RewardVariant,
) -> SimilarityMatrix {
    let gen_trace = execute_subprograms(gen, scene, kb);
    let gt_trace = execute_subprograms(gt, scene, kb);
    trace_similarity(gen, &gen_trace, gt, &gt_trace, variant)
}

/// Full scoring result of one generated program against a reference.
#[derive(Debug, Clone, PartialEq)]
pub struct Alignment {
    pub reward: f64,
    pub variant: RewardVariant,
    pub matrix: SimilarityMatrix,
    /// Empty for [`RewardVariant::Rlvr`].
    pub matching: Matching,
    pub gen_nodes: usize,
    pub gt_nodes: usize,
}

/// Score `gen` against `gt` on one scene. Under [`RewardVariant::Rlvr`] the
/// reference answer is the reference program's own result.
pub fn align(gen: &Program, gt: &Program, scene: &Scene, kb: &KnowledgeBase, variant: RewardVariant) -> Alignment {
    let gen_trace = execute_subprograms(gen, scene, kb);
    let gt_trace = execute_subprograms(gt, scene, kb);
    let matrix = trace_similarity(gen, &gen_trace, gt, &gt_trace, variant);
    let gt_nodes = gt_trace.len();
    let (reward, matching) = match variant {
        RewardVariant::Rlvr => {
            let hit = match gt_trace.root() {
                Ok(v) => answer_equal(gen_trace.root(), &v.to_answer()),
                Err(_) => false,
            };
            (if hit { 1.0 } else { 0.0 }, Matching { pairs: Vec::new(), weight: 0.0 })
        }
        RewardVariant::Normalized => {
            let m = optimal_matching(&matrix);
            (m.weight / gt_nodes as f64, m)
        }
        _ => {
            let m = optimal_matching(&matrix);
            (m.weight, m)
        }
    };
    Alignment { reward, variant, matrix, matching, gen_nodes: gen_trace.len(), gt_nodes }
}

/// Dense structural reward: weight of the optimal node alignment.
pub fn alignment_reward(gen: &Program, gt: &Program, scene: &Scene, kb: &KnowledgeBase, variant: RewardVariant) -> f64 {
    align(gen, gt, scene, kb, variant).reward
}

/// Sparse answer reward: 1 iff the executed answer equals `gt_answer`.
pub fn answer_reward(gen: &Program, scene: &Scene, kb: &KnowledgeBase, gt_answer: &Answer) -> f64 {
    if answer_equal(&execute(gen, scene, kb), gt_answer) {
        1.0
    } else {
        0.0
    }
}

/// Reward for program text under any variant. Text that does not parse or
/// type-check earns 0.
pub fn reward_for_text(
    gen: &str,
    gt: &Program,
    gt_answer: &Answer,
    scene: &Scene,
    kb: &KnowledgeBase,
    variant: RewardVariant,
) -> f64 {
    let Ok(program) = parse(gen) else { return 0.0 };
    if validate_types(&program).is_err() {
        return 0.0;
    }
    reward_for(&program, gt, gt_answer, scene, kb, variant)
}

/// Reward for a well-typed program under any variant.
pub fn reward_for(
    gen: &Program,
    gt: &Program,
    gt_answer: &Answer,
    scene: &Scene,
    kb: &KnowledgeBase,
    variant: RewardVariant,
) -> f64 {
    match variant {
        RewardVariant::Rlvr => answer_reward(gen, scene, kb, gt_answer),
        v => alignment_reward(gen, gt, scene, kb, v),
    }
}
