use crate::dsl::NodeKind;
use crate::exec::{answers_equal, ExecValue, NodeOutcome, ObjectSet};

use super::RewardVariant;

/// `|a ∩ b| / |a ∪ b|`, with two empty sets counting as identical.
pub fn jaccard(a: &ObjectSet, b: &ObjectSet) -> f64 {
    if a.is_empty() && b.is_empty() {
        return 1.0;
    }
    let inter = a.intersection(b).count();
    let union = a.len() + b.len() - inter;
    inter as f64 / union as f64
}

/// Similarity of two node outcomes from traces over the same scene.
///
/// Object-valued outcomes (order ignored) compare by Jaccard index, or by
/// exact set equality under [`RewardVariant::BinaryNode`]. Scalar outcomes
/// score 1 when equal as answers. Mixed kinds and faults score 0, and
/// [`RewardVariant::TypeOnly`] zeroes pairs of different operators.
pub fn node_similarity(
    a: &NodeOutcome,
    b: &NodeOutcome,
    variant: RewardVariant,
    kind_a: NodeKind,
    kind_b: NodeKind,
) -> f64 {
    if variant == RewardVariant::TypeOnly && kind_a != kind_b {
        return 0.0;
    }
    let (Ok(a), Ok(b)) = (a, b) else {
        return 0.0;
    };
    match (a.object_set(), b.object_set()) {
        (Some(sa), Some(sb)) => {
            if variant == RewardVariant::BinaryNode {
                if sa == sb { 1.0 } else { 0.0 }
            } else {
                jaccard(&sa, &sb)
            }
        }
        (None, None) => {
            if scalar_equal(a, b) {
                1.0
            } else {
                0.0
            }
        }
        _ => 0.0,
    }
}

fn scalar_equal(a: &ExecValue, b: &ExecValue) -> bool {
    answers_equal(&a.to_answer(), &b.to_answer())
}
