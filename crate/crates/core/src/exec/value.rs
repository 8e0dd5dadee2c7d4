use std::collections::BTreeSet;

use crate::dsl::{Literal, ResultType};
use crate::scene::Answer;

/// Set of object identifiers; iteration is in ascending id order.
pub type ObjectSet = BTreeSet<String>;

/// Result of executing a (sub-)program.
#[derive(Debug, Clone, PartialEq)]
pub enum ExecValue {
    Objects(ObjectSet),
    /// SORT output; order is significant.
    Ordered(Vec<String>),
    Number(f64),
    Text(String),
    Boolean(bool),
    Values(Vec<Literal>),
}

impl ExecValue {
    pub fn result_type(&self) -> ResultType {
        match self {
            ExecValue::Objects(_) => ResultType::ObjectSet,
            ExecValue::Ordered(_) => ResultType::ObjectList,
            ExecValue::Number(_) => ResultType::Number,
            ExecValue::Text(_) => ResultType::Text,
            ExecValue::Boolean(_) => ResultType::Boolean,
            ExecValue::Values(_) => ResultType::ValueList,
        }
    }

    /// Object ids in iteration order, for set- and list-valued results.
    pub fn object_ids(&self) -> Option<Vec<&str>> {
        match self {
            ExecValue::Objects(s) => Some(s.iter().map(String::as_str).collect()),
            ExecValue::Ordered(v) => Some(v.iter().map(String::as_str).collect()),
            _ => None,
        }
    }

    /// Object ids as an unordered set, for set- and list-valued results.
    pub fn object_set(&self) -> Option<ObjectSet> {
        match self {
            ExecValue::Objects(s) => Some(s.clone()),
            ExecValue::Ordered(v) => Some(v.iter().cloned().collect()),
            _ => None,
        }
    }

    /// Answer form: object results become lists of ids.
    pub fn to_answer(&self) -> Answer {
        let texts = |ids: Vec<&str>| Answer::List(ids.into_iter().map(Literal::text).collect());
        match self {
            ExecValue::Objects(_) | ExecValue::Ordered(_) => texts(self.object_ids().unwrap_or_default()),
            ExecValue::Number(n) => Answer::Single(Literal::Number(*n)),
            ExecValue::Text(s) => Answer::Single(Literal::Text(s.clone())),
            ExecValue::Boolean(b) => Answer::Single(Literal::Bool(*b)),
            ExecValue::Values(v) => Answer::List(v.clone()),
        }
    }
}

/// Why a node could not be evaluated. `node_id` names the node where the
/// fault originated; ancestors carry the same fault.
#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum ExecFault {
    #[error("node {node_id}: no object carries attribute '{attribute}'")]
    AttributeAllMissing { node_id: usize, attribute: String },
    #[error("node {node_id}: unknown predicate '{predicate}'")]
    UnknownPredicate { node_id: usize, predicate: String },
    #[error("node {node_id}: aggregate over an empty set has no answer")]
    EmptySelection { node_id: usize },
    #[error("node {node_id}: operand is not an object set")]
    NotObjects { node_id: usize },
}

impl ExecFault {
    pub fn name(&self) -> &'static str {
        match self {
            ExecFault::AttributeAllMissing { .. } => "AttributeAllMissing",
            ExecFault::UnknownPredicate { .. } => "UnknownPredicate",
            ExecFault::EmptySelection { .. } => "EmptySelection",
            ExecFault::NotObjects { .. } => "NotObjects",
        }
    }

    pub fn node_id(&self) -> usize {
        match self {
            ExecFault::AttributeAllMissing { node_id, .. }
            | ExecFault::UnknownPredicate { node_id, .. }
            | ExecFault::EmptySelection { node_id }
            | ExecFault::NotObjects { node_id } => *node_id,
        }
    }
}

pub type NodeOutcome = Result<ExecValue, ExecFault>;
