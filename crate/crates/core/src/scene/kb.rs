use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::SceneObject;
use crate::dsl::Literal;

/// Class-level attribute values that are not visible on the object itself.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct KnowledgeBase {
    pub entries: BTreeMap<String, BTreeMap<String, Literal>>,
}

impl KnowledgeBase {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn insert(&mut self, class: &str, attr: &str, value: impl Into<Literal>) {
        self.entries
            .entry(class.to_string())
            .or_default()
            .insert(attr.to_ascii_lowercase(), value.into());
    }

    pub fn lookup(&self, class: &str, attr: &str) -> Option<&Literal> {
        self.entries.get(class)?.get(attr)
    }
}

/// Attribute value of an object: its own value if present, else the knowledge
/// base entry for its class, else `None` (missing).
pub fn resolve_attribute<'a>(obj: &'a SceneObject, attr: &str, kb: &'a KnowledgeBase) -> Option<&'a Literal> {
    obj.attributes.get(attr).or_else(|| kb.lookup(&obj.class, attr))
}
