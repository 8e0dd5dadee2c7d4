use std::fmt;

use serde::{Deserialize, Serialize};

use crate::dsl::Literal;

/// Expected answer of a record: one literal or a list of literals.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Answer {
    List(Vec<Literal>),
    Single(Literal),
}

impl fmt::Display for Answer {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&serde_json::to_string(self).map_err(|_| fmt::Error)?)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Split {
    Train,
    Val,
    Test,
}

impl Split {
    pub const ALL: [Split; 3] = [Split::Train, Split::Val, Split::Test];

    pub fn as_str(self) -> &'static str {
        match self {
            Split::Train => "train",
            Split::Val => "val",
            Split::Test => "test",
        }
    }
}

/// One question/program/answer triple grounded in a scene.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetRecord {
    /// Scene reference; equals the scene's `scene_id`.
    pub image_id: String,
    pub query: String,
    /// Canonical program text.
    pub program: String,
    pub final_answer: Answer,
    pub split: Split,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub template_tag: Option<String>,
}
