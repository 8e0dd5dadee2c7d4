use std::collections::{BTreeMap, BTreeSet, HashSet};

use serde::{Deserialize, Serialize};

use crate::dsl::Literal;

/// Normalized image-space box `(x, y, w, h)`, serialized as `[x, y, w, h]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(from = "[f64; 4]", into = "[f64; 4]")]
pub struct BBox {
    pub x: f64,
    pub y: f64,
    pub w: f64,
    pub h: f64,
}

impl BBox {
    pub fn center(&self) -> (f64, f64) {
        (self.x + self.w / 2.0, self.y + self.h / 2.0)
    }

    pub fn is_valid(&self) -> bool {
        let unit = |v: f64| (0.0..=1.0).contains(&v);
        unit(self.x) && unit(self.y) && unit(self.w) && unit(self.h) && self.w > 0.0 && self.h > 0.0
    }
}

impl From<[f64; 4]> for BBox {
    fn from([x, y, w, h]: [f64; 4]) -> Self {
        BBox { x, y, w, h }
    }
}

impl From<BBox> for [f64; 4] {
    fn from(b: BBox) -> Self {
        [b.x, b.y, b.w, b.h]
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SceneObject {
    pub object_id: String,
    pub class: String,
    #[serde(default)]
    pub attributes: BTreeMap<String, Literal>,
    /// Unary relation labels such as `on_top_shelf`.
    #[serde(default)]
    pub tags: BTreeSet<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub bbox: Option<BBox>,
}

impl SceneObject {
    pub fn new(object_id: impl Into<String>, class: impl Into<String>) -> Self {
        SceneObject {
            object_id: object_id.into(),
            class: class.into(),
            attributes: BTreeMap::new(),
            tags: BTreeSet::new(),
            bbox: None,
        }
    }

    pub fn with_attr(mut self, name: &str, value: impl Into<Literal>) -> Self {
        self.attributes.insert(name.to_ascii_lowercase(), value.into());
        self
    }

    pub fn with_tag(mut self, tag: &str) -> Self {
        self.tags.insert(tag.to_string());
        self
    }

    pub fn with_bbox(mut self, x: f64, y: f64, w: f64, h: f64) -> Self {
        self.bbox = Some(BBox { x, y, w, h });
        self
    }
}

/// A binary relation triple `(subject, predicate, object)`, serialized as a
/// three-element array.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Relation(pub String, pub String, pub String);

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Scene {
    pub scene_id: String,
    #[serde(default)]
    pub objects: Vec<SceneObject>,
    #[serde(default)]
    pub relations: Vec<Relation>,
}

/// A broken scene invariant, without file context.
#[derive(Debug, Clone, PartialEq)]
pub enum SceneViolation {
    EmptyObjectId,
    DuplicateObjectId(String),
    InvalidBBox(String),
    DanglingRelation { object_id: String },
}

impl Scene {
    pub fn new(scene_id: impl Into<String>, objects: Vec<SceneObject>) -> Self {
        Scene { scene_id: scene_id.into(), objects, relations: Vec::new() }
    }

    pub fn object(&self, object_id: &str) -> Option<&SceneObject> {
        self.objects.iter().find(|o| o.object_id == object_id)
    }

    /// Lowercases attribute keys so lookups by canonical attribute name work.
    pub fn normalize(&mut self) {
        for o in &mut self.objects {
            if o.attributes.keys().any(|k| k.chars().any(|c| c.is_ascii_uppercase())) {
                o.attributes = std::mem::take(&mut o.attributes)
                    .into_iter()
                    .map(|(k, v)| (k.to_ascii_lowercase(), v))
                    .collect();
            }
        }
    }

    pub fn validate(&self) -> Result<(), SceneViolation> {
        let mut seen = HashSet::new();
        for o in &self.objects {
            if o.object_id.is_empty() {
                return Err(SceneViolation::EmptyObjectId);
            }
            if !seen.insert(o.object_id.as_str()) {
                return Err(SceneViolation::DuplicateObjectId(o.object_id.clone()));
            }
            if o.bbox.is_some_and(|b| !b.is_valid()) {
                return Err(SceneViolation::InvalidBBox(o.object_id.clone()));
            }
        }
        for Relation(s, _, o) in &self.relations {
            for end in [s, o] {
                if !seen.contains(end.as_str()) {
                    return Err(SceneViolation::DanglingRelation { object_id: end.clone() });
                }
            }
        }
        Ok(())
    }
}
