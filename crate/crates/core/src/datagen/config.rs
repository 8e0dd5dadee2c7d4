use std::collections::BTreeMap;
use std::ops::RangeInclusive;

use serde::{Deserialize, Serialize};

use super::{GenError, TemplateTag};
use crate::dsl::MAX_NESTING;
use crate::scene::KnowledgeBase;

/// A numeric attribute. Values are drawn from `min..=max` on a `step` grid;
/// filters compare against one of `thresholds`.
///
/// With `per_class` set the attribute is class knowledge stored in the
/// knowledge base, and an object carries its own value only with probability
/// `override_rate`. Classes absent from `per_class` then lack the attribute.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NumericSpec {
    pub name: String,
    pub min: f64,
    pub max: f64,
    pub step: f64,
    pub thresholds: Vec<f64>,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub per_class: BTreeMap<String, f64>,
    #[serde(default, skip_serializing_if = "is_zero")]
    pub override_rate: f64,
    /// Predicate for "has the smallest value", e.g. "is the cheapest".
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub least: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub most: Option<String>,
}

fn is_zero(v: &f64) -> bool {
    *v == 0.0
}

impl NumericSpec {
    pub fn new(name: &str, min: f64, max: f64, step: f64, thresholds: &[f64]) -> Self {
        NumericSpec {
            name: name.to_string(),
            min,
            max,
            step,
            thresholds: thresholds.to_vec(),
            per_class: BTreeMap::new(),
            override_rate: 0.0,
            least: None,
            most: None,
        }
    }

    /// Number of grid points in `min..=max`.
    pub fn grid_len(&self) -> usize {
        ((self.max - self.min) / self.step).round() as usize + 1
    }

    pub fn grid_value(&self, i: usize) -> f64 {
        let v = self.min + self.step * i as f64;
        (v * 1e6).round() / 1e6
    }

    pub fn is_class_knowledge(&self) -> bool {
        !self.per_class.is_empty()
    }

    pub fn least_phrase(&self) -> String {
        self.least.clone().unwrap_or_else(|| format!("contains the least {}", self.name))
    }

    pub fn most_phrase(&self) -> String {
        self.most.clone().unwrap_or_else(|| format!("contains the most {}", self.name))
    }
}

/// Shelf grid used to place objects. Row 0 is the top shelf.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ShelfLayout {
    pub rows: usize,
    pub columns: usize,
}

/// Everything a generated program may mention.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Vocabulary {
    pub classes: Vec<String>,
    /// Categorical attributes and their values, e.g. `color -> [red, blue]`.
    pub text_attributes: BTreeMap<String, Vec<String>>,
    pub numeric_attributes: Vec<NumericSpec>,
    /// Unary tags, indexed by shelf row. `None` rows carry no tag.
    pub shelf_tags: Vec<Option<String>>,
    pub spatial_predicates: Vec<String>,
    pub shelf: ShelfLayout,
}

impl Vocabulary {
    pub fn tags(&self) -> Vec<&str> {
        self.shelf_tags.iter().flatten().map(String::as_str).collect()
    }

    pub fn numeric(&self, name: &str) -> Option<&NumericSpec> {
        self.numeric_attributes.iter().find(|n| n.name == name)
    }

    pub fn numeric_names(&self) -> Vec<&str> {
        self.numeric_attributes.iter().map(|n| n.name.as_str()).collect()
    }

    /// Knowledge base holding every `per_class` value.
    pub fn knowledge_base(&self) -> KnowledgeBase {
        let mut kb = KnowledgeBase::new();
        for spec in &self.numeric_attributes {
            for (class, v) in &spec.per_class {
                kb.insert(class, &spec.name, *v);
            }
        }
        kb
    }
}

impl Default for Vocabulary {
    fn default() -> Self {
        let text = |vals: &[&str]| vals.iter().map(|s| s.to_string()).collect::<Vec<_>>();
        let mut calories = NumericSpec::new("calories", 0.0, 400.0, 10.0, &[100.0, 200.0]);
        calories.per_class = [("soda", 150.0), ("juice", 120.0), ("water", 0.0), ("noodle", 350.0)]
            .into_iter()
            .map(|(c, v)| (c.to_string(), v))
            .collect();
        calories.override_rate = 0.2;
        calories.least = Some("has the fewest calories".into());
        calories.most = Some("has the most calories".into());
        let mut price = NumericSpec::new("price", 0.5, 9.5, 0.5, &[2.0, 4.0, 6.0]);
        price.least = Some("is the cheapest".into());
        price.most = Some("is the most expensive".into());
        Vocabulary {
            classes: text(&["soda", "juice", "water", "noodle", "can", "bottle"]),
            text_attributes: [("color", text(&["red", "green", "blue", "white"])), ("size", text(&["small", "large"]))]
                .into_iter()
                .map(|(k, v)| (k.to_string(), v))
                .collect(),
            numeric_attributes: vec![price, NumericSpec::new("sugar", 0.0, 60.0, 1.0, &[10.0, 20.0, 30.0]), calories],
            shelf_tags: vec![Some("on_top_shelf".into()), None, Some("on_bottom_shelf".into())],
            spatial_predicates: text(&["left_of", "right_of"]),
            shelf: ShelfLayout { rows: 3, columns: 4 },
        }
    }
}

/// Dataset generation settings; serializable as the `gen` config file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct GenConfig {
    pub seed: u64,
    pub train: usize,
    pub val: usize,
    pub test: usize,
    /// Maximum operator nesting; `objects` counts as 0.
    pub max_depth: usize,
    pub min_objects: usize,
    pub max_objects: usize,
    pub vocabulary: Vocabulary,
    /// Structures never generated for train and val.
    pub holdout_templates: Vec<TemplateTag>,
    /// Test records constructed per held-out template.
    pub holdout_quota: usize,
    /// Scene attempts per program before a new program is drawn.
    pub max_retries: usize,
}

impl Default for GenConfig {
    fn default() -> Self {
        GenConfig {
            seed: 0,
            train: 1000,
            val: 100,
            test: 200,
            max_depth: 3,
            min_objects: 4,
            max_objects: 9,
            vocabulary: Vocabulary::default(),
            holdout_templates: TemplateTag::HELD_OUT.to_vec(),
            holdout_quota: 20,
            max_retries: 64,
        }
    }
}

impl GenConfig {
    pub fn objects_per_scene(&self) -> RangeInclusive<usize> {
        self.min_objects..=self.max_objects
    }

    pub fn count(&self, split: crate::scene::Split) -> usize {
        match split {
            crate::scene::Split::Train => self.train,
            crate::scene::Split::Val => self.val,
            crate::scene::Split::Test => self.test,
        }
    }

    pub fn validate(&self) -> Result<(), GenError> {
        let bad = |msg: String| Err(GenError::InvalidConfig(msg));
        let v = &self.vocabulary;
        if self.train == 0 || self.val == 0 || self.test == 0 {
            return bad("split counts must be positive".into());
        }
        if self.max_depth == 0 || self.max_depth > MAX_NESTING {
            return bad(format!("max_depth must be in 1..={MAX_NESTING}"));
        }
        let slots = v.shelf.rows * v.shelf.columns;
        if self.min_objects < 2 || self.min_objects > self.max_objects || self.max_objects > slots {
            return bad(format!("objects per scene must satisfy 2 <= min <= max <= {slots}"));
        }
        if v.shelf_tags.len() != v.shelf.rows {
            return bad("shelf_tags needs one entry per shelf row".into());
        }
        if v.classes.len() < 2 {
            return bad("at least two classes are needed".into());
        }
        if v.numeric_attributes.is_empty() {
            return bad("at least one numeric attribute is needed".into());
        }
        for (name, values) in &v.text_attributes {
            if values.len() < 2 {
                return bad(format!("text attribute '{name}' needs at least two values"));
            }
        }
        for n in &v.numeric_attributes {
            if !(n.step > 0.0 && n.min <= n.max) || n.thresholds.is_empty() {
                return bad(format!("numeric attribute '{}' needs min <= max, step > 0 and thresholds", n.name));
            }
        }
        let quota = self.holdout_quota * self.holdout_templates.len();
        if quota > self.test {
            return bad(format!("test split of {} cannot hold {quota} held-out records", self.test));
        }
        if quota > 0 && self.max_depth < 3 {
            return bad("held-out templates need max_depth >= 3".into());
        }
        if quota > 0 && v.spatial_predicates.is_empty() && self.holdout_templates.contains(&TemplateTag::CountFilterSpatial) {
            return bad("COUNT_FILTER_SPATIAL needs a spatial predicate".into());
        }
        Ok(())
    }
}
