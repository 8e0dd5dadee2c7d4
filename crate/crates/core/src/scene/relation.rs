use std::collections::BTreeSet;

use super::{Relation, Scene, SceneObject};

/// Predicates that can be answered from bounding-box centers when the scene
/// carries no explicit triples for them.
pub const SPATIAL_PREDICATES: [&str; 4] = ["left_of", "right_of", "above", "below"];

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("unknown predicate '{predicate}'")]
pub struct UnknownPredicate {
    pub predicate: String,
}

fn spatial_name(predicate: &str) -> Option<&'static str> {
    match predicate {
        "left_of" | "left" => Some("left_of"),
        "right_of" | "right" => Some("right_of"),
        "above" => Some("above"),
        "below" => Some("below"),
        _ => None,
    }
}

/// Whether `subject` stands in `predicate` to the reference objects.
///
/// Without a reference set the predicate is unary and answered from the
/// object's tags. With one it is binary: explicit triples decide whenever the
/// scene has any triple with this predicate; otherwise spatial predicates fall
/// back to comparing bbox centers against every reference object. Image
/// coordinates grow rightwards and downwards.
pub fn evaluate_relation(
    scene: &Scene,
    subject: &SceneObject,
    predicate: &str,
    reference: Option<&BTreeSet<String>>,
) -> Result<bool, UnknownPredicate> {
    let Some(reference) = reference else {
        return Ok(subject.tags.contains(predicate));
    };
    let unknown = || UnknownPredicate { predicate: predicate.to_string() };
    let has_triples = scene.relations.iter().any(|Relation(_, p, _)| p == predicate);
    if has_triples {
        return Ok(scene
            .relations
            .iter()
            .any(|Relation(s, p, o)| s == &subject.object_id && p == predicate && reference.contains(o)));
    }
    let spatial = spatial_name(predicate).ok_or_else(unknown)?;
    if reference.is_empty() {
        return Ok(false);
    }
    let (sx, sy) = subject.bbox.ok_or_else(unknown)?.center();
    for id in reference {
        let (rx, ry) = scene
            .object(id)
            .and_then(|o| o.bbox)
            .ok_or_else(unknown)?
            .center();
        let holds = match spatial {
            "left_of" => sx < rx,
            "right_of" => sx > rx,
            "above" => sy < ry,
            _ => sy > ry,
        };
        if !holds {
            return Ok(false);
        }
    }
    Ok(true)
}
