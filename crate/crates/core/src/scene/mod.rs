//! Symbolic scenes (ground-truth object detections), the class knowledge
//! base, relation predicates and the line-delimited file formats.

mod dataset;
mod io;
mod kb;
mod model;
mod relation;

use std::path::{Path, PathBuf};

pub use dataset::{Answer, DatasetRecord, Split};
pub use io::{
    load_dataset, load_kb, load_scenes, read_dataset, read_scenes, save_dataset, save_kb, save_scenes,
    write_scenes,
};
pub use kb::{resolve_attribute, KnowledgeBase};
pub use model::{BBox, Relation, Scene, SceneObject, SceneViolation};
pub use relation::{evaluate_relation, UnknownPredicate, SPATIAL_PREDICATES};

#[derive(Debug, thiserror::Error)]
pub enum SceneError {
    #[error("i/o error on {}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("schema error on line {line}, field '{field}': {message}")]
    Schema { line: usize, field: String, message: String },
    #[error("duplicate object id '{object_id}' on line {line}")]
    DuplicateObjectId { line: usize, object_id: String },
}

impl SceneError {
    pub fn name(&self) -> &'static str {
        match self {
            SceneError::Io { .. } => "IoError",
            SceneError::Schema { .. } => "SchemaError",
            SceneError::DuplicateObjectId { .. } => "DuplicateObjectId",
        }
    }

    fn with_path(self, p: &Path) -> Self {
        match self {
            SceneError::Io { path, source } if path.as_os_str().is_empty() => SceneError::Io { path: p.into(), source },
            other => other,
        }
    }
}
