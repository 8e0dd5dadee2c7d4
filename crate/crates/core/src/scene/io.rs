use std::fs;
use std::io::{BufRead, BufReader, Read, Write};
use std::path::Path;

use serde::de::DeserializeOwned;
use serde::Serialize;

use super::{DatasetRecord, KnowledgeBase, Scene, SceneError, SceneViolation};

fn open(path: &Path) -> Result<fs::File, SceneError> {
    fs::File::open(path).map_err(|source| SceneError::Io { path: path.to_path_buf(), source })
}

fn schema(line: usize, err: serde_json::Error) -> SceneError {
    let message = err.to_string();
    let field = message
        .split('`')
        .nth(1)
        .map(str::to_string)
        .unwrap_or_else(|| "record".to_string());
    SceneError::Schema { line, field, message }
}

fn read_lines<T: DeserializeOwned>(
    reader: impl Read,
    mut check: impl FnMut(usize, &mut T) -> Result<(), SceneError>,
) -> Result<Vec<T>, SceneError> {
    let mut out = Vec::new();
    for (idx, line) in BufReader::new(reader).lines().enumerate() {
        let lineno = idx + 1;
        let line = line.map_err(|source| SceneError::Io { path: Default::default(), source })?;
        if line.trim().is_empty() {
            continue;
        }
        let mut item: T = serde_json::from_str(&line).map_err(|e| schema(lineno, e))?;
        check(lineno, &mut item)?;
        out.push(item);
    }
    Ok(out)
}

fn write_lines<T: Serialize>(mut writer: impl Write, items: &[T]) -> std::io::Result<()> {
    for item in items {
        serde_json::to_writer(&mut writer, item)?;
        writer.write_all(b"\n")?;
    }
    writer.flush()
}

/// Scenes from line-delimited JSON, one scene per line, validated on load.
pub fn read_scenes(reader: impl Read) -> Result<Vec<Scene>, SceneError> {
    read_lines(reader, |line, scene: &mut Scene| {
        scene.normalize();
        scene.validate().map_err(|v| match v {
            SceneViolation::DuplicateObjectId(object_id) => SceneError::DuplicateObjectId { line, object_id },
            SceneViolation::EmptyObjectId => SceneError::Schema {
                line,
                field: "object_id".into(),
                message: "object_id must be nonempty".into(),
            },
            SceneViolation::InvalidBBox(id) => SceneError::Schema {
                line,
                field: "bbox".into(),
                message: format!("bbox of '{id}' must lie in [0,1] with positive size"),
            },
            SceneViolation::DanglingRelation { object_id } => SceneError::Schema {
                line,
                field: "relations".into(),
                message: format!("relation names missing object '{object_id}'"),
            },
        })
    })
}

pub fn load_scenes(path: impl AsRef<Path>) -> Result<Vec<Scene>, SceneError> {
    read_scenes(open(path.as_ref())?).map_err(|e| e.with_path(path.as_ref()))
}

pub fn write_scenes(writer: impl Write, scenes: &[Scene]) -> std::io::Result<()> {
    write_lines(writer, scenes)
}

pub fn save_scenes(path: impl AsRef<Path>, scenes: &[Scene]) -> Result<(), SceneError> {
    let path = path.as_ref();
    let file = fs::File::create(path).map_err(|source| SceneError::Io { path: path.into(), source })?;
    write_scenes(std::io::BufWriter::new(file), scenes).map_err(|source| SceneError::Io { path: path.into(), source })
}

pub fn read_dataset(reader: impl Read) -> Result<Vec<DatasetRecord>, SceneError> {
    read_lines(reader, |_, _: &mut DatasetRecord| Ok(()))
}

pub fn load_dataset(path: impl AsRef<Path>) -> Result<Vec<DatasetRecord>, SceneError> {
    read_dataset(open(path.as_ref())?).map_err(|e| e.with_path(path.as_ref()))
}

pub fn save_dataset(path: impl AsRef<Path>, records: &[DatasetRecord]) -> Result<(), SceneError> {
    let path = path.as_ref();
    let file = fs::File::create(path).map_err(|source| SceneError::Io { path: path.into(), source })?;
    write_lines(std::io::BufWriter::new(file), records).map_err(|source| SceneError::Io { path: path.into(), source })
}

pub fn load_kb(path: impl AsRef<Path>) -> Result<KnowledgeBase, SceneError> {
    let mut text = String::new();
    open(path.as_ref())?
        .read_to_string(&mut text)
        .map_err(|source| SceneError::Io { path: path.as_ref().into(), source })?;
    let mut kb: KnowledgeBase = serde_json::from_str(&text).map_err(|e| schema(1, e))?;
    for attrs in kb.entries.values_mut() {
        *attrs = std::mem::take(attrs)
            .into_iter()
            .map(|(k, v)| (k.to_ascii_lowercase(), v))
            .collect();
    }
    Ok(kb)
}

pub fn save_kb(path: impl AsRef<Path>, kb: &KnowledgeBase) -> Result<(), SceneError> {
    let path = path.as_ref();
    let mut text = serde_json::to_string(kb).expect("knowledge base serializes");
    text.push('\n');
    fs::write(path, text).map_err(|source| SceneError::Io { path: path.into(), source })
}
