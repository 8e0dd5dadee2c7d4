use std::collections::BTreeSet;

use rand::seq::SliceRandom;
use rand::Rng;

use super::{GenConfig, GenError, Vocabulary};
use crate::dsl::{Comparator, Condition, Literal, Program, Projection};
use crate::exec::{execute_subprograms, ExecValue};
use crate::scene::{resolve_attribute, Answer, KnowledgeBase, Scene, SceneObject};

struct Draft {
    object: SceneObject,
    row: Option<usize>,
}

/// Build a scene in which `program` runs without faults and has a
/// well-defined answer, and return that answer.
///
/// Objects satisfying the filter conditions along each input chain are
/// planted among random ones, then the scene is accepted only when every
/// filter selects something, every MIN/MAX winner is strictly unique and at
/// least one object escapes all filters. EXISTS programs aim for `false` half
/// of the time.
pub fn synthesize_scene(
    program: &Program,
    cfg: &GenConfig,
    kb: &KnowledgeBase,
    scene_id: &str,
    rng: &mut impl Rng,
) -> Result<(Scene, Answer), GenError> {
    let vocab = &cfg.vocabulary;
    let mut chains = vec![Vec::new()];
    collect_chains(program, 0, &mut chains);
    let aim_false = matches!(program, Program::Exists(_)) && rng.gen_bool(0.5);
    for attempt in 0..cfg.max_retries {
        let exists_target = match program {
            Program::Exists(_) => Some(!(aim_false && attempt < cfg.max_retries / 2)),
            _ => None,
        };
        let n = rng.gen_range(cfg.objects_per_scene());
        let mut drafts: Vec<Draft> = (0..n).map(|_| random_object(vocab, rng)).collect();
        let mut free = n - 1;
        let mut cursor = 0;
        for (ci, chain) in chains.iter().enumerate() {
            if chain.is_empty() || (ci == 0 && exists_target == Some(false)) {
                continue;
            }
            let k = rng.gen_range(1..=3).min(free);
            for _ in 0..k {
                plant(&mut drafts[cursor], chain, vocab, kb, rng);
                cursor += 1;
            }
            free -= k;
        }
        drafts.shuffle(rng);
        let scene = place(drafts, vocab, scene_id, rng);
        if let Some(answer) = accept(program, &scene, kb, exists_target) {
            return Ok((scene, answer));
        }
    }
    Err(GenError::GenerationRetryExhausted { program: program.canonical(), attempts: cfg.max_retries })
}

/// Conditions of each maximal input chain; chain 0 starts at the root, every
/// reference starts a new one. Binary relations are left to chance.
fn collect_chains(p: &Program, chain: usize, chains: &mut Vec<Vec<Condition>>) {
    if let Program::Filter { conditions, .. } = p {
        for c in conditions {
            match c {
                Condition::Relation { reference: Some(r), .. } => {
                    chains.push(Vec::new());
                    let id = chains.len() - 1;
                    collect_chains(r, id, chains);
                }
                _ => chains[chain].push(c.clone()),
            }
        }
    }
    if let Some(input) = p.input() {
        collect_chains(input, chain, chains);
    }
}

fn random_object(vocab: &Vocabulary, rng: &mut impl Rng) -> Draft {
    let class = vocab.classes.choose(rng).expect("classes are nonempty");
    let mut object = SceneObject::new("", class.as_str());
    for (attr, values) in &vocab.text_attributes {
        object = object.with_attr(attr, Literal::text(values.choose(rng).expect("values are nonempty").as_str()));
    }
    for spec in &vocab.numeric_attributes {
        if !spec.is_class_knowledge() || rng.gen_bool(spec.override_rate) {
            let v = spec.grid_value(rng.gen_range(0..spec.grid_len()));
            object = object.with_attr(&spec.name, v);
        }
    }
    Draft { object, row: None }
}

fn holds(cmp: Comparator, x: f64, t: f64) -> bool {
    match cmp {
        Comparator::Eq => x == t,
        Comparator::Ne => x != t,
        Comparator::Lt => x < t,
        Comparator::Le => x <= t,
        Comparator::Gt => x > t,
        Comparator::Ge => x >= t,
    }
}

/// Change `draft` until it satisfies every condition of `chain` it can.
fn plant(draft: &mut Draft, chain: &[Condition], vocab: &Vocabulary, kb: &KnowledgeBase, rng: &mut impl Rng) {
    let obj = &mut draft.object;
    let mut ordered: Vec<&Condition> = chain.iter().collect();
    ordered.sort_by_key(|c| !matches!(c, Condition::Class { .. }));
    for c in ordered {
        match c {
            Condition::Class { cmp: Comparator::Eq, value } => obj.class = value.clone(),
            Condition::Class { value, .. } => {
                if obj.class == *value {
                    let others: Vec<_> = vocab.classes.iter().filter(|c| *c != value).collect();
                    if let Some(c) = others.choose(rng) {
                        obj.class = (*c).clone();
                    }
                }
            }
            Condition::Attribute { attr, cmp, value: Literal::Number(t) } => {
                let current = resolve_attribute(obj, attr.as_str(), kb).and_then(Literal::as_number);
                if current.is_some_and(|x| holds(*cmp, x, *t)) {
                    continue;
                }
                if let Some(spec) = vocab.numeric(attr.as_str()) {
                    let fits: Vec<f64> = (0..spec.grid_len())
                        .map(|i| spec.grid_value(i))
                        .filter(|x| holds(*cmp, *x, *t))
                        .collect();
                    if let Some(v) = fits.choose(rng) {
                        obj.attributes.insert(attr.as_str().to_string(), Literal::Number(*v));
                    }
                }
            }
            Condition::Attribute { attr, cmp, value } => {
                let current = obj.attributes.get(attr.as_str()).cloned();
                match cmp {
                    Comparator::Eq => {
                        obj.attributes.insert(attr.as_str().to_string(), value.clone());
                    }
                    _ if current.as_ref() == Some(value) => {
                        let values = vocab.text_attributes.get(attr.as_str());
                        let others: Vec<_> = values
                            .into_iter()
                            .flatten()
                            .filter(|v| Some(v.as_str()) != value.as_text())
                            .collect();
                        if let Some(v) = others.choose(rng) {
                            obj.attributes.insert(attr.as_str().to_string(), Literal::text(v.as_str()));
                        }
                    }
                    _ => {}
                }
            }
            Condition::Relation { predicate, reference: None } => {
                draft.row = vocab.shelf_tags.iter().position(|t| t.as_deref() == Some(predicate.as_str()));
            }
            Condition::Relation { .. } => {}
        }
    }
}

fn title(word: &str) -> String {
    let mut chars = word.chars();
    chars
        .next()
        .map(|c| c.to_uppercase().chain(chars).collect())
        .unwrap_or_default()
}

/// Assign ids, names, shelf slots, boxes and row tags.
fn place(drafts: Vec<Draft>, vocab: &Vocabulary, scene_id: &str, rng: &mut impl Rng) -> Scene {
    let (rows, cols) = (vocab.shelf.rows, vocab.shelf.columns);
    let mut free: Vec<(usize, usize)> = (0..rows).flat_map(|r| (0..cols).map(move |c| (r, c))).collect();
    free.shuffle(rng);
    let mut slots = vec![None; drafts.len()];
    for (i, d) in drafts.iter().enumerate() {
        if let Some(row) = d.row {
            if let Some(pos) = free.iter().position(|(r, _)| *r == row) {
                slots[i] = Some(free.remove(pos));
            }
        }
    }
    for slot in slots.iter_mut().filter(|s| s.is_none()) {
        *slot = free.pop();
    }
    let round = |v: f64| (v * 1e4).round() / 1e4;
    let (cw, rh) = (1.0 / cols as f64, 1.0 / rows as f64);
    let mut names = BTreeSet::new();
    let mut objects = Vec::with_capacity(drafts.len());
    for (i, (d, slot)) in drafts.into_iter().zip(slots).enumerate() {
        let (r, c) = slot.expect("scene fits on the shelf");
        let jitter = rng.gen_range(0.05..0.4);
        let mut o = d.object;
        o.object_id = format!("o{i}");
        o.bbox = Some([round((c as f64 + jitter) * cw), round((r as f64 + 0.1) * rh), round(0.5 * cw), round(0.8 * rh)].into());
        if let Some(Some(tag)) = vocab.shelf_tags.get(r) {
            o.tags.insert(tag.clone());
        }
        let base = match o.attributes.get("color").and_then(Literal::as_text) {
            Some(color) => format!("{} {}", title(color), title(&o.class)),
            None => title(&o.class),
        };
        let mut name = base.clone();
        let mut k = 2;
        while !names.insert(name.clone()) {
            name = format!("{base} {k}");
            k += 1;
        }
        o.attributes.insert("name".into(), Literal::Text(name));
        objects.push(o);
    }
    Scene::new(scene_id, objects)
}

fn strict_extremum(ids: &[&str], attr: &str, scene: &Scene, kb: &KnowledgeBase, largest: bool) -> bool {
    let mut values: Vec<f64> = ids
        .iter()
        .filter_map(|id| scene.object(id))
        .filter_map(|o| resolve_attribute(o, attr, kb).and_then(Literal::as_number))
        .collect();
    values.sort_by(f64::total_cmp);
    if largest {
        values.reverse();
    }
    match values.as_slice() {
        [] => false,
        [_] => true,
        [a, b, ..] => a != b,
    }
}

fn accept(program: &Program, scene: &Scene, kb: &KnowledgeBase, exists_target: Option<bool>) -> Option<Answer> {
    let trace = execute_subprograms(program, scene, kb);
    let mut covered = BTreeSet::new();
    let mut any_filter = false;
    for (i, node) in program.nodes().into_iter().enumerate() {
        let value = trace.get(i)?.as_ref().ok()?;
        let input_ids = || trace.get(i + 1).and_then(|o| o.as_ref().ok()).and_then(ExecValue::object_ids);
        let extremum = match node {
            Program::Filter { .. } => {
                let set = value.object_set()?;
                if set.is_empty() && exists_target != Some(false) {
                    return None;
                }
                any_filter = true;
                covered.extend(set);
                None
            }
            Program::Min { attr, .. } | Program::Select { projection: Projection::Min(attr), .. } => Some((attr, false)),
            Program::Max { attr, .. } | Program::Select { projection: Projection::Max(attr), .. } => Some((attr, true)),
            _ => None,
        };
        if let Some((attr, largest)) = extremum {
            if !strict_extremum(&input_ids()?, attr.as_str(), scene, kb, largest) {
                return None;
            }
        }
    }
    if any_filter && covered.len() >= scene.objects.len() {
        return None;
    }
    let root = trace.root().as_ref().ok()?;
    if let Some(target) = exists_target {
        if *root != ExecValue::Boolean(target) {
            return None;
        }
    }
    Some(root.to_answer())
}
