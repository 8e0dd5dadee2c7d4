//! Set-comprehension semantics written without reference to the engine.
//! Node ids are pre-order offsets.

use std::collections::BTreeSet;

use setprog::dsl::{Comparator, Condition, Literal, Program, Projection, SortOrder};
use setprog::exec::{ExecFault, ExecValue};
use setprog::scene::{KnowledgeBase, Scene, SceneObject};

type Out = Result<ExecValue, ExecFault>;

fn value<'a>(o: &'a SceneObject, attr: &str, kb: &'a KnowledgeBase) -> Option<&'a Literal> {
    o.attributes.get(attr).or_else(|| kb.lookup(&o.class, attr))
}

fn same_text(a: &str, b: &str) -> bool {
    a.trim().to_lowercase() == b.trim().to_lowercase()
}

fn equal(a: &Literal, b: &Literal) -> bool {
    match (a, b) {
        (Literal::Number(x), Literal::Number(y)) => x == y || (x - y).abs() <= 1e-9 * x.abs().max(y.abs()),
        (Literal::Text(x), Literal::Text(y)) => same_text(x, y),
        (Literal::Bool(x), Literal::Bool(y)) => x == y,
        _ => false,
    }
}

fn rank(l: &Literal) -> (u8, f64, String) {
    match l {
        Literal::Number(n) => (0, *n, String::new()),
        Literal::Text(s) => (1, 0.0, s.clone()),
        Literal::Bool(b) => (2, *b as u8 as f64, String::new()),
    }
}

fn satisfies(actual: &Literal, cmp: Comparator, expected: &Literal) -> bool {
    match (cmp, actual, expected) {
        (Comparator::Eq, _, _) => equal(actual, expected),
        (Comparator::Ne, Literal::Number(_), Literal::Number(_))
        | (Comparator::Ne, Literal::Text(_), Literal::Text(_))
        | (Comparator::Ne, Literal::Bool(_), Literal::Bool(_)) => !equal(actual, expected),
        (Comparator::Lt, Literal::Number(a), Literal::Number(b)) => a < b,
        (Comparator::Le, Literal::Number(a), Literal::Number(b)) => a <= b,
        (Comparator::Gt, Literal::Number(a), Literal::Number(b)) => a > b,
        (Comparator::Ge, Literal::Number(a), Literal::Number(b)) => a >= b,
        _ => false,
    }
}

fn ids(v: &ExecValue) -> Vec<String> {
    match v {
        ExecValue::Objects(s) => s.iter().cloned().collect(),
        ExecValue::Ordered(v) => v.clone(),
        other => panic!("not objects: {other:?}"),
    }
}

/// Objects of `ids` carrying `attr`, best first under `order`, ties by id.
fn ranked(
    scene: &Scene,
    kb: &KnowledgeBase,
    ids: &[String],
    attr: &str,
    order: SortOrder,
    node: usize,
) -> Result<Vec<String>, ExecFault> {
    let mut keyed: Vec<((u8, f64, String), String)> = ids
        .iter()
        .filter_map(|id| {
            let o = scene.object(id).unwrap();
            value(o, attr, kb).map(|v| (rank(v), id.clone()))
        })
        .collect();
    if keyed.is_empty() && !ids.is_empty() {
        return Err(ExecFault::AttributeAllMissing { node_id: node, attribute: attr.into() });
    }
    keyed.sort_by(|(ka, ia), (kb_, ib)| {
        let by = ka.0.cmp(&kb_.0).then(ka.1.total_cmp(&kb_.1)).then(ka.2.cmp(&kb_.2));
        let by = if order == SortOrder::Descending { by.reverse() } else { by };
        by.then(ia.cmp(ib))
    });
    Ok(keyed.into_iter().map(|(_, id)| id).collect())
}

fn center(o: &SceneObject) -> Option<(f64, f64)> {
    o.bbox.map(|b| (b.x + b.w / 2.0, b.y + b.h / 2.0))
}

fn related(scene: &Scene, o: &SceneObject, pred: &str, refs: &[String], node: usize) -> Result<bool, ExecFault> {
    let fault = || ExecFault::UnknownPredicate { node_id: node, predicate: pred.into() };
    if scene.relations.iter().any(|r| r.1 == pred) {
        return Ok(refs.iter().any(|r| scene.relations.iter().any(|t| t.0 == o.object_id && t.1 == pred && &t.2 == r)));
    }
    let test: fn((f64, f64), (f64, f64)) -> bool = match pred {
        "left_of" | "left" => |s, r| s.0 < r.0,
        "right_of" | "right" => |s, r| s.0 > r.0,
        "above" => |s, r| s.1 < r.1,
        "below" => |s, r| s.1 > r.1,
        _ => return Err(fault()),
    };
    if refs.is_empty() {
        return Ok(false);
    }
    let s = center(o).ok_or_else(fault)?;
    let mut all = true;
    for r in refs {
        let c = scene.object(r).and_then(center).ok_or_else(fault)?;
        all &= test(s, c);
        if !all {
            break;
        }
    }
    Ok(all)
}

pub fn run(p: &Program, scene: &Scene, kb: &KnowledgeBase) -> Out {
    eval(p, 0, scene, kb)
}

fn eval(p: &Program, id: usize, scene: &Scene, kb: &KnowledgeBase) -> Out {
    let child = id + 1;
    match p {
        Program::Objects => Ok(ExecValue::Objects(scene.objects.iter().map(|o| o.object_id.clone()).collect())),
        Program::Filter { input, conditions } => {
            let base = eval(input, child, scene, kb);
            let mut next = child + input.node_count();
            let mut refs = Vec::new();
            for c in conditions {
                if let Condition::Relation { reference: Some(r), .. } = c {
                    refs.push(eval(r, next, scene, kb));
                    next += r.node_count();
                }
            }
            let base = ids(&base?);
            let refs: Vec<Vec<String>> = refs.into_iter().map(|r| r.map(|v| ids(&v))).collect::<Result<_, _>>()?;
            let mut kept = BTreeSet::new();
            'objects: for oid in &base {
                let o = scene.object(oid).unwrap();
                let mut r = refs.iter();
                for c in conditions {
                    let ok = match c {
                        Condition::Class { cmp: Comparator::Ne, value } => !same_text(&o.class, value),
                        Condition::Class { value, .. } => same_text(&o.class, value),
                        Condition::Attribute { attr, cmp, value: v } => {
                            value(o, attr.as_str(), kb).is_some_and(|a| satisfies(a, *cmp, v))
                        }
                        Condition::Relation { predicate, reference: None } => o.tags.contains(predicate),
                        Condition::Relation { predicate, .. } => related(scene, o, predicate, r.next().unwrap(), id)?,
                    };
                    if !ok {
                        continue 'objects;
                    }
                }
                kept.insert(oid.clone());
            }
            Ok(ExecValue::Objects(kept))
        }
        Program::Count(input) => Ok(ExecValue::Number(ids(&eval(input, child, scene, kb)?).len() as f64)),
        Program::Exists(input) => Ok(ExecValue::Boolean(!ids(&eval(input, child, scene, kb)?).is_empty())),
        Program::Sort { attr, order, input } => {
            let s = ids(&eval(input, child, scene, kb)?);
            Ok(ExecValue::Ordered(ranked(scene, kb, &s, attr.as_str(), *order, id)?))
        }
        Program::Min { attr, input } | Program::Max { attr, input } => {
            let s = ids(&eval(input, child, scene, kb)?);
            let order = if matches!(p, Program::Min { .. }) { SortOrder::Ascending } else { SortOrder::Descending };
            let best = ranked(scene, kb, &s, attr.as_str(), order, id)?;
            Ok(ExecValue::Objects(best.into_iter().take(1).collect()))
        }
        Program::Select { projection, input } => {
            let s = ids(&eval(input, child, scene, kb)?);
            let (attr, order) = match projection {
                Projection::Attribute(a) => {
                    let vals = s.iter().filter_map(|i| value(scene.object(i).unwrap(), a.as_str(), kb).cloned());
                    return Ok(ExecValue::Values(vals.collect()));
                }
                Projection::Min(a) => (a, SortOrder::Ascending),
                Projection::Max(a) => (a, SortOrder::Descending),
            };
            if s.is_empty() {
                return Err(ExecFault::EmptySelection { node_id: id });
            }
            let best = ranked(scene, kb, &s, attr.as_str(), order, id)?.remove(0);
            let o = scene.object(&best).unwrap();
            Ok(ExecValue::Text(match o.attributes.get("name") {
                Some(Literal::Text(n)) => n.clone(),
                _ => best,
            }))
        }
    }
}
