use std::collections::HashMap;

use crate::dsl::{Comparator, Condition, Literal, Program, Projection, SortOrder};
use crate::scene::{evaluate_relation, resolve_attribute, KnowledgeBase, Scene, SceneObject};

use super::answer::{compare_literals, literals_equal, text_equal};
use super::{ExecFault, ExecValue, NodeOutcome, ObjectSet};

/// Outcome of every node of one program, indexed by node id (pre-order).
#[derive(Debug, Clone, PartialEq)]
pub struct SubprogramTrace {
    outcomes: Vec<NodeOutcome>,
}

impl SubprogramTrace {
    pub fn len(&self) -> usize {
        self.outcomes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.outcomes.is_empty()
    }

    pub fn get(&self, node_id: usize) -> Option<&NodeOutcome> {
        self.outcomes.get(node_id)
    }

    pub fn root(&self) -> &NodeOutcome {
        &self.outcomes[0]
    }

    pub fn iter(&self) -> impl Iterator<Item = &NodeOutcome> {
        self.outcomes.iter()
    }
}

/// Execute a program against a scene.
pub fn execute(tree: &Program, scene: &Scene, kb: &KnowledgeBase) -> NodeOutcome {
    execute_subprograms(tree, scene, kb).outcomes.swap_remove(0)
}

/// Execute every sub-program in one bottom-up pass; each node is evaluated
/// exactly once and a fault only poisons the node's ancestors.
pub fn execute_subprograms(tree: &Program, scene: &Scene, kb: &KnowledgeBase) -> SubprogramTrace {
    let mut runner = Runner {
        scene,
        kb,
        index: scene.objects.iter().map(|o| (o.object_id.as_str(), o)).collect(),
        slots: Vec::with_capacity(tree.node_count()),
    };
    let _ = runner.run(tree);
    SubprogramTrace {
        outcomes: runner.slots.into_iter().map(|s| s.expect("every node evaluated")).collect(),
    }
}

struct Runner<'a> {
    scene: &'a Scene,
    kb: &'a KnowledgeBase,
    index: HashMap<&'a str, &'a SceneObject>,
    slots: Vec<Option<NodeOutcome>>,
}

impl<'a> Runner<'a> {
    fn run(&mut self, node: &Program) -> NodeOutcome {
        let id = self.slots.len();
        self.slots.push(None);
        let outcome = self.eval(id, node);
        self.slots[id] = Some(outcome.clone());
        outcome
    }

    /// Runs a child and extracts its objects in iteration order.
    fn objects_of(&mut self, child: &Program) -> Result<Vec<&'a SceneObject>, ExecFault> {
        let child_id = self.slots.len();
        let value = self.run(child)?;
        let ids = value.object_ids().ok_or(ExecFault::NotObjects { node_id: child_id })?;
        Ok(ids.into_iter().filter_map(|id| self.index.get(id).copied()).collect())
    }

    fn eval(&mut self, id: usize, node: &Program) -> NodeOutcome {
        match node {
            Program::Objects => Ok(ExecValue::Objects(
                self.scene.objects.iter().map(|o| o.object_id.clone()).collect(),
            )),
            Program::Filter { input, conditions } => {
                let input = self.objects_of(input);
                let mut references = Vec::new();
                for c in conditions {
                    if let Condition::Relation { reference: Some(r), .. } = c {
                        references.push(self.objects_of(r));
                    }
                }
                let input = input?;
                let references: Vec<ObjectSet> = references
                    .into_iter()
                    .map(|r| r.map(|objs| objs.into_iter().map(|o| o.object_id.clone()).collect()))
                    .collect::<Result<_, _>>()?;
                let mut kept = ObjectSet::new();
                for obj in input {
                    let mut refs = references.iter();
                    let mut all = true;
                    for c in conditions {
                        let reference = match c {
                            Condition::Relation { reference: Some(_), .. } => refs.next(),
                            _ => None,
                        };
                        if !self.holds(id, obj, c, reference)? {
                            all = false;
                            break;
                        }
                    }
                    if all {
                        kept.insert(obj.object_id.clone());
                    }
                }
                Ok(ExecValue::Objects(kept))
            }
            Program::Count(input) => Ok(ExecValue::Number(self.objects_of(input)?.len() as f64)),
            Program::Exists(input) => Ok(ExecValue::Boolean(!self.objects_of(input)?.is_empty())),
            Program::Sort { attr, order, input } => {
                let objs = self.objects_of(input)?;
                let sorted = self.sorted(id, &objs, attr.as_str(), *order)?;
                Ok(ExecValue::Ordered(sorted.into_iter().map(|o| o.object_id.clone()).collect()))
            }
            Program::Min { attr, input } | Program::Max { attr, input } => {
                let objs = self.objects_of(input)?;
                let order = if matches!(node, Program::Min { .. }) {
                    SortOrder::Ascending
                } else {
                    SortOrder::Descending
                };
                let sorted = self.sorted(id, &objs, attr.as_str(), order)?;
                Ok(ExecValue::Objects(sorted.first().map(|o| o.object_id.clone()).into_iter().collect()))
            }
            Program::Select { projection, input } => {
                let objs = self.objects_of(input)?;
                match projection {
                    Projection::Attribute(attr) => Ok(ExecValue::Values(
                        objs.iter()
                            .filter_map(|o| resolve_attribute(o, attr.as_str(), self.kb).cloned())
                            .collect(),
                    )),
                    Projection::Min(attr) | Projection::Max(attr) => {
                        if objs.is_empty() {
                            return Err(ExecFault::EmptySelection { node_id: id });
                        }
                        let order = if matches!(projection, Projection::Min(_)) {
                            SortOrder::Ascending
                        } else {
                            SortOrder::Descending
                        };
                        let best = self.sorted(id, &objs, attr.as_str(), order)?[0];
                        let name = match best.attributes.get("name") {
                            Some(Literal::Text(name)) => name.clone(),
                            _ => best.object_id.clone(),
                        };
                        Ok(ExecValue::Text(name))
                    }
                }
            }
        }
    }

    /// Objects carrying `attr`, ordered by value then ascending id. Faults when
    /// the input is nonempty but nobody carries the attribute.
    fn sorted(
        &self,
        id: usize,
        objs: &[&'a SceneObject],
        attr: &str,
        order: SortOrder,
    ) -> Result<Vec<&'a SceneObject>, ExecFault> {
        let mut keyed: Vec<(&Literal, &'a SceneObject)> = objs
            .iter()
            .filter_map(|o| resolve_attribute(o, attr, self.kb).map(|v| (v, *o)))
            .collect();
        if keyed.is_empty() && !objs.is_empty() {
            return Err(ExecFault::AttributeAllMissing { node_id: id, attribute: attr.to_string() });
        }
        keyed.sort_by(|(va, a), (vb, b)| {
            let by_value = compare_literals(va, vb);
            let by_value = if order == SortOrder::Descending { by_value.reverse() } else { by_value };
            by_value.then_with(|| a.object_id.cmp(&b.object_id))
        });
        Ok(keyed.into_iter().map(|(_, o)| o).collect())
    }

    fn holds(
        &self,
        id: usize,
        obj: &SceneObject,
        cond: &Condition,
        reference: Option<&ObjectSet>,
    ) -> Result<bool, ExecFault> {
        Ok(match cond {
            Condition::Class { cmp, value } => match cmp {
                Comparator::Ne => !text_equal(&obj.class, value),
                _ => text_equal(&obj.class, value),
            },
            Condition::Attribute { attr, cmp, value } => match resolve_attribute(obj, attr.as_str(), self.kb) {
                None => false,
                Some(actual) => compare(actual, *cmp, value),
            },
            Condition::Relation { predicate, .. } => evaluate_relation(self.scene, obj, predicate, reference)
                .map_err(|e| ExecFault::UnknownPredicate { node_id: id, predicate: e.predicate })?,
        })
    }
}

/// `actual cmp expected`; values of different kinds never compare.
fn compare(actual: &Literal, cmp: Comparator, expected: &Literal) -> bool {
    let same_kind = std::mem::discriminant(actual) == std::mem::discriminant(expected);
    if !same_kind {
        return false;
    }
    match cmp {
        Comparator::Eq => literals_equal(actual, expected),
        Comparator::Ne => !literals_equal(actual, expected),
        _ => match (actual, expected) {
            (Literal::Number(a), Literal::Number(b)) => match cmp {
                Comparator::Lt => a < b,
                Comparator::Le => a <= b,
                Comparator::Gt => a > b,
                _ => a >= b,
            },
            _ => false,
        },
    }
}
