//! The program grammar shared by the dataset sampler and the trainable
//! policy. A program is produced by a sequence of categorical decisions; each
//! decision is identified by a [`DecisionKey`] and may forbid some options
//! through a mask.

use std::fmt;

use thiserror::Error;

use super::Vocabulary;
use crate::dsl::{Attribute, Comparator, Condition, Literal, NodeKind, Program, Projection, SortOrder};

/// Operator options, in option-index order.
pub const OPERATORS: [NodeKind; 8] = [
    NodeKind::Objects,
    NodeKind::Filter,
    NodeKind::Count,
    NodeKind::Exists,
    NodeKind::Select,
    NodeKind::Min,
    NodeKind::Max,
    NodeKind::Sort,
];

const EQUALITY: [Comparator; 2] = [Comparator::Eq, Comparator::Ne];
const ORDERING: [Comparator; 2] = [Comparator::Lt, Comparator::Gt];
const ORDERS: [SortOrder; 2] = [SortOrder::Ascending, SortOrder::Descending];

/// What a filter condition talks about. A filter never repeats a subject.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Subject {
    Class,
    Text(String),
    Numeric(String),
    Tag,
    Spatial,
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Site {
    Operator,
    /// One or two conditions.
    ConditionCount,
    Subject,
    ClassComparator,
    ClassValue,
    TextComparator(String),
    TextValue(String),
    NumericComparator(String),
    Threshold(String),
    Tag,
    SpatialPredicate,
    SortAttribute,
    SortOrder,
    /// Attribute of MIN or MAX.
    ExtremumAttribute,
    /// Attribute, MIN or MAX.
    Projection,
    ProjectedAttribute,
    AggregateAttribute,
}

/// Where in the tree a decision is taken.
///
/// For operator decisions `owner` is the parent node (`None` at the root) and
/// `depth` the depth of the node being chosen. For all other decisions
/// `owner` is the node the decision belongs to and `depth` its depth.
/// `index` is the condition index inside a filter, or 1 for a reference slot.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Context {
    pub owner: Option<NodeKind>,
    pub depth: u8,
    pub index: u8,
}

impl Context {
    /// Wildcard context used for parameters shared across contexts.
    pub const ANY: Context = Context { owner: None, depth: u8::MAX, index: u8::MAX };

    fn new(owner: Option<NodeKind>, depth: usize, index: usize) -> Self {
        Context { owner, depth: depth as u8, index: index as u8 }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct DecisionKey {
    pub site: Site,
    pub context: Context,
}

impl fmt::Display for DecisionKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let owner = self.context.owner.map_or("root".to_string(), |k| k.to_string());
        write!(f, "{:?}@{owner}/{}/{}", self.site, self.context.depth, self.context.index)
    }
}

/// One step of a derivation: the options that were allowed and the one taken.
#[derive(Debug, Clone, PartialEq)]
pub struct Decision {
    pub key: DecisionKey,
    pub allowed: Vec<bool>,
    pub choice: usize,
}

/// Picks an option at each decision; must return an allowed index.
pub trait Chooser {
    fn choose(&mut self, key: &DecisionKey, allowed: &[bool]) -> usize;
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("program is outside the grammar: {0}")]
pub struct OutOfGrammar(pub String);

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Slot {
    Root,
    Input,
    Reference,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Grammar {
    vocab: Vocabulary,
    max_depth: usize,
    subjects: Vec<Subject>,
    projected: Vec<String>,
}

impl Grammar {
    pub fn new(vocab: Vocabulary, max_depth: usize) -> Self {
        let mut subjects = vec![Subject::Class];
        subjects.extend(vocab.text_attributes.keys().map(|a| Subject::Text(a.clone())));
        subjects.extend(vocab.numeric_attributes.iter().map(|n| Subject::Numeric(n.name.clone())));
        if !vocab.tags().is_empty() {
            subjects.push(Subject::Tag);
        }
        if !vocab.spatial_predicates.is_empty() {
            subjects.push(Subject::Spatial);
        }
        let mut projected: Vec<String> = vocab.text_attributes.keys().cloned().collect();
        projected.extend(vocab.numeric_attributes.iter().map(|n| n.name.clone()));
        Grammar { vocab, max_depth, subjects, projected }
    }

    pub fn vocabulary(&self) -> &Vocabulary {
        &self.vocab
    }

    pub fn max_depth(&self) -> usize {
        self.max_depth
    }

    pub fn subjects(&self) -> &[Subject] {
        &self.subjects
    }

    /// Number of options at a site.
    pub fn options(&self, site: &Site) -> usize {
        match site {
            Site::Operator => OPERATORS.len(),
            Site::ConditionCount
            | Site::ClassComparator
            | Site::TextComparator(_)
            | Site::NumericComparator(_)
            | Site::SortOrder => 2,
            Site::Subject => self.subjects.len(),
            Site::ClassValue => self.vocab.classes.len(),
            Site::TextValue(a) => self.vocab.text_attributes.get(a).map_or(0, Vec::len),
            Site::Threshold(a) => self.vocab.numeric(a).map_or(0, |n| n.thresholds.len()),
            Site::Tag => self.vocab.tags().len(),
            Site::SpatialPredicate => self.vocab.spatial_predicates.len(),
            Site::SortAttribute | Site::ExtremumAttribute | Site::AggregateAttribute => {
                self.vocab.numeric_attributes.len()
            }
            Site::Projection => 3,
            Site::ProjectedAttribute => self.projected.len(),
        }
    }

    fn operator_mask(&self, slot: Slot, budget: usize) -> Vec<bool> {
        OPERATORS
            .iter()
            .map(|k| match slot {
                Slot::Root => *k != NodeKind::Objects,
                Slot::Input if budget == 0 => *k == NodeKind::Objects,
                Slot::Input => matches!(
                    k,
                    NodeKind::Objects | NodeKind::Filter | NodeKind::Min | NodeKind::Max | NodeKind::Sort
                ),
                Slot::Reference => matches!(k, NodeKind::Filter | NodeKind::Min | NodeKind::Max | NodeKind::Sort),
            })
            .collect()
    }

    fn subject_mask(&self, used: &[Subject], budget: usize) -> Vec<bool> {
        self.subjects
            .iter()
            .map(|s| !used.contains(s) && (*s != Subject::Spatial || budget >= 2))
            .collect()
    }

    /// Derive a program, asking `chooser` at every decision.
    pub fn generate(&self, chooser: &mut impl Chooser) -> (Program, Vec<Decision>) {
        let mut walk = Generate { g: self, chooser, trace: Vec::new() };
        let program = walk.node(Slot::Root, None, 0, self.max_depth);
        (program, walk.trace)
    }

    /// The decisions that derive `program`, or why it cannot be derived.
    pub fn decompose(&self, program: &Program) -> Result<Vec<Decision>, OutOfGrammar> {
        let mut walk = Decompose { g: self, trace: Vec::new() };
        walk.node(program, Slot::Root, None, 0, self.max_depth)?;
        Ok(walk.trace)
    }
}

fn attribute(name: &str) -> Attribute {
    Attribute::new(name).expect("vocabulary names are identifiers")
}

fn condition_subject(c: &Condition) -> Subject {
    match c {
        Condition::Class { .. } => Subject::Class,
        Condition::Attribute { attr, value: Literal::Number(_), .. } => Subject::Numeric(attr.as_str().to_string()),
        Condition::Attribute { attr, .. } => Subject::Text(attr.as_str().to_string()),
        Condition::Relation { reference: None, .. } => Subject::Tag,
        Condition::Relation { reference: Some(_), .. } => Subject::Spatial,
    }
}

struct Generate<'a, C> {
    g: &'a Grammar,
    chooser: &'a mut C,
    trace: Vec<Decision>,
}

impl<C: Chooser> Generate<'_, C> {
    fn decide(&mut self, site: Site, context: Context, allowed: Vec<bool>) -> usize {
        let key = DecisionKey { site, context };
        let choice = self.chooser.choose(&key, &allowed);
        assert!(allowed.get(choice).copied().unwrap_or(false), "chooser picked a masked option at {key}");
        self.trace.push(Decision { key, allowed, choice });
        choice
    }

    fn pick(&mut self, site: Site, context: Context) -> usize {
        let n = self.g.options(&site);
        self.decide(site, context, vec![true; n])
    }

    fn node(&mut self, slot: Slot, owner: Option<NodeKind>, depth: usize, budget: usize) -> Program {
        let index = usize::from(slot == Slot::Reference);
        let mask = self.g.operator_mask(slot, budget);
        let kind = OPERATORS[self.decide(Site::Operator, Context::new(owner, depth, index), mask)];
        let here = Context::new(Some(kind), depth, 0);
        let g = self.g;
        let numeric = |i: usize| attribute(&g.vocab.numeric_attributes[i].name);
        match kind {
            NodeKind::Objects => Program::Objects,
            NodeKind::Count => Program::Count(Box::new(self.node(Slot::Input, Some(kind), depth + 1, budget - 1))),
            NodeKind::Exists => Program::Exists(Box::new(self.node(Slot::Input, Some(kind), depth + 1, budget - 1))),
            NodeKind::Min | NodeKind::Max => {
                let attr = numeric(self.pick(Site::ExtremumAttribute, here));
                let input = Box::new(self.node(Slot::Input, Some(kind), depth + 1, budget - 1));
                if kind == NodeKind::Min {
                    Program::Min { attr, input }
                } else {
                    Program::Max { attr, input }
                }
            }
            NodeKind::Sort => {
                let attr = numeric(self.pick(Site::SortAttribute, here));
                let input = Box::new(self.node(Slot::Input, Some(kind), depth + 1, budget - 1));
                let order = ORDERS[self.pick(Site::SortOrder, here)];
                Program::Sort { attr, order, input }
            }
            NodeKind::Select => {
                let projection = match self.pick(Site::Projection, here) {
                    0 => Projection::Attribute(attribute(&g.projected[self.pick(Site::ProjectedAttribute, here)])),
                    p => {
                        let a = numeric(self.pick(Site::AggregateAttribute, here));
                        if p == 1 {
                            Projection::Min(a)
                        } else {
                            Projection::Max(a)
                        }
                    }
                };
                let input = Box::new(self.node(Slot::Input, Some(kind), depth + 1, budget - 1));
                Program::Select { projection, input }
            }
            NodeKind::Filter => {
                let input = self.node(Slot::Input, Some(kind), depth + 1, budget - 1);
                let n = self.pick(Site::ConditionCount, here) + 1;
                let mut used = Vec::new();
                let mut conditions = Vec::new();
                for i in 0..n {
                    let at = Context::new(Some(kind), depth, i);
                    let mask = self.g.subject_mask(&used, budget);
                    let subject = g.subjects[self.decide(Site::Subject, at, mask)].clone();
                    conditions.push(self.condition(&subject, at, depth, budget));
                    used.push(subject);
                }
                Program::filter(input, conditions)
            }
        }
    }

    fn condition(&mut self, subject: &Subject, at: Context, depth: usize, budget: usize) -> Condition {
        let g = self.g;
        let v = &g.vocab;
        match subject {
            Subject::Class => {
                let cmp = EQUALITY[self.pick(Site::ClassComparator, at)];
                let value = v.classes[self.pick(Site::ClassValue, at)].clone();
                Condition::Class { cmp, value }
            }
            Subject::Text(a) => {
                let cmp = EQUALITY[self.pick(Site::TextComparator(a.clone()), at)];
                let value = v.text_attributes[a][self.pick(Site::TextValue(a.clone()), at)].clone();
                Condition::Attribute { attr: attribute(a), cmp, value: Literal::Text(value) }
            }
            Subject::Numeric(a) => {
                let cmp = ORDERING[self.pick(Site::NumericComparator(a.clone()), at)];
                let spec = v.numeric(a).expect("subject comes from the vocabulary");
                let t = spec.thresholds[self.pick(Site::Threshold(a.clone()), at)];
                Condition::Attribute { attr: attribute(a), cmp, value: Literal::Number(t) }
            }
            Subject::Tag => Condition::tag(v.tags()[self.pick(Site::Tag, at)]),
            Subject::Spatial => {
                let predicate = v.spatial_predicates[self.pick(Site::SpatialPredicate, at)].clone();
                let reference = self.node(Slot::Reference, Some(NodeKind::Filter), depth + 1, budget - 1);
                Condition::Relation { predicate, reference: Some(Box::new(reference)) }
            }
        }
    }
}

struct Decompose<'a> {
    g: &'a Grammar,
    trace: Vec<Decision>,
}

impl Decompose<'_> {
    fn take(&mut self, site: Site, context: Context, allowed: Vec<bool>, choice: Option<usize>, what: &str) -> Result<(), OutOfGrammar> {
        match choice {
            Some(c) if allowed[c] => {
                self.trace.push(Decision { key: DecisionKey { site, context }, allowed, choice: c });
                Ok(())
            }
            _ => Err(OutOfGrammar(what.to_string())),
        }
    }

    fn take_any(&mut self, site: Site, context: Context, choice: Option<usize>, what: &str) -> Result<(), OutOfGrammar> {
        let n = self.g.options(&site);
        self.take(site, context, vec![true; n], choice, what)
    }

    fn numeric_index(&self, a: &Attribute) -> Option<usize> {
        self.g.vocab.numeric_attributes.iter().position(|n| n.name == a.as_str())
    }

    fn node(&mut self, p: &Program, slot: Slot, owner: Option<NodeKind>, depth: usize, budget: usize) -> Result<(), OutOfGrammar> {
        let index = usize::from(slot == Slot::Reference);
        let kind = p.kind();
        let mask = self.g.operator_mask(slot, budget);
        let at = Context::new(owner, depth, index);
        self.take(Site::Operator, at, mask, OPERATORS.iter().position(|k| *k == kind), &format!("{kind} not allowed here"))?;
        let here = Context::new(Some(kind), depth, 0);
        match p {
            Program::Objects => Ok(()),
            Program::Count(input) | Program::Exists(input) => self.node(input, Slot::Input, Some(kind), depth + 1, budget - 1),
            Program::Min { attr, input } | Program::Max { attr, input } => {
                self.take_any(Site::ExtremumAttribute, here, self.numeric_index(attr), attr.as_str())?;
                self.node(input, Slot::Input, Some(kind), depth + 1, budget - 1)
            }
            Program::Sort { attr, order, input } => {
                self.take_any(Site::SortAttribute, here, self.numeric_index(attr), attr.as_str())?;
                self.node(input, Slot::Input, Some(kind), depth + 1, budget - 1)?;
                self.take_any(Site::SortOrder, here, ORDERS.iter().position(|o| o == order), "sort order")
            }
            Program::Select { projection, input } => {
                match projection {
                    Projection::Attribute(a) => {
                        self.take_any(Site::Projection, here, Some(0), "projection")?;
                        let i = self.g.projected.iter().position(|x| x == a.as_str());
                        self.take_any(Site::ProjectedAttribute, here, i, a.as_str())?;
                    }
                    Projection::Min(a) | Projection::Max(a) => {
                        let p = if matches!(projection, Projection::Min(_)) { 1 } else { 2 };
                        self.take_any(Site::Projection, here, Some(p), "projection")?;
                        self.take_any(Site::AggregateAttribute, here, self.numeric_index(a), a.as_str())?;
                    }
                }
                self.node(input, Slot::Input, Some(kind), depth + 1, budget - 1)
            }
            Program::Filter { input, conditions } => {
                self.node(input, Slot::Input, Some(kind), depth + 1, budget - 1)?;
                let n = conditions.len();
                self.take_any(Site::ConditionCount, here, (1..=2).contains(&n).then(|| n - 1), "condition count")?;
                let mut used = Vec::new();
                for (i, c) in conditions.iter().enumerate() {
                    let at = Context::new(Some(kind), depth, i);
                    let subject = condition_subject(c);
                    let mask = self.g.subject_mask(&used, budget);
                    let pos = self.g.subjects.iter().position(|s| *s == subject);
                    self.take(Site::Subject, at, mask, pos, &format!("condition {c}"))?;
                    self.condition(c, &subject, at, depth, budget)?;
                    used.push(subject);
                }
                Ok(())
            }
        }
    }

    fn condition(&mut self, c: &Condition, subject: &Subject, at: Context, depth: usize, budget: usize) -> Result<(), OutOfGrammar> {
        let what = c.to_string();
        let g = self.g;
        let v = &g.vocab;
        match (c, subject) {
            (Condition::Class { cmp, value }, _) => {
                let value_index = v.classes.iter().position(|x| x == value);
                self.take_any(Site::ClassComparator, at, EQUALITY.iter().position(|x| x == cmp), &what)?;
                self.take_any(Site::ClassValue, at, value_index, &what)
            }
            (Condition::Attribute { cmp, value, .. }, Subject::Text(a)) => {
                let value_index = v
                    .text_attributes
                    .get(a)
                    .and_then(|vals| vals.iter().position(|x| Some(x.as_str()) == value.as_text()));
                self.take_any(Site::TextComparator(a.clone()), at, EQUALITY.iter().position(|x| x == cmp), &what)?;
                self.take_any(Site::TextValue(a.clone()), at, value_index, &what)
            }
            (Condition::Attribute { cmp, value, .. }, Subject::Numeric(a)) => {
                let t = value.as_number();
                let value_index = v.numeric(a).and_then(|n| n.thresholds.iter().position(|x| Some(*x) == t));
                self.take_any(Site::NumericComparator(a.clone()), at, ORDERING.iter().position(|x| x == cmp), &what)?;
                self.take_any(Site::Threshold(a.clone()), at, value_index, &what)
            }
            (Condition::Relation { predicate, reference: None }, _) => {
                let i = v.tags().iter().position(|t| t == predicate);
                self.take_any(Site::Tag, at, i, &what)
            }
            (Condition::Relation { predicate, reference: Some(r) }, _) => {
                let i = v.spatial_predicates.iter().position(|t| t == predicate);
                self.take_any(Site::SpatialPredicate, at, i, &what)?;
                self.node(r, Slot::Reference, Some(NodeKind::Filter), depth + 1, budget - 1)
            }
            _ => Err(OutOfGrammar(what)),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dsl::parse;

    struct First;

    impl Chooser for First {
        fn choose(&mut self, _: &DecisionKey, allowed: &[bool]) -> usize {
            allowed.iter().position(|a| *a).unwrap()
        }
    }

    #[test]
    fn first_allowed_choices() {
        let g = Grammar::new(Vocabulary::default(), 2);
        let (p, trace) = g.generate(&mut First);
        assert_eq!(p.canonical(), "FILTER(objects, class='soda')");
        assert_eq!(g.decompose(&p).unwrap(), trace);
    }

    #[test]
    fn decompose_rejects_foreign_programs() {
        let g = Grammar::new(Vocabulary::default(), 3);
        for text in [
            "COUNT(FILTER(objects, price>=2))",
            "COUNT(FILTER(objects, class='plate'))",
            "COUNT(COUNT(objects))",
            "COUNT(FILTER(objects, class='soda', class='can'))",
            "COUNT(FILTER(FILTER(FILTER(objects, class='soda'), size='small'), color='red'))",
        ] {
            assert!(g.decompose(&parse(text).unwrap()).is_err(), "{text}");
        }
        let ok = parse("COUNT(FILTER(objects, class='can', relation='left_of', ref=FILTER(objects, class='bottle')))").unwrap();
        assert!(g.decompose(&ok).is_ok());
    }
}
