use std::fmt;

use serde::{Deserialize, Serialize};

use super::DslError;

/// Operator kind of a program node.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum NodeKind {
    Objects,
    Filter,
    Select,
    Count,
    Min,
    Max,
    Sort,
    Exists,
}

impl NodeKind {
    pub const ALL: [NodeKind; 8] = [
        NodeKind::Objects,
        NodeKind::Filter,
        NodeKind::Select,
        NodeKind::Count,
        NodeKind::Min,
        NodeKind::Max,
        NodeKind::Sort,
        NodeKind::Exists,
    ];

    /// Keyword used in program text (`objects` is the only lowercase one).
    pub fn keyword(self) -> &'static str {
        match self {
            NodeKind::Objects => "objects",
            NodeKind::Filter => "FILTER",
            NodeKind::Select => "SELECT",
            NodeKind::Count => "COUNT",
            NodeKind::Min => "MIN",
            NodeKind::Max => "MAX",
            NodeKind::Sort => "SORT",
            NodeKind::Exists => "EXISTS",
        }
    }

    pub fn from_keyword(word: &str) -> Option<NodeKind> {
        let upper = word.to_ascii_uppercase();
        NodeKind::ALL
            .into_iter()
            .find(|k| k.keyword().eq_ignore_ascii_case(&upper))
    }
}

impl fmt::Display for NodeKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.keyword())
    }
}

/// A literal value: in conditions, in scene attributes and in answers.
#[derive(Debug, Clone, PartialEq)]
pub enum Literal {
    Number(f64),
    Text(String),
    Bool(bool),
}

impl Literal {
    pub fn text(s: impl Into<String>) -> Self {
        Literal::Text(s.into())
    }

    pub fn as_number(&self) -> Option<f64> {
        match self {
            Literal::Number(n) => Some(*n),
            _ => None,
        }
    }

    pub fn as_text(&self) -> Option<&str> {
        match self {
            Literal::Text(s) => Some(s),
            _ => None,
        }
    }
}

impl From<f64> for Literal {
    fn from(n: f64) -> Self {
        Literal::Number(n)
    }
}

impl From<&str> for Literal {
    fn from(s: &str) -> Self {
        Literal::Text(s.to_string())
    }
}

impl From<bool> for Literal {
    fn from(b: bool) -> Self {
        Literal::Bool(b)
    }
}

impl fmt::Display for Literal {
    /// Program-text form: numbers in shortest round-trip decimal, text single-quoted
    /// with embedded quotes doubled.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Literal::Number(n) => write!(f, "{n}"),
            Literal::Text(s) => write!(f, "'{}'", s.replace('\'', "''")),
            Literal::Bool(b) => write!(f, "{b}"),
        }
    }
}

/// Attribute name. Lowercase identifier, never empty.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Attribute(String);

impl Attribute {
    pub fn new(name: &str) -> Result<Self, DslError> {
        let valid = name
            .chars()
            .next()
            .is_some_and(|c| c.is_ascii_alphabetic() || c == '_')
            && name.chars().all(|c| c.is_ascii_alphanumeric() || c == '_');
        if !valid {
            return Err(DslError::InvalidAttribute { name: name.to_string() });
        }
        Ok(Attribute(name.to_ascii_lowercase()))
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for Attribute {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Comparator {
    #[serde(rename = "=")]
    Eq,
    #[serde(rename = "!=")]
    Ne,
    #[serde(rename = "<")]
    Lt,
    #[serde(rename = "<=")]
    Le,
    #[serde(rename = ">")]
    Gt,
    #[serde(rename = ">=")]
    Ge,
}

impl Comparator {
    pub fn symbol(self) -> &'static str {
        match self {
            Comparator::Eq => "=",
            Comparator::Ne => "!=",
            Comparator::Lt => "<",
            Comparator::Le => "<=",
            Comparator::Gt => ">",
            Comparator::Ge => ">=",
        }
    }

    /// True for `<`, `<=`, `>`, `>=`.
    pub fn is_ordering(self) -> bool {
        matches!(self, Comparator::Lt | Comparator::Le | Comparator::Gt | Comparator::Ge)
    }
}

impl fmt::Display for Comparator {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.symbol())
    }
}

/// One conjunct of a FILTER.
#[derive(Debug, Clone, PartialEq)]
pub enum Condition {
    /// `attr cmp literal`; ordering comparators only against numbers.
    Attribute {
        attr: Attribute,
        cmp: Comparator,
        value: Literal,
    },
    /// `class = 'soda'` or `class != 'soda'`.
    Class { cmp: Comparator, value: String },
    /// `relation = 'pred'`, unary (tag) without reference, binary with one.
    Relation {
        predicate: String,
        reference: Option<Box<Program>>,
    },
}

impl Condition {
    pub fn attribute(attr: &str, cmp: Comparator, value: impl Into<Literal>) -> Self {
        Condition::Attribute {
            attr: Attribute::new(attr).expect("valid attribute name"),
            cmp,
            value: value.into(),
        }
    }

    pub fn class_is(value: &str) -> Self {
        Condition::Class { cmp: Comparator::Eq, value: value.to_string() }
    }

    pub fn class_is_not(value: &str) -> Self {
        Condition::Class { cmp: Comparator::Ne, value: value.to_string() }
    }

    pub fn tag(predicate: &str) -> Self {
        Condition::Relation { predicate: predicate.to_string(), reference: None }
    }

    pub fn related(predicate: &str, reference: Program) -> Self {
        Condition::Relation {
            predicate: predicate.to_string(),
            reference: Some(Box::new(reference)),
        }
    }

    /// True when this conjunct tests for inequality (`!=`).
    pub fn is_negated(&self) -> bool {
        matches!(
            self,
            Condition::Attribute { cmp: Comparator::Ne, .. } | Condition::Class { cmp: Comparator::Ne, .. }
        )
    }
}

impl fmt::Display for Condition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Condition::Attribute { attr, cmp, value } => write!(f, "{attr}{cmp}{value}"),
            Condition::Class { cmp, value } => {
                write!(f, "class{cmp}{}", Literal::Text(value.clone()))
            }
            Condition::Relation { predicate, reference } => {
                write!(f, "relation={}", Literal::Text(predicate.clone()))?;
                if let Some(r) = reference {
                    write!(f, ", ref={r}")?;
                }
                Ok(())
            }
        }
    }
}

/// First argument of SELECT.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Projection {
    /// `SELECT(attr, S)`: the attribute value of every object.
    Attribute(Attribute),
    /// `SELECT(MIN(attr), S)`: name of the object with the smallest value.
    Min(Attribute),
    /// `SELECT(MAX(attr), S)`: name of the object with the largest value.
    Max(Attribute),
}

impl fmt::Display for Projection {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Projection::Attribute(a) => write!(f, "{a}"),
            Projection::Min(a) => write!(f, "MIN({a})"),
            Projection::Max(a) => write!(f, "MAX({a})"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SortOrder {
    #[default]
    Ascending,
    Descending,
}

/// A program. Every node is itself a complete sub-program.
#[derive(Debug, Clone, PartialEq)]
pub enum Program {
    Objects,
    Filter {
        input: Box<Program>,
        conditions: Vec<Condition>,
    },
    Select {
        projection: Projection,
        input: Box<Program>,
    },
    Count(Box<Program>),
    Exists(Box<Program>),
    Min {
        attr: Attribute,
        input: Box<Program>,
    },
    Max {
        attr: Attribute,
        input: Box<Program>,
    },
    Sort {
        attr: Attribute,
        order: SortOrder,
        input: Box<Program>,
    },
}

fn attr(name: &str) -> Attribute {
    Attribute::new(name).expect("valid attribute name")
}

impl Program {
    pub fn filter(input: Program, conditions: Vec<Condition>) -> Self {
        Program::Filter { input: Box::new(input), conditions }
    }

    pub fn select(projection: Projection, input: Program) -> Self {
        Program::Select { projection, input: Box::new(input) }
    }

    pub fn select_attr(name: &str, input: Program) -> Self {
        Program::select(Projection::Attribute(attr(name)), input)
    }

    pub fn select_min(name: &str, input: Program) -> Self {
        Program::select(Projection::Min(attr(name)), input)
    }

    pub fn select_max(name: &str, input: Program) -> Self {
        Program::select(Projection::Max(attr(name)), input)
    }

    pub fn count(input: Program) -> Self {
        Program::Count(Box::new(input))
    }

    pub fn exists(input: Program) -> Self {
        Program::Exists(Box::new(input))
    }

    pub fn min(name: &str, input: Program) -> Self {
        Program::Min { attr: attr(name), input: Box::new(input) }
    }

    pub fn max(name: &str, input: Program) -> Self {
        Program::Max { attr: attr(name), input: Box::new(input) }
    }

    pub fn sort(name: &str, order: SortOrder, input: Program) -> Self {
        Program::Sort { attr: attr(name), order, input: Box::new(input) }
    }

    pub fn kind(&self) -> NodeKind {
        match self {
            Program::Objects => NodeKind::Objects,
            Program::Filter { .. } => NodeKind::Filter,
            Program::Select { .. } => NodeKind::Select,
            Program::Count(_) => NodeKind::Count,
            Program::Exists(_) => NodeKind::Exists,
            Program::Min { .. } => NodeKind::Min,
            Program::Max { .. } => NodeKind::Max,
            Program::Sort { .. } => NodeKind::Sort,
        }
    }

    /// The set-valued input, if any.
    pub fn input(&self) -> Option<&Program> {
        match self {
            Program::Objects => None,
            Program::Filter { input, .. }
            | Program::Select { input, .. }
            | Program::Min { input, .. }
            | Program::Max { input, .. }
            | Program::Sort { input, .. } => Some(input),
            Program::Count(input) | Program::Exists(input) => Some(input),
        }
    }

    /// Direct children in pre-order: the input first, then FILTER relation
    /// references in condition order.
    pub fn children(&self) -> Vec<&Program> {
        let mut out: Vec<&Program> = self.input().into_iter().collect();
        if let Program::Filter { conditions, .. } = self {
            out.extend(conditions.iter().filter_map(|c| match c {
                Condition::Relation { reference: Some(r), .. } => Some(r.as_ref()),
                _ => None,
            }));
        }
        out
    }

    /// All nodes in pre-order; the position of a node is its node id.
    pub fn nodes(&self) -> Vec<&Program> {
        let mut out = Vec::new();
        let mut stack = vec![self];
        while let Some(node) = stack.pop() {
            out.push(node);
            stack.extend(node.children().into_iter().rev());
        }
        out
    }

    pub fn node_count(&self) -> usize {
        1 + self.children().iter().map(|c| c.node_count()).sum::<usize>()
    }

    /// Operator nesting depth; `objects` alone has depth 0.
    pub fn depth(&self) -> usize {
        match self {
            Program::Objects => 0,
            _ => 1 + self.children().iter().map(|c| c.depth()).max().unwrap_or(0),
        }
    }

    /// Deterministic program text; see [`Program`]'s `Display`.
    pub fn canonical(&self) -> String {
        self.to_string()
    }
}

impl fmt::Display for Program {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Program::Objects => f.write_str("objects"),
            Program::Filter { input, conditions } => {
                write!(f, "FILTER({input}")?;
                for c in conditions {
                    write!(f, ", {c}")?;
                }
                f.write_str(")")
            }
            Program::Select { projection, input } => write!(f, "SELECT({projection}, {input})"),
            Program::Count(input) => write!(f, "COUNT({input})"),
            Program::Exists(input) => write!(f, "EXISTS({input})"),
            Program::Min { attr, input } => write!(f, "MIN({attr}, {input})"),
            Program::Max { attr, input } => write!(f, "MAX({attr}, {input})"),
            Program::Sort { attr, order, input } => match order {
                SortOrder::Ascending => write!(f, "SORT({attr}, {input})"),
                SortOrder::Descending => write!(f, "SORT({attr}, {input}, desc)"),
            },
        }
    }
}

/// Integral numbers serialize as JSON integers so `39` round-trips as `39`.
impl Serialize for Literal {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        match self {
            Literal::Number(n) if n.fract() == 0.0 && n.abs() < 9.0e15 => serializer.serialize_i64(*n as i64),
            Literal::Number(n) => serializer.serialize_f64(*n),
            Literal::Text(s) => serializer.serialize_str(s),
            Literal::Bool(b) => serializer.serialize_bool(*b),
        }
    }
}

impl<'de> Deserialize<'de> for Literal {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        struct LiteralVisitor;

        impl serde::de::Visitor<'_> for LiteralVisitor {
            type Value = Literal;

            fn expecting(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                f.write_str("a number, string or boolean")
            }

            fn visit_bool<E>(self, v: bool) -> Result<Literal, E> {
                Ok(Literal::Bool(v))
            }

            fn visit_i64<E>(self, v: i64) -> Result<Literal, E> {
                Ok(Literal::Number(v as f64))
            }

            fn visit_u64<E>(self, v: u64) -> Result<Literal, E> {
                Ok(Literal::Number(v as f64))
            }

            fn visit_f64<E>(self, v: f64) -> Result<Literal, E> {
                Ok(Literal::Number(v))
            }

            fn visit_str<E>(self, v: &str) -> Result<Literal, E> {
                Ok(Literal::Text(v.to_string()))
            }

            fn visit_string<E>(self, v: String) -> Result<Literal, E> {
                Ok(Literal::Text(v))
            }
        }

        deserializer.deserialize_any(LiteralVisitor)
    }
}
