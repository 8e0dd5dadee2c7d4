use std::fmt;
use std::str::FromStr;

use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use super::Vocabulary;
use crate::dsl::{Comparator, Condition, Literal, NodeKind, Program, Projection, SortOrder};

/// Structural family of a program. Five nested structures are singled out
/// for compositional evaluation; every other program is `Basic(root kind)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum TemplateTag {
    /// `COUNT(SORT(...))`
    CountSort,
    /// `SORT(attr, FILTER(...))`
    SortFilter,
    /// `COUNT(FILTER(..., x != v))`
    CountFilterNot,
    /// `SELECT(MAX(a), SORT(b, ...))`
    SelectMaxSort,
    /// `COUNT(FILTER(..., relation=p, ref=...))`
    CountFilterSpatial,
    Basic(NodeKind),
}

impl TemplateTag {
    pub const HELD_OUT: [TemplateTag; 5] = [
        TemplateTag::CountSort,
        TemplateTag::SortFilter,
        TemplateTag::CountFilterNot,
        TemplateTag::SelectMaxSort,
        TemplateTag::CountFilterSpatial,
    ];

    /// Order in which structures rooted at the same node are reported.
    const PRIORITY: [TemplateTag; 5] = [
        TemplateTag::SelectMaxSort,
        TemplateTag::CountFilterSpatial,
        TemplateTag::CountFilterNot,
        TemplateTag::CountSort,
        TemplateTag::SortFilter,
    ];

    fn matches_at(self, node: &Program) -> bool {
        let filter_conditions = |p: &Program| match p {
            Program::Filter { conditions, .. } => Some(conditions.clone()),
            _ => None,
        };
        match (self, node) {
            (TemplateTag::CountSort, Program::Count(input)) => input.kind() == NodeKind::Sort,
            (TemplateTag::SortFilter, Program::Sort { input, .. }) => input.kind() == NodeKind::Filter,
            (TemplateTag::CountFilterNot, Program::Count(input)) => {
                filter_conditions(input).is_some_and(|cs| cs.iter().any(Condition::is_negated))
            }
            (TemplateTag::SelectMaxSort, Program::Select { projection: Projection::Max(_), input }) => {
                input.kind() == NodeKind::Sort
            }
            (TemplateTag::CountFilterSpatial, Program::Count(input)) => filter_conditions(input)
                .is_some_and(|cs| cs.iter().any(|c| matches!(c, Condition::Relation { reference: Some(_), .. }))),
            _ => false,
        }
    }
}

impl fmt::Display for TemplateTag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TemplateTag::CountSort => f.write_str("COUNT_SORT"),
            TemplateTag::SortFilter => f.write_str("SORT_FILTER"),
            TemplateTag::CountFilterNot => f.write_str("COUNT_FILTER_NOT"),
            TemplateTag::SelectMaxSort => f.write_str("SELECT_MAX_SORT"),
            TemplateTag::CountFilterSpatial => f.write_str("COUNT_FILTER_SPATIAL"),
            TemplateTag::Basic(kind) => write!(f, "BASIC_{}", kind.keyword().to_ascii_uppercase()),
        }
    }
}

impl FromStr for TemplateTag {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        if let Some(tag) = TemplateTag::HELD_OUT.into_iter().find(|t| t.to_string() == s) {
            return Ok(tag);
        }
        s.strip_prefix("BASIC_")
            .and_then(NodeKind::from_keyword)
            .map(TemplateTag::Basic)
            .ok_or_else(|| format!("unknown template tag '{s}'"))
    }
}

impl Serialize for TemplateTag {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for TemplateTag {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// Every held-out structure that occurs anywhere in `program`, outermost
/// first.
pub fn held_out_structures(program: &Program) -> Vec<TemplateTag> {
    let mut found = Vec::new();
    for node in program.nodes() {
        for tag in TemplateTag::PRIORITY {
            if tag.matches_at(node) && !found.contains(&tag) {
                found.push(tag);
            }
        }
    }
    found
}

/// The outermost held-out structure in `program`, else `Basic(root kind)`.
pub fn classify_template(program: &Program) -> TemplateTag {
    held_out_structures(program)
        .first()
        .copied()
        .unwrap_or(TemplateTag::Basic(program.kind()))
}

/// A random instance of a held-out structure (depth 3 at most). `None` for
/// `Basic` tags, which are drawn from the grammar instead.
pub fn instantiate(tag: TemplateTag, vocab: &Vocabulary, rng: &mut impl Rng) -> Option<Program> {
    let numeric = |rng: &mut dyn rand::RngCore| vocab.numeric_attributes.choose(rng).expect("numeric attribute").name.clone();
    let order = |rng: &mut dyn rand::RngCore| if rng.gen_bool(0.5) { SortOrder::Ascending } else { SortOrder::Descending };
    let class_filter = |rng: &mut dyn rand::RngCore| {
        let class = vocab.classes.choose(rng).expect("class");
        Program::filter(Program::Objects, vec![Condition::class_is(class)])
    };
    let program = match tag {
        TemplateTag::CountSort => {
            let inner = class_filter(rng);
            Program::count(Program::sort(&numeric(rng), order(rng), inner))
        }
        TemplateTag::SortFilter => {
            let cond = equality_condition(vocab, Comparator::Eq, rng);
            let attr = numeric(rng);
            Program::sort(&attr, order(rng), Program::filter(Program::Objects, vec![cond]))
        }
        TemplateTag::CountFilterNot => {
            let cond = equality_condition(vocab, Comparator::Ne, rng);
            Program::count(Program::filter(Program::Objects, vec![cond]))
        }
        TemplateTag::SelectMaxSort => {
            let inner = class_filter(rng);
            let sorted = Program::sort(&numeric(rng), order(rng), inner);
            Program::select_max(&numeric(rng), sorted)
        }
        TemplateTag::CountFilterSpatial => {
            let mut two: Vec<&String> = vocab.classes.choose_multiple(rng, 2).collect();
            two.shuffle(rng);
            let predicate = vocab.spatial_predicates.choose(rng)?;
            let reference = Program::filter(Program::Objects, vec![Condition::class_is(two[1])]);
            Program::count(Program::filter(
                Program::Objects,
                vec![Condition::class_is(two[0]), Condition::related(predicate, reference)],
            ))
        }
        TemplateTag::Basic(_) => return None,
    };
    Some(program)
}

/// `class cmp c` or `attr cmp v` for a random categorical subject.
fn equality_condition(vocab: &Vocabulary, cmp: Comparator, rng: &mut impl Rng) -> Condition {
    let attrs: Vec<_> = vocab.text_attributes.iter().collect();
    if attrs.is_empty() || rng.gen_bool(0.5) {
        let value = vocab.classes.choose(rng).expect("class").clone();
        return Condition::Class { cmp, value };
    }
    let (attr, values) = attrs.choose(rng).expect("text attribute");
    let value = values.choose(rng).expect("value");
    Condition::attribute(attr, cmp, Literal::text(value.as_str()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dsl::parse;
    use rand::SeedableRng;

    fn tag(text: &str) -> TemplateTag {
        classify_template(&parse(text).unwrap())
    }

    #[test]
    fn classification() {
        assert_eq!(tag("COUNT(SORT(price, objects))"), TemplateTag::CountSort);
        assert_eq!(tag("COUNT(FILTER(objects, color!='red'))"), TemplateTag::CountFilterNot);
        assert_eq!(tag("COUNT(objects)"), TemplateTag::Basic(NodeKind::Count));
        assert_eq!(tag("SORT(price, FILTER(objects, class='soda'))"), TemplateTag::SortFilter);
        assert_eq!(tag("SELECT(MAX(sugar), SORT(price, objects))"), TemplateTag::SelectMaxSort);
        assert_eq!(tag("SELECT(MIN(sugar), SORT(price, objects))"), TemplateTag::Basic(NodeKind::Select));
        assert_eq!(
            tag("COUNT(FILTER(objects, class='can', relation='left_of', ref=FILTER(objects, class='bottle')))"),
            TemplateTag::CountFilterSpatial
        );
        assert_eq!(tag("COUNT(FILTER(objects, relation='on_top_shelf'))"), TemplateTag::Basic(NodeKind::Count));
        // Nested occurrences count too.
        assert_eq!(tag("EXISTS(SORT(price, FILTER(objects, class='soda')))"), TemplateTag::SortFilter);
        let both = parse("COUNT(SORT(price, FILTER(objects, class='soda')))").unwrap();
        assert_eq!(held_out_structures(&both), vec![TemplateTag::CountSort, TemplateTag::SortFilter]);
    }

    #[test]
    fn names_round_trip() {
        for t in TemplateTag::HELD_OUT.into_iter().chain(NodeKind::ALL.map(TemplateTag::Basic)) {
            assert_eq!(t.to_string().parse::<TemplateTag>().unwrap(), t);
        }
        assert_eq!(TemplateTag::Basic(NodeKind::Objects).to_string(), "BASIC_OBJECTS");
    }

    #[test]
    fn instances_have_their_tag() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
        let vocab = Vocabulary::default();
        for t in TemplateTag::HELD_OUT {
            for _ in 0..20 {
                let p = instantiate(t, &vocab, &mut rng).unwrap();
                assert_eq!(classify_template(&p), t, "{p}");
                assert!(p.depth() <= 3);
            }
        }
    }
}
