use super::{classify_template, TemplateTag, Vocabulary};
use crate::dsl::{Comparator, Condition, Literal, Program, Projection, SortOrder};

/// Noun phrase for an object-valued sub-program.
#[derive(Debug, Clone)]
struct Phrase {
    noun: String,
    adjectives: Vec<String>,
    /// Trailing modifiers as (singular, plural) forms.
    modifiers: Vec<(String, String)>,
}

impl Phrase {
    fn new(noun: &str) -> Self {
        Phrase { noun: noun.to_string(), adjectives: Vec::new(), modifiers: Vec::new() }
    }

    fn both(&mut self, text: String) {
        self.modifiers.push((text.clone(), text));
    }

    fn render(&self, plural: bool) -> String {
        let mut words = self.adjectives.clone();
        words.push(if plural { pluralize(&self.noun) } else { self.noun.clone() });
        for (s, p) in &self.modifiers {
            words.push(if plural { p.clone() } else { s.clone() });
        }
        words.join(" ")
    }

    fn singular(&self) -> String {
        self.render(false)
    }

    fn plural(&self) -> String {
        self.render(true)
    }
}

fn pluralize(noun: &str) -> String {
    let b = noun.as_bytes();
    if ["s", "x", "z", "ch", "sh"].iter().any(|e| noun.ends_with(e)) {
        format!("{noun}es")
    } else if noun.len() > 1 && noun.ends_with('y') && !b"aeiou".contains(&b[b.len() - 2]) {
        format!("{}ies", &noun[..noun.len() - 1])
    } else {
        format!("{noun}s")
    }
}

fn article(phrase: &str) -> &'static str {
    match phrase.chars().next() {
        Some(c) if "aeiou".contains(c) => "an",
        _ => "a",
    }
}

fn words(identifier: &str) -> String {
    identifier.replace('_', " ")
}

fn relation_phrase(predicate: &str) -> String {
    match predicate {
        "left_of" | "left" => "to the left of".into(),
        "right_of" | "right" => "to the right of".into(),
        p => match p.strip_prefix("on_") {
            Some(rest) => format!("on the {}", words(rest)),
            None => words(p),
        },
    }
}

fn number_phrase(attr: &str, cmp: Comparator, t: &Literal) -> String {
    let rel = match cmp {
        Comparator::Lt => "below",
        Comparator::Gt => "above",
        Comparator::Le => "at most",
        Comparator::Ge => "at least",
        Comparator::Eq => "equal to",
        Comparator::Ne => "not equal to",
    };
    format!("with {} {rel} {t}", words(attr))
}

fn phrase(p: &Program) -> Phrase {
    match p {
        Program::Filter { input, conditions } => {
            let mut ph = phrase(input);
            for c in conditions {
                match c {
                    Condition::Class { cmp: Comparator::Eq, value } => ph.noun = value.clone(),
                    Condition::Class { value, .. } => ph.modifiers.push((
                        format!("that is not {} {value}", article(value)),
                        format!("that are not {}", pluralize(value)),
                    )),
                    Condition::Attribute { attr, cmp, value: v @ Literal::Number(_) } => {
                        ph.both(number_phrase(attr.as_str(), *cmp, v))
                    }
                    Condition::Attribute { cmp: Comparator::Eq, value, .. } => {
                        ph.adjectives.push(value.as_text().map(str::to_string).unwrap_or_else(|| value.to_string()))
                    }
                    Condition::Attribute { value, .. } => {
                        let v = value.as_text().map(str::to_string).unwrap_or_else(|| value.to_string());
                        ph.modifiers.push((format!("that is not {v}"), format!("that are not {v}")));
                    }
                    Condition::Relation { predicate, reference: None } => ph.both(relation_phrase(predicate)),
                    Condition::Relation { predicate, reference: Some(r) } => {
                        ph.both(format!("{} the {}", relation_phrase(predicate), phrase(r).singular()))
                    }
                }
            }
            ph
        }
        Program::Min { attr, input } => {
            let mut ph = phrase(input);
            ph.both(format!("with the lowest {}", words(attr.as_str())));
            ph
        }
        Program::Max { attr, input } => {
            let mut ph = phrase(input);
            ph.both(format!("with the highest {}", words(attr.as_str())));
            ph
        }
        Program::Sort { attr, order, input } => {
            let mut ph = phrase(input);
            let tail = if *order == SortOrder::Descending { ", highest first" } else { "" };
            ph.both(format!("sorted by {}{tail}", words(attr.as_str())));
            ph
        }
        _ => Phrase::new("object"),
    }
}

/// Templated English question for a program. Each template family has one
/// phrasing; attribute, class and value names are slotted in.
pub fn render_question(program: &Program, vocab: &Vocabulary) -> String {
    let input = program.input().map(phrase).unwrap_or_else(|| Phrase::new("object"));
    match program {
        Program::Count(_) if classify_template(program) == TemplateTag::CountFilterSpatial => {
            format!("Count the {}", input.plural())
        }
        Program::Count(_) => format!("How many {} are there?", input.plural()),
        Program::Exists(_) => {
            let s = input.singular();
            format!("Is there {} {s}?", article(&s))
        }
        Program::Select { projection, .. } => match projection {
            Projection::Attribute(a) => format!("What is the {} of each {}?", words(a.as_str()), input.singular()),
            Projection::Min(a) | Projection::Max(a) => {
                let spec = vocab.numeric(a.as_str());
                let name = words(a.as_str());
                let predicate = match (projection, spec) {
                    (Projection::Min(_), Some(s)) => s.least_phrase(),
                    (Projection::Min(_), None) => format!("has the lowest {name}"),
                    (_, Some(s)) => s.most_phrase(),
                    (_, None) => format!("has the highest {name}"),
                };
                format!("Which {} {predicate}?", input.singular())
            }
        },
        Program::Min { attr, .. } => format!("Find the {} with the lowest {}.", input.singular(), words(attr.as_str())),
        Program::Max { attr, .. } => format!("Find the {} with the highest {}.", input.singular(), words(attr.as_str())),
        Program::Sort { attr, order, .. } => {
            let tail = if *order == SortOrder::Descending { " from highest to lowest" } else { "" };
            format!("Sort the {} by {}{tail}.", input.plural(), words(attr.as_str()))
        }
        Program::Filter { .. } => format!("Find the {}.", phrase(program).plural()),
        Program::Objects => "Find all objects.".into(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dsl::parse;

    fn q(text: &str) -> String {
        render_question(&parse(text).unwrap(), &Vocabulary::default())
    }

    #[test]
    fn templates() {
        assert_eq!(q("COUNT(FILTER(objects, class='soda'))"), "How many sodas are there?");
        assert_eq!(q("SELECT(MIN(sugar), FILTER(objects, class='soda'))"), "Which soda contains the least sugar?");
        assert_eq!(
            q("COUNT(FILTER(objects, class='can', relation='left_of', ref=FILTER(objects, class='bottle')))"),
            "Count the cans to the left of the bottle"
        );
        assert_eq!(
            q("SELECT(MIN(price), FILTER(objects, class='water', relation='on_top_shelf'))"),
            "Which water on the top shelf is the cheapest?"
        );
        assert_eq!(q("EXISTS(FILTER(objects, color='red', class='juice'))"), "Is there a red juice?");
        assert_eq!(q("COUNT(FILTER(objects, class!='soda'))"), "How many objects that are not sodas are there?");
        assert_eq!(q("SORT(price, objects, desc)"), "Sort the objects by price from highest to lowest.");
    }
}
