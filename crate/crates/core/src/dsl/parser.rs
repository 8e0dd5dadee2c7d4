use super::ast::{Attribute, Comparator, Condition, Literal, NodeKind, Program, Projection, SortOrder};
use super::lexer::{tokenize, Spanned, Token};
use super::{DslError, MAX_NESTING};

/// Parse a single program expression.
pub fn parse(text: &str) -> Result<Program, DslError> {
    let tokens = tokenize(text)?;
    let mut parser = Parser { tokens, cursor: 0, nesting: 0 };
    let program = parser.expr()?;
    let tail = parser.peek();
    if tail.token != Token::Eof {
        return Err(DslError::Syntax {
            position: tail.pos,
            expected: vec!["end of input".into()],
            found: tail.token.describe(),
        });
    }
    Ok(program)
}

/// An argument before it is checked against the operator's signature.
#[derive(Debug)]
enum Arg {
    Expr(Program),
    Ident(String),
    Aggregate(NodeKind, String),
    Cond(CondArg),
    Ref(Program),
}

#[derive(Debug)]
struct CondArg {
    subject: String,
    cmp: Comparator,
    value: Literal,
}

impl Arg {
    fn describe(&self) -> &'static str {
        match self {
            Arg::Expr(_) => "expression",
            Arg::Ident(_) => "attribute name",
            Arg::Aggregate(..) => "aggregator",
            Arg::Cond(_) => "condition",
            Arg::Ref(_) => "ref=",
        }
    }
}

struct Parser {
    tokens: Vec<Spanned>,
    cursor: usize,
    nesting: usize,
}

impl Parser {
    fn peek(&self) -> &Spanned {
        &self.tokens[self.cursor]
    }

    fn peek_at(&self, offset: usize) -> &Token {
        let idx = (self.cursor + offset).min(self.tokens.len() - 1);
        &self.tokens[idx].token
    }

    fn bump(&mut self) -> Spanned {
        let t = self.tokens[self.cursor].clone();
        if self.cursor < self.tokens.len() - 1 {
            self.cursor += 1;
        }
        t
    }

    fn unexpected(&self, expected: &[&str]) -> DslError {
        let t = self.peek();
        DslError::Syntax {
            position: t.pos,
            expected: expected.iter().map(|s| s.to_string()).collect(),
            found: t.token.describe(),
        }
    }

    fn expect(&mut self, token: Token, label: &str) -> Result<usize, DslError> {
        if self.peek().token == token {
            Ok(self.bump().pos)
        } else {
            Err(self.unexpected(&[label]))
        }
    }

    fn expr(&mut self) -> Result<Program, DslError> {
        let pos = self.peek().pos;
        let Token::Ident(word) = self.peek().token.clone() else {
            return Err(self.unexpected(&["objects", "operator"]));
        };
        if word.eq_ignore_ascii_case("objects") {
            self.bump();
            return Ok(Program::Objects);
        }
        if *self.peek_at(1) != Token::LParen {
            return match NodeKind::from_keyword(&word) {
                Some(_) => {
                    self.bump();
                    Err(self.unexpected(&["'('"]))
                }
                None => Err(DslError::UnknownOperator { position: pos, name: word }),
            };
        }
        let kind = match NodeKind::from_keyword(&word) {
            Some(k) if k != NodeKind::Objects => k,
            _ => return Err(DslError::UnknownOperator { position: pos, name: word }),
        };
        self.bump();
        self.bump();
        self.nesting += 1;
        if self.nesting > MAX_NESTING {
            return Err(DslError::DepthExceeded { position: pos, limit: MAX_NESTING });
        }
        let args = self.args()?;
        self.expect(Token::RParen, "')'")?;
        self.nesting -= 1;
        build(kind, pos, args)
    }

    /// Comma-separated argument list up to (not including) the closing paren.
    fn args(&mut self) -> Result<Vec<(usize, Arg)>, DslError> {
        let mut args = Vec::new();
        loop {
            let pos = self.peek().pos;
            args.push((pos, self.arg()?));
            if self.peek().token != Token::Comma {
                break;
            }
            let comma = self.bump().pos;
            if matches!(self.peek().token, Token::RParen | Token::Eof | Token::Comma) {
                return Err(DslError::Syntax {
                    position: comma,
                    expected: vec!["argument after ','".into()],
                    found: self.peek().token.describe(),
                });
            }
        }
        Ok(args)
    }

    fn arg(&mut self) -> Result<Arg, DslError> {
        let Token::Ident(word) = self.peek().token.clone() else {
            return Err(self.unexpected(&["expression", "condition", "attribute name"]));
        };
        match self.peek_at(1).clone() {
            Token::LParen => {
                let kind = NodeKind::from_keyword(&word);
                let is_aggregate = matches!(kind, Some(NodeKind::Min | NodeKind::Max))
                    && matches!(self.peek_at(2), Token::Ident(_))
                    && *self.peek_at(3) == Token::RParen;
                if is_aggregate {
                    self.bump();
                    self.bump();
                    let Token::Ident(name) = self.bump().token else { unreachable!() };
                    self.bump();
                    Ok(Arg::Aggregate(kind.unwrap(), name))
                } else {
                    Ok(Arg::Expr(self.expr()?))
                }
            }
            Token::Cmp(cmp) => {
                self.bump();
                self.bump();
                if word.eq_ignore_ascii_case("ref") && cmp == Comparator::Eq {
                    return Ok(Arg::Ref(self.expr()?));
                }
                let value = self.literal()?;
                Ok(Arg::Cond(CondArg { subject: word, cmp, value }))
            }
            _ if word.eq_ignore_ascii_case("objects") => Ok(Arg::Expr(self.expr()?)),
            _ => {
                self.bump();
                Ok(Arg::Ident(word))
            }
        }
    }

    fn literal(&mut self) -> Result<Literal, DslError> {
        match self.peek().token.clone() {
            Token::Number(n) => {
                self.bump();
                Ok(Literal::Number(n))
            }
            Token::Text(s) => {
                self.bump();
                Ok(Literal::Text(s))
            }
            Token::Ident(w) if w.eq_ignore_ascii_case("true") => {
                self.bump();
                Ok(Literal::Bool(true))
            }
            Token::Ident(w) if w.eq_ignore_ascii_case("false") => {
                self.bump();
                Ok(Literal::Bool(false))
            }
            _ => Err(self.unexpected(&["number", "quoted text", "true", "false"])),
        }
    }
}

fn attribute(pos: usize, name: &str) -> Result<Attribute, DslError> {
    Attribute::new(name).map_err(|_| DslError::Syntax {
        position: pos,
        expected: vec!["attribute name".into()],
        found: format!("'{name}'"),
    })
}

fn wrong(pos: usize, expected: &str, arg: &Arg) -> DslError {
    DslError::Syntax {
        position: pos,
        expected: vec![expected.into()],
        found: arg.describe().into(),
    }
}

fn arity(kind: NodeKind, pos: usize, expected: &'static str, found: usize) -> DslError {
    DslError::Arity { position: pos, operator: kind, expected, found }
}

fn set_expr(pos: usize, arg: Arg) -> Result<Program, DslError> {
    match arg {
        Arg::Expr(p) => Ok(p),
        other => Err(wrong(pos, "expression", &other)),
    }
}

fn build(kind: NodeKind, pos: usize, args: Vec<(usize, Arg)>) -> Result<Program, DslError> {
    let n = args.len();
    let mut it = args.into_iter();
    match kind {
        NodeKind::Count | NodeKind::Exists => {
            if n != 1 {
                return Err(arity(kind, pos, "1", n));
            }
            let (p, a) = it.next().unwrap();
            let input = set_expr(p, a)?;
            Ok(if kind == NodeKind::Count { Program::count(input) } else { Program::exists(input) })
        }
        NodeKind::Min | NodeKind::Max => {
            if n != 2 {
                return Err(arity(kind, pos, "2", n));
            }
            let (p0, a0) = it.next().unwrap();
            let Arg::Ident(name) = a0 else { return Err(wrong(p0, "attribute name", &a0)) };
            let attr = attribute(p0, &name)?;
            let (p1, a1) = it.next().unwrap();
            let input = Box::new(set_expr(p1, a1)?);
            Ok(if kind == NodeKind::Min {
                Program::Min { attr, input }
            } else {
                Program::Max { attr, input }
            })
        }
        NodeKind::Sort => {
            if !(2..=3).contains(&n) {
                return Err(arity(kind, pos, "2 or 3", n));
            }
            let (p0, a0) = it.next().unwrap();
            let Arg::Ident(name) = a0 else { return Err(wrong(p0, "attribute name", &a0)) };
            let attr = attribute(p0, &name)?;
            let (p1, a1) = it.next().unwrap();
            let input = Box::new(set_expr(p1, a1)?);
            let order = match it.next() {
                None => SortOrder::Ascending,
                Some((_, Arg::Ident(o))) if o.eq_ignore_ascii_case("asc") => SortOrder::Ascending,
                Some((_, Arg::Ident(o))) if o.eq_ignore_ascii_case("desc") => SortOrder::Descending,
                Some((p2, a2)) => return Err(wrong(p2, "asc or desc", &a2)),
            };
            Ok(Program::Sort { attr, order, input })
        }
        NodeKind::Select => {
            if n != 2 {
                return Err(arity(kind, pos, "2", n));
            }
            let (p0, a0) = it.next().unwrap();
            let projection = match a0 {
                Arg::Ident(name) => Projection::Attribute(attribute(p0, &name)?),
                Arg::Aggregate(NodeKind::Min, name) => Projection::Min(attribute(p0, &name)?),
                Arg::Aggregate(_, name) => Projection::Max(attribute(p0, &name)?),
                other => return Err(wrong(p0, "attribute name or MIN(attr)/MAX(attr)", &other)),
            };
            let (p1, a1) = it.next().unwrap();
            Ok(Program::select(projection, set_expr(p1, a1)?))
        }
        NodeKind::Filter => {
            if n < 2 {
                return Err(arity(kind, pos, "at least 2", n));
            }
            let (p0, a0) = it.next().unwrap();
            let input = set_expr(p0, a0)?;
            let mut conditions: Vec<Condition> = Vec::new();
            for (p, a) in it {
                match a {
                    Arg::Cond(c) => conditions.push(condition(p, c)?),
                    Arg::Ref(r) => match conditions.last_mut() {
                        Some(Condition::Relation { reference: reference @ None, .. }) => {
                            *reference = Some(Box::new(r));
                        }
                        _ => {
                            return Err(DslError::InvalidCondition {
                                position: p,
                                message: "ref= must directly follow a relation condition".into(),
                            })
                        }
                    },
                    other => return Err(wrong(p, "condition", &other)),
                }
            }
            Ok(Program::filter(input, conditions))
        }
        NodeKind::Objects => unreachable!("objects takes no arguments"),
    }
}

fn condition(pos: usize, c: CondArg) -> Result<Condition, DslError> {
    let invalid = |message: &str| DslError::InvalidCondition { position: pos, message: message.into() };
    if c.subject.eq_ignore_ascii_case("relation") {
        return match (c.cmp, c.value) {
            (Comparator::Eq, Literal::Text(predicate)) => Ok(Condition::Relation { predicate, reference: None }),
            _ => Err(invalid("relation conditions take the form relation='predicate'")),
        };
    }
    if c.subject.eq_ignore_ascii_case("class") {
        return match (c.cmp, c.value) {
            (Comparator::Eq | Comparator::Ne, Literal::Text(value)) => Ok(Condition::Class { cmp: c.cmp, value }),
            _ => Err(invalid("class conditions compare with = or != against quoted text")),
        };
    }
    if c.cmp.is_ordering() && !matches!(c.value, Literal::Number(_)) {
        return Err(invalid("ordering comparators require a number"));
    }
    Ok(Condition::Attribute { attr: attribute(pos, &c.subject)?, cmp: c.cmp, value: c.value })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_select_min_example() {
        let p = parse("SELECT(MIN(sugar), FILTER(objects, class='soda'))").unwrap();
        assert_eq!(
            p,
            Program::select_min("sugar", Program::filter(Program::Objects, vec![Condition::class_is("soda")]))
        );
    }

    #[test]
    fn minimal_program() {
        assert_eq!(parse("COUNT(objects)").unwrap(), Program::count(Program::Objects));
        assert_eq!(parse("count( objects )").unwrap().canonical(), "COUNT(objects)");
    }

    #[test]
    fn dangling_comma_is_syntax_error_at_comma() {
        let err = parse("COUNT(FILTER(objects,))").unwrap_err();
        assert!(matches!(err, DslError::Syntax { position: 20, .. }), "{err:?}");
    }

    #[test]
    fn arity_and_unknown_operator() {
        assert!(matches!(
            parse("COUNT(objects, objects)"),
            Err(DslError::Arity { operator: NodeKind::Count, found: 2, .. })
        ));
        assert!(matches!(parse("FILTER(objects)"), Err(DslError::Arity { .. })));
        assert!(matches!(
            parse("AVERAGE(objects)"),
            Err(DslError::UnknownOperator { position: 0, .. })
        ));
    }

    #[test]
    fn shelf_program_canonicalizes() {
        let p = parse("SELECT(MIN(PRICE), FILTER(FILTER(objects, class='drink'), relation='on_top_shelf'))").unwrap();
        assert_eq!(
            p.canonical(),
            "SELECT(MIN(price), FILTER(FILTER(objects, class='drink'), relation='on_top_shelf'))"
        );
    }

    #[test]
    fn spatial_reference_and_sort_order() {
        let text = "COUNT(FILTER(objects, class='can', relation='left_of', ref=FILTER(objects, class='bottle')))";
        let p = parse(text).unwrap();
        assert_eq!(p.canonical(), text);
        assert_eq!(p.node_count(), 5);
        let s = parse("sort(price, objects, DESC)").unwrap();
        assert_eq!(s.canonical(), "SORT(price, objects, desc)");
        assert_eq!(parse("SORT(price, objects, asc)").unwrap().canonical(), "SORT(price, objects)");
    }

    #[test]
    fn condition_validation() {
        assert!(matches!(parse("FILTER(objects, color<'red')"), Err(DslError::InvalidCondition { .. })));
        assert!(matches!(parse("FILTER(objects, class>3)"), Err(DslError::InvalidCondition { .. })));
        assert!(matches!(parse("FILTER(objects, class='a', ref=objects)"), Err(DslError::InvalidCondition { .. })));
        assert!(parse("FILTER(objects, calories > 100, color != 'red', diet=true)").is_ok());
    }

    #[test]
    fn nesting_limit() {
        let deep = |n: usize| format!("{}objects{}", "SORT(a, ".repeat(n), ")".repeat(n));
        assert!(parse(&deep(MAX_NESTING)).is_ok());
        assert!(matches!(parse(&deep(MAX_NESTING + 1)), Err(DslError::DepthExceeded { .. })));
    }

    #[test]
    fn trailing_garbage() {
        assert!(matches!(parse("objects objects"), Err(DslError::Syntax { position: 8, .. })));
    }
}
