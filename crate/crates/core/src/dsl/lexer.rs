use super::ast::Comparator;
use super::DslError;

#[derive(Debug, Clone, PartialEq)]
pub(crate) enum Token {
    Ident(String),
    Number(f64),
    Text(String),
    LParen,
    RParen,
    Comma,
    Cmp(Comparator),
    Eof,
}

impl Token {
    pub(crate) fn describe(&self) -> String {
        match self {
            Token::Ident(s) => format!("identifier '{s}'"),
            Token::Number(n) => format!("number {n}"),
            Token::Text(s) => format!("text '{s}'"),
            Token::LParen => "'('".into(),
            Token::RParen => "')'".into(),
            Token::Comma => "','".into(),
            Token::Cmp(c) => format!("'{c}'"),
            Token::Eof => "end of input".into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub(crate) struct Spanned {
    pub token: Token,
    pub pos: usize,
}

pub(crate) fn tokenize(text: &str) -> Result<Vec<Spanned>, DslError> {
    let bytes = text.as_bytes();
    let mut out = Vec::new();
    let mut i = 0;
    while i < bytes.len() {
        let c = bytes[i];
        let start = i;
        match c {
            b' ' | b'\t' | b'\n' | b'\r' => {
                i += 1;
                continue;
            }
            b'(' => {
                out.push(Spanned { token: Token::LParen, pos: start });
                i += 1;
            }
            b')' => {
                out.push(Spanned { token: Token::RParen, pos: start });
                i += 1;
            }
            b',' => {
                out.push(Spanned { token: Token::Comma, pos: start });
                i += 1;
            }
            b'=' => {
                out.push(Spanned { token: Token::Cmp(Comparator::Eq), pos: start });
                i += 1;
            }
            b'!' if bytes.get(i + 1) == Some(&b'=') => {
                out.push(Spanned { token: Token::Cmp(Comparator::Ne), pos: start });
                i += 2;
            }
            b'<' | b'>' => {
                let or_equal = bytes.get(i + 1) == Some(&b'=');
                let cmp = match (c, or_equal) {
                    (b'<', false) => Comparator::Lt,
                    (b'<', true) => Comparator::Le,
                    (_, false) => Comparator::Gt,
                    (_, true) => Comparator::Ge,
                };
                out.push(Spanned { token: Token::Cmp(cmp), pos: start });
                i += if or_equal { 2 } else { 1 };
            }
            b'\'' => {
                let mut value = String::new();
                i += 1;
                loop {
                    match text[i..].find('\'') {
                        None => {
                            return Err(DslError::Syntax {
                                position: start,
                                expected: vec!["closing quote".into()],
                                found: "end of input".into(),
                            })
                        }
                        Some(off) => {
                            value.push_str(&text[i..i + off]);
                            i += off + 1;
                            if bytes.get(i) == Some(&b'\'') {
                                value.push('\'');
                                i += 1;
                            } else {
                                break;
                            }
                        }
                    }
                }
                out.push(Spanned { token: Token::Text(value), pos: start });
            }
            b'-' | b'0'..=b'9' | b'.' => {
                i += 1;
                while i < bytes.len() && (bytes[i].is_ascii_digit() || bytes[i] == b'.') {
                    i += 1;
                }
                let lexeme = &text[start..i];
                let n: f64 = lexeme.parse().map_err(|_| DslError::Syntax {
                    position: start,
                    expected: vec!["number".into()],
                    found: format!("'{lexeme}'"),
                })?;
                out.push(Spanned { token: Token::Number(n), pos: start });
            }
            c if c.is_ascii_alphabetic() || c == b'_' => {
                while i < bytes.len() && (bytes[i].is_ascii_alphanumeric() || bytes[i] == b'_') {
                    i += 1;
                }
                out.push(Spanned { token: Token::Ident(text[start..i].to_string()), pos: start });
            }
            _ => {
                let ch = text[start..].chars().next().unwrap_or('?');
                return Err(DslError::Syntax {
                    position: start,
                    expected: vec!["token".into()],
                    found: format!("'{ch}'"),
                });
            }
        }
    }
    out.push(Spanned { token: Token::Eof, pos: text.len() });
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn doubled_quotes_and_comparators() {
        let toks: Vec<Token> = tokenize("name='it''s' >= -1.5 !=")
            .unwrap()
            .into_iter()
            .map(|s| s.token)
            .collect();
        assert_eq!(
            toks,
            vec![
                Token::Ident("name".into()),
                Token::Cmp(Comparator::Eq),
                Token::Text("it's".into()),
                Token::Cmp(Comparator::Ge),
                Token::Number(-1.5),
                Token::Cmp(Comparator::Ne),
                Token::Eof,
            ]
        );
    }

    #[test]
    fn unterminated_text() {
        assert!(matches!(tokenize("class='soda"), Err(DslError::Syntax { position: 6, .. })));
    }
}
