use std::cmp::Ordering;

use crate::dsl::Literal;
use crate::scene::Answer;

use super::NodeOutcome;

/// Relative tolerance for numeric equality.
pub const NUMBER_RTOL: f64 = 1e-9;

pub fn numbers_equal(a: f64, b: f64) -> bool {
    a == b || (a - b).abs() <= NUMBER_RTOL * a.abs().max(b.abs())
}

/// Text equality after trimming, ignoring case.
pub fn text_equal(a: &str, b: &str) -> bool {
    a.trim().to_lowercase() == b.trim().to_lowercase()
}

pub fn literals_equal(a: &Literal, b: &Literal) -> bool {
    match (a, b) {
        (Literal::Number(x), Literal::Number(y)) => numbers_equal(*x, *y),
        (Literal::Text(x), Literal::Text(y)) => text_equal(x, y),
        (Literal::Bool(x), Literal::Bool(y)) => x == y,
        _ => false,
    }
}

/// Total order used by SORT/MIN/MAX: numbers, then text, then booleans.
pub fn compare_literals(a: &Literal, b: &Literal) -> Ordering {
    let rank = |l: &Literal| match l {
        Literal::Number(_) => 0,
        Literal::Text(_) => 1,
        Literal::Bool(_) => 2,
    };
    match (a, b) {
        (Literal::Number(x), Literal::Number(y)) => x.total_cmp(y),
        (Literal::Text(x), Literal::Text(y)) => x.cmp(y),
        (Literal::Bool(x), Literal::Bool(y)) => x.cmp(y),
        _ => rank(a).cmp(&rank(b)),
    }
}

/// Multiset equality of literal lists under [`literals_equal`].
pub fn lists_equal(a: &[Literal], b: &[Literal]) -> bool {
    if a.len() != b.len() {
        return false;
    }
    let mut used = vec![false; b.len()];
    a.iter().all(|x| {
        match b.iter().enumerate().position(|(j, y)| !used[j] && literals_equal(x, y)) {
            Some(j) => {
                used[j] = true;
                true
            }
            None => false,
        }
    })
}

pub fn answers_equal(a: &Answer, b: &Answer) -> bool {
    match (a, b) {
        (Answer::Single(x), Answer::Single(y)) => literals_equal(x, y),
        (Answer::List(x), Answer::List(y)) => lists_equal(x, y),
        _ => false,
    }
}

/// Whether an execution result matches the expected answer. Faults never match.
pub fn answer_equal(outcome: &NodeOutcome, expected: &Answer) -> bool {
    match outcome {
        Ok(value) => answers_equal(&value.to_answer(), expected),
        Err(_) => false,
    }
}
