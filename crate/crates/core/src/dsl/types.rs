use serde::{Deserialize, Serialize};

use super::ast::{Condition, Program, Projection};
use super::TypeError;

/// Static result type of a (sub-)program.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ResultType {
    ObjectSet,
    /// Ordered object list, produced by SORT.
    ObjectList,
    Number,
    Text,
    Boolean,
    ValueList,
}

impl ResultType {
    /// Whether a value of this type can feed a set-consuming operator.
    pub fn is_objects(self) -> bool {
        matches!(self, ResultType::ObjectSet | ResultType::ObjectList)
    }
}

/// Type of the whole program.
pub fn validate_types(tree: &Program) -> Result<ResultType, TypeError> {
    Ok(node_types(tree)?[0])
}

/// Types of every node, indexed by node id (pre-order).
pub fn node_types(tree: &Program) -> Result<Vec<ResultType>, TypeError> {
    let mut out = Vec::with_capacity(tree.node_count());
    assign(tree, &mut out)?;
    Ok(out)
}

fn assign(node: &Program, out: &mut Vec<ResultType>) -> Result<ResultType, TypeError> {
    let slot = out.len();
    out.push(ResultType::ObjectSet);
    let check_set = |child: &Program, out: &mut Vec<ResultType>| -> Result<(), TypeError> {
        let child_id = out.len();
        let ty = assign(child, out)?;
        if ty.is_objects() {
            Ok(())
        } else {
            Err(TypeError {
                node_id: child_id,
                message: format!("{:?} value feeds {} which expects objects", ty, node.kind()),
            })
        }
    };
    let ty = match node {
        Program::Objects => ResultType::ObjectSet,
        Program::Filter { input, conditions } => {
            check_set(input, out)?;
            for c in conditions {
                if let Condition::Relation { reference: Some(r), .. } = c {
                    check_set(r, out)?;
                }
            }
            ResultType::ObjectSet
        }
        Program::Sort { input, .. } => {
            check_set(input, out)?;
            ResultType::ObjectList
        }
        Program::Min { input, .. } | Program::Max { input, .. } => {
            check_set(input, out)?;
            ResultType::ObjectSet
        }
        Program::Count(input) => {
            check_set(input, out)?;
            ResultType::Number
        }
        Program::Exists(input) => {
            check_set(input, out)?;
            ResultType::Boolean
        }
        Program::Select { projection, input } => {
            check_set(input, out)?;
            match projection {
                Projection::Attribute(_) => ResultType::ValueList,
                Projection::Min(_) | Projection::Max(_) => ResultType::Text,
            }
        }
    };
    out[slot] = ty;
    Ok(ty)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dsl::parse;

    fn ty(s: &str) -> Result<ResultType, TypeError> {
        validate_types(&parse(s).unwrap())
    }

    #[test]
    fn result_types() {
        assert_eq!(ty("EXISTS(FILTER(objects, class='soda'))").unwrap(), ResultType::Boolean);
        assert_eq!(ty("SELECT(MAX(calories), SORT(price, objects))").unwrap(), ResultType::Text);
        assert_eq!(ty("SELECT(price, objects)").unwrap(), ResultType::ValueList);
        assert_eq!(ty("SORT(price, FILTER(objects, class='a'))").unwrap(), ResultType::ObjectList);
        assert_eq!(ty("MIN(price, objects)").unwrap(), ResultType::ObjectSet);
        assert_eq!(ty("COUNT(objects)").unwrap(), ResultType::Number);
    }

    #[test]
    fn number_fed_to_set_operator() {
        let err = ty("COUNT(COUNT(objects))").unwrap_err();
        assert_eq!(err.node_id, 1);
        let err = ty("FILTER(objects, relation='left_of', ref=EXISTS(objects))").unwrap_err();
        assert_eq!(err.node_id, 2);
    }
}
