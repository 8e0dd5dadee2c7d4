//! Deterministic execution of programs and of all their sub-programs
//! against a scene and a knowledge base.
//!
//! Missing attributes exclude an object from every FILTER comparison (also
//! `!=`). SORT, MIN and MAX drop objects without the attribute and fault only
//! when none of a nonempty input has it. Ties are broken by ascending object id.

mod answer;
mod engine;
mod value;

pub use answer::{
    answer_equal, answers_equal, compare_literals, lists_equal, literals_equal, numbers_equal, text_equal, NUMBER_RTOL,
};
pub use engine::{execute, execute_subprograms, SubprogramTrace};
pub use value::{ExecFault, ExecValue, NodeOutcome, ObjectSet};
