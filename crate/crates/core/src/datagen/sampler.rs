use rand::distributions::{Distribution, WeightedIndex};
use rand::Rng;

use super::grammar::{Chooser, DecisionKey, Grammar, Site, Subject, OPERATORS};
use super::GenConfig;
use crate::dsl::{NodeKind, Program};

/// Fixed option weights used to draw dataset programs.
pub struct PriorChooser<'a, R> {
    grammar: &'a Grammar,
    rng: &'a mut R,
}

impl<'a, R: Rng> PriorChooser<'a, R> {
    pub fn new(grammar: &'a Grammar, rng: &'a mut R) -> Self {
        PriorChooser { grammar, rng }
    }

    fn weights(&self, key: &DecisionKey) -> Vec<f64> {
        let n = self.grammar.options(&key.site);
        match &key.site {
            Site::Operator => OPERATORS
                .iter()
                .map(|k| match (key.context.owner, key.context.index, k) {
                    (None, _, NodeKind::Count) => 0.2,
                    (None, _, NodeKind::Select) => 0.22,
                    (None, _, NodeKind::Filter) => 0.14,
                    (None, _, NodeKind::Exists) => 0.12,
                    (None, _, NodeKind::Sort) => 0.12,
                    (None, _, NodeKind::Min | NodeKind::Max) => 0.1,
                    (Some(_), 1, NodeKind::Filter) => 1.0,
                    (Some(_), 0, NodeKind::Objects) => 0.4,
                    (Some(_), 0, NodeKind::Filter) => 0.42,
                    (Some(_), 0, NodeKind::Sort) => 0.08,
                    (Some(_), 0, NodeKind::Min | NodeKind::Max) => 0.05,
                    _ => 0.0,
                })
                .collect(),
            Site::ConditionCount => vec![0.7, 0.3],
            Site::ClassComparator => vec![0.8, 0.2],
            Site::TextComparator(_) => vec![0.75, 0.25],
            Site::Subject => {
                let subjects = self.grammar.subjects();
                let texts = subjects.iter().filter(|s| matches!(s, Subject::Text(_))).count().max(1) as f64;
                let numerics = subjects.iter().filter(|s| matches!(s, Subject::Numeric(_))).count().max(1) as f64;
                subjects
                    .iter()
                    .map(|s| match s {
                        Subject::Class => 0.35,
                        Subject::Text(_) => 0.25 / texts,
                        Subject::Numeric(_) => 0.2 / numerics,
                        Subject::Tag => 0.08,
                        Subject::Spatial => 0.12,
                    })
                    .collect()
            }
            _ => vec![1.0; n],
        }
    }
}

impl<R: Rng> Chooser for PriorChooser<'_, R> {
    fn choose(&mut self, key: &DecisionKey, allowed: &[bool]) -> usize {
        let mut w = self.weights(key);
        for (w, ok) in w.iter_mut().zip(allowed) {
            if !ok {
                *w = 0.0;
            }
        }
        if w.iter().all(|x| *x == 0.0) {
            // Every weighted option is masked: fall back to uniform.
            w = allowed.iter().map(|ok| if *ok { 1.0 } else { 0.0 }).collect();
        }
        WeightedIndex::new(&w).expect("at least one allowed option").sample(self.rng)
    }
}

/// Draw one program from the generation prior.
pub fn sample_program(cfg: &GenConfig, rng: &mut impl Rng) -> Program {
    let grammar = Grammar::new(cfg.vocabulary.clone(), cfg.max_depth);
    grammar.generate(&mut PriorChooser::new(&grammar, rng)).0
}
