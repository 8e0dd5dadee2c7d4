#![allow(dead_code)]

pub mod naive;

use std::collections::BTreeSet;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use setprog::datagen::{Grammar, NumericSpec, ShelfLayout, Vocabulary};
use setprog::dsl::{parse, Literal};
use setprog::scene::{Answer, DatasetRecord, Split};
use setprog::trainer::{objective, GrammarPolicy, ParamId, Sample};

/// Two classes, one numeric attribute, no tags and no spatial predicates.
pub fn tiny_vocabulary() -> Vocabulary {
    Vocabulary {
        classes: vec!["soda".into(), "water".into()],
        text_attributes: Default::default(),
        numeric_attributes: vec![NumericSpec::new("price", 0.5, 9.5, 0.5, &[2.0, 4.0])],
        shelf_tags: vec![None],
        spatial_predicates: Vec::new(),
        shelf: ShelfLayout { rows: 1, columns: 4 },
    }
}

pub fn tiny_grammar() -> Grammar {
    Grammar::new(tiny_vocabulary(), 1)
}

pub fn record(query: &str, program: &str) -> DatasetRecord {
    DatasetRecord {
        image_id: "s".into(),
        query: query.into(),
        program: program.into(),
        final_answer: Answer::Single(Literal::Number(0.0)),
        split: Split::Train,
        template_tag: None,
    }
}

pub fn sample_of(policy: &GrammarPolicy, question: &str, program: &str) -> Sample {
    let program = parse(program).unwrap();
    let decisions = policy.grammar().decompose(&program).unwrap();
    let log_prob = policy.log_prob_of(&decisions, &policy.features(question));
    Sample { program, decisions, log_prob }
}

/// Every parameter that can affect the decisions of `samples`.
pub fn touched_parameters(policy: &GrammarPolicy, question: &str, samples: &[Sample]) -> Vec<ParamId> {
    let features = policy.features(question);
    let mut out = BTreeSet::new();
    for s in samples {
        for d in &s.decisions {
            let n = d.allowed.len();
            for option in 0..n {
                out.insert(ParamId { key: d.key.clone(), feature: None, option });
                for f in &features.ids {
                    out.insert(ParamId { key: d.key.clone(), feature: Some(*f), option });
                    let shared = setprog::trainer::shared(&d.key);
                    out.insert(ParamId { key: shared, feature: Some(*f), option });
                }
            }
        }
    }
    out.into_iter().collect()
}

pub fn randomize(policy: &mut GrammarPolicy, params: &[ParamId], seed: u64) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for p in params {
        policy.set_parameter(p, rng.gen_range(-1.0..1.0));
    }
}

/// Largest gap between the analytic gradient of the group objective and
/// central finite differences, and the number of parameters compared.
pub fn gradient_gap(question: &str, programs: &[&str], advantages: &[f64], beta: f64, h: f64) -> (f64, usize) {
    let mut policy = GrammarPolicy::new(tiny_grammar());
    policy.add_features([question]);
    let mut reference = policy.clone();
    let samples: Vec<Sample> = programs.iter().map(|p| sample_of(&policy, question, p)).collect();
    let params = touched_parameters(&policy, question, &samples);
    randomize(&mut policy, &params, 1);
    randomize(&mut reference, &params, 2);
    let analytic = objective(&policy, &reference, question, &samples, advantages, beta).gradient;
    let lookup: std::collections::BTreeMap<ParamId, f64> = analytic.entries().into_iter().collect();
    let mut gap: f64 = 0.0;
    for p in &params {
        let x = policy.parameter(p);
        let mut probe = policy.clone();
        probe.set_parameter(p, x + h);
        let up = objective(&probe, &reference, question, &samples, advantages, beta).loss;
        probe.set_parameter(p, x - h);
        let down = objective(&probe, &reference, question, &samples, advantages, beta).loss;
        let numeric = (up - down) / (2.0 * h);
        gap = gap.max((numeric - lookup.get(p).copied().unwrap_or(0.0)).abs());
    }
    (gap, params.len())
}

/// Best total weight over every partial injection, by exhaustive recursion.
pub fn best_partial_injection(m: &[Vec<f64>], row: usize, used: &mut Vec<bool>) -> f64 {
    if row == m.len() {
        return 0.0;
    }
    let mut best = best_partial_injection(m, row + 1, used);
    for j in 0..used.len() {
        if !used[j] {
            used[j] = true;
            best = best.max(m[row][j] + best_partial_injection(m, row + 1, used));
            used[j] = false;
        }
    }
    best
}

/// Up to 7×7, with zeros and ties mixed in.
pub fn random_matrix(rng: &mut impl Rng) -> Vec<Vec<f64>> {
    let (r, c) = (rng.gen_range(0..=7), rng.gen_range(0..=7));
    let coarse = rng.gen_bool(0.3);
    (0..r)
        .map(|_| {
            (0..c)
                .map(|_| match rng.gen_range(0..4) {
                    0 => 0.0,
                    _ if coarse => rng.gen_range(0..=4) as f64 / 4.0,
                    _ => rng.gen_range(0.0..=1.0),
                })
                .collect()
        })
        .collect()
}

pub mod worlds {
    //! Random scenes and type-correct programs for property tests.

    use rand::seq::SliceRandom;
    use rand::Rng;
    use setprog::dsl::{Comparator, Condition, Literal, Program, SortOrder};
    use setprog::scene::{KnowledgeBase, Relation, Scene, SceneObject};

    pub const CLASSES: [&str; 4] = ["soda", "water", "chips", "noodle"];
    const COLORS: [&str; 3] = ["red", "blue", "green"];
    const PRICES: [f64; 6] = [1.0, 1.5, 2.0, 2.5, 3.0, 4.0];

    /// Class-level calories, shadowed by some objects' own values.
    pub fn kb() -> KnowledgeBase {
        let mut kb = KnowledgeBase::new();
        kb.insert("soda", "calories", 150.0);
        kb.insert("chips", "calories", 500.0);
        kb.insert("noodle", "calories", 350.0);
        kb
    }

    /// Up to eight objects with patchy attributes, optional boxes and an
    /// optional `next_to` triple set.
    pub fn scene(rng: &mut impl Rng) -> Scene {
        let n = rng.gen_range(0..=8);
        let with_boxes = rng.gen_bool(0.7);
        let mut objects = Vec::new();
        for i in 0..n {
            let mut o = SceneObject::new(format!("o{i}"), *CLASSES.choose(rng).unwrap());
            if rng.gen_bool(0.8) {
                o = o.with_attr("price", *PRICES.choose(rng).unwrap());
            }
            if rng.gen_bool(0.6) {
                o = o.with_attr("color", *COLORS.choose(rng).unwrap());
            }
            if rng.gen_bool(0.2) {
                o = o.with_attr("calories", 100.0 * rng.gen_range(1..6) as f64);
            }
            if rng.gen_bool(0.3) {
                o = o.with_attr("name", Literal::text(format!("Item {i}")));
            }
            if rng.gen_bool(0.4) {
                o = o.with_tag("on_top_shelf");
            }
            if with_boxes {
                o = o.with_bbox(rng.gen_range(0..9) as f64 / 10.0, rng.gen_range(0..9) as f64 / 10.0, 0.1, 0.1);
            }
            objects.push(o);
        }
        let mut scene = Scene::new("w", objects);
        if n > 1 && rng.gen_bool(0.5) {
            for _ in 0..rng.gen_range(1..=n) {
                let a = rng.gen_range(0..n);
                let b = rng.gen_range(0..n);
                scene.relations.push(Relation(format!("o{a}"), "next_to".into(), format!("o{b}")));
            }
        }
        scene
    }

    fn sort_attr(rng: &mut impl Rng) -> &'static str {
        *["price", "calories", "color", "weight"].choose(rng).unwrap()
    }

    pub fn condition(rng: &mut impl Rng, depth: usize) -> Condition {
        let cmps = [Comparator::Eq, Comparator::Ne, Comparator::Lt, Comparator::Le, Comparator::Gt, Comparator::Ge];
        match rng.gen_range(0..8) {
            0 => Condition::class_is(CLASSES.choose(rng).unwrap()),
            1 => Condition::class_is_not(CLASSES.choose(rng).unwrap()),
            2 => Condition::attribute("price", *cmps.choose(rng).unwrap(), *PRICES.choose(rng).unwrap()),
            3 => Condition::attribute("calories", *cmps.choose(rng).unwrap(), 100.0 * rng.gen_range(1..6) as f64),
            4 => {
                let cmp = if rng.gen_bool(0.5) { Comparator::Eq } else { Comparator::Ne };
                Condition::attribute("color", cmp, *COLORS.choose(rng).unwrap())
            }
            5 => Condition::tag("on_top_shelf"),
            6 if depth > 0 => {
                let pred = *["left_of", "right_of", "above", "below", "next_to", "behind"].choose(rng).unwrap();
                Condition::related(pred, set_program(rng, depth - 1))
            }
            _ => Condition::attribute("price", Comparator::Le, 2.5),
        }
    }

    /// A program whose value is an object set or list.
    pub fn set_program(rng: &mut impl Rng, depth: usize) -> Program {
        if depth == 0 {
            return Program::Objects;
        }
        let input = set_program(rng, depth - 1);
        match rng.gen_range(0..6) {
            0 => Program::Objects,
            1 | 2 => {
                let n = rng.gen_range(1..=2);
                let conditions = (0..n).map(|_| condition(rng, depth - 1)).collect();
                Program::filter(input, conditions)
            }
            3 => Program::min(sort_attr(rng), input),
            4 => Program::max(sort_attr(rng), input),
            _ => {
                let order = if rng.gen_bool(0.5) { SortOrder::Ascending } else { SortOrder::Descending };
                Program::sort(sort_attr(rng), order, input)
            }
        }
    }

    /// Any type-correct program of at most `depth + 1` levels.
    pub fn program(rng: &mut impl Rng, depth: usize) -> Program {
        let input = set_program(rng, depth);
        match rng.gen_range(0..6) {
            0 => Program::count(input),
            1 => Program::exists(input),
            2 => Program::select_attr(*["price", "color", "calories"].choose(rng).unwrap(), input),
            3 => Program::select_min(sort_attr(rng), input),
            4 => Program::select_max(sort_attr(rng), input),
            _ => input,
        }
    }
}
