mod common;

use std::collections::BTreeMap;

use common::{gradient_gap, record, sample_of, tiny_grammar, touched_parameters};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use setprog::datagen::{generate_dataset, GenConfig, Grammar};
use setprog::dsl::parse;
use setprog::reward::RewardVariant;
use setprog::scene::Split;
use setprog::trainer::{
    advantages, grpo_step, objective, sft_initialize, train, GrammarPolicy, TrainConfig, TrainError,
};

fn default_grammar() -> Grammar {
    Grammar::new(Default::default(), 3)
}

#[test]
fn sft_on_a_single_program_concentrates_on_it() {
    let corpus = vec![record("How many objects are there?", "COUNT(objects)"); 2000];
    let policy = sft_initialize(&GrammarPolicy::new(default_grammar()), &corpus, 3, 1.0).unwrap();
    let lp = policy.log_prob(&parse("COUNT(objects)").unwrap(), "How many objects are there?").unwrap();
    assert!(lp.exp() >= 0.99, "p = {}", lp.exp());
}

#[test]
fn count_initialization_is_symmetric_in_two_programs() {
    let q = "How many drinks are there?";
    let a = "COUNT(FILTER(objects, class='soda'))";
    let b = "COUNT(FILTER(objects, class='water'))";
    let mut corpus = vec![record(q, a); 50];
    corpus.extend(vec![record(q, b); 50]);
    let policy = sft_initialize(&GrammarPolicy::new(default_grammar()), &corpus, 0, 1.0).unwrap();
    let la = policy.log_prob(&parse(a).unwrap(), q).unwrap();
    let lb = policy.log_prob(&parse(b).unwrap(), q).unwrap();
    assert!((la - lb).abs() <= 1e-6, "{la} vs {lb}");
}

#[test]
fn sft_beats_uniform_on_held_out_records() {
    let cfg = GenConfig { train: 100, val: 100, test: 10, holdout_quota: 1, ..GenConfig::default() };
    let ds = generate_dataset(&cfg).unwrap();
    let train_split: Vec<_> = ds.split(Split::Train).cloned().collect();
    let uniform = GrammarPolicy::new(Grammar::new(cfg.vocabulary.clone(), cfg.max_depth));
    let fitted = sft_initialize(&uniform, &train_split, 3, 1.0).unwrap();
    let (mut fit_ll, mut uni_ll) = (0.0, 0.0);
    for r in ds.split(Split::Val) {
        let p = parse(&r.program).unwrap();
        fit_ll += fitted.log_prob(&p, &r.query).unwrap();
        uni_ll += uniform.log_prob(&p, &r.query).unwrap();
    }
    assert!(fit_ll >= uni_ll, "{fit_ll} < {uni_ll}");
}

#[test]
fn sft_rejects_an_underivable_corpus() {
    let corpus = vec![record("q", "COUNT(FILTER(FILTER(FILTER(FILTER(objects, class='soda'), class='soda'), class='soda'), class='soda'))")];
    let err = sft_initialize(&GrammarPolicy::new(default_grammar()), &corpus, 1, 1.0).unwrap_err();
    assert!(matches!(err, TrainError::EmptyCorpus));
}

#[test]
fn sampled_log_prob_matches_scoring() {
    let cfg = GenConfig { train: 200, val: 1, test: 1, holdout_quota: 0, ..GenConfig::default() };
    let ds = generate_dataset(&cfg).unwrap();
    let train_split: Vec<_> = ds.split(Split::Train).cloned().collect();
    let policy = sft_initialize(&GrammarPolicy::new(default_grammar()), &train_split, 3, 1.0).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    for r in train_split.iter().take(50) {
        for _ in 0..4 {
            let s = policy.sample(&r.query, &mut rng);
            setprog::dsl::validate_types(&s.program).unwrap();
            assert_eq!(s.log_prob, policy.log_prob(&s.program, &r.query).unwrap());
            assert!(s.log_prob < 0.0 && s.log_prob.is_finite());
        }
    }
}

#[test]
fn single_option_decisions_cost_nothing() {
    let policy = GrammarPolicy::new(tiny_grammar());
    let sample = sample_of(&policy, "", "COUNT(objects)");
    assert_eq!(sample.decisions.len(), 2);
    assert_eq!(sample.decisions[1].allowed.iter().filter(|a| **a).count(), 1);
    assert!((sample.log_prob - (1.0f64 / 7.0).ln()).abs() < 1e-12);
}

#[test]
fn same_seed_same_sample() {
    let policy = GrammarPolicy::new(default_grammar());
    let a = policy.sample("q", &mut ChaCha8Rng::seed_from_u64(4));
    let b = policy.sample("q", &mut ChaCha8Rng::seed_from_u64(4));
    assert_eq!(a, b);
}

#[test]
fn monte_carlo_frequencies_match_probabilities() {
    let mut policy = GrammarPolicy::new(tiny_grammar());
    let seeds: Vec<_> = ["COUNT(objects)", "FILTER(objects, class='soda')", "SELECT(MAX(price), objects)", "FILTER(objects, price>4)"]
        .iter()
        .map(|p| sample_of(&policy, "", p))
        .collect();
    let params = touched_parameters(&policy, "", &seeds);
    common::randomize(&mut policy, &params, 3);
    let n = 50_000;
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let mut counts: BTreeMap<String, (usize, f64)> = BTreeMap::new();
    for _ in 0..n {
        let s = policy.sample("", &mut rng);
        counts.entry(s.program.canonical()).or_insert((0, s.log_prob.exp())).0 += 1;
    }
    let mut mass = 0.0;
    for (program, (c, p)) in &counts {
        mass += p;
        let expected = n as f64 * p;
        let se = (n as f64 * p * (1.0 - p)).sqrt();
        assert!((*c as f64 - expected).abs() <= 3.0 * se.max(1.0), "{program}: {c} vs {expected:.1}");
    }
    assert!(mass <= 1.0 + 1e-9);
}

#[test]
fn analytic_gradient_matches_finite_differences() {
    let programs = ["COUNT(objects)", "EXISTS(objects)", "FILTER(objects, class='soda')", "FILTER(objects, class='water')"];
    let (gap, n) = gradient_gap("", &programs, &[1.2, -0.3, 0.5, -1.4], 0.05, 1e-5);
    assert!(n <= 50, "{n} parameters");
    assert!(gap <= 1e-5, "max gap {gap}");
}

#[test]
fn gradient_check_covers_question_features() {
    let programs = ["COUNT(objects)", "FILTER(objects, price<2)"];
    let (gap, n) = gradient_gap("how many cheap ones", &programs, &[1.0, -1.0], 0.5, 1e-5);
    assert!(n > 50);
    assert!(gap <= 1e-5, "max gap {gap}");
}

#[test]
fn rewarded_program_gains_probability() {
    let mut policy = GrammarPolicy::new(default_grammar());
    let reference = policy.clone();
    let q = "How many sodas are there?";
    let samples = vec![
        sample_of(&policy, q, "COUNT(FILTER(objects, class='soda'))"),
        sample_of(&policy, q, "EXISTS(FILTER(objects, class='water'))"),
    ];
    let before = policy.log_prob(&samples[0].program, q).unwrap();
    let cfg = TrainConfig { k: 2, beta: 0.0, ..TrainConfig::default() };
    let stats = grpo_step(&mut policy, &reference, q, &samples, &[1.0, 0.0], &cfg).unwrap();
    assert_eq!(stats.advantages.len(), 2);
    let after = policy.log_prob(&samples[0].program, q).unwrap();
    assert!(after > before, "{after} <= {before}");
}

#[test]
fn constant_rewards_leave_only_the_kl_pull() {
    assert_eq!(advantages(&[0.7; 4]), vec![0.0; 4]);
    let q = "q";
    let programs = ["COUNT(objects)", "EXISTS(objects)", "FILTER(objects, class='soda')", "COUNT(objects)"];
    let mut policy = GrammarPolicy::new(tiny_grammar());
    let samples: Vec<_> = programs.iter().map(|p| sample_of(&policy, q, p)).collect();
    let params = touched_parameters(&policy, q, &samples);
    common::randomize(&mut policy, &params, 5);
    let reference = GrammarPolicy::new(tiny_grammar());
    let cfg = TrainConfig { k: 4, ..TrainConfig::default() };

    let kl_only = objective(&policy, &reference, q, &samples, &[0.0; 4], cfg.beta);
    let mut expected = policy.clone();
    expected.apply(&kl_only.gradient, -cfg.learning_rate);
    let mut stepped = policy.clone();
    let stats = grpo_step(&mut stepped, &reference, q, &samples, &[2.0; 4], &cfg).unwrap();
    assert_eq!(stats.advantages, vec![0.0; 4]);
    assert_eq!(stepped, expected);
    assert!(objective(&stepped, &reference, q, &samples, &[0.0; 4], cfg.beta).kl < kl_only.kl);

    // At the reference the KL pull vanishes.
    let mut at_ref = reference.clone();
    grpo_step(&mut at_ref, &reference, q, &samples, &[2.0; 4], &cfg).unwrap();
    for (_, v) in objective(&reference, &reference, q, &samples, &[0.0; 4], cfg.beta).gradient.entries() {
        assert!(v.abs() < 1e-15);
    }
}

#[test]
fn group_size_is_enforced() {
    let mut policy = GrammarPolicy::new(tiny_grammar());
    let reference = policy.clone();
    let s = sample_of(&policy, "", "COUNT(objects)");
    let cfg = TrainConfig { k: 2, ..TrainConfig::default() };
    let err = grpo_step(&mut policy, &reference, "", &[s.clone(), s], &[1.0], &cfg).unwrap_err();
    assert!(matches!(err, TrainError::BatchSizeMismatch { expected: 2, samples: 2, rewards: 1 }));
    assert!(matches!(TrainConfig { k: 1, ..TrainConfig::default() }.validate(), Err(TrainError::InvalidConfig(_))));
}

fn toy() -> (setprog::datagen::GeneratedDataset, GrammarPolicy) {
    let cfg = GenConfig { train: 120, val: 1, test: 10, holdout_quota: 1, ..GenConfig::default() };
    let ds = generate_dataset(&cfg).unwrap();
    let train_split: Vec<_> = ds.split(Split::Train).cloned().collect();
    let policy = sft_initialize(&GrammarPolicy::new(default_grammar()), &train_split, 3, 1.0).unwrap();
    (ds, policy)
}

#[test]
fn zero_steps_is_a_no_op() {
    let (ds, policy) = toy();
    let task: Vec<_> = ds.split(Split::Test).cloned().collect();
    let mut trained = policy.clone();
    let cfg = TrainConfig { steps: 0, ..TrainConfig::default() };
    let trace = train(&cfg, &mut trained, &task, &task, &ds.scenes, &ds.kb).unwrap();
    assert!(trace.steps.is_empty());
    assert_eq!(trained, policy);
}

#[test]
fn training_is_deterministic_and_stays_positive() {
    let (ds, policy) = toy();
    let task: Vec<_> = ds.split(Split::Test).cloned().collect();
    for variant in RewardVariant::ALL {
        let cfg = TrainConfig { steps: 15, variant, ..TrainConfig::default() };
        let mut a = policy.clone();
        let mut b = policy.clone();
        let ta = train(&cfg, &mut a, &task, &task, &ds.scenes, &ds.kb).unwrap();
        let tb = train(&cfg, &mut b, &task, &task, &ds.scenes, &ds.kb).unwrap();
        assert_eq!(ta, tb);
        assert_eq!(ta.steps.len(), 15);
        assert!(ta.steps.iter().all(|s| s.kl.is_finite() && s.kl >= -1e-12 && s.grad_norm.is_finite()));
        let r = &task[0];
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        for _ in 0..20 {
            let s = a.sample(&r.query, &mut rng);
            let features = a.features(&r.query);
            for d in &s.decisions {
                let p = a.distribution(&d.key, &d.allowed, &features);
                assert!(p.iter().zip(&d.allowed).all(|(p, ok)| !ok || *p > 0.0));
                assert!((p.iter().sum::<f64>() - 1.0).abs() < 1e-9);
            }
        }
    }
}

#[test]
fn training_reports_unknown_scenes() {
    let (ds, mut policy) = toy();
    let mut task: Vec<_> = ds.split(Split::Test).cloned().collect();
    task[0].image_id = "missing".into();
    let err = train(&TrainConfig { steps: 1, ..TrainConfig::default() }, &mut policy, &task, &[], &ds.scenes, &ds.kb)
        .unwrap_err();
    assert!(matches!(err, TrainError::UnknownScene(_)));
}
