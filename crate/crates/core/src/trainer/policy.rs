use std::collections::BTreeMap;

use rand::Rng;

use crate::datagen::{Chooser, Context, Decision, DecisionKey, Grammar, OutOfGrammar};
use crate::dsl::Program;

/// Logit parameters of one decision key: a bias per option plus, for each
/// question feature, a weight per option.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Table {
    pub bias: Vec<f64>,
    pub weights: BTreeMap<u32, Vec<f64>>,
}

impl Table {
    fn zeros(n: usize) -> Self {
        Table { bias: vec![0.0; n], weights: BTreeMap::new() }
    }

    fn add(&mut self, features: &Features, coeffs: &[f64], with_bias: bool) {
        let n = coeffs.len();
        if with_bias {
            for (b, c) in self.bias.iter_mut().zip(coeffs) {
                *b += c;
            }
        }
        for f in &features.ids {
            let w = self.weights.entry(*f).or_insert_with(|| vec![0.0; n]);
            for (w, c) in w.iter_mut().zip(coeffs) {
                *w += features.value * c;
            }
        }
    }
}

/// Active features of a question. Every active feature has the same value,
/// chosen so that the feature vector has unit length.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Features {
    pub ids: Vec<u32>,
    pub value: f64,
}

impl Features {
    pub fn new(mut ids: Vec<u32>) -> Self {
        ids.sort_unstable();
        ids.dedup();
        let value = if ids.is_empty() { 0.0 } else { 1.0 / (ids.len() as f64).sqrt() };
        Features { ids, value }
    }
}

/// One scalar parameter: the bias (`feature == None`) or a feature weight of
/// `option` at `key`.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct ParamId {
    pub key: DecisionKey,
    pub feature: Option<u32>,
    pub option: usize,
}

/// Sparse gradient with the same layout as the policy parameters.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Gradient {
    tables: BTreeMap<DecisionKey, Table>,
}

impl Gradient {
    /// Accumulate a logit gradient `coeffs` at `key` into its bias, its
    /// feature weights and the feature weights shared by its site.
    pub fn add(&mut self, key: &DecisionKey, features: &Features, coeffs: &[f64]) {
        let n = coeffs.len();
        self.tables.entry(key.clone()).or_insert_with(|| Table::zeros(n)).add(features, coeffs, true);
        if !features.ids.is_empty() {
            self.tables.entry(shared(key)).or_insert_with(|| Table::zeros(n)).add(features, coeffs, false);
        }
    }

    pub fn entries(&self) -> Vec<(ParamId, f64)> {
        let mut out = Vec::new();
        for (key, t) in &self.tables {
            for (option, v) in t.bias.iter().enumerate() {
                out.push((ParamId { key: key.clone(), feature: None, option }, *v));
            }
            for (f, w) in &t.weights {
                for (option, v) in w.iter().enumerate() {
                    out.push((ParamId { key: key.clone(), feature: Some(*f), option }, *v));
                }
            }
        }
        out
    }

    pub fn norm(&self) -> f64 {
        self.entries().iter().map(|(_, v)| v * v).sum::<f64>().sqrt()
    }
}

/// A derived program with its decisions and their total log-probability.
#[derive(Debug, Clone, PartialEq)]
pub struct Sample {
    pub program: Program,
    pub decisions: Vec<Decision>,
    pub log_prob: f64,
}

/// Key of the feature weights shared by every context of a site.
pub fn shared(key: &DecisionKey) -> DecisionKey {
    DecisionKey { site: key.site.clone(), context: Context::ANY }
}

/// Question-conditioned policy over grammar derivations. Each decision is a
/// softmax over the allowed options of
/// `bias[key] + x · Σ_f (weights[key][f] + weights[site][f])` over the
/// question's features `f`, where `x` normalizes the feature vector to unit
/// length and `weights[site]` is shared across contexts so that word-to-choice
/// associations carry over to unseen nestings.
/// Keys without parameters are uniform.
#[derive(Debug, Clone, PartialEq)]
pub struct GrammarPolicy {
    grammar: Grammar,
    features: BTreeMap<String, u32>,
    tables: BTreeMap<DecisionKey, Table>,
}

fn tokens(question: &str) -> Vec<String> {
    question
        .split(|c: char| !c.is_alphanumeric())
        .filter(|t| !t.is_empty())
        .map(str::to_lowercase)
        .collect()
}

/// Unigram and bigram features of a question.
pub fn question_features(question: &str) -> Vec<String> {
    let toks = tokens(question);
    let mut out: Vec<String> = toks.iter().map(|t| format!("w:{t}")).collect();
    out.extend(toks.windows(2).map(|w| format!("b:{} {}", w[0], w[1])));
    out
}

impl GrammarPolicy {
    /// The uniform policy.
    pub fn new(grammar: Grammar) -> Self {
        GrammarPolicy { grammar, features: BTreeMap::new(), tables: BTreeMap::new() }
    }

    pub fn grammar(&self) -> &Grammar {
        &self.grammar
    }

    /// Register the features of `questions`; unregistered features are
    /// ignored when conditioning.
    pub fn add_features<'a>(&mut self, questions: impl IntoIterator<Item = &'a str>) {
        for q in questions {
            for f in question_features(q) {
                let next = self.features.len() as u32;
                self.features.entry(f).or_insert(next);
            }
        }
    }

    pub fn feature_count(&self) -> usize {
        self.features.len()
    }

    /// Registered features of a question.
    pub fn features(&self, question: &str) -> Features {
        Features::new(
            question_features(question)
                .iter()
                .filter_map(|f| self.features.get(f).copied())
                .collect(),
        )
    }

    pub fn logits(&self, key: &DecisionKey, features: &Features) -> Vec<f64> {
        let n = self.grammar.options(&key.site);
        let mut z = vec![0.0; n];
        if let Some(t) = self.tables.get(key) {
            for (z, b) in z.iter_mut().zip(&t.bias) {
                *z += b;
            }
        }
        for t in [self.tables.get(key), self.tables.get(&shared(key))].into_iter().flatten() {
            for f in &features.ids {
                if let Some(w) = t.weights.get(f) {
                    for (z, w) in z.iter_mut().zip(w) {
                        *z += features.value * w;
                    }
                }
            }
        }
        z
    }

    /// Softmax over the allowed options; masked options get probability 0.
    pub fn distribution(&self, key: &DecisionKey, allowed: &[bool], features: &Features) -> Vec<f64> {
        let z = self.logits(key, features);
        let max = z
            .iter()
            .zip(allowed)
            .filter(|(_, ok)| **ok)
            .map(|(z, _)| *z)
            .fold(f64::NEG_INFINITY, f64::max);
        let e: Vec<f64> = z
            .iter()
            .zip(allowed)
            .map(|(z, ok)| if *ok { (z - max).exp() } else { 0.0 })
            .collect();
        let sum: f64 = e.iter().sum();
        e.into_iter().map(|x| x / sum).collect()
    }

    /// Sum of the log-probabilities of a decision sequence.
    pub fn log_prob_of(&self, decisions: &[Decision], features: &Features) -> f64 {
        decisions
            .iter()
            .map(|d| self.distribution(&d.key, &d.allowed, features)[d.choice].ln())
            .sum()
    }

    pub fn log_prob(&self, program: &Program, question: &str) -> Result<f64, OutOfGrammar> {
        let decisions = self.grammar.decompose(program)?;
        Ok(self.log_prob_of(&decisions, &self.features(question)))
    }

    pub fn sample(&self, question: &str, rng: &mut impl Rng) -> Sample {
        let features = self.features(question);
        let mut chooser = Sampling { policy: self, features: &features, rng };
        let (program, decisions) = self.grammar.generate(&mut chooser);
        let log_prob = self.log_prob_of(&decisions, &features);
        Sample { program, decisions, log_prob }
    }

    /// The program built from the most likely option at every decision.
    pub fn greedy(&self, question: &str) -> Program {
        let features = self.features(question);
        self.grammar.generate(&mut Greedy { policy: self, features: &features }).0
    }

    pub fn parameter(&self, id: &ParamId) -> f64 {
        let Some(t) = self.tables.get(&id.key) else { return 0.0 };
        match id.feature {
            None => t.bias[id.option],
            Some(f) => t.weights.get(&f).map_or(0.0, |w| w[id.option]),
        }
    }

    pub fn set_parameter(&mut self, id: &ParamId, value: f64) {
        let n = self.grammar.options(&id.key.site);
        let t = self.tables.entry(id.key.clone()).or_insert_with(|| Table::zeros(n));
        match id.feature {
            None => t.bias[id.option] = value,
            Some(f) => t.weights.entry(f).or_insert_with(|| vec![0.0; n])[id.option] = value,
        }
    }

    /// Replace the table of `key` wholesale.
    pub fn set_table(&mut self, key: DecisionKey, table: Table) {
        self.tables.insert(key, table);
    }

    pub fn tables(&self) -> &BTreeMap<DecisionKey, Table> {
        &self.tables
    }

    pub fn parameter_count(&self) -> usize {
        self.tables.values().map(|t| t.bias.len() * (1 + t.weights.len())).sum()
    }

    /// `θ += scale · g`.
    pub fn apply(&mut self, gradient: &Gradient, scale: f64) {
        for (key, g) in &gradient.tables {
            let n = g.bias.len();
            let t = self.tables.entry(key.clone()).or_insert_with(|| Table::zeros(n));
            for (a, b) in t.bias.iter_mut().zip(&g.bias) {
                *a += scale * b;
            }
            for (f, w) in &g.weights {
                let target = t.weights.entry(*f).or_insert_with(|| vec![0.0; n]);
                for (a, b) in target.iter_mut().zip(w) {
                    *a += scale * b;
                }
            }
        }
    }
}

struct Sampling<'a, R> {
    policy: &'a GrammarPolicy,
    features: &'a Features,
    rng: &'a mut R,
}

impl<R: Rng> Chooser for Sampling<'_, R> {
    fn choose(&mut self, key: &DecisionKey, allowed: &[bool]) -> usize {
        let p = self.policy.distribution(key, allowed, self.features);
        let u: f64 = self.rng.gen();
        let mut acc = 0.0;
        let mut last = 0;
        for (i, pi) in p.iter().enumerate() {
            if !allowed[i] {
                continue;
            }
            acc += pi;
            last = i;
            if u < acc {
                return i;
            }
        }
        last
    }
}

struct Greedy<'a> {
    policy: &'a GrammarPolicy,
    features: &'a Features,
}

impl Chooser for Greedy<'_> {
    fn choose(&mut self, key: &DecisionKey, allowed: &[bool]) -> usize {
        let p = self.policy.distribution(key, allowed, self.features);
        let mut best = None;
        for (i, pi) in p.iter().enumerate() {
            if allowed[i] && best.is_none_or(|b: usize| *pi > p[b]) {
                best = Some(i);
            }
        }
        best.expect("some option is allowed")
    }
}
