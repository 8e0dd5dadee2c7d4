use std::collections::BTreeMap;

use super::policy::{Features, Gradient, GrammarPolicy, Table};
use super::TrainError;
use crate::datagen::{Decision, DecisionKey};
use crate::dsl::parse;
use crate::scene::DatasetRecord;

/// Supervised fit of the policy to reference programs.
///
/// Biases start at add-one-smoothed log-frequencies of the decisions that
/// derive the corpus programs, then `epochs` full-batch gradient steps on the
/// mean negative log-likelihood fit the question-feature weights. Records
/// whose program the grammar cannot derive are skipped.
pub fn sft_initialize(
    policy: &GrammarPolicy,
    records: &[DatasetRecord],
    epochs: usize,
    learning_rate: f64,
) -> Result<GrammarPolicy, TrainError> {
    let mut out = GrammarPolicy::new(policy.grammar().clone());
    out.add_features(records.iter().map(|r| r.query.as_str()));
    let corpus: Vec<(Features, Vec<Decision>)> = records
        .iter()
        .filter_map(|r| {
            let program = parse(&r.program).ok()?;
            let decisions = out.grammar().decompose(&program).ok()?;
            Some((out.features(&r.query), decisions))
        })
        .collect();
    if corpus.is_empty() {
        return Err(TrainError::EmptyCorpus);
    }
    let mut counts: BTreeMap<DecisionKey, Vec<f64>> = BTreeMap::new();
    for (_, decisions) in &corpus {
        for d in decisions {
            counts.entry(d.key.clone()).or_insert_with(|| vec![0.0; d.allowed.len()])[d.choice] += 1.0;
        }
    }
    for (key, c) in counts {
        let total: f64 = c.iter().sum::<f64>() + c.len() as f64;
        let bias = c.iter().map(|x| ((x + 1.0) / total).ln()).collect();
        out.set_table(key, Table { bias, weights: BTreeMap::new() });
    }
    for _ in 0..epochs {
        for (features, decisions) in &corpus {
            let mut g = Gradient::default();
            for d in decisions {
                let p = out.distribution(&d.key, &d.allowed, features);
                let coeffs: Vec<f64> = (0..p.len())
                    .map(|i| if i == d.choice { p[i] - 1.0 } else { p[i] })
                    .collect();
                g.add(&d.key, features, &coeffs);
            }
            out.apply(&g, -learning_rate);
        }
    }
    Ok(out)
}
