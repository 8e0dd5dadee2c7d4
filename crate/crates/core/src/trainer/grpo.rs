use super::policy::{Gradient, GrammarPolicy, Sample};
use super::{TrainConfig, TrainError};

/// Guard added to the reward spread when z-scoring.
pub const ADVANTAGE_EPS: f64 = 1e-8;

/// Group-relative advantages `(r - mean) / (std + eps)`. A group whose
/// spread is below `eps` gets all-zero advantages.
pub fn advantages(rewards: &[f64]) -> Vec<f64> {
    let n = rewards.len() as f64;
    if rewards.is_empty() {
        return Vec::new();
    }
    let mean = rewards.iter().sum::<f64>() / n;
    let std = (rewards.iter().map(|r| (r - mean).powi(2)).sum::<f64>() / n).sqrt();
    if std < ADVANTAGE_EPS {
        return vec![0.0; rewards.len()];
    }
    rewards.iter().map(|r| (r - mean) / (std + ADVANTAGE_EPS)).collect()
}

/// Value and gradient of the group objective.
#[derive(Debug, Clone, PartialEq)]
pub struct Objective {
    pub loss: f64,
    /// Mean over the group of the summed per-decision KL to the reference.
    pub kl: f64,
    pub gradient: Gradient,
}

/// `L = -Σ_k A_k log π(P_k) + β · (1/K) Σ_k Σ_d KL(π_d ‖ π_ref,d)`, where `d`
/// runs over the decisions of sample `k` and `π_d` is the masked categorical
/// distribution at that decision. The gradient is exact.
pub fn objective(
    policy: &GrammarPolicy,
    reference: &GrammarPolicy,
    question: &str,
    samples: &[Sample],
    advantages: &[f64],
    beta: f64,
) -> Objective {
    let features = policy.features(question);
    let k = samples.len().max(1) as f64;
    let mut loss = 0.0;
    let mut kl_total = 0.0;
    let mut gradient = Gradient::default();
    for (sample, a) in samples.iter().zip(advantages) {
        for d in &sample.decisions {
            let p = policy.distribution(&d.key, &d.allowed, &features);
            let q = reference.distribution(&d.key, &d.allowed, &features);
            let kl: f64 = (0..p.len())
                .filter(|i| d.allowed[*i])
                .map(|i| p[i] * (p[i].ln() - q[i].ln()))
                .sum();
            loss += -a * p[d.choice].ln() + beta / k * kl;
            kl_total += kl / k;
            let coeffs: Vec<f64> = (0..p.len())
                .map(|i| {
                    if !d.allowed[i] {
                        return 0.0;
                    }
                    let hit = if i == d.choice { 1.0 } else { 0.0 };
                    -a * (hit - p[i]) + beta / k * p[i] * (p[i].ln() - q[i].ln() - kl)
                })
                .collect();
            gradient.add(&d.key, &features, &coeffs);
        }
    }
    Objective { loss, kl: kl_total, gradient }
}

/// Statistics of one policy update.
#[derive(Debug, Clone, PartialEq)]
pub struct StepStats {
    pub mean_reward: f64,
    pub advantages: Vec<f64>,
    pub loss: f64,
    pub kl: f64,
    pub grad_norm: f64,
}

/// One gradient-descent step on [`objective`] for a group of `cfg.k` samples
/// of the same question.
pub fn grpo_step(
    policy: &mut GrammarPolicy,
    reference: &GrammarPolicy,
    question: &str,
    samples: &[Sample],
    rewards: &[f64],
    cfg: &TrainConfig,
) -> Result<StepStats, TrainError> {
    if samples.len() != cfg.k || rewards.len() != cfg.k {
        return Err(TrainError::BatchSizeMismatch { expected: cfg.k, samples: samples.len(), rewards: rewards.len() });
    }
    let adv = advantages(rewards);
    let obj = objective(policy, reference, question, samples, &adv, cfg.beta);
    policy.apply(&obj.gradient, -cfg.learning_rate);
    Ok(StepStats {
        mean_reward: rewards.iter().sum::<f64>() / rewards.len() as f64,
        advantages: adv,
        loss: obj.loss,
        kl: obj.kl,
        grad_norm: obj.gradient.norm(),
    })
}
