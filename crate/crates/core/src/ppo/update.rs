//! Clipped-surrogate update.

use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::policy::{gaussian_entropy, gaussian_log_prob, PolicyParams, LOG_STD_MAX, LOG_STD_MIN};
use super::{PpoError, Rollout};
use crate::optim::{clip_grad_norm, Adam};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PpoConfig {
    pub learning_rate: f64,
    pub n_steps: usize,
    pub minibatch_size: usize,
    pub clip_range: f64,
    pub ent_coef: f64,
    pub vf_coef: f64,
    pub max_grad_norm: f64,
    pub gamma: f64,
    pub gae_lambda: f64,
    pub n_epochs: usize,
    pub total_timesteps: usize,
    pub hidden: Vec<usize>,
    pub log_std_init: f64,
    pub obs_clip: f64,
    pub normalize_reward: bool,
    pub seed: u64,
}

impl Default for PpoConfig {
    fn default() -> Self {
        Self {
            learning_rate: 1e-4,
            n_steps: 512,
            minibatch_size: 128,
            clip_range: 0.2,
            ent_coef: 0.01,
            vf_coef: 0.5,
            max_grad_norm: 0.5,
            gamma: 0.99,
            gae_lambda: 0.95,
            n_epochs: 10,
            total_timesteps: 200_000,
            hidden: vec![64, 64],
            log_std_init: 0.0,
            obs_clip: 10.0,
            normalize_reward: false,
            seed: 0,
        }
    }
}

impl PpoConfig {
    pub fn validate(&self) -> Result<(), PpoError> {
        let bad = |m: &str| Err(PpoError::Config(m.to_string()));
        if !(self.gamma > 0.0 && self.gamma <= 1.0) {
            return bad("gamma must be in (0, 1]");
        }
        if !(0.0..=1.0).contains(&self.gae_lambda) {
            return bad("gae_lambda must be in [0, 1]");
        }
        if !(self.clip_range > 0.0) {
            return bad("clip_range must be positive");
        }
        if !(self.learning_rate > 0.0) || self.n_steps == 0 || self.minibatch_size == 0 || self.n_epochs == 0 {
            return bad("learning rate, n_steps, minibatch size and epochs must be positive");
        }
        if self.hidden.is_empty() || self.hidden.contains(&0) {
            return bad("hidden layer widths must be positive");
        }
        Ok(())
    }
}

/// Loss components averaged over a minibatch.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct LossParts {
    /// `-mean(min(ratio * A, clip(ratio) * A))`.
    pub policy: f64,
    pub value: f64,
    pub entropy: f64,
    pub total: f64,
    pub clip_fraction: f64,
}

/// Borrowed training samples.
#[derive(Debug, Clone, Copy)]
pub struct Batch<'a> {
    pub states: &'a [Vec<f64>],
    pub actions: &'a [Vec<f64>],
    pub old_log_probs: &'a [f64],
    pub advantages: &'a [f64],
    pub value_targets: &'a [f64],
}

/// Per-sample clipped surrogate `min(r * A, clip(r, 1-eps, 1+eps) * A)`.
pub fn clipped_objective(ratio: f64, advantage: f64, clip_range: f64) -> f64 {
    let clipped = ratio.clamp(1.0 - clip_range, 1.0 + clip_range);
    (ratio * advantage).min(clipped * advantage)
}

/// Total loss `policy + vf_coef * value - ent_coef * entropy` over the
/// indexed samples, with its exact gradient accumulated into `grads` when
/// given. Where the clipped branch is active the surrogate is flat.
pub fn ppo_loss(
    params: &PolicyParams,
    batch: Batch<'_>,
    indices: &[usize],
    clip_range: f64,
    vf_coef: f64,
    ent_coef: f64,
    mut grads: Option<&mut [f64]>,
) -> LossParts {
    let m = indices.len() as f64;
    let log_std = params.log_std();
    let n_act = params.n_actions();
    let ls_range = params.log_std_range();
    let (actor_r, critic_r) = (params.actor_range(), params.critic_range());
    let mut parts = LossParts::default();
    let mut d_mean = vec![0.0; n_act];

    for &j in indices {
        let state = &batch.states[j];
        let action = &batch.actions[j];
        let actor = params.actor_forward(state);
        let mean = actor.output();
        let lp = gaussian_log_prob(action, mean, &log_std);
        let ratio = (lp - batch.old_log_probs[j]).exp();
        let adv = batch.advantages[j];
        let surr1 = ratio * adv;
        let surr2 = ratio.clamp(1.0 - clip_range, 1.0 + clip_range) * adv;
        parts.policy -= surr1.min(surr2) / m;
        if (ratio - 1.0).abs() > clip_range {
            parts.clip_fraction += 1.0 / m;
        }

        let critic = params.critic_forward(state);
        let v = critic.output()[0];
        let v_err = v - batch.value_targets[j];
        parts.value += v_err * v_err / m;

        if let Some(g) = grads.as_deref_mut() {
            // d(-min(...))/d ratio; zero when the clipped branch is taken.
            let d_ratio = if surr1 <= surr2 { -adv / m } else { 0.0 };
            let d_lp = d_ratio * ratio;
            if d_lp != 0.0 {
                for i in 0..n_act {
                    let sd = log_std[i].exp();
                    let z = (action[i] - mean[i]) / sd;
                    d_mean[i] = d_lp * z / sd;
                    let raw = params.flat[ls_range.start + i];
                    if (LOG_STD_MIN..=LOG_STD_MAX).contains(&raw) {
                        g[ls_range.start + i] += d_lp * (z * z - 1.0);
                    }
                }
                params.actor.backward(&params.flat[actor_r.clone()], &actor, &d_mean, &mut g[actor_r.clone()]);
            }
            let d_v = vf_coef * 2.0 * v_err / m;
            params.critic.backward(&params.flat[critic_r.clone()], &critic, &[d_v], &mut g[critic_r.clone()]);
        }
    }
    // The entropy is state independent, so its batch mean is the closed form.
    parts.entropy = gaussian_entropy(&log_std);
    if let Some(g) = grads {
        for i in 0..n_act {
            let raw = params.flat[ls_range.start + i];
            if (LOG_STD_MIN..=LOG_STD_MAX).contains(&raw) {
                g[ls_range.start + i] -= ent_coef;
            }
        }
    }
    parts.total = parts.policy + vf_coef * parts.value - ent_coef * parts.entropy;
    parts
}

/// Averages over one pass through the rollout.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct EpochStats {
    pub policy_loss: f64,
    pub value_loss: f64,
    pub entropy: f64,
    pub clip_fraction: f64,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct UpdateStats {
    pub epochs: Vec<EpochStats>,
}

impl UpdateStats {
    pub fn last(&self) -> EpochStats {
        self.epochs.last().copied().unwrap_or_default()
    }
}

/// Zero-mean, unit-std advantages.
pub fn normalize_advantages(adv: &[f64]) -> Vec<f64> {
    let n = adv.len() as f64;
    let mean = adv.iter().sum::<f64>() / n;
    let var = adv.iter().map(|a| (a - mean).powi(2)).sum::<f64>() / n;
    let sd = var.sqrt() + 1e-8;
    adv.iter().map(|a| (a - mean) / sd).collect()
}

/// Run `n_epochs` passes of shuffled minibatch descent on the rollout.
///
/// On a non-finite loss the parameters are restored to their values before
/// the update and the error carries the epochs completed so far.
pub fn ppo_update(
    params: &mut PolicyParams,
    adam: &mut Adam,
    rollout: &Rollout,
    config: &PpoConfig,
    rng: &mut impl Rng,
) -> Result<UpdateStats, PpoError> {
    if !rollout.has_advantages() {
        return Err(PpoError::MissingAdvantages);
    }
    let advantages = normalize_advantages(&rollout.advantages);
    let batch = Batch {
        states: &rollout.states,
        actions: &rollout.actions,
        old_log_probs: &rollout.log_probs,
        advantages: &advantages,
        value_targets: &rollout.value_targets,
    };
    let snapshot = params.flat.clone();
    let mut stats = UpdateStats::default();
    let mut order: Vec<usize> = (0..rollout.len()).collect();
    let mut grads = vec![0.0; params.flat.len()];
    for epoch in 0..config.n_epochs {
        order.shuffle(rng);
        let mut acc = EpochStats::default();
        let mut n_batches = 0.0;
        for chunk in order.chunks(config.minibatch_size) {
            grads.iter_mut().for_each(|g| *g = 0.0);
            let parts = ppo_loss(
                params,
                batch,
                chunk,
                config.clip_range,
                config.vf_coef,
                config.ent_coef,
                Some(&mut grads),
            );
            if !parts.total.is_finite() || grads.iter().any(|g| !g.is_finite()) {
                params.flat = snapshot;
                return Err(PpoError::Diverged {
                    update: epoch,
                    stats: stats.epochs,
                });
            }
            clip_grad_norm(&mut grads, config.max_grad_norm);
            adam.step(&mut params.flat, &grads);
            params.clamp_log_std();
            acc.policy_loss += parts.policy;
            acc.value_loss += parts.value;
            acc.entropy += parts.entropy;
            acc.clip_fraction += parts.clip_fraction;
            n_batches += 1.0;
        }
        stats.epochs.push(EpochStats {
            policy_loss: acc.policy_loss / n_batches,
            value_loss: acc.value_loss / n_batches,
            entropy: acc.entropy / n_batches,
            clip_fraction: acc.clip_fraction / n_batches,
        });
    }
    Ok(stats)
}
