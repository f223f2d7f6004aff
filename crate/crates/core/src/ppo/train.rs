//! Rollout collection and the outer training loop.

use std::collections::BTreeMap;
use std::ops::Range;
use std::sync::Arc;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::gae::compute_gae_with_dones;
use super::normalize::{ObsNormalizer, RewardNormalizer};
use super::policy::{policy_eval, sample_action, ActionMode, PolicyParams};
use super::update::{ppo_update, PpoConfig};
use super::{PpoError, Rollout};
use crate::env::{EnvConfig, EnvData, EnvState, PolicyOutput, PortfolioEnv};
use crate::io;
use crate::optim::{Adam, AdamConfig};
use crate::seed;

/// One row of the training curve.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CurvePoint {
    pub update: usize,
    pub timesteps: usize,
    pub mean_reward: f64,
    pub policy_loss: f64,
    pub value_loss: f64,
    pub entropy: f64,
    pub clip_fraction: f64,
}

/// `update,mean_reward,policy_loss,value_loss,entropy,clip_fraction`.
pub fn curves_csv(curves: &[CurvePoint]) -> String {
    let mut out = String::from("update,mean_reward,policy_loss,value_loss,entropy,clip_fraction\n");
    for c in curves {
        out.push_str(&format!(
            "{},{},{},{},{},{}\n",
            c.update,
            io::fmt_f64(c.mean_reward),
            io::fmt_f64(c.policy_loss),
            io::fmt_f64(c.value_loss),
            io::fmt_f64(c.entropy),
            io::fmt_f64(c.clip_fraction)
        ));
    }
    out
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainedPolicy {
    pub top_k: usize,
    pub params: PolicyParams,
    pub normalizer: ObsNormalizer,
    pub curves: Vec<CurvePoint>,
    pub timesteps: usize,
}

impl TrainedPolicy {
    /// Deterministic action (the Gaussian mean) for a raw environment state,
    /// normalised with the frozen training statistics.
    pub fn act(&self, state: &EnvState) -> Result<Vec<f64>, PpoError> {
        let obs = self.normalizer.apply(state.as_slice());
        Ok(policy_eval(&self.params, &obs)?.mean)
    }

    pub fn policy_output(&self, state: &EnvState) -> Result<PolicyOutput, PpoError> {
        let obs = self.normalizer.apply(state.as_slice());
        let e = policy_eval(&self.params, &obs)?;
        let (action, log_prob) = sample_action(&e.mean, &e.log_std, ActionMode::Deterministic, &mut seed::rng(0));
        Ok(PolicyOutput {
            action,
            log_prob,
            value: e.value,
        })
    }
}

/// Fresh, untrained policy and normaliser for an environment.
pub fn init_policy(env_config: &EnvConfig, config: &PpoConfig) -> (PolicyParams, ObsNormalizer) {
    let dim = env_config.state_len();
    let mut rng = seed::rng(seed::derive(config.seed, 10));
    let params = PolicyParams::new(dim, env_config.n_assets, &config.hidden, &mut rng, config.log_std_init);
    (params, ObsNormalizer::new(dim, config.obs_clip))
}

/// Train one policy on `env`, restarting episodes until the timestep budget
/// is spent.
pub fn train_policy(mut env: PortfolioEnv, config: &PpoConfig) -> Result<TrainedPolicy, PpoError> {
    config.validate()?;
    let (mut params, mut normalizer) = init_policy(env.config(), config);
    let mut adam = Adam::new(AdamConfig::with_lr(config.learning_rate), params.flat.len());
    let mut action_rng = seed::rng(seed::derive(config.seed, 11));
    let mut shuffle_rng = seed::rng(seed::derive(config.seed, 12));
    let mut reward_norm = config
        .normalize_reward
        .then(|| RewardNormalizer::new(config.gamma, config.obs_clip));

    let mut curves = Vec::new();
    let mut timesteps = 0;
    let mut obs = normalizer.normalize(env.reset().as_slice(), true)?;
    let mut update = 0;
    while timesteps < config.total_timesteps {
        let n = config.n_steps.min(config.total_timesteps - timesteps);
        let mut rollout = Rollout::with_capacity(n);
        let mut raw_reward_sum = 0.0;
        for _ in 0..n {
            let e = policy_eval(&params, &obs)?;
            let (action, log_prob) = sample_action(&e.mean, &e.log_std, ActionMode::Stochastic, &mut action_rng);
            let step = env.step(&action)?;
            raw_reward_sum += step.reward;
            let reward = match reward_norm.as_mut() {
                Some(rn) => rn.normalize(step.reward, step.done),
                None => step.reward,
            };
            let next_raw = if step.done { env.reset() } else { step.state };
            let next_obs = normalizer.normalize(next_raw.as_slice(), true)?;
            rollout.push(std::mem::replace(&mut obs, next_obs), action, log_prob, e.value, reward, step.done);
        }
        timesteps += n;
        let last_value = params.value(&obs);
        let (adv, targets) = compute_gae_with_dones(
            &rollout.rewards,
            &rollout.values,
            &rollout.dones,
            last_value,
            config.gamma,
            config.gae_lambda,
        )?;
        rollout.advantages = adv;
        rollout.value_targets = targets;
        let stats = ppo_update(&mut params, &mut adam, &rollout, config, &mut shuffle_rng).map_err(|e| match e {
            PpoError::Diverged { .. } => PpoError::TrainingDiverged { timestep: timesteps },
            other => other,
        })?;
        let last = stats.last();
        curves.push(CurvePoint {
            update,
            timesteps,
            mean_reward: raw_reward_sum / n as f64,
            policy_loss: last.policy_loss,
            value_loss: last.value_loss,
            entropy: last.entropy,
            clip_fraction: last.clip_fraction,
        });
        log::debug!(
            "K={} update {update} t={timesteps} mean_reward={:.5} entropy={:.3}",
            env.config().top_k,
            raw_reward_sum / n as f64,
            last.entropy
        );
        update += 1;
    }
    Ok(TrainedPolicy {
        top_k: env.config().top_k,
        params,
        normalizer,
        curves,
        timesteps,
    })
}

/// Train one policy per Top-K value over the same data and row range.
/// Each K gets a seed derived from `config.seed` and K; jobs run in parallel.
pub fn train_ppo(
    data: Arc<EnvData>,
    range: Range<usize>,
    env_template: &EnvConfig,
    config: &PpoConfig,
    ks: &[usize],
) -> Result<BTreeMap<usize, TrainedPolicy>, PpoError> {
    let mut unique = ks.to_vec();
    unique.sort_unstable();
    unique.dedup();
    if unique.len() != ks.len() {
        return Err(PpoError::Config("duplicate K values".into()));
    }
    let results: Vec<(usize, TrainedPolicy)> = unique
        .par_iter()
        .map(|&k| {
            let env_cfg = EnvConfig {
                top_k: k,
                ..env_template.clone()
            };
            let env = PortfolioEnv::new(env_cfg, data.clone(), range.clone())?;
            let cfg = PpoConfig {
                seed: seed::derive(config.seed, k as u64),
                ..config.clone()
            };
            Ok((k, train_policy(env, &cfg)?))
        })
        .collect::<Result<_, PpoError>>()?;
    Ok(results.into_iter().collect())
}
