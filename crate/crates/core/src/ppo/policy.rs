//! Diagonal-Gaussian actor with a separate critic.

use std::f64::consts::{E, PI};
use std::ops::Range;

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use super::mlp::{MlpCache, MlpShape};
use super::PpoError;

pub const LOG_STD_MIN: f64 = -20.0;
pub const LOG_STD_MAX: f64 = 2.0;

/// Actor, log standard deviations and critic packed into one flat vector:
/// `[actor | log_std | critic]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PolicyParams {
    pub actor: MlpShape,
    pub critic: MlpShape,
    pub flat: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ActionMode {
    Stochastic,
    Deterministic,
}

/// Output of [`policy_eval`].
#[derive(Debug, Clone, PartialEq)]
pub struct PolicyEval {
    pub mean: Vec<f64>,
    pub log_std: Vec<f64>,
    pub value: f64,
}

impl PolicyParams {
    pub fn new(state_dim: usize, n_actions: usize, hidden: &[usize], rng: &mut impl Rng, log_std_init: f64) -> Self {
        let actor = MlpShape::new(state_dim, hidden, n_actions);
        let critic = MlpShape::new(state_dim, hidden, 1);
        let mut flat = actor.init(rng, 0.01);
        flat.extend(std::iter::repeat_n(log_std_init, n_actions));
        flat.extend(critic.init(rng, 1.0));
        Self { actor, critic, flat }
    }

    pub fn zeros(state_dim: usize, n_actions: usize, hidden: &[usize]) -> Self {
        let actor = MlpShape::new(state_dim, hidden, n_actions);
        let critic = MlpShape::new(state_dim, hidden, 1);
        let flat = vec![0.0; actor.n_params() + n_actions + critic.n_params()];
        Self { actor, critic, flat }
    }

    pub fn state_dim(&self) -> usize {
        self.actor.input()
    }

    pub fn n_actions(&self) -> usize {
        self.actor.output()
    }

    pub fn actor_range(&self) -> Range<usize> {
        0..self.actor.n_params()
    }

    pub fn log_std_range(&self) -> Range<usize> {
        let s = self.actor.n_params();
        s..s + self.n_actions()
    }

    pub fn critic_range(&self) -> Range<usize> {
        let s = self.actor.n_params() + self.n_actions();
        s..s + self.critic.n_params()
    }

    pub fn log_std(&self) -> Vec<f64> {
        self.flat[self.log_std_range()]
            .iter()
            .map(|x| x.clamp(LOG_STD_MIN, LOG_STD_MAX))
            .collect()
    }

    pub fn clamp_log_std(&mut self) {
        let r = self.log_std_range();
        self.flat[r].iter_mut().for_each(|x| *x = x.clamp(LOG_STD_MIN, LOG_STD_MAX));
    }

    pub fn is_finite(&self) -> bool {
        self.flat.iter().all(|x| x.is_finite())
    }

    pub(crate) fn actor_forward(&self, state: &[f64]) -> MlpCache {
        self.actor.forward(&self.flat[self.actor_range()], state)
    }

    pub(crate) fn critic_forward(&self, state: &[f64]) -> MlpCache {
        self.critic.forward(&self.flat[self.critic_range()], state)
    }

    pub fn value(&self, state: &[f64]) -> f64 {
        self.critic_forward(state).output()[0]
    }
}

/// Action distribution parameters and state value.
pub fn policy_eval(params: &PolicyParams, state: &[f64]) -> Result<PolicyEval, PpoError> {
    if state.len() != params.state_dim() {
        return Err(PpoError::Dimension(format!(
            "state of length {} for a network expecting {}",
            state.len(),
            params.state_dim()
        )));
    }
    Ok(PolicyEval {
        mean: params.actor_forward(state).output().to_vec(),
        log_std: params.log_std(),
        value: params.value(state),
    })
}

/// Log density of `action` under a diagonal Gaussian.
pub fn gaussian_log_prob(action: &[f64], mean: &[f64], log_std: &[f64]) -> f64 {
    let half_log_2pi = 0.5 * (2.0 * PI).ln();
    action
        .iter()
        .zip(mean)
        .zip(log_std)
        .map(|((a, m), ls)| {
            let z = (a - m) / ls.exp();
            -0.5 * z * z - ls - half_log_2pi
        })
        .sum()
}

/// Closed-form entropy `sum_i (log_std_i + 0.5 ln(2 pi e))`.
pub fn gaussian_entropy(log_std: &[f64]) -> f64 {
    let c = 0.5 * (2.0 * PI * E).ln();
    log_std.iter().map(|ls| ls + c).sum()
}

/// Draw (or take the mean of) the action distribution.
pub fn sample_action(mean: &[f64], log_std: &[f64], mode: ActionMode, rng: &mut impl Rng) -> (Vec<f64>, f64) {
    let log_std: Vec<f64> = log_std.iter().map(|x| x.clamp(LOG_STD_MIN, LOG_STD_MAX)).collect();
    let action: Vec<f64> = match mode {
        ActionMode::Deterministic => mean.to_vec(),
        ActionMode::Stochastic => mean
            .iter()
            .zip(&log_std)
            .map(|(m, ls)| {
                let eps: f64 = rng.sample(StandardNormal);
                m + ls.exp() * eps
            })
            .collect(),
    };
    let lp = gaussian_log_prob(&action, mean, &log_std);
    (action, lp)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::seed;

    #[test]
    fn zero_network() {
        let mut p = PolicyParams::zeros(6, 3, &[4, 4]);
        let r = p.log_std_range();
        p.flat[r].iter_mut().for_each(|x| *x = -0.5);
        let out = policy_eval(&p, &[0.3; 6]).unwrap();
        assert_eq!(out.mean, vec![0.0; 3]);
        assert_eq!(out.value, 0.0);
        assert_eq!(out.log_std, vec![-0.5; 3]);
        assert!(policy_eval(&p, &[0.0; 5]).is_err());
    }

    #[test]
    fn deterministic_log_prob_closed_form() {
        let mean = [0.2, -1.0, 3.0];
        let ls = [0.0, -0.7, 0.4];
        let (a, lp) = sample_action(&mean, &ls, ActionMode::Deterministic, &mut seed::rng(0));
        assert_eq!(a, mean.to_vec());
        let expected: f64 = -ls.iter().map(|l| l + 0.5 * (2.0 * PI).ln()).sum::<f64>();
        assert!((lp - expected).abs() < 1e-12);
    }

    #[test]
    fn seeded_sampling_and_vanishing_variance() {
        let mean = [0.5, -0.5];
        let a1 = sample_action(&mean, &[0.0, 0.0], ActionMode::Stochastic, &mut seed::rng(3));
        let a2 = sample_action(&mean, &[0.0, 0.0], ActionMode::Stochastic, &mut seed::rng(3));
        assert_eq!(a1, a2);
        let (a, _) = sample_action(&mean, &[-25.0, -20.0], ActionMode::Stochastic, &mut seed::rng(4));
        for (x, m) in a.iter().zip(mean) {
            assert!((x - m).abs() < 1e-6);
        }
    }

    #[test]
    fn entropy_closed_form() {
        // Entropy equals minus the expected log density; check via the
        // analytic expectation E[z^2] = 1.
        let ls = [0.3, -1.2];
        let expected: f64 = ls.iter().map(|l| l + 0.5 + 0.5 * (2.0 * PI).ln()).sum();
        assert!((gaussian_entropy(&ls) - expected).abs() < 1e-14);
    }

    #[test]
    fn critic_ignores_actor_weights() {
        let mut rng = seed::rng(9);
        let p = PolicyParams::new(5, 2, &[8, 8], &mut rng, 0.0);
        let s = [0.1, 0.2, -0.3, 0.4, 0.0];
        let v0 = policy_eval(&p, &s).unwrap().value;
        let mut q = p.clone();
        for k in q.actor_range() {
            q.flat[k] += 0.5;
        }
        let out = policy_eval(&q, &s).unwrap();
        assert_eq!(out.value, v0);
        assert_ne!(out.mean, policy_eval(&p, &s).unwrap().mean);
    }
}
