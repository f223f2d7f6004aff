//! Generalized advantage estimation.

use super::PpoError;

/// Advantages and value targets for one trajectory segment.
///
/// `delta_t = r_t + gamma * V_{t+1} - V_t` with `V_T = terminal_value`, and
/// `A_t = delta_t + gamma * lambda * A_{t+1}`. Value targets are `A_t + V_t`.
pub fn compute_gae(
    rewards: &[f64],
    values: &[f64],
    terminal_value: f64,
    gamma: f64,
    lambda: f64,
) -> Result<(Vec<f64>, Vec<f64>), PpoError> {
    let dones = vec![false; rewards.len()];
    compute_gae_with_dones(rewards, values, &dones, terminal_value, gamma, lambda)
}

/// GAE over a buffer that may span several episodes. `dones[t]` marks that
/// the episode ended after step `t`; no value is bootstrapped across it.
/// `last_value` bootstraps the final step when it is not terminal.
pub fn compute_gae_with_dones(
    rewards: &[f64],
    values: &[f64],
    dones: &[bool],
    last_value: f64,
    gamma: f64,
    lambda: f64,
) -> Result<(Vec<f64>, Vec<f64>), PpoError> {
    let n = rewards.len();
    if values.len() != n || dones.len() != n {
        return Err(PpoError::Dimension(format!(
            "{} rewards, {} values, {} done flags",
            n,
            values.len(),
            dones.len()
        )));
    }
    let mut adv = vec![0.0; n];
    let mut next_adv = 0.0;
    let mut next_value = last_value;
    for t in (0..n).rev() {
        let live = if dones[t] { 0.0 } else { 1.0 };
        let delta = rewards[t] + gamma * next_value * live - values[t];
        next_adv = delta + gamma * lambda * live * next_adv;
        adv[t] = next_adv;
        next_value = values[t];
    }
    let targets = adv.iter().zip(values).map(|(a, v)| a + v).collect();
    Ok((adv, targets))
}
