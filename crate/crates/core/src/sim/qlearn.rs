//! Tabular Q-learning with epsilon-greedy exploration.

use rand::Rng;

use super::SimError;

/// Dense Q-table indexed by `[state][action]`, initialised to zero.
#[derive(Clone, Debug, PartialEq)]
pub struct QTable {
    n_actions: usize,
    values: Vec<f64>,
}

impl QTable {
    pub fn new(n_states: usize, n_actions: usize) -> Self {
        QTable { n_actions, values: vec![0.0; n_states * n_actions] }
    }

    /// Grows the table with zero rows until it has at least `n_rows`.
    pub fn ensure_rows(&mut self, n_rows: usize) {
        let len = n_rows * self.n_actions;
        if self.values.len() < len {
            self.values.resize(len, 0.0);
        }
    }

    pub fn get(&self, state: usize, action: usize) -> f64 {
        self.values[state * self.n_actions + action]
    }

    pub fn set(&mut self, state: usize, action: usize, value: f64) {
        self.values[state * self.n_actions + action] = value;
    }

    /// Applies one Q-learning update for `(state, action)` given the actions
    /// valid from `next`.
    #[allow(clippy::too_many_arguments)]
    pub fn update(
        &mut self,
        state: usize,
        action: usize,
        reward: f64,
        next: usize,
        valid_next: impl IntoIterator<Item = usize>,
        alpha: f64,
        gamma: f64,
    ) {
        let next_values: Vec<f64> = valid_next.into_iter().map(|a| self.get(next, a)).collect();
        let updated = q_update(self.get(state, action), reward, &next_values, alpha, gamma);
        self.set(state, action, updated);
    }
}

/// `q + alpha * (reward + gamma * max(next) - q)`, where the max over no
/// valid next actions is 0.
pub fn q_update(q: f64, reward: f64, next_values: &[f64], alpha: f64, gamma: f64) -> f64 {
    let best_next = next_values.iter().copied().reduce(f64::max).unwrap_or(0.0);
    q + alpha * (reward + gamma * best_next - q)
}

/// Picks an index into `q_values` (the Q-values of the valid actions).
///
/// With probability `epsilon` the pick is uniform; otherwise it is the
/// argmax, with ties broken uniformly.
pub fn select_action<R: Rng + ?Sized>(
    q_values: &[f64],
    epsilon: f64,
    rng: &mut R,
) -> Result<usize, SimError> {
    if q_values.is_empty() {
        return Err(SimError::NoValidActions);
    }
    if rng.random::<f64>() < epsilon {
        return Ok(rng.random_range(0..q_values.len()));
    }
    let best = q_values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let ties: Vec<usize> = (0..q_values.len()).filter(|&i| q_values[i] == best).collect();
    Ok(if ties.len() == 1 { ties[0] } else { ties[rng.random_range(0..ties.len())] })
}
