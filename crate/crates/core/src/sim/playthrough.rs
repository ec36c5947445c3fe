use std::collections::{BTreeMap, HashMap};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::metrics::{step_metrics, step_reward, MetricVector, MetricWeights, StepInputs};
use super::qlearn::{select_action, QTable};
use super::SimError;
use crate::design::{Compiled, GameDesign};

/// Weighted step rewards are saturated to this magnitude. A strongly
/// negative consistency weight feeds each reward back into the next one and
/// would otherwise overflow to infinity on long play-throughs.
pub const REWARD_LIMIT: f64 = 1e100;

/// Agent hyperparameters and horizon for one play-through.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields, default)]
pub struct SimConfig {
    /// Number of actions (epochs) after which the play-through stops.
    pub max_epochs: u32,
    pub learning_rate: f64,
    pub discount: f64,
    pub exploration_start: f64,
    /// Multiplicative per-step decay of the exploration rate.
    pub exploration_decay: f64,
    pub exploration_floor: f64,
    /// Arrivals (including the initial placement) needed to count as playable.
    pub min_playable_steps: u32,
    pub seed: u64,
}

impl Default for SimConfig {
    fn default() -> Self {
        SimConfig {
            max_epochs: 1000,
            learning_rate: 0.1,
            discount: 0.9,
            exploration_start: 0.3,
            exploration_decay: 0.995,
            exploration_floor: 0.01,
            min_playable_steps: 2,
            seed: 0,
        }
    }
}

impl SimConfig {
    /// Horizon used by the design-space studies: short play-throughs, so the
    /// per-step means describe the opening of a game.
    pub const STUDY_EPOCHS: u32 = 12;

    pub fn study() -> Self {
        SimConfig { max_epochs: Self::STUDY_EPOCHS, ..Self::default() }
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn check(&self) -> Result<(), SimError> {
        let bad = |what: &str| Err(SimError::InvalidConfig(what.to_string()));
        if self.max_epochs == 0 {
            return bad("maxEpochs must be positive");
        }
        if !(self.learning_rate > 0.0 && self.learning_rate <= 1.0) {
            return bad("learningRate must be in (0, 1]");
        }
        if !(0.0..1.0).contains(&self.discount) {
            return bad("discount must be in [0, 1)");
        }
        if !(0.0..=1.0).contains(&self.exploration_start) {
            return bad("explorationStart must be in [0, 1]");
        }
        if !(self.exploration_decay > 0.0 && self.exploration_decay <= 1.0) {
            return bad("explorationDecay must be in (0, 1]");
        }
        if !(0.0..=1.0).contains(&self.exploration_floor) {
            return bad("explorationFloor must be in [0, 1]");
        }
        if self.min_playable_steps == 0 {
            return bad("minPlayableSteps must be positive");
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub enum TerminationReason {
    MaxEpochs,
    NoValidActions,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct ResourceTotals {
    /// Added by taps and converters.
    pub gained: f64,
    /// Removed by drains and converters.
    pub lost: f64,
    /// Paid as action costs.
    pub spent: f64,
}

/// Everything observed during one simulated play-through.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct PlaythroughReport {
    pub state_path: Vec<String>,
    pub actions_taken: Vec<String>,
    pub state_counts: BTreeMap<String, u32>,
    pub action_counts: BTreeMap<String, u32>,
    pub resource_totals: BTreeMap<String, ResourceTotals>,
    pub per_step_metrics: Vec<MetricVector>,
    pub per_step_rewards: Vec<f64>,
    pub total_reward: f64,
    pub mean_metrics: MetricVector,
    pub termination_reason: TerminationReason,
    pub playable: bool,
}

/// Read-only view of the player after each arrival.
pub struct StepView<'a> {
    pub step: usize,
    pub state: &'a str,
    pub resource_ids: &'a [String],
    pub amounts: &'a [f64],
    pub capacities: &'a [f64],
}

pub(crate) struct Trace {
    pub states: Vec<usize>,
    pub actions: Vec<usize>,
    pub metrics: Vec<MetricVector>,
    pub rewards: Vec<f64>,
    pub gained: Vec<f64>,
    pub lost: Vec<f64>,
    pub spent: Vec<f64>,
    pub termination: TerminationReason,
}

pub(crate) struct RunParams<'a> {
    pub weights: &'a MetricWeights,
    pub horizon: u32,
    pub epsilon: f64,
    pub decay: f64,
    pub floor: f64,
    /// None disables learning.
    pub learning: Option<(f64, f64)>,
}

/// Plays one episode from the start state with an all-zero inventory.
/// Returns the trace and the exploration rate reached at its end.
pub(crate) fn run_episode(
    c: &Compiled,
    q: &mut QTable,
    p: &RunParams<'_>,
    keys: &mut dyn QKey,
    rng: &mut ChaCha8Rng,
    mut observe: impl FnMut(&StepView<'_>),
) -> (Trace, f64) {
    let n_res = c.resource_ids.len();
    let mut inv = vec![0.0; n_res];
    let mut visits = vec![0u32; c.state_ids.len()];
    let mut uses = vec![0u32; c.action_ids.len()];
    let mut t = Trace {
        states: Vec::new(),
        actions: Vec::new(),
        metrics: Vec::new(),
        rewards: Vec::new(),
        gained: vec![0.0; n_res],
        lost: vec![0.0; n_res],
        spent: vec![0.0; n_res],
        termination: TerminationReason::MaxEpochs,
    };
    let mut epsilon = p.epsilon;
    let mut valid = Vec::new();
    let mut valid_next = Vec::new();
    let mut q_row = Vec::new();

    let mut state = c.start;
    let mut arrived_by = None;
    let mut prev_key = 0;
    loop {
        let cur_key = keys.key(state, &t.actions);
        q.ensure_rows(cur_key + 1);
        let (gains, losses) = c.arrive_tracked(state, &mut inv, Some((&mut t.gained, &mut t.lost)));
        observe(&StepView {
            step: t.states.len(),
            state: &c.state_ids[state],
            resource_ids: &c.resource_ids,
            amounts: &inv,
            capacities: &c.capacity,
        });
        let m = step_metrics(
            c,
            &StepInputs {
                state,
                arrived_by,
                inventory: &inv,
                gains,
                losses,
                visits: &visits,
                uses: &uses,
                rewards: &t.rewards,
            },
        );
        let reward = step_reward(&m, p.weights).clamp(-REWARD_LIMIT, REWARD_LIMIT);
        visits[state] += 1;
        if let Some(a) = arrived_by {
            uses[a] += 1;
        }
        t.states.push(state);
        t.metrics.push(m);
        t.rewards.push(reward);

        if let (Some((alpha, gamma)), Some(_), Some(&a)) =
            (p.learning, t.states.iter().rev().nth(1), t.actions.last())
        {
            c.available_into(state, &inv, &mut valid_next);
            q.update(prev_key, a, reward, cur_key, valid_next.iter().map(|&(a, _)| a), alpha, gamma);
        }
        prev_key = cur_key;

        if t.actions.len() >= p.horizon as usize {
            t.termination = TerminationReason::MaxEpochs;
            break;
        }
        c.available_into(state, &inv, &mut valid);
        if valid.is_empty() {
            t.termination = TerminationReason::NoValidActions;
            break;
        }
        q_row.clear();
        q_row.extend(valid.iter().map(|&(a, _)| q.get(cur_key, a)));
        let pick = select_action(&q_row, epsilon, rng).expect("valid is non-empty");
        let (action, next) = valid[pick];
        for &(r, amount) in &c.costs[action] {
            t.spent[r] += amount.min(inv[r]);
        }
        c.pay(action, &mut inv);
        t.actions.push(action);
        epsilon = (epsilon * p.decay).max(p.floor);
        arrived_by = Some(action);
        state = next;
    }
    (t, epsilon)
}

impl PlaythroughReport {
    pub(crate) fn from_trace(c: &Compiled, t: Trace, min_playable_steps: u32) -> Self {
        let mut state_counts: BTreeMap<String, u32> = BTreeMap::new();
        for &s in &t.states {
            *state_counts.entry(c.state_ids[s].clone()).or_default() += 1;
        }
        let mut action_counts: BTreeMap<String, u32> = BTreeMap::new();
        for &a in &t.actions {
            *action_counts.entry(c.action_ids[a].clone()).or_default() += 1;
        }
        let resource_totals = c
            .resource_ids
            .iter()
            .enumerate()
            .map(|(i, id)| {
                (id.clone(), ResourceTotals { gained: t.gained[i], lost: t.lost[i], spent: t.spent[i] })
            })
            .collect();
        let total_reward = t.rewards.iter().sum::<f64>();
        PlaythroughReport {
            state_path: t.states.iter().map(|&s| c.state_ids[s].clone()).collect(),
            actions_taken: t.actions.iter().map(|&a| c.action_ids[a].clone()).collect(),
            state_counts,
            action_counts,
            resource_totals,
            mean_metrics: MetricVector::mean(&t.metrics),
            per_step_metrics: t.metrics,
            per_step_rewards: t.rewards,
            total_reward,
            termination_reason: t.termination,
            playable: t.actions.len() + 1 >= min_playable_steps as usize,
        }
    }
}

pub(crate) fn simulate_compiled(
    c: &Compiled,
    w: &MetricWeights,
    cfg: &SimConfig,
    observe: impl FnMut(&StepView<'_>),
) -> PlaythroughReport {
    let mut q = QTable::new(c.state_ids.len(), c.action_ids.len());
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let params = RunParams {
        weights: w,
        horizon: cfg.max_epochs,
        epsilon: cfg.exploration_start,
        decay: cfg.exploration_decay,
        floor: cfg.exploration_floor,
        learning: Some((cfg.learning_rate, cfg.discount)),
    };
    let (trace, _) = run_episode(c, &mut q, &params, &mut StateKey, &mut rng, observe);
    PlaythroughReport::from_trace(c, trace, cfg.min_playable_steps)
}

pub(crate) fn prepare(design: &GameDesign, w: &MetricWeights, cfg: &SimConfig) -> Result<Compiled, SimError> {
    cfg.check()?;
    if !w.is_finite() {
        return Err(SimError::InvalidWeights);
    }
    Compiled::new(design).map_err(SimError::InvalidDesign)
}

/// One continuous learning play-through of `design`.
///
/// The agent starts at the start state with an empty inventory and learns
/// online: every arrival is scored, and the weighted score is both recorded
/// and used as the Q-learning reward. The run ends after `max_epochs`
/// actions or when no action is available.
pub fn simulate(
    design: &GameDesign,
    w: &MetricWeights,
    cfg: &SimConfig,
) -> Result<PlaythroughReport, SimError> {
    let c = prepare(design, w, cfg)?;
    Ok(simulate_compiled(&c, w, cfg, |_| {}))
}

/// Like [`simulate`], calling `observe` after every arrival.
pub fn simulate_observed(
    design: &GameDesign,
    w: &MetricWeights,
    cfg: &SimConfig,
    observe: impl FnMut(&StepView<'_>),
) -> Result<PlaythroughReport, SimError> {
    let c = prepare(design, w, cfg)?;
    Ok(simulate_compiled(&c, w, cfg, observe))
}

/// Maps the agent's situation to a Q-table row.
pub(crate) trait QKey {
    fn key(&mut self, state: usize, actions_so_far: &[usize]) -> usize;
}

/// One row per game state.
pub(crate) struct StateKey;

impl QKey for StateKey {
    fn key(&mut self, state: usize, _: &[usize]) -> usize {
        state
    }
}

/// One row per distinct action history since the episode start. Transitions
/// are deterministic and the start is fixed, so the history determines the
/// state, the inventory and every metric.
#[derive(Default)]
pub(crate) struct HistoryKey {
    rows: HashMap<Vec<usize>, usize>,
}

impl QKey for HistoryKey {
    fn key(&mut self, _: usize, actions_so_far: &[usize]) -> usize {
        let next = self.rows.len();
        *self.rows.entry(actions_so_far.to_vec()).or_insert(next)
    }
}

/// How a [`TrainedPolicy`] indexes its Q-table.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub enum PolicyKey {
    /// Game state id only, as in [`simulate`].
    State,
    /// Full action history; exact for short finite-horizon episodes.
    History,
}

enum Keys {
    State(StateKey),
    History(HistoryKey),
}

impl Keys {
    fn as_dyn(&mut self) -> &mut dyn QKey {
        match self {
            Keys::State(k) => k,
            Keys::History(k) => k,
        }
    }
}

/// A Q-table trained over repeated finite-horizon episodes.
pub struct TrainedPolicy {
    compiled: Compiled,
    q: QTable,
    keys: Keys,
    weights: MetricWeights,
    seed: u64,
}

impl TrainedPolicy {
    /// Trains for `episodes` episodes of `cfg.max_epochs` actions each,
    /// restarting from the start state every episode and keeping the table.
    /// Exploration decays across episodes as configured.
    pub fn train(
        design: &GameDesign,
        w: &MetricWeights,
        cfg: &SimConfig,
        key: PolicyKey,
        episodes: usize,
    ) -> Result<Self, SimError> {
        let compiled = prepare(design, w, cfg)?;
        let mut q = QTable::new(0, compiled.action_ids.len());
        let mut keys = match key {
            PolicyKey::State => Keys::State(StateKey),
            PolicyKey::History => Keys::History(HistoryKey::default()),
        };
        let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
        let mut epsilon = cfg.exploration_start;
        for _ in 0..episodes {
            let params = RunParams {
                weights: w,
                horizon: cfg.max_epochs,
                epsilon,
                decay: cfg.exploration_decay,
                floor: cfg.exploration_floor,
                learning: Some((cfg.learning_rate, cfg.discount)),
            };
            let (_, eps) = run_episode(&compiled, &mut q, &params, keys.as_dyn(), &mut rng, |_| {});
            epsilon = eps;
        }
        Ok(TrainedPolicy { compiled, q, keys, weights: *w, seed: cfg.seed })
    }

    /// Follows the table greedily for `horizon` actions, with no exploration
    /// and no learning.
    pub fn greedy_rollout(&mut self, horizon: u32) -> PlaythroughReport {
        let mut q = self.q.clone();
        let mut rng = ChaCha8Rng::seed_from_u64(crate::seeds::mix(self.seed));
        let params = RunParams {
            weights: &self.weights,
            horizon,
            epsilon: 0.0,
            decay: 1.0,
            floor: 0.0,
            learning: None,
        };
        let (trace, _) = run_episode(&self.compiled, &mut q, &params, self.keys.as_dyn(), &mut rng, |_| {});
        PlaythroughReport::from_trace(&self.compiled, trace, 1)
    }
}
