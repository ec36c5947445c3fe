//! The ten per-step player-experience metrics and their weights.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::design::{Compiled, GameDesign, Inventory, MechanicsError};

/// One of the ten metrics, in their fixed export order.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub enum Metric {
    GoalImportance,
    StateRepetition,
    StateNovelty,
    ActionRepetition,
    ActionNovelty,
    ResourceGains,
    ResourceLosses,
    RewardConsistency,
    Interactivity,
    Curiosity,
}

/// Whether a metric adds to or subtracts from the step reward.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Polarity {
    Reward,
    Penalty,
}

impl Polarity {
    pub fn sign(self) -> f64 {
        match self {
            Polarity::Reward => 1.0,
            Polarity::Penalty => -1.0,
        }
    }
}

impl Metric {
    pub const ALL: [Metric; 10] = [
        Metric::GoalImportance,
        Metric::StateRepetition,
        Metric::StateNovelty,
        Metric::ActionRepetition,
        Metric::ActionNovelty,
        Metric::ResourceGains,
        Metric::ResourceLosses,
        Metric::RewardConsistency,
        Metric::Interactivity,
        Metric::Curiosity,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Metric::GoalImportance => "goalImportance",
            Metric::StateRepetition => "stateRepetition",
            Metric::StateNovelty => "stateNovelty",
            Metric::ActionRepetition => "actionRepetition",
            Metric::ActionNovelty => "actionNovelty",
            Metric::ResourceGains => "resourceGains",
            Metric::ResourceLosses => "resourceLosses",
            Metric::RewardConsistency => "rewardConsistency",
            Metric::Interactivity => "interactivity",
            Metric::Curiosity => "curiosity",
        }
    }

    pub fn polarity(self) -> Polarity {
        match self {
            Metric::StateRepetition
            | Metric::ActionRepetition
            | Metric::ResourceLosses
            | Metric::RewardConsistency => Polarity::Penalty,
            _ => Polarity::Reward,
        }
    }

    pub fn index(self) -> usize {
        self as usize
    }
}

impl fmt::Display for Metric {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("unknown metric `{0}`")]
pub struct UnknownMetric(pub String);

impl FromStr for Metric {
    type Err = UnknownMetric;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Metric::ALL.into_iter().find(|m| m.name() == s).ok_or_else(|| UnknownMetric(s.to_string()))
    }
}

/// Scores of one play-through step.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields)]
pub struct MetricVector {
    pub goal_importance: f64,
    pub state_repetition: f64,
    pub state_novelty: f64,
    pub action_repetition: f64,
    pub action_novelty: f64,
    pub resource_gains: f64,
    pub resource_losses: f64,
    pub reward_consistency: f64,
    pub interactivity: f64,
    pub curiosity: f64,
}

impl MetricVector {
    pub fn to_array(&self) -> [f64; 10] {
        [
            self.goal_importance,
            self.state_repetition,
            self.state_novelty,
            self.action_repetition,
            self.action_novelty,
            self.resource_gains,
            self.resource_losses,
            self.reward_consistency,
            self.interactivity,
            self.curiosity,
        ]
    }

    pub fn from_array(v: [f64; 10]) -> Self {
        MetricVector {
            goal_importance: v[0],
            state_repetition: v[1],
            state_novelty: v[2],
            action_repetition: v[3],
            action_novelty: v[4],
            resource_gains: v[5],
            resource_losses: v[6],
            reward_consistency: v[7],
            interactivity: v[8],
            curiosity: v[9],
        }
    }

    pub fn get(&self, metric: Metric) -> f64 {
        self.to_array()[metric.index()]
    }

    /// Per-metric mean; all zeros for an empty slice.
    pub fn mean(vectors: &[MetricVector]) -> MetricVector {
        if vectors.is_empty() {
            return MetricVector::default();
        }
        let mut acc = [0.0; 10];
        for v in vectors {
            for (a, x) in acc.iter_mut().zip(v.to_array()) {
                *a += x;
            }
        }
        let n = vectors.len() as f64;
        MetricVector::from_array(acc.map(|a| a / n))
    }
}

/// One multiplier per metric. Missing entries default to 1; unknown metric
/// names are rejected when deserializing.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields, default)]
pub struct MetricWeights {
    pub goal_importance: f64,
    pub state_repetition: f64,
    pub state_novelty: f64,
    pub action_repetition: f64,
    pub action_novelty: f64,
    pub resource_gains: f64,
    pub resource_losses: f64,
    pub reward_consistency: f64,
    pub interactivity: f64,
    pub curiosity: f64,
}

impl Default for MetricWeights {
    fn default() -> Self {
        Self::uniform(1.0)
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum WeightError {
    #[error(transparent)]
    UnknownMetric(#[from] UnknownMetric),
    #[error("malformed weight `{0}` (expected metric=value)")]
    Malformed(String),
    #[error("weight for `{0}` must be finite")]
    NonFinite(String),
}

impl WeightError {
    pub fn code(&self) -> &'static str {
        match self {
            WeightError::UnknownMetric(_) => "UNKNOWN_METRIC",
            WeightError::Malformed(_) => "MALFORMED_WEIGHT",
            WeightError::NonFinite(_) => "NON_FINITE_WEIGHT",
        }
    }
}

impl MetricWeights {
    pub fn uniform(w: f64) -> Self {
        Self::from_array([w; 10])
    }

    pub fn to_array(&self) -> [f64; 10] {
        [
            self.goal_importance,
            self.state_repetition,
            self.state_novelty,
            self.action_repetition,
            self.action_novelty,
            self.resource_gains,
            self.resource_losses,
            self.reward_consistency,
            self.interactivity,
            self.curiosity,
        ]
    }

    pub fn from_array(v: [f64; 10]) -> Self {
        let m = MetricVector::from_array(v);
        MetricWeights {
            goal_importance: m.goal_importance,
            state_repetition: m.state_repetition,
            state_novelty: m.state_novelty,
            action_repetition: m.action_repetition,
            action_novelty: m.action_novelty,
            resource_gains: m.resource_gains,
            resource_losses: m.resource_losses,
            reward_consistency: m.reward_consistency,
            interactivity: m.interactivity,
            curiosity: m.curiosity,
        }
    }

    pub fn get(&self, metric: Metric) -> f64 {
        self.to_array()[metric.index()]
    }

    pub fn set(&mut self, metric: Metric, value: f64) {
        let mut a = self.to_array();
        a[metric.index()] = value;
        *self = Self::from_array(a);
    }

    pub fn with(mut self, metric: Metric, value: f64) -> Self {
        self.set(metric, value);
        self
    }

    /// Default weights overridden by `metric=value` pairs.
    pub fn from_overrides<S: AsRef<str>>(pairs: &[S]) -> Result<Self, WeightError> {
        let mut w = MetricWeights::default();
        for pair in pairs {
            let pair = pair.as_ref();
            let (name, value) =
                pair.split_once('=').ok_or_else(|| WeightError::Malformed(pair.to_string()))?;
            let metric: Metric = name.trim().parse()?;
            let value: f64 = value.trim().parse().map_err(|_| WeightError::Malformed(pair.to_string()))?;
            if !value.is_finite() {
                return Err(WeightError::NonFinite(name.to_string()));
            }
            w.set(metric, value);
        }
        Ok(w)
    }

    pub fn is_finite(&self) -> bool {
        self.to_array().iter().all(|w| w.is_finite())
    }
}

/// Weighted step reward: rewards add, penalties subtract.
pub fn step_reward(m: &MetricVector, w: &MetricWeights) -> f64 {
    Metric::ALL
        .iter()
        .zip(m.to_array().iter().zip(w.to_array()))
        .map(|(metric, (&score, weight))| metric.polarity().sign() * weight * score)
        .sum()
}

/// Sum of the most recent half (rounded down) of the reward history.
pub(crate) fn consistency(rewards: &[f64]) -> f64 {
    let n = rewards.len();
    rewards[n - n / 2..].iter().sum()
}

pub(crate) struct StepInputs<'a> {
    pub state: usize,
    pub arrived_by: Option<usize>,
    pub inventory: &'a [f64],
    pub gains: f64,
    pub losses: f64,
    /// Visits per state strictly before this arrival.
    pub visits: &'a [u32],
    /// Uses per action strictly before this step.
    pub uses: &'a [u32],
    pub rewards: &'a [f64],
}

pub(crate) fn step_metrics(c: &Compiled, x: &StepInputs<'_>) -> MetricVector {
    let prior_visits = x.visits[x.state];
    let (action_repetition, action_novelty) = match x.arrived_by {
        Some(a) => (x.uses[a] as f64, if x.uses[a] == 0 { 1.0 } else { 0.0 }),
        None => (0.0, 0.0),
    };
    let interactivity = c.edges[x.state].iter().filter(|&&(a, _)| c.affordable(a, x.inventory)).count();
    let mut unvisited: Vec<usize> =
        c.edges[x.state].iter().map(|&(_, to)| to).filter(|&to| to != x.state && x.visits[to] == 0).collect();
    unvisited.sort_unstable();
    unvisited.dedup();

    MetricVector {
        goal_importance: c.importance[x.state],
        state_repetition: prior_visits as f64,
        state_novelty: if prior_visits == 0 { 1.0 } else { 0.0 },
        action_repetition,
        action_novelty,
        resource_gains: x.gains,
        resource_losses: x.losses,
        reward_consistency: consistency(x.rewards),
        interactivity: interactivity as f64,
        curiosity: unvisited.len() as f64,
    }
}

/// History of a play-through up to (not including) the current arrival.
#[derive(Clone, Debug, Default)]
pub struct StepHistory {
    pub visit_counts: BTreeMap<String, u32>,
    pub action_counts: BTreeMap<String, u32>,
    pub rewards: Vec<f64>,
}

/// Metrics for arriving at `state` via `arrived_by` (None for the initial
/// placement). `inventory`, `gains` and `losses` are taken after the
/// arrival effects have fired.
pub fn compute_step_metrics(
    design: &GameDesign,
    state: &str,
    arrived_by: Option<&str>,
    inventory: &Inventory,
    gains: f64,
    losses: f64,
    history: &StepHistory,
) -> Result<MetricVector, MechanicsError> {
    let c = Compiled::new(design).map_err(MechanicsError::InvalidDesign)?;
    let s = c.state_index(state).ok_or_else(|| MechanicsError::UnknownState(state.to_string()))?;
    let a = arrived_by
        .map(|a| c.action_index(a).ok_or_else(|| MechanicsError::UnknownAction(a.to_string())))
        .transpose()?;
    let dense: Vec<f64> = c.resource_ids.iter().map(|r| inventory.get(r)).collect();
    let visits: Vec<u32> =
        c.state_ids.iter().map(|id| history.visit_counts.get(id).copied().unwrap_or(0)).collect();
    let uses: Vec<u32> =
        c.action_ids.iter().map(|id| history.action_counts.get(id).copied().unwrap_or(0)).collect();
    Ok(step_metrics(
        &c,
        &StepInputs {
            state: s,
            arrived_by: a,
            inventory: &dense,
            gains,
            losses,
            visits: &visits,
            uses: &uses,
            rewards: &history.rewards,
        },
    ))
}
