use std::collections::BTreeSet;

use rand::seq::index::sample as sample_indices;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::design::{
    ActionDef, Category, ConverterDef, Cost, FlowDef, GameDesign, ResourceDef, StateDef, TransitionDef,
};

/// Upper bounds on component counts and value ranges for sampled designs.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields, default)]
pub struct SamplerCaps {
    pub max_states: usize,
    pub max_actions: usize,
    pub max_resources: usize,
    pub max_transitions: usize,
    pub max_taps: usize,
    pub max_drains: usize,
    pub max_converters: usize,
    /// Most cost entries a sampled action carries.
    pub max_costs_per_action: usize,
    pub amount_range: (f64, f64),
    pub capacity_range: (f64, f64),
    pub importance_range: (u32, u32),
}

impl Default for SamplerCaps {
    fn default() -> Self {
        SamplerCaps {
            max_states: 10,
            max_actions: 8,
            max_resources: 5,
            max_transitions: 20,
            max_taps: 5,
            max_drains: 5,
            max_converters: 5,
            max_costs_per_action: 2,
            amount_range: (0.0, 20.0),
            capacity_range: (1.0, 100.0),
            importance_range: (0, 5),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("invalid sampler caps: {0}")]
pub struct CapsError(pub String);

impl SamplerCaps {
    pub fn uniform(max: usize) -> Self {
        SamplerCaps {
            max_states: max,
            max_actions: max,
            max_resources: max,
            max_transitions: max,
            max_taps: max,
            max_drains: max,
            max_converters: max,
            ..Self::default()
        }
    }

    pub fn check(&self) -> Result<(), CapsError> {
        for (name, v) in [
            ("maxStates", self.max_states),
            ("maxActions", self.max_actions),
            ("maxResources", self.max_resources),
            ("maxTransitions", self.max_transitions),
            ("maxTaps", self.max_taps),
            ("maxDrains", self.max_drains),
            ("maxConverters", self.max_converters),
        ] {
            if v == 0 {
                return Err(CapsError(format!("{name} must be at least 1")));
            }
        }
        let (lo, hi) = self.amount_range;
        if !(lo.is_finite() && hi.is_finite() && 0.0 <= lo && lo <= hi) {
            return Err(CapsError("amountRange must be a non-empty non-negative range".into()));
        }
        let (lo, hi) = self.capacity_range;
        if !(lo.is_finite() && hi.is_finite() && 0.0 <= lo && lo <= hi) {
            return Err(CapsError("capacityRange must be a non-empty non-negative range".into()));
        }
        if self.importance_range.0 > self.importance_range.1 {
            return Err(CapsError("importanceRange must be non-empty".into()));
        }
        Ok(())
    }

    pub fn cap(&self, category: Category) -> usize {
        match category {
            Category::Resources => self.max_resources,
            Category::Actions => self.max_actions,
            Category::States => self.max_states,
            Category::Transitions => self.max_transitions,
            Category::Taps => self.max_taps,
            Category::Drains => self.max_drains,
            Category::Converters => self.max_converters,
        }
    }
}

pub(crate) fn round1(x: f64) -> f64 {
    (x * 10.0).round() / 10.0
}

pub(crate) fn sample_range<R: Rng + ?Sized>(rng: &mut R, (lo, hi): (f64, f64)) -> f64 {
    if lo == hi {
        lo
    } else {
        round1(rng.random_range(lo..=hi)).clamp(lo, hi)
    }
}

pub(crate) fn sample_amount<R: Rng + ?Sized>(caps: &SamplerCaps, rng: &mut R) -> f64 {
    sample_range(rng, caps.amount_range)
}

pub(crate) fn sample_capacity<R: Rng + ?Sized>(caps: &SamplerCaps, rng: &mut R) -> f64 {
    sample_range(rng, caps.capacity_range)
}

pub(crate) fn sample_importance<R: Rng + ?Sized>(caps: &SamplerCaps, rng: &mut R) -> f64 {
    let (lo, hi) = caps.importance_range;
    rng.random_range(lo..=hi) as f64
}

pub(crate) fn sample_costs<R: Rng + ?Sized>(
    caps: &SamplerCaps,
    resources: &[ResourceDef],
    rng: &mut R,
) -> Vec<Cost> {
    let most = caps.max_costs_per_action.min(resources.len());
    let n = rng.random_range(0..=most);
    let mut picked = sample_indices(rng, resources.len(), n).into_vec();
    picked.sort_unstable();
    picked
        .into_iter()
        .map(|i| Cost { resource: resources[i].id.clone(), amount: sample_amount(caps, rng) })
        .collect()
}

pub(crate) fn pick<'a, T, R: Rng + ?Sized>(items: &'a [T], rng: &mut R) -> &'a T {
    &items[rng.random_range(0..items.len())]
}

/// Draws a random valid design: node counts uniform in `[1, cap]`,
/// attachment and transition counts uniform in `[0, cap]`, references
/// uniform over existing components.
pub fn sample_random_design<R: Rng + ?Sized>(caps: &SamplerCaps, rng: &mut R) -> GameDesign {
    let n_res = rng.random_range(1..=caps.max_resources);
    let n_act = rng.random_range(1..=caps.max_actions);
    let n_states = rng.random_range(1..=caps.max_states);

    let resources: Vec<ResourceDef> = (0..n_res)
        .map(|i| ResourceDef { id: format!("res{i}"), capacity: sample_capacity(caps, rng) })
        .collect();
    let actions: Vec<ActionDef> = (0..n_act)
        .map(|i| ActionDef { id: format!("act{i}"), costs: sample_costs(caps, &resources, rng) })
        .collect();
    let states: Vec<StateDef> = (0..n_states)
        .map(|i| StateDef { id: format!("state{i}"), importance: sample_importance(caps, rng) })
        .collect();
    let start_state = pick(&states, rng).id.clone();

    // Distinct (from, action) slots keep the transition function deterministic.
    let slots = n_states * n_act;
    let n_trans = rng.random_range(0..=caps.max_transitions.min(slots));
    let mut chosen = sample_indices(rng, slots, n_trans).into_vec();
    chosen.sort_unstable();
    let transitions = chosen
        .into_iter()
        .map(|slot| TransitionDef {
            from: states[slot / n_act].id.clone(),
            action: actions[slot % n_act].id.clone(),
            to: pick(&states, rng).id.clone(),
        })
        .collect();

    let flows = |cap: usize, rng: &mut R| -> Vec<FlowDef> {
        let n = rng.random_range(0..=cap);
        (0..n)
            .map(|_| FlowDef {
                state: pick(&states, rng).id.clone(),
                resource: pick(&resources, rng).id.clone(),
                amount: sample_amount(caps, rng),
            })
            .collect()
    };
    let taps = flows(caps.max_taps, rng);
    let drains = flows(caps.max_drains, rng);

    let converters = if n_res >= 2 {
        let n = rng.random_range(0..=caps.max_converters);
        (0..n).map(|_| sample_converter(caps, &states, &resources, rng)).collect()
    } else {
        Vec::new()
    };

    GameDesign {
        name: "random".into(),
        resources,
        actions,
        states,
        start_state,
        transitions,
        taps,
        drains,
        converters,
    }
}

pub(crate) fn sample_converter<R: Rng + ?Sized>(
    caps: &SamplerCaps,
    states: &[StateDef],
    resources: &[ResourceDef],
    rng: &mut R,
) -> ConverterDef {
    let pair = sample_indices(rng, resources.len(), 2).into_vec();
    ConverterDef {
        state: pick(states, rng).id.clone(),
        from_resource: resources[pair[0]].id.clone(),
        from_amount: sample_amount(caps, rng),
        to_resource: resources[pair[1]].id.clone(),
        to_amount: sample_amount(caps, rng),
    }
}

/// First id of the form `{prefix}{n}` not already in `taken`.
pub(crate) fn fresh_id<'a>(prefix: &str, taken: impl Iterator<Item = &'a str>) -> String {
    let taken: BTreeSet<&str> = taken.collect();
    (0..).map(|n| format!("{prefix}{n}")).find(|id| !taken.contains(id.as_str())).expect("unbounded search")
}
