//! Resource-flow rules: action costs and arrival effects.
//!
//! The string-keyed functions at the bottom of this file are thin wrappers
//! over [`Compiled`], the index-based form the simulator runs on.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::{validate_design, GameDesign, ValidationReport};

#[derive(Debug, Clone, thiserror::Error)]
pub enum MechanicsError {
    #[error("unknown state `{0}`")]
    UnknownState(String),
    #[error("unknown action `{0}`")]
    UnknownAction(String),
    #[error("action `{0}` is not affordable with the current inventory")]
    Unaffordable(String),
    #[error("inventory does not fit the design: {0}")]
    InvalidInventory(String),
    #[error("design is invalid")]
    InvalidDesign(ValidationReport),
}

impl MechanicsError {
    pub fn code(&self) -> &'static str {
        match self {
            MechanicsError::UnknownState(_) => "UNKNOWN_STATE",
            MechanicsError::UnknownAction(_) => "UNKNOWN_ACTION",
            MechanicsError::Unaffordable(_) => "UNAFFORDABLE",
            MechanicsError::InvalidInventory(_) => "INVALID_INVENTORY",
            MechanicsError::InvalidDesign(_) => "INVALID_DESIGN",
        }
    }
}

#[derive(Clone, Copy, Debug)]
pub(crate) struct Converter {
    pub from: usize,
    pub from_amount: f64,
    pub to: usize,
    pub to_amount: f64,
}

/// A validated design resolved to dense indices. Every list is in canonical
/// (id-sorted) order, so index order is id order.
#[derive(Clone, Debug)]
pub(crate) struct Compiled {
    pub resource_ids: Vec<String>,
    pub capacity: Vec<f64>,
    pub action_ids: Vec<String>,
    pub costs: Vec<Vec<(usize, f64)>>,
    pub state_ids: Vec<String>,
    pub importance: Vec<f64>,
    pub start: usize,
    /// Outgoing `(action, target)` edges per state, sorted by action.
    pub edges: Vec<Vec<(usize, usize)>>,
    pub taps: Vec<Vec<(usize, f64)>>,
    pub drains: Vec<Vec<(usize, f64)>>,
    pub converters: Vec<Vec<Converter>>,
}

fn index_of(ids: &[String], id: &str) -> usize {
    ids.binary_search_by(|x| x.as_str().cmp(id)).expect("reference resolved by validation")
}

impl Compiled {
    pub fn new(design: &GameDesign) -> Result<Self, ValidationReport> {
        let report = validate_design(design);
        if !report.valid {
            return Err(report);
        }
        let d = design.canonicalized();
        let resource_ids: Vec<String> = d.resources.iter().map(|r| r.id.clone()).collect();
        let action_ids: Vec<String> = d.actions.iter().map(|a| a.id.clone()).collect();
        let state_ids: Vec<String> = d.states.iter().map(|s| s.id.clone()).collect();
        let n_states = state_ids.len();

        let costs = d
            .actions
            .iter()
            .map(|a| a.costs.iter().map(|c| (index_of(&resource_ids, &c.resource), c.amount)).collect())
            .collect();

        let mut edges = vec![Vec::new(); n_states];
        for t in &d.transitions {
            edges[index_of(&state_ids, &t.from)]
                .push((index_of(&action_ids, &t.action), index_of(&state_ids, &t.to)));
        }
        for e in &mut edges {
            e.sort_unstable();
        }

        let mut taps = vec![Vec::new(); n_states];
        for t in &d.taps {
            taps[index_of(&state_ids, &t.state)].push((index_of(&resource_ids, &t.resource), t.amount));
        }
        let mut drains = vec![Vec::new(); n_states];
        for t in &d.drains {
            drains[index_of(&state_ids, &t.state)].push((index_of(&resource_ids, &t.resource), t.amount));
        }
        let mut converters = vec![Vec::new(); n_states];
        for c in &d.converters {
            converters[index_of(&state_ids, &c.state)].push(Converter {
                from: index_of(&resource_ids, &c.from_resource),
                from_amount: c.from_amount,
                to: index_of(&resource_ids, &c.to_resource),
                to_amount: c.to_amount,
            });
        }

        Ok(Compiled {
            capacity: d.resources.iter().map(|r| r.capacity).collect(),
            importance: d.states.iter().map(|s| s.importance).collect(),
            start: index_of(&state_ids, &d.start_state),
            resource_ids,
            action_ids,
            costs,
            state_ids,
            edges,
            taps,
            drains,
            converters,
        })
    }

    pub fn state_index(&self, id: &str) -> Option<usize> {
        self.state_ids.binary_search_by(|x| x.as_str().cmp(id)).ok()
    }

    pub fn action_index(&self, id: &str) -> Option<usize> {
        self.action_ids.binary_search_by(|x| x.as_str().cmp(id)).ok()
    }

    pub fn affordable(&self, action: usize, inv: &[f64]) -> bool {
        self.costs[action].iter().all(|&(r, amount)| inv[r] >= amount)
    }

    /// Affordable outgoing edges of `state`, in action order.
    pub fn available_into(&self, state: usize, inv: &[f64], out: &mut Vec<(usize, usize)>) {
        out.clear();
        out.extend(self.edges[state].iter().copied().filter(|&(a, _)| self.affordable(a, inv)));
    }

    pub fn pay(&self, action: usize, inv: &mut [f64]) {
        for &(r, amount) in &self.costs[action] {
            inv[r] = (inv[r] - amount).max(0.0);
        }
    }

    /// Fires taps, then drains, then converters attached to `state`.
    /// Returns the actual (post-clamp) amounts gained and lost.
    pub fn arrive(&self, state: usize, inv: &mut [f64]) -> (f64, f64) {
        self.arrive_tracked(state, inv, None)
    }

    /// [`Compiled::arrive`], also accumulating per-resource `(gained, lost)`.
    pub fn arrive_tracked(
        &self,
        state: usize,
        inv: &mut [f64],
        mut per_resource: Option<(&mut [f64], &mut [f64])>,
    ) -> (f64, f64) {
        let mut gains = 0.0;
        let mut losses = 0.0;
        let mut record = |r: usize, gain: f64, loss: f64| {
            gains += gain;
            losses += loss;
            if let Some((g, l)) = per_resource.as_mut() {
                g[r] += gain;
                l[r] += loss;
            }
        };
        for &(r, amount) in &self.taps[state] {
            let gain = self.add(r, amount, inv);
            record(r, gain, 0.0);
        }
        for &(r, amount) in &self.drains[state] {
            let before = inv[r];
            inv[r] = (before - amount.min(before)).max(0.0);
            record(r, 0.0, before - inv[r]);
        }
        for c in &self.converters[state] {
            if inv[c.from] >= c.from_amount {
                let before = inv[c.from];
                inv[c.from] = (before - c.from_amount).max(0.0);
                record(c.from, 0.0, before - inv[c.from]);
                let gain = self.add(c.to, c.to_amount, inv);
                record(c.to, gain, 0.0);
            }
        }
        (gains, losses)
    }

    fn add(&self, r: usize, amount: f64, inv: &mut [f64]) -> f64 {
        let before = inv[r];
        let headroom = (self.capacity[r] - before).max(0.0);
        inv[r] = (before + amount.min(headroom)).min(self.capacity[r]);
        inv[r] - before
    }
}

/// Resource amounts carried by the player, one entry per design resource.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Inventory {
    pub amounts: BTreeMap<String, f64>,
}

impl Inventory {
    /// The all-zero inventory every play-through starts with.
    pub fn empty(design: &GameDesign) -> Self {
        Inventory { amounts: design.resources.iter().map(|r| (r.id.clone(), 0.0)).collect() }
    }

    pub fn get(&self, resource: &str) -> f64 {
        self.amounts.get(resource).copied().unwrap_or(0.0)
    }

    pub fn with(mut self, resource: &str, amount: f64) -> Self {
        self.amounts.insert(resource.to_string(), amount);
        self
    }

    fn to_dense(&self, c: &Compiled) -> Result<Vec<f64>, MechanicsError> {
        if self.amounts.len() != c.resource_ids.len() {
            return Err(MechanicsError::InvalidInventory(format!(
                "expected {} resources, got {}",
                c.resource_ids.len(),
                self.amounts.len()
            )));
        }
        c.resource_ids
            .iter()
            .zip(&c.capacity)
            .map(|(id, &cap)| match self.amounts.get(id) {
                Some(&v) if (0.0..=cap).contains(&v) => Ok(v),
                Some(&v) => Err(MechanicsError::InvalidInventory(format!("`{id}` = {v} outside [0, {cap}]"))),
                None => Err(MechanicsError::InvalidInventory(format!("missing resource `{id}`"))),
            })
            .collect()
    }

    pub(crate) fn from_dense(c: &Compiled, dense: &[f64]) -> Self {
        Inventory { amounts: c.resource_ids.iter().cloned().zip(dense.iter().copied()).collect() }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ArrivalOutcome {
    pub inventory: Inventory,
    pub gains: f64,
    pub losses: f64,
}

fn compile(design: &GameDesign) -> Result<Compiled, MechanicsError> {
    Compiled::new(design).map_err(MechanicsError::InvalidDesign)
}

/// Actions with a transition out of `state` whose every cost is covered by
/// `inv`, sorted by action id.
pub fn available_actions(
    design: &GameDesign,
    state: &str,
    inv: &Inventory,
) -> Result<Vec<String>, MechanicsError> {
    let c = compile(design)?;
    let s = c.state_index(state).ok_or_else(|| MechanicsError::UnknownState(state.to_string()))?;
    let dense = inv.to_dense(&c)?;
    let mut out = Vec::new();
    c.available_into(s, &dense, &mut out);
    Ok(out.into_iter().map(|(a, _)| c.action_ids[a].clone()).collect())
}

pub fn apply_action_cost(
    design: &GameDesign,
    action: &str,
    inv: &Inventory,
) -> Result<Inventory, MechanicsError> {
    let c = compile(design)?;
    let a = c.action_index(action).ok_or_else(|| MechanicsError::UnknownAction(action.to_string()))?;
    let mut dense = inv.to_dense(&c)?;
    if !c.affordable(a, &dense) {
        return Err(MechanicsError::Unaffordable(action.to_string()));
    }
    c.pay(a, &mut dense);
    Ok(Inventory::from_dense(&c, &dense))
}

pub fn apply_arrival_effects(
    design: &GameDesign,
    state: &str,
    inv: &Inventory,
) -> Result<ArrivalOutcome, MechanicsError> {
    let c = compile(design)?;
    let s = c.state_index(state).ok_or_else(|| MechanicsError::UnknownState(state.to_string()))?;
    let mut dense = inv.to_dense(&c)?;
    let (gains, losses) = c.arrive(s, &mut dense);
    Ok(ArrivalOutcome { inventory: Inventory::from_dense(&c, &dense), gains, losses })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::design::{ActionDef, ConverterDef, Cost, FlowDef, ResourceDef, StateDef, TransitionDef};

    fn shop() -> GameDesign {
        GameDesign {
            name: "shop".into(),
            resources: vec![
                ResourceDef { id: "gold".into(), capacity: 100.0 },
                ResourceDef { id: "wood".into(), capacity: 50.0 },
                ResourceDef { id: "planks".into(), capacity: 50.0 },
            ],
            actions: vec![
                ActionDef { id: "buy".into(), costs: vec![Cost { resource: "gold".into(), amount: 5.0 }] },
                ActionDef { id: "walk".into(), costs: vec![] },
            ],
            states: vec![
                StateDef { id: "s".into(), importance: 0.0 },
                StateDef { id: "s2".into(), importance: 1.0 },
                StateDef { id: "mill".into(), importance: 0.0 },
            ],
            start_state: "s".into(),
            transitions: vec![
                TransitionDef { from: "s".into(), action: "buy".into(), to: "s2".into() },
                TransitionDef { from: "s".into(), action: "walk".into(), to: "s2".into() },
            ],
            taps: vec![FlowDef { state: "s".into(), resource: "gold".into(), amount: 10.0 }],
            drains: vec![],
            converters: vec![ConverterDef {
                state: "mill".into(),
                from_resource: "wood".into(),
                from_amount: 3.0,
                to_resource: "planks".into(),
                to_amount: 2.0,
            }],
        }
    }

    #[test]
    fn no_outbound_transitions_means_no_actions() {
        let d = shop();
        let inv = Inventory::empty(&d);
        assert!(available_actions(&d, "s2", &inv).unwrap().is_empty());
    }

    #[test]
    fn unaffordable_action_is_excluded() {
        let d = shop();
        let inv = Inventory::empty(&d).with("gold", 3.0);
        assert_eq!(available_actions(&d, "s", &inv).unwrap(), vec!["walk"]);
        let inv = inv.with("gold", 5.0);
        assert_eq!(available_actions(&d, "s", &inv).unwrap(), vec!["buy", "walk"]);
    }

    #[test]
    fn zero_cost_action_with_empty_inventory() {
        let d = shop();
        assert_eq!(available_actions(&d, "s", &Inventory::empty(&d)).unwrap(), vec!["walk"]);
    }

    #[test]
    fn unknown_state_errors() {
        let d = shop();
        let err = available_actions(&d, "moon", &Inventory::empty(&d)).unwrap_err();
        assert_eq!(err.code(), "UNKNOWN_STATE");
        let err = apply_arrival_effects(&d, "moon", &Inventory::empty(&d)).unwrap_err();
        assert_eq!(err.code(), "UNKNOWN_STATE");
    }

    #[test]
    fn cost_is_subtracted_exactly() {
        let d = shop();
        let inv = Inventory::empty(&d).with("gold", 8.0).with("wood", 4.0);
        let after = apply_action_cost(&d, "buy", &inv).unwrap();
        assert_eq!(after.get("gold"), 3.0);
        assert_eq!(after.get("wood"), 4.0);
        assert_eq!(apply_action_cost(&d, "walk", &inv).unwrap(), inv);
        let boundary = Inventory::empty(&d).with("gold", 5.0);
        assert_eq!(apply_action_cost(&d, "buy", &boundary).unwrap().get("gold"), 0.0);
        let poor = Inventory::empty(&d).with("gold", 4.9);
        assert_eq!(apply_action_cost(&d, "buy", &poor).unwrap_err().code(), "UNAFFORDABLE");
    }

    #[test]
    fn tap_clamps_at_capacity() {
        let d = shop();
        let inv = Inventory::empty(&d).with("gold", 95.0);
        let out = apply_arrival_effects(&d, "s", &inv).unwrap();
        assert_eq!(out.inventory.get("gold"), 100.0);
        assert_eq!(out.gains, 5.0);
        assert_eq!(out.losses, 0.0);
    }

    #[test]
    fn bare_state_changes_nothing() {
        let d = shop();
        let inv = Inventory::empty(&d).with("gold", 7.0);
        let out = apply_arrival_effects(&d, "s2", &inv).unwrap();
        assert_eq!(out.inventory, inv);
        assert_eq!((out.gains, out.losses), (0.0, 0.0));
    }

    #[test]
    fn converter_is_all_or_nothing() {
        let d = shop();
        let inv = Inventory::empty(&d).with("wood", 2.0);
        let out = apply_arrival_effects(&d, "mill", &inv).unwrap();
        assert_eq!(out.inventory, inv);
        assert_eq!((out.gains, out.losses), (0.0, 0.0));

        let inv = Inventory::empty(&d).with("wood", 4.0).with("planks", 49.0);
        let out = apply_arrival_effects(&d, "mill", &inv).unwrap();
        assert_eq!(out.inventory.get("wood"), 1.0);
        assert_eq!(out.inventory.get("planks"), 50.0);
        assert_eq!((out.gains, out.losses), (1.0, 3.0));
    }

    #[test]
    fn drain_clamps_at_zero() {
        let mut d = shop();
        d.drains.push(FlowDef { state: "s2".into(), resource: "gold".into(), amount: 10.0 });
        let out = apply_arrival_effects(&d, "s2", &Inventory::empty(&d).with("gold", 4.0)).unwrap();
        assert_eq!(out.inventory.get("gold"), 0.0);
        assert_eq!(out.losses, 4.0);
    }

    #[test]
    fn out_of_range_inventory_is_rejected() {
        let d = shop();
        let inv = Inventory::empty(&d).with("gold", 101.0);
        assert_eq!(available_actions(&d, "s", &inv).unwrap_err().code(), "INVALID_INVENTORY");
    }
}
