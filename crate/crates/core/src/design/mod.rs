//! The generic game-system model.
//!
//! A [`GameDesign`] is a state machine (states, actions, transitions) with a
//! resource economy layered on top: actions cost resources, and taps, drains
//! and converters fire when the player arrives at the state they attach to.

mod format;
mod mechanics;
mod validate;

use std::collections::BTreeSet;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

pub use format::{load_design, save_design, DesignError};
pub(crate) use mechanics::Compiled;
pub use mechanics::{
    apply_action_cost, apply_arrival_effects, available_actions, ArrivalOutcome, Inventory, MechanicsError,
};
pub use validate::{validate_design, Issue, Severity, ValidationReport};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ResourceDef {
    pub id: String,
    pub capacity: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Cost {
    pub resource: String,
    pub amount: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ActionDef {
    pub id: String,
    pub costs: Vec<Cost>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StateDef {
    pub id: String,
    pub importance: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TransitionDef {
    pub from: String,
    pub action: String,
    pub to: String,
}

/// A tap or a drain: a fixed resource amount added or removed on arrival.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FlowDef {
    pub state: String,
    pub resource: String,
    pub amount: f64,
}

pub type TapDef = FlowDef;
pub type DrainDef = FlowDef;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, rename_all = "camelCase")]
pub struct ConverterDef {
    pub state: String,
    pub from_resource: String,
    pub from_amount: f64,
    pub to_resource: String,
    pub to_amount: f64,
}

/// A complete component-based game system.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, rename_all = "camelCase")]
pub struct GameDesign {
    pub name: String,
    pub resources: Vec<ResourceDef>,
    pub actions: Vec<ActionDef>,
    pub states: Vec<StateDef>,
    /// An absent start state reads as empty and fails validation with
    /// `MISSING_START` rather than as a schema error.
    #[serde(default)]
    pub start_state: String,
    pub transitions: Vec<TransitionDef>,
    pub taps: Vec<TapDef>,
    pub drains: Vec<DrainDef>,
    pub converters: Vec<ConverterDef>,
}

fn cmp_f64(a: f64, b: f64) -> std::cmp::Ordering {
    a.total_cmp(&b)
}

impl GameDesign {
    /// A copy with every component list (and every cost list) in canonical order.
    ///
    /// Canonical order is also the order in which arrival effects fire, so
    /// two designs that differ only in list order behave identically.
    pub fn canonicalized(&self) -> GameDesign {
        let mut d = self.clone();
        d.canonicalize();
        d
    }

    pub fn canonicalize(&mut self) {
        self.resources.sort_by(|a, b| a.id.cmp(&b.id).then(cmp_f64(a.capacity, b.capacity)));
        for action in &mut self.actions {
            action.costs.sort_by(|a, b| a.resource.cmp(&b.resource).then(cmp_f64(a.amount, b.amount)));
        }
        self.actions.sort_by(|a, b| a.id.cmp(&b.id));
        self.states.sort_by(|a, b| a.id.cmp(&b.id).then(cmp_f64(a.importance, b.importance)));
        self.transitions.sort_by(|a, b| (&a.from, &a.action, &a.to).cmp(&(&b.from, &b.action, &b.to)));
        let flow_cmp = |a: &FlowDef, b: &FlowDef| {
            (&a.state, &a.resource).cmp(&(&b.state, &b.resource)).then(cmp_f64(a.amount, b.amount))
        };
        self.taps.sort_by(flow_cmp);
        self.drains.sort_by(flow_cmp);
        self.converters.sort_by(|a, b| {
            (&a.state, &a.from_resource, &a.to_resource)
                .cmp(&(&b.state, &b.from_resource, &b.to_resource))
                .then(cmp_f64(a.from_amount, b.from_amount))
                .then(cmp_f64(a.to_amount, b.to_amount))
        });
    }

    pub fn state(&self, id: &str) -> Option<&StateDef> {
        self.states.iter().find(|s| s.id == id)
    }

    pub fn action(&self, id: &str) -> Option<&ActionDef> {
        self.actions.iter().find(|a| a.id == id)
    }

    pub fn resource(&self, id: &str) -> Option<&ResourceDef> {
        self.resources.iter().find(|r| r.id == id)
    }

    /// Ids and references only, with every number dropped. Two designs with
    /// equal digests have identical topology.
    pub fn topology_digest(&self) -> String {
        let d = self.canonicalized();
        let mut out = String::new();
        let push_list = |out: &mut String, tag: &str, items: Vec<String>| {
            out.push_str(tag);
            out.push('[');
            out.push_str(&items.join(";"));
            out.push(']');
        };
        push_list(&mut out, "R", d.resources.iter().map(|r| r.id.clone()).collect());
        push_list(
            &mut out,
            "A",
            d.actions
                .iter()
                .map(|a| {
                    let costs: Vec<_> = a.costs.iter().map(|c| c.resource.as_str()).collect();
                    format!("{}({})", a.id, costs.join(","))
                })
                .collect(),
        );
        push_list(&mut out, "S", d.states.iter().map(|s| s.id.clone()).collect());
        out.push_str(&format!("start={}", d.start_state));
        push_list(
            &mut out,
            "T",
            d.transitions.iter().map(|t| format!("{}-{}->{}", t.from, t.action, t.to)).collect(),
        );
        push_list(&mut out, "P", d.taps.iter().map(|t| format!("{}:{}", t.state, t.resource)).collect());
        push_list(&mut out, "D", d.drains.iter().map(|t| format!("{}:{}", t.state, t.resource)).collect());
        push_list(
            &mut out,
            "C",
            d.converters
                .iter()
                .map(|c| format!("{}:{}>{}", c.state, c.from_resource, c.to_resource))
                .collect(),
        );
        out
    }

    pub fn category_len(&self, category: Category) -> usize {
        match category {
            Category::Resources => self.resources.len(),
            Category::Actions => self.actions.len(),
            Category::States => self.states.len(),
            Category::Transitions => self.transitions.len(),
            Category::Taps => self.taps.len(),
            Category::Drains => self.drains.len(),
            Category::Converters => self.converters.len(),
        }
    }
}

/// The seven component categories of a design.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Category {
    Resources,
    Actions,
    States,
    Transitions,
    Taps,
    Drains,
    Converters,
}

impl Category {
    pub const ALL: [Category; 7] = [
        Category::Resources,
        Category::Actions,
        Category::States,
        Category::Transitions,
        Category::Taps,
        Category::Drains,
        Category::Converters,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Category::Resources => "resources",
            Category::Actions => "actions",
            Category::States => "states",
            Category::Transitions => "transitions",
            Category::Taps => "taps",
            Category::Drains => "drains",
            Category::Converters => "converters",
        }
    }

    pub fn all() -> BTreeSet<Category> {
        Self::ALL.into_iter().collect()
    }
}

impl fmt::Display for Category {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("unknown component category `{0}` (expected one of resources, actions, states, transitions, taps, drains, converters)")]
pub struct UnknownCategory(pub String);

impl FromStr for Category {
    type Err = UnknownCategory;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Category::ALL.into_iter().find(|c| c.name() == s).ok_or_else(|| UnknownCategory(s.to_string()))
    }
}
