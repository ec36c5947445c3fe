use std::collections::{BTreeMap, BTreeSet, HashSet, VecDeque};

use serde::{Deserialize, Serialize};

use super::GameDesign;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Severity {
    Error,
    Warning,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct Issue {
    pub severity: Severity,
    pub code: String,
    pub message: String,
    pub component_ref: String,
}

/// Every problem found in a candidate design. `valid` is false iff at least
/// one issue has error severity.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ValidationReport {
    pub valid: bool,
    pub issues: Vec<Issue>,
}

impl ValidationReport {
    pub fn errors(&self) -> impl Iterator<Item = &Issue> {
        self.issues.iter().filter(|i| i.severity == Severity::Error)
    }

    pub fn warnings(&self) -> impl Iterator<Item = &Issue> {
        self.issues.iter().filter(|i| i.severity == Severity::Warning)
    }

    pub fn has_code(&self, code: &str) -> bool {
        self.issues.iter().any(|i| i.code == code)
    }
}

struct Collector {
    issues: Vec<Issue>,
}

impl Collector {
    fn error(&mut self, code: &str, component_ref: impl Into<String>, message: impl Into<String>) {
        self.push(Severity::Error, code, component_ref, message);
    }

    fn warning(&mut self, code: &str, component_ref: impl Into<String>, message: impl Into<String>) {
        self.push(Severity::Warning, code, component_ref, message);
    }

    fn push(
        &mut self,
        severity: Severity,
        code: &str,
        component_ref: impl Into<String>,
        message: impl Into<String>,
    ) {
        self.issues.push(Issue {
            severity,
            code: code.to_string(),
            message: message.into(),
            component_ref: component_ref.into(),
        });
    }

    fn amount(&mut self, value: f64, component_ref: &str, field: &str) {
        if !value.is_finite() {
            self.error("NON_FINITE", component_ref, format!("{field} must be finite, got {value}"));
        } else if value < 0.0 {
            self.error("NEGATIVE_VALUE", component_ref, format!("{field} must be >= 0, got {value}"));
        }
    }

    fn ids<'a>(&mut self, kind: &str, ids: impl Iterator<Item = &'a str>) -> BTreeSet<&'a str> {
        let mut seen = BTreeSet::new();
        for (i, id) in ids.enumerate() {
            if id.is_empty() {
                self.error("EMPTY_ID", format!("{kind}[{i}]"), format!("{kind} id must be non-empty"));
            } else if !seen.insert(id) {
                self.error(
                    "DUPLICATE_ID",
                    format!("{kind}:{id}"),
                    format!("{kind} id `{id}` is defined more than once"),
                );
            }
        }
        seen
    }
}

/// Checks every structural invariant of a design. Never fails: problems are
/// reported as issues.
pub fn validate_design(design: &GameDesign) -> ValidationReport {
    let mut c = Collector { issues: Vec::new() };

    let resources = c.ids("resource", design.resources.iter().map(|r| r.id.as_str()));
    let actions = c.ids("action", design.actions.iter().map(|a| a.id.as_str()));
    let states = c.ids("state", design.states.iter().map(|s| s.id.as_str()));

    for r in &design.resources {
        c.amount(r.capacity, &format!("resource:{}", r.id), "capacity");
    }
    for s in &design.states {
        c.amount(s.importance, &format!("state:{}", s.id), "importance");
    }
    for a in &design.actions {
        let aref = format!("action:{}", a.id);
        let mut cost_resources = HashSet::new();
        for cost in &a.costs {
            c.amount(cost.amount, &aref, "cost amount");
            if !resources.contains(cost.resource.as_str()) {
                c.error(
                    "UNKNOWN_RESOURCE",
                    &aref,
                    format!("cost references unknown resource `{}`", cost.resource),
                );
            }
            if !cost_resources.insert(cost.resource.as_str()) {
                c.error(
                    "DUPLICATE_COST",
                    &aref,
                    format!("more than one cost entry for resource `{}`", cost.resource),
                );
            }
        }
    }

    if !states.contains(design.start_state.as_str()) {
        c.error(
            "MISSING_START",
            "startState",
            format!("start state `{}` is not a defined state", design.start_state),
        );
    }

    let mut edges: BTreeMap<(&str, &str), &str> = BTreeMap::new();
    for (i, t) in design.transitions.iter().enumerate() {
        let tref = format!("transition[{i}]:{}-{}->{}", t.from, t.action, t.to);
        if !states.contains(t.from.as_str()) {
            c.error("UNKNOWN_STATE", &tref, format!("unknown source state `{}`", t.from));
        }
        if !states.contains(t.to.as_str()) {
            c.error("UNKNOWN_STATE", &tref, format!("unknown target state `{}`", t.to));
        }
        if !actions.contains(t.action.as_str()) {
            c.error("UNKNOWN_ACTION", &tref, format!("unknown action `{}`", t.action));
        }
        if edges.insert((t.from.as_str(), t.action.as_str()), t.to.as_str()).is_some() {
            c.error(
                "DUPLICATE_TRANSITION",
                &tref,
                format!("action `{}` already has a transition out of `{}`", t.action, t.from),
            );
        }
    }

    let flows = design.taps.iter().map(|f| ("tap", f)).chain(design.drains.iter().map(|f| ("drain", f)));
    for (i, (kind, f)) in flows.enumerate() {
        let fref = format!("{kind}[{i}]:{}:{}", f.state, f.resource);
        if !states.contains(f.state.as_str()) {
            c.error("UNKNOWN_STATE", &fref, format!("attached to unknown state `{}`", f.state));
        }
        if !resources.contains(f.resource.as_str()) {
            c.error("UNKNOWN_RESOURCE", &fref, format!("unknown resource `{}`", f.resource));
        }
        c.amount(f.amount, &fref, "amount");
    }

    for (i, conv) in design.converters.iter().enumerate() {
        let cref = format!("converter[{i}]:{}:{}>{}", conv.state, conv.from_resource, conv.to_resource);
        if !states.contains(conv.state.as_str()) {
            c.error("UNKNOWN_STATE", &cref, format!("attached to unknown state `{}`", conv.state));
        }
        for r in [&conv.from_resource, &conv.to_resource] {
            if !resources.contains(r.as_str()) {
                c.error("UNKNOWN_RESOURCE", &cref, format!("unknown resource `{r}`"));
            }
        }
        if conv.from_resource == conv.to_resource {
            c.error("CONVERTER_SELF", &cref, "converter must exchange two different resources");
        }
        c.amount(conv.from_amount, &cref, "fromAmount");
        c.amount(conv.to_amount, &cref, "toAmount");
    }

    // Warnings only make sense once references resolve.
    if c.issues.is_empty() {
        structural_warnings(design, &mut c);
    }

    let valid = !c.issues.iter().any(|i| i.severity == Severity::Error);
    ValidationReport { valid, issues: c.issues }
}

fn structural_warnings(design: &GameDesign, c: &mut Collector) {
    let mut reached: BTreeSet<&str> = BTreeSet::new();
    let mut queue = VecDeque::from([design.start_state.as_str()]);
    reached.insert(design.start_state.as_str());
    while let Some(s) = queue.pop_front() {
        for t in design.transitions.iter().filter(|t| t.from == s) {
            if reached.insert(t.to.as_str()) {
                queue.push_back(t.to.as_str());
            }
        }
    }
    for s in &design.states {
        if !reached.contains(s.id.as_str()) {
            c.warning(
                "UNREACHABLE_STATE",
                format!("state:{}", s.id),
                format!("state `{}` cannot be reached from the start state", s.id),
            );
        }
    }

    let used: HashSet<&str> = design.transitions.iter().map(|t| t.action.as_str()).collect();
    for a in &design.actions {
        if !used.contains(a.id.as_str()) {
            c.warning(
                "ACTION_WITHOUT_TRANSITION",
                format!("action:{}", a.id),
                format!("action `{}` has no transition and is never available", a.id),
            );
        }
    }

    let sourced: HashSet<&str> = design
        .taps
        .iter()
        .map(|t| t.resource.as_str())
        .chain(design.converters.iter().map(|c| c.to_resource.as_str()))
        .collect();
    for a in &design.actions {
        for cost in a.costs.iter().filter(|c| c.amount > 0.0) {
            if !sourced.contains(cost.resource.as_str()) {
                c.warning(
                    "UNSOURCED_COST",
                    format!("action:{}", a.id),
                    format!(
                        "action `{}` costs `{}` which nothing ever grants; it can never be afforded",
                        a.id, cost.resource
                    ),
                );
            }
        }
    }
}
