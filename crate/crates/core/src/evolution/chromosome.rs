//! Genome encodings of a design.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::design::{
    validate_design, ActionDef, Category, ConverterDef, Cost, DesignError, FlowDef, GameDesign, ResourceDef,
    StateDef, TransitionDef,
};

/// The balancer's genome: one list of numbers per component category, tied
/// to a host design whose topology never changes.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct NumericChromosome {
    pub capacities: Vec<f64>,
    pub costs: Vec<f64>,
    pub taps: Vec<f64>,
    pub drains: Vec<f64>,
    /// `(fromAmount, toAmount)` per converter.
    pub converters: Vec<(f64, f64)>,
    /// Carried for completeness; the balancer never mutates importances.
    pub importances: Vec<f64>,
    /// `(action index, cost index)` of each entry in `costs`.
    cost_index: Vec<(usize, usize)>,
}

impl NumericChromosome {
    pub fn encode(design: &GameDesign) -> Self {
        let cost_index: Vec<(usize, usize)> = design
            .actions
            .iter()
            .enumerate()
            .flat_map(|(i, a)| (0..a.costs.len()).map(move |j| (i, j)))
            .collect();
        NumericChromosome {
            capacities: design.resources.iter().map(|r| r.capacity).collect(),
            costs: cost_index.iter().map(|&(i, j)| design.actions[i].costs[j].amount).collect(),
            taps: design.taps.iter().map(|t| t.amount).collect(),
            drains: design.drains.iter().map(|t| t.amount).collect(),
            converters: design.converters.iter().map(|c| (c.from_amount, c.to_amount)).collect(),
            importances: design.states.iter().map(|s| s.importance).collect(),
            cost_index,
        }
    }

    /// Writes the genes back into a copy of `host`, which must be the design
    /// this chromosome was encoded from (or one with identical topology).
    pub fn apply(&self, host: &GameDesign) -> GameDesign {
        let mut d = host.clone();
        for (r, &v) in d.resources.iter_mut().zip(&self.capacities) {
            r.capacity = v;
        }
        for (&(i, j), &v) in self.cost_index.iter().zip(&self.costs) {
            d.actions[i].costs[j].amount = v;
        }
        for (t, &v) in d.taps.iter_mut().zip(&self.taps) {
            t.amount = v;
        }
        for (t, &v) in d.drains.iter_mut().zip(&self.drains) {
            t.amount = v;
        }
        for (c, &(from, to)) in d.converters.iter_mut().zip(&self.converters) {
            c.from_amount = from;
            c.to_amount = to;
        }
        for (s, &v) in d.states.iter_mut().zip(&self.importances) {
            s.importance = v;
        }
        d
    }

    /// Mutable balance genes grouped with the category that owns them.
    pub(crate) fn balance_genes_mut(&mut self) -> Vec<(Category, &mut f64)> {
        let mut genes: Vec<(Category, &mut f64)> = Vec::new();
        genes.extend(self.capacities.iter_mut().map(|v| (Category::Resources, v)));
        genes.extend(self.costs.iter_mut().map(|v| (Category::Actions, v)));
        genes.extend(self.taps.iter_mut().map(|v| (Category::Taps, v)));
        genes.extend(self.drains.iter_mut().map(|v| (Category::Drains, v)));
        for (from, to) in self.converters.iter_mut() {
            genes.push((Category::Converters, from));
            genes.push((Category::Converters, to));
        }
        genes
    }

    pub fn len(&self) -> usize {
        self.capacities.len()
            + self.costs.len()
            + self.taps.len()
            + self.drains.len()
            + 2 * self.converters.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

/// The generator's genome: per component type, a variable-length list of
/// components, each a tuple of string attributes.
///
/// Attribute layouts:
/// - resources: `[id, capacity]`
/// - actions: `[id, resource:amount, ...]`
/// - states: `[id, importance]`, plus a trailing `start` on the start state
/// - transitions: `[from, action, to]`
/// - taps, drains: `[state, resource, amount]`
/// - converters: `[state, fromResource, fromAmount, toResource, toAmount]`
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StructuralChromosome {
    pub name: String,
    pub genes: BTreeMap<Category, Vec<Vec<String>>>,
}

fn num(v: f64) -> String {
    format!("{v}")
}

fn flow_genes(flows: &[FlowDef]) -> Vec<Vec<String>> {
    flows.iter().map(|f| vec![f.state.clone(), f.resource.clone(), num(f.amount)]).collect()
}

impl StructuralChromosome {
    pub fn encode(design: &GameDesign) -> Self {
        let mut genes = BTreeMap::new();
        genes.insert(
            Category::Resources,
            design.resources.iter().map(|r| vec![r.id.clone(), num(r.capacity)]).collect(),
        );
        genes.insert(
            Category::Actions,
            design
                .actions
                .iter()
                .map(|a| {
                    std::iter::once(a.id.clone())
                        .chain(a.costs.iter().map(|c| format!("{}:{}", c.resource, num(c.amount))))
                        .collect()
                })
                .collect(),
        );
        genes.insert(
            Category::States,
            design
                .states
                .iter()
                .map(|s| {
                    let mut g = vec![s.id.clone(), num(s.importance)];
                    if s.id == design.start_state {
                        g.push("start".into());
                    }
                    g
                })
                .collect(),
        );
        genes.insert(
            Category::Transitions,
            design.transitions.iter().map(|t| vec![t.from.clone(), t.action.clone(), t.to.clone()]).collect(),
        );
        genes.insert(Category::Taps, flow_genes(&design.taps));
        genes.insert(Category::Drains, flow_genes(&design.drains));
        genes.insert(
            Category::Converters,
            design
                .converters
                .iter()
                .map(|c| {
                    vec![
                        c.state.clone(),
                        c.from_resource.clone(),
                        num(c.from_amount),
                        c.to_resource.clone(),
                        num(c.to_amount),
                    ]
                })
                .collect(),
        );
        StructuralChromosome { name: design.name.clone(), genes }
    }

    /// Rebuilds and validates the design.
    pub fn decode(&self) -> Result<GameDesign, DesignError> {
        let list = |c: Category| self.genes.get(&c).map(Vec::as_slice).unwrap_or(&[]);
        let schema =
            |what: &str, gene: &[String]| DesignError::Schema(format!("malformed {what} gene {gene:?}"));
        let parse = |s: &str, what: &str, gene: &[String]| -> Result<f64, DesignError> {
            s.parse::<f64>().map_err(|_| schema(what, gene))
        };

        let mut d = GameDesign { name: self.name.clone(), ..Default::default() };
        for g in list(Category::Resources) {
            match g.as_slice() {
                [id, cap] => {
                    d.resources.push(ResourceDef { id: id.clone(), capacity: parse(cap, "resource", g)? })
                }
                _ => return Err(schema("resource", g)),
            }
        }
        for g in list(Category::Actions) {
            let (id, costs) = g.split_first().ok_or_else(|| schema("action", g))?;
            let costs = costs
                .iter()
                .map(|c| {
                    let (r, a) = c.rsplit_once(':').ok_or_else(|| schema("action", g))?;
                    Ok(Cost { resource: r.to_string(), amount: parse(a, "action", g)? })
                })
                .collect::<Result<_, DesignError>>()?;
            d.actions.push(ActionDef { id: id.clone(), costs });
        }
        for g in list(Category::States) {
            match g.as_slice() {
                [id, imp] => d.states.push(StateDef { id: id.clone(), importance: parse(imp, "state", g)? }),
                [id, imp, flag] if flag == "start" => {
                    d.start_state = id.clone();
                    d.states.push(StateDef { id: id.clone(), importance: parse(imp, "state", g)? });
                }
                _ => return Err(schema("state", g)),
            }
        }
        for g in list(Category::Transitions) {
            match g.as_slice() {
                [from, action, to] => d.transitions.push(TransitionDef {
                    from: from.clone(),
                    action: action.clone(),
                    to: to.clone(),
                }),
                _ => return Err(schema("transition", g)),
            }
        }
        for (cat, out) in [(Category::Taps, &mut d.taps), (Category::Drains, &mut d.drains)] {
            for g in list(cat) {
                match g.as_slice() {
                    [state, resource, amount] => out.push(FlowDef {
                        state: state.clone(),
                        resource: resource.clone(),
                        amount: parse(amount, cat.name(), g)?,
                    }),
                    _ => return Err(schema(cat.name(), g)),
                }
            }
        }
        for g in list(Category::Converters) {
            match g.as_slice() {
                [state, from, fa, to, ta] => d.converters.push(ConverterDef {
                    state: state.clone(),
                    from_resource: from.clone(),
                    from_amount: parse(fa, "converter", g)?,
                    to_resource: to.clone(),
                    to_amount: parse(ta, "converter", g)?,
                }),
                _ => return Err(schema("converter", g)),
            }
        }
        let report = validate_design(&d);
        if !report.valid {
            return Err(DesignError::Validation(report));
        }
        Ok(d)
    }

    pub fn len(&self, category: Category) -> usize {
        self.genes.get(&category).map_or(0, Vec::len)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::evolution::{sample_random_design, SamplerCaps};
    use proptest::prelude::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    proptest! {
        #[test]
        fn encodings_round_trip(seed in any::<u64>()) {
            let d = sample_random_design(&SamplerCaps::default(), &mut ChaCha8Rng::seed_from_u64(seed));
            let numeric = NumericChromosome::encode(&d);
            prop_assert_eq!(numeric.apply(&d), d.clone());
            let structural = StructuralChromosome::encode(&d);
            prop_assert_eq!(structural.decode().unwrap(), d.clone());
            for c in Category::ALL {
                prop_assert_eq!(structural.len(c), d.category_len(c));
            }
        }
    }

    #[test]
    fn numeric_lengths_follow_host() {
        let d = sample_random_design(&SamplerCaps::default(), &mut ChaCha8Rng::seed_from_u64(3));
        let n = NumericChromosome::encode(&d);
        assert_eq!(n.capacities.len(), d.resources.len());
        assert_eq!(n.taps.len(), d.taps.len());
        assert_eq!(n.converters.len(), d.converters.len());
        assert_eq!(n.costs.len(), d.actions.iter().map(|a| a.costs.len()).sum::<usize>());
    }

    #[test]
    fn malformed_structural_gene() {
        let d = sample_random_design(&SamplerCaps::default(), &mut ChaCha8Rng::seed_from_u64(4));
        let mut s = StructuralChromosome::encode(&d);
        s.genes.get_mut(&Category::Resources).unwrap()[0].push("extra".into());
        assert_eq!(s.decode().unwrap_err().code(), "SCHEMA_ERROR");
    }
}
