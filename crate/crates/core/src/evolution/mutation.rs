//! Mutation operators for the balancer and the generator.

use std::collections::BTreeSet;

use rand::Rng;
use rand_distr::{Distribution, Normal};

use super::chromosome::NumericChromosome;
use super::sampler::{
    fresh_id, pick, sample_amount, sample_capacity, sample_converter, sample_costs, sample_importance,
    SamplerCaps,
};
use super::EvolutionError;
use crate::design::{
    validate_design, ActionDef, Category, FlowDef, GameDesign, ResourceDef, StateDef, TransitionDef,
};

fn ensure_valid(design: &GameDesign) -> Result<(), EvolutionError> {
    let report = validate_design(design);
    if report.valid {
        Ok(())
    } else {
        Err(EvolutionError::InvalidDesign(report))
    }
}

fn perturb<R: Rng + ?Sized>(v: f64, rng: &mut R) -> f64 {
    let sd = (0.2 * v.abs()).max(0.5);
    let noise = Normal::new(0.0, sd).expect("positive finite sd").sample(rng);
    (v + noise).max(0.0)
}

/// Perturbs each balance number independently with probability `rate`.
///
/// Balance numbers are resource capacities, action costs, and tap, drain and
/// converter amounts; importances and topology are never touched.
pub fn mutate_numbers<R: Rng + ?Sized>(
    design: &GameDesign,
    rate: f64,
    rng: &mut R,
) -> Result<GameDesign, EvolutionError> {
    mutate_numbers_except(design, rate, &BTreeSet::new(), rng)
}

/// [`mutate_numbers`] that leaves genes owned by a `frozen` category alone.
pub fn mutate_numbers_except<R: Rng + ?Sized>(
    design: &GameDesign,
    rate: f64,
    frozen: &BTreeSet<Category>,
    rng: &mut R,
) -> Result<GameDesign, EvolutionError> {
    ensure_valid(design)?;
    let mut genome = NumericChromosome::encode(design);
    for (category, gene) in genome.balance_genes_mut() {
        if frozen.contains(&category) {
            continue;
        }
        if rng.random::<f64>() < rate {
            *gene = perturb(*gene, rng);
        }
    }
    Ok(genome.apply(design))
}

/// One structural edit.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Edit {
    AddState,
    AddAction,
    AddResource,
    AddTransition,
    AddTap,
    AddDrain,
    AddConverter,
    RewireTransition,
    ReattachTap,
    ReattachDrain,
    ReattachConverter,
    RerandomizeNumber,
}

impl Edit {
    pub const ALL: [Edit; 12] = [
        Edit::AddState,
        Edit::AddAction,
        Edit::AddResource,
        Edit::AddTransition,
        Edit::AddTap,
        Edit::AddDrain,
        Edit::AddConverter,
        Edit::RewireTransition,
        Edit::ReattachTap,
        Edit::ReattachDrain,
        Edit::ReattachConverter,
        Edit::RerandomizeNumber,
    ];
}

#[derive(Clone, Copy, Debug)]
enum Field {
    Capacity(usize),
    Cost(usize, usize),
    Importance(usize),
    Tap(usize),
    Drain(usize),
    ConverterFrom(usize),
    ConverterTo(usize),
}

fn numeric_fields(d: &GameDesign, frozen: &BTreeSet<Category>) -> Vec<Field> {
    let open = |c: Category| !frozen.contains(&c);
    let mut fields = Vec::new();
    if open(Category::Resources) {
        fields.extend((0..d.resources.len()).map(Field::Capacity));
    }
    if open(Category::Actions) {
        for (i, a) in d.actions.iter().enumerate() {
            fields.extend((0..a.costs.len()).map(|j| Field::Cost(i, j)));
        }
    }
    if open(Category::States) {
        fields.extend((0..d.states.len()).map(Field::Importance));
    }
    if open(Category::Taps) {
        fields.extend((0..d.taps.len()).map(Field::Tap));
    }
    if open(Category::Drains) {
        fields.extend((0..d.drains.len()).map(Field::Drain));
    }
    if open(Category::Converters) {
        for i in 0..d.converters.len() {
            fields.push(Field::ConverterFrom(i));
            fields.push(Field::ConverterTo(i));
        }
    }
    fields
}

fn free_slots(d: &GameDesign) -> Vec<(usize, usize)> {
    let used: BTreeSet<(&str, &str)> =
        d.transitions.iter().map(|t| (t.from.as_str(), t.action.as_str())).collect();
    let mut slots = Vec::new();
    for (i, s) in d.states.iter().enumerate() {
        for (j, a) in d.actions.iter().enumerate() {
            if !used.contains(&(s.id.as_str(), a.id.as_str())) {
                slots.push((i, j));
            }
        }
    }
    slots
}

/// Edits that are legal on `d` given the frozen set and caps.
pub fn legal_edits(d: &GameDesign, frozen: &BTreeSet<Category>, caps: &SamplerCaps) -> Vec<Edit> {
    let open = |c: Category| !frozen.contains(&c);
    let room = |c: Category| open(c) && d.category_len(c) < caps.cap(c);
    let movable = |c: Category| open(c) && d.category_len(c) > 0 && d.states.len() >= 2;
    Edit::ALL
        .into_iter()
        .filter(|e| match e {
            Edit::AddState => room(Category::States),
            Edit::AddAction => room(Category::Actions),
            Edit::AddResource => room(Category::Resources),
            Edit::AddTransition => room(Category::Transitions) && !free_slots(d).is_empty(),
            Edit::AddTap => room(Category::Taps) && !d.resources.is_empty(),
            Edit::AddDrain => room(Category::Drains) && !d.resources.is_empty(),
            Edit::AddConverter => room(Category::Converters) && d.resources.len() >= 2,
            Edit::RewireTransition => movable(Category::Transitions),
            Edit::ReattachTap => movable(Category::Taps),
            Edit::ReattachDrain => movable(Category::Drains),
            Edit::ReattachConverter => movable(Category::Converters),
            Edit::RerandomizeNumber => !numeric_fields(d, frozen).is_empty(),
        })
        .collect()
}

/// A state id other than `current`, uniformly. Needs at least two states.
fn other_state<R: Rng + ?Sized>(d: &GameDesign, current: &str, rng: &mut R) -> String {
    let others: Vec<&StateDef> = d.states.iter().filter(|s| s.id != current).collect();
    pick(&others, rng).id.clone()
}

fn sample_flow<R: Rng + ?Sized>(d: &GameDesign, caps: &SamplerCaps, rng: &mut R) -> FlowDef {
    FlowDef {
        state: pick(&d.states, rng).id.clone(),
        resource: pick(&d.resources, rng).id.clone(),
        amount: sample_amount(caps, rng),
    }
}

/// Applies one uniformly chosen legal structural edit.
///
/// New components get fresh ids and sampled attributes; nothing is ever
/// deleted, and a frozen category's list is never touched.
pub fn mutate_structure<R: Rng + ?Sized>(
    design: &GameDesign,
    frozen: &BTreeSet<Category>,
    rng: &mut R,
    caps: &SamplerCaps,
) -> Result<GameDesign, EvolutionError> {
    ensure_valid(design)?;
    let edits = legal_edits(design, frozen, caps);
    if edits.is_empty() {
        return Err(EvolutionError::NoLegalEdit);
    }
    let mut d = design.clone();
    match *pick(&edits, rng) {
        Edit::AddState => {
            let id = fresh_id("state", d.states.iter().map(|s| s.id.as_str()));
            d.states.push(StateDef { id, importance: sample_importance(caps, rng) });
        }
        Edit::AddAction => {
            let id = fresh_id("act", d.actions.iter().map(|a| a.id.as_str()));
            let costs = sample_costs(caps, &d.resources, rng);
            d.actions.push(ActionDef { id, costs });
        }
        Edit::AddResource => {
            let id = fresh_id("res", d.resources.iter().map(|r| r.id.as_str()));
            d.resources.push(ResourceDef { id, capacity: sample_capacity(caps, rng) });
        }
        Edit::AddTransition => {
            let (s, a) = *pick(&free_slots(&d), rng);
            let to = pick(&d.states, rng).id.clone();
            d.transitions.push(TransitionDef {
                from: d.states[s].id.clone(),
                action: d.actions[a].id.clone(),
                to,
            });
        }
        Edit::AddTap => {
            let f = sample_flow(&d, caps, rng);
            d.taps.push(f);
        }
        Edit::AddDrain => {
            let f = sample_flow(&d, caps, rng);
            d.drains.push(f);
        }
        Edit::AddConverter => {
            let c = sample_converter(caps, &d.states, &d.resources, rng);
            d.converters.push(c);
        }
        Edit::RewireTransition => {
            let i = rng.random_range(0..d.transitions.len());
            d.transitions[i].to = other_state(&d, &d.transitions[i].to, rng);
        }
        Edit::ReattachTap => {
            let i = rng.random_range(0..d.taps.len());
            d.taps[i].state = other_state(&d, &d.taps[i].state, rng);
        }
        Edit::ReattachDrain => {
            let i = rng.random_range(0..d.drains.len());
            d.drains[i].state = other_state(&d, &d.drains[i].state, rng);
        }
        Edit::ReattachConverter => {
            let i = rng.random_range(0..d.converters.len());
            d.converters[i].state = other_state(&d, &d.converters[i].state, rng);
        }
        Edit::RerandomizeNumber => {
            let fields = numeric_fields(&d, frozen);
            match *pick(&fields, rng) {
                Field::Capacity(i) => d.resources[i].capacity = sample_capacity(caps, rng),
                Field::Cost(i, j) => d.actions[i].costs[j].amount = sample_amount(caps, rng),
                Field::Importance(i) => d.states[i].importance = sample_importance(caps, rng),
                Field::Tap(i) => d.taps[i].amount = sample_amount(caps, rng),
                Field::Drain(i) => d.drains[i].amount = sample_amount(caps, rng),
                Field::ConverterFrom(i) => d.converters[i].from_amount = sample_amount(caps, rng),
                Field::ConverterTo(i) => d.converters[i].to_amount = sample_amount(caps, rng),
            }
        }
    }
    debug_assert!(validate_design(&d).valid);
    Ok(d)
}
