use std::collections::BTreeSet;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::mutation::{mutate_numbers, mutate_numbers_except, mutate_structure};
use super::{EvolutionError, SamplerCaps};
use crate::design::{Category, Compiled, GameDesign};
use crate::sim::{
    simulate_compiled, MetricWeights, PlaythroughDigest, PlaythroughReport, SimConfig, SimError,
};

/// Genetic optimizer parameters shared by the balancer and the generator.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields, default)]
pub struct EvolutionConfig {
    pub population_size: usize,
    pub generations: usize,
    /// Per-gene mutation probability.
    pub mutation_rate: f64,
    pub tournament_size: usize,
    pub elite_count: usize,
    /// Consult the selector every K generations; 0 never does.
    pub human_every_k: usize,
    pub candidates_shown: usize,
    /// Categories the generator may not touch.
    pub frozen_categories: BTreeSet<Category>,
    /// Size limits for the generator's additions.
    pub caps: SamplerCaps,
    pub seed: u64,
    /// Play-through settings for fitness; its seed is shared by every
    /// evaluation in a run.
    pub sim_config: SimConfig,
    pub weights: MetricWeights,
}

impl Default for EvolutionConfig {
    fn default() -> Self {
        EvolutionConfig {
            population_size: 20,
            generations: 50,
            mutation_rate: 0.2,
            tournament_size: 3,
            elite_count: 1,
            human_every_k: 5,
            candidates_shown: 4,
            frozen_categories: BTreeSet::new(),
            caps: SamplerCaps::default(),
            seed: 0,
            sim_config: SimConfig::default(),
            weights: MetricWeights::default(),
        }
    }
}

impl EvolutionConfig {
    pub fn check(&self) -> Result<(), EvolutionError> {
        let bad = |m: &str| Err(EvolutionError::InvalidConfig(m.to_string()));
        if self.population_size < 2 {
            return bad("populationSize must be at least 2");
        }
        if self.tournament_size < 1 || self.tournament_size > self.population_size {
            return bad("tournamentSize must be in [1, populationSize]");
        }
        if self.elite_count >= self.population_size {
            return bad("eliteCount must be below populationSize");
        }
        if !(0.0..=1.0).contains(&self.mutation_rate) {
            return bad("mutationRate must be in [0, 1]");
        }
        if self.human_every_k > 0 && self.candidates_shown == 0 {
            return bad("candidatesShown must be positive when humanEveryK is set");
        }
        if !self.weights.is_finite() {
            return bad("weights must be finite");
        }
        self.caps.check().map_err(|e| EvolutionError::InvalidConfig(e.0))?;
        self.sim_config.check().map_err(|e| EvolutionError::InvalidConfig(e.to_string()))
    }

    /// Number of selector consultations a full run makes.
    pub fn checkpoint_count(&self) -> usize {
        if self.human_every_k == 0 || self.generations == 0 {
            0
        } else {
            (self.generations - 1) / self.human_every_k
        }
    }

    fn is_checkpoint(&self, generation: usize) -> bool {
        self.human_every_k > 0 && generation.is_multiple_of(self.human_every_k) && generation < self.generations
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct GenerationStats {
    pub best_fitness: f64,
    pub mean_fitness: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct EvolutionResult {
    pub best_design: GameDesign,
    pub best_fitness: f64,
    /// Entry 0 is the input design alone; entry g is generation g.
    pub history: Vec<GenerationStats>,
    pub evaluations: usize,
    /// Set when the run was cut short by the selector.
    pub partial: bool,
}

/// A scored population member.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Member {
    pub design: GameDesign,
    pub fitness: f64,
}

/// What the selector is shown at a checkpoint.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct Candidate {
    pub design: GameDesign,
    pub fitness: f64,
    pub digest: PlaythroughDigest,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Selection {
    Chosen(usize),
    Abort,
}

/// Picks a favourite at human checkpoints. Calls block the GA loop.
pub trait CandidateSelector {
    fn choose(&mut self, generation: usize, candidates: &[Candidate]) -> Selection;

    /// Called after each generation is scored, fittest first.
    fn on_generation(&mut self, _generation: usize, _population: &[Member]) {}

    /// Polled before each generation; true stops the run as if aborted.
    fn should_abort(&mut self) -> bool {
        false
    }
}

/// Always picks the fittest candidate (the first on ties).
#[derive(Clone, Copy, Debug, Default)]
pub struct ArgmaxSelector;

impl CandidateSelector for ArgmaxSelector {
    fn choose(&mut self, _: usize, candidates: &[Candidate]) -> Selection {
        let mut best = 0;
        for (i, c) in candidates.iter().enumerate() {
            if c.fitness > candidates[best].fitness {
                best = i;
            }
        }
        Selection::Chosen(best)
    }
}

fn play(
    design: &GameDesign,
    w: &MetricWeights,
    sim: &SimConfig,
) -> Result<PlaythroughReport, EvolutionError> {
    let c = Compiled::new(design).map_err(EvolutionError::InvalidDesign)?;
    Ok(simulate_compiled(&c, w, sim, |_| {}))
}

/// Total simulated reward of `design` under `w`, played with `seed`.
pub fn fitness(
    design: &GameDesign,
    w: &MetricWeights,
    sim: &SimConfig,
    seed: u64,
) -> Result<f64, EvolutionError> {
    let cfg = sim.clone().with_seed(seed);
    crate::sim::simulate(design, w, &cfg).map(|r| r.total_reward).map_err(|e| match e {
        SimError::InvalidDesign(r) => EvolutionError::InvalidDesign(r),
        other => EvolutionError::InvalidConfig(other.to_string()),
    })
}

fn score_all(
    designs: Vec<GameDesign>,
    w: &MetricWeights,
    sim: &SimConfig,
) -> Result<Vec<Member>, EvolutionError> {
    designs
        .into_par_iter()
        .map(|design| {
            let fitness = play(&design, w, sim)?.total_reward;
            Ok(Member { design, fitness })
        })
        .collect()
}

fn tournament<'a, R: Rng + ?Sized>(pop: &'a [Member], size: usize, rng: &mut R) -> &'a Member {
    let mut best = &pop[rng.random_range(0..pop.len())];
    for _ in 1..size {
        let m = &pop[rng.random_range(0..pop.len())];
        if m.fitness > best.fitness {
            best = m;
        }
    }
    best
}

type Offspring<'a> = dyn Fn(&GameDesign, &mut ChaCha8Rng) -> Result<GameDesign, EvolutionError> + 'a;

fn evolve(
    design: &GameDesign,
    cfg: &EvolutionConfig,
    selector: &mut dyn CandidateSelector,
    offspring: &Offspring<'_>,
) -> Result<EvolutionResult, EvolutionError> {
    cfg.check()?;
    let w = &cfg.weights;
    let sim = &cfg.sim_config;
    let input = play(design, w, sim)?.total_reward;
    let mut result = EvolutionResult {
        best_design: design.clone(),
        best_fitness: input,
        history: vec![GenerationStats { best_fitness: input, mean_fitness: input }],
        evaluations: 1,
        partial: false,
    };
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let n = cfg.population_size;

    // Members carried into the next generation, and the parent pool.
    let mut carried = vec![Member { design: design.clone(), fitness: input }];
    let mut parents: Option<Vec<Member>> = None;

    for generation in 1..=cfg.generations {
        if selector.should_abort() {
            result.partial = true;
            return Err(EvolutionError::SelectorAborted(Box::new(result)));
        }
        let mut children = Vec::with_capacity(n - carried.len());
        while carried.len() + children.len() < n {
            let parent = match &parents {
                Some(pool) => &tournament(pool, cfg.tournament_size, &mut rng).design,
                // Generation 1 and post-checkpoint generations mutate the
                // single carried member.
                None => &carried[0].design,
            };
            children.push(offspring(parent, &mut rng)?);
        }
        result.evaluations += children.len();
        let mut population = carried;
        population.extend(score_all(children, w, sim)?);
        // Stable: ties keep carried members first.
        population.sort_by(|a, b| b.fitness.total_cmp(&a.fitness));

        let best = &population[0];
        let mean = population.iter().map(|m| m.fitness).sum::<f64>() / n as f64;
        result.history.push(GenerationStats { best_fitness: best.fitness, mean_fitness: mean });
        if best.fitness > result.best_fitness {
            result.best_fitness = best.fitness;
            result.best_design = best.design.clone();
        }
        selector.on_generation(generation, &population);

        if cfg.is_checkpoint(generation) {
            let shown = cfg.candidates_shown.min(n);
            let candidates = population[..shown]
                .iter()
                .map(|m| {
                    Ok(Candidate {
                        design: m.design.clone(),
                        fitness: m.fitness,
                        digest: PlaythroughDigest::of(&play(&m.design, w, sim)?),
                    })
                })
                .collect::<Result<Vec<_>, EvolutionError>>()?;
            match selector.choose(generation, &candidates) {
                Selection::Chosen(i) if i < shown => {
                    carried = vec![population.swap_remove(i)];
                    parents = None;
                    continue;
                }
                Selection::Chosen(i) => {
                    return Err(EvolutionError::InvalidChoice { index: i, shown });
                }
                Selection::Abort => {
                    result.partial = true;
                    return Err(EvolutionError::SelectorAborted(Box::new(result)));
                }
            }
        }
        carried = population[..cfg.elite_count].to_vec();
        parents = Some(population);
    }
    Ok(result)
}

/// Tunes the numbers of `design` without changing its components.
pub fn balance(
    design: &GameDesign,
    cfg: &EvolutionConfig,
    selector: &mut dyn CandidateSelector,
) -> Result<EvolutionResult, EvolutionError> {
    let rate = cfg.mutation_rate;
    evolve(design, cfg, selector, &|parent, rng| mutate_numbers(parent, rate, rng))
}

/// Grows and rewires `design` one structural edit per offspring, leaving
/// frozen categories untouched.
pub fn generate(
    design: &GameDesign,
    cfg: &EvolutionConfig,
    selector: &mut dyn CandidateSelector,
) -> Result<EvolutionResult, EvolutionError> {
    let frozen = &cfg.frozen_categories;
    let caps = &cfg.caps;
    let rate = cfg.mutation_rate;
    evolve(design, cfg, selector, &|parent, rng| {
        let child = match mutate_structure(parent, frozen, rng, caps) {
            Ok(d) => d,
            Err(EvolutionError::NoLegalEdit) => parent.clone(),
            Err(e) => return Err(e),
        };
        if rng.random::<f64>() < 0.5 {
            mutate_numbers_except(&child, rate, frozen, rng)
        } else {
            Ok(child)
        }
    })
}
