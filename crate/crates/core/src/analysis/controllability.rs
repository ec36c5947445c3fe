use std::fmt;
use std::str::FromStr;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{signed_rank_test, Direction};
use crate::design::{Compiled, GameDesign};
use crate::evolution::{
    balance, generate, sample_random_design, ArgmaxSelector, EvolutionConfig, EvolutionError,
};
use crate::seeds;
use crate::sim::{simulate_compiled, Metric, MetricWeights, Polarity};

const GAME_STREAM: u64 = 3;
const GA_STREAM: u64 = 4;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OptimizerMode {
    Balancer,
    Generator,
}

impl fmt::Display for OptimizerMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            OptimizerMode::Balancer => "balancer",
            OptimizerMode::Generator => "generator",
        })
    }
}

impl FromStr for OptimizerMode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "balancer" => Ok(OptimizerMode::Balancer),
            "generator" => Ok(OptimizerMode::Generator),
            other => Err(format!("unknown mode `{other}` (expected balancer or generator)")),
        }
    }
}

/// Direction a metric should move when its weight is raised.
pub fn expected_direction(metric: Metric) -> Direction {
    match metric.polarity() {
        Polarity::Reward => Direction::Positive,
        Polarity::Penalty => Direction::Negative,
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct MetricControl {
    pub metric: Metric,
    pub direction: Direction,
    /// Raw score of each game's low-weight optimum.
    pub low_scores: Vec<f64>,
    pub high_scores: Vec<f64>,
    /// `high - low` per game.
    pub deltas: Vec<f64>,
    pub mean_delta: Option<f64>,
    /// Sample standard deviation of the deltas.
    pub std_dev: Option<f64>,
    pub p_value: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct ControllabilityReport {
    pub mode: OptimizerMode,
    pub n_games: usize,
    pub w_low: f64,
    pub w_high: f64,
    pub seed: u64,
    /// The sampled playable games, in game order.
    pub games: Vec<GameDesign>,
    /// One entry per metric, in the fixed metric order.
    pub metrics: Vec<MetricControl>,
}

impl MetricControl {
    fn new(metric: Metric, low_scores: Vec<f64>, high_scores: Vec<f64>) -> Self {
        let deltas: Vec<f64> = high_scores.iter().zip(&low_scores).map(|(h, l)| h - l).collect();
        let n = deltas.len() as f64;
        let mean_delta = (!deltas.is_empty()).then(|| deltas.iter().sum::<f64>() / n);
        let std_dev = mean_delta
            .filter(|_| deltas.len() >= 2)
            .map(|m| (deltas.iter().map(|d| (d - m).powi(2)).sum::<f64>() / (n - 1.0)).sqrt());
        let direction = expected_direction(metric);
        MetricControl {
            metric,
            direction,
            p_value: signed_rank_test(&deltas, direction),
            low_scores,
            high_scores,
            deltas,
            mean_delta,
            std_dev,
        }
    }
}

/// Draws designs until `n` are playable under `cfg`'s play-through settings.
pub fn sample_playable_games(n: usize, cfg: &EvolutionConfig, seed: u64) -> Vec<GameDesign> {
    let mut rng = ChaCha8Rng::seed_from_u64(seeds::derive(seed, GAME_STREAM, 0));
    let ones = MetricWeights::default();
    let mut games = Vec::with_capacity(n);
    while games.len() < n {
        let d = sample_random_design(&cfg.caps, &mut rng);
        let c = Compiled::new(&d).expect("sampled designs are valid");
        if simulate_compiled(&c, &ones, &cfg.sim_config, |_| {}).playable {
            games.push(d);
        }
    }
    games
}

/// Raw all-ones score of `metric` for `design`, the fixed measuring stick
/// for both arms.
fn measure(design: &GameDesign, metric: Metric, cfg: &EvolutionConfig) -> Result<f64, EvolutionError> {
    let c = Compiled::new(design).map_err(EvolutionError::InvalidDesign)?;
    let r = simulate_compiled(&c, &MetricWeights::default(), &cfg.sim_config, |_| {});
    Ok(r.mean_metrics.get(metric))
}

fn optimize(
    mode: OptimizerMode,
    game: &GameDesign,
    cfg: &EvolutionConfig,
) -> Result<GameDesign, EvolutionError> {
    let r = match mode {
        OptimizerMode::Balancer => balance(game, cfg, &mut ArgmaxSelector)?,
        OptimizerMode::Generator => generate(game, cfg, &mut ArgmaxSelector)?,
    };
    Ok(r.best_design)
}

/// For each sampled playable game and each metric, optimizes the game twice
/// (that metric weighted `w_low`, then `w_high`, all others 1) and measures
/// how far the metric moved.
///
/// Both arms of a game share one GA seed, so the only difference between
/// them is the weight. Scores are per-step means from an all-ones
/// play-through of each optimum.
pub fn controllability(
    n_games: usize,
    w_low: f64,
    w_high: f64,
    mode: OptimizerMode,
    evo: &EvolutionConfig,
    seed: u64,
) -> Result<ControllabilityReport, EvolutionError> {
    evo.check()?;
    if !(w_low.is_finite() && w_high.is_finite()) {
        return Err(EvolutionError::InvalidConfig("weights must be finite".into()));
    }
    let games = sample_playable_games(n_games, evo, seed);
    let jobs: Vec<(usize, Metric)> =
        (0..n_games).flat_map(|g| Metric::ALL.into_iter().map(move |m| (g, m))).collect();
    let scores: Vec<(f64, f64)> = jobs
        .par_iter()
        .map(|&(g, metric)| {
            let arm = |w: f64| -> Result<f64, EvolutionError> {
                let cfg = EvolutionConfig {
                    weights: MetricWeights::default().with(metric, w),
                    seed: seeds::derive(seed, GA_STREAM, g as u64),
                    ..evo.clone()
                };
                measure(&optimize(mode, &games[g], &cfg)?, metric, evo)
            };
            Ok((arm(w_low)?, arm(w_high)?))
        })
        .collect::<Result<_, EvolutionError>>()?;

    let metrics = Metric::ALL
        .into_iter()
        .map(|m| {
            let (low, high): (Vec<f64>, Vec<f64>) =
                jobs.iter().zip(&scores).filter(|((_, jm), _)| *jm == m).map(|(_, &s)| s).unzip();
            MetricControl::new(m, low, high)
        })
        .collect();
    Ok(ControllabilityReport { mode, n_games, w_low, w_high, seed, games, metrics })
}
